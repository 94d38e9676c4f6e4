#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "resin/bench.hpp"
#include "resin/circuit.hpp"
#include "resin/engine.hpp"

using namespace resin;

namespace {

WmcPolynomial compile_text(const std::string& text, const std::string& target) {
    const GroundProgram gp = ground(typecheck(parse(text, "test.resin"), "test.resin"), target);
    return build_wmc_polynomial(gp, enumerate_stable_models(gp));
}

const char* kThreeSourceProgram =
    "a <- source(\"/a\", Probability).\n"
    "b <- source(\"/b\", Probability).\n"
    "c <- source(\"/c\", Probability).\n"
    "d if a and b and not c.\n"
    "d if not a and b and c.\n"
    "d -> target(\"/d\").\n";

// Fixed-rate three-signal workload remapped onto the worked example's
// channels: signal 0 at 5 Hz on /a, signals 1-2 at 1 Hz on /b and /c.
std::vector<BusMessage> worked_example_trace(double duration_s, std::uint64_t seed) {
    SyntheticWorkload w;
    w.n_signals = 3;
    w.models = 4;
    w.sources_per_model = 3;
    w.rate_law.fixed = {5.0, 1.0, 1.0};
    w.duration_s = duration_s;
    w.seed = seed;
    SyntheticBench bench = gen_synthetic(w);
    const std::map<std::string, std::string> remap{
        {"/s0", "/a"}, {"/s1", "/b"}, {"/s2", "/c"}};
    for (BusMessage& m : bench.events) m.channel = remap.at(m.channel);
    return std::move(bench.events);
}

long long ops_of(const BenchResult& r, const std::string& mode) {
    for (const ModeSummary& m : r.modes)
        if (m.mode == mode) return m.cum_ops;
    FAIL("mode " << mode << " missing from result");
    return -1;
}

const ModeSummary& summary_of(const BenchResult& r, const std::string& mode) {
    for (const ModeSummary& m : r.modes)
        if (m.mode == mode) return m;
    FAIL("mode " << mode << " missing from result");
    static ModeSummary dummy;
    return dummy;
}

// Strip the cumulative wall-clock column (the only run-dependent field).
std::string csv_without_wall(const std::string& csv) {
    std::istringstream in(csv);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        int commas = 0;
        std::string kept;
        std::size_t drop_from = std::string::npos, drop_to = std::string::npos;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] != ',') continue;
            ++commas;
            if (commas == 3) drop_from = i;
            if (commas == 4) drop_to = i;
        }
        REQUIRE(drop_from != std::string::npos);
        REQUIRE(drop_to != std::string::npos);
        out << line.substr(0, drop_from) << line.substr(drop_to) << "\n";
    }
    return out.str();
}

} // namespace

TEST_CASE("synthetic generator is deterministic under its seed") {
    SyntheticWorkload w;
    w.n_signals = 10;
    w.models = 40;
    w.sources_per_model = 7;
    w.duration_s = 5.0;
    w.seed = 7;
    const SyntheticBench a = gen_synthetic(w);
    const SyntheticBench b = gen_synthetic(w);

    REQUIRE(a.poly.terms.size() == b.poly.terms.size());
    for (std::size_t t = 0; t < a.poly.terms.size(); ++t) {
        REQUIRE(a.poly.terms[t].literals.size() == b.poly.terms[t].literals.size());
        for (std::size_t l = 0; l < a.poly.terms[t].literals.size(); ++l) {
            CHECK(a.poly.terms[t].literals[l].source == b.poly.terms[t].literals[l].source);
            CHECK(a.poly.terms[t].literals[l].negated == b.poly.terms[t].literals[l].negated);
        }
    }
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        CHECK(a.events[i].channel == b.events[i].channel);
        CHECK(a.events[i].timestamp == b.events[i].timestamp);
        CHECK(a.events[i].value.value == b.events[i].value.value);
    }

    SyntheticWorkload w2 = w;
    w2.seed = 8;
    const SyntheticBench c = gen_synthetic(w2);
    const bool same_trace = a.events.size() == c.events.size() &&
                            std::equal(a.events.begin(), a.events.end(), c.events.begin(),
                                       [](const BusMessage& x, const BusMessage& y) {
                                           return x.timestamp == y.timestamp &&
                                                  x.channel == y.channel;
                                       });
    CHECK_FALSE(same_trace);
}

TEST_CASE("synthetic generator realizes the requested polynomial shape") {
    SyntheticWorkload w;
    w.n_signals = 12;
    w.models = 16;
    w.sources_per_model = 5;
    w.duration_s = 2.0;
    w.seed = 3;
    const SyntheticBench bench = gen_synthetic(w);

    REQUIRE(static_cast<int>(bench.poly.sources.size()) == w.n_signals);
    REQUIRE(static_cast<int>(bench.poly.terms.size()) == w.models);
    CHECK(bench.poly.target_channel == "/t");

    std::set<std::vector<int>> distinct;
    std::set<int> mentioned;
    for (const WmcTerm& term : bench.poly.terms) {
        REQUIRE(static_cast<int>(term.literals.size()) == w.sources_per_model);
        std::set<int> signals;
        std::vector<int> shape;
        for (const WmcLiteral& lit : term.literals) {
            REQUIRE(lit.source >= 0);
            REQUIRE(lit.source < w.n_signals);
            signals.insert(lit.source);
            mentioned.insert(lit.source);
            shape.push_back(lit.source * 2 + (lit.negated ? 1 : 0));
        }
        CHECK(static_cast<int>(signals.size()) == w.sources_per_model);
        distinct.insert(std::move(shape));
    }
    CHECK(static_cast<int>(distinct.size()) == w.models);
    CHECK(static_cast<int>(mentioned.size()) == w.n_signals);

    // Terms are pairwise inconsistent: some signal appears with opposite
    // signs, so the weighted sum of models is itself a probability.
    for (std::size_t i = 0; i < bench.poly.terms.size(); ++i) {
        for (std::size_t j = i + 1; j < bench.poly.terms.size(); ++j) {
            bool conflict = false;
            for (const WmcLiteral& a : bench.poly.terms[i].literals)
                for (const WmcLiteral& b : bench.poly.terms[j].literals)
                    if (a.source == b.source && a.negated != b.negated) conflict = true;
            REQUIRE(conflict);
        }
    }

    SECTION("boundary: terms over the full signal set") {
        SyntheticWorkload full = w;
        full.sources_per_model = full.n_signals;
        full.models = 50;
        const SyntheticBench total = gen_synthetic(full);
        for (const WmcTerm& term : total.poly.terms) {
            std::set<int> signals;
            for (const WmcLiteral& lit : term.literals) signals.insert(lit.source);
            REQUIRE(static_cast<int>(signals.size()) == full.n_signals);
        }
    }
}

TEST_CASE("synthetic generator rejects invalid parameters") {
    SyntheticWorkload w;
    w.n_signals = 5;
    w.models = 10;
    w.sources_per_model = 3;
    w.duration_s = 1.0;

    SyntheticWorkload bad = w;
    bad.n_signals = 0;
    CHECK_THROWS_AS(gen_synthetic(bad), ConfigError);
    bad = w;
    bad.models = 0;
    CHECK_THROWS_AS(gen_synthetic(bad), ConfigError);
    bad = w;
    bad.sources_per_model = 0;
    CHECK_THROWS_AS(gen_synthetic(bad), ConfigError);
    bad = w;
    bad.sources_per_model = 6;
    CHECK_THROWS_AS(gen_synthetic(bad), ConfigError);
    bad = w;
    bad.duration_s = 0.0;
    CHECK_THROWS_AS(gen_synthetic(bad), ConfigError);
    bad = w;
    bad.rate_law.lo = 10.0;
    bad.rate_law.hi = 5.0;
    CHECK_THROWS_AS(gen_synthetic(bad), ConfigError);

    // 3 signals, full-width terms: only 2^3 sign patterns exist, so nine
    // distinct models are unrealizable.
    bad = w;
    bad.n_signals = 3;
    bad.sources_per_model = 3;
    bad.models = 9;
    CHECK_THROWS_AS(gen_synthetic(bad), ConfigError);

    // Four two-literal models over three signals pin both literals of every
    // term to the discriminators, leaving the third signal unmentioned.
    bad = w;
    bad.n_signals = 3;
    bad.sources_per_model = 2;
    bad.models = 4;
    CHECK_THROWS_AS(gen_synthetic(bad), ConfigError);
}

TEST_CASE("synthetic event volume follows the rate law") {
    SECTION("fixed rates are homogeneous Poisson streams") {
        SyntheticWorkload w;
        w.n_signals = 3;
        w.models = 4;
        w.sources_per_model = 3;
        w.rate_law.fixed = {5.0, 1.0, 1.0};
        w.duration_s = 100.0;
        w.seed = 11;
        const SyntheticBench bench = gen_synthetic(w);

        std::map<std::string, int> counts;
        for (const BusMessage& m : bench.events) counts[m.channel]++;
        const double t = w.duration_s;
        CHECK(std::abs(counts["/s0"] - 5.0 * t) <= 3.0 * std::sqrt(5.0 * t));
        CHECK(std::abs(counts["/s1"] - 1.0 * t) <= 3.0 * std::sqrt(1.0 * t));
        CHECK(std::abs(counts["/s2"] - 1.0 * t) <= 3.0 * std::sqrt(1.0 * t));
        CHECK(std::is_sorted(bench.events.begin(), bench.events.end(),
                             [](const BusMessage& a, const BusMessage& b) {
                                 return a.timestamp < b.timestamp;
                             }));
    }

    SECTION("piecewise-constant random rates integrate to the event count") {
        for (const std::uint64_t seed : {1ull, 2ull, 3ull}) {
            SyntheticWorkload w;
            w.n_signals = 20;
            w.models = 30;
            w.sources_per_model = 6;
            w.rate_law.lo = 0.0;
            w.rate_law.hi = 30.0;
            w.rate_law.resample_every = 20;
            w.duration_s = 30.0;
            w.seed = seed;
            const SyntheticBench bench = gen_synthetic(w);

            double expected = 0.0;
            for (int i = 0; i < w.n_signals; ++i) {
                const auto& segs = bench.rate_history[static_cast<std::size_t>(i)];
                REQUIRE_FALSE(segs.empty());
                for (std::size_t k = 0; k < segs.size(); ++k) {
                    const double t0 = segs[k].t_begin;
                    const double t1 =
                        k + 1 < segs.size() ? segs[k + 1].t_begin : bench.duration_s;
                    REQUIRE(segs[k].rate >= w.rate_law.lo);
                    REQUIRE(segs[k].rate <= w.rate_law.hi);
                    REQUIRE(t1 >= t0);
                    expected += segs[k].rate * (t1 - t0);
                }
            }
            const double actual = static_cast<double>(bench.events.size());
            INFO("seed " << seed << ": expected " << expected << ", got " << actual);
            CHECK(std::abs(actual - expected) <= 3.0 * std::sqrt(expected));
        }
    }

    SECTION("ground-truth lookup returns the rate in force") {
        SyntheticWorkload w;
        w.n_signals = 4;
        w.models = 6;
        w.sources_per_model = 4;
        w.rate_law.fixed = {2.5};
        w.duration_s = 10.0;
        w.seed = 5;
        const SyntheticBench bench = gen_synthetic(w);
        for (int i = 0; i < w.n_signals; ++i) {
            CHECK(bench.true_rate(i, 0.0) == 2.5);
            CHECK(bench.true_rate(i, 9.9) == 2.5);
        }
    }
}

TEST_CASE("engine publications on a synthetic polynomial match direct evaluation") {
    SyntheticWorkload w;
    w.n_signals = 6;
    w.models = 8;
    w.sources_per_model = 4;
    w.rate_law.fixed = {4.0};
    w.duration_s = 12.0;
    w.seed = 21;
    const SyntheticBench bench = gen_synthetic(w);

    Engine<ProbabilitySemiring> eng(bench.poly);
    std::vector<double> latest(static_cast<std::size_t>(w.n_signals), 0.0);
    long long published = 0;
    for (const BusMessage& m : bench.events) {
        const int idx = std::stoi(m.channel.substr(2));
        latest[static_cast<std::size_t>(idx)] = m.value.value;
        const auto out = eng.step(m);
        if (!out.has_value()) continue;
        ++published;
        const double oracle = evaluate_polynomial<ProbabilitySemiring>(bench.poly, latest);
        REQUIRE(oracle >= 0.0);
        REQUIRE(oracle <= 1.0);
        CHECK(out->value.value == Catch::Approx(oracle).margin(1e-9));
    }
    CHECK(published > 100);
}

TEST_CASE("worked example: counted ops, cost ordering, and gain") {
    const WmcPolynomial poly = compile_text(kThreeSourceProgram, "d");
    const std::vector<BusMessage> events = worked_example_trace(100.0, 4);

    BenchOptions opt;
    opt.engine.adapt = false;
    opt.preadapt_bands = std::vector<int>{1, 0, 0};
    const BenchResult r = run_benchmark(poly, events, opt);

    const long long flat = ops_of(r, "flat");
    const long long adapted = ops_of(r, "adapted");
    const long long reactive = ops_of(r, "reactive");
    INFO("flat=" << flat << " adapted=" << adapted << " reactive=" << reactive);

    // Full re-evaluation costs 5 ops per update; the adapted layering costs
    // 3 for the fast signal and 5 for each slow one, so a 5:1:1 Hz mix
    // yields a counted-ops ratio near 35/25 = 1.4.
    CHECK(flat >= 3150);
    CHECK(flat <= 3850);
    CHECK(reactive >= 2250);
    CHECK(reactive <= 2750);
    CHECK(adapted >= 3150);
    CHECK(adapted <= 3850);
    const double gain = static_cast<double>(flat) / static_cast<double>(reactive);
    CHECK(gain >= 1.26);
    CHECK(gain <= 1.54);

    CHECK(r.max_cross_mode_diff <= 1e-9);
    CHECK(summary_of(r, "flat").publications == summary_of(r, "reactive").publications);
    CHECK(summary_of(r, "flat").publications > 600);

    // Cumulative invalidation cost never exceeds full re-evaluation.
    for (const MetricsRow& row : r.rows) {
        if (row.mode == "reactive") CHECK(row.gain_counted >= 1.0);
        CHECK(row.layers >= 1);
        CHECK(row.memo_nodes >= 1);
    }
    const std::size_t windows = r.rows.size() / 3;
    CHECK(windows == 100);
}

TEST_CASE("benchmark rejects bad mode sets and windows") {
    const WmcPolynomial poly = compile_text(kThreeSourceProgram, "d");
    const std::vector<BusMessage> events = worked_example_trace(1.0, 1);

    BenchOptions opt;
    opt.modes = {};
    CHECK_THROWS_AS(run_benchmark(poly, events, opt), ConfigError);
    opt.modes = {"flat", "turbo"};
    CHECK_THROWS_AS(run_benchmark(poly, events, opt), ConfigError);
    opt.modes = {"flat"};
    opt.window_s = 0.0;
    CHECK_THROWS_AS(run_benchmark(poly, events, opt), ConfigError);
}

TEST_CASE("metrics CSV is well-formed and run-to-run stable") {
    const WmcPolynomial poly = compile_text(kThreeSourceProgram, "d");
    const std::vector<BusMessage> events = worked_example_trace(10.0, 9);

    BenchOptions opt;
    const BenchResult r1 = run_benchmark(poly, events, opt);
    const BenchResult r2 = run_benchmark(poly, events, opt);

    const std::string csv = r1.csv();
    std::istringstream in(csv);
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header ==
          "window_start_s,mode,cum_ops,cum_wall_us,memo_nodes,layers,partition_mae,"
          "gain_counted");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 7);
    }
    CHECK(rows == r1.rows.size());
    CHECK(rows == 10 * 3);

    CHECK(csv_without_wall(r1.csv()) == csv_without_wall(r2.csv()));

    const nlohmann::json j = r1.summary_json();
    CHECK(j.at("format") == "resin-bench-summary-v1");
    REQUIRE(j.at("modes").size() == 3);
    for (const auto& jm : j.at("modes")) {
        CHECK(jm.contains("cum_ops"));
        CHECK(jm.contains("gain_counted"));
        CHECK(jm.at("gain_counted").get<double>() >= 1.0 - 1e-12);
    }
}

TEST_CASE("uniform-rate workloads keep a single band and a flat circuit") {
    const WmcPolynomial poly = compile_text(kThreeSourceProgram, "d");

    SyntheticWorkload w;
    w.n_signals = 3;
    w.models = 4;
    w.sources_per_model = 3;
    w.rate_law.fixed = {2.0, 2.0, 2.0};
    w.duration_s = 40.0;
    w.seed = 6;
    SyntheticBench bench = gen_synthetic(w);
    const std::map<std::string, std::string> remap{
        {"/s0", "/a"}, {"/s1", "/b"}, {"/s2", "/c"}};
    for (BusMessage& m : bench.events) m.channel = remap.at(m.channel);

    BenchOptions opt;
    opt.engine.h = 100.0; // every plausible rate lands in band zero
    const BenchResult r = run_benchmark(poly, bench.events, opt);

    CHECK(summary_of(r, "reactive").adaptations == 0);
    CHECK(summary_of(r, "adapted").adaptations == 0);
    CHECK(summary_of(r, "reactive").layers == 1);
    CHECK(summary_of(r, "adapted").layers == 1);
    // Without restructuring, invalidation recomputes the whole root exactly
    // like the never-adapted engine.
    CHECK(ops_of(r, "reactive") == ops_of(r, "flat"));
}

TEST_CASE("band pre-adaptation reshapes and saturates") {
    const WmcPolynomial poly = compile_text(kThreeSourceProgram, "d");

    SECTION("two-band split drops the slow signals one layer") {
        ReactiveCircuit<ProbabilitySemiring> rc(poly);
        adapt_to_bands(rc, {1, 0, 0});
        CHECK(rc.signal_depth(0) == 0);
        CHECK(rc.signal_depth(1) == 1);
        CHECK(rc.signal_depth(2) == 1);
    }

    SECTION("gaps between occupied bands are compressed away") {
        // A layer no signal inhabits would be a structural identity, so
        // bands {9,0,0} must land on the same two-layer shape as {1,0,0}.
        ReactiveCircuit<ProbabilitySemiring> rc(poly);
        adapt_to_bands(rc, {9, 0, 0});
        CHECK(rc.signal_depth(0) == 0);
        CHECK(rc.signal_depth(1) == 1);
        CHECK(rc.signal_depth(2) == 1);
        CHECK(rc.depth() == 1);

        ReactiveCircuit<ProbabilitySemiring> two_band(poly);
        adapt_to_bands(two_band, {1, 0, 0});
        CHECK(rc.formula_count() == two_band.formula_count());
        CHECK(rc.total_omega() == two_band.total_omega());
    }

    SECTION("three distinct bands build three layers") {
        ReactiveCircuit<ProbabilitySemiring> rc(poly);
        adapt_to_bands(rc, {2, 1, 0});
        CHECK(rc.signal_depth(0) == 0);
        CHECK(rc.signal_depth(1) == 1);
        CHECK(rc.signal_depth(2) == 2);
        CHECK(rc.depth() == 2);
    }

    SECTION("validation") {
        ReactiveCircuit<ProbabilitySemiring> rc(poly);
        CHECK_THROWS_AS(adapt_to_bands(rc, {1, 0}), ConfigError);
        CHECK_THROWS_AS(adapt_to_bands(rc, {1, 0, -1}), ConfigError);
    }
}

TEST_CASE("finer partitions retain at least as much structure") {
    SyntheticWorkload w;
    w.n_signals = 12;
    w.models = 60;
    w.sources_per_model = 7;
    w.rate_law.lo = 0.0;
    w.rate_law.hi = 30.0;
    w.rate_law.resample_every = 20;
    w.duration_s = 20.0;
    w.seed = 17;
    const SyntheticBench bench = gen_synthetic(w);
    const std::vector<double> rates = bench.final_rates();
    REQUIRE(rates.size() == bench.poly.sources.size());

    const std::vector<double> hs{30.0, 10.0, 5.0, 1.0};
    const std::vector<PlasticityPoint> pts = plasticity_sweep(bench.poly, rates, hs);
    REQUIRE(pts.size() == hs.size());
    std::ostringstream diag;
    for (const PlasticityPoint& p : pts)
        diag << "h=" << p.h << " memo=" << p.memo_nodes << " layers=" << p.layers << "; ";
    INFO(diag.str());
    for (std::size_t i = 1; i < pts.size(); ++i) {
        CHECK(pts[i].memo_nodes >= pts[i - 1].memo_nodes);
        CHECK(pts[i].layers >= pts[i - 1].layers);
    }
    // All drawn rates sit below 30 Hz, so the coarsest width keeps one band
    // (a flat circuit); the finest splits them into many.
    CHECK(pts.front().layers == 1);
    CHECK(pts.front().memo_nodes == 1);
    CHECK(pts.back().layers > 2);

    SECTION("the sweep checks its inputs") {
        CHECK_THROWS_AS(plasticity_sweep(bench.poly, {1.0, 2.0}, hs), ConfigError);
    }
}

TEST_CASE("drone scenario: channels, models, and quiet pads") {
    DroneScenario sc;
    sc.seed = 2;
    const DroneBench bench = gen_drone_scenario(sc);

    REQUIRE(bench.poly.sources.size() == 10);
    CHECK(bench.poly.terms.size() == 1023);
    CHECK(bench.poly.target_channel == "/safety");
    CHECK(bench.phase_changes > 0);

    std::set<std::string> channels;
    for (const BusMessage& m : bench.events) {
        channels.insert(m.channel);
        REQUIRE(m.value.type == SignalType::Density);
        REQUIRE(m.value.stddev > 0.0);
    }
    CHECK(channels.size() == 10);
    CHECK(channels.count("/d1_2") == 1);
    CHECK(channels.count("/d4_5") == 1);

    SECTION("all drones parked on distinct pads: no collision risk") {
        Engine<ProbabilitySemiring> eng(bench.poly);
        std::optional<BusMessage> out;
        for (std::size_t i = 0; i < 10; ++i) {
            out = eng.step(bench.events[i]);
            if (i + 1 < 10) REQUIRE_FALSE(out.has_value());
        }
        REQUIRE(out.has_value());
        CHECK(out->value.value <= 1e-9);
    }

    SECTION("a co-located pair forces the alarm") {
        Engine<ProbabilitySemiring> eng(bench.poly);
        std::optional<BusMessage> out;
        double t = 0.0;
        for (const GroundSource& src : bench.poly.sources) {
            const bool near = src.lhs.channel == "/d1_2";
            out = eng.step(BusMessage{src.lhs.channel,
                                      TypedValue::density(near ? 0.5 : 140.0, 0.5),
                                      t += 0.001});
        }
        REQUIRE(out.has_value());
        CHECK(out->value.value >= 1.0 - 1e-9);
    }
}

TEST_CASE("drone benchmark: invalidation beats adapted re-evaluation beats flat") {
    DroneScenario sc;
    sc.seed = 2;
    const DroneBench bench = gen_drone_scenario(sc);

    BenchOptions opt;
    opt.engine.h = 8.0; // 12.5 Hz ticks land mid-band
    const BenchResult r = run_benchmark(bench.poly, bench.events, opt, nullptr,
                                        bench.duration_s);

    const long long flat = ops_of(r, "flat");
    const long long adapted = ops_of(r, "adapted");
    const long long reactive = ops_of(r, "reactive");
    const long long migrations = summary_of(r, "reactive").adaptations;
    INFO("flat=" << flat << " adapted=" << adapted << " reactive=" << reactive
                 << " migrations=" << migrations << " phase_changes=" << bench.phase_changes);

    CHECK(summary_of(r, "flat").publications > 100);
    CHECK(reactive < adapted);
    CHECK(adapted < flat);
    CHECK(reactive * 10 <= flat);
    CHECK(migrations >= bench.phase_changes);
    CHECK(r.max_cross_mode_diff <= 1e-9);
}

TEST_CASE("drone generator validates its parameters") {
    DroneScenario sc;
    sc.n_drones = 1;
    CHECK_THROWS_AS(gen_drone_scenario(sc), ConfigError);
    sc.n_drones = 3;
    sc.tick_interval = 0.0;
    CHECK_THROWS_AS(gen_drone_scenario(sc), ConfigError);
    sc.tick_interval = 0.1;
    sc.duration_s = 0.0;
    CHECK_THROWS_AS(gen_drone_scenario(sc), ConfigError);
}
