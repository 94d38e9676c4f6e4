#pragma once
// Benchmark workloads and the three-mode experiment driver.
//
// Two generators produce (polynomial, event trace) pairs:
//   - gen_synthetic: random DNF polynomials with per-signal Poisson event
//     streams (piecewise-constant rates, thinning method).
//   - gen_drone_scenario: 2D random-waypoint drone journeys publishing
//     pairwise distances as Gaussian densities against a safety program.
//
// run_benchmark replays one pre-recorded trace through up to three
// engines that differ only in how evaluation cost is incurred/counted:
//   flat      full re-evaluation of the never-adapted circuit
//   adapted   full re-evaluation of the frequency-adapted circuit
//   reactive  invalidation-queue evaluation of the adapted circuit
// Per-event published values must agree across modes within a tolerance;
// metrics are emitted per time window as CSV plus a JSON summary.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "resin/engine.hpp"
#include "resin/ground.hpp"
#include "resin/parser.hpp"
#include "resin/typecheck.hpp"

namespace resin {

// ---------------------------------------------------------------------------
// Synthetic workload.
// ---------------------------------------------------------------------------

// Per-signal piecewise-constant Poisson rate schedule. With `fixed` set,
// signal i keeps rate fixed[i % fixed.size()] forever; otherwise each
// signal's rate is redrawn from U(lo, hi) every `resample_every` events.
struct RateLaw {
    std::vector<double> fixed;
    double lo = 0.0;
    double hi = 30.0;
    int resample_every = 20;
};

struct SyntheticWorkload {
    int n_signals = 100;
    int models = 1000;
    int sources_per_model = 20;
    RateLaw rate_law;
    double duration_s = 30.0;
    // Extra trailing seconds during which rates stop being resampled, so
    // adaptive structures can settle for end-of-run measurements.
    double hold_tail_s = 0.0;
    std::uint64_t seed = 0;
};

struct RateSegment {
    double t_begin = 0.0;
    double rate = 0.0;
};

struct SyntheticBench {
    WmcPolynomial poly;
    std::vector<BusMessage> events;                    // time-sorted
    std::vector<std::vector<RateSegment>> rate_history; // per signal
    double duration_s = 0.0;

    // Generator-side ground truth for the signal's rate at time t.
    double true_rate(int signal, double t) const {
        const auto& segs = rate_history.at(static_cast<std::size_t>(signal));
        double r = 0.0;
        for (const RateSegment& s : segs) {
            if (s.t_begin > t) break;
            r = s.rate;
        }
        return r;
    }

    // Per-signal rate in force at the end of the trace.
    std::vector<double> final_rates() const {
        std::vector<double> out;
        out.reserve(rate_history.size());
        for (const auto& segs : rate_history)
            out.push_back(segs.empty() ? 0.0 : segs.back().rate);
        return out;
    }
};

inline SyntheticBench gen_synthetic(const SyntheticWorkload& w) {
    if (w.n_signals < 1) throw ConfigError("synthetic workload needs at least one signal");
    if (w.models < 1) throw ConfigError("synthetic workload needs at least one model");
    if (w.sources_per_model < 1 || w.sources_per_model > w.n_signals)
        throw ConfigError("sources_per_model must be in [1, n_signals]");
    if (!(w.duration_s > 0.0)) throw ConfigError("workload duration must be positive");
    if (w.rate_law.fixed.empty() &&
        !(w.rate_law.hi > w.rate_law.lo && w.rate_law.lo >= 0.0 && w.rate_law.resample_every >= 1))
        throw ConfigError("rate law bounds violated");

    // Terms must be pairwise inconsistent (like the stable models of a real
    // program) so their weighted sum stays a probability. Every term gets a
    // distinct sign pattern over a shared set of discriminator signals and
    // is padded to width with extra random literals; the padding cycles
    // through the remaining signals so each one appears in some term.
    int disc = 0;
    while ((1ll << disc) < w.models) ++disc;
    if (disc > 20)
        throw ConfigError("model count exceeds the supported workload scale");
    if (disc > w.sources_per_model)
        throw ConfigError("sources_per_model too small for " + std::to_string(w.models) +
                          " mutually exclusive models");
    const long long tail_slots =
        static_cast<long long>(w.sources_per_model - disc) * w.models;
    if (tail_slots < w.n_signals - disc)
        throw ConfigError("models cannot mention every signal; increase sources_per_model "
                          "or the model count");

    SyntheticBench out;
    out.duration_s = w.duration_s + w.hold_tail_s;

    out.poly.target_key = "t";
    out.poly.target_channel = "/t";
    for (int i = 0; i < w.n_signals; ++i)
        out.poly.sources.push_back(GroundSource{"s" + std::to_string(i),
                                                SignalType::Probability,
                                                "/s" + std::to_string(i), false, RelOp::Gt,
                                                {}, {}});

    std::mt19937_64 model_rng(w.seed * 0x9e3779b97f4a7c15ull + 1);
    std::vector<int> order(static_cast<std::size_t>(w.n_signals));
    for (int i = 0; i < w.n_signals; ++i) order[static_cast<std::size_t>(i)] = i;
    std::shuffle(order.begin(), order.end(), model_rng);
    const std::vector<int> tail(order.begin() + disc, order.end());

    std::vector<std::uint64_t> patterns(static_cast<std::size_t>(1ll << disc));
    for (std::size_t p = 0; p < patterns.size(); ++p) patterns[p] = p;
    std::shuffle(patterns.begin(), patterns.end(), model_rng);
    patterns.resize(static_cast<std::size_t>(w.models));

    std::size_t cycle = 0;
    for (int m = 0; m < w.models; ++m) {
        WmcTerm term;
        for (int b = 0; b < disc; ++b)
            term.literals.push_back(WmcLiteral{
                order[static_cast<std::size_t>(b)],
                ((patterns[static_cast<std::size_t>(m)] >> b) & 1ull) != 0});
        for (int k = 0; k < w.sources_per_model - disc; ++k) {
            const int s = tail[cycle % tail.size()];
            ++cycle;
            term.literals.push_back(WmcLiteral{s, (model_rng() & 1ull) != 0});
        }
        std::sort(term.literals.begin(), term.literals.end(),
                  [](const WmcLiteral& a, const WmcLiteral& b) { return a.source < b.source; });
        out.poly.terms.push_back(std::move(term));
    }
    std::sort(out.poly.terms.begin(), out.poly.terms.end(),
              [](const WmcTerm& a, const WmcTerm& b) {
                  for (std::size_t i = 0; i < a.literals.size() && i < b.literals.size(); ++i) {
                      const int ca = a.literals[i].source * 2 + (a.literals[i].negated ? 1 : 0);
                      const int cb = b.literals[i].source * 2 + (b.literals[i].negated ? 1 : 0);
                      if (ca != cb) return ca < cb;
                  }
                  return a.literals.size() < b.literals.size();
              });

    // Per-signal event stream by thinning: candidates arrive at the law's
    // maximum rate and survive with probability rate/max.
    out.rate_history.assign(static_cast<std::size_t>(w.n_signals), {});
    for (int i = 0; i < w.n_signals; ++i) {
        std::seed_seq sseq{static_cast<std::uint64_t>(w.seed), static_cast<std::uint64_t>(i) + 1};
        std::mt19937_64 rng(sseq);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_real_distribution<double> value(0.01, 0.99);
        std::uniform_real_distribution<double> rate_draw(w.rate_law.lo, w.rate_law.hi);

        const bool fixed = !w.rate_law.fixed.empty();
        double rate = fixed ? w.rate_law.fixed[static_cast<std::size_t>(i) % w.rate_law.fixed.size()]
                            : rate_draw(rng);
        const double rate_max = fixed ? rate : w.rate_law.hi;
        out.rate_history[static_cast<std::size_t>(i)].push_back({0.0, rate});
        if (!(rate_max > 0.0)) continue;

        std::exponential_distribution<double> gap(rate_max);
        const std::string channel = "/s" + std::to_string(i);
        double t = 0.0;
        int accepted_in_segment = 0;
        while (true) {
            t += gap(rng);
            if (t > out.duration_s) break;
            if (!fixed && unit(rng) * rate_max >= rate) continue; // thinned out
            out.events.push_back(BusMessage{channel, TypedValue::probability(value(rng)), t});
            if (!fixed && ++accepted_in_segment >= w.rate_law.resample_every &&
                t <= w.duration_s) {
                rate = rate_draw(rng);
                out.rate_history[static_cast<std::size_t>(i)].push_back({t, rate});
                accepted_in_segment = 0;
            }
        }
    }
    std::stable_sort(out.events.begin(), out.events.end(),
                     [](const BusMessage& a, const BusMessage& b) {
                         return a.timestamp < b.timestamp;
                     });
    return out;
}

// ---------------------------------------------------------------------------
// Drone scenario.
// ---------------------------------------------------------------------------

struct DroneScenario {
    int n_drones = 5;
    std::uint64_t seed = 1;
    double duration_s = 60.0;
    double tick_interval = 0.08;   // pairwise distance snapshot period
    double pad_radius = 30.0;      // parking pads on a circle of this radius
    double airspace_radius = 15.0; // journey waypoints inside a disc around the own pad
    double speed_min = 8.0;
    double speed_max = 14.0;
    double dwell_min = 10.0;       // parked dwell between journeys
    double dwell_max = 18.0;
    double hover_min = 4.0;        // hover at the waypoint
    double hover_max = 7.0;
    double parked_noise = 0.3;     // per-axis position stddev when parked
    double flying_noise = 5.0;     // ... when flying
    double noise_smoothing = 0.8;  // AR(1) coefficient of the noise process
    double safety_radius = 25.0;
};

struct DroneBench {
    std::string program_text;
    GroundProgram program;
    WmcPolynomial poly;
    std::vector<BusMessage> events; // time-sorted
    int phase_changes = 0;          // journey starts + journey ends
    double duration_s = 0.0;
};

namespace detail {

struct MotionSegment {
    double t0 = 0.0, t1 = 0.0;
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
    bool flying = false;
};

} // namespace detail

inline DroneBench gen_drone_scenario(const DroneScenario& sc) {
    if (sc.n_drones < 2) throw ConfigError("drone scenario needs at least two drones");
    if (!(sc.duration_s > 0.0 && sc.tick_interval > 0.0))
        throw ConfigError("drone scenario timing bounds violated");

    DroneBench out;
    out.duration_s = sc.duration_s;

    // Safety program over every pairwise distance channel.
    std::ostringstream prog;
    std::vector<std::string> pair_channels;
    for (int i = 1; i <= sc.n_drones; ++i) {
        for (int j = i + 1; j <= sc.n_drones; ++j) {
            const std::string chan = "/d" + std::to_string(i) + "_" + std::to_string(j);
            prog << "distance(drone_" << i << ", drone_" << j << ") <- source(\"" << chan
                 << "\", Density).\n";
            pair_channels.push_back(chan);
        }
    }
    prog << "unsafe if distance(X, Y) < " << sc.safety_radius << ".\n";
    prog << "unsafe -> target(\"/safety\").\n";
    out.program_text = prog.str();
    out.program = ground(typecheck(parse(out.program_text, "<drones>"), "<drones>"), "unsafe");
    out.poly = build_wmc_polynomial(out.program, enumerate_stable_models(out.program));

    // Random-waypoint journeys: dwell at the pad, fly to a waypoint inside
    // the drone's own local airspace disc, hover, fly home. Local discs keep
    // a flight relevant only to neighbouring pads, so distant pairs stay
    // quiet while a journey runs. Piecewise-linear positions.
    const double pi = std::acos(-1.0);
    std::vector<std::vector<detail::MotionSegment>> plans(
        static_cast<std::size_t>(sc.n_drones));
    int phase_changes = 0;
    for (int d = 0; d < sc.n_drones; ++d) {
        std::seed_seq sseq{sc.seed, static_cast<std::uint64_t>(d) + 101};
        std::mt19937_64 rng(sseq);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double angle = 2.0 * pi * d / sc.n_drones;
        const double px = sc.pad_radius * std::cos(angle);
        const double py = sc.pad_radius * std::sin(angle);

        auto dur = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
        double t = 0.0;
        auto& plan = plans[static_cast<std::size_t>(d)];
        while (t < sc.duration_s) {
            const double dwell = dur(sc.dwell_min, sc.dwell_max);
            plan.push_back({t, t + dwell, px, py, px, py, false});
            t += dwell;
            if (t >= sc.duration_s) break;
            ++phase_changes; // journey starts

            const double r = sc.airspace_radius * std::sqrt(unit(rng));
            const double th = 2.0 * pi * unit(rng);
            const double wx = px + r * std::cos(th), wy = py + r * std::sin(th);
            const double speed = dur(sc.speed_min, sc.speed_max);
            const double leg = std::hypot(wx - px, wy - py) / speed;
            plan.push_back({t, t + leg, px, py, wx, wy, true});
            t += leg;
            const double hover = dur(sc.hover_min, sc.hover_max);
            plan.push_back({t, t + hover, wx, wy, wx, wy, true});
            t += hover;
            plan.push_back({t, t + leg, wx, wy, px, py, true});
            t += leg;
            if (t < sc.duration_s) ++phase_changes; // journey ends
        }
    }
    out.phase_changes = phase_changes;

    auto sample = [&](int d, double t, double& x, double& y, bool& flying) {
        const auto& plan = plans[static_cast<std::size_t>(d)];
        const detail::MotionSegment* seg = &plan.back();
        for (const auto& s : plan) {
            if (t <= s.t1) {
                seg = &s;
                break;
            }
        }
        const double u = seg->t1 > seg->t0
                             ? std::clamp((t - seg->t0) / (seg->t1 - seg->t0), 0.0, 1.0)
                             : 0.0;
        x = seg->x0 + u * (seg->x1 - seg->x0);
        y = seg->y0 + u * (seg->y1 - seg->y0);
        flying = seg->flying;
    };

    // Per-drone AR(1) position noise; stddev follows the motion phase.
    std::seed_seq nseq{sc.seed, static_cast<std::uint64_t>(0xbeef)};
    std::mt19937_64 noise_rng(nseq);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> ex(static_cast<std::size_t>(sc.n_drones), 0.0);
    std::vector<double> ey(static_cast<std::size_t>(sc.n_drones), 0.0);
    const double a = sc.noise_smoothing;
    const double innov = std::sqrt(std::max(0.0, 1.0 - a * a));

    for (double t = sc.tick_interval; t <= sc.duration_s; t += sc.tick_interval) {
        std::vector<double> xs(static_cast<std::size_t>(sc.n_drones));
        std::vector<double> ys(static_cast<std::size_t>(sc.n_drones));
        std::vector<double> sig(static_cast<std::size_t>(sc.n_drones));
        for (int d = 0; d < sc.n_drones; ++d) {
            double x, y;
            bool flying;
            sample(d, t, x, y, flying);
            const double s = flying ? sc.flying_noise : sc.parked_noise;
            ex[static_cast<std::size_t>(d)] =
                a * ex[static_cast<std::size_t>(d)] + innov * s * gauss(noise_rng);
            ey[static_cast<std::size_t>(d)] =
                a * ey[static_cast<std::size_t>(d)] + innov * s * gauss(noise_rng);
            xs[static_cast<std::size_t>(d)] = x + ex[static_cast<std::size_t>(d)];
            ys[static_cast<std::size_t>(d)] = y + ey[static_cast<std::size_t>(d)];
            sig[static_cast<std::size_t>(d)] = s;
        }
        int pair = 0;
        for (int i = 0; i < sc.n_drones; ++i) {
            for (int j = i + 1; j < sc.n_drones; ++j, ++pair) {
                const double mean = std::hypot(xs[static_cast<std::size_t>(i)] -
                                                   xs[static_cast<std::size_t>(j)],
                                               ys[static_cast<std::size_t>(i)] -
                                                   ys[static_cast<std::size_t>(j)]);
                const double stddev = std::hypot(sig[static_cast<std::size_t>(i)],
                                                 sig[static_cast<std::size_t>(j)]);
                out.events.push_back(
                    BusMessage{pair_channels[static_cast<std::size_t>(pair)],
                               TypedValue::density(mean, stddev),
                               t + 1e-4 * pair});
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Structural pre-adaptation for rate-accounting experiments.
// ---------------------------------------------------------------------------

// Drive the circuit to the canonical layering implied by per-signal bands:
// signals of the fastest occupied band stay at the root, each successively
// slower occupied band lives one layer deeper. Unoccupied bands in between
// are compressed away — a layer no signal inhabits would make the move a
// structural identity (dropping every resident of a node is a no-op), so
// depth is the band's rank among the distinct occupied bands. One level per
// round; rounds that change nothing mean the polynomial admits no deeper
// split, and the loop stops.
template <Semiring S>
inline void adapt_to_bands(ReactiveCircuit<S>& rc, const std::vector<int>& bands) {
    const int n_sources = static_cast<int>(rc.sources().size());
    if (static_cast<int>(bands.size()) != n_sources)
        throw ConfigError("adapt_to_bands: one band per signal required");
    for (int b : bands)
        if (b < 0) throw ConfigError("adapt_to_bands: bands must be non-negative");

    std::vector<int> distinct(bands);
    std::sort(distinct.begin(), distinct.end(), std::greater<int>());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<int> target(bands.size());
    for (std::size_t s = 0; s < bands.size(); ++s)
        target[s] = static_cast<int>(
            std::find(distinct.begin(), distinct.end(), bands[s]) - distinct.begin());

    for (;;) {
        std::vector<int> lifts, drops;
        for (int s = 0; s < n_sources; ++s) {
            const int cur = rc.signal_depth(s);
            if (cur < 0) continue;
            if (target[static_cast<std::size_t>(s)] < cur)
                lifts.push_back(s);
            else if (target[static_cast<std::size_t>(s)] > cur)
                drops.push_back(s);
        }
        if (lifts.empty() && drops.empty()) return;
        std::vector<int> before;
        for (int s : lifts) before.push_back(rc.signal_depth(s));
        for (int s : drops) before.push_back(rc.signal_depth(s));
        if (!lifts.empty()) rc.lift(lifts);
        if (!drops.empty()) rc.drop(drops);
        bool changed = false;
        std::size_t k = 0;
        for (int s : lifts) changed |= rc.signal_depth(s) != before[k++];
        for (int s : drops) changed |= rc.signal_depth(s) != before[k++];
        if (!changed) return; // saturated
    }
}

// ---------------------------------------------------------------------------
// The three-mode benchmark driver.
// ---------------------------------------------------------------------------

// Ground truth for partition accuracy: signal index and time -> rate.
using TrueRateFn = std::function<double(int, double)>;

struct BenchOptions {
    std::vector<std::string> modes{"flat", "adapted", "reactive"};
    double window_s = 1.0;
    EngineConfig engine;
    double agreement_tolerance = 1e-9;
    // When set, adapted/reactive circuits are restructured to these bands
    // up front (rate-accounting experiments with known ground truth).
    std::optional<std::vector<int>> preadapt_bands;
};

struct MetricsRow {
    double window_start_s = 0.0;
    std::string mode;
    long long cum_ops = 0;
    long long cum_wall_us = 0;
    int memo_nodes = 0;
    int layers = 0;
    double partition_mae = 0.0; // NaN when no ground truth
    double gain_counted = 1.0;  // flat ops / this mode's ops, NaN without flat
};

struct ModeSummary {
    std::string mode;
    long long cum_ops = 0;
    long long cum_wall_us = 0;
    long long publications = 0;
    long long adaptations = 0;
    int memo_nodes = 0;
    int layers = 0;
};

struct BenchResult {
    std::vector<MetricsRow> rows;
    std::vector<ModeSummary> modes;
    long long events = 0;
    double duration_s = 0.0;
    double window_s = 0.0;
    double max_cross_mode_diff = 0.0;
    double agreement_tolerance = 0.0;

    static constexpr const char* kCsvHeader =
        "window_start_s,mode,cum_ops,cum_wall_us,memo_nodes,layers,partition_mae,gain_counted";

    std::string csv() const {
        std::ostringstream os;
        os << kCsvHeader << "\n";
        for (const MetricsRow& r : rows) {
            os << std::fixed << std::setprecision(3) << r.window_start_s << ',' << r.mode << ','
               << r.cum_ops << ',' << r.cum_wall_us << ',' << r.memo_nodes << ',' << r.layers
               << ',' << std::setprecision(6) << r.partition_mae << ',' << r.gain_counted
               << "\n";
        }
        return os.str();
    }

    nlohmann::json summary_json() const {
        nlohmann::json j;
        j["format"] = "resin-bench-summary-v1";
        j["events"] = events;
        j["duration_s"] = duration_s;
        j["window_s"] = window_s;
        j["agreement_tolerance"] = agreement_tolerance;
        j["max_cross_mode_diff"] = max_cross_mode_diff;
        j["modes"] = nlohmann::json::array();
        long long flat_ops = -1;
        for (const ModeSummary& m : modes)
            if (m.mode == "flat") flat_ops = m.cum_ops;
        for (const ModeSummary& m : modes) {
            nlohmann::json jm;
            jm["mode"] = m.mode;
            jm["cum_ops"] = m.cum_ops;
            jm["cum_wall_us"] = m.cum_wall_us;
            jm["publications"] = m.publications;
            jm["adaptations"] = m.adaptations;
            jm["memo_nodes"] = m.memo_nodes;
            jm["layers"] = m.layers;
            if (flat_ops >= 0)
                jm["gain_counted"] = (flat_ops == 0 && m.cum_ops == 0)
                                         ? 1.0
                                         : static_cast<double>(flat_ops) /
                                               static_cast<double>(std::max(m.cum_ops, 1ll));
            j["modes"].push_back(std::move(jm));
        }
        return j;
    }
};

template <Semiring S = ProbabilitySemiring>
inline BenchResult run_benchmark(const WmcPolynomial& poly, const std::vector<BusMessage>& events,
                                 const BenchOptions& opt, TrueRateFn true_rate = nullptr,
                                 double duration_s = 0.0) {
    if (opt.modes.empty()) throw ConfigError("benchmark mode set is empty");
    for (const std::string& m : opt.modes)
        if (m != "flat" && m != "adapted" && m != "reactive")
            throw ConfigError("unknown benchmark mode '" + m + "'");
    if (!(opt.window_s > 0.0)) throw ConfigError("benchmark window must be positive");

    double t_end = duration_s;
    for (const BusMessage& e : events) t_end = std::max(t_end, e.timestamp);
    const int n_windows = std::max(1, static_cast<int>(std::ceil(t_end / opt.window_s - 1e-12)));

    BenchResult result;
    result.events = static_cast<long long>(events.size());
    result.duration_s = t_end;
    result.window_s = opt.window_s;
    result.agreement_tolerance = opt.agreement_tolerance;

    struct Snapshot {
        long long ops = 0;
        long long wall_us = 0;
        int memo_nodes = 0;
        int layers = 0;
        double mae = std::numeric_limits<double>::quiet_NaN();
    };
    std::vector<std::vector<Snapshot>> snaps_by_mode;
    std::vector<std::vector<double>> published_by_mode;

    for (const std::string& mode : opt.modes) {
        EngineConfig cfg = opt.engine;
        if (mode == "flat") cfg.adapt = false;
        Engine<S> eng(poly, cfg);
        if (mode != "flat" && opt.preadapt_bands.has_value())
            adapt_to_bands(eng.circuit(), *opt.preadapt_bands);
        const bool count_full = mode != "reactive" && mode != "flat";

        std::vector<Snapshot> snaps;
        std::vector<double> published;
        long long adapted_ops = 0;
        std::chrono::nanoseconds wall{0};
        const long long ops0 = eng.rc().cumulative_ops();

        auto mae_at = [&](double t) {
            if (!true_rate) return std::numeric_limits<double>::quiet_NaN();
            double acc = 0.0;
            int counted = 0;
            for (int i = 0; i < eng.source_count(); ++i) {
                const auto est = eng.tracker(i).effective_rate(t);
                if (!est.has_value()) continue;
                acc += std::abs(partition(*est, cfg.h) - partition(true_rate(i, t), cfg.h));
                ++counted;
            }
            return counted > 0 ? acc / counted : std::numeric_limits<double>::quiet_NaN();
        };
        auto snapshot_at = [&](double t) {
            Snapshot s;
            s.ops = count_full ? adapted_ops : eng.rc().cumulative_ops() - ops0;
            s.wall_us =
                std::chrono::duration_cast<std::chrono::microseconds>(wall).count();
            s.memo_nodes = eng.memo_nodes();
            s.layers = eng.layers();
            s.mae = mae_at(t);
            snaps.push_back(s);
        };

        int next_window = 1;
        for (const BusMessage& e : events) {
            while (next_window <= n_windows && e.timestamp > next_window * opt.window_s) {
                snapshot_at(next_window * opt.window_s);
                ++next_window;
            }
            const auto t0 = std::chrono::steady_clock::now();
            const auto outmsg = eng.step(e);
            if (outmsg.has_value() && count_full) eng.circuit().evaluate_full();
            wall += std::chrono::steady_clock::now() - t0;
            if (outmsg.has_value()) {
                published.push_back(outmsg->value.value);
                if (count_full) adapted_ops += eng.rc().total_omega();
            }
        }
        while (next_window <= n_windows) {
            snapshot_at(next_window * opt.window_s);
            ++next_window;
        }

        ModeSummary sum;
        sum.mode = mode;
        sum.cum_ops = snaps.back().ops;
        sum.cum_wall_us = snaps.back().wall_us;
        sum.publications = eng.publications();
        sum.adaptations = eng.adaptations();
        sum.memo_nodes = eng.memo_nodes();
        sum.layers = eng.layers();
        result.modes.push_back(sum);
        snaps_by_mode.push_back(std::move(snaps));
        published_by_mode.push_back(std::move(published));
    }

    // Cross-mode agreement on every published value.
    for (std::size_t m = 1; m < published_by_mode.size(); ++m) {
        if (published_by_mode[m].size() != published_by_mode[0].size())
            throw EvalError("benchmark modes published different event counts");
        for (std::size_t k = 0; k < published_by_mode[m].size(); ++k) {
            const double diff = std::abs(published_by_mode[m][k] - published_by_mode[0][k]);
            result.max_cross_mode_diff = std::max(result.max_cross_mode_diff, diff);
            if (diff > opt.agreement_tolerance)
                throw EvalError("benchmark modes disagree by " + std::to_string(diff) +
                                " at publication " + std::to_string(k));
        }
    }

    // Window rows, time-major, modes in the requested order.
    int flat_idx = -1;
    for (std::size_t m = 0; m < opt.modes.size(); ++m)
        if (opt.modes[m] == "flat") flat_idx = static_cast<int>(m);
    for (int wdx = 0; wdx < n_windows; ++wdx) {
        for (std::size_t m = 0; m < opt.modes.size(); ++m) {
            const Snapshot& s = snaps_by_mode[m][static_cast<std::size_t>(wdx)];
            MetricsRow row;
            row.window_start_s = wdx * opt.window_s;
            row.mode = opt.modes[m];
            row.cum_ops = s.ops;
            row.cum_wall_us = s.wall_us;
            row.memo_nodes = s.memo_nodes;
            row.layers = s.layers;
            row.partition_mae = s.mae;
            if (flat_idx < 0) {
                row.gain_counted = std::numeric_limits<double>::quiet_NaN();
            } else {
                const long long flat_ops =
                    snaps_by_mode[static_cast<std::size_t>(flat_idx)]
                                 [static_cast<std::size_t>(wdx)]
                                     .ops;
                row.gain_counted = (flat_ops == 0 && s.ops == 0)
                                       ? 1.0
                                       : static_cast<double>(flat_ops) /
                                             static_cast<double>(std::max(s.ops, 1ll));
            }
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

// Memory/depth trade-off of the partition width: the layered structure a
// given set of signal rates settles into, across several widths. A finer
// partition distinguishes at least as many frequency bands, so it retains
// at least as many layers and memo nodes.
struct PlasticityPoint {
    double h = 0.0;
    int memo_nodes = 0;
    int layers = 0;
};

template <Semiring S = ProbabilitySemiring>
inline std::vector<PlasticityPoint> plasticity_sweep(const WmcPolynomial& poly,
                                                     const std::vector<double>& rates_hz,
                                                     const std::vector<double>& hs) {
    if (rates_hz.size() != poly.sources.size())
        throw ConfigError("plasticity_sweep: one rate per signal required");
    std::vector<PlasticityPoint> out;
    for (const double h : hs) {
        std::vector<int> bands;
        bands.reserve(rates_hz.size());
        for (const double r : rates_hz) bands.push_back(partition(std::max(r, 0.0), h));
        ReactiveCircuit<S> rc(poly);
        adapt_to_bands(rc, bands);
        out.push_back({h, rc.formula_count(), rc.depth() + 1});
    }
    return out;
}

} // namespace resin
