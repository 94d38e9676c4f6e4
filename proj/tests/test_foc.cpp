#include <cmath>
#include <random>

#include "catch2/catch_amalgamated.hpp"
#include "resin/foc.hpp"

using namespace resin;

namespace {

KalmanState converged_at(double interval, int steps = 200) {
    KalmanState ks;
    for (int i = 0; i < steps; ++i) ks.observe(interval);
    return ks;
}

double min_eigenvalue(const Cov2& p) {
    const double tr = p.p00 + p.p11;
    const double diff = p.p00 - p.p11;
    const double off = 0.5 * (p.p01 + p.p10);
    return 0.5 * (tr - std::sqrt(diff * diff + 4.0 * off * off));
}

} // namespace

TEST_CASE("the change predicate passes only moves beyond the threshold") {
    ChangePredicate pred{0.01};
    CHECK_FALSE(pred.meaningful(0.50, 0.505));
    CHECK(pred.meaningful(0.50, 0.60));
    CHECK(pred.meaningful(std::nullopt, 0.0)); // first value always counts
    CHECK(pred.meaningful(0.50, 0.48));

    ChangePredicate quarter{0.25};
    CHECK_FALSE(quarter.meaningful(0.50, 0.75)); // exactly epsilon is not a change
    CHECK(quarter.meaningful(0.50, 0.80));
}

TEST_CASE("a constant stream converges to its interval") {
    const KalmanState ks = converged_at(0.2, 100);
    CHECK(std::abs(ks.interval_estimate() - 0.2) < 1e-3);
    const auto rate = foc_estimate(ks);
    REQUIRE(rate.has_value());
    CHECK(*rate == Catch::Approx(5.0).margin(0.05));
}

TEST_CASE("a single update is a convex move toward the measurement") {
    KalmanState ks;
    REQUIRE(ks.interval_estimate() == 1.0);
    ks.observe(0.5);
    CHECK(ks.interval_estimate() > 0.5);
    CHECK(ks.interval_estimate() < 1.0);
}

TEST_CASE("a rate jump lands in the new frequency band") {
    KalmanState ks = converged_at(0.5); // 2 Hz
    int landed = -1;
    for (int i = 1; i <= 60; ++i) {
        ks.observe(0.05); // 20 Hz: exactly on the band-4 left boundary
        const auto rate = foc_estimate(ks);
        REQUIRE(rate.has_value());
        const int band = partition(*rate, 5.0);
        if (landed < 0 && band == 4) landed = i;
        // The estimate converges to the boundary with damped oscillation,
        // so once landed it may still alternate with the band below.
        if (landed > 0) CHECK((band == 4 || band == 3));
    }
    REQUIRE(landed > 0);
    CHECK(landed <= 16);
    CHECK(std::abs(ks.interval_estimate() - 0.05) < 0.002);
}

TEST_CASE("nonpositive intervals are rejected without touching the state") {
    KalmanState ks = converged_at(0.2, 10);
    const double before = ks.interval_estimate();
    const long long nobs = ks.observations();
    CHECK_FALSE(ks.observe(0.0));
    CHECK_FALSE(ks.observe(-1.0));
    CHECK(ks.interval_estimate() == before);
    CHECK(ks.observations() == nobs);
}

TEST_CASE("the rate estimate is absent before any observation") {
    KalmanState ks;
    CHECK_FALSE(foc_estimate(ks).has_value());
}

TEST_CASE("the rate estimate is capped by the interval floor") {
    KalmanState ks;
    for (int i = 0; i < 500; ++i) ks.observe(1e-6);
    const auto rate = foc_estimate(ks);
    REQUIRE(rate.has_value());
    CHECK(*rate == 1.0 / ks.params().interval_floor); // 10 kHz cap
}

TEST_CASE("a one-second interval reads as one hertz") {
    const KalmanState ks = converged_at(1.0, 100);
    const auto rate = foc_estimate(ks);
    REQUIRE(rate.has_value());
    CHECK(*rate == Catch::Approx(1.0).margin(1e-3));
}

TEST_CASE("partitioning floors the rate into left-closed bands") {
    CHECK(partition(7.2, 5.0) == 1);
    CHECK(partition(5.0, 5.0) == 1); // boundary belongs to the upper band
    CHECK(partition(0.0, 5.0) == 0);
    CHECK(partition(4.999, 5.0) == 0);
    CHECK_THROWS_AS(partition(1.0, 0.0), ConfigError);
    CHECK_THROWS_AS(partition(1.0, -5.0), ConfigError);
    CHECK_THROWS_AS(partition(-1.0, 5.0), DomainError);
}

TEST_CASE("partition bands never grow finer as the width increases") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> rate(0.0, 100.0);
    std::uniform_real_distribution<double> width(0.1, 10.0);
    for (int i = 0; i < 1000; ++i) {
        const double lam = rate(rng);
        const double h1 = width(rng);
        const double h2 = h1 + width(rng);
        CHECK(partition(lam, h2) <= partition(lam, h1));
    }
}

TEST_CASE("meaningful updates never outnumber raw messages") {
    std::mt19937 rng(123);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int round = 0; round < 20; ++round) {
        FocTracker tracker(ChangePredicate{0.05});
        double t = 0.0;
        double w = unit(rng);
        for (int i = 0; i < 500; ++i) {
            w = std::clamp(w + (unit(rng) - 0.5) * 0.1, 0.0, 1.0);
            t += unit(rng);
            tracker.offer(w, t);
            CHECK(tracker.meaningful_count() <= tracker.message_count());
        }
        CHECK(tracker.message_count() == 500);
        CHECK(tracker.meaningful_count() < tracker.message_count());
    }
}

TEST_CASE("the covariance stays symmetric positive semidefinite") {
    std::mt19937 rng(31415);
    std::uniform_real_distribution<double> log_z(std::log(1e-5), std::log(1e3));
    for (int seq = 0; seq < 1000; ++seq) {
        KalmanState ks;
        for (int i = 0; i < 100; ++i) {
            ks.observe(std::exp(log_z(rng)));
            const Cov2& p = ks.covariance();
            const double scale = std::abs(p.p00) + std::abs(p.p11) + 1.0;
            REQUIRE(std::abs(p.p01 - p.p10) <= 1e-12 * scale);
            REQUIRE(min_eigenvalue(p) >= -1e-10);
        }
    }
}

TEST_CASE("partition error shrinks as bands widen") {
    const double hs[] = {1.0, 5.0, 10.0, 30.0};
    double mae[4] = {0.0, 0.0, 0.0, 0.0};
    long long total = 0;

    for (int seed = 0; seed < 20; ++seed) {
        std::mt19937 rng(7000 + seed);
        std::uniform_real_distribution<double> pick_rate(0.0, 30.0);
        KalmanState ks;
        double rate = pick_rate(rng);
        for (int n = 0; n < 10000; ++n) {
            if (n % 20 == 0 && n > 0) rate = pick_rate(rng);
            ks.observe(1.0 / std::max(rate, 1e-9));
            const double lam = *foc_estimate(ks);
            for (int j = 0; j < 4; ++j)
                mae[j] += std::abs(partition(lam, hs[j]) - partition(rate, hs[j]));
            ++total;
        }
    }
    for (double& m : mae) m /= static_cast<double>(total);
    CHECK(mae[0] >= mae[1]);
    CHECK(mae[1] >= mae[2]);
    CHECK(mae[2] >= mae[3]);
}

TEST_CASE("trackers measure intervals between accepted updates only") {
    FocTracker tracker(ChangePredicate{0.01});
    CHECK(tracker.offer(0.50, 0.0));       // first value
    CHECK_FALSE(tracker.offer(0.505, 1.0)); // filtered out
    CHECK(tracker.offer(0.60, 4.0));        // accepted
    CHECK(tracker.filter().observations() == 1);
    // The observed interval is 4 s (from the accepted update at t=0),
    // not 3 s from the rejected offer; the prior interval of 1 s moves up.
    CHECK(tracker.filter().interval_estimate() > 3.5);
    CHECK(tracker.last_weight() == 0.60);
}

TEST_CASE("tracker rates decay with silence") {
    FocTracker tracker;
    CHECK_FALSE(tracker.effective_rate(0.0).has_value());
    double t = 0.0, w = 0.0;
    for (int i = 0; i < 200; ++i) {
        t += 0.2;
        w = (w == 0.0) ? 1.0 : 0.0;
        tracker.offer(w, t);
    }
    REQUIRE(tracker.rate().has_value());
    CHECK(*tracker.rate() == Catch::Approx(5.0).margin(0.05));
    CHECK(*tracker.effective_rate(t) == Catch::Approx(5.0).margin(0.05));
    CHECK(*tracker.effective_rate(t + 0.1) == Catch::Approx(5.0).margin(0.05));
    // Gaps within the jitter slack (3x the estimated interval) do not decay.
    CHECK(*tracker.effective_rate(t + 0.5) == Catch::Approx(5.0).margin(0.05));
    CHECK_FALSE(tracker.in_decay(t + 0.5));
    CHECK(*tracker.effective_rate(t + 10.0) == Catch::Approx(0.1).margin(1e-9));
    CHECK(tracker.in_decay(t + 10.0));
}
