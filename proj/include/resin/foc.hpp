#pragma once
// Per-signal update filtering and rate estimation.
//
// A signal's stream is thinned by a change predicate (only meaningful
// value changes count), the intervals between meaningful updates are
// tracked by a small constant-velocity Kalman filter, and the resulting
// rate estimate is quantized into frequency bands that drive circuit
// adaptation.

#include <algorithm>
#include <cmath>
#include <optional>

#include "resin/errors.hpp"

namespace resin {

// ---------------------------------------------------------------------------
// Change predicate: a new value matters iff it moved by more than epsilon
// in weight space. The first value ever seen always matters.
// ---------------------------------------------------------------------------

struct ChangePredicate {
    double epsilon = 1e-3;

    bool meaningful(const std::optional<double>& old_w, double new_w) const {
        if (!old_w.has_value()) return true;
        return std::abs(new_w - *old_w) > epsilon;
    }
};

// ---------------------------------------------------------------------------
// Constant-velocity Kalman filter over inter-arrival times.
//
// State x = (interval, interval slope); transition [[1, dt],[0, 1]];
// the measurement observes the interval directly. Hand-rolled 2x2
// algebra keeps this dependency-free; the covariance update uses the
// Joseph form so P stays symmetric positive semidefinite.
// ---------------------------------------------------------------------------

struct KalmanParams {
    double delta_t = 1.0;  // filter step per accepted event
    double q = 1e-4;       // process noise (both diagonal entries)
    double r = 1e-2;       // measurement noise
    double x0_interval = 1.0;
    double x0_slope = 0.0;
    double p0 = 1.0;       // initial covariance (both diagonal entries)
    double interval_floor = 1e-4;  // seconds; caps the rate at 1/floor
};

struct Cov2 {
    double p00 = 0.0, p01 = 0.0, p10 = 0.0, p11 = 0.0;
};

class KalmanState {
public:
    explicit KalmanState(const KalmanParams& params = {}) : prm_(params) {
        x0_ = prm_.x0_interval;
        x1_ = prm_.x0_slope;
        p_ = {prm_.p0, 0.0, 0.0, prm_.p0};
    }

    // One predict + update step with the measured interval. A nonpositive
    // measurement is rejected and the state is left untouched.
    bool observe(double inter_arrival) {
        if (!(inter_arrival > 0.0)) return false;

        // Predict: x <- Fx, P <- F P F^T + Q.
        const double dt = prm_.delta_t;
        const double nx0 = x0_ + dt * x1_;
        const double nx1 = x1_;
        const double p00 = p_.p00 + dt * (p_.p10 + p_.p01) + dt * dt * p_.p11 + prm_.q;
        const double p01 = p_.p01 + dt * p_.p11;
        const double p10 = p_.p10 + dt * p_.p11;
        const double p11 = p_.p11 + prm_.q;

        // Update with H = [1 0]: innovation on the interval component.
        const double s = p00 + prm_.r;
        const double k0 = p00 / s;
        const double k1 = p10 / s;
        const double innovation = inter_arrival - nx0;
        x0_ = nx0 + k0 * innovation;
        x1_ = nx1 + k1 * innovation;

        // Joseph form: P <- (I - K H) P (I - K H)^T + K R K^T.
        const double a00 = 1.0 - k0;  // I - K H = [[1-k0, 0], [-k1, 1]]
        const double a10 = -k1;
        const double q00 = a00 * p00;
        const double q01 = a00 * p01;
        const double q10 = a10 * p00 + p10;
        const double q11 = a10 * p01 + p11;
        p_.p00 = q00 * a00 + k0 * prm_.r * k0;
        p_.p01 = q00 * a10 + q01 + k0 * prm_.r * k1;
        p_.p10 = q10 * a00 + k1 * prm_.r * k0;
        p_.p11 = q10 * a10 + q11 + k1 * prm_.r * k1;

        ++observations_;
        return true;
    }

    double interval_estimate() const { return x0_; }
    double slope_estimate() const { return x1_; }
    const Cov2& covariance() const { return p_; }
    long long observations() const { return observations_; }
    const KalmanParams& params() const { return prm_; }

private:
    KalmanParams prm_;
    double x0_ = 1.0, x1_ = 0.0;
    Cov2 p_;
    long long observations_ = 0;
};

// Estimated rate in Hz; absent until the filter has seen an interval.
inline std::optional<double> foc_estimate(const KalmanState& ks) {
    if (ks.observations() == 0) return std::nullopt;
    return 1.0 / std::max(ks.interval_estimate(), ks.params().interval_floor);
}

// Frequency band index: k such that k*h <= rate < (k+1)*h.
inline int partition(double rate_hz, double h) {
    if (!(h > 0.0)) throw ConfigError("partition width must be positive");
    if (rate_hz < 0.0) throw DomainError("rate must be nonnegative");
    return static_cast<int>(std::floor(rate_hz / h));
}

// ---------------------------------------------------------------------------
// Per-signal tracker: change predicate + clocked interval filter.
// ---------------------------------------------------------------------------

class FocTracker {
public:
    // Quiet periods longer than this multiple of the estimated interval are
    // treated as silence rather than inter-arrival jitter, both for the
    // effective-rate decay and for the filter restart on resume.
    static constexpr double kSilenceSlack = 3.0;

    explicit FocTracker(ChangePredicate pred = {}, KalmanParams params = {})
        : pred_(pred), ks_(params) {}

    // Offer a coerced weight observed at the given monotonic time. Returns
    // true iff the value was a meaningful update (and therefore should
    // reach the circuit). The interval filter only sees meaningful
    // updates, so the estimated rate never exceeds the raw message rate.
    // A gap long enough to count as silence is a regime change, not an
    // interval sample — a 15 s pause before a 10 Hz burst says nothing
    // about the burst's period, and feeding it to the filter would swing
    // the slope state violently (transient estimates of thousands of Hz
    // on the next few updates). The filter restarts instead and
    // re-converges on the new regime's genuine intervals.
    bool offer(double weight, double clock_seconds) {
        ++messages_;
        const bool first = !last_weight_.has_value();
        if (!pred_.meaningful(last_weight_, weight)) return false;
        ++meaningful_;
        last_weight_ = weight;
        // The very first value initializes the signal; it is not a change,
        // so it must not anchor the change clock (a signal that then sits
        // still for a minute has no "one-minute interval" — it has no
        // intervals at all yet).
        if (first) return true;
        if (last_clock_.has_value()) {
            const double gap = clock_seconds - *last_clock_;
            const double expected =
                std::max(ks_.interval_estimate(), ks_.params().interval_floor);
            if (ks_.observations() > 0 && gap > kSilenceSlack * expected)
                ks_ = KalmanState(ks_.params());
            else
                ks_.observe(gap);
        }
        last_clock_ = clock_seconds;
        return true;
    }

    std::optional<double> rate() const { return foc_estimate(ks_); }

    // Rate discounted for silence: a signal that has stopped changing
    // should not keep its historical band forever. Ordinary inter-arrival
    // jitter must not look like silence, so the decay only starts once
    // the quiet period exceeds `slack` times the estimated interval; from
    // there the effective rate falls as the reciprocal of the silence.
    std::optional<double> effective_rate(double now_seconds,
                                         double slack = kSilenceSlack) const {
        const auto base = rate();
        if (!base.has_value() || !last_clock_.has_value()) return base;
        const double silence = now_seconds - *last_clock_;
        const double expected = std::max(ks_.interval_estimate(), ks_.params().interval_floor);
        if (silence <= slack * expected) return base;
        return std::min(*base, 1.0 / silence);
    }

    // True once the silence-decayed rate has fallen below the estimate.
    bool in_decay(double now_seconds, double slack = kSilenceSlack) const {
        const auto base = rate();
        const auto eff = effective_rate(now_seconds, slack);
        return base.has_value() && eff.has_value() && *eff < *base;
    }

    const std::optional<double>& last_weight() const { return last_weight_; }
    const std::optional<double>& last_clock() const { return last_clock_; }
    long long message_count() const { return messages_; }
    long long meaningful_count() const { return meaningful_; }
    const KalmanState& filter() const { return ks_; }

private:
    ChangePredicate pred_;
    KalmanState ks_;
    std::optional<double> last_weight_;
    std::optional<double> last_clock_;
    long long messages_ = 0;
    long long meaningful_ = 0;
};

} // namespace resin
