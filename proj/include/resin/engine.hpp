#pragma once
// The per-target inference engine.
//
// One engine owns the compiled circuit for one target and consumes the
// merged stream of its underlying channels. Per message it coerces the
// affected sources to weights, filters them through the per-signal change
// predicates, feeds accepted intervals to the rate filters, pushes the
// new weights through the invalidation queue, and republishes the target.
// After reacting it runs the adaptation policy: each signal's band
// (partitioned estimated rate) determines a target depth — highest band
// adjacent to the root — and signals whose depth disagrees for enough
// consecutive estimates are moved one level per confirmed step.
//
// The target is withheld until every source has delivered a first value;
// inventing priors for unseen signals would break exactness.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "resin/bus.hpp"
#include "resin/circuit.hpp"
#include "resin/coerce.hpp"
#include "resin/config.hpp"
#include "resin/foc.hpp"
#include "resin/ground.hpp"

namespace resin {

template <Semiring S = ProbabilitySemiring>
class Engine {
public:
    explicit Engine(GroundProgram gp, EngineConfig cfg = {})
        : Engine(build_wmc_polynomial(gp, enumerate_stable_models(gp, cfg.max_sources)), cfg) {}

    // A polynomial carries everything the engine needs (sources, target,
    // model terms); workloads built without a ground program use this.
    explicit Engine(const WmcPolynomial& poly, EngineConfig cfg = {})
        : cfg_(cfg), rc_(poly) {
        gp_.target_key = poly.target_key;
        gp_.target_channel = poly.target_channel;
        gp_.sources = poly.sources;
        cfg_.validate();
        const int n = source_count();
        trackers_.assign(static_cast<std::size_t>(n),
                         FocTracker(ChangePredicate{cfg_.epsilon}, cfg_.kalman));
        weight_known_.assign(static_cast<std::size_t>(n), false);
        streak_target_.assign(static_cast<std::size_t>(n), -1);
        streak_.assign(static_cast<std::size_t>(n), 0);
        for (int i = 0; i < n; ++i) {
            const GroundSource& s = gp_.sources[static_cast<std::size_t>(i)];
            if (!s.is_comparison) {
                note_channel(s.channel, s.dtype, i);
            } else {
                if (!s.lhs.is_number) note_channel(s.lhs.channel, s.lhs.dtype, i);
                if (!s.rhs.is_number) note_channel(s.rhs.channel, s.rhs.dtype, i);
            }
        }
    }

    // Feed one message; returns the target publication, if any.
    std::optional<BusMessage> step(const BusMessage& msg) {
        ++messages_;
        const auto chan = chan_sources_.find(msg.channel);
        if (chan == chan_sources_.end()) {
            skip("message on undeclared channel '" + msg.channel + "'");
            return std::nullopt;
        }
        if (msg.value.type != chan_types_.at(msg.channel)) {
            skip("channel '" + msg.channel + "' expects " +
                 std::string(to_string(chan_types_.at(msg.channel))) + ", got " +
                 std::string(to_string(msg.value.type)));
            return std::nullopt;
        }
        now_ = std::max(now_, msg.timestamp);
        values_[msg.channel] = msg.value;

        const ChannelLookup lookup = [this](const std::string& c) -> const TypedValue* {
            const auto it = values_.find(c);
            return it == values_.end() ? nullptr : &it->second;
        };

        bool any_meaningful = false;
        for (const int si : chan->second) {
            std::optional<double> w;
            try {
                w = coerce_source(gp_.sources[static_cast<std::size_t>(si)], lookup,
                                  cfg_.epsilon);
            } catch (const Error& e) {
                skip(e.what());
                continue;
            }
            if (!w.has_value()) continue;
            if (!trackers_[static_cast<std::size_t>(si)].offer(*w, msg.timestamp)) continue;
            any_meaningful = true;
            ++meaningful_;
            fresh_.push_back(si);
            set_weight_value(si, *w);
            if (!weight_known_[static_cast<std::size_t>(si)]) {
                weight_known_[static_cast<std::size_t>(si)] = true;
                ++known_;
            }
            if (live_) rc_.invalidate(si);
        }

        std::optional<BusMessage> out;
        if (known_ == source_count()) {
            double value = 0.0;
            bool publish = false;
            if (!live_) {
                value = rc_.evaluate_full();
                live_ = true;
                publish = true;
            } else if (any_meaningful) {
                value = rc_.react().value;
                publish = true;
            }
            if (publish) {
                if (cfg_.adapt) run_policy();
                ++publications_;
                out = BusMessage{gp_.target_channel, TypedValue::probability(clamp01(value)),
                                 now_};
            }
        }
        fresh_.clear();
        return out;
    }

    // For programs with no sources (constant targets) there is no message
    // to trigger the first evaluation; prime publishes it.
    std::optional<BusMessage> prime() {
        if (live_ || known_ != source_count()) return std::nullopt;
        const double value = rc_.evaluate_full();
        live_ = true;
        ++publications_;
        return BusMessage{gp_.target_channel, TypedValue::probability(clamp01(value)), now_};
    }

    // ---- introspection ----------------------------------------------------

    const GroundProgram& program() const { return gp_; }
    const EngineConfig& config() const { return cfg_; }
    const ReactiveCircuit<S>& rc() const { return rc_; }
    ReactiveCircuit<S>& circuit() { return rc_; }
    int source_count() const { return static_cast<int>(gp_.sources.size()); }
    const FocTracker& tracker(int i) const { return trackers_.at(static_cast<std::size_t>(i)); }
    const std::string& target_channel() const { return gp_.target_channel; }

    std::vector<std::string> channels() const {
        std::vector<std::string> out;
        out.reserve(chan_sources_.size());
        for (const auto& [c, _] : chan_sources_) out.push_back(c);
        return out;
    }
    SignalType channel_type(const std::string& channel) const {
        const auto it = chan_types_.find(channel);
        if (it == chan_types_.end())
            throw ConfigError("channel '" + channel + "' is not used by this engine");
        return it->second;
    }

    bool live() const { return live_; }
    double now() const { return now_; }
    int layers() const { return rc_.depth() + 1; }
    int memo_nodes() const { return rc_.formula_count(); }
    long long messages() const { return messages_; }
    long long meaningful() const { return meaningful_; }
    long long skipped() const { return skipped_; }
    long long publications() const { return publications_; }
    long long adaptations() const { return adaptations_; }
    const std::string& last_diagnostic() const { return last_diagnostic_; }

private:
    static double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

    void note_channel(const std::string& channel, SignalType type, int source_idx) {
        const auto [it, inserted] = chan_types_.emplace(channel, type);
        if (!inserted && it->second != type)
            throw ConfigError("channel '" + channel + "' is used both as " +
                              std::string(to_string(it->second)) + " and " +
                              std::string(to_string(type)));
        auto& v = chan_sources_[channel];
        if (std::find(v.begin(), v.end(), source_idx) == v.end()) v.push_back(source_idx);
    }

    void set_weight_value(int si, double w) {
        if constexpr (S::has_complement) {
            rc_.set_weight(si, w);
        } else {
            rc_.set_weight_pair(si, w, 1.0 - w);
        }
    }

    void skip(const std::string& why) {
        ++skipped_;
        last_diagnostic_ = why;
    }

    bool in_decay(int i) const {
        return trackers_[static_cast<std::size_t>(i)].in_decay(now_);
    }

    // One adaptation pass. Confirmation ("streak") advances only on a
    // signal's own estimate events: a fresh meaningful update, or — once
    // its silence exceeds its estimated interval — the steady decay of
    // its effective rate. This keeps a signal oscillating across a band
    // boundary on alternating estimates from ever confirming, while still
    // letting signals that fall silent migrate toward the leaves.
    void run_policy() {
        const int n = source_count();
        // A signal that has never produced a rate estimate has never been
        // seen to change: it is the quintessential quasi-static signal and
        // is banded as such, rather than pinned wherever it happens to sit.
        std::vector<int> band(static_cast<std::size_t>(n), 0);
        std::vector<bool> spoken(static_cast<std::size_t>(n), false);
        int k_max = 0;
        for (int i = 0; i < n; ++i) {
            const auto r = trackers_[static_cast<std::size_t>(i)].effective_rate(now_);
            if (!r.has_value()) continue;
            spoken[static_cast<std::size_t>(i)] = true;
            band[static_cast<std::size_t>(i)] = partition(*r, cfg_.h);
            k_max = std::max(k_max, band[static_cast<std::size_t>(i)]);
        }

        // The global frame moves slower than any one signal: a new k_max is
        // adopted only once it has persisted for a full hysteresis run of
        // policy invocations.  Without this, a brief rate-estimate transient
        // on one signal shifts every other signal's target at once, and the
        // whole quiet population migrates after any flap.
        if (k_max == frame_candidate_) {
            ++frame_streak_;
        } else {
            frame_candidate_ = k_max;
            frame_streak_ = 1;
        }
        if (frame_streak_ >= cfg_.hysteresis) frame_kmax_ = frame_candidate_;

        // Entirely quasi-static system: every placement serves future
        // updates equally well, so restructuring toward the flat form
        // would be pure churn. Keep whatever layering is in place.
        if (frame_kmax_ <= 0) return;

        std::set<int> events(fresh_.begin(), fresh_.end());
        for (int i = 0; i < n; ++i)
            if (!spoken[static_cast<std::size_t>(i)] || in_decay(i)) events.insert(i);

        for (const int s : events) {
            const int target =
                std::max(0, frame_kmax_ - band[static_cast<std::size_t>(s)]);
            if (target == streak_target_[static_cast<std::size_t>(s)]) {
                ++streak_[static_cast<std::size_t>(s)];
            } else {
                streak_target_[static_cast<std::size_t>(s)] = target;
                streak_[static_cast<std::size_t>(s)] = 1;
            }
        }

        std::vector<int> drops, lifts;
        for (int s = 0; s < n; ++s) {
            if (streak_[static_cast<std::size_t>(s)] < cfg_.hysteresis) continue;
            const int cur = rc_.signal_depth(s);
            if (cur < 0) continue;
            const int target = streak_target_[static_cast<std::size_t>(s)];
            if (target > cur) {
                drops.push_back(s);
            } else if (target < cur) {
                lifts.push_back(s);
            }
        }
        move(lifts, /*is_drop=*/false);
        move(drops, /*is_drop=*/true);
    }

    // Apply one batched restructuring. The requested depth can exceed what
    // the polynomial admits (a signal alone in its layer has nowhere deeper
    // to go); such saturated moves change nothing, so they do not count as
    // adaptations and the signal's streak restarts to keep retries spaced.
    void move(const std::vector<int>& signals, bool is_drop) {
        if (signals.empty()) return;
        std::vector<int> before;
        before.reserve(signals.size());
        for (const int s : signals) before.push_back(rc_.signal_depth(s));
        if (is_drop)
            rc_.drop(signals);
        else
            rc_.lift(signals);
        bool changed = false;
        for (std::size_t i = 0; i < signals.size(); ++i) {
            if (rc_.signal_depth(signals[i]) == before[i])
                streak_[static_cast<std::size_t>(signals[i])] = 0;
            else
                changed = true;
        }
        if (changed) ++adaptations_;
    }

    GroundProgram gp_;
    EngineConfig cfg_;
    ReactiveCircuit<S> rc_;

    std::vector<FocTracker> trackers_;
    std::map<std::string, TypedValue> values_;
    std::map<std::string, std::vector<int>> chan_sources_;
    std::map<std::string, SignalType> chan_types_;

    std::vector<bool> weight_known_;
    int known_ = 0;
    bool live_ = false;
    double now_ = 0.0;

    std::vector<int> fresh_;         // sources meaningfully updated this step
    int frame_kmax_ = 0;             // adopted global frame (slow k_max)
    int frame_candidate_ = -1;       // k_max candidate awaiting adoption
    int frame_streak_ = 0;           // consecutive runs at the candidate
    std::vector<int> streak_target_; // per-source confirmed target depth
    std::vector<int> streak_;        // consecutive confirmations

    long long messages_ = 0;
    long long meaningful_ = 0;
    long long skipped_ = 0;
    long long publications_ = 0;
    long long adaptations_ = 0;
    std::string last_diagnostic_;
};

// ---------------------------------------------------------------------------
// Bus binding: subscribes an engine to its channels and pumps messages.
// ---------------------------------------------------------------------------

template <Semiring S = ProbabilitySemiring>
class EngineRunner {
public:
    EngineRunner(Engine<S>& engine, Bus& bus)
        : engine_(engine), bus_(bus), sub_(bus.subscribe_many(engine.channels())) {
        for (const std::string& c : engine_.channels())
            bus_.declare(c, engine_.channel_type(c));
        bus_.declare(engine_.target_channel(), SignalType::Probability);
        if (const auto first = engine_.prime()) bus_.publish(*first);
    }

    // Process everything currently queued; returns messages consumed.
    int poll() {
        int processed = 0;
        while (auto msg = sub_.try_pop()) {
            ++processed;
            if (const auto out = engine_.step(*msg)) bus_.publish(*out);
        }
        return processed;
    }

    // Wait up to the timeout for one message and process it.
    bool pump(double timeout_seconds) {
        auto msg = sub_.pop_wait(timeout_seconds);
        if (!msg.has_value()) return false;
        if (const auto out = engine_.step(*msg)) bus_.publish(*out);
        return true;
    }

    Engine<S>& engine() { return engine_; }

private:
    Engine<S>& engine_;
    Bus& bus_;
    Subscription sub_;
};

} // namespace resin
