#pragma once
// In-process publish/subscribe signal bus.
//
// Producers publish typed values on string channels; each subscriber owns
// a bounded queue per subscription (drop-oldest on overflow). Channels can
// be declared with a type, after which mismatched publications are
// rejected. Timestamps are repaired to be non-decreasing per channel so
// concurrent producers with slightly skewed clocks cannot corrupt
// downstream interval measurements.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "resin/ast.hpp"
#include "resin/errors.hpp"

namespace resin {

// ---------------------------------------------------------------------------
// Typed signal values.
// ---------------------------------------------------------------------------

struct TypedValue {
    SignalType type = SignalType::Probability;
    double value = 0.0;   // Boolean (1/0), Number, Probability
    double mean = 0.0;    // Density
    double stddev = 1.0;  // Density

    static TypedValue boolean(bool flag) {
        TypedValue v;
        v.type = SignalType::Boolean;
        v.value = flag ? 1.0 : 0.0;
        return v;
    }
    static TypedValue number(double x) {
        TypedValue v;
        v.type = SignalType::Number;
        v.value = x;
        return v;
    }
    static TypedValue probability(double p) {
        if (!(p >= 0.0 && p <= 1.0)) {
            std::ostringstream os;
            os << "probability value " << p << " is outside [0, 1]";
            throw DomainError(os.str());
        }
        TypedValue v;
        v.type = SignalType::Probability;
        v.value = p;
        return v;
    }
    static TypedValue density(double mean, double stddev) {
        if (!(stddev > 0.0)) {
            std::ostringstream os;
            os << "density stddev " << stddev << " must be positive";
            throw DomainError(os.str());
        }
        TypedValue v;
        v.type = SignalType::Density;
        v.mean = mean;
        v.stddev = stddev;
        return v;
    }
};

struct BusMessage {
    std::string channel;
    TypedValue value;
    double timestamp = 0.0;  // monotonic seconds
};

// ---------------------------------------------------------------------------
// Subscriptions: one bounded queue per subscriber per channel.
// ---------------------------------------------------------------------------

class Bus;

class Subscription {
public:
    Subscription() = default;

    std::optional<BusMessage> try_pop() {
        if (!st_) return std::nullopt;
        std::lock_guard<std::mutex> lock(st_->m);
        if (st_->q.empty()) return std::nullopt;
        BusMessage msg = std::move(st_->q.front());
        st_->q.pop_front();
        return msg;
    }

    // Blocks up to the timeout for a message.
    std::optional<BusMessage> pop_wait(double timeout_seconds) {
        if (!st_) return std::nullopt;
        std::unique_lock<std::mutex> lock(st_->m);
        st_->cv.wait_for(lock, std::chrono::duration<double>(timeout_seconds),
                         [&] { return !st_->q.empty(); });
        if (st_->q.empty()) return std::nullopt;
        BusMessage msg = std::move(st_->q.front());
        st_->q.pop_front();
        return msg;
    }

    std::size_t size() const {
        if (!st_) return 0;
        std::lock_guard<std::mutex> lock(st_->m);
        return st_->q.size();
    }

    // Messages discarded because this queue was full.
    std::size_t dropped() const {
        if (!st_) return 0;
        std::lock_guard<std::mutex> lock(st_->m);
        return st_->dropped;
    }

    explicit operator bool() const { return static_cast<bool>(st_); }

private:
    friend class Bus;
    struct State {
        mutable std::mutex m;
        std::condition_variable cv;
        std::deque<BusMessage> q;
        std::size_t capacity = 1024;
        std::size_t dropped = 0;
        std::string channel;
    };
    std::shared_ptr<State> st_;
};

// ---------------------------------------------------------------------------
// The bus.
// ---------------------------------------------------------------------------

class Bus {
public:
    explicit Bus(std::size_t queue_capacity = 1024) : capacity_(queue_capacity) {}

    // Optional typing: once declared, mismatched publications throw.
    // Conflicting re-declaration also throws.
    void declare(const std::string& channel, SignalType type) {
        std::lock_guard<std::mutex> lock(m_);
        auto [it, inserted] = declared_.emplace(channel, type);
        if (!inserted && it->second != type)
            throw ConfigError("channel '" + channel + "' is already declared as " +
                              std::string(to_string(it->second)));
    }

    Subscription subscribe(const std::string& channel) {
        return subscribe_many({channel});
    }

    // One merged queue fed by several channels (arrival order across
    // channels, publication order within each).
    Subscription subscribe_many(const std::vector<std::string>& channels) {
        std::lock_guard<std::mutex> lock(m_);
        auto st = std::make_shared<Subscription::State>();
        st->capacity = capacity_;
        st->channel = channels.size() == 1 ? channels.front() : "<merged>";
        for (const std::string& c : channels) subs_[c].push_back(st);
        Subscription s;
        s.st_ = std::move(st);
        return s;
    }

    // Delivers to every subscriber of the channel; publication order is
    // preserved per channel. Returns the number of subscribers reached.
    std::size_t publish(BusMessage msg) {
        std::vector<std::shared_ptr<Subscription::State>> targets;
        {
            std::lock_guard<std::mutex> lock(m_);
            auto decl = declared_.find(msg.channel);
            if (decl != declared_.end() && decl->second != msg.value.type)
                throw DomainError("channel '" + msg.channel + "' expects " +
                                  std::string(to_string(decl->second)) + ", got " +
                                  std::string(to_string(msg.value.type)));

            double& last = last_ts_[msg.channel];
            if (msg.timestamp < last) {
                msg.timestamp = last;  // repair producer clock skew
                ++repaired_;
            } else {
                last = msg.timestamp;
            }
            ++published_;
            auto it = subs_.find(msg.channel);
            if (it != subs_.end()) targets = it->second;
        }

        for (auto& st : targets) {
            {
                std::lock_guard<std::mutex> lock(st->m);
                if (st->q.size() >= st->capacity) {
                    st->q.pop_front();
                    ++st->dropped;
                    ++dropped_;
                    if (overflow_log_) overflow_log_(st->channel, st->dropped);
                }
                st->q.push_back(msg);
            }
            st->cv.notify_one();
        }
        return targets.size();
    }

    // Routes an additional channel into an existing subscription's queue.
    void attach(Subscription& sub, const std::string& channel) {
        if (!sub.st_) {
            sub = subscribe(channel);
            return;
        }
        std::lock_guard<std::mutex> lock(m_);
        sub.st_->channel = "<merged>";
        subs_[channel].push_back(sub.st_);
    }

    // Called (under no bus lock) whenever a queue overflows.
    void set_overflow_logger(std::function<void(const std::string&, std::size_t)> fn) {
        overflow_log_ = std::move(fn);
    }

    std::size_t published() const { return published_; }
    std::size_t dropped_total() const { return dropped_; }
    std::size_t repaired_timestamps() const { return repaired_; }

private:
    mutable std::mutex m_;
    std::size_t capacity_;
    std::map<std::string, SignalType> declared_;
    std::map<std::string, std::vector<std::shared_ptr<Subscription::State>>> subs_;
    std::map<std::string, double> last_ts_;
    std::atomic<std::size_t> published_{0};
    std::atomic<std::size_t> dropped_{0};
    std::atomic<std::size_t> repaired_{0};
    std::function<void(const std::string&, std::size_t)> overflow_log_;
};

} // namespace resin
