#pragma once
// Key-value configuration.
//
// Format: one `key = value` pair per line; blank lines and lines starting
// with `#` are ignored; later keys override earlier ones. Documented keys:
//
//   h                     partition width in Hz           (default 5.0)
//   epsilon               change threshold in weight space (default 1e-3)
//   hysteresis            consecutive confirmations per move (default 3)
//   max_sources           stable-model enumeration limit   (default 24)
//   queue_capacity        bus queue bound per subscription (default 1024)
//   kalman.q              process noise diagonal           (default 1e-4)
//   kalman.r              measurement noise                (default 1e-2)
//   kalman.delta_t        filter step per event            (default 1.0)
//   kalman.x0_interval    initial interval estimate        (default 1.0)
//   kalman.x0_slope       initial interval slope           (default 0.0)
//   kalman.p0             initial covariance diagonal      (default 1.0)
//   kalman.floor          interval floor in seconds        (default 1e-4)
//   adapt                 enable structural adaptation     (default true)
//   bridge.listen         socket address, host:port or unix:/path

#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "resin/errors.hpp"
#include "resin/foc.hpp"
#include "resin/ground.hpp"

namespace resin {

class Config {
public:
    static Config parse(const std::string& text, const std::string& origin = "<config>") {
        Config cfg;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string trimmed = trim(line);
            if (trimmed.empty() || trimmed[0] == '#') continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": expected 'key = value', got '" + trimmed + "'");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
            cfg.values_[key] = value;
        }
        return cfg;
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse(buf.str(), path);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get(const std::string& key, const std::string& fallback = "") const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        char* end = nullptr;
        const double v = std::strtod(it->second.c_str(), &end);
        if (end == it->second.c_str() || *end != '\0')
            throw ConfigError("key '" + key + "': '" + it->second + "' is not a number");
        return v;
    }

    long get_int(const std::string& key, long fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        char* end = nullptr;
        const long v = std::strtol(it->second.c_str(), &end, 10);
        if (end == it->second.c_str() || *end != '\0')
            throw ConfigError("key '" + key + "': '" + it->second + "' is not an integer");
        return v;
    }

    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
        if (it->second == "false" || it->second == "0" || it->second == "no") return false;
        throw ConfigError("key '" + key + "': '" + it->second + "' is not a boolean");
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }
    std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// Engine configuration assembled from a Config.
// ---------------------------------------------------------------------------

struct EngineConfig {
    double h = 5.0;
    double epsilon = 1e-3;
    int hysteresis = 3;
    int max_sources = kDefaultSourceLimit;
    std::size_t queue_capacity = 1024;
    bool adapt = true;
    KalmanParams kalman;

    void validate() const {
        if (!(h > 0.0)) throw ConfigError("partition width h must be positive");
        if (hysteresis < 1) throw ConfigError("hysteresis must be at least 1");
        if (epsilon < 0.0) throw ConfigError("epsilon must be nonnegative");
        if (max_sources < 1) throw ConfigError("max_sources must be at least 1");
    }

    static EngineConfig from_config(const Config& cfg) {
        EngineConfig ec;
        ec.h = cfg.get_double("h", ec.h);
        ec.epsilon = cfg.get_double("epsilon", ec.epsilon);
        ec.hysteresis = static_cast<int>(cfg.get_int("hysteresis", ec.hysteresis));
        ec.max_sources = static_cast<int>(cfg.get_int("max_sources", ec.max_sources));
        ec.queue_capacity =
            static_cast<std::size_t>(cfg.get_int("queue_capacity", static_cast<long>(ec.queue_capacity)));
        ec.adapt = cfg.get_bool("adapt", ec.adapt);
        ec.kalman.q = cfg.get_double("kalman.q", ec.kalman.q);
        ec.kalman.r = cfg.get_double("kalman.r", ec.kalman.r);
        ec.kalman.delta_t = cfg.get_double("kalman.delta_t", ec.kalman.delta_t);
        ec.kalman.x0_interval = cfg.get_double("kalman.x0_interval", ec.kalman.x0_interval);
        ec.kalman.x0_slope = cfg.get_double("kalman.x0_slope", ec.kalman.x0_slope);
        ec.kalman.p0 = cfg.get_double("kalman.p0", ec.kalman.p0);
        ec.kalman.interval_floor = cfg.get_double("kalman.floor", ec.kalman.interval_floor);
        ec.validate();
        return ec;
    }
};

} // namespace resin
