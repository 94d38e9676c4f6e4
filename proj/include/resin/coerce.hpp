#pragma once
// Turning typed signal values into circuit weights in [0, 1].
//
// Probabilities map through unchanged and Booleans become 1/0. Number and
// Density signals only ever reach the circuit through comparison sites;
// a Number comparison evaluates to 1/0 (with the change tolerance used
// for equality) and a Density comparison integrates the Gaussian over the
// half-line (or the 2-epsilon interval for equality). A comparison whose
// threshold is itself a Number signal is re-evaluated whenever either
// side changes.

#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "resin/bus.hpp"
#include "resin/ground.hpp"

namespace resin {

inline double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Weight of `lhs op rhs` over realized numbers.
inline double compare_numbers(double lhs, RelOp op, double rhs, double epsilon) {
    switch (op) {
        case RelOp::Lt: return lhs < rhs ? 1.0 : 0.0;
        case RelOp::Le: return lhs <= rhs ? 1.0 : 0.0;
        case RelOp::Gt: return lhs > rhs ? 1.0 : 0.0;
        case RelOp::Ge: return lhs >= rhs ? 1.0 : 0.0;
        case RelOp::Eq: return std::abs(lhs - rhs) <= epsilon ? 1.0 : 0.0;
    }
    throw DomainError("unknown comparison operator");
}

// Weight of `x op c` where x ~ Normal(mean, stddev): the probability mass
// of the satisfying set. Strict and non-strict forms coincide (points have
// zero mass); equality uses the mass of [c - epsilon, c + epsilon].
inline double compare_density(double mean, double stddev, RelOp op, double c, double epsilon) {
    const double z = (c - mean) / stddev;
    switch (op) {
        case RelOp::Lt:
        case RelOp::Le: return standard_normal_cdf(z);
        case RelOp::Gt:
        case RelOp::Ge: return 1.0 - standard_normal_cdf(z);
        case RelOp::Eq:
            return standard_normal_cdf((c + epsilon - mean) / stddev) -
                   standard_normal_cdf((c - epsilon - mean) / stddev);
    }
    throw DomainError("unknown comparison operator");
}

// `c op x` with x Gaussian, rewritten as `x op' c`.
inline RelOp mirror_op(RelOp op) {
    switch (op) {
        case RelOp::Lt: return RelOp::Gt;
        case RelOp::Gt: return RelOp::Lt;
        case RelOp::Le: return RelOp::Ge;
        case RelOp::Ge: return RelOp::Le;
        case RelOp::Eq: return RelOp::Eq;
    }
    throw DomainError("unknown comparison operator");
}

using ChannelLookup = std::function<const TypedValue*(const std::string&)>;

namespace detail {

struct OperandValue {
    bool realized = false;  // a concrete number (literal or Number signal)
    double number = 0.0;
    bool density = false;
    double mean = 0.0, stddev = 1.0;
};

inline std::optional<OperandValue> resolve_operand(const ComparisonOperand& op,
                                                   const ChannelLookup& lookup) {
    OperandValue out;
    if (op.is_number) {
        out.realized = true;
        out.number = op.number;
        return out;
    }
    const TypedValue* v = lookup(op.channel);
    if (v == nullptr) return std::nullopt;
    if (v->type != op.dtype)
        throw DomainError("channel '" + op.channel + "' carries " +
                          std::string(to_string(v->type)) + " but the comparison expects " +
                          std::string(to_string(op.dtype)));
    if (v->type == SignalType::Number) {
        out.realized = true;
        out.number = v->value;
    } else if (v->type == SignalType::Density) {
        out.density = true;
        out.mean = v->mean;
        out.stddev = v->stddev;
    } else {
        throw DomainError("channel '" + op.channel + "' cannot appear in a comparison");
    }
    return out;
}

} // namespace detail

// Weight of one ground source given the latest per-channel values.
// Absent (nullopt) until every channel the source depends on has a value.
inline std::optional<double> coerce_source(const GroundSource& src, const ChannelLookup& lookup,
                                           double epsilon) {
    if (!src.is_comparison) {
        const TypedValue* v = lookup(src.channel);
        if (v == nullptr) return std::nullopt;
        if (v->type != src.dtype)
            throw DomainError("channel '" + src.channel + "' carries " +
                              std::string(to_string(v->type)) + " but source '" + src.key +
                              "' expects " + std::string(to_string(src.dtype)));
        switch (v->type) {
            case SignalType::Probability: return v->value;
            case SignalType::Boolean: return v->value != 0.0 ? 1.0 : 0.0;
            default:
                throw DomainError("source '" + src.key + "' must be used in a comparison");
        }
    }

    const auto lhs = detail::resolve_operand(src.lhs, lookup);
    if (!lhs) return std::nullopt;
    const auto rhs = detail::resolve_operand(src.rhs, lookup);
    if (!rhs) return std::nullopt;

    if (lhs->realized && rhs->realized)
        return compare_numbers(lhs->number, src.op, rhs->number, epsilon);
    if (lhs->density && rhs->realized)
        return compare_density(lhs->mean, lhs->stddev, src.op, rhs->number, epsilon);
    if (lhs->realized && rhs->density)
        return compare_density(rhs->mean, rhs->stddev, mirror_op(src.op), lhs->number, epsilon);
    throw DomainError("comparison '" + src.key + "' has two distribution-valued sides");
}

} // namespace resin
