#pragma once

#include <algorithm>
#include <concepts>
#include <string>

#include "resin/errors.hpp"

namespace resin {

// Commutative semirings over double-valued weights.
//
// A semiring supplies (plus, times) with identities (zero, one); both
// operations are associative and commutative and times distributes over
// plus. Circuits are parameterised on the semiring type, so adding a new
// instance is a matter of defining another struct with this shape -- the
// circuit code never changes.
//
// `has_complement` says whether the weight of a *negated* literal can be
// derived from the positive weight. That is a property of the instance,
// not of semirings in general: probabilities complement as 1 - w, while
// max-times has no such rule and negated literals need explicit weights.

template <class S>
concept Semiring = requires(typename S::Value a, typename S::Value b) {
    typename S::Value;
    { S::name } -> std::convertible_to<const char*>;
    { S::has_complement } -> std::convertible_to<bool>;
    { S::zero() } -> std::same_as<typename S::Value>;
    { S::one() } -> std::same_as<typename S::Value>;
    { S::plus(a, b) } -> std::same_as<typename S::Value>;
    { S::times(a, b) } -> std::same_as<typename S::Value>;
};

// Sum-product instance: exact weighted model counting. plus = +,
// times = *, and the weight of "not a" is 1 - weight(a).
struct ProbabilitySemiring {
    using Value = double;
    static constexpr const char* name = "probability";
    static constexpr bool has_complement = true;

    static Value zero() { return 0.0; }
    static Value one() { return 1.0; }
    static Value plus(Value a, Value b) { return a + b; }
    static Value times(Value a, Value b) { return a * b; }
    static Value complement(Value w) { return 1.0 - w; }
};

// Most-probable-model instance: plus = max, times = *. No negation
// complement exists; asking for one is a domain error.
struct MaxTimesSemiring {
    using Value = double;
    static constexpr const char* name = "max-times";
    static constexpr bool has_complement = false;

    static Value zero() { return 0.0; }
    static Value one() { return 1.0; }
    static Value plus(Value a, Value b) { return std::max(a, b); }
    static Value times(Value a, Value b) { return a * b; }
};

static_assert(Semiring<ProbabilitySemiring>);
static_assert(Semiring<MaxTimesSemiring>);

// Weight contributed by a signal literal given the signal's positive
// weight. For negated literals this needs the instance's complement rule;
// probability additionally requires the positive weight to lie in [0,1]
// or the complement would not be a probability.
template <Semiring S>
typename S::Value literal_weight(typename S::Value positive_weight, bool negated) {
    if (!negated) return positive_weight;
    if constexpr (S::has_complement) {
        if constexpr (std::same_as<S, ProbabilitySemiring>) {
            if (positive_weight < 0.0 || positive_weight > 1.0) {
                throw DomainError("literal_weight: weight " + std::to_string(positive_weight) +
                                  " outside [0,1], complement undefined");
            }
        }
        return S::complement(positive_weight);
    } else {
        throw DomainError(std::string("literal_weight: semiring '") + S::name +
                          "' has no negation complement; negated literals need explicit weights");
    }
}

} // namespace resin
