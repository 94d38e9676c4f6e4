#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "resin/semiring.hpp"

using resin::DomainError;
using resin::MaxTimesSemiring;
using resin::ProbabilitySemiring;

TEST_CASE("probability semiring basic algebra") {
    CHECK(ProbabilitySemiring::plus(0.3, 0.2) == Catch::Approx(0.5));
    CHECK(ProbabilitySemiring::times(0.3, 0.2) == Catch::Approx(0.06));
    CHECK(ProbabilitySemiring::zero() == 0.0);
    CHECK(ProbabilitySemiring::one() == 1.0);
}

TEST_CASE("max-times semiring basic algebra") {
    CHECK(MaxTimesSemiring::plus(0.3, 0.2) == 0.3);
    CHECK(MaxTimesSemiring::times(0.5, 0.5) == Catch::Approx(0.25));
    CHECK(MaxTimesSemiring::zero() == 0.0);
    CHECK(MaxTimesSemiring::one() == 1.0);
}

TEST_CASE("literal weights and negation complements") {
    CHECK(resin::literal_weight<ProbabilitySemiring>(0.3, false) == 0.3);
    CHECK(resin::literal_weight<ProbabilitySemiring>(0.3, true) == Catch::Approx(0.7));
    CHECK(resin::literal_weight<MaxTimesSemiring>(0.3, false) == 0.3);
    // max-times has no complement rule, probability rejects weights outside [0,1]
    CHECK_THROWS_AS(resin::literal_weight<MaxTimesSemiring>(0.3, true), DomainError);
    CHECK_THROWS_AS(resin::literal_weight<ProbabilitySemiring>(1.5, true), DomainError);
    CHECK_THROWS_AS(resin::literal_weight<ProbabilitySemiring>(-0.1, true), DomainError);
}

namespace {

template <class S>
void check_semiring_laws(unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double a = uniform(rng), b = uniform(rng), c = uniform(rng);
        CHECK(S::plus(S::plus(a, b), c) == Catch::Approx(S::plus(a, S::plus(b, c))).margin(1e-12));
        CHECK(S::times(S::times(a, b), c) == Catch::Approx(S::times(a, S::times(b, c))).margin(1e-12));
        CHECK(S::plus(a, b) == Catch::Approx(S::plus(b, a)).margin(1e-12));
        CHECK(S::times(a, b) == Catch::Approx(S::times(b, a)).margin(1e-12));
        CHECK(S::plus(a, S::zero()) == Catch::Approx(a).margin(1e-12));
        CHECK(S::times(a, S::one()) == Catch::Approx(a).margin(1e-12));
        CHECK(S::times(a, S::zero()) == S::zero());
        CHECK(S::times(a, S::plus(b, c)) ==
              Catch::Approx(S::plus(S::times(a, b), S::times(a, c))).margin(1e-12));
    }
}

} // namespace

TEST_CASE("semiring laws hold on random triples") {
    check_semiring_laws<ProbabilitySemiring>(101);
    check_semiring_laws<MaxTimesSemiring>(202);
}

TEST_CASE("probability complement sums to one") {
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double w = uniform(rng);
        const double s = ProbabilitySemiring::plus(w, resin::literal_weight<ProbabilitySemiring>(w, true));
        CHECK(std::abs(s - 1.0) <= 1e-15);
    }
}
