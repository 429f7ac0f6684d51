#include <cmath>

#include "doctest.h"
#include "endow/ode.hpp"

using namespace endow;

namespace {

// Reference crossings from a fixed-step RK4 integration (tests/oracles/oracles.py).
struct Crossing {
    double b1, b2, b3, R, qstar, nstar;
};
const Crossing kCrossings[] = {
    {1, 1, 0.4, 0.5, 0.4695222649083579, 0.961208336329497},
    {1, 1.3, 0.8, 0.5, 0.9359343512919558, 0.8446195369652911},
    {1, 1, 3, 2, 0.799311130466721, 2.120136824824188},
    {1, 1.5, 2.5, 2, 0.8657882890706384, 1.6652919996928692},
};

}  // namespace

TEST_CASE("initial slope") {
    const CoefficientSet cs{1, 1, 0.4, 0.5};
    const double x = initial_slope(cs);
    CHECK(x == doctest::Approx(-0.13898669190297497).epsilon(1e-13));
    CHECK(std::abs(cs.Phi(x)) < 1e-14);
    const CoefficientSet hi{1, 1, 3, 2};
    CHECK(std::abs(hi.Phi(initial_slope(hi))) < 1e-12);
}

TEST_CASE("crossings against the oracle") {
    for (const auto& c : kCrossings) {
        CAPTURE(c.b3);
        const OdeSolution sol = integrate_n(CoefficientSet{c.b1, c.b2, c.b3, c.R});
        CHECK(sol.terminated_by == Termination::CrossedM);
        CHECK(std::abs(sol.qstar - c.qstar) < 1e-9);
        CHECK(std::abs(sol.n_qstar - c.nstar) < 1e-9);
        CHECK(std::abs(sol.n(sol.qstar) - sol.cs.m(sol.qstar)) < 1e-8);
    }
}

TEST_CASE("no crossing above b3_crit") {
    const OdeSolution sol = integrate_n(CoefficientSet{1, 1.3, 1.0, 0.5});
    CHECK(sol.terminated_by == Termination::ReachedOne);
    CHECK(sol.qstar == 1.0);
}

TEST_CASE("F forms agree") {
    const CoefficientSet cs{0.8, 1.7, 0.6, 0.5};
    for (double q : {0.1, 0.3, 0.6, 0.9}) {
        const double n = 0.5 * (cs.m(q) + cs.ell(q));
        const double c = F_formC(cs, q, n);
        CHECK(F_formA(cs, q, n) == doctest::Approx(c).epsilon(1e-10));
        CHECK(F_formB(cs, q, n) == doctest::Approx(c).epsilon(1e-10));
        CHECK(F_delta(cs, q, n - cs.m(q)) == doctest::Approx(c).epsilon(1e-10));
    }
    const CoefficientSet one{0.8, 1.0, 0.6, 0.5};
    const double q = 0.4, d = 0.01;
    CHECK(F_simplified(one, q, d) == doctest::Approx(F_delta(one, q, d)).epsilon(1e-12));
}

TEST_CASE("b3_crit at b2 = 1") {
    CHECK(find_b3_crit(1, 1, 0.5) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(find_b3_crit(0.2, 1, 0.5) == doctest::Approx(0.9).epsilon(1e-4));
    CHECK(find_b3_crit(1, 1, 2) == doctest::Approx(4.0).epsilon(1e-4));
}
