#include <cmath>

#include "doctest.h"
#include "endow/errors.hpp"
#include "endow/policy.hpp"

using namespace endow;

TEST_CASE("sell-all policy") {
    const AuxParams ap = aux_from_b(1, 1.3, -0.5, 0.5);
    const Policy pol = build_policy(ap, 0.5);
    CHECK(pol.regime.regime == Regime::SellAll);
    CHECK(pol.zstar == 0.0);
    CHECK(certainty_equivalent(pol, 2.0, 1.5, 3.0) == 4.5);
    const double g0 = std::pow(ap.b1 / (ap.b4 * 0.5), -0.5);
    CHECK(value(pol, 2.0, 1.5, 3.0) == doctest::Approx(g0 * std::pow(6.5, 0.5) / 0.5).epsilon(1e-14));
}

TEST_CASE("finite ratio: smooth fit and sale") {
    const Policy pol = build_policy(aux_from_b(1, 1, 0.4, 0.5), 0.5);
    REQUIRE(pol.regime.regime == Regime::FiniteRatio);
    const double zs = pol.zstar;
    CHECK(zs == doctest::Approx(0.4695222649083579 / (1 - 0.4695222649083579)).epsilon(1e-8));
    const double d = 1e-10 * zs;
    CHECK(pol.g(zs - d) == doctest::Approx(pol.g(zs + d)).epsilon(1e-7));
    CHECK(pol.gp(zs - d) == doctest::Approx(pol.gp(zs + d)).epsilon(1e-7));
    CHECK(pol.gpp(zs - d) == doctest::Approx(pol.gpp(zs + d)).epsilon(1e-7));
    const auto [th, x] = initial_sale(pol, 1.0, 1.0, 3.0);
    CHECK(th < 3.0);
    CHECK(th / x == doctest::Approx(zs).epsilon(1e-12));
    CHECK(x + th == doctest::Approx(4.0).epsilon(1e-14));
    // No sale below the boundary.
    const auto [th2, x2] = initial_sale(pol, 1.0, 1.0, 0.5 * zs);
    CHECK(th2 == 0.5 * zs);
    CHECK(x2 == 1.0);
}

TEST_CASE("feedback rules are positive") {
    const Policy pol = build_policy(aux_from_b(1, 1.3, 0.8, 0.5), 0.5);
    for (double z : default_zgrid(pol, 20)) {
        CHECK(pol.consumption_ratio(z) > 0);
        CHECK(pol.price_ratio(z) > 0);
    }
    CHECK(feedback_consumption(pol, 1.0, 1.0, 0.5) > 0);
}

TEST_CASE("no finite ratio") {
    const Policy pol = build_policy(aux_from_b(1, 1.3, 5, 2), 2);
    REQUIRE(pol.regime.regime == Regime::NoFiniteRatio);
    CHECK(std::isinf(pol.zstar));
    // Price rises with the holding.
    const double p1 = certainty_equivalent(pol, 1.0, 1.0, 1.0);
    const double p2 = certainty_equivalent(pol, 1.0, 1.0, 2.0);
    CHECK(p1 > 0);
    CHECK(p2 > p1);
    // gamma inverts h.
    for (double u : {-2.0, 0.0, 1.5, 4.0}) CHECK(pol.gamma(pol.h(u)) == doctest::Approx(u).epsilon(1e-7));
}

TEST_CASE("verifiers pass on a finite-ratio set") {
    const Policy pol = build_policy(aux_from_b(1, 1.5, 2.5, 2), 2);
    const auto zg = default_zgrid(pol, 50);
    const ResidualReport h = verify_hjb(pol, zg);
    CHECK(h.max_hjb <= 1e-6);
    CHECK(h.min_sale_op >= -1e-9);
    const ShapeReport s = verify_shape(pol, zg);
    CHECK(s.max_hessian <= 1e-9);
    CHECK(s.monotone);
}

TEST_CASE("ill-posed sets have no policy") {
    CHECK_THROWS(value(build_policy(aux_from_b(1, 1.3, 2.7, 0.5), 0.5), 1, 1, 1));
}
