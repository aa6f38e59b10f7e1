#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "subexp/independence.hpp"

using namespace subexp;

namespace {

// Example 3.1 setup: two states, theta1 in [1/3, 2/3], X = (1,0), Y = (0,1)
CredalDomain example31_domain() {
    return build_domain(DomainSpec{
        2, {{"0.33333333333333333", "0.66666666666666667", 0.4}}, SimplexPolicy::Enforce, 0.0});
}

const RandomVariable kX{{1.0, 0.0}};
const RandomVariable kY{{0.0, 1.0}};

} // namespace

TEST_CASE("per-measure independence reproduces Example 3.1", "[independence]") {
    CredalDomain d = example31_domain();
    TestFunction phi = make_test_function("(x - 0.5)*y*y", 1.0, 2.0, true);
    SublinearResult r = per_theta_independent_expectation(phi, kX, kY, d, 101);
    CHECK(r.value == Catch::Approx(1.0 / 18.0).margin(1e-9));
    CHECK(r.argmax_theta[0] == Catch::Approx(2.0 / 3.0).margin(1e-9));

    TestFunction phi2 = make_test_function("x*(1 - y)", 1.0, 2.0, true);
    SublinearResult r2 = per_theta_independent_expectation(phi2, kX, kY, d, 101);
    CHECK(r2.value == Catch::Approx(4.0 / 9.0).margin(1e-9));

    TestFunction c = make_test_function("0.75 + 0*x + 0*y", 1.0, 1.0, true);
    SublinearResult rc = per_theta_independent_expectation(c, kX, kY, d, 101);
    CHECK(rc.value == Catch::Approx(0.75).margin(1e-12));
}

TEST_CASE("Peng independence reproduces Example 3.1", "[independence]") {
    CredalDomain d = example31_domain();
    TestFunction phi = make_test_function("(x - 0.5)*y*y", 1.0, 2.0, true);
    SublinearResult r = peng_independent_expectation(phi, kX, kY, d, 101);
    CHECK(r.value == Catch::Approx(1.0 / 6.0).margin(1e-9));

    TestFunction phi2 = make_test_function("x*(1 - y)", 1.0, 2.0, true);
    SublinearResult r2 = peng_independent_expectation(phi2, kX, kY, d, 101);
    CHECK(r2.value == Catch::Approx(4.0 / 9.0).margin(1e-9));

    // phi depending on y only collapses to the plain upper expectation
    TestFunction only_y = make_test_function("y*y - 0.25 + 0*x", 1.0, 2.0, true);
    SublinearResult ry = peng_independent_expectation(only_y, kX, kY, d, 101);
    RandomVariable y2{{kY.values[0] * kY.values[0] - 0.25, kY.values[1] * kY.values[1] - 0.25}};
    SublinearResult direct = upper_expectation(y2, d, Method::NestedExact);
    CHECK(ry.value == Catch::Approx(direct.value).margin(1e-9));
}

TEST_CASE("independence gap on Example 3.1", "[independence]") {
    CredalDomain d = example31_domain();
    TestFunction phi = make_test_function("(x - 0.5)*y*y", 1.0, 2.0, true);
    CHECK(independence_gap(phi, kX, kY, d, 101) == Catch::Approx(1.0 / 9.0).margin(1e-9));
    TestFunction phi2 = make_test_function("x*(1 - y)", 1.0, 2.0, true);
    CHECK(independence_gap(phi2, kX, kY, d, 101) == Catch::Approx(0.0).margin(1e-9));
    TestFunction c = make_test_function("0.3 + 0*x*y", 1.0, 1.0, true);
    CHECK(independence_gap(c, kX, kY, d, 101) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("per-measure independence is symmetric in X and Y", "[independence]") {
    // swapping the variables together with the argument roles leaves the
    // double sum unchanged
    CredalDomain d = build_domain(DomainSpec{2, {{"0.2", "0.5", 0.3}}, SimplexPolicy::Enforce, 0.0});
    TestFunction phi = make_test_function("(x - 0.5)*y*y + 0.25*x", 2.0, 3.0, true);
    TestFunction swapped = make_test_function("(y - 0.5)*x*x + 0.25*y", 2.0, 3.0, true);
    RandomVariable a{{1.0, -0.5}};
    RandomVariable b{{0.25, 2.0}};
    double v1 = per_theta_independent_expectation(phi, a, b, d, 101).value;
    double v2 = per_theta_independent_expectation(swapped, b, a, d, 101).value;
    CHECK(v1 == Catch::Approx(v2).margin(1e-9));
}

TEST_CASE("Peng independence is asymmetric: recorded witness", "[independence]") {
    // domain theta1 in [0.2, 0.5], X = (1,0), Y = (0,1), phi = (x - 1/2) y^2:
    // inner-over-Y ordering gives 0.075; swapping the roles (inner over X,
    // same functional) gives 0, since phi(x, 0) = 0 and sup(theta1 - 1/2) = 0
    CredalDomain d = build_domain(DomainSpec{2, {{"0.2", "0.5", 0.3}}, SimplexPolicy::Enforce, 0.0});
    TestFunction phi = make_test_function("(x - 0.5)*y*y", 1.0, 2.0, true);
    TestFunction role_swapped = make_test_function("(y - 0.5)*x*x", 1.0, 2.0, true);
    double xy = peng_independent_expectation(phi, kX, kY, d, 101).value;
    double yx = peng_independent_expectation(role_swapped, kY, kX, d, 101).value;
    CHECK(xy == Catch::Approx(0.075).margin(1e-9));
    CHECK(yx == Catch::Approx(0.0).margin(1e-9));
    CHECK(std::fabs(xy - yx) > 0.05);
}

TEST_CASE("ordering: per-theta never exceeds Peng", "[independence]") {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> val(-2.0, 2.0);
    const char* templates[] = {
        "(x - %a)*y*y",
        "x*y + %a*x",
        "min(x, y) + %a",
        "abs(x - y)*%a",
        "(x + y)*(x - %a)",
    };
    for (int trial = 0; trial < 120; ++trial) {
        double a = unit(gen);
        double b = a + unit(gen) * (1.0 - a);
        DomainSpec spec{2,
                        {{detail::format_literal(a * 0.9), detail::format_literal(b), 1.0}},
                        SimplexPolicy::Enforce,
                        0.0};
        CredalDomain d = build_domain(spec);
        std::string text = templates[trial % 5];
        std::string coef = detail::format_literal(unit(gen));
        text.replace(text.find("%a"), 2, coef);
        TestFunction phi = make_test_function(text, 100.0, 100.0, true);
        RandomVariable x{{val(gen), val(gen)}};
        RandomVariable y{{val(gen), val(gen)}};
        SublinearResult per = per_theta_independent_expectation(phi, x, y, d, 201);
        SublinearResult peng = peng_independent_expectation(phi, x, y, d, 201);
        INFO(text << "  per=" << per.value << " peng=" << peng.value);
        CHECK(per.value <= peng.value + per.certified_error + peng.certified_error + 1e-9);
    }
}

TEST_CASE("reduction: univariate phi collapses both notions", "[independence]") {
    CredalDomain d = example31_domain();
    TestFunction phi = make_test_function("x*x - 0.5*x + 0*y", 2.0, 3.0, true);
    RandomVariable fx{{1.0 - 0.5, 0.0}}; // phi applied statewise to X = (1,0)
    SublinearResult direct = upper_expectation(fx, d, Method::NestedExact);
    SublinearResult per = per_theta_independent_expectation(phi, kX, kY, d, 301);
    SublinearResult peng = peng_independent_expectation(phi, kX, kY, d, 301);
    CHECK(per.value == Catch::Approx(direct.value).margin(1e-9));
    CHECK(peng.value == Catch::Approx(direct.value).margin(1e-9));
}

TEST_CASE("identical distribution: reflexivity and mirrored relabeling", "[independence]") {
    CredalDomain d1 = build_domain(DomainSpec{2, {{"0.2", "0.5", 0.3}}, SimplexPolicy::Enforce, 0.0});
    RandomVariable x1{{1.0, 0.0}};
    std::vector<TestFunction> family = default_phi_family(0.5, 2.0, 2.0);

    DistributionCheckReport self = identically_distributed_check(x1, d1, x1, d1, family, 1e-9);
    CHECK(self.consistent);

    // mirrored domain: theta1 in [0.5, 0.8] puts the same law on X' = (0,1)
    CredalDomain d2 = build_domain(DomainSpec{2, {{"0.5", "0.8", 0.3}}, SimplexPolicy::Enforce, 0.0});
    RandomVariable x2{{0.0, 1.0}};
    DistributionCheckReport mirrored = identically_distributed_check(x1, d1, x2, d2, family, 1e-9);
    CHECK(mirrored.consistent);
}

TEST_CASE("identical distribution: the family must include -x to separate", "[independence]") {
    CredalDomain d1 = build_domain(DomainSpec{2, {{"0.2", "0.5", 0.3}}, SimplexPolicy::Enforce, 0.0});
    CredalDomain d2 = build_domain(DomainSpec{2, {{"0.3", "0.5", 0.2}}, SimplexPolicy::Enforce, 0.0});
    RandomVariable x{{1.0, 0.0}};

    std::vector<TestFunction> only_x{make_test_function("x", 1.0, 1.0, false)};
    DistributionCheckReport weak = identically_distributed_check(x, d1, x, d2, only_x, 1e-9);
    CHECK(weak.consistent); // upper expectations agree at 0.5

    std::vector<TestFunction> with_neg{make_test_function("x", 1.0, 1.0, false),
                                       make_test_function("-x", 1.0, 1.0, false)};
    DistributionCheckReport strong = identically_distributed_check(x, d1, x, d2, with_neg, 1e-9);
    CHECK_FALSE(strong.consistent); // lower expectations 0.2 vs 0.3 separate them
    REQUIRE(strong.rows.size() == 2);
    CHECK(strong.rows[0].pass);
    CHECK_FALSE(strong.rows[1].pass);
}

TEST_CASE("test function validation", "[independence]") {
    TestFunction ok = make_test_function("min(x, 0.5)", 1.0, 1.0, false);
    CHECK_NOTHROW(ok.validate(-1.0, 1.0));
    TestFunction bad_m = make_test_function("2*x", 1.0, 2.0, false);
    CHECK_THROWS_AS(bad_m.validate(-2.0, 2.0), SpecError);
    TestFunction bad_l = make_test_function("x*x", 100.0, 0.1, false);
    CHECK_THROWS_AS(bad_l.validate(0.0, 10.0), SpecError);
}
