#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "subexp/lln.hpp"

using namespace subexp;

namespace {

CredalDomain two_state() {
    return build_domain(DomainSpec{2, {{"0.2", "0.5", 0.3}}, SimplexPolicy::Enforce, 0.0});
}

CredalDomain singleton_domain(double p) {
    std::string s = subexp::detail::format_literal(p);
    return build_domain(DomainSpec{2, {{s, s, 0.0}}, SimplexPolicy::Enforce, 0.0});
}

/// Independent oracle: E[phi(Binomial(n, p)/n)] by the recursive pmf
/// p_{k+1} = p_k (n-k)/(k+1) * p/(1-p).
double binomial_phi_expectation(int n, double p, const TestFunction& phi) {
    if (p <= 0.0) return phi(0.0);
    if (p >= 1.0) return phi(1.0);
    double pk = std::pow(1.0 - p, n);
    double total = pk * phi(0.0);
    for (int k = 1; k <= n; ++k) {
        pk *= static_cast<double>(n - k + 1) / static_cast<double>(k) * (p / (1.0 - p));
        total += pk * phi(static_cast<double>(k) / static_cast<double>(n));
    }
    return total;
}

} // namespace

TEST_CASE("mu_bounds on the worked examples", "[lln]") {
    CredalDomain d = two_state();
    MaximalDistribution md = mu_bounds(RandomVariable{{1.0, 0.0}}, d);
    CHECK(md.mu_lower == Catch::Approx(0.2).margin(1e-12));
    CHECK(md.mu_upper == Catch::Approx(0.5).margin(1e-12));

    MaximalDistribution mc = mu_bounds(RandomVariable::constant(3.5, 2), d);
    CHECK(mc.mu_lower == Catch::Approx(3.5).margin(1e-12));
    CHECK(mc.mu_upper == Catch::Approx(3.5).margin(1e-12));

    CredalDomain s = singleton_domain(0.3);
    MaximalDistribution ms = mu_bounds(RandomVariable{{1.0, 0.0}}, s);
    CHECK(ms.mu_lower == Catch::Approx(0.3).margin(1e-12));
    CHECK(ms.mu_upper == Catch::Approx(0.3).margin(1e-12));
}

TEST_CASE("maximal_dist_eval finds the interval maximum", "[lln]") {
    TestFunction id = make_test_function("x", 1.0, 1.0, false);
    CHECK(maximal_dist_eval(id, {0.2, 0.5}) == Catch::Approx(0.5).margin(1e-9));

    TestFunction vertex = make_test_function("-(x - 0.35)*(x - 0.35)", 1.0, 1.0, false);
    CHECK(maximal_dist_eval(vertex, {0.2, 0.5}) == Catch::Approx(0.0).margin(1e-9));

    TestFunction any = make_test_function("x*x - x", 1.0, 2.0, false);
    CHECK(maximal_dist_eval(any, {0.4, 0.4}) == Catch::Approx(0.4 * 0.4 - 0.4).margin(1e-12));
}

TEST_CASE("iid_sum_functional at n = 1 reduces to the upper expectation", "[lln]") {
    CredalDomain d = two_state();
    RandomVariable x{{1.0, 0.0}};
    TestFunction phi = make_test_function("-(x - 0.35)*(x - 0.35)", 1.0, 1.0, false);
    IidResult r = iid_sum_functional(phi, x, d, 1, LlnMethod::ExactDP, 101);
    EngineOptions opts;
    opts.grid_resolution = 101;
    SublinearResult direct = upper_expectation(compose(phi, x), d, Method::Grid, opts);
    CHECK(r.value == Catch::Approx(direct.value).margin(1e-9));
}

TEST_CASE("per-theta classical consistency against the binomial oracle", "[lln]") {
    TestFunction phi = make_test_function("-(x - 0.35)*(x - 0.35)", 1.0, 1.0, false);
    CredalDomain frozen = singleton_domain(0.3);
    for (int n : {5, 40, 160}) {
        IidResult dp = iid_sum_functional(phi, RandomVariable{{1.0, 0.0}}, frozen, n,
                                          LlnMethod::ExactDP, 11);
        double oracle = binomial_phi_expectation(n, 0.3, phi);
        INFO("n=" << n);
        CHECK(dp.value == Catch::Approx(oracle).margin(1e-10));
    }
}

TEST_CASE("LLN gaps on the binomial example shrink toward the target", "[lln]") {
    // frozen oracle values for grid resolution 101 on theta1 in [0.2, 0.5]:
    // sup_theta -(theta(1-theta)/n + (theta - 0.35)^2) over the grid
    CredalDomain d = two_state();
    RandomVariable x{{1.0, 0.0}};
    TestFunction phi = make_test_function("-(x - 0.35)*(x - 0.35)", 1.0, 1.0, false);

    LlnTable table = lln_table(phi, x, d, {10, 50, 200}, LlnMethod::ExactDP, 101);
    CHECK(table.target == Catch::Approx(0.0).margin(1e-9));
    REQUIRE(table.rows.size() == 3);
    CHECK(table.rows[0].gap == Catch::Approx(0.0225016).margin(1e-7));
    CHECK(table.rows[1].gap == Catch::Approx(0.00454082).margin(1e-8));
    CHECK(table.rows[2].gap == Catch::Approx(0.0011375).margin(1e-8));
    CHECK(table.rows[0].gap > table.rows[1].gap);
    CHECK(table.rows[1].gap > table.rows[2].gap);
    CHECK(table.rows[2].gap < 0.01);
    CHECK(table.trend_ok);

    // cross-check every row against the independent binomial oracle
    for (const LlnRow& row : table.rows) {
        double best = -1e300;
        for (int k = 0; k <= 100; ++k) {
            double p = 0.2 + 0.3 * static_cast<double>(k) / 100.0;
            best = std::max(best, binomial_phi_expectation(row.n, p, phi));
        }
        INFO("n=" << row.n);
        CHECK(row.value == Catch::Approx(best).margin(1e-10));
    }
}

TEST_CASE("constant phi has zero gap for every n", "[lln]") {
    CredalDomain d = two_state();
    RandomVariable x{{1.0, 0.0}};
    TestFunction phi = make_test_function("0.125 + 0*x", 1.0, 1.0, false);
    LlnTable table = lln_table(phi, x, d, {1, 7, 20}, LlnMethod::ExactDP, 21);
    for (const LlnRow& row : table.rows) {
        CHECK(row.value == Catch::Approx(0.125).margin(1e-12));
        CHECK(row.gap <= 1e-12);
    }
}

TEST_CASE("singleton domain reduces to the classical LLN", "[lln]") {
    CredalDomain s = singleton_domain(0.3);
    RandomVariable x{{1.0, 0.0}};
    TestFunction phi = make_test_function("-(x - 0.3)*(x - 0.3)", 1.0, 1.0, false);
    LlnTable table = lln_table(phi, x, s, {10, 80, 200}, LlnMethod::ExactDP, 5);
    CHECK(table.target == Catch::Approx(0.0).margin(1e-9)); // phi(mu) at mu = 0.3
    CHECK(table.rows.back().gap < table.rows.front().gap);
    CHECK(table.rows.back().gap < 0.002); // Var/n = 0.21/200
}

TEST_CASE("ExactDP enforces its feasibility contract", "[lln]") {
    CredalDomain d = two_state();
    TestFunction phi = make_test_function("x", 1.0, 1.0, false);
    CHECK_THROWS_AS(
        iid_sum_functional(phi, RandomVariable{{1.0, 0.0}}, d, 201, LlnMethod::ExactDP, 11),
        MethodInfeasible);
    CredalDomain four = build_domain(DomainSpec{4,
                                                {{"0.1", "0.2", 0.1}, {"0.1", "0.2", 0.1}, {"0.1", "0.2", 0.1}},
                                                SimplexPolicy::Enforce,
                                                0.0});
    CHECK_THROWS_AS(iid_sum_functional(phi, RandomVariable{{1.0, 0.0, 0.0, 0.0}}, four, 10,
                                       LlnMethod::ExactDP, 5),
                    MethodInfeasible);
}

TEST_CASE("Monte Carlo is deterministic for a fixed seed", "[lln]") {
    CredalDomain d = two_state();
    RandomVariable x{{1.0, 0.0}};
    TestFunction phi = make_test_function("-(x - 0.35)*(x - 0.35)", 1.0, 1.0, false);
    IidResult a = iid_sum_functional(phi, x, d, 50, LlnMethod::MonteCarlo, 11, 400, 42);
    IidResult b = iid_sum_functional(phi, x, d, 50, LlnMethod::MonteCarlo, 11, 400, 42);
    CHECK(a.value == b.value);
    CHECK(a.std_error == b.std_error);
    IidResult c = iid_sum_functional(phi, x, d, 50, LlnMethod::MonteCarlo, 11, 400, 43);
    CHECK(a.value != c.value);

    // the estimate lands near the exact value at this sample size
    IidResult exact = iid_sum_functional(phi, x, d, 50, LlnMethod::ExactDP, 11);
    CHECK(a.value == Catch::Approx(exact.value).margin(5e-3));
}

TEST_CASE("moment estimators: exact variant equals mu_bounds", "[lln]") {
    CredalDomain d = two_state();
    RandomVariable x{{1.0, 0.0}};
    auto [lo, hi] = moment_estimators(x, d, 50, 101, 0, 1);
    MaximalDistribution md = mu_bounds(x, d);
    CHECK(lo == Catch::Approx(md.mu_lower).margin(1e-12));
    CHECK(hi == Catch::Approx(md.mu_upper).margin(1e-12));
}

TEST_CASE("moment estimators: constant variable is exact at any sample size", "[lln]") {
    CredalDomain d = two_state();
    RandomVariable c = RandomVariable::constant(2.5, 2);
    auto [lo, hi] = moment_estimators(c, d, 20, 21, 3, 7);
    CHECK(lo == 2.5);
    CHECK(hi == 2.5);
}

TEST_CASE("moment estimators: seeded regression stays near the mean interval", "[lln]") {
    CredalDomain d = two_state();
    RandomVariable x{{1.0, 0.0}};
    auto [lo, hi] = moment_estimators(x, d, 10000, 101, 1, 2026);
    CHECK(std::fabs(lo - 0.2) < 0.02);
    CHECK(std::fabs(hi - 0.5) < 0.02);
}
