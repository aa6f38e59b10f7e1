#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "subexp/limits.hpp"

using namespace subexp;

namespace {

CredalDomain two_state() {
    return build_domain(DomainSpec{2, {{"0.2", "0.5", 0.3}}, SimplexPolicy::Enforce, 0.0});
}

/// 12-state truncation of the geometric model f_i = 2^-i, c_i = 2^-i
/// (so theta_i in [2^-i, 2^-i + 2^-i]); the residual state carries at most
/// 2^-11 and the worst-case mass of states >= N is 2^(1-N).
CredalDomain geometric_domain() {
    DomainSpec spec;
    spec.n_states = 12;
    spec.policy = SimplexPolicy::Enforce;
    for (int i = 1; i <= 11; ++i) {
        double f = std::ldexp(1.0, -i);
        spec.bounds.push_back({subexp::detail::format_literal(f),
                               subexp::detail::format_literal(2.0 * f),
                               f});
    }
    return build_domain(spec);
}

} // namespace

TEST_CASE("monotone harness: scaled positive variable", "[limits]") {
    CredalDomain d = two_state();
    RvSequence seq;
    seq.kind = SeqKind::ScaleOneMinusInvM;
    seq.limit = RandomVariable{{3.0, 1.0}};
    seq.declared = Monotonicity::Increasing;

    // the residual gap at m_max is 2/m_max, so the tolerance must cover it
    HarnessReport rep = monotone_harness(seq, d, 40, 0.051);
    CHECK(rep.passed);
    CHECK(rep.final_gap == Catch::Approx(0.05).margin(1e-9));
    REQUIRE(rep.trace.size() == 40);
    // closed form by positive homogeneity: E[X_m] = 2 (1 - 1/m)
    for (const TraceRow& row : rep.trace)
        CHECK(row.value == Catch::Approx(2.0 * (1.0 - 1.0 / row.m)).margin(1e-9));
    CHECK(rep.limit_value == Catch::Approx(2.0).margin(1e-9));
    CHECK(rep.final_gap <= 2.0 / 40.0 + 1e-9);
}

TEST_CASE("monotone harness: constant sequence", "[limits]") {
    CredalDomain d = two_state();
    RvSequence seq;
    seq.kind = SeqKind::Constant;
    seq.limit = RandomVariable{{3.0, 1.0}};
    seq.declared = Monotonicity::Increasing;
    HarnessReport rep = monotone_harness(seq, d, 10, 1e-9);
    CHECK(rep.passed);
    for (const TraceRow& row : rep.trace) CHECK(row.value == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("monotone harness: decreasing tail indicators", "[limits]") {
    CredalDomain d = geometric_domain();
    RvSequence seq;
    seq.kind = SeqKind::TailIndicator;
    seq.limit = RandomVariable::constant(0.0, 12);
    seq.declared = Monotonicity::Decreasing;
    EngineOptions opts;
    opts.grid_resolution = 2; // indicator objective is linear, vertices suffice
    HarnessReport rep = monotone_harness(seq, d, 11, 1e-3, ExpectationSide::Upper, opts);
    CHECK(rep.passed);
    // E[I_{states > m}] = 2^-m: all mass above the head's lower bounds
    for (const TraceRow& row : rep.trace) {
        INFO("m=" << row.m);
        CHECK(row.value == Catch::Approx(std::ldexp(1.0, -row.m)).margin(1e-9));
    }
}

TEST_CASE("monotone harness rejects a violating sequence", "[limits]") {
    CredalDomain d = two_state();
    RvSequence seq;
    seq.kind = SeqKind::AlternatingShift; // not monotone
    seq.limit = RandomVariable{{3.0, 1.0}};
    seq.declared = Monotonicity::Increasing;
    CHECK_THROWS_AS(monotone_harness(seq, d, 10, 1e-6), MonotonicityViolated);
}

TEST_CASE("increasing and decreasing harnesses are dual", "[limits]") {
    CredalDomain d = two_state();
    RvSequence inc;
    inc.kind = SeqKind::ScaleOneMinusInvM;
    inc.limit = RandomVariable{{3.0, 1.0}};
    inc.declared = Monotonicity::Increasing;
    HarnessReport up = monotone_harness(inc, d, 25, 1e-6, ExpectationSide::Upper);

    RvSequence dec;
    dec.kind = SeqKind::ScaleOneMinusInvM;
    dec.limit = RandomVariable{{-3.0, -1.0}};
    dec.declared = Monotonicity::Decreasing;
    HarnessReport down = monotone_harness(dec, d, 25, 1e-6, ExpectationSide::Lower);

    REQUIRE(up.trace.size() == down.trace.size());
    for (std::size_t k = 0; k < up.trace.size(); ++k)
        CHECK(down.trace[k].value == Catch::Approx(-up.trace[k].value).margin(1e-12));
    CHECK(down.limit_value == Catch::Approx(-up.limit_value).margin(1e-12));
}

TEST_CASE("dominated harness: alternating shift converges", "[limits]") {
    CredalDomain d = two_state();
    RvSequence seq;
    seq.kind = SeqKind::AlternatingShift;
    seq.limit = RandomVariable{{3.0, 1.0}};
    seq.dominating_bound = RandomVariable{{4.0, 2.0}}; // |X| + 1
    HarnessReport rep = dominated_harness(seq, d, 400, 0.01);
    CHECK(rep.passed);
    CHECK(rep.limit_value == Catch::Approx(2.0).margin(1e-9));
    // constant translation: E[X_m] = 2 + (-1)^m / m
    for (const TraceRow& row : rep.trace) {
        double shift = (row.m % 2 == 0 ? 1.0 : -1.0) / row.m;
        CHECK(row.value == Catch::Approx(2.0 + shift).margin(1e-9));
    }
}

TEST_CASE("dominated harness: constant sequence passes immediately", "[limits]") {
    CredalDomain d = two_state();
    RvSequence seq;
    seq.kind = SeqKind::Constant;
    seq.limit = RandomVariable{{3.0, 1.0}};
    seq.dominating_bound = RandomVariable{{3.0, 1.0}};
    HarnessReport rep = dominated_harness(seq, d, 8, 1e-9);
    CHECK(rep.passed);
}

TEST_CASE("dominated harness: oscillating pair reports NonConvergence", "[limits]") {
    CredalDomain d = two_state();
    RvSequence seq;
    seq.kind = SeqKind::AlternatingPair;
    seq.limit = RandomVariable{{3.0, 1.0}};
    seq.companion = RandomVariable{{1.0, 3.0}};
    seq.dominating_bound = RandomVariable{{3.0, 3.0}};
    HarnessReport rep = dominated_harness(seq, d, 60, 0.01);
    CHECK_FALSE(rep.passed);
    CHECK(rep.detail.find("NonConvergence") != std::string::npos);
}

TEST_CASE("dominated harness rejects an escaping sequence", "[limits]") {
    CredalDomain d = two_state();
    RvSequence seq;
    seq.kind = SeqKind::AlternatingShift;
    seq.limit = RandomVariable{{3.0, 1.0}};
    seq.dominating_bound = RandomVariable{{3.0, 1.0}}; // too tight for X + 1/m
    CHECK_THROWS_AS(dominated_harness(seq, d, 10, 0.01), DominationViolated);
}

TEST_CASE("fatou: oscillating pair", "[limits]") {
    CredalDomain d = two_state();
    RvSequence seq;
    seq.kind = SeqKind::AlternatingPair;
    seq.limit = RandomVariable{{3.0, 1.0}};
    seq.companion = RandomVariable{{1.0, 3.0}};
    RandomVariable lower_bound{{0.0, 0.0}};
    HarnessReport rep = fatou_harness(seq, d, 40, 1e-9, FatouCase::LowerBounded, lower_bound);
    CHECK(rep.passed);
    // E[liminf] = E[(1,1)] = 1; window inf of the trace = min(2.0, 2.6) = 2.0
    CHECK(rep.limit_value == Catch::Approx(1.0).margin(1e-9));
    CHECK(rep.final_gap == Catch::Approx(1.0 - 2.0).margin(1e-9));
}

TEST_CASE("fatou: limsup side", "[limits]") {
    CredalDomain d = two_state();
    RvSequence seq;
    seq.kind = SeqKind::AlternatingPair;
    seq.limit = RandomVariable{{3.0, 1.0}};
    seq.companion = RandomVariable{{1.0, 3.0}};
    RandomVariable upper_bound{{3.0, 3.0}};
    HarnessReport rep = fatou_harness(seq, d, 40, 1e-9, FatouCase::UpperBounded, upper_bound);
    // E[limsup] = E[(3,3)] = 3 >= limsup E[X_m] = max(2.0, 2.6)
    CHECK(rep.passed);
    CHECK(rep.limit_value == Catch::Approx(3.0).margin(1e-9));
}

TEST_CASE("fatou: convergent sequence gives equality within tolerance", "[limits]") {
    CredalDomain d = two_state();
    RvSequence seq;
    seq.kind = SeqKind::ScaleOneMinusInvM;
    seq.limit = RandomVariable{{3.0, 1.0}};
    RandomVariable lower_bound{{0.0, 0.0}};
    HarnessReport rep = fatou_harness(seq, d, 60, 1e-9, FatouCase::LowerBounded, lower_bound);
    CHECK(rep.passed);
    // liminf surrogate window starts at m = 30: E[inf] = 2 (1 - 1/30)
    CHECK(rep.limit_value == Catch::Approx(2.0 * (1.0 - 1.0 / 30.0)).margin(1e-9));
    CHECK(std::fabs(rep.final_gap) <= 1e-9);
}

TEST_CASE("regularity harness on the geometric domain", "[limits]") {
    CredalDomain d = geometric_domain();
    // the infinite model continues f_i + c_i = 2^(1-i) past the truncation
    double remainder = std::ldexp(1.0, -10); // sum_{i >= 12} 2^(1-i)
    RegularityReport rep = regularity_harness(d, {0.1, 0.01}, remainder, 2);
    CHECK(rep.passed);
    REQUIRE(rep.rows.size() == 2);
    CHECK(rep.rows[0].truncation_level == 6);
    CHECK(rep.rows[0].tail_sup == Catch::Approx(std::ldexp(1.0, -6)).margin(1e-9));
    CHECK(rep.rows[1].truncation_level == 9);
    CHECK(rep.rows[1].tail_sup == Catch::Approx(std::ldexp(1.0, -9)).margin(1e-9));
}

TEST_CASE("regularity harness on a finite two-state domain", "[limits]") {
    CredalDomain d = two_state();
    RegularityReport rep = regularity_harness(d, {0.01}, 0.0, 33);
    CHECK(rep.passed);
    REQUIRE(rep.rows.size() == 1);
    CHECK(rep.rows[0].truncation_level == 2);
    CHECK(rep.rows[0].tail_sup == 0.0); // no states beyond omega_2
}

TEST_CASE("regularity: epsilon above the full budget passes at N = 1", "[limits]") {
    CredalDomain d = two_state();
    RegularityReport rep = regularity_harness(d, {2.0}, 0.0, 9);
    REQUIRE(rep.rows.size() == 1);
    CHECK(rep.rows[0].truncation_level == 1);
    CHECK(rep.rows[0].pass); // sup mass above omega_1 is 0.8 < 2
}
