#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "subexp/expr.hpp"

using namespace subexp;

TEST_CASE("parses bound expressions from the worked examples", "[expr]") {
    BoundExpr a = parse_bound_expr("0.5 - t1", 2);
    CHECK(a.max_prefix_index == 1);
    CHECK(eval_expr(a, std::vector<double>{0.3}) == Catch::Approx(0.2));

    BoundExpr b = parse_bound_expr("sqrt(t1*(0.5-t1)) + 0.25", 2);
    CHECK(eval_expr(b, std::vector<double>{0.25}) == Catch::Approx(0.5));
}

TEST_CASE("rejects malformed input with a position", "[expr]") {
    try {
        parse_bound_expr("0.5 + + t1", 2);
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.pos == 6); // the second '+'
    }
    CHECK_THROWS_AS(parse_bound_expr("", 2), SyntaxError);
    CHECK_THROWS_AS(parse_bound_expr("0.5 +", 2), SyntaxError);
    CHECK_THROWS_AS(parse_bound_expr("(1 + 2", 2), SyntaxError);
    CHECK_THROWS_AS(parse_bound_expr("min(1)", 2), SyntaxError);
    CHECK_THROWS_AS(parse_bound_expr("foo(1)", 2), SyntaxError);
    CHECK_THROWS_AS(parse_bound_expr("1 2", 2), SyntaxError);
}

TEST_CASE("rejects out-of-scope variables", "[expr]") {
    CHECK_THROWS_AS(parse_bound_expr("t2", 2), VariableOutOfScope);
    CHECK_THROWS_AS(parse_bound_expr("t1 + t3", 3), VariableOutOfScope);
    CHECK_THROWS_AS(parse_bound_expr("x", 2), VariableOutOfScope); // bounds never see x
    CHECK_NOTHROW(parse_bound_expr("t1 + t2", 3));
    CHECK_THROWS_AS(parse_test_expr("y", false), VariableOutOfScope);
    CHECK_NOTHROW(parse_test_expr("x*y", true));
}

TEST_CASE("evaluates with standard precedence", "[expr]") {
    auto val = [](const char* s) { return eval_expr(parse_bound_expr(s, 1), {}); };
    CHECK(val("2 + 3 * 4") == 14.0);
    CHECK(val("(2 + 3) * 4") == 20.0);
    CHECK(val("-2 * 3") == -6.0);
    CHECK(val("2 - 3 - 4") == -5.0);
    CHECK(val("12 / 3 / 2") == 2.0);
    CHECK(val("min(3, max(1, 2))") == 2.0);
    CHECK(val("abs(-4)") == 4.0);
    CHECK(val("--3") == 3.0);
    CHECK(val("1e-3") == 0.001);
    CHECK(val("cos(0)") == 1.0);
    CHECK(val("sin(0)") == 0.0);
}

TEST_CASE("eval examples and domain errors", "[expr]") {
    BoundExpr sq = parse_bound_expr("sqrt(t1)", 2);
    CHECK(eval_expr(sq, std::vector<double>{0.25}) == 0.5);
    CHECK_THROWS_AS(eval_expr(sq, std::vector<double>{-0.1}), DomainError);
    BoundExpr dv = parse_bound_expr("1 / t1", 2);
    CHECK_THROWS_AS(eval_expr(dv, std::vector<double>{0.0}), DomainError);
}

TEST_CASE("printer round-trips the AST", "[expr]") {
    const char* samples[] = {
        "0.5 - t1",
        "sqrt(t1*(0.5-t1)) + 0.25",
        "-(t1 + t2)*0.5",
        "1 - 2 - 3",
        "2/(3/4)",
        "min(t1, 0.5) - max(-t1, abs(t2 - 0.25))",
        "t1*cos(t2) + 0.25",
        "-t1",
        "1 - (2 - 3)",
        "0.1 + 0.2*t1/(0.3 - t2)",
    };
    for (const char* s : samples) {
        BoundExpr once = parse_bound_expr(s, 5);
        std::string printed = to_string(once);
        BoundExpr twice = parse_bound_expr(printed, 5);
        INFO(s << "  ->  " << printed);
        CHECK(expr_equal(once, twice));
        CHECK(to_string(twice) == printed);
    }
}

TEST_CASE("printed form evaluates identically", "[expr]") {
    // evaluation is a pure function of the AST, so a reparsed canonical print
    // must reproduce results bit for bit
    const char* s = "sqrt(t1*(0.5-t1)) + 0.25 - t2/3";
    BoundExpr a = parse_bound_expr(s, 3);
    BoundExpr b = parse_bound_expr(to_string(a), 3);
    for (double t1 : {0.0, 0.1, 0.25, 0.37, 0.5}) {
        for (double t2 : {0.0, 0.2, 0.9}) {
            std::vector<double> prefix{t1, t2};
            double va = eval_expr(a, prefix);
            double vb = eval_expr(b, prefix);
            CHECK(std::memcmp(&va, &vb, sizeof va) == 0);
        }
    }
}

TEST_CASE("accepted expressions never read beyond their declared prefix", "[expr]") {
    // parse with max_prefix_index = i, then evaluate with exactly i-1 entries
    const char* samples[] = {"t1 + t2", "sqrt(t2)*t1", "0.5", "t2 - min(t1, t2)"};
    for (const char* s : samples) {
        BoundExpr e = parse_bound_expr(s, 3);
        REQUIRE(e.max_prefix_index <= 2);
        std::vector<double> prefix{0.3, 0.4};
        CHECK_NOTHROW(eval_expr(e, prefix));
    }
}

TEST_CASE("affine and constant analysis", "[expr]") {
    auto affine = [](const char* s) { return is_affine(parse_bound_expr(s, 4)); };
    auto constant = [](const char* s) { return is_constant(parse_bound_expr(s, 4)); };
    CHECK(affine("0.5 - t1"));
    CHECK(affine("0.2*t1 + t2/4 - 1"));
    CHECK(affine("sqrt(2) * t1"));
    CHECK_FALSE(affine("t1*t2"));
    CHECK_FALSE(affine("sqrt(t1)"));
    CHECK_FALSE(affine("1/t1"));
    CHECK_FALSE(affine("min(t1, 0.5)"));
    CHECK(constant("sqrt(2) + min(1, 2)"));
    CHECK_FALSE(constant("t1"));
}
