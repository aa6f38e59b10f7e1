// Command-line front end: loads JSON experiment specs, dispatches to the
// library, and emits deterministic JSON results (stdout) plus optional CSV
// traces. Exit codes: 0 success, 2 spec error, 3 numerical failure,
// 4 harness assertion failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "subexp/spec_io.hpp"

using namespace subexp;

namespace {

struct CommonFlags {
    std::string spec_path;
    int grid = 0; // 0 = subcommand default
    double tolerance = 1e-6;
    std::uint64_t seed = 1;
    std::string simplex; // optional override
    std::string out_csv;
    int threads = 1;
    std::string method = "auto";
    std::string mode = "per_theta";
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--spec", f.spec_path, "experiment spec file (JSON)")->required();
    cmd->add_option("--grid", f.grid, "grid resolution per axis");
    cmd->add_option("--tol", f.tolerance, "tolerance for checks");
    cmd->add_option("--seed", f.seed, "seed for Monte Carlo streams");
    cmd->add_option("--simplex", f.simplex, "override simplex policy")
        ->check(CLI::IsMember({"enforce", "paper_faithful"}));
    cmd->add_option("--out", f.out_csv, "CSV output path");
    cmd->add_option("--threads", f.threads, "worker cap (results are worker-count independent)")
        ->check(CLI::PositiveNumber);
}

void check_kind(const json& spec, std::initializer_list<const char*> accepted) {
    if (!spec.contains("kind")) return;
    std::string k = spec["kind"].get<std::string>();
    for (const char* a : accepted)
        if (k == a) return;
    throw SpecError("spec kind \"" + k + "\" does not match this subcommand");
}

CredalDomain domain_from_spec(const json& spec, const CommonFlags& f, const char* field = "domain") {
    DomainSpec ds = domain_spec_from_json(io_detail::require(spec, field));
    if (f.simplex == "enforce") ds.policy = SimplexPolicy::Enforce;
    else if (f.simplex == "paper_faithful") ds.policy = SimplexPolicy::PaperFaithful;
    return build_domain(ds);
}

Method parse_method(const std::string& name, const CredalDomain& d) {
    if (name == "auto") return auto_method(d);
    if (name == "nested_exact") return Method::NestedExact;
    if (name == "nested_numeric") return Method::NestedNumeric;
    if (name == "grid") return Method::Grid;
    throw SpecError("unknown method: " + name);
}

void emit_result_csv(const std::string& path, const SublinearResult& r) {
    std::string csv = "value,method,certified_error\n";
    csv += format_number(r.value);
    csv += ",";
    csv += method_name(r.method);
    csv += "," + format_number(r.certified_error) + "\n";
    write_text_file(path, csv);
}

int cmd_eval(const CommonFlags& f, bool oracle_only) {
    json spec = load_json_file(f.spec_path);
    check_kind(spec, {"eval", "oracle"});
    CredalDomain d = domain_from_spec(spec, f);
    RandomVariable x = rv_from_json(io_detail::require(spec, "rv"));
    EngineOptions opts;
    opts.grid_resolution = f.grid > 0 ? f.grid : 2001;
    SublinearResult r = oracle_only ? upper_expectation(x, d, Method::Grid, opts)
                                    : upper_expectation(x, d, parse_method(f.method, d), opts);
    std::cout << result_to_json(r) << "\n";
    if (!f.out_csv.empty()) emit_result_csv(f.out_csv, r);
    return 0;
}

int cmd_transform(const CommonFlags& f) {
    json spec = load_json_file(f.spec_path);
    check_kind(spec, {"transform"});
    RandomVariable x = rv_from_json(io_detail::require(spec, "rv"));
    TransformSpec t = transform_from_json(spec);
    SublinearResult r = transform_eval(x, t);
    std::cout << result_to_json(r) << "\n";
    if (!f.out_csv.empty()) emit_result_csv(f.out_csv, r);
    return 0;
}

int cmd_independence(const CommonFlags& f) {
    json spec = load_json_file(f.spec_path);
    check_kind(spec, {"independence"});
    int res = f.grid > 0 ? f.grid : 101;

    if (f.mode == "identical") {
        CredalDomain d1 = domain_from_spec(spec, f, "domain");
        CredalDomain d2 = domain_from_spec(spec, f, "domain2");
        RandomVariable x1 = rv_from_json(io_detail::require(spec, "x"));
        RandomVariable x2 = rv_from_json(io_detail::require(spec, "x2"));
        double m = io_detail::number(spec, "M");
        double l = io_detail::number(spec, "L");
        double c = spec.contains("c") ? io_detail::number(spec, "c") : 0.0;
        DistributionCheckReport rep =
            identically_distributed_check(x1, d1, x2, d2, default_phi_family(c, m, l),
                                          f.tolerance, res);
        std::cout << distribution_report_to_json(rep) << "\n";
        return 0;
    }

    CredalDomain d = domain_from_spec(spec, f);
    RandomVariable x = rv_from_json(io_detail::require(spec, "x"));
    RandomVariable y = rv_from_json(io_detail::require(spec, "y"));
    TestFunction phi = test_function_from_json(spec, true);
    if (f.mode == "per_theta") {
        std::cout << result_to_json(per_theta_independent_expectation(phi, x, y, d, res)) << "\n";
    } else if (f.mode == "peng") {
        std::cout << result_to_json(peng_independent_expectation(phi, x, y, d, res)) << "\n";
    } else if (f.mode == "gap") {
        SublinearResult per = per_theta_independent_expectation(phi, x, y, d, res);
        SublinearResult peng = peng_independent_expectation(phi, x, y, d, res);
        std::cout << "{\"per_theta\": " << format_number(per.value)
                  << ", \"peng\": " << format_number(peng.value)
                  << ", \"gap\": " << format_number(peng.value - per.value) << "}\n";
    } else {
        throw SpecError("unknown independence mode: " + f.mode);
    }
    return 0;
}

int cmd_lln(const CommonFlags& f) {
    json spec = load_json_file(f.spec_path);
    check_kind(spec, {"lln"});
    CredalDomain d = domain_from_spec(spec, f);
    RandomVariable x = rv_from_json(io_detail::require(spec, "rv"));
    TestFunction phi = test_function_from_json(spec, false);
    std::vector<int> n_list;
    for (const json& n : io_detail::require(spec, "n_list")) n_list.push_back(n.get<int>());
    std::string method_name = io_detail::text(spec, "method");
    LlnMethod method;
    if (method_name == "exact_dp") method = LlnMethod::ExactDP;
    else if (method_name == "monte_carlo") method = LlnMethod::MonteCarlo;
    else throw SpecError("lln method must be \"exact_dp\" or \"monte_carlo\"");
    int samples = spec.contains("samples") ? io_detail::integer(spec, "samples") : 10000;
    std::uint64_t seed = spec.contains("seed")
                             ? static_cast<std::uint64_t>(spec["seed"].get<std::int64_t>())
                             : f.seed;
    int res = f.grid > 0 ? f.grid : 101;

    LlnTable table = lln_table(phi, x, d, n_list, method, res, samples, seed, f.tolerance);
    std::string out = lln_table_to_json(table);
    if (spec.contains("moments_n")) {
        int mn = io_detail::integer(spec, "moments_n");
        int ms = spec.contains("moments_samples") ? io_detail::integer(spec, "moments_samples") : 1;
        auto [lo, hi] = moment_estimators(x, d, mn, res, ms, seed);
        out.pop_back(); // replace closing brace
        out += ", \"mu_hat_lower\": " + format_number(lo) +
               ", \"mu_hat_upper\": " + format_number(hi) + "}";
    }
    std::cout << out << "\n";
    if (!f.out_csv.empty()) write_text_file(f.out_csv, lln_table_to_csv(table));
    return 0;
}

RvSequence sequence_from_json(const json& j) {
    RvSequence seq;
    std::string kind = io_detail::text(j, "kind");
    if (kind == "scale") seq.kind = SeqKind::ScaleOneMinusInvM;
    else if (kind == "constant") seq.kind = SeqKind::Constant;
    else if (kind == "tail_indicator") seq.kind = SeqKind::TailIndicator;
    else if (kind == "alternating_shift") seq.kind = SeqKind::AlternatingShift;
    else if (kind == "alternating_pair") seq.kind = SeqKind::AlternatingPair;
    else if (kind == "interpolate") seq.kind = SeqKind::Interpolate;
    else if (kind == "per_state_expr") seq.kind = SeqKind::PerStateExpr;
    else throw SpecError("unknown sequence kind: " + kind);

    if (j.contains("limit")) seq.limit = rv_from_json(j["limit"]);
    if (j.contains("companion")) seq.companion = rv_from_json(j["companion"]);
    if (j.contains("exprs"))
        for (const json& e : j["exprs"])
            seq.state_exprs.push_back(parse_expr(e.get<std::string>(), 1, true, false));
    std::string mono = j.contains("monotonicity") ? j["monotonicity"].get<std::string>() : "none";
    if (mono == "increasing") seq.declared = Monotonicity::Increasing;
    else if (mono == "decreasing") seq.declared = Monotonicity::Decreasing;
    else seq.declared = Monotonicity::None;
    if (j.contains("dominating_bound")) seq.dominating_bound = rv_from_json(j["dominating_bound"]);
    return seq;
}

int cmd_verify(const CommonFlags& f) {
    json spec = load_json_file(f.spec_path);
    check_kind(spec, {"verify"});
    std::string harness = io_detail::text(spec, "harness");
    CredalDomain d = domain_from_spec(spec, f);
    EngineOptions opts;
    if (f.grid > 0) opts.grid_resolution = f.grid;
    double tolerance = spec.contains("tol") ? io_detail::number(spec, "tol") : f.tolerance;

    if (harness == "regularity") {
        std::vector<double> epsilons;
        for (const json& e : io_detail::require(spec, "epsilons")) epsilons.push_back(e.get<double>());
        double remainder =
            spec.contains("tail_remainder") ? io_detail::number(spec, "tail_remainder") : 0.0;
        int res = spec.contains("resolution") ? io_detail::integer(spec, "resolution") : 2;
        RegularityReport rep = regularity_harness(d, epsilons, remainder, res, opts);
        std::cout << regularity_report_to_json(rep) << "\n";
        return rep.passed ? 0 : 4;
    }

    RvSequence seq = sequence_from_json(io_detail::require(spec, "sequence"));
    int m_max = io_detail::integer(spec, "m_max");
    HarnessReport rep;
    if (harness == "monotone") {
        rep = monotone_harness(seq, d, m_max, tolerance, ExpectationSide::Upper, opts);
    } else if (harness == "dominated") {
        rep = dominated_harness(seq, d, m_max, tolerance, ExpectationSide::Upper, opts);
    } else if (harness == "fatou") {
        std::string side = io_detail::text(spec, "case");
        FatouCase fc;
        if (side == "lower") fc = FatouCase::LowerBounded;
        else if (side == "upper") fc = FatouCase::UpperBounded;
        else throw SpecError("fatou case must be \"lower\" or \"upper\"");
        RandomVariable bound = rv_from_json(io_detail::require(spec, "bound"));
        rep = fatou_harness(seq, d, m_max, tolerance, fc, bound, opts);
    } else {
        throw SpecError("unknown harness: " + harness);
    }
    std::cout << harness_report_to_json(harness, rep) << "\n";
    if (!f.out_csv.empty()) write_text_file(f.out_csv, trace_to_csv(rep.trace));
    return rep.passed ? 0 : 4;
}

int emit_error(const char* code, const std::string& message, int exit_code) {
    std::cerr << "{\"error\": \"" << code << "\", \"message\": \"" << json_escape(message)
              << "\"}\n";
    return exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sublinear expectations on truncated countable state spaces"};
    app.require_subcommand(1);

    CommonFlags f;
    CLI::App* eval = app.add_subcommand("eval", "upper expectation of an RV over a domain");
    add_common(eval, f);
    eval->add_option("--method", f.method, "auto | nested_exact | nested_numeric | grid")
        ->check(CLI::IsMember({"auto", "nested_exact", "nested_numeric", "grid"}));
    CLI::App* oracle = app.add_subcommand("oracle", "brute-force grid reference value");
    add_common(oracle, f);
    CLI::App* transform = app.add_subcommand("transform", "supremum through a rectangle transform");
    add_common(transform, f);
    CLI::App* independence = app.add_subcommand("independence", "independence functionals");
    add_common(independence, f);
    independence->add_option("--mode", f.mode, "per_theta | peng | gap | identical")
        ->check(CLI::IsMember({"per_theta", "peng", "gap", "identical"}));
    CLI::App* lln = app.add_subcommand("lln", "law-of-large-numbers table");
    add_common(lln, f);
    CLI::App* verify = app.add_subcommand("verify", "convergence-theorem harnesses");
    add_common(verify, f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        std::cerr << "{\"error\": \"UsageError\", \"message\": \"" << json_escape(e.what())
                  << "\"}\n";
        return 2;
    }

    try {
        if (eval->parsed()) return cmd_eval(f, false);
        if (oracle->parsed()) return cmd_eval(f, true);
        if (transform->parsed()) return cmd_transform(f);
        if (independence->parsed()) return cmd_independence(f);
        if (lln->parsed()) return cmd_lln(f);
        if (verify->parsed()) return cmd_verify(f);
        return emit_error("UsageError", "no subcommand", 2);
    } catch (const SyntaxError& e) {
        return emit_error("SyntaxError", e.what(), 2);
    } catch (const VariableOutOfScope& e) {
        return emit_error("VariableOutOfScope", e.what(), 2);
    } catch (const SpecError& e) {
        return emit_error("SpecError", e.what(), 2);
    } catch (const InfeasibleDomain& e) {
        return emit_error("InfeasibleDomain", e.what(), 3);
    } catch (const BoundOrderViolation& e) {
        return emit_error("BoundOrderViolation", e.what(), 3);
    } catch (const BudgetViolation& e) {
        return emit_error("BudgetViolation", e.what(), 3);
    } catch (const MethodUnsupported& e) {
        return emit_error("MethodUnsupported", e.what(), 3);
    } catch (const MethodInfeasible& e) {
        return emit_error("MethodInfeasible", e.what(), 3);
    } catch (const NoSuchN& e) {
        return emit_error("NoSuchN", e.what(), 3);
    } catch (const DomainError& e) {
        return emit_error("DomainError", e.what(), 3);
    } catch (const MonotonicityViolated& e) {
        return emit_error("MonotonicityViolated", e.what(), 4);
    } catch (const DominationViolated& e) {
        return emit_error("DominationViolated", e.what(), 4);
    } catch (const Error& e) {
        return emit_error("Error", e.what(), 3);
    }
}
