#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "subexp/domain.hpp"
#include "subexp/engine.hpp"
#include "subexp/errors.hpp"
#include "subexp/independence.hpp"
#include "subexp/limits.hpp"
#include "subexp/lln.hpp"

namespace subexp {

// ---------------------------------------------------------------------------
// Deterministic numeric formatting
// ---------------------------------------------------------------------------

/// Shortest round-trip representation, truncated to 12 significant digits.
/// Stable across platforms, which keeps golden output files byte-identical.
inline std::string format_number(double v) {
    if (!std::isfinite(v)) return v > 0 ? "1e999" : (v < 0 ? "-1e999" : "null");
    if (v == 0.0) return "0";
    char buf[40];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    std::string s(buf, p);

    int sig = 0;
    bool counting = false;
    for (char c : s) {
        if (c == 'e' || c == 'E') break;
        if (c >= '1' && c <= '9') counting = true;
        if (counting && c >= '0' && c <= '9') ++sig;
    }
    if (sig <= 12) return s;
    auto [p2, ec2] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 12);
    (void)ec2;
    return std::string(buf, p2);
}

inline std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default: out += c;
        }
    }
    return out;
}

inline std::string json_number_array(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += format_number(v[i]);
    }
    out += "]";
    return out;
}

// ---------------------------------------------------------------------------
// Spec file parsing (nlohmann/json behind SpecError)
// ---------------------------------------------------------------------------

using json = nlohmann::json;

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("cannot open spec file: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw SpecError("invalid JSON in " + path + ": " + e.what());
    }
}

namespace io_detail {

inline const json& require(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end()) throw SpecError(std::string("missing field \"") + field + "\"");
    return *it;
}

inline double number(const json& j, const char* field) {
    const json& v = require(j, field);
    if (!v.is_number()) throw SpecError(std::string("field \"") + field + "\" must be a number");
    return v.get<double>();
}

inline int integer(const json& j, const char* field) {
    const json& v = require(j, field);
    if (!v.is_number_integer()) throw SpecError(std::string("field \"") + field + "\" must be an integer");
    return v.get<int>();
}

inline std::string text(const json& j, const char* field) {
    const json& v = require(j, field);
    if (!v.is_string()) throw SpecError(std::string("field \"") + field + "\" must be a string");
    return v.get<std::string>();
}

} // namespace io_detail

/// { "n_states": int, "bounds": [ {"lower": "expr", "upper": "expr", "c": number}, ... ],
///   "simplex_policy": "enforce"|"paper_faithful" }
inline DomainSpec domain_spec_from_json(const json& j) {
    DomainSpec spec;
    spec.n_states = io_detail::integer(j, "n_states");
    const json& bounds = io_detail::require(j, "bounds");
    if (!bounds.is_array()) throw SpecError("\"bounds\" must be an array");
    for (const json& b : bounds) {
        BoundDesc bd;
        bd.lower = io_detail::text(b, "lower");
        bd.upper = io_detail::text(b, "upper");
        bd.c = b.contains("c") ? io_detail::number(b, "c") : 1.0;
        spec.bounds.push_back(std::move(bd));
    }
    std::string policy = io_detail::text(j, "simplex_policy");
    if (policy == "enforce") spec.policy = SimplexPolicy::Enforce;
    else if (policy == "paper_faithful") spec.policy = SimplexPolicy::PaperFaithful;
    else throw SpecError("simplex_policy must be \"enforce\" or \"paper_faithful\"");
    if (j.contains("tail_mass_bound")) spec.tail_mass_bound = io_detail::number(j, "tail_mass_bound");
    return spec;
}

/// { "values": [numbers...] }
inline RandomVariable rv_from_json(const json& j) {
    const json& vals = io_detail::require(j, "values");
    if (!vals.is_array() || vals.empty()) throw SpecError("\"values\" must be a nonempty array");
    RandomVariable rv;
    rv.values.reserve(vals.size());
    for (const json& v : vals) {
        if (!v.is_number()) throw SpecError("\"values\" entries must be numbers");
        rv.values.push_back(v.get<double>());
    }
    return rv;
}

/// { "phi": "expr", "M": number, "L": number } with optional bivariate flag.
inline TestFunction test_function_from_json(const json& j, bool bivariate) {
    return make_test_function(io_detail::text(j, "phi"), io_detail::number(j, "M"),
                              io_detail::number(j, "L"), bivariate);
}

/// { "rectangle": [[lo, hi], ...], "map": ["expr", ...] }
inline TransformSpec transform_from_json(const json& j) {
    const json& rect = io_detail::require(j, "rectangle");
    const json& maps = io_detail::require(j, "map");
    if (!rect.is_array() || !maps.is_array()) throw SpecError("transform needs rectangle and map arrays");
    std::vector<Interval> rectangle;
    for (const json& r : rect) {
        if (!r.is_array() || r.size() != 2) throw SpecError("rectangle entries must be [lo, hi]");
        rectangle.push_back(Interval{r[0].get<double>(), r[1].get<double>()});
    }
    std::vector<std::string> texts;
    for (const json& m : maps) texts.push_back(m.get<std::string>());
    return make_transform(rectangle, texts);
}

// ---------------------------------------------------------------------------
// Result serialization (stable field order, LF line endings)
// ---------------------------------------------------------------------------

inline std::string result_to_json(const SublinearResult& r) {
    std::string out = "{\"value\": " + format_number(r.value);
    out += ", \"argmax\": " + json_number_array(r.argmax_theta);
    out += ", \"method\": \"" + std::string(method_name(r.method)) + "\"";
    out += ", \"certified_error\": " + format_number(r.certified_error) + "}";
    return out;
}

inline const char* lln_method_name(LlnMethod m) {
    return m == LlnMethod::ExactDP ? "exact_dp" : "monte_carlo";
}

inline std::string lln_table_to_json(const LlnTable& t) {
    std::string out = "{\"mu_lower\": " + format_number(t.md.mu_lower);
    out += ", \"mu_upper\": " + format_number(t.md.mu_upper);
    out += ", \"target\": " + format_number(t.target);
    out += ", \"rows\": [";
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const LlnRow& r = t.rows[i];
        if (i) out += ", ";
        out += "{\"n\": " + std::to_string(r.n);
        out += ", \"value\": " + format_number(r.value);
        out += ", \"gap\": " + format_number(r.gap);
        out += ", \"method\": \"" + std::string(lln_method_name(r.method)) + "\"";
        if (r.method == LlnMethod::MonteCarlo)
            out += ", \"stderr\": " + format_number(r.std_error);
        out += "}";
    }
    out += "], \"trend_ok\": ";
    out += t.trend_ok ? "true" : "false";
    out += "}";
    return out;
}

inline std::string lln_table_to_csv(const LlnTable& t) {
    std::string out = "n,value,target,gap,method,stderr\n";
    for (const LlnRow& r : t.rows) {
        out += std::to_string(r.n) + "," + format_number(r.value) + "," + format_number(r.target) +
               "," + format_number(r.gap) + "," + lln_method_name(r.method) + ",";
        if (r.method == LlnMethod::MonteCarlo) out += format_number(r.std_error);
        out += "\n";
    }
    return out;
}

inline std::string harness_report_to_json(const std::string& name, const HarnessReport& rep) {
    std::string out = "{\"harness\": \"" + json_escape(name) + "\"";
    out += ", \"passed\": ";
    out += rep.passed ? "true" : "false";
    if (!rep.detail.empty()) out += ", \"detail\": \"" + json_escape(rep.detail) + "\"";
    out += ", \"limit_value\": " + format_number(rep.limit_value);
    out += ", \"final_gap\": " + format_number(rep.final_gap);
    out += ", \"trace\": [";
    for (std::size_t i = 0; i < rep.trace.size(); ++i) {
        if (i) out += ", ";
        out += "{\"m\": " + std::to_string(rep.trace[i].m);
        out += ", \"value\": " + format_number(rep.trace[i].value);
        out += ", \"certified_error\": " + format_number(rep.trace[i].certified_error) + "}";
    }
    out += "]}";
    return out;
}

inline std::string trace_to_csv(const std::vector<TraceRow>& trace) {
    std::string out = "m,E_upper,certified_error\n";
    for (const TraceRow& row : trace)
        out += std::to_string(row.m) + "," + format_number(row.value) + "," +
               format_number(row.certified_error) + "\n";
    return out;
}

inline std::string regularity_report_to_json(const RegularityReport& rep) {
    std::string out = "{\"harness\": \"regularity\", \"passed\": ";
    out += rep.passed ? "true" : "false";
    out += ", \"rows\": [";
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const RegularityRow& r = rep.rows[i];
        if (i) out += ", ";
        out += "{\"epsilon\": " + format_number(r.epsilon);
        out += ", \"N\": " + std::to_string(r.truncation_level);
        out += ", \"tail_sup\": " + format_number(r.tail_sup);
        out += ", \"pass\": ";
        out += r.pass ? "true" : "false";
        out += "}";
    }
    out += "]}";
    return out;
}

inline std::string distribution_report_to_json(const DistributionCheckReport& rep) {
    std::string out = "{\"rows\": [";
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const DistributionCheckRow& r = rep.rows[i];
        if (i) out += ", ";
        out += "{\"phi\": \"" + json_escape(r.phi) + "\"";
        out += ", \"e1\": " + format_number(r.e1);
        out += ", \"e2\": " + format_number(r.e2);
        out += ", \"pass\": ";
        out += r.pass ? "true" : "false";
        out += "}";
    }
    out += "], \"consistent\": ";
    out += rep.consistent ? "true" : "false";
    out += "}";
    return out;
}

inline std::string axiom_report_to_json(const AxiomCheckReport& rep) {
    std::string out = "{\"passed\": ";
    out += rep.passed() ? "true" : "false";
    out += ", \"monotonicity_checks\": " + std::to_string(rep.monotonicity_checks);
    out += ", \"constant_checks\": " + std::to_string(rep.constant_checks);
    out += ", \"subadditivity_checks\": " + std::to_string(rep.subadditivity_checks);
    out += ", \"homogeneity_checks\": " + std::to_string(rep.homogeneity_checks);
    out += ", \"failures\": [";
    for (std::size_t i = 0; i < rep.failures.size(); ++i) {
        const AxiomWitness& w = rep.failures[i];
        if (i) out += ", ";
        out += "{\"axiom\": \"" + json_escape(w.axiom) + "\"";
        out += ", \"i\": " + std::to_string(w.i);
        out += ", \"j\": " + std::to_string(w.j);
        out += ", \"lhs\": " + format_number(w.lhs);
        out += ", \"rhs\": " + format_number(w.rhs) + "}";
    }
    out += "]}";
    return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SpecError("cannot write output file: " + path);
    out << content;
}

} // namespace subexp
