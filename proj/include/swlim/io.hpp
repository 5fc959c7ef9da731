#pragma once

// File formats: system and signal JSON inputs, JSON reports and the
// human-readable summary. Floating-point output always uses 17 significant
// digits so that golden files round-trip exactly.

#include <swlim/classify.hpp>
#include <swlim/criteria.hpp>
#include <swlim/signal.hpp>
#include <swlim/simulator.hpp>
#include <swlim/system.hpp>

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace swlim {

using json = nlohmann::json;

/// A malformed input file; the message names the offending field.
class format_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void fail(const std::string& field, const std::string& what)
{
    throw format_error(field + ": " + what);
}

inline double number_at(const json& j, const std::string& field)
{
    if (!j.is_number())
        fail(field, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v))
        fail(field, "non-finite number");
    return v;
}

inline Matrix matrix_from_json(const json& j, Eigen::Index d, const std::string& field)
{
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != d)
        fail(field, "expected " + std::to_string(d) + " rows");
    Matrix m(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        const std::string rf = field + "[" + std::to_string(r) + "]";
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != d)
            fail(rf, "expected " + std::to_string(d) + " entries");
        for (Eigen::Index c = 0; c < d; ++c)
            m(r, c) = number_at(row[static_cast<std::size_t>(c)], rf + "[" + std::to_string(c) + "]");
    }
    return m;
}

inline std::uint64_t seed_from(const json& j, std::uint64_t fallback)
{
    if (!j.contains("seed"))
        return fallback;
    if (!j["seed"].is_number_integer() || j["seed"].get<long long>() < 0)
        fail("seed", "expected a nonnegative integer");
    return j["seed"].get<std::uint64_t>();
}

inline void dump_to(std::ostringstream& os, const json& j, int indent, int depth)
{
    const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
    const std::string close_pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
    const char* nl = indent > 0 ? "\n" : "";
    switch (j.type()) {
    case json::value_t::object: {
        if (j.empty()) {
            os << "{}";
            return;
        }
        os << '{' << nl;
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first)
                os << ',' << nl;
            first = false;
            os << pad << json(it.key()).dump() << (indent > 0 ? ": " : ":");
            dump_to(os, it.value(), indent, depth + 1);
        }
        os << nl << close_pad << '}';
        return;
    }
    case json::value_t::array: {
        if (j.empty()) {
            os << "[]";
            return;
        }
        // numeric rows stay on one line
        const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
        os << '[';
        bool first = true;
        for (const auto& e : j) {
            if (!first)
                os << (flat ? ", " : ",");
            first = false;
            if (!flat)
                os << nl << pad;
            dump_to(os, e, indent, depth + 1);
        }
        if (!flat)
            os << nl << close_pad;
        os << ']';
        return;
    }
    case json::value_t::number_float: {
        const double v = j.get<double>();
        if (!std::isfinite(v)) {
            os << "null";
            return;
        }
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
        return;
    }
    default:
        os << j.dump();
    }
}

} // namespace detail

/// JSON text with every float printed as %.17g; non-finite values become null.
inline std::string dump_json(const json& j, int indent = 2)
{
    std::ostringstream os;
    detail::dump_to(os, j, indent, 0);
    os << '\n';
    return os.str();
}

inline json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw format_error(path + ": cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw format_error(path + ": invalid JSON (" + std::string(e.what()) + ")");
    }
}

/// Writes to `path.tmp` and renames over `path`.
inline void write_file_atomic(const std::string& path, const std::string& content)
{
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error(path + ": cannot open for writing");
        out << content;
        if (!out.flush())
            throw std::runtime_error(path + ": write failed");
    }
    std::filesystem::rename(tmp, path);
}

/// {"dimension": d, "matrices": [...], "lyapunov"?: [[...]], "labels"?: [...]}
inline SwitchedSystem system_from_json(const json& j)
{
    if (!j.is_object())
        detail::fail("system", "expected a JSON object");
    if (!j.contains("dimension") || !j["dimension"].is_number_integer() || j["dimension"].get<long long>() < 1)
        detail::fail("dimension", "expected a positive integer");
    const auto d = static_cast<Eigen::Index>(j["dimension"].get<long long>());
    if (!j.contains("matrices") || !j["matrices"].is_array() || j["matrices"].empty())
        detail::fail("matrices", "expected a nonempty array of matrices");
    std::vector<Matrix> mats;
    for (std::size_t i = 0; i < j["matrices"].size(); ++i)
        mats.push_back(detail::matrix_from_json(j["matrices"][i], d, "matrices[" + std::to_string(i) + "]"));
    std::optional<Matrix> lyap;
    if (j.contains("lyapunov") && !j["lyapunov"].is_null())
        lyap = detail::matrix_from_json(j["lyapunov"], d, "lyapunov");
    std::vector<std::string> labels;
    if (j.contains("labels")) {
        if (!j["labels"].is_array() || j["labels"].size() != mats.size())
            detail::fail("labels", "expected one string per matrix");
        for (const auto& l : j["labels"]) {
            if (!l.is_string())
                detail::fail("labels", "expected strings");
            labels.push_back(l.get<std::string>());
        }
    }
    return SwitchedSystem(std::move(mats), std::move(lyap), std::move(labels));
}

inline json system_to_json(const SwitchedSystem& s);

/// Explicit, periodic, average_dwell or chaotic signal; see the README for the schema.
inline SwitchingSignal signal_from_json(const json& j, std::size_t num_indices, std::uint64_t default_seed = 0)
{
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
        detail::fail("type", "expected one of explicit, periodic, average_dwell, chaotic");
    const std::string type = j["type"].get<std::string>();
    try {
        if (type == "explicit") {
            if (!j.contains("times") || !j["times"].is_array())
                detail::fail("times", "expected an array of numbers");
            if (!j.contains("values") || !j["values"].is_array())
                detail::fail("values", "expected an array of indices");
            std::vector<double> times;
            for (std::size_t n = 0; n < j["times"].size(); ++n)
                times.push_back(detail::number_at(j["times"][n], "times[" + std::to_string(n) + "]"));
            std::vector<std::size_t> values;
            for (std::size_t n = 0; n < j["values"].size(); ++n) {
                const json& v = j["values"][n];
                if (!v.is_number_integer() || v.get<long long>() < 0)
                    detail::fail("values[" + std::to_string(n) + "]", "expected a nonnegative integer");
                values.push_back(v.get<std::size_t>());
            }
            if (values.empty())
                detail::fail("values", "expected at least one value");
            if (times.empty())
                detail::fail("times", "expected at least one time");
            return SwitchingSignal::explicit_signal(times, values, num_indices);
        }
        if (type == "periodic") {
            if (!j.contains("pattern") || !j["pattern"].is_array() || j["pattern"].empty())
                detail::fail("pattern", "expected a nonempty array");
            std::vector<PatternEntry> pattern;
            for (std::size_t n = 0; n < j["pattern"].size(); ++n) {
                const json& e = j["pattern"][n];
                const std::string f = "pattern[" + std::to_string(n) + "]";
                if (!e.is_object() || !e.contains("index") || !e["index"].is_number_integer()
                    || e["index"].get<long long>() < 0)
                    detail::fail(f + ".index", "expected a nonnegative integer");
                if (!e.contains("duration"))
                    detail::fail(f + ".duration", "missing");
                pattern.push_back({e["index"].get<std::size_t>(), detail::number_at(e["duration"], f + ".duration")});
            }
            return SwitchingSignal::periodic(std::move(pattern), num_indices);
        }
        if (type == "average_dwell") {
            if (!j.contains("n0") || !j["n0"].is_number_integer())
                detail::fail("n0", "expected an integer");
            if (!j.contains("tau_a"))
                detail::fail("tau_a", "missing");
            return SwitchingSignal::average_dwell(j["n0"].get<int>(), detail::number_at(j["tau_a"], "tau_a"),
                                                  num_indices, detail::seed_from(j, default_seed));
        }
        if (type == "chaotic") {
            if (!j.contains("tau"))
                detail::fail("tau", "missing");
            return SwitchingSignal::chaotic(detail::number_at(j["tau"], "tau"), num_indices,
                                            detail::seed_from(j, default_seed));
        }
    } catch (const std::invalid_argument& e) {
        throw format_error(std::string("signal: ") + e.what());
    }
    detail::fail("type", "unknown signal type '" + type + "'");
    return {};
}

inline json to_json(const Matrix& m)
{
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json to_json(const Vector& v)
{
    json out = json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k)
        out.push_back(v(k));
    return out;
}

inline json to_json(const Subspace& s)
{
    json basis = json::array();
    for (Eigen::Index k = 0; k < s.dim(); ++k)
        basis.push_back(to_json(Vector(s.basis().col(k))));
    return {{"dim", s.dim()}, {"basis", std::move(basis)}};
}

inline json system_to_json(const SwitchedSystem& s)
{
    json mats = json::array();
    for (const auto& m : s.matrices())
        mats.push_back(to_json(m));
    json j = {{"dimension", s.dim()}, {"matrices", std::move(mats)}};
    if (s.has_lyapunov())
        j["lyapunov"] = to_json(s.lyapunov());
    if (!s.labels().empty())
        j["labels"] = s.labels();
    return j;
}

inline json to_json(const MatrixAnalysis& a)
{
    return {{"index", a.index},
            {"V", to_json(a.V)},
            {"K", to_json(a.K)},
            {"is_hurwitz", a.is_hurwitz},
            {"skew_residual", a.skew_residual},
            {"complement_spectral_abscissa", a.complement_spectral_abscissa}};
}

inline json to_json(const IntersectionGraph& g)
{
    json edges = json::array();
    for (const auto& [i, j] : g.edges)
        edges.push_back({i, j});
    return {{"node_dims", g.node_dims}, {"edges", edges}, {"components", g.components}, {"zero_nodes", g.zero_nodes}};
}

inline json to_json(const ConditionCVerdict& v)
{
    return {{"holds", v.holds}, {"reason", v.reason}, {"component", v.component}, {"graph", to_json(v.graph)}};
}

inline json to_json(const DimensionConditions& c)
{
    return {{"indices", c.indices},
            {"trivial_intersection", c.trivial_intersection},
            {"zero_dim", c.zero_dim},
            {"one_dim_not_contained", c.one_dim_not_contained},
            {"pair", c.pair},
            {"dimension_sum", c.dimension_sum},
            {"sum_dim", c.sum_dim},
            {"total_dim", c.total_dim},
            {"graph_condition", c.graph_condition},
            {"graph_witness", c.graph_witness},
            {"fired", c.fired},
            {"certified", c.certified}};
}

inline json to_json(const SubsetSweep& s)
{
    return {{"evaluated", s.evaluated}, {"all_pass", s.all_pass}, {"failing_subset", s.failing_subset}};
}

inline json to_json(const HurwitzPairVerdict& v)
{
    if (!v.applicable)
        return {{"applicable", false}};
    return {{"applicable", true},
            {"lyapunov_ok", v.lyapunov_ok},
            {"hurwitz", {v.hurwitz[0], v.hurwitz[1]}},
            {"spectral_abscissa", {v.abscissa[0], v.abscissa[1]}},
            {"k_intersection_dim", v.k_intersection_dim},
            {"pass", v.pass}};
}

inline json to_json(const PlanarReport& r)
{
    if (!r.applicable)
        return {{"applicable", false}};
    json mats = json::array();
    for (const auto& m : r.matrices)
        mats.push_back({{"dim_v", m.dim_v}, {"dim_k", m.dim_k}, {"kind", m.kind}, {"consistent", m.consistent}});
    json j = {{"applicable", true},
              {"v_intersection_zero", r.v_intersection_zero},
              {"v_dims_at_most_one", r.v_dims_at_most_one},
              {"matrices", mats},
              {"particular_case", r.particular_case},
              {"k_intersection_zero", r.k_intersection_zero},
              {"certified", r.certified}};
    j["particular_index"] = r.particular_index ? json(*r.particular_index) : json(nullptr);
    return j;
}

inline json to_json(const StabilityReport& r)
{
    json j;
    j["lyapunov"] = {{"pass", r.lyapunov.pass}, {"max_eigs", r.lyapunov.max_eigs}};
    if (!r.lyapunov.pass) {
        j["lyapunov"]["index"] = r.lyapunov.index;
        j["lyapunov"]["max_eig"] = r.lyapunov.max_eig;
    }
    json per = json::array();
    for (const auto& a : r.per_matrix)
        per.push_back(to_json(a));
    j["per_matrix"] = per;
    if (r.condition_c)
        j["condition_c"] = to_json(*r.condition_c);
    if (r.theorem4)
        j["theorem4"] = to_json(*r.theorem4);
    if (r.theorem6)
        j["theorem6"] = to_json(*r.theorem6);
    if (r.theorem6_all_subsets)
        j["theorem6_all_subsets"] = to_json(*r.theorem6_all_subsets);
    if (r.theorem7)
        j["theorem7"] = to_json(*r.theorem7);
    if (r.planar)
        j["planar"] = to_json(*r.planar);
    j["conclusion"] = {{"scope", to_string(r.conclusion.scope)},
                       {"certificate", r.conclusion.certificate},
                       {"statement", r.conclusion.statement}};
    return j;
}

inline json to_json(const SuEstimate& e)
{
    return {{"matrix", to_json(e.matrix)},
            {"eigenvalues", to_json(Vector(sym_eigenvalues(e.matrix)))},
            {"rank", e.rank},
            {"horizon_used", e.horizon_used},
            {"gram_residual", e.gram_residual},
            {"converged", e.converged},
            {"checkpoints", e.checkpoints},
            {"max_loewner_increase", e.max_loewner_increase},
            {"monotone", e.monotone}};
}

inline json to_json(const SignalClassification& c)
{
    json per = json::array();
    for (std::size_t i = 0; i < c.per_index.size(); ++i) {
        const auto& ev = c.per_index[i];
        per.push_back({{"index", i},
                       {"h", to_string(ev.h)},
                       {"definitive", ev.definitive},
                       {"recurrent_dwell", ev.recurrent_dwell},
                       {"recurrent_count", ev.recurrent_count},
                       {"occupancy", ev.occupancy}});
    }
    return {{"horizon", c.horizon},
            {"per_index", per},
            {"chaotic_verdict", to_string(c.chaotic)},
            {"regular_verdict", to_string(c.regular)},
            {"j_u_estimate", c.j_u},
            {"basis", c.basis}};
}

inline json to_json(const InclusionReport& r)
{
    return {{"union_v_or_switch",
             {{"max_distance", r.union_v_or_switch_max_distance},
              {"union_v_max_distance", r.union_v_max_distance},
              {"pass", r.union_v_or_switch_pass}}},
            {"f_u",
             {{"j_u", r.j_u},
              {"max_distance", r.f_u_max_distance},
              {"k_min_distance", r.k_min_distance},
              {"pass", r.f_u_pass}}},
            {"h_meets_v", {{"indices", r.h_indices}, {"min_distance", r.h_v_min_distance}, {"pass", r.h_pass}}},
            {"rank_bound",
             {{"applicable", r.rank_applicable},
              {"su_rank", r.su_rank},
              {"min_v_dim", r.min_v_dim},
              {"pass", r.rank_pass}}}};
}

inline json to_json(const OmegaSample& s)
{
    json groups = json::array();
    for (const auto& g : s.switch_points)
        groups.push_back({{"index", g.index}, {"count", g.times.size()},
                          {"latest_time", g.times.empty() ? 0.0 : g.times.back()}});
    return {{"x0", to_json(s.x0)},
            {"samples", s.sample_times.size()},
            {"radius", s.radius},
            {"radius_spread", s.radius_spread},
            {"switch_groups", groups},
            {"final_point", s.matrix_points.empty() ? json(nullptr)
                                                    : to_json(Vector(s.matrix_points.back() * s.x0))}};
}

/// Human-readable summary of a stability report.
inline std::string render_text(const StabilityReport& r)
{
    std::ostringstream os;
    os << "common Lyapunov condition: " << (r.lyapunov.pass ? "pass" : "FAIL");
    if (!r.lyapunov.pass)
        os << " (matrix " << r.lyapunov.index << ", max eigenvalue of B^T+B = " << r.lyapunov.max_eig << ")";
    os << '\n';
    for (const auto& a : r.per_matrix) {
        os << "  B_" << a.index << ": dim V = " << a.V.dim() << ", dim K = " << a.K.dim()
           << (a.is_hurwitz ? ", Hurwitz" : "") << '\n';
    }
    auto list = [](const std::vector<std::size_t>& v) {
        std::string s = "{";
        for (std::size_t k = 0; k < v.size(); ++k)
            s += (k ? "," : "") + std::to_string(v[k]);
        return s + "}";
    };
    if (r.condition_c) {
        os << "condition_c: " << (r.condition_c->holds ? "holds" : "fails") << " (" << r.condition_c->reason;
        if (!r.condition_c->holds)
            os << ", component " << list(r.condition_c->component);
        os << ")\n";
    }
    auto dims = [&](const char* name, const DimensionConditions& c) {
        os << name << ": " << (c.certified ? "certified" : "not certified")
           << " (intersection {0}: " << (c.trivial_intersection ? "yes" : "no") << ", fired:";
        if (c.fired.empty())
            os << " none";
        for (const auto& f : c.fired)
            os << ' ' << f;
        os << ")\n";
    };
    if (r.theorem4)
        dims("theorem4", *r.theorem4);
    if (r.theorem6)
        dims("theorem6", *r.theorem6);
    if (r.theorem6_all_subsets && r.theorem6_all_subsets->evaluated)
        os << "theorem6 over all index subsets: " << (r.theorem6_all_subsets->all_pass ? "pass" : "fail") << '\n';
    if (r.theorem7 && r.theorem7->applicable)
        os << "theorem7: " << (r.theorem7->pass ? "pass" : "fail") << '\n';
    if (r.planar && r.planar->applicable)
        os << "planar: " << (r.planar->certified ? "certified" : "not certified")
           << (r.planar->particular_case ? " (particular case)" : "") << '\n';
    os << "conclusion: " << r.conclusion.statement << '\n';
    return os.str();
}

} // namespace swlim
