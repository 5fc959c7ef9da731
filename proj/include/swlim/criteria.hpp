#pragma once

// Exact stability certificates computed from the subspaces V_i and K_i alone
// (no simulation). All checks are sufficient conditions: a failed check is
// "inconclusive", never a proof of instability.

#include <swlim/config.hpp>
#include <swlim/linalg.hpp>
#include <swlim/system.hpp>

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace swlim {

/// Nodes are subspace indices; (i, j) is an edge iff dim(U_i ∩ U_j) >= 1.
/// Zero subspaces are isolated nodes.
struct IntersectionGraph {
    std::vector<Eigen::Index> node_dims;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::vector<std::vector<std::size_t>> components; // sorted, in order of smallest member
    std::vector<std::size_t> zero_nodes;
};

namespace detail {

inline void require_common_ambient(const std::vector<Subspace>& spaces, const char* what)
{
    require(!spaces.empty(), std::string(what) + ": empty subspace list");
    for (const auto& s : spaces)
        require(s.ambient_dim() == spaces.front().ambient_dim(), std::string(what) + ": ambient dimension mismatch");
}

inline std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x)
{
    while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    return x;
}

} // namespace detail

inline IntersectionGraph build_intersection_graph(const std::vector<Subspace>& spaces, double rel_tol = 1e-9)
{
    detail::require_common_ambient(spaces, "intersection graph");
    const std::size_t p = spaces.size();
    IntersectionGraph g;
    std::vector<std::size_t> parent(p);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    for (std::size_t i = 0; i < p; ++i) {
        g.node_dims.push_back(spaces[i].dim());
        if (spaces[i].is_zero())
            g.zero_nodes.push_back(i);
    }
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            if (spaces[i].is_zero() || spaces[j].is_zero())
                continue;
            if (subspace_intersect(spaces[i], spaces[j], rel_tol).dim() >= 1) {
                g.edges.emplace_back(i, j);
                parent[detail::find_root(parent, i)] = detail::find_root(parent, j);
            }
        }
    }
    std::vector<std::vector<std::size_t>> by_root(p);
    for (std::size_t i = 0; i < p; ++i)
        by_root[detail::find_root(parent, i)].push_back(i);
    for (auto& c : by_root)
        if (!c.empty())
            g.components.push_back(std::move(c));
    std::sort(g.components.begin(), g.components.end());
    return g;
}

struct ConditionCVerdict {
    bool holds = false;
    std::string reason;                  // "zero-subspace", "disconnected" or "connected"
    std::vector<std::size_t> component;  // witness meeting every subspace when !holds
    IntersectionGraph graph;
};

/// No connected component of (∪ U_i) ∩ S_r meets every U_i, evaluated in
/// projective form: it holds iff some U_i = {0} or the intersection graph is
/// disconnected. Nested subspaces count as intersecting.
inline ConditionCVerdict condition_c(const std::vector<Subspace>& spaces, double rel_tol = 1e-9)
{
    ConditionCVerdict v;
    v.graph = build_intersection_graph(spaces, rel_tol);
    if (!v.graph.zero_nodes.empty()) {
        v.holds = true;
        v.reason = "zero-subspace";
        return v;
    }
    for (const auto& c : v.graph.components) {
        if (c.size() == spaces.size()) {
            v.holds = false;
            v.reason = "connected";
            v.component = c;
            return v;
        }
    }
    v.holds = true;
    v.reason = "disconnected";
    return v;
}

/// The dimension-count sufficient conditions shared by the regular-input
/// certificate (on the V_i) and the occupancy certificate (on the K_i, i ∈ J).
struct DimensionConditions {
    std::vector<std::size_t> indices;   // which subspaces of the full list were used
    bool trivial_intersection = false;  // ∩ U_i = {0}
    bool zero_dim = false;              // some dim U_i = 0
    bool one_dim_not_contained = false; // some dim U_i = 1 with U_i ⊄ U_j for all j != i
    bool pair = false;                  // exactly two subspaces
    bool dimension_sum = false;         // count > 2 and dim(Σ U_i) > Σ dim U_i - count + 1
    Eigen::Index sum_dim = 0;
    Eigen::Index total_dim = 0;
    bool graph_condition = false;       // condition_c on the same list
    std::vector<std::size_t> graph_witness;
    bool certified = false;             // trivial_intersection && (graph_condition || any item)
    std::vector<std::string> fired;
};

inline DimensionConditions dimension_conditions(const std::vector<Subspace>& all, std::vector<std::size_t> indices,
                                                double rel_tol = 1e-9)
{
    detail::require_common_ambient(all, "dimension conditions");
    require(!indices.empty(), "dimension conditions: empty index set");
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    std::vector<Subspace> spaces;
    for (std::size_t i : indices) {
        require(i < all.size(), "dimension conditions: index out of range");
        spaces.push_back(all[i]);
    }
    const Eigen::Index d = spaces.front().ambient_dim();
    const std::size_t q = spaces.size();

    DimensionConditions c;
    c.indices = indices;
    c.trivial_intersection = intersect_all(spaces, d, rel_tol).is_zero();
    for (std::size_t i = 0; i < q; ++i) {
        c.total_dim += spaces[i].dim();
        if (spaces[i].is_zero())
            c.zero_dim = true;
        if (spaces[i].dim() == 1) {
            bool contained = false;
            for (std::size_t j = 0; j < q && !contained; ++j)
                contained = j != i && subspace_included(spaces[i], spaces[j], 1e-9);
            c.one_dim_not_contained = c.one_dim_not_contained || !contained;
        }
    }
    c.pair = q == 2;
    c.sum_dim = sum_all(spaces, d, rel_tol).dim();
    c.dimension_sum = q > 2 && c.sum_dim > c.total_dim - static_cast<Eigen::Index>(q) + 1;

    const ConditionCVerdict graph = condition_c(spaces, rel_tol);
    c.graph_condition = graph.holds;
    for (std::size_t k : graph.component)
        c.graph_witness.push_back(indices[k]);

    if (c.zero_dim)
        c.fired.emplace_back("zero_dim");
    if (c.one_dim_not_contained)
        c.fired.emplace_back("one_dim_not_contained");
    if (c.pair)
        c.fired.emplace_back("pair");
    if (c.dimension_sum)
        c.fired.emplace_back("dimension_sum");
    c.certified = c.trivial_intersection && (c.graph_condition || !c.fired.empty());
    return c;
}

/// Certificate for every regular input, from the V_i.
inline DimensionConditions regular_input_conditions(const std::vector<Subspace>& v, double rel_tol = 1e-9)
{
    std::vector<std::size_t> all(v.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return dimension_conditions(v, std::move(all), rel_tol);
}

/// Certificate for every input whose set of infinitely-occupied indices is
/// `j`, chaotic or not, from the K_i.
inline DimensionConditions occupancy_conditions(const std::vector<Subspace>& k, std::vector<std::size_t> j,
                                                double rel_tol = 1e-9)
{
    return dimension_conditions(k, std::move(j), rel_tol);
}

struct SubsetSweep {
    bool evaluated = false;  // false when p is too large to enumerate
    bool all_pass = false;
    std::vector<std::size_t> failing_subset;
};

/// Runs the occupancy certificate on every nonempty index subset. Every input
/// has some nonempty set of infinitely-occupied indices, so passing all of
/// them certifies every input.
inline SubsetSweep occupancy_all_subsets(const std::vector<Subspace>& k, double rel_tol = 1e-9,
                                         std::size_t max_p = 12)
{
    SubsetSweep sweep;
    const std::size_t p = k.size();
    if (p == 0 || p > max_p)
        return sweep;
    sweep.evaluated = true;
    sweep.all_pass = true;
    for (std::size_t mask = 1; mask < (std::size_t{1} << p); ++mask) {
        std::vector<std::size_t> j;
        for (std::size_t i = 0; i < p; ++i)
            if (mask & (std::size_t{1} << i))
                j.push_back(i);
        if (!occupancy_conditions(k, j, rel_tol).certified) {
            sweep.all_pass = false;
            sweep.failing_subset = std::move(j);
            break;
        }
    }
    return sweep;
}

struct HurwitzPairVerdict {
    bool applicable = false;
    bool lyapunov_ok = false;
    bool hurwitz[2] = {false, false};
    double abscissa[2] = {0.0, 0.0};
    Eigen::Index k_intersection_dim = 0;
    bool pass = false;
};

/// Two Hurwitz matrices with a common Lyapunov matrix and K_1 ∩ K_2 = {0}
/// give asymptotic stability for every input. Runs on normalized matrices.
inline HurwitzPairVerdict hurwitz_pair_check(const SwitchedSystem& system, const Tolerances& tol = {})
{
    HurwitzPairVerdict v;
    if (system.size() != 2)
        return v;
    v.applicable = true;
    const SwitchedSystem norm = normalize_system(system, tol);
    v.lyapunov_ok = check_common_lyapunov(norm, tol).pass;
    for (int i = 0; i < 2; ++i) {
        v.abscissa[i] = spectral_abscissa(norm.matrix(i));
        v.hurwitz[i] = v.abscissa[i] < -tol.spectral_margin;
    }
    const Subspace k1 = compute_K(norm.matrix(0), tol);
    const Subspace k2 = compute_K(norm.matrix(1), tol);
    v.k_intersection_dim = subspace_intersect(k1, k2, tol.rank).dim();
    v.pass = v.lyapunov_ok && v.hurwitz[0] && v.hurwitz[1] && v.k_intersection_dim == 0;
    return v;
}

struct PlanarMatrixClass {
    Eigen::Index dim_v = 0;
    Eigen::Index dim_k = 0;
    std::string kind;       // "marginal" (dim V = 1), "hurwitz" (dim V = 0), "rotation" (dim V = 2)
    bool consistent = true; // the spectral and kernel facts expected for its kind hold
};

struct PlanarReport {
    bool applicable = false;
    bool v_intersection_zero = false;
    bool v_dims_at_most_one = false;
    std::vector<PlanarMatrixClass> matrices;
    bool particular_case = false;
    std::optional<std::size_t> particular_index;
    bool k_intersection_zero = false;
    bool certified = false; // stable for every input that occupies each index for infinite time
};

inline PlanarReport planar_classify(const SwitchedSystem& system, const std::vector<MatrixAnalysis>& analyses,
                                    const Tolerances& tol = {})
{
    PlanarReport r;
    if (system.dim() != 2)
        return r;
    require(analyses.size() == system.size(), "planar_classify: one analysis per matrix is required");
    r.applicable = true;
    const std::vector<Subspace> v = v_subspaces(analyses);
    const std::vector<Subspace> k = k_subspaces(analyses);
    r.v_intersection_zero = intersect_all(v, 2, tol.rank).is_zero();
    r.v_dims_at_most_one = std::all_of(v.begin(), v.end(), [](const Subspace& s) { return s.dim() <= 1; });
    r.k_intersection_zero = intersect_all(k, 2, tol.rank).is_zero();

    for (std::size_t i = 0; i < analyses.size(); ++i) {
        const auto& a = analyses[i];
        const Matrix& b = system.matrix(i);
        PlanarMatrixClass c;
        c.dim_v = a.V.dim();
        c.dim_k = a.K.dim();
        const double scale = std::max(1.0, op_norm(b));
        if (c.dim_v == 1) {
            c.kind = "marginal";
            Eigen::EigenSolver<Matrix> es(b, false);
            const auto ev = es.eigenvalues();
            const double small = std::min(std::abs(ev(0)), std::abs(ev(1)));
            const double other = std::abs(ev(0)) <= std::abs(ev(1)) ? ev(1).real() : ev(0).real();
            c.consistent = small <= 1e-8 * scale && other < -tol.spectral_margin
                           && subspace_equal(a.K, a.V, 1e-8);
        } else if (c.dim_v == 0) {
            c.kind = "hurwitz";
            c.consistent = spectral_abscissa(b) < -tol.spectral_margin && c.dim_k <= 1;
        } else {
            c.kind = "rotation";
            c.consistent = false;
        }
        r.matrices.push_back(c);
    }

    for (std::size_t i0 = 0; i0 < analyses.size() && !r.particular_case; ++i0) {
        if (analyses[i0].V.dim() != 0 || analyses[i0].K.dim() != 1)
            continue;
        bool all_equal = true;
        for (const auto& a : analyses)
            all_equal = all_equal && subspace_equal(a.K, analyses[i0].K, 1e-8);
        if (all_equal) {
            r.particular_case = true;
            r.particular_index = i0;
        }
    }
    r.certified = r.v_intersection_zero && r.v_dims_at_most_one && !r.particular_case && r.k_intersection_zero;
    return r;
}

/// Scope of the strongest certificate found.
enum class Scope { any_input, well_distributed_inputs, regular_inputs, none };

inline const char* to_string(Scope s)
{
    switch (s) {
    case Scope::any_input: return "any-input";
    case Scope::well_distributed_inputs: return "well-distributed-inputs";
    case Scope::regular_inputs: return "regular-inputs";
    default: return "none";
    }
}

struct Conclusion {
    Scope scope = Scope::none;
    std::string certificate; // report key of the check that supports it
    std::string statement;
};

struct StabilityReport {
    LyapunovVerdict lyapunov;
    bool lyapunov_ok = false;
    std::vector<MatrixAnalysis> per_matrix;
    std::optional<ConditionCVerdict> condition_c;
    std::optional<DimensionConditions> theorem4;
    std::optional<DimensionConditions> theorem6;      // J = all indices
    std::optional<SubsetSweep> theorem6_all_subsets;
    std::optional<HurwitzPairVerdict> theorem7;
    std::optional<PlanarReport> planar;
    Conclusion conclusion;
};

inline Conclusion conclude(const StabilityReport& r)
{
    Conclusion c;
    if (!r.lyapunov_ok) {
        c.statement = "no common Lyapunov matrix: hypotheses not met";
        return c;
    }
    if (r.theorem7 && r.theorem7->pass) {
        c = {Scope::any_input, "theorem7", "asymptotically stable for any input (theorem7)"};
    } else if (r.theorem6_all_subsets && r.theorem6_all_subsets->all_pass) {
        c = {Scope::any_input, "theorem6_all_subsets",
             "asymptotically stable for any input (theorem6 on every index subset)"};
    } else if (r.theorem6 && r.theorem6->certified) {
        c = {Scope::well_distributed_inputs, "theorem6",
             "asymptotically stable for every input occupying each index for infinite time, chaotic or not (theorem6)"};
    } else if (r.planar && r.planar->certified) {
        c = {Scope::well_distributed_inputs, "planar",
             "asymptotically stable for every input occupying each index for infinite time (planar)"};
    } else if (r.theorem4 && r.theorem4->certified && !r.theorem4->fired.empty()) {
        c = {Scope::regular_inputs, "theorem4", "asymptotically stable for every regular input (theorem4)"};
    } else if (r.condition_c && r.condition_c->holds) {
        c = {Scope::regular_inputs, "condition_c", "asymptotically stable for every regular input (condition_c)"};
    } else {
        c.statement = "no certificate applies; stability is not decided by these checks";
    }
    return c;
}

/// Lyapunov check, normalization, per-matrix analyses and every certificate.
inline StabilityReport assess(const SwitchedSystem& system, const Tolerances& tol = {})
{
    StabilityReport r;
    r.lyapunov = check_common_lyapunov(system, tol);
    r.lyapunov_ok = r.lyapunov.pass;
    if (!r.lyapunov_ok) {
        r.conclusion = conclude(r);
        return r;
    }
    const SwitchedSystem norm = normalize_system(system, tol);
    r.per_matrix = analyze_system(norm, tol);
    const std::vector<Subspace> v = v_subspaces(r.per_matrix);
    const std::vector<Subspace> k = k_subspaces(r.per_matrix);

    r.condition_c = condition_c(v, tol.rank);
    r.theorem4 = regular_input_conditions(v, tol.rank);
    std::vector<std::size_t> all(norm.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    r.theorem6 = occupancy_conditions(k, all, tol.rank);
    r.theorem6_all_subsets = occupancy_all_subsets(k, tol.rank);
    r.theorem7 = hurwitz_pair_check(norm, tol);
    r.planar = planar_classify(norm, r.per_matrix, tol);
    r.conclusion = conclude(r);
    return r;
}

} // namespace swlim
