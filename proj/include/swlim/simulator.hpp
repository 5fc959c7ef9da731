#pragma once

// Flow of a switched system as a left product of segment exponentials,
//   Phi(t) = e^{(t - a_n) B_{u_n}} e^{delta_{n-1} B_{u_{n-1}}} ... e^{delta_0 B_{u_0}},
// and the limit objects built from it: the Gram S(t)^2 = Phi^T Phi, its limit
// S_u^2, and samples of the omega-limit sets.

#include <swlim/classify.hpp>
#include <swlim/config.hpp>
#include <swlim/linalg.hpp>
#include <swlim/signal.hpp>
#include <swlim/system.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

namespace swlim {

/// Incremental evaluator of Phi(t) for one (system, signal) pair. Caches
/// Phi(a_n) at the current segment, so a nondecreasing sequence of queries
/// costs one exponential per new segment. Going back in time restarts from 0.
class FlowIntegrator {
public:
    FlowIntegrator(SwitchedSystem system, SwitchingSignal signal)
        : system_(std::move(system)), signal_(std::move(signal))
    {
        require(system_.normalized(), "flow: system must be normalized (P = I)");
        require(signal_.num_indices() <= system_.size(),
                "flow: signal uses more indices than the system has matrices");
        cache_.resize(system_.size());
        restart();
    }

    const SwitchedSystem& system() const { return system_; }
    const SwitchingSignal& signal() const { return signal_; }

    /// Phi(t) for t >= 0.
    Matrix at(double t)
    {
        advance_to(t);
        return exp_cached(current_.value, t - current_.start) * phi_start_;
    }

    /// Index of the segment containing the last queried time.
    std::size_t segment_number() const { return seg_; }
    const Segment& current_segment() const { return current_; }

    /// Phi(a_n) of the current segment.
    const Matrix& phi_at_segment_start() const { return phi_start_; }

    /// Moves to the segment containing t (t >= 0), restarting if t precedes it.
    void advance_to(double t)
    {
        require(t >= 0.0 && std::isfinite(t), "flow: time must be finite and >= 0");
        if (t < current_.start)
            restart();
        while (t >= current_.end) {
            phi_start_ = exp_cached(current_.value, current_.dwell()) * phi_start_;
            ++seg_;
            load_segment();
        }
    }

private:
    void restart()
    {
        seg_ = 0;
        phi_start_ = Matrix::Identity(system_.dim(), system_.dim());
        load_segment();
    }

    void load_segment()
    {
        std::optional<Segment> s = signal_.segment(seg_);
        if (!s)
            throw std::out_of_range("flow: signal horizon exhausted");
        require(s->value < system_.size(), "flow: signal value exceeds matrix count");
        current_ = *s;
    }

    // a few recent dwells per index; periodic and chaotic signals repeat them
    const Matrix& exp_cached(std::size_t index, double dwell)
    {
        auto& entries = cache_[index];
        for (const auto& e : entries)
            if (e.first == dwell)
                return e.second;
        if (entries.size() >= 8)
            entries.pop_front();
        entries.emplace_back(dwell, matrix_exponential(system_.matrix(index), dwell));
        return entries.back().second;
    }

    SwitchedSystem system_;
    SwitchingSignal signal_;
    std::vector<std::deque<std::pair<double, Matrix>>> cache_;
    std::size_t seg_ = 0;
    Segment current_;
    Matrix phi_start_;
};

inline Matrix flow(const SwitchedSystem& system, const SwitchingSignal& signal, double t)
{
    FlowIntegrator integrator(system, signal);
    return integrator.at(t);
}

inline Matrix gram(const Matrix& phi)
{
    return symmetric_part(phi.transpose() * phi);
}

struct FlowRecord {
    std::vector<double> times;
    std::vector<Matrix> flows;
    std::vector<Matrix> grams;
    std::vector<Matrix> orthogonal_factors;
    std::vector<std::size_t> active_index;
    std::vector<std::vector<double>> norms; // norms[x][j] = |Phi(t_j) x|
};

/// Samples the flow on an increasing grid and tracks |Phi(t) x| for each x.
inline FlowRecord flow_record(const SwitchedSystem& system, const SwitchingSignal& signal,
                              const std::vector<double>& grid, const std::vector<Vector>& tracked = {})
{
    require(std::is_sorted(grid.begin(), grid.end()), "flow_record: grid must be nondecreasing");
    for (const auto& x : tracked)
        require(x.size() == system.dim(), "flow_record: initial condition dimension mismatch");
    FlowIntegrator integrator(system, signal);
    FlowRecord rec;
    rec.norms.resize(tracked.size());
    for (double t : grid) {
        Matrix phi = integrator.at(t);
        rec.times.push_back(t);
        rec.grams.push_back(gram(phi));
        rec.orthogonal_factors.push_back(polar_decompose(phi).orthogonal);
        rec.active_index.push_back(integrator.current_segment().value);
        for (std::size_t k = 0; k < tracked.size(); ++k)
            rec.norms[k].push_back((phi * tracked[k]).norm());
        rec.flows.push_back(std::move(phi));
    }
    return rec;
}

/// Uniform grid of `samples` intervals on [0, horizon]; a single point when horizon == 0.
inline std::vector<double> uniform_grid(double horizon, std::size_t samples)
{
    require(horizon >= 0.0 && std::isfinite(horizon), "uniform_grid: horizon must be finite and >= 0");
    if (horizon == 0.0 || samples == 0)
        return {0.0};
    std::vector<double> grid(samples + 1);
    for (std::size_t j = 0; j <= samples; ++j)
        grid[j] = horizon * static_cast<double>(j) / static_cast<double>(samples);
    grid.back() = horizon;
    return grid;
}

/// Writes `t, norm_x, gram_eig_1..gram_eig_d, active_index`, one row per grid
/// point, 17 significant digits. Gram eigenvalues are ascending.
inline void write_trajectory_csv(std::ostream& os, const FlowRecord& rec, std::size_t tracked = 0)
{
    const auto d = rec.grams.empty() ? 0 : rec.grams.front().rows();
    os << "t,norm_x";
    for (Eigen::Index k = 0; k < d; ++k)
        os << ",gram_eig_" << (k + 1);
    os << ",active_index\n";
    const auto old_precision = os.precision(17);
    for (std::size_t j = 0; j < rec.times.size(); ++j) {
        os << rec.times[j] << ',' << (rec.norms.size() > tracked ? rec.norms[tracked][j] : 0.0);
        const Vector ev = sym_eigenvalues(rec.grams[j]);
        for (Eigen::Index k = 0; k < ev.size(); ++k)
            os << ',' << ev(k);
        os << ',' << rec.active_index[j] << '\n';
    }
    os.precision(old_precision);
}

struct SuEstimate {
    Matrix matrix;                    // S_u estimate, symmetric PSD
    Eigen::Index rank = 0;            // eigenvalues above Tolerances::su_rank
    double horizon_used = 0.0;
    double gram_residual = 0.0;       // |S(T)^2 - S(T/2)^2|
    bool converged = false;
    std::vector<double> checkpoints;
    double max_loewner_increase = 0.0; // max over checkpoints of lambda_max(G_{k+1} - G_k)
    bool monotone = true;              // max_loewner_increase <= 1e-9
};

inline Eigen::Index psd_rank(const Matrix& s, double abs_tol)
{
    const Vector ev = sym_eigenvalues(s);
    return static_cast<Eigen::Index>((ev.array() > abs_tol).count());
}

/// Gram at geometric checkpoints t0, 2 t0, 4 t0, ...; converged once two
/// consecutive checkpoints (t/2, t) differ by <= tol.convergence. The
/// schedule always ends with the pair (horizon/2, horizon).
inline SuEstimate estimate_su(const SwitchedSystem& system, const SwitchingSignal& signal, double horizon,
                              const Tolerances& tol = {}, double first_checkpoint = 1.0)
{
    require(horizon > 0.0 && std::isfinite(horizon), "estimate_su: horizon must be positive");
    require(first_checkpoint > 0.0, "estimate_su: first checkpoint must be positive");
    horizon = std::min(horizon, tol.horizon_cap);

    std::vector<double> times;
    for (double t = first_checkpoint; t < horizon / 2.0; t *= 2.0)
        times.push_back(t);
    times.push_back(horizon / 2.0);
    times.push_back(horizon);

    FlowIntegrator integrator(system, signal);
    SuEstimate est;
    Matrix prev = gram(integrator.at(times.front()));
    double prev_t = times.front();
    est.checkpoints.push_back(prev_t);
    est.horizon_used = prev_t;
    est.gram_residual = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < times.size(); ++k) {
        const Matrix next = gram(integrator.at(times[k]));
        const Matrix diff = next - prev;
        est.max_loewner_increase = std::max(est.max_loewner_increase, max_sym_eigenvalue(diff));
        est.checkpoints.push_back(times[k]);
        est.horizon_used = times[k];
        if (times[k] == 2.0 * prev_t) {
            est.gram_residual = sym_op_norm(diff);
            if (est.gram_residual <= tol.convergence) {
                est.converged = true;
                prev = next;
                break;
            }
        }
        prev = next;
        prev_t = times[k];
    }
    est.monotone = est.max_loewner_increase <= 1e-9;
    est.matrix = sym_sqrt(prev, 1e-10, tol.psd_clamp);
    est.rank = psd_rank(est.matrix, tol.su_rank);
    return est;
}

namespace detail {

// Adaptive Simpson for matrix-valued integrands; error measured in the
// max-abs entry norm.
template <class F>
Matrix simpson_recursive(const F& f, double a, double b, const Matrix& fa, const Matrix& fm, const Matrix& fb,
                         const Matrix& whole, double eps, int depth)
{
    const double m = 0.5 * (a + b);
    const Matrix flm = f(0.5 * (a + m));
    const Matrix frm = f(0.5 * (m + b));
    const Matrix left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const Matrix right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const Matrix delta = left + right - whole;
    if (depth <= 0 || delta.cwiseAbs().maxCoeff() <= 15.0 * eps)
        return left + right + delta / 15.0;
    return simpson_recursive(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
           + simpson_recursive(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1);
}

template <class F>
Matrix adaptive_simpson(const F& f, double a, double b, double eps, int max_depth = 40)
{
    const Matrix fa = f(a);
    const Matrix fb = f(b);
    const Matrix fm = f(0.5 * (a + b));
    const Matrix whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_recursive(f, a, b, fa, fm, fb, whole, eps, max_depth);
}

} // namespace detail

/// |(I + int_0^T Phi^T (B_u^T + B_u) Phi ds) - S(T)^2|, the integral taken by
/// adaptive Simpson on each constant segment.
inline double su_integral_check(const SwitchedSystem& system, const SwitchingSignal& signal, double horizon,
                                double quadrature_eps = 1e-12)
{
    require(horizon >= 0.0 && std::isfinite(horizon), "su_integral_check: horizon must be finite and >= 0");
    const Eigen::Index d = system.dim();
    Matrix integral = Matrix::Zero(d, d);
    FlowIntegrator integrator(system, signal);
    if (horizon > 0.0) {
        for (const Segment& seg : signal.segments_until(horizon)) {
            const double stop = std::min(seg.end, horizon);
            if (stop <= seg.start)
                continue;
            integrator.advance_to(seg.start);
            const Matrix start_flow = integrator.phi_at_segment_start();
            const Matrix& b = system.matrix(seg.value);
            const Matrix c = b + b.transpose();
            auto integrand = [&](double s) {
                const Matrix phi = matrix_exponential(b, s) * start_flow;
                return Matrix(phi.transpose() * c * phi);
            };
            const double len = stop - seg.start;
            integral += detail::adaptive_simpson(integrand, 0.0, len, quadrature_eps * std::max(1.0, len));
        }
    }
    const Matrix lhs = Matrix::Identity(d, d) + symmetric_part(integral);
    return sym_op_norm(lhs - gram(integrator.at(horizon)));
}

struct OmegaBudget {
    double late_start = 100.0;          // samples are taken on [late_start, horizon]
    double horizon = 200.0;
    std::size_t samples = 200;          // general late-time samples
    std::size_t max_switch_points = 64; // kept per active index (latest ones)
};

struct SwitchPointGroup {
    std::size_t index = 0; // value u_n at the switching times
    std::vector<double> times;
    std::vector<Matrix> matrices; // Phi(a_n)
};

struct OmegaSample {
    Vector x0;
    std::vector<double> sample_times;
    std::vector<Matrix> matrix_points;       // Phi(t_k)
    std::vector<Matrix> orthogonal_cluster;  // O(t_k)
    std::vector<SwitchPointGroup> switch_points;
    std::vector<double> norms;               // |Phi(t_k) x0|
    double radius = 0.0;                     // min of norms
    double radius_spread = 0.0;              // max - min of norms
    std::vector<std::vector<double>> distance_to_v; // [k][i] = dist(Phi(t_k) x0, V_i)
    std::vector<double> distance_to_switch_cluster; // dist(Phi(t_k) x0, {M x0 : M switch point})
};

inline OmegaSample sample_omega(const SwitchedSystem& system, const SwitchingSignal& signal, const Vector& x0,
                                const OmegaBudget& budget, const std::vector<MatrixAnalysis>& analyses)
{
    require(x0.size() == system.dim(), "sample_omega: initial condition dimension mismatch");
    require(budget.late_start >= 0.0 && budget.horizon >= budget.late_start, "sample_omega: bad time window");
    require(budget.samples >= 1, "sample_omega: at least one sample");
    require(analyses.size() == system.size(), "sample_omega: one analysis per matrix is required");

    OmegaSample out;
    out.x0 = x0;
    std::vector<double> grid(budget.samples);
    for (std::size_t k = 0; k < budget.samples; ++k) {
        grid[k] = budget.samples == 1 ? budget.horizon
                                      : budget.late_start + (budget.horizon - budget.late_start)
                                                                * static_cast<double>(k)
                                                                / static_cast<double>(budget.samples - 1);
    }

    std::vector<SwitchPointGroup> groups(system.size());
    for (std::size_t i = 0; i < groups.size(); ++i)
        groups[i].index = i;

    FlowIntegrator integrator(system, signal);
    integrator.advance_to(budget.late_start);
    for (double t : grid) {
        // visit the switching times up to t first, in order
        while (true) {
            const Segment seg = integrator.current_segment();
            if (seg.end > t)
                break;
            integrator.advance_to(seg.end);
            const Segment& now = integrator.current_segment();
            auto& g = groups[now.value];
            if (now.start >= budget.late_start) {
                g.times.push_back(now.start);
                g.matrices.push_back(integrator.phi_at_segment_start());
                if (g.times.size() > budget.max_switch_points) {
                    g.times.erase(g.times.begin());
                    g.matrices.erase(g.matrices.begin());
                }
            }
        }
        Matrix phi = integrator.at(t);
        out.sample_times.push_back(t);
        out.orthogonal_cluster.push_back(polar_decompose(phi).orthogonal);
        out.norms.push_back((phi * x0).norm());
        out.matrix_points.push_back(std::move(phi));
    }
    for (auto& g : groups)
        if (!g.times.empty())
            out.switch_points.push_back(std::move(g));

    const auto [lo, hi] = std::minmax_element(out.norms.begin(), out.norms.end());
    out.radius = *lo;
    out.radius_spread = *hi - *lo;

    std::vector<Vector> cluster;
    for (const auto& g : out.switch_points)
        for (const auto& m : g.matrices)
            cluster.push_back(m * x0);
    for (const auto& m : out.matrix_points) {
        const Vector y = m * x0;
        std::vector<double> dv;
        for (const auto& a : analyses)
            dv.push_back(a.V.distance(y));
        out.distance_to_v.push_back(std::move(dv));
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : cluster)
            best = std::min(best, (y - c).norm());
        out.distance_to_switch_cluster.push_back(best);
    }
    return out;
}

struct InclusionReport {
    // Omega x ⊂ omega x ∪ (∪ V_i)
    double union_v_or_switch_max_distance = 0.0;
    double union_v_max_distance = 0.0;
    bool union_v_or_switch_pass = false;

    // Omega x ⊂ F_u = ∪_{i ∈ J_u} K_i, and Omega x meets every K_i, i ∈ J_u
    std::vector<std::size_t> j_u;
    double f_u_max_distance = 0.0;
    std::vector<double> k_min_distance; // per i in j_u
    bool f_u_pass = false;

    // H(i) ⇒ Omega x meets V_i
    std::vector<std::size_t> h_indices;
    std::vector<double> h_v_min_distance;
    bool h_pass = false;

    // regular input ⇒ rank S_u <= min dim V_i
    bool rank_applicable = false;
    Eigen::Index su_rank = 0;
    Eigen::Index min_v_dim = 0;
    bool rank_pass = true;
};

inline InclusionReport inclusion_checks(const OmegaSample& samples, const std::vector<MatrixAnalysis>& analyses,
                                        const SignalClassification& classification,
                                        const std::optional<SuEstimate>& su = std::nullopt,
                                        const Tolerances& tol = {})
{
    InclusionReport rep;
    const std::size_t p = analyses.size();
    std::vector<Vector> ys;
    for (const auto& m : samples.matrix_points)
        ys.push_back(m * samples.x0);

    for (std::size_t k = 0; k < ys.size(); ++k) {
        double to_v = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < p; ++i)
            to_v = std::min(to_v, analyses[i].V.distance(ys[k]));
        rep.union_v_max_distance = std::max(rep.union_v_max_distance, to_v);
        const double to_switch = k < samples.distance_to_switch_cluster.size()
                                     ? samples.distance_to_switch_cluster[k]
                                     : std::numeric_limits<double>::infinity();
        rep.union_v_or_switch_max_distance = std::max(rep.union_v_or_switch_max_distance, std::min(to_v, to_switch));
    }
    rep.union_v_or_switch_pass = rep.union_v_or_switch_max_distance <= tol.inclusion;

    rep.j_u = classification.j_u;
    rep.f_u_pass = !rep.j_u.empty();
    for (const auto& y : ys) {
        double to_f = std::numeric_limits<double>::infinity();
        for (std::size_t i : rep.j_u)
            to_f = std::min(to_f, analyses.at(i).K.distance(y));
        rep.f_u_max_distance = std::max(rep.f_u_max_distance, to_f);
    }
    for (std::size_t i : rep.j_u) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& y : ys)
            best = std::min(best, analyses.at(i).K.distance(y));
        rep.k_min_distance.push_back(best);
        rep.f_u_pass = rep.f_u_pass && best <= tol.inclusion;
    }
    rep.f_u_pass = rep.f_u_pass && rep.f_u_max_distance <= tol.inclusion;

    rep.h_pass = true;
    for (std::size_t i = 0; i < classification.per_index.size() && i < p; ++i) {
        if (classification.per_index[i].h != HStatus::yes)
            continue;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& y : ys)
            best = std::min(best, analyses[i].V.distance(y));
        rep.h_indices.push_back(i);
        rep.h_v_min_distance.push_back(best);
        rep.h_pass = rep.h_pass && best <= tol.inclusion;
    }

    rep.min_v_dim = std::numeric_limits<Eigen::Index>::max();
    for (const auto& a : analyses)
        rep.min_v_dim = std::min(rep.min_v_dim, a.V.dim());
    rep.rank_applicable = su.has_value() && classification.regular == Regularity::regular;
    if (su)
        rep.su_rank = su->rank;
    rep.rank_pass = !rep.rank_applicable || rep.su_rank <= rep.min_v_dim;
    return rep;
}

} // namespace swlim
