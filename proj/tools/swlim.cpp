// swlim: command-line front end for the switched-system analysis library.

#include <swlim/swlim.hpp>

#include "CLI11.hpp"

#include <iostream>
#include <sstream>
#include <string>

namespace {

using namespace swlim;

constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_lyapunov = 2;
constexpr int exit_not_converged = 3;

struct Globals {
    double tol_rank = Tolerances{}.rank;
    double tol_conv = Tolerances{}.convergence;
    double horizon = -1.0; // negative: command default
    std::uint64_t seed = 0;
    std::string out;
};

Tolerances tolerances(const Globals& g)
{
    require(g.tol_rank > 0.0 && g.tol_rank < 1.0, "--tol-rank must lie in (0, 1)");
    require(g.tol_conv > 0.0 && g.tol_conv < 1.0, "--tol-conv must lie in (0, 1)");
    Tolerances tol;
    tol.rank = g.tol_rank;
    tol.convergence = g.tol_conv;
    return tol;
}

double horizon_or(const Globals& g, double fallback)
{
    return g.horizon >= 0.0 ? g.horizon : fallback;
}

// Writes `content` to --out, or to stdout when no path is given.
void emit(const Globals& g, const std::string& content)
{
    if (g.out.empty())
        std::cout << content;
    else
        write_file_atomic(g.out, content);
}

Vector parse_vector(const std::string& text)
{
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw format_error("x0: '" + item + "' is not a number");
        }
        if (item.find_first_not_of(" \t", used) != std::string::npos || !std::isfinite(v))
            throw format_error("x0: '" + item + "' is not a finite number");
        vals.push_back(v);
    }
    if (vals.empty())
        throw format_error("x0: expected comma-separated reals");
    return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

SwitchedSystem load_system(const std::string& path)
{
    try {
        return system_from_json(read_json_file(path));
    } catch (const format_error& e) {
        throw format_error(path + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw format_error(path + ": " + e.what());
    }
}

SwitchingSignal load_signal(const std::string& path, std::size_t p, std::uint64_t seed)
{
    try {
        return signal_from_json(read_json_file(path), p, seed);
    } catch (const format_error& e) {
        throw format_error(path + ": " + e.what());
    }
}

// The flow is computed where the Lyapunov matrix is the identity.
SwitchedSystem simulation_system(const SwitchedSystem& sys, const Tolerances& tol)
{
    const LyapunovVerdict lv = check_common_lyapunov(sys, tol);
    if (!lv.pass)
        throw std::domain_error("common Lyapunov condition fails for matrix " + std::to_string(lv.index));
    return normalize_system(sys, tol);
}

int cmd_analyze(const Globals& g, const std::string& system_path, bool text)
{
    const Tolerances tol = tolerances(g);
    const SwitchedSystem sys = load_system(system_path);
    const StabilityReport rep = assess(sys, tol);
    emit(g, dump_json(to_json(rep)));
    if (text || !g.out.empty())
        std::cout << render_text(rep);
    return rep.lyapunov_ok ? exit_ok : exit_lyapunov;
}

int cmd_simulate(const Globals& g, const std::string& system_path, const std::string& signal_path,
                 const std::string& x0_text, std::size_t samples)
{
    const Tolerances tol = tolerances(g);
    const SwitchedSystem raw = load_system(system_path);
    Vector x0 = parse_vector(x0_text);
    if (x0.size() != raw.dim())
        throw format_error("x0: expected " + std::to_string(raw.dim()) + " entries, got "
                           + std::to_string(x0.size()));
    const SwitchingSignal sig = load_signal(signal_path, raw.size(), g.seed);
    const double horizon = horizon_or(g, 10.0);

    const SwitchedSystem sys = simulation_system(raw, tol);
    if (raw.has_lyapunov())
        x0 = sym_sqrt(raw.lyapunov()) * x0;

    const FlowRecord rec = flow_record(sys, sig, uniform_grid(horizon, samples), {x0});
    std::ostringstream csv;
    write_trajectory_csv(csv, rec);
    emit(g, csv.str());

    double worst = 0.0;
    for (std::size_t n = 1; n < rec.grams.size(); ++n)
        worst = std::max(worst, max_sym_eigenvalue(rec.grams[n] - rec.grams[n - 1]));
    const bool monotone = worst <= 1e-9;

    std::ostream& summary = g.out.empty() ? std::cerr : std::cout;
    summary.precision(17);
    const Vector final_ev = sym_eigenvalues(rec.grams.back());
    summary << "final_norm " << rec.norms[0].back() << '\n' << "final_gram_eigenvalues";
    for (Eigen::Index k = 0; k < final_ev.size(); ++k)
        summary << ' ' << final_ev(k);
    summary << '\n'
            << "gram_monotone " << (monotone ? "yes" : "no") << " (max increase " << worst << ")\n";
    return exit_ok;
}

json su_json(const SwitchedSystem& raw, const SwitchingSignal& sig, double horizon, const Tolerances& tol,
             bool& converged)
{
    const SwitchedSystem sys = simulation_system(raw, tol);
    SuEstimate est = estimate_su(sys, sig, horizon, tol);
    est.rank = psd_rank(est.matrix, tol.su_rank);
    converged = est.converged;
    return to_json(est);
}

int cmd_estimate_su(const Globals& g, const std::string& system_path, const std::string& signal_path)
{
    const Tolerances tol = tolerances(g);
    const SwitchedSystem raw = load_system(system_path);
    const SwitchingSignal sig = load_signal(signal_path, raw.size(), g.seed);
    bool converged = false;
    const json j = su_json(raw, sig, horizon_or(g, 1000.0), tol, converged);
    emit(g, dump_json(j));
    return converged ? exit_ok : exit_not_converged;
}

int cmd_check_signal(const Globals& g, const std::string& signal_path, std::size_t num_matrices,
                     const std::string& system_path)
{
    std::size_t p = num_matrices;
    if (!system_path.empty())
        p = load_system(system_path).size();
    if (p == 0)
        throw format_error("num-matrices: pass --num-matrices or --system");
    const SwitchingSignal sig = load_signal(signal_path, p, g.seed);
    double horizon = horizon_or(g, 100.0);
    if (sig.is_explicit() && !sig.unbounded())
        horizon = std::min(horizon, sig.horizon());
    emit(g, dump_json(to_json(classify(sig, horizon))));
    return exit_ok;
}

int cmd_report(const Globals& g, const std::string& system_path, const std::string& signal_path)
{
    const Tolerances tol = tolerances(g);
    const SwitchedSystem raw = load_system(system_path);
    const SwitchingSignal sig = load_signal(signal_path, raw.size(), g.seed);
    const StabilityReport rep = assess(raw, tol);
    json j;
    j["analysis"] = to_json(rep);
    if (!rep.lyapunov_ok) {
        emit(g, dump_json(j));
        return exit_lyapunov;
    }
    const double horizon = horizon_or(g, 1000.0);
    bool converged = false;
    j["su"] = su_json(raw, sig, horizon, tol, converged);
    double sig_horizon = std::min(horizon, 1000.0);
    if (sig.is_explicit() && !sig.unbounded())
        sig_horizon = std::min(sig_horizon, sig.horizon());
    j["signal"] = to_json(classify(sig, sig_horizon));
    emit(g, dump_json(j));
    if (!g.out.empty())
        std::cout << render_text(rep);
    return converged ? exit_ok : exit_not_converged;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Stability analysis of switched linear systems with a common non-strict Lyapunov matrix"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--tol-rank", g.tol_rank, "relative rank/nullspace tolerance");
    app.add_option("--tol-conv", g.tol_conv, "Gram convergence tolerance");
    app.add_option("--horizon", g.horizon, "time horizon (command-specific default)")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", g.seed, "default seed for random signal generators");
    app.add_option("--out", g.out, "output path (stdout when omitted)");

    std::string system_path, signal_path, x0 = "";
    bool text = false;
    std::size_t samples = 200, num_matrices = 0;

    auto* analyze = app.add_subcommand("analyze", "stability certificates for a system");
    analyze->add_option("system", system_path, "system JSON file")->required();
    analyze->add_flag("--text", text, "also print a human-readable summary");

    auto* simulate = app.add_subcommand("simulate", "trajectory CSV for a system and signal");
    simulate->add_option("system", system_path, "system JSON file")->required();
    simulate->add_option("signal", signal_path, "signal JSON file")->required();
    simulate->add_option("--x0", x0, "initial condition, comma-separated")->required();
    simulate->add_option("--samples", samples, "grid intervals on [0, horizon]")
        ->check(CLI::Range(std::size_t{1}, std::size_t{10000000}));

    auto* su = app.add_subcommand("estimate-su", "limit Gram matrix S_u");
    su->add_option("system", system_path, "system JSON file")->required();
    su->add_option("signal", signal_path, "signal JSON file")->required();

    auto* check = app.add_subcommand("check-signal", "classify a switching signal");
    check->add_option("signal", signal_path, "signal JSON file")->required();
    check->add_option("--num-matrices", num_matrices, "number of matrices p");
    check->add_option("--system", system_path, "take p from this system file");

    auto* report = app.add_subcommand("report", "analyze and estimate-su combined");
    report->add_option("system", system_path, "system JSON file")->required();
    report->add_option("signal", signal_path, "signal JSON file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (analyze->parsed())
            return cmd_analyze(g, system_path, text);
        if (simulate->parsed())
            return cmd_simulate(g, system_path, signal_path, x0, samples);
        if (su->parsed())
            return cmd_estimate_su(g, system_path, signal_path);
        if (check->parsed())
            return cmd_check_signal(g, signal_path, num_matrices, system_path);
        if (report->parsed())
            return cmd_report(g, system_path, signal_path);
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_lyapunov;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_error;
    }
    return exit_error;
}
