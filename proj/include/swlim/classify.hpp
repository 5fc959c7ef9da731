#pragma once

// Finite-horizon classification of switching signals. The defining
// properties (chaotic windows, H(i), infinite occupancy) quantify over the
// whole half-line, so a verdict is read from generator metadata whenever the
// signal has one and from prefix heuristics otherwise; the heuristics are
// allowed to answer "undecidable".

#include <swlim/signal.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <type_traits>
#include <vector>

namespace swlim {

enum class HStatus { yes, no_evidence };
enum class Chaoticity { chaotic, non_chaotic, undecidable };
enum class Regularity { regular, not_regular, undecidable };

inline const char* to_string(HStatus h)
{
    return h == HStatus::yes ? "yes" : "no-evidence";
}

inline const char* to_string(Chaoticity c)
{
    switch (c) {
    case Chaoticity::chaotic: return "chaotic";
    case Chaoticity::non_chaotic: return "non-chaotic";
    default: return "undecidable-from-prefix";
    }
}

inline const char* to_string(Regularity r)
{
    switch (r) {
    case Regularity::regular: return "regular";
    case Regularity::not_regular: return "not-regular";
    default: return "undecidable-from-prefix";
    }
}

struct ClassifyOptions {
    double min_recurrent_dwell = 1e-2; // H(i) evidence needs dwells at least this long
    double scan_window = 1.0;          // window length for the chaoticity scan
    std::size_t min_switches = 20;     // fewer switches: chaoticity undecidable
    double shrink_floor = 1e-2;        // window max-dwell below this counts as shrinking
    double occupancy_slope_floor = 1e-2;
};

struct IndexEvidence {
    HStatus h = HStatus::no_evidence;
    bool definitive = false;          // verdict follows from the generator, not the prefix
    double recurrent_dwell = 0.0;     // the delta backing H(i)
    std::size_t recurrent_count = 0;  // segments of this index inside the horizon
    double occupancy = 0.0;           // m_i(T)
};

struct SignalClassification {
    double horizon = 0.0;
    std::vector<IndexEvidence> per_index;
    Chaoticity chaotic = Chaoticity::undecidable;
    Regularity regular = Regularity::undecidable;
    std::vector<std::size_t> j_u; // indices with unbounded occupancy (estimate)
    std::string basis;            // "metadata" or "prefix-heuristic"
};

namespace detail {

// Longest constant run of the signal inside [s, s + len].
inline double window_max_dwell(const std::vector<Segment>& segs, std::size_t first, double s, double len)
{
    double best = 0.0;
    for (std::size_t n = first; n < segs.size() && segs[n].start < s + len; ++n) {
        const double lo = std::max(segs[n].start, s);
        const double hi = std::min(segs[n].end, s + len);
        best = std::max(best, hi - lo);
    }
    return best;
}

inline double min_of(const std::vector<double>& v, std::size_t lo, std::size_t hi)
{
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = lo; k < hi; ++k)
        m = std::min(m, v[k]);
    return m;
}

inline Chaoticity scan_chaoticity(const std::vector<Segment>& segs, double horizon, const ClassifyOptions& opt)
{
    std::vector<double> maxima;
    std::size_t switches = 0;
    for (std::size_t n = 0; n < segs.size(); ++n) {
        if (segs[n].start > 0.0 && segs[n].start <= horizon)
            ++switches;
        if (segs[n].start + opt.scan_window <= horizon)
            maxima.push_back(window_max_dwell(segs, n, segs[n].start, opt.scan_window));
    }
    if (switches < opt.min_switches || maxima.size() < 8)
        return Chaoticity::undecidable;

    const std::size_t n = maxima.size();
    const double q1 = min_of(maxima, 0, n / 4);
    const double q2 = min_of(maxima, n / 4, n / 2);
    const double q3 = min_of(maxima, n / 2, 3 * n / 4);
    const double q4 = min_of(maxima, 3 * n / 4, n);
    if (q2 < q1 && q3 < q2 && q4 < q3 && q4 <= q1 / 2 && q4 < opt.shrink_floor)
        return Chaoticity::chaotic;
    const double early = std::min(q1, q2);
    const double late = std::min(q3, q4);
    if (late >= 0.5 * early && late >= opt.shrink_floor)
        return Chaoticity::non_chaotic;
    return Chaoticity::undecidable;
}

} // namespace detail

/// Classifies the prefix [0, horizon] of `signal`.
inline SignalClassification classify(const SwitchingSignal& signal, double horizon, const ClassifyOptions& opt = {})
{
    require(std::isfinite(horizon) && horizon > 0.0, "classify: horizon must be positive");
    const std::size_t p = signal.num_indices();
    const std::vector<Segment> segs = signal.segments_until(horizon);

    SignalClassification out;
    out.horizon = horizon;
    out.per_index.resize(p);

    const std::vector<double> occ = signal.occupancy(horizon);
    std::vector<std::vector<double>> dwells(p);
    for (const auto& seg : segs) {
        if (seg.end <= horizon)
            dwells[seg.value].push_back(seg.dwell());
    }
    const std::size_t need = std::max<std::size_t>(10, static_cast<std::size_t>(horizon / 20.0));
    for (std::size_t i = 0; i < p; ++i) {
        auto& ev = out.per_index[i];
        ev.occupancy = occ[i];
        auto& d = dwells[i];
        std::sort(d.begin(), d.end(), std::greater<>());
        ev.recurrent_count = d.size();
        if (d.size() >= need) {
            ev.recurrent_dwell = d[need - 1];
            if (ev.recurrent_dwell >= opt.min_recurrent_dwell)
                ev.h = HStatus::yes;
        }
    }

    // metadata overrides
    auto set_all = [&](double delta) {
        for (auto& ev : out.per_index) {
            ev.h = HStatus::yes;
            ev.definitive = true;
            ev.recurrent_dwell = delta;
        }
        out.j_u.resize(p);
        std::iota(out.j_u.begin(), out.j_u.end(), std::size_t{0});
    };
    bool have_metadata = true;
    std::visit(
        [&](const auto& g) {
            using G = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<G, PeriodicGenerator>) {
                out.chaotic = Chaoticity::non_chaotic;
                std::vector<double> min_dwell(p, std::numeric_limits<double>::infinity());
                for (const auto& e : g.pattern)
                    min_dwell[e.index] = std::min(min_dwell[e.index], e.duration);
                for (std::size_t i = 0; i < p; ++i) {
                    auto& ev = out.per_index[i];
                    ev.definitive = true;
                    if (std::isfinite(min_dwell[i])) {
                        ev.h = HStatus::yes;
                        ev.recurrent_dwell = min_dwell[i];
                        out.j_u.push_back(i);
                    } else {
                        ev.h = HStatus::no_evidence;
                        ev.recurrent_dwell = 0.0;
                    }
                }
            } else if constexpr (std::is_same_v<G, AverageDwellGenerator>) {
                out.chaotic = Chaoticity::non_chaotic;
                set_all(0.05 * g.tau_a);
            } else if constexpr (std::is_same_v<G, ChaoticGenerator>) {
                out.chaotic = Chaoticity::chaotic;
                set_all(1.0);
            } else if (g.unbounded_tail) {
                // eventually constant: only the tail index recurs
                out.chaotic = Chaoticity::non_chaotic;
                const std::size_t tail = signal.tail_value().value();
                for (std::size_t i = 0; i < p; ++i) {
                    auto& ev = out.per_index[i];
                    ev.definitive = true;
                    ev.h = i == tail ? HStatus::yes : HStatus::no_evidence;
                    ev.recurrent_dwell = i == tail ? 1.0 : 0.0;
                }
                out.j_u = {tail};
            } else {
                have_metadata = false;
            }
        },
        signal.generator());

    if (have_metadata) {
        out.basis = "metadata";
    } else {
        out.basis = "prefix-heuristic";
        out.chaotic = detail::scan_chaoticity(segs, horizon, opt);
        const double half = horizon / 2.0;
        const std::vector<double> occ_half = signal.occupancy(half);
        for (std::size_t i = 0; i < p; ++i)
            if ((occ[i] - occ_half[i]) / half >= opt.occupancy_slope_floor)
                out.j_u.push_back(i);
    }

    bool all_h = true;
    bool definitive_no = false;
    for (const auto& ev : out.per_index) {
        all_h = all_h && ev.h == HStatus::yes;
        definitive_no = definitive_no || (ev.definitive && ev.h != HStatus::yes);
    }
    if (out.chaotic == Chaoticity::chaotic || definitive_no)
        out.regular = Regularity::not_regular;
    else if (out.chaotic == Chaoticity::non_chaotic && all_h)
        out.regular = Regularity::regular;
    else
        out.regular = Regularity::undecidable;
    return out;
}

} // namespace swlim
