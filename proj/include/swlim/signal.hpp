#pragma once

// Piecewise-constant, right-continuous switching signals u = (a_n, u_n).
//
// A signal is a shared handle to a lazily extended prefix of segments
// [a_n, a_{n+1}). Generators are deterministic in (parameters, seed): the
// prefix is a pure function of how far it has been extended, so copies of a
// signal and independent re-creations agree segment for segment. Extension
// is serialized by a mutex; segments already stored never change.

#include <swlim/config.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace swlim {

struct PatternEntry {
    std::size_t index = 0;
    double duration = 0.0;
};

struct ExplicitGenerator {
    bool unbounded_tail = false; // last segment extends to +inf
};
struct PeriodicGenerator {
    std::vector<PatternEntry> pattern;
};
struct AverageDwellGenerator {
    int n0 = 1;
    double tau_a = 1.0;
    std::uint64_t seed = 0;
};
struct ChaoticGenerator {
    double tau = 1.0;
    std::uint64_t seed = 0;
};

using GeneratorSpec = std::variant<ExplicitGenerator, PeriodicGenerator, AverageDwellGenerator, ChaoticGenerator>;

/// One constant piece [start, end) of a signal.
struct Segment {
    double start = 0.0;
    double end = 0.0;
    std::size_t value = 0;

    double dwell() const { return end - start; }
};

/// A window [start, start + tau] of the chaotic generator and the bound on
/// every dwell inside it.
struct ChaoticWindow {
    double start = 0.0;
    double length = 0.0;
    double max_dwell = 0.0;
};

namespace detail {

// Uniform double in [0, 1) from the top 53 bits; platform independent,
// unlike std::uniform_real_distribution.
inline double unit_uniform(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n)
{
    return std::min(n - 1, static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(n)));
}

struct SignalState {
    std::mutex mutex;
    std::vector<double> starts;       // a_0 .. a_{N-1}
    std::vector<std::size_t> values;  // u_0 .. u_{N-1}
    double end = 0.0;                 // a_N; +inf for an unbounded last segment
    bool extensible = false;

    std::size_t periodic_next = 0;    // periodic: index of the next segment to emit

    std::mt19937_64 rng;
    double tokens = 0.0;              // average dwell: bucket content after the last switch

    std::size_t window = 0;           // chaotic: next window number
    std::vector<ChaoticWindow> windows;

    void push(double start, double stop, std::size_t value)
    {
        starts.push_back(start);
        values.push_back(value);
        end = stop;
    }
};

} // namespace detail

class SwitchingSignal {
public:
    SwitchingSignal() = default;

    /// Explicit prefix. `times` holds a_0 = 0 < a_1 < ... and has either
    /// values.size() + 1 entries (the last one is the horizon) or
    /// values.size() entries (the last segment never ends). Repeated
    /// consecutive values are merged.
    static SwitchingSignal explicit_signal(const std::vector<double>& times,
                                           const std::vector<std::size_t>& values,
                                           std::optional<std::size_t> num_indices = std::nullopt)
    {
        require(!values.empty(), "explicit signal: at least one value is required");
        require(times.size() == values.size() || times.size() == values.size() + 1,
                "explicit signal: times must have len(values) or len(values)+1 entries");
        require(times.front() == 0.0, "explicit signal: times[0] must be 0");
        for (std::size_t n = 0; n + 1 < times.size(); ++n)
            require(std::isfinite(times[n + 1]) && times[n + 1] > times[n],
                    "explicit signal: times must be finite and strictly increasing");
        const std::size_t max_value = *std::max_element(values.begin(), values.end());
        const std::size_t p = num_indices.value_or(max_value + 1);
        require(max_value < p, "explicit signal: value out of range for the number of indices");

        SwitchingSignal s(p, ExplicitGenerator{times.size() == values.size()});
        auto& st = *s.state_;
        for (std::size_t n = 0; n < values.size(); ++n) {
            const double stop = n + 1 < times.size() ? times[n + 1] : std::numeric_limits<double>::infinity();
            if (!st.values.empty() && st.values.back() == values[n])
                st.end = stop;
            else
                st.push(times[n], stop, values[n]);
        }
        return s;
    }

    static SwitchingSignal constant(std::size_t index, std::size_t num_indices)
    {
        return explicit_signal({0.0}, {index}, num_indices);
    }

    /// Repeats `pattern` forever. Consecutive entries (cyclically) must differ;
    /// a one-entry pattern is accepted only when num_indices == 1.
    static SwitchingSignal periodic(std::vector<PatternEntry> pattern, std::size_t num_indices)
    {
        require(!pattern.empty(), "periodic signal: empty pattern");
        require(num_indices >= 1, "periodic signal: num_indices must be positive");
        for (const auto& e : pattern) {
            require(std::isfinite(e.duration) && e.duration > 0.0, "periodic signal: durations must be positive");
            require(e.index < num_indices, "periodic signal: index out of range");
        }
        if (pattern.size() == 1) {
            require(num_indices == 1, "periodic signal: a single-entry pattern needs a self-switch");
            return constant(pattern.front().index, 1);
        }
        for (std::size_t k = 0; k < pattern.size(); ++k)
            require(pattern[k].index != pattern[(k + 1) % pattern.size()].index,
                    "periodic signal: consecutive pattern entries must differ");
        SwitchingSignal s(num_indices, PeriodicGenerator{std::move(pattern)});
        s.state_->extensible = true;
        return s;
    }

    /// Token-bucket generator: capacity n0, refill 1/tau_a, one token per
    /// switch. Every window satisfies N(T, T+t) <= n0 + t / tau_a.
    static SwitchingSignal average_dwell(int n0, double tau_a, std::size_t num_indices, std::uint64_t seed)
    {
        require(n0 >= 1, "average dwell signal: n0 must be >= 1");
        require(std::isfinite(tau_a) && tau_a > 0.0, "average dwell signal: tau_a must be positive");
        require(num_indices >= 1, "average dwell signal: num_indices must be positive");
        SwitchingSignal s(num_indices, AverageDwellGenerator{n0, tau_a, seed});
        auto& st = *s.state_;
        st.rng.seed(seed);
        const std::size_t first = detail::uniform_index(st.rng, num_indices);
        if (num_indices == 1) {
            st.push(0.0, std::numeric_limits<double>::infinity(), first);
            s.spec_ = ExplicitGenerator{true};
            return s;
        }
        st.tokens = n0 - 1.0;
        st.starts.push_back(0.0);
        st.values.push_back(first);
        st.end = 0.0; // the first segment's end is decided by the next switch
        st.extensible = true;
        return s;
    }

    /// Windows [t_k, t_k + tau] of k + 2 dwells of length tau/(k + 2) each,
    /// separated by one unit dwell on every index in a seeded order.
    static SwitchingSignal chaotic(double tau, std::size_t num_indices, std::uint64_t seed)
    {
        require(std::isfinite(tau) && tau > 0.0, "chaotic signal: tau must be positive");
        require(num_indices >= 2, "chaotic signal: at least two indices are required");
        SwitchingSignal s(num_indices, ChaoticGenerator{tau, seed});
        s.state_->rng.seed(seed);
        s.state_->extensible = true;
        return s;
    }

    std::size_t num_indices() const { return num_indices_; }
    const GeneratorSpec& generator() const { return spec_; }
    bool is_explicit() const { return std::holds_alternative<ExplicitGenerator>(spec_); }

    /// End of the stored prefix; +inf if the last segment never ends.
    double horizon() const
    {
        std::lock_guard lock(state_->mutex);
        return state_->end;
    }

    /// True when the signal can cover any time (generators, unbounded tails).
    bool unbounded() const
    {
        std::lock_guard lock(state_->mutex);
        return state_->extensible || std::isinf(state_->end);
    }

    /// Value of a last segment that never ends, if there is one.
    std::optional<std::size_t> tail_value() const
    {
        std::lock_guard lock(state_->mutex);
        if (std::isinf(state_->end))
            return state_->values.back();
        return std::nullopt;
    }

    /// Extends the prefix so that [0, t] is covered (t <= end for explicit prefixes).
    /// Throws std::out_of_range for explicit signals that stop before t.
    void extend_to(double t) const
    {
        require(std::isfinite(t), "signal: non-finite time");
        std::lock_guard lock(state_->mutex);
        extend_locked(t);
    }

    /// u(t), right-continuous at switching times.
    std::size_t value_at(double t) const
    {
        require(t >= 0.0, "signal: negative time");
        std::lock_guard lock(state_->mutex);
        extend_locked(t);
        if (!(t < state_->end))
            throw std::out_of_range("signal: time " + std::to_string(t) + " is beyond the explicit horizon "
                                    + std::to_string(state_->end));
        const auto& starts = state_->starts;
        const auto it = std::upper_bound(starts.begin(), starts.end(), t);
        return state_->values[static_cast<std::size_t>(it - starts.begin()) - 1];
    }

    /// Segment n; extends the prefix as needed. nullopt when an explicit
    /// signal has fewer segments.
    std::optional<Segment> segment(std::size_t n) const
    {
        std::lock_guard lock(state_->mutex);
        auto& st = *state_;
        while (st.values.size() <= n + 1 && st.extensible)
            append_locked();
        if (n >= st.values.size())
            return std::nullopt;
        return Segment{st.starts[n], segment_end_locked(n), st.values[n]};
    }

    /// All segments intersecting [0, t], the last one clipped to end no earlier than t.
    std::vector<Segment> segments_until(double t) const
    {
        std::lock_guard lock(state_->mutex);
        extend_locked(t);
        std::vector<Segment> out;
        const auto& st = *state_;
        for (std::size_t n = 0; n < st.values.size() && st.starts[n] <= t; ++n)
            out.push_back(Segment{st.starts[n], segment_end_locked(n), st.values[n]});
        return out;
    }

    /// Switching times a_n with 0 < a_n <= t.
    std::vector<double> switch_times_until(double t) const
    {
        std::vector<double> out;
        for (const auto& seg : segments_until(t))
            if (seg.start > 0.0)
                out.push_back(seg.start);
        return out;
    }

    /// Windows of the chaotic generator that start before t.
    std::vector<ChaoticWindow> chaotic_windows_until(double t) const
    {
        std::lock_guard lock(state_->mutex);
        extend_locked(t);
        std::vector<ChaoticWindow> out;
        for (const auto& w : state_->windows)
            if (w.start <= t)
                out.push_back(w);
        return out;
    }

    /// Measure of {s <= t : u(s) = i} for each index.
    std::vector<double> occupancy(double t) const
    {
        std::vector<double> m(num_indices_, 0.0);
        for (const auto& seg : segments_until(t)) {
            const double stop = std::min(seg.end, t);
            if (stop > seg.start)
                m.at(seg.value) += stop - seg.start;
        }
        return m;
    }

private:
    SwitchingSignal(std::size_t num_indices, GeneratorSpec spec)
        : num_indices_(num_indices), spec_(std::move(spec)), state_(std::make_shared<detail::SignalState>())
    {
    }

    double segment_end_locked(std::size_t n) const
    {
        const auto& st = *state_;
        return n + 1 < st.starts.size() ? st.starts[n + 1] : st.end;
    }

    void extend_locked(double t) const
    {
        auto& st = *state_;
        // the last stored segment's end must be known and > t
        while (st.extensible && (st.end <= t || st.starts.size() < 2))
            append_locked();
        if (!(t < st.end || (!st.extensible && t == st.end)))
            throw std::out_of_range("signal: time " + std::to_string(t) + " is beyond the explicit horizon "
                                    + std::to_string(st.end));
    }

    void append_locked() const
    {
        std::visit([this](const auto& g) { append_from(g); }, spec_);
    }

    void append_from(const ExplicitGenerator&) const {}

    void append_from(const PeriodicGenerator& g) const
    {
        auto& st = *state_;
        const std::size_t len = g.pattern.size();
        double period = 0.0;
        for (const auto& e : g.pattern)
            period += e.duration;
        const std::size_t n = st.periodic_next++;
        const std::size_t cycle = n / len;
        const std::size_t pos = n % len;
        double offset = 0.0;
        for (std::size_t k = 0; k < pos; ++k)
            offset += g.pattern[k].duration;
        const double start = static_cast<double>(cycle) * period + offset;
        const double stop = pos + 1 == len ? static_cast<double>(cycle + 1) * period
                                           : start + g.pattern[pos].duration;
        st.push(start, stop, g.pattern[pos].index);
    }

    void append_from(const AverageDwellGenerator& g) const
    {
        auto& st = *state_;
        const double last = st.starts.back();
        double dwell = (0.05 + 1.95 * detail::unit_uniform(st.rng)) * g.tau_a;
        double refill = dwell / g.tau_a;
        if (st.tokens + refill < 1.0) {
            refill = 1.0 - st.tokens;
            dwell = refill * g.tau_a;
        }
        st.tokens = std::min(static_cast<double>(g.n0), st.tokens + refill) - 1.0;
        const double when = last + dwell;
        std::size_t next = detail::uniform_index(st.rng, num_indices_ - 1);
        if (next >= st.values.back())
            ++next;
        // the newest segment stays open: its end is unknown until the next
        // draw, so `end` marks where the covered prefix stops
        st.starts.push_back(when);
        st.values.push_back(next);
        st.end = when;
    }

    void append_from(const ChaoticGenerator& g) const
    {
        auto& st = *state_;
        const std::size_t p = num_indices_;
        double t = st.end;
        std::size_t prev = st.values.empty() ? p : st.values.back();

        // separating stretch: one unit dwell on every index
        std::vector<std::size_t> order(p);
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t k = p - 1; k > 0; --k)
            std::swap(order[k], order[detail::uniform_index(st.rng, k + 1)]);
        if (order.front() == prev)
            std::rotate(order.begin(), order.begin() + 1, order.end());
        for (std::size_t idx : order) {
            st.push(t, t + 1.0, idx);
            t += 1.0;
        }
        prev = order.back();

        // window k: k + 2 equal dwells cycling through the indices
        const std::size_t k = st.window++;
        const std::size_t pieces = k + 2;
        const double eps = g.tau / static_cast<double>(pieces);
        st.windows.push_back(ChaoticWindow{t, g.tau, eps});
        std::size_t idx = (prev + 1) % p;
        for (std::size_t j = 0; j < pieces; ++j) {
            const double start = t + static_cast<double>(j) * eps;
            const double stop = j + 1 == pieces ? t + g.tau : t + static_cast<double>(j + 1) * eps;
            st.push(start, stop, idx);
            idx = (idx + 1) % p;
        }
    }

    std::size_t num_indices_ = 1;
    GeneratorSpec spec_;
    std::shared_ptr<detail::SignalState> state_ = std::make_shared<detail::SignalState>();
};

} // namespace swlim
