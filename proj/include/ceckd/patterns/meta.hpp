#ifndef CECKD_PATTERNS_META_HPP
#define CECKD_PATTERNS_META_HPP

#include <algorithm>
#include <set>
#include <utility>
#include <vector>

#include "ceckd/ec/types.hpp"
#include "ceckd/error.hpp"
#include "ceckd/patterns/pattern.hpp"
#include "ceckd/patterns/signals.hpp"

namespace ceckd::patterns {

/// Closed-open tick window [start, end).
struct Window {
    Tick start = 0;
    Tick end = 0;

    /// The ticks [t - span, t].
    static Window ending_at(Tick t, Tick span) { return {t - span, t + 1}; }
};

/// A tick at which every atom held, with the readings that made it so.
struct Hit {
    Tick tick = 0;
    std::vector<ec::FluentAssignment> readings; // one per atom, atom order

    std::vector<ec::Witness> witnesses() const
    {
        std::vector<ec::Witness> out;
        for (const auto& r : readings)
            out.push_back({tick, r});
        return out;
    }
};

struct CountResult {
    bool satisfied = false;
    std::vector<Hit> hits; // ascending tick
};

struct PairResult {
    bool satisfied = false;
    std::size_t pairs = 0;
    std::vector<Hit> first; // ascending tick
    std::vector<Hit> then;  // ascending tick
};

namespace detail {

struct Span {
    Tick start;
    Tick end;
    const ec::Mvi* mvi;
};

} // namespace detail

/**
 * Ticks in `w` that carry a reading of one of the atoms' signals and at
 * which every atom's signal fluent holds a value passing its comparator.
 */
inline std::vector<Hit> matching_ticks(const ec::QueryContext& ctx, const std::vector<ThresholdAtom>& atoms, Window w)
{
    ec::require_window(w.start, w.end);
    std::vector<Hit> out;
    if (w.start == w.end || atoms.empty())
        return out;

    std::vector<std::vector<ec::Mvi>> mvis(atoms.size());
    std::vector<std::vector<detail::Span>> spans(atoms.size());
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        ctx.visit_cached_between(w.start, w.end, ec::FluentPattern::of(obs_fluent(atoms[i].signal)),
                                 [&](const ec::Mvi& m) {
                                     if (auto v = reading_of(m.assignment.value); v && atoms[i].accepts(*v))
                                         mvis[i].push_back(m);
                                 });
        if (mvis[i].empty())
            return out;
        for (const auto& m : mvis[i])
            spans[i].push_back({m.start, m.end, &m});
        std::sort(spans[i].begin(), spans[i].end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    }

    std::vector<Tick> ticks;
    std::set<std::string> signals;
    for (const auto& a : atoms)
        if (signals.insert(a.signal).second)
            ctx.visit_happens_in_window(obs_events_of(a.signal), w.start, w.end - 1,
                                        [&](const ec::EventOccurrence& e) { ticks.push_back(e.time); });
    ec::sort_unique(ticks);

    for (Tick t : ticks) {
        Hit hit{t, {}};
        for (const auto& s : spans) {
            // intervals of one fluent are disjoint: the last one starting at or before t decides
            auto it = std::upper_bound(s.begin(), s.end(), t, [](Tick x, const detail::Span& sp) { return x < sp.start; });
            if (it == s.begin() || std::prev(it)->end <= t)
                break;
            hit.readings.push_back(std::prev(it)->mvi->assignment);
        }
        if (hit.readings.size() == atoms.size())
            out.push_back(std::move(hit));
    }
    return out;
}

/// At least `frequency` matching ticks in `w`.
inline CountResult more_or_equals_to(const ec::QueryContext& ctx, std::size_t frequency,
                                     const std::vector<ThresholdAtom>& atoms, Window w)
{
    CountResult r;
    r.hits = matching_ticks(ctx, atoms, w);
    r.satisfied = r.hits.size() >= frequency;
    return r;
}

/// Number of pairs (a, b) with a from `first`, b from `then` and a < b.
inline std::size_t ordered_pairs(const std::vector<Hit>& first, const std::vector<Hit>& then)
{
    std::size_t n = 0, i = 0;
    for (const auto& b : then) {
        while (i < first.size() && first[i].tick < b.tick)
            ++i;
        n += i;
    }
    return n;
}

/**
 * At least `frequency` pairs (t1, t2), t1 < t2, with t1 a matching tick of
 * `atoms1` in `w1` and t2 a matching tick of `atoms2` in `w2`.
 */
inline PairResult constrained_more_or_equals_to(const ec::QueryContext& ctx, std::size_t frequency,
                                                const std::vector<ThresholdAtom>& atoms1,
                                                const std::vector<ThresholdAtom>& atoms2, Window w1, Window w2)
{
    ec::require_window(w1.start, w1.end);
    ec::require_window(w2.start, w2.end);
    if (w2.end <= w1.start)
        throw MalformedWindow("second window [" + std::to_string(w2.start) + "," + std::to_string(w2.end) +
                              ") ends before the first one starts at " + std::to_string(w1.start));
    PairResult r;
    r.first = matching_ticks(ctx, atoms1, w1);
    if (!r.first.empty())
        r.then = matching_ticks(ctx, atoms2, w2);
    r.pairs = ordered_pairs(r.first, r.then);
    r.satisfied = r.pairs >= frequency;
    return r;
}

} // namespace ceckd::patterns

#endif // CECKD_PATTERNS_META_HPP
