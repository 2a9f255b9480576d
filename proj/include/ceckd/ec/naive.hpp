#ifndef CECKD_EC_NAIVE_HPP
#define CECKD_EC_NAIVE_HPP

#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "ceckd/ec/types.hpp"
#include "ceckd/error.hpp"

namespace ceckd::ec {

inline void require_in_order(Tick last, Tick t)
{
    if (t < 0)
        throw OutOfOrderEvent("negative tick " + std::to_string(t));
    if (t < last)
        throw OutOfOrderEvent("event at " + std::to_string(t) + " precedes last event at " + std::to_string(last));
}

/**
 * Reference Event Calculus evaluator. Keeps the raw initiation and
 * termination points produced by the rules and answers every query by
 * direct search over them, with negation as failure read as "no witness
 * in the finite narrative":
 *
 *  - f=v holds at t if it is initially true or initiated at some point
 *    p <= t that is not broken by a later point q <= t, where q breaks p
 *    when it terminates f=v or initiates f to another value;
 *  - an MVI starts at every initiation of f=v that does not find f=v
 *    already holding, and ends at the first point breaking it;
 *  - a termination that is the very first point touching f opens the
 *    left-unbounded interval (-inf, t).
 *
 * Points are ordered by processing order, which refines time order inside
 * a tick. Intervals are closed-open; zero-length ones do not exist.
 */
class AxiomaticEvaluator final : public QueryContext {
public:
    struct Point {
        Tick time;
        bool initiation;
        FluentAssignment assignment;
    };

    explicit AxiomaticEvaluator(std::shared_ptr<const DomainTheory> theory) : theory_(std::move(theory))
    {
        for (const auto& fa : theory_->initially)
            record({0, true, fa});
    }

    void update(const EventOccurrence& e)
    {
        require_in_order(narrative_.empty() ? 0 : narrative_.back().time, e.time);
        narrative_.push_back(e);
        apply_rules(
            *theory_, e, *this, [&](const RuleHit& h) { record({e.time, false, h.assignment}); },
            [&](const RuleHit& h) { record({e.time, true, h.assignment}); });
    }

    const std::vector<EventOccurrence>& narrative() const noexcept { return narrative_; }
    const std::vector<Point>& points() const noexcept { return points_; }

    std::vector<Mvi> holds_for(const FluentPattern& q) const { return mholds_for(q); }

protected:
    std::vector<FluentAssignment> do_holds_at(const FluentPattern& q, Tick t) const override
    {
        std::vector<FluentAssignment> out;
        for_groups(q, [&](const std::vector<std::size_t>& group) {
            for (std::size_t a = 0; a < group.size(); ++a) {
                const Point& p = points_[group[a]];
                if (!q.matches(p.assignment))
                    continue;
                if (p.initiation && p.time <= t && !broken_by(group, a, t))
                    out.push_back(p.assignment);
                else if (!p.initiation && a == 0 && t < p.time)
                    out.push_back(p.assignment);
            }
        });
        return out;
    }

    std::vector<Mvi> do_mholds_for(const FluentPattern& q) const override
    {
        std::vector<Mvi> out;
        for_groups(q, [&](const std::vector<std::size_t>& group) {
            for (std::size_t a = 0; a < group.size(); ++a) {
                const Point& p = points_[group[a]];
                if (!q.matches(p.assignment))
                    continue;
                if (!p.initiation) {
                    if (a == 0)
                        out.push_back({p.assignment, NEG_INF, p.time});
                    continue;
                }
                if (held_before(group, a))
                    continue;
                const Tick end = first_break(group, a);
                if (end != p.time)
                    out.push_back({p.assignment, p.time, end});
            }
        });
        return out;
    }

    void do_cached_between(Tick ws, Tick we, const FluentPattern& q, const MviVisitor& fn) const override
    {
        for (const auto& m : do_mholds_for(q))
            if (m.intersects(ws, we))
                fn(m);
    }

    void do_happens_in_window(const EventPattern& q, Tick ws, Tick we, const EventVisitor& fn) const override
    {
        for (const auto& e : narrative_)
            if (ws <= e.time && e.time <= we && q.matches(e.event))
                fn(e);
    }

private:
    static bool breaks(const FluentAssignment& held, const Point& x) noexcept
    {
        return x.initiation ? !(x.assignment.value == held.value) : x.assignment.value == held.value;
    }

    bool broken_by(const std::vector<std::size_t>& group, std::size_t a, Tick t) const
    {
        const auto& held = points_[group[a]].assignment;
        for (std::size_t b = a + 1; b < group.size(); ++b) {
            const Point& x = points_[group[b]];
            if (x.time > t)
                return false;
            if (breaks(held, x))
                return true;
        }
        return false;
    }

    // Whether f=v already holds just before point `a`: the nearest earlier
    // point that initiates f or terminates f=v decides.
    bool held_before(const std::vector<std::size_t>& group, std::size_t a) const
    {
        const auto& v = points_[group[a]].assignment.value;
        for (std::size_t b = a; b-- > 0;) {
            const Point& x = points_[group[b]];
            if (x.initiation)
                return x.assignment.value == v;
            if (x.assignment.value == v)
                return false;
        }
        return false;
    }

    Tick first_break(const std::vector<std::size_t>& group, std::size_t a) const
    {
        const auto& held = points_[group[a]].assignment;
        for (std::size_t b = a + 1; b < group.size(); ++b)
            if (breaks(held, points_[group[b]]))
                return points_[group[b]].time;
        return POS_INF;
    }

    template <typename Fn>
    void for_groups(const FluentPattern& q, Fn&& fn) const
    {
        if (q.fluent) {
            auto it = by_fluent_.find(*q.fluent);
            if (it != by_fluent_.end())
                fn(it->second);
            return;
        }
        for (const auto& [f, group] : by_fluent_)
            fn(group);
    }

    void record(Point p)
    {
        by_fluent_[p.assignment.fluent].push_back(points_.size());
        points_.push_back(std::move(p));
    }

    std::shared_ptr<const DomainTheory> theory_;
    std::vector<EventOccurrence> narrative_;
    std::vector<Point> points_;
    std::map<Term, std::vector<std::size_t>> by_fluent_;
};

/// From-scratch evaluation of a whole narrative.
inline std::vector<FluentAssignment> naive_holds_at(std::shared_ptr<const DomainTheory> theory,
                                                    const std::vector<EventOccurrence>& narrative,
                                                    const FluentPattern& q, Tick t)
{
    AxiomaticEvaluator ev(std::move(theory));
    for (const auto& e : narrative)
        ev.update(e);
    return ev.holds_at(q, t);
}

inline std::vector<Mvi> naive_holds_for(std::shared_ptr<const DomainTheory> theory,
                                        const std::vector<EventOccurrence>& narrative, const FluentPattern& q)
{
    AxiomaticEvaluator ev(std::move(theory));
    for (const auto& e : narrative)
        ev.update(e);
    return ev.holds_for(q);
}

/**
 * Cached Event Calculus baseline: the narrative and the MVI cache are flat
 * lists, updates close and open intervals in place, and every query is a
 * linear scan. Update and query cost therefore grow with the history.
 */
class NaiveEngine final : public QueryContext {
public:
    struct Counters {
        std::size_t updates = 0;
        std::size_t rule_hits = 0;
        std::size_t scanned = 0;
    };

    explicit NaiveEngine(std::shared_ptr<const DomainTheory> theory) : theory_(std::move(theory))
    {
        EffectsReport ignored;
        for (const auto& fa : theory_->initially)
            initiate(fa, {}, 0, ignored);
    }

    EffectsReport update(const EventOccurrence& e)
    {
        require_in_order(last_time_, e.time);
        last_time_ = e.time;
        narrative_.push_back(e);
        EffectsReport report;
        report.rule_hits = apply_rules(
            *theory_, e, *this, [&](const RuleHit& h) { terminate(h.assignment, e.time, report); },
            [&](const RuleHit& h) { initiate(h.assignment, h.evidence, e.time, report); });
        ++counters_.updates;
        counters_.rule_hits += report.rule_hits;
        return report;
    }

    Tick last_time() const noexcept { return last_time_; }
    const std::vector<EventOccurrence>& narrative() const noexcept { return narrative_; }
    const std::vector<Mvi>& cache() const noexcept { return cache_; }
    const Counters& counters() const noexcept { return counters_; }
    void reset_scan_counter() const noexcept { counters_.scanned = 0; }
    std::size_t mvi_count() const noexcept { return cache_.size(); }

    std::size_t structure_bytes() const
    {
        std::size_t n = sizeof(*this);
        n += narrative_.capacity() * sizeof(EventOccurrence);
        for (const auto& e : narrative_)
            n += heap_bytes(e);
        n += cache_.capacity() * sizeof(Mvi);
        for (const auto& m : cache_)
            n += heap_bytes(m);
        n += touched_.capacity() * sizeof(Term);
        for (const auto& t : touched_)
            n += heap_bytes(t);
        return n;
    }

protected:
    std::vector<FluentAssignment> do_holds_at(const FluentPattern& q, Tick t) const override
    {
        std::vector<FluentAssignment> out;
        counters_.scanned += cache_.size();
        for (const auto& m : cache_)
            if (m.holds_at(t) && q.matches(m.assignment))
                out.push_back(m.assignment);
        return out;
    }

    std::vector<Mvi> do_mholds_for(const FluentPattern& q) const override
    {
        std::vector<Mvi> out;
        counters_.scanned += cache_.size();
        for (const auto& m : cache_)
            if (q.matches(m.assignment))
                out.push_back(m);
        return out;
    }

    void do_cached_between(Tick ws, Tick we, const FluentPattern& q, const MviVisitor& fn) const override
    {
        counters_.scanned += cache_.size();
        for (const auto& m : cache_)
            if (m.intersects(ws, we) && q.matches(m.assignment))
                fn(m);
    }

    void do_happens_in_window(const EventPattern& q, Tick ws, Tick we, const EventVisitor& fn) const override
    {
        counters_.scanned += narrative_.size();
        for (const auto& e : narrative_)
            if (ws <= e.time && e.time <= we && q.matches(e.event))
                fn(e);
    }

private:
    bool touch(const Term& fluent)
    {
        for (const auto& t : touched_)
            if (t == fluent)
                return false;
        touched_.push_back(fluent);
        return true;
    }

    void terminate(const FluentAssignment& fa, Tick t, EffectsReport& report)
    {
        for (auto it = cache_.begin(); it != cache_.end(); ++it) {
            if (!it->open() || !(it->assignment == fa))
                continue;
            if (it->start == t) {
                note_discarded(report, {fa, t, t});
                cache_.erase(it);
            } else {
                it->end = t;
                report.closed.push_back(*it);
            }
            touch(fa.fluent);
            return;
        }
        if (touch(fa.fluent)) {
            cache_.push_back({fa, NEG_INF, t});
            report.closed.push_back(cache_.back());
        }
    }

    void initiate(const FluentAssignment& fa, const std::vector<Witness>& evidence, Tick t, EffectsReport& report)
    {
        touch(fa.fluent);
        for (auto it = cache_.begin(); it != cache_.end(); ++it) {
            if (!it->open() || !(it->assignment.fluent == fa.fluent))
                continue;
            if (it->assignment.value == fa.value)
                return;
            if (it->start == t) {
                note_discarded(report, {it->assignment, t, t});
                cache_.erase(it);
            } else {
                it->end = t;
                report.closed.push_back(*it);
            }
            break;
        }
        cache_.push_back({fa, t, POS_INF});
        report.opened.push_back({cache_.back(), evidence});
    }

    std::shared_ptr<const DomainTheory> theory_;
    std::vector<EventOccurrence> narrative_;
    std::vector<Mvi> cache_;
    std::vector<Term> touched_;
    Tick last_time_ = 0;
    mutable Counters counters_;
};

} // namespace ceckd::ec

#endif // CECKD_EC_NAIVE_HPP
