#ifndef CECKD_ENGINE_CECKD_ENGINE_HPP
#define CECKD_ENGINE_CECKD_ENGINE_HPP

#include <memory>
#include <set>
#include <utility>
#include <vector>

#include "ceckd/ec/naive.hpp"
#include "ceckd/ec/types.hpp"
#include "ceckd/error.hpp"
#include "ceckd/kd/kd_tree.hpp"
#include "ceckd/kd/registry.hpp"

namespace ceckd {

using ec::DomainTheory;
using ec::EffectsReport;
using ec::EventOccurrence;
using ec::EventPattern;
using ec::FluentAssignment;
using ec::FluentPattern;
using ec::Mvi;
using ec::Term;
using ec::Tick;

/// Coordinate of the first argument of an argument-less event.
inline const kd::Coord kNoArgCoord = kd::symbol_hash("'$no_arg'");

/// (hash(functor), arity, hash(first argument), time)
inline kd::Kd4Key event_key(const EventOccurrence& e)
{
    const auto& t = e.event;
    return {kd::symbol_hash(t.is_symbol() ? t.functor() : t.text()), static_cast<kd::Coord>(t.arity()),
            t.arity() ? t.args()[0].hash() : kNoArgCoord, e.time};
}

/// (hash(fluent), hash(value), start, end)
inline kd::Kd4Key mvi_key(const Mvi& m)
{
    return {m.assignment.fluent.hash(), m.assignment.value.hash(), m.start, m.end};
}

/**
 * Cached Event Calculus over two four-dimensional kd-trees: one indexing
 * events by (functor, arity, first argument, time), one indexing MVIs by
 * (fluent, value, start, end). An update indexes the event, then caches its
 * consequences by closing and opening intervals; queries are rectangular
 * range searches. Answers are identical to `ec::AxiomaticEvaluator`.
 *
 * Hashed dimensions are only queried by equality or left unbound, and every
 * hit is re-checked against the exact terms.
 */
class CecKdEngine final : public ec::QueryContext {
public:
    struct Counters {
        std::size_t updates = 0;
        std::size_t rule_hits = 0;
        std::size_t queries = 0;
        std::size_t visited = 0;
        std::size_t reported = 0;
        std::size_t event_inserts = 0;
        std::size_t mvi_inserts = 0;
        std::size_t mvi_deletes = 0;
    };

    static constexpr const char* kEventIndex = "happens_at";
    static constexpr const char* kMviIndex = "mholds_for";

    explicit CecKdEngine(std::shared_ptr<const DomainTheory> theory) : theory_(std::move(theory))
    {
        events_ = &event_registry_.create(kEventIndex, 0b0111u);
        mvis_ = &mvi_registry_.create(kMviIndex, 0b0011u);
        EffectsReport ignored;
        for (const auto& fa : theory_->initially) {
            touched_.insert(fa.fluent);
            open_interval(fa.fluent, fa.value, 0, {}, ignored);
        }
    }

    CecKdEngine(const CecKdEngine&) = delete;
    CecKdEngine& operator=(const CecKdEngine&) = delete;

    /// Indexes `e`, then caches what it terminates and initiates.
    EffectsReport update(const EventOccurrence& e)
    {
        ec::require_in_order(last_time_, e.time);
        last_time_ = e.time;
        events_->insert(event_key(e), e);
        ++counters_.event_inserts;

        EffectsReport report;
        const Tick t = e.time;
        report.rule_hits = ec::apply_rules(
            *theory_, e, *this,
            [&](const ec::RuleHit& h) {
                const auto& [f, v] = h.assignment;
                const bool first_touch = touched_.insert(f).second;
                if (!close_interval(f, v, t, report) && first_touch)
                    insert_mvi({h.assignment, ec::NEG_INF, t}, &report.closed);
            },
            [&](const ec::RuleHit& h) {
                const auto& [f, v] = h.assignment;
                touched_.insert(f);
                if (auto held = open_mvi_of(f); held && !(held->assignment.value == v))
                    close_interval(f, held->assignment.value, t, report);
                open_interval(f, v, t, h.evidence, report);
            });
        ++counters_.updates;
        counters_.rule_hits += report.rule_hits;
        return report;
    }

    /**
     * Closes the open MVI of f=v at `t_end`: re-inserted as [start, t_end),
     * or dropped when start == t_end. Returns false (and changes nothing)
     * when f=v has no open MVI.
     */
    bool close_interval(const Term& f, const Term& v, Tick t_end, EffectsReport& report)
    {
        auto held = open_mvi(f, v);
        if (!held)
            return false;
        erase_mvi(*held);
        if (held->start == t_end) {
            ec::note_discarded(report, {held->assignment, t_end, t_end});
        } else {
            held->end = t_end;
            insert_mvi(*held, &report.closed);
        }
        return true;
    }

    bool close_interval(const Term& f, const Term& v, Tick t_end)
    {
        EffectsReport ignored;
        return close_interval(f, v, t_end, ignored);
    }

    /// Inserts (f=v, [t_start, +inf)) unless it is already open.
    void open_interval(const Term& f, const Term& v, Tick t_start, std::vector<ec::Witness> evidence,
                       EffectsReport& report)
    {
        if (auto held = open_mvi_of(f)) {
            if (held->assignment.value == v)
                return;
            throw EngineInvariantViolation("opening " + f.text() + "=" + v.text() + " while " +
                                           held->assignment.value.text() + " is still open");
        }
        Mvi m{{f, v}, t_start, ec::POS_INF};
        insert_mvi(m, nullptr);
        report.opened.push_back({std::move(m), std::move(evidence)});
    }

    void open_interval(const Term& f, const Term& v, Tick t_start)
    {
        EffectsReport ignored;
        open_interval(f, v, t_start, {}, ignored);
    }

    Tick last_time() const noexcept { return last_time_; }
    const Counters& counters() const noexcept { return counters_; }
    void reset_visit_counter() const noexcept { counters_.visited = 0; }
    std::size_t event_count() const noexcept { return events_->size(); }
    std::size_t mvi_count() const noexcept { return mvis_->size(); }
    const kd::KdTree<EventOccurrence>& event_tree() const noexcept { return *events_; }
    const kd::KdTree<Mvi>& mvi_tree() const noexcept { return *mvis_; }

    /// Every MVI in the cache, sorted.
    std::vector<Mvi> all_mvis() const
    {
        std::vector<Mvi> out;
        mvis_->for_each([&](const kd::Kd4Key&, const Mvi& m) { out.push_back(m); });
        std::sort(out.begin(), out.end());
        return out;
    }

    std::size_t structure_bytes() const
    {
        auto payload = [](const auto& p) { return ec::heap_bytes(p); };
        std::size_t n = sizeof(*this) + events_->structure_bytes(payload) + mvis_->structure_bytes(payload);
        // red-black node: three pointers, colour, then the key
        n += touched_.size() * (4 * sizeof(void*) + sizeof(Term));
        for (const auto& t : touched_)
            n += t.heap_bytes();
        return n;
    }

protected:
    std::vector<FluentAssignment> do_holds_at(const FluentPattern& q, Tick t) const override
    {
        std::vector<FluentAssignment> out;
        if (t == ec::POS_INF)
            return out;
        auto box = symbol_box(q);
        box.r[2] = {kd::NEG_INF, t};
        box.r[3] = {t + 1, kd::POS_INF};
        query_mvis(box, [&](const Mvi& m) {
            if (q.matches(m.assignment))
                out.push_back(m.assignment);
        });
        return out;
    }

    std::vector<Mvi> do_mholds_for(const FluentPattern& q) const override
    {
        std::vector<Mvi> out;
        query_mvis(symbol_box(q), [&](const Mvi& m) {
            if (q.matches(m.assignment))
                out.push_back(m);
        });
        return out;
    }

    // Union of two boxes: intervals straddling ws, and intervals starting
    // inside [ws, we). They are disjoint in start time, so nothing repeats.
    void do_cached_between(Tick ws, Tick we, const FluentPattern& q, const MviVisitor& fn) const override
    {
        auto visit = [&](const Mvi& m) {
            if (q.matches(m.assignment))
                fn(m);
        };
        auto straddling = symbol_box(q);
        straddling.r[2] = {kd::NEG_INF, ws - 1};
        straddling.r[3] = {ws + 1, kd::POS_INF};
        if (ws != kd::NEG_INF)
            query_mvis(straddling, visit);
        auto starting = symbol_box(q);
        starting.r[2] = {ws, we - 1};
        query_mvis(starting, visit);
    }

    void do_happens_in_window(const EventPattern& q, Tick ws, Tick we, const EventVisitor& fn) const override
    {
        kd::RangeBox box;
        if (q.exact) {
            box = kd::RangeBox::point(event_key({*q.exact, 0}));
        } else {
            if (q.functor)
                box.r[0] = kd::Range::point(kd::symbol_hash(Term::atom(*q.functor).text()));
            if (q.arity)
                box.r[1] = kd::Range::point(static_cast<kd::Coord>(*q.arity));
            if (q.first_arg)
                box.r[2] = kd::Range::point(q.first_arg->hash());
        }
        box.r[3] = {ws, we};
        ++counters_.queries;
        auto stats = events_->range_query(box, [&](const kd::Kd4Key&, const EventOccurrence& e) {
            if (q.matches(e.event))
                fn(e);
        });
        counters_.visited += stats.visited;
        counters_.reported += stats.reported;
    }

private:
    static kd::RangeBox symbol_box(const FluentPattern& q)
    {
        kd::RangeBox box;
        if (q.fluent)
            box.r[0] = kd::Range::point(q.fluent->hash());
        if (q.value)
            box.r[1] = kd::Range::point(q.value->hash());
        return box;
    }

    template <typename Fn>
    void query_mvis(const kd::RangeBox& box, Fn&& fn) const
    {
        ++counters_.queries;
        auto stats = mvis_->range_query(box, [&](const kd::Kd4Key&, const Mvi& m) { fn(m); });
        counters_.visited += stats.visited;
        counters_.reported += stats.reported;
    }

    std::optional<Mvi> open_mvi(const Term& f, const Term& v) const
    {
        kd::RangeBox box;
        box.r[0] = kd::Range::point(f.hash());
        box.r[1] = kd::Range::point(v.hash());
        box.r[3] = kd::Range::point(kd::POS_INF);
        std::optional<Mvi> found;
        query_mvis(box, [&](const Mvi& m) {
            if (m.assignment.fluent == f && m.assignment.value == v)
                found = m;
        });
        return found;
    }

    std::optional<Mvi> open_mvi_of(const Term& f) const
    {
        kd::RangeBox box;
        box.r[0] = kd::Range::point(f.hash());
        box.r[3] = kd::Range::point(kd::POS_INF);
        std::optional<Mvi> found;
        query_mvis(box, [&](const Mvi& m) {
            if (m.assignment.fluent == f)
                found = m;
        });
        return found;
    }

    void insert_mvi(const Mvi& m, std::vector<Mvi>* sink)
    {
        mvis_->insert(mvi_key(m), m);
        ++counters_.mvi_inserts;
        if (sink)
            sink->push_back(m);
    }

    void erase_mvi(const Mvi& m)
    {
        counters_.mvi_deletes += mvis_->erase_if(mvi_key(m), [&](const Mvi& x) { return x == m; });
    }

    std::shared_ptr<const DomainTheory> theory_;
    kd::KdRegistry<EventOccurrence> event_registry_;
    kd::KdRegistry<Mvi> mvi_registry_;
    kd::KdTree<EventOccurrence>* events_ = nullptr;
    kd::KdTree<Mvi>* mvis_ = nullptr;
    std::set<Term> touched_;
    Tick last_time_ = 0;
    mutable Counters counters_;
};

} // namespace ceckd

#endif // CECKD_ENGINE_CECKD_ENGINE_HPP
