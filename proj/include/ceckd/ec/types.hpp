#ifndef CECKD_EC_TYPES_HPP
#define CECKD_EC_TYPES_HPP

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ceckd/ec/term.hpp"
#include "ceckd/error.hpp"
#include "ceckd/kd/coord.hpp"

namespace ceckd::ec {

/// Time point. Non-negative for events; NEG_INF / POS_INF bound open intervals.
using Tick = std::int64_t;

inline constexpr Tick NEG_INF = kd::NEG_INF;
inline constexpr Tick POS_INF = kd::POS_INF;

inline std::string tick_text(Tick t)
{
    if (t == NEG_INF)
        return "-inf";
    if (t == POS_INF)
        return "+inf";
    return std::to_string(t);
}

struct EventOccurrence {
    Term event;
    Tick time = 0;

    friend bool operator==(const EventOccurrence&, const EventOccurrence&) = default;
    friend std::strong_ordering operator<=>(const EventOccurrence& a, const EventOccurrence& b) noexcept
    {
        if (auto c = a.time <=> b.time; c != 0)
            return c;
        return a.event <=> b.event;
    }
};

struct FluentAssignment {
    Term fluent;
    Term value;

    friend bool operator==(const FluentAssignment&, const FluentAssignment&) = default;
    friend std::strong_ordering operator<=>(const FluentAssignment& a, const FluentAssignment& b) noexcept
    {
        if (auto c = a.fluent <=> b.fluent; c != 0)
            return c;
        return a.value <=> b.value;
    }
    friend std::ostream& operator<<(std::ostream& os, const FluentAssignment& fa)
    {
        return os << fa.fluent << '=' << fa.value;
    }
};

/// Maximal validity interval, closed-open: holds at t iff start <= t < end.
struct Mvi {
    FluentAssignment assignment;
    Tick start = 0;
    Tick end = POS_INF;

    bool open() const noexcept { return end == POS_INF; }
    bool holds_at(Tick t) const noexcept { return start <= t && t < end; }
    /// True when [start, end) meets the window [ws, we).
    bool intersects(Tick ws, Tick we) const noexcept { return ws < we && start < we && end > ws; }

    friend bool operator==(const Mvi&, const Mvi&) = default;
    friend std::strong_ordering operator<=>(const Mvi& a, const Mvi& b) noexcept
    {
        if (auto c = a.assignment <=> b.assignment; c != 0)
            return c;
        if (auto c = a.start <=> b.start; c != 0)
            return c;
        return a.end <=> b.end;
    }
    friend std::ostream& operator<<(std::ostream& os, const Mvi& m)
    {
        return os << m.assignment << " [" << tick_text(m.start) << ',' << tick_text(m.end) << ')';
    }
};

/// Fluent query with optional wildcards: an unset part matches anything.
struct FluentPattern {
    std::optional<Term> fluent;
    std::optional<Term> value;

    static FluentPattern any() { return {}; }
    static FluentPattern of(Term f) { return {std::move(f), std::nullopt}; }
    static FluentPattern ground(Term f, Term v) { return {std::move(f), std::move(v)}; }

    bool matches(const FluentAssignment& fa) const noexcept
    {
        return (!fluent || *fluent == fa.fluent) && (!value || *value == fa.value);
    }
};

/// Event query; unset fields match anything. `exact` pins the whole term.
struct EventPattern {
    std::optional<std::string> functor;
    std::optional<std::size_t> arity;
    std::optional<Term> first_arg;
    std::optional<Term> exact;

    static EventPattern any() { return {}; }
    static EventPattern of(const Term& e) { return {e.functor(), e.arity(), std::nullopt, e}; }

    bool matches(const Term& e) const noexcept
    {
        if (exact)
            return *exact == e;
        if (functor && (!e.is_symbol() || *functor != e.functor()))
            return false;
        if (arity && *arity != e.arity())
            return false;
        if (first_arg && (e.arity() == 0 || !(e.args()[0] == *first_arg)))
            return false;
        return true;
    }
};

/// One piece of evidence behind a rule hit.
struct Witness {
    Tick tick = 0;
    FluentAssignment assignment;

    friend bool operator==(const Witness&, const Witness&) = default;
    friend auto operator<=>(const Witness& a, const Witness& b) noexcept
    {
        if (auto c = a.tick <=> b.tick; c != 0)
            return c;
        return a.assignment <=> b.assignment;
    }
};

struct RuleHit {
    FluentAssignment assignment;
    std::vector<Witness> evidence;
};

class QueryContext;

/// Initiation or termination rule: the fluent assignments an event affects.
/// Must be pure given the context.
using Rule = std::function<std::vector<RuleHit>(const EventOccurrence&, const QueryContext&)>;

struct DomainTheory {
    std::vector<FluentAssignment> initially;
    std::vector<Rule> termination_rules;
    std::vector<Rule> initiation_rules;
};

/// What an update changed.
struct EffectsReport {
    struct Opened {
        Mvi mvi;
        std::vector<Witness> evidence;
    };
    std::vector<Opened> opened;
    /// Intervals that became final: closed at this tick, or left-open ones.
    std::vector<Mvi> closed;
    /// Intervals opened and closed at the same tick; they never enter the cache.
    std::vector<Mvi> discarded;
    std::size_t rule_hits = 0;
};

template <typename T>
void sort_unique(std::vector<T>& v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

inline void require_window(Tick ws, Tick we)
{
    if (ws > we)
        throw MalformedWindow("window start " + std::to_string(ws) + " is after end " + std::to_string(we));
}

/**
 * Read-only view the rules evaluate their conditions against. Implemented
 * by the kd-indexed engine, the flat-cache baseline and the axiomatic
 * evaluator, which must all answer identically.
 *
 * Collection calls return sorted duplicate-free vectors. Visitor calls
 * stream matches in an unspecified order and may repeat none.
 */
class QueryContext {
public:
    using MviVisitor = std::function<void(const Mvi&)>;
    using EventVisitor = std::function<void(const EventOccurrence&)>;

    virtual ~QueryContext() = default;

    /// Assignments matching `q` that hold at tick t.
    std::vector<FluentAssignment> holds_at(const FluentPattern& q, Tick t) const
    {
        auto out = do_holds_at(q, t);
        sort_unique(out);
        return out;
    }

    std::vector<Mvi> mholds_for(const FluentPattern& q) const
    {
        auto out = do_mholds_for(q);
        sort_unique(out);
        return out;
    }

    /// MVIs matching `q` that intersect the window [ws, we).
    std::vector<Mvi> cached_between(Tick ws, Tick we, const FluentPattern& q) const
    {
        std::vector<Mvi> out;
        visit_cached_between(ws, we, q, [&](const Mvi& m) { out.push_back(m); });
        sort_unique(out);
        return out;
    }

    void visit_cached_between(Tick ws, Tick we, const FluentPattern& q, const MviVisitor& fn) const
    {
        require_window(ws, we);
        if (ws == we)
            return;
        do_cached_between(ws, we, q, fn);
    }

    /// Events matching `q` with ws <= time <= we.
    std::vector<EventOccurrence> happens_in_window(const EventPattern& q, Tick ws, Tick we) const
    {
        std::vector<EventOccurrence> out;
        visit_happens_in_window(q, ws, we, [&](const EventOccurrence& e) { out.push_back(e); });
        sort_unique(out);
        return out;
    }

    void visit_happens_in_window(const EventPattern& q, Tick ws, Tick we, const EventVisitor& fn) const
    {
        require_window(ws, we);
        do_happens_in_window(q, ws, we, fn);
    }

protected:
    virtual std::vector<FluentAssignment> do_holds_at(const FluentPattern& q, Tick t) const = 0;
    virtual std::vector<Mvi> do_mholds_for(const FluentPattern& q) const = 0;
    virtual void do_cached_between(Tick ws, Tick we, const FluentPattern& q, const MviVisitor& fn) const = 0;
    virtual void do_happens_in_window(const EventPattern& q, Tick ws, Tick we, const EventVisitor& fn) const = 0;
};

/**
 * Runs a theory's rules for one event in the shared evaluation order:
 * termination rules, then initiation rules, each in declaration order.
 * A rule's hits are applied before the next rule is evaluated, so every
 * rule sees the effects of the rules before it.
 */
template <typename OnTerminate, typename OnInitiate>
std::size_t apply_rules(const DomainTheory& theory, const EventOccurrence& e, const QueryContext& ctx,
                        OnTerminate&& on_terminate, OnInitiate&& on_initiate)
{
    std::size_t hits = 0;
    for (const auto& rule : theory.termination_rules)
        for (auto& hit : rule(e, ctx)) {
            ++hits;
            on_terminate(hit);
        }
    for (const auto& rule : theory.initiation_rules)
        for (auto& hit : rule(e, ctx)) {
            ++hits;
            on_initiate(hit);
        }
    return hits;
}

/// Records an interval that collapsed to zero length. If it was opened
/// during the same update it is withdrawn from `opened`.
inline void note_discarded(EffectsReport& report, const Mvi& collapsed)
{
    auto& opened = report.opened;
    for (auto it = opened.begin(); it != opened.end(); ++it)
        if (it->mvi.assignment == collapsed.assignment && it->mvi.start == collapsed.start) {
            opened.erase(it);
            break;
        }
    report.discarded.push_back(collapsed);
}

inline std::size_t heap_bytes(const Term& t) noexcept { return t.heap_bytes(); }
inline std::size_t heap_bytes(const EventOccurrence& e) noexcept { return e.event.heap_bytes(); }
inline std::size_t heap_bytes(const FluentAssignment& fa) noexcept
{
    return fa.fluent.heap_bytes() + fa.value.heap_bytes();
}
inline std::size_t heap_bytes(const Mvi& m) noexcept { return heap_bytes(m.assignment); }

} // namespace ceckd::ec

#endif // CECKD_EC_TYPES_HPP
