#ifndef CECKD_TESTS_RANDOM_THEORY_HPP
#define CECKD_TESTS_RANDOM_THEORY_HPP

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ceckd/ec/types.hpp"

namespace ceckd::fixtures {

using namespace ceckd::ec;

// Rule that fires on events named `event` and affects fluent=value.
// With `guard`, it only fires while guard holds at the event tick.
struct RuleSpecLite {
    std::string event;
    std::string fluent;
    std::string value;
    bool initiation = true;
    std::optional<FluentAssignment> guard;
};

struct RandomTheory {
    std::vector<FluentAssignment> initially;
    std::vector<RuleSpecLite> rules;
    std::vector<EventOccurrence> narrative;

    std::shared_ptr<const DomainTheory> theory() const
    {
        auto th = std::make_shared<DomainTheory>();
        th->initially = initially;
        for (const auto& r : rules) {
            Rule rule = [r](const EventOccurrence& e, const QueryContext& ctx) {
                std::vector<RuleHit> hits;
                if (e.event.functor() != r.event)
                    return hits;
                if (r.guard && ctx.holds_at(FluentPattern::ground(r.guard->fluent, r.guard->value), e.time).empty())
                    return hits;
                hits.push_back({{atom(r.fluent), atom(r.value)}, {}});
                return hits;
            };
            (r.initiation ? th->initiation_rules : th->termination_rules).push_back(std::move(rule));
        }
        return th;
    }
};

// Vocabulary sizes: fluents f0.., values a.., event kinds e0..
struct TheoryShape {
    std::size_t fluents = 3;
    std::size_t values = 3;
    std::size_t event_kinds = 4;
};

inline RandomTheory make_random_theory(std::mt19937_64& rng, std::size_t events, bool guards, TheoryShape shape = {})
{
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    auto ev = [](std::size_t i) { return "e" + std::to_string(i); };
    auto fl = [](std::size_t i) { return "f" + std::to_string(i); };
    auto val = [](std::size_t i) { return std::string(1, static_cast<char>('a' + i)); };
    const std::size_t nf = shape.fluents, nv = shape.values, ne = shape.event_kinds;
    RandomTheory rt;
    std::set<std::string> init_fluents;
    for (std::size_t i = pick(nf); i-- > 0;) {
        std::string f = fl(pick(nf));
        if (init_fluents.insert(f).second)
            rt.initially.push_back({atom(f), atom(val(pick(nv)))});
    }
    for (std::size_t i = 2 + pick(2 * nf + 1); i-- > 0;) {
        RuleSpecLite r{ev(pick(ne)), fl(pick(nf)), val(pick(nv)), pick(2) == 0, std::nullopt};
        if (guards && pick(3) == 0)
            r.guard = FluentAssignment{atom(fl(pick(nf))), atom(val(pick(nv)))};
        rt.rules.push_back(r);
    }
    Tick t = 0;
    for (std::size_t i = 0; i < events; ++i) {
        t += static_cast<Tick>(pick(4) == 0 ? 0 : pick(3)); // repeated ticks on purpose
        rt.narrative.push_back({atom(ev(pick(ne))), t});
    }
    return rt;
}

/**
 * Independent state machine over ticks for guard-free theories: per fluent
 * it tracks the held value and where it started, and emits an interval each
 * time the held value changes. A tick may restart a value several times.
 */
inline std::vector<Mvi> tick_table_intervals(const RandomTheory& rt)
{
    struct State {
        std::optional<std::string> value;
        Tick since = 0;
        bool touched = false;
    };
    std::map<std::string, State> st;
    std::vector<Mvi> out;
    auto emit = [&](const std::string& f, const std::string& v, Tick a, Tick b) {
        if (a < b)
            out.push_back({{atom(f), atom(v)}, a, b});
    };
    for (const auto& fa : rt.initially)
        st[fa.fluent.functor()] = {fa.value.functor(), 0, true};
    for (const auto& e : rt.narrative) {
        for (int pass = 0; pass < 2; ++pass) {
            const bool init = pass == 1;
            for (const auto& r : rt.rules) {
                if (r.initiation != init || r.event != e.event.functor())
                    continue;
                State& s = st[r.fluent];
                const bool first = !s.touched;
                s.touched = true;
                if (!init) {
                    if (s.value == r.value) {
                        emit(r.fluent, r.value, s.since, e.time);
                        s.value.reset();
                    } else if (first) {
                        emit(r.fluent, r.value, NEG_INF, e.time);
                    }
                } else if (s.value != r.value) {
                    if (s.value)
                        emit(r.fluent, *s.value, s.since, e.time);
                    s.value = r.value;
                    s.since = e.time;
                }
            }
        }
    }
    for (const auto& [f, s] : st)
        if (s.value)
            emit(f, *s.value, s.since, POS_INF);
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace ceckd::fixtures

#endif
