#ifndef CECKD_PATTERNS_COMPILER_HPP
#define CECKD_PATTERNS_COMPILER_HPP

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "ceckd/ec/types.hpp"
#include "ceckd/error.hpp"
#include "ceckd/patterns/meta.hpp"
#include "ceckd/patterns/pattern.hpp"
#include "ceckd/patterns/signals.hpp"

namespace ceckd::patterns {

using ec::Term;

/// generic_alert([recipients..., rule_id])
inline Term alert_fluent(const std::vector<std::string>& recipients, const std::string& rule_id)
{
    std::vector<Term> items;
    for (const auto& r : recipients)
        items.push_back(ec::atom(r));
    items.push_back(ec::atom(rule_id));
    return ec::fn("generic_alert", {Term::list(std::move(items))});
}

inline Term alert_up(const std::string& rule_id) { return ec::fn("up", {ec::atom("normal"), ec::atom(rule_id)}); }
inline Term alert_sent() { return ec::atom("sent"); }
inline Term sent_alert_event(const Term& alert) { return ec::fn("sent_alert", {alert}); }

/// Evidence for `p` being met at tick t, or nothing.
inline std::optional<std::vector<ec::Witness>> evaluate(const Pattern& p, const ec::QueryContext& ctx, Tick t)
{
    std::vector<ec::Witness> evidence;
    if (p.is_leaf()) {
        auto r = more_or_equals_to(ctx, p.frequency(), p.atoms(), Window::ending_at(t, p.window()));
        if (!r.satisfied)
            return std::nullopt;
        for (const auto& h : r.hits)
            for (auto& w : h.witnesses())
                evidence.push_back(std::move(w));
        return evidence;
    }
    const Pattern& a = p.first();
    const Pattern& b = p.then();
    auto r = constrained_more_or_equals_to(ctx, b.frequency(), a.atoms(), b.atoms(), Window::ending_at(t, a.window()),
                                           Window::ending_at(t, b.window()));
    if (r.first.size() < a.frequency() || !r.satisfied)
        return std::nullopt;
    // only the ticks that take part in some ordered pair
    const Tick last_then = r.then.back().tick;
    const Tick first_first = r.first.front().tick;
    for (const auto& h : r.first)
        if (h.tick < last_then)
            for (auto& w : h.witnesses())
                evidence.push_back(std::move(w));
    for (const auto& h : r.then)
        if (h.tick > first_first)
            for (auto& w : h.witnesses())
                evidence.push_back(std::move(w));
    std::sort(evidence.begin(), evidence.end());
    return evidence;
}

namespace detail {

inline std::string atoms_text(const std::vector<ThresholdAtom>& atoms)
{
    std::string s = "(";
    for (std::size_t i = 0; i < atoms.size(); ++i)
        s += (i ? ", " : "") + atoms[i].text();
    return s + ")";
}

inline std::string window_text(Tick w) { return "[T-" + std::to_string(w) + ", T]"; }

inline std::string pattern_goals(const Pattern& p)
{
    if (p.is_leaf())
        return "    more_or_equals_to(" + std::to_string(p.frequency()) + ", " + atoms_text(p.atoms()) + ", " +
               window_text(p.window()) + "),\n";
    const Pattern& a = p.first();
    const Pattern& b = p.then();
    return "    more_or_equals_to(" + std::to_string(a.frequency()) + ", " + atoms_text(a.atoms()) + ", " +
           window_text(a.window()) + "),\n" + "    constrained_more_or_equals_to(" + std::to_string(b.frequency()) +
           ", " + atoms_text(a.atoms()) + ", " + atoms_text(b.atoms()) + ", " + window_text(a.window()) + ", " +
           window_text(b.window()) + "),\n";
}

} // namespace detail

/// Byte-stable rule text; see docs/rule_text.md for the grammar.
inline std::string canonical_text(const RuleSpec& spec)
{
    const std::string alert = alert_fluent(spec.recipients, spec.rule_id).text();
    const std::string sent = sent_alert_event(alert_fluent(spec.recipients, spec.rule_id)).text();
    std::string s;
    s += "% rule " + spec.rule_id + ": " + std::string(kind_name(spec.pattern.kind())) + " pattern, window " +
         std::to_string(spec.pattern.window()) + ", suppress " + std::to_string(spec.effective_suppress()) + "\n";
    s += "initiates_at(" + alert + "=" + alert_up(spec.rule_id).text() + ", T) :-\n";
    s += detail::pattern_goals(spec.pattern);
    s += "    not happens_in_window(" + sent + ", " + detail::window_text(spec.effective_suppress()) + ").\n";
    s += "initiates_at(" + alert + "=" + alert_sent().text() + ", T) :-\n";
    s += "    happens_at(" + sent + ", T).\n";
    return s;
}

struct CompiledRule {
    RuleSpec spec;
    ec::Rule raise;       // alert fluent := up(normal, rule_id)
    ec::Rule acknowledge; // alert fluent := sent
    std::string text;
};

inline CompiledRule compile(const RuleSpec& spec)
{
    spec.validate();
    if (spec.pattern.depth() > 2)
        throw NestingTooDeep("rule " + spec.rule_id + " nests deeper than two levels");
    const Term fluent = alert_fluent(spec.recipients, spec.rule_id);
    const Term up = alert_up(spec.rule_id);
    const Term sent_event = sent_alert_event(fluent);
    const auto sent_query = ec::EventPattern::of(sent_event);
    const Tick suppress = spec.effective_suppress();
    const Pattern pattern = spec.pattern;

    CompiledRule c;
    c.spec = spec;
    c.text = canonical_text(spec);
    c.raise = [=](const ec::EventOccurrence& e, const ec::QueryContext& ctx) {
        std::vector<ec::RuleHit> hits;
        bool suppressed = false;
        ctx.visit_happens_in_window(sent_query, e.time - suppress, e.time,
                                    [&](const ec::EventOccurrence&) { suppressed = true; });
        if (suppressed)
            return hits;
        if (auto evidence = evaluate(pattern, ctx, e.time))
            hits.push_back({{fluent, up}, std::move(*evidence)});
        return hits;
    };
    c.acknowledge = [=](const ec::EventOccurrence& e, const ec::QueryContext&) {
        std::vector<ec::RuleHit> hits;
        if (e.event == sent_event)
            hits.push_back({{fluent, alert_sent()}, {}});
        return hits;
    };
    return c;
}

/// The deployed rules of one service; rule ids are unique.
class RuleBook {
public:
    const CompiledRule& add(const RuleSpec& spec)
    {
        if (find(spec.rule_id))
            throw DuplicateRuleId("rule '" + spec.rule_id + "' is already deployed");
        rules_.push_back(compile(spec));
        return rules_.back();
    }

    const CompiledRule* find(const std::string& rule_id) const
    {
        for (const auto& r : rules_)
            if (r.spec.rule_id == rule_id)
                return &r;
        return nullptr;
    }

    const std::vector<CompiledRule>& rules() const noexcept { return rules_; }

    /// Reading rule first, so alert rules see the reading of their own event.
    std::shared_ptr<const ec::DomainTheory> theory() const
    {
        auto th = std::make_shared<ec::DomainTheory>();
        th->initiation_rules.push_back(reading_rule());
        for (const auto& r : rules_) {
            th->initiation_rules.push_back(r.raise);
            th->initiation_rules.push_back(r.acknowledge);
        }
        return th;
    }

private:
    std::vector<CompiledRule> rules_;
};

/// Alerts in an update's effects: newly opened generic_alert(...) = up(...) intervals.
inline std::vector<Alert> extract_alerts(const ec::EffectsReport& report)
{
    std::vector<Alert> out;
    for (const auto& o : report.opened) {
        const Term& f = o.mvi.assignment.fluent;
        const Term& v = o.mvi.assignment.value;
        if (!f.is_symbol() || f.functor() != "generic_alert" || f.arity() != 1 ||
            f.args()[0].kind() != Term::Kind::List || f.args()[0].arity() == 0)
            continue;
        if (!v.is_symbol() || v.functor() != "up" || v.arity() != 2)
            continue;
        Alert a;
        const auto& items = f.args()[0].args();
        a.rule_id = v.args()[1].functor();
        for (std::size_t i = 0; i + 1 < items.size(); ++i)
            a.recipients.push_back(items[i].functor());
        a.raised_at = o.mvi.start;
        a.evidence = o.evidence;
        out.push_back(std::move(a));
    }
    std::stable_sort(out.begin(), out.end(), [](const Alert& x, const Alert& y) {
        return std::tie(x.raised_at, x.rule_id) < std::tie(y.raised_at, y.rule_id);
    });
    return out;
}

/**
 * Engine plus alert delivery: every raised alert is acknowledged with a
 * sent_alert event at the same tick, which arms the rule's suppress guard.
 */
template <typename Engine>
class Monitor {
public:
    explicit Monitor(std::shared_ptr<const ec::DomainTheory> theory) : engine_(std::move(theory)) {}

    std::vector<Alert> update(const ec::EventOccurrence& e)
    {
        auto raised = extract_alerts(engine_.update(e));
        for (const auto& a : raised) {
            engine_.update({sent_alert_event(alert_fluent(a.recipients, a.rule_id)), e.time});
            alerts_.push_back(a);
        }
        return raised;
    }

    const Engine& engine() const noexcept { return engine_; }
    const std::vector<Alert>& alerts() const noexcept { return alerts_; }

private:
    Engine engine_;
    std::vector<Alert> alerts_;
};

} // namespace ceckd::patterns

#endif // CECKD_PATTERNS_COMPILER_HPP
