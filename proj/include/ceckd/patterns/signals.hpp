#ifndef CECKD_PATTERNS_SIGNALS_HPP
#define CECKD_PATTERNS_SIGNALS_HPP

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "ceckd/ec/types.hpp"

namespace ceckd::patterns {

using ec::Term;

// A reading arrives as event obs(signal, V) and sets fluent obs(signal) = value(V).

namespace detail {

struct SignalTerms {
    Term atom;
    Term fluent;
};

// Shared terms for the known signals, so stored and queried terms compare by identity.
inline const SignalTerms* known_signal_terms(std::string_view signal)
{
    static const std::array<std::pair<std::string_view, SignalTerms>, 6> table = [] {
        std::array<std::pair<std::string_view, SignalTerms>, 6> t;
        const std::array<std::string_view, 6> names{"cgm", "glucose", "hr", "weight", "meal", "activity"};
        for (std::size_t i = 0; i < names.size(); ++i) {
            Term a = ec::atom(std::string(names[i]));
            t[i] = {names[i], {a, ec::fn("obs", {a})}};
        }
        return t;
    }();
    for (const auto& [name, terms] : table)
        if (name == signal)
            return &terms;
    return nullptr;
}

} // namespace detail

inline Term signal_atom(const std::string& signal)
{
    if (const auto* k = detail::known_signal_terms(signal))
        return k->atom;
    return ec::atom(signal);
}

inline Term obs_event(const std::string& signal, double v) { return ec::fn("obs", {signal_atom(signal), ec::num(v)}); }

inline Term obs_fluent(const std::string& signal)
{
    if (const auto* k = detail::known_signal_terms(signal))
        return k->fluent;
    return ec::fn("obs", {ec::atom(signal)});
}

inline Term obs_value(double v) { return ec::fn("value", {ec::num(v)}); }

inline ec::EventPattern obs_events_of(const std::string& signal)
{
    return {std::string("obs"), 2, signal_atom(signal), std::nullopt};
}

/// Numeric reading carried by a value(V) term.
inline std::optional<double> reading_of(const Term& value)
{
    if (!value.is_symbol() || value.functor() != "value" || value.arity() != 1 || !value.args()[0].is_number())
        return std::nullopt;
    return value.args()[0].as_number();
}

/// initiates_at(obs(S)=value(V), T) :- happens_at(obs(S,V), T).
inline ec::Rule reading_rule()
{
    return [](const ec::EventOccurrence& e, const ec::QueryContext&) {
        std::vector<ec::RuleHit> hits;
        const Term& ev = e.event;
        if (ev.is_symbol() && ev.functor() == "obs" && ev.arity() == 2 && ev.args()[1].is_number())
        {
            const Term& sig = ev.args()[0];
            const auto* k = sig.is_symbol() && sig.arity() == 0 ? detail::known_signal_terms(sig.functor()) : nullptr;
            Term fluent = k && k->atom == sig ? k->fluent : Term::compound("obs", {sig});
            hits.push_back({{std::move(fluent), Term::compound("value", {ev.args()[1]})}, {}});
        }
        return hits;
    };
}

} // namespace ceckd::patterns

#endif // CECKD_PATTERNS_SIGNALS_HPP
