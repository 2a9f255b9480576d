#ifndef CECKD_PATTERNS_PATTERN_HPP
#define CECKD_PATTERNS_PATTERN_HPP

#include <cmath>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ceckd/ec/term.hpp"
#include "ceckd/ec/types.hpp"
#include "ceckd/error.hpp"
#include "json.hpp"

namespace ceckd::patterns {

using ec::Tick;

inline constexpr Tick kOneDay = 86'400;

enum class Comparator { Less, Greater, LessEq, GreaterEq };

inline std::string_view comparator_symbol(Comparator c) noexcept
{
    switch (c) {
    case Comparator::Less: return "<";
    case Comparator::Greater: return ">";
    case Comparator::LessEq: return "<=";
    default: return ">=";
    }
}

// Rule-text spelling; `=<` as in Prolog.
inline std::string_view comparator_rule_text(Comparator c) noexcept
{
    return c == Comparator::LessEq ? "=<" : comparator_symbol(c);
}

inline Comparator parse_comparator(std::string_view s)
{
    if (s == "<")
        return Comparator::Less;
    if (s == ">")
        return Comparator::Greater;
    if (s == "<=" || s == "=<" || s == "≤")
        return Comparator::LessEq;
    if (s == ">=" || s == "≥")
        return Comparator::GreaterEq;
    throw InvalidRuleSpec("unknown comparator '" + std::string(s) + "'");
}

inline bool valid_symbol(std::string_view s) noexcept
{
    if (s.empty() || s[0] < 'a' || s[0] > 'z')
        return false;
    for (char c : s)
        if (!((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_'))
            return false;
    return true;
}

struct ThresholdAtom {
    std::string signal;
    Comparator comparator = Comparator::Greater;
    double threshold = 0.0;

    ThresholdAtom() = default;
    ThresholdAtom(std::string sig, Comparator cmp, double thr) : signal(std::move(sig)), comparator(cmp), threshold(thr)
    {
        if (!valid_symbol(signal))
            throw InvalidRuleSpec("signal '" + signal + "' is not a lower-case symbol");
        if (!std::isfinite(threshold))
            throw InvalidRuleSpec("threshold of " + signal + " is not finite");
    }

    bool accepts(double v) const noexcept
    {
        switch (comparator) {
        case Comparator::Less: return v < threshold;
        case Comparator::Greater: return v > threshold;
        case Comparator::LessEq: return v <= threshold;
        default: return v >= threshold;
        }
    }

    std::string text() const
    {
        return signal + " " + std::string(comparator_rule_text(comparator)) + " " + ec::Term::format_decimal(threshold);
    }

    friend bool operator==(const ThresholdAtom&, const ThresholdAtom&) = default;
};

enum class PatternKind { Simple, Complex, Sequential, ComplexSequential };

inline std::string_view kind_name(PatternKind k) noexcept
{
    switch (k) {
    case PatternKind::Simple: return "simple";
    case PatternKind::Complex: return "complex";
    case PatternKind::Sequential: return "sequential";
    default: return "complex_sequential";
    }
}

/**
 * Monitoring pattern. Leaves (simple, complex) ask for `frequency` ticks in
 * the window at which every atom holds. Sequential kinds ask for a leaf
 * `first` to be met and then for `then.frequency` ordered pairs
 * (t1 from first, t2 from then, t1 < t2). Sequential takes simple leaves;
 * complex-sequential also takes complex ones. Nesting stops at two levels.
 */
class Pattern {
public:
    static Pattern simple(ThresholdAtom atom, std::uint32_t frequency, Tick window)
    {
        return leaf(PatternKind::Simple, {std::move(atom)}, frequency, window);
    }

    static Pattern complex(std::vector<ThresholdAtom> atoms, std::uint32_t frequency, Tick window)
    {
        return leaf(PatternKind::Complex, std::move(atoms), frequency, window);
    }

    static Pattern sequential(Pattern first, Pattern then, Tick window)
    {
        return chain(PatternKind::Sequential, std::move(first), std::move(then), window);
    }

    static Pattern complex_sequential(Pattern first, Pattern then, Tick window)
    {
        return chain(PatternKind::ComplexSequential, std::move(first), std::move(then), window);
    }

    PatternKind kind() const noexcept { return kind_; }
    bool is_leaf() const noexcept { return kind_ == PatternKind::Simple || kind_ == PatternKind::Complex; }
    const std::vector<ThresholdAtom>& atoms() const noexcept { return atoms_; }
    std::uint32_t frequency() const noexcept { return frequency_; }
    Tick window() const noexcept { return window_; }
    const Pattern& first() const { return *first_; }
    const Pattern& then() const { return *then_; }
    int depth() const noexcept { return is_leaf() ? 1 : 1 + std::max(first_->depth(), then_->depth()); }

    friend bool operator==(const Pattern& a, const Pattern& b)
    {
        if (a.kind_ != b.kind_ || a.window_ != b.window_)
            return false;
        if (a.is_leaf())
            return a.atoms_ == b.atoms_ && a.frequency_ == b.frequency_;
        return *a.first_ == *b.first_ && *a.then_ == *b.then_;
    }

private:
    static void require_window(Tick w)
    {
        if (w <= 0)
            throw InvalidRuleSpec("window must be positive, got " + std::to_string(w));
    }

    static Pattern leaf(PatternKind kind, std::vector<ThresholdAtom> atoms, std::uint32_t frequency, Tick window)
    {
        if (atoms.empty())
            throw InvalidRuleSpec("pattern needs at least one atom");
        if (kind == PatternKind::Simple && atoms.size() != 1)
            throw InvalidRuleSpec("simple pattern takes exactly one atom");
        for (std::size_t i = 0; i < atoms.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (atoms[i] == atoms[j])
                    throw InvalidRuleSpec("duplicate atom " + atoms[i].text());
        if (frequency < 1)
            throw InvalidRuleSpec("frequency must be at least 1");
        require_window(window);
        Pattern p;
        p.kind_ = kind;
        p.atoms_ = std::move(atoms);
        p.frequency_ = frequency;
        p.window_ = window;
        return p;
    }

    static Pattern chain(PatternKind kind, Pattern first, Pattern then, Tick window)
    {
        if (!first.is_leaf() || !then.is_leaf())
            throw NestingTooDeep("sequential patterns nest at most two levels; children must be simple or complex");
        if (kind == PatternKind::Sequential &&
            (first.kind_ != PatternKind::Simple || then.kind_ != PatternKind::Simple))
            throw InvalidRuleSpec("sequential pattern takes simple children; use complex_sequential");
        require_window(window);
        for (const Pattern* c : {&first, &then})
            if (c->window_ > window)
                throw InvalidRuleSpec("child window " + std::to_string(c->window_) + " exceeds parent window " +
                                      std::to_string(window));
        Pattern p;
        p.kind_ = kind;
        p.window_ = window;
        p.first_ = std::make_shared<const Pattern>(std::move(first));
        p.then_ = std::make_shared<const Pattern>(std::move(then));
        return p;
    }

    PatternKind kind_ = PatternKind::Simple;
    std::vector<ThresholdAtom> atoms_;
    std::uint32_t frequency_ = 1;
    Tick window_ = kOneDay;
    std::shared_ptr<const Pattern> first_;
    std::shared_ptr<const Pattern> then_;
};

struct RuleSpec {
    std::string rule_id;
    std::vector<std::string> recipients;
    Pattern pattern;
    Tick suppress_window = 0; // 0: same as the pattern window

    Tick effective_suppress() const noexcept { return suppress_window > 0 ? suppress_window : pattern.window(); }

    void validate() const
    {
        if (!valid_symbol(rule_id))
            throw InvalidRuleSpec("rule_id '" + rule_id + "' is not a lower-case symbol");
        for (const auto& r : recipients)
            if (!valid_symbol(r))
                throw InvalidRuleSpec("recipient '" + r + "' is not a lower-case symbol");
        if (suppress_window < 0)
            throw InvalidRuleSpec("suppress_window must not be negative");
    }
};

/// Values a JSON spec may leave out.
struct SpecDefaults {
    Tick window = kOneDay;
    Tick suppress_window = 0;
};

struct Alert {
    std::string rule_id;
    std::vector<std::string> recipients;
    Tick raised_at = 0;
    std::vector<ec::Witness> evidence;

    friend bool operator==(const Alert&, const Alert&) = default;
};

// ---- JSON -----------------------------------------------------------------

using nlohmann::json;

namespace detail {

inline const json& field(const json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key))
        throw InvalidRuleSpec(std::string("missing field '") + key + "'");
    return j.at(key);
}

template <typename T>
T get(const json& j, const char* key)
{
    try {
        return field(j, key).get<T>();
    } catch (const json::exception& e) {
        throw InvalidRuleSpec(std::string("field '") + key + "': " + e.what());
    }
}

inline std::uint32_t get_frequency(const json& j)
{
    if (!j.contains("frequency"))
        return 1;
    const auto& f = j.at("frequency");
    if (!f.is_number_integer() || f.get<std::int64_t>() < 1 || f.get<std::int64_t>() > UINT32_MAX)
        throw InvalidRuleSpec("frequency must be an integer >= 1");
    return static_cast<std::uint32_t>(f.get<std::int64_t>());
}

inline Tick get_window(const json& j, const char* key, Tick fallback)
{
    if (!j.contains(key))
        return fallback;
    const auto& w = j.at(key);
    if (!w.is_number_integer())
        throw InvalidRuleSpec(std::string(key) + " must be an integer number of ticks");
    return w.get<Tick>();
}

} // namespace detail

inline json to_json(const ThresholdAtom& a)
{
    return {{"signal", a.signal}, {"comparator", comparator_symbol(a.comparator)}, {"threshold", a.threshold}};
}

inline ThresholdAtom atom_from_json(const json& j)
{
    const auto& thr = detail::field(j, "threshold");
    if (!thr.is_number())
        throw InvalidRuleSpec("threshold must be a number");
    return {detail::get<std::string>(j, "signal"), parse_comparator(detail::get<std::string>(j, "comparator")),
            thr.get<double>()};
}

inline json to_json(const Pattern& p)
{
    json j{{"kind", kind_name(p.kind())}};
    if (p.kind() == PatternKind::Simple) {
        j["atom"] = to_json(p.atoms().front());
    } else if (p.kind() == PatternKind::Complex) {
        j["atoms"] = json::array();
        for (const auto& a : p.atoms())
            j["atoms"].push_back(to_json(a));
    } else {
        j["first"] = to_json(p.first());
        j["then"] = to_json(p.then());
    }
    if (p.is_leaf())
        j["frequency"] = p.frequency();
    j["window"] = p.window();
    return j;
}

inline Pattern pattern_from_json(const json& j, const SpecDefaults& defaults = {}, int depth = 1)
{
    if (depth > 2)
        throw NestingTooDeep("pattern nesting deeper than two levels");
    const auto kind = detail::get<std::string>(j, "kind");
    const Tick window = detail::get_window(j, "window", defaults.window);
    if (kind == "simple")
        return Pattern::simple(atom_from_json(detail::field(j, "atom")), detail::get_frequency(j), window);
    if (kind == "complex") {
        const auto& arr = detail::field(j, "atoms");
        if (!arr.is_array())
            throw InvalidRuleSpec("atoms must be an array");
        std::vector<ThresholdAtom> atoms;
        for (const auto& a : arr)
            atoms.push_back(atom_from_json(a));
        return Pattern::complex(std::move(atoms), detail::get_frequency(j), window);
    }
    if (kind == "sequential" || kind == "complex_sequential") {
        auto first = pattern_from_json(detail::field(j, "first"), defaults, depth + 1);
        auto then = pattern_from_json(detail::field(j, "then"), defaults, depth + 1);
        return kind == "sequential" ? Pattern::sequential(std::move(first), std::move(then), window)
                                    : Pattern::complex_sequential(std::move(first), std::move(then), window);
    }
    throw InvalidRuleSpec("unknown pattern kind '" + kind + "'");
}

inline json to_json(const RuleSpec& s)
{
    json j{{"rule_id", s.rule_id}, {"recipients", s.recipients}, {"pattern", to_json(s.pattern)}};
    if (s.suppress_window > 0)
        j["suppress_window"] = s.suppress_window;
    return j;
}

/// Missing windows take `defaults`; recipients default to none.
inline RuleSpec rule_spec_from_json(const json& j, const SpecDefaults& defaults = {})
{
    if (!j.is_object())
        throw InvalidRuleSpec("rule spec must be a JSON object");
    RuleSpec s{detail::get<std::string>(j, "rule_id"), {}, pattern_from_json(detail::field(j, "pattern"), defaults),
               0};
    if (j.contains("recipients"))
        s.recipients = detail::get<std::vector<std::string>>(j, "recipients");
    s.suppress_window = detail::get_window(j, "suppress_window", defaults.suppress_window);
    s.validate();
    return s;
}

inline json to_json(const Alert& a)
{
    json ev = json::array();
    for (const auto& w : a.evidence)
        ev.push_back({{"tick", w.tick}, {"fluent", w.assignment.fluent.text()}, {"value", w.assignment.value.text()}});
    return {{"rule_id", a.rule_id}, {"recipients", a.recipients}, {"raised_at", a.raised_at}, {"evidence", ev}};
}

} // namespace ceckd::patterns

#endif // CECKD_PATTERNS_PATTERN_HPP
