#ifndef CECKD_TESTS_ALERT_ORACLE_HPP
#define CECKD_TESTS_ALERT_ORACLE_HPP

#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ceckd/patterns/compiler.hpp"

namespace ceckd::fixtures {

using patterns::Pattern;
using patterns::RuleSpec;
using patterns::ThresholdAtom;

struct Reading {
    ec::Tick tick;
    std::string signal;
    double value;
};

inline ec::EventOccurrence as_event(const Reading& r) { return {patterns::obs_event(r.signal, r.value), r.tick}; }

// Alternating hyper and hypo phases of cgm and hr with jittered cadence.
inline std::vector<Reading> hypo_hyper_trace(std::mt19937_64& rng, std::size_t n, ec::Tick max_step)
{
    std::vector<Reading> out;
    ec::Tick t = 0;
    bool hyper = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (rng() % 25 == 0)
            hyper = !hyper;
        t += static_cast<ec::Tick>(rng() % static_cast<std::uint64_t>(max_step + 1));
        const bool cgm = rng() % 2 == 0;
        const double u = static_cast<double>(rng() % 1000) / 1000.0;
        double v = cgm ? (hyper ? 11.0 + 7.0 * u : 3.0 + 5.0 * u) : (hyper ? 110.0 + 30.0 * u : 50.0 + 20.0 * u);
        out.push_back({t, cgm ? "cgm" : "hr", v});
    }
    return out;
}

/**
 * Direct per-tick evaluation of deployed rules over a reading trace, with
 * no event calculus involved: the value of a signal at tick t, as seen
 * while processing reading i, is the last reading j <= i with tick <= t.
 */
class AlertOracle {
public:
    AlertOracle(std::vector<RuleSpec> rules, std::vector<Reading> trace) : rules_(std::move(rules)), trace_(std::move(trace)) {}

    std::optional<double> value_at(std::size_t i, const std::string& signal, ec::Tick t) const
    {
        for (std::size_t j = i + 1; j-- > 0;)
            if (trace_[j].tick <= t && trace_[j].signal == signal)
                return trace_[j].value;
        return std::nullopt;
    }

    std::vector<ec::Tick> hit_ticks(std::size_t i, const std::vector<ThresholdAtom>& atoms, ec::Tick span) const
    {
        const ec::Tick now = trace_[i].tick;
        std::vector<ec::Tick> ticks;
        for (std::size_t j = 0; j <= i; ++j) {
            const ec::Tick t = trace_[j].tick;
            if (t < now - span || t > now)
                continue;
            bool relevant = false;
            for (const auto& a : atoms)
                relevant |= a.signal == trace_[j].signal;
            if (!relevant)
                continue;
            bool all = true;
            for (const auto& a : atoms) {
                auto v = value_at(i, a.signal, t);
                all &= v && a.accepts(*v);
            }
            if (all)
                ticks.push_back(t);
        }
        ec::sort_unique(ticks);
        return ticks;
    }

    bool met(std::size_t i, const Pattern& p) const
    {
        if (p.is_leaf())
            return hit_ticks(i, p.atoms(), p.window()).size() >= p.frequency();
        auto a = hit_ticks(i, p.first().atoms(), p.first().window());
        if (a.size() < p.first().frequency())
            return false;
        auto b = hit_ticks(i, p.then().atoms(), p.then().window());
        std::size_t pairs = 0;
        for (auto x : a)
            for (auto y : b)
                pairs += x < y;
        return pairs >= p.then().frequency();
    }

    /// (tick, rule_id) of every alert, in raising order.
    std::vector<std::pair<ec::Tick, std::string>> alerts() const
    {
        std::vector<std::pair<ec::Tick, std::string>> out;
        std::map<std::string, ec::Tick> last;
        for (std::size_t i = 0; i < trace_.size(); ++i) {
            const ec::Tick now = trace_[i].tick;
            for (const auto& r : rules_) {
                auto it = last.find(r.rule_id);
                if (it != last.end() && it->second >= now - r.effective_suppress())
                    continue;
                if (met(i, r.pattern)) {
                    last[r.rule_id] = now;
                    out.emplace_back(now, r.rule_id);
                }
            }
        }
        std::stable_sort(out.begin(), out.end());
        return out;
    }

private:
    std::vector<RuleSpec> rules_;
    std::vector<Reading> trace_;
};

inline RuleSpec rule0_spec(ec::Tick window = patterns::kOneDay)
{
    return {"rule0",
            {"doctor"},
            Pattern::complex({{"cgm", patterns::Comparator::Greater, 13.0}, {"hr", patterns::Comparator::Greater, 120.0}},
                             1, window),
            0};
}

inline RuleSpec rule1_spec(ec::Tick window = patterns::kOneDay)
{
    using patterns::Comparator;
    return {"rule1",
            {"doctor"},
            Pattern::complex_sequential(
                Pattern::complex({{"hr", Comparator::Greater, 130.0}, {"cgm", Comparator::Greater, 15.0}}, 1, window),
                Pattern::complex({{"cgm", Comparator::Less, 5.0}, {"hr", Comparator::Less, 60.0}}, 1, window), window),
            0};
}

} // namespace ceckd::fixtures

#endif
