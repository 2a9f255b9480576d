#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "ceckd/ec/naive.hpp"
#include "ceckd/engine/ceckd_engine.hpp"
#include "ceckd/patterns/compiler.hpp"
#include "../support/alert_oracle.hpp"

using namespace ceckd;
using namespace ceckd::patterns;
using ceckd::fixtures::Reading;

namespace {

std::string slurp(const std::string& rel)
{
    std::ifstream in(std::string(CECKD_SOURCE_DIR) + "/" + rel, std::ios::binary);
    EXPECT_TRUE(in.good()) << rel;
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RuleSpec load_spec(const std::string& rel) { return rule_spec_from_json(json::parse(slurp(rel))); }

// Engine fed with readings under the reading rule only.
std::shared_ptr<const ec::DomainTheory> readings_only() { return RuleBook().theory(); }

template <typename Ctx>
void feed(Ctx& ctx, const std::vector<Reading>& rs)
{
    for (const auto& r : rs)
        ctx.update(fixtures::as_event(r));
}

TEST(Compiler, GoldenTexts)
{
    const auto rule0 = load_spec("samples/rules/rule0.json");
    const auto rule1 = load_spec("samples/rules/rule1.json");
    EXPECT_EQ(rule0.pattern, fixtures::rule0_spec().pattern);
    EXPECT_EQ(rule1.pattern, fixtures::rule1_spec().pattern);
    EXPECT_EQ(compile(rule0).text, slurp("tests/golden/rule0.txt"));
    EXPECT_EQ(compile(rule1).text, slurp("tests/golden/rule1.txt"));
    EXPECT_EQ(compile(rule0).text, compile(rule0).text);

    const auto t0 = compile(rule0).text;
    EXPECT_NE(t0.find("cgm > 13.0"), std::string::npos);
    EXPECT_NE(t0.find("hr > 120.0"), std::string::npos);
    EXPECT_NE(t0.find("not happens_in_window(sent_alert(generic_alert([doctor,rule0]))"), std::string::npos);
    const auto t1 = compile(rule1).text;
    EXPECT_NE(t1.find("more_or_equals_to(1, (hr > 130.0, cgm > 15.0)"), std::string::npos);
    EXPECT_NE(t1.find("constrained_more_or_equals_to(1, (hr > 130.0, cgm > 15.0), (cgm < 5.0, hr < 60.0)"),
              std::string::npos);
}

TEST(Compiler, JsonRoundTrip)
{
    for (const auto& spec : {fixtures::rule0_spec(), fixtures::rule1_spec(3600)}) {
        const auto back = rule_spec_from_json(json::parse(to_json(spec).dump()));
        EXPECT_EQ(back.rule_id, spec.rule_id);
        EXPECT_EQ(back.recipients, spec.recipients);
        EXPECT_EQ(back.pattern, spec.pattern);
        EXPECT_EQ(compile(back).text, compile(spec).text);
    }
    RuleSpec s = fixtures::rule0_spec();
    s.suppress_window = 600;
    EXPECT_EQ(rule_spec_from_json(to_json(s)).effective_suppress(), 600);
    EXPECT_NE(compile(s).text.find("[T-600, T]"), std::string::npos);
}

TEST(Compiler, RejectsInvalidSpecs)
{
    auto base = to_json(fixtures::rule0_spec());
    auto with = [&](auto edit) {
        json j = base;
        edit(j);
        return j;
    };
    EXPECT_THROW(rule_spec_from_json(with([](json& j) { j.erase("rule_id"); })), InvalidRuleSpec);
    EXPECT_THROW(rule_spec_from_json(with([](json& j) { j["rule_id"] = "Rule 0"; })), InvalidRuleSpec);
    EXPECT_THROW(rule_spec_from_json(with([](json& j) { j["pattern"]["window"] = 0; })), InvalidRuleSpec);
    EXPECT_THROW(rule_spec_from_json(with([](json& j) { j["pattern"]["frequency"] = 0; })), InvalidRuleSpec);
    EXPECT_THROW(rule_spec_from_json(with([](json& j) { j["pattern"]["atoms"][0]["comparator"] = "=="; })),
                 InvalidRuleSpec);
    EXPECT_THROW(rule_spec_from_json(with([](json& j) { j["pattern"]["atoms"] = json::array(); })), InvalidRuleSpec);
    EXPECT_THROW(rule_spec_from_json(with([](json& j) { j["pattern"]["kind"] = "fuzzy"; })), InvalidRuleSpec);
    EXPECT_THROW(rule_spec_from_json(with([](json& j) { j["pattern"]["atoms"][1] = j["pattern"]["atoms"][0]; })),
                 InvalidRuleSpec);
    EXPECT_THROW(rule_spec_from_json(json::array()), InvalidRuleSpec);
}

TEST(Compiler, NestingDeeperThanTwoIsRejected)
{
    auto leaf = Pattern::simple({"cgm", Comparator::Greater, 13.0}, 1, 100);
    auto seq = Pattern::sequential(leaf, leaf, 100);
    EXPECT_THROW(Pattern::complex_sequential(seq, leaf, 100), NestingTooDeep);
    EXPECT_THROW(Pattern::sequential(leaf, seq, 100), NestingTooDeep);

    json j = to_json(fixtures::rule1_spec());
    j["pattern"]["first"] = to_json(seq);
    EXPECT_THROW(rule_spec_from_json(j), NestingTooDeep);

    EXPECT_THROW(Pattern::sequential(Pattern::complex({{"cgm", Comparator::Greater, 1.0}}, 1, 10), leaf, 100),
                 InvalidRuleSpec);
    EXPECT_THROW(Pattern::sequential(leaf, leaf, 50), InvalidRuleSpec); // child window exceeds parent
}

TEST(Compiler, DuplicateRuleIdsAreRejected)
{
    RuleBook book;
    book.add(fixtures::rule0_spec());
    EXPECT_THROW(book.add(fixtures::rule0_spec()), DuplicateRuleId);
    EXPECT_NO_THROW(book.add(fixtures::rule1_spec()));
    EXPECT_EQ(book.rules().size(), 2u);
    EXPECT_EQ(book.theory()->initiation_rules.size(), 5u);
}

const std::vector<ThresholdAtom> kRule0Atoms{{"cgm", Comparator::Greater, 13.0}, {"hr", Comparator::Greater, 120.0}};

TEST(Meta, NoReadingsIsUnsatisfied)
{
    ec::NaiveEngine eng(readings_only());
    auto r = more_or_equals_to(eng, 1, kRule0Atoms, {0, 100});
    EXPECT_FALSE(r.satisfied);
    EXPECT_TRUE(r.hits.empty());
    EXPECT_THROW(more_or_equals_to(eng, 1, kRule0Atoms, {5, 4}), MalformedWindow);
}

TEST(Meta, BothThresholdsHoldingAtOneTick)
{
    ec::NaiveEngine eng(readings_only());
    feed(eng, {{10, "cgm", 14.0}, {40, "hr", 125.0}, {50, "hr", 100.0}});
    auto r = more_or_equals_to(eng, 1, kRule0Atoms, {0, 100});
    ASSERT_TRUE(r.satisfied);
    ASSERT_EQ(r.hits.size(), 1u);
    EXPECT_EQ(r.hits[0].tick, 40);
    EXPECT_EQ(r.hits[0].readings[0], (ec::FluentAssignment{obs_fluent("cgm"), obs_value(14.0)}));
    EXPECT_FALSE(more_or_equals_to(eng, 2, kRule0Atoms, {0, 100}).satisfied);
    EXPECT_FALSE(more_or_equals_to(eng, 1, kRule0Atoms, {41, 100}).satisfied);
    EXPECT_FALSE(more_or_equals_to(eng, 1, kRule0Atoms, {0, 40}).satisfied);
}

TEST(Meta, SequenceNeedsOrder)
{
    const std::vector<ThresholdAtom> high{{"hr", Comparator::Greater, 130.0}, {"cgm", Comparator::Greater, 15.0}};
    const std::vector<ThresholdAtom> low{{"cgm", Comparator::Less, 5.0}, {"hr", Comparator::Less, 60.0}};
    {
        ec::NaiveEngine eng(readings_only());
        feed(eng, {{0, "cgm", 4.5}, {10, "hr", 55.0}, {20, "hr", 135.0}, {30, "cgm", 16.0}});
        auto r = constrained_more_or_equals_to(eng, 1, high, low, {0, 100}, {0, 100});
        EXPECT_FALSE(r.satisfied);
        EXPECT_EQ(r.pairs, 0u);
    }
    {
        ec::NaiveEngine eng(readings_only());
        feed(eng, {{1000, "hr", 135.0}, {2000, "cgm", 16.0}, {40000, "cgm", 4.5}, {50000, "hr", 55.0}});
        auto r = constrained_more_or_equals_to(eng, 1, high, low, Window::ending_at(50000, kOneDay),
                                               Window::ending_at(50000, kOneDay));
        EXPECT_TRUE(r.satisfied);
        EXPECT_EQ(r.pairs, 1u);
        EXPECT_THROW(constrained_more_or_equals_to(eng, 1, high, low, {100, 200}, {0, 100}), MalformedWindow);
    }
}

// Per-tick brute force over the axiomatic evaluator.
std::vector<ec::Tick> brute_ticks(const ec::AxiomaticEvaluator& ax, const std::vector<ThresholdAtom>& atoms,
                                  Window w)
{
    std::vector<ec::Tick> out;
    for (const auto& e : ax.narrative()) {
        if (e.time < w.start || e.time >= w.end || e.event.args()[0].functor().empty())
            continue;
        bool relevant = false;
        for (const auto& a : atoms)
            relevant |= e.event.args()[0].functor() == a.signal;
        if (!relevant)
            continue;
        bool all = true;
        for (const auto& a : atoms) {
            auto held = ax.holds_at(ec::FluentPattern::of(obs_fluent(a.signal)), e.time);
            all &= held.size() == 1 && a.accepts(*reading_of(held[0].value));
        }
        if (all)
            out.push_back(e.time);
    }
    ec::sort_unique(out);
    return out;
}

TEST(Meta, RandomTracesMatchBruteForce)
{
    std::mt19937_64 rng(5150);
    const std::vector<ThresholdAtom> low{{"cgm", Comparator::LessEq, 6.0}, {"hr", Comparator::Less, 65.0}};
    for (int trial = 0; trial < 200; ++trial) {
        const auto trace = fixtures::hypo_hyper_trace(rng, 120, 40);
        ec::AxiomaticEvaluator ax(readings_only());
        ec::NaiveEngine nv(readings_only());
        CecKdEngine kd(readings_only());
        feed(ax, trace);
        feed(nv, trace);
        feed(kd, trace);
        const ec::Tick end = trace.back().tick + 1;
        for (int k = 0; k < 10; ++k) {
            const ec::Tick a = static_cast<ec::Tick>(rng() % static_cast<std::uint64_t>(end));
            const Window w1{a, a + 1 + static_cast<ec::Tick>(rng() % 800)};
            const ec::Tick b = w1.start + static_cast<ec::Tick>(rng() % 400);
            const Window w2{b, b + 1 + static_cast<ec::Tick>(rng() % 800)};
            const auto want1 = brute_ticks(ax, kRule0Atoms, w1);
            const auto want2 = brute_ticks(ax, low, w2);
            for (const ec::QueryContext* ctx : {static_cast<const ec::QueryContext*>(&nv),
                                                static_cast<const ec::QueryContext*>(&kd)}) {
                const auto got = more_or_equals_to(*ctx, 2, kRule0Atoms, w1);
                std::vector<ec::Tick> ticks;
                for (const auto& h : got.hits)
                    ticks.push_back(h.tick);
                ASSERT_EQ(ticks, want1) << "trial " << trial;
                ASSERT_EQ(got.satisfied, want1.size() >= 2);

                std::size_t pairs = 0; // quadratic enumeration
                for (auto x : want1)
                    for (auto y : want2)
                        pairs += x < y;
                const auto cr = constrained_more_or_equals_to(*ctx, 3, kRule0Atoms, low, w1, w2);
                ASSERT_EQ(cr.pairs, pairs) << "trial " << trial;
                ASSERT_EQ(cr.satisfied, pairs >= 3);
            }
        }
    }
}

TEST(Alerts, NothingToExtract)
{
    ec::EffectsReport report;
    report.opened.push_back({{{obs_fluent("cgm"), obs_value(3.0)}, 0, ec::POS_INF}, {}});
    EXPECT_TRUE(extract_alerts(report).empty());
}

TEST(Alerts, Rule0FiresOncePerSuppressWindow)
{
    RuleBook book;
    book.add(fixtures::rule0_spec());
    Monitor<CecKdEngine> mon(book.theory());
    EXPECT_TRUE(mon.update(fixtures::as_event({100, "cgm", 14.0})).empty());
    const auto raised = mon.update(fixtures::as_event({200, "hr", 125.0}));
    ASSERT_EQ(raised.size(), 1u);
    EXPECT_EQ(raised[0].rule_id, "rule0");
    EXPECT_EQ(raised[0].recipients, std::vector<std::string>{"doctor"});
    EXPECT_EQ(raised[0].raised_at, 200);
    ASSERT_FALSE(raised[0].evidence.empty());
    for (const auto& w : raised[0].evidence)
        EXPECT_TRUE(w.tick >= 200 - kOneDay && w.tick <= 200);

    // the pattern keeps holding for three days of readings
    for (ec::Tick t = 300; t < 3 * kOneDay; t += 300)
        mon.update(fixtures::as_event({t, t % 600 ? "cgm" : "hr", t % 600 ? 14.5 : 126.0}));
    ASSERT_EQ(mon.alerts().size(), 3u);
    EXPECT_EQ(mon.alerts()[1].raised_at, 200 + kOneDay + 100);
    for (std::size_t i = 1; i < mon.alerts().size(); ++i)
        EXPECT_GT(mon.alerts()[i].raised_at - mon.alerts()[i - 1].raised_at, kOneDay);
    // alert fluent ends up acknowledged
    EXPECT_EQ(mon.engine().holds_at(ec::FluentPattern::of(alert_fluent({"doctor"}, "rule0")), mon.engine().last_time()),
              (std::vector<ec::FluentAssignment>{{alert_fluent({"doctor"}, "rule0"), alert_sent()}}));
}

TEST(Alerts, RandomTracesMatchPerTickOracleOnEveryEngine)
{
    std::mt19937_64 rng(424242);
    std::map<std::string, std::size_t> fired;
    for (int trial = 0; trial < 60; ++trial) {
        const ec::Tick window = 600 + static_cast<ec::Tick>(rng() % 3000);
        std::vector<RuleSpec> specs{fixtures::rule0_spec(window), fixtures::rule1_spec(window)};
        specs[0].suppress_window = trial % 3 == 0 ? window / 2 : 0;
        RuleSpec simple{"lowcgm", {"nurse", "doctor"}, Pattern::simple({"cgm", Comparator::Less, 4.0}, 2, window), 0};
        specs.push_back(simple);
        RuleBook book;
        for (const auto& s : specs)
            book.add(s);
        const auto trace = fixtures::hypo_hyper_trace(rng, 250, 120);
        Monitor<ec::NaiveEngine> nv(book.theory());
        Monitor<CecKdEngine> kd(book.theory());
        for (const auto& r : trace) {
            nv.update(fixtures::as_event(r));
            kd.update(fixtures::as_event(r));
        }
        ASSERT_EQ(nv.alerts(), kd.alerts()) << "trial " << trial;
        std::vector<std::pair<ec::Tick, std::string>> got;
        for (const auto& a : kd.alerts()) {
            got.emplace_back(a.raised_at, a.rule_id);
            ++fired[a.rule_id];
        }
        ASSERT_EQ(got, fixtures::AlertOracle(specs, trace).alerts()) << "trial " << trial;
    }
    EXPECT_GT(fired["rule0"], 20u);
    EXPECT_GT(fired["rule1"], 20u);
    EXPECT_GT(fired["lowcgm"], 20u);
}

} // namespace
