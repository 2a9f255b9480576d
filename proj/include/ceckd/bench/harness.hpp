#ifndef CECKD_BENCH_HARNESS_HPP
#define CECKD_BENCH_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "ceckd/ec/naive.hpp"
#include "ceckd/engine/ceckd_engine.hpp"
#include "ceckd/error.hpp"
#include "ceckd/ingest/bootstrap.hpp"
#include "ceckd/patterns/compiler.hpp"

namespace ceckd::bench {

using ec::Tick;
using ingest::PatientStream;

enum class EngineKind { Naive, CecKd };
enum class QueryMix { Ground, Unbound, Both };

inline std::string engine_name(EngineKind e) { return e == EngineKind::Naive ? "naive" : "ceckd"; }

inline EngineKind parse_engine(const std::string& s)
{
    if (s == "naive" || s == "cec")
        return EngineKind::Naive;
    if (s == "ceckd")
        return EngineKind::CecKd;
    throw ConfigError("engine must be naive or ceckd, got '" + s + "'");
}

inline QueryMix parse_query_mix(const std::string& s)
{
    if (s == "ground" || s == "ground_holds_at")
        return QueryMix::Ground;
    if (s == "unbound" || s == "unbound_holds_at")
        return QueryMix::Unbound;
    if (s == "both")
        return QueryMix::Both;
    throw ConfigError("query mix must be ground, unbound or both, got '" + s + "'");
}

struct BenchConfig {
    EngineKind engine = EngineKind::CecKd;
    std::size_t events = 10'000;
    std::size_t repeats = 50;
    std::size_t threads = 1;
    QueryMix query_mix = QueryMix::Both;
    std::uint64_t rng_seed = 1;
    std::string output;
    std::size_t sample_every = 100;
    std::size_t warmup = 100;
    std::size_t queries_per_sample = 20;

    void validate() const
    {
        if (events < 100)
            throw ConfigError("events must be at least 100");
        if (repeats < 1)
            throw ConfigError("repeats must be at least 1");
        if (threads < 1)
            throw ConfigError("threads must be at least 1");
        if (sample_every < 1 || queries_per_sample < 1)
            throw ConfigError("sampling parameters must be positive");
        if (warmup >= events)
            throw ConfigError("warm-up must be shorter than the run");
    }
};

/// Metrics at one sample point; latencies average the events since the previous sample.
struct BenchRow {
    std::size_t event_index = 0;
    double update_ns = 0;
    double ground_query_ns = 0;
    double unbound_query_ns = 0;
    double ground_visits = 0;
    double unbound_visits = 0;
    std::size_t mvis = 0;
    std::size_t structure_bytes = 0;
};

struct Stat {
    double mean = 0;
    double stddev = 0;
};

inline Stat stat_of(const std::vector<double>& xs)
{
    Stat s;
    if (xs.empty())
        return s;
    for (double x : xs)
        s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double v = 0;
        for (double x : xs)
            v += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(v / static_cast<double>(xs.size() - 1));
    }
    return s;
}

/// Rows averaged over repeats.
struct AggregateRow {
    std::size_t event_index = 0;
    Stat update_ns, ground_query_ns, unbound_query_ns, ground_visits, unbound_visits;
    std::size_t mvis = 0;
    std::size_t structure_bytes = 0;
};

struct RunSummary {
    EngineKind engine = EngineKind::CecKd;
    std::size_t events = 0;
    std::size_t repeats = 0;
    Stat first_decile_update_ns;
    Stat last_decile_update_ns;
    Stat decile_ratio; // last / first, per repeat
    Stat final_ground_query_ns;
    Stat final_unbound_query_ns;
    Stat mean_update_ns;
    std::size_t final_mvis = 0;
    std::size_t final_structure_bytes = 0;
};

struct RunResult {
    std::vector<AggregateRow> rows;
    RunSummary summary;
};

struct ConcurrentResult {
    EngineKind engine = EngineKind::CecKd;
    std::size_t threads = 0;
    std::size_t events_per_engine = 0;
    double wall_seconds = 0;
    double events_per_second = 0;
    std::size_t structure_bytes = 0;
};

/// The monitored theory: rule0 and rule1 over the reading rule.
inline std::shared_ptr<const ec::DomainTheory> monitoring_theory()
{
    patterns::RuleBook book;
    using patterns::Comparator;
    using patterns::Pattern;
    book.add({"rule0",
              {"doctor"},
              Pattern::complex({{"cgm", Comparator::Greater, 13.0}, {"hr", Comparator::Greater, 120.0}}, 1,
                               patterns::kOneDay),
              0});
    book.add({"rule1",
              {"doctor"},
              Pattern::complex_sequential(
                  Pattern::complex({{"hr", Comparator::Greater, 130.0}, {"cgm", Comparator::Greater, 15.0}}, 1,
                                   patterns::kOneDay),
                  Pattern::complex({{"cgm", Comparator::Less, 5.0}, {"hr", Comparator::Less, 60.0}}, 1,
                                   patterns::kOneDay),
                  patterns::kOneDay),
              0});
    return book.theory();
}

/// Bootstrapped patients of exactly `events` records, from synthetic seeds.
inline std::vector<PatientStream> workload(std::size_t events, std::size_t patients, std::uint64_t seed)
{
    const auto seeds = ingest::synthetic_seed_streams(seed);
    std::size_t longest = 0;
    for (const auto& s : seeds)
        longest = std::max(longest, s.records.size());
    auto streams = ingest::bootstrap(seeds, std::max(events, longest), patients, seed + 1);
    for (auto& s : streams)
        s.records.resize(events);
    return streams;
}

inline std::vector<ec::EventOccurrence> to_events(const PatientStream& s)
{
    std::vector<ec::EventOccurrence> out;
    out.reserve(s.records.size());
    const auto origin = s.records.empty() ? 0 : s.records.front().timestamp;
    for (const auto& r : s.records)
        out.push_back({patterns::obs_event(r.signal, r.value), r.timestamp - origin});
    return out;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double ns_since(Clock::time_point t0)
{
    return static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count());
}

template <typename E>
std::size_t visits_of(const E& e)
{
    if constexpr (std::is_same_v<E, CecKdEngine>)
        return e.counters().visited;
    else
        return e.counters().scanned;
}

template <typename E>
void reset_visits(const E& e)
{
    if constexpr (std::is_same_v<E, CecKdEngine>)
        e.reset_visit_counter();
    else
        e.reset_scan_counter();
}

// Value of `signal` in force at tick t, from the event list (for ground queries).
inline std::optional<ec::Term> reading_at(const std::vector<ec::EventOccurrence>& evs, std::size_t upto,
                                          const ec::Term& signal, Tick t)
{
    auto it = std::upper_bound(evs.begin(), evs.begin() + static_cast<long>(upto), t,
                               [](Tick x, const ec::EventOccurrence& e) { return x < e.time; });
    while (it != evs.begin()) {
        --it;
        if (it->event.args()[0] == signal)
            return ec::Term::compound("value", {it->event.args()[1]});
    }
    return std::nullopt;
}

template <typename E>
BenchRow sample(const E& engine, const std::vector<ec::EventOccurrence>& evs, std::size_t done, double update_ns,
                const BenchConfig& cfg, std::mt19937_64& rng)
{
    BenchRow row;
    row.event_index = done;
    row.update_ns = update_ns;
    row.mvis = engine.mvi_count();
    row.structure_bytes = engine.structure_bytes();
    const Tick last = evs[done - 1].time;
    const ec::Term cgm = ec::atom("cgm");
    const ec::Term fluent = patterns::obs_fluent("cgm");
    std::size_t n = 0;
    if (cfg.query_mix != QueryMix::Unbound) {
        double ns = 0, visits = 0;
        for (std::size_t q = 0; q < cfg.queries_per_sample; ++q) {
            const Tick t = static_cast<Tick>(rng() % static_cast<std::uint64_t>(last + 1));
            auto v = reading_at(evs, done, cgm, t);
            if (!v)
                continue;
            const auto pat = ec::FluentPattern::ground(fluent, *v);
            reset_visits(engine);
            const auto t0 = Clock::now();
            const auto held = engine.holds_at(pat, t);
            ns += ns_since(t0);
            visits += static_cast<double>(visits_of(engine));
            if (held.size() != 1)
                throw EngineInvariantViolation("ground holds_at missed a reading in force");
            ++n;
        }
        row.ground_query_ns = n ? ns / static_cast<double>(n) : 0;
        row.ground_visits = n ? visits / static_cast<double>(n) : 0;
    }
    if (cfg.query_mix != QueryMix::Ground) {
        double ns = 0, visits = 0;
        for (std::size_t q = 0; q < cfg.queries_per_sample; ++q) {
            const Tick t = static_cast<Tick>(rng() % static_cast<std::uint64_t>(last + 1));
            reset_visits(engine);
            const auto t0 = Clock::now();
            const auto held = engine.holds_at(ec::FluentPattern::any(), t);
            ns += ns_since(t0);
            visits += static_cast<double>(visits_of(engine));
            if (held.empty() && t > 0)
                throw EngineInvariantViolation("unbound holds_at found nothing");
        }
        row.unbound_query_ns = ns / static_cast<double>(cfg.queries_per_sample);
        row.unbound_visits = visits / static_cast<double>(cfg.queries_per_sample);
    }
    return row;
}

template <typename E>
std::vector<BenchRow> run_once(const std::vector<ec::EventOccurrence>& evs, const BenchConfig& cfg,
                               std::uint64_t seed, std::vector<double>* per_event_ns)
{
    patterns::Monitor<E> mon(monitoring_theory());
    std::mt19937_64 rng(seed);
    std::vector<BenchRow> rows;
    double window_ns = 0;
    for (std::size_t i = 0; i < evs.size(); ++i) {
        const auto t0 = Clock::now();
        mon.update(evs[i]);
        const double ns = ns_since(t0);
        window_ns += ns;
        if (per_event_ns)
            (*per_event_ns)[i] = ns;
        if ((i + 1) % cfg.sample_every == 0) {
            rows.push_back(sample(mon.engine(), evs, i + 1, window_ns / static_cast<double>(cfg.sample_every), cfg, rng));
            window_ns = 0;
        }
    }
    return rows;
}

inline double mean_range(const std::vector<double>& xs, std::size_t from, std::size_t to)
{
    double s = 0;
    for (std::size_t i = from; i < to; ++i)
        s += xs[i];
    return to > from ? s / static_cast<double>(to - from) : 0;
}

} // namespace detail

/**
 * Equivalence gate run before results are reported: both engines answer
 * every query kind identically after each of the first `prefix` events.
 * Returns an empty string on success, else a description of the mismatch.
 */
inline std::string equivalence_check(const std::vector<ec::EventOccurrence>& evs, std::size_t prefix = 1000)
{
    auto theory = monitoring_theory();
    patterns::Monitor<ec::NaiveEngine> nv(theory);
    patterns::Monitor<CecKdEngine> kd(theory);
    const auto any = ec::FluentPattern::any();
    const auto readings = ec::EventPattern{std::string("obs"), 2, std::nullopt, std::nullopt};
    for (std::size_t i = 0; i < std::min(prefix, evs.size()); ++i) {
        if (nv.update(evs[i]) != kd.update(evs[i]))
            return "alerts differ at event " + std::to_string(i);
        const Tick t = evs[i].time;
        if (nv.engine().holds_at(any, t) != kd.engine().holds_at(any, t))
            return "holds_at differs at event " + std::to_string(i);
        const Tick ws = std::max<Tick>(0, t - 3600);
        if (nv.engine().cached_between(ws, t + 1, any) != kd.engine().cached_between(ws, t + 1, any))
            return "cached_between differs at event " + std::to_string(i);
        if (nv.engine().happens_in_window(readings, ws, t) != kd.engine().happens_in_window(readings, ws, t))
            return "happens_in_window differs at event " + std::to_string(i);
    }
    if (nv.engine().mholds_for(any) != kd.engine().mholds_for(any))
        return "mholds_for differs";
    return {};
}

/// `cfg.repeats` runs of one bootstrapped stream through the configured engine.
inline RunResult run(const BenchConfig& cfg)
{
    cfg.validate();
    const auto evs = to_events(workload(cfg.events, 1, cfg.rng_seed).front());
    if (auto err = equivalence_check(evs); !err.empty())
        throw EngineInvariantViolation("pre-report equivalence check failed: " + err);

    std::vector<std::vector<BenchRow>> all;
    std::vector<double> first, last, ratio, mean_all;
    std::vector<double> per_event(evs.size());
    const std::size_t decile = cfg.events / 10;
    const std::size_t first_from = std::min(cfg.warmup, decile - 1);
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
        auto rows = cfg.engine == EngineKind::Naive
                        ? detail::run_once<ec::NaiveEngine>(evs, cfg, cfg.rng_seed * 1000 + r, &per_event)
                        : detail::run_once<CecKdEngine>(evs, cfg, cfg.rng_seed * 1000 + r, &per_event);
        const double f = detail::mean_range(per_event, first_from, decile);
        const double l = detail::mean_range(per_event, cfg.events - decile, cfg.events);
        first.push_back(f);
        last.push_back(l);
        ratio.push_back(l / f);
        mean_all.push_back(detail::mean_range(per_event, cfg.warmup, cfg.events));
        all.push_back(std::move(rows));
    }

    RunResult res;
    for (std::size_t k = 0; k < all.front().size(); ++k) {
        AggregateRow a;
        a.event_index = all.front()[k].event_index;
        std::vector<double> u, g, ub, gv, uv;
        for (const auto& rows : all) {
            u.push_back(rows[k].update_ns);
            g.push_back(rows[k].ground_query_ns);
            ub.push_back(rows[k].unbound_query_ns);
            gv.push_back(rows[k].ground_visits);
            uv.push_back(rows[k].unbound_visits);
        }
        a.update_ns = stat_of(u);
        a.ground_query_ns = stat_of(g);
        a.unbound_query_ns = stat_of(ub);
        a.ground_visits = stat_of(gv);
        a.unbound_visits = stat_of(uv);
        a.mvis = all.front()[k].mvis;
        a.structure_bytes = all.front()[k].structure_bytes;
        res.rows.push_back(a);
    }
    auto& s = res.summary;
    s.engine = cfg.engine;
    s.events = cfg.events;
    s.repeats = cfg.repeats;
    s.first_decile_update_ns = stat_of(first);
    s.last_decile_update_ns = stat_of(last);
    s.decile_ratio = stat_of(ratio);
    s.mean_update_ns = stat_of(mean_all);
    std::vector<double> fg, fu;
    for (const auto& rows : all) {
        fg.push_back(rows.back().ground_query_ns);
        fu.push_back(rows.back().unbound_query_ns);
    }
    s.final_ground_query_ns = stat_of(fg);
    s.final_unbound_query_ns = stat_of(fu);
    s.final_mvis = res.rows.back().mvis;
    s.final_structure_bytes = res.rows.back().structure_bytes;
    return res;
}

/// `cfg.threads` engines on as many threads, one bootstrapped patient each.
inline ConcurrentResult run_concurrent(const BenchConfig& cfg)
{
    cfg.validate();
    const auto streams = workload(cfg.events, cfg.threads, cfg.rng_seed);
    std::vector<std::vector<ec::EventOccurrence>> evs;
    for (const auto& s : streams)
        evs.push_back(to_events(s));
    std::vector<std::size_t> bytes(cfg.threads);
    std::atomic<std::size_t> ready{0};
    std::atomic<bool> go{false};
    auto body = [&](std::size_t k) {
        auto drive = [&](auto& mon) {
            ++ready;
            while (!go.load())
                std::this_thread::yield();
            for (const auto& e : evs[k])
                mon.update(e);
            bytes[k] = mon.engine().structure_bytes();
        };
        if (cfg.engine == EngineKind::Naive) {
            patterns::Monitor<ec::NaiveEngine> mon(monitoring_theory());
            drive(mon);
        } else {
            patterns::Monitor<CecKdEngine> mon(monitoring_theory());
            drive(mon);
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < cfg.threads; ++k)
        pool.emplace_back(body, k);
    while (ready.load() < cfg.threads)
        std::this_thread::yield();
    const auto t0 = detail::Clock::now();
    go = true;
    for (auto& t : pool)
        t.join();
    ConcurrentResult r;
    r.engine = cfg.engine;
    r.threads = cfg.threads;
    r.events_per_engine = cfg.events;
    r.wall_seconds = detail::ns_since(t0) / 1e9;
    r.events_per_second = static_cast<double>(cfg.threads * cfg.events) / r.wall_seconds;
    for (auto b : bytes)
        r.structure_bytes += b;
    return r;
}

// ---- output ------------------------------------------------------------------

inline constexpr const char* kRowsHeader =
    "engine,event_index,update_ns_mean,update_ns_sd,ground_query_ns_mean,ground_query_ns_sd,"
    "unbound_query_ns_mean,unbound_query_ns_sd,ground_visits_mean,unbound_visits_mean,mvis,structure_bytes";

inline std::string rows_csv(const RunResult& r, bool header = true)
{
    std::string out = header ? std::string(kRowsHeader) + "\n" : "";
    char buf[512];
    for (const auto& a : r.rows) {
        std::snprintf(buf, sizeof buf, "%s,%zu,%.1f,%.1f,%.1f,%.1f,%.1f,%.1f,%.2f,%.2f,%zu,%zu\n",
                      engine_name(r.summary.engine).c_str(), a.event_index, a.update_ns.mean, a.update_ns.stddev,
                      a.ground_query_ns.mean, a.ground_query_ns.stddev, a.unbound_query_ns.mean,
                      a.unbound_query_ns.stddev, a.ground_visits.mean, a.unbound_visits.mean, a.mvis,
                      a.structure_bytes);
        out += buf;
    }
    return out;
}

inline std::string summary_csv(const RunSummary& s)
{
    std::string out = "engine,metric,mean,stddev\n";
    auto line = [&](const char* name, Stat st) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s,%s,%.3f,%.3f\n", engine_name(s.engine).c_str(), name, st.mean, st.stddev);
        out += buf;
    };
    line("first_decile_update_ns", s.first_decile_update_ns);
    line("last_decile_update_ns", s.last_decile_update_ns);
    line("decile_ratio", s.decile_ratio);
    line("mean_update_ns", s.mean_update_ns);
    line("final_ground_query_ns", s.final_ground_query_ns);
    line("final_unbound_query_ns", s.final_unbound_query_ns);
    line("final_mvis", {static_cast<double>(s.final_mvis), 0});
    line("final_structure_bytes", {static_cast<double>(s.final_structure_bytes), 0});
    return out;
}

} // namespace ceckd::bench

#endif // CECKD_BENCH_HARNESS_HPP
