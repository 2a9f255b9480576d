#ifndef CECKD_INGEST_SERVICE_HPP
#define CECKD_INGEST_SERVICE_HPP

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "ceckd/engine/ceckd_engine.hpp"
#include "ceckd/error.hpp"
#include "ceckd/ingest/narrative_log.hpp"
#include "ceckd/ingest/records.hpp"
#include "ceckd/patterns/compiler.hpp"
#include "json.hpp"

namespace ceckd::ingest {

using nlohmann::json;

struct ServiceConfig {
    fs::path log_dir = "ceckd-data";
    patterns::SpecDefaults defaults;

    /// {"log_dir": "...", "default_window": 86400, "default_suppress_window": 0}
    static ServiceConfig from_json(const json& j)
    {
        ServiceConfig c;
        try {
            if (!j.is_object())
                throw ConfigError("config must be a JSON object");
            c.log_dir = j.value("log_dir", c.log_dir.string());
            c.defaults.window = j.value("default_window", c.defaults.window);
            c.defaults.suppress_window = j.value("default_suppress_window", c.defaults.suppress_window);
        } catch (const json::exception& e) {
            throw ConfigError(e.what());
        }
        if (c.defaults.window <= 0 || c.defaults.suppress_window < 0)
            throw ConfigError("windows must be positive");
        return c;
    }

    static ServiceConfig load(const fs::path& path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot read " + path.string());
        try {
            return from_json(json::parse(in));
        } catch (const json::parse_error& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
    }
};

/// A record at or after which the upload could not be applied.
class LateRecord : public OutOfOrderEvent {
public:
    LateRecord(EpochSeconds ts, const std::string& what) : OutOfOrderEvent(what), timestamp_(ts) {}
    EpochSeconds timestamp() const noexcept { return timestamp_; }

private:
    EpochSeconds timestamp_;
};

struct PushResult {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t alerts_raised = 0;
};

struct ReplayResult {
    std::size_t events = 0;
    std::size_t mvis = 0;
    std::size_t alerts = 0;
};

struct StampedAlert {
    patterns::Alert alert;
    EpochSeconds timestamp = 0;

    friend bool operator==(const StampedAlert&, const StampedAlert&) = default;
};

inline json to_json(const StampedAlert& a)
{
    json j = patterns::to_json(a.alert);
    j["timestamp"] = format_iso8601(a.timestamp);
    return j;
}

inline bool valid_patient_id(std::string_view id) noexcept
{
    if (id.empty() || id.size() > 64)
        return false;
    for (char c : id)
        if (!((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-'))
            return false;
    return true;
}

/**
 * Rule deployment and per-patient monitoring. Every patient owns one engine
 * fed from its narrative log; the tick of a record is its offset in seconds
 * from the patient's first record. Deployed rules are kept in
 * `<log_dir>/rules.json`; constructing a Service over an existing log
 * directory rebuilds every patient by replay.
 *
 * Thread-safe: patients are served concurrently, requests for one patient
 * are serialized, and deploying a rule excludes everything else.
 */
class Service {
public:
    using Monitor = patterns::Monitor<CecKdEngine>;

    explicit Service(ServiceConfig config) : config_(std::move(config)), log_(config_.log_dir)
    {
        const auto rules_path = rules_file();
        if (fs::exists(rules_path)) {
            json all;
            try {
                all = json::parse(detail::read_file(rules_path));
            } catch (const json::parse_error& e) {
                throw LogCorrupt(rules_path.string() + ": " + e.what());
            }
            for (const auto& j : all)
                book_.add(patterns::rule_spec_from_json(j, config_.defaults));
        }
        theory_ = book_.theory();
        for (const auto& id : log_.patients()) {
            auto p = std::make_unique<Patient>();
            rebuild(id, *p);
            patients_.emplace(id, std::move(p));
        }
    }

    const ServiceConfig& config() const noexcept { return config_; }

    /// Compiles and, unless `dry_run`, deploys the rule and replays every patient.
    patterns::CompiledRule deploy_rule(const json& spec_json, bool dry_run = false)
    {
        auto spec = patterns::rule_spec_from_json(spec_json, config_.defaults);
        std::unique_lock lock(rules_mutex_);
        if (book_.find(spec.rule_id))
            throw DuplicateRuleId("rule '" + spec.rule_id + "' is already deployed");
        if (dry_run)
            return patterns::compile(spec);
        patterns::RuleBook next = book_;
        const auto compiled = next.add(spec);
        json all = json::array();
        for (const auto& r : next.rules())
            all.push_back(patterns::to_json(r.spec));
        write_file_atomic(rules_file(), all.dump(2) + "\n");
        book_ = std::move(next);
        theory_ = book_.theory();
        std::lock_guard plock(patients_mutex_);
        for (auto& [id, p] : patients_) {
            std::lock_guard guard(p->mutex);
            rebuild(id, *p);
        }
        return compiled;
    }

    std::vector<patterns::RuleSpec> rules() const
    {
        std::shared_lock lock(rules_mutex_);
        std::vector<patterns::RuleSpec> out;
        for (const auto& r : book_.rules())
            out.push_back(r.spec);
        return out;
    }

    std::vector<std::string> patients() const
    {
        std::lock_guard lock(patients_mutex_);
        std::vector<std::string> out;
        for (const auto& [id, p] : patients_)
            out.push_back(id);
        return out;
    }

    /**
     * Applies an upload: records are sorted by timestamp, logged, then fed
     * to the patient's engine. An upload reaching before the patient's last
     * event is rejected whole. Creates the patient on first upload.
     */
    PushResult push(const std::string& patient, std::vector<SignalRecord> records)
    {
        require_id(patient);
        std::shared_lock rules(rules_mutex_);
        Patient& p = obtain(patient);
        std::lock_guard guard(p.mutex);
        std::stable_sort(records.begin(), records.end(),
                         [](const SignalRecord& a, const SignalRecord& b) { return a.timestamp < b.timestamp; });
        PushResult result;
        if (records.empty()) {
            log_.touch(patient);
            return result;
        }
        const EpochSeconds origin = p.origin.value_or(records.front().timestamp);
        const ec::Tick first_tick = records.front().timestamp - origin;
        if (first_tick < 0 || (p.events > 0 && first_tick < p.monitor->engine().last_time()))
            throw LateRecord(records.front().timestamp,
                             "record at " + format_iso8601(records.front().timestamp) +
                                 " precedes the patient's last event at " +
                                 format_iso8601(origin + p.monitor->engine().last_time()));
        std::vector<NarrativeLog::Entry> batch;
        batch.reserve(records.size());
        for (const auto& r : records)
            batch.push_back({r.timestamp, r.timestamp - origin, patterns::obs_event(r.signal, r.value)});
        log_.append(patient, batch);
        p.origin = origin;
        for (const auto& e : batch)
            result.alerts_raised += feed(p, e);
        result.accepted = records.size();
        return result;
    }

    /// Alerts raised between `from` and `to` (inclusive, either may be open).
    std::vector<StampedAlert> alerts(const std::string& patient, std::optional<EpochSeconds> from = {},
                                     std::optional<EpochSeconds> to = {}) const
    {
        if (from && to && *from > *to)
            throw MalformedWindow("from is after to");
        std::shared_lock rules(rules_mutex_);
        const Patient& p = find(patient);
        std::lock_guard guard(p.mutex);
        std::vector<StampedAlert> out;
        for (const auto& a : p.monitor->alerts()) {
            const EpochSeconds ts = *p.origin + a.raised_at;
            if ((!from || ts >= *from) && (!to || ts <= *to))
                out.push_back({a, ts});
        }
        return out;
    }

    /// holds_at for `fluent` (all fluents when unset) at `at` (latest event when unset).
    std::vector<ec::FluentAssignment> fluents(const std::string& patient, std::optional<ec::Term> fluent = {},
                                              std::optional<EpochSeconds> at = {}) const
    {
        std::shared_lock rules(rules_mutex_);
        const Patient& p = find(patient);
        std::lock_guard guard(p.mutex);
        if (!p.origin)
            return {};
        const ec::Tick t = at ? *at - *p.origin : p.monitor->engine().last_time();
        if (t < 0)
            return {};
        const auto q = fluent ? ec::FluentPattern::of(*fluent) : ec::FluentPattern::any();
        return p.monitor->engine().holds_at(q, t);
    }

    /// Drops the patient's engine and rebuilds it from the log.
    ReplayResult replay(const std::string& patient)
    {
        std::shared_lock rules(rules_mutex_);
        Patient& p = find(patient);
        std::lock_guard guard(p.mutex);
        rebuild(patient, p);
        return {p.events, p.monitor->engine().mvi_count(), p.monitor->alerts().size()};
    }

private:
    struct Patient {
        mutable std::mutex mutex;
        std::optional<EpochSeconds> origin;
        std::unique_ptr<Monitor> monitor;
        std::size_t events = 0;
    };

    fs::path rules_file() const { return config_.log_dir / "rules.json"; }

    static void require_id(const std::string& id)
    {
        if (!valid_patient_id(id))
            throw InvalidPatientId("'" + id + "' (use 1-64 of [A-Za-z0-9_-])");
    }

    Patient& obtain(const std::string& id)
    {
        std::lock_guard lock(patients_mutex_);
        auto& slot = patients_[id];
        if (!slot) {
            slot = std::make_unique<Patient>();
            slot->monitor = std::make_unique<Monitor>(theory_);
        }
        return *slot;
    }

    Patient& find(const std::string& id) const
    {
        std::lock_guard lock(patients_mutex_);
        auto it = patients_.find(id);
        if (it == patients_.end())
            throw UnknownPatient("'" + id + "'");
        return *it->second;
    }

    std::size_t feed(Patient& p, const NarrativeLog::Entry& e)
    {
        ++p.events;
        return p.monitor->update({e.event, e.tick}).size();
    }

    void rebuild(const std::string& id, Patient& p)
    {
        p.monitor = std::make_unique<Monitor>(theory_);
        p.events = 0;
        p.origin.reset();
        const auto entries = log_.read(id);
        if (!entries.empty())
            p.origin = entries.front().timestamp - entries.front().tick;
        for (const auto& e : entries)
            feed(p, e);
    }

    ServiceConfig config_;
    NarrativeLog log_;
    mutable std::shared_mutex rules_mutex_;
    patterns::RuleBook book_;
    std::shared_ptr<const ec::DomainTheory> theory_;
    mutable std::mutex patients_mutex_;
    std::map<std::string, std::unique_ptr<Patient>> patients_;
};

} // namespace ceckd::ingest

#endif // CECKD_INGEST_SERVICE_HPP
