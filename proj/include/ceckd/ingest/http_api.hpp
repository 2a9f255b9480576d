#ifndef CECKD_INGEST_HTTP_API_HPP
#define CECKD_INGEST_HTTP_API_HPP

#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "ceckd/ingest/records.hpp"
#include "ceckd/ingest/service.hpp"
#include "httplib.h"
#include "json.hpp"

namespace ceckd::ingest {

namespace http_detail {

inline void send_json(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& message,
                       json extra = json::object())
{
    extra["error"] = kind;
    extra["message"] = message;
    send_json(res, status, extra);
}

// Runs a handler and maps library errors onto HTTP statuses.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn)
{
    try {
        fn();
    } catch (const UnknownPatient& e) {
        send_error(res, 404, "UnknownPatient", e.what());
    } catch (const DuplicateRuleId& e) {
        send_error(res, 409, "DuplicateRuleId", e.what());
    } catch (const LateRecord& e) {
        send_error(res, 422, "OutOfOrderEvent", e.what(), {{"timestamp", format_iso8601(e.timestamp())}});
    } catch (const CsvSyntax& e) {
        send_error(res, 400, "CsvSyntax", e.what(), {{"row", e.row()}});
    } catch (const UnknownSignal& e) {
        send_error(res, 400, "UnknownSignal", e.what(), {{"row", e.row()}});
    } catch (const json::exception& e) {
        send_error(res, 400, "MalformedJson", e.what());
    } catch (const Error& e) {
        // remaining request errors: spec, window, timestamp, term, ordering
        const std::string what = e.what();
        const auto colon = what.find(':');
        const bool server_side = dynamic_cast<const LogCorrupt*>(&e) || dynamic_cast<const EngineInvariantViolation*>(&e);
        send_error(res, server_side ? 500 : 400, what.substr(0, colon), what);
    }
}

inline std::optional<EpochSeconds> time_param(const httplib::Request& req, const char* key)
{
    if (!req.has_param(key) || req.get_param_value(key).empty())
        return std::nullopt;
    return parse_iso8601(req.get_param_value(key));
}

inline bool flag_param(const httplib::Request& req, const char* key)
{
    if (!req.has_param(key))
        return false;
    const auto v = req.get_param_value(key);
    return v.empty() || v == "1" || v == "true";
}

inline std::vector<SignalRecord> parse_upload(const httplib::Request& req)
{
    const auto type = req.get_header_value("Content-Type");
    const auto first = req.body.find_first_not_of(" \t\r\n");
    const bool is_json = type.find("json") != std::string::npos ||
                         (type.find("csv") == std::string::npos && first != std::string::npos && req.body[first] == '[');
    if (is_json) {
        json j;
        try {
            j = json::parse(req.body);
        } catch (const json::parse_error& e) {
            throw CsvSyntax(1, std::string("malformed JSON: ") + e.what());
        }
        return records_from_json(j);
    }
    return parse_csv(req.body).records;
}

} // namespace http_detail

/**
 * Routes:
 *   POST /rules[?dry_run=1]            RuleSpec JSON -> {rule_id, canonical_text}
 *   GET  /rules                        deployed RuleSpecs
 *   GET  /patients                     patient ids
 *   POST /patients/{id}/events         CSV or JSON records -> {accepted, rejected, alerts_raised}
 *   GET  /patients/{id}/alerts?from=&to=
 *   GET  /patients/{id}/fluents?fluent=&at=
 *   POST /patients/{id}/replay         -> {events, mvis, alerts}
 */
inline void install_routes(httplib::Server& server, Service& svc)
{
    using namespace http_detail;
    using Req = httplib::Request;
    using Res = httplib::Response;

    server.Get("/health", [](const Req&, Res& res) { send_json(res, 200, {{"status", "ok"}}); });

    server.Post("/rules", [&svc](const Req& req, Res& res) {
        guarded(res, [&] {
            const bool dry = flag_param(req, "dry_run");
            const auto compiled = svc.deploy_rule(json::parse(req.body), dry);
            send_json(res, dry ? 200 : 201,
                      {{"rule_id", compiled.spec.rule_id}, {"canonical_text", compiled.text}, {"deployed", !dry}});
        });
    });

    server.Get("/rules", [&svc](const Req&, Res& res) {
        json out = json::array();
        for (const auto& s : svc.rules())
            out.push_back(patterns::to_json(s));
        send_json(res, 200, out);
    });

    server.Get("/patients", [&svc](const Req&, Res& res) { send_json(res, 200, svc.patients()); });

    const std::string id = R"(/patients/([A-Za-z0-9_-]{1,64}))";

    server.Post(id + "/events", [&svc](const Req& req, Res& res) {
        guarded(res, [&] {
            const auto r = svc.push(req.matches[1], parse_upload(req));
            send_json(res, 200, {{"accepted", r.accepted}, {"rejected", r.rejected}, {"alerts_raised", r.alerts_raised}});
        });
    });

    server.Get(id + "/alerts", [&svc](const Req& req, Res& res) {
        guarded(res, [&] {
            json out = json::array();
            for (const auto& a : svc.alerts(req.matches[1], time_param(req, "from"), time_param(req, "to")))
                out.push_back(to_json(a));
            send_json(res, 200, out);
        });
    });

    server.Get(id + "/fluents", [&svc](const Req& req, Res& res) {
        guarded(res, [&] {
            std::optional<ec::Term> fluent;
            if (req.has_param("fluent") && !req.get_param_value("fluent").empty())
                fluent = ec::parse_term(req.get_param_value("fluent"));
            json out = json::array();
            for (const auto& fa : svc.fluents(req.matches[1], fluent, time_param(req, "at")))
                out.push_back({{"fluent", fa.fluent.text()}, {"value", fa.value.text()}});
            send_json(res, 200, out);
        });
    });

    server.Post(id + "/replay", [&svc](const Req& req, Res& res) {
        guarded(res, [&] {
            const auto r = svc.replay(req.matches[1]);
            send_json(res, 200, {{"events", r.events}, {"mvis", r.mvis}, {"alerts", r.alerts}});
        });
    });

    server.set_exception_handler([](const Req&, Res& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            send_error(res, 500, "Internal", e.what());
        }
    });
}

/// Splits "host:port" (port required).
inline std::pair<std::string, int> parse_listen(const std::string& addr)
{
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos || colon + 1 == addr.size())
        throw ConfigError("listen address must be host:port, got '" + addr + "'");
    int port = 0;
    try {
        port = std::stoi(addr.substr(colon + 1));
    } catch (const std::exception&) {
        throw ConfigError("bad port in '" + addr + "'");
    }
    if (port < 0 || port > 65535)
        throw ConfigError("bad port in '" + addr + "'");
    return {addr.substr(0, colon), port};
}

} // namespace ceckd::ingest

#endif // CECKD_INGEST_HTTP_API_HPP
