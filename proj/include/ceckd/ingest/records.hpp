#ifndef CECKD_INGEST_RECORDS_HPP
#define CECKD_INGEST_RECORDS_HPP

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "ceckd/ec/term.hpp"
#include "ceckd/error.hpp"
#include "json.hpp"

namespace ceckd::ingest {

/// Seconds since 1970-01-01T00:00:00Z.
using EpochSeconds = std::int64_t;

inline constexpr std::array<std::string_view, 6> kSignals{"cgm", "glucose", "hr", "weight", "meal", "activity"};

inline bool known_signal(std::string_view s) noexcept
{
    return std::find(kSignals.begin(), kSignals.end(), s) != kSignals.end();
}

namespace detail {

inline bool digits(std::string_view s, std::size_t pos, std::size_t n, int& out)
{
    out = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (i >= s.size() || s[i] < '0' || s[i] > '9')
            return false;
        out = out * 10 + (s[i] - '0');
    }
    return true;
}

} // namespace detail

/// Parses `YYYY-MM-DDTHH:MM:SS` followed by `Z` or `+00:00`.
inline EpochSeconds parse_iso8601(std::string_view s)
{
    using namespace std::chrono;
    int y, mo, d, h, mi, se;
    const bool shape = s.size() >= 20 && detail::digits(s, 0, 4, y) && s[4] == '-' && detail::digits(s, 5, 2, mo) &&
                       s[7] == '-' && detail::digits(s, 8, 2, d) && s[10] == 'T' && detail::digits(s, 11, 2, h) &&
                       s[13] == ':' && detail::digits(s, 14, 2, mi) && s[16] == ':' && detail::digits(s, 17, 2, se);
    const auto zone = shape ? s.substr(19) : std::string_view{};
    if (!shape || (zone != "Z" && zone != "+00:00"))
        throw BadTimestamp("expected YYYY-MM-DDTHH:MM:SSZ, got '" + std::string(s) + "'");
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || se > 59)
        throw BadTimestamp("no such instant '" + std::string(s) + "'");
    return sys_days{ymd}.time_since_epoch().count() * 86'400LL + h * 3600 + mi * 60 + se;
}

inline std::string format_iso8601(EpochSeconds t)
{
    using namespace std::chrono;
    auto days = t / 86'400;
    if (t % 86'400 < 0)
        --days;
    const auto secs = t - days * 86'400;
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                  static_cast<long long>(secs % 60));
    return buf;
}

struct SignalRecord {
    EpochSeconds timestamp = 0;
    std::string signal;
    double value = 0.0;

    friend bool operator==(const SignalRecord&, const SignalRecord&) = default;
};

struct PatientStream {
    std::string patient_id;
    std::vector<SignalRecord> records;

    friend bool operator==(const PatientStream&, const PatientStream&) = default;
};

inline std::string format_value(double v) { return ec::Term::format_decimal(v); }

/**
 * CSV with mandatory header `timestamp,signal,value`. A UTF-8 byte order
 * mark and CR before LF are tolerated; blank lines are only allowed at the
 * end. Records must be sorted by timestamp.
 */
inline PatientStream parse_csv(std::string_view text, std::string patient_id = {})
{
    if (text.substr(0, 3) == "\xEF\xBB\xBF")
        text.remove_prefix(3);
    PatientStream out{std::move(patient_id), {}};
    std::size_t row = 0;
    std::size_t blank_at = 0;
    bool header = false;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++row;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line.empty()) {
            if (!blank_at)
                blank_at = row;
            continue;
        }
        if (blank_at)
            throw CsvSyntax(blank_at, "blank line before end of input");
        if (!header) {
            if (line != "timestamp,signal,value")
                throw CsvSyntax(row, "header must be 'timestamp,signal,value'");
            header = true;
            continue;
        }
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string_view::npos || line.find(',', c2 + 1) != std::string_view::npos)
            throw CsvSyntax(row, "expected 3 fields");
        SignalRecord r;
        try {
            r.timestamp = parse_iso8601(line.substr(0, c1));
        } catch (const BadTimestamp& e) {
            throw CsvSyntax(row, e.what());
        }
        r.signal = std::string(line.substr(c1 + 1, c2 - c1 - 1));
        if (!known_signal(r.signal))
            throw UnknownSignal(row, r.signal);
        const auto v = line.substr(c2 + 1);
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), r.value);
        if (v.empty() || ec != std::errc() || p != v.data() + v.size() || !std::isfinite(r.value))
            throw CsvSyntax(row, "value '" + std::string(v) + "' is not a finite decimal");
        if (!out.records.empty() && r.timestamp < out.records.back().timestamp)
            throw UnsortedInput("row " + std::to_string(row) + " precedes the row before it");
        out.records.push_back(std::move(r));
    }
    if (!header)
        throw CsvSyntax(1, "missing header");
    return out;
}

inline std::string to_csv(const PatientStream& s)
{
    std::string out = "timestamp,signal,value\n";
    for (const auto& r : s.records)
        out += format_iso8601(r.timestamp) + "," + r.signal + "," + format_value(r.value) + "\n";
    return out;
}

using nlohmann::json;

inline json to_json(const SignalRecord& r)
{
    return {{"timestamp", format_iso8601(r.timestamp)}, {"signal", r.signal}, {"value", r.value}};
}

/// JSON array of {timestamp, signal, value}; rows are numbered from 1.
inline std::vector<SignalRecord> records_from_json(const json& j)
{
    if (!j.is_array())
        throw CsvSyntax(1, "expected a JSON array of records");
    std::vector<SignalRecord> out;
    std::size_t row = 0;
    for (const auto& item : j) {
        ++row;
        if (!item.is_object() || !item.contains("timestamp") || !item.contains("signal") || !item.contains("value") ||
            !item["timestamp"].is_string() || !item["signal"].is_string() || !item["value"].is_number())
            throw CsvSyntax(row, "record needs string timestamp, string signal and numeric value");
        SignalRecord r;
        try {
            r.timestamp = parse_iso8601(item["timestamp"].get<std::string>());
        } catch (const BadTimestamp& e) {
            throw CsvSyntax(row, e.what());
        }
        r.signal = item["signal"].get<std::string>();
        if (!known_signal(r.signal))
            throw UnknownSignal(row, r.signal);
        r.value = item["value"].get<double>();
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace ceckd::ingest

#endif // CECKD_INGEST_RECORDS_HPP
