#ifndef CECKD_INGEST_BOOTSTRAP_HPP
#define CECKD_INGEST_BOOTSTRAP_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ceckd/error.hpp"
#include "ceckd/ingest/records.hpp"

namespace ceckd::ingest {

inline constexpr EpochSeconds kDay = 86'400;
inline constexpr EpochSeconds kCgmPeriod = 300; // 288 samples per day
/// 2014-10-01T00:00:00Z
inline constexpr EpochSeconds kSeedOrigin = 1'412'121'600;

namespace detail {

// Uniform in [0, 1) from the top 53 bits; the same on every platform.
inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double round_to(double v, double step) { return std::round(v / step) * step; }

inline EpochSeconds day_of(EpochSeconds t) { return t >= 0 ? t / kDay : (t - kDay + 1) / kDay; }

} // namespace detail

/**
 * Synthetic stand-in for the seed recordings: per day a CGM sample every
 * five minutes, heart rate every fifteen, four finger-prick glucose values,
 * three meals, a weight and a few activity codes. Glucose follows meal
 * excursions and occasional hypoglycaemic dips, so both hyper- and hypo-
 * thresholds are crossed.
 */
inline std::vector<PatientStream> synthetic_seed_streams(std::uint64_t seed, std::size_t patients = 7,
                                                         std::size_t days = 4)
{
    std::mt19937_64 rng(seed);
    std::vector<PatientStream> out;
    for (std::size_t p = 0; p < patients; ++p) {
        PatientStream s{"seed" + std::to_string(p + 1), {}};
        double weight = 60.0 + 30.0 * detail::unit(rng);
        const double basal = 6.0 + 3.0 * detail::unit(rng);
        const double rest_hr = 60.0 + 15.0 * detail::unit(rng);
        for (std::size_t d = 0; d < days; ++d) {
            const EpochSeconds day0 = kSeedOrigin + static_cast<EpochSeconds>(d) * kDay;
            std::vector<SignalRecord> day;
            const EpochSeconds meals[3] = {7 * 3600 + static_cast<EpochSeconds>(rng() % 3600),
                                           12 * 3600 + static_cast<EpochSeconds>(rng() % 3600),
                                           19 * 3600 + static_cast<EpochSeconds>(rng() % 3600)};
            const double dip_at = 2.0 * 3600 + detail::unit(rng) * 20.0 * 3600;
            const bool dips = rng() % 2 == 0;
            const double exercise_at = 9.0 * 3600 + detail::unit(rng) * 9.0 * 3600;
            for (EpochSeconds t = 0; t < kDay; t += kCgmPeriod) {
                double g = basal + 0.6 * (detail::unit(rng) - 0.5);
                for (EpochSeconds m : meals)
                    if (t >= m && t < m + 3 * 3600)
                        g += 8.0 * std::sin(3.14159265 * static_cast<double>(t - m) / (3.0 * 3600));
                if (dips && std::abs(static_cast<double>(t) - dip_at) < 2400)
                    g -= 4.5;
                day.push_back({day0 + t, "cgm", detail::round_to(std::max(2.2, g), 0.1)});
                if (t % 900 == 0) {
                    double hr = rest_hr + 10.0 * detail::unit(rng);
                    if (std::abs(static_cast<double>(t) - exercise_at) < 3600)
                        hr += 55.0 + 20.0 * detail::unit(rng);
                    if (t < 6 * 3600)
                        hr -= 8.0;
                    day.push_back({day0 + t, "hr", detail::round_to(hr, 1.0)});
                }
            }
            for (int k = 0; k < 4; ++k) {
                const EpochSeconds t = static_cast<EpochSeconds>(rng() % kDay);
                day.push_back({day0 + t, "glucose", detail::round_to(4.0 + 10.0 * detail::unit(rng), 0.1)});
            }
            for (int k = 0; k < 3; ++k)
                day.push_back({day0 + meals[k], "meal", static_cast<double>(k + 1)});
            weight += 0.4 * (detail::unit(rng) - 0.5);
            day.push_back({day0 + 7 * 3600, "weight", detail::round_to(weight, 0.1)});
            for (int k = 0, n = 1 + static_cast<int>(rng() % 3); k < n; ++k)
                day.push_back({day0 + static_cast<EpochSeconds>(exercise_at) + 600 * k, "activity",
                               static_cast<double>(1 + rng() % 4)});
            std::stable_sort(day.begin(), day.end(),
                             [](const SignalRecord& a, const SignalRecord& b) { return a.timestamp < b.timestamp; });
            s.records.insert(s.records.end(), day.begin(), day.end());
        }
        out.push_back(std::move(s));
    }
    return out;
}

/**
 * Synthetic patients built from whole days of the seed streams, drawn with
 * replacement and laid end to end from the first seed day; intra-day order
 * and timing are kept. Each stream is cut to exactly `target_events`.
 */
inline std::vector<PatientStream> bootstrap(const std::vector<PatientStream>& seeds, std::size_t target_events,
                                            std::size_t patient_count, std::uint64_t rng_seed)
{
    struct Segment {
        EpochSeconds day;
        std::vector<SignalRecord> records;
    };
    std::vector<Segment> segments;
    std::size_t longest = 0;
    EpochSeconds origin_day = 0;
    bool any = false;
    for (const auto& s : seeds) {
        longest = std::max(longest, s.records.size());
        std::map<EpochSeconds, std::vector<SignalRecord>> by_day;
        for (const auto& r : s.records)
            by_day[detail::day_of(r.timestamp)].push_back(r);
        for (auto& [day, recs] : by_day) {
            origin_day = any ? std::min(origin_day, day) : day;
            any = true;
            segments.push_back({day, std::move(recs)});
        }
    }
    if (segments.empty())
        throw EmptySeed("no seed records to bootstrap from");
    if (target_events < longest)
        throw ConfigError("target of " + std::to_string(target_events) + " events is below the longest seed (" +
                          std::to_string(longest) + ")");

    std::mt19937_64 rng(rng_seed);
    std::vector<PatientStream> out;
    for (std::size_t p = 0; p < patient_count; ++p) {
        PatientStream s{"patient" + std::to_string(p + 1), {}};
        s.records.reserve(target_events);
        for (EpochSeconds k = 0; s.records.size() < target_events; ++k) {
            const Segment& seg = segments[rng() % segments.size()];
            const EpochSeconds shift = (origin_day + k - seg.day) * kDay;
            for (const auto& r : seg.records) {
                if (s.records.size() == target_events)
                    break;
                s.records.push_back({r.timestamp + shift, r.signal, r.value});
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace ceckd::ingest

#endif // CECKD_INGEST_BOOTSTRAP_HPP
