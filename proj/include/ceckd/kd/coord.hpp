#ifndef CECKD_KD_COORD_HPP
#define CECKD_KD_COORD_HPP

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

#include "ceckd/error.hpp"

namespace ceckd::kd {

using Coord = std::int64_t;

inline constexpr Coord NEG_INF = std::numeric_limits<Coord>::min();
inline constexpr Coord POS_INF = std::numeric_limits<Coord>::max();

inline constexpr bool is_sentinel(Coord c) noexcept { return c == NEG_INF || c == POS_INF; }

/// 64-bit FNV-1a over the bytes of a symbol's canonical text. The two
/// sentinel values are remapped to their nearest inner neighbours so a
/// hashed coordinate can never alias an unbounded range end.
inline constexpr Coord symbol_hash(std::string_view text) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char ch : text) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    auto c = static_cast<Coord>(h);
    if (c == NEG_INF)
        return NEG_INF + 1;
    if (c == POS_INF)
        return POS_INF - 1;
    return c;
}

using Kd4Key = std::array<Coord, 4>;

struct Range {
    Coord lo = NEG_INF;
    Coord hi = POS_INF;

    static constexpr Range point(Coord v) noexcept { return {v, v}; }
    static constexpr Range all() noexcept { return {NEG_INF, POS_INF}; }

    constexpr bool contains(Coord v) const noexcept { return lo <= v && v <= hi; }
    friend constexpr bool operator==(const Range&, const Range&) = default;
};

/// Axis-aligned closed box; one closed range per dimension.
struct RangeBox {
    std::array<Range, 4> r{};

    static constexpr RangeBox all() noexcept { return {}; }
    static constexpr RangeBox point(const Kd4Key& k) noexcept
    {
        return {{Range::point(k[0]), Range::point(k[1]), Range::point(k[2]), Range::point(k[3])}};
    }

    constexpr bool well_formed() const noexcept
    {
        for (const auto& d : r)
            if (d.lo > d.hi)
                return false;
        return true;
    }

    constexpr bool contains(const Kd4Key& k) const noexcept
    {
        return r[0].contains(k[0]) && r[1].contains(k[1]) && r[2].contains(k[2]) && r[3].contains(k[3]);
    }
};

inline void require_well_formed(const RangeBox& box)
{
    for (std::size_t d = 0; d < 4; ++d)
        if (box.r[d].lo > box.r[d].hi)
            throw MalformedBox("dimension " + std::to_string(d) + " has lo > hi");
}

} // namespace ceckd::kd

#endif // CECKD_KD_COORD_HPP
