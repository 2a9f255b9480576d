#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ceckd/kd/kd_tree.hpp"
#include "ceckd/kd/registry.hpp"

using namespace ceckd;
using namespace ceckd::kd;

namespace {

using Tree = KdTree<int>;
using Entry = std::pair<Kd4Key, int>;

// Linear-scan reference: a flat multiset of live points.
struct FlatIndex {
    std::vector<Entry> live;

    std::vector<Entry> query(const RangeBox& box) const
    {
        std::vector<Entry> out;
        for (const auto& e : live)
            if (box.contains(e.first))
                out.push_back(e);
        std::sort(out.begin(), out.end());
        return out;
    }

    std::size_t erase(const Kd4Key& k)
    {
        auto it = std::remove_if(live.begin(), live.end(), [&](const Entry& e) { return e.first == k; });
        auto n = static_cast<std::size_t>(live.end() - it);
        live.erase(it, live.end());
        return n;
    }
};

std::vector<Entry> sorted(std::vector<Entry> v)
{
    std::sort(v.begin(), v.end());
    return v;
}

Kd4Key random_key(std::mt19937_64& rng, Coord span)
{
    std::uniform_int_distribution<Coord> d(0, span);
    return {d(rng), d(rng), d(rng), d(rng)};
}

RangeBox random_box(std::mt19937_64& rng, Coord span)
{
    std::uniform_int_distribution<Coord> d(0, span);
    std::uniform_int_distribution<int> shape(0, 3);
    RangeBox box;
    for (auto& r : box.r) {
        switch (shape(rng)) {
        case 0:
            r = Range::all();
            break;
        case 1: {
            Coord v = d(rng);
            r = Range::point(v);
            break;
        }
        default: {
            Coord a = d(rng), b = d(rng);
            r = {std::min(a, b), std::max(a, b)};
        }
        }
    }
    return box;
}

std::size_t log2_ceil(std::size_t n)
{
    std::size_t h = 0;
    while ((std::size_t{1} << h) < n)
        ++h;
    return h;
}

} // namespace

TEST(KdRegistry, CreateLookupDestroy)
{
    KdRegistry<int> reg;
    auto& t = reg.create("happens_at");
    EXPECT_EQ(&reg.lookup("happens_at"), &t);
    EXPECT_THROW(reg.create("happens_at"), DuplicateLabel);
    EXPECT_THROW(reg.destroy("x"), UnknownLabel);
    EXPECT_THROW(reg.lookup("x"), UnknownLabel);
    reg.destroy("happens_at");
    EXPECT_FALSE(reg.contains("happens_at"));
}

TEST(KdTree, PointMembership)
{
    Tree t;
    Kd4Key k{1, 2, 3, 4};
    t.insert(k, 42);
    auto hits = t.range_query(RangeBox::point(k));
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].second, 42);
}

TEST(KdTree, EmptyTreeQueriesAndDeletes)
{
    Tree t;
    EXPECT_TRUE(t.range_query(RangeBox::all()).empty());
    EXPECT_EQ(t.erase({1, 2, 3, 4}), 0u);
    EXPECT_EQ(t.height(), 0u);
}

TEST(KdTree, InsertThenDeleteIsInverse)
{
    Tree t;
    Kd4Key k{5, 6, 7, 8};
    t.insert(k, 1);
    EXPECT_EQ(t.erase(k), 1u);
    EXPECT_TRUE(t.range_query(RangeBox::point(k)).empty());
    EXPECT_EQ(t.size(), 0u);
}

TEST(KdTree, CountsThousandRandomInsertions)
{
    std::mt19937_64 rng(7);
    Tree t;
    for (int i = 0; i < 1000; ++i)
        t.insert(random_key(rng, 1'000'000), i);
    EXPECT_EQ(t.size(), 1000u);
    EXPECT_EQ(t.range_query(RangeBox::all()).size(), 1000u);
    EXPECT_EQ(t.audit(), "");
}

TEST(KdTree, DuplicateKeysDisambiguatedByPayload)
{
    Tree t;
    Kd4Key k{1, 1, 1, 1};
    for (int i = 0; i < 10; ++i)
        t.insert(k, i);
    EXPECT_EQ(t.range_query(RangeBox::point(k)).size(), 10u);
    EXPECT_EQ(t.erase_if(k, [](int p) { return p % 2 == 0; }), 5u);
    auto rest = t.range_query(RangeBox::point(k));
    ASSERT_EQ(rest.size(), 5u);
    for (auto& [key, p] : rest)
        EXPECT_EQ(p % 2, 1);
    EXPECT_EQ(t.audit(), "");
}

TEST(KdTree, RejectsMalformedBoxAndSentinels)
{
    Tree t;
    RangeBox bad;
    bad.r[2] = {5, 4};
    EXPECT_THROW(t.range_query(bad), MalformedBox);
    EXPECT_THROW(t.insert({NEG_INF, 0, 0, 0}, 1), SentinelMisuse);
    EXPECT_THROW(t.insert({0, 0, POS_INF, 0}, 1), SentinelMisuse);
    EXPECT_NO_THROW(t.insert({0, 0, 0, POS_INF}, 1));

    KdTree<int> intervals(0b0011u);
    EXPECT_NO_THROW(intervals.insert({1, 2, NEG_INF, 9}, 1));
    EXPECT_THROW(intervals.insert({1, POS_INF, 0, 9}, 1), SentinelMisuse);
}

TEST(KdTree, DeleteHalfAndReinsertMatchesLinearScan)
{
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        std::mt19937_64 rng(trial);
        Tree t;
        FlatIndex ref;
        const Coord span = trial % 2 ? 30 : 1'000'000;
        std::vector<Entry> all;
        for (int i = 0; i < 400; ++i) {
            auto k = random_key(rng, span);
            all.emplace_back(k, i);
            t.insert(k, i);
            ref.live.emplace_back(k, i);
        }
        std::shuffle(all.begin(), all.end(), rng);
        all.resize(all.size() / 2);
        for (auto& [k, p] : all) {
            int id = p;
            t.erase_if(k, [id](int q) { return q == id; });
            ref.live.erase(std::find(ref.live.begin(), ref.live.end(), Entry{k, id}));
        }
        for (auto& [k, p] : all) {
            t.insert(k, p);
            ref.live.emplace_back(k, p);
        }
        ASSERT_EQ(t.audit(), "") << "trial " << trial;
        ASSERT_EQ(t.size(), ref.live.size());
        for (int q = 0; q < 20; ++q) {
            auto box = random_box(rng, span);
            ASSERT_EQ(sorted(t.range_query(box)), ref.query(box)) << "trial " << trial;
        }
    }
}

// Oracle equivalence over interleaved insert/delete/range workloads.
TEST(KdTree, RandomInterleavingsMatchLinearScan)
{
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(seed * 7919 + 1);
        const Coord span = seed % 3 == 0 ? 8 : (seed % 3 == 1 ? 200 : 1'000'000'000);
        Tree t;
        FlatIndex ref;
        std::uniform_int_distribution<int> op(0, 9);
        int next_id = 0;
        for (int i = 0; i < 2000; ++i) {
            int o = op(rng);
            if (o < 5 || ref.live.empty()) {
                auto k = random_key(rng, span);
                t.insert(k, next_id);
                ref.live.emplace_back(k, next_id++);
            } else if (o < 7) {
                std::uniform_int_distribution<std::size_t> pick(0, ref.live.size() - 1);
                auto k = ref.live[pick(rng)].first;
                ASSERT_EQ(t.erase(k), ref.erase(k));
            } else {
                auto box = random_box(rng, span);
                ASSERT_EQ(sorted(t.range_query(box)), ref.query(box)) << "seed " << seed << " op " << i;
            }
            ASSERT_EQ(t.size(), ref.live.size());
        }
        ASSERT_EQ(t.audit(), "") << "seed " << seed;
    }
}

TEST(KdTree, LargeRandomBoxesMatchLinearScan)
{
    std::mt19937_64 rng(2024);
    Tree t;
    FlatIndex ref;
    for (int i = 0; i < 10'000; ++i) {
        auto k = random_key(rng, 100'000);
        t.insert(k, i);
        ref.live.emplace_back(k, i);
    }
    EXPECT_EQ(sorted(t.range_query(RangeBox::all())), ref.query(RangeBox::all()));
    for (int q = 0; q < 500; ++q) {
        auto box = random_box(rng, 100'000);
        ASSERT_EQ(sorted(t.range_query(box)), ref.query(box));
    }
}

TEST(KdTree, BalanceAfterEveryOperation)
{
    std::mt19937_64 rng(99);
    Tree t;
    std::vector<Kd4Key> keys;
    for (int i = 0; i < 3000; ++i) {
        // monotone time coordinate, the worst case for an unbalanced kd-tree
        Kd4Key k{static_cast<Coord>(rng() % 6), static_cast<Coord>(rng() % 4), i, i + 1};
        t.insert(k, i);
        keys.push_back(k);
        if (i % 3 == 2)
            t.erase(keys[static_cast<std::size_t>(i) / 2]);
        if (i % 250 == 0) {
            ASSERT_EQ(t.audit(), "") << i;
        }
    }
    EXPECT_EQ(t.audit(), "");
    EXPECT_GT(t.rebuild_count(), 0u);
}

TEST(KdTree, HeightBoundAfterRebuild)
{
    for (std::size_t n : {1u, 2u, 3u, 7u, 8u, 100u, 1000u, 4097u}) {
        std::mt19937_64 rng(n);
        Tree t;
        for (std::size_t i = 0; i < n; ++i)
            t.insert({0, 0, static_cast<Coord>(rng() % 3), 0}, static_cast<int>(i));
        t.rebuild();
        EXPECT_LE(t.height(), log2_ceil(n) + 1) << n;
        EXPECT_EQ(t.audit(), "");

        std::vector<std::pair<Kd4Key, int>> pts;
        for (std::size_t i = 0; i < n; ++i)
            pts.push_back({random_key(rng, 50), static_cast<int>(i)});
        Tree b;
        b.bulk_load(pts);
        EXPECT_LE(b.height(), log2_ceil(n) + 1) << n;
        EXPECT_EQ(b.audit(), "");
    }
}

// visits <= 16 (sqrt(n) + k) on rebuilt trees of uniform random points.
TEST(KdTree, VisitBound)
{
    for (std::size_t n : {1000u, 4000u, 16000u}) {
        std::mt19937_64 rng(n * 31);
        std::vector<std::pair<Kd4Key, int>> pts;
        for (std::size_t i = 0; i < n; ++i)
            pts.push_back({random_key(rng, 1'000'000), static_cast<int>(i)});
        Tree t;
        for (auto& [k, p] : pts)
            t.insert(k, p);
        t.rebuild();
        double worst = 0;
        for (int q = 0; q < 500; ++q) {
            auto box = random_box(rng, 1'000'000);
            auto stats = t.range_query(box, [](const Kd4Key&, const int&) {});
            const double bound = 16.0 * (std::sqrt(static_cast<double>(n)) + static_cast<double>(stats.reported));
            worst = std::max(worst, static_cast<double>(stats.visited) / bound);
            ASSERT_LE(static_cast<double>(stats.visited), bound) << "n=" << n << " q=" << q;
        }
        // slab queries: one coordinate pinned, the rest unbound
        for (int d = 0; d < 4; ++d) {
            RangeBox box;
            box.r[static_cast<std::size_t>(d)] = Range::point(pts[7].first[static_cast<std::size_t>(d)]);
            auto stats = t.range_query(box, [](const Kd4Key&, const int&) {});
            const double bound = 16.0 * (std::sqrt(static_cast<double>(n)) + static_cast<double>(stats.reported));
            ASSERT_LE(static_cast<double>(stats.visited), bound) << "slab d=" << d << " n=" << n;
        }
        RecordProperty("worst_visit_ratio_" + std::to_string(n), std::to_string(worst));
    }
}

TEST(KdTree, DeterministicOrdering)
{
    auto run = [] {
        std::mt19937_64 rng(5);
        Tree t;
        for (int i = 0; i < 2000; ++i) {
            auto k = random_key(rng, 50);
            t.insert(k, i);
            if (i % 4 == 0)
                t.erase(k);
        }
        return t.range_query(RangeBox{{Range{0, 25}, Range::all(), Range{10, 40}, Range::all()}});
    };
    EXPECT_EQ(run(), run());
}

TEST(KdTree, StructureBytesCountsNodes)
{
    Tree t;
    for (int i = 0; i < 10; ++i)
        t.insert({i, i, i, i}, i);
    EXPECT_EQ(t.structure_bytes([](const int&) { return std::size_t{0}; }), sizeof(Tree) + 10 * Tree::node_bytes());
}
