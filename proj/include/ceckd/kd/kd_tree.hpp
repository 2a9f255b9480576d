#ifndef CECKD_KD_KD_TREE_HPP
#define CECKD_KD_KD_TREE_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ceckd/error.hpp"
#include "ceckd/kd/coord.hpp"

namespace ceckd::kd {

/// Per-call instrumentation of a range query.
struct QueryStats {
    std::size_t visited = 0;
    std::size_t reported = 0;
};

/**
 * Dynamic four-dimensional kd-tree storing one payload per point.
 *
 * The splitting dimension cycles with depth. Points are ordered inside a
 * splitting dimension by their super key (the coordinates read starting at
 * that dimension, then an insertion sequence number), so duplicate
 * coordinates and duplicate keys never unbalance a median split. Every node
 * keeps the tight bounding box of its subtree; range queries skip disjoint
 * subtrees and report fully covered subtrees without re-checking points.
 *
 * Balance is maintained scapegoat-style: after an insertion or deletion the
 * highest node on the touched path whose larger child holds more than
 * alpha * size points is rebuilt around medians.
 *
 * Nodes live in one arena addressed by 32-bit indices; payloads sit in a
 * parallel array so traversal touches only keys and boxes.
 *
 * Single writer. Const member functions may run concurrently when no write
 * is in progress.
 */
template <typename P>
class KdTree {
    using Index = std::uint32_t;
    static constexpr Index kNil = 0xffffffffu;

    struct Node {
        Kd4Key lo;
        Kd4Key hi;
        Kd4Key key;
        std::uint64_t seq = 0;
        Index left = kNil;
        Index right = kNil;
        std::uint32_t size = 1;
        std::uint8_t dim = 0;
    };

public:
    using payload_type = P;

    /// Bit i of `sentinel_free_dims` forbids NEG_INF/POS_INF in coordinate i.
    explicit KdTree(unsigned sentinel_free_dims = 0b0111u, double alpha = 0.7)
        : sentinel_free_dims_(sentinel_free_dims), alpha_(alpha)
    {
    }

    KdTree(KdTree&&) noexcept = default;
    KdTree& operator=(KdTree&&) noexcept = default;
    KdTree(const KdTree&) = delete;
    KdTree& operator=(const KdTree&) = delete;

    std::size_t size() const noexcept { return count_; }
    bool empty() const noexcept { return count_ == 0; }
    std::size_t rebuild_count() const noexcept { return rebuilds_; }
    double alpha() const noexcept { return alpha_; }

    /// Footprint of one point excluding heap memory owned by its payload.
    static constexpr std::size_t node_bytes() noexcept { return sizeof(Node) + sizeof(P); }

    void clear()
    {
        nodes_.clear();
        payloads_.clear();
        free_.clear();
        root_ = kNil;
        count_ = 0;
    }

    void insert(const Kd4Key& key, P payload)
    {
        check_sentinels(key);
        const Index fresh = allocate(key, std::move(payload));
        std::vector<Index*> path;
        Index* slot = &root_;
        std::size_t depth = 0;
        while (*slot != kNil) {
            Node& n = nodes_[*slot];
            path.push_back(slot);
            ++n.size;
            extend(n.lo, n.hi, key);
            slot = less_at(nodes_[fresh], n, n.dim) ? &n.left : &n.right;
            ++depth;
        }
        nodes_[fresh].dim = static_cast<std::uint8_t>(depth % 4);
        *slot = fresh;
        ++count_;
        rebalance(path);
    }

    /// Removes every point stored under exactly `key` whose payload satisfies `pred`.
    template <typename Pred>
    std::size_t erase_if(const Kd4Key& key, Pred&& pred)
    {
        std::vector<std::uint64_t> victims;
        if (root_ != kNil) {
            const RangeBox box = RangeBox::point(key);
            std::size_t visited = 0;
            visit(root_, box, visited, [&](Index i) {
                if (pred(payloads_[i]))
                    victims.push_back(nodes_[i].seq);
            });
        }
        for (auto seq : victims)
            erase_exact(key, seq);
        return victims.size();
    }

    std::size_t erase(const Kd4Key& key)
    {
        return erase_if(key, [](const P&) { return true; });
    }

    /// Calls fn(key, payload) for every point inside `box`; returns the visit statistics.
    template <typename Fn>
    QueryStats range_query(const RangeBox& box, Fn&& fn) const
    {
        require_well_formed(box);
        QueryStats stats;
        if (root_ != kNil && intersects(nodes_[root_], box))
            visit(root_, box, stats.visited, [&](Index i) {
                ++stats.reported;
                fn(nodes_[i].key, payloads_[i]);
            });
        return stats;
    }

    std::vector<std::pair<Kd4Key, P>> range_query(const RangeBox& box, QueryStats* stats = nullptr) const
    {
        std::vector<std::pair<Kd4Key, P>> out;
        auto s = range_query(box, [&](const Kd4Key& k, const P& p) { out.emplace_back(k, p); });
        if (stats)
            *stats = s;
        return out;
    }

    /// In-order traversal (left, node, right).
    template <typename Fn>
    void for_each(Fn&& fn) const
    {
        walk(root_, fn);
    }

    std::size_t height() const { return height(root_); }

    /// Rebuilds the whole tree around medians.
    void rebuild()
    {
        if (root_ != kNil)
            rebuild_at(root_, 0);
    }

    /// Replaces the content with a median-balanced tree over `points`.
    void bulk_load(std::vector<std::pair<Kd4Key, P>> points)
    {
        clear();
        for (const auto& [k, p] : points)
            check_sentinels(k);
        std::vector<Index> ids;
        ids.reserve(points.size());
        for (auto& [k, p] : points)
            ids.push_back(allocate(k, std::move(p)));
        count_ = ids.size();
        root_ = build(ids, 0, ids.size(), 0);
    }

    /// Node memory plus whatever `payload_heap_bytes(payload)` reports for each payload.
    template <typename HeapBytes>
    std::size_t structure_bytes(HeapBytes&& payload_heap_bytes) const
    {
        std::size_t total = sizeof(*this) + count_ * node_bytes();
        for_each([&](const Kd4Key&, const P& p) { total += payload_heap_bytes(p); });
        return total;
    }

    /// Full structural audit: split dimensions, super-key ordering, subtree
    /// sizes, bounding boxes and alpha-balance. Returns an empty string when
    /// everything holds, otherwise a description of the first violation.
    std::string audit() const
    {
        std::string err;
        std::size_t reachable = 0;
        std::vector<std::pair<Index, bool>> ancestors;
        audit(root_, 0, ancestors, reachable, err);
        if (err.empty() && reachable != count_)
            err = "live count " + std::to_string(count_) + " != reachable " + std::to_string(reachable);
        return err;
    }

private:
    Index allocate(const Kd4Key& key, P payload)
    {
        Node n;
        n.key = n.lo = n.hi = key;
        n.seq = next_seq_++;
        if (!free_.empty()) {
            const Index i = free_.back();
            free_.pop_back();
            nodes_[i] = n;
            payloads_[i] = std::move(payload);
            return i;
        }
        if (nodes_.size() >= kNil)
            throw MalformedBox("kd-tree capacity exhausted");
        nodes_.push_back(n);
        payloads_.push_back(std::move(payload));
        return static_cast<Index>(nodes_.size() - 1);
    }

    void release(Index i)
    {
        payloads_[i] = P{};
        free_.push_back(i);
    }

    bool less_at(const Node& a, const Node& b, unsigned d) const noexcept
    {
        return less_at(a.key, a.seq, b.key, b.seq, d);
    }

    static bool less_at(const Kd4Key& a, std::uint64_t sa, const Kd4Key& b, std::uint64_t sb, unsigned d) noexcept
    {
        for (unsigned i = 0; i < 4; ++i) {
            const unsigned k = (d + i) & 3u;
            if (a[k] != b[k])
                return a[k] < b[k];
        }
        return sa < sb;
    }

    static void extend(Kd4Key& lo, Kd4Key& hi, const Kd4Key& k) noexcept
    {
        for (std::size_t d = 0; d < 4; ++d) {
            lo[d] = std::min(lo[d], k[d]);
            hi[d] = std::max(hi[d], k[d]);
        }
    }

    void refresh(Index i) noexcept
    {
        Node& n = nodes_[i];
        n.lo = n.key;
        n.hi = n.key;
        n.size = 1;
        for (Index c : {n.left, n.right}) {
            if (c == kNil)
                continue;
            extend(n.lo, n.hi, nodes_[c].lo);
            extend(n.lo, n.hi, nodes_[c].hi);
            n.size += nodes_[c].size;
        }
    }

    std::size_t size_of(Index i) const noexcept { return i == kNil ? 0 : nodes_[i].size; }

    static bool intersects(const Node& n, const RangeBox& box) noexcept
    {
        for (std::size_t d = 0; d < 4; ++d)
            if (n.hi[d] < box.r[d].lo || n.lo[d] > box.r[d].hi)
                return false;
        return true;
    }

    static bool covered(const Node& n, const RangeBox& box) noexcept
    {
        for (std::size_t d = 0; d < 4; ++d)
            if (n.lo[d] < box.r[d].lo || n.hi[d] > box.r[d].hi)
                return false;
        return true;
    }

    template <typename Fn>
    void report_all(Index i, std::size_t& visited, Fn& fn) const
    {
        if (i == kNil)
            return;
        ++visited;
        fn(i);
        report_all(nodes_[i].left, visited, fn);
        report_all(nodes_[i].right, visited, fn);
    }

    template <typename Fn>
    void visit(Index i, const RangeBox& box, std::size_t& visited, Fn&& fn) const
    {
        const Node& n = nodes_[i];
        if (covered(n, box)) {
            report_all(i, visited, fn);
            return;
        }
        ++visited;
        if (box.contains(n.key))
            fn(i);
        if (n.left != kNil && intersects(nodes_[n.left], box))
            visit(n.left, box, visited, fn);
        if (n.right != kNil && intersects(nodes_[n.right], box))
            visit(n.right, box, visited, fn);
    }

    template <typename Fn>
    void walk(Index i, Fn& fn) const
    {
        if (i == kNil)
            return;
        walk(nodes_[i].left, fn);
        fn(nodes_[i].key, payloads_[i]);
        walk(nodes_[i].right, fn);
    }

    std::size_t height(Index i) const
    {
        return i == kNil ? 0 : 1 + std::max(height(nodes_[i].left), height(nodes_[i].right));
    }

    void check_sentinels(const Kd4Key& key) const
    {
        for (unsigned d = 0; d < 4; ++d)
            if ((sentinel_free_dims_ >> d & 1u) && is_sentinel(key[d]))
                throw SentinelMisuse("coordinate " + std::to_string(d) + " holds an infinity sentinel");
    }

    bool unbalanced(const Node& n) const noexcept
    {
        const auto heavy = std::max(size_of(n.left), size_of(n.right));
        return static_cast<double>(heavy) > alpha_ * static_cast<double>(n.size);
    }

    void rebalance(const std::vector<Index*>& path)
    {
        for (Index* slot : path) {
            if (*slot != kNil && unbalanced(nodes_[*slot])) {
                rebuild_at(*slot, nodes_[*slot].dim);
                return;
            }
        }
    }

    void rebuild_at(Index& slot, unsigned dim)
    {
        std::vector<Index> ids;
        ids.reserve(nodes_[slot].size);
        collect(slot, ids);
        slot = build(ids, 0, ids.size(), dim);
        ++rebuilds_;
    }

    void collect(Index i, std::vector<Index>& out) const
    {
        if (i == kNil)
            return;
        out.push_back(i);
        collect(nodes_[i].left, out);
        collect(nodes_[i].right, out);
    }

    Index build(std::vector<Index>& v, std::size_t b, std::size_t e, unsigned dim)
    {
        if (b == e)
            return kNil;
        const std::size_t m = b + (e - b) / 2;
        std::nth_element(v.begin() + static_cast<std::ptrdiff_t>(b), v.begin() + static_cast<std::ptrdiff_t>(m),
                         v.begin() + static_cast<std::ptrdiff_t>(e),
                         [&](Index a, Index c) { return less_at(nodes_[a], nodes_[c], dim); });
        const Index n = v[m];
        nodes_[n].dim = static_cast<std::uint8_t>(dim);
        const unsigned next = (dim + 1) & 3u;
        nodes_[n].left = build(v, b, m, next);
        nodes_[n].right = build(v, m + 1, e, next);
        refresh(n);
        return n;
    }

    Index find_min(Index i, unsigned d) const
    {
        const Node& n = nodes_[i];
        if (n.dim == d)
            return n.left != kNil ? find_min(n.left, d) : i;
        Index best = i;
        for (Index c : {n.left, n.right}) {
            if (c == kNil)
                continue;
            const Index m = find_min(c, d);
            if (less_at(nodes_[m], nodes_[best], d))
                best = m;
        }
        return best;
    }

    // Appends to `path` the slots from `from` down to the node holding
    // (key, seq); returns that node's slot or nullptr.
    Index* descend(Index* from, const Kd4Key& key, std::uint64_t seq, std::vector<Index*>& path)
    {
        Index* slot = from;
        while (*slot != kNil) {
            Node& n = nodes_[*slot];
            if (n.seq == seq && n.key == key)
                return slot;
            path.push_back(slot);
            slot = less_at(key, seq, n.key, n.seq, n.dim) ? &n.left : &n.right;
        }
        return nullptr;
    }

    void erase_exact(const Kd4Key& key, std::uint64_t seq)
    {
        std::vector<Index*> path;
        Index* target = descend(&root_, key, seq, path);
        if (!target)
            return;
        remove_at(target, path);
        for (auto it = path.rbegin(); it != path.rend(); ++it)
            refresh(**it);
        --count_;
        rebalance(path);
    }

    // Structural kd deletion: a node with children takes over the minimum of
    // one child subtree in its own splitting dimension.
    void remove_at(Index* target, std::vector<Index*>& path)
    {
        for (;;) {
            Node& n = nodes_[*target];
            if (n.left == kNil && n.right == kNil) {
                release(*target);
                *target = kNil;
                return;
            }
            const bool from_right = n.right != kNil;
            const Index m = find_min(from_right ? n.right : n.left, n.dim);
            const Kd4Key mkey = nodes_[m].key;
            const std::uint64_t mseq = nodes_[m].seq;
            n.key = mkey;
            n.seq = mseq;
            payloads_[*target] = std::move(payloads_[m]);
            if (!from_right) {
                n.right = n.left;
                n.left = kNil;
            }
            path.push_back(target);
            target = descend(&n.right, mkey, mseq, path);
        }
    }

    void audit(Index i, std::size_t depth, std::vector<std::pair<Index, bool>>& ancestors, std::size_t& reachable,
               std::string& err) const
    {
        if (i == kNil || !err.empty())
            return;
        const Node& n = nodes_[i];
        ++reachable;
        if (n.dim != depth % 4) {
            err = "split dimension does not match depth";
            return;
        }
        for (auto [ai, went_left] : ancestors) {
            const Node& a = nodes_[ai];
            const bool below = less_at(n, a, a.dim);
            if (below != went_left) {
                err = "super-key ordering violated";
                return;
            }
            const Coord mine = n.key[a.dim];
            const Coord theirs = a.key[a.dim];
            if (went_left ? mine > theirs : mine < theirs) {
                err = "coordinate ordering violated";
                return;
            }
        }
        Kd4Key lo = n.key, hi = n.key;
        std::size_t sz = 1;
        for (Index c : {n.left, n.right}) {
            if (c == kNil)
                continue;
            extend(lo, hi, nodes_[c].lo);
            extend(lo, hi, nodes_[c].hi);
            sz += nodes_[c].size;
        }
        if (lo != n.lo || hi != n.hi) {
            err = "stale bounding box";
            return;
        }
        if (sz != n.size) {
            err = "stale subtree size";
            return;
        }
        if (unbalanced(n)) {
            err = "alpha-balance violated at subtree of size " + std::to_string(n.size);
            return;
        }
        ancestors.emplace_back(i, true);
        audit(n.left, depth + 1, ancestors, reachable, err);
        ancestors.back().second = false;
        audit(n.right, depth + 1, ancestors, reachable, err);
        ancestors.pop_back();
    }

    std::vector<Node> nodes_;
    std::vector<P> payloads_;
    std::vector<Index> free_;
    Index root_ = kNil;
    std::size_t count_ = 0;
    std::uint64_t next_seq_ = 0;
    std::size_t rebuilds_ = 0;
    unsigned sentinel_free_dims_;
    double alpha_;
};

} // namespace ceckd::kd

#endif // CECKD_KD_KD_TREE_HPP
