#ifndef CECKD_KD_REGISTRY_HPP
#define CECKD_KD_REGISTRY_HPP

#include <map>
#include <memory>
#include <string>

#include "ceckd/error.hpp"
#include "ceckd/kd/kd_tree.hpp"

namespace ceckd::kd {

/// Label -> tree table. Each engine owns its own registry; nothing is global.
template <typename P>
class KdRegistry {
public:
    KdTree<P>& create(const std::string& label, unsigned sentinel_free_dims = 0b0111u, double alpha = 0.7)
    {
        auto [it, fresh] = trees_.try_emplace(label);
        if (!fresh)
            throw DuplicateLabel(label);
        it->second = std::make_unique<KdTree<P>>(sentinel_free_dims, alpha);
        return *it->second;
    }

    void destroy(const std::string& label)
    {
        if (trees_.erase(label) == 0)
            throw UnknownLabel(label);
    }

    KdTree<P>& lookup(const std::string& label) const
    {
        auto it = trees_.find(label);
        if (it == trees_.end())
            throw UnknownLabel(label);
        return *it->second;
    }

    bool contains(const std::string& label) const { return trees_.count(label) != 0; }
    std::size_t size() const noexcept { return trees_.size(); }

private:
    // unique_ptr keeps handles stable across later insertions
    std::map<std::string, std::unique_ptr<KdTree<P>>> trees_;
};

} // namespace ceckd::kd

#endif // CECKD_KD_REGISTRY_HPP
