#pragma once

#include "gseq/group.hpp"

#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace gseq {

/// p_i = a_1 * ... * a_i for i = 1..m.
inline std::vector<Elem> partial_products(const GroupSpec& g, std::span<const Elem> ord)
{
    std::vector<Elem> out;
    out.reserve(ord.size());
    Elem acc = g.identity();
    for (const Elem& e : ord) {
        acc = g.mul(acc, e);
        out.push_back(acc);
    }
    return out;
}

/// What goes wrong with an ordering, if anything. Positions are 0-based.
struct SequencingDefect
{
    enum class Kind { Duplicate, Collision, EarlyIdentity, InvalidElement };
    Kind kind;
    std::size_t first = 0;
    std::size_t second = 0;
};

inline std::optional<SequencingDefect> find_defect(const GroupSpec& g, std::span<const Elem> ord, bool sequencing)
{
    ElemSet elems;
    for (std::size_t i = 0; i < ord.size(); ++i) {
        if (!g.valid(ord[i]))
            return SequencingDefect{SequencingDefect::Kind::InvalidElement, i, i};
        if (!elems.insert(ord[i]).second)
            return SequencingDefect{SequencingDefect::Kind::Duplicate, i, i};
    }
    std::unordered_map<Elem, std::size_t, ElemHash> seen;
    Elem acc = g.identity();
    for (std::size_t i = 0; i < ord.size(); ++i) {
        acc = g.mul(acc, ord[i]);
        if (sequencing && i + 1 < ord.size() && g.is_identity(acc))
            return SequencingDefect{SequencingDefect::Kind::EarlyIdentity, i, i};
        if (auto [it, fresh] = seen.emplace(acc, i); !fresh)
            return SequencingDefect{SequencingDefect::Kind::Collision, it->second, i};
    }
    return std::nullopt;
}

/// Partial products pairwise distinct.
inline bool is_valid(const GroupSpec& g, std::span<const Elem> ord)
{
    return !find_defect(g, ord, false);
}

/// Valid, and no partial product except possibly the last one is the identity.
inline bool is_sequencing(const GroupSpec& g, std::span<const Elem> ord)
{
    return !find_defect(g, ord, true);
}

/// {prefix * p_i : i in [0, m]}, where p_0 is the empty product.
inline ElemSet partial_product_set(const GroupSpec& g, const Elem& prefix, std::span<const Elem> ord)
{
    ElemSet out;
    Elem acc = prefix;
    out.insert(acc);
    for (const Elem& e : ord) {
        acc = g.mul(acc, e);
        out.insert(acc);
    }
    return out;
}

/// Same set as partial_product_set, in order and with repetitions kept.
inline std::vector<Elem> prefixed_partials(const GroupSpec& g, const Elem& prefix, std::span<const Elem> ord)
{
    std::vector<Elem> out;
    out.reserve(ord.size() + 1);
    Elem acc = prefix;
    out.push_back(acc);
    for (const Elem& e : ord) {
        acc = g.mul(acc, e);
        out.push_back(acc);
    }
    return out;
}

inline Ordering reversed(std::span<const Elem> ord)
{
    return Ordering(ord.rbegin(), ord.rend());
}

template <class... Parts>
Ordering concat(const Parts&... parts)
{
    Ordering out;
    (out.insert(out.end(), parts.begin(), parts.end()), ...);
    return out;
}

} // namespace gseq
