#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

namespace gseq::detail {

/// Depth-first search for the first sequencing of `elems`, trying candidates in
/// the order given. A partial product may never repeat, and may equal the
/// identity only at the last position.
///
/// `mul(a, b)` multiplies, `key(a)` maps an element to a unique integer and
/// `is_identity(a)` tests for the identity. Returns the chosen indices.
template <class T, class Mul, class Key, class IsId>
std::optional<std::vector<std::size_t>> first_sequencing(std::span<const T> elems, const T& identity,
                                                         Mul&& mul, Key&& key, IsId&& is_identity)
{
    const std::size_t n = elems.size();
    std::vector<std::size_t> path;
    if (n == 0)
        return path;

    std::vector<bool> used(n, false);
    std::vector<T> partial;
    std::unordered_set<std::uint64_t> seen;
    // next candidate index to try at each depth
    std::vector<std::size_t> cursor(n, 0);
    path.reserve(n);
    partial.reserve(n);

    std::size_t depth = 0;
    while (true) {
        bool advanced = false;
        const T& cur = depth == 0 ? identity : partial.back();
        for (std::size_t i = cursor[depth]; i < n; ++i) {
            if (used[i])
                continue;
            T next = mul(cur, elems[i]);
            const std::uint64_t k = key(next);
            if (seen.contains(k))
                continue;
            if (depth + 1 < n && is_identity(next))
                continue;
            cursor[depth] = i + 1;
            used[i] = true;
            path.push_back(i);
            partial.push_back(next);
            seen.insert(k);
            advanced = true;
            break;
        }
        if (advanced) {
            ++depth;
            if (depth == n)
                return path;
            cursor[depth] = 0;
            continue;
        }
        // exhausted this depth: backtrack
        if (depth == 0)
            return std::nullopt;
        --depth;
        used[path.back()] = false;
        seen.erase(key(partial.back()));
        path.pop_back();
        partial.pop_back();
    }
}

} // namespace gseq::detail
