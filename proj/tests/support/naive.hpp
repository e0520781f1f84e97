#pragma once

// Slow reference implementations used to cross-check the library. They share
// only the element encoding with it.

#include "gseq/group.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

namespace gseq::naive {

/// (x, a) acting on Z_p as t -> phi(a) t + x, with H kept as a component vector.
struct Affine
{
    std::int64_t shift = 0;
    int sign = 1;
    std::vector<int> a;

    auto operator<=>(const Affine&) const = default;
};

class Model
{
public:
    explicit Model(const GroupSpec& g) : p_(g.p()), orders_(g.h_orders()), signs_(g.phi_signs()) {}

    std::int64_t p() const { return p_; }

    int phi(const std::vector<int>& a) const
    {
        int s = 1;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (signs_[i] < 0 && a[i] % 2 != 0)
                s = -s;
        return s;
    }

    Affine from(const GroupSpec& g, const Elem& e) const
    {
        Affine f;
        f.a = g.h_components(e.h);
        f.shift = ((e.x % p_) + p_) % p_;
        f.sign = phi(f.a);
        return f;
    }

    Elem to(const GroupSpec& g, const Affine& f) const { return g.elem(f.shift, f.a); }

    /// Composition f o k: t -> s_f (s_k t + x_k) + x_f.
    Affine mul(const Affine& f, const Affine& k) const
    {
        Affine r;
        r.sign = f.sign * k.sign;
        r.shift = (((f.sign * k.shift + f.shift) % p_) + p_) % p_;
        r.a.resize(orders_.size());
        for (std::size_t i = 0; i < orders_.size(); ++i)
            r.a[i] = (f.a[i] + k.a[i]) % orders_[i];
        return r;
    }

    Affine inv(const Affine& f) const
    {
        // t -> s (t - x)
        Affine r;
        r.sign = f.sign;
        r.shift = (((-f.sign * f.shift) % p_) + p_) % p_;
        r.a.resize(orders_.size());
        for (std::size_t i = 0; i < orders_.size(); ++i)
            r.a[i] = (orders_[i] - f.a[i]) % orders_[i];
        return r;
    }

    Affine identity() const
    {
        Affine r;
        r.a.assign(orders_.size(), 0);
        return r;
    }

    bool is_identity(const Affine& f) const
    {
        return f.shift == 0 && std::all_of(f.a.begin(), f.a.end(), [](int c) { return c == 0; });
    }

private:
    std::int64_t p_;
    std::vector<int> orders_;
    std::vector<int> signs_;
};

inline Elem mul(const GroupSpec& g, const Elem& x, const Elem& y)
{
    const Model m(g);
    return m.to(g, m.mul(m.from(g, x), m.from(g, y)));
}

inline Elem inv(const GroupSpec& g, const Elem& x)
{
    const Model m(g);
    return m.to(g, m.inv(m.from(g, x)));
}

/// Every nonempty subset, every order, every sign pattern: r! 3^r words in total.
inline bool is_dissociated(const GroupSpec& g, const std::vector<Elem>& d)
{
    const Model m(g);
    const std::size_t r = d.size();
    std::vector<Affine> pos, neg;
    for (const Elem& e : d) {
        pos.push_back(m.from(g, e));
        neg.push_back(m.inv(pos.back()));
    }
    for (std::uint32_t mask = 1; mask < (1u << r); ++mask) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < r; ++i)
            if (mask >> i & 1u)
                idx.push_back(i);
        do {
            for (std::uint32_t signs = 0; signs < (1u << idx.size()); ++signs) {
                Affine acc = m.identity();
                for (std::size_t k = 0; k < idx.size(); ++k)
                    acc = m.mul(acc, (signs >> k & 1u) ? neg[idx[k]] : pos[idx[k]]);
                if (m.is_identity(acc))
                    return false;
            }
        } while (std::next_permutation(idx.begin(), idx.end()));
    }
    return true;
}

/// Largest dissociated subset size, by trying every subset.
inline std::size_t dimension(const GroupSpec& g, const std::vector<Elem>& b)
{
    std::size_t best = 0;
    for (std::uint32_t mask = 1; mask < (1u << b.size()); ++mask) {
        const auto k = static_cast<std::size_t>(std::popcount(mask));
        if (k <= best)
            continue;
        std::vector<Elem> s;
        for (std::size_t i = 0; i < b.size(); ++i)
            if (mask >> i & 1u)
                s.push_back(b[i]);
        if (is_dissociated(g, s))
            best = k;
    }
    return best;
}

/// O(m^2) sequencing predicate on the affine model.
inline bool is_sequencing(const GroupSpec& g, const std::vector<Elem>& ord, bool require_nonidentity = true)
{
    const Model m(g);
    std::vector<Affine> partial;
    Affine acc = m.identity();
    for (const Elem& e : ord) {
        acc = m.mul(acc, m.from(g, e));
        partial.push_back(acc);
    }
    for (std::size_t i = 0; i < partial.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j)
            if (partial[i] == partial[j])
                return false;
        if (require_nonidentity && i + 1 < partial.size() && m.is_identity(partial[i]))
            return false;
    }
    return true;
}

/// Some ordering of `a` is a sequencing; plain permutation enumeration.
inline bool has_sequencing(const GroupSpec& g, std::vector<Elem> a)
{
    std::sort(a.begin(), a.end());
    do {
        if (is_sequencing(g, a))
            return true;
    } while (std::next_permutation(a.begin(), a.end()));
    return false;
}

/// Number of orderings of `a` that are valid (distinct partial products).
inline std::size_t count_valid(const GroupSpec& g, std::vector<Elem> a)
{
    std::size_t n = 0;
    std::sort(a.begin(), a.end());
    do
        n += is_sequencing(g, a, false) ? 1 : 0;
    while (std::next_permutation(a.begin(), a.end()));
    return n;
}

} // namespace gseq::naive
