#pragma once

#include "gseq/backtrack.hpp"
#include "gseq/errors.hpp"

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <unordered_set>
#include <vector>

namespace gseq {

/// Deterministic Miller-Rabin, exact for every 64-bit input.
inline bool is_prime(std::uint64_t n)
{
    if (n < 2)
        return false;
    for (std::uint64_t q : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % q == 0)
            return n == q;
    }
    auto mulmod = [n](std::uint64_t a, std::uint64_t b) {
        return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % n);
    };
    auto powmod = [&](std::uint64_t b, std::uint64_t e) {
        std::uint64_t r = 1;
        for (; e; e >>= 1, b = mulmod(b, b))
            if (e & 1)
                r = mulmod(r, b);
        return r;
    };
    std::uint64_t d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    for (std::uint64_t a : {2ull, 325ull, 9375ull, 28178ull, 450775ull, 9780504ull, 1795265022ull}) {
        a %= n;
        if (a == 0)
            continue;
        std::uint64_t x = powmod(a, d);
        if (x == 1 || x == n - 1)
            continue;
        bool composite = true;
        for (int r = 1; r < s; ++r) {
            x = mulmod(x, x);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite)
            return false;
    }
    return true;
}

inline std::int64_t mod(std::int64_t x, std::int64_t p)
{
    x %= p;
    return x < 0 ? x + p : x;
}

inline std::int64_t mod_mul(std::int64_t a, std::int64_t b, std::int64_t p)
{
    return static_cast<std::int64_t>(static_cast<__int128>(mod(a, p)) * mod(b, p) % p);
}

/// Inverse of a nonzero residue modulo a prime.
inline std::int64_t mod_inverse(std::int64_t a, std::int64_t p)
{
    std::int64_t r0 = p, r1 = mod(a, p), t0 = 0, t1 = 1;
    while (r1 != 0) {
        const std::int64_t q = r0 / r1;
        std::tie(r0, r1) = std::make_pair(r1, r0 - q * r1);
        std::tie(t0, t1) = std::make_pair(t1, t0 - q * t1);
    }
    if (r0 != 1)
        throw InvalidInput("residue has no inverse");
    return mod(t0, p);
}

enum class Sign : int { Plus = 1, Minus = -1 };

inline Sign operator*(Sign a, Sign b)
{
    return a == b ? Sign::Plus : Sign::Minus;
}

inline int to_int(Sign s)
{
    return static_cast<int>(s);
}

/// An element (x, a) of Z_p x| H. The H-component is stored as a mixed-radix
/// index, most significant factor first, so index order is lexicographic order
/// on the component vector.
struct Elem
{
    std::int64_t x = 0;
    std::uint32_t h = 0;

    friend bool operator==(const Elem&, const Elem&) = default;
    friend auto operator<=>(const Elem&, const Elem&) = default;
};

struct ElemHash
{
    std::size_t operator()(const Elem& e) const noexcept
    {
        std::uint64_t v = static_cast<std::uint64_t>(e.x) * 0x9E3779B97F4A7C15ull ^ (std::uint64_t{e.h} + 0x632BE59BD9B4E019ull);
        v ^= v >> 29;
        v *= 0xBF58476D1CE4E5B9ull;
        return static_cast<std::size_t>(v ^ (v >> 32));
    }
};

using ElemSet = std::unordered_set<Elem, ElemHash>;
using Ordering = std::vector<Elem>;

/// A finite abelian group Z_{n_1} x ... x Z_{n_k}, elements as mixed-radix indices.
class AbelianProduct
{
public:
    AbelianProduct() : orders_(), size_(1), add_{0}, neg_{0} {}

    explicit AbelianProduct(std::vector<int> orders) : orders_(std::move(orders)), size_(1)
    {
        for (int n : orders_) {
            if (n < 1)
                throw InvalidGroup("cyclic factor order must be positive");
            size_ *= static_cast<std::uint32_t>(n);
            if (size_ > (1u << 16))
                throw InvalidGroup("H too large");
        }
        add_.resize(std::size_t{size_} * size_);
        neg_.resize(size_);
        for (std::uint32_t a = 0; a < size_; ++a) {
            const auto ca = components(a);
            for (std::uint32_t b = 0; b < size_; ++b) {
                const auto cb = components(b);
                std::vector<int> c(orders_.size());
                for (std::size_t i = 0; i < orders_.size(); ++i)
                    c[i] = (ca[i] + cb[i]) % orders_[i];
                add_[std::size_t{a} * size_ + b] = index(c);
            }
            std::vector<int> n(orders_.size());
            for (std::size_t i = 0; i < orders_.size(); ++i)
                n[i] = (orders_[i] - ca[i]) % orders_[i];
            neg_[a] = index(n);
        }
    }

    std::uint32_t size() const noexcept { return size_; }
    const std::vector<int>& orders() const noexcept { return orders_; }

    std::uint32_t add(std::uint32_t a, std::uint32_t b) const noexcept { return add_[std::size_t{a} * size_ + b]; }
    std::uint32_t neg(std::uint32_t a) const noexcept { return neg_[a]; }

    std::vector<int> components(std::uint32_t idx) const
    {
        std::vector<int> c(orders_.size());
        for (std::size_t i = orders_.size(); i-- > 0;) {
            c[i] = static_cast<int>(idx % static_cast<std::uint32_t>(orders_[i]));
            idx /= static_cast<std::uint32_t>(orders_[i]);
        }
        return c;
    }

    std::uint32_t index(std::span<const int> c) const
    {
        if (c.size() != orders_.size())
            throw InvalidInput("H-component has wrong arity");
        std::uint32_t idx = 0;
        for (std::size_t i = 0; i < orders_.size(); ++i) {
            const int n = orders_[i];
            const int r = ((c[i] % n) + n) % n;
            idx = idx * static_cast<std::uint32_t>(n) + static_cast<std::uint32_t>(r);
        }
        return idx;
    }

private:
    std::vector<int> orders_;
    std::uint32_t size_;
    std::vector<std::uint32_t> add_;
    std::vector<std::uint32_t> neg_;
};

struct StrongSequenceabilityResult
{
    bool strongly_sequenceable = true;
    /// A subset of H \ {id} (as indices) that admits no sequencing.
    std::optional<std::vector<std::uint32_t>> counterexample;
};

/// Exhaustively decides whether every nonempty subset of H \ {id} has a sequencing.
inline StrongSequenceabilityResult is_strongly_sequenceable(const std::vector<int>& h_orders, std::size_t cap = 24)
{
    const AbelianProduct h(h_orders);
    if (h.size() > cap)
        throw CapExceeded("H has " + std::to_string(h.size()) + " elements, cap is " + std::to_string(cap));
    const std::uint32_t n = h.size() - 1; // non-identity elements are 1..|H|-1
    StrongSequenceabilityResult res;
    std::vector<std::uint32_t> subset;
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
        subset.clear();
        for (std::uint32_t i = 0; i < n; ++i)
            if (mask >> i & 1)
                subset.push_back(i + 1);
        const auto found = detail::first_sequencing<std::uint32_t>(
            subset, 0u, [&](std::uint32_t a, std::uint32_t b) { return h.add(a, b); },
            [](std::uint32_t a) { return std::uint64_t{a}; }, [](std::uint32_t a) { return a == 0; });
        if (!found) {
            res.strongly_sequenceable = false;
            res.counterexample = subset;
            return res;
        }
    }
    return res;
}

struct GroupOptions
{
    std::size_t strong_sequenceability_cap = 24;
};

/// The group G = Z_p x|_phi H with phi(h) in {id, -id}; H = Z_{n_1} x ... x Z_{n_k}.
///
/// Construction validates p, the sign homomorphism and (exhaustively, cached per
/// H) strong sequenceability of H. Instances are immutable values.
class GroupSpec
{
public:
    GroupSpec(std::int64_t p, std::vector<int> h_orders, std::vector<int> phi_signs, const GroupOptions& opts = {})
        : p_(p), h_(h_orders), phi_signs_(std::move(phi_signs))
    {
        if (p < 3 || !is_prime(static_cast<std::uint64_t>(p)))
            throw InvalidGroup("p must be an odd prime, got " + std::to_string(p));
        if (p > (std::int64_t{1} << 40))
            throw InvalidGroup("p too large");
        if (phi_signs_.size() != h_orders.size())
            throw InvalidGroup("need one phi sign per cyclic factor");
        for (std::size_t i = 0; i < h_orders.size(); ++i) {
            if (phi_signs_[i] != 1 && phi_signs_[i] != -1)
                throw InvalidGroup("phi signs must be +1 or -1");
            if (phi_signs_[i] == -1 && h_orders[i] % 2 != 0)
                throw InvalidGroup("phi sign -1 requires an even cyclic factor");
        }
        sign_.resize(h_.size());
        for (std::uint32_t a = 0; a < h_.size(); ++a) {
            const auto c = h_.components(a);
            int s = 1;
            for (std::size_t i = 0; i < c.size(); ++i)
                if (phi_signs_[i] == -1 && c[i] % 2 != 0)
                    s = -s;
            sign_[a] = s == 1 ? Sign::Plus : Sign::Minus;
        }
        if (!cached_strongly_sequenceable(h_orders, opts.strong_sequenceability_cap))
            throw InvalidGroup("H is not strongly sequenceable");
    }

    static GroupSpec cyclic(std::int64_t p) { return GroupSpec(p, {}, {}); }
    static GroupSpec dihedral(std::int64_t p) { return GroupSpec(p, {2}, {-1}); }

    std::int64_t p() const noexcept { return p_; }
    const std::vector<int>& h_orders() const noexcept { return h_.orders(); }
    const std::vector<int>& phi_signs() const noexcept { return phi_signs_; }
    std::uint32_t h_size() const noexcept { return h_.size(); }
    const AbelianProduct& h_group() const noexcept { return h_; }
    std::uint64_t order() const noexcept { return static_cast<std::uint64_t>(p_) * h_.size(); }

    Elem identity() const noexcept { return {}; }
    bool is_identity(const Elem& e) const noexcept { return e.x == 0 && e.h == 0; }

    Elem elem(std::int64_t x, std::uint32_t h = 0) const
    {
        if (h >= h_.size())
            throw InvalidInput("H index out of range");
        return {mod(x, p_), h};
    }

    Elem elem(std::int64_t x, std::span<const int> a) const { return {mod(x, p_), h_.index(a)}; }

    std::vector<int> h_components(std::uint32_t h) const { return h_.components(h); }

    bool valid(const Elem& e) const noexcept { return e.x >= 0 && e.x < p_ && e.h < h_.size(); }

    Sign phi(std::uint32_t h) const noexcept { return sign_[h]; }
    Sign phi(const Elem& e) const noexcept { return sign_[e.h]; }

    Elem mul(const Elem& g, const Elem& k) const noexcept
    {
        std::int64_t x = sign_[g.h] == Sign::Plus ? g.x + k.x : g.x - k.x;
        if (x >= p_)
            x -= p_;
        else if (x < 0)
            x += p_;
        return {x, h_.add(g.h, k.h)};
    }

    Elem inv(const Elem& g) const noexcept
    {
        // (x, a)^{-1} = (-phi(a) x, -a)
        const std::int64_t x = sign_[g.h] == Sign::Plus ? (g.x == 0 ? 0 : p_ - g.x) : g.x;
        return {x, h_.neg(g.h)};
    }

    Elem product(std::span<const Elem> word) const noexcept
    {
        Elem acc = identity();
        for (const Elem& e : word)
            acc = mul(acc, e);
        return acc;
    }

    /// Signed representative in (-p/2, p/2].
    std::int64_t lift(std::int64_t x) const noexcept { return x > p_ / 2 ? x - p_ : x; }
    std::int64_t lift(const Elem& e) const noexcept { return lift(e.x); }

    /// The automorphism (x, a) -> (lambda x, a), lambda != 0.
    Elem scale(const Elem& e, std::int64_t lambda) const noexcept { return {mod_mul(e.x, lambda, p_), e.h}; }

    std::uint64_t key(const Elem& e) const noexcept { return static_cast<std::uint64_t>(e.x) * h_.size() + e.h; }

    /// Canonical element order: by lift of x, then H-lexicographic.
    bool lex_less(const Elem& a, const Elem& b) const noexcept
    {
        const auto la = lift(a.x), lb = lift(b.x);
        return la != lb ? la < lb : a.h < b.h;
    }

    friend bool operator==(const GroupSpec& a, const GroupSpec& b)
    {
        return a.p_ == b.p_ && a.h_.orders() == b.h_.orders() && a.phi_signs_ == b.phi_signs_;
    }

private:
    static bool cached_strongly_sequenceable(const std::vector<int>& orders, std::size_t cap)
    {
        static std::mutex mu;
        static std::map<std::vector<int>, bool> cache;
        {
            std::lock_guard lock(mu);
            if (auto it = cache.find(orders); it != cache.end())
                return it->second;
        }
        const bool ok = is_strongly_sequenceable(orders, cap).strongly_sequenceable;
        std::lock_guard lock(mu);
        cache.emplace(orders, ok);
        return ok;
    }

    std::int64_t p_;
    AbelianProduct h_;
    std::vector<int> phi_signs_;
    std::vector<Sign> sign_;
};

/// Sort elements into canonical (lift, H-lex) order.
inline void sort_canonical(const GroupSpec& g, std::vector<Elem>& v)
{
    std::sort(v.begin(), v.end(), [&](const Elem& a, const Elem& b) { return g.lex_less(a, b); });
}

} // namespace gseq
