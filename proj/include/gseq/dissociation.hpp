#pragma once

#include "gseq/group.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace gseq {

/// An ordered signed product d_{i_1}^{e_1} ... d_{i_k}^{e_k} over distinct
/// indices of some base set. Serves as both a dissociation witness (replays to
/// the identity) and a span certificate (replays to the target).
struct SignedWord
{
    std::vector<std::size_t> indices;
    std::vector<int> exponents;

    std::size_t size() const noexcept { return indices.size(); }
};

inline Elem replay(const GroupSpec& g, std::span<const Elem> base, const SignedWord& w)
{
    Elem acc = g.identity();
    for (std::size_t k = 0; k < w.indices.size(); ++k) {
        const Elem& d = base[w.indices[k]];
        acc = g.mul(acc, w.exponents[k] > 0 ? d : g.inv(d));
    }
    return acc;
}

enum class DissociationEngine {
    /// Meet-in-the-middle over the sign patterns realizable in Z_p x| H.
    Structured,
    /// Depth-first search over (used-subset, running product) states.
    Search,
};

struct DissociationOptions
{
    DissociationEngine engine = DissociationEngine::Structured;
    /// Largest base set accepted by the structured engine.
    std::size_t cap = 18;
    /// Largest base set accepted by the state search.
    std::size_t search_cap = 12;
    std::size_t search_state_budget = 40'000'000;
};

namespace detail {

/// State search for a word over `base` equal to `target`.
inline std::optional<SignedWord> search_word_dfs(const GroupSpec& g, std::span<const Elem> base, const Elem& target,
                                                 bool nonempty, const DissociationOptions& opts)
{
    const std::size_t n = base.size();
    if (n > opts.search_cap || n > 20)
        throw CapExceeded("state search over " + std::to_string(n) + " elements exceeds cap");
    if (!nonempty && target == g.identity())
        return SignedWord{};
    if (g.order() >= (std::uint64_t{1} << (63 - n)))
        throw CapExceeded("group too large for packed search states");

    std::vector<Elem> powers[2];
    powers[0].assign(base.begin(), base.end());
    for (const Elem& d : base)
        powers[1].push_back(g.inv(d));

    std::unordered_set<std::uint64_t> visited;
    SignedWord path;
    std::size_t budget = opts.search_state_budget;

    auto dfs = [&](auto&& self, std::uint32_t mask, const Elem& cur) -> bool {
        for (std::size_t i = 0; i < n; ++i) {
            if (mask >> i & 1)
                continue;
            for (int s = 0; s < 2; ++s) {
                const Elem nxt = g.mul(cur, powers[s][i]);
                path.indices.push_back(i);
                path.exponents.push_back(s == 0 ? 1 : -1);
                if (nxt == target)
                    return true;
                const std::uint32_t nm = mask | (1u << i);
                const std::uint64_t state = (g.key(nxt) << n) | nm;
                if (visited.insert(state).second) {
                    if (--budget == 0)
                        throw CapExceeded("state search budget exhausted");
                    if (self(self, nm, nxt))
                        return true;
                }
                path.indices.pop_back();
                path.exponents.pop_back();
            }
        }
        return false;
    };
    if (dfs(dfs, 0, g.identity()))
        return path;
    return std::nullopt;
}

/// Every word over distinct elements of a subset of Z_p x| H has x-component
/// sum_i gamma_i x_i and H-component sum_i eps_i a_i, where eps_i is the
/// exponent and gamma_i in {-1, +1} is a coefficient. If the subset contains
/// t >= 1 elements with phi = -1, those split into ceil(t/2) elements with
/// gamma = +1 and floor(t/2) with gamma = -1 (their position parity), while
/// every phi = +1 element takes gamma and eps freely. If t = 0 then
/// gamma_i = eps_i. Conversely every such pattern is realized by some
/// ordering, so a word search reduces to a signed subset-sum, solved here by
/// meet in the middle.
class StructuredWordSearch
{
public:
    StructuredWordSearch(const GroupSpec& g, std::span<const Elem> base) : g_(g), base_(base.begin(), base.end())
    {
        odd_.resize(base_.size());
        for (std::size_t i = 0; i < base_.size(); ++i)
            odd_[i] = g.phi(base_[i]) == Sign::Minus;
    }

    std::optional<SignedWord> find(const Elem& target, bool nonempty) const
    {
        const std::size_t n = base_.size();
        if (!nonempty && target == g_.identity())
            return SignedWord{};
        if (n == 0)
            return std::nullopt;
        const std::size_t nl = n / 2;

        std::vector<Entry> left;
        enumerate(0, nl, left);
        std::sort(left.begin(), left.end(), [](const Entry& a, const Entry& b) {
            return a.key != b.key ? a.key < b.key : a.cls < b.cls;
        });
        left.erase(std::unique(left.begin(), left.end(),
                               [](const Entry& a, const Entry& b) { return a.key == b.key && a.cls == b.cls; }),
                   left.end());

        std::optional<SignedWord> result;
        walk(nl, n, [&](const Entry& r) {
            for (int b_left = -r.b; b_left <= 1 - r.b; ++b_left) {
                const std::int64_t xl = mod(target.x - r.x, g_.p());
                const std::uint32_t hl = g_.h_group().add(target.h, g_.h_group().neg(r.h));
                const std::uint64_t k = pack(xl, hl, b_left);
                auto it = std::lower_bound(left.begin(), left.end(), k,
                                           [](const Entry& e, std::uint64_t key) { return e.key < key; });
                for (; it != left.end() && it->key == k; ++it) {
                    if (compatible(*it, r, b_left + r.b, nonempty)) {
                        result = build(it->code, nl, r.code, target);
                        return true;
                    }
                }
            }
            return false;
        });
        return result;
    }

private:
    // classes of partial assignments
    static constexpr std::uint8_t kEmpty = 0;
    static constexpr std::uint8_t kCoupled = 1; // nonempty, no phi=-1 element, gamma == eps throughout
    static constexpr std::uint8_t kEvenOnly = 2; // nonempty, no phi=-1 element
    static constexpr std::uint8_t kHasOdd = 3;

    struct Entry
    {
        std::uint64_t key;
        std::uint64_t code; // base-5 digits, element i at 5^(i - offset)
        std::int64_t x;
        std::uint32_t h;
        int b;
        std::uint8_t cls;
    };

    std::uint64_t pack(std::int64_t x, std::uint32_t h, int b) const
    {
        return ((static_cast<std::uint64_t>(x) * g_.h_size() + h) << 6) | static_cast<std::uint64_t>(b + 32);
    }

    static bool compatible(const Entry& l, const Entry& r, int b, bool nonempty)
    {
        if (b == 0 || b == 1) {
            if ((l.cls == kHasOdd || r.cls == kHasOdd))
                return true;
        }
        // no phi=-1 element at all: the coupled case
        const bool lc = l.cls == kEmpty || l.cls == kCoupled;
        const bool rc = r.cls == kEmpty || r.cls == kCoupled;
        if (lc && rc && b == 0)
            return !nonempty || l.cls != kEmpty || r.cls != kEmpty;
        return false;
    }

    // digit: 0 skip, 1 (+,+), 2 (+,-), 3 (-,+), 4 (-,-) as (gamma, eps)
    static int gamma_of(int d) { return d <= 2 ? 1 : -1; }
    static int eps_of(int d) { return (d == 1 || d == 3) ? 1 : -1; }

    void enumerate(std::size_t lo, std::size_t hi, std::vector<Entry>& out) const
    {
        walk(lo, hi, [&](const Entry& e) {
            out.push_back(e);
            return false;
        });
    }

    template <class Visit>
    void walk(std::size_t lo, std::size_t hi, Visit&& visit) const
    {
        bool stop = false;
        auto rec = [&](auto&& self, std::size_t i, std::int64_t x, std::uint32_t h, int b, std::uint8_t cls,
                       std::uint64_t code, std::uint64_t place) -> void {
            if (stop)
                return;
            if (i == hi) {
                Entry e{pack(x, h, b), code, x, h, b, cls};
                if (visit(e))
                    stop = true;
                return;
            }
            self(self, i + 1, x, h, b, cls, code, place * 5);
            const Elem& d = base_[i];
            const std::uint32_t hneg = g_.h_group().neg(d.h);
            for (int dig = 1; dig <= 4 && !stop; ++dig) {
                const int gm = gamma_of(dig), ep = eps_of(dig);
                std::int64_t nx = gm > 0 ? x + d.x : x - d.x;
                if (nx >= g_.p())
                    nx -= g_.p();
                else if (nx < 0)
                    nx += g_.p();
                const std::uint32_t nh = g_.h_group().add(h, ep > 0 ? d.h : hneg);
                std::uint8_t ncls;
                int nb = b;
                if (odd_[i]) {
                    ncls = kHasOdd;
                    nb += gm;
                } else if (cls == kHasOdd) {
                    ncls = kHasOdd;
                } else if (gm == ep && (cls == kEmpty || cls == kCoupled)) {
                    ncls = kCoupled;
                } else {
                    ncls = kEvenOnly;
                }
                self(self, i + 1, nx, nh, nb, ncls, code + place * static_cast<std::uint64_t>(dig), place * 5);
            }
        };
        rec(rec, lo, 0, 0, 0, kEmpty, 0, 1);
    }

    SignedWord build(std::uint64_t lcode, std::size_t nl, std::uint64_t rcode, const Elem& target) const
    {
        std::vector<int> digit(base_.size(), 0);
        for (std::size_t i = 0; i < nl; ++i, lcode /= 5)
            digit[i] = static_cast<int>(lcode % 5);
        for (std::size_t i = nl; i < base_.size(); ++i, rcode /= 5)
            digit[i] = static_cast<int>(rcode % 5);

        std::vector<std::size_t> even_plus, even_minus, odd_plus, odd_minus;
        bool any_odd = false;
        for (std::size_t i = 0; i < base_.size(); ++i) {
            if (digit[i] == 0)
                continue;
            const int gm = gamma_of(digit[i]), ep = eps_of(digit[i]);
            if (odd_[i]) {
                any_odd = true;
                (gm > 0 ? odd_plus : odd_minus).push_back(i);
            } else {
                // the prefix sign needed in front of an even element is gamma * eps
                (gm * ep > 0 ? even_plus : even_minus).push_back(i);
            }
        }
        SignedWord w;
        auto push = [&](std::size_t i) {
            w.indices.push_back(i);
            w.exponents.push_back(eps_of(digit[i]));
        };
        if (!any_odd) {
            for (std::size_t i : even_plus)
                push(i);
            for (std::size_t i : even_minus)
                push(i);
        } else {
            for (std::size_t i : even_plus)
                push(i);
            for (std::size_t k = 0; k < odd_plus.size(); ++k) {
                push(odd_plus[k]);
                if (k == 0)
                    for (std::size_t i : even_minus)
                        push(i);
                if (k < odd_minus.size())
                    push(odd_minus[k]);
            }
        }
        if (replay(g_, base_, w) != target)
            throw LemmaViolation("structured word search produced a word that does not replay to its target");
        return w;
    }

    const GroupSpec& g_;
    std::vector<Elem> base_;
    std::vector<bool> odd_;
};

inline std::optional<SignedWord> find_word(const GroupSpec& g, std::span<const Elem> base, const Elem& target,
                                           bool nonempty, const DissociationOptions& opts)
{
    if (opts.engine == DissociationEngine::Search)
        return search_word_dfs(g, base, target, nonempty, opts);
    if (base.size() > opts.cap)
        throw CapExceeded("dissociation test over " + std::to_string(base.size()) + " elements exceeds cap " +
                          std::to_string(opts.cap));
    return StructuredWordSearch(g, base).find(target, nonempty);
}

template <class T>
std::size_t binom(std::size_t n, std::size_t k)
{
    if (k > n)
        return 0;
    T r = 1;
    for (std::size_t i = 1; i <= k; ++i)
        r = r * static_cast<T>(n - k + i) / static_cast<T>(i);
    return static_cast<std::size_t>(r);
}

/// Calls f(indices) for every k-subset of [0, n) in lexicographic order; stops when f returns true.
template <class F>
bool for_each_combination(std::size_t n, std::size_t k, F&& f)
{
    if (k > n)
        return false;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i)
        idx[i] = i;
    while (true) {
        if (f(static_cast<const std::vector<std::size_t>&>(idx)))
            return true;
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == n - k + i - 1)
            --i;
        if (i == 0)
            return false;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j)
            idx[j] = idx[j - 1] + 1;
    }
}

} // namespace detail

struct DissociationResult
{
    bool dissociated = true;
    /// A nonempty word replaying to the identity when not dissociated.
    std::optional<SignedWord> witness;
};

/// True iff no ordered product of distinct elements of D with exponents +-1 is the identity.
inline DissociationResult is_dissociated(const GroupSpec& g, std::span<const Elem> d, const DissociationOptions& opts = {})
{
    auto w = detail::find_word(g, d, g.identity(), true, opts);
    if (w)
        return {false, std::move(w)};
    return {true, std::nullopt};
}

struct SpanResult
{
    bool member = false;
    std::optional<SignedWord> certificate;
};

/// Membership in Span(D): some ordered signed product over a subset of D (the empty one included).
inline SpanResult in_span(const GroupSpec& g, const Elem& x, std::span<const Elem> d, const DissociationOptions& opts = {})
{
    auto w = detail::find_word(g, d, x, false, opts);
    if (w)
        return {true, std::move(w)};
    return {false, std::nullopt};
}

struct DimensionResult
{
    std::size_t r = 0;
    std::vector<Elem> basis;
    bool maximum = false;
};

/// Greedy maximal dissociated subset of B, scanning B in the given order. With
/// `maximum` and |B| <= 12 the largest dissociated subset is found exhaustively.
/// `stop_at` ends the greedy scan once the basis reaches that size.
inline DimensionResult dimension(const GroupSpec& g, std::span<const Elem> b, bool maximum = false,
                                 const DissociationOptions& opts = {},
                                 std::size_t stop_at = static_cast<std::size_t>(-1))
{
    DimensionResult res;
    for (const Elem& e : b) {
        if (res.basis.size() >= stop_at)
            break;
        if (g.is_identity(e))
            continue;
        if (res.basis.size() + 1 > opts.cap)
            throw CapExceeded("dimension exceeds dissociation cap");
        if (!in_span(g, e, res.basis, opts).member)
            res.basis.push_back(e);
    }
    res.r = res.basis.size();
    if (!maximum || b.size() > 12 || stop_at != static_cast<std::size_t>(-1))
        return res;

    // Subsets of dissociated sets are dissociated, so sizes can be probed upward.
    std::vector<Elem> pick;
    for (std::size_t k = res.r + 1; k <= b.size(); ++k) {
        std::optional<std::vector<Elem>> found;
        detail::for_each_combination(b.size(), k, [&](const std::vector<std::size_t>& idx) {
            pick.clear();
            for (std::size_t i : idx)
                pick.push_back(b[i]);
            if (is_dissociated(g, pick, opts).dissociated) {
                found = pick;
                return true;
            }
            return false;
        });
        if (!found)
            break;
        res.basis = *found;
        res.r = k;
    }
    res.maximum = true;
    return res;
}

/// Given a dissociated D = D1 u D2 (disjoint) and x != id, a side i with
/// D_i u {x} dissociated; side 1 when both qualify.
inline int absorb(const GroupSpec& g, std::span<const Elem> d1, std::span<const Elem> d2, const Elem& x,
                  const DissociationOptions& opts = {})
{
    if (g.is_identity(x))
        throw InvalidInput("absorb: x must not be the identity");
    for (int side = 1; side <= 2; ++side) {
        std::vector<Elem> u(side == 1 ? d1.begin() : d2.begin(), side == 1 ? d1.end() : d2.end());
        if (std::find(u.begin(), u.end(), x) != u.end())
            return side;
        u.push_back(x);
        if (is_dissociated(g, u, opts).dissociated)
            return side;
    }
    throw LemmaViolation("absorb: neither side stays dissociated after adding x");
}

/// Product of an interleaving o_1 e_1 o_2 e_2 ... of the chosen elements.
inline Elem alternating_product(const GroupSpec& g, std::span<const Elem> odd, std::span<const Elem> even)
{
    Elem acc = g.identity();
    for (std::size_t i = 0; i < std::max(odd.size(), even.size()); ++i) {
        if (i < odd.size())
            acc = g.mul(acc, odd[i]);
        if (i < even.size())
            acc = g.mul(acc, even[i]);
    }
    return acc;
}

/// Products with ceil(j/2) factors from `odd` and floor(j/2) from `even`, alternating.
inline ElemSet alternating_products_exact(const GroupSpec& g, std::span<const Elem> odd, std::span<const Elem> even,
                                          std::size_t j, std::size_t cap = 2'000'000)
{
    const std::size_t a = (j + 1) / 2, b = j / 2;
    ElemSet out;
    if (a > odd.size() || b > even.size())
        return out;
    if (detail::binom<double>(odd.size(), a) * static_cast<double>(detail::binom<double>(even.size(), b)) > cap)
        throw CapExceeded("alternating product enumeration too large");
    std::vector<Elem> so, se;
    detail::for_each_combination(odd.size(), a, [&](const std::vector<std::size_t>& io) {
        so.clear();
        for (std::size_t i : io)
            so.push_back(odd[i]);
        detail::for_each_combination(even.size(), b, [&](const std::vector<std::size_t>& ie) {
            se.clear();
            for (std::size_t i : ie)
                se.push_back(even[i]);
            out.insert(alternating_product(g, so, se));
            return false;
        });
        return false;
    });
    return out;
}

/// Products of the j-element subsets of D, factors in the given order.
inline ElemSet subset_products_exact(const GroupSpec& g, std::span<const Elem> d, std::size_t j,
                                     std::size_t cap = 2'000'000)
{
    ElemSet out;
    if (j > d.size())
        return out;
    if (detail::binom<double>(d.size(), j) > cap)
        throw CapExceeded("subset product enumeration too large");
    detail::for_each_combination(d.size(), j, [&](const std::vector<std::size_t>& idx) {
        Elem acc = g.identity();
        for (std::size_t i : idx)
            acc = g.mul(acc, d[i]);
        out.insert(acc);
        return false;
    });
    return out;
}

struct AlternatingProducts
{
    ElemSet products;
    std::size_t selections = 0;
    bool all_distinct = true;
};

/// All alternating products of length 1..k drawn from D_o (odd positions) and
/// D_e (even positions), each element at most once.
inline AlternatingProducts alternating_products(const GroupSpec& g, std::span<const Elem> odd,
                                                std::span<const Elem> even, std::size_t k,
                                                std::size_t cap = 2'000'000)
{
    for (const Elem& e : odd)
        if (g.phi(e) != Sign::Minus)
            throw InvalidInput("alternating_products: elements must have phi = -1");
    for (const Elem& e : even)
        if (g.phi(e) != Sign::Minus)
            throw InvalidInput("alternating_products: elements must have phi = -1");
    if (k > odd.size() + even.size())
        throw InvalidInput("alternating_products: k exceeds |D_o| + |D_e|");
    AlternatingProducts res;
    for (std::size_t h = 1; h <= k; ++h) {
        const std::size_t a = (h + 1) / 2, b = h / 2;
        if (a > odd.size() || b > even.size())
            continue;
        const std::size_t count = detail::binom<double>(odd.size(), a) * detail::binom<double>(even.size(), b);
        res.selections += count;
        if (res.selections > cap)
            throw CapExceeded("alternating product enumeration too large");
        const ElemSet part = alternating_products_exact(g, odd, even, h, cap);
        res.products.insert(part.begin(), part.end());
    }
    res.all_distinct = res.products.size() == res.selections;
    return res;
}

} // namespace gseq
