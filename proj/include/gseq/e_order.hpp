#pragma once

#include "gseq/backtrack.hpp"
#include "gseq/decompose.hpp"
#include "gseq/dissociation.hpp"
#include "gseq/group.hpp"
#include "gseq/sequencing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gseq {

/// E split by sign and position of the x-component: P (phi = +1, x > 0),
/// N (phi = +1, x < 0), Z (phi = +1, x = 0), S (phi = -1), and S into S_e
/// (upper half by lift) and S_o.
struct ESplit
{
    std::vector<Elem> P, N, Z, S, S_e, S_o;
};

/// Split E; every lift must lie strictly inside (-bound, bound).
inline ESplit split_E(const GroupSpec& g, std::span<const Elem> e, double bound)
{
    ESplit s;
    for (const Elem& x : e) {
        if (!in_open_interval(g, x, bound))
            throw IntervalViolation("element with x = " + std::to_string(g.lift(x)) + " outside (-" +
                                    std::to_string(bound) + ", " + std::to_string(bound) + ")");
        if (g.phi(x) == Sign::Minus)
            s.S.push_back(x);
        else if (x.x == 0)
            s.Z.push_back(x);
        else if (g.lift(x) > 0)
            s.P.push_back(x);
        else
            s.N.push_back(x);
    }
    for (auto* v : {&s.P, &s.N, &s.Z, &s.S})
        sort_canonical(g, *v);
    const std::size_t lo = s.S.size() / 2;
    s.S_o.assign(s.S.begin(), s.S.begin() + static_cast<std::ptrdiff_t>(lo));
    s.S_e.assign(s.S.begin() + static_cast<std::ptrdiff_t>(lo), s.S.end());
    return s;
}

/// Split with the interval (-p/(den(|E|+1)), p/(den(|E|+1))).
inline ESplit split_E_den(const GroupSpec& g, std::span<const Elem> e, double denominator)
{
    return split_E(g, e, interval_bound(g, denominator, e.size() + 1));
}

/// Products over exactly j elements of a block: alternating odd/even for L1, subsets for L0.
inline ElemSet block_products_exact(const GroupSpec& g, const Block& b, std::size_t j, std::size_t cap = 2'000'000)
{
    if (b.label == Label::L1)
        return alternating_products_exact(g, b.odd, b.even, j, cap);
    return subset_products_exact(g, b.members, j, cap);
}

/// Products over at most m elements, the empty product included.
inline ElemSet block_products_upto(const GroupSpec& g, const Block& b, std::size_t m, std::size_t cap = 2'000'000)
{
    ElemSet out{g.identity()};
    for (std::size_t j = 1; j <= m; ++j) {
        const ElemSet part = block_products_exact(g, b, j, cap);
        out.insert(part.begin(), part.end());
        if (out.size() > cap)
            throw CapExceeded("block product enumeration too large");
    }
    return out;
}

struct YFamily
{
    /// Y_j = (prod_{=j} D_s)^{-1} u delta^{-1} prod_{=j} D_1, j = 1..K (index j-1).
    std::vector<ElemSet> Y;
    /// Y'_j: the same with D_1 and D_s exchanged.
    std::vector<ElemSet> Yp;
};

inline YFamily build_Y_sets(const GroupSpec& g, const Block& d1, const Block& ds, const Elem& delta, std::size_t k,
                            std::size_t cap = 2'000'000)
{
    YFamily f;
    const Elem dinv = g.inv(delta);
    for (std::size_t j = 1; j <= k; ++j) {
        const ElemSet p1 = block_products_exact(g, d1, j, cap);
        const ElemSet ps = block_products_exact(g, ds, j, cap);
        ElemSet y, yp;
        for (const Elem& e : ps) {
            y.insert(g.inv(e));
            yp.insert(g.mul(dinv, e));
        }
        for (const Elem& e : p1) {
            y.insert(g.mul(dinv, e));
            yp.insert(g.inv(e));
        }
        f.Y.push_back(std::move(y));
        f.Yp.push_back(std::move(yp));
    }
    return f;
}

/// A sequencing of Z (elements (0, h)) by backtracking in canonical order.
inline Ordering order_Z(const GroupSpec& g, std::span<const Elem> z, std::size_t cap = 24)
{
    if (z.size() > cap)
        throw CapExceeded("Z too large to sequence exhaustively");
    std::vector<Elem> v(z.begin(), z.end());
    sort_canonical(g, v);
    const auto idx = detail::first_sequencing<Elem>(
        v, g.identity(), [&](const Elem& a, const Elem& b) { return g.mul(a, b); },
        [&](const Elem& a) { return g.key(a); }, [&](const Elem& a) { return g.is_identity(a); });
    if (!idx)
        throw NotSequenceable("Z admits no sequencing");
    Ordering out;
    for (std::size_t i : *idx)
        out.push_back(v[i]);
    return out;
}

struct EStep
{
    /// 1-based position in x (after z).
    std::size_t k = 0;
    /// 'P', 'N', 'e' (S_e) or 'o' (S_o)
    char cls = 'P';
    bool skip = true;
    /// Index of the avoided family member for an i-step (0 for the repair set).
    std::size_t i = 0;
    Elem chosen;
};

struct ISAudit
{
    std::size_t j = 0;
    std::size_t count = 0;
    double bound = 0;
    std::size_t best_L = 1;
    /// Value of the bound at L = floor(sqrt(|H| |Y_j|)).
    double bound_at_sqrt = 0;
    bool ok = true;
};

struct EOrderResult
{
    bool with_s = false;
    /// delta is the identity stand-in used when no blocks exist.
    bool virtual_delta = false;
    Ordering z;
    /// S nonempty: x = z p s_0 n s_1 ...; S empty: p and n.
    Ordering x;
    Ordering p;
    Ordering n;
    /// S nonempty: nu_0..nu_M.
    std::vector<Elem> nu;
    std::vector<EStep> steps;
    std::vector<ISAudit> audit;
    std::vector<ISAudit> audit_prime;
    bool monotone = true;
    bool nu_consistent = true;
    bool repaired = false;

    /// The ordering of E alone, in the order it is placed in the final sequencing.
    Ordering e_sequence() const
    {
        if (with_s)
            return x;
        Ordering out = z;
        out.insert(out.end(), p.rbegin(), p.rend());
        out.insert(out.end(), n.begin(), n.end());
        return out;
    }

    bool audits_ok() const
    {
        auto all = [](const std::vector<ISAudit>& v) {
            return std::all_of(v.begin(), v.end(), [](const ISAudit& a) { return a.ok; });
        };
        return all(audit) && all(audit_prime) && monotone && nu_consistent;
    }
};

namespace detail {

/// inf over L = 1..|Y_j|+|H|+1 of |H||Y_j|/L + L + 2|H| sum_{i<j} |Y_i|.
inline double is_inf(std::size_t h, std::size_t yj, std::size_t prefix, std::size_t& best_L)
{
    double best = std::numeric_limits<double>::infinity();
    const double hd = static_cast<double>(h), yd = static_cast<double>(yj);
    const double tail = 2.0 * hd * static_cast<double>(prefix);
    for (std::size_t L = 1; L <= yj + h + 1; ++L) {
        const double v = hd * yd / static_cast<double>(L) + static_cast<double>(L) + tail;
        if (v < best) {
            best = v;
            best_L = L;
        }
    }
    return best;
}

inline std::vector<ISAudit> audit_is(const GroupSpec& g, const ElemSet& is, const std::vector<ElemSet>& ys, bool with_s)
{
    std::vector<ISAudit> out;
    std::size_t prefix = 0;
    const std::size_t h = g.h_size();
    for (std::size_t j = 0; j < ys.size(); ++j) {
        ISAudit a;
        a.j = j + 1;
        for (const Elem& e : is)
            if (ys[j].contains(e))
                ++a.count;
        const double inf = is_inf(h, ys[j].size(), prefix, a.best_L);
        a.bound = with_s ? 4 * inf + static_cast<double>(h) : inf;
        const std::size_t ls = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(h * ys[j].size())))));
        const double at = static_cast<double>(h * ys[j].size()) / static_cast<double>(ls) + static_cast<double>(ls) +
                          2.0 * static_cast<double>(h * prefix);
        a.bound_at_sqrt = with_s ? 4 * at + static_cast<double>(h) : at;
        a.ok = static_cast<double>(a.count) <= a.bound;
        out.push_back(a);
        prefix += ys[j].size();
    }
    return out;
}

/// Partial products of `ord` pairwise distinct and not the identity before the end.
/// Element distinctness is not required: delta stands for a product, not a member of E.
inline bool partials_ok(const GroupSpec& g, std::span<const Elem> ord)
{
    ElemSet seen;
    Elem acc = g.identity();
    for (std::size_t i = 0; i < ord.size(); ++i) {
        acc = g.mul(acc, ord[i]);
        if (i + 1 < ord.size() && g.is_identity(acc))
            return false;
        if (!seen.insert(acc).second)
            return false;
    }
    return true;
}

struct Pick
{
    std::size_t idx = 0;
    bool skip = true;
    std::size_t i = 0;
};

/// The choice rule: avoid every family member if possible (skip-step), else
/// avoid the first member hit (i-step); extremal lift among the admissible
/// candidates, smallest H index on ties. `avoid` is in priority order with labels.
inline Pick greedy_pick(const GroupSpec& g, std::span<const Elem> cand, std::span<const Elem> vals,
                        const std::vector<std::pair<std::size_t, const ElemSet*>>& avoid, bool want_max)
{
    const std::size_t none = avoid.size();
    std::vector<std::size_t> hit(cand.size(), none);
    for (std::size_t c = 0; c < cand.size(); ++c)
        for (std::size_t a = 0; a < avoid.size(); ++a)
            if (avoid[a].second->contains(vals[c])) {
                hit[c] = a;
                break;
            }
    auto better = [&](std::size_t a, std::size_t b) {
        const auto la = g.lift(cand[a]), lb = g.lift(cand[b]);
        if (la != lb)
            return want_max ? la > lb : la < lb;
        return cand[a].h < cand[b].h;
    };
    auto best_of = [&](auto&& admit) {
        std::optional<std::size_t> best;
        for (std::size_t c = 0; c < cand.size(); ++c)
            if (admit(c) && (!best || better(c, *best)))
                best = c;
        return best;
    };
    if (auto b = best_of([&](std::size_t c) { return hit[c] == none; }))
        return {*b, true, 0};
    const std::size_t imin = *std::min_element(hit.begin(), hit.end());
    const ElemSet& yi = *avoid[imin].second;
    auto b = best_of([&](std::size_t c) { return !yi.contains(vals[c]); });
    if (!b)
        b = best_of([](std::size_t) { return true; });
    return {*b, false, avoid[imin].first};
}

inline std::vector<std::pair<std::size_t, const ElemSet*>> labelled(const std::vector<ElemSet>& ys)
{
    std::vector<std::pair<std::size_t, const ElemSet*>> out;
    for (std::size_t j = 0; j < ys.size(); ++j)
        out.emplace_back(j + 1, &ys[j]);
    return out;
}

/// Forward greedy: from `start`, repeatedly append the candidate picked by greedy_pick on start * prefix * c.
inline Ordering forward_greedy(const GroupSpec& g, std::vector<Elem> pool, const Elem& start,
                               const std::vector<std::pair<std::size_t, const ElemSet*>>& avoid, bool want_max,
                               char cls, std::vector<EStep>& steps)
{
    Ordering out;
    Elem v = start;
    std::vector<Elem> vals;
    while (!pool.empty()) {
        vals.clear();
        for (const Elem& c : pool)
            vals.push_back(g.mul(v, c));
        const Pick pk = greedy_pick(g, pool, vals, avoid, want_max);
        steps.push_back({out.size() + 1, cls, pk.skip, pk.i, pool[pk.idx]});
        out.push_back(pool[pk.idx]);
        v = vals[pk.idx];
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pk.idx));
    }
    return out;
}

} // namespace detail

/// Backward greedy ordering x = z p s_0 n s_1 s_2 ... of E with S nonempty,
/// keeping delta * IS(x) away from the family Y.
inline EOrderResult order_E_with_S(const GroupSpec& g, const ESplit& sp, const Elem& delta, const std::vector<ElemSet>& ys,
                                   const Ordering& z_order, bool virtual_delta = false)
{
    if (sp.S.empty())
        throw InvalidInput("order_E_with_S needs S nonempty");
    EOrderResult r;
    r.with_s = true;
    r.virtual_delta = virtual_delta;
    r.z = z_order;
    const std::size_t np = sp.P.size(), nn = sp.N.size(), ns = sp.S.size();
    const std::size_t m = np + nn + ns, base = np + nn + 1;

    // nu_M does not depend on the order inside each class
    const Elem start = g.mul(delta, g.product(z_order));
    Elem nu_m = start;
    {
        Ordering any = sp.P;
        any.push_back(sp.S_e.back());
        any.insert(any.end(), sp.N.begin(), sp.N.end());
        std::size_t ie = 0, io = 0;
        for (std::size_t t = 1; t < ns; ++t)
            any.push_back(t % 2 == 1 ? sp.S_o[io++] : sp.S_e[ie++]);
        nu_m = g.mul(start, g.product(any));
    }

    std::vector<Elem> pools[4] = {sp.P, sp.N, sp.S_e, sp.S_o};
    const char names[4] = {'P', 'N', 'e', 'o'};
    const auto avoid = detail::labelled(ys);
    std::vector<Elem> xs(m + 1);
    r.nu.assign(m + 1, g.identity());
    r.nu[m] = nu_m;
    std::vector<Elem> vals;
    for (std::size_t k = m; k >= 1; --k) {
        int cls;
        if (k > base)
            cls = (k - base) % 2 == 1 ? 3 : 2;
        else if (k == np + 1)
            cls = 2;
        else if (k > np + 1)
            cls = 1;
        else
            cls = 0;
        std::vector<Elem>& pool = pools[cls];
        if (pool.empty())
            throw LemmaViolation("class pool exhausted at position " + std::to_string(k));
        vals.clear();
        for (const Elem& c : pool)
            vals.push_back(g.mul(r.nu[k], g.inv(c)));
        const bool want_max = cls == 0 || cls == 2;
        const auto pk = detail::greedy_pick(g, pool, vals, avoid, want_max);
        xs[k] = pool[pk.idx];
        r.nu[k - 1] = vals[pk.idx];
        r.steps.push_back({k, names[cls], pk.skip, pk.i, pool[pk.idx]});
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pk.idx));
    }
    std::reverse(r.steps.begin(), r.steps.end());

    r.x = z_order;
    r.x.insert(r.x.end(), xs.begin() + 1, xs.end());

    Elem acc = start;
    r.nu_consistent = r.nu[0] == acc;
    for (std::size_t k = 1; k <= m; ++k) {
        acc = g.mul(acc, xs[k]);
        r.nu_consistent = r.nu_consistent && acc == r.nu[k];
    }
    for (std::size_t l = base + 1; l + 2 <= m; l += 2)
        if (g.lift(r.nu[l]) > g.lift(r.nu[l + 2]))
            r.monotone = false;

    const Ordering full = virtual_delta ? r.x : concat(Ordering{delta}, r.x);
    if (!detail::partials_ok(g, full))
        throw OrderingFailure(virtual_delta ? "x is not a sequencing" : "delta, x is not a sequencing");
    r.audit = detail::audit_is(g, partial_product_set(g, delta, r.x), ys, true);
    return r;
}

/// Forward greedy orderings p of P and n of N (S empty) such that
/// z, reverse(p), delta, n is a sequencing.
inline EOrderResult order_E_without_S(const GroupSpec& g, const ESplit& sp, const Elem& delta,
                                      const std::vector<ElemSet>& ys, const std::vector<ElemSet>& yps,
                                      const Ordering& z_order, bool virtual_delta = false)
{
    if (!sp.S.empty())
        throw InvalidInput("order_E_without_S needs S empty");
    EOrderResult r;
    r.virtual_delta = virtual_delta;
    r.z = z_order;
    r.p = detail::forward_greedy(g, sp.P, delta, detail::labelled(ys), true, 'P', r.steps);
    const auto ayp = detail::labelled(yps);
    r.n = detail::forward_greedy(g, sp.N, delta, ayp, false, 'N', r.steps);

    auto composite = [&] {
        Ordering c = r.z;
        c.insert(c.end(), r.p.rbegin(), r.p.rend());
        if (!virtual_delta)
            c.push_back(delta);
        c.insert(c.end(), r.n.begin(), r.n.end());
        return c;
    };
    if (!detail::partials_ok(g, composite())) {
        // keep n's partial products off everything placed before it
        Ordering head = r.z;
        head.insert(head.end(), r.p.rbegin(), r.p.rend());
        if (!virtual_delta)
            head.push_back(delta);
        const Elem shift = g.mul(delta, g.inv(g.product(head)));
        ElemSet y0;
        for (const Elem& w : partial_product_set(g, g.identity(), head))
            y0.insert(g.mul(shift, w));
        auto avoid = ayp;
        avoid.insert(avoid.begin(), {0, &y0});
        std::erase_if(r.steps, [](const EStep& s) { return s.cls == 'N'; });
        r.n = detail::forward_greedy(g, sp.N, delta, avoid, false, 'N', r.steps);
        r.repaired = true;
        if (!detail::partials_ok(g, composite()))
            throw OrderingFailure("z, reverse(p), delta, n is not a sequencing");
    }
    r.audit = detail::audit_is(g, partial_product_set(g, delta, r.p), ys, false);
    r.audit_prime = detail::audit_is(g, partial_product_set(g, delta, r.n), yps, false);
    return r;
}

/// Split E, sequence Z and dispatch on whether S is empty.
inline EOrderResult order_E(const GroupSpec& g, std::span<const Elem> e, const Elem& delta, double bound,
                            const YFamily& f, bool virtual_delta = false)
{
    const ESplit sp = split_E(g, e, bound);
    const Ordering z = order_Z(g, sp.Z, g.h_size());
    if (!sp.S.empty())
        return order_E_with_S(g, sp, delta, f.Y, z, virtual_delta);
    return order_E_without_S(g, sp, delta, f.Y, f.Yp, z, virtual_delta);
}

} // namespace gseq
