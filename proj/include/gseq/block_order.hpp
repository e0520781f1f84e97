#pragma once

#include "gseq/decompose.hpp"
#include "gseq/dissociation.hpp"
#include "gseq/e_order.hpp"
#include "gseq/errors.hpp"
#include "gseq/group.hpp"
#include "gseq/random.hpp"
#include "gseq/sequencing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gseq {

/// One quarter of a block: its elements (same label and halves as the block),
/// its fixed product tau, and where it came from.
struct Quarter
{
    Block block;
    Elem tau;
    /// Index of the block in the decomposition, and the quarter number 1..4.
    std::size_t source = 0;
    int quarter = 1;
};

/// Quarters T_1..T_u, u = 4s, ordered D_1^(1), D_1^(2), D_2^(1), ..., D_s^(2), D_1^(3), D_1^(4), ..., D_s^(4).
struct BlockPlan
{
    std::vector<Quarter> T;

    std::size_t u() const noexcept { return T.size(); }

    Elem tau_product(const GroupSpec& g) const
    {
        Elem acc = g.identity();
        for (const Quarter& q : T)
            acc = g.mul(acc, q.tau);
        return acc;
    }
};

/// K = floor(c2 R^(1/3)), clamped to [1, smallest block size / 8]; `override_k` is clamped the same way.
struct KParams
{
    double c2 = 0.5;
    std::optional<std::size_t> override_k;

    std::size_t value(std::size_t r, std::size_t min_block) const
    {
        std::size_t k = override_k ? *override_k
                                   : static_cast<std::size_t>(std::floor(c2 * std::cbrt(static_cast<double>(r))));
        const std::size_t hi = std::max<std::size_t>(1, min_block / 8);
        return std::clamp<std::size_t>(k, 1, hi);
    }
};

namespace detail {

/// Uniform split of v into four equal parts.
inline std::vector<std::vector<Elem>> four_way(std::vector<Elem> v, Rng& rng)
{
    shuffle_in_place(v, rng);
    const std::size_t q = v.size() / 4;
    std::vector<std::vector<Elem>> out(4);
    for (std::size_t i = 0; i < 4; ++i)
        out[i].assign(v.begin() + static_cast<std::ptrdiff_t>(i * q), v.begin() + static_cast<std::ptrdiff_t>((i + 1) * q));
    return out;
}

} // namespace detail

/// Independent uniform four-way partition of every block (of each half for L1).
inline BlockPlan partition_blocks(const GroupSpec& g, std::span<const Block> blocks, Rng& rng)
{
    std::vector<std::vector<Quarter>> per(blocks.size());
    for (std::size_t j = 0; j < blocks.size(); ++j) {
        const Block& b = blocks[j];
        if (b.size() % 8 != 0)
            throw InvalidInput("block size " + std::to_string(b.size()) + " is not a multiple of 8");
        std::vector<Block> parts;
        if (b.label == Label::L1) {
            auto o = detail::four_way(b.odd, rng);
            auto e = detail::four_way(b.even, rng);
            for (std::size_t i = 0; i < 4; ++i)
                parts.push_back(Block::l1(o[i], e[i]));
        } else {
            for (auto& m : detail::four_way(b.members, rng))
                parts.push_back(Block::l0(m));
        }
        for (std::size_t i = 0; i < 4; ++i) {
            parts[i].source = j;
            parts[i].piece = static_cast<int>(i + 1);
            per[j].push_back({parts[i], block_product(g, parts[i]), j, static_cast<int>(i + 1)});
        }
    }
    BlockPlan plan;
    for (int half = 0; half < 2; ++half)
        for (auto& qs : per)
            for (int i = 0; i < 2; ++i)
                plan.T.push_back(qs[static_cast<std::size_t>(2 * half + i)]);
    return plan;
}

struct IntervalReport
{
    bool ok = true;
    std::vector<std::string> violations;
};

/// Conditions (i) and (ii) on the quarter products, evaluated literally with
/// products of at most K elements. Quarters are 1-based in the report.
inline IntervalReport check_interval_conditions(const GroupSpec& g, const BlockPlan& plan, std::span<const Elem> x1,
                                                std::span<const Elem> x2, std::size_t k, std::size_t cap = 2'000'000)
{
    IntervalReport rep;
    const std::size_t u = plan.u();
    if (u == 0)
        return rep;
    // P[j] = prod_{<=K}(T_j) for j = 0..u+1, the ends being {id}
    std::vector<ElemSet> P(u + 2, ElemSet{g.identity()}), Pinv(u + 2, ElemSet{g.identity()});
    for (std::size_t j = 1; j <= u; ++j) {
        P[j] = block_products_upto(g, plan.T[j - 1].block, k, cap);
        Pinv[j].clear();
        for (const Elem& e : P[j])
            Pinv[j].insert(g.inv(e));
    }
    auto hits = [&](const ElemSet& left, const Elem& mid, const ElemSet& r1, const ElemSet& r2) {
        for (const Elem& l : left) {
            const Elem need = g.inv(g.mul(l, mid));
            if (r1.contains(need) || r2.contains(need))
                return true;
        }
        return false;
    };
    auto name = [](std::size_t a, std::size_t b) { return "[" + std::to_string(a) + "," + std::to_string(b) + "]"; };

    for (std::size_t i = 1; i <= u; ++i) {
        ElemSet left = P[i - 1];
        left.insert(Pinv[i].begin(), Pinv[i].end());
        Elem m = g.identity();
        for (std::size_t j = i; j <= u; ++j) {
            m = g.mul(m, plan.T[j - 1].tau);
            if (i == 1 && j == u)
                continue;
            if (hits(left, m, Pinv[j], P[j + 1]))
                rep.violations.push_back("(i) interval " + name(i, j));
        }
    }

    const ElemSet is1 = partial_product_set(g, g.identity(), x1);
    const ElemSet is2 = partial_product_set(g, g.identity(), x2);
    Elem fwd = plan.T[0].tau;
    for (std::size_t j = 2; j <= u; ++j) {
        fwd = g.mul(fwd, plan.T[j - 1].tau);
        if (hits(is1, fwd, Pinv[j], P[j + 1]))
            rep.violations.push_back("(ii) x1 side j=" + std::to_string(j));
        // tau_u ... tau_j, descending
        Elem desc = g.identity();
        for (std::size_t t = u; t >= j; --t)
            desc = g.mul(desc, plan.T[t - 1].tau);
        if (hits(is2, desc, Pinv[j], P[j - 1]))
            rep.violations.push_back("(ii) x2 side j=" + std::to_string(j));
    }
    rep.ok = rep.violations.empty();
    return rep;
}

enum class Edge { First, Last };

/// Exact forbidden set for the sequence x1, t_1..t_u, x2 with t_1 ... t_u multiplying to delta.
/// First: no prefix product t_1...t_k of t_1 may lie in it.
/// Last: no inverse of a forward product of the last k elements of t_u may lie in it.
inline ElemSet edge_forbidden(const GroupSpec& g, std::span<const Elem> x1, std::span<const Elem> x2, const Elem& delta,
                              Edge edge)
{
    const Elem x1p = g.product(x1);
    ElemSet out;
    if (edge == Edge::First) {
        const Elem s = g.inv(x1p);
        for (const Elem& w : partial_product_set(g, g.identity(), x1))
            out.insert(g.mul(s, w));
        for (const Elem& w : partial_product_set(g, delta, x2))
            out.insert(w);
    } else {
        const Elem s = g.inv(g.mul(x1p, delta));
        for (const Elem& w : partial_product_set(g, g.identity(), x1))
            out.insert(g.mul(s, w));
        for (const Elem& w : partial_product_set(g, g.identity(), x2))
            out.insert(w);
    }
    return out;
}

/// Uniform ordering of a quarter: any order for L0; odd half in odd positions and even half in even positions for L1.
inline Ordering random_ordering(const Block& q, Rng& rng)
{
    if (q.label == Label::L0) {
        Ordering o = q.members;
        shuffle_in_place(o, rng);
        return o;
    }
    Ordering o = q.odd, e = q.even;
    shuffle_in_place(o, rng);
    shuffle_in_place(e, rng);
    Ordering out;
    for (std::size_t i = 0; i < o.size(); ++i) {
        out.push_back(o[i]);
        if (i < e.size())
            out.push_back(e[i]);
    }
    return out;
}

/// The first K prefix products (First) or inverted last-K suffix products (Last) avoid `forbidden`.
inline bool edge_acceptable(const GroupSpec& g, std::span<const Elem> t, const ElemSet& forbidden, std::size_t k,
                            Edge edge)
{
    const std::size_t kk = std::min(k, t.size());
    Elem acc = g.identity();
    for (std::size_t i = 0; i < kk; ++i) {
        if (edge == Edge::First) {
            acc = g.mul(acc, t[i]);
            if (forbidden.contains(acc))
                return false;
        } else {
            acc = g.mul(t[t.size() - 1 - i], acc);
            if (forbidden.contains(g.inv(acc)))
                return false;
        }
    }
    return true;
}

/// Resample a uniform ordering of the quarter until it is acceptable at its edge.
inline Ordering sample_edge_ordering(const GroupSpec& g, const Block& q, const ElemSet& forbidden, std::size_t k,
                                     Edge edge, Rng& rng, std::size_t retry_cap = 10'000)
{
    for (std::size_t a = 0; a < retry_cap; ++a) {
        Ordering t = random_ordering(q, rng);
        if (edge_acceptable(g, t, forbidden, k, edge))
            return t;
    }
    throw RetriesExhausted("no acceptable edge ordering in " + std::to_string(retry_cap) + " draws");
}

/// Pairs (i, s) in [1,K]^2 with (last i elements of a) * (first s elements of b) = id.
inline std::vector<std::pair<std::size_t, std::size_t>> impermissible_pairs(const GroupSpec& g, std::span<const Elem> a,
                                                                             std::span<const Elem> b, std::size_t k)
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    Elem tail = g.identity();
    for (std::size_t i = 1; i <= std::min(k, a.size()); ++i) {
        tail = g.mul(a[a.size() - i], tail);
        Elem acc = tail;
        for (std::size_t s = 1; s <= std::min(k, b.size()); ++s) {
            acc = g.mul(acc, b[s - 1]);
            if (g.is_identity(acc))
                out.emplace_back(i, s);
        }
    }
    return out;
}

/// Independent uniform orderings of T_a and T_b, redrawn until the pair is permissible.
inline std::pair<Ordering, Ordering> sample_permissible_pair(const GroupSpec& g, const Block& ta, const Block& tb,
                                                            std::size_t k, Rng& rng, std::size_t retry_cap = 10'000)
{
    for (std::size_t a = 0; a < retry_cap; ++a) {
        Ordering x = random_ordering(ta, rng), y = random_ordering(tb, rng);
        if (impermissible_pairs(g, x, y, k).empty())
            return {std::move(x), std::move(y)};
    }
    throw RetriesExhausted("no permissible pair in " + std::to_string(retry_cap) + " draws");
}

struct MarkovAudit
{
    /// 1 or u
    std::size_t h = 1;
    std::size_t j = 1;
    std::size_t lhs = 0;
    double rhs = 0;
    bool ok = true;
};

/// |prod_{=j}(T_h) n F| <= 4K (size ratio) |prod_{=j}(D_h) n F| for h in {1, u}, j = 1..K,
/// with F = x1-side inverse partials united with delta * IS(x2).
inline std::vector<MarkovAudit> markov_audit(const GroupSpec& g, const BlockPlan& plan, std::span<const Block> blocks,
                                             const ElemSet& f, std::size_t k, std::size_t cap = 2'000'000)
{
    std::vector<MarkovAudit> out;
    if (plan.u() == 0)
        return out;
    auto count = [&](const ElemSet& s) {
        std::size_t c = 0;
        for (const Elem& e : s)
            c += f.contains(e) ? 1 : 0;
        return c;
    };
    const std::size_t hs[2] = {1, plan.u()};
    for (std::size_t hi = 0; hi < (plan.u() > 1 ? 2u : 1u); ++hi) {
        const Quarter& q = plan.T[hs[hi] - 1];
        const Block& d = blocks[q.source];
        for (std::size_t j = 1; j <= k; ++j) {
            MarkovAudit a;
            a.h = hs[hi];
            a.j = j;
            a.lhs = count(block_products_exact(g, q.block, j, cap));
            const std::size_t dc = count(block_products_exact(g, d, j, cap));
            double ratio;
            if (d.label == Label::L1) {
                const std::size_t jo = (j + 1) / 2, je = j / 2;
                ratio = detail::binom<double>(q.block.odd.size(), jo) * detail::binom<double>(q.block.even.size(), je) /
                        (detail::binom<double>(d.odd.size(), jo) * detail::binom<double>(d.even.size(), je));
            } else {
                ratio = detail::binom<double>(q.block.size(), j) / detail::binom<double>(d.size(), j);
            }
            a.rhs = 4.0 * static_cast<double>(k) * ratio * static_cast<double>(dc);
            a.ok = static_cast<double>(a.lhs) <= a.rhs + 1e-9;
            out.push_back(a);
        }
    }
    return out;
}

struct Assembly
{
    Ordering sequence;
    /// Partial products p_1..p_m.
    std::vector<Elem> trace;
    bool verified = false;
    std::optional<SequencingDefect> defect;
};

/// x1, t_1..t_u, x2 concatenated and checked.
inline Assembly assemble_and_verify(const GroupSpec& g, std::span<const Elem> x1, std::span<const Ordering> t,
                                    std::span<const Elem> x2)
{
    Assembly a;
    a.sequence.assign(x1.begin(), x1.end());
    for (const Ordering& o : t)
        a.sequence.insert(a.sequence.end(), o.begin(), o.end());
    a.sequence.insert(a.sequence.end(), x2.begin(), x2.end());
    a.trace = partial_products(g, a.sequence);
    a.defect = find_defect(g, a.sequence, true);
    a.verified = !a.defect;
    return a;
}

struct BlockOrderConfig
{
    KParams k;
    /// Fresh partitions tried before giving up.
    std::size_t plan_retries = 40;
    /// Ordering draws per partition.
    std::size_t ordering_retries = 50;
    std::size_t edge_retry_cap = 10'000;
    std::size_t pair_retry_cap = 10'000;
    /// Partitions drawn while looking for one that meets the interval and Markov conditions.
    std::size_t condition_retries = 20;
    /// Corrupt the first assembled sequence so verification fails once.
    bool inject_fault = false;
};

struct BlockOrderStats
{
    std::size_t plans_tried = 0;
    std::size_t orderings_tried = 0;
    std::size_t verification_failures = 0;
    std::size_t condition_rejections = 0;
    std::size_t markov_rejections = 0;
    /// The accepted plan met the interval conditions and the Markov bounds.
    bool conditions_met = false;
    /// Some quarter has at most 2K elements, so condition (i) fails on [i,i] for every partition
    /// and the conditions were not used to reject partitions.
    bool conditions_unattainable = false;
    bool fault_injected = false;
};

struct BlockOrderResult
{
    Ordering sequence;
    std::vector<Elem> trace;
    BlockPlan plan;
    std::vector<Ordering> t;
    std::size_t K = 1;
    IntervalReport conditions;
    std::vector<MarkovAudit> markov;
    BlockOrderStats stats;
};

/// Sample a plan and quarter orderings, assemble x1, t_1..t_u, x2 and verify; resample on failure.
inline BlockOrderResult order_blocks(const GroupSpec& g, std::span<const Block> blocks, std::span<const Elem> x1,
                                     std::span<const Elem> x2, std::size_t r, const BlockOrderConfig& cfg, Rng& rng)
{
    if (blocks.empty())
        throw InvalidInput("order_blocks needs at least one block");
    BlockOrderResult res;
    std::size_t min_block = blocks[0].size();
    for (const Block& b : blocks)
        min_block = std::min(min_block, b.size());
    res.K = cfg.k.value(r, min_block);
    const Elem delta = compute_delta(g, blocks);
    const ElemSet f_first = edge_forbidden(g, x1, x2, delta, Edge::First);
    const ElemSet f_last = edge_forbidden(g, x1, x2, delta, Edge::Last);
    bool fault_pending = cfg.inject_fault;
    res.stats.conditions_unattainable = min_block / 4 <= 2 * res.K;
    const std::size_t condition_draws =
        res.stats.conditions_unattainable ? 1 : std::max<std::size_t>(1, cfg.condition_retries);

    for (std::size_t pt = 0; pt < cfg.plan_retries; ++pt) {
        // prefer a partition meeting the diagnostics; take the last one drawn otherwise
        BlockPlan plan;
        IntervalReport rep;
        std::vector<MarkovAudit> mk;
        bool met = false;
        for (std::size_t c = 0; c < condition_draws && !met; ++c) {
            plan = partition_blocks(g, blocks, rng);
            ++res.stats.plans_tried;
            if (!(plan.tau_product(g) == delta))
                throw LemmaViolation("quarter products do not multiply to delta");
            rep = check_interval_conditions(g, plan, x1, x2, res.K);
            if (!rep.ok) {
                ++res.stats.condition_rejections;
                continue;
            }
            mk = markov_audit(g, plan, blocks, f_first, res.K);
            if (!std::all_of(mk.begin(), mk.end(), [](const MarkovAudit& a) { return a.ok; })) {
                ++res.stats.markov_rejections;
                continue;
            }
            met = true;
        }
        if (!met && mk.empty())
            mk = markov_audit(g, plan, blocks, f_first, res.K);

        const std::size_t u = plan.u();
        for (std::size_t ot = 0; ot < cfg.ordering_retries; ++ot) {
            ++res.stats.orderings_tried;
            std::vector<Ordering> t(u);
            try {
                t[0] = sample_edge_ordering(g, plan.T[0].block, f_first, res.K, Edge::First, rng, cfg.edge_retry_cap);
                if (u > 1)
                    t[u - 1] =
                        sample_edge_ordering(g, plan.T[u - 1].block, f_last, res.K, Edge::Last, rng, cfg.edge_retry_cap);
                for (std::size_t j = 1; j + 2 < u; j += 2) {
                    auto [a, b] = sample_permissible_pair(g, plan.T[j].block, plan.T[j + 1].block, res.K, rng,
                                                          cfg.pair_retry_cap);
                    t[j] = std::move(a);
                    t[j + 1] = std::move(b);
                }
            } catch (const RetriesExhausted&) {
                break;
            }
            if (fault_pending) {
                fault_pending = false;
                res.stats.fault_injected = true;
                if (t[0].size() >= 2)
                    t[0][1] = t[0][0];
            }
            Assembly as = assemble_and_verify(g, x1, t, x2);
            if (!as.verified) {
                ++res.stats.verification_failures;
                continue;
            }
            res.sequence = std::move(as.sequence);
            res.trace = std::move(as.trace);
            res.plan = std::move(plan);
            res.t = std::move(t);
            res.conditions = std::move(rep);
            res.markov = std::move(mk);
            res.stats.conditions_met = met;
            return res;
        }
    }
    throw RetriesExhausted("block ordering failed after " + std::to_string(res.stats.plans_tried) + " partitions");
}

} // namespace gseq
