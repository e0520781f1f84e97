#pragma once

#include "gseq/dissociation.hpp"
#include "gseq/group.hpp"
#include "gseq/random.hpp"
#include "gseq/rectify.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gseq {

/// L0: every H-component has phi = +1. L1: every H-component has phi = -1.
enum class Label { L0, L1 };

inline const char* to_string(Label l)
{
    return l == Label::L0 ? "L0" : "L1";
}

inline Label label_of(const GroupSpec& g, const Elem& e)
{
    return g.phi(e) == Sign::Plus ? Label::L0 : Label::L1;
}

/// A homogeneous dissociated block. L1 blocks carry equal odd and even halves;
/// `members` lists all elements (odd half first for L1).
struct Block
{
    Label label = Label::L0;
    std::vector<Elem> members;
    std::vector<Elem> odd;
    std::vector<Elem> even;
    /// Index of the extracted block this one came from, and the piece number
    /// (0 for an unsplit block, 2..4 for the pieces of a quarter split).
    std::size_t source = 0;
    int piece = 0;

    std::size_t size() const noexcept { return members.size(); }

    static Block l0(std::vector<Elem> elems)
    {
        Block b;
        b.label = Label::L0;
        b.members = std::move(elems);
        return b;
    }

    static Block l1(std::vector<Elem> o, std::vector<Elem> e)
    {
        Block b;
        b.label = Label::L1;
        b.odd = std::move(o);
        b.even = std::move(e);
        b.members = b.odd;
        b.members.insert(b.members.end(), b.even.begin(), b.even.end());
        return b;
    }
};

/// Alternating product of an L1 block, plain product of an L0 block.
inline Elem block_product(const GroupSpec& g, const Block& b)
{
    return b.label == Label::L1 ? alternating_product(g, b.odd, b.even) : g.product(b.members);
}

/// Product of the block products in block order.
inline Elem compute_delta(const GroupSpec& g, std::span<const Block> blocks)
{
    Elem acc = g.identity();
    for (const Block& b : blocks)
        acc = g.mul(acc, block_product(g, b));
    return acc;
}

inline Block scale_block(const GroupSpec& g, const Block& b, std::int64_t lambda)
{
    Block out = b;
    for (auto* v : {&out.members, &out.odd, &out.even})
        for (Elem& e : *v)
            e = g.scale(e, lambda);
    return out;
}

using SizeWindow = std::pair<std::size_t, std::size_t>;

struct DecomposeConfig
{
    RParams r;
    SizeWindow window{8, 8};
    /// Denominator of the interval for E u {delta} when blocks exist.
    double interval_denominator = 90;
    /// Denominator used when no block is extracted (rectify-only path).
    double remainder_denominator = 2;
    DissociationOptions dissociation;
    RectifyOptions rectify;
    /// Random re-splits of the L1 halves tried while placing delta in the interval.
    std::size_t split_samples = 20000;
    /// Most lambdas kept when scanning for scalings of E alone.
    std::size_t lambda_limit = 4096;
    /// Element replacements tried when a block product is forbidden.
    std::size_t swap_attempts = 64;

    void validate() const
    {
        if (window.first < 8 || window.first > window.second)
            throw InvalidInput("size window must satisfy 8 <= lo <= hi");
        if (window.first % 8 != 0 || window.second % 8 != 0)
            throw InvalidInput("size window bounds must be multiples of 8");
        if (window.second > dissociation.cap)
            throw InvalidInput("size window exceeds the dissociation cap");
        if (interval_denominator <= 0 || remainder_denominator <= 0)
            throw InvalidInput("interval denominators must be positive");
    }
};

struct Decomposition
{
    std::vector<Elem> E;
    std::vector<Block> blocks;
    std::optional<Elem> delta;
    std::int64_t lambda = 1;
    std::size_t R = 1;
    /// Every x-component of A is zero; sequencing is left to H.
    bool h_delegated = false;
    /// Extraction stopped because no further block could be built, not because dim(E) < R.
    bool extraction_blocked = false;
    bool remark_applied = false;
    bool quarter_split = false;
    std::vector<std::string> log;

    std::size_t s() const noexcept { return blocks.size(); }
};

/// Interval bound p / (den * n).
inline double interval_bound(const GroupSpec& g, double den, std::size_t n)
{
    return static_cast<double>(g.p()) / (den * static_cast<double>(n));
}

inline bool in_open_interval(const GroupSpec& g, const Elem& e, double bound)
{
    return static_cast<double>(std::llabs(g.lift(e))) < bound;
}

namespace detail {

inline std::vector<Elem> by_magnitude(const GroupSpec& g, std::vector<Elem> v, Rng& rng)
{
    sort_canonical(g, v);
    shuffle_in_place(v, rng);
    std::stable_sort(v.begin(), v.end(),
                     [&](const Elem& a, const Elem& b) { return std::llabs(g.lift(a)) > std::llabs(g.lift(b)); });
    return v;
}

inline Block make_block(Label label, std::vector<Elem> chosen, Rng& rng)
{
    if (label == Label::L0)
        return Block::l0(std::move(chosen));
    shuffle_in_place(chosen, rng);
    const std::size_t h = chosen.size() / 2;
    return Block::l1(std::vector<Elem>(chosen.begin(), chosen.begin() + h),
                     std::vector<Elem>(chosen.begin() + h, chosen.end()));
}

} // namespace detail

using ProductFilter = std::function<bool(const Elem&)>;

/// Greedily grows a dissociated block of one label from `pool`, largest |lift|
/// first with random tie-breaks. The size is the largest multiple of 8 within
/// the window. When `forbidden` accepts the block product, halves are swapped
/// (L1) or single elements replaced until it does not.
inline std::optional<Block> extract_block(const GroupSpec& g, std::span<const Elem> pool, SizeWindow window, Label label,
                                          const ProductFilter& forbidden, Rng& rng,
                                          const DissociationOptions& dopts = {}, std::size_t swap_attempts = 64)
{
    std::vector<Elem> cand;
    for (const Elem& e : pool)
        if (!g.is_identity(e) && label_of(g, e) == label)
            cand.push_back(e);
    cand = detail::by_magnitude(g, std::move(cand), rng);

    std::vector<Elem> basis;
    std::vector<Elem> rest;
    for (const Elem& c : cand) {
        if (basis.size() < window.second && !in_span(g, c, basis, dopts).member)
            basis.push_back(c);
        else
            rest.push_back(c);
    }
    const std::size_t n = std::min(basis.size(), window.second) / 8 * 8;
    if (n == 0 || n < window.first)
        return std::nullopt;
    rest.insert(rest.begin(), basis.begin() + static_cast<std::ptrdiff_t>(n), basis.end());
    basis.resize(n);

    Block b = detail::make_block(label, basis, rng);
    if (!forbidden || !forbidden(block_product(g, b)))
        return b;

    if (label == Label::L1) {
        for (std::size_t i = 0; i < b.odd.size(); ++i)
            for (std::size_t j = 0; j < b.even.size(); ++j) {
                Block t = b;
                std::swap(t.odd[i], t.even[j]);
                t = Block::l1(t.odd, t.even);
                if (!forbidden(block_product(g, t)))
                    return t;
            }
    }
    std::size_t tries = 0;
    std::vector<std::size_t> pos(n);
    for (std::size_t i = 0; i < n; ++i)
        pos[i] = i;
    shuffle_in_place(pos, rng);
    for (std::size_t i : pos) {
        for (const Elem& c : rest) {
            if (tries++ >= swap_attempts)
                return std::nullopt;
            std::vector<Elem> trial = basis;
            trial[i] = c;
            if (!is_dissociated(g, trial, dopts).dissociated)
                continue;
            Block t = detail::make_block(label, trial, rng);
            if (!forbidden(block_product(g, t)))
                return t;
        }
    }
    return std::nullopt;
}

inline std::optional<Block> extract_block(const GroupSpec& g, std::span<const Elem> pool, SizeWindow window, Label label,
                                          std::optional<Elem> forbidden_product, Rng& rng,
                                          const DissociationOptions& dopts = {})
{
    ProductFilter f;
    if (forbidden_product)
        f = [fp = *forbidden_product](const Elem& e) { return e == fp; };
    return extract_block(g, pool, window, label, f, rng, dopts);
}

/// Violations of the decomposition invariants; empty when all hold. `a` is the
/// input set before scaling.
inline std::vector<std::string> check_decomposition(const GroupSpec& g, std::span<const Elem> a,
                                                    const Decomposition& d, const DecomposeConfig& cfg)
{
    std::vector<std::string> bad;
    if (d.h_delegated)
        return bad;
    if (mod(d.lambda, g.p()) == 0)
        bad.push_back("lambda is zero");

    std::vector<Elem> image;
    for (const Elem& e : a)
        image.push_back(g.scale(e, d.lambda));
    std::vector<Elem> parts = d.E;
    for (const Block& b : d.blocks)
        parts.insert(parts.end(), b.members.begin(), b.members.end());
    sort_canonical(g, image);
    sort_canonical(g, parts);
    if (image != parts)
        bad.push_back("E and the blocks do not partition the scaled input");

    if (!d.extraction_blocked) {
        const auto dim = dimension(g, d.E, false, cfg.dissociation, d.R);
        if (dim.r >= d.R)
            bad.push_back("(i) dim(E) >= R");
    }

    if (d.blocks.empty()) {
        const double bound = interval_bound(g, cfg.remainder_denominator, std::max<std::size_t>(d.E.size(), 1));
        for (const Elem& e : d.E)
            if (!in_open_interval(g, e, bound))
                bad.push_back("remainder element outside the interval");
        if (d.delta)
            bad.push_back("delta present without blocks");
        return bad;
    }

    for (std::size_t j = 0; j < d.blocks.size(); ++j) {
        const Block& b = d.blocks[j];
        const std::string tag = "block " + std::to_string(j + 1) + ": ";
        if (b.size() == 0 || b.size() % 8 != 0)
            bad.push_back(tag + "(ii) size not a positive multiple of 8");
        if (b.piece == 0 && (b.size() < cfg.window.first || b.size() > cfg.window.second))
            bad.push_back(tag + "(ii) size outside the window");
        for (const Elem& e : b.members)
            if (label_of(g, e) != b.label)
                bad.push_back(tag + "(iii) not homogeneous");
        if (b.label == Label::L1 && b.odd.size() != b.even.size())
            bad.push_back(tag + "(iv) unequal halves");
        if (!is_dissociated(g, b.members, cfg.dissociation).dissociated)
            bad.push_back(tag + "not dissociated");
    }
    if (d.blocks.front().label != d.blocks.back().label)
        bad.push_back("(iii) first and last blocks have different labels");

    if (!d.delta) {
        bad.push_back("delta missing");
        return bad;
    }
    const Elem delta = *d.delta;
    if (compute_delta(g, d.blocks) != delta)
        bad.push_back("(iv) delta does not match the block products");
    if (delta.x == 0)
        bad.push_back("(iv) z0 = 0");
    else if (g.lift(delta) < 0)
        bad.push_back("(iv) z0 not positive");
    if (g.phi(delta) != Sign::Plus)
        bad.push_back("(iv) phi(a0) != +1");
    const double bound = interval_bound(g, cfg.interval_denominator, d.E.size() + 1);
    for (const Elem& e : d.E)
        if (!in_open_interval(g, e, bound))
            bad.push_back("(iv) element of E outside the interval");
    if (!in_open_interval(g, delta, bound))
        bad.push_back("(iv) delta outside the interval");

    std::vector<Elem> v = d.blocks.front().members;
    if (d.blocks.size() > 1)
        v.insert(v.end(), d.blocks.back().members.begin(), d.blocks.back().members.end());
    v.push_back(delta);
    try {
        if (!is_dissociated(g, v, cfg.dissociation).dissociated)
            bad.push_back("(v) D_1 u D_s u {delta} not dissociated");
    } catch (const CapExceeded&) {
        bad.push_back("(v) D_1 u D_s u {delta} too large to check");
    }
    return bad;
}

namespace detail {

inline std::vector<Elem> remove_elems(std::vector<Elem> from, std::span<const Elem> drop)
{
    ElemSet d(drop.begin(), drop.end());
    std::erase_if(from, [&](const Elem& e) { return d.contains(e); });
    return from;
}

inline std::uint32_t h_sum(const GroupSpec& g, std::span<const Elem> v)
{
    std::uint32_t h = 0;
    for (const Elem& e : v)
        h = g.h_group().add(h, e.h);
    return h;
}

/// With no phi = -1 element in E and the x = 0 elements of E summing to 0 in
/// H, swap one of them into an L0 block in exchange for a block element.
inline bool apply_remark(const GroupSpec& g, std::vector<Elem>& e, std::vector<Block>& blocks,
                         const DecomposeConfig& cfg)
{
    std::vector<Elem> z;
    for (const Elem& x : e) {
        if (g.phi(x) == Sign::Minus)
            return false;
        if (x.x == 0)
            z.push_back(x);
    }
    if (z.empty() || h_sum(g, z) != 0)
        return false;
    sort_canonical(g, z);
    for (const Elem& zs : z) {
        for (Block& b : blocks) {
            if (b.label != Label::L0)
                continue;
            // eject the block element closest to zero, it is the cheapest to rectify
            std::vector<std::size_t> order(b.members.size());
            for (std::size_t i = 0; i < order.size(); ++i)
                order[i] = i;
            std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
                return std::llabs(g.lift(b.members[i])) < std::llabs(g.lift(b.members[j]));
            });
            for (std::size_t i : order) {
                const Elem out = b.members[i];
                std::vector<Elem> trial = b.members;
                trial[i] = zs;
                if (!is_dissociated(g, trial, cfg.dissociation).dissociated)
                    continue;
                std::vector<Elem> nz = remove_elems(z, std::span<const Elem>(&zs, 1));
                if (out.x == 0)
                    nz.push_back(out);
                if (!nz.empty() && h_sum(g, nz) == 0)
                    continue;
                Block nb = Block::l0(trial);
                nb.source = b.source;
                b = nb;
                e = remove_elems(e, std::span<const Elem>(&zs, 1));
                e.push_back(out);
                return true;
            }
        }
    }
    return false;
}

/// Chooses lambda (and, if needed, new L1 halves) so that lambda * pi_1(E u {delta}) fits the interval.
inline std::int64_t place_delta(const GroupSpec& g, const std::vector<Elem>& e, std::vector<Block>& blocks,
                                const DecomposeConfig& cfg, Rng& rng, std::vector<std::string>& log)
{
    const Elem d0 = compute_delta(g, blocks);
    if (d0.x != 0) {
        std::vector<Elem> with = e;
        with.push_back(d0);
        const auto rs = rectify_set(g, with, cfg.interval_denominator, cfg.dissociation, cfg.rectify);
        if (rs.success) {
            log.push_back("rectified E u {delta} at lambda " + std::to_string(rs.lambda) + " (" + rs.stage + ")");
            return rs.lambda;
        }
    }
    std::vector<std::int64_t> xs;
    for (const Elem& x : e)
        xs.push_back(x.x);
    const double bound = interval_bound(g, cfg.interval_denominator, e.size() + 1);
    const auto lambdas = all_scalings(g, xs, bound, true, cfg.lambda_limit, cfg.rectify);
    if (lambdas.empty())
        throw DecompositionFailure("rectify", "no scaling puts the remainder in the interval");
    log.push_back(std::to_string(lambdas.size()) + " scalings fit E alone; searching L1 splits");

    std::vector<std::size_t> l1;
    for (std::size_t j = 0; j < blocks.size(); ++j)
        if (blocks[j].label == Label::L1)
            l1.push_back(j);
    for (std::size_t t = 0; t <= cfg.split_samples; ++t) {
        if (t > 0) {
            if (l1.empty())
                break;
            for (std::size_t j : l1) {
                Block& b = blocks[j];
                std::vector<Elem> all = b.members;
                shuffle_in_place(all, rng);
                const std::size_t h = all.size() / 2;
                Block nb = Block::l1(std::vector<Elem>(all.begin(), all.begin() + h),
                                     std::vector<Elem>(all.begin() + h, all.end()));
                nb.source = b.source;
                b = nb;
            }
        }
        const Elem d = compute_delta(g, blocks);
        if (d.x == 0)
            continue;
        for (std::int64_t lambda : lambdas) {
            if (static_cast<double>(std::llabs(g.lift(mod_mul(d.x, lambda, g.p())))) < bound) {
                log.push_back("delta placed after " + std::to_string(t) + " re-splits at lambda " +
                              std::to_string(lambda));
                return lambda;
            }
        }
    }
    throw DecompositionFailure("rectify", "no split of the L1 halves puts delta in the interval");
}

inline bool union_dissociated(const GroupSpec& g, const Block& a, const Block* b, const Elem& delta,
                              const DissociationOptions& dopts)
{
    std::vector<Elem> v = a.members;
    if (b)
        v.insert(v.end(), b->members.begin(), b->members.end());
    v.push_back(delta);
    try {
        return is_dissociated(g, v, dopts).dissociated;
    } catch (const CapExceeded&) {
        return false;
    }
}

/// Splits an L1 block into halves-respecting pieces of sizes n/2, n/4, n/4
/// (pieces 2, 3, 4), keeping the half that stays dissociated with delta as
/// the source of pieces 3 and 4.
inline std::optional<std::vector<Block>> quarter_split(const GroupSpec& g, const Block& b, const Elem& delta, Rng& rng,
                                                       const DissociationOptions& dopts)
{
    const std::size_t n = b.size();
    if (n % 32 != 0)
        return std::nullopt;
    auto halves = [&](std::vector<Elem> v) {
        shuffle_in_place(v, rng);
        const std::size_t h = v.size() / 2;
        return std::make_pair(std::vector<Elem>(v.begin(), v.begin() + h), std::vector<Elem>(v.begin() + h, v.end()));
    };
    Block part[2];
    if (b.label == Label::L1) {
        auto [o1, o2] = halves(b.odd);
        auto [e1, e2] = halves(b.even);
        part[0] = Block::l1(o1, e1);
        part[1] = Block::l1(o2, e2);
    } else {
        auto [m1, m2] = halves(b.members);
        part[0] = Block::l0(m1);
        part[1] = Block::l0(m2);
    }
    int side;
    try {
        side = absorb(g, part[0].members, part[1].members, delta, dopts);
    } catch (const Error&) {
        return std::nullopt;
    }
    const Block& keep = part[side - 1];
    Block second = part[2 - side];
    Block p3, p4;
    if (keep.label == Label::L1) {
        auto [o3, o4] = halves(keep.odd);
        auto [e3, e4] = halves(keep.even);
        p3 = Block::l1(o3, e3);
        p4 = Block::l1(o4, e4);
    } else {
        auto [m3, m4] = halves(keep.members);
        p3 = Block::l0(m3);
        p4 = Block::l0(m4);
    }
    second.source = p3.source = p4.source = b.source;
    second.piece = 2;
    p3.piece = 3;
    p4.piece = 4;
    return std::vector<Block>{p3, second, p4};
}

/// Reorders (and if necessary splits) blocks so the first and last share a
/// label and D_1 u D_s u {delta} is dissociated.
inline void enforce_condition_v(const GroupSpec& g, std::vector<Block>& blocks, const Elem& delta, Rng& rng,
                                const DecomposeConfig& cfg, Decomposition& d)
{
    const std::size_t s = blocks.size();
    if (s == 1 && union_dissociated(g, blocks[0], nullptr, delta, cfg.dissociation))
        return;
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < s; ++j) {
            if (i == j || blocks[i].label != blocks[j].label)
                continue;
            if (!union_dissociated(g, blocks[i], &blocks[j], delta, cfg.dissociation))
                continue;
            std::vector<Block> out{blocks[i]};
            for (std::size_t k = 0; k < s; ++k)
                if (k != i && k != j)
                    out.push_back(blocks[k]);
            out.push_back(blocks[j]);
            blocks = std::move(out);
            d.log.push_back("condition (v) by reordering blocks " + std::to_string(i + 1) + ", " +
                            std::to_string(j + 1));
            return;
        }
    for (std::size_t i = 0; i < s; ++i) {
        auto pieces = quarter_split(g, blocks[i], delta, rng, cfg.dissociation);
        if (!pieces)
            continue;
        if (!union_dissociated(g, (*pieces)[0], &(*pieces)[2], delta, cfg.dissociation))
            throw LemmaViolation("quarter split left D_1 u D_s u {delta} dependent");
        std::vector<Block> out{(*pieces)[0], (*pieces)[1]};
        for (std::size_t k = 0; k < s; ++k)
            if (k != i)
                out.push_back(blocks[k]);
        out.push_back((*pieces)[2]);
        blocks = std::move(out);
        d.quarter_split = true;
        d.log.push_back("condition (v) by splitting block " + std::to_string(i + 1));
        return;
    }
    throw DecompositionFailure("condition_v", "no block arrangement makes D_1 u D_s u {delta} dissociated");
}

} // namespace detail

/// Partitions a scaled copy of A into a rectified remainder E and dissociated blocks.
inline Decomposition structure_decompose(const GroupSpec& g, std::span<const Elem> a, const DecomposeConfig& cfg,
                                         Rng& rng)
{
    cfg.validate();
    {
        ElemSet seen;
        for (const Elem& e : a) {
            if (!g.valid(e))
                throw InvalidInput("element outside the group");
            if (g.is_identity(e))
                throw InvalidInput("A must not contain the identity");
            if (!seen.insert(e).second)
                throw InvalidInput("A contains a repeated element");
        }
    }
    Decomposition d;
    d.R = cfg.r.value(g.p(), a.size());
    if (std::all_of(a.begin(), a.end(), [](const Elem& e) { return e.x == 0; })) {
        d.h_delegated = true;
        d.E.assign(a.begin(), a.end());
        d.log.push_back("all x-components zero: delegated to H");
        return d;
    }

    std::vector<Elem> pool(a.begin(), a.end());
    sort_canonical(g, pool);
    std::vector<Block> blocks;
    Elem prefix = g.identity();
    while (true) {
        const auto dim = dimension(g, pool, false, cfg.dissociation, d.R);
        if (dim.r < d.R)
            break;
        // forbid block products that would make the running x-sum vanish
        const std::int64_t need = mod(-prefix.x, g.p());
        ProductFilter forbid = [need](const Elem& e) { return e.x == need; };
        const auto ordered = detail::by_magnitude(g, pool, rng);
        const Label first = label_of(g, ordered.front());
        std::optional<Block> b;
        for (Label l : {first, first == Label::L0 ? Label::L1 : Label::L0}) {
            b = extract_block(g, pool, cfg.window, l, forbid, rng, cfg.dissociation, cfg.swap_attempts);
            if (b)
                break;
        }
        if (!b) {
            d.extraction_blocked = true;
            d.log.push_back("extraction blocked with dim(E) >= R");
            break;
        }
        b->source = blocks.size() + 1;
        prefix = g.mul(prefix, block_product(g, *b));
        pool = detail::remove_elems(pool, b->members);
        d.log.push_back(std::string("extracted ") + to_string(b->label) + " block of size " +
                        std::to_string(b->size()));
        blocks.push_back(std::move(*b));
    }

    if (blocks.empty()) {
        const auto rs = rectify_set(g, pool, cfg.remainder_denominator, cfg.dissociation, cfg.rectify);
        if (!rs.success)
            throw DecompositionFailure("rectify", "no scaling puts A in the remainder interval");
        d.lambda = rs.lambda;
        d.E = rs.image;
        d.log.push_back("rectify-only at lambda " + std::to_string(rs.lambda) + " (" + rs.stage + ")");
    } else {
        if (detail::apply_remark(g, pool, blocks, cfg)) {
            d.remark_applied = true;
            d.log.push_back("swapped an x = 0 element of E into an L0 block");
        }
        std::int64_t lambda = detail::place_delta(g, pool, blocks, cfg, rng, d.log);
        const Elem raw = compute_delta(g, blocks);
        if (g.lift(mod_mul(raw.x, lambda, g.p())) < 0)
            lambda = g.p() - lambda;
        d.lambda = lambda;
        d.E = apply_scaling(g, pool, lambda);
        for (Block& b : blocks)
            b = scale_block(g, b, lambda);
        const Elem delta = compute_delta(g, blocks);
        detail::enforce_condition_v(g, blocks, delta, rng, cfg, d);
        d.blocks = std::move(blocks);
        d.delta = delta;
    }
    sort_canonical(g, d.E);

    const auto bad = check_decomposition(g, a, d, cfg);
    if (!bad.empty()) {
        std::string msg;
        for (const auto& s : bad)
            msg += (msg.empty() ? "" : "; ") + s;
        throw DecompositionFailure("invariants", msg);
    }
    return d;
}

} // namespace gseq
