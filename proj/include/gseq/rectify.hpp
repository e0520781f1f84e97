#pragma once

#include "gseq/dissociation.hpp"
#include "gseq/group.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gseq {

struct RectificationResult
{
    std::int64_t lambda = 1;
    /// max_i |lift(lambda x_i)|
    std::int64_t achieved_bound = 0;
    double target_bound = 0;
};

struct RectifyOptions
{
    /// Largest p for which a full lambda scan is attempted.
    std::int64_t scan_budget = 10'000'000;
};

/// R = c1 max(sqrt(log p), log p / log |A|), floored, at least 1; `override_r` wins when set.
struct RParams
{
    double c1 = 0.5;
    std::optional<std::size_t> override_r;

    std::size_t value(std::int64_t p, std::size_t set_size) const
    {
        if (override_r)
            return std::max<std::size_t>(1, *override_r);
        const double lp = std::log(static_cast<double>(p));
        double m = std::sqrt(lp);
        if (set_size >= 2)
            m = std::max(m, lp / std::log(static_cast<double>(set_size)));
        const double r = std::floor(c1 * m);
        return r < 1 ? 1 : static_cast<std::size_t>(r);
    }
};

/// Diagnostic form of h log h + h log 100 + h log|B| < log p.
inline bool rectifiable_regime(std::size_t h, std::size_t b_size, std::int64_t p)
{
    const double hd = static_cast<double>(h);
    const double lhs = (h > 0 ? hd * std::log(hd) : 0.0) + hd * std::log(100.0) +
                       hd * std::log(static_cast<double>(std::max<std::size_t>(b_size, 1)));
    return lhs < std::log(static_cast<double>(p));
}

namespace detail {

inline std::int64_t max_abs_scaled(const GroupSpec& g, std::span<const std::int64_t> xs, std::int64_t lambda,
                                   std::int64_t stop_above)
{
    std::int64_t worst = 0;
    for (std::int64_t x : xs) {
        const std::int64_t v = std::llabs(g.lift(mod_mul(x, lambda, g.p())));
        worst = std::max(worst, v);
        if (worst > stop_above)
            break;
    }
    return worst;
}

inline bool within(std::int64_t v, double bound, bool strict)
{
    const double d = static_cast<double>(v);
    return strict ? d < bound : d <= bound;
}

inline void check_budget(const GroupSpec& g, const RectifyOptions& opts)
{
    if (g.p() > opts.scan_budget)
        throw ScanBudgetExceeded("lambda scan over p = " + std::to_string(g.p()) + " exceeds budget " +
                                 std::to_string(opts.scan_budget));
}

} // namespace detail

/// Smallest lambda in [1, p) with every |lift(lambda x)| within target_bound
/// (`<=`, or `<` when strict). Exhaustive scan with early exit.
inline std::optional<RectificationResult> find_scaling(const GroupSpec& g, std::span<const std::int64_t> xs,
                                                       double target_bound, bool strict = false,
                                                       const RectifyOptions& opts = {})
{
    detail::check_budget(g, opts);
    // fastest-failing residues first
    std::vector<std::int64_t> v;
    for (std::int64_t x : xs)
        if (mod(x, g.p()) != 0)
            v.push_back(mod(x, g.p()));
    if (v.empty())
        return RectificationResult{1, 0, target_bound};
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    // integer threshold: values above it fail
    const std::int64_t cutoff = static_cast<std::int64_t>(std::floor(target_bound));
    for (std::int64_t lambda = 1; lambda < g.p(); ++lambda) {
        const std::int64_t worst = detail::max_abs_scaled(g, v, lambda, cutoff);
        if (detail::within(worst, target_bound, strict))
            return RectificationResult{lambda, worst, target_bound};
    }
    return std::nullopt;
}

/// Every lambda in [1, p) that puts all xs within target_bound, ascending, at most `limit` of them.
inline std::vector<std::int64_t> all_scalings(const GroupSpec& g, std::span<const std::int64_t> xs, double target_bound,
                                              bool strict, std::size_t limit, const RectifyOptions& opts = {})
{
    detail::check_budget(g, opts);
    std::vector<std::int64_t> v;
    for (std::int64_t x : xs)
        if (mod(x, g.p()) != 0)
            v.push_back(mod(x, g.p()));
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    std::vector<std::int64_t> out;
    const std::int64_t cutoff = static_cast<std::int64_t>(std::floor(target_bound));
    for (std::int64_t lambda = 1; lambda < g.p() && out.size() < limit; ++lambda)
        if (detail::within(detail::max_abs_scaled(g, v, lambda, cutoff), target_bound, strict))
            out.push_back(lambda);
    return out;
}

inline std::vector<Elem> apply_scaling(const GroupSpec& g, std::span<const Elem> b, std::int64_t lambda)
{
    std::vector<Elem> out;
    out.reserve(b.size());
    for (const Elem& e : b)
        out.push_back(g.scale(e, lambda));
    return out;
}

struct RectifySetResult
{
    bool success = false;
    std::int64_t lambda = 1;
    std::vector<Elem> image;
    std::int64_t achieved_bound = 0;
    /// p / (denominator |B|); the image must lie strictly inside.
    double target_bound = 0;
    /// "trivial", "basis" or "scan"
    std::string stage;
    std::size_t basis_size = 0;
};

/// Scale B so its x-components land in (-p/(denominator |B|), p/(denominator |B|)).
/// First tries the lambda that squeezes a maximal dissociated basis into
/// [-p^(1-1/r), p^(1-1/r)], then falls back to a direct scan over the whole set.
inline RectifySetResult rectify_set(const GroupSpec& g, std::span<const Elem> b, double denominator,
                                    const DissociationOptions& dopts = {}, const RectifyOptions& opts = {})
{
    RectifySetResult res;
    res.target_bound = static_cast<double>(g.p()) / (denominator * static_cast<double>(std::max<std::size_t>(b.size(), 1)));
    std::vector<std::int64_t> xs;
    for (const Elem& e : b)
        xs.push_back(e.x);
    if (std::all_of(xs.begin(), xs.end(), [](std::int64_t x) { return x == 0; })) {
        res.success = true;
        res.image.assign(b.begin(), b.end());
        res.stage = "trivial";
        return res;
    }

    auto accept = [&](std::int64_t lambda, const char* stage) {
        const std::int64_t worst = detail::max_abs_scaled(g, xs, lambda, g.p());
        if (!detail::within(worst, res.target_bound, true))
            return false;
        res.success = true;
        res.lambda = lambda;
        res.achieved_bound = worst;
        res.image = apply_scaling(g, b, lambda);
        res.stage = stage;
        return true;
    };

    try {
        std::vector<Elem> nonzero;
        for (const Elem& e : b)
            if (!g.is_identity(e))
                nonzero.push_back(e);
        const auto dim = dimension(g, nonzero, false, dopts);
        res.basis_size = dim.r;
        if (dim.r > 0) {
            std::vector<std::int64_t> bx;
            for (const Elem& e : dim.basis)
                bx.push_back(e.x);
            const double r = static_cast<double>(dim.r);
            const double bound = std::pow(static_cast<double>(g.p()), 1.0 - 1.0 / r);
            if (auto s = find_scaling(g, bx, bound, false, opts); s && accept(s->lambda, "basis"))
                return res;
        }
    } catch (const CapExceeded&) {
        // basis too large for the dissociation engine; the direct scan still applies
    }
    if (auto s = find_scaling(g, xs, res.target_bound, true, opts))
        accept(s->lambda, "scan");
    return res;
}

} // namespace gseq
