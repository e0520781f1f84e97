#pragma once

#include "gseq/block_order.hpp"
#include "gseq/decompose.hpp"
#include "gseq/e_order.hpp"
#include "gseq/errors.hpp"
#include "gseq/group.hpp"
#include "gseq/oracle.hpp"
#include "gseq/random.hpp"
#include "gseq/rectify.hpp"
#include "gseq/sequencing.hpp"
#include "gseq/serialize.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gseq {

struct PipelineConfig
{
    std::uint64_t seed = 0;
    DecomposeConfig decompose;
    /// K parameters and sampling caps for the block stage.
    BlockOrderConfig blocks;
    /// Attempts, each with its own derived seed.
    std::size_t retries = 8;
    bool fallback = true;
    std::size_t oracle_cap = 16;

    void validate() const
    {
        decompose.validate();
        if (retries == 0 || oracle_cap == 0 || blocks.plan_retries == 0 || blocks.ordering_retries == 0 ||
            blocks.edge_retry_cap == 0 || blocks.pair_retry_cap == 0)
            throw InvalidInput("retry caps must be positive");
        if (decompose.r.c1 <= 0 || blocks.k.c2 <= 0)
            throw InvalidInput("c1 and c2 must be positive");
    }
};

struct PipelineReport
{
    /// "oracle", "rectify-only" or "full pipeline"
    std::string mode;
    Ordering ordering;
    bool verified = false;
    bool fallback_used = false;
    /// Attempts made by the constructive path before success or fallback.
    std::size_t attempts = 0;
    /// Full JSON document, the certificate included.
    json doc;

    std::uint64_t hash() const { return determinism_hash(doc); }
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct AttemptResult
{
    std::string mode;
    Ordering ordering;
};

/// One constructive attempt in rescaled coordinates, mapped back to A at the end.
inline AttemptResult attempt_once(const GroupSpec& g, std::span<const Elem> a, const PipelineConfig& cfg, Rng& rng,
                                  json& out, json& timings)
{
    auto t = Clock::now();
    const Decomposition d = structure_decompose(g, a, cfg.decompose, rng);
    timings["decompose"] = seconds_since(t);
    json dj = decomposition_to_json(g, d);
    dj.erase("group");
    dj.erase("schema");
    out["decomposition"] = dj;
    if (d.h_delegated)
        throw InvalidInput("x-components all zero; handled by the H oracle");

    Ordering seq;
    AttemptResult res;
    t = Clock::now();
    if (d.s() == 0) {
        const double bound = interval_bound(g, cfg.decompose.remainder_denominator, std::max<std::size_t>(d.E.size(), 1));
        out["esplit"] = esplit_sizes(split_E(g, d.E, bound));
        const EOrderResult eo = order_E(g, d.E, g.identity(), bound, YFamily{}, true);
        out["e_order"] = e_order_to_json(g, eo);
        seq = eo.e_sequence();
        res.mode = "rectify-only";
        timings["e_order"] = seconds_since(t);
    } else {
        const Elem delta = *d.delta;
        std::size_t min_block = d.blocks.front().size();
        for (const Block& b : d.blocks)
            min_block = std::min(min_block, b.size());
        const std::size_t k = cfg.blocks.k.value(d.R, min_block);
        const YFamily y = build_Y_sets(g, d.blocks.front(), d.blocks.back(), delta, k);
        const double bound = interval_bound(g, cfg.decompose.interval_denominator, d.E.size() + 1);
        out["esplit"] = esplit_sizes(split_E(g, d.E, bound));
        const EOrderResult eo = order_E(g, d.E, delta, bound, y, false);
        out["e_order"] = e_order_to_json(g, eo);
        timings["e_order"] = seconds_since(t);

        Ordering x1, x2;
        if (eo.with_s) {
            x2 = eo.x;
        } else {
            x1 = eo.z;
            x1.insert(x1.end(), eo.p.rbegin(), eo.p.rend());
            x2 = eo.n;
        }
        t = Clock::now();
        const BlockOrderResult bo = order_blocks(g, d.blocks, x1, x2, d.R, cfg.blocks, rng);
        timings["block_order"] = seconds_since(t);
        out["block_order"] = block_order_to_json(g, bo);
        seq = bo.sequence;
        res.mode = "full pipeline";
    }
    res.ordering = apply_scaling(g, seq, mod_inverse(d.lambda, g.p()));
    return res;
}

} // namespace detail

/// Sequence A: H oracle when every x is zero, otherwise decomposition and the constructive orderings,
/// retried with derived seeds; the oracle is the last resort when enabled. Always verified.
inline PipelineReport cmd_sequence(const GroupSpec& g, std::span<const Elem> a, const PipelineConfig& cfg)
{
    cfg.validate();
    const auto t0 = detail::Clock::now();
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
    PipelineReport rep;
    json timings = json::object();
    json attempts = json::array();
    json last_stage;
    const bool h_only = std::all_of(a.begin(), a.end(), [](const Elem& e) { return e.x == 0; });

    if (!h_only) {
        for (std::size_t i = 0; i < cfg.retries; ++i) {
            Rng rng(derive_seed(cfg.seed, i));
            json stage = json::object();
            json at = json::object();
            ++rep.attempts;
            try {
                auto res = detail::attempt_once(g, a, cfg, rng, stage, at);
                if (is_sequencing(g, res.ordering) && res.ordering.size() == a.size()) {
                    rep.mode = res.mode;
                    rep.ordering = std::move(res.ordering);
                    last_stage = std::move(stage);
                    timings["attempt_" + std::to_string(i)] = at;
                    attempts.push_back({{"attempt", i}, {"outcome", "verified"}});
                    break;
                }
                attempts.push_back({{"attempt", i}, {"outcome", "constructed ordering failed verification"}});
            } catch (const CapExceeded& e) {
                attempts.push_back({{"attempt", i}, {"outcome", e.what()}});
                break;
            } catch (const Error& e) {
                attempts.push_back({{"attempt", i}, {"outcome", e.what()}});
                // with no blocks nothing below depends on the seed
                if (stage.contains("decomposition") && stage["decomposition"].value("s", 1) == 0)
                    break;
                if (dynamic_cast<const DecompositionFailure*>(&e) &&
                    static_cast<const DecompositionFailure&>(e).stage() == "rectify")
                    break;
            }
            timings["attempt_" + std::to_string(i)] = at;
        }
    }

    if (rep.mode.empty()) {
        if (!h_only && !cfg.fallback)
            throw RetriesExhausted("constructive path failed after " + std::to_string(rep.attempts) + " attempts");
        if (a.size() > cfg.oracle_cap)
            throw RetriesExhausted("constructive path failed and |A| exceeds the oracle cap");
        const auto t = detail::Clock::now();
        auto o = brute_sequencing(g, a, cfg.oracle_cap);
        timings["oracle"] = detail::seconds_since(t);
        if (!o)
            throw NotSequenceable("the oracle found no sequencing of A");
        rep.mode = "oracle";
        rep.fallback_used = !h_only;
        rep.ordering = std::move(*o);
    }
    rep.verified = is_sequencing(g, rep.ordering);
    if (!rep.verified)
        throw LemmaViolation("emitted ordering failed verification");

    timings["total"] = detail::seconds_since(t0);
    std::vector<Elem> input(a.begin(), a.end());
    std::sort(input.begin(), input.end());
    rep.doc = {{"schema", kReportSchema},
               {"command", "sequence"},
               {"group", group_to_json(g)},
               {"seed", cfg.seed},
               {"input", elems_to_json(g, input)},
               {"mode", rep.mode},
               {"fallback_used", rep.fallback_used},
               {"attempts", attempts},
               {"retries_used", rep.attempts == 0 ? 0 : rep.attempts - 1},
               {"stages", last_stage.is_null() ? json::object() : last_stage},
               {"ordering", elems_to_json(g, rep.ordering)},
               {"certificate", certificate_to_json(g, rep.ordering)},
               {"verified", rep.verified},
               {"timings", timings}};
    return rep;
}

/// The decomposition of A with its invariant check, as a JSON document.
inline json cmd_decompose(const GroupSpec& g, std::span<const Elem> a, const PipelineConfig& cfg)
{
    cfg.validate();
    Rng rng(derive_seed(cfg.seed, 0));
    const auto t0 = detail::Clock::now();
    const Decomposition d = structure_decompose(g, a, cfg.decompose, rng);
    json j = decomposition_to_json(g, d);
    j["command"] = "decompose";
    j["seed"] = cfg.seed;
    j["violations"] = check_decomposition(g, a, d, cfg.decompose);
    j["timings"] = {{"total", detail::seconds_since(t0)}};
    return j;
}

} // namespace gseq
