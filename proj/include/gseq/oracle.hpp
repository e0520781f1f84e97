#pragma once

#include "gseq/backtrack.hpp"
#include "gseq/errors.hpp"
#include "gseq/group.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace gseq {

/// Lexicographically first sequencing of A, candidates tried in (x, h) order with x in [0, p).
/// nullopt iff A has no sequencing.
inline std::optional<Ordering> brute_sequencing(const GroupSpec& g, std::span<const Elem> a, std::size_t cap = 16)
{
    if (a.size() > cap)
        throw CapExceeded("oracle cap " + std::to_string(cap) + " exceeded by |A| = " + std::to_string(a.size()));
    std::vector<Elem> v(a.begin(), a.end());
    std::sort(v.begin(), v.end());
    const auto idx = detail::first_sequencing<Elem>(
        v, g.identity(), [&](const Elem& x, const Elem& y) { return g.mul(x, y); },
        [&](const Elem& x) { return g.key(x); }, [&](const Elem& x) { return g.is_identity(x); });
    if (!idx)
        return std::nullopt;
    Ordering out;
    for (std::size_t i : *idx)
        out.push_back(v[i]);
    return out;
}

/// Non-identity elements of G in (x, h) order; subset masks index into this list.
inline std::vector<Elem> nonidentity_elements(const GroupSpec& g)
{
    std::vector<Elem> out;
    for (std::int64_t x = 0; x < g.p(); ++x)
        for (std::uint32_t h = 0; h < g.h_size(); ++h)
            if (x != 0 || h != 0)
                out.push_back({x, h});
    return out;
}

inline Ordering subset_of_mask(std::span<const Elem> universe, std::uint64_t mask)
{
    Ordering out;
    for (std::size_t i = 0; i < universe.size(); ++i)
        if (mask >> i & 1u)
            out.push_back(universe[i]);
    return out;
}

struct ScanReport
{
    std::int64_t p = 0;
    std::vector<int> h_orders;
    std::vector<int> phi_signs;
    std::size_t min_size = 1;
    std::size_t max_size = 0;
    std::uint64_t checked = 0;
    std::uint64_t sequenceable = 0;
    /// Masks over nonidentity_elements of the subsets with no sequencing, ascending.
    std::vector<std::uint64_t> failures;
    /// checked / sequenceable per subset size, index = size.
    std::vector<std::uint64_t> checked_by_size;
    std::vector<std::uint64_t> sequenceable_by_size;
    bool complete = true;
    double wall_seconds = 0;

    /// Associative merge of shard results.
    void merge(const ScanReport& o)
    {
        checked += o.checked;
        sequenceable += o.sequenceable;
        failures.insert(failures.end(), o.failures.begin(), o.failures.end());
        std::sort(failures.begin(), failures.end());
        if (checked_by_size.size() < o.checked_by_size.size()) {
            checked_by_size.resize(o.checked_by_size.size());
            sequenceable_by_size.resize(o.checked_by_size.size());
        }
        for (std::size_t i = 0; i < o.checked_by_size.size(); ++i) {
            checked_by_size[i] += o.checked_by_size[i];
            sequenceable_by_size[i] += o.sequenceable_by_size[i];
        }
        complete = complete && o.complete;
    }
};

class ScanBudgetError : public BudgetExceeded
{
public:
    ScanBudgetError(const std::string& what, ScanReport partial) : BudgetExceeded(what), partial_(std::move(partial)) {}
    const ScanReport& partial() const noexcept { return partial_; }

private:
    ScanReport partial_;
};

struct ScanOptions
{
    std::size_t shards = 1;
    /// Most subsets checked before giving up with a partial report.
    std::uint64_t subset_budget = 5'000'000;
    /// Directory for per-shard checkpoint files; empty disables checkpointing.
    std::string checkpoint_dir;
    /// Subsets between checkpoint writes.
    std::uint64_t checkpoint_every = 4096;
    std::size_t oracle_cap = 16;
    /// Decides one subset; defaults to brute_sequencing. Must return a verified ordering or nullopt.
    std::function<std::optional<Ordering>(const Ordering&)> decide;
};

namespace detail {

/// Masks over n bits with popcount in [1, k], ascending.
inline std::vector<std::uint64_t> masks_up_to(std::size_t n, std::size_t k)
{
    std::vector<std::uint64_t> out;
    if (k == 0)
        return out;
    const std::uint64_t end = n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n);
    for (std::uint64_t m = 1; m < end; ++m)
        if (static_cast<std::size_t>(std::popcount(m)) <= k)
            out.push_back(m);
    return out;
}

inline std::filesystem::path shard_file(const std::string& dir, std::size_t shard)
{
    return std::filesystem::path(dir) / ("shard_" + std::to_string(shard) + ".json");
}

struct ShardState
{
    std::uint64_t next = 0;
    ScanReport rep;
};

/// Identifies the scan a checkpoint belongs to: group, size bound, shard count and mask count.
inline nlohmann::json scan_identity(const GroupSpec& g, std::size_t max_size, std::size_t shards, std::size_t n_masks)
{
    return {{"p", g.p()}, {"h_orders", g.h_orders()}, {"phi_signs", g.phi_signs()},
            {"max_size", max_size}, {"shards", shards}, {"masks", n_masks}};
}

inline void save_shard(const std::string& dir, std::size_t shard, const nlohmann::json& id, const ShardState& st)
{
    nlohmann::json j{{"schema", "gseq.scan_checkpoint/1"},
                     {"scan", id},
                     {"shard", shard},
                     {"next", st.next},
                     {"checked", st.rep.checked},
                     {"sequenceable", st.rep.sequenceable},
                     {"failures", st.rep.failures},
                     {"checked_by_size", st.rep.checked_by_size},
                     {"sequenceable_by_size", st.rep.sequenceable_by_size}};
    const auto path = shard_file(dir, shard);
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp);
        f << j.dump();
    }
    std::filesystem::rename(tmp, path);
}

inline std::optional<ShardState> load_shard(const std::string& dir, std::size_t shard, const nlohmann::json& id)
{
    const auto path = shard_file(dir, shard);
    if (!std::filesystem::exists(path))
        return std::nullopt;
    std::ifstream f(path);
    const auto j = nlohmann::json::parse(f);
    if (j.at("schema") != "gseq.scan_checkpoint/1" || j.at("shard").get<std::size_t>() != shard || j.at("scan") != id)
        throw InvalidInput("checkpoint " + path.string() + " does not belong to this scan (shard " + std::to_string(shard) + ")");
    ShardState st;
    st.next = j.at("next");
    st.rep.checked = j.at("checked");
    st.rep.sequenceable = j.at("sequenceable");
    st.rep.failures = j.at("failures").get<std::vector<std::uint64_t>>();
    st.rep.checked_by_size = j.at("checked_by_size").get<std::vector<std::uint64_t>>();
    st.rep.sequenceable_by_size = j.at("sequenceable_by_size").get<std::vector<std::uint64_t>>();
    return st;
}

} // namespace detail

/// Every nonempty subset of G \ {id} with at most max_size elements, decided by the oracle.
/// Shard s handles positions s, s + shards, ... of the ascending mask list.
inline ScanReport conjecture_scan(const GroupSpec& g, std::size_t max_size, const ScanOptions& opts = {})
{
    const auto t0 = std::chrono::steady_clock::now();
    ScanReport total;
    total.p = g.p();
    total.h_orders = g.h_orders();
    total.phi_signs = g.phi_signs();
    total.max_size = max_size;
    const auto universe = nonidentity_elements(g);
    max_size = std::min(max_size, universe.size());
    if (max_size > 0 && universe.size() > 40)
        throw CapExceeded("group too large for an exhaustive scan");
    std::vector<std::uint64_t> masks = detail::masks_up_to(universe.size(), max_size);
    const bool truncated = masks.size() > opts.subset_budget;
    if (truncated)
        masks.resize(opts.subset_budget);

    const std::size_t shards = std::max<std::size_t>(1, opts.shards);
    auto decide = opts.decide ? opts.decide : [&](const Ordering& a) { return brute_sequencing(g, a, opts.oracle_cap); };

    const nlohmann::json id = detail::scan_identity(g, max_size, shards, masks.size());
    auto run_shard = [&](std::size_t s) {
        detail::ShardState st;
        if (!opts.checkpoint_dir.empty())
            if (auto loaded = detail::load_shard(opts.checkpoint_dir, s, id))
                st = std::move(*loaded);
        st.rep.checked_by_size.resize(max_size + 1);
        st.rep.sequenceable_by_size.resize(max_size + 1);
        std::uint64_t since = 0;
        for (std::uint64_t i = st.next * shards + s; i < masks.size(); i += shards) {
            const std::uint64_t m = masks[i];
            const auto sz = static_cast<std::size_t>(std::popcount(m));
            const auto ord = decide(subset_of_mask(universe, m));
            ++st.rep.checked;
            ++st.rep.checked_by_size[sz];
            if (ord) {
                ++st.rep.sequenceable;
                ++st.rep.sequenceable_by_size[sz];
            } else {
                st.rep.failures.push_back(m);
            }
            ++st.next;
            if (!opts.checkpoint_dir.empty() && ++since >= opts.checkpoint_every) {
                detail::save_shard(opts.checkpoint_dir, s, id, st);
                since = 0;
            }
        }
        if (!opts.checkpoint_dir.empty())
            detail::save_shard(opts.checkpoint_dir, s, id, st);
        return st.rep;
    };

    if (!opts.checkpoint_dir.empty())
        std::filesystem::create_directories(opts.checkpoint_dir);
    std::vector<std::future<ScanReport>> futs;
    for (std::size_t s = 1; s < shards; ++s)
        futs.push_back(std::async(std::launch::async, run_shard, s));
    total.checked_by_size.assign(max_size + 1, 0);
    total.sequenceable_by_size.assign(max_size + 1, 0);
    total.merge(run_shard(0));
    for (auto& f : futs)
        total.merge(f.get());
    total.complete = !truncated;
    total.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (truncated)
        throw ScanBudgetError("subset budget " + std::to_string(opts.subset_budget) + " exhausted", total);
    return total;
}

/// size,checked,sequenceable,failures rows.
inline std::string scan_csv(const ScanReport& r)
{
    std::ostringstream os;
    os << "size,checked,sequenceable,failures\n";
    for (std::size_t s = 1; s < r.checked_by_size.size(); ++s)
        os << s << ',' << r.checked_by_size[s] << ',' << r.sequenceable_by_size[s] << ','
           << r.checked_by_size[s] - r.sequenceable_by_size[s] << '\n';
    return os.str();
}

} // namespace gseq
