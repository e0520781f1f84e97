#pragma once

#include "gseq/block_order.hpp"
#include "gseq/decompose.hpp"
#include "gseq/e_order.hpp"
#include "gseq/errors.hpp"
#include "gseq/group.hpp"
#include "gseq/oracle.hpp"
#include "gseq/sequencing.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <unordered_map>
#include <string>
#include <vector>

namespace gseq {

using json = nlohmann::json;

inline constexpr const char* kGroupSchema = "gseq.group/1";
inline constexpr const char* kSetSchema = "gseq.set/1";
inline constexpr const char* kCertificateSchema = "gseq.certificate/1";
inline constexpr const char* kReportSchema = "gseq.report/1";
inline constexpr const char* kDecompositionSchema = "gseq.decomposition/1";
inline constexpr const char* kScanSchema = "gseq.scan/1";

class SchemaError : public InvalidInput
{
public:
    using InvalidInput::InvalidInput;
};

namespace detail {

inline const json& field(const json& j, const char* key, const std::string& where)
{
    if (!j.is_object())
        throw SchemaError(where + ": expected an object");
    auto it = j.find(key);
    if (it == j.end())
        throw SchemaError(where + ": missing field \"" + key + "\"");
    return *it;
}

template <class T>
T field_as(const json& j, const char* key, const std::string& where)
{
    const json& v = field(j, key, where);
    try {
        return v.get<T>();
    } catch (const json::exception& e) {
        throw SchemaError(where + "." + key + ": " + e.what());
    }
}

} // namespace detail

/// Parse JSON text; syntax errors carry the line and column.
inline json parse_json(const std::string& text, const std::string& source)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw SchemaError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
    }
}

inline json read_json_file(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw InvalidInput("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_json(ss.str(), path);
}

inline void write_json_file(const std::string& path, const json& j)
{
    std::ofstream f(path);
    if (!f)
        throw InvalidInput("cannot write " + path);
    f << j.dump(2) << '\n';
}

inline json group_to_json(const GroupSpec& g)
{
    return {{"schema", kGroupSchema}, {"p", g.p()}, {"h_orders", g.h_orders()}, {"phi_signs", g.phi_signs()}};
}

/// Accepts {"p", "h_orders", "phi_signs"} or the shorthand {"type": "cyclic" | "dihedral", "p"}.
inline GroupSpec group_from_json(const json& j, const std::string& where = "group")
{
    const auto p = detail::field_as<std::int64_t>(j, "p", where);
    if (j.contains("type")) {
        const auto t = detail::field_as<std::string>(j, "type", where);
        if (t == "cyclic")
            return GroupSpec::cyclic(p);
        if (t == "dihedral")
            return GroupSpec::dihedral(p);
        throw SchemaError(where + ".type: unknown group type \"" + t + "\"");
    }
    return GroupSpec(p, detail::field_as<std::vector<int>>(j, "h_orders", where),
                     detail::field_as<std::vector<int>>(j, "phi_signs", where));
}

/// An element is {"x": int, "a": [int]}. On input [x, h] (h the mixed-radix H index) and a bare x
/// are also accepted.
inline json elem_to_json(const GroupSpec& g, const Elem& e)
{
    return {{"x", e.x}, {"a", g.h_components(e.h)}};
}

inline Elem elem_from_json(const GroupSpec& g, const json& j, const std::string& where)
{
    if (j.is_number_integer())
        return g.elem(j.get<std::int64_t>(), 0);
    if (j.is_object()) {
        const json& x = detail::field(j, "x", where);
        if (!x.is_number_integer())
            throw SchemaError(where + ".x: expected an integer");
        std::vector<int> a;
        if (j.contains("a")) {
            if (!j["a"].is_array())
                throw SchemaError(where + ".a: expected an array of integers");
            for (const auto& c : j["a"]) {
                if (!c.is_number_integer())
                    throw SchemaError(where + ".a: expected an array of integers");
                a.push_back(c.get<int>());
            }
        } else {
            a.assign(g.h_orders().size(), 0);
        }
        if (a.size() != g.h_orders().size())
            throw SchemaError(where + ".a: expected " + std::to_string(g.h_orders().size()) + " components");
        return g.elem(x.get<std::int64_t>(), a);
    }
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
        throw SchemaError(where + ": expected {\"x\", \"a\"}");
    const auto h = j[1].get<std::int64_t>();
    if (h < 0 || h >= static_cast<std::int64_t>(g.h_size()))
        throw SchemaError(where + ": H index out of range");
    return g.elem(j[0].get<std::int64_t>(), static_cast<std::uint32_t>(h));
}

inline json elems_to_json(const GroupSpec& g, std::span<const Elem> v)
{
    json a = json::array();
    for (const Elem& e : v)
        a.push_back(elem_to_json(g, e));
    return a;
}

inline std::vector<Elem> elems_from_json(const GroupSpec& g, const json& j, const std::string& where)
{
    if (!j.is_array())
        throw SchemaError(where + ": expected an array of elements");
    std::vector<Elem> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(elem_from_json(g, j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

/// A set file is either a bare array of elements or {"schema", "elements"}.
inline std::vector<Elem> set_from_json(const GroupSpec& g, const json& j, const std::string& where = "set")
{
    if (j.is_array())
        return elems_from_json(g, j, where);
    return elems_from_json(g, detail::field(j, "elements", where), where + ".elements");
}

inline json set_to_json(const GroupSpec& g, std::span<const Elem> v)
{
    return {{"schema", kSetSchema}, {"elements", elems_to_json(g, v)}};
}

inline json certificate_to_json(const GroupSpec& g, std::span<const Elem> ordering)
{
    return {{"schema", kCertificateSchema},
            {"group", group_to_json(g)},
            {"ordering", elems_to_json(g, ordering)},
            {"partial_products", elems_to_json(g, partial_products(g, ordering))}};
}

struct VerifyResult
{
    bool ok = false;
    std::string message;
    /// 0-based positions involved in the first defect found.
    std::vector<std::size_t> positions;
};

/// Replays a certificate: the recorded partial products must match the ordering, and the ordering must be a sequencing.
/// A report is accepted too; its "certificate" field is used.
inline VerifyResult verify_certificate(const json& doc)
{
    const json& c = doc.contains("certificate") ? doc.at("certificate") : doc;
    const GroupSpec g = group_from_json(detail::field(c, "group", "certificate"), "certificate.group");
    const auto ord = elems_from_json(g, detail::field(c, "ordering", "certificate"), "certificate.ordering");
    VerifyResult r;
    if (c.contains("partial_products")) {
        const auto rec = elems_from_json(g, c.at("partial_products"), "certificate.partial_products");
        const auto real = partial_products(g, ord);
        if (rec.size() != real.size()) {
            r.message = "partial product count does not match the ordering";
            return r;
        }
        // collisions inside the recorded trace first, then agreement with the ordering
        std::unordered_map<Elem, std::size_t, ElemHash> seen;
        for (std::size_t i = 0; i < rec.size(); ++i)
            if (auto [it, fresh] = seen.emplace(rec[i], i); !fresh) {
                r.message = "partial products " + std::to_string(it->second) + " and " + std::to_string(i) + " collide";
                r.positions = {it->second, i};
                return r;
            }
        for (std::size_t i = 0; i < real.size(); ++i)
            if (!(rec[i] == real[i])) {
                r.message = "recorded partial product " + std::to_string(i) + " does not match the ordering";
                r.positions = {i};
                return r;
            }
    }
    if (auto d = find_defect(g, ord, true)) {
        switch (d->kind) {
        case SequencingDefect::Kind::Duplicate:
            r.message = "element " + std::to_string(d->first) + " repeats an earlier element";
            break;
        case SequencingDefect::Kind::Collision:
            r.message = "partial products " + std::to_string(d->first) + " and " + std::to_string(d->second) + " collide";
            break;
        case SequencingDefect::Kind::EarlyIdentity:
            r.message = "partial product " + std::to_string(d->first) + " is the identity";
            break;
        case SequencingDefect::Kind::InvalidElement:
            r.message = "element " + std::to_string(d->first) + " is not in the group";
            break;
        }
        r.positions = {d->first, d->second};
        return r;
    }
    r.ok = true;
    r.message = "sequencing of " + std::to_string(ord.size()) + " elements";
    return r;
}

inline json block_to_json(const GroupSpec& g, const Block& b)
{
    json j{{"label", to_string(b.label)}, {"size", b.size()}, {"source", b.source}, {"piece", b.piece}};
    if (b.label == Label::L1) {
        j["odd"] = elems_to_json(g, b.odd);
        j["even"] = elems_to_json(g, b.even);
    } else {
        j["members"] = elems_to_json(g, b.members);
    }
    return j;
}

inline json decomposition_to_json(const GroupSpec& g, const Decomposition& d)
{
    json blocks = json::array();
    for (const Block& b : d.blocks)
        blocks.push_back(block_to_json(g, b));
    return {{"schema", kDecompositionSchema},
            {"group", group_to_json(g)},
            {"lambda", d.lambda},
            {"R", d.R},
            {"s", d.s()},
            {"E", elems_to_json(g, d.E)},
            {"blocks", blocks},
            {"delta", d.delta ? elem_to_json(g, *d.delta) : json(nullptr)},
            {"h_delegated", d.h_delegated},
            {"extraction_blocked", d.extraction_blocked},
            {"remark_applied", d.remark_applied},
            {"quarter_split", d.quarter_split},
            {"log", d.log}};
}

inline json is_audit_to_json(const std::vector<ISAudit>& v)
{
    json a = json::array();
    for (const ISAudit& x : v)
        a.push_back({{"j", x.j}, {"count", x.count}, {"bound", x.bound}, {"best_L", x.best_L},
                     {"bound_at_sqrt", x.bound_at_sqrt}, {"ok", x.ok}});
    return a;
}

inline json e_order_to_json(const GroupSpec& g, const EOrderResult& r)
{
    std::size_t skips = 0;
    json steps = json::array();
    for (const EStep& s : r.steps) {
        skips += s.skip ? 1 : 0;
        steps.push_back({{"k", s.k}, {"class", std::string(1, s.cls)}, {"mode", s.skip ? "skip" : "i-step"},
                         {"i", s.i}, {"chosen", elem_to_json(g, s.chosen)}});
    }
    return {{"with_s", r.with_s},
            {"virtual_delta", r.virtual_delta},
            {"skip_steps", skips},
            {"i_steps", r.steps.size() - skips},
            {"steps", steps},
            {"audit", is_audit_to_json(r.audit)},
            {"audit_prime", is_audit_to_json(r.audit_prime)},
            {"monotone", r.monotone},
            {"nu_consistent", r.nu_consistent},
            {"repaired", r.repaired}};
}

inline json esplit_sizes(const ESplit& s)
{
    return {{"P", s.P.size()}, {"N", s.N.size()}, {"Z", s.Z.size()},
            {"S", s.S.size()}, {"S_e", s.S_e.size()}, {"S_o", s.S_o.size()}};
}

inline json block_order_to_json(const GroupSpec& g, const BlockOrderResult& r)
{
    json quarters = json::array();
    for (const Quarter& q : r.plan.T)
        quarters.push_back({{"source", q.source}, {"quarter", q.quarter}, {"label", to_string(q.block.label)},
                            {"size", q.block.size()}, {"tau", elem_to_json(g, q.tau)}});
    json markov = json::array();
    for (const MarkovAudit& m : r.markov)
        markov.push_back({{"h", m.h}, {"j", m.j}, {"lhs", m.lhs}, {"rhs", m.rhs}, {"ok", m.ok}});
    return {{"K", r.K},
            {"quarters", quarters},
            {"interval_violations", r.conditions.violations},
            {"markov", markov},
            {"stats",
             {{"plans_tried", r.stats.plans_tried},
              {"orderings_tried", r.stats.orderings_tried},
              {"verification_failures", r.stats.verification_failures},
              {"condition_rejections", r.stats.condition_rejections},
              {"markov_rejections", r.stats.markov_rejections},
              {"conditions_met", r.stats.conditions_met},
              {"conditions_unattainable", r.stats.conditions_unattainable},
              {"fault_injected", r.stats.fault_injected}}}};
}

inline json scan_to_json(const GroupSpec& g, const ScanReport& r)
{
    const auto universe = nonidentity_elements(g);
    json fails = json::array();
    for (std::uint64_t m : r.failures)
        fails.push_back(elems_to_json(g, subset_of_mask(universe, m)));
    return {{"schema", kScanSchema},
            {"group", group_to_json(g)},
            {"min_size", r.min_size},
            {"max_size", r.max_size},
            {"checked", r.checked},
            {"sequenceable", r.sequenceable},
            {"failures", fails},
            {"checked_by_size", r.checked_by_size},
            {"sequenceable_by_size", r.sequenceable_by_size},
            {"complete", r.complete},
            {"timings", {{"wall_seconds", r.wall_seconds}}}};
}

/// FNV-1a over the compact dump of `j` with every "timings" field removed.
inline std::uint64_t determinism_hash(json j)
{
    auto strip = [](auto&& self, json& v) -> void {
        if (v.is_object()) {
            v.erase("timings");
            for (auto& [k, x] : v.items())
                self(self, x);
        } else if (v.is_array()) {
            for (auto& x : v)
                self(self, x);
        }
    };
    strip(strip, j);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    static const char* d = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4)
        s[static_cast<std::size_t>(i)] = d[v & 15];
    return s;
}

} // namespace gseq
