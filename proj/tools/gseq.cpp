// Command-line front end: sequence, verify, scan, decompose.

#include "gseq/gseq.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct Options
{
    std::string group_path;
    std::string set_path;
    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 0;
    std::optional<double> c1, c2;
    std::optional<std::size_t> force_r, force_k, retries;
    std::string window;
    bool no_fallback = false;
};

void add_pipeline_options(CLI::App* cmd, Options& o)
{
    cmd->add_option("--group", o.group_path, "group JSON")->required();
    cmd->add_option("--set", o.set_path, "set JSON")->required();
    cmd->add_option("--seed", o.seed, "RNG seed")->required();
    cmd->add_option("--config", o.config_path, "config JSON (default: $GSEQ_CONFIG)");
    cmd->add_option("--c1", o.c1, "constant in R");
    cmd->add_option("--c2", o.c2, "constant in K");
    cmd->add_option("--force-R", o.force_r, "use this R");
    cmd->add_option("--force-K", o.force_k, "use this K");
    cmd->add_option("--window", o.window, "block size window lo,hi");
    cmd->add_option("--retries", o.retries, "constructive attempts");
    cmd->add_flag("--no-fallback", o.no_fallback, "never fall back to the oracle");
    cmd->add_option("--out", o.out_path, "write the JSON here instead of stdout");
}

/// Config file keys mirror the flags; flags win.
gseq::PipelineConfig make_config(const Options& o)
{
    gseq::PipelineConfig cfg;
    std::string path = o.config_path;
    if (path.empty())
        if (const char* env = std::getenv("GSEQ_CONFIG"))
            path = env;
    if (!path.empty()) {
        const auto j = gseq::read_json_file(path);
        if (j.contains("c1"))
            cfg.decompose.r.c1 = j.at("c1").get<double>();
        if (j.contains("c2"))
            cfg.blocks.k.c2 = j.at("c2").get<double>();
        if (j.contains("force_R"))
            cfg.decompose.r.override_r = j.at("force_R").get<std::size_t>();
        if (j.contains("force_K"))
            cfg.blocks.k.override_k = j.at("force_K").get<std::size_t>();
        if (j.contains("window")) {
            const auto w = j.at("window").get<std::vector<std::size_t>>();
            if (w.size() != 2)
                throw gseq::SchemaError(path + ": window must be [lo, hi]");
            cfg.decompose.window = {w[0], w[1]};
        }
        if (j.contains("retries"))
            cfg.retries = j.at("retries").get<std::size_t>();
        if (j.contains("fallback"))
            cfg.fallback = j.at("fallback").get<bool>();
        if (j.contains("plan_retries"))
            cfg.blocks.plan_retries = j.at("plan_retries").get<std::size_t>();
        if (j.contains("ordering_retries"))
            cfg.blocks.ordering_retries = j.at("ordering_retries").get<std::size_t>();
    }
    cfg.seed = o.seed;
    if (o.c1)
        cfg.decompose.r.c1 = *o.c1;
    if (o.c2)
        cfg.blocks.k.c2 = *o.c2;
    if (o.force_r)
        cfg.decompose.r.override_r = *o.force_r;
    if (o.force_k)
        cfg.blocks.k.override_k = *o.force_k;
    if (o.retries)
        cfg.retries = *o.retries;
    if (!o.window.empty()) {
        const auto comma = o.window.find(',');
        if (comma == std::string::npos)
            throw gseq::InvalidInput("--window expects lo,hi");
        cfg.decompose.window = {std::stoul(o.window.substr(0, comma)), std::stoul(o.window.substr(comma + 1))};
    }
    if (o.no_fallback)
        cfg.fallback = false;
    return cfg;
}

void emit(const gseq::json& j, const std::string& out)
{
    if (out.empty())
        std::cout << j.dump(2) << '\n';
    else
        gseq::write_json_file(out, j);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"sequencings of subsets of Z_p x| H"};
    app.require_subcommand(1);

    Options seq_opts, dec_opts;
    auto* seq = app.add_subcommand("sequence", "find and verify a sequencing");
    add_pipeline_options(seq, seq_opts);
    auto* dec = app.add_subcommand("decompose", "dump the block decomposition");
    add_pipeline_options(dec, dec_opts);

    std::string cert_path;
    auto* ver = app.add_subcommand("verify", "replay a certificate or report");
    ver->add_option("--cert", cert_path, "certificate JSON")->required();

    std::string scan_group, scan_out, scan_csv_path, scan_ckpt;
    std::size_t max_size = 0, shards = 1;
    std::uint64_t budget = 5'000'000;
    auto* scan = app.add_subcommand("scan", "exhaustive scan of small subsets");
    scan->add_option("--group", scan_group, "group JSON")->required();
    scan->add_option("--max-size", max_size, "largest subset size")->required();
    scan->add_option("--shards", shards, "parallel shards");
    scan->add_option("--checkpoint", scan_ckpt, "checkpoint directory");
    scan->add_option("--budget", budget, "most subsets to check");
    scan->add_option("--csv", scan_csv_path, "per-size CSV output");
    scan->add_option("--out", scan_out, "write the JSON here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*seq) {
            const auto g = gseq::group_from_json(gseq::read_json_file(seq_opts.group_path));
            const auto a = gseq::set_from_json(g, gseq::read_json_file(seq_opts.set_path));
            const auto rep = gseq::cmd_sequence(g, a, make_config(seq_opts));
            auto doc = rep.doc;
            doc["determinism_hash"] = gseq::hex64(rep.hash());
            emit(doc, seq_opts.out_path);
            std::cerr << "mode " << rep.mode << ", verified " << (rep.verified ? "yes" : "no") << ", hash "
                      << gseq::hex64(rep.hash()) << '\n';
            return rep.verified ? 0 : 1;
        }
        if (*dec) {
            const auto g = gseq::group_from_json(gseq::read_json_file(dec_opts.group_path));
            const auto a = gseq::set_from_json(g, gseq::read_json_file(dec_opts.set_path));
            auto doc = gseq::cmd_decompose(g, a, make_config(dec_opts));
            doc["determinism_hash"] = gseq::hex64(gseq::determinism_hash(doc));
            emit(doc, dec_opts.out_path);
            return doc["violations"].empty() ? 0 : 1;
        }
        if (*ver) {
            const auto r = gseq::verify_certificate(gseq::read_json_file(cert_path));
            std::cout << (r.ok ? "valid: " : "invalid: ") << r.message << '\n';
            return r.ok ? 0 : 1;
        }
        if (*scan) {
            const auto g = gseq::group_from_json(gseq::read_json_file(scan_group));
            gseq::ScanOptions so;
            so.shards = shards;
            so.subset_budget = budget;
            so.checkpoint_dir = scan_ckpt;
            gseq::ScanReport r;
            int code = 0;
            try {
                r = gseq::conjecture_scan(g, max_size, so);
            } catch (const gseq::ScanBudgetError& e) {
                std::cerr << e.what() << "; partial report follows\n";
                r = e.partial();
                code = 2;
            }
            emit(gseq::scan_to_json(g, r), scan_out);
            if (!scan_csv_path.empty()) {
                std::ofstream f(scan_csv_path);
                f << gseq::scan_csv(r);
            }
            std::cerr << r.checked << " subsets, " << r.failures.size() << " without a sequencing\n";
            return code;
        }
    } catch (const gseq::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
