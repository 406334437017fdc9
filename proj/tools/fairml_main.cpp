// fairml command line: dataset audits, full pipeline runs, method comparison.
// Human-readable output goes to stderr; machine output to files or stdout.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fairml/config.hpp"
#include "fairml/json_writer.hpp"
#include "fairml/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    int max_reprocess = -1;
};

fairml::PipelineConfig resolve_config(const CommonOpts& opts) {
    fairml::PipelineConfig cfg = opts.config_path.empty() ? fairml::diabetes_default_config()
                                                          : fairml::load_config(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.out) cfg.report_path = *opts.out;
    if (opts.max_reprocess >= 0) cfg.max_reprocess = opts.max_reprocess;
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_out = true) {
    cmd->add_option("--config", opts.config_path, "config file (JSON); defaults apply when omitted");
    cmd->add_option("--seed", opts.seed, "override the config seed");
    if (with_out) cmd->add_option("--out", opts.out, "override the report path stem");
}

int cmd_inspect_config(const fairml::PipelineConfig& cfg) {
    std::cout << fairml::config_to_json(cfg).dump(2) << "\n";
    std::cerr << "config ok\n";
    return kExitOk;
}

// Dataset-level audit only: load, encode, report DI per group spec.
int cmd_audit(const fairml::PipelineConfig& cfg) {
    fairml::RecordTable table = fairml::load_csv(cfg.data_path);
    if (cfg.exclude_expired_discharges) table = fairml::drop_expired_discharges(table);
    fairml::EncodedDataset data = fairml::encode_features(table, cfg.encode_config());

    fairml::JsonWriter w;
    w.begin_array();
    for (const auto& spec : cfg.group_specs) {
        int s = data.spec_index(spec.name);
        fairml::FairnessReport fr = fairml::audit(data.y, data.protected_cols[s],
                                                  data.missing_masks[s], spec, cfg.audit_threshold);
        fairml::detail::write_fairness_report(w, fr);
        std::cerr << "audit " << spec.name << ": DI " << fairml::fixed6(fr.di) << ", di_score "
                  << fairml::fixed6(fr.di_score) << ", biased=" << (fr.biased ? "true" : "false")
                  << "\n";
    }
    w.end_array();
    std::cout << std::move(w).take() << "\n";
    return kExitOk;
}

int cmd_run(const fairml::PipelineConfig& cfg, bool compare) {
    fairml::PipelineReport rep = fairml::run(cfg);
    auto written = fairml::render_report(rep, cfg.report_path);
    for (const auto& line : rep.decision_log) std::cerr << line << "\n";
    for (const auto& path : written) std::cerr << "wrote " << path << "\n";
    if (rep.error) {
        std::cerr << "pipeline failed at stage " << rep.error->stage << ": " << rep.error->message
                  << "\n";
        return kExitRuntime;
    }
    if (compare) std::cout << fairml::render_compare_csv(rep);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fairness-auditing classification pipeline"};
    app.require_subcommand(1);

    CommonOpts opts;
    CLI::App* inspect = app.add_subcommand("inspect-config", "validate a config and echo the effective settings");
    add_common(inspect, opts, false);
    CLI::App* audit = app.add_subcommand("audit", "dataset-level disparate impact audit");
    add_common(audit, opts, false);
    CLI::App* runcmd = app.add_subcommand("run", "run the full pipeline and write reports");
    add_common(runcmd, opts);
    runcmd->add_option("--max-reprocess", opts.max_reprocess,
                       "rerun with reweighing forced on when the re-audit fails, at most N times");
    CLI::App* compare = app.add_subcommand("compare", "run with post-processing enabled and emit the comparison CSV");
    add_common(compare, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e); // prints usage/help
        return e.get_name() == "CallForHelp" ? kExitOk : kExitUsage;
    }

    bool full_run = runcmd->parsed() || compare->parsed();
    fairml::PipelineConfig cfg;
    try {
        cfg = resolve_config(opts);
        if (compare->parsed()) cfg.posthoc.enabled = true;
        cfg.validate(full_run);
    } catch (const fairml::Error& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (inspect->parsed()) return cmd_inspect_config(cfg);
        if (audit->parsed()) return cmd_audit(cfg);
        return cmd_run(cfg, compare->parsed());
    } catch (const fairml::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
