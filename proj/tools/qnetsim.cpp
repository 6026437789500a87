// Scenario runner for the two-node entanglement-multiplexed timing + key
// distribution simulator. Subcommands: twtt, qkd, attack-scan, selftest.

#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qnet/config.hpp"
#include "qnet/emit.hpp"
#include "qnet/netharness.hpp"
#include "qnet/selftest.hpp"

namespace fs = std::filesystem;
using qnet::netharness::ScenarioConfig;
using qnet::netharness::ScenarioReport;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::string out_dir = ".";
    std::int64_t seed = -1;
    bool emit_histograms = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Scenario config file");
    cmd->add_option("--preset", opts.preset, "Named preset (file in the presets directory)");
    cmd->add_option("--seed", opts.seed, "Override the config seed");
    cmd->add_option("--out", opts.out_dir, "Output directory");
    cmd->add_flag("--emit-histograms", opts.emit_histograms,
                  "Also dump the first epoch's coincidence histograms");
}

std::string resolve_preset(const std::string& name, const char* argv0) {
    const std::string file = name + ".cfg";
    std::vector<fs::path> candidates;
    if (const char* env = std::getenv("QNETSIM_PRESET_DIR")) candidates.push_back(fs::path(env) / file);
    candidates.push_back(fs::path("presets") / file);
    const fs::path exe_dir = fs::path(argv0).parent_path();
    candidates.push_back(exe_dir / "presets" / file);
    candidates.push_back(exe_dir / ".." / "presets" / file);
#ifdef QNETSIM_SOURCE_DIR
    candidates.push_back(fs::path(QNETSIM_SOURCE_DIR) / "presets" / file);
#endif
    for (const auto& p : candidates)
        if (fs::exists(p)) return p.string();
    throw qnet::config::ConfigError("preset not found: " + name, 0, "--preset");
}

struct LoadedRun {
    ScenarioConfig cfg;
    qnet::emit::RunContext ctx;
};

LoadedRun load_run(const CommonOpts& opts, const char* argv0) {
    LoadedRun run;
    std::string path = opts.config_path;
    if (path.empty() && !opts.preset.empty()) path = resolve_preset(opts.preset, argv0);
    if (path.empty())
        throw qnet::config::ConfigError("missing --config or --preset", 0, "--config");
    run.cfg = qnet::config::parse_config_file(path);
    if (opts.seed >= 0) run.cfg.seed = static_cast<std::uint64_t>(opts.seed);
    run.cfg.validate();

    run.ctx.config_path = path;
    run.ctx.config_hash = qnet::emit::hash_file_bytes(path) ^ run.cfg.seed;
    run.ctx.seed = run.cfg.seed;
    run.ctx.out_dir = opts.out_dir;
    run.ctx.scenario_name = run.cfg.name;
    fs::create_directories(opts.out_dir);
    return run;
}

void maybe_emit_histograms(qnet::emit::RunContext& ctx, const ScenarioReport& report) {
    if (report.first_epoch_hist_ab.n_bins() > 0)
        qnet::emit::write_histogram_csv(ctx, "hist_ab_epoch0.csv", report.first_epoch_hist_ab);
    if (report.first_epoch_hist_ba.n_bins() > 0)
        qnet::emit::write_histogram_csv(ctx, "hist_ba_epoch0.csv", report.first_epoch_hist_ba);
}

int cmd_twtt(const CommonOpts& opts, const char* argv0) {
    LoadedRun run = load_run(opts, argv0);
    run.cfg.record_histograms = opts.emit_histograms;
    const ScenarioReport report = qnet::netharness::run_scenario(run.cfg);

    qnet::emit::write_epoch_csv(run.ctx, "twtt_epochs.csv", report);
    std::vector<double> offsets;
    for (const auto& e : report.epochs)
        if (e.twtt_valid) offsets.push_back(e.measurement.t0_ps);
    if (offsets.size() >= 3) {
        const auto curve = qnet::tdev_curve(offsets, run.cfg.epoch_seconds);
        qnet::emit::write_tdev_csv(run.ctx, "twtt_tdev.csv", curve);
    }
    maybe_emit_histograms(run.ctx, report);
    qnet::emit::write_manifest(run.ctx, "manifest.json");

    std::cout << "twtt: " << report.epochs.size() << " epochs, report hash " << std::hex
              << report.hash() << std::dec << "\n";
    return kExitOk;
}

int cmd_qkd(const CommonOpts& opts, const char* argv0) {
    LoadedRun run = load_run(opts, argv0);
    run.cfg.record_histograms = opts.emit_histograms;

    if (!run.cfg.optimization_grid.empty()) {
        // Short recorded baseline drives the encoding choice. The scoring uses
        // the two-way-corrected Bob stream, as the key pipeline itself would.
        ScenarioConfig probe = run.cfg;
        probe.record_time_basis = true;
        probe.record_corrected_times = true;
        probe.optimization_grid.clear();
        const ScenarioReport baseline = qnet::netharness::run_scenario(probe);
        double sigma_sum = 0.0;
        int sigma_n = 0;
        for (const auto& e : baseline.epochs)
            if (e.twtt_valid) {
                sigma_sum += e.fit_ab_fwhm_ps / qnet::photonics::kFwhmToSigma;
                ++sigma_n;
            }
        const double measured_sigma = sigma_n > 0 ? sigma_sum / sigma_n : 0.0;
        const qnet::doqkd::BaselineWidths widths{
            run.cfg.baseline_fwhm_ps / qnet::photonics::kFwhmToSigma, measured_sigma};

        const auto result = qnet::doqkd::optimize_encoding(
            run.cfg.optimization_grid, run.cfg.qber_cap, baseline.alice_time_tags,
            baseline.corrected_bob_qkd_times, baseline.total_duration_s, run.cfg.security, widths,
            qnet::mix64(run.cfg.seed ^ 0x5f375a86ull));
        run.cfg.encoding = result.best;
        std::cout << "qkd: optimizer selected D=" << result.best.dimension_exp
                  << " I=" << result.best.bins_per_slot << " tau=" << result.best.bin_width_ps
                  << " ps" << (result.cap_violated ? " (QBER cap violated)" : "") << "\n";
    }

    const ScenarioReport report = qnet::netharness::run_scenario(run.cfg);
    qnet::emit::write_qkd_csv(run.ctx, "qkd_metrics.csv", report);
    qnet::emit::write_key_file(run.ctx, "key.bin", report.key_symbols,
                               run.cfg.encoding.dimension_exp);
    maybe_emit_histograms(run.ctx, report);
    qnet::emit::write_manifest(run.ctx, "manifest.json");

    std::cout << "qkd: pooled SKR " << report.pooled.skr_bps << " bps over "
              << report.total_duration_s << " s, " << report.key_symbols.size()
              << " key symbols\n";
    return kExitOk;
}

int cmd_attack_scan(const CommonOpts& opts, const std::string& tau_list, const std::string& qts,
                    const char* argv0) {
    LoadedRun run = load_run(opts, argv0);

    std::vector<double> taus;
    std::stringstream ss(tau_list);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) taus.push_back(std::stod(item));
    bool has_zero = false;
    for (double t : taus) has_zero = has_zero || t == 0.0;
    if (taus.empty() || !has_zero)
        throw qnet::config::ConfigError("tau list must include the 0 normalization anchor", 0,
                                        "--tau-list");
    if (qts != "on" && qts != "off")
        throw qnet::config::ConfigError("--qts must be on or off", 0, "--qts");

    const auto points = qnet::netharness::attack_scan(run.cfg, taus, qts == "on");
    qnet::emit::write_scan_csv(run.ctx, "attack_scan.csv", points);
    qnet::emit::write_manifest(run.ctx, "manifest.json");

    for (const auto& p : points)
        std::cout << "tau_eve " << p.tau_eve_ps << " ps: normalized SKR " << p.normalized_skr
                  << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-node quantum time-transfer + DO-QKD scenario simulator"};
    app.require_subcommand(1);

    CommonOpts twtt_opts, qkd_opts, scan_opts;
    std::string tau_list = "0,10,20,30,40,50,60,70,80,90,100,110,120";
    std::string qts = "on";

    CLI::App* twtt = app.add_subcommand("twtt", "Run a timing-only scenario; emit epoch + TDEV CSVs");
    add_common(twtt, twtt_opts);
    CLI::App* qkd = app.add_subcommand("qkd", "Run the key pipeline; emit metrics CSV + key file");
    add_common(qkd, qkd_opts);
    CLI::App* scan = app.add_subcommand("attack-scan", "Normalized SKR vs attack delay");
    add_common(scan, scan_opts);
    scan->add_option("--tau-list", tau_list, "Comma-separated attack delays in ps (must include 0)");
    scan->add_option("--qts", qts, "on|off: run with or without timing correction");
    CLI::App* selftest = app.add_subcommand("selftest", "Run the built-in oracle suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (twtt->parsed()) return cmd_twtt(twtt_opts, argv[0]);
        if (qkd->parsed()) return cmd_qkd(qkd_opts, argv[0]);
        if (scan->parsed()) return cmd_attack_scan(scan_opts, tau_list, qts, argv[0]);
        if (selftest->parsed())
            return qnet::selftest::run_selftest(std::cout) ? kExitOk : kExitRuntime;
    } catch (const qnet::config::ConfigError& e) {
        std::cerr << "config error";
        if (e.line > 0) std::cerr << " (line " << e.line << ")";
        std::cerr << ": " << e.what() << " [field: " << e.field << "]\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
