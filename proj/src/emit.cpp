#include "qnet/emit.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace qnet::emit {

namespace {

std::string comment_line(const RunContext& ctx) {
    std::ostringstream os;
    os << "# config_hash=" << std::hex << std::setw(16) << std::setfill('0') << ctx.config_hash
       << std::dec << " seed=" << ctx.seed << "\n";
    return os.str();
}

void finish_file(RunContext& ctx, const std::string& filename, const std::string& content) {
    const std::string path = ctx.out_dir.empty() ? filename : ctx.out_dir + "/" + filename;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    out.close();
    ctx.emitted.emplace_back(filename, hash_string(content));
}

}  // namespace

std::uint64_t hash_string(const std::string& text) {
    return netharness::fnv1a64(text.data(), text.size());
}

std::uint64_t hash_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return hash_string(ss.str());
}

void write_epoch_csv(RunContext& ctx, const std::string& filename,
                     const netharness::ScenarioReport& report) {
    std::ostringstream os;
    os.precision(12);
    os << comment_line(ctx);
    os << "epoch,t1_ps,t2_ps,t0_ps,link_delay_ps,uncertainty_ps,valid\n";
    for (const auto& e : report.epochs) {
        os << e.epoch_index << "," << e.measurement.t1_ps << "," << e.measurement.t2_ps << ","
           << e.measurement.t0_ps << "," << e.measurement.link_delay_ps << ","
           << e.measurement.t0_uncertainty_ps << "," << (e.twtt_valid ? 1 : 0) << "\n";
    }
    finish_file(ctx, filename, os.str());
}

void write_tdev_csv(RunContext& ctx, const std::string& filename,
                    const std::vector<TdevPoint>& curve) {
    std::ostringstream os;
    os.precision(12);
    os << comment_line(ctx);
    os << "tau_s,tdev_ps\n";
    for (const auto& p : curve) os << p.tau_s << "," << p.tdev_ps << "\n";
    finish_file(ctx, filename, os.str());
}

void write_qkd_csv(RunContext& ctx, const std::string& filename,
                   const netharness::ScenarioReport& report) {
    std::ostringstream os;
    os.precision(12);
    os << comment_line(ctx);
    os << "epoch,pairs,qber,rkr_bps,i_ab,chi_ae,delta_fk,delta_i,skr_bps,bob_singles_hz\n";
    for (const auto& e : report.epochs) {
        os << e.epoch_index << "," << e.pairs << "," << e.qber << "," << e.rkr_bps << ","
           << e.security.i_ab << "," << e.security.chi_ae << "," << e.security.delta_fk << ","
           << e.security.delta_i << "," << e.security.skr_bps << "," << e.bob_time_singles_hz
           << "\n";
    }
    finish_file(ctx, filename, os.str());
}

void write_scan_csv(RunContext& ctx, const std::string& filename,
                    const std::vector<doqkd::ScanPoint>& points) {
    std::ostringstream os;
    os.precision(12);
    os << comment_line(ctx);
    os << "tau_eve_ps,skr_bps,normalized_skr\n";
    for (const auto& p : points)
        os << p.tau_eve_ps << "," << p.skr_bps << "," << p.normalized_skr << "\n";
    finish_file(ctx, filename, os.str());
}

void write_histogram_csv(RunContext& ctx, const std::string& filename,
                         const coincidence::Histogram& hist) {
    std::ostringstream os;
    os.precision(12);
    os << comment_line(ctx);
    os << "bin_center_ps,count\n";
    for (std::size_t k = 0; k < hist.n_bins(); ++k)
        os << hist.center_of(k) << "," << hist.counts[k] << "\n";
    finish_file(ctx, filename, os.str());
}

void write_key_file(RunContext& ctx, const std::string& filename,
                    const std::vector<std::uint16_t>& symbols, int dimension_exp) {
    std::string bytes;
    if (dimension_exp <= 8) {
        bytes.reserve(symbols.size());
        for (std::uint16_t s : symbols) bytes.push_back(static_cast<char>(s & 0xff));
    } else {
        bytes.reserve(symbols.size() * 2);
        for (std::uint16_t s : symbols) {
            bytes.push_back(static_cast<char>(s & 0xff));
            bytes.push_back(static_cast<char>((s >> 8) & 0xff));
        }
    }
    finish_file(ctx, filename, bytes);
}

void write_manifest(RunContext& ctx, const std::string& filename) {
    nlohmann::json j;
    j["scenario"] = ctx.scenario_name;
    j["config_path"] = ctx.config_path;
    j["config_hash"] = ctx.config_hash;
    j["seed"] = ctx.seed;
    j["out_dir"] = ctx.out_dir;
    nlohmann::json files = nlohmann::json::array();
    for (const auto& [name, hash] : ctx.emitted) {
        nlohmann::json f;
        f["file"] = name;
        f["fnv1a64"] = hash;
        files.push_back(f);
    }
    j["files"] = files;
    finish_file(ctx, filename, j.dump(2) + "\n");
}

}  // namespace qnet::emit
