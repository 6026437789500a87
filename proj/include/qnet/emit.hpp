#pragma once

#include <string>
#include <vector>

#include "qnet/netharness.hpp"

namespace qnet::emit {

/// Output files all start with a comment line recording the config hash and
/// seed, then a CSV header row.
struct RunContext {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string scenario_name;
    std::string config_path;
    std::vector<std::pair<std::string, std::uint64_t>> emitted;  // (file, fnv1a64)
};

std::uint64_t hash_file_bytes(const std::string& path);
std::uint64_t hash_string(const std::string& text);

/// epoch, t1_ps, t2_ps, t0_ps, link_delay_ps, uncertainty_ps
void write_epoch_csv(RunContext& ctx, const std::string& filename,
                     const netharness::ScenarioReport& report);

/// tau_s, tdev_ps
void write_tdev_csv(RunContext& ctx, const std::string& filename,
                    const std::vector<TdevPoint>& curve);

/// epoch, pairs, qber, rkr_bps, i_ab, chi_ae, delta_fk, delta_i, skr_bps (+counts)
void write_qkd_csv(RunContext& ctx, const std::string& filename,
                   const netharness::ScenarioReport& report);

/// tau_eve_ps, skr_bps, normalized_skr
void write_scan_csv(RunContext& ctx, const std::string& filename,
                    const std::vector<doqkd::ScanPoint>& points);

/// bin_center_ps, count
void write_histogram_csv(RunContext& ctx, const std::string& filename,
                         const coincidence::Histogram& hist);

/// Key symbols as a binary stream: one byte per symbol for D <= 8, else
/// little-endian uint16.
void write_key_file(RunContext& ctx, const std::string& filename,
                    const std::vector<std::uint16_t>& symbols, int dimension_exp);

/// JSON manifest listing the run inputs and every emitted file with its hash.
void write_manifest(RunContext& ctx, const std::string& filename);

}  // namespace qnet::emit
