#include "qnet/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace qnet::config {

using netharness::QtsMode;
using netharness::ScenarioConfig;
using netharness::TransportKind;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v, int line, const std::string& field) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw ConfigError("invalid numeric value '" + v + "' for " + field, line, field);
    }
}

std::int64_t parse_i64(const std::string& v, int line, const std::string& field) {
    std::int64_t x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw ConfigError("invalid integer value '" + v + "' for " + field, line, field);
    return x;
}

std::uint64_t parse_u64(const std::string& v, int line, const std::string& field) {
    std::uint64_t x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw ConfigError("invalid integer value '" + v + "' for " + field, line, field);
    return x;
}

bool parse_bool(const std::string& v, int line, const std::string& field) {
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    throw ConfigError("invalid boolean value '" + v + "' for " + field, line, field);
}

std::vector<double> parse_list(const std::string& v, int line, const std::string& field) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_double(item, line, field));
    }
    if (out.empty()) throw ConfigError("empty list for " + field, line, field);
    return out;
}

struct GridSpec {
    std::vector<double> dims{6};
    std::vector<double> bins{3};
    std::vector<double> widths;
};

}  // namespace

ScenarioConfig parse_config_text(const std::string& text) {
    ScenarioConfig cfg;
    // Hardware-flavored defaults; presets override.
    for (auto& d : cfg.detectors) d = {0.85, 59.1, 100.0, 20000};

    GridSpec grid;
    bool has_grid = false;

    using Setter = std::function<void(const std::string&, int)>;
    std::map<std::string, Setter> setters;

    auto add = [&](const std::string& key, Setter fn) { setters[key] = std::move(fn); };

    add("run.name", [&](const std::string& v, int) { cfg.name = v; });
    add("run.seed", [&](const std::string& v, int l) { cfg.seed = parse_u64(v, l, "run.seed"); });
    add("run.epoch_seconds",
        [&](const std::string& v, int l) { cfg.epoch_seconds = parse_double(v, l, "run.epoch_seconds"); });
    add("run.duration_seconds", [&](const std::string& v, int l) {
        cfg.duration_seconds = parse_double(v, l, "run.duration_seconds");
    });
    add("run.transport", [&](const std::string& v, int l) {
        if (v == "inproc") cfg.transport = TransportKind::inproc;
        else if (v == "socket") cfg.transport = TransportKind::socket;
        else throw ConfigError("run.transport must be inproc|socket", l, "run.transport");
    });
    add("run.transport_timeout_ms", [&](const std::string& v, int l) {
        cfg.transport_timeout_ms = static_cast<int>(parse_i64(v, l, "run.transport_timeout_ms"));
    });
    add("run.qts", [&](const std::string& v, int l) {
        if (v == "off") cfg.qts = QtsMode::off;
        else if (v == "measure") cfg.qts = QtsMode::measure;
        else if (v == "servo") cfg.qts = QtsMode::servo;
        else throw ConfigError("run.qts must be off|measure|servo", l, "run.qts");
    });
    add("run.servo_gain",
        [&](const std::string& v, int l) { cfg.servo_gain = parse_double(v, l, "run.servo_gain"); });
    add("run.correlation_half_window_ps", [&](const std::string& v, int l) {
        cfg.corr_half_window_ps = parse_i64(v, l, "run.correlation_half_window_ps");
    });
    add("run.correlation_bin_ps",
        [&](const std::string& v, int l) { cfg.corr_bin_ps = parse_i64(v, l, "run.correlation_bin_ps"); });
    add("run.coincidence_window_ps", [&](const std::string& v, int l) {
        cfg.coincidence_window_ps = parse_double(v, l, "run.coincidence_window_ps");
    });
    add("run.record_corrected_times", [&](const std::string& v, int l) {
        cfg.record_corrected_times = parse_bool(v, l, "run.record_corrected_times");
    });
    add("run.record_time_basis", [&](const std::string& v, int l) {
        cfg.record_time_basis = parse_bool(v, l, "run.record_time_basis");
    });
    add("run.record_histograms", [&](const std::string& v, int l) {
        cfg.record_histograms = parse_bool(v, l, "run.record_histograms");
    });

    auto add_source = [&](const std::string& section, photonics::SourceParams* src) {
        add(section + ".pair_rate_hz", [src, section](const std::string& v, int l) {
            src->pair_rate_hz = parse_double(v, l, section + ".pair_rate_hz");
        });
        add(section + ".correlation_sigma_ps", [src, section](const std::string& v, int l) {
            src->correlation_sigma_ps = parse_double(v, l, section + ".correlation_sigma_ps");
        });
    };
    add_source("source.alice", &cfg.source_alice);
    add_source("source.bob", &cfg.source_bob);

    for (int d = 0; d < 6; ++d) {
        const std::string section = "detector.d" + std::to_string(d + 1);
        photonics::DetectorParams* det = &cfg.detectors[d];
        add(section + ".efficiency", [det, section](const std::string& v, int l) {
            det->efficiency = parse_double(v, l, section + ".efficiency");
        });
        add(section + ".jitter_fwhm_ps", [det, section](const std::string& v, int l) {
            det->jitter_fwhm_ps = parse_double(v, l, section + ".jitter_fwhm_ps");
        });
        add(section + ".dark_rate_hz", [det, section](const std::string& v, int l) {
            det->dark_rate_hz = parse_double(v, l, section + ".dark_rate_hz");
        });
        add(section + ".dead_time_ps", [det, section](const std::string& v, int l) {
            det->dead_time_ps = parse_i64(v, l, section + ".dead_time_ps");
        });
    }

    add("fbs.alice_time_fraction", [&](const std::string& v, int l) {
        cfg.fbs_alice_time_fraction = parse_double(v, l, "fbs.alice_time_fraction");
    });
    add("fbs.bob_time_fraction", [&](const std::string& v, int l) {
        cfg.fbs_bob_time_fraction = parse_double(v, l, "fbs.bob_time_fraction");
    });

    auto add_clock = [&](const std::string& section, ClockModel* clk) {
        add(section + ".offset_ps", [clk, section](const std::string& v, int l) {
            clk->offset_ps = parse_double(v, l, section + ".offset_ps");
        });
        add(section + ".drift_ps_per_s", [clk, section](const std::string& v, int l) {
            clk->drift_ps_per_s = parse_double(v, l, section + ".drift_ps_per_s");
        });
        add(section + ".white_sigma_ps", [clk, section](const std::string& v, int l) {
            clk->white_sigma_ps = parse_double(v, l, section + ".white_sigma_ps");
        });
        add(section + ".random_walk_sigma_ps", [clk, section](const std::string& v, int l) {
            clk->random_walk_sigma_ps = parse_double(v, l, section + ".random_walk_sigma_ps");
        });
        add(section + ".seed", [clk, section](const std::string& v, int l) {
            clk->seed = parse_u64(v, l, section + ".seed");
        });
    };
    add_clock("clock.alice", &cfg.clock_alice);
    add_clock("clock.bob", &cfg.clock_bob);

    add("link.base_delay_ps",
        [&](const std::string& v, int l) { cfg.link_base_delay_ps = parse_i64(v, l, "link.base_delay_ps"); });
    add("link.drift_shape", [&](const std::string& v, int l) {
        if (v == "none") cfg.link_drift.shape = channel::DriftShape::none;
        else if (v == "sinusoid") cfg.link_drift.shape = channel::DriftShape::sinusoid;
        else if (v == "random-walk") cfg.link_drift.shape = channel::DriftShape::random_walk;
        else throw ConfigError("link.drift_shape must be none|sinusoid|random-walk", l, "link.drift_shape");
    });
    add("link.drift_amplitude_ps", [&](const std::string& v, int l) {
        cfg.link_drift.amplitude_ps = parse_double(v, l, "link.drift_amplitude_ps");
    });
    add("link.drift_period_s", [&](const std::string& v, int l) {
        cfg.link_drift.period_s = parse_double(v, l, "link.drift_period_s");
    });
    add("link.transmittance", [&](const std::string& v, int l) {
        cfg.link_transmittance = parse_double(v, l, "link.transmittance");
    });
    add("link.residual_broadening_sigma_ps", [&](const std::string& v, int l) {
        cfg.link_residual_broadening_sigma_ps =
            parse_double(v, l, "link.residual_broadening_sigma_ps");
    });
    add("link.modulation_amplitude", [&](const std::string& v, int l) {
        cfg.modulation_amplitude = parse_double(v, l, "link.modulation_amplitude");
    });
    add("link.modulation_period_s", [&](const std::string& v, int l) {
        cfg.modulation_period_s = parse_double(v, l, "link.modulation_period_s");
    });

    add("attack.tau_eve_ps", [&](const std::string& v, int l) {
        const double tau = parse_double(v, l, "attack.tau_eve_ps");
        if (tau > 0.0) {
            if (!cfg.attack) cfg.attack = channel::AttackParams{};
            cfg.attack->tau_eve_ps = tau;
        }
    });
    add("attack.direction", [&](const std::string& v, int l) {
        if (!cfg.attack) cfg.attack = channel::AttackParams{};
        if (v == "forward") cfg.attack->direction = channel::Direction::forward;
        else if (v == "backward") cfg.attack->direction = channel::Direction::backward;
        else throw ConfigError("attack.direction must be forward|backward", l, "attack.direction");
    });
    add("attack.from_epoch", [&](const std::string& v, int l) {
        cfg.attack_from_epoch = static_cast<int>(parse_i64(v, l, "attack.from_epoch"));
    });

    add("encoding.dimension_exp", [&](const std::string& v, int l) {
        cfg.encoding.dimension_exp = static_cast<int>(parse_i64(v, l, "encoding.dimension_exp"));
    });
    add("encoding.bins_per_slot", [&](const std::string& v, int l) {
        cfg.encoding.bins_per_slot = static_cast<int>(parse_i64(v, l, "encoding.bins_per_slot"));
    });
    add("encoding.bin_width_ps", [&](const std::string& v, int l) {
        cfg.encoding.bin_width_ps = parse_i64(v, l, "encoding.bin_width_ps");
    });
    add("encoding.frame_origin_ps", [&](const std::string& v, int l) {
        cfg.encoding.frame_origin_ps = parse_i64(v, l, "encoding.frame_origin_ps");
    });

    add("optimization.dimensions", [&](const std::string& v, int l) {
        grid.dims = parse_list(v, l, "optimization.dimensions");
        has_grid = true;
    });
    add("optimization.bins_per_slot", [&](const std::string& v, int l) {
        grid.bins = parse_list(v, l, "optimization.bins_per_slot");
        has_grid = true;
    });
    add("optimization.bin_widths_ps", [&](const std::string& v, int l) {
        grid.widths = parse_list(v, l, "optimization.bin_widths_ps");
        has_grid = true;
    });
    add("optimization.qber_cap",
        [&](const std::string& v, int l) { cfg.qber_cap = parse_double(v, l, "optimization.qber_cap"); });

    add("security.beta",
        [&](const std::string& v, int l) { cfg.security.beta = parse_double(v, l, "security.beta"); });
    add("security.eps_ver",
        [&](const std::string& v, int l) { cfg.security.eps_ver = parse_double(v, l, "security.eps_ver"); });
    add("security.eps_pa",
        [&](const std::string& v, int l) { cfg.security.eps_pa = parse_double(v, l, "security.eps_pa"); });
    add("security.eps_pe_total", [&](const std::string& v, int l) {
        cfg.security.eps_pe_total = parse_double(v, l, "security.eps_pe_total");
    });
    add("security.eps_bar",
        [&](const std::string& v, int l) { cfg.security.eps_bar = parse_double(v, l, "security.eps_bar"); });
    add("security.key_fraction", [&](const std::string& v, int l) {
        cfg.security.key_fraction = parse_double(v, l, "security.key_fraction");
    });
    add("security.chi_scale", [&](const std::string& v, int l) {
        cfg.security.chi_scale = parse_double(v, l, "security.chi_scale");
    });
    add("security.baseline_fwhm_ps", [&](const std::string& v, int l) {
        cfg.baseline_fwhm_ps = parse_double(v, l, "security.baseline_fwhm_ps");
    });

    std::string section;
    int line_no = 0;
    std::stringstream stream(text);
    std::string raw;
    while (std::getline(stream, raw)) {
        ++line_no;
        std::string line = raw;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("malformed section header", line_no, line);
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value", line_no, line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string full = section.empty() ? key : section + "." + key;
        const auto it = setters.find(full);
        if (it == setters.end())
            throw ConfigError("unknown config key '" + full + "'", line_no, full);
        it->second(value, line_no);
    }

    if (has_grid) {
        if (grid.widths.empty())
            throw ConfigError("optimization grid needs bin_widths_ps", 0, "optimization.bin_widths_ps");
        for (double d : grid.dims)
            for (double i : grid.bins)
                for (double w : grid.widths) {
                    doqkd::EncodingParams enc = cfg.encoding;
                    enc.dimension_exp = static_cast<int>(d);
                    enc.bins_per_slot = static_cast<int>(i);
                    enc.bin_width_ps = static_cast<Instant>(std::llround(w));
                    cfg.optimization_grid.push_back(enc);
                }
    }
    return cfg;
}

ScenarioConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path, 0, path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string render_config(const ScenarioConfig& cfg) {
    std::ostringstream out;
    out.precision(17);
    out << "[run]\n";
    out << "name = " << cfg.name << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "epoch_seconds = " << cfg.epoch_seconds << "\n";
    out << "duration_seconds = " << cfg.duration_seconds << "\n";
    out << "transport = " << (cfg.transport == TransportKind::socket ? "socket" : "inproc") << "\n";
    out << "qts = "
        << (cfg.qts == QtsMode::off ? "off" : cfg.qts == QtsMode::measure ? "measure" : "servo")
        << "\n";
    out << "servo_gain = " << cfg.servo_gain << "\n";
    out << "correlation_half_window_ps = " << cfg.corr_half_window_ps << "\n";
    out << "correlation_bin_ps = " << cfg.corr_bin_ps << "\n";
    out << "coincidence_window_ps = " << cfg.coincidence_window_ps << "\n";
    out << "\n[source.alice]\npair_rate_hz = " << cfg.source_alice.pair_rate_hz
        << "\ncorrelation_sigma_ps = " << cfg.source_alice.correlation_sigma_ps << "\n";
    out << "\n[source.bob]\npair_rate_hz = " << cfg.source_bob.pair_rate_hz
        << "\ncorrelation_sigma_ps = " << cfg.source_bob.correlation_sigma_ps << "\n";
    for (int d = 0; d < 6; ++d) {
        const auto& det = cfg.detectors[d];
        out << "\n[detector.d" << d + 1 << "]\n";
        out << "efficiency = " << det.efficiency << "\n";
        out << "jitter_fwhm_ps = " << det.jitter_fwhm_ps << "\n";
        out << "dark_rate_hz = " << det.dark_rate_hz << "\n";
        out << "dead_time_ps = " << det.dead_time_ps << "\n";
    }
    out << "\n[fbs]\nalice_time_fraction = " << cfg.fbs_alice_time_fraction
        << "\nbob_time_fraction = " << cfg.fbs_bob_time_fraction << "\n";
    auto clock_out = [&](const char* name, const ClockModel& c) {
        out << "\n[" << name << "]\n";
        out << "offset_ps = " << c.offset_ps << "\n";
        out << "drift_ps_per_s = " << c.drift_ps_per_s << "\n";
        out << "white_sigma_ps = " << c.white_sigma_ps << "\n";
        out << "random_walk_sigma_ps = " << c.random_walk_sigma_ps << "\n";
        out << "seed = " << c.seed << "\n";
    };
    clock_out("clock.alice", cfg.clock_alice);
    clock_out("clock.bob", cfg.clock_bob);
    out << "\n[link]\n";
    out << "base_delay_ps = " << cfg.link_base_delay_ps << "\n";
    out << "drift_shape = "
        << (cfg.link_drift.shape == channel::DriftShape::none
                ? "none"
                : cfg.link_drift.shape == channel::DriftShape::sinusoid ? "sinusoid" : "random-walk")
        << "\n";
    out << "drift_amplitude_ps = " << cfg.link_drift.amplitude_ps << "\n";
    out << "drift_period_s = " << cfg.link_drift.period_s << "\n";
    out << "transmittance = " << cfg.link_transmittance << "\n";
    out << "residual_broadening_sigma_ps = " << cfg.link_residual_broadening_sigma_ps << "\n";
    out << "modulation_amplitude = " << cfg.modulation_amplitude << "\n";
    out << "modulation_period_s = " << cfg.modulation_period_s << "\n";
    if (cfg.attack) {
        out << "\n[attack]\n";
        out << "tau_eve_ps = " << cfg.attack->tau_eve_ps << "\n";
        out << "direction = "
            << (cfg.attack->direction == channel::Direction::forward ? "forward" : "backward") << "\n";
        out << "from_epoch = " << cfg.attack_from_epoch << "\n";
    }
    out << "\n[encoding]\n";
    out << "dimension_exp = " << cfg.encoding.dimension_exp << "\n";
    out << "bins_per_slot = " << cfg.encoding.bins_per_slot << "\n";
    out << "bin_width_ps = " << cfg.encoding.bin_width_ps << "\n";
    out << "frame_origin_ps = " << cfg.encoding.frame_origin_ps << "\n";
    out << "\n[security]\n";
    out << "beta = " << cfg.security.beta << "\n";
    out << "eps_ver = " << cfg.security.eps_ver << "\n";
    out << "eps_pa = " << cfg.security.eps_pa << "\n";
    out << "eps_pe_total = " << cfg.security.eps_pe_total << "\n";
    out << "eps_bar = " << cfg.security.eps_bar << "\n";
    out << "key_fraction = " << cfg.security.key_fraction << "\n";
    out << "chi_scale = " << cfg.security.chi_scale << "\n";
    out << "baseline_fwhm_ps = " << cfg.baseline_fwhm_ps << "\n";
    return out.str();
}

}  // namespace qnet::config
