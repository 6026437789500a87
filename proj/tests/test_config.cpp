#include <doctest.h>

#include "qnet/config.hpp"

using namespace qnet;
using namespace qnet::config;
using netharness::QtsMode;
using netharness::TransportKind;

TEST_CASE("parse a full config") {
    const std::string text = R"(
# comment
[run]
name = demo
seed = 9
epoch_seconds = 2.5
duration_seconds = 10
transport = socket
qts = measure

[source.alice]
pair_rate_hz = 123456
correlation_sigma_ps = 3.5

[detector.d2]
efficiency = 0.77
jitter_fwhm_ps = 40

[clock.bob]
offset_ps = 42
white_sigma_ps = 11.35

[link]
base_delay_ps = 1000000
drift_shape = sinusoid
drift_amplitude_ps = 160
transmittance = 0.25

[attack]
tau_eve_ps = 60
direction = backward
from_epoch = 3

[encoding]
dimension_exp = 5
bins_per_slot = 2
bin_width_ps = 80

[security]
beta = 0.85
baseline_fwhm_ps = 76
)";
    const auto cfg = parse_config_text(text);
    CHECK(cfg.name == "demo");
    CHECK(cfg.seed == 9);
    CHECK(cfg.epoch_seconds == 2.5);
    CHECK(cfg.transport == TransportKind::socket);
    CHECK(cfg.qts == QtsMode::measure);
    CHECK(cfg.source_alice.pair_rate_hz == 123456);
    CHECK(cfg.detectors[1].efficiency == 0.77);
    CHECK(cfg.detectors[0].efficiency == 0.85);  // untouched default
    CHECK(cfg.clock_bob.offset_ps == 42);
    CHECK(cfg.link_base_delay_ps == 1000000);
    CHECK(cfg.link_drift.shape == channel::DriftShape::sinusoid);
    REQUIRE(cfg.attack.has_value());
    CHECK(cfg.attack->tau_eve_ps == 60);
    CHECK(cfg.attack->direction == channel::Direction::backward);
    CHECK(cfg.attack_from_epoch == 3);
    CHECK(cfg.encoding.dimension_exp == 5);
    CHECK(cfg.security.beta == 0.85);
}

TEST_CASE("unknown keys are hard errors naming field and line") {
    const std::string text = "[run]\nseed = 1\nspeling_mistake = 7\n";
    try {
        parse_config_text(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field == "run.speling_mistake");
        CHECK(e.line == 3);
    }

    CHECK_THROWS_AS(parse_config_text("[nosuchsection]\nx = 1\n"), ConfigError);
}

TEST_CASE("malformed values are rejected with diagnostics") {
    CHECK_THROWS_AS(parse_config_text("[run]\nseed = banana\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[run]\nqts = sideways\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[run]\nno_equals_sign\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[broken\nseed = 1\n"), ConfigError);
}

TEST_CASE("optimization grid expands as a cartesian product") {
    const std::string text = R"(
[optimization]
dimensions = 5,6
bins_per_slot = 3
bin_widths_ps = 80,110
qber_cap = 0.05
)";
    const auto cfg = parse_config_text(text);
    REQUIRE(cfg.optimization_grid.size() == 4);
    CHECK(cfg.optimization_grid[0].dimension_exp == 5);
    CHECK(cfg.optimization_grid[0].bin_width_ps == 80);
    CHECK(cfg.optimization_grid[3].dimension_exp == 6);
    CHECK(cfg.optimization_grid[3].bin_width_ps == 110);
    CHECK(cfg.qber_cap == 0.05);
}

TEST_CASE("render-parse round trip preserves the scenario") {
    netharness::ScenarioConfig cfg;
    cfg.name = "roundtrip";
    cfg.seed = 77;
    cfg.epoch_seconds = 1.25;
    cfg.duration_seconds = 5.0;
    cfg.qts = QtsMode::off;
    cfg.source_alice = {54321.0, 7.5, "ET-EBS1"};
    cfg.detectors[4].jitter_fwhm_ps = 12.25;
    cfg.clock_bob = ClockModel{400.0, 0.1, 11.35, 1.5, 2};
    cfg.link_base_delay_ps = 588000000;
    cfg.link_drift = {channel::DriftShape::random_walk, 60.0, 600.0};
    cfg.attack = channel::AttackParams{25.0, channel::Direction::forward};
    cfg.encoding = {6, 3, 110, 0};
    cfg.security.chi_scale = 2.25;

    const auto reparsed = parse_config_text(render_config(cfg));
    CHECK(reparsed.name == cfg.name);
    CHECK(reparsed.seed == cfg.seed);
    CHECK(reparsed.epoch_seconds == cfg.epoch_seconds);
    CHECK(reparsed.qts == cfg.qts);
    CHECK(reparsed.source_alice.pair_rate_hz == cfg.source_alice.pair_rate_hz);
    CHECK(reparsed.detectors[4].jitter_fwhm_ps == cfg.detectors[4].jitter_fwhm_ps);
    CHECK(reparsed.clock_bob.white_sigma_ps == cfg.clock_bob.white_sigma_ps);
    CHECK(reparsed.clock_bob.random_walk_sigma_ps == cfg.clock_bob.random_walk_sigma_ps);
    CHECK(reparsed.link_drift.shape == cfg.link_drift.shape);
    REQUIRE(reparsed.attack.has_value());
    CHECK(reparsed.attack->tau_eve_ps == 25.0);
    CHECK(reparsed.security.chi_scale == 2.25);
}

TEST_CASE("shipped presets parse and validate") {
    for (const char* name :
         {"noiseless", "common-clock", "remote-clock", "security-cal", "attack-scan"}) {
        const std::string path = std::string(QNETSIM_SOURCE_DIR) + "/presets/" + name + ".cfg";
        const auto cfg = parse_config_file(path);
        CHECK_NOTHROW(cfg.validate());
    }
}
