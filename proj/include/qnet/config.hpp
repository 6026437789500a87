#pragma once

#include <stdexcept>
#include <string>

#include "qnet/netharness.hpp"

namespace qnet::config {

struct ConfigError : std::runtime_error {
    ConfigError(std::string msg, int line_no, std::string field_name)
        : std::runtime_error(std::move(msg)), line(line_no), field(std::move(field_name)) {}
    int line;
    std::string field;
};

/// Parse a scenario config file: '#' comments, [section] headers,
/// key = value pairs. Unknown sections or keys are hard errors that name the
/// offending field and line.
netharness::ScenarioConfig parse_config_text(const std::string& text);
netharness::ScenarioConfig parse_config_file(const std::string& path);

/// Render a config back to file text (canonical section order).
std::string render_config(const netharness::ScenarioConfig& cfg);

}  // namespace qnet::config
