#ifndef ASCKIT_CONFIG_FILE_HPP
#define ASCKIT_CONFIG_FILE_HPP

#include <string>
#include <vector>

#include "asckit/experiment.hpp"

namespace asckit {

// Flat `key = value` text with `#` comments and `[section]` headers. Global
// keys cover paths, taps, net geometry, mode, fusion and seed; `[acdl]` sets
// the base dictionary parameters, `[acdl <layer>]` overrides them per tap,
// `[grid]` the kernel search space and `[train]` the optimizer. Relative
// paths resolve against the directory containing the config file.
ExperimentConfig load_experiment_config(const std::string& path);

// "acdl" | "variance:<ratio>" | "fixed:<d>" | "none"
DimSelectionSpec parse_mode(const std::string& text);

// "soundnet" or comma-joined blocks `name:filters:kernel:stride[:poolW/poolS]`.
std::vector<LayerSpec> parse_net_chain(const std::string& text);

// Every recognized key with its default value, for `--help`.
std::string config_help_text();

}  // namespace asckit

#endif
