#include "asckit/config_file.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "asckit/errors.hpp"

namespace asckit {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw SchemaError("config: key '" + key + "' expects a number, got '" + value + "'");
  }
}

long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw SchemaError("config: key '" + key + "' expects an integer, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw SchemaError("config: key '" + key + "' expects a boolean, got '" + value + "'");
}

void apply_acdl_key(AcdlConfig& cfg, const std::string& key, const std::string& value,
                    const std::string& section) {
  if (key == "gamma")
    cfg.gamma = parse_double(key, value);
  else if (key == "lambda")
    cfg.lambda = parse_double(key, value);
  else if (key == "tau")
    cfg.tau = parse_double(key, value);
  else if (key == "stop")
    cfg.stop_recon_error = parse_double(key, value);
  else if (key == "max_outer")
    cfg.max_outer_iters = static_cast<int>(parse_int(key, value));
  else if (key == "atoms_per_class")
    cfg.initial_atoms_per_class = static_cast<int>(parse_int(key, value));
  else if (key == "normalize")
    cfg.normalize_columns = parse_bool(key, value);
  else if (key == "max_inner")
    cfg.max_inner_iters = static_cast<int>(parse_int(key, value));
  else if (key == "inner_tol")
    cfg.inner_tolerance = parse_double(key, value);
  else
    throw SchemaError("config: unknown key '" + key + "' in section [" + section + "]");
}

}  // namespace

DimSelectionSpec parse_mode(const std::string& text) {
  DimSelectionSpec spec;
  if (text == "acdl") {
    spec.mode = DimMode::acdl;
  } else if (text == "none") {
    spec.mode = DimMode::none;
  } else if (text.rfind("variance:", 0) == 0 || text.rfind("explained_variance:", 0) == 0) {
    spec.mode = DimMode::variance;
    spec.variance_ratio = parse_double("mode", text.substr(text.find(':') + 1));
    if (spec.variance_ratio <= 0.0 || spec.variance_ratio > 1.0)
      throw ParameterError("mode: variance ratio must lie in (0, 1]");
  } else if (text.rfind("fixed:", 0) == 0) {
    spec.mode = DimMode::fixed;
    spec.fixed_d = static_cast<int>(parse_int("mode", text.substr(6)));
    if (spec.fixed_d < 1) throw ParameterError("mode: fixed dimensionality must be >= 1");
  } else {
    throw SchemaError("config: unknown mode '" + text +
                      "' (expected acdl, variance:<ratio>, fixed:<d> or none)");
  }
  return spec;
}

std::vector<LayerSpec> parse_net_chain(const std::string& text) {
  if (text == "soundnet") return soundnet_chain();
  std::vector<LayerSpec> chain;
  for (const auto& block : split(text, ',')) {
    const auto parts = split(block, ':');
    if (parts.size() != 4 && parts.size() != 5)
      throw SchemaError("config: net block '" + block +
                        "' must be name:filters:kernel:stride[:poolW/poolS]");
    const std::string& name = parts[0];
    if (name.empty()) throw SchemaError("config: empty net block name");
    append_conv_block(chain, name, static_cast<int>(parse_int("net", parts[1])),
                      static_cast<int>(parse_int("net", parts[2])),
                      static_cast<int>(parse_int("net", parts[3])));
    if (parts.size() == 5) {
      std::string pool = parts[4];
      if (pool.rfind("pool", 0) != 0)
        throw SchemaError("config: pool spec '" + pool + "' must look like poolW/S");
      pool = pool.substr(4);
      const auto slash = pool.find('/');
      if (slash == std::string::npos)
        throw SchemaError("config: pool spec needs width/stride, got 'pool" + pool + "'");
      append_maxpool(chain, name + "_pool", static_cast<int>(parse_int("net", pool.substr(0, slash))),
                     static_cast<int>(parse_int("net", pool.substr(slash + 1))));
    }
  }
  if (chain.empty()) throw SchemaError("config: empty net chain");
  return chain;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file " + path);
  const std::filesystem::path base = std::filesystem::absolute(path).parent_path();

  ExperimentConfig cfg;
  cfg.out_dir = (base / "out").string();

  // collected first so section order in the file cannot matter
  std::map<std::string, std::string> globals;
  std::vector<std::pair<std::string, std::string>> acdl_base;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> acdl_overrides;
  std::vector<std::pair<std::string, std::string>> grid_keys;
  std::vector<std::pair<std::string, std::string>> train_keys;

  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw SchemaError("config:" + std::to_string(line_no) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "acdl" && section.rfind("acdl ", 0) != 0 && section != "grid" &&
          section != "train")
        throw SchemaError("config:" + std::to_string(line_no) + ": unknown section [" + section +
                          "]");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw SchemaError("config:" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw SchemaError("config:" + std::to_string(line_no) + ": empty key");

    if (section.empty()) {
      if (!globals.emplace(key, value).second)
        throw SchemaError("config:" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    } else if (section == "acdl") {
      acdl_base.emplace_back(key, value);
    } else if (section.rfind("acdl ", 0) == 0) {
      acdl_overrides[trim(section.substr(5))].emplace_back(key, value);
    } else if (section == "grid") {
      grid_keys.emplace_back(key, value);
    } else {
      train_keys.emplace_back(key, value);
    }
  }

  const auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };

  for (const auto& [key, value] : globals) {
    if (key == "manifest")
      cfg.manifest_path = resolve(value);
    else if (key == "weights")
      cfg.weights_path = resolve(value);
    else if (key == "out_dir")
      cfg.out_dir = resolve(value);
    else if (key == "net")
      cfg.chain = parse_net_chain(value);
    else if (key == "layers") {
      cfg.taps = split(value, ',');
      if (cfg.taps.empty() || cfg.taps.front().empty())
        throw SchemaError("config: 'layers' must list at least one tap");
    } else if (key == "mode")
      cfg.pipeline.dims = parse_mode(value);
    else if (key == "fusion") {
      if (value == "mean")
        cfg.pipeline.fusion = FusionRule::mean;
      else if (value == "geometric")
        cfg.pipeline.fusion = FusionRule::geometric;
      else
        throw SchemaError("config: fusion must be mean or geometric, got '" + value + "'");
    } else if (key == "seed") {
      try {
        cfg.pipeline.seed = std::stoull(value);
      } catch (const std::exception&) {
        throw SchemaError("config: key 'seed' expects an unsigned integer, got '" + value + "'");
      }
    } else
      throw SchemaError("config: unknown global key '" + key + "'");
  }

  if (cfg.manifest_path.empty()) throw SchemaError("config: missing required key 'manifest'");
  if (cfg.weights_path.empty()) throw SchemaError("config: missing required key 'weights'");

  for (const auto& [key, value] : acdl_base) apply_acdl_key(cfg.pipeline.acdl, key, value, "acdl");
  for (const auto& [layer, pairs] : acdl_overrides) {
    AcdlConfig layer_cfg = cfg.pipeline.acdl;
    for (const auto& [key, value] : pairs) apply_acdl_key(layer_cfg, key, value, "acdl " + layer);
    cfg.pipeline.acdl_overrides[layer] = layer_cfg;
  }

  for (const auto& [key, value] : grid_keys) {
    if (key == "degrees") {
      cfg.pipeline.grid.degrees.clear();
      for (const auto& v : split(value, ','))
        cfg.pipeline.grid.degrees.push_back(static_cast<int>(parse_int(key, v)));
    } else if (key == "coef0s") {
      cfg.pipeline.grid.coef0s.clear();
      for (const auto& v : split(value, ',')) cfg.pipeline.grid.coef0s.push_back(parse_double(key, v));
    } else if (key == "regularizations") {
      cfg.pipeline.grid.regularizations.clear();
      for (const auto& v : split(value, ','))
        cfg.pipeline.grid.regularizations.push_back(parse_double(key, v));
    } else if (key == "scale") {
      cfg.pipeline.grid.scale = parse_double(key, value);
    } else
      throw SchemaError("config: unknown key '" + key + "' in section [grid]");
  }

  for (const auto& [key, value] : train_keys) {
    if (key == "max_epochs")
      cfg.pipeline.train.max_epochs = static_cast<int>(parse_int(key, value));
    else if (key == "grad_tol")
      cfg.pipeline.train.grad_tolerance = parse_double(key, value);
    else
      throw SchemaError("config: unknown key '" + key + "' in section [train]");
  }

  return cfg;
}

std::string config_help_text() {
  return "Config file keys (key = value, '#' comments, sections in brackets):\n"
         "  manifest             TSV dataset manifest (required)\n"
         "  weights              SND1 network weight file (required)\n"
         "  net                  'soundnet' (default) or blocks name:filters:kernel:stride[:poolW/poolS]\n"
         "  layers               comma-separated taps (default p-conv3..conv7)\n"
         "  mode                 acdl (default) | variance:<ratio> | fixed:<d> | none\n"
         "  fusion               mean (default) | geometric\n"
         "  seed                 unsigned integer, default 0\n"
         "  out_dir              output directory, default <config dir>/out\n"
         "[acdl] (base) and [acdl <layer>] (per-tap override):\n"
         "  gamma=1.0 lambda=0.1 tau=0.5 stop=0.01 max_outer=200\n"
         "  atoms_per_class=16 normalize=true max_inner=200 inner_tol=1e-10\n"
         "[grid]:\n"
         "  degrees=2,3 coef0s=0,1 regularizations=0.001,0.01,0.1 scale=1.0\n"
         "[train]:\n"
         "  max_epochs=500 grad_tol=1e-7\n";
}

}  // namespace asckit
