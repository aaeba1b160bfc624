#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "asckit/config_file.hpp"
#include "asckit/errors.hpp"
#include "asckit/experiment.hpp"
#include "asckit/synth.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string mode;
  std::string layers;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool layers_override = true) {
  cmd->add_option("--config", flags.config_path, "experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", flags.seed, "override the config seed");
  cmd->add_option("--out-dir", flags.out_dir, "override the output directory");
  cmd->add_option("--mode", flags.mode,
                  "override dimensionality mode: acdl | variance:<ratio> | fixed:<d> | none");
  cmd->add_option("--layers", flags.layers,
                  layers_override ? "comma-separated taps overriding the config"
                                  : "comma-separated taps to export");
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

asckit::ExperimentConfig load_config(const CommonFlags& flags, bool layers_override = true) {
  asckit::ExperimentConfig cfg;
  try {
    cfg = asckit::load_experiment_config(flags.config_path);
  } catch (const asckit::StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw asckit::StageError("config", "", e.what());
  }
  if (flags.seed) cfg.pipeline.seed = *flags.seed;
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  if (!flags.mode.empty()) cfg.pipeline.dims = asckit::parse_mode(flags.mode);
  if (layers_override && !flags.layers.empty()) cfg.taps = split_csv(flags.layers);
  return cfg;
}

void print_timings(const std::vector<asckit::StageTiming>& timings) {
  for (const auto& t : timings)
    std::cout << "[stage " << t.stage << "] " << t.seconds << " s\n";
}

int run_featurize(const CommonFlags& flags) {
  const auto cfg = load_config(flags);
  for (const auto& tap : cfg.taps) {
    const std::string path = asckit::export_embeddings(cfg, tap, asckit::ExportStage::raw);
    std::cout << "wrote " << path << "\n";
  }
  return 0;
}

int run_select_dims(const CommonFlags& flags) {
  const auto cfg = load_config(flags);
  const auto rows = asckit::select_dimensions(cfg);
  std::cout << "layer n d compression converged\n";
  for (const auto& r : rows)
    std::cout << r.layer << ' ' << r.n << ' ' << r.d << ' ' << r.compression << ' '
              << (r.converged ? "yes" : "no") << "\n";
  std::cout << "outputs in " << cfg.out_dir << "\n";
  return 0;
}

int run_train(const CommonFlags& flags) {
  const auto cfg = load_config(flags);
  const auto tables = asckit::compute_embeddings(cfg);
  const auto model = asckit::fit_full_model(cfg, tables);

  std::filesystem::create_directories(cfg.out_dir);
  const auto model_path = (std::filesystem::path(cfg.out_dir) / "model.snd1").string();
  asckit::save_model(model_path, model);

  // training-set diagnostics; held-out numbers come from `evaluate`
  std::ofstream csv(std::filesystem::path(cfg.out_dir) / "train_layers.csv", std::ios::binary);
  csv << "layer,n,d,train_accuracy,final_loss\n";
  std::vector<Eigen::MatrixXd> probs;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& table = tables[i];
    const Eigen::MatrixXd z = model.transforms[i].apply(table.features);
    const Eigen::MatrixXd p = asckit::predict_proba(model.classifiers[i], z);
    probs.push_back(p);
    const double acc = asckit::evaluate(p, table.labels).accuracy;
    csv << model.layers[i] << ',' << table.features.rows() << ','
        << model.transforms[i].output_dim() << ',' << acc << ','
        << model.classifiers[i].loss_trace.back() << '\n';
    std::cout << model.layers[i] << ": d " << model.transforms[i].output_dim() << "/"
              << table.features.rows() << ", train accuracy " << acc << "\n";
  }
  const double fused =
      asckit::evaluate(asckit::late_fuse(probs, model.fusion), tables.front().labels).accuracy;
  std::cout << "fused train accuracy " << fused << "\nwrote " << model_path << "\n";
  return 0;
}

int run_evaluate(const CommonFlags& flags) {
  const auto cfg = load_config(flags);
  const auto report = asckit::run_experiment(cfg);
  print_timings(report.timings);
  std::cout << "fused accuracy " << report.fused_accuracy << " (mean over folds "
            << report.mean_fold_accuracy << ")\n"
            << "mean compression " << report.mean_compression << " (n-weighted "
            << report.weighted_compression << ")\n"
            << "outputs in " << cfg.out_dir << "\n";
  return 0;
}

int run_sweep(const CommonFlags& flags, const std::string& ratios_csv) {
  const auto cfg = load_config(flags);
  std::vector<double> ratios = asckit::default_sweep_ratios();
  if (!ratios_csv.empty()) {
    ratios.clear();
    for (const auto& r : split_csv(ratios_csv)) ratios.push_back(std::stod(r));
  }
  const auto rows = asckit::sweep_variance_ratios(cfg, ratios);
  std::cout << "ratio mean_compression accuracy\n";
  for (const auto& r : rows)
    std::cout << r.ratio << ' ' << r.mean_compression << ' ' << r.accuracy << "\n";
  std::cout << "outputs in " << cfg.out_dir << "\n";
  return 0;
}

int run_export(const CommonFlags& flags, const std::string& stage) {
  const auto cfg = load_config(flags, /*layers_override=*/false);
  if (stage != "raw" && stage != "compressed")
    throw asckit::ParameterError("export: --stage must be raw or compressed");
  const auto layers = flags.layers.empty() ? cfg.taps : split_csv(flags.layers);
  for (const auto& layer : layers) {
    const std::string path = asckit::export_embeddings(
        cfg, layer, stage == "raw" ? asckit::ExportStage::raw : asckit::ExportStage::compressed);
    std::cout << "wrote " << path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asckit: scene-classification experiments on raw-audio network embeddings"};
  app.require_subcommand(1);
  app.footer(asckit::config_help_text());

  CommonFlags flags;
  std::string ratios_csv, stage = "raw";

  auto* featurize = app.add_subcommand(
      "featurize", "compute pooled embeddings for every tap (fills the cache, writes raw CSVs)");
  add_common(featurize, flags);

  auto* select = app.add_subcommand(
      "select-dims", "whole-dataset diagnostics: singular spectra and selected dimensionalities");
  add_common(select, flags);

  auto* train =
      app.add_subcommand("train", "fit transforms and classifiers on the full dataset");
  add_common(train, flags);

  auto* evaluate = app.add_subcommand(
      "evaluate", "leave-one-fold-out evaluation with fused per-layer classifiers");
  add_common(evaluate, flags);

  auto* sweep = app.add_subcommand(
      "sweep", "accuracy/compression across explained-variance ratios (cached embeddings)");
  add_common(sweep, flags);
  sweep->add_option("--ratios", ratios_csv,
                    "comma-separated ratios in (0,1], default 1,0.999,0.99,0.98,0.95,0.9,0.85");

  auto* exp = app.add_subcommand("export", "write per-recording embeddings of one or more taps");
  add_common(exp, flags, /*layers_override=*/false);
  exp->add_option("--stage", stage, "raw (default) or compressed");

  auto* synth = app.add_subcommand(
      "synth", "generate a miniature synthetic dataset, weights and config for demos/tests");
  std::string synth_out;
  asckit::AudioBenchmarkSpec spec;
  std::uint64_t synth_seed = 7;
  synth->add_option("--out", synth_out, "directory to create")->required();
  synth->add_option("--classes", spec.classes, "number of classes")->capture_default_str();
  synth->add_option("--folds", spec.folds, "number of folds")->capture_default_str();
  synth->add_option("--clips", spec.clips_per_class_per_fold, "clips per class per fold")
      ->capture_default_str();
  synth->add_option("--samples", spec.samples, "samples per clip")->capture_default_str();
  synth->add_option("--rate", spec.sample_rate, "sample rate in Hz")->capture_default_str();
  synth->add_option("--prototypes", spec.prototypes_per_class, "templates per class")
      ->capture_default_str();
  synth->add_option("--seed", synth_seed, "generator seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (featurize->parsed()) return run_featurize(flags);
    if (select->parsed()) return run_select_dims(flags);
    if (train->parsed()) return run_train(flags);
    if (evaluate->parsed()) return run_evaluate(flags);
    if (sweep->parsed()) return run_sweep(flags, ratios_csv);
    if (exp->parsed()) return run_export(flags, stage);
    if (synth->parsed()) {
      const auto paths = asckit::write_audio_benchmark(synth_out, spec, synth_seed);
      std::cout << "manifest " << paths.manifest << "\nweights  " << paths.weights
                << "\nconfig   " << paths.config << "\n";
      return 0;
    }
  } catch (const asckit::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: [stage cli] " << e.what() << "\n";
    return 1;
  }
  return 0;
}
