#ifndef ASCKIT_EXPERIMENT_HPP
#define ASCKIT_EXPERIMENT_HPP

#include <string>
#include <vector>

#include "asckit/ensemble.hpp"
#include "asckit/net.hpp"

namespace asckit {

// Everything an end-to-end run needs; normally parsed from a config file
// (see config_file.hpp) and then adjusted by CLI flags.
struct ExperimentConfig {
  std::string manifest_path;
  std::string weights_path;
  std::vector<LayerSpec> chain = soundnet_chain();
  std::vector<std::string> taps = default_taps();
  PipelineConfig pipeline;
  std::string out_dir = "out";
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct LayerReportRow {
  std::string layer;
  int fold = 0;
  int n = 0;
  int d = 0;                  // dimensionality actually applied in this fold
  double compression = 0.0;   // 1 - d/n
  double solo_accuracy = 0.0;
};

struct ExperimentReport {
  CrossValidationResult cv;
  std::vector<LayerReportRow> layer_rows;
  double fused_accuracy = 0.0;        // pooled over all held-out recordings
  double mean_fold_accuracy = 0.0;
  double mean_compression = 0.0;      // unweighted mean over (layer, fold)
  double weighted_compression = 0.0;  // n_l-weighted mean
  int class_count = 0;
  std::vector<StageTiming> timings;   // stdout only, never written to CSV
};

// Forward passes for every manifest recording with an on-disk cache under
// <out_dir>/cache keyed by (weights bytes, wav bytes). Embeddings are rounded
// through f32 on the cold path so cached reruns are bit-identical.
std::vector<EmbeddingTable> compute_embeddings(const ExperimentConfig& config);

// Full pipeline: manifest -> weights -> featurize -> evaluate -> report.
// Writes predictions.csv, confusion.csv, classes.csv, report_layers.csv,
// report_summary.csv and, in ACDL mode, per-fold trace CSVs.
ExperimentReport run_experiment(const ExperimentConfig& config);

struct SweepRow {
  double ratio = 0.0;
  double mean_compression = 0.0;
  double accuracy = 0.0;
};

// One cross-validated run per explained-variance ratio over shared cached
// embeddings; writes sweep.csv. A failed ratio is warned about and skipped.
std::vector<SweepRow> sweep_variance_ratios(const ExperimentConfig& config,
                                            const std::vector<double>& ratios);

// The seven-point schedule used by the reference experiments.
std::vector<double> default_sweep_ratios();

struct DimReportRow {
  std::string layer;
  int n = 0;
  int d = 0;
  double compression = 0.0;
  bool converged = true;
};

// Whole-dataset dimensionality diagnostics: writes spectra.csv and dims.csv
// (plus trace_<layer>_full.csv in ACDL mode) and returns the table.
std::vector<DimReportRow> select_dimensions(const ExperimentConfig& config);

enum class ExportStage { raw, compressed };

// Writes embeddings_<layer>_<stage>.csv with schema
// recording_id,label,dim_0..dim_{k-1}; returns the written path.
std::string export_embeddings(const ExperimentConfig& config, const std::string& layer,
                              ExportStage stage);

// Whole-dataset fit used by the `train` subcommand; serialized into the same
// tensor container as network weights.
struct TrainedModel {
  std::vector<std::string> layers;
  std::vector<LayerTransform> transforms;
  std::vector<LayerClassifier> classifiers;
  FusionRule fusion = FusionRule::mean;
  int class_count = 0;
};

TrainedModel fit_full_model(const ExperimentConfig& config,
                            const std::vector<EmbeddingTable>& tables);
void save_model(const std::string& path, const TrainedModel& model);
TrainedModel load_model(const std::string& path);

}  // namespace asckit

#endif
