#ifndef ASCKIT_ENSEMBLE_HPP
#define ASCKIT_ENSEMBLE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "asckit/acdl.hpp"
#include "asckit/pca.hpp"

namespace asckit {

struct KernelParams {
  int degree = 2;
  double coef0 = 1.0;
  double scale = 1.0;
  double regularization = 1e-2;
};

// (scale * <u, v> + coef0) ^ degree
double poly_kernel(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const KernelParams& p);

// Kernelized multinomial logistic model: class scores are alpha * k(support, x),
// probabilities their softmax. Trained by full-batch gradient descent with a
// backtracking line search, so the loss trace is non-increasing.
struct LayerClassifier {
  Eigen::MatrixXd support;  // d x M_train
  Eigen::MatrixXd alpha;    // C x M_train
  KernelParams kernel;
  std::string layer;
  int class_count = 0;
  std::vector<double> loss_trace;
};

struct TrainOptions {
  int max_epochs = 500;
  double grad_tolerance = 1e-7;
};

LayerClassifier train_layer_classifier(const Eigen::MatrixXd& z, const std::vector<int>& labels,
                                       const KernelParams& p, const TrainOptions& opts = {});

Eigen::MatrixXd predict_proba(const LayerClassifier& c, const Eigen::MatrixXd& z);

enum class FusionRule { mean, geometric };

// Arithmetic (or log-space) mean of per-layer probability matrices,
// renormalized per column.
Eigen::MatrixXd late_fuse(const std::vector<Eigen::MatrixXd>& probabilities,
                          FusionRule rule = FusionRule::mean);

struct EvalReport {
  double accuracy = 0.0;
  Eigen::VectorXd per_class_accuracy;
  Eigen::MatrixXi confusion;  // rows true, columns predicted
  std::vector<int> predictions;
};

// Argmax per column, ties toward the lowest class index.
EvalReport evaluate(const Eigen::MatrixXd& fused, const std::vector<int>& truth);

// ---------------------------------------------------------------------------
// Cross-validated pipeline over pooled network embeddings.

// All of one tap's embeddings in manifest order.
struct EmbeddingTable {
  std::string layer;
  Eigen::MatrixXd features;  // n_l x M
  std::vector<int> labels;
  std::vector<int> folds;
  std::vector<std::string> ids;
};

enum class DimMode { none, fixed, variance, acdl };

struct DimSelectionSpec {
  DimMode mode = DimMode::acdl;
  int fixed_d = 0;
  double variance_ratio = 0.99;
};

struct KernelGrid {
  std::vector<int> degrees = {2, 3};
  std::vector<double> coef0s = {0.0, 1.0};
  std::vector<double> regularizations = {1e-3, 1e-2, 1e-1};
  double scale = 1.0;

  std::vector<KernelParams> enumerate() const;
};

struct PipelineConfig {
  DimSelectionSpec dims;
  AcdlConfig acdl;                                    // base ACDL settings
  std::map<std::string, AcdlConfig> acdl_overrides;   // per layer
  KernelGrid grid;
  FusionRule fusion = FusionRule::mean;
  std::uint64_t seed = 0;
  TrainOptions train;

  AcdlConfig acdl_for(const std::string& layer) const;
};

// Train-fitted per-layer preprocessing: center, optionally rotate/truncate,
// then divide by the RMS feature norm of the training columns.
struct LayerTransform {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // empty => centering only
  double feature_scale = 1.0;

  int output_dim() const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& y) const;
};

// Fits the configured preprocessing (centering, PCA truncation, ACDL-chosen
// dimensionality) on `y` alone. `fold_tag` only perturbs the ACDL seed so
// distinct folds draw distinct initializations.
LayerTransform fit_layer_transform(const Eigen::MatrixXd& y, const std::vector<int>& labels,
                                   const std::string& layer, const PipelineConfig& config,
                                   int fold_tag, std::optional<AcdlResult>* acdl_result = nullptr,
                                   int* selected_d = nullptr);

struct StratifiedSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> holdout;
};

// Deterministic ~80/20 per-class split; classes with a single member stay in
// the train part.
StratifiedSplit stratified_split(const std::vector<int>& labels, std::uint64_t seed);

struct LayerFoldModel {
  std::string layer;
  int n = 0;
  int d = 0;
  LayerTransform transform;
  std::optional<AcdlResult> acdl;
  LayerClassifier classifier;
  Eigen::MatrixXd test_probs;  // C x |test fold|
  double solo_accuracy = 0.0;
};

struct FoldResult {
  int fold = 0;
  bool skipped = false;
  std::string skip_reason;
  std::vector<LayerFoldModel> layers;
  std::vector<std::size_t> test_columns;  // indices into the embedding tables
  Eigen::MatrixXd fused_probs;
  std::vector<int> predictions;
  double accuracy = 0.0;
  KernelParams chosen_kernel;
};

struct CrossValidationResult {
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;    // mean of evaluated fold accuracies
  double pooled_accuracy = 0.0;  // accuracy over all held-out predictions
  std::vector<std::string> warnings;
};

// Leave-one-fold-out evaluation. PCA, ACDL and classifiers are fitted on the
// training folds only; the kernel grid is selected on an inner split of the
// training data and applied identically to all layers.
CrossValidationResult cross_validate(const std::vector<EmbeddingTable>& tables,
                                     const PipelineConfig& config);

}  // namespace asckit

#endif
