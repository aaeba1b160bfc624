#include "asckit/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "asckit/errors.hpp"
#include "asckit/rng.hpp"

namespace asckit {

double poly_kernel(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const KernelParams& p) {
  if (u.size() != v.size()) throw DimensionError("poly_kernel: vector length mismatch");
  if (p.degree < 1) throw ParameterError("poly_kernel: degree must be >= 1");
  return std::pow(p.scale * u.dot(v) + p.coef0, p.degree);
}

namespace {

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const KernelParams& p) {
  Eigen::MatrixXd k = (p.scale * (a.transpose() * b).array() + p.coef0).pow(p.degree);
  return k;
}

void softmax_columns(Eigen::MatrixXd& scores) {
  for (Eigen::Index c = 0; c < scores.cols(); ++c) {
    const double m = scores.col(c).maxCoeff();
    scores.col(c) = (scores.col(c).array() - m).exp();
    scores.col(c) /= scores.col(c).sum();
  }
}

double cross_entropy_loss(const Eigen::MatrixXd& scores, const std::vector<int>& labels,
                          const Eigen::MatrixXd& alpha, double regularization) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < scores.cols(); ++i) {
    const double m = scores.col(i).maxCoeff();
    const double lse = m + std::log((scores.col(i).array() - m).exp().sum());
    loss += lse - scores(labels[static_cast<std::size_t>(i)], i);
  }
  return loss / static_cast<double>(scores.cols()) + regularization * alpha.squaredNorm();
}

}  // namespace

LayerClassifier train_layer_classifier(const Eigen::MatrixXd& z, const std::vector<int>& labels,
                                       const KernelParams& p, const TrainOptions& opts) {
  const Eigen::Index m = z.cols();
  if (static_cast<std::size_t>(m) != labels.size())
    throw DimensionError("train_layer_classifier: column/label count mismatch");
  std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2)
    throw DegenerateError("train_layer_classifier: single-class training data");
  const int class_count = *distinct.rbegin() + 1;
  if (m < class_count) throw ParameterError("train_layer_classifier: fewer examples than classes");

  LayerClassifier c;
  c.support = z;
  c.kernel = p;
  c.class_count = class_count;
  c.alpha = Eigen::MatrixXd::Zero(class_count, m);

  const Eigen::MatrixXd k = kernel_matrix(z, z, p);
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(class_count, m);
  for (Eigen::Index i = 0; i < m; ++i) onehot(labels[static_cast<std::size_t>(i)], i) = 1.0;

  double loss = cross_entropy_loss(c.alpha * k, labels, c.alpha, p.regularization);
  c.loss_trace.push_back(loss);
  double step = 1.0;
  for (int epoch = 0; epoch < opts.max_epochs; ++epoch) {
    Eigen::MatrixXd probs = c.alpha * k;
    softmax_columns(probs);
    const Eigen::MatrixXd grad =
        (probs - onehot) * k / static_cast<double>(m) + 2.0 * p.regularization * c.alpha;
    const double gnorm2 = grad.squaredNorm();
    if (std::sqrt(gnorm2) <= opts.grad_tolerance) break;

    // backtracking line search keeps the trace monotone
    step = std::min(step * 2.0, 1.0e6);
    double next_loss = 0.0;
    Eigen::MatrixXd next;
    for (;;) {
      next = c.alpha - step * grad;
      next_loss = cross_entropy_loss(next * k, labels, next, p.regularization);
      if (next_loss <= loss - 0.5 * step * gnorm2 || step < 1e-18) break;
      step *= 0.5;
    }
    if (next_loss > loss) break;  // no descent possible at machine precision
    c.alpha = std::move(next);
    const double drop = loss - next_loss;
    loss = next_loss;
    c.loss_trace.push_back(loss);
    if (drop < 1e-12 * (1.0 + std::abs(loss))) break;
  }
  return c;
}

Eigen::MatrixXd predict_proba(const LayerClassifier& c, const Eigen::MatrixXd& z) {
  if (z.rows() != c.support.rows())
    throw DimensionError("predict_proba: feature dimension " + std::to_string(z.rows()) +
                         " does not match trained dimension " + std::to_string(c.support.rows()));
  Eigen::MatrixXd scores = c.alpha * kernel_matrix(c.support, z, c.kernel);
  softmax_columns(scores);
  return scores;
}

Eigen::MatrixXd late_fuse(const std::vector<Eigen::MatrixXd>& probabilities, FusionRule rule) {
  if (probabilities.empty()) throw ParameterError("late_fuse: no probability matrices");
  const Eigen::Index rows = probabilities.front().rows();
  const Eigen::Index cols = probabilities.front().cols();
  for (const auto& p : probabilities)
    if (p.rows() != rows || p.cols() != cols) throw DimensionError("late_fuse: shape mismatch");

  Eigen::MatrixXd fused;
  if (rule == FusionRule::mean) {
    fused = Eigen::MatrixXd::Zero(rows, cols);
    for (const auto& p : probabilities) fused += p;
    fused /= static_cast<double>(probabilities.size());
  } else {
    fused = Eigen::MatrixXd::Zero(rows, cols);
    for (const auto& p : probabilities) fused += p.array().max(1e-300).log().matrix();
    fused = (fused / static_cast<double>(probabilities.size())).array().exp();
  }
  for (Eigen::Index c = 0; c < cols; ++c) {
    const double sum = fused.col(c).sum();
    if (sum > 0.0)
      fused.col(c) /= sum;
    else
      fused.col(c).setConstant(1.0 / static_cast<double>(rows));
  }
  return fused;
}

EvalReport evaluate(const Eigen::MatrixXd& fused, const std::vector<int>& truth) {
  if (static_cast<std::size_t>(fused.cols()) != truth.size())
    throw DimensionError("evaluate: column/label count mismatch");
  const int class_count = static_cast<int>(fused.rows());

  EvalReport r;
  r.confusion = Eigen::MatrixXi::Zero(class_count, class_count);
  r.predictions.resize(truth.size());
  int correct = 0;
  for (Eigen::Index i = 0; i < fused.cols(); ++i) {
    int best = 0;
    for (int c = 1; c < class_count; ++c)
      if (fused(c, i) > fused(best, i)) best = c;  // strict: ties keep the lowest index
    r.predictions[static_cast<std::size_t>(i)] = best;
    const int t = truth[static_cast<std::size_t>(i)];
    if (t < 0 || t >= class_count) throw ParameterError("evaluate: label out of range");
    r.confusion(t, best)++;
    if (best == t) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  r.per_class_accuracy = Eigen::VectorXd::Zero(class_count);
  for (int c = 0; c < class_count; ++c) {
    const int row_total = r.confusion.row(c).sum();
    if (row_total > 0)
      r.per_class_accuracy(c) = static_cast<double>(r.confusion(c, c)) / row_total;
  }
  return r;
}

std::vector<KernelParams> KernelGrid::enumerate() const {
  std::vector<KernelParams> out;
  for (const int d : degrees)
    for (const double c0 : coef0s)
      for (const double reg : regularizations) out.push_back({d, c0, scale, reg});
  if (out.empty()) throw ParameterError("empty kernel grid");
  return out;
}

AcdlConfig PipelineConfig::acdl_for(const std::string& layer) const {
  const auto it = acdl_overrides.find(layer);
  return it == acdl_overrides.end() ? acdl : it->second;
}

int LayerTransform::output_dim() const {
  return components.size() > 0 ? static_cast<int>(components.rows())
                               : static_cast<int>(mean.size());
}

Eigen::MatrixXd LayerTransform::apply(const Eigen::MatrixXd& y) const {
  if (y.rows() != mean.size())
    throw DimensionError("LayerTransform: input rows do not match fitted dimension");
  Eigen::MatrixXd centered = y.colwise() - mean;
  if (components.size() > 0) centered = components * centered;
  return centered / feature_scale;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

LayerDataset class_ordered_dataset(const Eigen::MatrixXd& y, const std::vector<int>& labels,
                                   const std::string& layer) {
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
  LayerDataset ds;
  ds.layer = layer;
  ds.y.resize(y.rows(), y.cols());
  ds.labels.resize(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    ds.y.col(static_cast<Eigen::Index>(i)) = y.col(static_cast<Eigen::Index>(order[i]));
    ds.labels[i] = labels[order[i]];
  }
  return ds;
}

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

SplitIndices split_by_fold(const std::vector<int>& folds, int held_out) {
  SplitIndices s;
  for (std::size_t i = 0; i < folds.size(); ++i)
    (folds[i] == held_out ? s.test : s.train).push_back(i);
  return s;
}

template <typename T>
std::vector<T> subset(const std::vector<T>& v, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (const auto i : idx) out.push_back(v[i]);
  return out;
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.col(static_cast<Eigen::Index>(i)) = m.col(static_cast<Eigen::Index>(idx[i]));
  return out;
}

bool has_all_classes(const std::vector<int>& labels, int class_count) {
  std::set<int> seen(labels.begin(), labels.end());
  return static_cast<int>(seen.size()) == class_count;
}

// Deterministic stratified ~80/20 split of the given columns for grid
// selection; classes with fewer than two members stay in the inner train set.
SplitIndices inner_split(const std::vector<std::size_t>& train_idx,
                         const std::vector<int>& labels, int class_count, std::uint64_t seed) {
  SplitIndices s;
  for (int c = 0; c < class_count; ++c) {
    std::vector<std::size_t> members;
    for (const auto i : train_idx)
      if (labels[i] == c) members.push_back(i);
    Rng rng(seed ^ (0xa24baed4963ee407ULL + static_cast<std::uint64_t>(c)));
    rng.shuffle(members);
    const std::size_t val_count = members.size() >= 5 ? members.size() / 5
                                  : members.size() >= 2 ? 1
                                                        : 0;
    for (std::size_t i = 0; i < members.size(); ++i)
      (i < val_count ? s.test : s.train).push_back(members[i]);
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

}  // namespace

LayerTransform fit_layer_transform(const Eigen::MatrixXd& train,
                                   const std::vector<int>& train_labels, const std::string& layer,
                                   const PipelineConfig& config, int fold_tag,
                                   std::optional<AcdlResult>* acdl_result, int* selected_d) {
  if (train.cols() < 1) throw EmptyDatasetError("fit_layer_transform: no columns");
  if (static_cast<std::size_t>(train.cols()) != train_labels.size())
    throw DimensionError("fit_layer_transform: column/label count mismatch");

  LayerTransform t;
  t.mean = train.rowwise().mean();

  const LayerDataset ds = config.dims.mode == DimMode::none
                              ? LayerDataset{}
                              : class_ordered_dataset(train, train_labels, layer);
  const int full_d = static_cast<int>(std::min(train.rows(), train.cols()));

  const auto fit_pca_to = [&](int d) {
    const PcaModel model = pca_fit(ds, d);
    t.components = model.components;
    t.mean = model.mean;
  };

  switch (config.dims.mode) {
    case DimMode::none:
      break;
    case DimMode::fixed: {
      if (config.dims.fixed_d < 1) throw ParameterError("fixed dimensionality must be >= 1");
      fit_pca_to(std::min(config.dims.fixed_d, full_d));
      break;
    }
    case DimMode::variance: {
      const PcaModel full = pca_fit(ds, full_d);
      // a ratio of exactly 1 means "no reduction", not "up to numerical rank"
      const int d = config.dims.variance_ratio >= 1.0 - 1e-12
                        ? full_d
                        : dims_for_variance(full, config.dims.variance_ratio);
      t.components = full.components.topRows(d);
      t.mean = full.mean;
      break;
    }
    case DimMode::acdl: {
      AcdlConfig acdl_cfg = config.acdl_for(layer);
      acdl_cfg.seed = config.seed ^ fnv1a(layer) ^
                      (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(fold_tag + 1));
      AcdlResult res = acdl_fit(ds, acdl_cfg);
      const int d = std::min(res.d_selected, full_d);
      if (acdl_result) *acdl_result = std::move(res);
      fit_pca_to(d);
      break;
    }
  }

  // RMS feature norm over the training columns keeps kernel magnitudes tame
  Eigen::MatrixXd projected = train.colwise() - t.mean;
  if (t.components.size() > 0) projected = t.components * projected;
  const double rms = std::sqrt(projected.squaredNorm() / static_cast<double>(projected.cols()));
  t.feature_scale = rms > 0.0 ? rms : 1.0;
  if (selected_d) *selected_d = t.output_dim();
  return t;
}

StratifiedSplit stratified_split(const std::vector<int>& labels, std::uint64_t seed) {
  int class_count = 0;
  for (const int l : labels) class_count = std::max(class_count, l + 1);
  std::vector<std::size_t> all(labels.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const SplitIndices s = inner_split(all, labels, class_count, seed);
  return {s.train, s.test};
}

CrossValidationResult cross_validate(const std::vector<EmbeddingTable>& tables,
                                     const PipelineConfig& config) {
  if (tables.empty()) throw ParameterError("cross_validate: no embedding tables");
  const auto& first = tables.front();
  const std::size_t m = first.labels.size();
  for (const auto& t : tables) {
    if (t.labels != first.labels || t.folds != first.folds)
      throw ConsistencyError("cross_validate: tables disagree on labels or folds");
    if (static_cast<std::size_t>(t.features.cols()) != m)
      throw DimensionError("cross_validate: table column count mismatch");
  }
  int class_count = 0;
  for (const int l : first.labels) class_count = std::max(class_count, l + 1);

  std::set<int> fold_set(first.folds.begin(), first.folds.end());
  if (fold_set.size() < 2) throw ParameterError("cross_validate: need at least 2 folds");

  const auto grid = config.grid.enumerate();

  CrossValidationResult result;
  std::vector<double> fold_accuracies;
  int pooled_correct = 0;
  std::size_t pooled_total = 0;

  for (const int fold : fold_set) {
    FoldResult fr;
    fr.fold = fold;
    const SplitIndices split = split_by_fold(first.folds, fold);
    fr.test_columns = split.test;
    const auto train_labels = subset(first.labels, split.train);
    const auto test_labels = subset(first.labels, split.test);
    if (!has_all_classes(train_labels, class_count) || !has_all_classes(test_labels, class_count)) {
      fr.skipped = true;
      fr.skip_reason = "fold " + std::to_string(fold) + " is missing at least one class";
      result.warnings.push_back("degenerate fold skipped: " + fr.skip_reason);
      result.folds.push_back(std::move(fr));
      continue;
    }

    // fit transforms once per fold; kernel choice does not affect them
    struct Prepared {
      const EmbeddingTable* table;
      LayerTransform transform;
      std::optional<AcdlResult> acdl;
      int d;
      Eigen::MatrixXd train_z;
      Eigen::MatrixXd test_z;
    };
    std::vector<Prepared> prepared;
    for (const auto& table : tables) {
      Prepared p;
      p.table = &table;
      const Eigen::MatrixXd train = gather_columns(table.features, split.train);
      p.transform =
          fit_layer_transform(train, train_labels, table.layer, config, fold, &p.acdl, &p.d);
      p.train_z = p.transform.apply(train);
      p.test_z = p.transform.apply(gather_columns(table.features, split.test));
      prepared.push_back(std::move(p));
    }

    // grid selection on an inner split of the training columns
    KernelParams chosen = grid.front();
    if (grid.size() > 1) {
      const SplitIndices inner = inner_split(split.train, first.labels, class_count, config.seed);
      const auto inner_train_labels = subset(first.labels, inner.train);
      const auto inner_val_labels = subset(first.labels, inner.test);
      if (!inner.test.empty() && has_all_classes(inner_train_labels, class_count)) {
        double best_acc = -1.0;
        for (const auto& params : grid) {
          std::vector<Eigen::MatrixXd> probs;
          bool usable = true;
          for (const auto& p : prepared) {
            const Eigen::MatrixXd tr = p.transform.apply(gather_columns(p.table->features, inner.train));
            const Eigen::MatrixXd va = p.transform.apply(gather_columns(p.table->features, inner.test));
            try {
              const LayerClassifier clf =
                  train_layer_classifier(tr, inner_train_labels, params, config.train);
              probs.push_back(predict_proba(clf, va));
            } catch (const Error&) {
              usable = false;
              break;
            }
          }
          if (!usable) continue;
          const double acc =
              evaluate(late_fuse(probs, config.fusion), inner_val_labels).accuracy;
          if (acc > best_acc) {
            best_acc = acc;
            chosen = params;
          }
        }
      }
    }
    fr.chosen_kernel = chosen;

    std::vector<Eigen::MatrixXd> layer_probs;
    for (auto& p : prepared) {
      LayerFoldModel lm;
      lm.layer = p.table->layer;
      lm.n = static_cast<int>(p.table->features.rows());
      lm.d = p.d;
      lm.transform = p.transform;
      lm.acdl = std::move(p.acdl);
      lm.classifier = train_layer_classifier(p.train_z, train_labels, chosen, config.train);
      lm.classifier.layer = p.table->layer;
      lm.test_probs = predict_proba(lm.classifier, p.test_z);
      lm.solo_accuracy = evaluate(lm.test_probs, test_labels).accuracy;
      layer_probs.push_back(lm.test_probs);
      fr.layers.push_back(std::move(lm));
    }

    fr.fused_probs = late_fuse(layer_probs, config.fusion);
    const EvalReport ev = evaluate(fr.fused_probs, test_labels);
    fr.predictions = ev.predictions;
    fr.accuracy = ev.accuracy;
    fold_accuracies.push_back(ev.accuracy);
    for (std::size_t i = 0; i < test_labels.size(); ++i)
      if (ev.predictions[i] == test_labels[i]) ++pooled_correct;
    pooled_total += test_labels.size();
    result.folds.push_back(std::move(fr));
  }

  if (fold_accuracies.empty())
    throw DegenerateError("cross_validate: every fold was skipped as degenerate");
  result.mean_accuracy =
      std::accumulate(fold_accuracies.begin(), fold_accuracies.end(), 0.0) /
      static_cast<double>(fold_accuracies.size());
  result.pooled_accuracy = static_cast<double>(pooled_correct) / static_cast<double>(pooled_total);
  return result;
}

}  // namespace asckit
