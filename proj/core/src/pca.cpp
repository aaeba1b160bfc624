#include "asckit/pca.hpp"

#include <algorithm>
#include <numeric>

#include "asckit/errors.hpp"

namespace asckit {

int LayerDataset::class_count() const {
  int c = 0;
  for (const int l : labels) c = std::max(c, l + 1);
  return c;
}

std::vector<int> LayerDataset::per_class_counts() const {
  std::vector<int> counts(static_cast<std::size_t>(class_count()), 0);
  for (const int l : labels) counts[static_cast<std::size_t>(l)]++;
  return counts;
}

LayerDataset assemble_layer_dataset(const std::vector<AggregatedEmbedding>& embeddings,
                                    const std::vector<int>& labels) {
  if (embeddings.empty()) throw EmptyDatasetError("no embeddings to assemble");
  if (embeddings.size() != labels.size())
    throw DimensionError("embedding count does not match label count");
  const std::string& layer = embeddings.front().layer;
  const Eigen::Index n = embeddings.front().values.size();
  for (const auto& e : embeddings) {
    if (e.layer != layer)
      throw ConsistencyError("mixed layers in dataset: " + layer + " vs " + e.layer);
    if (e.values.size() != n) throw DimensionError("embedding length mismatch in layer " + layer);
  }
  for (const int l : labels)
    if (l < 0) throw ParameterError("negative class label");

  // stable sort by class keeps within-class input order
  std::vector<std::size_t> order(embeddings.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });

  LayerDataset out;
  out.layer = layer;
  out.y.resize(n, static_cast<Eigen::Index>(embeddings.size()));
  out.labels.resize(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.y.col(static_cast<Eigen::Index>(i)) = embeddings[order[i]].values;
    out.labels[i] = labels[order[i]];
  }
  return out;
}

namespace {

// Deterministic sign convention: the largest-magnitude entry of each
// component is made positive.
void fix_signs(Eigen::MatrixXd& components) {
  for (Eigen::Index r = 0; r < components.rows(); ++r) {
    Eigen::Index at = 0;
    components.row(r).cwiseAbs().maxCoeff(&at);
    if (components(r, at) < 0.0) components.row(r) = -components.row(r);
  }
}

}  // namespace

PcaModel pca_fit(const LayerDataset& y, int d) {
  const Eigen::Index n = y.y.rows();
  const Eigen::Index m = y.y.cols();
  if (d < 1 || d > std::min(n, m))
    throw ParameterError("pca_fit: d = " + std::to_string(d) + " outside [1, " +
                         std::to_string(std::min(n, m)) + "]");

  PcaModel model;
  model.mean = y.y.rowwise().mean();
  const Eigen::MatrixXd centered = y.y.colwise() - model.mean;
  // SVD of the centered matrix itself, not its covariance
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
  model.singular_values = svd.singularValues();
  model.components = svd.matrixU().leftCols(d).transpose();
  fix_signs(model.components);
  model.d = d;
  return model;
}

Eigen::MatrixXd pca_transform(const PcaModel& m, const Eigen::MatrixXd& y) {
  if (y.rows() != m.mean.size())
    throw DimensionError("pca_transform: input rows " + std::to_string(y.rows()) +
                         " do not match model dimension " + std::to_string(m.mean.size()));
  return m.components * (y.colwise() - m.mean);
}

Eigen::VectorXd singular_spectrum(const LayerDataset& y, int class_filter) {
  Eigen::MatrixXd cols = y.y;
  if (class_filter >= 0) {
    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < y.labels.size(); ++i)
      if (y.labels[i] == class_filter) keep.push_back(static_cast<Eigen::Index>(i));
    if (keep.empty())
      throw ParameterError("singular_spectrum: class " + std::to_string(class_filter) +
                           " has no columns");
    cols.resize(y.y.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i)
      cols.col(static_cast<Eigen::Index>(i)) = y.y.col(keep[i]);
  }
  const Eigen::MatrixXd centered = cols.colwise() - cols.rowwise().mean().eval();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered);
  Eigen::VectorXd s = svd.singularValues();
  if (s.size() == 0 || s(0) <= 0.0)
    throw DegenerateError("singular_spectrum: matrix has no variance (all columns equal)");
  return s / s(0);
}

int dims_for_variance(const PcaModel& m, double ratio) {
  if (!(ratio > 0.0) || ratio > 1.0)
    throw ParameterError("dims_for_variance: ratio must lie in (0, 1]");
  if (m.singular_values.size() == 0) throw ParameterError("dims_for_variance: empty spectrum");

  const Eigen::ArrayXd var = m.singular_values.array().square();
  const double total = var.sum();
  if (total <= 0.0) return 1;
  double prefix = 0.0;
  // small slack so ratio = 1.0 returns the numerical rank
  const double target = total * (ratio - 1e-12);
  for (Eigen::Index i = 0; i < var.size(); ++i) {
    prefix += var(i);
    if (prefix >= target) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(var.size());
}

}  // namespace asckit
