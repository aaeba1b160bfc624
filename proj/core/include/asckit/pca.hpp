#ifndef ASCKIT_PCA_HPP
#define ASCKIT_PCA_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "asckit/net.hpp"

namespace asckit {

// Per-layer data matrix: one column per recording, columns grouped
// contiguously by class in ascending class order.
struct LayerDataset {
  Eigen::MatrixXd y;        // n_l x M
  std::vector<int> labels;  // M class indices, non-decreasing
  std::string layer;

  int class_count() const;
  std::vector<int> per_class_counts() const;
};

// Linear map n_l -> d_l fitted by PCA on the column-centered data. Rows of
// `components` are orthonormal; the full singular spectrum is kept so that
// explained-variance queries stay answerable after truncation.
struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;       // d_l x n_l
  Eigen::VectorXd singular_values;  // min(n_l, M), non-increasing
  int d = 0;
};

// Stacks aggregated embeddings (all from the same tap) into a class-ordered
// data matrix. Within a class the incoming order is preserved.
LayerDataset assemble_layer_dataset(const std::vector<AggregatedEmbedding>& embeddings,
                                    const std::vector<int>& labels);

PcaModel pca_fit(const LayerDataset& y, int d);

Eigen::MatrixXd pca_transform(const PcaModel& m, const Eigen::MatrixXd& y);

// Singular values of the centered matrix divided by the largest one.
// `class_filter` >= 0 restricts the computation to that class's columns;
// the default fits the whole dataset jointly.
Eigen::VectorXd singular_spectrum(const LayerDataset& y, int class_filter = -1);

// Smallest d whose leading components explain at least `ratio` of the
// variance (sum of squared singular values).
int dims_for_variance(const PcaModel& m, double ratio);

}  // namespace asckit

#endif
