#ifndef ASCKIT_ACDL_HPP
#define ASCKIT_ACDL_HPP

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "asckit/pca.hpp"

namespace asckit {

// Automatic compact dictionary learning: joint reconstruction/classification
// dictionary fit with simplex-constrained codes and correlated-atom pruning.
// The surviving atom count is the selected embedding dimensionality.

struct AcdlConfig {
  double gamma = 1.0;              // classification-loss weight
  double lambda = 0.1;             // sparsity weight; constant on the simplex, logged only
  double tau = 0.5;                // pruning threshold in [0, 1]
  double stop_recon_error = 0.01;  // relative Frobenius stopping criterion
  int max_outer_iters = 200;
  int initial_atoms_per_class = 16;
  std::uint64_t seed = 0;
  bool normalize_columns = true;   // unit-l2 columns before fitting
  int max_inner_iters = 200;       // projected-gradient steps per sparse code
  double inner_tolerance = 1e-10;
};

struct CompactDictionary {
  Eigen::MatrixXd atoms;          // A: n x K, dead columns zeroed
  Eigen::MatrixXd weights;        // W: C x K
  std::vector<bool> alive;        // liveness mask, length K
  std::vector<int> atom_class;    // class each atom belongs to (fixed at init)
  Eigen::MatrixXd labels_onehot;  // G: C x M
  Eigen::MatrixXd codes;          // Z: K x M, rows of dead atoms zeroed

  int alive_count() const;
  std::vector<Eigen::Index> alive_indices() const;
  int alive_count_in_class(int c) const;
};

struct AcdlIterationRecord {
  int alive_atoms = 0;
  double relative_recon_error = 0.0;
  double classification_loss = 0.0;  // ||G - WZ||_F^2, unweighted
};

struct AcdlResult {
  CompactDictionary dictionary;
  int d_selected = 0;
  std::vector<double> recon_error_trace;
  std::vector<AcdlIterationRecord> iteration_records;
  int iterations = 0;
  bool converged = false;
  double code_l1_norm = 0.0;  // ||Z||_1 at exit; equals M on the simplex
};

// Called after every outer iteration; used by invariant checks and trace export.
using AcdlObserver =
    std::function<void(int iteration, const CompactDictionary& dict, double recon_error)>;

// Euclidean projection onto {z : z >= 0, sum z = 1}.
Eigen::VectorXd simplex_project(const Eigen::VectorXd& v);

struct SparseCodeOptions {
  double gamma = 1.0;
  int max_iters = 200;
  double tolerance = 1e-10;
};

// Approximate minimizer of ||y - Az||^2 + gamma ||g - Wz||^2 over the simplex
// by projected gradient descent; the objective never increases across steps.
Eigen::VectorXd sparse_code(const Eigen::MatrixXd& atoms, const Eigen::MatrixXd& weights,
                            const Eigen::VectorXd& y, const Eigen::VectorXd& g,
                            const SparseCodeOptions& opt,
                            const Eigen::VectorXd* warm_start = nullptr);

// Same-class atoms closer than tau times the global alive diameter are
// redundant; the pair member with the smaller sum of w~ ln w~ over its
// softmax-normalized absolute weight column dies. A class never loses its
// last atom. Returns the number of atoms killed.
int eliminate_atoms(CompactDictionary& dict, double tau);

AcdlResult acdl_fit(const LayerDataset& y, const AcdlConfig& config,
                    const AcdlObserver& observer = {});

struct LayerDimSelection {
  int n = 0;
  int d = 0;
  double compression_ratio = 0.0;  // 1 - d/n
  bool converged = false;
  AcdlResult result;
};

// Runs acdl_fit for every layer; a non-converged layer is reported in place
// rather than aborting the others.
std::map<std::string, LayerDimSelection> select_layer_dims(
    const std::map<std::string, LayerDataset>& datasets,
    const std::map<std::string, AcdlConfig>& configs);

}  // namespace asckit

#endif
