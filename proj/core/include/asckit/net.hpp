#ifndef ASCKIT_NET_HPP
#define ASCKIT_NET_HPP

#include <Eigen/Dense>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "asckit/audio.hpp"
#include "asckit/rng.hpp"
#include "asckit/tensor_file.hpp"

namespace asckit {

enum class LayerKind { conv, batchnorm, relu, maxpool };

// One link of the forward chain. `param_group` names the weight-file prefix
// shared by a conv layer and its batchnorm (`<group>.kernel`, `<group>.bias`,
// `<group>.bn_scale`, `<group>.bn_shift`, `<group>.bn_mean`, `<group>.bn_var`).
struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::conv;
  int filters = 0;       // output rows for conv, row count otherwise
  int kernel_width = 0;  // conv only
  int stride = 1;        // conv and maxpool
  int pool_width = 0;    // maxpool only
  std::string param_group;
};

// Activations of one tapped layer: rows = filters, columns = time steps.
struct FeatureMapMatrix {
  Eigen::MatrixXd values;
  std::string layer;
};

// Per-filter global sums over time for one recording.
struct AggregatedEmbedding {
  Eigen::VectorXd values;
  std::string layer;
  std::string recording_id;
};

// Valid cross-correlation with stride. kernel[o] is the n_in x width slice
// producing output row o; output length is floor((s - width) / stride) + 1.
Eigen::MatrixXd conv1d(const Eigen::MatrixXd& input, const std::vector<Eigen::MatrixXd>& kernel,
                       const Eigen::VectorXd& bias, int stride);

// Inference-mode batchnorm: per row (x - mean) / sqrt(var + eps) * scale + shift.
Eigen::MatrixXd batchnorm_infer(const Eigen::MatrixXd& input, const Eigen::VectorXd& scale,
                                const Eigen::VectorXd& shift, const Eigen::VectorXd& mean,
                                const Eigen::VectorXd& variance, double epsilon);

Eigen::MatrixXd maxpool1d(const Eigen::MatrixXd& input, int width, int stride);

AggregatedEmbedding global_sum_pool(const FeatureMapMatrix& x, const std::string& recording_id = "");

struct ConvWeights {
  std::vector<Eigen::MatrixXd> kernel;
  Eigen::VectorXd bias;
};

struct BatchNormWeights {
  Eigen::VectorXd scale, shift, mean, variance;
};

// Immutable after weights are attached; forward passes over distinct
// waveforms can then run concurrently against the same instance.
class Network {
 public:
  explicit Network(std::vector<LayerSpec> chain, int input_rows = 1);

  const std::vector<LayerSpec>& chain() const { return chain_; }
  bool has_layer(const std::string& name) const;
  int layer_filters(const std::string& name) const;

  // Loads tensors into the chain, validating every shape. Missing or
  // misshaped tensors are reported by name.
  void attach_weights(const std::vector<NamedTensor>& tensors);

  // Seeded random parameters for synthetic experiments.
  void randomize_weights(Rng& rng);

  std::vector<NamedTensor> export_weights() const;

  double batchnorm_epsilon() const { return epsilon_; }
  void set_batchnorm_epsilon(double eps) { epsilon_ = eps; }

  // Single pass computing every requested tap. `p-<block>` taps carry
  // post-batchnorm pre-ReLU values, `<block>` taps post-ReLU values.
  std::map<std::string, FeatureMapMatrix> forward_with_taps(
      const Waveform& w, const std::vector<std::string>& taps) const;

  // Closed-form output length of every layer for a given input length;
  // <= 0 means the input dies at that layer.
  std::vector<long> layer_output_lengths(long input_len) const;

 private:
  struct Slot {
    LayerSpec spec;
    int input_rows = 0;
    ConvWeights conv;
    BatchNormWeights bn;
  };

  std::vector<Slot> slots_;
  std::vector<LayerSpec> chain_;
  double epsilon_ = 1e-5;
  bool weights_ready_ = false;
};

// Appends conv -> batchnorm -> relu with taps `<name>.pre`, `p-<name>`, `<name>`.
void append_conv_block(std::vector<LayerSpec>& chain, const std::string& name, int filters,
                       int kernel_width, int stride);

void append_maxpool(std::vector<LayerSpec>& chain, const std::string& name, int width, int stride);

// Reference 8-block geometry with filter counts doubling 16..1024 and pools
// after blocks 1, 2 and 5. Only blocks 3..7 are tapped by default.
std::vector<LayerSpec> soundnet_chain();

// The ten default taps p-conv3, conv3, ..., p-conv7, conv7.
std::vector<std::string> default_taps();

}  // namespace asckit

#endif
