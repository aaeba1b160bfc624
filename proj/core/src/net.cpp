#include "asckit/net.hpp"

#include <cmath>

#include "asckit/errors.hpp"

namespace asckit {

Eigen::MatrixXd conv1d(const Eigen::MatrixXd& input, const std::vector<Eigen::MatrixXd>& kernel,
                       const Eigen::VectorXd& bias, int stride) {
  if (kernel.empty()) throw DimensionError("conv1d: empty kernel");
  const auto n_out = static_cast<Eigen::Index>(kernel.size());
  const Eigen::Index n_in = kernel[0].rows();
  const Eigen::Index width = kernel[0].cols();
  if (stride < 1) throw ParameterError("conv1d: stride must be >= 1");
  if (bias.size() != n_out) throw DimensionError("conv1d: bias length does not match filter count");
  for (const auto& k : kernel)
    if (k.rows() != n_in || k.cols() != width)
      throw DimensionError("conv1d: ragged kernel slices");
  if (input.rows() != n_in)
    throw DimensionError("conv1d: kernel expects " + std::to_string(n_in) + " input rows, got " +
                         std::to_string(input.rows()));
  if (input.cols() < width)
    throw DimensionError("conv1d: input length " + std::to_string(input.cols()) +
                         " shorter than kernel width " + std::to_string(width));

  const Eigen::Index out_len = (input.cols() - width) / stride + 1;
  Eigen::MatrixXd out(n_out, out_len);
  for (Eigen::Index o = 0; o < n_out; ++o) {
    for (Eigen::Index t = 0; t < out_len; ++t) {
      out(o, t) = bias(o) +
                  kernel[static_cast<std::size_t>(o)]
                      .cwiseProduct(input.block(0, t * stride, n_in, width))
                      .sum();
    }
  }
  return out;
}

Eigen::MatrixXd batchnorm_infer(const Eigen::MatrixXd& input, const Eigen::VectorXd& scale,
                                const Eigen::VectorXd& shift, const Eigen::VectorXd& mean,
                                const Eigen::VectorXd& variance, double epsilon) {
  const Eigen::Index n = input.rows();
  if (scale.size() != n || shift.size() != n || mean.size() != n || variance.size() != n)
    throw DimensionError("batchnorm_infer: parameter length does not match row count");
  if ((variance.array() <= 0.0).any())
    throw ParameterError("batchnorm_infer: non-positive running variance entry");

  Eigen::MatrixXd out(n, input.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double inv = 1.0 / std::sqrt(variance(i) + epsilon);
    out.row(i) = (input.row(i).array() - mean(i)) * (inv * scale(i)) + shift(i);
  }
  return out;
}

Eigen::MatrixXd maxpool1d(const Eigen::MatrixXd& input, int width, int stride) {
  if (width < 1 || stride < 1) throw ParameterError("maxpool1d: width and stride must be >= 1");
  if (input.cols() < width)
    throw DimensionError("maxpool1d: input length " + std::to_string(input.cols()) +
                         " shorter than pool width " + std::to_string(width));
  const Eigen::Index out_len = (input.cols() - width) / stride + 1;
  Eigen::MatrixXd out(input.rows(), out_len);
  for (Eigen::Index t = 0; t < out_len; ++t)
    out.col(t) = input.block(0, t * stride, input.rows(), width).rowwise().maxCoeff();
  return out;
}

AggregatedEmbedding global_sum_pool(const FeatureMapMatrix& x, const std::string& recording_id) {
  AggregatedEmbedding e;
  e.values = x.values.rowwise().sum();
  e.layer = x.layer;
  e.recording_id = recording_id;
  return e;
}

Network::Network(std::vector<LayerSpec> chain, int input_rows) {
  if (chain.empty()) throw ParameterError("network chain is empty");
  if (input_rows < 1) throw ParameterError("network input rows must be >= 1");

  std::set<std::string> names;
  int rows = input_rows;
  for (auto& spec : chain) {
    if (spec.name.empty()) throw ParameterError("layer with empty name");
    if (!names.insert(spec.name).second)
      throw ParameterError("duplicate layer name: " + spec.name);
    Slot slot;
    slot.input_rows = rows;
    switch (spec.kind) {
      case LayerKind::conv:
        if (spec.filters < 1 || spec.kernel_width < 1 || spec.stride < 1)
          throw ParameterError("conv layer " + spec.name + ": bad geometry");
        rows = spec.filters;
        break;
      case LayerKind::batchnorm:
      case LayerKind::relu:
        spec.filters = rows;
        break;
      case LayerKind::maxpool:
        if (spec.pool_width < 1 || spec.stride < 1)
          throw ParameterError("maxpool layer " + spec.name + ": bad geometry");
        spec.filters = rows;
        break;
    }
    slot.spec = spec;
    slots_.push_back(std::move(slot));
    chain_.push_back(slots_.back().spec);
  }
}

bool Network::has_layer(const std::string& name) const {
  for (const auto& s : slots_)
    if (s.spec.name == name) return true;
  return false;
}

int Network::layer_filters(const std::string& name) const {
  for (const auto& s : slots_)
    if (s.spec.name == name) return s.spec.filters;
  throw ParameterError("unknown layer: " + name);
}

void Network::attach_weights(const std::vector<NamedTensor>& tensors) {
  for (auto& slot : slots_) {
    const auto& spec = slot.spec;
    if (spec.kind == LayerKind::conv) {
      const std::string base = spec.param_group.empty() ? spec.name : spec.param_group;
      const auto* kt = find_tensor(tensors, base + ".kernel");
      const auto* bt = find_tensor(tensors, base + ".bias");
      if (!kt || !bt) throw FormatError("missing weights for conv block " + base);
      if (kt->dims.size() != 3 || static_cast<int>(kt->dims[0]) != spec.filters ||
          static_cast<int>(kt->dims[1]) != slot.input_rows ||
          static_cast<int>(kt->dims[2]) != spec.kernel_width)
        throw DimensionError("tensor " + kt->name + ": shape does not match chain");
      if (bt->dims.size() != 1 || static_cast<int>(bt->dims[0]) != spec.filters)
        throw DimensionError("tensor " + bt->name + ": shape does not match chain");
      slot.conv.kernel.assign(static_cast<std::size_t>(spec.filters),
                              Eigen::MatrixXd(slot.input_rows, spec.kernel_width));
      std::size_t idx = 0;
      for (int o = 0; o < spec.filters; ++o)
        for (int i = 0; i < slot.input_rows; ++i)
          for (int k = 0; k < spec.kernel_width; ++k)
            slot.conv.kernel[static_cast<std::size_t>(o)](i, k) = kt->values[idx++];
      slot.conv.bias = Eigen::Map<const Eigen::VectorXd>(bt->values.data(), spec.filters);
    } else if (spec.kind == LayerKind::batchnorm) {
      const std::string base = spec.param_group.empty() ? spec.name : spec.param_group;
      const char* parts[] = {".bn_scale", ".bn_shift", ".bn_mean", ".bn_var"};
      Eigen::VectorXd* dest[] = {&slot.bn.scale, &slot.bn.shift, &slot.bn.mean, &slot.bn.variance};
      for (int p = 0; p < 4; ++p) {
        const auto* t = find_tensor(tensors, base + parts[p]);
        if (!t) throw FormatError("missing tensor " + base + parts[p]);
        if (t->dims.size() != 1 || static_cast<int>(t->dims[0]) != spec.filters)
          throw DimensionError("tensor " + t->name + ": shape does not match chain");
        *dest[p] = Eigen::Map<const Eigen::VectorXd>(t->values.data(), spec.filters);
      }
      if ((slot.bn.variance.array() <= 0.0).any())
        throw ParameterError("batchnorm " + spec.name + ": non-positive running variance");
    }
  }
  weights_ready_ = true;
}

void Network::randomize_weights(Rng& rng) {
  for (auto& slot : slots_) {
    const auto& spec = slot.spec;
    if (spec.kind == LayerKind::conv) {
      const double sigma = 1.0 / std::sqrt(static_cast<double>(slot.input_rows) * spec.kernel_width);
      slot.conv.kernel.assign(static_cast<std::size_t>(spec.filters),
                              Eigen::MatrixXd(slot.input_rows, spec.kernel_width));
      for (int o = 0; o < spec.filters; ++o)
        for (int i = 0; i < slot.input_rows; ++i)
          for (int k = 0; k < spec.kernel_width; ++k)
            slot.conv.kernel[static_cast<std::size_t>(o)](i, k) = rng.normal(0.0, sigma);
      slot.conv.bias = Eigen::VectorXd(spec.filters);
      for (int o = 0; o < spec.filters; ++o) slot.conv.bias(o) = rng.normal(0.0, 0.01);
    } else if (spec.kind == LayerKind::batchnorm) {
      slot.bn.scale = Eigen::VectorXd(spec.filters);
      slot.bn.shift = Eigen::VectorXd(spec.filters);
      slot.bn.mean = Eigen::VectorXd(spec.filters);
      slot.bn.variance = Eigen::VectorXd(spec.filters);
      for (int i = 0; i < spec.filters; ++i) {
        slot.bn.scale(i) = 1.0 + rng.normal(0.0, 0.1);
        slot.bn.shift(i) = rng.normal(0.0, 0.05);
        slot.bn.mean(i) = rng.normal(0.0, 0.1);
        slot.bn.variance(i) = rng.uniform(0.5, 1.5);
      }
    }
  }
  weights_ready_ = true;
}

std::vector<NamedTensor> Network::export_weights() const {
  if (!weights_ready_) throw ParameterError("network has no weights to export");
  std::vector<NamedTensor> out;
  for (const auto& slot : slots_) {
    const auto& spec = slot.spec;
    const std::string base = spec.param_group.empty() ? spec.name : spec.param_group;
    if (spec.kind == LayerKind::conv) {
      NamedTensor k{base + ".kernel",
                    {static_cast<std::uint32_t>(spec.filters),
                     static_cast<std::uint32_t>(slot.input_rows),
                     static_cast<std::uint32_t>(spec.kernel_width)},
                    {}};
      k.values.reserve(k.element_count());
      for (int o = 0; o < spec.filters; ++o)
        for (int i = 0; i < slot.input_rows; ++i)
          for (int w = 0; w < spec.kernel_width; ++w)
            k.values.push_back(slot.conv.kernel[static_cast<std::size_t>(o)](i, w));
      out.push_back(std::move(k));
      NamedTensor b{base + ".bias", {static_cast<std::uint32_t>(spec.filters)}, {}};
      b.values.assign(slot.conv.bias.data(), slot.conv.bias.data() + slot.conv.bias.size());
      out.push_back(std::move(b));
    } else if (spec.kind == LayerKind::batchnorm) {
      const char* parts[] = {".bn_scale", ".bn_shift", ".bn_mean", ".bn_var"};
      const Eigen::VectorXd* src[] = {&slot.bn.scale, &slot.bn.shift, &slot.bn.mean,
                                      &slot.bn.variance};
      for (int p = 0; p < 4; ++p) {
        NamedTensor t{base + parts[p], {static_cast<std::uint32_t>(spec.filters)}, {}};
        t.values.assign(src[p]->data(), src[p]->data() + src[p]->size());
        out.push_back(std::move(t));
      }
    }
  }
  return out;
}

std::map<std::string, FeatureMapMatrix> Network::forward_with_taps(
    const Waveform& w, const std::vector<std::string>& taps) const {
  if (!weights_ready_) throw ParameterError("network weights not loaded");
  if (w.samples.empty()) throw ParameterError("empty waveform");
  std::set<std::string> wanted(taps.begin(), taps.end());
  for (const auto& t : taps)
    if (!has_layer(t)) throw ParameterError("unknown tap: " + t);

  Eigen::MatrixXd cur(1, static_cast<Eigen::Index>(w.samples.size()));
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    cur(0, static_cast<Eigen::Index>(i)) = w.samples[i];

  std::map<std::string, FeatureMapMatrix> out;
  for (const auto& slot : slots_) {
    const auto& spec = slot.spec;
    switch (spec.kind) {
      case LayerKind::conv:
        if (cur.cols() < spec.kernel_width)
          throw DimensionError("layer " + spec.name + ": input length " +
                               std::to_string(cur.cols()) + " shorter than kernel width " +
                               std::to_string(spec.kernel_width) + " (waveform too short)");
        cur = conv1d(cur, slot.conv.kernel, slot.conv.bias, spec.stride);
        break;
      case LayerKind::batchnorm:
        cur = batchnorm_infer(cur, slot.bn.scale, slot.bn.shift, slot.bn.mean, slot.bn.variance,
                              epsilon_);
        break;
      case LayerKind::relu:
        cur = cur.cwiseMax(0.0);
        break;
      case LayerKind::maxpool:
        if (cur.cols() < spec.pool_width)
          throw DimensionError("layer " + spec.name + ": input length " +
                               std::to_string(cur.cols()) + " shorter than pool width " +
                               std::to_string(spec.pool_width) + " (waveform too short)");
        cur = maxpool1d(cur, spec.pool_width, spec.stride);
        break;
    }
    if (wanted.count(spec.name)) out[spec.name] = FeatureMapMatrix{cur, spec.name};
  }
  return out;
}

std::vector<long> Network::layer_output_lengths(long input_len) const {
  std::vector<long> lengths;
  long s = input_len;
  for (const auto& slot : slots_) {
    const auto& spec = slot.spec;
    if (spec.kind == LayerKind::conv)
      s = s >= spec.kernel_width ? (s - spec.kernel_width) / spec.stride + 1 : 0;
    else if (spec.kind == LayerKind::maxpool)
      s = s >= spec.pool_width ? (s - spec.pool_width) / spec.stride + 1 : 0;
    lengths.push_back(s);
  }
  return lengths;
}

void append_conv_block(std::vector<LayerSpec>& chain, const std::string& name, int filters,
                       int kernel_width, int stride) {
  LayerSpec conv{name + ".pre", LayerKind::conv, filters, kernel_width, stride, 0, name};
  LayerSpec bn{"p-" + name, LayerKind::batchnorm, filters, 0, 1, 0, name};
  LayerSpec act{name, LayerKind::relu, filters, 0, 1, 0, name};
  chain.push_back(std::move(conv));
  chain.push_back(std::move(bn));
  chain.push_back(std::move(act));
}

void append_maxpool(std::vector<LayerSpec>& chain, const std::string& name, int width, int stride) {
  LayerSpec pool{name, LayerKind::maxpool, 0, 0, stride, width, name};
  chain.push_back(std::move(pool));
}

std::vector<LayerSpec> soundnet_chain() {
  std::vector<LayerSpec> chain;
  append_conv_block(chain, "conv1", 16, 64, 2);
  append_maxpool(chain, "pool1", 8, 8);
  append_conv_block(chain, "conv2", 32, 32, 2);
  append_maxpool(chain, "pool2", 8, 8);
  append_conv_block(chain, "conv3", 64, 16, 2);
  append_conv_block(chain, "conv4", 128, 8, 2);
  append_conv_block(chain, "conv5", 256, 4, 2);
  append_maxpool(chain, "pool5", 4, 4);
  append_conv_block(chain, "conv6", 512, 4, 2);
  append_conv_block(chain, "conv7", 1024, 4, 2);
  return chain;
}

std::vector<std::string> default_taps() {
  std::vector<std::string> taps;
  for (int x = 3; x <= 7; ++x) {
    taps.push_back("p-conv" + std::to_string(x));
    taps.push_back("conv" + std::to_string(x));
  }
  return taps;
}

}  // namespace asckit
