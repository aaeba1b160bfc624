#include "asckit/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "asckit/audio.hpp"
#include "asckit/errors.hpp"
#include "asckit/rng.hpp"
#include "asckit/tensor_file.hpp"

namespace asckit {

LayerDataset make_subspace_dataset(const SubspaceSpec& spec, std::uint64_t seed,
                                   const std::string& layer) {
  if (spec.classes < 1 || spec.subspace_dim < 1 || spec.examples_per_class < 1)
    throw ParameterError("make_subspace_dataset: counts must be positive");
  if (spec.classes * spec.subspace_dim > spec.ambient_dim)
    throw ParameterError("make_subspace_dataset: blocks do not fit the ambient dimension");

  Rng rng(seed);

  // extreme points of class c live in coordinate block [c*k, (c+1)*k)
  const int k = spec.subspace_dim;
  std::vector<std::vector<Eigen::VectorXd>> extremes(static_cast<std::size_t>(spec.classes));
  for (int c = 0; c < spec.classes; ++c) {
    for (int j = 0; j < k; ++j) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(spec.ambient_dim);
      e(c * k + j) = 1.0;
      for (int r = 0; r < k; ++r) e(c * k + r) += 0.15 * rng.normal();
      e *= spec.scale / e.norm();
      extremes[static_cast<std::size_t>(c)].push_back(std::move(e));
    }
  }

  const Eigen::Index m =
      static_cast<Eigen::Index>(spec.classes) * static_cast<Eigen::Index>(spec.examples_per_class);
  LayerDataset out;
  out.layer = layer;
  out.y.resize(spec.ambient_dim, m);
  out.labels.reserve(static_cast<std::size_t>(m));

  Eigen::Index col = 0;
  for (int c = 0; c < spec.classes; ++c) {
    for (int i = 0; i < spec.examples_per_class; ++i) {
      Eigen::VectorXd x = Eigen::VectorXd::Zero(spec.ambient_dim);
      if (spec.convex) {
        const auto w = rng.dirichlet(static_cast<std::size_t>(k), spec.dirichlet_alpha);
        for (int j = 0; j < k; ++j)
          x += w[static_cast<std::size_t>(j)] * extremes[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
      } else {
        for (int j = 0; j < k; ++j)
          x += rng.normal() / std::sqrt(static_cast<double>(k)) *
               extremes[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
      }
      for (Eigen::Index r = 0; r < x.size(); ++r) x(r) += spec.noise_sigma * rng.normal();
      out.y.col(col++) = x;
      out.labels.push_back(c);
    }
  }
  return out;
}

std::vector<LayerSpec> tiny_chain() {
  std::vector<LayerSpec> chain;
  append_conv_block(chain, "conv1", 8, 15, 2);
  append_maxpool(chain, "conv1_pool", 4, 4);
  append_conv_block(chain, "conv2", 16, 7, 2);
  append_maxpool(chain, "conv2_pool", 2, 2);
  append_conv_block(chain, "conv3", 32, 5, 2);
  return chain;
}

// p-conv1 is omitted: a pre-activation tap of the first layer is a linear
// functional of the waveform, so its sum-pooled embedding is essentially the
// clip mean level -- rank one and useless as a feature
std::vector<std::string> tiny_taps() {
  return {"conv1", "p-conv2", "conv2", "p-conv3", "conv3"};
}

namespace {

std::string scene_name(int c) {
  std::string n = std::to_string(c);
  if (n.size() < 2) n.insert(n.begin(), '0');
  return "scene_" + n;
}

// Band-limited class template: a few inharmonic partials in a class-specific
// band on top of a class-specific DC offset.
std::vector<Eigen::VectorXd> make_prototypes(const AudioBenchmarkSpec& spec, int c, Rng& rng) {
  const double nyquist = spec.sample_rate / 2.0;
  const double base = nyquist * (0.08 + 0.8 * c / static_cast<double>(spec.classes));
  const double dc = spec.dc_step * (c - (spec.classes - 1) / 2.0);
  const double ratios[3] = {1.0, 1.33, 1.79};

  std::vector<Eigen::VectorXd> protos;
  for (int p = 0; p < spec.prototypes_per_class; ++p) {
    // each prototype sits at its own spot inside the class band; pooling is
    // phase-blind, so phase alone would not tell prototypes apart
    const double shift =
        1.0 + 0.22 * p / std::max(1, spec.prototypes_per_class - 1);
    Eigen::VectorXd w = Eigen::VectorXd::Constant(spec.samples, dc);
    double amps[3];
    double total = 0.0;
    for (double& a : amps) total += a = rng.uniform(0.4, 1.0);
    for (int h = 0; h < 3; ++h) {
      const double freq = std::min(base * shift * ratios[h], nyquist * 0.9);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double amp = spec.amplitude * amps[h] / total;
      for (int t = 0; t < spec.samples; ++t)
        w(t) += amp * std::sin(2.0 * std::numbers::pi * freq * t / spec.sample_rate + phase);
    }
    protos.push_back(std::move(w));
  }
  return protos;
}

}  // namespace

BenchmarkPaths write_audio_benchmark(const std::string& dir, const AudioBenchmarkSpec& spec,
                                     std::uint64_t seed) {
  if (spec.classes < 2 || spec.folds < 2)
    throw ParameterError("write_audio_benchmark: need >= 2 classes and >= 2 folds");
  if (spec.clips_per_class_per_fold < 1 || spec.samples < 64 || spec.prototypes_per_class < 1)
    throw ParameterError("write_audio_benchmark: degenerate size parameters");

  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "wavs");

  Rng rng(seed);
  std::vector<std::vector<Eigen::VectorXd>> protos;
  for (int c = 0; c < spec.classes; ++c) protos.push_back(make_prototypes(spec, c, rng));

  BenchmarkPaths paths;
  paths.root = dir;
  paths.manifest = (fs::path(dir) / "manifest.tsv").string();
  paths.weights = (fs::path(dir) / "weights.snd1").string();
  paths.config = (fs::path(dir) / "benchmark.conf").string();

  std::ofstream manifest(paths.manifest);
  if (!manifest) throw FormatError("cannot write " + paths.manifest);
  manifest << "path\tlabel\tfold\n";
  for (int f = 0; f < spec.folds; ++f) {
    for (int c = 0; c < spec.classes; ++c) {
      for (int i = 0; i < spec.clips_per_class_per_fold; ++i) {
        const auto weights =
            rng.dirichlet(static_cast<std::size_t>(spec.prototypes_per_class), spec.dirichlet_alpha);
        Eigen::VectorXd x = Eigen::VectorXd::Zero(spec.samples);
        for (int p = 0; p < spec.prototypes_per_class; ++p)
          x += weights[static_cast<std::size_t>(p)] * protos[static_cast<std::size_t>(c)][static_cast<std::size_t>(p)];
        x *= rng.uniform(1.0 - spec.gain_jitter, 1.0 + spec.gain_jitter);
        for (int b = 0; b < spec.background_tones; ++b) {
          const double freq = spec.sample_rate * rng.uniform(0.05, 0.45);
          const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
          const double amp = rng.uniform(0.0, spec.background_amp);
          for (int t = 0; t < spec.samples; ++t)
            x(t) += amp * std::sin(2.0 * std::numbers::pi * freq * t / spec.sample_rate + phase);
        }
        for (int t = 0; t < spec.samples; ++t) x(t) += spec.noise_sigma * rng.normal();

        Waveform w;
        w.sample_rate = spec.sample_rate;
        w.samples.assign(x.data(), x.data() + x.size());
        const std::string rel = "wavs/" + scene_name(c) + "_f" + std::to_string(f) + "_" +
                                std::to_string(i) + ".wav";
        write_wav((fs::path(dir) / rel).string(), w);
        manifest << rel << '\t' << scene_name(c) << '\t' << f << '\n';
      }
    }
  }
  manifest.close();

  Network net(tiny_chain());
  Rng weight_rng(seed ^ 0x517e57ab1e5eedULL);
  net.randomize_weights(weight_rng);
  write_tensor_file(paths.weights, net.export_weights());

  std::ofstream conf(paths.config);
  if (!conf) throw FormatError("cannot write " + paths.config);
  conf << "# generated benchmark configuration\n"
       << "manifest = manifest.tsv\n"
       << "weights = weights.snd1\n"
       << "net = conv1:8:15:2:pool4/4,conv2:16:7:2:pool2/2,conv3:32:5:2\n"
       << "layers = conv1,p-conv2,conv2,p-conv3,conv3\n"
       << "mode = acdl\n"
       << "fusion = mean\n"
       << "seed = " << seed << "\n\n"
       << "[acdl]\n"
       << "gamma = 1.0\n"
       << "lambda = 0.1\n"
       << "tau = 0.5\n"
       << "stop = 0.01\n"
       << "max_outer = 40\n"
       << "atoms_per_class = 8\n"
       << "normalize = true\n"
       << "max_inner = 80\n\n"
       << "[acdl conv1]\n"
       << "tau = 0.35\n\n"
       << "[acdl p-conv3]\n"
       << "tau = 0.7\n\n"
       << "[acdl conv3]\n"
       << "tau = 0.7\n\n"
       << "[grid]\n"
       << "degrees = 2,3\n"
       << "coef0s = 0,1\n"
       << "regularizations = 0.001,0.01,0.1\n"
       << "scale = 1.0\n\n"
       << "[train]\n"
       << "max_epochs = 300\n"
       << "grad_tol = 1e-7\n";
  return paths;
}

}  // namespace asckit
