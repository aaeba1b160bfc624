#ifndef ASCKIT_SYNTH_HPP
#define ASCKIT_SYNTH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "asckit/net.hpp"
#include "asckit/pca.hpp"

namespace asckit {

// Low-rank recovery fixture: each class occupies its own coordinate block of
// the ambient space and every example is a convex combination of a few
// extreme points of that block, plus isotropic noise.
struct SubspaceSpec {
  int ambient_dim = 64;
  int classes = 4;
  int subspace_dim = 3;        // extremes per class = block width
  int examples_per_class = 50;
  double noise_sigma = 0.01;
  double scale = 10.0;         // extreme-point norm
  double dirichlet_alpha = 0.3;
  bool convex = true;          // false: Gaussian coefficients instead of mixtures
};

LayerDataset make_subspace_dataset(const SubspaceSpec& spec, std::uint64_t seed,
                                   const std::string& layer = "synth");

// Miniature raw-audio fixture for end-to-end runs: band-limited class
// templates rendered to WAV, a small randomized network, a fold manifest and
// a ready-to-run experiment config.
struct AudioBenchmarkSpec {
  int classes = 4;
  int folds = 3;
  int clips_per_class_per_fold = 5;
  int sample_rate = 4000;
  int samples = 2048;
  int prototypes_per_class = 2;  // per-class intrinsic dimensionality
  double amplitude = 150.0;      // in the +-256 waveform scale
  double dc_step = 4.0;          // per-class DC offset spacing; kept small so
                                 // the class means do not collapse onto a
                                 // single loudness direction after pooling
  double noise_sigma = 1.5;      // additive sample noise
  double dirichlet_alpha = 0.4;
  // nuisance variability: spreads embedding variance over many directions so
  // a 99% explained-variance cut keeps clearly more dimensions than the
  // class structure needs
  double gain_jitter = 0.08;     // per-clip gain in [1-j, 1+j]; kept modest,
                                 // loudness variance piles onto one common
                                 // direction and buries the rest
  int background_tones = 3;      // random tones per clip
  double background_amp = 25.0;  // peak amplitude per tone
};

struct BenchmarkPaths {
  std::string root;
  std::string manifest;
  std::string weights;
  std::string config;
};

// Three conv blocks, 8 -> 16 -> 32 filters, pools after the first two. The
// widening with a fixed number of class prototypes gives deeper taps the
// higher redundancy the compression experiments look for.
std::vector<LayerSpec> tiny_chain();
std::vector<std::string> tiny_taps();

BenchmarkPaths write_audio_benchmark(const std::string& dir, const AudioBenchmarkSpec& spec,
                                     std::uint64_t seed);

}  // namespace asckit

#endif
