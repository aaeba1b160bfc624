#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <asckit/errors.hpp>
#include <asckit/net.hpp>
#include <asckit/rng.hpp>
#include <asckit/tensor_file.hpp>

using namespace asckit;

namespace {

Eigen::MatrixXd row_matrix(const std::vector<double>& v) {
  Eigen::MatrixXd m(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = v[i];
  return m;
}

// naive quadruple-loop reference, no shared code with conv1d
Eigen::MatrixXd conv_oracle(const Eigen::MatrixXd& input,
                            const std::vector<Eigen::MatrixXd>& kernel,
                            const Eigen::VectorXd& bias, int stride) {
  const auto n_out = static_cast<Eigen::Index>(kernel.size());
  const Eigen::Index width = kernel.front().cols();
  const Eigen::Index out_len = (input.cols() - width) / stride + 1;
  Eigen::MatrixXd out(n_out, out_len);
  for (Eigen::Index o = 0; o < n_out; ++o)
    for (Eigen::Index t = 0; t < out_len; ++t) {
      double acc = bias(o);
      for (Eigen::Index i = 0; i < input.rows(); ++i)
        for (Eigen::Index k = 0; k < width; ++k) acc += kernel[o](i, k) * input(i, t * stride + k);
      out(o, t) = acc;
    }
  return out;
}

Eigen::MatrixXd bn_oracle(const Eigen::MatrixXd& x, const Eigen::VectorXd& scale,
                          const Eigen::VectorXd& shift, const Eigen::VectorXd& mean,
                          const Eigen::VectorXd& variance, double eps) {
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      out(r, c) = (x(r, c) - mean(r)) / std::sqrt(variance(r) + eps) * scale(r) + shift(r);
  return out;
}

std::vector<Eigen::MatrixXd> random_kernel(Rng& rng, int n_out, int n_in, int width) {
  std::vector<Eigen::MatrixXd> k;
  for (int o = 0; o < n_out; ++o) {
    Eigen::MatrixXd slice(n_in, width);
    for (Eigen::Index i = 0; i < slice.size(); ++i) slice(i) = rng.normal();
    k.push_back(slice);
  }
  return k;
}

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("conv1d: identity kernel reproduces the input") {
  const Eigen::MatrixXd in = row_matrix({1, 2, 3, 4});
  const std::vector<Eigen::MatrixXd> kernel = {Eigen::MatrixXd::Ones(1, 1)};
  const Eigen::MatrixXd out = conv1d(in, kernel, Eigen::VectorXd::Zero(1), 1);
  REQUIRE(out.cols() == 4);
  CHECK((out - in).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("conv1d: sliding box filter") {
  const Eigen::MatrixXd out =
      conv1d(row_matrix({1, 2, 3}), {Eigen::MatrixXd::Ones(1, 2)}, Eigen::VectorXd::Zero(1), 1);
  REQUIRE(out.rows() == 1);
  REQUIRE(out.cols() == 2);
  CHECK(out(0, 0) == 3.0);
  CHECK(out(0, 1) == 5.0);
}

TEST_CASE("conv1d: output length follows the stride arithmetic") {
  Rng rng(11);
  const Eigen::MatrixXd in = random_matrix(rng, 2, 17);
  for (const int width : {1, 3, 5}) {
    for (const int stride : {1, 2, 4}) {
      const auto k = random_kernel(rng, 3, 2, width);
      const Eigen::MatrixXd out = conv1d(in, k, Eigen::VectorXd::Zero(3), stride);
      CHECK(out.cols() == (17 - width) / stride + 1);
    }
  }
}

TEST_CASE("conv1d: shape violations are dimension errors") {
  const Eigen::MatrixXd in = row_matrix({1, 2, 3});
  // input shorter than the kernel
  CHECK_THROWS_AS(conv1d(in, {Eigen::MatrixXd::Ones(1, 5)}, Eigen::VectorXd::Zero(1), 1),
                  DimensionError);
  // kernel expects two input rows
  CHECK_THROWS_AS(conv1d(in, {Eigen::MatrixXd::Ones(2, 2)}, Eigen::VectorXd::Zero(1), 1),
                  DimensionError);
  // bias length mismatch
  CHECK_THROWS_AS(conv1d(in, {Eigen::MatrixXd::Ones(1, 2)}, Eigen::VectorXd::Zero(2), 1),
                  DimensionError);
}

TEST_CASE("conv1d: matches the naive loop oracle on random instances") {
  Rng rng(101);
  double worst = 0.0;
  for (int inst = 0; inst < 120; ++inst) {
    const int n_in = 1 + static_cast<int>(rng.index(4));
    const int n_out = 1 + static_cast<int>(rng.index(5));
    const int width = 1 + static_cast<int>(rng.index(7));
    const int stride = 1 + static_cast<int>(rng.index(3));
    const int len = width + static_cast<int>(rng.index(30));
    const Eigen::MatrixXd in = random_matrix(rng, n_in, len);
    const auto kernel = random_kernel(rng, n_out, n_in, width);
    Eigen::VectorXd bias(n_out);
    for (int o = 0; o < n_out; ++o) bias(o) = rng.normal();
    const Eigen::MatrixXd got = conv1d(in, kernel, bias, stride);
    const Eigen::MatrixXd want = conv_oracle(in, kernel, bias, stride);
    REQUIRE(got.rows() == want.rows());
    REQUIRE(got.cols() == want.cols());
    worst = std::max(worst, (got - want).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("batchnorm: identity parameters change nothing") {
  Rng rng(5);
  const Eigen::MatrixXd x = random_matrix(rng, 3, 6);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(3);
  const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(3);
  const Eigen::MatrixXd out = batchnorm_infer(x, ones, zeros, zeros, ones, 0.0);
  CHECK((out - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("batchnorm: center, scale and shift a single value") {
  Eigen::MatrixXd x(1, 1);
  x << 2.0;
  Eigen::VectorXd scale(1), shift(1), mean(1), var(1);
  scale << 3.0;
  shift << 1.0;
  mean << 2.0;
  var << 1.0;
  const Eigen::MatrixXd out = batchnorm_infer(x, scale, shift, mean, var, 0.0);
  CHECK(out(0, 0) == 1.0);
}

TEST_CASE("batchnorm: matches the scalar loop oracle") {
  Rng rng(7);
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const Eigen::MatrixXd x = random_matrix(rng, 4, 8);
    Eigen::VectorXd scale(4), shift(4), mean(4), var(4);
    for (int i = 0; i < 4; ++i) {
      scale(i) = rng.normal();
      shift(i) = rng.normal();
      mean(i) = rng.normal();
      var(i) = 0.1 + rng.uniform();
    }
    const double eps = 1e-5;
    worst = std::max(worst, (batchnorm_infer(x, scale, shift, mean, var, eps) -
                             bn_oracle(x, scale, shift, mean, var, eps))
                                .cwiseAbs()
                                .maxCoeff());
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("batchnorm: non-positive variance is a parameter error") {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2, 3);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(2);
  const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd var(2);
  var << 1.0, 0.0;
  CHECK_THROWS_AS(batchnorm_infer(x, ones, zeros, zeros, var, 0.0), ParameterError);
  var << 1.0, -0.5;
  CHECK_THROWS_AS(batchnorm_infer(x, ones, zeros, zeros, var, 1e-5), ParameterError);
}

TEST_CASE("maxpool: window maxima with stride") {
  const Eigen::MatrixXd out = maxpool1d(row_matrix({1, 3, 2, 5}), 2, 2);
  REQUIRE(out.cols() == 2);
  CHECK(out(0, 0) == 3.0);
  CHECK(out(0, 1) == 5.0);
}

TEST_CASE("global_sum_pool: row sums") {
  FeatureMapMatrix x;
  x.layer = "t";
  x.values.resize(2, 2);
  x.values << 1, 2, 3, 4;
  const AggregatedEmbedding e = global_sum_pool(x, "rec");
  REQUIRE(e.values.size() == 2);
  CHECK(e.values(0) == 3.0);
  CHECK(e.values(1) == 7.0);
  CHECK(e.layer == "t");
  CHECK(e.recording_id == "rec");
}

TEST_CASE("global_sum_pool: zero map pools to the zero vector") {
  FeatureMapMatrix x;
  x.layer = "z";
  x.values = Eigen::MatrixXd::Zero(64, 17);
  const AggregatedEmbedding e = global_sum_pool(x);
  REQUIRE(e.values.size() == 64);
  CHECK(e.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("global_sum_pool: matches the double-loop oracle") {
  Rng rng(13);
  FeatureMapMatrix x;
  x.layer = "r";
  x.values = random_matrix(rng, 64, 100);
  const AggregatedEmbedding e = global_sum_pool(x);
  for (Eigen::Index r = 0; r < 64; ++r) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < 100; ++c) acc += x.values(r, c);
    // summation order differs between the vectorized sum and this loop
    CHECK(std::abs(e.values(r) - acc) <= 1e-10);
  }
}

TEST_CASE("global_sum_pool: linear in its input") {
  Rng rng(17);
  FeatureMapMatrix x, y, mix;
  x.layer = y.layer = mix.layer = "l";
  x.values = random_matrix(rng, 8, 30);
  y.values = random_matrix(rng, 8, 30);
  const double a = 2.5, b = -1.25;
  mix.values = a * x.values + b * y.values;
  const Eigen::VectorXd lhs = global_sum_pool(mix).values;
  const Eigen::VectorXd rhs = a * global_sum_pool(x).values + b * global_sum_pool(y).values;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10);
}

namespace {

// two small conv blocks with a pool between them
Network make_test_net(std::uint64_t seed) {
  std::vector<LayerSpec> chain;
  append_conv_block(chain, "conv1", 4, 7, 2);
  append_maxpool(chain, "pool1", 2, 2);
  append_conv_block(chain, "conv2", 6, 5, 2);
  Network net(chain);
  Rng rng(seed);
  net.randomize_weights(rng);
  return net;
}

Waveform random_wave(std::uint64_t seed, int n) {
  Waveform w;
  w.sample_rate = 4000;
  w.id = "w" + std::to_string(seed);
  Rng rng(seed);
  for (int i = 0; i < n; ++i) w.samples.push_back(rng.uniform(-200.0, 200.0));
  return w;
}

}  // namespace

TEST_CASE("forward: zero waveform with zero bias/shift/mean taps to zero") {
  Network net = make_test_net(23);
  auto tensors = net.export_weights();
  for (auto& t : tensors) {
    const bool zero_me = t.name.ends_with(".bias") || t.name.ends_with(".bn_shift") ||
                         t.name.ends_with(".bn_mean");
    if (zero_me) std::fill(t.values.begin(), t.values.end(), 0.0);
  }
  net.attach_weights(tensors);

  Waveform w;
  w.sample_rate = 4000;
  w.samples.assign(256, 0.0);
  const auto taps = net.forward_with_taps(w, {"p-conv1", "conv1", "p-conv2", "conv2"});
  for (const auto& [name, map] : taps) {
    INFO(name);
    CHECK(map.values.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("forward: post-relu tap is the clamped pre-relu tap") {
  const Network net = make_test_net(29);
  const Waveform w = random_wave(31, 300);
  const auto taps = net.forward_with_taps(w, {"p-conv1", "conv1", "p-conv2", "conv2"});
  for (const std::string base : {"conv1", "conv2"}) {
    const Eigen::MatrixXd& pre = taps.at("p-" + base).values;
    const Eigen::MatrixXd& post = taps.at(base).values;
    REQUIRE(pre.rows() == post.rows());
    REQUIRE(pre.cols() == post.cols());
    CHECK((post - pre.cwiseMax(0.0)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(post.minCoeff() >= 0.0);
  }
}

TEST_CASE("forward: matches the composed per-layer oracle") {
  std::vector<LayerSpec> chain;
  append_conv_block(chain, "conv1", 3, 5, 2);
  Network net(chain);
  Rng rng(37);
  net.randomize_weights(rng);
  const auto tensors = net.export_weights();

  const Waveform w = random_wave(41, 120);
  Eigen::MatrixXd x(1, static_cast<Eigen::Index>(w.samples.size()));
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    x(0, static_cast<Eigen::Index>(i)) = w.samples[i];

  const auto get = [&](const std::string& name) {
    const NamedTensor* t = find_tensor(tensors, name);
    REQUIRE(t != nullptr);
    return t;
  };
  const NamedTensor* kt = get("conv1.kernel");
  std::vector<Eigen::MatrixXd> kernel;
  const auto width = static_cast<Eigen::Index>(kt->dims[2]);
  for (std::uint32_t o = 0; o < kt->dims[0]; ++o) {
    Eigen::MatrixXd slice(kt->dims[1], width);
    for (std::uint32_t i = 0; i < kt->dims[1]; ++i)
      for (Eigen::Index k = 0; k < width; ++k)
        slice(i, k) = kt->values[(o * kt->dims[1] + i) * kt->dims[2] + static_cast<std::size_t>(k)];
    kernel.push_back(slice);
  }
  const auto vec = [&](const std::string& name) {
    const NamedTensor* t = get(name);
    return Eigen::Map<const Eigen::VectorXd>(t->values.data(),
                                             static_cast<Eigen::Index>(t->values.size()))
        .eval();
  };

  const Eigen::MatrixXd conv = conv_oracle(x, kernel, vec("conv1.bias"), 2);
  const Eigen::MatrixXd pre =
      bn_oracle(conv, vec("conv1.bn_scale"), vec("conv1.bn_shift"), vec("conv1.bn_mean"),
                vec("conv1.bn_var"), net.batchnorm_epsilon());

  const auto taps = net.forward_with_taps(w, {"p-conv1", "conv1"});
  CHECK((taps.at("p-conv1").values - pre).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((taps.at("conv1").values - pre.cwiseMax(0.0)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("forward: too-short input names the failing layer") {
  const Network net = make_test_net(43);
  const Waveform w = random_wave(47, 6);  // dies inside conv1 (width 7)
  try {
    net.forward_with_taps(w, {"conv2"});
    FAIL("expected a dimension error");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("conv1") != std::string::npos);
  }
}

TEST_CASE("forward: unknown tap is a parameter error") {
  const Network net = make_test_net(53);
  CHECK_THROWS_AS(net.forward_with_taps(random_wave(1, 300), {"conv9"}), ParameterError);
}

TEST_CASE("forward: bitwise deterministic") {
  const Network net = make_test_net(59);
  const Waveform w = random_wave(61, 300);
  const auto a = net.forward_with_taps(w, {"conv2"});
  const auto b = net.forward_with_taps(w, {"conv2"});
  CHECK((a.at("conv2").values - b.at("conv2").values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward: tap widths follow the closed-form length arithmetic") {
  const Network net = make_test_net(67);
  const Waveform w = random_wave(71, 300);
  const auto lengths = net.layer_output_lengths(300);
  const auto taps = net.forward_with_taps(w, {"conv1", "conv2"});
  for (std::size_t i = 0; i < net.chain().size(); ++i) {
    const auto& spec = net.chain()[i];
    if (taps.count(spec.name)) CHECK(taps.at(spec.name).values.cols() == lengths[i]);
  }
}

TEST_CASE("soundnet chain: default geometry and taps") {
  const auto chain = soundnet_chain();
  const auto taps = default_taps();
  REQUIRE(taps.size() == 10);
  CHECK(taps.front() == "p-conv3");
  CHECK(taps.back() == "conv7");
  Network net(chain);
  CHECK(net.layer_filters("conv3") == 64);
  CHECK(net.layer_filters("conv7") == 1024);
  for (const auto& t : taps) CHECK(net.has_layer(t));
}

TEST_CASE("tensor file: hand-written bytes parse back") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "asckit_test_net";
  fs::create_directories(dir);
  const std::string path = (dir / "hand.snd1").string();
  // magic, count=1, name "t", rank 1, dim 2, f32 values {1.5, -2.25}
  const unsigned char bytes[] = {'S', 'N', 'D', '1', 1,   0,    0,   0,    1,   0,   't', 1,
                                 2,   0,   0,   0,   0,   0,    0xc0, 0x3f, 0,   0,   0x10, 0xc0};
  {
    std::ofstream f(path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes), sizeof(bytes));
  }
  const auto tensors = read_tensor_file(path);
  REQUIRE(tensors.size() == 1);
  CHECK(tensors[0].name == "t");
  REQUIRE(tensors[0].dims == std::vector<std::uint32_t>{2});
  CHECK(tensors[0].values[0] == 1.5);
  CHECK(tensors[0].values[1] == -2.25);
}

TEST_CASE("tensor file: round-trip through float32") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "asckit_test_net";
  fs::create_directories(dir);
  const std::string path = (dir / "rt.snd1").string();

  Rng rng(73);
  std::vector<NamedTensor> tensors;
  NamedTensor a;
  a.name = "conv1.kernel";
  a.dims = {2, 3, 4};
  for (int i = 0; i < 24; ++i) a.values.push_back(rng.normal());
  tensors.push_back(a);
  NamedTensor b;
  b.name = "conv1.bias";
  b.dims = {2};
  b.values = {0.5, -0.125};
  tensors.push_back(b);

  write_tensor_file(path, tensors);
  const auto back = read_tensor_file(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].name == "conv1.kernel");
  CHECK(back[0].dims == a.dims);
  for (std::size_t i = 0; i < a.values.size(); ++i)
    CHECK(back[0].values[i] == static_cast<double>(static_cast<float>(a.values[i])));
  CHECK(find_tensor(back, "conv1.bias") != nullptr);
  CHECK(find_tensor(back, "conv1.bn_var") == nullptr);

  // exact f32 values survive a second round untouched
  const std::string path2 = (dir / "rt2.snd1").string();
  write_tensor_file(path2, back);
  const auto again = read_tensor_file(path2);
  for (std::size_t i = 0; i < a.values.size(); ++i)
    CHECK(again[0].values[i] == back[0].values[i]);
}

TEST_CASE("tensor file: malformed containers are format errors") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "asckit_test_net";
  fs::create_directories(dir);
  const auto write_bytes = [&](const std::string& name, const std::string& s) {
    const std::string p = (dir / name).string();
    std::ofstream f(p, std::ios::binary);
    f.write(s.data(), static_cast<std::streamsize>(s.size()));
    return p;
  };
  CHECK_THROWS_AS(read_tensor_file(write_bytes("bad_magic.snd1", "XXXX\x01\x00\x00\x00")),
                  FormatError);
  CHECK_THROWS_AS(read_tensor_file(write_bytes("trunc.snd1", "SND1\x02\x00\x00\x00\x03")),
                  FormatError);
  CHECK_THROWS_AS(read_tensor_file((dir / "absent.snd1").string()), FormatError);
}

TEST_CASE("network: attach validates tensor shapes by name") {
  std::vector<LayerSpec> chain;
  append_conv_block(chain, "conv1", 4, 7, 2);
  Network net(chain);
  Rng rng(79);
  net.randomize_weights(rng);
  auto tensors = net.export_weights();

  Network fresh(chain);
  auto missing = tensors;
  std::erase_if(missing, [](const NamedTensor& t) { return t.name == "conv1.kernel"; });
  CHECK_THROWS_AS(fresh.attach_weights(missing), FormatError);

  auto misshaped = tensors;
  for (auto& t : misshaped)
    if (t.name == "conv1.bias") t.dims = {5};
  CHECK_THROWS_AS(fresh.attach_weights(misshaped), DimensionError);
}
