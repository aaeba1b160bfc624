#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "asckit/audio.hpp"
#include "asckit/config_file.hpp"
#include "asckit/ensemble.hpp"
#include "asckit/errors.hpp"
#include "asckit/experiment.hpp"
#include "asckit/synth.hpp"
#include "asckit/tensor_file.hpp"

namespace fs = std::filesystem;
using namespace asckit;

namespace {

fs::path test_root() {
  static const fs::path root = [] {
    fs::path p = fs::temp_directory_path() / "asckit_experiment_tests";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

// one shared synthetic benchmark; every test runs against its own out_dir
struct BenchFixture {
  BenchmarkPaths paths;
  ExperimentConfig config;  // exactly as loaded from the generated file
};

const BenchFixture& bench() {
  static const BenchFixture fx = [] {
    BenchFixture b;
    b.paths = write_audio_benchmark((test_root() / "data").string(), AudioBenchmarkSpec{}, 7);
    b.config = load_experiment_config(b.paths.config);
    return b;
  }();
  return fx;
}

ExperimentConfig variant(const std::string& mode, const std::string& out_name) {
  ExperimentConfig cfg = bench().config;
  cfg.pipeline.dims = parse_mode(mode);
  cfg.out_dir = (test_root() / out_name).string();
  return cfg;
}

const ExperimentReport& none_report() {
  static const ExperimentReport report = run_experiment(variant("none", "none_run"));
  return report;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "cannot open " << p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::vector<std::string> lines;
  std::stringstream ss(slurp(p));
  std::string line;
  while (std::getline(ss, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> fields_of(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

fs::path write_config(const std::string& name, const std::string& body) {
  const fs::path dir = test_root() / "configs";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream out(p, std::ios::binary);
  out << body;
  return p;
}

const std::map<std::string, int>& expected_widths() {
  static const std::map<std::string, int> n = {
      {"conv1", 8}, {"p-conv2", 16}, {"conv2", 16}, {"p-conv3", 32}, {"conv3", 32}};
  return n;
}

void check_chains_equal(const std::vector<LayerSpec>& a, const std::vector<LayerSpec>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(a[i].kind == b[i].kind);
    CHECK(a[i].filters == b[i].filters);
    CHECK(a[i].kernel_width == b[i].kernel_width);
    CHECK(a[i].stride == b[i].stride);
    CHECK(a[i].pool_width == b[i].pool_width);
    CHECK(a[i].param_group == b[i].param_group);
  }
}

}  // namespace

TEST_CASE("parse_mode covers all four modes and rejects junk") {
  CHECK(parse_mode("acdl").mode == DimMode::acdl);
  CHECK(parse_mode("none").mode == DimMode::none);

  const auto var = parse_mode("variance:0.95");
  CHECK(var.mode == DimMode::variance);
  CHECK(var.variance_ratio == doctest::Approx(0.95));
  CHECK(parse_mode("explained_variance:0.9").mode == DimMode::variance);

  const auto fixed = parse_mode("fixed:8");
  CHECK(fixed.mode == DimMode::fixed);
  CHECK(fixed.fixed_d == 8);

  CHECK_THROWS_AS(parse_mode("variance:0"), ParameterError);
  CHECK_THROWS_AS(parse_mode("variance:1.5"), ParameterError);
  CHECK_THROWS_AS(parse_mode("fixed:0"), ParameterError);
  CHECK_THROWS_AS(parse_mode("fixed:x"), SchemaError);
  CHECK_THROWS_AS(parse_mode("banana"), SchemaError);
  CHECK_THROWS_AS(parse_mode(""), SchemaError);
}

TEST_CASE("parse_net_chain builds the reference chain and custom blocks") {
  check_chains_equal(parse_net_chain("soundnet"), soundnet_chain());

  std::vector<LayerSpec> expected;
  append_conv_block(expected, "a", 4, 7, 2);
  append_maxpool(expected, "a_pool", 2, 2);
  append_conv_block(expected, "b", 6, 5, 2);
  check_chains_equal(parse_net_chain("a:4:7:2:pool2/2,b:6:5:2"), expected);

  CHECK_THROWS_AS(parse_net_chain("a:4:7"), SchemaError);
  CHECK_THROWS_AS(parse_net_chain("a:4:7:2:po2/2"), SchemaError);
  CHECK_THROWS_AS(parse_net_chain("a:4:7:2:pool22"), SchemaError);
  CHECK_THROWS_AS(parse_net_chain(":4:7:2"), SchemaError);
  CHECK_THROWS_AS(parse_net_chain("a:x:7:2"), SchemaError);
  CHECK_THROWS_AS(parse_net_chain(""), SchemaError);
}

TEST_CASE("config help text names the top-level keys") {
  const std::string help = config_help_text();
  for (const char* key : {"manifest", "weights", "net", "layers", "mode", "fusion", "seed",
                          "out_dir", "[grid]", "[train]"})
    CHECK_MESSAGE(help.find(key) != std::string::npos, "help text missing " << key);
}

TEST_CASE("load_experiment_config parses sections, overrides and relative paths") {
  const fs::path p = write_config("full.conf",
                                  "# demo config\n"
                                  "manifest = data/list.tsv\n"
                                  "weights = w.snd1   # trailing comment\n"
                                  "net = a:4:7:2:pool2/2,b:6:5:2\n"
                                  "layers = p-a,a,b\n"
                                  "mode = variance:0.9\n"
                                  "fusion = geometric\n"
                                  "seed = 42\n"
                                  "out_dir = results\n"
                                  "\n"
                                  "[acdl]\n"
                                  "gamma = 0.5\n"
                                  "tau = 0.25\n"
                                  "\n"
                                  "[acdl b]\n"
                                  "tau = 0.4\n"
                                  "\n"
                                  "[grid]\n"
                                  "degrees = 1,2\n"
                                  "coef0s = 0,1\n"
                                  "regularizations = 0.01\n"
                                  "scale = 2.0\n"
                                  "\n"
                                  "[train]\n"
                                  "max_epochs = 250\n"
                                  "grad_tol = 1e-6\n");
  const ExperimentConfig cfg = load_experiment_config(p.string());
  const fs::path base = p.parent_path();

  CHECK(cfg.manifest_path == (base / "data" / "list.tsv").string());
  CHECK(cfg.weights_path == (base / "w.snd1").string());
  CHECK(cfg.out_dir == (base / "results").string());
  CHECK(cfg.chain.size() == 7);  // two conv blocks (3 specs each) + one pool
  CHECK(cfg.taps == std::vector<std::string>{"p-a", "a", "b"});
  CHECK(cfg.pipeline.dims.mode == DimMode::variance);
  CHECK(cfg.pipeline.dims.variance_ratio == doctest::Approx(0.9));
  CHECK(cfg.pipeline.fusion == FusionRule::geometric);
  CHECK(cfg.pipeline.seed == 42);

  CHECK(cfg.pipeline.acdl.gamma == doctest::Approx(0.5));
  CHECK(cfg.pipeline.acdl.tau == doctest::Approx(0.25));
  const AcdlConfig for_b = cfg.pipeline.acdl_for("b");
  CHECK(for_b.tau == doctest::Approx(0.4));   // overridden
  CHECK(for_b.gamma == doctest::Approx(0.5));  // inherited from [acdl]
  CHECK(cfg.pipeline.acdl_for("a").tau == doctest::Approx(0.25));

  CHECK(cfg.pipeline.grid.degrees == std::vector<int>{1, 2});
  REQUIRE(cfg.pipeline.grid.coef0s.size() == 2);
  CHECK(cfg.pipeline.grid.coef0s[0] == doctest::Approx(0.0));
  REQUIRE(cfg.pipeline.grid.regularizations.size() == 1);
  CHECK(cfg.pipeline.grid.regularizations[0] == doctest::Approx(0.01));
  CHECK(cfg.pipeline.grid.scale == doctest::Approx(2.0));
  CHECK(cfg.pipeline.train.max_epochs == 250);
  CHECK(cfg.pipeline.train.grad_tolerance == doctest::Approx(1e-6));

  SUBCASE("defaults when optional keys are absent") {
    const fs::path q = write_config("minimal.conf", "manifest = m.tsv\nweights = w.snd1\n");
    const ExperimentConfig min = load_experiment_config(q.string());
    CHECK(min.out_dir == (q.parent_path() / "out").string());
    CHECK(min.taps == default_taps());
    CHECK(min.pipeline.dims.mode == DimMode::acdl);
    CHECK(min.pipeline.fusion == FusionRule::mean);
    CHECK(min.pipeline.seed == 0);
    check_chains_equal(min.chain, soundnet_chain());
  }

  SUBCASE("malformed files raise schema errors") {
    CHECK_THROWS_AS(load_experiment_config(
                        write_config("no_manifest.conf", "weights = w.snd1\n").string()),
                    SchemaError);
    CHECK_THROWS_AS(load_experiment_config(
                        write_config("no_weights.conf", "manifest = m.tsv\n").string()),
                    SchemaError);
    CHECK_THROWS_AS(
        load_experiment_config(
            write_config("bad_key.conf", "manifest = m.tsv\nweights = w\nbanana = 1\n").string()),
        SchemaError);
    CHECK_THROWS_AS(load_experiment_config(
                        write_config("bad_section.conf",
                                     "manifest = m.tsv\nweights = w\n[mystery]\nx = 1\n")
                            .string()),
                    SchemaError);
    CHECK_THROWS_AS(load_experiment_config(
                        write_config("no_equals.conf", "manifest = m.tsv\nweights = w\njunk\n")
                            .string()),
                    SchemaError);
    CHECK_THROWS_AS(
        load_experiment_config(
            write_config("dup.conf", "manifest = m.tsv\nmanifest = n.tsv\nweights = w\n").string()),
        SchemaError);
    CHECK_THROWS_AS(load_experiment_config(
                        write_config("bad_acdl.conf",
                                     "manifest = m.tsv\nweights = w\n[acdl]\ncolor = red\n")
                            .string()),
                    SchemaError);
    CHECK_THROWS_AS(load_experiment_config((test_root() / "absent.conf").string()), FormatError);
  }
}

TEST_CASE("generated benchmark is complete and loadable") {
  const auto& b = bench();
  CHECK(fs::exists(b.paths.manifest));
  CHECK(fs::exists(b.paths.weights));
  CHECK(fs::exists(b.paths.config));

  const DatasetManifest manifest = load_manifest(b.paths.manifest);
  CHECK(manifest.class_count() == 4);
  CHECK(manifest.entries.size() == 4 * 3 * 5);
  CHECK(manifest.fold_ids() == std::vector<int>{0, 1, 2});
  for (const int c : manifest.per_class_counts()) CHECK(c == 15);
  for (const auto& e : manifest.entries) CHECK(fs::exists(e.path));

  // weight file holds every tensor the tiny chain needs
  const auto tensors = read_tensor_file(b.paths.weights);
  for (const char* name : {"conv1.kernel", "conv1.bias", "conv1.bn_scale", "conv1.bn_shift",
                           "conv1.bn_mean", "conv1.bn_var", "conv2.kernel", "conv3.kernel"})
    CHECK_MESSAGE(find_tensor(tensors, name) != nullptr, "missing tensor " << name);

  CHECK(b.config.taps == tiny_taps());
  check_chains_equal(b.config.chain, tiny_chain());
  CHECK(b.config.pipeline.dims.mode == DimMode::acdl);
  CHECK(b.config.pipeline.seed == 7);
  CHECK(b.config.pipeline.acdl.tau == doctest::Approx(0.5));
  CHECK(b.config.pipeline.acdl_for("conv1").tau == doctest::Approx(0.35));
  CHECK(b.config.pipeline.acdl_for("conv3").tau == doctest::Approx(0.7));
  CHECK(b.config.pipeline.acdl_for("conv2").tau == doctest::Approx(0.5));
}

TEST_CASE("mode none keeps every dimension and reports zero compression") {
  const ExperimentReport& report = none_report();
  const fs::path out = test_root() / "none_run";

  REQUIRE(report.cv.folds.size() == 3);
  for (const auto& fr : report.cv.folds) CHECK(!fr.skipped);
  CHECK(report.cv.warnings.empty());
  CHECK(report.class_count == 4);

  REQUIRE(report.layer_rows.size() == 15);  // 5 taps x 3 folds
  for (const auto& row : report.layer_rows) {
    REQUIRE(expected_widths().count(row.layer) == 1);
    CHECK(row.n == expected_widths().at(row.layer));
    CHECK(row.d == row.n);
    CHECK(row.compression == 0.0);
    CHECK(row.solo_accuracy >= 0.0);
    CHECK(row.solo_accuracy <= 1.0);
  }
  CHECK(report.mean_compression == 0.0);
  CHECK(report.weighted_compression == 0.0);
  CHECK(report.fused_accuracy >= 0.85);
  CHECK(report.mean_fold_accuracy >= 0.8);

  std::set<std::string> stages;
  for (const auto& t : report.timings) {
    stages.insert(t.stage);
    CHECK(t.seconds >= 0.0);
  }
  for (const char* s : {"manifest", "weights", "featurize", "evaluate", "report"})
    CHECK_MESSAGE(stages.count(s) == 1, "missing stage timing " << s);

  const auto preds = lines_of(out / "predictions.csv");
  REQUIRE(preds.size() == 61);
  CHECK(preds[0] == "recording_id,true_label,pred_label,prob_0,prob_1,prob_2,prob_3");
  for (std::size_t i = 1; i < preds.size(); ++i) {
    const auto f = fields_of(preds[i]);
    REQUIRE(f.size() == 7);
    double total = 0.0;
    for (int c = 0; c < 4; ++c) total += std::stod(f[static_cast<std::size_t>(3 + c)]);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }

  const auto conf = lines_of(out / "confusion.csv");
  REQUIRE(conf.size() == 5);
  CHECK(conf[0] == "true,pred_0,pred_1,pred_2,pred_3");
  int total = 0, diagonal = 0;
  for (int r = 0; r < 4; ++r) {
    const auto f = fields_of(conf[static_cast<std::size_t>(r + 1)]);
    REQUIRE(f.size() == 5);
    CHECK(f[0] == std::to_string(r));
    for (int c = 0; c < 4; ++c) {
      const int v = std::stoi(f[static_cast<std::size_t>(c + 1)]);
      total += v;
      if (r == c) diagonal += v;
    }
  }
  CHECK(total == 60);
  CHECK(diagonal == static_cast<int>(report.fused_accuracy * 60 + 0.5));

  const auto classes = lines_of(out / "classes.csv");
  REQUIRE(classes.size() == 5);
  CHECK(classes[0] == "label,class_name");
  const DatasetManifest manifest = load_manifest(bench().paths.manifest);
  for (int c = 0; c < 4; ++c)
    CHECK(classes[static_cast<std::size_t>(c + 1)] ==
          std::to_string(c) + "," + manifest.class_names[static_cast<std::size_t>(c)]);

  const auto layer_lines = lines_of(out / "report_layers.csv");
  CHECK(layer_lines.size() == 16);
  CHECK(layer_lines[0] == "layer,fold,n,d,compression,solo_accuracy");

  const std::string summary = slurp(out / "report_summary.csv");
  CHECK(summary.find("mode,none\n") != std::string::npos);
  CHECK(summary.find("recordings,60\n") != std::string::npos);
  CHECK(summary.find("folds_evaluated,3\n") != std::string::npos);
  CHECK(summary.find("folds_skipped,0\n") != std::string::npos);

  // no ACDL traces in this mode
  for (const auto& entry : fs::directory_iterator(out))
    CHECK(entry.path().filename().string().rfind("trace_", 0) != 0);
}

TEST_CASE("mode fixed clamps every layer to the requested dimensionality") {
  const ExperimentReport report = run_experiment(variant("fixed:4", "fixed_run"));

  REQUIRE(report.layer_rows.size() == 15);
  for (const auto& row : report.layer_rows) {
    CHECK(row.d == 4);
    CHECK(row.compression ==
          doctest::Approx(1.0 - 4.0 / expected_widths().at(row.layer)).epsilon(1e-12));
  }
  // widths 8,16,16,32,32 -> compressions .5,.75,.75,.875,.875
  CHECK(report.mean_compression == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(report.weighted_compression == doctest::Approx(84.0 / 104.0).epsilon(1e-12));
  CHECK(report.fused_accuracy >= 0.7);

  const std::string summary = slurp(test_root() / "fixed_run" / "report_summary.csv");
  CHECK(summary.find("mode,fixed:4\n") != std::string::npos);
}

TEST_CASE("variance sweep reproduces the uncompressed baseline at ratio one") {
  ExperimentConfig cfg = bench().config;
  cfg.out_dir = (test_root() / "sweep_run").string();

  const auto rows = sweep_variance_ratios(cfg, {1.0, 0.95});
  REQUIRE(rows.size() == 2);

  CHECK(rows[0].ratio == doctest::Approx(1.0));
  CHECK(rows[0].mean_compression == doctest::Approx(0.0).epsilon(1e-12));
  // full-rank rotation preserves the polynomial kernel, hence the decisions
  CHECK(rows[0].accuracy == doctest::Approx(none_report().fused_accuracy).epsilon(1e-9));

  CHECK(rows[1].ratio == doctest::Approx(0.95));
  CHECK(rows[1].mean_compression > 0.4);
  CHECK(rows[1].mean_compression < 0.95);
  CHECK(rows[1].accuracy >= 0.8);

  const auto lines = lines_of(test_root() / "sweep_run" / "sweep.csv");
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "ratio,mean_compression,accuracy");
  CHECK(fields_of(lines[1])[0] == "1");

  CHECK(default_sweep_ratios() ==
        std::vector<double>{1.0, 0.999, 0.99, 0.98, 0.95, 0.90, 0.85});

  CHECK_THROWS_AS(sweep_variance_ratios(cfg, {}), ParameterError);
  CHECK_THROWS_AS(sweep_variance_ratios(cfg, {0.0}), ParameterError);
  CHECK_THROWS_AS(sweep_variance_ratios(cfg, {1.2}), ParameterError);
}

TEST_CASE("select_dimensions reports spectra and per-layer choices") {
  const ExperimentConfig cfg = variant("variance:0.99", "dims_run");
  const auto rows = select_dimensions(cfg);

  REQUIRE(rows.size() == 5);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].layer == cfg.taps[i]);
    CHECK(rows[i].n == expected_widths().at(rows[i].layer));
    CHECK(rows[i].d >= 1);
    CHECK(rows[i].d <= rows[i].n);
    CHECK(rows[i].compression == doctest::Approx(1.0 - double(rows[i].d) / rows[i].n));
    CHECK(rows[i].converged);
  }

  const auto spectra = lines_of(test_root() / "dims_run" / "spectra.csv");
  REQUIRE(spectra.size() == 1 + 8 + 16 + 16 + 32 + 32);
  CHECK(spectra[0] == "layer,index,normalized_singular_value");
  // normalized: every layer's first singular value is exactly one
  CHECK(fields_of(spectra[1])[0] == "conv1");
  CHECK(std::stod(fields_of(spectra[1])[2]) == doctest::Approx(1.0));

  const auto dims = lines_of(test_root() / "dims_run" / "dims.csv");
  REQUIRE(dims.size() == 6);
  CHECK(dims[0] == "layer,n,d,compression,converged");

  SUBCASE("mode none keeps the full width") {
    const auto full = select_dimensions(variant("none", "dims_none_run"));
    for (const auto& row : full) {
      CHECK(row.d == row.n);
      CHECK(row.compression == 0.0);
    }
  }
}

TEST_CASE("embedding export writes raw and compressed tables deterministically") {
  ExperimentConfig cfg = variant("fixed:4", "export_run");
  cfg.taps = {"conv1", "conv3"};

  const std::string raw_path = export_embeddings(cfg, "conv1", ExportStage::raw);
  CHECK(fs::path(raw_path).filename() == "embeddings_conv1_raw.csv");
  const auto raw = lines_of(raw_path);
  REQUIRE(raw.size() == 61);
  CHECK(raw[0] == "recording_id,label,dim_0,dim_1,dim_2,dim_3,dim_4,dim_5,dim_6,dim_7");
  for (std::size_t i = 1; i < raw.size(); ++i) REQUIRE(fields_of(raw[i]).size() == 10);

  const std::string comp_path = export_embeddings(cfg, "conv3", ExportStage::compressed);
  CHECK(fs::path(comp_path).filename() == "embeddings_conv3_compressed.csv");
  const auto comp = lines_of(comp_path);
  REQUIRE(comp.size() == 61);
  CHECK(comp[0] == "recording_id,label,dim_0,dim_1,dim_2,dim_3");

  // byte-identical on re-export
  const std::string raw_bytes = slurp(raw_path);
  const std::string comp_bytes = slurp(comp_path);
  export_embeddings(cfg, "conv1", ExportStage::raw);
  export_embeddings(cfg, "conv3", ExportStage::compressed);
  CHECK(slurp(raw_path) == raw_bytes);
  CHECK(slurp(comp_path) == comp_bytes);

  CHECK_THROWS_AS(export_embeddings(cfg, "conv9", ExportStage::raw), ParameterError);
}

TEST_CASE("embedding cache makes warm reruns identical and survives corruption") {
  ExperimentConfig cfg = variant("none", "cache_run");
  cfg.taps = {"conv1", "conv3"};

  const auto cold = compute_embeddings(cfg);
  REQUIRE(cold.size() == 2);
  CHECK(cold[0].features.rows() == 8);
  CHECK(cold[1].features.rows() == 32);
  CHECK(cold[0].features.cols() == 60);
  CHECK(cold[0].features.allFinite());

  const fs::path cache_dir = test_root() / "cache_run" / "cache";
  REQUIRE(fs::exists(cache_dir));
  std::vector<fs::path> cache_files;
  for (const auto& entry : fs::directory_iterator(cache_dir)) cache_files.push_back(entry.path());
  CHECK(cache_files.size() == 60);

  const auto warm = compute_embeddings(cfg);
  for (std::size_t t = 0; t < cold.size(); ++t) {
    CHECK((cold[t].features.array() == warm[t].features.array()).all());
    CHECK(cold[t].labels == warm[t].labels);
    CHECK(cold[t].folds == warm[t].folds);
    CHECK(cold[t].ids == warm[t].ids);
  }

  // an unreadable cache entry is silently recomputed, not trusted
  {
    std::ofstream junk(cache_files.front(), std::ios::binary | std::ios::trunc);
    junk << "not a tensor file";
  }
  const auto healed = compute_embeddings(cfg);
  for (std::size_t t = 0; t < cold.size(); ++t)
    CHECK((cold[t].features.array() == healed[t].features.array()).all());
}

TEST_CASE("full model fit round-trips through the container format") {
  ExperimentConfig cfg = variant("fixed:4", "model_run");
  cfg.taps = {"conv1", "conv3"};

  const auto tables = compute_embeddings(cfg);
  const TrainedModel model = fit_full_model(cfg, tables);
  REQUIRE(model.layers == cfg.taps);
  REQUIRE(model.transforms.size() == 2);
  REQUIRE(model.classifiers.size() == 2);
  CHECK(model.class_count == 4);
  CHECK(model.transforms[0].output_dim() == 4);
  CHECK(model.transforms[1].output_dim() == 4);

  const fs::path p1 = test_root() / "model_run" / "model.snd1";
  const fs::path p2 = test_root() / "model_run" / "model_resaved.snd1";
  save_model(p1.string(), model);
  const TrainedModel loaded = load_model(p1.string());

  CHECK(loaded.layers == model.layers);
  CHECK(loaded.fusion == model.fusion);
  CHECK(loaded.class_count == model.class_count);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    CHECK(loaded.classifiers[i].kernel.degree == model.classifiers[i].kernel.degree);
    CHECK(loaded.classifiers[i].kernel.coef0 ==
          doctest::Approx(model.classifiers[i].kernel.coef0).epsilon(1e-6));
    CHECK(loaded.classifiers[i].kernel.regularization ==
          doctest::Approx(model.classifiers[i].kernel.regularization).epsilon(1e-6));

    // predictions survive the f32 round-trip
    const Eigen::MatrixXd p0 =
        predict_proba(model.classifiers[i], model.transforms[i].apply(tables[i].features));
    const Eigen::MatrixXd p1m =
        predict_proba(loaded.classifiers[i], loaded.transforms[i].apply(tables[i].features));
    CHECK((p0 - p1m).cwiseAbs().maxCoeff() < 5e-3);
  }

  // saving the loaded model again reproduces the file byte for byte
  save_model(p2.string(), loaded);
  CHECK(slurp(p1) == slurp(p2));

  // truncated model files are rejected
  const std::string bytes = slurp(p1);
  const fs::path p3 = test_root() / "model_run" / "model_truncated.snd1";
  {
    std::ofstream out(p3, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(load_model(p3.string()), FormatError);
}

TEST_CASE("pipeline failures name the stage that broke") {
  SUBCASE("missing manifest") {
    ExperimentConfig bad = bench().config;
    bad.manifest_path = (test_root() / "absent.tsv").string();
    bad.out_dir = (test_root() / "bad_manifest").string();
    try {
      run_experiment(bad);
      FAIL("expected a stage error");
    } catch (const StageError& e) {
      CHECK(e.stage == "manifest");
      CHECK(std::string(e.what()).find("[stage manifest]") != std::string::npos);
    }
  }
  SUBCASE("missing weights") {
    ExperimentConfig bad = bench().config;
    bad.weights_path = (test_root() / "absent.snd1").string();
    bad.out_dir = (test_root() / "bad_weights").string();
    try {
      run_experiment(bad);
      FAIL("expected a stage error");
    } catch (const StageError& e) {
      CHECK(e.stage == "weights");
    }
  }
  SUBCASE("missing recording") {
    const fs::path dir = test_root() / "bad_wav";
    fs::create_directories(dir);
    {
      std::ofstream m(dir / "manifest.tsv", std::ios::binary);
      m << "path\tlabel\tfold\nmissing_a.wav\tbeach\t0\nmissing_b.wav\tbus\t1\n";
    }
    ExperimentConfig bad = bench().config;
    bad.manifest_path = (dir / "manifest.tsv").string();
    bad.out_dir = (dir / "out").string();
    try {
      run_experiment(bad);
      FAIL("expected a stage error");
    } catch (const StageError& e) {
      CHECK(e.stage == "featurize");
    }
  }
}

TEST_CASE("identical seeds give byte-identical experiment outputs") {
  ExperimentConfig a = variant("fixed:4", "det_a");
  a.taps = {"conv1", "conv3"};
  ExperimentConfig b = a;
  b.out_dir = (test_root() / "det_b").string();

  run_experiment(a);
  run_experiment(b);

  for (const char* name :
       {"predictions.csv", "confusion.csv", "classes.csv", "report_layers.csv",
        "report_summary.csv"})
    CHECK_MESSAGE(slurp(test_root() / "det_a" / name) == slurp(test_root() / "det_b" / name),
                  "output differs between reruns: " << name);
}
