#include "asckit/experiment.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <set>

#include "asckit/acdl.hpp"
#include "asckit/audio.hpp"
#include "asckit/errors.hpp"
#include "asckit/tensor_file.hpp"

namespace asckit {

namespace {

namespace fs = std::filesystem;

// shortest round-trip decimal form; keeps re-runs byte-identical
std::string csv_num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a_bytes(const void* data, std::size_t len,
                          std::uint64_t h = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a_bytes(bytes.data(), bytes.size());
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>* out) : out_(out) {}

  template <typename F>
  auto run(const std::string& name, F&& f) -> decltype(f()) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(f())>) {
        f();
        record(name, t0);
      } else {
        auto result = f();
        record(name, t0);
        return result;
      }
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, "", e.what());
    }
  }

 private:
  void record(const std::string& name, std::chrono::steady_clock::time_point t0) {
    if (!out_) return;
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    out_->push_back({name, dt.count()});
  }

  std::vector<StageTiming>* out_;
};

struct LoadedInputs {
  DatasetManifest manifest;
  Network net;
  std::uint64_t weights_hash = 0;
};

LoadedInputs load_inputs(const ExperimentConfig& config, StageClock& clock) {
  DatasetManifest manifest =
      clock.run("manifest", [&] { return load_manifest(config.manifest_path); });
  return clock.run("weights", [&] {
    LoadedInputs loaded{std::move(manifest), Network(config.chain), 0};
    loaded.net.attach_weights(read_tensor_file(config.weights_path));
    loaded.weights_hash = hash_file(config.weights_path);
    return loaded;
  });
}

std::string manifest_relative_id(const std::string& resolved, const fs::path& manifest_dir) {
  const fs::path rel = fs::path(resolved).lexically_relative(manifest_dir);
  return rel.empty() ? resolved : rel.generic_string();
}

std::vector<EmbeddingTable> featurize(const ExperimentConfig& config, const LoadedInputs& loaded) {
  if (config.taps.empty()) throw ParameterError("featurize: no taps configured");
  const fs::path cache_dir = fs::path(config.out_dir) / "cache";
  fs::create_directories(cache_dir);

  const auto& entries = loaded.manifest.entries;
  const fs::path manifest_dir = fs::path(config.manifest_path).parent_path();

  std::vector<EmbeddingTable> tables(config.taps.size());
  for (std::size_t t = 0; t < config.taps.size(); ++t) {
    tables[t].layer = config.taps[t];
    for (const auto& e : entries) {
      tables[t].labels.push_back(e.label);
      tables[t].folds.push_back(e.fold);
      tables[t].ids.push_back(manifest_relative_id(e.path, manifest_dir));
    }
  }

  for (std::size_t m = 0; m < entries.size(); ++m) {
    const auto& entry = entries[m];
    std::uint64_t wav_hash = 0;
    try {
      wav_hash = hash_file(entry.path);
    } catch (const Error& e) {
      throw StageError("featurize", "", e.what());
    }
    const fs::path cache_file =
        cache_dir / ("emb_" + hex64(loaded.weights_hash) + "_" + hex64(wav_hash) + ".snd1");

    std::map<std::string, Eigen::VectorXd> per_tap;
    bool hit = false;
    if (fs::exists(cache_file)) {
      try {
        const auto tensors = read_tensor_file(cache_file.string());
        hit = true;
        for (const auto& tap : config.taps) {
          const NamedTensor* t = find_tensor(tensors, tap);
          if (!t || t->dims.size() != 1) {
            hit = false;
            break;
          }
          per_tap[tap] = Eigen::Map<const Eigen::VectorXd>(
              t->values.data(), static_cast<Eigen::Index>(t->values.size()));
        }
      } catch (const Error&) {
        hit = false;  // unreadable cache entries are recomputed
      }
    }

    if (!hit) {
      per_tap.clear();
      try {
        const Waveform wave = read_wav(entry.path);
        const auto maps = loaded.net.forward_with_taps(wave, config.taps);
        std::vector<NamedTensor> tensors;
        for (const auto& tap : config.taps) {
          Eigen::VectorXd v = global_sum_pool(maps.at(tap), wave.id).values;
          // cache entries hold f32; round here so warm runs match cold runs
          for (Eigen::Index i = 0; i < v.size(); ++i)
            v(i) = static_cast<double>(static_cast<float>(v(i)));
          tensors.push_back({tap,
                             {static_cast<std::uint32_t>(v.size())},
                             std::vector<double>(v.data(), v.data() + v.size())});
          per_tap[tap] = std::move(v);
        }
        write_tensor_file(cache_file.string(), tensors);
      } catch (const StageError&) {
        throw;
      } catch (const Error& e) {
        throw StageError("featurize", "", entry.path + ": " + e.what());
      }
    }

    for (std::size_t t = 0; t < config.taps.size(); ++t) {
      const Eigen::VectorXd& v = per_tap.at(config.taps[t]);
      auto& table = tables[t];
      if (table.features.size() == 0)
        table.features.resize(v.size(), static_cast<Eigen::Index>(entries.size()));
      if (table.features.rows() != v.size())
        throw StageError("featurize", config.taps[t],
                         entry.path + ": embedding length changed between recordings");
      table.features.col(static_cast<Eigen::Index>(m)) = v;
    }
  }
  return tables;
}

std::ofstream open_csv(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary: no CRLF translation anywhere
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (const char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

std::string mode_name(const DimSelectionSpec& dims) {
  switch (dims.mode) {
    case DimMode::none:
      return "none";
    case DimMode::fixed:
      return "fixed:" + std::to_string(dims.fixed_d);
    case DimMode::variance:
      return "variance:" + csv_num(dims.variance_ratio);
    case DimMode::acdl:
      return "acdl";
  }
  return "?";
}

void write_trace_csv(const fs::path& path, const AcdlResult& result) {
  auto out = open_csv(path);
  out << "iter,alive_atoms,relative_recon_error,classification_loss\n";
  for (std::size_t i = 0; i < result.iteration_records.size(); ++i) {
    const auto& rec = result.iteration_records[i];
    out << (i + 1) << ',' << rec.alive_atoms << ',' << csv_num(rec.relative_recon_error) << ','
        << csv_num(rec.classification_loss) << '\n';
  }
}

void write_reports(const ExperimentConfig& config, const DatasetManifest& manifest,
                   const std::vector<EmbeddingTable>& tables, ExperimentReport& report) {
  const fs::path out_dir(config.out_dir);
  fs::create_directories(out_dir);
  const auto& cv = report.cv;
  const int classes = manifest.class_count();
  report.class_count = classes;

  for (const auto& fr : cv.folds) {
    if (fr.skipped) continue;
    for (const auto& lm : fr.layers)
      report.layer_rows.push_back({lm.layer, fr.fold, lm.n, lm.d,
                                   1.0 - static_cast<double>(lm.d) / lm.n, lm.solo_accuracy});
  }
  double comp_sum = 0.0, weighted_sum = 0.0, weight = 0.0;
  for (const auto& row : report.layer_rows) {
    comp_sum += row.compression;
    weighted_sum += row.compression * row.n;
    weight += row.n;
  }
  report.mean_compression =
      report.layer_rows.empty() ? 0.0 : comp_sum / static_cast<double>(report.layer_rows.size());
  report.weighted_compression = weight > 0.0 ? weighted_sum / weight : 0.0;
  report.fused_accuracy = cv.pooled_accuracy;
  report.mean_fold_accuracy = cv.mean_accuracy;

  {
    auto out = open_csv(out_dir / "classes.csv");
    out << "label,class_name\n";
    for (int c = 0; c < classes; ++c)
      out << c << ',' << csv_field(manifest.class_names[static_cast<std::size_t>(c)]) << '\n';
  }

  // pooled held-out predictions in manifest order
  struct PredRow {
    int true_label = 0, pred = 0;
    Eigen::VectorXd probs;
    bool present = false;
  };
  std::vector<PredRow> rows(tables.front().ids.size());
  Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(classes, classes);
  for (const auto& fr : cv.folds) {
    if (fr.skipped) continue;
    for (std::size_t j = 0; j < fr.test_columns.size(); ++j) {
      auto& row = rows[fr.test_columns[j]];
      row.present = true;
      row.true_label = tables.front().labels[fr.test_columns[j]];
      row.pred = fr.predictions[j];
      row.probs = fr.fused_probs.col(static_cast<Eigen::Index>(j));
      confusion(row.true_label, row.pred)++;
    }
  }
  {
    auto out = open_csv(out_dir / "predictions.csv");
    out << "recording_id,true_label,pred_label";
    for (int c = 0; c < classes; ++c) out << ",prob_" << c;
    out << '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!rows[i].present) continue;
      out << csv_field(tables.front().ids[i]) << ',' << rows[i].true_label << ',' << rows[i].pred;
      for (int c = 0; c < classes; ++c) out << ',' << csv_num(rows[i].probs(c));
      out << '\n';
    }
  }
  {
    auto out = open_csv(out_dir / "confusion.csv");
    out << "true";
    for (int c = 0; c < classes; ++c) out << ",pred_" << c;
    out << '\n';
    for (int r = 0; r < classes; ++r) {
      out << r;
      for (int c = 0; c < classes; ++c) out << ',' << confusion(r, c);
      out << '\n';
    }
  }
  {
    auto out = open_csv(out_dir / "report_layers.csv");
    out << "layer,fold,n,d,compression,solo_accuracy\n";
    for (const auto& row : report.layer_rows)
      out << csv_field(row.layer) << ',' << row.fold << ',' << row.n << ',' << row.d << ','
          << csv_num(row.compression) << ',' << csv_num(row.solo_accuracy) << '\n';
  }
  {
    int evaluated = 0, skipped = 0;
    for (const auto& fr : cv.folds) (fr.skipped ? skipped : evaluated)++;
    auto out = open_csv(out_dir / "report_summary.csv");
    out << "metric,value\n";
    out << "mode," << mode_name(config.pipeline.dims) << '\n';
    out << "fused_accuracy," << csv_num(report.fused_accuracy) << '\n';
    out << "mean_fold_accuracy," << csv_num(report.mean_fold_accuracy) << '\n';
    out << "mean_compression," << csv_num(report.mean_compression) << '\n';
    out << "weighted_compression," << csv_num(report.weighted_compression) << '\n';
    out << "classes," << classes << '\n';
    out << "recordings," << tables.front().ids.size() << '\n';
    out << "folds_evaluated," << evaluated << '\n';
    out << "folds_skipped," << skipped << '\n';
  }
  if (config.pipeline.dims.mode == DimMode::acdl) {
    for (const auto& fr : cv.folds) {
      if (fr.skipped) continue;
      for (const auto& lm : fr.layers)
        if (lm.acdl)
          write_trace_csv(out_dir / ("trace_" + lm.layer + "_fold" + std::to_string(fr.fold) +
                                     ".csv"),
                          *lm.acdl);
    }
  }
  for (const auto& w : cv.warnings) std::cerr << "warning: " << w << '\n';
}

double mean_pipeline_compression(const CrossValidationResult& cv) {
  double sum = 0.0;
  int count = 0;
  for (const auto& fr : cv.folds) {
    if (fr.skipped) continue;
    for (const auto& lm : fr.layers) {
      sum += 1.0 - static_cast<double>(lm.d) / lm.n;
      ++count;
    }
  }
  return count > 0 ? sum / count : 0.0;
}

}  // namespace

std::vector<EmbeddingTable> compute_embeddings(const ExperimentConfig& config) {
  StageClock clock(nullptr);
  const LoadedInputs loaded = load_inputs(config, clock);
  return clock.run("featurize", [&] { return featurize(config, loaded); });
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  ExperimentReport report;
  StageClock clock(&report.timings);

  const LoadedInputs loaded = load_inputs(config, clock);
  const auto tables = clock.run("featurize", [&] { return featurize(config, loaded); });
  report.cv = clock.run("evaluate", [&] { return cross_validate(tables, config.pipeline); });
  clock.run("report", [&] { write_reports(config, loaded.manifest, tables, report); });
  return report;
}

std::vector<double> default_sweep_ratios() { return {1.0, 0.999, 0.99, 0.98, 0.95, 0.90, 0.85}; }

std::vector<SweepRow> sweep_variance_ratios(const ExperimentConfig& config,
                                            const std::vector<double>& ratios) {
  if (ratios.empty()) throw ParameterError("sweep: no ratios given");
  for (const double r : ratios)
    if (!(r > 0.0) || r > 1.0)
      throw ParameterError("sweep: ratio " + csv_num(r) + " outside (0, 1]");

  StageClock clock(nullptr);
  const LoadedInputs loaded = load_inputs(config, clock);
  const auto tables = clock.run("featurize", [&] { return featurize(config, loaded); });

  std::vector<SweepRow> rows;
  for (const double r : ratios) {
    PipelineConfig pipeline = config.pipeline;
    pipeline.dims.mode = DimMode::variance;
    pipeline.dims.variance_ratio = r;
    try {
      const CrossValidationResult cv = cross_validate(tables, pipeline);
      rows.push_back({r, mean_pipeline_compression(cv), cv.pooled_accuracy});
    } catch (const Error& e) {
      std::cerr << "[stage sweep] ratio " << csv_num(r) << " failed: " << e.what() << '\n';
    }
  }
  if (rows.empty()) throw StageError("sweep", "", "every ratio failed");

  fs::create_directories(config.out_dir);
  auto out = open_csv(fs::path(config.out_dir) / "sweep.csv");
  out << "ratio,mean_compression,accuracy\n";
  for (const auto& row : rows)
    out << csv_num(row.ratio) << ',' << csv_num(row.mean_compression) << ','
        << csv_num(row.accuracy) << '\n';
  return rows;
}

std::vector<DimReportRow> select_dimensions(const ExperimentConfig& config) {
  StageClock clock(nullptr);
  const LoadedInputs loaded = load_inputs(config, clock);
  const auto tables = clock.run("featurize", [&] { return featurize(config, loaded); });
  const fs::path out_dir(config.out_dir);
  fs::create_directories(out_dir);

  std::vector<DimReportRow> rows;
  auto spectra = open_csv(out_dir / "spectra.csv");
  spectra << "layer,index,normalized_singular_value\n";

  for (const auto& table : tables) {
    try {
      const LayerDataset ds = [&] {
        std::vector<AggregatedEmbedding> embs;
        for (Eigen::Index c = 0; c < table.features.cols(); ++c)
          embs.push_back({table.features.col(c), table.layer, table.ids[static_cast<std::size_t>(c)]});
        return assemble_layer_dataset(embs, table.labels);
      }();

      const Eigen::VectorXd spectrum = singular_spectrum(ds);
      for (Eigen::Index i = 0; i < spectrum.size(); ++i)
        spectra << csv_field(table.layer) << ',' << i << ',' << csv_num(spectrum(i)) << '\n';

      DimReportRow row;
      row.layer = table.layer;
      row.n = static_cast<int>(table.features.rows());
      const int full_d = static_cast<int>(std::min(ds.y.rows(), ds.y.cols()));
      switch (config.pipeline.dims.mode) {
        case DimMode::none:
          row.d = row.n;
          break;
        case DimMode::fixed:
          row.d = std::min(config.pipeline.dims.fixed_d, full_d);
          break;
        case DimMode::variance: {
          const PcaModel full = pca_fit(ds, full_d);
          row.d = config.pipeline.dims.variance_ratio >= 1.0 - 1e-12
                      ? full_d
                      : dims_for_variance(full, config.pipeline.dims.variance_ratio);
          break;
        }
        case DimMode::acdl: {
          AcdlConfig acdl_cfg = config.pipeline.acdl_for(table.layer);
          acdl_cfg.seed = config.pipeline.seed ^ fnv1a_bytes(table.layer.data(), table.layer.size());
          const AcdlResult res = acdl_fit(ds, acdl_cfg);
          row.d = std::min(res.d_selected, full_d);
          row.converged = res.converged;
          write_trace_csv(out_dir / ("trace_" + table.layer + "_full.csv"), res);
          break;
        }
      }
      row.compression = 1.0 - static_cast<double>(row.d) / row.n;
      rows.push_back(std::move(row));
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError("select-dims", table.layer, e.what());
    }
  }

  auto dims = open_csv(out_dir / "dims.csv");
  dims << "layer,n,d,compression,converged\n";
  for (const auto& row : rows)
    dims << csv_field(row.layer) << ',' << row.n << ',' << row.d << ','
         << csv_num(row.compression) << ',' << (row.converged ? 1 : 0) << '\n';
  return rows;
}

std::string export_embeddings(const ExperimentConfig& config, const std::string& layer,
                              ExportStage stage) {
  StageClock clock(nullptr);
  const LoadedInputs loaded = load_inputs(config, clock);
  const auto tables = clock.run("featurize", [&] { return featurize(config, loaded); });

  const EmbeddingTable* table = nullptr;
  for (const auto& t : tables)
    if (t.layer == layer) table = &t;
  if (!table)
    throw ParameterError("export: unknown layer '" + layer + "' (not in the configured taps)");

  Eigen::MatrixXd values;
  if (stage == ExportStage::raw) {
    values = table->features;
  } else {
    try {
      const LayerTransform transform =
          fit_layer_transform(table->features, table->labels, layer, config.pipeline, 0);
      values = transform.apply(table->features);
    } catch (const std::exception& e) {
      throw StageError("export", layer, e.what());
    }
  }

  fs::create_directories(config.out_dir);
  const fs::path path =
      fs::path(config.out_dir) /
      ("embeddings_" + layer + (stage == ExportStage::raw ? "_raw.csv" : "_compressed.csv"));
  auto out = open_csv(path);
  out << "recording_id,label";
  for (Eigen::Index d = 0; d < values.rows(); ++d) out << ",dim_" << d;
  out << '\n';
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    out << csv_field(table->ids[static_cast<std::size_t>(c)]) << ','
        << table->labels[static_cast<std::size_t>(c)];
    for (Eigen::Index d = 0; d < values.rows(); ++d) out << ',' << csv_num(values(d, c));
    out << '\n';
  }
  return path.string();
}

TrainedModel fit_full_model(const ExperimentConfig& config,
                            const std::vector<EmbeddingTable>& tables) {
  if (tables.empty()) throw ParameterError("fit_full_model: no embedding tables");
  const auto& labels = tables.front().labels;
  int classes = 0;
  for (const int l : labels) classes = std::max(classes, l + 1);

  TrainedModel model;
  model.fusion = config.pipeline.fusion;
  model.class_count = classes;

  // kernel choice on a stratified holdout, applied identically to all layers
  const auto grid = config.pipeline.grid.enumerate();
  KernelParams chosen = grid.front();
  if (grid.size() > 1) {
    const StratifiedSplit split = stratified_split(labels, config.pipeline.seed);
    std::vector<int> tr_labels, ho_labels;
    for (const auto i : split.train) tr_labels.push_back(labels[i]);
    for (const auto i : split.holdout) ho_labels.push_back(labels[i]);
    std::set<int> tr_classes(tr_labels.begin(), tr_labels.end());
    if (!split.holdout.empty() && static_cast<int>(tr_classes.size()) == classes) {
      double best = -1.0;
      for (const auto& params : grid) {
        std::vector<Eigen::MatrixXd> probs;
        bool usable = true;
        for (const auto& table : tables) {
          Eigen::MatrixXd tr(table.features.rows(), static_cast<Eigen::Index>(split.train.size()));
          Eigen::MatrixXd ho(table.features.rows(),
                             static_cast<Eigen::Index>(split.holdout.size()));
          for (std::size_t i = 0; i < split.train.size(); ++i)
            tr.col(static_cast<Eigen::Index>(i)) =
                table.features.col(static_cast<Eigen::Index>(split.train[i]));
          for (std::size_t i = 0; i < split.holdout.size(); ++i)
            ho.col(static_cast<Eigen::Index>(i)) =
                table.features.col(static_cast<Eigen::Index>(split.holdout[i]));
          try {
            const LayerTransform t =
                fit_layer_transform(tr, tr_labels, table.layer, config.pipeline, 0);
            const LayerClassifier clf =
                train_layer_classifier(t.apply(tr), tr_labels, params, config.pipeline.train);
            probs.push_back(predict_proba(clf, t.apply(ho)));
          } catch (const Error&) {
            usable = false;
            break;
          }
        }
        if (!usable) continue;
        const double acc =
            evaluate(late_fuse(probs, config.pipeline.fusion), ho_labels).accuracy;
        if (acc > best) {
          best = acc;
          chosen = params;
        }
      }
    }
  }

  for (const auto& table : tables) {
    try {
      LayerTransform transform =
          fit_layer_transform(table.features, labels, table.layer, config.pipeline, 0);
      LayerClassifier clf = train_layer_classifier(transform.apply(table.features), labels, chosen,
                                                   config.pipeline.train);
      clf.layer = table.layer;
      model.layers.push_back(table.layer);
      model.transforms.push_back(std::move(transform));
      model.classifiers.push_back(std::move(clf));
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError("train", table.layer, e.what());
    }
  }
  return model;
}

namespace {

NamedTensor vec_tensor(const std::string& name, const Eigen::VectorXd& v) {
  return {name,
          {static_cast<std::uint32_t>(v.size())},
          std::vector<double>(v.data(), v.data() + v.size())};
}

NamedTensor mat_tensor(const std::string& name, const Eigen::MatrixXd& m) {
  NamedTensor t;
  t.name = name;
  t.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  t.values.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.values.push_back(m(r, c));
  return t;
}

Eigen::MatrixXd tensor_matrix(const NamedTensor& t) {
  if (t.dims.size() != 2) throw FormatError("model tensor " + t.name + " is not rank 2");
  Eigen::MatrixXd m(t.dims[0], t.dims[1]);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = t.values[i++];
  return m;
}

Eigen::VectorXd tensor_vector(const NamedTensor& t) {
  if (t.dims.size() != 1) throw FormatError("model tensor " + t.name + " is not rank 1");
  return Eigen::Map<const Eigen::VectorXd>(t.values.data(),
                                           static_cast<Eigen::Index>(t.values.size()));
}

}  // namespace

void save_model(const std::string& path, const TrainedModel& model) {
  std::vector<NamedTensor> tensors;
  tensors.push_back({"meta.fusion", {1}, {model.fusion == FusionRule::geometric ? 1.0 : 0.0}});
  tensors.push_back({"meta.classes", {1}, {static_cast<double>(model.class_count)}});
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const std::string& layer = model.layers[i];
    const LayerTransform& t = model.transforms[i];
    const LayerClassifier& c = model.classifiers[i];
    tensors.push_back(vec_tensor(layer + ".mean", t.mean));
    tensors.push_back({layer + ".scale", {1}, {t.feature_scale}});
    if (t.components.size() > 0) tensors.push_back(mat_tensor(layer + ".components", t.components));
    tensors.push_back(mat_tensor(layer + ".support", c.support));
    tensors.push_back(mat_tensor(layer + ".alpha", c.alpha));
    tensors.push_back({layer + ".kernel",
                       {4},
                       {static_cast<double>(c.kernel.degree), c.kernel.coef0, c.kernel.scale,
                        c.kernel.regularization}});
  }
  write_tensor_file(path, tensors);
}

TrainedModel load_model(const std::string& path) {
  const auto tensors = read_tensor_file(path);
  TrainedModel model;
  const NamedTensor* fusion = find_tensor(tensors, "meta.fusion");
  const NamedTensor* classes = find_tensor(tensors, "meta.classes");
  if (!fusion || !classes) throw FormatError("model file missing meta tensors: " + path);
  model.fusion = fusion->values.at(0) != 0.0 ? FusionRule::geometric : FusionRule::mean;
  model.class_count = static_cast<int>(std::lround(classes->values.at(0)));

  // layer order follows first appearance in the file
  for (const auto& t : tensors) {
    const auto dot = t.name.rfind('.');
    if (dot == std::string::npos || t.name.substr(dot + 1) != "alpha") continue;
    const std::string layer = t.name.substr(0, dot);
    if (layer == "meta") continue;

    const NamedTensor* mean = find_tensor(tensors, layer + ".mean");
    const NamedTensor* scale = find_tensor(tensors, layer + ".scale");
    const NamedTensor* support = find_tensor(tensors, layer + ".support");
    const NamedTensor* kernel = find_tensor(tensors, layer + ".kernel");
    if (!mean || !scale || !support || !kernel || kernel->values.size() != 4)
      throw FormatError("model file has incomplete layer " + layer + ": " + path);

    LayerTransform transform;
    transform.mean = tensor_vector(*mean);
    transform.feature_scale = scale->values.at(0);
    if (const NamedTensor* comp = find_tensor(tensors, layer + ".components"))
      transform.components = tensor_matrix(*comp);

    LayerClassifier clf;
    clf.layer = layer;
    clf.support = tensor_matrix(*support);
    clf.alpha = tensor_matrix(t);
    clf.class_count = static_cast<int>(clf.alpha.rows());
    clf.kernel.degree = static_cast<int>(std::lround(kernel->values[0]));
    clf.kernel.coef0 = kernel->values[1];
    clf.kernel.scale = kernel->values[2];
    clf.kernel.regularization = kernel->values[3];

    model.layers.push_back(layer);
    model.transforms.push_back(std::move(transform));
    model.classifiers.push_back(std::move(clf));
  }
  if (model.layers.empty()) throw FormatError("model file has no layers: " + path);
  return model;
}

}  // namespace asckit
