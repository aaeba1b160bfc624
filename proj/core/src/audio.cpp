#include "asckit/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "asckit/errors.hpp"

namespace asckit {

namespace {

constexpr double kScale = 256.0 / 32768.0;

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

void write_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open WAV file: " + path);

  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0)
    throw FormatError("not a RIFF file: " + path);
  read_u32(in);  // riff size, unused
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0)
    throw FormatError("missing WAVE tag: " + path);

  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint16_t bits = 0;
  std::uint32_t rate = 0;
  std::vector<std::int16_t> raw;

  while (in.read(tag, 4)) {
    const std::uint32_t size = read_u32(in);
    if (!in) throw FormatError("truncated chunk header: " + path);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (size < 16) throw FormatError("fmt chunk too small: " + path);
      const std::uint16_t format = read_u16(in);
      channels = read_u16(in);
      rate = read_u32(in);
      read_u32(in);  // byte rate
      read_u16(in);  // block align
      bits = read_u16(in);
      in.ignore(size - 16 + (size % 2));
      if (format != 1) throw UnsupportedError("non-PCM WAV format code " + std::to_string(format));
      if (bits != 16) throw UnsupportedError("unsupported bit depth " + std::to_string(bits));
      if (channels == 0) throw FormatError("zero channels: " + path);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw FormatError("data chunk before fmt chunk: " + path);
      raw.resize(size / 2);
      in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 2));
      if (!in) throw FormatError("truncated data chunk: " + path);
      if (size % 2) in.ignore(1);
      break;
    } else {
      in.ignore(size + (size % 2));
      if (!in) throw FormatError("truncated chunk: " + path);
    }
  }
  if (!have_fmt) throw FormatError("missing fmt chunk: " + path);
  if (raw.empty()) throw FormatError("missing or empty data chunk: " + path);

  const std::size_t frames = raw.size() / channels;
  if (frames == 0) throw FormatError("no complete frames: " + path);

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.id = path;
  w.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) acc += raw[f * channels + c];
    w.samples[f] = acc / channels * kScale;
  }
  return w;
}

void write_wav(const std::string& path, const Waveform& w) {
  if (w.samples.empty()) throw ParameterError("cannot write empty waveform");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path);

  const std::uint32_t data_size = static_cast<std::uint32_t>(w.samples.size() * 2);
  out.write("RIFF", 4);
  write_u32(out, 36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, 1);  // PCM
  write_u16(out, 1);  // mono
  write_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  write_u32(out, static_cast<std::uint32_t>(w.sample_rate * 2));
  write_u16(out, 2);
  write_u16(out, 16);
  out.write("data", 4);
  write_u32(out, data_size);
  for (const double s : w.samples) {
    const double scaled = std::round(s / kScale);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    write_u16(out, static_cast<std::uint16_t>(v));
  }
  if (!out) throw FormatError("write failed: " + path);
}

std::vector<int> DatasetManifest::fold_ids() const {
  std::set<int> folds;
  for (const auto& e : entries) folds.insert(e.fold);
  return {folds.begin(), folds.end()};
}

std::vector<int> DatasetManifest::per_class_counts() const {
  std::vector<int> counts(class_names.size(), 0);
  for (const auto& e : entries) counts[static_cast<std::size_t>(e.label)]++;
  return counts;
}

DatasetManifest load_manifest(const std::string& path,
                              const std::vector<std::string>& declared_classes) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest: " + path);

  std::string line;
  if (!std::getline(in, line)) throw EmptyDatasetError("empty manifest: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "path\tlabel\tfold")
    throw SchemaError("manifest header must be `path<TAB>label<TAB>fold`, got: " + line);

  const std::set<std::string> declared(declared_classes.begin(), declared_classes.end());
  const auto base = std::filesystem::path(path).parent_path();

  struct Row {
    std::string path;
    std::string label;
    int fold;
  };
  std::vector<Row> rows;
  std::set<std::string> labels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3)
      throw SchemaError("manifest line " + std::to_string(lineno) + ": expected 3 fields, got " +
                        std::to_string(fields.size()));
    if (fields[1].empty())
      throw SchemaError("manifest line " + std::to_string(lineno) + ": empty label");
    if (!declared.empty() && !declared.count(fields[1]))
      throw SchemaError("manifest line " + std::to_string(lineno) + ": unknown label `" +
                        fields[1] + "` not in declared classes");
    int fold = 0;
    try {
      std::size_t used = 0;
      fold = std::stoi(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument(fields[2]);
    } catch (const std::exception&) {
      throw SchemaError("manifest line " + std::to_string(lineno) + ": bad fold `" + fields[2] +
                        "`");
    }
    std::filesystem::path p(fields[0]);
    rows.push_back({p.is_absolute() ? p.string() : (base / p).string(), fields[1], fold});
    labels.insert(fields[1]);
  }
  if (rows.empty()) throw EmptyDatasetError("manifest has no entries: " + path);
  if (labels.size() < 2)
    throw SchemaError("manifest declares " + std::to_string(labels.size()) +
                      " class(es); at least 2 required");

  DatasetManifest m;
  m.class_names.assign(labels.begin(), labels.end());
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < m.class_names.size(); ++i)
    index[m.class_names[i]] = static_cast<int>(i);
  for (const auto& r : rows) m.entries.push_back({r.path, index[r.label], r.fold});
  return m;
}

}  // namespace asckit
