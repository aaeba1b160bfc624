#ifndef ASCKIT_AUDIO_HPP
#define ASCKIT_AUDIO_HPP

#include <string>
#include <vector>

namespace asckit {

// Mono recording with samples scaled to [-256, 256], the range the
// pretrained network weights expect.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;
  std::string id;
};

struct ManifestEntry {
  std::string path;   // resolved relative to the manifest file
  int label = 0;      // contiguous class index
  int fold = 0;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> class_names;  // sorted; label i == class_names[i]

  int class_count() const { return static_cast<int>(class_names.size()); }
  std::vector<int> fold_ids() const;
  std::vector<int> per_class_counts() const;
};

// Reads a RIFF PCM-16 WAV file. Multi-channel input is averaged to mono and
// integer samples are mapped linearly from [-32768, 32767] to [-256, 256].
Waveform read_wav(const std::string& path);

// Inverse of read_wav's scaling: samples quantized to PCM-16 (round to
// nearest, clamped). Used for synthetic datasets and round-trip checks.
void write_wav(const std::string& path, const Waveform& w);

// Loads a tab-separated manifest with one `path<TAB>label<TAB>fold` header
// line. Labels are mapped to contiguous indices in sorted name order. When
// `declared_classes` is non-empty, any label outside it is a schema error.
DatasetManifest load_manifest(const std::string& path,
                              const std::vector<std::string>& declared_classes = {});

}  // namespace asckit

#endif
