#include "asckit/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "asckit/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "tensor container i/o assumes a little-endian host");

namespace asckit {

namespace {
constexpr char kMagic[4] = {'S', 'N', 'D', '1'};

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("truncated tensor file: " + path);
  return v;
}
}  // namespace

std::size_t NamedTensor::element_count() const {
  std::size_t n = 1;
  for (const auto d : dims) n *= d;
  return dims.empty() ? 0 : n;
}

std::vector<NamedTensor> read_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open tensor file: " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("bad magic in tensor file: " + path);

  const auto count = read_pod<std::uint32_t>(in, path);
  std::vector<NamedTensor> tensors;
  tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const auto name_len = read_pod<std::uint16_t>(in, path);
    t.name.resize(name_len);
    in.read(t.name.data(), name_len);
    const auto rank = read_pod<std::uint8_t>(in, path);
    t.dims.resize(rank);
    for (auto& d : t.dims) d = read_pod<std::uint32_t>(in, path);
    const std::size_t n = t.element_count();
    std::vector<float> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    if (!in) throw FormatError("truncated tensor values in: " + path);
    t.values.assign(raw.begin(), raw.end());
    tensors.push_back(std::move(t));
  }
  return tensors;
}

void write_tensor_file(const std::string& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open tensor file for writing: " + path);
  out.write(kMagic, 4);
  const auto count = static_cast<std::uint32_t>(tensors.size());
  out.write(reinterpret_cast<const char*>(&count), 4);
  for (const auto& t : tensors) {
    if (t.name.size() > std::numeric_limits<std::uint16_t>::max())
      throw ParameterError("tensor name too long: " + t.name);
    if (t.values.size() != t.element_count())
      throw DimensionError("tensor `" + t.name + "`: value count does not match dims");
    const auto name_len = static_cast<std::uint16_t>(t.name.size());
    out.write(reinterpret_cast<const char*>(&name_len), 2);
    out.write(t.name.data(), name_len);
    const auto rank = static_cast<std::uint8_t>(t.dims.size());
    out.write(reinterpret_cast<const char*>(&rank), 1);
    for (const auto d : t.dims) out.write(reinterpret_cast<const char*>(&d), 4);
    for (const double v : t.values) {
      const float f = static_cast<float>(v);
      out.write(reinterpret_cast<const char*>(&f), 4);
    }
  }
  if (!out) throw FormatError("write failed: " + path);
}

const NamedTensor* find_tensor(const std::vector<NamedTensor>& tensors, const std::string& name) {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

}  // namespace asckit
