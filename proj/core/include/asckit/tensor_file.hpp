#ifndef ASCKIT_TENSOR_FILE_HPP
#define ASCKIT_TENSOR_FILE_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace asckit {

// One entry of the binary container: named, small-rank, float32 on disk
// (row-major), held as doubles in memory.
struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<double> values;

  std::size_t element_count() const;
};

// Container layout, little-endian throughout:
//   magic "SND1" | u32 tensor count |
//   per tensor: u16 name length, name bytes, u8 rank, u32 dims..., f32 values.
std::vector<NamedTensor> read_tensor_file(const std::string& path);
void write_tensor_file(const std::string& path, const std::vector<NamedTensor>& tensors);

const NamedTensor* find_tensor(const std::vector<NamedTensor>& tensors, const std::string& name);

}  // namespace asckit

#endif
