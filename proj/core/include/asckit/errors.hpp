#ifndef ASCKIT_ERRORS_HPP
#define ASCKIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace asckit {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or length mismatch between operands.
struct DimensionError : Error {
  using Error::Error;
};

// Malformed container or file header.
struct FormatError : Error {
  using Error::Error;
};

// Well-formed file whose contents we do not handle (e.g. 24-bit PCM).
struct UnsupportedError : Error {
  using Error::Error;
};

// Manifest rows that do not match the declared schema.
struct SchemaError : Error {
  using Error::Error;
};

struct EmptyDatasetError : Error {
  using Error::Error;
};

// Argument outside its documented range.
struct ParameterError : Error {
  using Error::Error;
};

// Non-finite values where finite ones are required.
struct NumericError : Error {
  using Error::Error;
};

// Inputs that individually validate but do not belong together.
struct ConsistencyError : Error {
  using Error::Error;
};

// Degenerate data (all-zero spectrum, single-class labels).
struct DegenerateError : Error {
  using Error::Error;
};

// Pipeline failure tagged with the stage (and layer, when known) it came from.
struct StageError : Error {
  StageError(std::string stage_name, std::string layer_name, const std::string& msg)
      : Error("[stage " + stage_name + (layer_name.empty() ? "" : "] [layer " + layer_name) +
              "] " + msg),
        stage(std::move(stage_name)),
        layer(std::move(layer_name)) {}

  std::string stage;
  std::string layer;
};

}  // namespace asckit

#endif
