#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace permnet {

enum class Errc {
  MalformedXml,
  MalformedLine,
  UnknownLabel,
  HeaderMissing,
  NonBinaryCell,
  LabelColumnMissing,
  UnlabeledRecord,
  InsufficientClassCount,
  EmptyClass,
  EmptyDataset,
  IncompatibleDims,
  ShapeMismatch,
  NonFiniteActivation,
  InvalidConfig,
  InvalidFormat,
  UnsupportedLayer,
  Io,
};

const char* errc_name(Errc code) noexcept;

/// Library-wide exception. `line` and `column` are 1-based and zero when not
/// applicable.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : std::runtime_error(what), code_(code), line_(line), column_(column) {}

  Errc code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  Errc code_;
  std::size_t line_;
  std::size_t column_;
};

}  // namespace permnet
