#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace emoedit {

// Every failure surfaced by the library is an Error tagged with the module that
// raised it and a stable machine-readable code. The CLI and the HTTP service
// turn these into JSON payloads verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string module, std::string code, const std::string& message,
        std::optional<std::size_t> byte_offset = std::nullopt)
      : std::runtime_error(module + "." + code + ": " + message),
        module_(std::move(module)),
        code_(std::move(code)),
        detail_(message),
        byte_offset_(byte_offset) {}

  const std::string& module() const noexcept { return module_; }
  const std::string& code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  std::optional<std::size_t> byte_offset() const noexcept { return byte_offset_; }

 private:
  std::string module_;
  std::string code_;
  std::string detail_;
  std::optional<std::size_t> byte_offset_;
};

namespace errc {
inline constexpr const char* kParse = "parse_error";
inline constexpr const char* kUnsupportedFormat = "unsupported_format";
inline constexpr const char* kInvalidSegment = "invalid_segment";
inline constexpr const char* kInvalidArgument = "invalid_argument";
inline constexpr const char* kTierNotFound = "tier_not_found";
inline constexpr const char* kValidation = "validation_error";
inline constexpr const char* kContainment = "containment_error";
inline constexpr const char* kSchema = "schema_error";
inline constexpr const char* kInsufficientData = "insufficient_data";
inline constexpr const char* kVersion = "version_error";
inline constexpr const char* kCorruptFile = "corrupt_file";
inline constexpr const char* kEmptyHierarchy = "empty_hierarchy";
inline constexpr const char* kIncompleteBank = "incomplete_bank";
inline constexpr const char* kIndex = "index_error";
inline constexpr const char* kLabel = "label_error";
inline constexpr const char* kShape = "shape_mismatch";
inline constexpr const char* kIo = "io_error";
}  // namespace errc

}  // namespace emoedit
