#pragma once

#include <stdexcept>
#include <string>

namespace hgfx {

// Exit codes of the CLI are derived from the kind.
enum class ErrorKind {
  kConfig = 1,
  kData = 2,
  kNumeric = 3,
  kVerification = 4,
  kDimension = 5,
  kStructure = 6,
  kContract = 7,
  kIo = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::kConfig, w) {}
};
struct DataError : Error {
  explicit DataError(const std::string& w) : Error(ErrorKind::kData, w) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorKind::kNumeric, w) {}
};
struct VerificationError : Error {
  explicit VerificationError(const std::string& w) : Error(ErrorKind::kVerification, w) {}
};
struct DimensionError : Error {
  explicit DimensionError(const std::string& w) : Error(ErrorKind::kDimension, w) {}
};
struct StructureError : Error {
  explicit StructureError(const std::string& w) : Error(ErrorKind::kStructure, w) {}
};
struct ContractError : Error {
  explicit ContractError(const std::string& w) : Error(ErrorKind::kContract, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::kIo, w) {}
};

// Process exit code for a failure of the given kind.
inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kDimension:
    case ErrorKind::kContract:
      return 1;
    case ErrorKind::kData:
    case ErrorKind::kIo:
    case ErrorKind::kStructure:
      return 2;
    case ErrorKind::kNumeric:
      return 3;
    case ErrorKind::kVerification:
      return 4;
  }
  return 1;
}

}  // namespace hgfx
