#pragma once

#include <stdexcept>
#include <string>

namespace lep {

// Exit codes used by the CLI. 1 is the generic failure, 2 is reserved for
// argument parsing.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitOverflow = 10,
  kExitTableMismatch = 11,
  kExitCorruptStream = 12,
  kExitUnsupportedFrame = 13,
};

class Error : public std::runtime_error {
 public:
  Error(const std::string& msg, int exit_code = kExitFailure)
      : std::runtime_error(msg), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

// Input JPEG is structurally valid but outside the supported profile
// (progressive scan, arithmetic coding, 12-bit precision, CMYK, ...).
struct UnsupportedFrame : Error {
  explicit UnsupportedFrame(const std::string& msg)
      : Error(msg, kExitUnsupportedFrame) {}
};

// Input JPEG violates the format (bad marker structure, truncated entropy
// data, invalid Huffman code, ...).
struct MalformedStream : Error {
  explicit MalformedStream(const std::string& msg) : Error(msg) {}
};

struct InvalidImage : Error {
  explicit InvalidImage(const std::string& msg) : Error(msg) {}
};

struct MissingHeaderBlob : Error {
  explicit MissingHeaderBlob(const std::string& msg) : Error(msg) {}
};

// Serialized artifact (coefficient dump, table file, container) fails a
// structural or checksum gate.
struct FormatVersionMismatch : Error {
  explicit FormatVersionMismatch(const std::string& msg) : Error(msg) {}
};

struct ChecksumMismatch : Error {
  explicit ChecksumMismatch(const std::string& msg)
      : Error(msg, kExitCorruptStream) {}
};

struct CorruptStream : Error {
  explicit CorruptStream(const std::string& msg)
      : Error(msg, kExitCorruptStream) {}
};

struct TableMismatch : Error {
  explicit TableMismatch(const std::string& msg)
      : Error(msg, kExitTableMismatch) {}
};

struct OverflowAbort : Error {
  explicit OverflowAbort(const std::string& msg)
      : Error(msg, kExitOverflow) {}
};

struct RangeError : Error {
  explicit RangeError(const std::string& msg) : Error(msg) {}
};

struct InvalidProbability : Error {
  explicit InvalidProbability(const std::string& msg) : Error(msg) {}
};

struct IndivisibleDepth : Error {
  explicit IndivisibleDepth(const std::string& msg) : Error(msg) {}
};

struct InvariantViolation : Error {
  explicit InvariantViolation(const std::string& msg) : Error(msg) {}
};

struct EmptyCorpus : Error {
  explicit EmptyCorpus(const std::string& msg) : Error(msg) {}
};

struct UnknownModel : Error {
  explicit UnknownModel(const std::string& msg) : Error(msg) {}
};

}  // namespace lep
