#pragma once

#include <stdexcept>
#include <string>

namespace miracle {

// Base for everything thrown by the library. CLI maps these to exit code 1
// (runtime) or 2 (usage/config).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shape disagreements; message names both shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf surfaced by an operation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// SMILES lexical/structural problems; message carries the byte offset
// where applicable.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Atom element absent from the trained embedding vocabulary.
class VocabularyError : public Error {
 public:
  using Error::Error;
};

// Dataset/file-format problems (missing file, malformed row, bad counts).
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Metric undefined for the given inputs (e.g. single-class AUROC).
class MetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace miracle
