// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace prox {

/// Base class for all proxyrender errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A precondition on caller-supplied data was violated.
struct InvalidInput : Error {
  explicit InvalidInput(const std::string& msg) : Error(msg) {}
};

/// A file could not be read, written, or parsed.
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

/// A dataset directory is missing files or fails schema checks.
struct DatasetCorrupt : Error {
  explicit DatasetCorrupt(const std::string& msg) : Error(msg) {}
};

/// Training diverged (non-finite loss).
struct Divergence : Error {
  explicit Divergence(const std::string& msg) : Error(msg) {}
};

}  // namespace prox
