// Copyright 2026 The datl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace datl {

/// Base exception for every recoverable failure in the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A malformed on-disk artifact. The message carries the file and the line
/// (text files) or byte offset (binary files) where parsing stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& file, std::size_t location, const std::string& what,
              bool byte_offset = false)
      : Error(file + (byte_offset ? ":@" : ":") + std::to_string(location) + ": " + what),
        file_(file),
        location_(location) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t location() const noexcept { return location_; }

 private:
  std::string file_;
  std::size_t location_;
};

/// Training produced a non-finite or exploding loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace datl
