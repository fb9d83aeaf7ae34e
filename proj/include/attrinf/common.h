// Copyright 2026 The attrinf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ATTRINF_COMMON_H_
#define ATTRINF_COMMON_H_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace attrinf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Rng = std::mt19937_64;

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data or schema.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid experiment or component configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Numerical failure during training (non-finite loss or parameters).
class TrainingError : public Error {
 public:
  using Error::Error;
};

// An attack asked for a model capability its threat model does not grant.
class AccessViolation : public Error {
 public:
  using Error::Error;
};

// Raised when an attack cannot produce a meaningful score (e.g. no neuron
// correlates positively with the target value).
class AttackError : public Error {
 public:
  using Error::Error;
};

// SplitMix64 finalizer.
inline std::uint64_t MixSeed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t HashTag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed for one (trial, cell) unit, independent of any global state.
inline std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t index,
                                std::string_view tag = {}) {
  return MixSeed(MixSeed(MixSeed(base) ^ index) ^ HashTag(tag));
}

}  // namespace attrinf

#endif  // ATTRINF_COMMON_H_
