/**
 * Copyright 2026 The gclreg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef GCLREG_COMMON_HPP_
#define GCLREG_COMMON_HPP_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace gclreg {

using NodeId = std::int32_t;
using ClassId = std::int32_t;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// All randomness in the library flows through this engine so that a seed
// fully determines a run on a given platform.
using Rng = std::mt19937_64;

enum class ErrorKind {
  kParse,
  kValidation,
  kConfig,
  kShape,
  kSize,
  kIo,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

// Set of classes the softmax currently ranges over. Inactive logits are
// treated as -inf, so their probability is exactly zero.
class ClassMask {
 public:
  ClassMask() = default;
  explicit ClassMask(std::vector<bool> active) : active_(std::move(active)) {}

  static ClassMask all(int num_classes) { return ClassMask(std::vector<bool>(num_classes, true)); }
  static ClassMask of(int num_classes, const std::vector<ClassId>& classes) {
    std::vector<bool> a(num_classes, false);
    for (ClassId c : classes) {
      if (c < 0 || c >= num_classes) fail(ErrorKind::kValidation, "class id out of range in mask");
      a[c] = true;
    }
    return ClassMask(std::move(a));
  }

  int size() const { return static_cast<int>(active_.size()); }
  bool operator[](ClassId c) const { return active_[c]; }
  int count() const {
    int n = 0;
    for (bool b : active_) n += b ? 1 : 0;
    return n;
  }
  bool operator==(const ClassMask&) const = default;

 private:
  std::vector<bool> active_;
};

}  // namespace gclreg

#endif  // GCLREG_COMMON_HPP_
