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

#ifndef GCLREG_CHECKPOINT_HPP_
#define GCLREG_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "common.hpp"
#include "gcn_model.hpp"

namespace gclreg {

// Binary layout, all little-endian:
//   u32 block_count
//   block_count x (u32 rows, u32 cols)
//   f64 values, block by block, each block row-major
struct BlockShape {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  bool operator==(const BlockShape&) const = default;
};

struct Blocks {
  std::vector<BlockShape> shapes;
  std::vector<double> values;
};

std::vector<std::uint8_t> encode_blocks(const Blocks& blocks);
Blocks decode_blocks(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

// Debug dump of a dense matrix (e.g. a FIM) as a single block.
void dump_matrix(const std::filesystem::path& path, const Matrix& m);

}  // namespace gclreg

#endif  // GCLREG_CHECKPOINT_HPP_
