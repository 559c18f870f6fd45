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

#include "checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace gclreg {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) fail(ErrorKind::kParse, "checkpoint truncated");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::kIo, "write failed for " + path.string());
}

}  // namespace

std::vector<std::uint8_t> encode_blocks(const Blocks& blocks) {
  std::size_t expected = 0;
  for (const auto& s : blocks.shapes) expected += static_cast<std::size_t>(s.rows) * s.cols;
  if (expected != blocks.values.size()) fail(ErrorKind::kShape, "block shapes do not cover the value vector");
  std::vector<std::uint8_t> out;
  out.reserve(4 + 8 * blocks.shapes.size() + 8 * blocks.values.size());
  put_u32(out, static_cast<std::uint32_t>(blocks.shapes.size()));
  for (const auto& s : blocks.shapes) {
    put_u32(out, s.rows);
    put_u32(out, s.cols);
  }
  for (double v : blocks.values) put_f64(out, v);
  return out;
}

Blocks decode_blocks(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  Blocks b;
  const std::uint32_t count = r.u32();
  if (count > 1024) fail(ErrorKind::kParse, "implausible block count in checkpoint header");
  std::size_t total = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    BlockShape s{r.u32(), r.u32()};
    total += static_cast<std::size_t>(s.rows) * s.cols;
    b.shapes.push_back(s);
  }
  if (total * 8 > bytes.size()) fail(ErrorKind::kParse, "checkpoint truncated");
  b.values.reserve(total);
  for (std::size_t i = 0; i < total; ++i) b.values.push_back(r.f64());
  if (!r.at_end()) fail(ErrorKind::kParse, "trailing bytes after checkpoint payload");
  return b;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  const ModelShape& s = params.shape();
  Blocks b;
  b.shapes = {{static_cast<std::uint32_t>(s.input_dim + 1), static_cast<std::uint32_t>(s.hidden_dim)},
              {static_cast<std::uint32_t>(s.hidden_dim + 1), static_cast<std::uint32_t>(s.num_classes)}};
  b.values.assign(params.flat().data(), params.flat().data() + params.dim());
  write_file(path, encode_blocks(b));
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const Blocks b = decode_blocks(bytes);
  if (b.shapes.size() != 2 || b.shapes[0].rows < 1 || b.shapes[1].rows != b.shapes[0].cols + 1) {
    fail(ErrorKind::kParse, path.string() + ": header does not describe a two-layer GCN");
  }
  const ModelShape shape{static_cast<int>(b.shapes[0].rows) - 1, static_cast<int>(b.shapes[0].cols),
                         static_cast<int>(b.shapes[1].cols)};
  return ModelParams(shape, Eigen::Map<const Vector>(b.values.data(), static_cast<Eigen::Index>(b.values.size())));
}

void dump_matrix(const std::filesystem::path& path, const Matrix& m) {
  Blocks b;
  b.shapes = {{static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())}};
  b.values.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) b.values.push_back(m(i, j));
  }
  write_file(path, encode_blocks(b));
}

}  // namespace gclreg
