// Copyright 2026 The MIA Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MIA_BIT_MATRIX_H_
#define MIA_BIT_MATRIX_H_

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mia {

// Read-only view of one packed row. Bits beyond `cols` in the last word are
// always zero, so whole-word popcounts are exact.
struct BitRow {
  std::span<const uint64_t> words;
  size_t cols = 0;

  bool Get(size_t j) const { return (words[j >> 6] >> (j & 63)) & 1U; }
};

inline size_t HammingDistance(BitRow a, BitRow b) {
  size_t d = 0;
  for (size_t w = 0; w < a.words.size(); ++w) {
    d += static_cast<size_t>(std::popcount(a.words[w] ^ b.words[w]));
  }
  return d;
}

// Row-major {0,1} matrix, 64 sites per word. Rows are individuals and
// columns are SNP sites.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(size_t rows, size_t cols);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t words_per_row() const { return words_per_row_; }
  bool empty() const { return rows_ == 0; }

  bool Get(size_t i, size_t j) const {
    return (data_[i * words_per_row_ + (j >> 6)] >> (j & 63)) & 1U;
  }
  void Set(size_t i, size_t j, bool value) {
    uint64_t& w = data_[i * words_per_row_ + (j >> 6)];
    const uint64_t mask = uint64_t{1} << (j & 63);
    w = value ? (w | mask) : (w & ~mask);
  }

  BitRow Row(size_t i) const {
    return {std::span<const uint64_t>(data_.data() + i * words_per_row_,
                                      words_per_row_),
            cols_};
  }
  std::span<uint64_t> MutableRowWords(size_t i) {
    return {data_.data() + i * words_per_row_, words_per_row_};
  }

  // Appends a row; the first append on an empty 0-column matrix fixes cols.
  void AppendRow(BitRow row);
  void AppendRows(const BitMatrix& other);
  BitMatrix SelectRows(std::span<const size_t> indices) const;

  // Column means.
  Eigen::VectorXd ColumnMeans() const;
  // Dense 0.0/1.0 copy (n x d).
  Eigen::MatrixXd ToReal() const;
  static BitMatrix FromRows(const std::vector<std::vector<int>>& rows);

  bool operator==(const BitMatrix& other) const = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  size_t words_per_row_ = 0;
  std::vector<uint64_t> data_;
};

}  // namespace mia

#endif  // MIA_BIT_MATRIX_H_
