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

#include "mia/bit_matrix.h"

#include <algorithm>
#include <string>

#include "mia/errors.h"

namespace mia {

BitMatrix::BitMatrix(size_t rows, size_t cols)
    : rows_(rows),
      cols_(cols),
      words_per_row_((cols + 63) / 64),
      data_(rows * ((cols + 63) / 64), 0) {}

void BitMatrix::AppendRow(BitRow row) {
  if (rows_ == 0 && cols_ == 0) {
    cols_ = row.cols;
    words_per_row_ = (cols_ + 63) / 64;
  }
  if (row.cols != cols_) {
    throw InvalidInputError("AppendRow: row has " + std::to_string(row.cols) +
                            " columns, matrix has " + std::to_string(cols_));
  }
  data_.insert(data_.end(), row.words.begin(), row.words.end());
  ++rows_;
}

void BitMatrix::AppendRows(const BitMatrix& other) {
  for (size_t i = 0; i < other.rows(); ++i) AppendRow(other.Row(i));
}

BitMatrix BitMatrix::SelectRows(std::span<const size_t> indices) const {
  BitMatrix out(indices.size(), cols_);
  for (size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= rows_) {
      throw InvalidInputError("SelectRows: index out of range");
    }
    auto src = Row(indices[r]).words;
    std::copy(src.begin(), src.end(), out.MutableRowWords(r).begin());
  }
  return out;
}

Eigen::VectorXd BitMatrix::ColumnMeans() const {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cols_));
  if (rows_ == 0) return mean;
  std::vector<size_t> counts(cols_, 0);
  for (size_t i = 0; i < rows_; ++i) {
    for (size_t j = 0; j < cols_; ++j) counts[j] += Get(i, j);
  }
  for (size_t j = 0; j < cols_; ++j) {
    mean[static_cast<Eigen::Index>(j)] =
        static_cast<double>(counts[j]) / static_cast<double>(rows_);
  }
  return mean;
}

Eigen::MatrixXd BitMatrix::ToReal() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows_),
                    static_cast<Eigen::Index>(cols_));
  for (size_t i = 0; i < rows_; ++i) {
    for (size_t j = 0; j < cols_; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          Get(i, j) ? 1.0 : 0.0;
    }
  }
  return m;
}

BitMatrix BitMatrix::FromRows(const std::vector<std::vector<int>>& rows) {
  if (rows.empty()) return {};
  BitMatrix m(rows.size(), rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) {
      throw InvalidInputError("FromRows: ragged rows");
    }
    for (size_t j = 0; j < m.cols(); ++j) {
      if (rows[i][j] != 0 && rows[i][j] != 1) {
        throw InvalidInputError("FromRows: entries must be 0 or 1");
      }
      m.Set(i, j, rows[i][j] == 1);
    }
  }
  return m;
}

}  // namespace mia
