// SPDX-FileCopyrightText: © 2026 The lgroup Authors
//
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "lgroup/flgw.hpp"
#include "lgroup/matrix.hpp"
#include "oracles.hpp"

namespace support {

inline lgroup::Matrix<double> to_matrix(const oracle::Dense& d) {
  lgroup::Matrix<double> m(d.size(), d.front().size());
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d[i].size(); ++j) m(i, j) = d[i][j];
  return m;
}

inline oracle::Dense to_dense(const lgroup::Matrix<double>& m) {
  oracle::Dense d(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) d[i][j] = m(i, j);
  return d;
}

inline oracle::Bits to_bits(const lgroup::flgw::MaskMatrix& m) {
  oracle::Bits b(m.rows(), std::vector<int>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) b[i][j] = m.at(i, j) ? 1 : 0;
  return b;
}

inline oracle::Bits transpose(const oracle::Bits& b) {
  oracle::Bits t(b.front().size(), std::vector<int>(b.size()));
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b[i].size(); ++j) t[j][i] = b[i][j];
  return t;
}

}  // namespace support
