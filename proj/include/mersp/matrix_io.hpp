// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mersp/errors.hpp"
#include "mersp/instance.hpp"

namespace mersp {

/// Text format: first line "n t", then n+t rows of n+t whitespace-separated
/// decimals. Entries are written with 17 significant digits so a round trip
/// is lossless.
inline CovarianceInstance read_covariance_stream(std::istream& in) {
  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r\n") != std::string::npos) return true;
    }
    ++line_no;
    return false;
  };

  if (!next_line()) throw ParseError("empty input", line_no);
  int n = 0, t = 0;
  {
    std::istringstream head(line);
    std::string extra;
    if (!(head >> n >> t) || (head >> extra)) {
      throw ParseError("expected header \"n t\"", line_no);
    }
  }
  if (n < 2 || t < 1) throw ParseError("need n >= 2 and t >= 1", line_no);
  const int order = n + t;
  Matrix m(order, order);
  for (int r = 0; r < order; ++r) {
    if (!next_line()) throw ParseError("unexpected end of matrix", line_no);
    std::istringstream row(line);
    for (int c = 0; c < order; ++c) {
      if (!(row >> m(r, c))) {
        throw ParseError("expected " + std::to_string(order) + " entries", line_no);
      }
    }
    std::string extra;
    if (row >> extra) {
      throw ParseError("trailing data after " + std::to_string(order) + " entries",
                       line_no);
    }
  }
  const double scale = m.cwiseAbs().maxCoeff();
  const double skew = (m - m.transpose().eval()).cwiseAbs().maxCoeff();
  if (skew > 1e-6 * scale) {
    throw InvalidArgument("covariance file: matrix is asymmetric beyond tolerance");
  }
  return CovarianceInstance(SymMatrix(std::move(m)), n, t);
}

inline CovarianceInstance read_covariance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);
  return read_covariance_stream(in);
}

inline std::string format_covariance(const CovarianceInstance& cov) {
  std::ostringstream out;
  out << cov.n() << " " << cov.t() << "\n";
  const Matrix& m = cov.c().m();
  char buf[64];
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
      out << (c ? " " : "") << buf;
    }
    out << "\n";
  }
  return out.str();
}

inline void write_covariance(const std::string& path,
                             const CovarianceInstance& cov) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << format_covariance(cov);
}

}  // namespace mersp
