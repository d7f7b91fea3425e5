// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <string>

namespace waveft {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Matrix dimensions (rows, cols).
struct Shape {
  Index rows = 0;
  Index cols = 0;

  Index size() const noexcept { return rows * cols; }
  friend bool operator==(const Shape&, const Shape&) = default;
  friend std::ostream& operator<<(std::ostream& os, const Shape& s) {
    return os << s.rows << "x" << s.cols;
  }
};

inline Shape shape_of(const Matrix& m) noexcept { return {m.rows(), m.cols()}; }

/// Thrown when operand dimensions do not agree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_shape(const Matrix& m, Shape expected, const char* what) {
  if (shape_of(m) != expected) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(expected.rows) + "x" +
                     std::to_string(expected.cols) + ", got " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()));
  }
}

}  // namespace waveft
