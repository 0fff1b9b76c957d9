#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace rockgraph::ad {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// C = A * B. Each output entry accumulates over the inner index in order, so
// a row of C depends only on the matching row of A.
Matrix matmul(const Matrix& a, const Matrix& b);

// Trainable tensor with Adam moments.
struct Parameter {
  Matrix value;
  Matrix grad;
  Matrix m;
  Matrix v;

  explicit Parameter(Matrix init = {})
      : value(std::move(init)),
        grad(value.rows(), value.cols()),
        m(value.rows(), value.cols()),
        v(value.rows(), value.cols()) {}

  void zero_grad() { grad.fill(0.0); }
};

// Compressed adjacency of a (possibly block-diagonal) undirected graph.
struct Adjacency {
  std::vector<std::uint32_t> offsets{0};  // size n + 1
  std::vector<std::uint32_t> neighbors;

  std::size_t size() const { return offsets.size() - 1; }
  std::span<const std::uint32_t> of(std::size_t v) const {
    return {neighbors.data() + offsets[v], neighbors.data() + offsets[v + 1]};
  }
};

class Tape;

// Handle to a value recorded on a tape.
struct Var {
  std::size_t id = 0;
};

// Records a forward computation over matrices and replays it backwards.
// Gradients of parameter leaves are accumulated into Parameter::grad.
class Tape {
 public:
  Var constant(Matrix value);
  Var parameter(Parameter& p);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  const Matrix& grad(Var v) const { return nodes_[v.id].grad; }

  // a (n x k) * w (k x m)
  Var matmul(Var a, Var w);
  // a (n x m) + bias (1 x m) broadcast over rows
  Var add_bias(Var a, Var bias);
  Var relu(Var a);
  // (1 + eps) * h_v + sum of h_u over neighbours u of v. eps is 1 x 1.
  // Neighbour values are summed in sorted order per column, making the result
  // independent of node numbering.
  Var gin_aggregate(Var h, Var eps, const Adjacency& adj);
  // Row-block sums: output row g sums rows [offsets[g], offsets[g+1]) of h in
  // sorted order per column.
  Var segment_sum(Var h, std::span<const std::size_t> offsets);
  Var concat_cols(std::span<const Var> parts);
  // Elementwise product with a fixed mask (already scaled for inverted dropout).
  Var mask(Var a, Matrix mask);
  // Mean of squared differences over all entries; 1 x 1.
  Var mse(Var pred, const Matrix& target);

  // Seeds d(out)/d(out) = 1 (out must be 1 x 1) and back-propagates.
  void backward(Var out);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Parameter* param = nullptr;
    std::function<void(Tape&, std::size_t)> backward;
  };

  Var push(Matrix value, std::function<void(Tape&, std::size_t)> backward = {});
  Matrix& g(std::size_t id) { return nodes_[id].grad; }
  const Matrix& val(std::size_t id) const { return nodes_[id].value; }

  std::vector<Node> nodes_;
};

}  // namespace rockgraph::ad
