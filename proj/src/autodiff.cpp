#include "rockgraph/autodiff.hpp"

#include <algorithm>

#include "rockgraph/errors.hpp"

namespace rockgraph::ad {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InvalidArgument("matmul shape mismatch");
  Matrix c(a.rows(), b.cols());
  const std::size_t k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ar = a.row(i);
    double* cr = c.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ar[p];
      const double* br = b.row(p);
      for (std::size_t j = 0; j < m; ++j) cr[j] += av * br[j];
    }
  }
  return c;
}

namespace {

// dA += dC * B^T
void add_matmul_bt(Matrix& da, const Matrix& dc, const Matrix& b) {
  for (std::size_t i = 0; i < dc.rows(); ++i) {
    const double* dr = dc.row(i);
    double* ar = da.row(i);
    for (std::size_t p = 0; p < b.rows(); ++p) {
      const double* br = b.row(p);
      double s = 0.0;
      for (std::size_t j = 0; j < b.cols(); ++j) s += dr[j] * br[j];
      ar[p] += s;
    }
  }
}

// dB += A^T * dC
void add_matmul_at(Matrix& db, const Matrix& a, const Matrix& dc) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ar = a.row(i);
    const double* dr = dc.row(i);
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double av = ar[p];
      if (av == 0.0) continue;
      double* br = db.row(p);
      for (std::size_t j = 0; j < dc.cols(); ++j) br[j] += av * dr[j];
    }
  }
}

double sorted_sum(std::vector<double>& buf) {
  std::sort(buf.begin(), buf.end());
  double s = 0.0;
  for (double v : buf) s += v;
  return s;
}

}  // namespace

Var Tape::push(Matrix value, std::function<void(Tape&, std::size_t)> backward) {
  Node n;
  n.grad = Matrix(value.rows(), value.cols());
  n.value = std::move(value);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1};
}

Var Tape::constant(Matrix value) { return push(std::move(value)); }

Var Tape::parameter(Parameter& p) {
  auto v = push(p.value);
  nodes_[v.id].param = &p;
  return v;
}

Var Tape::matmul(Var a, Var w) {
  return push(ad::matmul(val(a.id), val(w.id)), [a, w](Tape& t, std::size_t self) {
    add_matmul_bt(t.g(a.id), t.g(self), t.val(w.id));
    add_matmul_at(t.g(w.id), t.val(a.id), t.g(self));
  });
}

Var Tape::add_bias(Var a, Var bias) {
  const auto& x = val(a.id);
  const auto& b = val(bias.id);
  if (b.rows() != 1 || b.cols() != x.cols()) throw InvalidArgument("bias shape mismatch");
  Matrix out = x;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += b(0, j);
  }
  return push(std::move(out), [a, bias](Tape& t, std::size_t self) {
    const auto& go = t.g(self);
    auto& ga = t.g(a.id);
    auto& gb = t.g(bias.id);
    for (std::size_t i = 0; i < go.rows(); ++i) {
      for (std::size_t j = 0; j < go.cols(); ++j) {
        ga(i, j) += go(i, j);
        gb(0, j) += go(i, j);
      }
    }
  });
}

Var Tape::relu(Var a) {
  Matrix out = val(a.id);
  for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
  return push(std::move(out), [a](Tape& t, std::size_t self) {
    const auto x = t.val(a.id).values();
    const auto go = t.g(self).values();
    auto ga = t.g(a.id).values();
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] > 0.0) ga[i] += go[i];
    }
  });
}

Var Tape::gin_aggregate(Var h, Var eps, const Adjacency& adj) {
  const auto& x = val(h.id);
  if (adj.size() != x.rows()) throw InvalidArgument("adjacency size does not match node count");
  const double scale = 1.0 + val(eps.id)(0, 0);
  Matrix out(x.rows(), x.cols());
  std::vector<double> buf;
  for (std::size_t v = 0; v < x.rows(); ++v) {
    const auto nbrs = adj.of(v);
    for (std::size_t c = 0; c < x.cols(); ++c) {
      buf.clear();
      for (auto u : nbrs) buf.push_back(x(u, c));
      out(v, c) = scale * x(v, c) + sorted_sum(buf);
    }
  }
  return push(std::move(out), [h, eps, &adj](Tape& t, std::size_t self) {
    const auto& go = t.g(self);
    const auto& x = t.val(h.id);
    auto& gh = t.g(h.id);
    const double scale = 1.0 + t.val(eps.id)(0, 0);
    double geps = 0.0;
    for (std::size_t v = 0; v < go.rows(); ++v) {
      const double* gr = go.row(v);
      const double* xr = x.row(v);
      double* hr = gh.row(v);
      for (std::size_t c = 0; c < go.cols(); ++c) {
        hr[c] += scale * gr[c];
        geps += gr[c] * xr[c];
      }
      for (auto u : adj.of(v)) {
        double* ur = gh.row(u);
        for (std::size_t c = 0; c < go.cols(); ++c) ur[c] += gr[c];
      }
    }
    t.g(eps.id)(0, 0) += geps;
  });
}

Var Tape::segment_sum(Var h, std::span<const std::size_t> offsets) {
  const auto& x = val(h.id);
  if (offsets.empty() || offsets.back() != x.rows()) throw InvalidArgument("segment offsets do not cover rows");
  const std::size_t groups = offsets.size() - 1;
  Matrix out(groups, x.cols());
  std::vector<double> buf;
  for (std::size_t gi = 0; gi < groups; ++gi) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      buf.clear();
      for (std::size_t r = offsets[gi]; r < offsets[gi + 1]; ++r) buf.push_back(x(r, c));
      out(gi, c) = sorted_sum(buf);
    }
  }
  std::vector<std::size_t> offs(offsets.begin(), offsets.end());
  return push(std::move(out), [h, offs = std::move(offs)](Tape& t, std::size_t self) {
    const auto& go = t.g(self);
    auto& gh = t.g(h.id);
    for (std::size_t gi = 0; gi + 1 < offs.size(); ++gi) {
      for (std::size_t r = offs[gi]; r < offs[gi + 1]; ++r) {
        for (std::size_t c = 0; c < go.cols(); ++c) gh(r, c) += go(gi, c);
      }
    }
  });
}

Var Tape::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw InvalidArgument("nothing to concatenate");
  const std::size_t rows = val(parts[0].id).rows();
  std::size_t cols = 0;
  for (auto p : parts) {
    if (val(p.id).rows() != rows) throw InvalidArgument("concat row mismatch");
    cols += val(p.id).cols();
  }
  Matrix out(rows, cols);
  std::size_t at = 0;
  for (auto p : parts) {
    const auto& x = val(p.id);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) out(i, at + j) = x(i, j);
    }
    at += x.cols();
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return push(std::move(out), [ins = std::move(ins)](Tape& t, std::size_t self) {
    const auto& go = t.g(self);
    std::size_t at = 0;
    for (auto p : ins) {
      auto& gp = t.g(p.id);
      for (std::size_t i = 0; i < gp.rows(); ++i) {
        for (std::size_t j = 0; j < gp.cols(); ++j) gp(i, j) += go(i, at + j);
      }
      at += gp.cols();
    }
  });
}

Var Tape::mask(Var a, Matrix m) {
  const auto& x = val(a.id);
  if (m.rows() != x.rows() || m.cols() != x.cols()) throw InvalidArgument("mask shape mismatch");
  Matrix out = x;
  auto ov = out.values();
  const auto mv = m.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] *= mv[i];
  return push(std::move(out), [a, m = std::move(m)](Tape& t, std::size_t self) {
    const auto go = t.g(self).values();
    auto ga = t.g(a.id).values();
    const auto mv = m.values();
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * mv[i];
  });
}

Var Tape::mse(Var pred, const Matrix& target) {
  const auto& p = val(pred.id);
  if (p.rows() != target.rows() || p.cols() != target.cols()) throw InvalidArgument("mse shape mismatch");
  const auto pv = p.values();
  const auto tv = target.values();
  double ss = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) ss += (pv[i] - tv[i]) * (pv[i] - tv[i]);
  const double n = static_cast<double>(pv.size());
  Matrix out(1, 1, ss / n);
  return push(std::move(out), [pred, target, n](Tape& t, std::size_t self) {
    const double go = t.g(self)(0, 0);
    const auto pv = t.val(pred.id).values();
    const auto tv = target.values();
    auto gp = t.g(pred.id).values();
    for (std::size_t i = 0; i < pv.size(); ++i) gp[i] += go * 2.0 * (pv[i] - tv[i]) / n;
  });
}

void Tape::backward(Var out) {
  auto& seed = nodes_[out.id].grad;
  if (seed.rows() != 1 || seed.cols() != 1) throw InvalidArgument("backward needs a scalar output");
  seed(0, 0) = 1.0;
  for (std::size_t i = out.id + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr) {
      auto pg = n.param->grad.values();
      const auto ng = n.grad.values();
      for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += ng[k];
    }
  }
}

}  // namespace rockgraph::ad
