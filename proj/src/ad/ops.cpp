#include "sgdqn/ad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "sgdqn/errors.hpp"

namespace sgdqn::ad {
namespace {

[[noreturn]] void shape_mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.str() + " and " + b.str());
}

Tape& same_tape(Var a, Var b, const char* op) {
  if (a.tape == nullptr || a.tape != b.tape) {
    throw InvalidArgument(std::string(op) + ": operands live on different tapes");
  }
  return *a.tape;
}

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

// c (m x n) += a (m x k) * b (k x n)
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  const auto mi = static_cast<Eigen::Index>(m), ki = static_cast<Eigen::Index>(k),
             ni = static_cast<Eigen::Index>(n);
  MutMap(c, mi, ni).noalias() += ConstMap(a, mi, ki) * ConstMap(b, ki, ni);
}

// c (m x k) += g (m x n) * b^T, b is (k x n)
void gemm_nt(const double* g, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  const auto mi = static_cast<Eigen::Index>(m), ki = static_cast<Eigen::Index>(k),
             ni = static_cast<Eigen::Index>(n);
  MutMap(c, mi, ki).noalias() += ConstMap(g, mi, ni) * ConstMap(b, ki, ni).transpose();
}

// c (k x n) += a^T * g, a is (m x k), g is (m x n)
void gemm_tn(const double* a, const double* g, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  const auto mi = static_cast<Eigen::Index>(m), ki = static_cast<Eigen::Index>(k),
             ni = static_cast<Eigen::Index>(n);
  MutMap(c, ki, ni).noalias() += ConstMap(a, mi, ki).transpose() * ConstMap(g, mi, ni);
}

template <typename F>
Var unary_elementwise(Var a, F forward_and_slope) {
  const Tensor& x = a.value();
  Tensor out(x.rows(), x.cols());
  std::vector<double> slope(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto [y, dy] = forward_and_slope(x.data()[i]);
    out.data()[i] = y;
    slope[i] = dy;
  }
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {a},
                        [ia, slope = std::move(slope)](Tape& t, std::size_t self) {
                          auto g = t.grad(self);
                          auto ga = t.grad_buffer(ia);
                          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * slope[i];
                        });
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b, "matmul");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.cols() != y.rows()) shape_mismatch("matmul", x.shape(), y.shape());
  const std::size_t m = x.rows(), k = x.cols(), n = y.cols();
  Tensor out(m, n);
  gemm_nn(x.data(), y.data(), out.data(), m, k, n);
  const std::size_t ia = a.id, ib = b.id;
  return tape.record(std::move(out), {a, b}, [ia, ib, m, k, n](Tape& t, std::size_t self) {
    const double* g = t.grad(self).data();
    if (t.needs_grad(ia)) gemm_nt(g, t.value(ib).data(), t.grad_buffer(ia).data(), m, k, n);
    if (t.needs_grad(ib)) gemm_tn(t.value(ia).data(), g, t.grad_buffer(ib).data(), m, k, n);
  });
}

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b, "add");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (!(x.shape() == y.shape())) shape_mismatch("add", x.shape(), y.shape());
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = x.data()[i] + y.data()[i];
  const std::size_t ia = a.id, ib = b.id;
  return tape.record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    for (std::size_t id : {ia, ib}) {
      if (!t.needs_grad(id)) continue;
      auto gi = t.grad_buffer(id);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape(a, b, "sub");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (!(x.shape() == y.shape())) shape_mismatch("sub", x.shape(), y.shape());
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = x.data()[i] - y.data()[i];
  const std::size_t ia = a.id, ib = b.id;
  return tape.record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    if (t.needs_grad(ia)) {
      auto ga = t.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.needs_grad(ib)) {
      auto gb = t.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var add_row(Var a, Var row) {
  Tape& tape = same_tape(a, row, "add_row");
  const Tensor& x = a.value();
  const Tensor& r = row.value();
  if (r.rows() != 1 || r.cols() != x.cols()) shape_mismatch("add_row", x.shape(), r.shape());
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out(i, j) = x(i, j) + r.data()[j];
  }
  const std::size_t ia = a.id, ir = row.id;
  return tape.record(std::move(out), {a, row}, [ia, ir, m, n](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    if (t.needs_grad(ia)) {
      auto ga = t.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.needs_grad(ir)) {
      auto gr = t.grad_buffer(ir);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) gr[j] += g[i * n + j];
      }
    }
  });
}

Var scale(Var a, double factor) {
  const Tensor& x = a.value();
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = factor * x.data()[i];
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {a}, [ia, factor](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    auto ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
}

Var concat(Var a, Var b) {
  Tape& tape = same_tape(a, b, "concat");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.rows() != y.rows()) shape_mismatch("concat", x.shape(), y.shape());
  const std::size_t m = x.rows(), na = x.cols(), nb = y.cols();
  Tensor out(m, na + nb);
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(x.data() + i * na, na, out.data() + i * (na + nb));
    std::copy_n(y.data() + i * nb, nb, out.data() + i * (na + nb) + na);
  }
  const std::size_t ia = a.id, ib = b.id;
  return tape.record(std::move(out), {a, b}, [ia, ib, m, na, nb](Tape& t, std::size_t self) {
    const double* g = t.grad(self).data();
    const std::size_t n = na + nb;
    if (t.needs_grad(ia)) {
      double* ga = t.grad_buffer(ia).data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < na; ++j) ga[i * na + j] += g[i * n + j];
      }
    }
    if (t.needs_grad(ib)) {
      double* gb = t.grad_buffer(ib).data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < nb; ++j) gb[i * nb + j] += g[i * n + na + j];
      }
    }
  });
}

Var sum(Var a) {
  const Tensor& x = a.value();
  double total = 0.0;
  for (double v : x.values()) total += v;
  const std::size_t ia = a.id;
  return a.tape->record(Tensor::scalar(total), {a}, [ia](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    for (double& v : t.grad_buffer(ia)) v += g;
  });
}

Var mean(Var a) {
  const Tensor& x = a.value();
  if (x.size() == 0) throw ShapeError("mean: empty tensor " + x.shape().str());
  const double inv = 1.0 / static_cast<double>(x.size());
  double total = 0.0;
  for (double v : x.values()) total += v;
  const std::size_t ia = a.id;
  return a.tape->record(Tensor::scalar(total * inv), {a}, [ia, inv](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0] * inv;
    for (double& v : t.grad_buffer(ia)) v += g;
  });
}

Var relu(Var a) {
  return unary_elementwise(a, [](double x) {
    return x > 0.0 ? std::pair{x, 1.0} : std::pair{0.0, 0.0};
  });
}

Var leaky_relu(Var a, double negative_slope) {
  return unary_elementwise(a, [negative_slope](double x) {
    return x > 0.0 ? std::pair{x, 1.0} : std::pair{negative_slope * x, negative_slope};
  });
}

Var square(Var a) {
  return unary_elementwise(a, [](double x) { return std::pair{x * x, 2.0 * x}; });
}

Var softmax(Var a, int axis) {
  if (axis != 0 && axis != 1) throw InvalidArgument("softmax: axis must be 0 or 1");
  const Tensor& x = a.value();
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out(m, n);
  // Iterate over slices: rows for axis 1, columns for axis 0.
  const std::size_t slices = axis == 1 ? m : n;
  const std::size_t len = axis == 1 ? n : m;
  const std::size_t stride = axis == 1 ? 1 : n;
  auto offset = [=](std::size_t s) { return axis == 1 ? s * n : s; };
  for (std::size_t s = 0; s < slices; ++s) {
    const double* xs = x.data() + offset(s);
    double* ys = out.data() + offset(s);
    double peak = -INFINITY;
    for (std::size_t i = 0; i < len; ++i) peak = std::max(peak, xs[i * stride]);
    double total = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      ys[i * stride] = std::exp(xs[i * stride] - peak);
      total += ys[i * stride];
    }
    for (std::size_t i = 0; i < len; ++i) ys[i * stride] /= total;
  }
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {a},
                        [ia, slices, len, stride, offset](Tape& t, std::size_t self) {
                          const double* y = t.value(self).data();
                          const double* g = t.grad(self).data();
                          double* ga = t.grad_buffer(ia).data();
                          for (std::size_t s = 0; s < slices; ++s) {
                            const std::size_t o = offset(s);
                            double dotp = 0.0;
                            for (std::size_t i = 0; i < len; ++i) {
                              dotp += g[o + i * stride] * y[o + i * stride];
                            }
                            for (std::size_t i = 0; i < len; ++i) {
                              const std::size_t idx = o + i * stride;
                              ga[idx] += y[idx] * (g[idx] - dotp);
                            }
                          }
                        });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  const Tensor& x = a.value();
  if (rows * cols != x.size()) {
    shape_mismatch("reshape", x.shape(), Shape{rows, cols});
  }
  Tensor out(rows, cols, std::vector<double>(x.values().begin(), x.values().end()));
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {a}, [ia](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    auto ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var select_rows(Var a, std::span<const std::size_t> rows) {
  const Tensor& x = a.value();
  const std::size_t n = x.cols();
  Tensor out(rows.size(), n);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= x.rows()) {
      throw ShapeError("select_rows: row " + std::to_string(rows[r]) + " out of range for " +
                       x.shape().str());
    }
    std::copy_n(x.data() + rows[r] * n, n, out.data() + r * n);
  }
  std::vector<std::size_t> index(rows.begin(), rows.end());
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {a},
                        [ia, n, index = std::move(index)](Tape& t, std::size_t self) {
                          const double* g = t.grad(self).data();
                          double* ga = t.grad_buffer(ia).data();
                          for (std::size_t r = 0; r < index.size(); ++r) {
                            for (std::size_t j = 0; j < n; ++j) ga[index[r] * n + j] += g[r * n + j];
                          }
                        });
}

Var pick(Var a, std::span<const std::size_t> cols) {
  const Tensor& x = a.value();
  if (cols.size() != x.rows()) {
    shape_mismatch("pick", x.shape(), Shape{cols.size(), 1});
  }
  Tensor out(x.rows(), 1);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] >= x.cols()) {
      throw ShapeError("pick: column " + std::to_string(cols[i]) + " out of range for " +
                       x.shape().str());
    }
    out.data()[i] = x(i, cols[i]);
  }
  std::vector<std::size_t> index(cols.begin(), cols.end());
  const std::size_t ia = a.id, n = x.cols();
  return a.tape->record(std::move(out), {a},
                        [ia, n, index = std::move(index)](Tape& t, std::size_t self) {
                          auto g = t.grad(self);
                          auto ga = t.grad_buffer(ia);
                          for (std::size_t i = 0; i < index.size(); ++i) ga[i * n + index[i]] += g[i];
                        });
}

Var pairwise_concat(Var q, Var k, std::size_t group) {
  Tape& tape = same_tape(q, k, "pairwise_concat");
  const Tensor& x = q.value();
  const Tensor& y = k.value();
  if (!(x.shape() == y.shape())) shape_mismatch("pairwise_concat", x.shape(), y.shape());
  if (group == 0 || x.rows() % group != 0) {
    throw ShapeError("pairwise_concat: " + x.shape().str() + " is not a whole number of graphs of " +
                     std::to_string(group) + " nodes");
  }
  const std::size_t d = x.cols(), graphs = x.rows() / group;
  Tensor out(graphs * group * group, 2 * d);
  for (std::size_t g = 0; g < graphs; ++g) {
    for (std::size_t i = 0; i < group; ++i) {
      for (std::size_t j = 0; j < group; ++j) {
        double* row = out.data() + ((g * group + i) * group + j) * 2 * d;
        std::copy_n(x.data() + (g * group + i) * d, d, row);
        std::copy_n(y.data() + (g * group + j) * d, d, row + d);
      }
    }
  }
  const std::size_t iq = q.id, ik = k.id;
  return tape.record(std::move(out), {q, k},
                     [iq, ik, d, graphs, group](Tape& t, std::size_t self) {
                       const double* gout = t.grad(self).data();
                       double* gq = t.needs_grad(iq) ? t.grad_buffer(iq).data() : nullptr;
                       double* gk = t.needs_grad(ik) ? t.grad_buffer(ik).data() : nullptr;
                       for (std::size_t g = 0; g < graphs; ++g) {
                         for (std::size_t i = 0; i < group; ++i) {
                           for (std::size_t j = 0; j < group; ++j) {
                             const double* row = gout + ((g * group + i) * group + j) * 2 * d;
                             if (gq != nullptr) {
                               double* dst = gq + (g * group + i) * d;
                               for (std::size_t c = 0; c < d; ++c) dst[c] += row[c];
                             }
                             if (gk != nullptr) {
                               double* dst = gk + (g * group + j) * d;
                               for (std::size_t c = 0; c < d; ++c) dst[c] += row[d + c];
                             }
                           }
                         }
                       }
                     });
}

Var group_matmul(Var weights, Var values, std::size_t group) {
  Tape& tape = same_tape(weights, values, "group_matmul");
  const Tensor& w = weights.value();
  const Tensor& v = values.value();
  if (w.cols() != group || w.rows() != v.rows() || group == 0 || v.rows() % group != 0) {
    shape_mismatch("group_matmul", w.shape(), v.shape());
  }
  const std::size_t d = v.cols(), graphs = v.rows() / group;
  Tensor out(v.rows(), d);
  for (std::size_t g = 0; g < graphs; ++g) {
    const std::size_t base = g * group;
    gemm_nn(w.data() + base * group, v.data() + base * d, out.data() + base * d, group, group, d);
  }
  const std::size_t iw = weights.id, iv = values.id;
  return tape.record(std::move(out), {weights, values},
                     [iw, iv, d, graphs, group](Tape& t, std::size_t self) {
                       const double* g = t.grad(self).data();
                       for (std::size_t gi = 0; gi < graphs; ++gi) {
                         const std::size_t base = gi * group;
                         if (t.needs_grad(iw)) {
                           gemm_nt(g + base * d, t.value(iv).data() + base * d,
                                   t.grad_buffer(iw).data() + base * group, group, group, d);
                         }
                         if (t.needs_grad(iv)) {
                           gemm_tn(t.value(iw).data() + base * group, g + base * d,
                                   t.grad_buffer(iv).data() + base * d, group, group, d);
                         }
                       }
                     });
}

Var interleave(Var head, Var tail, std::size_t tail_per_group) {
  Tape& tape = same_tape(head, tail, "interleave");
  const Tensor& h = head.value();
  const Tensor& tl = tail.value();
  const std::size_t graphs = h.rows(), d = h.cols(), m = tail_per_group;
  if (tl.cols() != d && tl.rows() != 0) shape_mismatch("interleave", h.shape(), tl.shape());
  if (tl.rows() != graphs * m) shape_mismatch("interleave", h.shape(), tl.shape());
  const std::size_t n = m + 1;
  Tensor out(graphs * n, d);
  for (std::size_t g = 0; g < graphs; ++g) {
    std::copy_n(h.data() + g * d, d, out.data() + g * n * d);
    if (m > 0) std::copy_n(tl.data() + g * m * d, m * d, out.data() + (g * n + 1) * d);
  }
  const std::size_t ih = head.id, it = tail.id;
  return tape.record(std::move(out), {head, tail},
                     [ih, it, graphs, d, m, n](Tape& t, std::size_t self) {
                       const double* g = t.grad(self).data();
                       if (t.needs_grad(ih)) {
                         double* gh = t.grad_buffer(ih).data();
                         for (std::size_t gi = 0; gi < graphs; ++gi) {
                           for (std::size_t c = 0; c < d; ++c) gh[gi * d + c] += g[gi * n * d + c];
                         }
                       }
                       if (t.needs_grad(it) && m > 0) {
                         double* gt = t.grad_buffer(it).data();
                         for (std::size_t gi = 0; gi < graphs; ++gi) {
                           for (std::size_t r = 0; r < m * d; ++r) {
                             gt[gi * m * d + r] += g[(gi * n + 1) * d + r];
                           }
                         }
                       }
                     });
}

}  // namespace sgdqn::ad
