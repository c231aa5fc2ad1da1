#include "fairdtd/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fairdtd/error.hpp"

namespace fairdtd::ad {

namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw TapeError("operation on an unbound Var");
  return *a.tape();
}

Tape& tape_of(Var a, Var b) {
  Tape& t = tape_of(a);
  t.check_owned(b);
  return t;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": " + a.shape_string() + " vs " + b.shape_string());
  }
}

template <class F>
Matrix map(const Matrix& a, F f) {
  Matrix out(a.rows(), a.cols());
  auto src = a.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <class F>
Matrix zip(const Matrix& a, const Matrix& b, F f) {
  Matrix out(a.rows(), a.cols());
  auto x = a.values();
  auto y = b.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = f(x[i], y[i]);
  return out;
}

Matrix softmax_values(const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const auto zr = z.row(i);
    auto orow = out.row(i);
    const double m = *std::max_element(zr.begin(), zr.end());
    double s = 0.0;
    for (std::size_t c = 0; c < zr.size(); ++c) {
      orow[c] = std::exp(zr[c] - m);
      s += orow[c];
    }
    for (double& v : orow) v /= s;
  }
  return out;
}

void check_distribution_rows(const Matrix& p, const char* which) {
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double s = 0.0;
    for (double v : p.row(i)) {
      if (v < 0.0) throw DomainError(std::string("kl_div_rows: negative probability in ") + which);
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-8) {
      throw DomainError(std::string("kl_div_rows: row of ") + which + " sums to " +
                        std::to_string(s));
    }
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(fairdtd::matmul(a.value(), b.value()), {a, b},
                  [ia, ib](Tape& tp, const Matrix& g) {
                    if (tp.requires_grad(ia)) tp.accumulate(ia, matmul_transpose_b(g, tp.value(ib)));
                    if (tp.requires_grad(ib)) tp.accumulate(ib, matmul_transpose_a(tp.value(ia), g));
                  },
                  "matmul");
}

Var spmm(const SparseAdjacency& adj, Var x) {
  Tape& t = tape_of(x);
  const std::size_t ix = x.id();
  const SparseAdjacency* p = &adj;
  return t.record(adj.multiply(x.value()), {x},
                  [ix, p](Tape& tp, const Matrix& g) { tp.accumulate(ix, p->multiply_transposed(g)); },
                  "spmm");
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "add");
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(zip(a.value(), b.value(), [](double x, double y) { return x + y; }), {a, b},
                  [ia, ib](Tape& tp, const Matrix& g) {
                    tp.accumulate(ia, g);
                    tp.accumulate(ib, g);
                  },
                  "add");
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(zip(a.value(), b.value(), [](double x, double y) { return x - y; }), {a, b},
                  [ia, ib](Tape& tp, const Matrix& g) {
                    tp.accumulate(ia, g);
                    if (tp.requires_grad(ib)) tp.accumulate(ib, map(g, [](double v) { return -v; }));
                  },
                  "sub");
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(zip(a.value(), b.value(), [](double x, double y) { return x * y; }), {a, b},
                  [ia, ib](Tape& tp, const Matrix& g) {
                    auto times = [](double x, double y) { return x * y; };
                    if (tp.requires_grad(ia)) tp.accumulate(ia, zip(g, tp.value(ib), times));
                    if (tp.requires_grad(ib)) tp.accumulate(ib, zip(g, tp.value(ia), times));
                  },
                  "mul");
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  return t.record(map(a.value(), [s](double v) { return v * s; }), {a},
                  [ia, s](Tape& tp, const Matrix& g) {
                    tp.accumulate(ia, map(g, [s](double v) { return v * s; }));
                  },
                  "scale");
}

Var add_scalar(Var a, double s) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  return t.record(map(a.value(), [s](double v) { return v + s; }), {a},
                  [ia](Tape& tp, const Matrix& g) { tp.accumulate(ia, g); }, "add_scalar");
}

Var add_row(Var a, Var bias) {
  Tape& t = tape_of(a, bias);
  const Matrix& av = a.value();
  const Matrix& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != av.cols()) {
    throw DimensionError("add_row: " + av.shape_string() + " + bias " + bv.shape_string());
  }
  Matrix out = av;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t c = 0; c < r.size(); ++c) r[c] += bv(0, c);
  }
  const std::size_t ia = a.id(), ib = bias.id();
  return t.record(std::move(out), {a, bias},
                  [ia, ib](Tape& tp, const Matrix& g) {
                    tp.accumulate(ia, g);
                    if (tp.requires_grad(ib)) {
                      Matrix gb(1, g.cols());
                      for (std::size_t i = 0; i < g.rows(); ++i)
                        for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(i, c);
                      tp.accumulate(ib, gb);
                    }
                  },
                  "add_row");
}

Var square(Var a) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  return t.record(map(a.value(), [](double v) { return v * v; }), {a},
                  [ia](Tape& tp, const Matrix& g) {
                    tp.accumulate(ia, zip(g, tp.value(ia), [](double gv, double x) { return 2.0 * x * gv; }));
                  },
                  "square");
}

Var relu(Var a) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  return t.record(map(a.value(), [](double v) { return v > 0.0 ? v : 0.0; }), {a},
                  [ia](Tape& tp, const Matrix& g) {
                    tp.accumulate(ia, zip(g, tp.value(ia), [](double gv, double x) { return x > 0.0 ? gv : 0.0; }));
                  },
                  "relu");
}

Var sigmoid(Var a) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  Matrix out = map(a.value(), [](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  Matrix cached = out;
  return t.record(std::move(out), {a},
                  [ia, y = std::move(cached)](Tape& tp, const Matrix& g) {
                    tp.accumulate(ia, zip(g, y, [](double gv, double s) { return gv * s * (1.0 - s); }));
                  },
                  "sigmoid");
}

Var detach(Var a) { return tape_of(a).constant(a.value()); }

Var div_rows(Var a, Var temps) {
  Tape& t = tape_of(a, temps);
  const Matrix& av = a.value();
  const Matrix& tv = temps.value();
  if (tv.rows() != av.rows() || tv.cols() != 1) {
    throw DimensionError("div_rows: " + av.shape_string() + " / " + tv.shape_string());
  }
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t c = 0; c < av.cols(); ++c) out(i, c) = av(i, c) / tv(i, 0);
  const std::size_t ia = a.id(), it = temps.id();
  return t.record(std::move(out), {a, temps},
                  [ia, it](Tape& tp, const Matrix& g) {
                    const Matrix& x = tp.value(ia);
                    const Matrix& d = tp.value(it);
                    if (tp.requires_grad(ia)) {
                      Matrix ga(g.rows(), g.cols());
                      for (std::size_t i = 0; i < g.rows(); ++i)
                        for (std::size_t c = 0; c < g.cols(); ++c) ga(i, c) = g(i, c) / d(i, 0);
                      tp.accumulate(ia, ga);
                    }
                    if (tp.requires_grad(it)) {
                      Matrix gt(d.rows(), 1);
                      for (std::size_t i = 0; i < g.rows(); ++i) {
                        double s = 0.0;
                        for (std::size_t c = 0; c < g.cols(); ++c) s += g(i, c) * x(i, c);
                        gt(i, 0) = -s / (d(i, 0) * d(i, 0));
                      }
                      tp.accumulate(it, gt);
                    }
                  },
                  "div_rows");
}

Var softmax_rows(Var z) {
  Tape& t = tape_of(z);
  const std::size_t iz = z.id();
  Matrix out = softmax_values(z.value());
  Matrix cached = out;
  return t.record(std::move(out), {z},
                  [iz, s = std::move(cached)](Tape& tp, const Matrix& g) {
                    Matrix gz(g.rows(), g.cols());
                    for (std::size_t i = 0; i < g.rows(); ++i) {
                      double dot = 0.0;
                      for (std::size_t c = 0; c < g.cols(); ++c) dot += g(i, c) * s(i, c);
                      for (std::size_t c = 0; c < g.cols(); ++c) gz(i, c) = s(i, c) * (g(i, c) - dot);
                    }
                    tp.accumulate(iz, gz);
                  },
                  "softmax_rows");
}

Var softmax_rows(Var z, Var temps) {
  for (double v : temps.value().values()) {
    if (!(v > 0.0)) throw DomainError("softmax_rows: temperature must be > 0, got " + std::to_string(v));
  }
  return softmax_rows(div_rows(z, temps));
}

Var softmax_rows(Var z, double temp) {
  if (!(temp > 0.0)) throw DomainError("softmax_rows: temperature must be > 0, got " + std::to_string(temp));
  return softmax_rows(scale(z, 1.0 / temp));
}

Var kl_div_rows(Var p, Var q) {
  Tape& t = tape_of(p, q);
  const Matrix& pv = p.value();
  const Matrix& qv = q.value();
  require_same_shape(pv, qv, "kl_div_rows");
  if (pv.rows() == 0) throw EmptySelectionError("kl_div_rows on zero rows");
  check_distribution_rows(pv, "p");
  check_distribution_rows(qv, "q");
  const double inv_n = 1.0 / static_cast<double>(pv.rows());
  double total = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double pi = pv.values()[i];
    if (pi > 0.0) total += pi * (std::log(pi) - std::log(std::max(qv.values()[i], kProbFloor)));
  }
  const std::size_t ip = p.id(), iq = q.id();
  return t.record(Matrix(1, 1, total * inv_n), {p, q},
                  [ip, iq, inv_n](Tape& tp, const Matrix& g) {
                    const double go = g(0, 0) * inv_n;
                    const Matrix& pm = tp.value(ip);
                    const Matrix& qm = tp.value(iq);
                    if (tp.requires_grad(ip)) {
                      tp.accumulate(ip, zip(pm, qm, [go](double a, double b) {
                        return go * (std::log(std::max(a, kProbFloor)) + 1.0 -
                                     std::log(std::max(b, kProbFloor)));
                      }));
                    }
                    if (tp.requires_grad(iq)) {
                      tp.accumulate(iq, zip(pm, qm, [go](double a, double b) {
                        return b > kProbFloor ? -go * a / b : 0.0;
                      }));
                    }
                  },
                  "kl_div_rows");
}

Var cross_entropy_masked(Var logits, std::span<const int> labels,
                         std::span<const std::uint8_t> mask) {
  Tape& t = tape_of(logits);
  const Matrix& z = logits.value();
  if (labels.size() != z.rows() || mask.size() != z.rows()) {
    throw DimensionError("cross_entropy_masked: logits " + z.shape_string() + ", labels " +
                         std::to_string(labels.size()) + ", mask " + std::to_string(mask.size()));
  }
  std::size_t count = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= z.cols()) {
      throw DomainError("cross_entropy_masked: label " + std::to_string(labels[i]) +
                        " out of range at node " + std::to_string(i));
    }
    ++count;
  }
  if (count == 0) throw EmptySelectionError("cross_entropy_masked: mask selects no nodes");

  const double inv_m = 1.0 / static_cast<double>(count);
  Matrix probs = softmax_values(z);
  double total = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    if (!mask[i]) continue;
    const auto zr = z.row(i);
    const double m = *std::max_element(zr.begin(), zr.end());
    double s = 0.0;
    for (double v : zr) s += std::exp(v - m);
    total += (m + std::log(s)) - zr[static_cast<std::size_t>(labels[i])];
  }
  std::vector<int> lab(labels.begin(), labels.end());
  std::vector<std::uint8_t> msk(mask.begin(), mask.end());
  const std::size_t iz = logits.id();
  return t.record(Matrix(1, 1, total * inv_m), {logits},
                  [iz, inv_m, probs = std::move(probs), lab = std::move(lab),
                   msk = std::move(msk)](Tape& tp, const Matrix& g) {
                    Matrix gz(probs.rows(), probs.cols());
                    const double go = g(0, 0) * inv_m;
                    for (std::size_t i = 0; i < probs.rows(); ++i) {
                      if (!msk[i]) continue;
                      for (std::size_t c = 0; c < probs.cols(); ++c) gz(i, c) = go * probs(i, c);
                      gz(i, static_cast<std::size_t>(lab[i])) -= go;
                    }
                    tp.accumulate(iz, gz);
                  },
                  "cross_entropy_masked");
}

Var l2_normalize_rows(Var r) {
  Tape& t = tape_of(r);
  const Matrix& rv = r.value();
  Matrix out(rv.rows(), rv.cols());
  std::vector<double> norms(rv.rows());
  for (std::size_t i = 0; i < rv.rows(); ++i) {
    double s = 0.0;
    for (double v : rv.row(i)) s += v * v;
    norms[i] = std::max(std::sqrt(s), kNormFloor);
    auto o = out.row(i);
    const auto x = rv.row(i);
    for (std::size_t c = 0; c < o.size(); ++c) o[c] = x[c] / norms[i];
  }
  Matrix cached = out;
  const std::size_t ir = r.id();
  return t.record(std::move(out), {r},
                  [ir, y = std::move(cached), norms = std::move(norms)](Tape& tp, const Matrix& g) {
                    Matrix gr(g.rows(), g.cols());
                    for (std::size_t i = 0; i < g.rows(); ++i) {
                      const bool clamped = norms[i] <= kNormFloor;
                      double dot = 0.0;
                      if (!clamped)
                        for (std::size_t c = 0; c < g.cols(); ++c) dot += y(i, c) * g(i, c);
                      for (std::size_t c = 0; c < g.cols(); ++c)
                        gr(i, c) = (g(i, c) - y(i, c) * dot) / norms[i];
                    }
                    tp.accumulate(ir, gr);
                  },
                  "l2_normalize_rows");
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const std::size_t ia = a.id();
  const std::size_t rows = a.rows(), cols = a.cols();
  return t.record(Matrix(1, 1, s), {a},
                  [ia, rows, cols](Tape& tp, const Matrix& g) {
                    tp.accumulate(ia, Matrix(rows, cols, g(0, 0)));
                  },
                  "sum");
}

Var mean(Var a) {
  if (a.value().size() == 0) throw EmptySelectionError("mean of an empty matrix");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

}  // namespace fairdtd::ad
