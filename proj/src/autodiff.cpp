#include "climrl/nn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "climrl/error.hpp"
#include "climrl/nn/kernels.hpp"

namespace climrl::nn {

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }

Var Tape::push(Node node) {
  if (consumed_) throw Error("tape already consumed by backward(); record a new forward pass");
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::frozen(const Tensor& value) {
  Node n;
  n.external = &value;
  return push(std::move(n));
}

Var Tape::input(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::parameter(Parameter& p) {
  Node n;
  n.external = &p.value;
  n.param = &p;
  n.requires_grad = true;
  return push(std::move(n));
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.value;
}

const Tensor& Tape::grad(std::size_t id) const {
  const Node& n = nodes_[id];
  if (n.grad.size() == 0 && value(id).size() != 0) {
    throw Error("no gradient recorded for node " + std::to_string(id));
  }
  return n.grad;
}

Tensor* Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return nullptr;
  if (n.grad.size() == 0) n.grad = Tensor(value(id).shape(), 0.0);
  return &n.grad;
}

Var Tape::record(Tensor value, std::vector<std::size_t> parents, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (std::size_t p : parents) n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
  n.parents = std::move(parents);
  if (n.requires_grad) n.backward = std::move(fn);
  return push(std::move(n));
}

void Tape::backward(Var output) {
  if (output.value().size() != 1) {
    throw ShapeError("backward() without an output gradient needs a scalar output, got " +
                     shape_string(output.value().shape()));
  }
  backward(output, Tensor(output.value().shape(), 1.0));
}

void Tape::backward(Var output, const Tensor& output_grad) {
  if (consumed_) throw Error("computation graph consumed twice; run forward again");
  if (output.tape() != this) throw Error("backward() on a Var from another tape");
  if (!output_grad.same_shape(output.value())) {
    throw ShapeError("output gradient shape " + shape_string(output_grad.shape()) +
                     " does not match output " + shape_string(output.value().shape()));
  }
  consumed_ = true;
  Tensor* seed = grad_buffer(output.id());
  if (seed == nullptr) return;
  std::copy(output_grad.values().begin(), output_grad.values().end(), seed->data());
  for (std::size_t id = output.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param != nullptr) {
      auto dst = n.param->grad.values();
      auto src = n.grad.values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

struct Broadcast {
  std::size_t rows, cols;
  std::size_t ar, ac, br, bc;

  std::size_t a_index(std::size_t r, std::size_t c) const {
    return (ar == 1 ? 0 : r) * ac + (ac == 1 ? 0 : c);
  }
  std::size_t b_index(std::size_t r, std::size_t c) const {
    return (br == 1 ? 0 : r) * bc + (bc == 1 ? 0 : c);
  }
};

Broadcast broadcast_shapes(const Tensor& a, const Tensor& b, const char* op) {
  Broadcast s{0, 0, a.rows(), a.cols(), b.rows(), b.cols()};
  auto combine = [op, &a, &b](std::size_t x, std::size_t y) {
    if (x == y || y == 1) return x;
    if (x == 1) return y;
    throw ShapeError(std::string(op) + ": cannot broadcast " + shape_string(a.shape()) +
                     " with " + shape_string(b.shape()));
  };
  s.rows = combine(s.ar, s.br);
  s.cols = combine(s.ac, s.bc);
  return s;
}

Tape& tape_of(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) throw Error("operands on different tapes");
  return *a.tape();
}

// f(x, y) and its partials (df/dx, df/dy).
template <typename F, typename Dfa, typename Dfb>
Var binary(Var a, Var b, const char* name, F f, Dfa dfa, Dfb dfb) {
  Tape& tape = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const Broadcast s = broadcast_shapes(av, bv, name);
  Tensor out = Tensor::matrix(s.rows, s.cols);
  for (std::size_t r = 0; r < s.rows; ++r) {
    for (std::size_t c = 0; c < s.cols; ++c) {
      out(r, c) = f(av[s.a_index(r, c)], bv[s.b_index(r, c)]);
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [s, ia, ib, dfa, dfb](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    Tensor* ga = t.grad_buffer(ia);
    Tensor* gb = t.grad_buffer(ib);
    for (std::size_t r = 0; r < s.rows; ++r) {
      for (std::size_t c = 0; c < s.cols; ++c) {
        const std::size_t i = s.a_index(r, c), j = s.b_index(r, c);
        const double gi = g(r, c);
        if (ga) (*ga)[i] += gi * dfa(av[i], bv[j]);
        if (gb) (*gb)[j] += gi * dfb(av[i], bv[j]);
      }
    }
  });
}

// f(x) with derivative expressed through input x and output y.
template <typename F, typename Df>
Var unary(Var x, F f, Df df) {
  Tape& tape = *x.tape();
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  const std::size_t ix = x.id();
  return tape.record(std::move(out), {ix}, [ix, df](Tape& t, std::size_t self) {
    Tensor* gx = t.grad_buffer(ix);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    const Tensor& xv = t.value(ix);
    const Tensor& yv = t.value(self);
    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * df(xv[i], yv[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  if (bv.rows() != k) {
    throw ShapeError("matmul: " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  }
  Tensor out = Tensor::matrix(m, n);
  kernels::gemm_nn(av.data(), bv.data(), out.data(), m, k, n, false);
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [ia, ib, m, k, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (Tensor* ga = t.grad_buffer(ia)) {
      kernels::gemm_nt(g.data(), t.value(ib).data(), ga->data(), m, n, k, true);
    }
    if (Tensor* gb = t.grad_buffer(ib)) {
      kernels::gemm_tn(t.value(ia).data(), g.data(), gb->data(), k, m, n, true);
    }
  });
}

Var add(Var a, Var b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Var minimum(Var a, Var b) {
  return binary(
      a, b, "minimum", [](double x, double y) { return std::min(x, y); },
      [](double x, double y) { return x <= y ? 1.0 : 0.0; },
      [](double x, double y) { return x <= y ? 0.0 : 1.0; });
}

Var maximum(Var a, Var b) {
  return binary(
      a, b, "maximum", [](double x, double y) { return std::max(x, y); },
      [](double x, double y) { return x >= y ? 1.0 : 0.0; },
      [](double x, double y) { return x >= y ? 0.0 : 1.0; });
}

Var scale(Var x, double factor) {
  return unary(
      x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Var shift(Var x, double offset) {
  return unary(
      x, [offset](double v) { return v + offset; }, [](double, double) { return 1.0; });
}

Var neg(Var x) { return scale(x, -1.0); }

Var tanh(Var x) {
  return unary(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var exp(Var x) {
  return unary(
      x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(Var x) {
  return unary(
      x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var square(Var x) {
  return unary(
      x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var softplus(Var x) {
  return unary(
      x,
      [](double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
      [](double v, double) { return 1.0 / (1.0 + std::exp(-v)); });
}

Var clamp(Var x, double lo, double hi) {
  return unary(
      x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

Var sum(Var x) {
  Tape& tape = *x.tape();
  const Tensor& xv = x.value();
  double total = 0.0;
  for (double v : xv.values()) total += v;
  const std::size_t ix = x.id();
  return tape.record(Tensor::scalar(total), {ix}, [ix](Tape& t, std::size_t self) {
    Tensor* gx = t.grad_buffer(ix);
    if (!gx) return;
    const double g = t.grad(self)[0];
    for (double& v : gx->values()) v += g;
  });
}

Var mean(Var x) {
  const double n = static_cast<double>(x.value().size());
  return scale(sum(x), 1.0 / n);
}

Var sum_cols(Var x) {
  Tape& tape = *x.tape();
  const Tensor& xv = x.value();
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out = Tensor::matrix(m, 1);
  for (std::size_t r = 0; r < m; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += xv(r, c);
    out(r, 0) = s;
  }
  const std::size_t ix = x.id();
  return tape.record(std::move(out), {ix}, [ix, m, n](Tape& t, std::size_t self) {
    Tensor* gx = t.grad_buffer(ix);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < n; ++c) (*gx)(r, c) += g(r, 0);
    }
  });
}

Var mean_cols(Var x) {
  return scale(sum_cols(x), 1.0 / static_cast<double>(x.value().cols()));
}

Var concat_cols(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rows() != bv.rows()) {
    throw ShapeError("concat_cols: row mismatch " + shape_string(av.shape()) + " vs " +
                     shape_string(bv.shape()));
  }
  const std::size_t m = av.rows(), na = av.cols(), nb = bv.cols();
  Tensor out = Tensor::matrix(m, na + nb);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < na; ++c) out(r, c) = av(r, c);
    for (std::size_t c = 0; c < nb; ++c) out(r, na + c) = bv(r, c);
  }
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [ia, ib, m, na, nb](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor* ga = t.grad_buffer(ia);
    Tensor* gb = t.grad_buffer(ib);
    for (std::size_t r = 0; r < m; ++r) {
      if (ga)
        for (std::size_t c = 0; c < na; ++c) (*ga)(r, c) += g(r, c);
      if (gb)
        for (std::size_t c = 0; c < nb; ++c) (*gb)(r, c) += g(r, na + c);
    }
  });
}

Var slice_cols(Var x, std::size_t begin, std::size_t end) {
  Tape& tape = *x.tape();
  const Tensor& xv = x.value();
  if (begin >= end || end > xv.cols()) throw ShapeError("slice_cols: bad column range");
  const std::size_t m = xv.rows(), w = end - begin;
  Tensor out = Tensor::matrix(m, w);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < w; ++c) out(r, c) = xv(r, begin + c);
  }
  const std::size_t ix = x.id();
  return tape.record(std::move(out), {ix}, [ix, m, w, begin](Tape& t, std::size_t self) {
    Tensor* gx = t.grad_buffer(ix);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < w; ++c) (*gx)(r, begin + c) += g(r, c);
    }
  });
}

std::vector<double> quantile_fractions(std::size_t n) {
  std::vector<double> taus(n);
  for (std::size_t k = 0; k < n; ++k) {
    taus[k] = (2.0 * static_cast<double>(k + 1) - 1.0) / (2.0 * static_cast<double>(n));
  }
  return taus;
}

Var quantile_huber_loss(Var pred, const Tensor& target, std::span<const double> taus,
                        double kappa) {
  Tape& tape = *pred.tape();
  const Tensor& pv = pred.value();
  const std::size_t batch = pv.rows(), nq = pv.cols(), atoms = target.cols();
  if (target.rows() != batch || taus.size() != nq) {
    throw ShapeError("quantile_huber_loss: pred " + shape_string(pv.shape()) + ", target " +
                     shape_string(target.shape()) + ", " + std::to_string(taus.size()) +
                     " fractions");
  }
  const double norm = 1.0 / static_cast<double>(batch * nq * atoms);
  double total = 0.0;
  Tensor dpred(pv.shape(), 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t k = 0; k < nq; ++k) {
      const double theta = pv(b, k);
      double acc = 0.0, dacc = 0.0;
      for (std::size_t j = 0; j < atoms; ++j) {
        const double u = target(b, j) - theta;
        const double au = std::abs(u);
        const double weight = std::abs(taus[k] - (u < 0.0 ? 1.0 : 0.0));
        const double huber = au <= kappa ? 0.5 * u * u : kappa * (au - 0.5 * kappa);
        const double dhuber_du = au <= kappa ? u : kappa * (u > 0.0 ? 1.0 : -1.0);
        acc += weight * huber;
        dacc -= weight * dhuber_du;  // du/dtheta = -1
      }
      total += acc;
      dpred(b, k) = dacc * norm;
    }
  }
  const std::size_t ip = pred.id();
  return tape.record(Tensor::scalar(total * norm), {ip},
                     [ip, dpred = std::move(dpred)](Tape& t, std::size_t self) {
                       Tensor* gp = t.grad_buffer(ip);
                       if (!gp) return;
                       const double g = t.grad(self)[0];
                       for (std::size_t i = 0; i < gp->size(); ++i) (*gp)[i] += g * dpred[i];
                     });
}

}  // namespace climrl::nn
