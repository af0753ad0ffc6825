#include "climrl/nn/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "climrl/error.hpp"
#include "climrl/nn/kernels.hpp"

namespace climrl::nn {

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "relu"; }

std::string to_string(HeadKind h) {
  switch (h) {
    case HeadKind::linear:
      return "linear";
    case HeadKind::tanh_scaled:
      return "tanh_scaled";
    case HeadKind::gaussian:
      return "gaussian";
  }
  return "linear";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  throw ConfigError("unknown activation '" + s + "'");
}

HeadKind head_from_string(const std::string& s) {
  if (s == "linear") return HeadKind::linear;
  if (s == "tanh_scaled") return HeadKind::tanh_scaled;
  if (s == "gaussian") return HeadKind::gaussian;
  throw ConfigError("unknown output head '" + s + "'");
}

Mlp::Mlp(MlpSpec spec, RngStream& rng) : spec_(std::move(spec)) {
  if (spec_.layer_sizes.size() < 2) throw ShapeError("an Mlp needs at least input and output sizes");
  for (std::size_t s : spec_.layer_sizes) {
    if (s == 0) throw ShapeError("Mlp layer sizes must be positive");
  }
  const std::size_t layers = spec_.layer_sizes.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t fan_in = spec_.layer_sizes[l], fan_out = spec_.layer_sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    const double gain = (l + 1 == layers) ? spec_.final_layer_scale : 1.0;
    Tensor w = Tensor::matrix(fan_in, fan_out);
    for (double& v : w.values()) v = gain * rng.uniform(-bound, bound);
    Tensor b = Tensor::matrix(1, fan_out);
    for (double& v : b.values()) v = gain * rng.uniform(-bound, bound);
    weights_.emplace_back(std::move(w));
    biases_.emplace_back(std::move(b));
  }
  const std::size_t out = output_size();
  if (spec_.head == HeadKind::tanh_scaled) {
    if (spec_.low.size() != out || spec_.high.size() != out) {
      throw ShapeError("tanh_scaled head needs one bound pair per output");
    }
    head_center_ = Tensor::matrix(1, out);
    head_half_ = Tensor::matrix(1, out);
    for (std::size_t i = 0; i < out; ++i) {
      if (!(spec_.low[i] < spec_.high[i])) throw ShapeError("tanh_scaled head: low must be < high");
      head_center_[i] = 0.5 * (spec_.low[i] + spec_.high[i]);
      head_half_[i] = 0.5 * (spec_.high[i] - spec_.low[i]);
    }
  }
  if (spec_.head == HeadKind::gaussian) {
    log_std_ = Parameter(Tensor::matrix(1, out, spec_.log_std_init));
  }
}

Var Mlp::forward(Tape& tape, Var input, bool trainable) {
  if (input.cols() != input_size()) {
    throw ShapeError("Mlp input width " + std::to_string(input.cols()) + ", expected " +
                     std::to_string(input_size()));
  }
  Var h = input;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Var w = trainable ? tape.parameter(weights_[l]) : tape.frozen(weights_[l].value);
    Var b = trainable ? tape.parameter(biases_[l]) : tape.frozen(biases_[l].value);
    Var z = add(matmul(h, w), b);
    if (l + 1 < weights_.size()) {
      h = spec_.activation == Activation::tanh ? nn::tanh(z) : relu(z);
    } else {
      h = z;
    }
  }
  if (spec_.head == HeadKind::tanh_scaled) {
    h = add(mul(nn::tanh(h), tape.frozen(head_half_)), tape.frozen(head_center_));
  }
  return h;
}

Tensor Mlp::predict(const Tensor& input) const {
  if (input.cols() != input_size()) {
    throw ShapeError("Mlp input width " + std::to_string(input.cols()) + ", expected " +
                     std::to_string(input_size()));
  }
  const std::size_t rows = input.rows();
  Tensor h = input;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const Tensor& w = weights_[l].value;
    const Tensor& b = biases_[l].value;
    Tensor z = Tensor::matrix(rows, w.cols());
    kernels::gemm_nn(h.data(), w.data(), z.data(), rows, w.rows(), w.cols(), false);
    const bool hidden = l + 1 < weights_.size();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < w.cols(); ++c) {
        double v = z(r, c) + b[c];
        if (hidden) v = spec_.activation == Activation::tanh ? std::tanh(v) : (v > 0.0 ? v : 0.0);
        z(r, c) = v;
      }
    }
    h = std::move(z);
  }
  if (spec_.head == HeadKind::tanh_scaled) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < h.cols(); ++c) {
        h(r, c) = std::tanh(h(r, c)) * head_half_[c] + head_center_[c];
      }
    }
  }
  return h;
}

Var Mlp::log_std(Tape& tape, bool trainable) {
  if (spec_.head != HeadKind::gaussian) throw Error("log_std() on a non-gaussian head");
  Var raw = trainable ? tape.parameter(log_std_) : tape.frozen(log_std_.value);
  return clamp(raw, kLogStdMin, kLogStdMax);
}

std::vector<double> Mlp::log_std_values() const {
  if (spec_.head != HeadKind::gaussian) throw Error("log_std_values() on a non-gaussian head");
  std::vector<double> out(log_std_.value.values().begin(), log_std_.value.values().end());
  for (double& v : out) v = std::clamp(v, kLogStdMin, kLogStdMax);
  return out;
}

std::vector<Parameter*> Mlp::parameters() {
  std::vector<Parameter*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  if (spec_.head == HeadKind::gaussian) out.push_back(&log_std_);
  return out;
}

std::vector<const Parameter*> Mlp::parameters() const {
  std::vector<const Parameter*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  if (spec_.head == HeadKind::gaussian) out.push_back(&log_std_);
  return out;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += p->value.size();
  return n;
}

std::vector<double> Mlp::flat_parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const Parameter* p : parameters()) {
    flat.insert(flat.end(), p->value.values().begin(), p->value.values().end());
  }
  return flat;
}

std::vector<double> Mlp::flat_gradients() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const Parameter* p : parameters()) {
    flat.insert(flat.end(), p->grad.values().begin(), p->grad.values().end());
  }
  return flat;
}

void Mlp::set_flat_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw ShapeError("flat parameter vector has " + std::to_string(flat.size()) +
                     " values, network has " + std::to_string(parameter_count()));
  }
  std::size_t offset = 0;
  for (Parameter* p : parameters()) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), p->value.size(), p->value.data());
    offset += p->value.size();
  }
}

void Mlp::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

Tensor Mlp::jvp(const Tensor& input, std::span<const double> tangent) const {
  if (tangent.size() != parameter_count()) throw ShapeError("jvp tangent has the wrong length");
  const std::size_t rows = input.rows();
  Tensor h = input;
  Tensor dh = Tensor::matrix(rows, input.cols(), 0.0);
  std::size_t offset = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const Tensor& w = weights_[l].value;
    const Tensor& b = biases_[l].value;
    const std::size_t in = w.rows(), out = w.cols();
    const double* dw = tangent.data() + offset;
    const double* db = dw + in * out;
    offset += in * out + out;

    Tensor z = Tensor::matrix(rows, out);
    Tensor dz = Tensor::matrix(rows, out);
    kernels::gemm_nn(h.data(), w.data(), z.data(), rows, in, out, false);
    kernels::gemm_nn(dh.data(), w.data(), dz.data(), rows, in, out, false);
    kernels::gemm_nn(h.data(), dw, dz.data(), rows, in, out, true);
    const bool hidden = l + 1 < weights_.size();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < out; ++c) {
        const double v = z(r, c) + b[c];
        double dv = dz(r, c) + db[c];
        double y = v;
        if (hidden) {
          if (spec_.activation == Activation::tanh) {
            y = std::tanh(v);
            dv *= 1.0 - y * y;
          } else {
            y = v > 0.0 ? v : 0.0;
            dv = v > 0.0 ? dv : 0.0;
          }
        }
        z(r, c) = y;
        dz(r, c) = dv;
      }
    }
    h = std::move(z);
    dh = std::move(dz);
  }
  if (spec_.head == HeadKind::tanh_scaled) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < h.cols(); ++c) {
        const double t = std::tanh(h(r, c));
        dh(r, c) *= (1.0 - t * t) * head_half_[c];
      }
    }
  }
  return dh;
}

}  // namespace climrl::nn
