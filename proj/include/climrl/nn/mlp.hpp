#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "climrl/nn/autodiff.hpp"
#include "climrl/nn/tensor.hpp"
#include "climrl/rng.hpp"

namespace climrl::nn {

enum class Activation { tanh, relu };
enum class HeadKind { linear, tanh_scaled, gaussian };

std::string to_string(Activation a);
std::string to_string(HeadKind h);
Activation activation_from_string(const std::string& s);
HeadKind head_from_string(const std::string& s);

struct MlpSpec {
  // input, hidden..., output
  std::vector<std::size_t> layer_sizes;
  Activation activation = Activation::tanh;
  HeadKind head = HeadKind::linear;
  // tanh_scaled only: per-output bounds.
  std::vector<double> low;
  std::vector<double> high;
  // Multiplies the initial weights and biases of the last layer.
  double final_layer_scale = 1.0;
  // gaussian only: initial per-dimension log standard deviation.
  double log_std_init = 0.0;
};

// Fully connected network. The gaussian head outputs the mean; its log-std is
// a free per-dimension parameter read through log_std().
class Mlp {
 public:
  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;

  Mlp() = default;
  Mlp(MlpSpec spec, RngStream& rng);

  const MlpSpec& spec() const { return spec_; }
  std::size_t input_size() const { return spec_.layer_sizes.front(); }
  std::size_t output_size() const { return spec_.layer_sizes.back(); }
  std::size_t layer_count() const { return weights_.size(); }

  // Records the forward pass. With trainable == false the parameters enter
  // the graph as frozen constants (no gradient accumulation).
  Var forward(Tape& tape, Var input, bool trainable = true);
  // Same arithmetic as forward(), without a tape.
  Tensor predict(const Tensor& input) const;

  // 1 x out, clamped to [kLogStdMin, kLogStdMax]. gaussian head only.
  Var log_std(Tape& tape, bool trainable = true);
  std::vector<double> log_std_values() const;

  // Declaration order: W0, b0, W1, b1, ..., then log_std for gaussian heads.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;
  std::vector<double> flat_parameters() const;
  std::vector<double> flat_gradients() const;
  void set_flat_parameters(std::span<const double> flat);
  void zero_grad();

  // Directional derivative of the (pre-clamp) network output along a
  // parameter tangent laid out like flat_parameters(). The log_std block of
  // the tangent is ignored.
  Tensor jvp(const Tensor& input, std::span<const double> tangent) const;

 private:
  MlpSpec spec_;
  std::vector<Parameter> weights_;
  std::vector<Parameter> biases_;
  Parameter log_std_;
  Tensor head_center_;
  Tensor head_half_;
};

}  // namespace climrl::nn
