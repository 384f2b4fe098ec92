#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace debsdf {

// in → tanh(W1·in + b1) → tanh(W2·h1 + b2) → softplus(W3·h2 + b3) + u_floor.
// Outputs are (u_d, v_n0, v_n1). Gradients are written out by hand: the head
// is evaluated at many samples per step and a scalar tape would dominate the
// step time.
class UncertaintyHead {
 public:
  static constexpr int kOutputs = 3;

  UncertaintyHead(int inputs = 8, int hidden = 32);

  int inputs() const { return in_; }
  int hidden() const { return hidden_; }
  std::size_t param_count() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // Xavier-uniform hidden layers; output weights scaled down and biases set so
  // every output starts near `initial_output`.
  void init(std::uint64_t seed, double initial_output = 0.5);

  struct Cache {
    std::vector<double> in, h1, h2;
    std::array<double, kOutputs> z{};
    std::array<double, kOutputs> out{};
  };

  std::array<double, kOutputs> eval(std::span<const double> in) const;
  void eval(std::span<const double> in, Cache& cache) const;

  // ∂out_k/∂in_j, row-major kOutputs × inputs().
  std::vector<double> input_jacobian(const Cache& cache) const;

  // grad += Σ_k dout[k] · ∂out_k/∂params.
  void accumulate_param_grad(const Cache& cache, std::span<const double, kOutputs> dout,
                             std::span<double> grad) const;

 private:
  std::size_t w1() const { return 0; }
  std::size_t b1() const { return w1() + static_cast<std::size_t>(hidden_ * in_); }
  std::size_t w2() const { return b1() + static_cast<std::size_t>(hidden_); }
  std::size_t b2() const { return w2() + static_cast<std::size_t>(hidden_ * hidden_); }
  std::size_t w3() const { return b2() + static_cast<std::size_t>(hidden_); }
  std::size_t b3() const { return w3() + static_cast<std::size_t>(kOutputs * hidden_); }

  // δ at the pre-activations of each layer for an output-space cotangent.
  void backprop(const Cache& cache, std::span<const double, kOutputs> dout, std::vector<double>& d2,
                std::vector<double>& d1) const;

  int in_;
  int hidden_;
  std::vector<double> params_;
};

}  // namespace debsdf
