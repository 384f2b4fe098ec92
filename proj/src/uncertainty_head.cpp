#include "debsdf/uncertainty_head.hpp"

#include <cmath>
#include <random>

#include "debsdf/errors.hpp"
#include "debsdf/losses.hpp"

namespace debsdf {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

UncertaintyHead::UncertaintyHead(int inputs, int hidden) : in_(inputs), hidden_(hidden) {
  if (inputs < 1 || hidden < 1) throw ValidationError("uncertainty head needs positive layer sizes");
  params_.assign(b3() + kOutputs, 0.0);
}

void UncertaintyHead::init(std::uint64_t seed, double initial_output) {
  if (!(initial_output > kUncertaintyFloor)) throw DomainError("initial uncertainty must exceed the floor");
  std::mt19937_64 rng(seed);
  auto fill = [&](std::size_t offset, int fan_out, int fan_in, double gain) {
    const double limit = gain * std::sqrt(6.0 / (fan_in + fan_out));
    for (int k = 0; k < fan_out * fan_in; ++k) params_[offset + static_cast<std::size_t>(k)] = limit * (2.0 * uniform01(rng) - 1.0);
  };
  fill(w1(), hidden_, in_, 1.0);
  fill(w2(), hidden_, hidden_, 1.0);
  fill(w3(), kOutputs, hidden_, 0.1);
  for (int k = 0; k < hidden_; ++k) {
    params_[b1() + static_cast<std::size_t>(k)] = 0.0;
    params_[b2() + static_cast<std::size_t>(k)] = 0.0;
  }
  // softplus(b) + floor = initial_output
  const double target = initial_output - kUncertaintyFloor;
  const double bias = std::log(std::expm1(target));
  for (int k = 0; k < kOutputs; ++k) params_[b3() + static_cast<std::size_t>(k)] = bias;
}

std::array<double, UncertaintyHead::kOutputs> UncertaintyHead::eval(std::span<const double> in) const {
  Cache cache;
  eval(in, cache);
  return cache.out;
}

void UncertaintyHead::eval(std::span<const double> in, Cache& c) const {
  if (static_cast<int>(in.size()) != in_) throw LengthMismatchError("uncertainty head input size mismatch");
  const double* p = params_.data();
  c.in.assign(in.begin(), in.end());
  c.h1.resize(static_cast<std::size_t>(hidden_));
  c.h2.resize(static_cast<std::size_t>(hidden_));
  for (int i = 0; i < hidden_; ++i) {
    double acc = p[b1() + static_cast<std::size_t>(i)];
    const double* row = p + w1() + static_cast<std::size_t>(i * in_);
    for (int j = 0; j < in_; ++j) acc += row[j] * in[static_cast<std::size_t>(j)];
    c.h1[static_cast<std::size_t>(i)] = std::tanh(acc);
  }
  for (int i = 0; i < hidden_; ++i) {
    double acc = p[b2() + static_cast<std::size_t>(i)];
    const double* row = p + w2() + static_cast<std::size_t>(i * hidden_);
    for (int j = 0; j < hidden_; ++j) acc += row[j] * c.h1[static_cast<std::size_t>(j)];
    c.h2[static_cast<std::size_t>(i)] = std::tanh(acc);
  }
  for (int k = 0; k < kOutputs; ++k) {
    double acc = p[b3() + static_cast<std::size_t>(k)];
    const double* row = p + w3() + static_cast<std::size_t>(k * hidden_);
    for (int j = 0; j < hidden_; ++j) acc += row[j] * c.h2[static_cast<std::size_t>(j)];
    c.z[static_cast<std::size_t>(k)] = acc;
    c.out[static_cast<std::size_t>(k)] = softplus(acc) + kUncertaintyFloor;
  }
}

void UncertaintyHead::backprop(const Cache& c, std::span<const double, kOutputs> dout, std::vector<double>& d2,
                               std::vector<double>& d1) const {
  const double* p = params_.data();
  const auto h = static_cast<std::size_t>(hidden_);
  d2.assign(h, 0.0);
  d1.assign(h, 0.0);
  for (int k = 0; k < kOutputs; ++k) {
    const double dz = dout[static_cast<std::size_t>(k)] * sigmoid(c.z[static_cast<std::size_t>(k)]);
    if (dz == 0.0) continue;
    const double* row = p + w3() + static_cast<std::size_t>(k * hidden_);
    for (std::size_t j = 0; j < h; ++j) d2[j] += dz * row[j];
  }
  for (std::size_t j = 0; j < h; ++j) d2[j] *= 1.0 - c.h2[j] * c.h2[j];
  for (std::size_t i = 0; i < h; ++i) {
    if (d2[i] == 0.0) continue;
    const double* row = p + w2() + i * h;
    for (std::size_t j = 0; j < h; ++j) d1[j] += d2[i] * row[j];
  }
  for (std::size_t j = 0; j < h; ++j) d1[j] *= 1.0 - c.h1[j] * c.h1[j];
}

std::vector<double> UncertaintyHead::input_jacobian(const Cache& c) const {
  std::vector<double> jac(static_cast<std::size_t>(kOutputs * in_), 0.0);
  std::vector<double> d2;
  std::vector<double> d1;
  const double* p = params_.data();
  for (int k = 0; k < kOutputs; ++k) {
    std::array<double, kOutputs> e{};
    e[static_cast<std::size_t>(k)] = 1.0;
    backprop(c, e, d2, d1);
    for (int i = 0; i < hidden_; ++i) {
      const double* row = p + w1() + static_cast<std::size_t>(i * in_);
      for (int j = 0; j < in_; ++j) jac[static_cast<std::size_t>(k * in_ + j)] += d1[static_cast<std::size_t>(i)] * row[j];
    }
  }
  return jac;
}

void UncertaintyHead::accumulate_param_grad(const Cache& c, std::span<const double, kOutputs> dout,
                                            std::span<double> grad) const {
  if (grad.size() != params_.size()) throw LengthMismatchError("uncertainty head gradient size mismatch");
  std::vector<double> d2;
  std::vector<double> d1;
  backprop(c, dout, d2, d1);
  const auto h = static_cast<std::size_t>(hidden_);
  const auto n_in = static_cast<std::size_t>(in_);
  for (int k = 0; k < kOutputs; ++k) {
    const double dz = dout[static_cast<std::size_t>(k)] * sigmoid(c.z[static_cast<std::size_t>(k)]);
    if (dz == 0.0) continue;
    grad[b3() + static_cast<std::size_t>(k)] += dz;
    double* row = grad.data() + w3() + static_cast<std::size_t>(k) * h;
    for (std::size_t j = 0; j < h; ++j) row[j] += dz * c.h2[j];
  }
  for (std::size_t i = 0; i < h; ++i) {
    grad[b2() + i] += d2[i];
    double* row = grad.data() + w2() + i * h;
    for (std::size_t j = 0; j < h; ++j) row[j] += d2[i] * c.h1[j];
  }
  for (std::size_t i = 0; i < h; ++i) {
    grad[b1() + i] += d1[i];
    double* row = grad.data() + w1() + i * n_in;
    for (std::size_t j = 0; j < n_in; ++j) row[j] += d1[i] * c.in[j];
  }
}

}  // namespace debsdf
