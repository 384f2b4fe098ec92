#include <gtest/gtest.h>

#include <cmath>

#include "debsdf/grad.hpp"

using namespace debsdf::grad;

TEST(Grad, ArithmeticAndElementary) {
  Tape tape;
  const Var x = tape.variable(0.7);
  const Var y = tape.variable(-1.3);
  const Var f = x * y + exp(x) / (y * y) - log(x) + sqrt(x) * tanh(y) + pow(x, 2.5) - sin(y) + softplus(x);
  tape.backward(f);
  const double xv = 0.7, yv = -1.3;
  const double dx = yv + std::exp(xv) / (yv * yv) - 1.0 / xv + 0.5 / std::sqrt(xv) * std::tanh(yv) +
                    2.5 * std::pow(xv, 1.5) + 1.0 / (1.0 + std::exp(-xv));
  const double dy = xv - 2.0 * std::exp(xv) / (yv * yv * yv) +
                    std::sqrt(xv) * (1.0 - std::tanh(yv) * std::tanh(yv)) - std::cos(yv);
  EXPECT_NEAR(tape.adjoint(x), dx, 1e-12);
  EXPECT_NEAR(tape.adjoint(y), dy, 1e-12);
}

TEST(Grad, ConstantsNeedNoTape) {
  const Var c = Var(2.0) * Var(3.0);
  EXPECT_TRUE(c.is_constant());
  EXPECT_DOUBLE_EQ(c.value(), 6.0);
}

TEST(Grad, StopGradient) {
  Tape tape;
  const Var x = tape.variable(2.0);
  const Var f = stop_gradient(x) * x;
  tape.backward(f);
  EXPECT_DOUBLE_EQ(tape.adjoint(x), 2.0);
  tape.backward(f, true);
  EXPECT_DOUBLE_EQ(tape.adjoint(x), 4.0);
}

TEST(Grad, MinMaxTiesGoToFirstArgument) {
  Tape tape;
  const Var a = tape.variable(1.0);
  const Var b = tape.variable(1.0);
  tape.backward(min(a, b));
  EXPECT_EQ(tape.adjoint(a), 1.0);
  EXPECT_EQ(tape.adjoint(b), 0.0);
  tape.backward(max(a, b));
  EXPECT_EQ(tape.adjoint(a), 1.0);
  EXPECT_EQ(tape.adjoint(b), 0.0);
}

TEST(Grad, AbsSubgradientAtZero) {
  Tape tape;
  const Var x = tape.variable(0.0);
  tape.backward(abs(x));
  EXPECT_EQ(tape.adjoint(x), 0.0);
}

TEST(Grad, MixingTapesThrows) {
  Tape t1, t2;
  const Var a = t1.variable(1.0);
  const Var b = t2.variable(1.0);
  EXPECT_THROW(a + b, std::logic_error);
}

TEST(Grad, VectorHelpers) {
  Tape tape;
  const std::vector<Var> a{tape.variable(3.0), tape.variable(4.0)};
  const Var n = norm(a);
  EXPECT_DOUBLE_EQ(n.value(), 5.0);
  tape.backward(n);
  EXPECT_DOUBLE_EQ(tape.adjoint(a[0]), 0.6);
  const std::vector<double> w{2.0, -1.0};
  const Var s = weighted_sum(a, w);
  EXPECT_DOUBLE_EQ(s.value(), 2.0);
  tape.backward(s);
  EXPECT_DOUBLE_EQ(tape.adjoint(a[1]), -1.0);
  EXPECT_DOUBLE_EQ(dot(a, a).value(), 25.0);
}

TEST(Grad, FiniteDiffCheckPasses) {
  const ScalarFunction f = [](Tape&, std::span<const Var> p) { return p[0] * exp(p[1]) + pow(p[2], 3.0) / p[0]; };
  const std::vector<double> params{0.8, -0.2, 1.1};
  const FiniteDiffReport r = finite_diff_check(f, params);
  EXPECT_TRUE(r.passed);
  for (const ParamCheck& c : r.params) EXPECT_EQ(c.status, ParamCheck::Status::ok);
  EXPECT_LT(r.max_relative_error, 1e-6);
}

TEST(Grad, FiniteDiffCheckCatchesWrongGradient) {
  // A hand-recorded node with a deliberately wrong partial.
  const ScalarFunction f = [](Tape& tape, std::span<const Var> p) {
    return tape.record1(p[0].value() * p[0].value(), p[0], 3.0 * p[0].value());
  };
  const std::vector<double> params{1.5};
  const FiniteDiffReport r = finite_diff_check(f, params);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.params[0].status, ParamCheck::Status::mismatch);
}

TEST(Grad, FiniteDiffCheckReportsDetachedAsExpected) {
  const ScalarFunction f = [](Tape&, std::span<const Var> p) { return stop_gradient(p[0] * p[0]) + p[1]; };
  const std::vector<double> params{1.5, 0.3};
  const FiniteDiffReport r = finite_diff_check(f, params);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.params[0].status, ParamCheck::Status::expected_detached);
  EXPECT_EQ(r.params[0].tape_gradient, 0.0);
  EXPECT_NE(r.params[0].numeric_gradient, 0.0);
  EXPECT_EQ(r.params[1].status, ParamCheck::Status::ok);
}

TEST(Grad, FiniteDiffCheckFlagsKinks) {
  const ScalarFunction f = [](Tape&, std::span<const Var> p) { return abs(p[0]) + p[1] * p[1]; };
  const std::vector<double> params{0.0, 0.5};
  const FiniteDiffReport r = finite_diff_check(f, params);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.params[0].status, ParamCheck::Status::non_differentiable);
  EXPECT_EQ(r.params[1].status, ParamCheck::Status::ok);
}

TEST(Grad, BackwardCostIsLinearInNodes) {
  for (int n : {100, 1000, 10000}) {
    Tape tape;
    Var acc = tape.variable(1.0);
    for (int i = 0; i < n; ++i) acc = acc * 1.0001 + 0.5;
    tape.backward(acc);
    EXPECT_EQ(tape.visits(), tape.size());
    EXPECT_LE(tape.edge_count(), 2 * tape.size());
  }
}

TEST(Grad, StatusNames) {
  EXPECT_STREQ(to_string(ParamCheck::Status::ok), "ok");
  EXPECT_STRNE(to_string(ParamCheck::Status::mismatch), to_string(ParamCheck::Status::expected_detached));
}
