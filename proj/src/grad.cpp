#include "debsdf/grad.hpp"

#include <algorithm>

#include "debsdf/errors.hpp"

namespace debsdf::grad {

const std::vector<double>& Tape::backward(const Var& out, bool through_stops) {
  if (out.tape_ != this || out.is_constant()) throw std::invalid_argument("backward: output is not on this tape");
  const std::size_t n = edge_end_.size();
  adjoint_.assign(n, 0.0);
  visits_ = 0;
  const auto top = static_cast<std::size_t>(out.id_);
  adjoint_[top] = 1.0;
  for (std::size_t i = top + 1; i-- > 0;) {
    ++visits_;
    const double a = adjoint_[i];
    if (a == 0.0) continue;
    if ((flags_[i] & kStop) && !through_stops) continue;
    const std::uint32_t begin = i == 0 ? 0u : edge_end_[i - 1];
    const std::uint32_t end = edge_end_[i];
    for (std::uint32_t e = begin; e < end; ++e) {
      const auto p = static_cast<std::size_t>(parents_[e]);
      if (p >= i) throw std::logic_error("tape cycle: node refers to a later node");
      adjoint_[p] += a * partials_[e];
    }
  }
  return adjoint_;
}

std::vector<bool> Tape::kink_ancestors() const {
  const std::size_t n = edge_end_.size();
  std::vector<bool> marked(n, false);
  for (std::size_t i = n; i-- > 0;) {
    if (flags_[i] & kKink) marked[i] = true;
    if (!marked[i]) continue;
    const std::uint32_t begin = i == 0 ? 0u : edge_end_[i - 1];
    for (std::uint32_t e = begin; e < edge_end_[i]; ++e) marked[static_cast<std::size_t>(parents_[e])] = true;
  }
  return marked;
}

Var dot(std::span<const Var> a, std::span<const Var> b) {
  if (a.size() != b.size()) throw LengthMismatchError("dot: length mismatch");
  Tape* t = nullptr;
  double v = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    v += a[k].value() * b[k].value();
    if (!t) t = a[k].tape() ? a[k].tape() : b[k].tape();
  }
  if (!t) return Var(v);
  std::vector<Var> parents;
  std::vector<double> partials;
  parents.reserve(2 * a.size());
  partials.reserve(2 * a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    parents.push_back(a[k]);
    partials.push_back(b[k].value());
    parents.push_back(b[k]);
    partials.push_back(a[k].value());
  }
  return t->record(v, parents, partials);
}

Var weighted_sum(std::span<const Var> terms, std::span<const double> weights) {
  if (terms.size() != weights.size()) throw LengthMismatchError("weighted_sum: length mismatch");
  Tape* t = nullptr;
  double v = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    v += terms[k].value() * weights[k];
    if (!t) t = terms[k].tape();
  }
  if (!t) return Var(v);
  return t->record(v, terms, weights);
}

Var norm(std::span<const Var> a) {
  Tape* t = nullptr;
  double sq = 0.0;
  for (const Var& x : a) {
    sq += x.value() * x.value();
    if (!t) t = x.tape();
  }
  const double v = std::sqrt(sq);
  if (!t) return Var(v);
  std::vector<double> partials(a.size(), 0.0);
  if (v <= t->kink_tolerance || v == 0.0) return t->record(v, a, partials, kKink);
  for (std::size_t k = 0; k < a.size(); ++k) partials[k] = a[k].value() / v;
  return t->record(v, a, partials);
}

const char* to_string(ParamCheck::Status s) {
  switch (s) {
    case ParamCheck::Status::ok:
      return "ok";
    case ParamCheck::Status::mismatch:
      return "MISMATCH";
    case ParamCheck::Status::expected_detached:
      return "expected (detached)";
    case ParamCheck::Status::non_differentiable:
      return "excluded (kink)";
  }
  return "?";
}

namespace {

double evaluate(const ScalarFunction& f, std::span<const double> params) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (double p : params) leaves.push_back(tape.variable(p));
  const double v = f(tape, leaves).value();
  if (!std::isfinite(v)) throw NonFiniteError("finite_diff_check: non-finite function value");
  return v;
}

double relative(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3}); }

}  // namespace

FiniteDiffReport finite_diff_check(const ScalarFunction& f, std::span<const double> params, double step,
                                   double tolerance) {
  Tape tape;
  tape.kink_tolerance = 10.0 * step;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (double p : params) leaves.push_back(tape.variable(p));
  const Var out = f(tape, leaves);
  if (!std::isfinite(out.value())) throw NonFiniteError("finite_diff_check: non-finite function value");

  std::vector<double> detached(params.size(), 0.0);
  std::vector<double> transparent(params.size(), 0.0);
  std::vector<bool> kinked(params.size(), false);
  if (!out.is_constant()) {
    tape.backward(out);
    for (std::size_t i = 0; i < params.size(); ++i) detached[i] = tape.adjoint(leaves[i]);
    tape.backward(out, /*through_stops=*/true);
    for (std::size_t i = 0; i < params.size(); ++i) transparent[i] = tape.adjoint(leaves[i]);
    const auto marks = tape.kink_ancestors();
    for (std::size_t i = 0; i < params.size(); ++i) kinked[i] = marks[static_cast<std::size_t>(leaves[i].id())];
  }

  FiniteDiffReport report;
  std::vector<double> probe(params.begin(), params.end());
  for (std::size_t i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + step;
    const double plus = evaluate(f, probe);
    probe[i] = params[i] - step;
    const double minus = evaluate(f, probe);
    probe[i] = params[i];

    ParamCheck c;
    c.index = i;
    c.tape_gradient = detached[i];
    c.numeric_gradient = (plus - minus) / (2.0 * step);
    c.relative_error = relative(c.tape_gradient, c.numeric_gradient);
    if (kinked[i]) {
      c.status = ParamCheck::Status::non_differentiable;
    } else if (c.relative_error <= tolerance) {
      c.status = ParamCheck::Status::ok;
    } else if (relative(transparent[i], c.numeric_gradient) <= tolerance) {
      c.status = ParamCheck::Status::expected_detached;
    } else {
      c.status = ParamCheck::Status::mismatch;
      report.passed = false;
    }
    if (c.status == ParamCheck::Status::ok || c.status == ParamCheck::Status::mismatch) {
      report.max_abs_error = std::max(report.max_abs_error, std::abs(c.tape_gradient - c.numeric_gradient));
      report.max_relative_error = std::max(report.max_relative_error, c.relative_error);
    }
    report.params.push_back(c);
  }
  return report;
}

}  // namespace debsdf::grad
