#pragma once

// Central finite-difference verification of graph gradients.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ltsgat/autodiff/graph.hpp"

namespace ltsgat::ad {

struct GradCheckReport {
  std::string op_name;
  double max_relative_error = 0.0;
  std::vector<double> errors;    // one per perturbed input entry, inputs in order
  std::vector<double> analytic;  // matching analytic gradient entries
  bool pass = false;
};

// Builds a scalar expression from leaf variables created for each input.
using ExpressionBuilder = std::function<Var(Graph&, std::span<const Var>)>;

inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

namespace detail {
inline double evaluate(const ExpressionBuilder& build, const std::vector<Matrix>& inputs) {
  Graph g;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const Matrix& m : inputs) vars.push_back(g.variable(m));
  Var out = build(g, vars);
  if (out.rows() != 1 || out.cols() != 1) {
    throw ShapeError("grad_check: expression must reduce to 1x1, got " + out.value().shape());
  }
  return out.value()[0];
}
}  // namespace detail

inline GradCheckReport grad_check(std::string name, const ExpressionBuilder& build,
                                  std::vector<Matrix> inputs, double tol, double step = 1e-5) {
  Graph g;
  std::vector<Var> vars;
  for (const Matrix& m : inputs) vars.push_back(g.variable(m));
  Var out = build(g, vars);
  if (out.rows() != 1 || out.cols() != 1) {
    throw ShapeError("grad_check: expression must reduce to 1x1, got " + out.value().shape());
  }
  g.backward(out);

  GradCheckReport report;
  report.op_name = std::move(name);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Matrix& analytic = g.grad(vars[k]);
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double saved = inputs[k][i];
      inputs[k][i] = saved + step;
      const double up = detail::evaluate(build, inputs);
      inputs[k][i] = saved - step;
      const double down = detail::evaluate(build, inputs);
      inputs[k][i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err = relative_error(analytic[i], numeric);
      report.errors.push_back(err);
      report.analytic.push_back(analytic[i]);
      report.max_relative_error = std::max(report.max_relative_error, err);
    }
  }
  report.pass = report.max_relative_error < tol;
  return report;
}

// Largest error among entries whose analytic gradient exceeds `floor` in magnitude.
inline double max_error_above(const GradCheckReport& r, double floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < r.errors.size(); ++i)
    if (std::abs(r.analytic[i]) > floor) worst = std::max(worst, r.errors[i]);
  return worst;
}

struct Shape {
  std::size_t rows;
  std::size_t cols;
};

// Seeded variant: inputs drawn uniformly from [lo, hi].
inline GradCheckReport grad_check(std::string name, const ExpressionBuilder& build,
                                  std::span<const Shape> shapes, std::uint64_t seed, double tol,
                                  double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<Matrix> inputs;
  for (Shape s : shapes) {
    Matrix m(s.rows, s.cols);
    for (double& v : m.data()) v = dist(rng);
    inputs.push_back(std::move(m));
  }
  return grad_check(std::move(name), build, std::move(inputs), tol);
}

}  // namespace ltsgat::ad
