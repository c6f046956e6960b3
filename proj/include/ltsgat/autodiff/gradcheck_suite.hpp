#pragma once

// One finite-difference case per primitive. Each case contracts the
// primitive's output against a fixed random weight so every output entry
// carries a distinct upstream gradient.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ltsgat/autodiff/gradcheck.hpp"

namespace ltsgat::ad {

struct PrimitiveCase {
  std::string name;
  std::vector<Shape> shapes;
  ExpressionBuilder build;
  double lo = -1.0;
  double hi = 1.0;
};

inline Var weighted_sum(Var v, std::uint64_t salt = 17) {
  std::mt19937_64 rng(salt + 1000 * v.rows() + v.cols());
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix w(v.rows(), v.cols());
  for (double& x : w.data()) x = dist(rng);
  return sum(hadamard(v, v.graph()->constant(std::move(w))));
}

inline std::vector<PrimitiveCase> primitive_cases() {
  using In = std::span<const Var>;
  std::vector<PrimitiveCase> cases;
  cases.push_back({"matmul", {{3, 4}, {4, 2}},
                   [](Graph&, In x) { return weighted_sum(matmul(x[0], x[1])); }});
  cases.push_back({"affine_full_bias", {{3, 4}, {4, 2}, {3, 2}},
                   [](Graph&, In x) { return weighted_sum(affine(x[0], x[1], x[2])); }});
  cases.push_back({"affine_column_bias", {{3, 4}, {4, 2}, {3, 1}},
                   [](Graph&, In x) { return weighted_sum(affine(x[0], x[1], x[2])); }});
  cases.push_back({"affine_row_bias", {{3, 4}, {4, 2}, {1, 2}},
                   [](Graph&, In x) { return weighted_sum(affine(x[0], x[1], x[2])); }});
  cases.push_back({"transpose", {{3, 5}},
                   [](Graph&, In x) { return weighted_sum(transpose(x[0])); }});
  cases.push_back({"add", {{3, 4}, {3, 4}},
                   [](Graph&, In x) { return weighted_sum(add(x[0], x[1])); }});
  cases.push_back({"sub", {{3, 4}, {3, 4}},
                   [](Graph&, In x) { return weighted_sum(sub(x[0], x[1])); }});
  cases.push_back({"hadamard", {{3, 4}, {3, 4}},
                   [](Graph&, In x) { return weighted_sum(hadamard(x[0], x[1])); }});
  cases.push_back({"concat_rows", {{2, 3}, {4, 3}},
                   [](Graph&, In x) { return weighted_sum(concat_rows({x[0], x[1]})); }});
  cases.push_back({"concat_cols", {{3, 2}, {3, 4}},
                   [](Graph&, In x) { return weighted_sum(concat_cols({x[0], x[1]})); }});
  cases.push_back({"softmax_rows", {{4, 3}},
                   [](Graph&, In x) { return weighted_sum(softmax(x[0], Axis::Rows)); }});
  cases.push_back({"softmax_cols", {{4, 3}},
                   [](Graph&, In x) { return weighted_sum(softmax(x[0], Axis::Cols)); }});
  cases.push_back({"sigmoid", {{3, 4}}, [](Graph&, In x) { return weighted_sum(sigmoid(x[0])); }});
  cases.push_back({"tanh", {{3, 4}}, [](Graph&, In x) { return weighted_sum(tanh(x[0])); }});
  cases.push_back({"leaky_relu", {{3, 4}},
                   [](Graph&, In x) { return weighted_sum(leaky_relu(x[0], 0.2)); }});
  cases.push_back({"exp", {{3, 4}}, [](Graph&, In x) { return weighted_sum(exp(x[0])); }});
  cases.push_back({"log", {{3, 4}}, [](Graph&, In x) { return weighted_sum(log(x[0])); },
                   0.5, 2.0});
  cases.push_back({"mean_rows", {{4, 3}},
                   [](Graph&, In x) { return weighted_sum(mean(x[0], Axis::Rows)); }});
  cases.push_back({"mean_cols", {{4, 3}},
                   [](Graph&, In x) { return weighted_sum(mean(x[0], Axis::Cols)); }});
  cases.push_back({"sum", {{3, 4}}, [](Graph&, In x) { return scale(sum(x[0]), 0.7); }});
  cases.push_back({"scale", {{3, 4}}, [](Graph&, In x) { return weighted_sum(scale(x[0], -1.3)); }});
  cases.push_back({"gather_rows", {{4, 3}},
                   [](Graph&, In x) { return weighted_sum(gather_rows(x[0], {2, 0, 2})); }});
  cases.push_back({"gather_cols", {{3, 4}},
                   [](Graph&, In x) { return weighted_sum(gather_cols(x[0], {3, 1, 1, 0})); }});
  return cases;
}

inline GradCheckReport check_primitive(const PrimitiveCase& c, std::uint64_t seed,
                                       double tol = 1e-4) {
  return grad_check(c.name, c.build, c.shapes, seed, tol, c.lo, c.hi);
}

}  // namespace ltsgat::ad
