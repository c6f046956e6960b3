#pragma once

// Segment-level self-attention applied to each band slice X (n x k):
//   Q = W_Q^T X + B_Q,  K = W_K^T X + B_K,  V = W_V^T X + B_V
//   E = K^T Q,  W_A = column softmax of E,  X' = V W_A
// The same parameters serve every band.

#include <string>
#include <vector>

#include "ltsgat/model/params.hpp"

namespace ltsgat::model {

struct TemporalParams {
  ParamRef W_Q, B_Q, W_K, B_K, W_V, B_V;

  static TemporalParams add_to(ParameterSet& set, std::size_t n, std::size_t k) {
    TemporalParams p;
    p.W_Q = set.add("temporal.W_Q", n, n, Init::Glorot);
    p.B_Q = set.add("temporal.B_Q", n, k, Init::Zero);
    p.W_K = set.add("temporal.W_K", n, n, Init::Glorot);
    p.B_K = set.add("temporal.B_K", n, k, Init::Zero);
    p.W_V = set.add("temporal.W_V", n, n, Init::Glorot);
    p.B_V = set.add("temporal.B_V", n, k, Init::Zero);
    return p;
  }
};

// Graph-side view with the weight transposes formed once.
struct TemporalBound {
  Var W_Qt, B_Q, W_Kt, B_K, W_Vt, B_V;

  static TemporalBound bind(const BoundParameters& b, const TemporalParams& p) {
    return {transpose(b[p.W_Q]), b[p.B_Q], transpose(b[p.W_K]), b[p.B_K], transpose(b[p.W_V]), b[p.B_V]};
  }
};

struct QKV {
  Var Q, K, V;
};

inline QKV temporal_qkv(Var X, const TemporalBound& t) {
  if (X.rows() != t.W_Qt.cols() || !X.value().same_shape(t.B_Q.value())) {
    throw ad::ShapeError("temporal_qkv: input " + X.value().shape() + " incompatible with W " +
                         t.W_Qt.value().shape() + " and B " + t.B_Q.value().shape());
  }
  return {affine(t.W_Qt, X, t.B_Q), affine(t.W_Kt, X, t.B_K), affine(t.W_Vt, X, t.B_V)};
}

// k x k, columns sum to 1.
inline Var temporal_weights(Var Q, Var K) {
  return softmax(matmul(transpose(K), Q), ad::Axis::Rows);
}

inline Var temporal_transform(Var V, Var W_A) {
  if (V.cols() != W_A.rows()) {
    throw ad::ShapeError("temporal_transform: V " + V.value().shape() + " vs W_A " + W_A.value().shape());
  }
  return matmul(V, W_A);
}

// Row sums of W_A; they add up to k.
inline std::vector<double> temporal_importance(const Matrix& W_A) {
  std::vector<double> out(W_A.rows(), 0.0);
  for (std::size_t i = 0; i < W_A.rows(); ++i)
    for (std::size_t c = 0; c < W_A.cols(); ++c) out[i] += W_A(i, c);
  return out;
}

struct TemporalOutput {
  Var features;              // n x (k * d_b), band-major columns
  std::vector<Var> weights;  // W_A per band
};

inline TemporalOutput temporal_block(std::span<const Var> bands, const TemporalBound& t) {
  TemporalOutput out;
  std::vector<Var> transformed;
  for (Var X : bands) {
    const QKV qkv = temporal_qkv(X, t);
    const Var W_A = temporal_weights(qkv.Q, qkv.K);
    transformed.push_back(temporal_transform(qkv.V, W_A));
    out.weights.push_back(W_A);
  }
  out.features = concat_cols(transformed);
  return out;
}

}  // namespace ltsgat::model
