#pragma once

// Bidirectional LSTM over the channel sequence, per-region embedding, region
// self-attention and re-expansion of region rows to nodes.
//
// The recurrent core is batched: a step processes one channel of every sample
// at once, with samples as columns.

#include <string>
#include <vector>

#include "ltsgat/model/params.hpp"
#include "ltsgat/model/region_map.hpp"

namespace ltsgat::model {

struct LstmDirectionParams {
  ParamRef W_in, b_in, W_fo, b_fo, W_ou, b_ou, W_c, b_c;

  static LstmDirectionParams add_to(ParameterSet& set, const std::string& prefix, std::size_t d_h,
                                    std::size_t input) {
    auto w = [&](const char* n) { return set.add(prefix + n, d_h, d_h + input, Init::Glorot); };
    auto b = [&](const char* n) { return set.add(prefix + n, d_h, 1, Init::Zero); };
    LstmDirectionParams p;
    p.W_in = w(".W_in");
    p.b_in = b(".b_in");
    p.W_fo = w(".W_fo");
    p.b_fo = b(".b_fo");
    p.W_ou = w(".W_ou");
    p.b_ou = b(".b_ou");
    p.W_c = w(".W_c");
    p.b_c = b(".b_c");
    return p;
  }
};

struct LstmDirection {
  Var W_in, b_in, W_fo, b_fo, W_ou, b_ou, W_c, b_c;

  static LstmDirection bind(const BoundParameters& b, const LstmDirectionParams& p) {
    return {b[p.W_in], b[p.b_in], b[p.W_fo], b[p.b_fo], b[p.W_ou], b[p.b_ou], b[p.W_c], b[p.b_c]};
  }
  std::size_t hidden() const { return W_in.rows(); }
  std::size_t input() const { return W_in.cols() - W_in.rows(); }
};

struct LstmState {
  Var h, c;
};

// x: input x B, h_prev and c_prev: d_h x B.
inline LstmState lstm_cell(Var x, Var h_prev, Var c_prev, const LstmDirection& p) {
  if (x.rows() != p.input() || h_prev.rows() != p.hidden() || c_prev.rows() != p.hidden()) {
    throw ad::ShapeError("lstm_cell: x " + x.value().shape() + ", h " + h_prev.value().shape() + ", c " +
                         c_prev.value().shape() + " vs W " + p.W_in.value().shape());
  }
  const Var z = concat_rows({h_prev, x});
  const Var in = sigmoid(affine(p.W_in, z, p.b_in));
  const Var forget = sigmoid(affine(p.W_fo, z, p.b_fo));
  const Var out = sigmoid(affine(p.W_ou, z, p.b_ou));
  const Var candidate = tanh(affine(p.W_c, z, p.b_c));
  const Var c = add(hadamard(forget, c_prev), hadamard(in, candidate));
  return {hadamard(out, tanh(c)), c};
}

// inputs[s] is sample s as n x in. Returns, per channel c, the 2d_h x B matrix
// whose column s is [h_fwd; h_bwd] of sample s at channel c.
inline std::vector<Var> bilstm_batched(std::span<const Var> inputs, const LstmDirection& fwd,
                                       const LstmDirection& bwd) {
  if (inputs.empty()) throw std::invalid_argument("bilstm: empty batch");
  Graph& g = *inputs.front().graph();
  const std::size_t n = inputs.front().rows(), batch = inputs.size();
  if (n == 0) throw ad::ShapeError("bilstm: zero channels");
  std::vector<Var> columns;
  for (Var x : inputs) {
    if (x.rows() != n) throw ad::ShapeError("bilstm: samples differ in channel count");
    columns.push_back(transpose(x));
  }
  const Var stacked = concat_cols(columns);  // in x (B * n), column s * n + c
  std::vector<Var> step_input(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<std::size_t> pick(batch);
    for (std::size_t s = 0; s < batch; ++s) pick[s] = s * n + c;
    step_input[c] = gather_cols(stacked, std::move(pick));
  }
  auto run = [&](const LstmDirection& p, bool reverse) {
    const Var zero = g.constant(Matrix(p.hidden(), batch));
    LstmState st{zero, zero};
    std::vector<Var> h(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = reverse ? n - 1 - i : i;
      st = lstm_cell(step_input[c], st.h, st.c, p);
      h[c] = st.h;
    }
    return h;
  };
  const std::vector<Var> hf = run(fwd, false);
  const std::vector<Var> hb = run(bwd, true);
  std::vector<Var> out(n);
  for (std::size_t c = 0; c < n; ++c) out[c] = concat_rows({hf[c], hb[c]});
  return out;
}

// Single sample: S is n x 2d_h with row i = [h_i^fwd; h_i^bwd].
inline Var bilstm_sequence(Var X, const LstmDirection& fwd, const LstmDirection& bwd) {
  const std::vector<Var> hidden = bilstm_batched(std::span<const Var>(&X, 1), fwd, bwd);
  return transpose(concat_cols(hidden));
}

struct RegionParams {
  std::vector<ParamRef> W_g, B_g;
  ParamRef W_Q, B_Q, W_K, B_K, W_V, B_V;

  static RegionParams add_to(ParameterSet& set, const RegionMap& map, std::size_t d_h, std::size_t m) {
    RegionParams p;
    for (const Region& r : map.regions()) {
      p.W_g.push_back(set.add("region." + r.name + ".W_g", m, r.channels.size() * 2 * d_h, Init::Glorot));
      p.B_g.push_back(set.add("region." + r.name + ".B_g", m, 1, Init::Zero));
    }
    const std::size_t N = map.region_count();
    p.W_Q = set.add("region.W_Q", m, m, Init::Glorot);
    p.B_Q = set.add("region.B_Q", N, m, Init::Zero);
    p.W_K = set.add("region.W_K", m, m, Init::Glorot);
    p.B_K = set.add("region.B_K", N, m, Init::Zero);
    p.W_V = set.add("region.W_V", m, m, Init::Glorot);
    p.B_V = set.add("region.B_V", N, m, Init::Zero);
    return p;
  }
};

struct RegionBound {
  std::vector<Var> W_g, B_g;
  Var W_Q, B_Q, W_K, B_K, W_V, B_V;

  static RegionBound bind(const BoundParameters& b, const RegionParams& p) {
    RegionBound r;
    for (ParamRef w : p.W_g) r.W_g.push_back(b[w]);
    for (ParamRef w : p.B_g) r.B_g.push_back(b[w]);
    r.W_Q = b[p.W_Q];
    r.B_Q = b[p.B_Q];
    r.W_K = b[p.W_K];
    r.B_K = b[p.B_K];
    r.W_V = b[p.W_V];
    r.B_V = b[p.B_V];
    return r;
  }
};

// hidden[c] is 2d_h x B (see bilstm_batched). Returns G (N x m) per sample.
inline std::vector<Var> embed_regions(std::span<const Var> hidden, const RegionMap& map, const RegionBound& p) {
  if (hidden.size() != map.channel_count()) {
    throw ad::ShapeError("partition_and_embed: " + std::to_string(hidden.size()) + " channels, region map has " +
                         std::to_string(map.channel_count()));
  }
  const std::size_t batch = hidden.front().cols(), N = map.region_count();
  std::vector<Var> embedded;
  for (std::size_t r = 0; r < N; ++r) {
    std::vector<Var> parts;
    for (std::size_t c : map.region(r).channels) parts.push_back(hidden[c]);
    embedded.push_back(affine(p.W_g[r], concat_rows(parts), p.B_g[r]));  // m x B
  }
  const Var all = concat_cols(embedded);  // m x (N * B), column r * B + s
  std::vector<Var> out(batch);
  for (std::size_t s = 0; s < batch; ++s) {
    std::vector<std::size_t> pick(N);
    for (std::size_t r = 0; r < N; ++r) pick[r] = r * batch + s;
    out[s] = transpose(gather_cols(all, std::move(pick)));
  }
  return out;
}

// Single sample: S is n x 2d_h.
inline Var partition_and_embed(Var S, const RegionMap& map, const RegionBound& p) {
  const Var St = transpose(S);
  std::vector<Var> hidden;
  for (std::size_t c = 0; c < S.rows(); ++c) hidden.push_back(gather_cols(St, {c}));
  return embed_regions(hidden, map, p).front();
}

struct RegionAttention {
  Var H;        // N x m
  Var weights;  // N x N, rows sum to 1
};

inline RegionAttention region_attention(Var G, const RegionBound& p) {
  const Var Q = affine(G, p.W_Q, p.B_Q);
  const Var K = affine(G, p.W_K, p.B_K);
  const Var V = affine(G, p.W_V, p.B_V);
  const Var W = softmax(matmul(Q, transpose(K)), ad::Axis::Cols);
  return {matmul(W, V), W};
}

// Column sums: attention received by each region. They add up to N.
inline std::vector<double> region_importance(const Matrix& W_r) {
  std::vector<double> out(W_r.cols(), 0.0);
  for (std::size_t p = 0; p < W_r.rows(); ++p)
    for (std::size_t i = 0; i < W_r.cols(); ++i) out[i] += W_r(p, i);
  return out;
}

struct ExpandParams {
  ParamRef W_h, B_h;

  static ExpandParams add_to(ParameterSet& set, std::size_t m, std::size_t F) {
    return {set.add("expand.W_h", m, F, Init::Glorot), set.add("expand.B_h", 1, F, Init::Zero)};
  }
};

// Each channel takes its region's row of H, then the shared m -> F affine.
inline Var expand_to_nodes(Var H, const RegionMap& map, Var W_h, Var B_h) {
  std::vector<std::size_t> owner(map.channel_count());
  for (std::size_t c = 0; c < owner.size(); ++c) owner[c] = map.region_of(c);
  return affine(gather_rows(H, std::move(owner)), W_h, B_h);
}

}  // namespace ltsgat::model
