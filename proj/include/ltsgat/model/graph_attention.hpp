#pragma once

// Multi-head graph attention stack, emotion classifier, gradient-reversed
// domain discriminator and the composed training loss.

#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "ltsgat/model/params.hpp"

namespace ltsgat::model {

class TopologyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Neighbour sets N_i with self-loops, symmetric.
class GraphTopology {
 public:
  static GraphTopology full(std::size_t n) {
    GraphTopology t;
    t.n_ = n;
    t.full_ = true;
    t.neighbors_.assign(n, {});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) t.neighbors_[i].push_back(j);
    return t;
  }

  // Self-loops are added; asymmetric input is rejected.
  static GraphTopology from_neighbors(std::vector<std::vector<std::size_t>> neighbors) {
    GraphTopology t;
    t.n_ = neighbors.size();
    std::vector<std::vector<bool>> adj(t.n_, std::vector<bool>(t.n_, false));
    for (std::size_t i = 0; i < t.n_; ++i) {
      adj[i][i] = true;
      for (std::size_t j : neighbors[i]) {
        if (j >= t.n_) throw TopologyError("topology: neighbour " + std::to_string(j) + " out of range");
        adj[i][j] = true;
      }
    }
    t.neighbors_.assign(t.n_, {});
    bool complete = true;
    for (std::size_t i = 0; i < t.n_; ++i) {
      for (std::size_t j = 0; j < t.n_; ++j) {
        if (adj[i][j] != adj[j][i]) {
          throw TopologyError("topology: edge " + std::to_string(i) + "-" + std::to_string(j) + " is not symmetric");
        }
        if (adj[i][j]) t.neighbors_[i].push_back(j);
        complete = complete && adj[i][j];
      }
    }
    t.full_ = complete;
    return t;
  }

  // Channels i, j are neighbours when their Euclidean distance is <= threshold.
  static GraphTopology distance(const std::vector<std::array<double, 3>>& coords, double threshold) {
    std::vector<std::vector<std::size_t>> nb(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i) {
      for (std::size_t j = 0; j < coords.size(); ++j) {
        double d2 = 0.0;
        for (int a = 0; a < 3; ++a) d2 += (coords[i][a] - coords[j][a]) * (coords[i][a] - coords[j][a]);
        if (std::sqrt(d2) <= threshold) nb[i].push_back(j);
      }
    }
    return from_neighbors(std::move(nb));
  }

  static GraphTopology from_json(const nlohmann::json& j, std::size_t n) {
    try {
      const std::string mode = j.at("mode").get<std::string>();
      if (mode == "full") return full(n);
      if (mode == "neighbors") {
        auto nb = j.at("neighbors").get<std::vector<std::vector<std::size_t>>>();
        if (nb.size() != n) {
          throw TopologyError("topology: " + std::to_string(nb.size()) + " neighbour lists for " + std::to_string(n) +
                              " channels");
        }
        return from_neighbors(std::move(nb));
      }
      if (mode != "distance") throw TopologyError("topology: unknown mode '" + mode + "'");
      if (!j.contains("coords")) throw TopologyError("topology: distance mode needs coords");
      const auto coords = j.at("coords").get<std::vector<std::array<double, 3>>>();
      if (coords.size() != n) {
        throw TopologyError("topology: " + std::to_string(coords.size()) + " coordinates for " + std::to_string(n) +
                            " channels");
      }
      return distance(coords, j.at("threshold").get<double>());
    } catch (const nlohmann::json::exception& e) {
      throw TopologyError(std::string("topology: malformed JSON: ") + e.what());
    }
  }

  static GraphTopology load(const std::string& path, std::size_t n) {
    std::ifstream in(path);
    if (!in) throw TopologyError("topology: cannot open " + path);
    try {
      return from_json(nlohmann::json::parse(in), n);
    } catch (const nlohmann::json::exception& e) {
      throw TopologyError("topology: " + path + ": " + e.what());
    }
  }

  nlohmann::json to_json() const {
    if (full_) return {{"mode", "full"}};
    return {{"mode", "neighbors"}, {"neighbors", neighbors_}};
  }

  std::size_t size() const noexcept { return n_; }
  bool is_full() const noexcept { return full_; }
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_.at(i); }

  // Additive score mask: 0 on edges, a large negative constant elsewhere.
  Matrix mask() const {
    Matrix m(n_, n_, kMasked);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j : neighbors_[i]) m(i, j) = 0.0;
    return m;
  }

  static constexpr double kMasked = -1e30;

 private:
  std::size_t n_ = 0;
  bool full_ = true;
  std::vector<std::vector<std::size_t>> neighbors_;
};

struct GatHeadParams {
  ParamRef W_s;  // F_in x F'
  ParamRef a_v;  // 2F' x 1
};

using GatLayerParams = std::vector<GatHeadParams>;

inline std::vector<GatLayerParams> add_gat_params(ParameterSet& set, std::size_t F, std::size_t F_out,
                                                  std::size_t heads, std::size_t layers) {
  if (heads < 1) throw std::invalid_argument("gat: heads must be >= 1");
  if (layers < 1) throw std::invalid_argument("gat: layers must be >= 1");
  std::vector<GatLayerParams> out(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t h = 0; h < heads; ++h) {
      const std::string prefix = "gat." + std::to_string(l) + "." + std::to_string(h);
      out[l].push_back({set.add(prefix + ".W_s", l == 0 ? F : F_out, F_out, Init::Glorot),
                        set.add(prefix + ".a_v", 2 * F_out, 1, Init::Glorot)});
    }
  }
  return out;
}

struct GatHead {
  Var W_s, a_src, a_dst;

  static GatHead bind(const BoundParameters& b, const GatHeadParams& p) {
    const Var a = b[p.a_v];
    const std::size_t F = a.rows() / 2;
    std::vector<std::size_t> lo(F), hi(F);
    for (std::size_t i = 0; i < F; ++i) {
      lo[i] = i;
      hi[i] = F + i;
    }
    return {b[p.W_s], gather_rows(a, std::move(lo)), gather_rows(a, std::move(hi))};
  }
};

using GatLayer = std::vector<GatHead>;

inline std::vector<GatLayer> bind_gat(const BoundParameters& b, const std::vector<GatLayerParams>& p) {
  std::vector<GatLayer> out;
  for (const auto& layer : p) {
    GatLayer l;
    for (const auto& h : layer) l.push_back(GatHead::bind(b, h));
    out.push_back(std::move(l));
  }
  return out;
}

struct GatContext {
  const GraphTopology* topology = nullptr;
  Var mask;  // unset for the full topology
  double slope = 0.2;

  static GatContext make(Graph& g, const GraphTopology& topo, double slope) {
    GatContext c;
    c.topology = &topo;
    c.slope = slope;
    if (!topo.is_full()) c.mask = g.constant(topo.mask());
    return c;
  }
};

struct HeadOutput {
  Var projected;     // W_s z_j for every node, n x F'
  Var coefficients;  // n x n, row i supported on N_i and summing to 1
};

// e_ij = LeakyReLU(a_src . W_s z_i + a_dst . W_s z_j), softmax over j in N_i.
inline HeadOutput gat_coeffs(Var Z, const GatHead& head, const GatContext& ctx) {
  if (Z.cols() != head.W_s.rows()) {
    throw ad::ShapeError("gat: node features " + Z.value().shape() + " vs W_s " + head.W_s.value().shape());
  }
  if (Z.rows() != ctx.topology->size()) {
    throw ad::ShapeError("gat: " + std::to_string(Z.rows()) + " nodes, topology has " +
                         std::to_string(ctx.topology->size()));
  }
  Graph& g = *Z.graph();
  const std::size_t n = Z.rows();
  const Var Wz = matmul(Z, head.W_s);
  const Var src = matmul(Wz, head.a_src);
  const Var dst = matmul(Wz, head.a_dst);
  Var e = leaky_relu(affine(src, g.constant(Matrix(1, n, 1.0)), transpose(dst)), ctx.slope);
  if (ctx.mask.valid()) e = add(e, ctx.mask);
  return {Wz, softmax(e, ad::Axis::Cols)};
}

struct GatLayerOutput {
  Var Z;
  std::vector<Var> coefficients;  // per head
};

// z'_i = LeakyReLU((1/K) sum_h sum_j a^h_ij W_s^h z_j).
inline GatLayerOutput gat_layer(Var Z, const GatLayer& heads, const GatContext& ctx) {
  if (heads.empty()) throw std::invalid_argument("gat_layer: heads must be >= 1");
  GatLayerOutput out;
  Var total;
  for (const GatHead& h : heads) {
    const HeadOutput ho = gat_coeffs(Z, h, ctx);
    const Var agg = matmul(ho.coefficients, ho.projected);
    total = total.valid() ? add(total, agg) : agg;
    out.coefficients.push_back(ho.coefficients);
  }
  out.Z = leaky_relu(scale(total, 1.0 / static_cast<double>(heads.size())), ctx.slope);
  return out;
}

inline Var gat_stack(Var Z, const std::vector<GatLayer>& layers, const GatContext& ctx,
                     std::vector<std::vector<Var>>* coefficients = nullptr) {
  for (const GatLayer& l : layers) {
    GatLayerOutput o = gat_layer(Z, l, ctx);
    Z = o.Z;
    if (coefficients != nullptr) coefficients->push_back(std::move(o.coefficients));
  }
  return Z;
}

// Mean over nodes of each sample, stacked: B x F'.
inline Var pool_nodes(std::span<const Var> node_features) {
  std::vector<Var> rows;
  for (Var z : node_features) rows.push_back(mean(z, ad::Axis::Rows));
  return concat_rows(rows);
}

struct ClassifierParams {
  ParamRef W_c, b_c;

  static ClassifierParams add_to(ParameterSet& set, std::size_t F) {
    return {set.add("classifier.W_c", F, 2, Init::Glorot), set.add("classifier.b_c", 1, 2, Init::Zero)};
  }
};

// Row-wise class probabilities from pooled features.
inline Var classify(Var pooled, Var W_c, Var b_c) {
  return softmax(affine(pooled, W_c, b_c), ad::Axis::Cols);
}

// Mean cross-entropy -ln p[y] over the rows of a B x 2 probability matrix.
inline Var classification_loss(Var probs, std::span<const int> labels) {
  if (labels.empty()) throw std::invalid_argument("classification_loss: empty batch");
  if (labels.size() != probs.rows() || probs.cols() != 2) {
    throw ad::ShapeError("classification_loss: " + std::to_string(labels.size()) + " labels for probabilities " +
                         probs.value().shape());
  }
  Matrix onehot(labels.size(), 2);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("classification_loss: label not in {0, 1}");
    onehot(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  Graph& g = *probs.graph();
  const Var picked = scale(mean(hadamard(probs, g.constant(std::move(onehot))), ad::Axis::Cols), 2.0);
  return scale(sum(log(picked)), -1.0 / static_cast<double>(labels.size()));
}

struct DiscriminatorParams {
  ParamRef W_1, b_1, W_2, b_2;

  static DiscriminatorParams add_to(ParameterSet& set, std::size_t F, std::size_t hidden) {
    DiscriminatorParams p;
    p.W_1 = set.add("discriminator.W_1", F, hidden, Init::Glorot);
    p.b_1 = set.add("discriminator.b_1", 1, hidden, Init::Zero);
    p.W_2 = set.add("discriminator.W_2", hidden, 2, Init::Glorot);
    p.b_2 = set.add("discriminator.b_2", 1, 2, Init::Zero);
    return p;
  }
};

struct Discriminator {
  Var W_1, b_1, W_2, b_2;

  static Discriminator bind(const BoundParameters& b, const DiscriminatorParams& p) {
    return {b[p.W_1], b[p.b_1], b[p.W_2], b[p.b_2]};
  }
};

// softmax(affine_2(LeakyReLU(affine_1(R_lambda(pooled))))). With
// `reverse = false` the reversal layer is omitted.
inline Var domain_discriminate(Var pooled, const Discriminator& d, double lambda, double slope,
                               bool reverse = true) {
  const Var in = reverse ? grad_reverse(pooled, lambda) : pooled;
  const Var hidden = leaky_relu(affine(in, d.W_1, d.b_1), slope);
  return softmax(affine(hidden, d.W_2, d.b_2), ad::Axis::Cols);
}

// L_c on source rows plus L_d on source (domain 0) and target (domain 1).
inline Var total_loss(Var source_pooled, std::span<const int> labels, Var W_c, Var b_c, Var target_pooled,
                      const Discriminator& d, double lambda, double slope) {
  if (source_pooled.cols() != target_pooled.cols()) {
    throw ad::ShapeError("total_loss: source features " + source_pooled.value().shape() + " vs target " +
                         target_pooled.value().shape());
  }
  const Var lc = classification_loss(classify(source_pooled, W_c, b_c), labels);
  std::vector<int> domains(source_pooled.rows(), 0);
  domains.resize(source_pooled.rows() + target_pooled.rows(), 1);
  const Var probs = domain_discriminate(concat_rows({source_pooled, target_pooled}), d, lambda, slope);
  return add(lc, classification_loss(probs, domains));
}

}  // namespace ltsgat::model
