#pragma once

// The full network: temporal attention per band -> BiLSTM over channels ->
// region embedding and attention -> node expansion -> GAT stack, with the
// classifier and (optionally) the domain discriminator on pooled features.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ltsgat/model/graph_attention.hpp"
#include "ltsgat/model/params.hpp"
#include "ltsgat/model/region_map.hpp"
#include "ltsgat/model/spatial_encoder.hpp"
#include "ltsgat/model/temporal_attention.hpp"
#include "ltsgat/signal/features.hpp"

namespace ltsgat::model {

struct ModelConfig {
  std::size_t n = 32;
  std::size_t k = 10;
  std::size_t d_b = 4;
  std::size_t d_h = 16;
  std::size_t region_dim = 0;  // m; 0 means 2 * d_h
  std::size_t node_dim = 0;    // F; 0 means gat_hidden
  std::size_t gat_hidden = 28;
  std::size_t heads = 2;
  std::size_t gat_layers = 4;
  std::size_t discriminator_hidden = 64;
  double leaky_slope = 0.2;
  bool disable_temporal = false;
  bool disable_spatial = false;
  bool domain_adaptation = true;

  std::size_t m() const { return region_dim == 0 ? 2 * d_h : region_dim; }
  std::size_t F() const { return node_dim == 0 ? gat_hidden : node_dim; }

  // Name of the ablation variant.
  std::string variant() const {
    std::string base = disable_temporal ? (disable_spatial ? "GAT" : "LS-GAT") : (disable_spatial ? "LT-GAT" : "LTS-GAT");
    return domain_adaptation ? base : base + "-DA";
  }

  void validate() const {
    auto positive = [](std::size_t v, const char* what) {
      if (v == 0) throw std::invalid_argument(std::string("model config: ") + what + " must be > 0");
    };
    positive(n, "n");
    positive(k, "k");
    positive(d_b, "d_b");
    positive(d_h, "d_h");
    positive(gat_hidden, "gat_hidden");
    positive(heads, "heads");
    positive(gat_layers, "gat_layers");
    positive(discriminator_hidden, "discriminator_hidden");
    if (!(leaky_slope >= 0.0)) throw std::invalid_argument("model config: leaky_slope must be >= 0");
  }
};

struct ForwardResult {
  std::vector<Var> node_features;                 // Z' per sample, n x F'
  Var pooled;                                     // B x F'
  std::vector<std::vector<Var>> temporal_weights;  // [sample][band] W_A, k x k
  std::vector<Var> region_weights;                // per sample W_r, N x N
  std::vector<std::vector<std::vector<Var>>> gat_coefficients;  // [sample][layer][head], n x n
};

class LtsGat {
 public:
  LtsGat(ModelConfig config, RegionMap map, GraphTopology topology)
      : config_(config), map_(std::move(map)), topology_(std::move(topology)) {
    config_.validate();
    if (map_.channel_count() != config_.n) {
      throw std::invalid_argument("model: region map covers " + std::to_string(map_.channel_count()) +
                                  " channels, config has n = " + std::to_string(config_.n));
    }
    if (topology_.size() != config_.n) {
      throw std::invalid_argument("model: topology has " + std::to_string(topology_.size()) + " nodes, config has n = " +
                                  std::to_string(config_.n));
    }
    const std::size_t width = config_.k * config_.d_b;
    if (!config_.disable_temporal) temporal_ = TemporalParams::add_to(params_, config_.n, config_.k);
    if (!config_.disable_spatial) {
      fwd_ = LstmDirectionParams::add_to(params_, "lstm.fwd", config_.d_h, width);
      bwd_ = LstmDirectionParams::add_to(params_, "lstm.bwd", config_.d_h, width);
      region_ = RegionParams::add_to(params_, map_, config_.d_h, config_.m());
      expand_ = ExpandParams::add_to(params_, config_.m(), config_.F());
    } else {
      project_ = {params_.add("project.W_p", width, config_.F(), Init::Glorot),
                  params_.add("project.B_p", 1, config_.F(), Init::Zero)};
    }
    gat_ = add_gat_params(params_, config_.F(), config_.gat_hidden, config_.heads, config_.gat_layers);
    classifier_ = ClassifierParams::add_to(params_, config_.gat_hidden);
    if (config_.domain_adaptation) {
      discriminator_ = DiscriminatorParams::add_to(params_, config_.gat_hidden, config_.discriminator_hidden);
    }
  }

  const ModelConfig& config() const noexcept { return config_; }
  const RegionMap& region_map() const noexcept { return map_; }
  const GraphTopology& topology() const noexcept { return topology_; }
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }
  std::size_t parameter_count() const { return params_.scalar_count(); }
  void initialize(std::uint64_t seed) { params_.initialize(seed); }

  bool has_discriminator() const noexcept { return discriminator_.has_value(); }
  const ClassifierParams& classifier() const noexcept { return classifier_; }
  const DiscriminatorParams& discriminator() const { return discriminator_.value(); }

  // Is parameter i part of the discriminator?
  bool is_discriminator_param(std::size_t i) const { return params_.name(i).rfind("discriminator.", 0) == 0; }

  ForwardResult forward(const BoundParameters& b, std::span<const signal::FeatureSample* const> batch) const {
    if (batch.empty()) throw std::invalid_argument("forward: empty batch");
    Graph& g = b.graph();
    ForwardResult out;
    std::vector<Var> inputs;
    std::optional<TemporalBound> tb;
    if (!config_.disable_temporal) tb = TemporalBound::bind(b, temporal_);
    for (const signal::FeatureSample* s : batch) {
      if (s->n != config_.n || s->k != config_.k || s->bands != config_.d_b) {
        throw ad::ShapeError("forward: sample of shape " + std::to_string(s->n) + "x" + std::to_string(s->k) + "x" +
                             std::to_string(s->bands) + " for a model expecting " + std::to_string(config_.n) + "x" +
                             std::to_string(config_.k) + "x" + std::to_string(config_.d_b));
      }
      std::vector<Var> bands;
      for (std::size_t band = 0; band < config_.d_b; ++band) bands.push_back(g.constant(s->band_slice(band)));
      if (tb) {
        TemporalOutput t = temporal_block(bands, *tb);
        inputs.push_back(t.features);
        out.temporal_weights.push_back(std::move(t.weights));
      } else {
        inputs.push_back(concat_cols(bands));
      }
    }

    std::vector<Var> nodes;
    if (!config_.disable_spatial) {
      const std::vector<Var> hidden =
          bilstm_batched(inputs, LstmDirection::bind(b, fwd_), LstmDirection::bind(b, bwd_));
      const RegionBound rb = RegionBound::bind(b, region_);
      const std::vector<Var> G = embed_regions(hidden, map_, rb);
      for (Var Gs : G) {
        const RegionAttention ra = region_attention(Gs, rb);
        out.region_weights.push_back(ra.weights);
        nodes.push_back(expand_to_nodes(ra.H, map_, b[expand_.W_h], b[expand_.B_h]));
      }
    } else {
      for (Var x : inputs) nodes.push_back(affine(x, b[project_.W_p], b[project_.B_p]));
    }

    const std::vector<GatLayer> layers = bind_gat(b, gat_);
    const GatContext ctx = GatContext::make(g, topology_, config_.leaky_slope);
    for (Var z : nodes) {
      out.gat_coefficients.emplace_back();
      out.node_features.push_back(gat_stack(z, layers, ctx, &out.gat_coefficients.back()));
    }
    out.pooled = pool_nodes(out.node_features);
    return out;
  }

  Var classify(const BoundParameters& b, Var pooled) const {
    return model::classify(pooled, b[classifier_.W_c], b[classifier_.b_c]);
  }

  Var discriminate(const BoundParameters& b, Var pooled, double lambda, bool reverse = true) const {
    return domain_discriminate(pooled, Discriminator::bind(b, discriminator()), lambda, config_.leaky_slope, reverse);
  }

 private:
  struct ProjectParams {
    ParamRef W_p, B_p;
  };

  ModelConfig config_;
  RegionMap map_;
  GraphTopology topology_;
  ParameterSet params_;
  TemporalParams temporal_{};
  LstmDirectionParams fwd_{}, bwd_{};
  RegionParams region_{};
  ExpandParams expand_{};
  ProjectParams project_{};
  std::vector<GatLayerParams> gat_;
  ClassifierParams classifier_{};
  std::optional<DiscriminatorParams> discriminator_;
};

}  // namespace ltsgat::model
