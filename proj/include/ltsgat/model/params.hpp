#pragma once

// Named parameter registry with a stable order, and its binding into a graph.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "ltsgat/autodiff/graph.hpp"

namespace ltsgat::model {

using ad::Graph;
using ad::Matrix;
using ad::Var;
using ad::concat_cols;
using ad::concat_rows;

enum class Init : std::uint8_t { Glorot, Zero };

struct ParamRef {
  std::size_t index = 0;
};

class ParameterSet {
 public:
  ParamRef add(std::string name, std::size_t rows, std::size_t cols, Init init) {
    if (lookup_.contains(name)) throw std::invalid_argument("parameter '" + name + "' registered twice");
    lookup_.emplace(name, names_.size());
    names_.push_back(std::move(name));
    values_.emplace_back(rows, cols);
    inits_.push_back(init);
    return {names_.size() - 1};
  }

  // Weights uniform in +-sqrt(6 / (rows + cols)), biases zero; registry order.
  void initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < values_.size(); ++i) {
      Matrix& m = values_[i];
      if (inits_[i] == Init::Zero) {
        m.fill(0.0);
        continue;
      }
      const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
      std::uniform_real_distribution<double> u(-limit, limit);
      for (double& v : m.data()) v = u(rng);
    }
  }

  std::size_t size() const noexcept { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  Matrix& value(std::size_t i) { return values_.at(i); }
  const Matrix& value(std::size_t i) const { return values_.at(i); }
  Matrix& operator[](ParamRef r) { return values_.at(r.index); }
  const Matrix& operator[](ParamRef r) const { return values_.at(r.index); }
  std::vector<Matrix>& values() noexcept { return values_; }
  const std::vector<Matrix>& values() const noexcept { return values_; }

  ParamRef ref(const std::string& name) const {
    auto it = lookup_.find(name);
    if (it == lookup_.end()) throw std::out_of_range("no parameter named '" + name + "'");
    return {it->second};
  }
  bool contains(const std::string& name) const { return lookup_.contains(name); }

  std::size_t scalar_count() const {
    std::size_t total = 0;
    for (const Matrix& m : values_) total += m.size();
    return total;
  }

  // Concatenated values in registry order.
  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(scalar_count());
    for (const Matrix& m : values_) out.insert(out.end(), m.data().begin(), m.data().end());
    return out;
  }

  void unflatten(std::span<const double> flat) {
    if (flat.size() != scalar_count()) {
      throw std::invalid_argument("parameter blob holds " + std::to_string(flat.size()) + " values, expected " +
                                  std::to_string(scalar_count()));
    }
    std::size_t at = 0;
    for (Matrix& m : values_) {
      for (double& v : m.data()) v = flat[at++];
    }
  }

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
  std::vector<Init> inits_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

// Every parameter as a graph leaf. `trainable=false` binds them as constants.
class BoundParameters {
 public:
  BoundParameters(Graph& g, const ParameterSet& set, bool trainable = true) : graph_(&g) {
    vars_.reserve(set.size());
    for (const Matrix& m : set.values()) vars_.push_back(trainable ? g.variable(m) : g.constant(m));
  }

  // Adopts existing leaves, one per registry entry, in registry order.
  BoundParameters(Graph& g, std::vector<Var> vars) : graph_(&g), vars_(std::move(vars)) {}

  Var operator[](ParamRef r) const { return vars_.at(r.index); }
  Graph& graph() const noexcept { return *graph_; }
  std::size_t size() const noexcept { return vars_.size(); }

  std::vector<Matrix> gradients() const {
    std::vector<Matrix> out;
    out.reserve(vars_.size());
    for (Var v : vars_) out.push_back(graph_->grad(v));
    return out;
  }

 private:
  Graph* graph_;
  std::vector<Var> vars_;
};

}  // namespace ltsgat::model
