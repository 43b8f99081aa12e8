#pragma once

// Feedforward networks of rectifier (relu) and binary step units with skip
// connections and an affine readout.

#include <algorithm>
#include <compare>
#include <functional>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace deepapprox {

enum class Activation { relu, step };

/// relu(v) = max(0, v); step(v) = 1 if v >= 0 else 0 (threshold inclusive).
inline double activate(Activation act, double v) {
  if (act == Activation::relu) return v > 0.0 ? v : 0.0;
  return v >= 0.0 ? 1.0 : 0.0;
}

inline const char* to_string(Activation act) {
  return act == Activation::relu ? "relu" : "step";
}

/// Layer 0 is the external input vector; hidden layers are numbered from 1.
struct NodeRef {
  std::size_t layer = 0;
  std::size_t index = 0;
  auto operator<=>(const NodeRef&) const = default;
};

struct Term {
  NodeRef source;
  double weight = 0.0;
};

/// bias + sum(weight * value(source)). Accumulation starts at the bias and
/// proceeds through the terms in order; builders rely on this order to keep
/// dyadic arithmetic exact.
struct AffineForm {
  std::vector<Term> terms;
  double bias = 0.0;

  AffineForm scaled(double s) const {
    AffineForm out{terms, bias * s};
    for (auto& t : out.terms) t.weight *= s;
    return out;
  }
  AffineForm& operator+=(const AffineForm& other) {
    terms.insert(terms.end(), other.terms.begin(), other.terms.end());
    bias += other.bias;
    return *this;
  }
};

struct Neuron {
  Activation act = Activation::relu;
  std::vector<Term> inputs;
  double bias = 0.0;
  /// Set by builders when the output is known to be >= 0; never inferred.
  bool nonneg = false;
};

struct Counts {
  std::size_t depth = 0;
  std::size_t relu = 0;
  std::size_t step = 0;
  std::size_t total = 0;
  bool operator==(const Counts&) const = default;
};

class Network {
 public:
  explicit Network(std::size_t input_dim) : input_dim_(input_dim) {
    if (input_dim == 0) throw std::invalid_argument("network input_dim must be positive");
  }

  std::size_t input_dim() const { return input_dim_; }
  std::size_t depth() const { return layers_.size(); }
  /// layers()[l - 1] holds hidden layer l.
  const std::vector<std::vector<Neuron>>& layers() const { return layers_; }
  const AffineForm& readout() const { return readout_; }
  const std::map<std::string, NodeRef>& tags() const { return tags_; }

  NodeRef input(std::size_t i) const {
    if (i >= input_dim_) throw std::out_of_range("input index out of range");
    return {0, i};
  }

  const Neuron& neuron(NodeRef ref) const {
    check_ref(ref, depth() + 1);
    if (ref.layer == 0) throw std::invalid_argument("layer 0 is the input vector, not a neuron");
    return layers_[ref.layer - 1][ref.index];
  }

  NodeRef tagged(const std::string& name) const {
    auto it = tags_.find(name);
    if (it == tags_.end()) throw std::out_of_range("no tag named '" + name + "'");
    return it->second;
  }

  /// Appends the neuron one layer past its deepest source.
  NodeRef add(Neuron n) {
    std::size_t deepest = 0;
    for (const auto& t : n.inputs) deepest = std::max(deepest, t.source.layer);
    return add_at(deepest + 1, std::move(n));
  }

  NodeRef add_at(std::size_t layer, Neuron n) {
    if (layer == 0 || layer > depth() + 1)
      throw std::invalid_argument("neuron layer must be in [1, depth + 1]");
    for (const auto& t : n.inputs) {
      if (t.source.layer >= layer)
        throw std::invalid_argument("neuron input must come from an earlier layer");
      check_ref(t.source, depth() + 1);
    }
    if (layer == depth() + 1) layers_.emplace_back();
    auto& row = layers_[layer - 1];
    row.push_back(std::move(n));
    return {layer, row.size() - 1};
  }

  void set_readout(AffineForm form) {
    for (const auto& t : form.terms) check_ref(t.source, depth() + 1);
    readout_ = std::move(form);
  }

  void tag(const std::string& name, NodeRef ref) {
    check_ref(ref, depth() + 1);
    tags_[name] = ref;
  }

  /// Throws std::invalid_argument when a structural invariant is broken.
  void validate() const {
    if (layers_.empty()) throw std::invalid_argument("network needs at least one hidden layer");
    for (std::size_t l = 1; l <= layers_.size(); ++l) {
      if (layers_[l - 1].empty())
        throw std::invalid_argument("hidden layer " + std::to_string(l) + " is empty");
      for (const auto& n : layers_[l - 1])
        for (const auto& t : n.inputs) {
          if (t.source.layer >= l)
            throw std::invalid_argument("neuron in layer " + std::to_string(l) +
                                        " reads from layer " + std::to_string(t.source.layer));
          check_ref(t.source, l);
        }
    }
    for (const auto& t : readout_.terms) check_ref(t.source, depth() + 1);
    for (const auto& [name, ref] : tags_) check_ref(ref, depth() + 1);
  }

 private:
  // Valid refs have layer < layer_limit and an index inside that layer.
  void check_ref(NodeRef ref, std::size_t layer_limit) const {
    if (ref.layer >= layer_limit || ref.layer > layers_.size())
      throw std::invalid_argument("dangling node reference (layer " + std::to_string(ref.layer) + ")");
    std::size_t width = ref.layer == 0 ? input_dim_ : layers_[ref.layer - 1].size();
    if (ref.index >= width)
      throw std::invalid_argument("dangling node reference (layer " + std::to_string(ref.layer) +
                                  ", index " + std::to_string(ref.index) + ")");
  }

  std::size_t input_dim_;
  std::vector<std::vector<Neuron>> layers_;
  AffineForm readout_;
  std::map<std::string, NodeRef> tags_;
};

inline Counts count(const Network& net) {
  Counts c;
  c.depth = net.depth();
  for (const auto& layer : net.layers())
    for (const auto& n : layer) (n.act == Activation::relu ? c.relu : c.step)++;
  c.total = c.relu + c.step;
  return c;
}

/// Flattened copy of a network for repeated forward passes. Holds scratch
/// space, so one instance per thread.
class Evaluator {
 public:
  explicit Evaluator(const Network& net) : input_dim_(net.input_dim()) {
    net.validate();
    offsets_.push_back(0);
    offsets_.push_back(input_dim_);
    for (const auto& layer : net.layers()) offsets_.push_back(offsets_.back() + layer.size());
    values_.assign(offsets_.back(), 0.0);
    for (const auto& layer : net.layers())
      for (const auto& n : layer) {
        units_.push_back({n.act, n.bias, sources_.size(), sources_.size() + n.inputs.size()});
        for (const auto& t : n.inputs) {
          sources_.push_back(id(t.source));
          weights_.push_back(t.weight);
        }
      }
    readout_bias_ = net.readout().bias;
    for (const auto& t : net.readout().terms) {
      readout_sources_.push_back(id(t.source));
      readout_weights_.push_back(t.weight);
    }
  }

  /// Forward pass; returns the readout value.
  double operator()(std::span<const double> x) {
    run(x);
    double acc = readout_bias_;
    for (std::size_t k = 0; k < readout_sources_.size(); ++k)
      acc += readout_weights_[k] * values_[readout_sources_[k]];
    return acc;
  }

  double operator()(double x) { return (*this)(std::span<const double>(&x, 1)); }

  /// Forward pass without the readout; node values stay available via value().
  void run(std::span<const double> x) {
    if (x.size() != input_dim_)
      throw std::invalid_argument("input has dimension " + std::to_string(x.size()) +
                                  ", network expects " + std::to_string(input_dim_));
    std::copy(x.begin(), x.end(), values_.begin());
    double* out = values_.data() + input_dim_;
    for (const auto& u : units_) {
      double acc = u.bias;
      for (std::size_t k = u.begin; k < u.end; ++k) acc += weights_[k] * values_[sources_[k]];
      *out++ = activate(u.act, acc);
    }
  }

  double value(NodeRef ref) const { return values_[id(ref)]; }

  double value(const AffineForm& form) const {
    double acc = form.bias;
    for (const auto& t : form.terms) acc += t.weight * value(t.source);
    return acc;
  }

 private:
  struct Unit {
    Activation act;
    double bias;
    std::size_t begin, end;
  };

  std::size_t id(NodeRef ref) const { return offsets_[ref.layer] + ref.index; }

  std::size_t input_dim_;
  std::vector<std::size_t> offsets_;
  std::vector<Unit> units_;
  std::vector<std::size_t> sources_;
  std::vector<double> weights_;
  std::vector<std::size_t> readout_sources_;
  std::vector<double> readout_weights_;
  double readout_bias_ = 0.0;
  std::vector<double> values_;
};

inline double eval(const Network& net, std::span<const double> x) {
  Evaluator ev(net);
  return ev(x);
}

inline double eval(const Network& net, double x) { return eval(net, std::span<const double>(&x, 1)); }

/// Rewrites the network so every neuron and the readout read only from the
/// adjacent layer. Skipped values are carried by relu passthroughs: one unit
/// per layer for sources marked nonneg, a (relu(v), relu(-v)) pair otherwise.
/// External inputs are treated as signed. Existing NodeRefs and tags stay valid.
inline Network to_strict(const Network& net) {
  net.validate();
  Network out(net.input_dim());
  for (std::size_t l = 1; l <= net.depth(); ++l)
    for (const auto& n : net.layers()[l - 1]) {
      Neuron copy = n;
      copy.inputs.clear();
      out.add_at(l, std::move(copy));
    }

  // carriers[(source, layer)] = nodes holding the source's value at that layer
  std::map<std::pair<NodeRef, std::size_t>, std::vector<Term>> carriers;
  auto signed_source = [&](NodeRef src) {
    return src.layer == 0 || !net.neuron(src).nonneg;
  };

  std::function<std::vector<Term>(NodeRef, std::size_t)> carry = [&](NodeRef src, std::size_t layer) {
    if (src.layer == layer) return std::vector<Term>{{src, 1.0}};
    auto key = std::make_pair(src, layer);
    if (auto it = carriers.find(key); it != carriers.end()) return it->second;
    std::vector<Term> result;
    if (layer == src.layer + 1 && signed_source(src)) {
      NodeRef pos = out.add_at(layer, Neuron{Activation::relu, {{src, 1.0}}, 0.0, true});
      NodeRef neg = out.add_at(layer, Neuron{Activation::relu, {{src, -1.0}}, 0.0, true});
      result = {{pos, 1.0}, {neg, -1.0}};
    } else {
      for (const auto& prev : carry(src, layer - 1)) {
        NodeRef pass = out.add_at(layer, Neuron{Activation::relu, {{prev.source, 1.0}}, 0.0, true});
        result.push_back({pass, prev.weight});
      }
    }
    carriers[key] = result;
    return result;
  };

  auto rewire = [&](const std::vector<Term>& terms, std::size_t target_layer) {
    std::vector<Term> rewired;
    for (const auto& t : terms) {
      if (t.source.layer + 1 == target_layer) {
        rewired.push_back(t);
        continue;
      }
      for (const auto& c : carry(t.source, target_layer - 1))
        rewired.push_back({c.source, t.weight * c.weight});
    }
    return rewired;
  };

  // Work from the top down so carriers never need layers that are still empty.
  std::vector<std::vector<std::vector<Term>>> wiring(net.depth());
  for (std::size_t l = net.depth(); l >= 1; --l) {
    const auto& layer = net.layers()[l - 1];
    wiring[l - 1].resize(layer.size());
    for (std::size_t i = 0; i < layer.size(); ++i) wiring[l - 1][i] = rewire(layer[i].inputs, l);
  }
  AffineForm readout{rewire(net.readout().terms, net.depth() + 1), net.readout().bias};

  // Rebuild with the final wiring; passthroughs created above keep their indices.
  Network strict(net.input_dim());
  for (std::size_t l = 1; l <= out.depth(); ++l) {
    const auto& row = out.layers()[l - 1];
    for (std::size_t i = 0; i < row.size(); ++i) {
      Neuron n = row[i];
      if (i < net.layers()[l - 1].size()) n.inputs = wiring[l - 1][i];
      strict.add_at(l, std::move(n));
    }
  }
  strict.set_readout(std::move(readout));
  for (const auto& [name, ref] : net.tags()) strict.tag(name, ref);
  strict.validate();
  return strict;
}

}  // namespace deepapprox
