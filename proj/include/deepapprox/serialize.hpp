#pragma once

// JSON text format for networks (version 1):
// {version, input_dim, layers:[[{act, inputs:[{layer,index,weight}], bias, nonneg}]],
//  readout:{terms:[{layer,index,weight}], bias}, tags:{name:{layer,index}}}

#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "deepapprox/net_core.hpp"

namespace deepapprox {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson term_to_json(const Term& t) {
  return ojson{{"layer", t.source.layer}, {"index", t.source.index}, {"weight", t.weight}};
}

inline const ojson& field(const ojson& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key))
    throw ParseError(std::string("missing field '") + key + "'");
  return obj.at(key);
}

inline std::size_t index_field(const ojson& obj, const char* key) {
  const auto& v = field(obj, key);
  if (!v.is_number_unsigned()) throw ParseError(std::string("field '") + key + "' must be a nonnegative integer");
  return v.get<std::size_t>();
}

inline double number_field(const ojson& obj, const char* key) {
  const auto& v = field(obj, key);
  if (!v.is_number()) throw ParseError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

inline Term term_from_json(const ojson& j) {
  return {{index_field(j, "layer"), index_field(j, "index")}, number_field(j, "weight")};
}

}  // namespace detail

inline std::string serialize(const Network& net) {
  using detail::ojson;
  ojson layers = ojson::array();
  for (const auto& layer : net.layers()) {
    ojson row = ojson::array();
    for (const auto& n : layer) {
      ojson inputs = ojson::array();
      for (const auto& t : n.inputs) inputs.push_back(detail::term_to_json(t));
      row.push_back(ojson{{"act", to_string(n.act)}, {"inputs", std::move(inputs)}, {"bias", n.bias},
                          {"nonneg", n.nonneg}});
    }
    layers.push_back(std::move(row));
  }
  ojson terms = ojson::array();
  for (const auto& t : net.readout().terms) terms.push_back(detail::term_to_json(t));
  ojson tags = ojson::object();
  for (const auto& [name, ref] : net.tags()) tags[name] = ojson{{"layer", ref.layer}, {"index", ref.index}};

  ojson doc{{"version", 1},
            {"input_dim", net.input_dim()},
            {"layers", std::move(layers)},
            {"readout", ojson{{"terms", std::move(terms)}, {"bias", net.readout().bias}}},
            {"tags", std::move(tags)}};
  return doc.dump() + "\n";
}

/// Throws ParseError on malformed text, unknown version, unsupported
/// activations and dangling or forward references.
inline Network deserialize(const std::string& text) {
  using detail::ojson;
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed network text: ") + e.what());
  }
  const auto& version = detail::field(doc, "version");
  if (!version.is_number_integer() || version.get<long long>() != 1)
    throw ParseError("unsupported network format version " + version.dump());

  std::size_t input_dim = detail::index_field(doc, "input_dim");
  if (input_dim == 0) throw ParseError("input_dim must be positive");
  const auto& layers = detail::field(doc, "layers");
  if (!layers.is_array()) throw ParseError("'layers' must be an array");

  try {
    Network net(input_dim);
    std::size_t l = 0;
    for (const auto& row : layers) {
      ++l;
      if (!row.is_array() || row.empty()) throw ParseError("layer " + std::to_string(l) + " must be a nonempty array");
      for (const auto& jn : row) {
        Neuron n;
        const auto& act = detail::field(jn, "act");
        if (act == "relu") n.act = Activation::relu;
        else if (act == "step") n.act = Activation::step;
        else throw ParseError("unsupported activation " + act.dump());
        const auto& inputs = detail::field(jn, "inputs");
        if (!inputs.is_array()) throw ParseError("'inputs' must be an array");
        for (const auto& jt : inputs) {
          Term t = detail::term_from_json(jt);
          if (t.source.layer >= l)
            throw ParseError("neuron in layer " + std::to_string(l) + " references layer " +
                             std::to_string(t.source.layer));
          n.inputs.push_back(t);
        }
        n.bias = detail::number_field(jn, "bias");
        const auto& nonneg = detail::field(jn, "nonneg");
        if (!nonneg.is_boolean()) throw ParseError("'nonneg' must be a boolean");
        n.nonneg = nonneg.get<bool>();
        net.add_at(l, std::move(n));
      }
    }
    const auto& readout = detail::field(doc, "readout");
    AffineForm form;
    const auto& terms = detail::field(readout, "terms");
    if (!terms.is_array()) throw ParseError("'readout.terms' must be an array");
    for (const auto& jt : terms) form.terms.push_back(detail::term_from_json(jt));
    form.bias = detail::number_field(readout, "bias");
    net.set_readout(std::move(form));
    const auto& tags = detail::field(doc, "tags");
    if (!tags.is_object()) throw ParseError("'tags' must be an object");
    for (const auto& [name, jr] : tags.items())
      net.tag(name, {detail::index_field(jr, "layer"), detail::index_field(jr, "index")});
    net.validate();
    return net;
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed network text: ") + e.what());
  }
}

}  // namespace deepapprox
