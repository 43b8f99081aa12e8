#pragma once

// Binary expansion of a scalar in [0,1] with step units.
//
// bit_i = step(t - sum_{j<i} 2^-j bit_j - 2^-i), where t is an affine form of
// earlier nodes (usually the raw input). The residual is folded into each bit's
// affine map, so the fragment is a chain of step units joined by skip
// connections. All the dyadic terms are accumulated before t, which keeps the
// comparison exact when t is a single input.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepapprox/net_core.hpp"

namespace deepapprox {

/// floor(x * 2^n) / 2^n; exact for doubles. truncate(1, n) == 1.
inline double truncate(double x, int n) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("truncate expects x in [0,1]");
  if (n < 0) throw std::invalid_argument("truncate expects n >= 0");
  return std::ldexp(std::floor(std::ldexp(x, n)), -n);
}

struct DecoderFragment {
  /// bits[k] holds the coefficient of 2^-(first_bit + k).
  std::vector<NodeRef> bits;
  int first_bit = 0;
  int bit_count = 0;

  /// sum_i 2^-i bit_i, the truncated input.
  AffineForm truncation() const {
    AffineForm form;
    for (std::size_t k = 0; k < bits.size(); ++k)
      form.terms.push_back({bits[k], std::ldexp(1.0, -(first_bit + static_cast<int>(k)))});
    return form;
  }

  NodeRef bit(int i) const { return bits.at(static_cast<std::size_t>(i - first_bit)); }
};

/// Adds step units for bits first_bit..n of the affine input t and tags them
/// prefix + "bit_i". With first_bit = 0 the truncation equals truncate(t, n)
/// for t in [0,1]. With first_bit = 1 only fractional bits are emitted; t = 1
/// then decodes to 1 - 2^-n, which keeps the error below 2^-n with one unit
/// fewer. Negative t decodes to 0.
inline DecoderFragment add_decoder(Network& net, const AffineForm& t, int n, const std::string& prefix = "",
                                   int first_bit = 0) {
  if (n < 0) throw std::invalid_argument("decoder bit count must be nonnegative");
  if (first_bit < 0 || first_bit > std::max(n, 1))
    throw std::invalid_argument("decoder first bit out of range");
  DecoderFragment frag;
  frag.first_bit = first_bit;
  frag.bit_count = n;
  for (int i = first_bit; i <= n; ++i) {
    Neuron unit;
    unit.act = Activation::step;
    unit.bias = t.bias - std::ldexp(1.0, -i);
    for (std::size_t k = 0; k < frag.bits.size(); ++k)
      unit.inputs.push_back({frag.bits[k], -std::ldexp(1.0, -(first_bit + static_cast<int>(k)))});
    unit.inputs.insert(unit.inputs.end(), t.terms.begin(), t.terms.end());
    unit.nonneg = true;
    NodeRef ref = net.add(std::move(unit));
    net.tag(prefix + "bit_" + std::to_string(i), ref);
    frag.bits.push_back(ref);
  }
  return frag;
}

struct DecoderNet {
  Network net;
  DecoderFragment fragment;
};

/// Standalone decoder on a scalar input; the readout is the truncation.
inline DecoderNet build_decoder(int n) {
  Network net(1);
  AffineForm x{{{net.input(0), 1.0}}, 0.0};
  DecoderFragment frag = add_decoder(net, x, n);
  net.set_readout(frag.truncation());
  return {std::move(net), std::move(frag)};
}

}  // namespace deepapprox
