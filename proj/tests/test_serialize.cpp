#include <gtest/gtest.h>

#include <cstring>
#include <string>

#include "deepapprox/serialize.hpp"
#include "deepapprox/uni_builder.hpp"

using namespace deepapprox;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

void expect_identical(const Network& a, const Network& b) {
  ASSERT_EQ(a.input_dim(), b.input_dim());
  ASSERT_EQ(a.depth(), b.depth());
  for (std::size_t l = 0; l < a.depth(); ++l) {
    ASSERT_EQ(a.layers()[l].size(), b.layers()[l].size());
    for (std::size_t i = 0; i < a.layers()[l].size(); ++i) {
      const Neuron& x = a.layers()[l][i];
      const Neuron& y = b.layers()[l][i];
      EXPECT_EQ(x.act, y.act);
      EXPECT_EQ(x.nonneg, y.nonneg);
      EXPECT_TRUE(same_bits(x.bias, y.bias));
      ASSERT_EQ(x.inputs.size(), y.inputs.size());
      for (std::size_t k = 0; k < x.inputs.size(); ++k) {
        EXPECT_EQ(x.inputs[k].source, y.inputs[k].source);
        EXPECT_TRUE(same_bits(x.inputs[k].weight, y.inputs[k].weight));
      }
    }
  }
  ASSERT_EQ(a.readout().terms.size(), b.readout().terms.size());
  EXPECT_TRUE(same_bits(a.readout().bias, b.readout().bias));
  for (std::size_t k = 0; k < a.readout().terms.size(); ++k) {
    EXPECT_EQ(a.readout().terms[k].source, b.readout().terms[k].source);
    EXPECT_TRUE(same_bits(a.readout().terms[k].weight, b.readout().terms[k].weight));
  }
  EXPECT_EQ(a.tags(), b.tags());
}

const char* tiny =
    R"({"version":1,"input_dim":1,"layers":[[{"act":"relu","inputs":[{"layer":0,"index":0,"weight":1.0}],"bias":0.0,"nonneg":false}]],"readout":{"terms":[{"layer":1,"index":0,"weight":1.0}],"bias":0.0},"tags":{}})";

}  // namespace

TEST(Serialize, RoundTripSquareNet) {
  Built sq = build_square(1.0 / 64);
  std::string text = serialize(sq.net);
  Network back = deserialize(text);
  expect_identical(sq.net, back);
  EXPECT_EQ(serialize(back), text);
}

TEST(Serialize, RoundTripAwkwardWeights) {
  Network net(2);
  NodeRef a = net.add(Neuron{Activation::relu, {{net.input(0), 0.1}, {net.input(1), 1.0 / 3.0}}, -1e-300, false});
  NodeRef b = net.add(Neuron{Activation::step, {{a, 5e-324}, {net.input(1), -2.5e17}}, 0.7, true});
  net.set_readout({{{b, std::nextafter(1.0, 2.0)}, {a, -0.0}}, 1e300});
  net.tag("b", b);
  Network back = deserialize(serialize(net));
  expect_identical(net, back);
}

TEST(Serialize, ParsesMinimalDocument) {
  Network net = deserialize(tiny);
  EXPECT_EQ(eval(net, 0.3), 0.3);
}

TEST(Serialize, RejectsForwardReference) {
  std::string text = tiny;
  text.replace(text.find("\"layer\":0"), 9, "\"layer\":1");
  EXPECT_THROW(deserialize(text), ParseError);
}

TEST(Serialize, RejectsUnknownActivation) {
  std::string text = tiny;
  text.replace(text.find("relu"), 4, "tanh");
  EXPECT_THROW(deserialize(text), ParseError);
}

TEST(Serialize, RejectsUnknownVersion) {
  std::string text = tiny;
  text.replace(text.find("\"version\":1"), 11, "\"version\":2");
  EXPECT_THROW(deserialize(text), ParseError);
}

TEST(Serialize, RejectsDanglingReadout) {
  std::string text = tiny;
  text.replace(text.find("\"layer\":1,\"index\":0"), 19, "\"layer\":1,\"index\":4");
  EXPECT_THROW(deserialize(text), ParseError);
}

TEST(Serialize, RejectsMalformedText) {
  EXPECT_THROW(deserialize("{\"version\":1,"), ParseError);
  EXPECT_THROW(deserialize("[]"), ParseError);
  EXPECT_THROW(deserialize(std::string(tiny).substr(0, 60)), ParseError);
}
