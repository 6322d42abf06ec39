#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "rrn/error.hpp"
#include "rrn/rrn_model.hpp"

using namespace rrn;
using test::check_sequential;

namespace {

Sequential stack(std::vector<LayerSpec> specs, std::size_t in, std::uint64_t seed = 1) {
  Rng rng(seed);
  return Sequential(specs, in, rng);
}

}  // namespace

TEST(Layers, ReluExample) {
  auto net = stack({{ReLUSpec{}}}, 3);
  Rng rng(0);
  const auto y = net.forward(Tensor({1, 3}, std::vector<double>{-1, 2, 0}), Mode::Eval, rng);
  EXPECT_EQ(y[0], 0.0);
  EXPECT_EQ(y[1], 2.0);
  EXPECT_EQ(y[2], 0.0);
}

TEST(Layers, IdentityFullyConnectedPassesThrough) {
  Rng init(0);
  FullyConnected fc(3, 3, init);
  fc.weight().matrix().setIdentity();
  fc.bias().matrix().setZero();
  Rng rng(0);
  const Tensor x({2, 3}, std::vector<double>{1.5, -2, 3, 0.25, 7, -8});
  const auto y = fc.forward(x, Mode::Eval, rng);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(Layers, TwoLayerFixtureByHand) {
  auto net = stack({{FullyConnectedSpec{2, 2}}, {ReLUSpec{}}, {FullyConnectedSpec{2, 1}}}, 2);
  auto& fc1 = dynamic_cast<FullyConnected&>(net.layer(0));
  auto& fc2 = dynamic_cast<FullyConnected&>(net.layer(2));
  fc1.weight().matrix() << 1.0, -1.0, 2.0, 0.5;  // (in, out)
  fc1.bias().matrix() << 0.5, -3.0;
  fc2.weight().matrix() << 2.0, -4.0;
  fc2.bias().matrix() << 0.25;
  Rng rng(0);
  // x = (1, 2): h = (1 + 4 + 0.5, -1 + 1 - 3) = (5.5, -3) -> relu (5.5, 0) -> 11 + 0.25
  const auto y = net.forward(Tensor({1, 2}, std::vector<double>{1.0, 2.0}), Mode::Eval, rng);
  EXPECT_DOUBLE_EQ(y[0], 11.25);
}

TEST(Layers, ShapeMismatchReportsBothShapes) {
  auto net = stack({{FullyConnectedSpec{4, 2}}}, 4);
  Rng rng(0);
  try {
    net.forward(Tensor(2, 5), Mode::Eval, rng);
    FAIL();
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("5"), std::string::npos);
    EXPECT_NE(msg.find("4"), std::string::npos);
  }
  EXPECT_THROW(stack({{FullyConnectedSpec{4, 2}}}, 3), ShapeError);
  EXPECT_THROW(Tensor(std::vector<std::size_t>{0, 3}), ShapeError);
}

TEST(Layers, BackwardRequiresTrainForward) {
  auto net = stack({{FullyConnectedSpec{3, 2}}, {ReLUSpec{}}}, 3);
  EXPECT_THROW(net.backward(Tensor(1, 2)), StateError);
  Rng rng(0);
  net.forward(Tensor(2, 3, 1.0), Mode::Eval, rng);
  EXPECT_THROW(net.backward(Tensor(2, 2)), StateError);
  net.forward(Tensor(2, 3, 1.0), Mode::Train, rng);
  EXPECT_NO_THROW(net.backward(Tensor(2, 2, 1.0)));
  EXPECT_THROW(net.backward(Tensor(2, 2, 1.0)), StateError);
}

TEST(Layers, LinearMseGradientClosedForm) {
  std::mt19937_64 gen(3);
  Rng init(1);
  FullyConnected fc(4, 2, init);
  fc.bias().matrix().setZero();
  const Tensor x = test::random_tensor(6, 4, gen);
  const Tensor y = test::random_tensor(6, 2, gen);
  Rng rng(0);
  for (auto& p : fc.parameters()) p.tensor->ensure_grad();
  const Tensor out = fc.forward(x, Mode::Train, rng);
  const RowMatrix residual = out.matrix() - y.matrix();
  fc.backward(Tensor::from_matrix(2.0 * residual / 6.0));
  const RowMatrix expected = 2.0 * x.matrix().transpose() * (x.matrix() * fc.weight().matrix() - y.matrix()) / 6.0;
  EXPECT_LT((fc.weight().grad_matrix() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Layers, ZeroUpstreamGradientGivesZeroParameterGradients) {
  Rng init(2);
  auto specs = relation_unit_specs(RuVariant::Mlp, 5, 3, 8, {});
  Sequential net(specs, 5, init);
  for (auto& p : net.parameters()) p.tensor->ensure_grad();
  std::mt19937_64 gen(1);
  Rng rng(0);
  net.forward(test::random_tensor(4, 5, gen), Mode::Train, rng);
  net.backward(Tensor(4, 3, 0.0));
  for (auto& p : net.parameters()) {
    for (double g : p.tensor->grad()) EXPECT_EQ(g, 0.0) << p.name;
  }
}

TEST(Layers, DenseBlockWidths) {
  EXPECT_EQ(stack({{DenseBlockSpec{19}}}, 19).output_dim(), 35u);
  EXPECT_EQ(stack({{DenseBlockSpec{16}}}, 16).output_dim(), 32u);
  EXPECT_EQ(output_width(LayerSpec{DenseBlockSpec{19}}, 19), 35u);
}

TEST(Layers, DenseBlockEvalIsReproducible) {
  auto a = stack({{DenseBlockSpec{6}}}, 6, 9);
  auto b = stack({{DenseBlockSpec{6}}}, 6, 9);
  Rng r1(1), r2(2);
  const auto ya = a.forward(Tensor(3, 6, 0.0), Mode::Eval, r1);
  const auto yb = b.forward(Tensor(3, 6, 0.0), Mode::Eval, r2);
  for (std::size_t i = 0; i < ya.size(); ++i) EXPECT_EQ(ya[i], yb[i]);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(ya[i], 0.0);  // raw input carried through
}

TEST(Layers, BatchNormEvalIsBatchIndependent) {
  auto net = stack({{FullyConnectedSpec{4, 3}}, {BatchNormSpec{3}}, {ReLUSpec{}}}, 4);
  std::mt19937_64 gen(4);
  Rng rng(0);
  for (int i = 0; i < 5; ++i) {
    net.forward(test::random_tensor(8, 4, gen), Mode::Train, rng);
    net.backward(Tensor(8, 3, 0.0));
  }
  const auto batch = test::random_tensor(5, 4, gen);
  const auto together = net.forward(batch, Mode::Eval, rng);
  for (std::size_t r = 0; r < 5; ++r) {
    Tensor single(1, 4);
    for (std::size_t c = 0; c < 4; ++c) single[c] = batch[r * 4 + c];
    const auto alone = net.forward(single, Mode::Eval, rng);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(alone[c], together[r * 3 + c]);
  }
}

TEST(Layers, BatchNormRunningStatistics) {
  BatchNorm bn(1, 0.9, 1e-5);
  Rng rng(0);
  bn.forward(Tensor({4, 1}, std::vector<double>{1, 2, 3, 4}), Mode::Train, rng);
  EXPECT_DOUBLE_EQ(bn.running_mean()[0], 0.1 * 2.5);
  EXPECT_DOUBLE_EQ(bn.running_var()[0], 0.9 + 0.1 * (5.0 / 3.0));  // unbiased batch variance
}

TEST(Layers, EvalForwardIsDeterministic) {
  DropoutConfig d;
  for (auto mode : {DropoutMode::Regular, DropoutMode::Variational, DropoutMode::Targeted}) {
    d.mode = mode;
    Rng init(3);
    Sequential net(relation_unit_specs(RuVariant::DenseBlock, 5, 4, 8, d), 5, init);
    std::mt19937_64 gen(5);
    const auto x = test::random_tensor(3, 5, gen);
    Rng r1(10), r2(20);
    const auto a = net.forward(x, Mode::Eval, r1);
    const auto b = net.forward(x, Mode::Eval, r2);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  }
}

TEST(LayerSpec, JsonRoundTripAndValidation) {
  DropoutConfig d;
  d.mode = DropoutMode::Targeted;
  for (const auto& spec : relation_unit_specs(RuVariant::Mlp, 19, 64, 256, d)) {
    EXPECT_EQ(to_json(layer_spec_from_json(to_json(spec))), to_json(spec));
  }
  EXPECT_THROW(validate(LayerSpec{DropoutRegularSpec{1.0}}), ConfigError);
  EXPECT_THROW(validate(LayerSpec{FullyConnectedSpec{0, 3}}), ConfigError);
  EXPECT_THROW(validate(LayerSpec{DropoutTargetedSpec{{1.5, 0.5}}}), ConfigError);
}

TEST(LayerSpec, MlpUnitComposition) {
  const auto specs = relation_unit_specs(RuVariant::Mlp, 19, 64, 256, {});
  std::size_t fc = 0, bn = 0, relu = 0;
  for (const auto& s : specs) {
    fc += std::holds_alternative<FullyConnectedSpec>(s.kind);
    bn += std::holds_alternative<BatchNormSpec>(s.kind);
    relu += std::holds_alternative<ReLUSpec>(s.kind);
  }
  EXPECT_EQ(fc, 3u);
  EXPECT_EQ(bn, 2u);
  EXPECT_EQ(relu, 2u);
  EXPECT_EQ(output_width(specs, 19), 64u);
}

// Finite-difference checks, one per layer type.

TEST(GradCheck, FullyConnected) {
  auto net = stack({{FullyConnectedSpec{5, 4}}}, 5);
  check_sequential(net, 3, 11);
}

TEST(GradCheck, BatchNorm) {
  auto net = stack({{BatchNormSpec{4}}}, 4);
  for (auto& p : net.parameters()) {
    std::mt19937_64 gen(2);
    std::normal_distribution<double> n(1.0, 0.3);
    for (auto& v : p.tensor->values()) v = n(gen);
  }
  check_sequential(net, 5, 12);
}

TEST(GradCheck, ReLU) {
  auto net = stack({{ReLUSpec{}}}, 6);
  check_sequential(net, 4, 13);
}

TEST(GradCheck, Concat) {
  auto net = stack({{ConcatSpec{{{FullyConnectedSpec{3, 2}}, {ReLUSpec{}}}}}}, 3);
  EXPECT_EQ(net.output_dim(), 5u);
  check_sequential(net, 4, 14);
}

TEST(GradCheck, DenseBlock) {
  auto net = stack({{DenseBlockSpec{5}}}, 5);
  check_sequential(net, 6, 15);
}

TEST(GradCheck, DropoutRegular) {
  auto net = stack({{FullyConnectedSpec{4, 6}}, {DropoutRegularSpec{0.3}}, {FullyConnectedSpec{6, 2}}}, 4);
  check_sequential(net, 4, 16);
}

TEST(GradCheck, DropoutVariationalWithKl) {
  auto net = stack({{FullyConnectedSpec{4, 6}}, {DropoutVariationalSpec{-1.0}}, {FullyConnectedSpec{6, 2}}}, 4);
  check_sequential(net, 4, 17, 0.5);
}

TEST(GradCheck, DropoutTargeted) {
  auto net = stack({{DropoutTargetedSpec{{0.5, 0.5}}}, {FullyConnectedSpec{6, 3}}}, 6);
  ASSERT_EQ(net.size(), 1u);  // folded into the weight layer
  check_sequential(net, 4, 18);
}

TEST(GradCheck, RelationUnits) {
  for (auto variant : {RuVariant::Mlp, RuVariant::DenseBlock}) {
    for (auto mode : {DropoutMode::None, DropoutMode::Regular, DropoutMode::Variational, DropoutMode::Targeted}) {
      DropoutConfig d;
      d.mode = mode;
      Rng init(5);
      Sequential net(relation_unit_specs(variant, 6, 4, 8, d), 6, init);
      SCOPED_TRACE(std::string(to_string(variant)) + "/" + std::string(to_string(mode)));
      check_sequential(net, 5, 19, mode == DropoutMode::Variational ? 0.1 : 0.0);
    }
  }
}
