#include <gtest/gtest.h>

#include "aunn/network.hpp"

using namespace aunn;
using Vec = Eigen::VectorXd;

namespace {

AnfisUnit<double> grid_unit(const Eigen::Matrix2d& w, const Eigen::Vector2d& b) {
  AnfisUnit<double> unit(2, 2);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 2; ++j) unit.set_mf(i, j, {0, 1, 2});
  unit.set_consequents(w, b);
  return unit;
}

/// Units whose output is the constant `value` regardless of input.
AnfisUnit<double> constant_unit(Index n_inputs, double value) {
  AnfisUnit<double> unit(n_inputs, 1);
  for (Index i = 0; i < n_inputs; ++i) unit.set_mf(i, 0, {-1, 0, 1});
  unit.set_consequents(Eigen::MatrixXd::Zero(1, n_inputs), Vec::Constant(1, value));
  return unit;
}

}  // namespace

TEST(InitNetwork, DeterministicForSeed) {
  Eigen::MatrixXd data = Eigen::MatrixXd::Random(20, 3);
  const InitConfig init{42, MfSpan::data_range, 0.5, ConsequentOrder::first};
  const auto a = init_network<double>(3, {{4, 3}, {2, 2}}, init, &data);
  const auto b = init_network<double>(3, {{4, 3}, {2, 2}}, init, &data);
  for (std::size_t l = 0; l < a.n_layers(); ++l)
    for (std::size_t k = 0; k < a.layer(l).size(); ++k) {
      EXPECT_EQ(a.layer(l)[k].params().weights, b.layer(l)[k].params().weights);
      EXPECT_EQ(a.layer(l)[k].params().peak, b.layer(l)[k].params().peak);
    }
  InitConfig other = init;
  other.seed = 43;
  const auto c = init_network<double>(3, {{4, 3}, {2, 2}}, other, &data);
  EXPECT_NE(a.layer(0)[0].params().weights, c.layer(0)[0].params().weights);
}

TEST(InitNetwork, PeaksEvenlySpacedOverDataRange) {
  Eigen::MatrixXd data(3, 1);
  data << 0.0, 0.3, 1.0;
  const auto net = init_network<double>(1, {{1, 3}}, InitConfig{}, &data);
  const auto& u = net.layer(0)[0];
  EXPECT_DOUBLE_EQ(u.mf(0, 0).b, 0.0);
  EXPECT_DOUBLE_EQ(u.mf(0, 1).b, 0.5);
  EXPECT_DOUBLE_EQ(u.mf(0, 2).b, 1.0);
  // feet at neighbouring peaks, outer feet one spacing out
  EXPECT_DOUBLE_EQ(u.mf(0, 0).a, -0.5);
  EXPECT_DOUBLE_EQ(u.mf(0, 0).c, 0.5);
  EXPECT_DOUBLE_EQ(u.mf(0, 2).c, 1.5);
  EXPECT_TRUE(u.params().bias.isZero(0));
}

TEST(InitNetwork, HiddenLayersUseSymmetricSpan) {
  const auto net = init_network<double>(2, {{3, 2}, {2, 3}},
                                        InitConfig{1, MfSpan::fixed_unit_interval, 0.1});
  EXPECT_DOUBLE_EQ(net.layer(0)[0].mf(1, 1).b, 1.0);
  EXPECT_DOUBLE_EQ(net.layer(1)[0].mf(0, 0).b, -1.0);
  EXPECT_DOUBLE_EQ(net.layer(1)[0].mf(2, 1).b, 0.0);
  EXPECT_DOUBLE_EQ(net.layer(1)[0].mf(2, 2).b, 1.0);
}

TEST(InitNetwork, ZeroScaleGivesZeroConsequents) {
  const auto net = init_network<double>(4, {{3, 2}}, InitConfig{9, MfSpan::fixed_unit_interval, 0.0});
  for (const auto& u : net.layer(0)) EXPECT_TRUE(u.params().weights.isZero(0));
}

TEST(InitNetwork, ConfigErrors) {
  EXPECT_THROW(init_network<double>(2, {}, InitConfig{}), ConfigError);
  EXPECT_THROW(init_network<double>(2, {{2, 2}}, InitConfig{}), ConfigError);  // no data
  Eigen::MatrixXd empty(0, 2);
  EXPECT_THROW(init_network<double>(2, {{2, 2}}, InitConfig{}, &empty), ConfigError);
  EXPECT_THROW(init_network<double>(2, {{0, 2}}, InitConfig{0, MfSpan::fixed_unit_interval}),
               ConfigError);
}

TEST(AuNetwork, RejectsShapeMismatch) {
  std::vector<AuNetwork<double>::Layer> layers(2);
  layers[0].push_back(constant_unit(2, 1.0));
  layers[0].push_back(constant_unit(2, 1.0));
  layers[1].push_back(constant_unit(3, 1.0));
  EXPECT_THROW(AuNetwork<double>(2, layers), ShapeError);
}

TEST(NetworkForward, SingleLayerMatchesUnits) {
  Eigen::Matrix2d w;
  w << 1, 0, 0, 2;
  std::vector<AuNetwork<double>::Layer> layers(1);
  layers[0].push_back(grid_unit(w, {1, 1}));
  layers[0].push_back(grid_unit(Eigen::Matrix2d::Zero(), {3, 7}));
  const AuNetwork<double> net(2, layers);
  const Eigen::Vector2d x(0.5, 1.5);
  const Vec out = network_forward(net, x);
  EXPECT_DOUBLE_EQ(out(0), anfis_forward(net.layer(0)[0], x));
  EXPECT_DOUBLE_EQ(out(1), 5.0);
  EXPECT_THROW(network_forward(net, Vec::Zero(3)), ShapeError);
}

TEST(NetworkForward, TwoLayerHandComputation) {
  Eigen::Matrix2d w;
  w << 1, 0, 0, 2;
  std::vector<AuNetwork<double>::Layer> layers(2);
  layers[0].push_back(grid_unit(Eigen::Matrix2d::Zero(), {3, 7}));  // 5 at (0.5, 1.5)
  layers[0].push_back(grid_unit(w, {1, 1}));  // consequents [1.5, 4] -> 2.75
  AnfisUnit<double> head(2, 1);
  head.set_mf(0, 0, {4, 5, 6});  // degree 1 at 5
  head.set_mf(1, 0, {2, 3, 4});  // degree 0.75 at 2.75
  Eigen::MatrixXd hw(1, 2);
  hw << 1, -1;
  head.set_consequents(hw, Vec::Constant(1, 0.5));
  layers[1].push_back(head);
  const AuNetwork<double> net(2, layers);
  const Vec out = network_forward(net, Eigen::Vector2d(0.5, 1.5));
  ASSERT_EQ(out.size(), 1);
  EXPECT_DOUBLE_EQ(out(0), 5.0 - 2.75 + 0.5);
}

TEST(NetworkForward, ConstantConsequentsIgnoreInput) {
  std::vector<AuNetwork<double>::Layer> layers(2);
  layers[0] = {constant_unit(3, 0.2), constant_unit(3, -0.4)};
  layers[1] = {constant_unit(2, 1.5), constant_unit(2, -2.5)};
  const AuNetwork<double> net(3, layers);
  const Vec a = network_forward(net, Eigen::Vector3d(0, 0, 0));
  const Vec b = network_forward(net, Eigen::Vector3d(9, -3, 0.5));
  EXPECT_EQ(a, b);
  EXPECT_DOUBLE_EQ(a(0), 1.5);
}

TEST(PredictClass, ArgmaxWithLowestTieBreak) {
  EXPECT_EQ(argmax(Eigen::Vector2d(0.1, 0.9)), 1);
  EXPECT_EQ(argmax(Eigen::Vector2d(0.5, 0.5)), 0);
  EXPECT_EQ(argmax(Eigen::Vector3d(0.2, 0.7, 0.7)), 1);
  std::vector<AuNetwork<double>::Layer> layers(1);
  layers[0] = {constant_unit(1, 0.1), constant_unit(1, 0.9)};
  EXPECT_EQ(predict_class(AuNetwork<double>(1, layers), Vec::Zero(1)), 1);
  layers[0] = {constant_unit(1, 0.5), constant_unit(1, 0.5)};
  EXPECT_EQ(predict_class(AuNetwork<double>(1, layers), Vec::Zero(1)), 0);
}

TEST(PredictClass, InvariantUnderMonotoneTransform) {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    Vec z = Vec::NullaryExpr(5, [&] { return rng.uniform(-3, 3); });
    const Vec transformed = (z.array() * 2.5 + 1.0).exp().matrix();
    EXPECT_EQ(argmax(z), argmax(transformed));
  }
}

TEST(PredictClass, WordArchitectureGivesValidClass) {
  Eigen::MatrixXd data = Eigen::MatrixXd::Random(30, 70).cwiseAbs();
  const auto net = init_network<double>(70, {{5, 70}}, InitConfig{7}, &data);
  EXPECT_EQ(net.output_dim(), 5);
  for (Index r = 0; r < 5; ++r) {
    const Index k = predict_class(net, data.row(r).transpose());
    EXPECT_GE(k, 0);
    EXPECT_LT(k, 5);
  }
}

TEST(NetworkForward, RepeatedCallsBitIdentical) {
  Eigen::MatrixXd data = Eigen::MatrixXd::Random(10, 4);
  const auto net = init_network<double>(4, {{3, 3}, {2, 2}}, InitConfig{3}, &data);
  const Vec x = data.row(2).transpose();
  const Vec a = network_forward(net, x);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(network_forward(net, x), a);
}
