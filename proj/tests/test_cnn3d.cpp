#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "mcaeeg/cnn3d.hpp"
#include "support/oracles.hpp"

using namespace mcaeeg;
using namespace mcaeeg::cnn;

namespace {

// Weighted sum of all entries: a scalar whose gradient w.r.t. y is r.
double dot(const Tensor& y, const Tensor& r) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
  return s;
}

void expect_gradient(const std::function<double()>& f, Tensor& param, const Tensor& analytic, double tol = 1e-4) {
  ASSERT_EQ(param.shape(), analytic.shape());
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double num = oracle::central_difference(f, param, i);
    EXPECT_LT(oracle::relative_error(analytic[i], num), tol) << "index " << i << " analytic " << analytic[i]
                                                            << " numeric " << num;
  }
}

}  // namespace

TEST(Conv3d, IdentityKernelReproducesInput) {
  Rng rng(1);
  Tensor x = oracle::random_tensor({1, 4, 5, 3}, rng);
  Tensor w({1, 1, 3, 3, 3});
  w[13] = 1.0;
  const Tensor y = conv3d_forward(x, w, Tensor({1}), {1, 1, 1}, 1);
  EXPECT_EQ(y, x);
}

TEST(Conv3d, OnesKernelOnOnesInputSumsTo27) {
  const Tensor y = conv3d_forward(Tensor({1, 3, 3, 3}, 1.0), Tensor({1, 1, 3, 3, 3}, 1.0), Tensor({1}), {0, 0, 0}, 1);
  ASSERT_EQ(y.size(), 1u);
  EXPECT_DOUBLE_EQ(y[0], 27.0);
}

TEST(Conv3d, MatchesDirectLoopOracle) {
  Rng rng(2);
  for (std::size_t stride : {1u, 2u}) {
    Tensor x = oracle::random_tensor({3, 6, 5, 4}, rng), w = oracle::random_tensor({4, 3, 3, 3, 3}, rng),
           b = oracle::random_tensor({4}, rng);
    const Tensor got = conv3d_forward(x, w, b, {1, 1, 1}, stride);
    const Tensor want = oracle::conv3d(x, w, b, 1, stride);
    ASSERT_EQ(got.shape(), want.shape());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-10);
  }
}

TEST(Conv3d, RejectsMismatchedShapes) {
  EXPECT_THROW(conv3d_forward(Tensor({2, 3, 3, 3}), Tensor({1, 1, 3, 3, 3}), Tensor({1}), {1, 1, 1}, 1), ShapeError);
  EXPECT_THROW(conv3d_forward(Tensor({1, 1, 1, 1}), Tensor({1, 1, 3, 3, 3}), Tensor({1}), {0, 0, 0}, 1), ShapeError);
}

TEST(Conv3d, GradientsMatchFiniteDifferences) {
  Rng rng(3);
  Tensor x = oracle::random_tensor({2, 4, 3, 3}, rng), w = oracle::random_tensor({3, 2, 3, 3, 3}, rng),
         b = oracle::random_tensor({3}, rng);
  const Index3 pad{1, 1, 1};
  const Tensor r = oracle::random_tensor({3, 4, 3, 3}, rng);
  const auto g = conv3d_backward(x, w, r, pad, 1, true);
  auto f = [&] { return dot(conv3d_forward(x, w, b, pad, 1), r); };
  expect_gradient(f, x, g.dx);
  expect_gradient(f, w, g.dweight);
  expect_gradient(f, b, g.dbias);
}

TEST(MaxPool, AsymmetricPaddingShape) {
  const auto r = maxpool3d_forward(Tensor({4, 32, 5, 3}), 2, 2, {0, 1, 1});
  EXPECT_EQ(r.pooled.shape(), (Shape{4, 16, 3, 2}));
  const auto r2 = maxpool3d_forward(Tensor({4, 16, 3, 2}), 2, 2, {0, 1, 1});
  EXPECT_EQ(r2.pooled.shape(), (Shape{4, 8, 2, 2}));
}

TEST(MaxPool, ConstantInputGivesConstantOutputEvenWhenNegative) {
  for (double c : {2.5, -7.0}) {
    const auto r = maxpool3d_forward(Tensor({2, 32, 5, 3}, c), 2, 2, {0, 1, 1});
    for (double v : r.pooled.data()) EXPECT_EQ(v, c);
    for (auto a : r.argmax) EXPECT_NE(a, kNoSource);
  }
}

TEST(MaxPool, PlantedMaximumReceivesWholeGradient) {
  Tensor x({1, 4, 4, 4}, 0.0);
  x[((0 * 4 + 1) * 4 + 2) * 4 + 3] = 5.0;
  const auto r = maxpool3d_forward(x, 2, 2, {0, 0, 0});
  EXPECT_DOUBLE_EQ(r.pooled[(0 * 2 + 1) * 2 + 1], 5.0);
  Tensor dy(r.pooled.shape(), 0.0);
  dy[(0 * 2 + 1) * 2 + 1] = 3.0;
  const Tensor dx = maxpool3d_backward(dy, r.argmax, x.shape());
  EXPECT_DOUBLE_EQ(dx[((0 * 4 + 1) * 4 + 2) * 4 + 3], 3.0);
  EXPECT_DOUBLE_EQ(std::accumulate(dx.data().begin(), dx.data().end(), 0.0), 3.0);
}

TEST(MaxPool, BackwardConservesGradient) {
  Rng rng(4);
  Tensor x = oracle::random_tensor({3, 32, 5, 3}, rng);
  const auto r = maxpool3d_forward(x, 2, 2, {0, 1, 1});
  Tensor dy = oracle::random_tensor(r.pooled.shape(), rng);
  const Tensor dx = maxpool3d_backward(dy, r.argmax, x.shape());
  const double in = std::accumulate(dy.data().begin(), dy.data().end(), 0.0);
  const double out = std::accumulate(dx.data().begin(), dx.data().end(), 0.0);
  EXPECT_NEAR(in, out, 1e-12);
}

TEST(MaxPool, GradientsMatchFiniteDifferences) {
  Rng rng(5);
  Tensor x = oracle::random_tensor({2, 6, 5, 3}, rng);
  const auto r = maxpool3d_forward(x, 2, 2, {0, 1, 1});
  const Tensor w = oracle::random_tensor(r.pooled.shape(), rng);
  const Tensor dx = maxpool3d_backward(w, r.argmax, x.shape());
  expect_gradient([&] { return dot(maxpool3d_forward(x, 2, 2, {0, 1, 1}).pooled, w); }, x, dx);
}

TEST(Relu, GradientsMatchFiniteDifferences) {
  Rng rng(6);
  Tensor x = oracle::random_tensor({50}, rng);
  const Tensor r = oracle::random_tensor({50}, rng);
  expect_gradient([&] { return dot(relu_forward(x), r); }, x, relu_backward(x, r));
}

TEST(Linear, GradientsMatchFiniteDifferences) {
  Rng rng(7);
  Tensor x = oracle::random_tensor({12}, rng), w = oracle::random_tensor({3, 12}, rng), b = oracle::random_tensor({3}, rng);
  const Tensor r = oracle::random_tensor({3}, rng);
  const auto g = linear_backward(x, w, r);
  auto f = [&] { return dot(linear_forward(x, w, b), r); };
  expect_gradient(f, x, g.dx);
  expect_gradient(f, w, g.dweight);
  expect_gradient(f, b, g.dbias);
}

TEST(SoftmaxCrossEntropy, UniformLogitsGiveLn2) {
  const auto r = softmax_cross_entropy(Tensor({2}, 0.37), 1);
  EXPECT_NEAR(r.loss, std::log(2.0), 1e-15);
  EXPECT_NEAR(r.dlogits[0], 0.5, 1e-15);
  EXPECT_NEAR(r.dlogits[1], -0.5, 1e-15);
  EXPECT_THROW(softmax_cross_entropy(Tensor({2}), 2), InvalidArgument);
}

TEST(SoftmaxCrossEntropy, GradientMatchesFiniteDifferences) {
  Rng rng(8);
  Tensor z = oracle::random_tensor({2}, rng, 3.0);
  expect_gradient([&] { return softmax_cross_entropy(z, 0).loss; }, z, softmax_cross_entropy(z, 0).dlogits);
}

TEST(Network, ShapeChainMatchesArchitecture) {
  const auto chain = NetworkSpec::standard().shape_chain();
  ASSERT_EQ(chain.size(), 12u);
  EXPECT_EQ(chain[0], (Shape{32, 32, 5, 3}));
  EXPECT_EQ(chain[4], (Shape{32, 16, 3, 2}));
  EXPECT_EQ(chain[5], (Shape{64, 16, 3, 2}));
  EXPECT_EQ(chain[9], (Shape{64, 8, 2, 2}));
  EXPECT_EQ(chain[10], (Shape{2048}));
  EXPECT_EQ(chain[11], (Shape{2}));
}

TEST(Network, BrokenSpecFailsAtConstruction) {
  auto spec = NetworkSpec::standard();
  spec.layers.back() = LinearSpec{1000, 2};
  EXPECT_THROW(Network(spec, 1), ShapeError);
  spec = NetworkSpec::standard();
  spec.layers[2] = Conv3dSpec{16, 32};
  EXPECT_THROW(Network(spec, 1), ShapeError);
}

TEST(Network, ParameterInventory) {
  Network net(NetworkSpec::standard(), 1);
  const auto& p = net.params();
  ASSERT_EQ(p.tensors.size(), 10u);
  EXPECT_EQ(p.tensors[0].name, "conv1.weight");
  EXPECT_EQ(p.tensors[0].value.shape(), (Shape{32, 1, 3, 3, 3}));
  EXPECT_EQ(p.tensors[8].value.shape(), (Shape{2, 2048}));
  EXPECT_EQ(p.count(), 198690u);
  for (const auto& t : p.tensors) EXPECT_EQ(t.grad.shape(), t.value.shape());
}

TEST(Network, ZeroWeightsReturnBias) {
  Network net(NetworkSpec::standard(), 1);
  for (auto& t : net.params().tensors) std::fill(t.value.data().begin(), t.value.data().end(), 0.0);
  net.params().tensors[9].value[0] = 0.25;
  net.params().tensors[9].value[1] = -1.5;
  const Tensor y = net.forward(Tensor({32, 5, 3}));
  EXPECT_EQ(y.shape(), (Shape{2}));
  EXPECT_DOUBLE_EQ(y[0], 0.25);
  EXPECT_DOUBLE_EQ(y[1], -1.5);
}

TEST(Network, BatchedForwardEqualsSingleForwards) {
  Network net(NetworkSpec::standard(), 2);
  Rng rng(9);
  std::vector<Tensor> xs;
  for (int i = 0; i < 4; ++i) xs.push_back(oracle::random_tensor({32, 5, 3}, rng));
  const auto batch = net.forward_batch(xs);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(batch[i], net.forward(xs[i]));
  EXPECT_THROW(net.forward(Tensor({32, 5, 4})), ShapeError);
}

TEST(Network, DuplicatedExampleDoublesItsContribution) {
  Network net(NetworkSpec::standard(), 3);
  Rng rng(10);
  const Tensor a = oracle::random_tensor({32, 5, 3}, rng), b = oracle::random_tensor({32, 5, 3}, rng);
  net.backward({a}, {1});
  const auto ga = net.params().tensors;
  net.backward({b}, {0});
  const auto gb = net.params().tensors;
  net.backward({a, a, b}, {1, 1, 0});
  for (std::size_t k = 0; k < ga.size(); ++k) {
    const Tensor& g = net.params().tensors[k].grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_NEAR(g[i], (2.0 * ga[k].grad[i] + gb[k].grad[i]) / 3.0, 1e-12 * (1.0 + std::abs(g[i])));
    }
  }
}

TEST(Network, RejectsInvalidLabels) {
  Network net(NetworkSpec::standard(), 3);
  EXPECT_THROW(net.backward({Tensor({32, 5, 3})}, {2}), InvalidArgument);
  EXPECT_THROW(net.backward({}, {}), InvalidArgument);
}

TEST(Network, EndToEndGradientOnSampledCoordinates) {
  Network net(NetworkSpec::standard(), 4);
  Rng rng(11);
  const std::vector<Tensor> xs{oracle::random_tensor({1, 32, 5, 3}, rng), oracle::random_tensor({1, 32, 5, 3}, rng)};
  const std::vector<int> ys{0, 1};
  net.backward(xs, ys);
  for (auto& p : net.params().tensors) {
    for (int s = 0; s < 6; ++s) {
      const std::size_t i = rng.below(p.value.size());
      const double num = oracle::central_difference([&] { return net.loss(xs, ys); }, p.value, i);
      EXPECT_LT(oracle::relative_error(p.grad[i], num), 1e-4) << p.name << "[" << i << "]";
    }
  }
}
