#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fdgnn/adam.hpp"
#include "fdgnn/errors.hpp"
#include "fdgnn/tensor.hpp"
#include "gradcheck.hpp"

using namespace fdgnn;

namespace {

std::vector<double> vec(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

Tensor param(Shape s, std::vector<double> v) { return Tensor::parameter(std::move(s), std::move(v), "p"); }

Tensor random_param(std::mt19937_64& rng, Shape s, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(shape_numel(s));
  for (auto& x : v) x = u(rng);
  return param(std::move(s), std::move(v));
}

}  // namespace

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  auto eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  auto m = Tensor::from({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(vec(matmul(eye, m)), (std::vector<double>{1, 2, 3, 4}));
}

TEST(Matmul, RowTimesColumn) {
  auto r = matmul(Tensor::from({1, 2}, {1, 2}), Tensor::from({2, 1}, {3, 4}));
  EXPECT_EQ(r.shape(), (Shape{1, 1}));
  EXPECT_DOUBLE_EQ(r.item(), 11.0);
}

TEST(Matmul, ZeroAnnihilates) {
  auto r = matmul(Tensor::zeros({2, 3}), Tensor::from({3, 2}, {1, -2, 3, 4, 5, 6}));
  for (double v : r.values()) EXPECT_EQ(v, 0.0);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  try {
    matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
    FAIL();
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
  }
}

TEST(Elementwise, Definitions) {
  EXPECT_EQ(vec(relu(Tensor::from({3}, {-1, 0, 2}))), (std::vector<double>{0, 0, 2}));
  auto x = Tensor::from({3}, {0.5, -3, 7});
  EXPECT_EQ(vec(add(x, Tensor::scalar(0.0))), vec(x));
  EXPECT_DOUBLE_EQ(leaky_relu(Tensor::from({1}, {-10}), 0.2).item(), -2.0);
}

TEST(Elementwise, DivByExactZeroThrows) {
  EXPECT_THROW(div(Tensor::from({2}, {1, 2}), Tensor::from({2}, {1, 0})), NumericError);
}

TEST(Elementwise, IncompatibleShapesThrow) {
  EXPECT_THROW(add(Tensor::zeros({2}), Tensor::zeros({3})), DimensionError);
  EXPECT_THROW(mul(Tensor::zeros({2, 2}), Tensor::zeros({4})), DimensionError);
}

TEST(Softmax, EqualLogitsAreUniform) {
  for (double c : {-50.0, 0.0, 3.7, 800.0}) {
    auto s = softmax(Tensor::from({2}, {c, c}), 0);
    EXPECT_NEAR(s.at(0), 0.5, 1e-15);
    EXPECT_NEAR(s.at(1), 0.5, 1e-15);
  }
}

TEST(Softmax, LargeLogitDoesNotOverflow) {
  auto s = softmax(Tensor::from({2}, {1000, 0}), 0);
  EXPECT_TRUE(std::isfinite(s.at(0)));
  EXPECT_NEAR(s.at(0), 1.0, 1e-12);
  EXPECT_NEAR(s.at(1), 0.0, 1e-12);
}

TEST(Softmax, LogRatios) {
  auto s = softmax(Tensor::from({2}, {std::log(1.0), std::log(3.0)}), 0);
  EXPECT_NEAR(s.at(0), 0.25, 1e-12);
  EXPECT_NEAR(s.at(1), 0.75, 1e-12);
}

TEST(Softmax, RowsSumToOneOnEitherAxis) {
  std::mt19937_64 rng(3);
  auto x = random_param(rng, {4, 5}, -20, 20);
  auto r = softmax(x, 1);
  for (std::size_t i = 0; i < 4; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_GT(r.at(i, j), 0.0);
      EXPECT_LT(r.at(i, j), 1.0);
      s += r.at(i, j);
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  auto c = softmax(x, 0);
  for (std::size_t j = 0; j < 5; ++j) {
    double s = 0;
    for (std::size_t i = 0; i < 4; ++i) s += c.at(i, j);
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  EXPECT_THROW(softmax(x, 2), DimensionError);
}

TEST(MseLoss, Examples) {
  auto x = Tensor::from({3}, {1, 2, 3});
  EXPECT_EQ(mse_loss(x, x).item(), 0.0);
  EXPECT_DOUBLE_EQ(mse_loss(Tensor::from({2}, {1, 2}), Tensor::from({2}, {0, 0})).item(), 2.5);
  EXPECT_DOUBLE_EQ(mse_loss(Tensor::from({1}, {5}), Tensor::from({1}, {2})).item(), 9.0);
  EXPECT_THROW(mse_loss(Tensor::zeros({2}), Tensor::zeros({3})), DimensionError);
}

TEST(Backward, SumGivesOnes) {
  auto x = param({2, 3}, {1, 2, 3, 4, 5, 6});
  sum(x).backward();
  const auto g = x.grad();
  ASSERT_TRUE(g);
  for (double v : *g) EXPECT_EQ(v, 1.0);
}

TEST(Backward, ScalarChainRule) {
  auto w = param({1}, {1.0});
  auto x = Tensor::from({1}, {2.0});
  mse_loss(mul(w, x), Tensor::from({1}, {0.0})).backward();
  EXPECT_DOUBLE_EQ((*w.grad())[0], 8.0);
}

TEST(Backward, UnreachableGradsUntouched) {
  auto a = param({1}, {1.0});
  auto b = param({1}, {2.0});
  sum(mul(a, a)).backward();
  EXPECT_FALSE(b.grad().has_value());
}

TEST(Backward, NonScalarLossThrows) {
  auto a = param({2}, {1.0, 2.0});
  EXPECT_THROW(mul_scalar(a, 2.0).backward(), DimensionError);
}

TEST(Backward, SecondCallOnSameTapeThrows) {
  auto a = param({2}, {1.0, 2.0});
  auto loss = sum(mul(a, a));
  loss.backward();
  EXPECT_THROW(loss.backward(), Error);
}

TEST(Backward, GradientsAccumulateAcrossPasses) {
  auto a = param({1}, {3.0});
  sum(mul(a, a)).backward();
  sum(mul(a, a)).backward();
  EXPECT_DOUBLE_EQ((*a.grad())[0], 12.0);
  a.zero_grad();
  sum(a).backward();
  EXPECT_DOUBLE_EQ((*a.grad())[0], 1.0);
}

TEST(Backward, NoGradGuardRecordsNothing) {
  auto a = param({1}, {3.0});
  Tensor y;
  {
    NoGradGuard g;
    y = mul(a, a);
  }
  EXPECT_FALSE(y.requires_grad());
  EXPECT_TRUE(grad_mode_enabled());
}

TEST(GradCheck, MessagePassingPrimitives) {
  std::mt19937_64 rng(11);
  const std::vector<std::size_t> idx{0, 2, 2, 1, 3};
  const std::vector<std::size_t> seg{0, 1, 1, 0, 2};
  auto x = random_param(rng, {4, 3});
  auto s = random_param(rng, {5, 1});
  auto f = [&](const std::vector<Tensor>& in) {
    auto g = gather_rows(in[0], idx);
    auto a = segment_softmax(in[1], seg, 3);
    auto m = scatter_add_rows(scale_rows(g, a), seg, 3);
    auto pooled = segment_mean(g, seg, 3);
    return sum(mul(add(m, pooled), m));
  };
  EXPECT_LT(fdgnn::testing::max_grad_error(f, {x, s}), 1e-6);
}

TEST(GradCheck, ShapeOpsAndSmoothActivations) {
  std::mt19937_64 rng(12);
  auto a = random_param(rng, {3, 2});
  auto b = random_param(rng, {3, 4});
  auto r = random_param(rng, {1, 6});
  auto f = [&](const std::vector<Tensor>& in) {
    const Tensor parts[] = {in[0], in[1]};
    auto c = add_row(concat_cols(parts), in[2]);
    auto top = slice_cols(c, 1, 3);
    const Tensor stack[] = {top, softplus(top)};
    auto rows = concat_rows(stack);
    return mean(mul(exp(mul_scalar(rows, 0.3)), log(add_scalar(sqrt(add_scalar(mul(rows, rows), 1.0)), 0.5))));
  };
  EXPECT_LT(fdgnn::testing::max_grad_error(f, {a, b, r}), 1e-6);
}

TEST(Adam, ZeroGradientIsANoOp) {
  auto p = param({3}, {1, -2, 3});
  Adam opt({p}, {});
  sum(mul_scalar(p, 0.0)).backward();
  opt.step();
  EXPECT_EQ(vec(p), (std::vector<double>{1, -2, 3}));
  opt.zero_grad();
  sum(mul_scalar(p, 0.0)).backward();
  opt.step();
  EXPECT_EQ(opt.state().step, 2);
  for (double m : opt.state().first_moment[0]) EXPECT_EQ(m, 0.0);
  for (double v : opt.state().second_moment[0]) EXPECT_EQ(v, 0.0);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  for (double g : {3.0, -0.02}) {
    auto p = param({1}, {5.0});
    Adam opt({p}, {.learning_rate = 0.1});
    sum(mul_scalar(p, g)).backward();
    opt.step();
    // Bias-corrected first step is lr · g / (|g| + eps).
    EXPECT_NEAR(p.at(0) - 5.0, -0.1 * (g > 0 ? 1 : -1), 1e-6);
  }
}

TEST(Adam, NanGradientNamesParameter) {
  auto p = Tensor::parameter({1}, {1.0}, "layer.weight");
  Adam opt({p}, {});
  p.mutable_grad()[0] = std::nan("");
  try {
    opt.step();
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("layer.weight"), std::string::npos);
  }
}

TEST(Adam, NegativeLearningRateRejected) {
  auto p = param({1}, {1.0});
  EXPECT_THROW(Adam({p}, {.learning_rate = -1.0}), ConfigError);
}
