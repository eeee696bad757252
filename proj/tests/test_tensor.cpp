#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "rescnn/ops.hpp"
#include "rescnn/rng.hpp"
#include "rescnn/tensor.hpp"
#include "support.hpp"

using namespace rescnn;
namespace rt = rescnn::testing;

TEST(Tensor, ShapeAndFill) {
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.at(1, 2), 1.5);
  EXPECT_EQ(shape_str(t.shape()), "[2x3]");
}

TEST(Tensor, RejectsZeroDimensionAndBadData) {
  EXPECT_THROW(Tensor({2, 0}), DimensionError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>(3)), DimensionError);
}

TEST(Tensor, ReshapeKeepsDataAndChecksCount) {
  Tensor t({2, 3}, std::vector<double>{0, 1, 2, 3, 4, 5});
  const Tensor r = t.reshaped({3, 2});
  EXPECT_EQ(r.at(2, 1), 5.0);
  EXPECT_THROW(t.reshaped({4, 2}), DimensionError);
}

TEST(Tensor, ArithmeticNeedsMatchingShapes) {
  Tensor a({2, 2}, 1.0), b({2, 2}, 2.0), c({4}, 1.0);
  EXPECT_EQ((a + b)[3], 3.0);
  EXPECT_EQ((b - a)[0], 1.0);
  EXPECT_EQ((a * 4.0)[1], 4.0);
  EXPECT_THROW(a + c, DimensionError);
  EXPECT_THROW(max_abs_diff(a, c), DimensionError);
}

TEST(Tensor, FiniteCheck) {
  Tensor a({3}, 0.0);
  EXPECT_TRUE(all_finite(a));
  a[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(all_finite(a));
}

TEST(Rng, SameSeedSameStream) {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng c(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(c.below(7), 7u);
  }
}

TEST(Rng, EngineMatchesStandardReference) {
  // Required value of the 10000th draw from a default-constructed mt19937_64.
  std::mt19937_64 reference;
  reference.discard(9999);
  EXPECT_EQ(reference(), 9981545732273789042ULL);
}

TEST(Ops, MatmulAgainstHandProduct) {
  const Tensor a({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  const Tensor b({3, 2}, std::vector<double>{7, 8, 9, 10, 11, 12});
  const Tensor c = matmul(a, b);
  EXPECT_EQ(c.values(), (std::vector<double>{58, 64, 139, 154}));
  EXPECT_EQ(matmul_nt(a, a).values(), (std::vector<double>{14, 32, 32, 77}));
  EXPECT_EQ(matmul_tn(a, a).at(0, 0), 17.0);
  EXPECT_THROW(matmul(a, a), DimensionError);
}

TEST(Ops, SoftmaxRowsSumToOneAndSurviveLargeLogits) {
  const Tensor x({2, 3}, std::vector<double>{1000, 1001, 1002, -5, 0, 5});
  const Tensor p = softmax(x);
  for (std::size_t r = 0; r < 2; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < 3; ++c) s += p.at(r, c);
    EXPECT_NEAR(s, 1.0, 1e-15);
  }
  EXPECT_TRUE(all_finite(p));
  EXPECT_NEAR(p.at(0, 2), 1.0 / (1.0 + std::exp(-1.0) + std::exp(-2.0)), 1e-15);
}

TEST(Ops, SigmoidIsStableAtExtremes) {
  EXPECT_EQ(sigmoid(-1000.0), 0.0);
  EXPECT_EQ(sigmoid(1000.0), 1.0);
  EXPECT_NEAR(sigmoid(0.3), 1.0 / (1.0 + std::exp(-0.3)), 1e-16);
}

TEST(Ops, ActivationGradientsMatchFiniteDifferences) {
  Rng rng(4);
  for (auto kind : {Activation::kSigmoid, Activation::kTanh, Activation::kRelu, Activation::kNone}) {
    Tensor x = rt::random_tensor({3, 4}, rng);
    const Tensor r = rt::random_tensor({3, 4}, rng);
    const Tensor y = activate(x, kind);
    const Tensor analytic = activate_backward(y, r, kind);
    const Tensor numeric = rt::numeric_gradient([&] { return rt::dot(activate(x, kind), r); }, x);
    EXPECT_LT(rt::rel_error(analytic, numeric), 1e-8) << activation_name(kind);
  }
}

TEST(Ops, SoftmaxBackwardMatchesFiniteDifferences) {
  Rng rng(5);
  Tensor x = rt::random_tensor({4, 5}, rng, -2, 2);
  const Tensor r = rt::random_tensor({4, 5}, rng);
  const Tensor analytic = softmax_backward(softmax(x), r);
  const Tensor numeric = rt::numeric_gradient([&] { return rt::dot(softmax(x), r); }, x);
  EXPECT_LT(rt::rel_error(analytic, numeric), 1e-8);
}

TEST(Ops, ConcatAndSplitRoundTrip) {
  Rng rng(6);
  const Tensor a = rt::random_tensor({2, 3, 4}, rng), b = rt::random_tensor({2, 3, 2}, rng);
  const Tensor c = concat_last(a, b);
  EXPECT_EQ(c.shape(), (Shape{2, 3, 6}));
  const auto [x, y] = split_last(c, 4);
  EXPECT_EQ(x, a);
  EXPECT_EQ(y, b);
}

TEST(Ops, MatmulIdentityAndTinyProduct) {
  Rng rng(7);
  const Tensor a = rt::random_tensor({4, 6}, rng);
  Tensor eye({6, 6}, 0.0);
  for (std::size_t i = 0; i < 6; ++i) eye.at(i, i) = 1.0;
  EXPECT_EQ(matmul(a, eye), a);
  const Tensor row({1, 2}, std::vector<double>{1, 2}), col({2, 1}, std::vector<double>{3, 4});
  EXPECT_EQ(matmul(row, col).values(), (std::vector<double>{11}));
}

TEST(Ops, MatmulMatchesTripleLoopAndIsAssociative) {
  Rng rng(8);
  const Tensor a = rt::random_tensor({17, 23}, rng), b = rt::random_tensor({23, 9}, rng), c = rt::random_tensor({9, 5}, rng);
  const Tensor ab = matmul(a, b);
  for (std::size_t i = 0; i < 17; ++i)
    for (std::size_t j = 0; j < 9; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 23; ++k) s += a.at(i, k) * b.at(k, j);
      EXPECT_NEAR(ab.at(i, j), s, 1e-12);
    }
  const Tensor left = matmul(ab, c), right = matmul(a, matmul(b, c));
  for (std::size_t i = 0; i < left.numel(); ++i) EXPECT_NEAR(left[i], right[i], 1e-10);
}

TEST(Ops, ActivationFixedPoints) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  const Tensor x({1, 3}, std::vector<double>{0.0, -3.2, 3.2});
  EXPECT_EQ(activate(x, Activation::kTanh)[0], 0.0);
  EXPECT_EQ(activate(x, Activation::kRelu).values(), (std::vector<double>{0.0, 0.0, 3.2}));
}

TEST(Ops, SoftmaxUniformExtremeAndShiftInvariant) {
  const Tensor u = softmax(Tensor({1, 4}, 0.0));
  for (double v : u.values()) EXPECT_DOUBLE_EQ(v, 0.25);
  const Tensor e = softmax(Tensor({1, 2}, std::vector<double>{1000, 0}));
  EXPECT_EQ(e[0], 1.0);
  EXPECT_LT(e[1], 1e-300);

  Rng rng(9);
  const Tensor x = rt::random_tensor({6, 7}, rng, -20, 20);
  const Tensor p = softmax(x);
  for (std::size_t r = 0; r < 6; ++r) {
    long double m = x.at(r, 0), sum = 0;
    for (std::size_t c = 1; c < 7; ++c) m = std::max<long double>(m, x.at(r, c));
    for (std::size_t c = 0; c < 7; ++c) sum += std::exp(static_cast<long double>(x.at(r, c)) - m);
    for (std::size_t c = 0; c < 7; ++c)
      EXPECT_NEAR(p.at(r, c), static_cast<double>(std::exp(static_cast<long double>(x.at(r, c)) - m) / sum), 1e-10);
  }
  Tensor shifted = x;
  for (auto& v : shifted) v += 123.0;
  const Tensor q = softmax(shifted);
  for (std::size_t i = 0; i < p.numel(); ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
}

TEST(Ops, ConcatWidths) {
  const Tensor a({2, 3}, 1.0), b({2, 5}, 2.0);
  EXPECT_EQ(concat_last(a, b).shape(), (Shape{2, 8}));
  const Tensor c = concat_last(Tensor({1}, 1.0), Tensor({2}, std::vector<double>{2, 3}));
  EXPECT_EQ(c.values(), (std::vector<double>{1, 2, 3}));
  EXPECT_THROW(concat_last(Tensor({2, 3}, 1.0), Tensor({3, 3}, 1.0)), DimensionError);
}
