#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mmdmp/deep_kernel.hpp"
#include "test_support.hpp"

namespace mmdmp {
namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

FeaturizerParams zero_featurizer(Eigen::Index d, Eigen::Index out) {
  FeaturizerParams f;
  f.layers.push_back({Matrix::Zero(out, d), Vector::Zero(out)});
  return f;
}

FeaturizerParams identity_featurizer(Eigen::Index d) {
  FeaturizerParams f;
  f.layers.push_back({Matrix::Identity(d, d), Vector::Zero(d)});
  return f;
}

TEST(GaussianKernel, HandValues) {
  EXPECT_DOUBLE_EQ(gaussian_kernel(vec({0, 0}), vec({0, 0}), 1.0), 1.0);
  EXPECT_NEAR(gaussian_kernel(vec({0, 0}), vec({3, 4}), 5.0), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(gaussian_kernel(vec({1}), vec({2}), 1.0), 0.6065306597126334, 1e-15);
  EXPECT_THROW(gaussian_kernel(vec({1}), vec({2}), 0.0), InvalidInput);
}

TEST(Featurize, ZeroWeightsGiveBias) {
  FeaturizerParams f = zero_featurizer(3, 2);
  f.layers[0].bias << 0.5, -1.0;
  std::mt19937_64 gen(1);
  const Matrix out = featurize(f, oracle::random_matrix(4, 3, gen));
  for (Eigen::Index i = 0; i < 4; ++i) {
    EXPECT_EQ(out(i, 0), 0.5);
    EXPECT_EQ(out(i, 1), -1.0);
  }
}

TEST(Featurize, SingleIdentityLayerIsIdentity) {
  std::mt19937_64 gen(2);
  const Matrix x = oracle::random_matrix(5, 4, gen);
  EXPECT_EQ(featurize(identity_featurizer(4), x), x);
}

TEST(Featurize, IdenticalRowsGiveIdenticalFeatures) {
  const FeaturizerParams f = make_default_featurizer(6, 3);
  std::mt19937_64 gen(3);
  Matrix x = oracle::random_matrix(3, 6, gen);
  x.row(2) = x.row(0);
  const Matrix out = featurize(f, x);
  EXPECT_EQ(out.row(0), out.row(2));
  EXPECT_EQ(out.cols(), 6);
}

TEST(Featurize, RejectsWrongWidth) {
  EXPECT_THROW(featurize(make_default_featurizer(4, 0), Matrix::Zero(2, 5)), InvalidInput);
}

TEST(Featurize, MatchesHandWrittenTwoLayerMlp) {
  const FeaturizerParams f = make_mlp({3, 4, 2}, 11);
  std::mt19937_64 gen(4);
  const Matrix x = oracle::random_matrix(5, 3, gen);
  const Matrix out = featurize(f, x);
  for (int r = 0; r < 5; ++r) {
    for (int o = 0; o < 2; ++o) {
      double acc = f.layers[1].bias(o);
      for (int h = 0; h < 4; ++h) {
        double pre = f.layers[0].bias(h);
        for (int i = 0; i < 3; ++i) pre += f.layers[0].weight(h, i) * x(r, i);
        acc += f.layers[1].weight(o, h) * std::log1p(std::exp(pre));
      }
      EXPECT_NEAR(out(r, o), acc, 1e-12);
    }
  }
}

TEST(MakeMlp, SeedDeterminesWeights) {
  const auto a = make_mlp({5, 7, 3}, 9);
  const auto b = make_mlp({5, 7, 3}, 9);
  const auto c = make_mlp({5, 7, 3}, 10);
  EXPECT_EQ(a.layers[0].weight, b.layers[0].weight);
  EXPECT_NE(a.layers[0].weight, c.layers[0].weight);
  EXPECT_EQ(a.parameter_count(), 5 * 7 + 7 + 7 * 3 + 3);
}

TEST(KernelParams, ParameterizationRoundTrips) {
  KernelParams p;
  p.set_epsilon(0.25);
  p.set_sigma_phi(3.0);
  p.set_sigma_q(0.5);
  EXPECT_NEAR(p.epsilon(), 0.25, 1e-15);
  EXPECT_NEAR(p.sigma_phi(), 3.0, 1e-15);
  EXPECT_NEAR(p.sigma_q(), 0.5, 1e-15);
  EXPECT_THROW(p.set_epsilon(0.0), InvalidInput);
  EXPECT_THROW(p.set_epsilon(1.0), InvalidInput);
  EXPECT_THROW(p.set_sigma_q(-1.0), InvalidInput);
}

TEST(KernelMatrix, EpsilonNearOneReducesToQ) {
  std::mt19937_64 gen(5);
  const SampleSet x(oracle::random_matrix(4, 3, gen));
  const SampleSet y(oracle::random_matrix(4, 3, gen));
  KernelParams omega = make_kernel({0.5, 1.0, 1.7}, make_default_featurizer(3, 1));
  omega.epsilon_raw = 1e6;  // clamps just below 1
  const KernelMatrices k = kernel_matrix(omega, x, y);
  const KernelMatrices q = oracle::gaussian_blocks(x.data, y.data, 1.7);
  EXPECT_LT((k.kxx - q.kxx).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_LT((k.kxy - q.kxy).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_LT((k.kyy - q.kyy).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(KernelMatrix, ConstantFeaturizerReducesToQ) {
  std::mt19937_64 gen(6);
  const SampleSet x(oracle::random_matrix(5, 2, gen));
  const SampleSet y(oracle::random_matrix(5, 2, gen));
  const KernelParams omega = make_kernel({0.3, 2.0, 0.9}, zero_featurizer(2, 3));
  const KernelMatrices k = kernel_matrix(omega, x, y);
  const KernelMatrices q = oracle::gaussian_blocks(x.data, y.data, 0.9);
  EXPECT_LT((k.kxy - q.kxy).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((k.kxx - q.kxx).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(KernelMatrix, MatchesNaiveFormula) {
  std::mt19937_64 gen(7);
  const SampleSet x(oracle::random_matrix(4, 3, gen));
  const SampleSet y(oracle::random_matrix(6, 3, gen));
  const KernelParams omega = make_kernel({0.2, 1.3, 2.1}, make_mlp({3, 5, 2}, 4));
  const Matrix fx = featurize(omega.featurizer, x.data);
  const Matrix fy = featurize(omega.featurizer, y.data);
  const KernelMatrices k = kernel_matrix(omega, x, y);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 6; ++j) {
      const double expect = (0.8 * oracle::gauss(fx.row(i), fy.row(j), 1.3) + 0.2) *
                            oracle::gauss(x.data.row(i), y.data.row(j), 2.1);
      EXPECT_NEAR(k.kxy(i, j), expect, 1e-14);
    }
  }
  EXPECT_EQ(k.kxy.rows(), 4);
  EXPECT_EQ(k.kxy.cols(), 6);
}

TEST(KernelMatrix, UnitDiagonalSymmetryAndBounds) {
  std::mt19937_64 gen(8);
  const SampleSet x(oracle::random_matrix(7, 4, gen));
  const SampleSet y(oracle::random_matrix(7, 4, gen, 3.0));
  const KernelParams omega = make_kernel({0.1, 0.8, 2.0}, make_default_featurizer(4, 2));
  const KernelMatrices k = kernel_matrix(omega, x, y);
  for (int i = 0; i < 7; ++i) {
    EXPECT_EQ(k.kxx(i, i), 1.0);
    EXPECT_EQ(k.kyy(i, i), 1.0);
  }
  EXPECT_EQ(k.kxx, k.kxx.transpose());
  EXPECT_EQ(k.kyy, k.kyy.transpose());
  const KernelMatrices q = oracle::gaussian_blocks(x.data, y.data, 2.0);
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < 7; ++j) {
      EXPECT_LE(k.kxy(i, j), q.kxy(i, j) * (1.0 + 1e-15));
      EXPECT_GE(k.kxy(i, j), 0.1 * q.kxy(i, j) * (1.0 - 1e-12));
      EXPECT_GE(k.kxy(i, j), 0.0);
      EXPECT_LE(k.kxy(i, j), 1.0);
    }
  }
}

TEST(KernelMatrix, CrossKernelAgreesWithPooled) {
  std::mt19937_64 gen(9);
  const SampleSet x(oracle::random_matrix(3, 2, gen));
  const SampleSet y(oracle::random_matrix(3, 2, gen));
  const KernelParams omega = make_kernel({0.05, 1.0, 1.0}, make_default_featurizer(2, 5));
  EXPECT_LT((cross_kernel(omega, x.data, y.data) - kernel_matrix(omega, x, y).kxy).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(KernelMatrix, RejectsDimensionMismatch) {
  const KernelParams omega = make_kernel({}, make_default_featurizer(2, 0));
  EXPECT_THROW(kernel_matrix(omega, SampleSet(Matrix::Zero(2, 2)), SampleSet(Matrix::Zero(2, 3))), InvalidInput);
}

TEST(PairwiseDistance, ExactlySymmetricWithZeroDiagonal) {
  std::mt19937_64 gen(10);
  const Matrix d = pairwise_sq_dist(oracle::random_matrix(9, 5, gen));
  EXPECT_EQ(d, d.transpose());
  EXPECT_EQ(d.diagonal(), Vector::Zero(9));
}

}  // namespace
}  // namespace mmdmp
