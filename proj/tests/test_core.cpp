#include <gtest/gtest.h>

#include <random>

#include "idcos/core.hpp"

using namespace idcos;

namespace {

SplitIVP<double> two_linear(double l1, double l2) {
  return SplitIVP<double>({linear_operator(l1), linear_operator(l2)}, {1.0}, 1.0);
}

SplitOperator<double> zero_op() {
  SplitOperator<double> op;
  op.eval = [](double, std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  op.affine = true;
  return op;
}

}  // namespace

TEST(SplitIVP, EvaluatesLinearOperator) {
  auto p = two_linear(-1.0, -1.0);
  auto f = p.eval(0, 0.3, State<double>{1.0});
  EXPECT_EQ(f[0], -1.0);
}

TEST(SplitIVP, ZeroOperatorGivesZero) {
  SplitIVP<double> p({zero_op()}, {2.0, -3.0}, 1.0);
  auto f = p.eval(0, 0.0, State<double>{5.0, 7.0});
  EXPECT_EQ(f[0], 0.0);
  EXPECT_EQ(f[1], 0.0);
}

TEST(SplitIVP, IndexOutOfRangeIsUsageError) {
  auto p = two_linear(-1.0, -1.0);
  EXPECT_THROW(p.eval(2, 0.0, State<double>{1.0}), UsageError);
}

TEST(SplitIVP, DimensionMismatchIsUsageError) {
  auto p = two_linear(-1.0, -1.0);
  EXPECT_THROW(p.eval(0, 0.0, State<double>{1.0, 2.0}), UsageError);
}

TEST(SplitIVP, NonFiniteOutputCarriesOperatorAndTime) {
  SplitOperator<double> bad;
  bad.eval = [](double, std::span<const double> u, std::span<double> out) {
    out[0] = u[0] / 0.0;
  };
  SplitIVP<double> p({zero_op(), bad}, {1.0}, 1.0);
  try {
    p.eval(1, 0.25, State<double>{1.0});
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.op(), 1u);
    EXPECT_DOUBLE_EQ(e.time(), 0.25);
  }
}

TEST(SplitIVP, RejectsBadConstruction) {
  EXPECT_THROW(SplitIVP<double>({}, {1.0}, 1.0), UsageError);
  EXPECT_THROW(SplitIVP<double>({zero_op()}, {1.0}, 0.0), UsageError);
  EXPECT_THROW(SplitIVP<double>({zero_op()}, {}, 1.0), UsageError);
}

TEST(SplitIVP, TotalEqualsSumOfParts) {
  SplitOperator<double> quad;
  quad.eval = [](double t, std::span<const double> u, std::span<double> out) {
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = -u[i] * u[i] + std::sin(t);
  };
  SplitIVP<double> p({linear_operator(-0.7), quad, linear_operator(2.5)}, State<double>(4, 1.0), 1.0);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  for (int s = 0; s < 100; ++s) {
    State<double> u(4);
    for (auto& x : u) x = U(rng);
    double t = U(rng);
    auto total = p.eval_total(t, u);
    State<double> sum(4, 0.0);
    for (std::size_t nu = 0; nu < 3; ++nu) {
      auto f = p.eval(nu, t, u);
      for (int i = 0; i < 4; ++i) sum[i] += f[i];
    }
    double scale = 1.0 + max_norm(total);
    for (int i = 0; i < 4; ++i) EXPECT_LE(std::abs(total[i] - sum[i]), 1e-12 * scale);
  }
}

TEST(SplitIVP, ComplexScalars) {
  using C = std::complex<double>;
  SplitIVP<C> p({linear_operator(C(0.0, 1.0))}, {C(1.0, 0.0)}, 1.0);
  auto f = p.eval(0, 0.0, State<C>{C(2.0, 0.0)});
  EXPECT_EQ(f[0], C(0.0, 2.0));
}

TEST(Trajectory, RequiresIncreasingTimes) {
  Trajectory<double> tr;
  tr.push_back(0.0, {1.0});
  tr.push_back(0.5, {2.0});
  EXPECT_THROW(tr.push_back(0.5, {3.0}), UsageError);
  EXPECT_THROW(tr.push_back(1.0, {3.0, 4.0}), UsageError);
  EXPECT_EQ(tr.size(), 2u);
  EXPECT_EQ(tr.back()[0], 2.0);
}

TEST(LinearOperator, ShiftedSolvePole) {
  auto op = linear_operator(2.0);
  State<double> x{1.0}, out(1);
  State<double> rhs{1.0};
  EXPECT_THROW(op.shifted_solve(0.0, x, 0.5, rhs, out), PoleError);
  op.shifted_solve(0.0, x, 0.25, rhs, out);
  EXPECT_DOUBLE_EQ(out[0], 2.0);
}
