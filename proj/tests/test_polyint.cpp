#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "idcos/polyint.hpp"

using namespace idcos;

namespace {

using V = std::vector<State<double>>;

V sample(const UniformNodeSet<double>& nodes, const std::function<double(double)>& f) {
  V v;
  for (int m = 0; m <= nodes.M(); ++m) v.push_back({f(nodes.node(m))});
  return v;
}

// Random polynomial with coefficients in [-1, 1]; returns value/antiderivative/derivative helpers.
struct Poly {
  std::vector<double> c;
  double operator()(double t) const {
    double acc = 0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
    return acc;
  }
  double antiderivative(double t) const {
    double acc = 0;
    for (std::size_t k = c.size(); k-- > 0;) acc = acc * t + c[k] / double(k + 1);
    return acc * t;
  }
  double derivative(double t, int s) const {
    double acc = 0;
    for (std::size_t k = c.size(); k-- > static_cast<std::size_t>(s);) {
      double fall = 1;
      for (int q = 0; q < s; ++q) fall *= double(k - q);
      acc += fall * c[k] * std::pow(t, double(k - s));
    }
    return acc;
  }
};

Poly random_poly(int degree, std::mt19937& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Poly p;
  for (int k = 0; k <= degree; ++k) p.c.push_back(U(rng));
  return p;
}

}  // namespace

TEST(UniformNodeSet, Basics) {
  UniformNodeSet<double> nodes(1.0, 0.25, 4);
  EXPECT_EQ(nodes.size(), 5);
  EXPECT_DOUBLE_EQ(nodes.t_end(), 2.0);
  EXPECT_THROW(UniformNodeSet<double>(0.0, 0.0, 3), UsageError);
  EXPECT_THROW(UniformNodeSet<double>(0.0, 1.0, 0), UsageError);
  EXPECT_THROW(UniformNodeSet<double>(0.0, 1.0, 17), UsageError);
}

TEST(LagrangeEval, Linear) {
  UniformNodeSet<double> nodes(0.0, 1.0, 1);
  auto v = lagrange_eval(nodes, V{{0.0}, {1.0}}, 0.5);
  EXPECT_DOUBLE_EQ(v[0], 0.5);
}

TEST(LagrangeEval, ReproducesQuadratic) {
  UniformNodeSet<double> nodes(0.0, 0.5, 2);
  auto v = lagrange_eval(nodes, sample(nodes, [](double t) { return t * t; }), 0.25);
  EXPECT_NEAR(v[0], 0.0625, 1e-15);
}

TEST(LagrangeEval, SineWithinRemainderBound) {
  UniformNodeSet<double> nodes(0.0, 1.0 / 3.0, 3);
  auto v = lagrange_eval(nodes, sample(nodes, [](double t) { return std::sin(t); }), 0.5);
  // |f^(4)| <= 1, |prod (t - t_i)| / 4! at t = 0.5
  double w = 0.5 * (0.5 - 1.0 / 3.0) * (0.5 - 2.0 / 3.0) * (0.5 - 1.0);
  EXPECT_LE(std::abs(v[0] - std::sin(0.5)), std::abs(w) / 24.0);
}

TEST(LagrangeEval, FlagsExtrapolationAndRejectsFarPoints) {
  UniformNodeSet<double> nodes(0.0, 1.0, 2);
  V vals = sample(nodes, [](double t) { return 2 * t + 1; });
  bool extra = false;
  auto v = lagrange_eval(nodes, vals, 2.5, &extra);
  EXPECT_TRUE(extra);
  EXPECT_NEAR(v[0], 6.0, 1e-13);
  lagrange_eval(nodes, vals, 1.5, &extra);
  EXPECT_FALSE(extra);
  EXPECT_THROW(lagrange_eval(nodes, vals, 3.5), UsageError);
  EXPECT_THROW(lagrange_eval(nodes, V{{1.0}}, 0.5), UsageError);
}

TEST(IntegrationMatrix, Trapezoid) {
  IntegrationMatrix<double> g(1);
  EXPECT_DOUBLE_EQ(g(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(g(0, 1), 0.5);
}

TEST(IntegrationMatrix, Simpson) {
  IntegrationMatrix<double> g(2);
  EXPECT_NEAR(g(1, 0), 1.0 / 6.0, 1e-16);
  EXPECT_NEAR(g(1, 1), 2.0 / 3.0, 1e-16);
  EXPECT_NEAR(g(1, 2), 1.0 / 6.0, 1e-16);
  // first row: int_0^1 of quadratic cardinals is (5/12, 8/12, -1/12)
  EXPECT_NEAR(g(0, 0), 5.0 / 12.0, 1e-16);
  EXPECT_NEAR(g(0, 1), 8.0 / 12.0, 1e-16);
  EXPECT_NEAR(g(0, 2), -1.0 / 12.0, 1e-16);
}

TEST(IntegrationMatrix, RowsSumToOne) {
  for (int M = 1; M <= kMaxSubIntervals; ++M) {
    IntegrationMatrix<double> g(M);
    for (int m = 0; m < M; ++m) {
      double s = 0;
      for (int j = 0; j <= M; ++j) s += g(m, j);
      EXPECT_NEAR(s, 1.0, 1e-12) << "M=" << M << " row " << m;
    }
  }
}

TEST(IntegrationMatrix, ExactOnRandomPolynomials) {
  std::mt19937 rng(11);
  for (int M = 1; M <= 12; ++M) {
    UniformNodeSet<double> nodes(0.3, 0.7 / M, M);
    auto g = integration_matrix(nodes);
    for (int trial = 0; trial < 5; ++trial) {
      Poly p = random_poly(M, rng);
      for (int m = 0; m < M; ++m) {
        double len = nodes.node(m + 1) - nodes.node(0);
        double q = 0;
        for (int j = 0; j <= M; ++j) q += g(m, j) * p(nodes.node(j));
        q *= len;
        double exact = p.antiderivative(nodes.node(m + 1)) - p.antiderivative(nodes.node(0));
        EXPECT_NEAR(q, exact, 1e-12 * (1.0 + std::abs(exact))) << "M=" << M << " m=" << m;
      }
    }
  }
}

TEST(IntegrationMatrix, AffineInvariant) {
  UniformNodeSet<double> a(0.0, 1.0, 5), b(-3.7, 0.013, 5);
  auto ga = integration_matrix(a), gb = integration_matrix(b);
  for (int m = 0; m < 5; ++m)
    for (int j = 0; j <= 5; ++j) EXPECT_EQ(ga(m, j), gb(m, j));
}

TEST(PartialIntegral, Examples) {
  UniformNodeSet<double> n1(2.0, 0.5, 1);
  auto z = partial_integral(n1, V{{0.0}, {0.0}}, 2.3);
  EXPECT_EQ(z[0], 0.0);
  auto c = partial_integral(n1, V{{1.0}, {1.0}}, 2.0 + 0.3 * 0.5);
  EXPECT_NEAR(c[0], 0.15, 1e-15);
  UniformNodeSet<double> n2(0.0, 0.5, 2);
  auto l = partial_integral(n2, sample(n2, [](double t) { return t; }), 0.5);
  EXPECT_NEAR(l[0], 0.125, 1e-15);
  EXPECT_THROW(partial_integral(n2, sample(n2, [](double t) { return t; }), 1.2), UsageError);
}

TEST(PartialIntegral, ExactOffNodeOnRandomPolynomials) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int M = 1; M <= 10; ++M) {
    UniformNodeSet<double> nodes(-1.0, 2.0 / M, M);
    Poly p = random_poly(M, rng);
    V vals = sample(nodes, p);
    for (int k = 0; k < 5; ++k) {
      double t = -1.0 + 2.0 * U(rng);
      double exact = p.antiderivative(t) - p.antiderivative(-1.0);
      EXPECT_NEAR(partial_integral(nodes, vals, t)[0], exact, 1e-12) << "M=" << M;
    }
  }
}

TEST(DifferentiationMatrix, LinearCardinals) {
  UniformNodeSet<double> nodes(0.0, 1.0, 1);
  auto D = differentiation_matrix(nodes, 1);
  EXPECT_DOUBLE_EQ(D(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(D(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(D(1, 0), -1.0);
  EXPECT_DOUBLE_EQ(D(1, 1), 1.0);
}

TEST(DifferentiationMatrix, ConstantsAndQuadratics) {
  UniformNodeSet<double> nodes(0.0, 0.5, 2);
  auto d1 = differentiation_matrix(nodes, 1).apply(sample(nodes, [](double) { return 4.2; }));
  for (auto& v : d1) EXPECT_NEAR(v[0], 0.0, 1e-12 / 0.5);
  auto d2 = differentiation_matrix(nodes, 2).apply(sample(nodes, [](double t) { return t * t; }));
  for (auto& v : d2) EXPECT_NEAR(v[0], 2.0, 1e-12);
  EXPECT_THROW(differentiation_matrix(nodes, 3), UsageError);
  EXPECT_THROW(differentiation_matrix(nodes, 0), UsageError);
}

TEST(DifferentiationMatrix, ExactOnRandomPolynomials) {
  std::mt19937 rng(5);
  for (int M = 1; M <= 8; ++M) {
    double h = 0.1;
    UniformNodeSet<double> nodes(0.2, h, M);
    Poly p = random_poly(M, rng);
    V vals = sample(nodes, p);
    for (int s = 1; s <= M; ++s) {
      auto d = differentiation_matrix(nodes, s).apply(vals);
      for (int m = 0; m <= M; ++m)
        EXPECT_NEAR(d[m][0], p.derivative(nodes.node(m), s), 1e-10 * std::pow(h, -s))
            << "M=" << M << " s=" << s;
    }
  }
}

TEST(SobolevNorm, Examples) {
  UniformNodeSet<double> nodes(0.0, 0.5, 2);
  EXPECT_EQ(sobolev_norm(nodes, V{{0.0}, {0.0}, {0.0}}, 2), 0.0);
  EXPECT_NEAR(sobolev_norm(nodes, V{{-3.0}, {-3.0}, {-3.0}}, 1), 3.0, 1e-12);
  EXPECT_NEAR(sobolev_norm(nodes, sample(nodes, [](double t) { return t; }), 1), 2.0, 1e-12);
  EXPECT_THROW(sobolev_norm(nodes, V{{0.0}, {0.0}, {0.0}}, 3), UsageError);
}
