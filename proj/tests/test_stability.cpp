#include <gtest/gtest.h>

#include <sstream>

#include "idcos/stability.hpp"

using namespace idcos;
using C = std::complex<double>;

TEST(Amplification, ZeroLambdaIsOne) {
  for (auto scheme : {Scheme::LieTrotter, Scheme::Strang, Scheme::Adi})
    for (int cs = 0; cs <= 3; ++cs) {
      StabilitySpec s{scheme, cs, 4};
      EXPECT_EQ(amplification(C(0.0), s), C(1.0));
    }
}

TEST(Amplification, HandAlgebra) {
  StabilitySpec lie{Scheme::LieTrotter, 0, 1};
  EXPECT_NEAR(amplification(C(-2.0), lie).real(), 0.25, 1e-15);
  StabilitySpec adi{Scheme::Adi, 0, 1};
  EXPECT_NEAR(amplification(C(-2.0), adi).real(), 1.0 / 9.0, 1e-15);
  // M sub-steps of the base scheme when no correction is made
  StabilitySpec lie3{Scheme::LieTrotter, 0, 3, ResidualMode::InterpolantExact};
  double f = 1.0 / (1.0 + 1.0 / 3.0);
  EXPECT_NEAR(amplification(C(-2.0), lie3).real(), std::pow(f, 6), 1e-15);
}

TEST(Amplification, PoleIsReported) {
  // Lie-Trotter backward Euler with h = 1: 1 - lambda/2 = 0 at lambda = 2
  StabilitySpec lie{Scheme::LieTrotter, 0, 1};
  EXPECT_THROW(amplification(C(2.0), lie), PoleError);
}

TEST(Amplification, ResidualModesAgreeOnLinearProblem) {
  for (auto scheme : {Scheme::LieTrotter, Scheme::Strang, Scheme::Adi}) {
    StabilitySpec a{scheme, 2, 4, ResidualMode::InterpolantExact};
    StabilitySpec b{scheme, 2, 4, ResidualMode::Oversampled};
    for (C lam : {C(-3.0, 1.0), C(-0.5, 2.0), C(-40.0, 0.0)})
      EXPECT_NEAR(std::abs(amplification(lam, a) - amplification(lam, b)), 0.0, 1e-12);
  }
}

TEST(Amplification, AdiBaseIsUnimodularOnImaginaryAxis) {
  StabilitySpec adi{Scheme::Adi, 0, 3};
  for (double y : {0.1, 1.0, 5.0, 30.0}) EXPECT_NEAR(std::abs(amplification(C(0.0, y), adi)), 1.0, 1e-14);
}

TEST(Amplification, ConjugateSymmetry) {
  for (auto scheme : {Scheme::LieTrotter, Scheme::Strang, Scheme::Adi}) {
    StabilitySpec s{scheme, 2, 5};
    for (C lam : {C(-3.0, 1.0), C(-0.5, 2.0), C(1.0, -7.0)}) {
      C a = amplification(lam, s), b = amplification(std::conj(lam), s);
      EXPECT_NEAR(std::abs(a - std::conj(b)), 0.0, 1e-13);
    }
  }
}

TEST(Scan, LieBaseStableInLeftHalfPlane) {
  StabilityScan scan;
  scan.re_lo = -10;
  scan.re_hi = 0;
  scan.im_lo = -5;
  scan.im_hi = 5;
  scan.n_re = 41;
  scan.n_im = 41;
  scan.spec = {Scheme::LieTrotter, 0, 3};
  scan_region(scan);
  for (int j = 0; j < scan.n_im; ++j)
    for (int i = 0; i < scan.n_re; ++i) {
      EXPECT_GE(scan.at(i, j), 0.0);
      if (scan.re(i) < 0) {
        EXPECT_LT(scan.at(i, j), 1.0);
      }
    }
}

TEST(Scan, SymmetricAboutRealAxisAndPolesFlagged) {
  StabilityScan scan;
  scan.re_lo = -4;
  scan.re_hi = 4;
  scan.im_lo = -3;
  scan.im_hi = 3;
  scan.n_re = 9;
  scan.n_im = 7;
  scan.spec = {Scheme::LieTrotter, 0, 1};
  scan_region(scan);
  for (int j = 0; j < scan.n_im; ++j)
    for (int i = 0; i < scan.n_re; ++i) {
      double a = scan.at(i, j), b = scan.at(i, scan.n_im - 1 - j);
      if (std::isfinite(a)) {
        EXPECT_NEAR(a, b, 1e-12 * a);
      }
    }
  // lambda = 2 is a pole of the M=1 Lie-Trotter factor
  EXPECT_TRUE(std::isinf(scan.at(6, 3)));
  std::ostringstream os;
  write_field_csv(os, scan);
  EXPECT_NE(os.str().find(",inf\n"), std::string::npos);
  EXPECT_EQ(os.str().rfind("re,im,abs_amp\n", 0), 0u);
}

TEST(Scan, RejectsDegenerateGrid) {
  StabilityScan scan;
  scan.n_re = 1;
  EXPECT_THROW(scan_region(scan), UsageError);
}

TEST(Contour, UnitCircleOfSyntheticField) {
  StabilityScan scan;
  scan.re_lo = scan.im_lo = -2;
  scan.re_hi = scan.im_hi = 2;
  scan.n_re = scan.n_im = 81;
  scan.amp.resize(81 * 81);
  for (int j = 0; j < 81; ++j)
    for (int i = 0; i < 81; ++i) scan.amp[j * 81 + i] = std::abs(C(scan.re(i), scan.im(j)));
  auto lines = level_contour(scan, 1.0);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_EQ(lines[0].front(), lines[0].back());
  for (auto p : lines[0]) EXPECT_NEAR(std::abs(p), 1.0, 2e-3);
  std::ostringstream os;
  write_contour_csv(os, lines);
  EXPECT_EQ(os.str().rfind("re,im,segment_id\n", 0), 0u);
}

TEST(Contour, AdiImaginaryAxisOnLevelSet) {
  StabilityScan scan;
  scan.re_lo = -2;
  scan.re_hi = 2;
  scan.im_lo = -3;
  scan.im_hi = 3;
  scan.n_re = 21;
  scan.n_im = 31;
  scan.spec = {Scheme::Adi, 0, 2};
  scan_region(scan);
  for (int j = 0; j < scan.n_im; ++j) EXPECT_NEAR(scan.at(10, j), 1.0, 1e-13);
}

TEST(Threshold, LieTrotterFarFieldStable) {
  for (int cs = 0; cs <= 3; ++cs) {
    StabilitySpec s{Scheme::LieTrotter, cs, default_M(cs + 1)};
    EXPECT_LE(std::abs(amplification(C(-100.0), s)), 1.0);
    EXPECT_LE(std::abs(amplification(C(-1e6), s)), 1.0);
  }
}

TEST(Threshold, StrangFiniteRegionShrinks) {
  double prev = 1e300;
  for (int cs = 1; cs <= 3; ++cs) {
    StabilitySpec s{Scheme::Strang, cs, 8};
    auto r = real_instability_threshold(s);
    ASSERT_TRUE(r.has_value()) << "c_s=" << cs;
    EXPECT_LT(*r, 0.0);
    EXPECT_GT(std::abs(amplification(C(*r * 1.01), s)), 1.0);
    EXPECT_LE(std::abs(*r), prev);
    prev = std::abs(*r);
  }
}

TEST(Threshold, StrangBaseHasNoRealInstability) {
  StabilitySpec s{Scheme::Strang, 0, 4};
  EXPECT_FALSE(real_instability_threshold(s, 1e3).has_value());
}
