#include <gtest/gtest.h>

#include <cmath>

#include "idcos/idc.hpp"

using namespace idcos;

namespace {

SplitIVP<double> dahlquist(double T = 1.0) {
  return SplitIVP<double>({linear_operator(-0.5), linear_operator(-0.5)}, {1.0}, T);
}

SplitOperator<double> zero_op() {
  SplitOperator<double> op;
  op.eval = [](double, std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  op.affine = true;
  op.shifted_solve = [](double, std::span<const double>, double, std::span<const double> rhs,
                        std::span<double> out) { std::copy(rhs.begin(), rhs.end(), out.begin()); };
  return op;
}

// f(t, u) = g(t), a pure time source
SplitOperator<double> source(std::function<double(double)> g) {
  SplitOperator<double> op;
  op.eval = [g](double t, std::span<const double> u, std::span<double> out) {
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = g(t);
  };
  op.affine = true;
  op.shifted_solve = [](double, std::span<const double>, double, std::span<const double> rhs,
                        std::span<double> out) { std::copy(rhs.begin(), rhs.end(), out.begin()); };
  return op;
}

double slope(const std::vector<int>& Ns, const std::vector<double>& errs) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(Ns.size());
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    double x = std::log(1.0 / Ns[i]), y = std::log(errs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double global_order(const IDCConfig<double>& cfg, const std::vector<int>& Ns) {
  auto p = dahlquist();
  std::vector<double> errs;
  for (int N : Ns) {
    auto tr = idc_solve(p, N, cfg);
    errs.push_back(std::abs(tr.back()[0] - std::exp(-1.0)));
  }
  return slope(Ns, errs);
}

}  // namespace

TEST(Predict, LieTrotterNodes) {
  auto p = dahlquist();
  auto cfg = IDCConfig<double>::make(Scheme::LieTrotter, 3, 0);
  UniformNodeSet<double> nodes(0.0, 0.1, 3);
  auto lvl = predict(p, nodes, State<double>{1.0}, cfg);
  for (int m = 0; m <= 3; ++m) EXPECT_NEAR(lvl.values[m][0], std::pow(1.0 / (1.05 * 1.05), m), 1e-15);
  ASSERT_EQ(lvl.rhs.size(), 4u);
  EXPECT_NEAR(lvl.rhs[2][1][0], -0.5 * lvl.values[2][0], 1e-16);
}

TEST(Predict, ZeroRhsKeepsInitialValue) {
  SplitIVP<double> p({zero_op(), zero_op()}, {0.4, 1.1}, 1.0);
  auto cfg = IDCConfig<double>::make(Scheme::Strang, 5, 2);
  auto tr = idc_solve(p, 3, cfg);
  for (const auto& u : tr.states()) EXPECT_EQ(u, p.initial_state());
}

TEST(Predict, SingleSubIntervalIsOneStep) {
  auto p = dahlquist();
  auto cfg = IDCConfig<double>::make(Scheme::LieTrotter, 1, 0);
  auto tr = idc_solve(p, 1, cfg);
  auto direct = lie_trotter_step(p, 0.0, 1.0, p.initial_state());
  EXPECT_EQ(tr.back()[0], direct[0]);
}

TEST(Predict, RejectsNonFiniteStart) {
  auto p = dahlquist();
  auto cfg = IDCConfig<double>::make(Scheme::LieTrotter, 2, 0);
  UniformNodeSet<double> nodes(0.0, 0.1, 2);
  EXPECT_THROW(predict(p, nodes, State<double>{NAN}, cfg), UsageError);
}

TEST(ResidualIntegrals, ZeroForConstantData) {
  SplitIVP<double> p({zero_op()}, {3.0}, 1.0);
  UniformNodeSet<double> nodes(0.0, 0.25, 4);
  IDCLevelResult<double> lvl{nodes, std::vector<State<double>>(5, State<double>{3.0}), {}};
  lvl.rhs = detail::nodal_rhs(p, nodes, lvl.values);
  for (auto& r : residual_integrals(lvl, p)) EXPECT_EQ(r[0], 0.0);
}

TEST(ResidualIntegrals, ZeroForUnitSlope) {
  SplitIVP<double> p({source([](double) { return 1.0; })}, {0.0}, 1.0);
  UniformNodeSet<double> nodes(0.0, 0.5, 2);
  IDCLevelResult<double> lvl{nodes, {{0.0}, {0.5}, {1.0}}, {}};
  lvl.rhs = detail::nodal_rhs(p, nodes, lvl.values);
  auto r = residual_integrals(lvl, p);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_NEAR(r[0][0], 0.0, 1e-15);
  EXPECT_NEAR(r[1][0], 0.0, 1e-15);
}

TEST(ResidualIntegrals, ZeroForExactPolynomialSolution) {
  // u = 1 + t - t^3 solves u' = 1 - 3t^2
  auto u = [](double t) { return 1 + t - t * t * t; };
  SplitIVP<double> p({source([](double) { return 1.0; }), source([](double t) { return -3 * t * t; })},
                     {1.0}, 1.0);
  UniformNodeSet<double> nodes(0.0, 0.2, 4);
  IDCLevelResult<double> lvl{nodes, {}, {}};
  for (int m = 0; m <= 4; ++m) lvl.values.push_back({u(nodes.node(m))});
  lvl.rhs = detail::nodal_rhs(p, nodes, lvl.values);
  for (auto mode : {ResidualMode::InterpolantExact, ResidualMode::Oversampled})
    for (auto& r : residual_integrals(lvl, p, mode)) EXPECT_NEAR(r[0], 0.0, 1e-12);
}

TEST(ResidualIntegrals, OversampledMatchesExactForLinearProblems) {
  auto p = dahlquist();
  auto cfg = IDCConfig<double>::make(Scheme::LieTrotter, 4, 0);
  UniformNodeSet<double> nodes(0.0, 0.1, 4);
  auto lvl = predict(p, nodes, State<double>{1.0}, cfg);
  auto a = residual_integrals(lvl, p, ResidualMode::InterpolantExact);
  auto b = residual_integrals(lvl, p, ResidualMode::Oversampled, 13);
  for (int m = 0; m < 4; ++m) EXPECT_NEAR(a[m][0], b[m][0], 1e-14);
}

TEST(CorrectOnce, FixedPointOnExactPolynomialData) {
  auto u = [](double t) { return 1 + t - t * t * t; };
  SplitIVP<double> p({source([](double) { return 1.0; }), source([](double t) { return -3 * t * t; })},
                     {1.0}, 1.0);
  UniformNodeSet<double> nodes(0.0, 0.2, 4);
  IDCLevelResult<double> lvl{nodes, {}, {}};
  for (int m = 0; m <= 4; ++m) lvl.values.push_back({u(nodes.node(m))});
  lvl.rhs = detail::nodal_rhs(p, nodes, lvl.values);
  for (auto scheme : {Scheme::LieTrotter, Scheme::Strang, Scheme::Adi}) {
    auto cfg = IDCConfig<double>::make(scheme, 4, 1);
    auto next = correct_once(p, lvl, 1, cfg);
    for (int m = 0; m <= 4; ++m) EXPECT_NEAR(next.values[m][0], lvl.values[m][0], 1e-12);
  }
}

TEST(CorrectOnce, ZeroRhsUnchangedAndInitialNodeFixed) {
  SplitIVP<double> p({zero_op(), zero_op()}, {2.0}, 1.0);
  auto cfg = IDCConfig<double>::make(Scheme::Adi, 3, 1);
  UniformNodeSet<double> nodes(0.0, 0.1, 3);
  auto lvl = predict(p, nodes, State<double>{2.0}, cfg);
  auto next = correct_once(p, lvl, 1, cfg);
  for (int m = 0; m <= 3; ++m) EXPECT_EQ(next.values[m][0], 2.0);
  EXPECT_THROW(correct_once(p, lvl, 0, cfg), UsageError);

  auto p2 = dahlquist();
  for (auto scheme : {Scheme::LieTrotter, Scheme::Strang, Scheme::Adi}) {
    auto c2 = IDCConfig<double>::make(scheme, 4, 3);
    auto l = idc_macro_step(p2, 0.0, 0.4, State<double>{0.7}, c2);
    EXPECT_EQ(l.values[0][0], 0.7);
  }
}

TEST(CorrectOnce, LieTwoSubIntervalsOneCorrectionSlope) {
  // H = 0.2 halved five times, error at T = 1
  auto cfg = IDCConfig<double>::make(Scheme::LieTrotter, 2, 1);
  EXPECT_NEAR(global_order(cfg, {5, 10, 20, 40, 80, 160}), 2.0, 0.15);
}

TEST(IdcSolve, SingleMacroStepEqualsManualSweeps) {
  auto p = dahlquist();
  auto cfg = IDCConfig<double>::make(Scheme::Strang, 4, 2);
  cfg.warn = [](const std::string&) {};
  auto tr = idc_solve(p, 1, cfg);
  UniformNodeSet<double> nodes(0.0, 0.25, 4);
  auto lvl = predict(p, nodes, p.initial_state(), cfg);
  lvl = correct_once(p, lvl, 1, cfg);
  lvl = correct_once(p, lvl, 2, cfg);
  EXPECT_EQ(tr.back()[0], lvl.values.back()[0]);
}

TEST(IdcSolve, LieThreeLevels) {
  auto cfg = IDCConfig<double>::make(Scheme::LieTrotter, 3, 2);
  EXPECT_NEAR(global_order(cfg, {4, 8, 16, 32, 64}), 3.0, 0.2);
}

TEST(IdcSolve, StrangOneCorrection) {
  auto cfg = IDCConfig<double>::make(Scheme::Strang, 4, 1);
  EXPECT_NEAR(global_order(cfg, {4, 8, 16, 32, 64}), 4.0, 0.2);
}

TEST(IdcSolve, AdiOneCorrection) {
  auto cfg = IDCConfig<double>::make(Scheme::Adi, 4, 1);
  EXPECT_NEAR(global_order(cfg, {4, 8, 16, 32, 64}), 4.0, 0.25);
}

TEST(IdcSolve, AdditiveResidualFormAlsoLiftsOrder) {
  auto cfg = IDCConfig<double>::make(Scheme::LieTrotter, 3, 2);
  cfg.error_form = ErrorForm::AdditiveResidual;
  EXPECT_NEAR(global_order(cfg, {4, 8, 16, 32, 64}), 3.0, 0.25);
}

TEST(IdcSolve, NonlinearNonAutonomousLie) {
  // u' = -u^2 + cos t + (1 + sin t)^2 has u = 1 + sin t
  SplitOperator<double> sq;
  sq.eval = [](double, std::span<const double> u, std::span<double> out) { out[0] = -u[0] * u[0]; };
  auto p = SplitIVP<double>(
      {sq, source([](double t) { return std::cos(t) + (1 + std::sin(t)) * (1 + std::sin(t)); })},
      {1.0}, 1.0);
  auto cfg = IDCConfig<double>::make(Scheme::LieTrotter, 3, 2);
  std::vector<int> Ns{32, 64, 128, 256};
  std::vector<double> errs;
  for (int N : Ns) errs.push_back(std::abs(idc_solve(p, N, cfg).back()[0] - (1 + std::sin(1.0))));
  EXPECT_NEAR(slope(Ns, errs), 3.0, 0.25);
}

TEST(IdcSolve, CorrectorOverride) {
  auto cfg = IDCConfig<double>::make(Scheme::Strang, 4, 1);
  cfg.correctors.push_back(make_stepper<double>(Scheme::LieTrotter));
  EXPECT_EQ(cfg.accumulated_order(), 3);
  EXPECT_NEAR(global_order(cfg, {4, 8, 16, 32, 64}), 3.0, 0.25);
}

TEST(IdcSolve, WarnsWhenOrderExceedsQuadrature) {
  auto cfg = IDCConfig<double>::make(Scheme::Strang, 2, 2);
  std::string msg;
  cfg.warn = [&](const std::string& m) { msg = m; };
  idc_solve(dahlquist(), 2, cfg);
  EXPECT_NE(msg.find("saturate"), std::string::npos);
}

TEST(IdcSolve, KeepSubnodesAndValidation) {
  auto cfg = IDCConfig<double>::make(Scheme::LieTrotter, 3, 1);
  cfg.keep_subnodes = true;
  auto tr = idc_solve(dahlquist(), 2, cfg);
  EXPECT_EQ(tr.size(), 7u);
  EXPECT_DOUBLE_EQ(tr.back_time(), 1.0);
  EXPECT_THROW(idc_solve(dahlquist(), 0, cfg), UsageError);
  cfg.M = 20;
  EXPECT_THROW(idc_solve(dahlquist(), 1, cfg), UsageError);
}

TEST(IdcSolve, ErrorsCarryContext) {
  SplitOperator<double> bad;
  bad.eval = [](double t, std::span<const double>, std::span<double> out) {
    out[0] = t > 0.6 ? NAN : 0.0;
  };
  SplitIVP<double> p({linear_operator(-1.0), bad}, {1.0}, 1.0);
  auto cfg = IDCConfig<double>::make(Scheme::LieTrotter, 2, 0);
  try {
    idc_solve(p, 4, cfg);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("macro interval 2"), std::string::npos) << e.what();
    EXPECT_EQ(e.op(), 1u);
  }
}
