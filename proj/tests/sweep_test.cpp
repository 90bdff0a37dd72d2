#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "heatadapt/sweep.hpp"

using namespace heatadapt;

TEST(TridiagRowCoeffs, HandSubstitution) {
  const auto rc = tridiag_row_coeffs(1, 1, 1, 1, 300);
  EXPECT_DOUBLE_EQ(rc.A, 1);
  EXPECT_DOUBLE_EQ(rc.C, 1);
  EXPECT_DOUBLE_EQ(rc.B, 3);
  EXPECT_DOUBLE_EQ(rc.F, -300);
}

TEST(TridiagRowCoeffs, ConductionFreeLimit) {
  const auto rc = tridiag_row_coeffs(1e-300, 2.0, 0.5, 4.0, 300);
  EXPECT_NEAR(rc.A, 0.0, 1e-290);
  EXPECT_NEAR(rc.B, 0.5, 1e-290);
}

TEST(TridiagRowCoeffs, DiagonalDominanceIdentity) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.01, 100.0);
  for (int i = 0; i < 500; ++i) {
    const double phi = U(rng), omega = U(rng), h = U(rng) * 0.01, tau = U(rng);
    const auto rc = tridiag_row_coeffs(phi, omega, h, tau, 1000);
    EXPECT_NEAR(rc.B - rc.A - rc.C, omega / tau, 1e-9 * rc.B);
    EXPECT_GT(rc.B, rc.A + rc.C);
  }
}

TEST(SweepStartX, HandSubstitution) {
  BoundaryConditions bc;  // kappa1 = eps1 = 0
  const auto s = sweep_start_x(1, 1, bc, 1, 1, 300);
  EXPECT_NEAR(s.alpha0, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.beta0, 100.0, 1e-12);
}

TEST(SweepStartX, EqualTemperaturesCancelRadiation) {
  BoundaryConditions a, b;
  a.T1 = 300;
  b.T1 = 900;
  b.eps1 = 0.0;
  const auto sa = sweep_start_x(2, 3, a, 0.1, 1, 300);
  const auto sb = sweep_start_x(2, 3, b, 0.1, 1, 300);
  EXPECT_DOUBLE_EQ(sa.beta0, sb.beta0);  // no convection, no radiation: T1 is irrelevant
  BoundaryConditions c;
  c.T1 = 700;
  c.eps1 = 0.8;
  const auto sc = sweep_start_x(2, 3, c, 0.1, 1, 700);
  BoundaryConditions d = c;
  d.eps1 = 0.0;
  EXPECT_DOUBLE_EQ(sc.beta0, sweep_start_x(2, 3, d, 0.1, 1, 700).beta0);
}

TEST(SweepStartY, HandSubstitution) {
  BoundaryConditions bc;
  const auto s = sweep_start_y(1, 1, bc, 1, 1, 300);
  EXPECT_NEAR(s.alpha0, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.beta0, 100.0, 1e-12);
}

TEST(SweepStartY, FluxFreeRelaxation) {
  BoundaryConditions bc;
  const double phi = 3, omega = 2, h = 0.2, tau = 0.7, T = 812;
  const double a = phi / omega;
  EXPECT_NEAR(sweep_start_y(phi, omega, bc, h, tau, T).beta0, h * h * T / (h * h + 2 * a * tau), 1e-12);
}

TEST(SweepStarts, AlphaInsideUnitInterval) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(1e-3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    BoundaryConditions bc;
    bc.kappa1 = U(rng);
    bc.eps1 = 0.5;
    bc.T1 = 300 + U(rng);
    const double phi = U(rng), omega = U(rng), h = U(rng) * 1e-3, tau = U(rng);
    const auto sx = sweep_start_x(phi, omega, bc, h, tau, 500);
    const auto sy = sweep_start_y(phi, omega, bc, h, tau, 500);
    EXPECT_GT(sx.alpha0, 0.0);
    EXPECT_LT(sx.alpha0, 1.0);
    EXPECT_GT(sy.alpha0, 0.0);
    EXPECT_LT(sy.alpha0, 1.0);
  }
}

TEST(ForwardSweep, HandRecursion) {
  const std::vector<double> line(5, 300.0);
  const auto s = forward_sweep(line, {2.0 / 3.0, 100.0}, 1, 1, 1, 1);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_NEAR(s.alpha[1], 3.0 / 7.0, 1e-15);
  EXPECT_NEAR(s.beta[1], 1200.0 / 7.0, 1e-12);
}

TEST(ForwardSweep, ZeroCarry) {
  const std::vector<double> line(3, 300.0);
  const auto s = forward_sweep(line, {0.0, 5.0}, 1, 1, 1, 1);
  EXPECT_NEAR(s.alpha[1], 1.0 / 3.0, 1e-15);
}

TEST(ForwardSweep, RejectsShortLines) {
  const std::vector<double> line(2, 300.0);
  EXPECT_THROW(forward_sweep(line, {0.5, 1}, 1, 1, 1, 1), InvalidArgument);
}

TEST(ForwardSweep, SingularPivotReported) {
  // alpha0 chosen so that B - C alpha0 = 0 at the first interior node
  const std::vector<double> line(4, 300.0);
  EXPECT_THROW(forward_sweep(line, {3.0, 0.0}, 1, 1, 1, 1), SingularSweep);
}

TEST(ForwardSweep, AlphasContractiveUnderDominance) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(1e-2, 1e2);
  std::uniform_real_distribution<double> T(300, 1600);
  for (int i = 0; i < 300; ++i) {
    std::vector<double> line(3 + i % 40);
    for (double& v : line) v = T(rng);
    BoundaryConditions bc;
    bc.kappa1 = U(rng);
    const double phi = U(rng), omega = U(rng), h = 0.01 * U(rng), tau = U(rng);
    const auto s = forward_sweep(line, sweep_start_x(phi, omega, bc, h, tau, line[0]), phi, omega, h, tau);
    EXPECT_TRUE(s.contractive());
  }
}

TEST(ClosingTemperatureX, EquilibriumFixedPoint) {
  BoundaryConditions bc;
  EXPECT_NEAR(closing_temperature_x(300, 0.0, 300, 1, 1, bc, 1, 1), 300.0, 1e-12);
}

TEST(ClosingTemperatureX, HandSubstitution) {
  BoundaryConditions bc;
  EXPECT_NEAR(closing_temperature_x(300, 0.5, 400, 1, 1, bc, 1, 1), 550.0, 1e-12);
}

TEST(ClosingTemperatureX, OutgoingFluxCools) {
  BoundaryConditions bc;
  double prev = closing_temperature_x(900, 0.4, 500, 30, 4e6, bc, 0.01, 10);
  for (double q2 = 1000; q2 <= 1e5; q2 += 1000) {
    bc.q2 = q2;
    const double t = closing_temperature_x(900, 0.4, 500, 30, 4e6, bc, 0.01, 10);
    EXPECT_LT(t, prev);
    prev = t;
  }
}

TEST(ClosingTemperatureX, UnstableDenominator) {
  BoundaryConditions bc;
  EXPECT_THROW(closing_temperature_x(300, 5.0, 300, 1, 1, bc, 0.1, 1), UnstableClosure);
}

TEST(ClosingTemperatureY, EquilibriumFixedPoint) {
  BoundaryConditions bc;
  bc.T2 = 1100;
  bc.kappa2 = 80;
  bc.eps2 = 0.7;
  EXPECT_NEAR(closing_temperature_y(1100, 0.0, 1100, 35, 4e6, bc, 0.01, 5), 1100.0, 1e-9);
}

TEST(ClosingTemperatureY, HandSubstitution) {
  BoundaryConditions bc;
  EXPECT_NEAR(closing_temperature_y(300, 0.0, 300, 1, 1, bc, 1, 1), 300.0, 1e-12);
}

TEST(ClosingTemperatureY, HotterFurnaceNeverCools) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.1, 1.0);
  for (int i = 0; i < 200; ++i) {
    BoundaryConditions bc;
    bc.kappa2 = 200 * U(rng);
    bc.eps2 = U(rng);
    bc.T2 = 300 + 1300 * U(rng);
    const double T = 300 + 1300 * U(rng), alpha = 0.9 * U(rng), beta = 300 + 1300 * U(rng);
    const double dT2 = 1e-3 * bc.T2;
    BoundaryConditions up = bc, dn = bc;
    up.T2 += dT2;
    dn.T2 -= dT2;
    const double d = (closing_temperature_y(T, alpha, beta, 40, 4e6, up, 0.01, 10) -
                      closing_temperature_y(T, alpha, beta, 40, 4e6, dn, 0.01, 10)) / (2 * dT2);
    EXPECT_GT(d, 0.0);
  }
}

TEST(BackSubstitute, DecoupledRecursion) {
  SweepCoefficients s{{0, 0, 0}, {5, 6, 7}};
  const auto out = back_substitute(s, 9);
  EXPECT_EQ(out, (std::vector<double>{5, 6, 7, 9}));
}

TEST(BackSubstitute, HandRecursion) {
  SweepCoefficients s{{0.5, 0.5, 0.5}, {100, 100, 100}};
  const auto out = back_substitute(s, 400);
  EXPECT_DOUBLE_EQ(out[2], 300);
  EXPECT_DOUBLE_EQ(out[1], 250);
  EXPECT_DOUBLE_EQ(out[0], 225);
}

TEST(BackSubstitute, SatisfiesTridiagonalSystem) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> U(0.05, 50.0);
  std::uniform_real_distribution<double> T(300, 1600);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> line(4 + i % 60);
    for (double& v : line) v = T(rng);
    BoundaryConditions bc;
    bc.kappa1 = 10 * U(rng);
    bc.eps1 = 0.02 * U(rng);
    bc.T1 = T(rng);
    const double phi = U(rng), omega = 1e4 * U(rng), h = 1e-3 * U(rng), tau = U(rng);
    const auto s = forward_sweep(line, sweep_start_x(phi, omega, bc, h, tau, line[0]), phi, omega, h, tau);
    const auto out = back_substitute(s, closing_temperature_x(line.back(), s, phi, omega, bc, h, tau));
    ASSERT_EQ(out.size(), line.size());
    for (std::size_t l = 1; l + 1 < line.size(); ++l) {
      const auto rc = tridiag_row_coeffs(phi, omega, h, tau, line[l]);
      const double lhs = rc.A * out[l + 1] - rc.B * out[l] + rc.C * out[l - 1];
      EXPECT_NEAR(lhs, rc.F, 1e-9 * (std::abs(rc.F) + rc.B * std::abs(out[l])));
    }
  }
}
