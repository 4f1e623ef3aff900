#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "greenlink/green.hpp"
#include "greenlink/grid.hpp"
#include "greenlink/oracles.hpp"

using namespace greenlink;
using oracles::ClosedFormKernel;

namespace {

struct OracleCase {
  ClosedFormKernel::Problem problem;
  double M;
};

class GreenVsClosedForm : public ::testing::TestWithParam<OracleCase> {};

void PrintTo(const OracleCase& c, std::ostream* os) { *os << "M=" << c.M; }

std::string case_name(const ::testing::TestParamInfo<OracleCase>& info) {
  static const char* const names[] = {"mixed_k0", "mixed_k1", "dirichlet"};
  return std::string(names[static_cast<int>(info.param.problem)]) + "_" + std::to_string(info.index);
}

BvpSpec beam(double M) {
  BvpSpec spec;
  spec.order = 4;
  spec.coefficients.assign(4, CoefficientFn());
  spec.M = M;
  spec.alpha = Eigen::MatrixXd::Zero(4, 4);
  spec.beta = Eigen::MatrixXd::Zero(4, 4);
  spec.alpha(0, 0) = 1.0;
  spec.alpha(1, 2) = 1.0;
  spec.beta(2, 0) = 1.0;
  spec.beta(3, 2) = 1.0;
  return spec;
}

BvpSpec variable_k1(double M) {
  BvpSpec spec = oracles::mixed_problem(M, 1);
  spec.coefficients[0] = CoefficientFn::exponential(0.5, 1.0);
  spec.coefficients[1] = CoefficientFn::polynomial({1.0, 0.0, 2.0});
  return spec;
}

}  // namespace

TEST_P(GreenVsClosedForm, AgreesOnOffDiagonalGrid) {
  const auto [problem, M] = GetParam();
  const ClosedFormKernel ref(problem, M);
  const GreenFunction g(ref.spec());
  const Grid grid = Grid::off_diagonal(0.0, 1.0, 40);
  for (int l = 0; l <= 1; ++l) {
    const auto vals = g.eval_grid(grid.t, grid.s, l);
    double worst = 0.0;
    for (std::size_t j = 0; j < grid.s.size(); ++j)
      for (std::size_t i = 0; i < grid.t.size(); ++i)
        worst = std::max(worst, std::abs(vals[j * grid.t.size() + i] - ref(grid.t[i], grid.s[j], l)));
    EXPECT_LT(worst, 1e-9) << "l = " << l << " M = " << M;
  }
}

INSTANTIATE_TEST_SUITE_P(
    Kernels, GreenVsClosedForm,
    ::testing::Values(OracleCase{ClosedFormKernel::Problem::mixed_k0, -3.0},
                      OracleCase{ClosedFormKernel::Problem::mixed_k0, 0.0},
                      OracleCase{ClosedFormKernel::Problem::mixed_k0, 1.0},
                      OracleCase{ClosedFormKernel::Problem::mixed_k0, 15.0},
                      OracleCase{ClosedFormKernel::Problem::mixed_k1, -1.0},
                      OracleCase{ClosedFormKernel::Problem::mixed_k1, 0.0},
                      OracleCase{ClosedFormKernel::Problem::mixed_k1, 2.0},
                      OracleCase{ClosedFormKernel::Problem::mixed_k1, 1e-8},
                      OracleCase{ClosedFormKernel::Problem::dirichlet_k0, -5.0},
                      OracleCase{ClosedFormKernel::Problem::dirichlet_k0, 3.0},
                      OracleCase{ClosedFormKernel::Problem::dirichlet_k0, 20.0}),
    case_name);

TEST(Green, HandDerivedKernelValues) {
  // u'' + u, u(0) = u'(1) = 0, s = 0.5, t <= s: -sin t cos 0.5 / cos 1
  const GreenFunction g(oracles::mixed_problem(1.0, 0));
  for (double t : {0.1, 0.3, 0.5})
    EXPECT_NEAR(g.eval(t, 0.5, 0), -std::sin(t) * std::cos(0.5) / std::cos(1.0), 1e-11);
  // u'' = sigma: -t below the diagonal, -s above
  const GreenFunction g0(oracles::mixed_problem(0.0, 0));
  EXPECT_NEAR(g0.eval(0.2, 0.7, 0), -0.2, 1e-12);
  EXPECT_NEAR(g0.eval(0.9, 0.7, 0), -0.7, 1e-12);
  // u'' + M u', M = 3: e^{Ms}(e^{-Mt} - 1)/M for t < s
  const GreenFunction g3(oracles::mixed_problem(3.0, 1));
  EXPECT_NEAR(g3.eval(0.25, 0.6, 0), std::exp(1.8) * (std::exp(-0.75) - 1.0) / 3.0, 1e-11);
}

TEST(Green, FirstDerivativeOfFreeKernel) {
  const GreenFunction g(oracles::mixed_problem(0.0, 1));
  EXPECT_NEAR(g.eval(0.3, 0.6, 1), -1.0, 1e-12);
  EXPECT_NEAR(g.eval(0.8, 0.6, 1), 0.0, 1e-12);
}

TEST(Green, NeumannEndAnnihilatesDerivative) {
  const GreenFunction g(oracles::mixed_problem(1.0, 0));
  for (double s : {0.1, 0.5, 0.95}) EXPECT_NEAR(g.eval(1.0, s, 1), 0.0, 1e-12);
}

TEST(Green, SolvabilityCertificates) {
  const double quarter = std::numbers::pi * std::numbers::pi / 4.0;
  EXPECT_FALSE(check_solvability(oracles::mixed_problem(quarter, 0)).unique_solvable);
  const auto free = check_solvability(oracles::mixed_problem(0.0, 0));
  EXPECT_TRUE(free.unique_solvable);
  EXPECT_NEAR(free.determinant, 1.0, 1e-12);
  EXPECT_TRUE(check_solvability(oracles::mixed_problem(5.0, 1)).unique_solvable);
}

TEST(Green, EigenvalueParameterIsRejected) {
  const double quarter = std::numbers::pi * std::numbers::pi / 4.0;
  try {
    GreenFunction g(oracles::mixed_problem(quarter, 0));
    FAIL() << "expected SingularProblemError";
  } catch (const SingularProblemError& e) {
    EXPECT_NE(std::string(e.what()).find("eigenvalue"), std::string::npos);
  }
}

TEST(Green, DiagonalNeedsSideAtHighOrders) {
  const GreenFunction g(oracles::mixed_problem(1.0, 0));
  EXPECT_NO_THROW(g.eval(0.4, 0.4, 0));
  EXPECT_THROW(g.eval(0.4, 0.4, 1), SpecError);
  EXPECT_THROW(g.eval(0.4, 0.4, 2), SpecError);
  const double left = g.eval(0.4, 0.4, 1, Side::left);
  const double right = g.eval(0.4, 0.4, 1, Side::right);
  EXPECT_NEAR(right - left, 1.0, 1e-12);
  EXPECT_THROW(g.eval(0.4, 0.5, 3), UnsupportedOrderError);
  EXPECT_THROW(g.eval(0.4, 0.5, -1), UnsupportedOrderError);
  EXPECT_THROW(g.eval(1.2, 0.5, 0), SpecError);
}

TEST(Green, GridEvaluationMatchesPointwise) {
  const GreenFunction g(variable_k1(0.7));
  const Grid grid = Grid::uniform(0.0, 1.0, 9);
  for (int l = 0; l <= 2; ++l) {
    const auto vals = g.eval_grid(grid.t, grid.s, l);
    for (std::size_t j = 0; j < grid.s.size(); ++j)
      for (std::size_t i = 0; i < grid.t.size(); ++i) {
        const double v = vals[j * grid.t.size() + i];
        if (grid.t[i] == grid.s[j] && l >= 1) {
          EXPECT_TRUE(std::isnan(v));
          continue;
        }
        EXPECT_NEAR(v, g.eval(grid.t[i], grid.s[j], l), 1e-13);
      }
  }
}

// Defining conditions hold for random s on problems without closed forms.
TEST(GreenProperty, BoundaryJumpAndResidual) {
  std::mt19937 rng(20240611);
  std::uniform_real_distribution<double> unit(0.02, 0.98);
  const GreenFunction variable(variable_k1(-1.5));
  const GreenFunction fourth(beam(200.0));
  for (const GreenFunction* g : {&variable, &fourth}) {
    for (int rep = 0; rep < 50; ++rep) {
      const double s = unit(rng);
      EXPECT_LE(g->boundary_residual(s), 1e-8);
      EXPECT_NEAR(g->measured_jump(s), 1.0, 1e-6);
      for (int m = 0; m <= g->order() - 2; ++m)
        EXPECT_NEAR(g->eval(s - 1e-7, s, m), g->eval(s + 1e-7, s, m), 1e-5);
      for (double t : {0.0, 0.5 * s, 0.5 * (s + 1.0), 1.0})
        if (t != s) {
          EXPECT_LE(std::abs(g->ode_residual(t, s)), 1e-7);
        }
    }
  }
}

TEST(Green, SolveBvpFreeProblem) {
  // u'' = 1, u(0) = u'(1) = 0
  const GreenFunction g(oracles::mixed_problem(0.0, 0));
  const QuadratureRule quad(2, 20);
  const auto one = CoefficientFn::constant(1.0);
  for (double t : {0.0, 0.25, 0.6, 1.0}) EXPECT_NEAR(solve_bvp(g, one, quad, t), t * t / 2 - t, 1e-12);
  for (double t : {0.3, 0.7}) EXPECT_EQ(solve_bvp(g, CoefficientFn(), quad, t), 0.0);
}

TEST(Green, SolveBvpSatisfiesEquation) {
  // u'' + u = 1, u(0) = u'(1) = 0: u = 1 - cos t - tan 1 sin t
  const GreenFunction g(oracles::mixed_problem(1.0, 0));
  const QuadratureRule quad(2, 20);
  const auto one = CoefficientFn::constant(1.0);
  auto u = [&](double t) { return solve_bvp(g, one, quad, t); };
  const double h = 1e-3;
  for (double t : {0.2, 0.5, 0.8}) {
    EXPECT_NEAR(u(t), 1 - std::cos(t) - std::tan(1.0) * std::sin(t), 1e-12);
    EXPECT_NEAR((u(t + h) - 2 * u(t) + u(t - h)) / (h * h) + u(t) - 1.0, 0.0, 1e-5);
  }
  // u'' + 2u' = 1: u = t/2 - (e^2/4)(1 - e^{-2t})
  const GreenFunction g1(oracles::mixed_problem(2.0, 1));
  for (double t : {0.3, 0.9})
    EXPECT_NEAR(solve_bvp(g1, one, quad, t), t / 2 - std::exp(2.0) / 4 * (1 - std::exp(-2 * t)), 1e-11);
}
