#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "greenlink/linking.hpp"
#include "greenlink/oracles.hpp"

using namespace greenlink;

namespace {

const QuadratureRule kQuad(2, 20);

GreenFunction mixed(double M, int k = 0) { return GreenFunction(oracles::mixed_problem(M, k)); }

// Same residual assembled from closed forms only; the integral uses a
// 64-point rule on each of the three pieces cut at r = t and r = s.
double oracle_link_residual(double M0, double M1, double t, double s) {
  auto g = [](double M, double x, double y) { return oracles::mixed_k0_kernel(M, x, y); };
  const QuadratureRule fine(1, 64);
  const double integral = fine.integrate([&](double r) { return g(M0, t, r) * g(M1, r, s); }, 0.0, 1.0, {t, s});
  return g(M1, t, s) - g(M0, t, s) - (M0 - M1) * integral;
}

}  // namespace

TEST(Linking, EqualParametersGiveExactZero) {
  const auto g = mixed(1.0);
  const auto h = mixed(1.0);
  EXPECT_EQ(linking_residual(g, h, 0, Variant::first, 0.3, 0.7, kQuad), 0.0);
  EXPECT_EQ(linking_residual_order_n(g, h, Variant::second, 0.3, 0.7, kQuad), 0.0);
  EXPECT_EQ(cross_identity_residual(g, h, 1, 0.3, 0.7, kQuad), 0.0);
}

TEST(Linking, MixedProblemOrderZero) {
  const auto g0 = mixed(-1.0);
  const auto g1 = mixed(1.0);
  EXPECT_LE(std::abs(oracle_link_residual(-1.0, 1.0, 0.3, 0.7)), 1e-12);
  EXPECT_LE(std::abs(linking_residual(g0, g1, 0, Variant::first, 0.3, 0.7, kQuad)), 1e-7);
  EXPECT_LE(std::abs(linking_residual(g0, g1, 0, Variant::second, 0.3, 0.7, kQuad)), 1e-7);
}

TEST(Linking, FirstDerivativeShiftOrderOne) {
  const auto g0 = mixed(0.0, 1);
  const auto g1 = mixed(2.0, 1);
  // closed forms of d_t g and d_r g on the pieces
  const QuadratureRule fine(1, 64);
  const double t = 0.25, s = 0.75;
  const double integral = fine.integrate(
      [&](double r) { return oracles::mixed_k1_kernel(0.0, t, r, 1) * oracles::mixed_k1_kernel(2.0, r, s, 1); }, 0.0,
      1.0, {t, s});
  const double direct = oracles::mixed_k1_kernel(2.0, t, s, 1) - oracles::mixed_k1_kernel(0.0, t, s, 1) + 2.0 * integral;
  EXPECT_LE(std::abs(direct), 1e-12);
  EXPECT_LE(std::abs(linking_residual(g0, g1, 1, Variant::first, t, s, kQuad)), 1e-7);
}

TEST(Linking, OrderNIdentityBothVariants) {
  const auto g0 = mixed(0.0);
  const auto g1 = mixed(1.0);
  EXPECT_LE(std::abs(linking_residual_order_n(g0, g1, Variant::first, 0.2, 0.6, kQuad)), 1e-7);
  EXPECT_LE(std::abs(linking_residual_order_n(g0, g1, Variant::second, 0.2, 0.6, kQuad)), 1e-7);
  // d^2 g = -M g for u'' + M u
  EXPECT_NEAR(g1.eval(0.2, 0.6, 2), -oracles::mixed_k0_kernel(1.0, 0.2, 0.6), 1e-11);
}

TEST(Linking, CrossIdentities) {
  const auto g0 = mixed(-2.0);
  const auto g1 = mixed(1.0);
  EXPECT_LE(std::abs(cross_identity_residual(g0, g1, 0, 0.4, 0.5, kQuad)), 1e-7);
  EXPECT_LE(std::abs(cross_identity_residual(g0, g1, 2, 0.3, 0.8, kQuad)), 1e-7);
}

TEST(Linking, RejectsDiagonalAndMismatchedFamilies) {
  const auto g0 = mixed(0.0);
  const auto g1 = mixed(1.0);
  EXPECT_THROW(linking_residual(g0, g1, 1, Variant::first, 0.4, 0.4, kQuad), SpecError);
  EXPECT_NO_THROW(linking_residual(g0, g1, 0, Variant::first, 0.4, 0.4, kQuad));
  EXPECT_THROW(linking_residual(g0, g1, 2, Variant::first, 0.4, 0.5, kQuad), UnsupportedOrderError);
  EXPECT_THROW(linking_residual_order_n(g0, g1, Variant::first, 0.4, 0.4, kQuad), SpecError);
  const GreenFunction other(oracles::dirichlet_problem(1.0));
  EXPECT_THROW(linking_residual(g0, other, 0, Variant::first, 0.3, 0.5, kQuad), SpecError);
  const auto shifted = mixed(1.0, 1);
  EXPECT_THROW(cross_identity_residual(g0, shifted, 0, 0.3, 0.5, kQuad), SpecError);
}

TEST(Linking, VerifyIdentitiesReportsEveryTag) {
  const auto g0 = mixed(-4.0);
  const auto g1 = mixed(2.0);
  const auto reports = verify_identities(g0, g1, {0, 1}, Grid::uniform(0.0, 1.0, 6), kQuad);
  ASSERT_EQ(reports.size(), 8u);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    EXPECT_EQ(reports[i].tag, kAllIdentityTags[i]);
    EXPECT_LE(reports[i].max, 1e-9) << to_string(reports[i].tag);
    EXPECT_FALSE(reports[i].samples.empty());
  }
  EXPECT_EQ(std::string(to_string(IdentityTag::dlink_n_2)), "dlink-n-2");
  // order n-1 identities skip the 6 diagonal points
  EXPECT_EQ(reports[4].samples.size(), 30u);
  EXPECT_EQ(reports[0].samples.size(), 36u);
}

// Signs of the three quantities agree whenever all are clearly nonzero.
TEST(LinkingProperty, SignTripleEquivalence) {
  for (auto [M0, M1] : {std::pair{-3.0, 1.0}, std::pair{0.5, 2.0}, std::pair{10.0, 15.0}}) {
    const auto g0 = mixed(M0);
    const auto g1 = mixed(M1);
    for (double t : {0.1, 0.45, 0.9})
      for (double s : {0.2, 0.6, 0.95})
        for (int l : {0, 1}) {
          if (t == s) continue;
          const auto tri = sign_triple(g0, g1, l, t, s, kQuad);
          const double floor = 1e-9;
          if (std::abs(tri.difference) < floor || std::abs(tri.first) < floor || std::abs(tri.second) < floor)
            continue;
          EXPECT_EQ(std::signbit(tri.difference), std::signbit(tri.first));
          EXPECT_EQ(std::signbit(tri.difference), std::signbit(tri.second));
        }
  }
}

TEST(LinkingProperty, RoleSwapKeepsResidualScale) {
  const auto g0 = mixed(-1.0);
  const auto g1 = mixed(3.0);
  const QuadratureRule coarse(1, 6);
  const double a = std::abs(linking_residual(g0, g1, 0, Variant::first, 0.35, 0.6, coarse));
  const double b = std::abs(linking_residual(g1, g0, 0, Variant::second, 0.35, 0.6, coarse));
  EXPECT_LE(std::max(a, b), 2.0 * std::min(a, b) + 1e-13);
}

TEST(LinkingProperty, QuadratureRefinementConverges) {
  const auto g0 = mixed(-1.0);
  const auto g1 = mixed(3.0);
  const double floor = 1e-11;
  QuadratureRule rule(1, 3);
  double prev = std::abs(linking_residual(g0, g1, 1, Variant::first, 0.35, 0.6, rule));
  for (int i = 0; i < 4; ++i) {
    rule = rule.refined();
    const double cur = std::abs(linking_residual(g0, g1, 1, Variant::first, 0.35, 0.6, rule));
    // 3-point Gauss is exact to degree 5: halving h gains about 2^6
    if (prev > floor) {
      EXPECT_LT(cur, prev / 16.0 + floor);
    }
    prev = cur;
  }
}

TEST(Comparison, MixedProblemDecreasesInParameter) {
  const auto g0 = mixed(0.0);
  const auto g1 = mixed(2.0);
  const auto rep = compare_kernels(g0, g1, 0, Grid::uniform(0.0, 1.0, 11));
  EXPECT_EQ(rep.hypothesis, Hypothesis::same_sign_i);
  EXPECT_TRUE(rep.decreasing);
  EXPECT_EQ(rep.points.size(), 9u * 9u - 9u);
  EXPECT_EQ(rep.count(Verdict::case3), rep.points.size());
  for (const auto& p : rep.points) EXPECT_LT(g1.eval(p.t, p.s, 0), g0.eval(p.t, p.s, 0));
}

TEST(Comparison, FirstDerivativeVanishesAboveDiagonal) {
  const auto g0 = mixed(0.0, 1);
  const auto g1 = mixed(2.0, 1);
  const auto rep = compare_kernels(g0, g1, 1, Grid::uniform(0.0, 1.0, 11));
  ASSERT_NE(rep.hypothesis, Hypothesis::violated);
  std::size_t above = 0;
  for (const auto& p : rep.points)
    if (p.t > p.s) {
      ++above;
      EXPECT_EQ(p.verdict, Verdict::case2);
    } else {
      EXPECT_NE(p.verdict, Verdict::violation);
    }
  EXPECT_EQ(rep.count(Verdict::case2), above);
  EXPECT_THROW(compare_kernels(g1, g0, 1, Grid::uniform(0.0, 1.0, 5)), SpecError);
}

TEST(Comparison, ParameterOrderFromOppositeSigns) {
  // simply supported beam u'''' + M u: g >= 0 at M = 0, g <= 0 at M = -200
  BvpSpec beam;
  beam.order = 4;
  beam.coefficients.assign(4, CoefficientFn());
  beam.alpha = Eigen::MatrixXd::Zero(4, 4);
  beam.beta = Eigen::MatrixXd::Zero(4, 4);
  beam.alpha(0, 0) = beam.alpha(1, 2) = beam.beta(2, 0) = beam.beta(3, 2) = 1.0;
  const GreenFunction pos(with_parameter(beam, 0.0));
  const GreenFunction neg(with_parameter(beam, -200.0));
  const auto grid = Grid::uniform(0.0, 1.0, 11);
  const auto check = parameter_order_check(pos, neg, grid);
  EXPECT_TRUE(check.applicable);
  EXPECT_TRUE(check.consistent);
  EXPECT_TRUE(parameter_order_check(neg, pos, grid).consistent);
  // two nonpositive kernels carry no claim
  EXPECT_FALSE(parameter_order_check(mixed(0.0), mixed(-5.0), grid).applicable);
}
