#include <gtest/gtest.h>

#include "support.hpp"

using namespace extrusion;
using namespace testing_support;

namespace {

// Same function written as zeta (A - f)/(1 - f) with A the die ratio at l.
double g_reference(double l, double f, const PhysicalParams& p) {
  const double A = p.K_d * (p.L - l) / (p.B * p.rho0 + p.K_d * (p.L - l));
  return p.zeta * (A - f) / (1.0 - f);
}

}  // namespace

TEST(Model, GExamples) {
  const auto p = unit_params();
  EXPECT_NEAR(eval_g(0.5, 1.0 / 3.0, p), 0.0, 1e-15);
  EXPECT_NEAR(eval_g(0.5, 0.5, p), -1.0 / 3.0, 1e-15);
  EXPECT_NEAR(eval_g(0.45, 1.0 / 3.0, p), 0.0322581, 1e-6);
}

TEST(Model, GErrors) {
  const auto p = unit_params();
  try {
    eval_g(0.5, 1.0, p);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularDenominator);
  }
  for (double l : {0.0, 1.0, -0.1, 1.5}) {
    try {
      eval_g(l, 0.3, p);
      FAIL() << "expected an error for l=" << l;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Domain);
    }
  }
  EXPECT_THROW(eval_g(0.5, -0.01, p), Error);
}

TEST(Model, FExamples) {
  const auto p = unit_params();
  EXPECT_EQ(eval_F(0.5, 1.0, 1.0 / 3.0, p), 1.0 * eval_g(0.5, 1.0 / 3.0, p));
  EXPECT_NEAR(eval_F(0.5, 1.0, 1.0 / 3.0, p), 0.0, 1e-15);
  EXPECT_NEAR(eval_F(0.5, 2.0, 0.5, p), -2.0 / 3.0, 1e-15);
  EXPECT_NEAR(eval_F(0.45, 3.1, 1.0 / 3.0, p), 0.1, 1e-3);
}

TEST(Model, AlphaExamples) {
  const auto p = unit_params();
  EXPECT_DOUBLE_EQ(eval_alpha_p(0.0, 1.0, 0.5, 0.2, p), 2.0);
  for (double x : {0.0, 0.3, 0.77, 1.0}) EXPECT_NEAR(eval_alpha_p(x, 1.0, 0.5, 1.0 / 3.0, p), 2.0, 1e-14);
  EXPECT_NEAR(eval_alpha_p(1.0, 1.0, 0.5, 0.5, p), 8.0 / 3.0, 1e-14);
  EXPECT_THROW(eval_alpha_p(0.5, 1.0, 0.0, 0.3, p), Error);
}

TEST(Model, InflowExamples) {
  const auto p = unit_params();
  EXPECT_DOUBLE_EQ(inflow_value(1.0 / 3.0, 1.0, p), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(inflow_value(0.0, 1.0, p), 0.0);
  EXPECT_DOUBLE_EQ(inflow_value(0.5, 2.0, p), 0.25);
  try {
    inflow_value(0.5, 0.0, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Domain);
  }
}

TEST(Model, EquilibriumExamples) {
  const auto p = unit_params();
  const auto a = solve_equilibrium(p, EquilibriumGiven::InterfacePosition, 0.5, 1.0);
  EXPECT_NEAR(a.f_pe, 1.0 / 3.0, 1e-15);
  const auto b = solve_equilibrium(p, EquilibriumGiven::FillingRatio, 1.0 / 3.0, 1.0);
  EXPECT_NEAR(b.l_e, 0.5, 1e-15);
  EXPECT_NEAR(eval_g(b.l_e, b.f_pe, p), 0.0, 1e-15);
  for (double f : {0.6, 0.9, 0.999}) {
    try {
      solve_equilibrium(p, EquilibriumGiven::FillingRatio, f, 1.0);
      FAIL() << "f_pe=" << f;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InfeasibleEquilibrium);
    }
  }
  EXPECT_THROW(solve_equilibrium(p, EquilibriumGiven::InterfacePosition, 0.5, 0.0), Error);
}

TEST(Model, ParamsMustBePositive) {
  PhysicalParams p;
  p.K_d = 0.0;
  EXPECT_THROW(p.validate(), Error);
  p.K_d = 1.0;
  p.V_eff = -1.0;
  EXPECT_THROW(p.validate(), Error);
}

TEST(ModelProperty, EquilibriumZeroesG) {
  Gen gen(11);
  for (int k = 0; k < 500; ++k) {
    const auto p = gen.params();
    const double l_e = gen.uniform(0.01, 0.99) * p.L;
    const double N_e = gen.uniform(0.1, 10.0);
    const auto eq = solve_equilibrium(p, EquilibriumGiven::InterfacePosition, l_e, N_e);
    EXPECT_LE(std::abs(eval_g(eq.l_e, eq.f_pe, p)), 1e-12);
    EXPECT_GT(eq.f_pe, 0.0);
    EXPECT_LT(eq.f_pe, 1.0);
    const auto back = solve_equilibrium(p, EquilibriumGiven::FillingRatio, eq.f_pe, N_e);
    EXPECT_NEAR(back.l_e, l_e, 1e-10 * p.L);
  }
}

TEST(ModelProperty, GMatchesReferenceForm) {
  Gen gen(12);
  for (int k = 0; k < 1000; ++k) {
    const auto p = gen.params();
    const double l = gen.uniform(0.01, 0.99) * p.L;
    const double f = gen.uniform(0.0, 0.95);
    const double ref = g_reference(l, f, p);
    EXPECT_NEAR(eval_g(l, f, p), ref, 1e-12 * std::max(1.0, std::abs(ref)));
  }
}

TEST(ModelProperty, FIsNTimesG) {
  Gen gen(13);
  for (int k = 0; k < 1000; ++k) {
    const auto p = gen.params();
    const double l = gen.uniform(0.01, 0.99) * p.L, f = gen.uniform(0.0, 0.95), N = gen.uniform(-3.0, 3.0);
    EXPECT_EQ(eval_F(l, N, f, p), N * eval_g(l, f, p));
  }
}

TEST(ModelProperty, AlphaIsAffineInX) {
  Gen gen(14);
  for (int k = 0; k < 500; ++k) {
    const auto p = gen.params();
    const double l = gen.uniform(0.05, 0.95) * p.L, f = gen.uniform(0.0, 0.9), N = gen.uniform(0.1, 3.0);
    const double x = gen.uniform(0.0, 1.0);
    const double F = eval_F(l, N, f, p);
    EXPECT_NEAR(eval_alpha_p(x, N, l, f, p), eval_alpha_p(0.0, N, l, f, p) - x * F / l,
                1e-12 * (1.0 + std::abs(F / l)));
  }
}

TEST(ModelProperty, GradientMatchesCentralDifferences) {
  Gen gen(15);
  for (int k = 0; k < 300; ++k) {
    const auto p = gen.params();
    const double l = gen.uniform(0.1, 0.9) * p.L, f = gen.uniform(0.05, 0.85), N = gen.uniform(0.2, 3.0);
    const auto grad = eval_F_gradient(l, N, f, p);
    const double h = 1e-6;
    const double dl = (eval_F(l + h * p.L, N, f, p) - eval_F(l - h * p.L, N, f, p)) / (2.0 * h * p.L);
    const double dN = (eval_F(l, N + h, f, p) - eval_F(l, N - h, f, p)) / (2.0 * h);
    const double df = (eval_F(l, N, f + h, p) - eval_F(l, N, f - h, p)) / (2.0 * h);
    EXPECT_NEAR(grad.d_l, dl, 1e-6 * (1.0 + std::abs(dl)));
    EXPECT_NEAR(grad.d_N, dN, 1e-6 * (1.0 + std::abs(dN)));
    EXPECT_NEAR(grad.d_f, df, 1e-6 * (1.0 + std::abs(df)));
  }
}

TEST(BoxNorm, DegenerateBoxIsThePoint) {
  const auto p = unit_params();
  const auto eq = unit_equilibrium();
  const auto grad = eval_F_gradient(eq.l_e, eq.N_e, eq.f_pe, p);
  const double point = std::abs(eval_F(eq.l_e, eq.N_e, eq.f_pe, p)) + std::abs(grad.d_l) + std::abs(grad.d_N) +
                       std::abs(grad.d_f);
  BoxNormOptions o;
  EXPECT_NEAR(norm_F_box(p, eq, 0.0, o), o.safety * point, 1e-14);
}

TEST(BoxNorm, MonotoneInRadiusAndScalesWithSafety) {
  const auto p = unit_params();
  const auto eq = unit_equilibrium();
  double prev = 0.0;
  for (double e : {0.0, 0.01, 0.05, 0.1, 0.2, 0.3}) {
    const double v = norm_F_box(p, eq, e);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, prev);
    prev = v;
  }
  BoxNormOptions a, b;
  b.safety = 2.0 * a.safety;
  EXPECT_NEAR(norm_F_box(p, eq, 0.05, b), 2.0 * norm_F_box(p, eq, 0.05, a), 1e-12);
}

TEST(BoxNorm, RejectsRadiusOutsideBound) {
  const auto p = unit_params();
  const auto eq = unit_equilibrium();
  EXPECT_THROW(norm_F_box(p, eq, -0.01), Error);
  EXPECT_THROW(norm_F_box(p, eq, eps1_bound(eq, p)), Error);
}

TEST(BoxNorm, BoundsFOnRandomBoxPoints) {
  const auto p = unit_params();
  const auto eq = unit_equilibrium();
  const double eps1 = 0.1;
  const double bound = norm_F_box(p, eq, eps1);
  Gen gen(16);
  for (int k = 0; k < 10000; ++k) {
    const double l = eq.l_e + gen.uniform(-eps1, eps1);
    const double N = eq.N_e + gen.uniform(-eps1, eps1);
    const double f = eq.f_pe + gen.uniform(-eps1, eps1);
    ASSERT_LE(std::abs(eval_F(l, N, f, p)), bound);
  }
}

TEST(Eps1Bound, Examples) {
  const auto p = unit_params();
  EXPECT_NEAR(eps1_bound({0.5, 1.0, 1.0 / 3.0}, p), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(eps1_bound({0.5, 1.0, 0.5}, p), 0.5, 1e-15);
  EXPECT_NEAR(eps1_bound({0.9, 1.0, 1.0 / 3.0}, p), 0.1, 1e-15);
}
