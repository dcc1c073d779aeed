#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace extrusion;
using namespace testing_support;

TEST(Fields, ConstantNorms) {
  const auto c = SampledFunction::constant(0.0, 4.0, 41, -1.5);
  EXPECT_DOUBLE_EQ(norm(NormKind::Linf, c), 1.5);
  EXPECT_DOUBLE_EQ(norm(NormKind::W1inf, c), 1.5);
  EXPECT_NEAR(norm(NormKind::L2, c), 1.5 * 2.0, 1e-12);
  EXPECT_NEAR(norm(NormKind::H2, c), 1.5 * 2.0, 1e-12);
}

TEST(Fields, RampNorms) {
  const auto r = SpaceProfile::from_function(11, [](double x) { return x; });
  EXPECT_DOUBLE_EQ(norm(NormKind::Linf, r), 1.0);
  EXPECT_NEAR(norm(NormKind::W1inf, r), 1.0, 1e-12);
}

TEST(Fields, SineL2) {
  const auto s = SpaceProfile::from_function(1001, [](double x) { return std::sin(pi * x); });
  EXPECT_NEAR(norm(NormKind::L2, s), std::sqrt(0.5), 1e-4);
}

TEST(Fields, SineH2AgainstClosedForm) {
  // |sin|^2 + |pi cos|^2 + |pi^2 sin|^2 integrated over [0,1].
  const double exact = std::sqrt(0.5 * (1.0 + pi * pi + pi * pi * pi * pi));
  const auto s = SpaceProfile::from_function(2001, [](double x) { return std::sin(pi * x); });
  EXPECT_NEAR(norm(NormKind::H2, s), exact, 1e-2 * exact);
}

TEST(Fields, TooFewPoints) {
  const auto two = SampledFunction::constant(0.0, 1.0, 2, 1.0);
  EXPECT_NO_THROW(norm(NormKind::Linf, two));
  for (auto kind : {NormKind::W1inf, NormKind::H2}) {
    try {
      norm(kind, two);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Grid);
    }
  }
  EXPECT_THROW(SampledFunction(0.0, 1.0, {1.0}), Error);
  EXPECT_THROW(SampledFunction(1.0, 1.0, {1.0, 2.0}), Error);
}

TEST(Fields, PhysicalCoordinates) {
  const auto p = unit_params();
  const auto prof = SpaceProfile(std::vector<double>{3.0, 4.0, 5.0});
  const auto pfz = to_physical_coordinates(prof, 0.5, Zone::PFZ, p);
  EXPECT_DOUBLE_EQ(pfz.x.front(), 0.0);
  EXPECT_DOUBLE_EQ(pfz.x.back(), 0.5);
  const auto ffz = to_physical_coordinates(prof, 0.4, Zone::FFZ, p);
  EXPECT_NEAR(ffz.x[1], 0.7, 1e-15);
  EXPECT_EQ(ffz.values, (std::vector<double>{3.0, 4.0, 5.0}));
  EXPECT_THROW(to_physical_coordinates(prof, 1.0, Zone::PFZ, p), Error);
  EXPECT_THROW(to_physical_coordinates(prof, 0.0, Zone::FFZ, p), Error);
}

TEST(Fields, EvaluationOutsideDomain) {
  const auto f = SampledFunction::constant(0.0, 1.0, 5, 2.0);
  EXPECT_THROW(f(1.1), Error);
  EXPECT_THROW(f(-0.1), Error);
}

TEST(Fields, ProvenanceNames) {
  EXPECT_STREQ(to_string(Provenance::FromInitial), "initial");
  EXPECT_STREQ(to_string(Provenance::FromBoundary), "boundary");
}

TEST(Fields, GridHelpers) {
  const auto g = uniform_grid(0.0, 0.3, 3);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_EQ(g.back(), 0.3);
  EXPECT_EQ(intervals_for(1.0, 1e-3), 1000u);
  EXPECT_THROW(intervals_for(1.0, 0.3), Error);
}

TEST(FieldsProperty, InterpolationExactAtNodesAndBracketed) {
  Gen gen(21);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = static_cast<std::size_t>(gen.integer(2, 40));
    std::vector<double> v(n);
    for (double& x : v) x = gen.uniform(-5.0, 5.0);
    const double a = gen.uniform(-3.0, 3.0), b = a + gen.uniform(0.1, 4.0);
    const SampledFunction f(a, b, v);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(f(f.node(i)), v[i]);
    for (int m = 0; m < 20; ++m) {
      const double t = gen.uniform(a, b);
      const std::size_t i = f.cell(t);
      const double lo = std::min(v[i], v[i + 1]), hi = std::max(v[i], v[i + 1]);
      EXPECT_GE(f(t), lo - 1e-12);
      EXPECT_LE(f(t), hi + 1e-12);
    }
  }
}

TEST(FieldsProperty, NormsAreHomogeneous) {
  Gen gen(22);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = static_cast<std::size_t>(gen.integer(3, 60));
    std::vector<double> v(n);
    for (double& x : v) x = gen.uniform(-2.0, 2.0);
    const double lambda = gen.uniform(-10.0, 10.0);
    const SpaceProfile f(v);
    const SpaceProfile g(map_values(f, [lambda](double x) { return lambda * x; }));
    for (auto kind : {NormKind::Linf, NormKind::W1inf, NormKind::L2, NormKind::H2}) {
      const double nf = norm(kind, f);
      EXPECT_NEAR(norm(kind, g), std::abs(lambda) * nf, 1e-12 * std::abs(lambda) * nf + 1e-300);
    }
  }
}

TEST(FieldsProperty, NormsConvergeUnderRefinement) {
  auto fn = [](double x) { return std::exp(x) * std::cos(2.0 * x); };
  for (auto kind : {NormKind::L2, NormKind::H2, NormKind::W1inf}) {
    std::vector<double> values;
    for (std::size_t n : {51u, 101u, 201u, 401u}) values.push_back(norm(kind, SpaceProfile::from_function(n, fn)));
    const double d1 = std::abs(values[1] - values[0]), d2 = std::abs(values[2] - values[1]),
                 d3 = std::abs(values[3] - values[2]);
    EXPECT_LE(d3, 10.0 / 400.0) << "kind " << static_cast<int>(kind);
    EXPECT_LE(d3, d2) << "kind " << static_cast<int>(kind);
    EXPECT_GE(std::log2(d1 / d3) / 2.0, 0.9) << "kind " << static_cast<int>(kind);
  }
}

TEST(Csv, NumberFormatAndRows) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(format_number(-2.5e-20), "-2.5e-20");
  const std::string path = ::testing::TempDir() + "fields_csv.csv";
  SolutionField f({0.0, 0.5}, {0.0, 1.0});
  f.at(1, 0) = 0.25;
  f.origin(1, 0) = Provenance::FromBoundary;
  write_field_csv(path, f);
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "t,x,fp,provenance\n0,0,0,initial\n0,1,0,initial\n0.5,0,0.25,boundary\n0.5,1,0,initial\n");
}
