#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "svext/distributions.hpp"

namespace {

using namespace svext;

std::vector<InnovationSpec> all_specs() {
  return {Normal{}, Normal{0.5}, StudentT{4.0, true}, StudentT{5.0, false}, Laplace{4.0},
          Pareto{4.0}, Pareto{3.0, true}, Constant{2.0}};
}

TEST(SampleInnovation, ConstantIsDegenerate) {
  EXPECT_EQ(sample_innovation(Constant{2.0}, 3, {123, 0}), (std::vector<double>{2.0, 2.0, 2.0}));
}

TEST(SampleInnovation, DeterministicForSeed) {
  const RngSeed seed{77, 5};
  EXPECT_EQ(sample_innovation(Normal{}, 2, seed), sample_innovation(Normal{}, 2, seed));
  for (const auto& spec : all_specs()) {
    EXPECT_EQ(sample_innovation(spec, 1000, seed), sample_innovation(spec, 1000, seed)) << describe(spec);
  }
}

TEST(SampleInnovation, ParetoTailFrequency) {
  const auto v = sample_innovation(Pareto{4.0}, 100000, {2024, 0});
  const double freq = static_cast<double>(std::count_if(v.begin(), v.end(), [](double x) { return x > 10.0; })) / 1e5;
  EXPECT_GE(freq, 0.5e-4);
  EXPECT_LE(freq, 1.5e-4);
}

TEST(SampleInnovation, StandardizedStudentNeedsFiniteVariance) {
  try {
    sample_innovation(StudentT{2.0, true}, 10, {});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "variance undefined");
  }
  EXPECT_THROW(sample_innovation(Normal{}, 0, {}), Error);
}

TEST(TailProb, ClosedForms) {
  EXPECT_DOUBLE_EQ(tail_prob(Pareto{4.0}, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(tail_prob(Pareto{4.0}, 10.0), 1e-4);
  EXPECT_NEAR(tail_prob(Laplace{4.0}, std::log(10.0)), 0.5e-4, 1e-18);
  EXPECT_DOUBLE_EQ(tail_prob(Normal{}, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(tail_prob(Constant{1.0}, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(tail_prob(Constant{1.0}, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(tail_prob(Pareto{2.0, true}, 2.0), 0.125);
  EXPECT_DOUBLE_EQ(tail_prob(Pareto{2.0, true}, -2.0), 0.875);
  // standardized t(4): scale sqrt(1/2), P(T > 0) = 1/2
  EXPECT_NEAR(tail_prob(StudentT{4.0, true}, 0.0), 0.5, 1e-15);
}

// Empirical survival within 5 binomial standard errors on a grid.
TEST(TailProb, EmpiricalSurvivalConverges) {
  const std::size_t n = 1000000;
  for (const auto& spec : all_specs()) {
    const auto v = sample_innovation(spec, n, {99, 1});
    for (double x : {-2.0, -0.5, 0.3, 1.0, 1.5, 3.0}) {
      const double p = tail_prob(spec, x);
      const double emp =
          static_cast<double>(std::count_if(v.begin(), v.end(), [x](double s) { return s > x; })) / n;
      const double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / n);
      EXPECT_LE(std::abs(emp - p), 5.0 * se) << describe(spec) << " x=" << x;
    }
  }
}

TEST(Moments, ClosedForms) {
  EXPECT_DOUBLE_EQ(moment_abs(Constant{3.0}, 2.0).value, 9.0);
  EXPECT_NEAR(moment_abs(Normal{}, 4.0).value, 3.0, 1e-13);
  EXPECT_NEAR(moment_pos(Normal{}, 4.0).value, 1.5, 1e-13);
  EXPECT_NEAR(moment_abs(Normal{}, 2.0).value, 1.0, 1e-14);
  EXPECT_NEAR(moment_abs(StudentT{5.0, false}, 2.0).value, 5.0 / 3.0, 1e-13);
  EXPECT_NEAR(moment_abs(StudentT{4.0, true}, 2.0).value, 1.0, 1e-13);
  EXPECT_NEAR(moment_abs(Laplace{4.0}, 2.0).value, 2.0 / 16.0, 1e-15);
  EXPECT_DOUBLE_EQ(moment_abs(Pareto{4.0}, 2.0).value, 2.0);
  EXPECT_TRUE(moment_abs(Normal{}, 4.0).analytic);
}

TEST(Moments, DivergentMomentIsAnError) {
  try {
    moment_abs(Pareto{4.0}, 5.0);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "moment diverges");
  }
  EXPECT_THROW(moment_abs(Pareto{4.0}, 4.0), Error);
  EXPECT_THROW(moment_abs(StudentT{4.0, true}, 4.0), Error);
  EXPECT_THROW(moment_pos(Pareto{2.0, true}, 2.5, MonteCarlo{}), Error);
}

TEST(Moments, MonteCarloAgreesWithClosedForm) {
  const std::vector<std::pair<InnovationSpec, double>> cases{
      {Normal{}, 4.0},  {Normal{0.5}, 1.5},        {StudentT{5.0, false}, 2.0},
      {StudentT{6.0, true}, 3.0}, {Laplace{4.0}, 3.0}, {Pareto{6.0}, 2.0},
      {Pareto{6.0, true}, 1.0}, {Constant{-2.0}, 3.0}};
  std::uint64_t stream = 0;
  for (const auto& [spec, r] : cases) {
    const MonteCarlo mc{400000, {31, stream++}, {}};
    const auto exact = moment_abs(spec, r);
    const auto est = moment_abs(spec, r, mc);
    EXPECT_FALSE(est.analytic);
    EXPECT_LE(std::abs(est.value - exact.value), 4.0 * est.stderr_ + 1e-12) << describe(spec) << " r=" << r;
    const auto pos_exact = moment_pos(spec, r);
    const auto pos_est = moment_pos(spec, r, mc);
    EXPECT_LE(std::abs(pos_est.value - pos_exact.value), 4.0 * pos_est.stderr_ + 1e-12) << describe(spec);
  }
}

TEST(Moments, PositiveAndNegativePartsSplitSymmetricLaws) {
  for (const auto& spec : all_specs()) {
    const double r = 1.5;
    const double abs = moment_abs(spec, r).value;
    const double pos = moment_pos(spec, r).value;
    const double neg = moment_neg(spec, r).value;
    EXPECT_NEAR(pos + neg, abs, 1e-12 * abs) << describe(spec);
    if (is_symmetric(spec)) {
      EXPECT_NEAR(pos, abs / 2.0, 1e-12 * abs) << describe(spec);
      EXPECT_NEAR(neg, abs / 2.0, 1e-12 * abs) << describe(spec);
    }
  }
}

TEST(Moments, MonteCarloIgnoresThreadCount) {
  const auto a = moment_abs(Laplace{4.0}, 2.0, MonteCarlo{100000, {3, 3}, {1}});
  const auto b = moment_abs(Laplace{4.0}, 2.0, MonteCarlo{100000, {3, 3}, {4}});
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.stderr_, b.stderr_);
}

TEST(TailBalance, SymmetricAndOneSided) {
  EXPECT_EQ(tail_balance_plus(Laplace{4.0}), 0.5);
  EXPECT_EQ(tail_balance_plus(Pareto{4.0}), 1.0);
  EXPECT_EQ(tail_balance_plus(Pareto{4.0, true}), 0.5);
}

TEST(InnovationJson, ExactFieldNamesAndRoundTrip) {
  const nlohmann::json lap = InnovationSpec{Laplace{4.0}};
  EXPECT_EQ(lap, nlohmann::json::parse(R"({"kind":"laplace","rate":4.0})"));
  const nlohmann::json t = InnovationSpec{StudentT{4.0, true}};
  EXPECT_EQ(t, nlohmann::json::parse(R"({"kind":"student_t","df":4.0,"standardized":true})"));
  const nlohmann::json c = InnovationSpec{Constant{2.5}};
  EXPECT_EQ(c.at("c"), 2.5);
  for (const auto& spec : all_specs()) {
    const nlohmann::json j = spec;
    EXPECT_EQ(j.get<InnovationSpec>(), spec) << j.dump();
  }
  EXPECT_THROW(nlohmann::json::parse(R"({"kind":"cauchy"})").get<InnovationSpec>(), Error);
  EXPECT_THROW(nlohmann::json::parse(R"({"kind":"laplace","rate":-1})").get<InnovationSpec>(), Error);
}

}  // namespace
