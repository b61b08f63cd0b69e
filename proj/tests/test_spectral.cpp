#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "brwlab/brwlab.hpp"

using namespace brw;

TEST(Perron, SymmetricAndBipartite) {
  EXPECT_NEAR(perron_root(MomentMatrix::from_dense({{2, 1}, {1, 2}})).value, 3.0, 1e-10);
  // Period 2: plain power iteration would oscillate.
  auto r = perron_root(MomentMatrix::from_dense({{0, 2}, {2, 0}}));
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, 2.0, 1e-10);
  EXPECT_EQ(perron_root(MomentMatrix::from_dense({{0, 0}, {0, 0}})).value, 0.0);
}

TEST(Perron, MatchesCharacteristicPolynomial) {
  // [[1,2],[3,1]]: eigenvalues 1 +- sqrt(6).
  EXPECT_NEAR(perron_root(MomentMatrix::from_dense({{1, 2}, {3, 1}})).value, 1 + std::sqrt(6.0), 1e-10);
}

TEST(Growth, GaltonWatsonIsTheMean) {
  auto g = gw_law(CountLaw::geometric(1.7));
  auto dom = full_domain(g.model);
  auto diag = growth_sequence(*dom, g.root, g.root, 50);
  auto rows = growth_sequence(*dom, g.root, std::nullopt, 50);
  EXPECT_NEAR(diag.value, 1.7, 1e-12);
  EXPECT_NEAR(rows.value, 1.7, 1e-12);
  EXPECT_EQ(diag.period, 1);
}

TEST(Growth, RadialTreeReturnProbabilities) {
  // p_2n(o,o)^(1/2n) tends to the spectral radius 2 sqrt(2)/3 of SRW on T_3.
  auto g = radial_tree_growth(3, 1.0 / 3.0, 1000);
  EXPECT_EQ(g.period, 2);
  EXPECT_TRUE(g.converged);
  EXPECT_NEAR(g.value * 3.0, 2.0 * std::sqrt(2.0), 0.02 * 2.0 * std::sqrt(2.0));
  EXPECT_THROW(radial_tree_growth(2, 0.5, 10), ValidationError);
}

TEST(Growth, SmallStepsMatchHandCounts) {
  // On the radial chain of T_3: p_2 = 1/3 and
  // p_4 = P(0,1,0,1,0) + P(0,1,2,1,0) = 1/9 + 2/27 = 5/27.
  auto g = radial_tree_growth(3, 1.0 / 3.0, 2);
  ASSERT_GE(g.sequence.size(), 4u);
  EXPECT_NEAR(g.sequence[1].second, std::sqrt(1.0 / 3.0), 1e-14);
  EXPECT_NEAR(g.sequence[3].second, std::pow(5.0 / 27.0, 0.25), 1e-14);
  EXPECT_EQ(g.sequence[0].second, 0.0);
}

TEST(Growth, TreeRowSumIsLambdaD) {
  auto g = tree_edge_breeding(4, 0.2);
  auto dom = truncate(g.model, g.root, 1);
  auto rows = growth_sequence(*dom, g.root, std::nullopt, 100);
  EXPECT_NEAR(rows.value, 0.8, 1e-12);
}

TEST(Growth, WindowMustContainThePaths) {
  auto g = halfline_ex43();
  auto dom = truncate(g.model, g.root, 10);
  EXPECT_THROW(growth_sequence(*dom, g.root, std::nullopt, 20), ValidationError);
  EXPECT_NO_THROW(growth_sequence(*dom, g.root, g.root, 20));
  EXPECT_THROW(growth_sequence(*dom, g.root, g.root, 0), ValidationError);
}

TEST(Critical, TreeParameters) {
  auto g = tree_edge_breeding(3, 0.4);
  auto dom = truncate(g.model, g.root, 1);
  auto c = critical_params(*dom, g.root, 2000);
  EXPECT_NEAR(c.K_w, 3.0, 1e-9);
  EXPECT_NEAR(c.lambda_s, tree::lambda_s(3), 0.02 * tree::lambda_s(3));
  EXPECT_EQ(c.pure_global_indicator, Indicator::True);
}

TEST(Critical, NeedsContinuousFamily) {
  auto g = gw_law(CountLaw::finite({0.25, 0.0, 0.75}));
  EXPECT_THROW(critical_params(*full_domain(g.model), g.root, 10), ValidationError);
}

TEST(Critical, FiniteContinuousModelHasNoPureGlobalPhase) {
  ContinuousSpec spec;
  spec.sites = {Site::at(0), Site::at(1)};
  spec.rates[Site::at(0)] = {{Site::at(1), 1.0}};
  spec.rates[Site::at(1)] = {{Site::at(0), 1.0}, {Site::at(1), 1.0}};
  spec.lambda = 0.7;
  auto model = std::make_shared<const BrwModel>(build_discrete_counterpart(spec));
  auto dom = full_domain(model);
  auto c = critical_params(*dom, Site::at(0), 400);
  // K_s = K_w = Perron root of [[0,1],[1,1]], the golden ratio.
  const double phi = (1 + std::sqrt(5.0)) / 2;
  EXPECT_NEAR(c.K_w, phi, 0.01);
  EXPECT_NEAR(c.K_s, phi, 0.01);
  EXPECT_EQ(c.pure_global_indicator, Indicator::False);
}

TEST(Growth, CsvExport) {
  std::ostringstream os;
  write_growth_csv(os, radial_tree_growth(3, 1.0 / 3.0, 3));
  EXPECT_EQ(os.str().rfind("n,a_n\n1,0\n", 0), 0u);
}
