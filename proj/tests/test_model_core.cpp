#include <gtest/gtest.h>

#include <cmath>

#include "brwlab/brwlab.hpp"

using namespace brw;

TEST(Site, ParseAndPrintRoundTrip) {
  for (const char* s : {"o", "0", "-3", "1.0.2", "12.7"}) EXPECT_EQ(Site::parse(s).str(), s);
  EXPECT_EQ(Site::parse("o"), Site{});
  EXPECT_EQ(Site::at(4).child(1), Site::parse("4.1"));
}

TEST(Site, RejectsMalformedKeys) {
  for (const char* s : {"", "1..2", "a", "1.", "-"}) EXPECT_THROW(Site::parse(s), ValidationError) << s;
}

TEST(CountLaw, FiniteMomentsAndPgf) {
  auto c = CountLaw::finite({0.25, 0.0, 0.75});
  EXPECT_DOUBLE_EQ(c.mean(), 1.5);
  EXPECT_EQ(c.max_support(), 2u);
  for (double s : {0.0, 0.3, 0.9, 1.0}) EXPECT_NEAR(c.pgf(s), 0.25 + 0.75 * s * s, 1e-15);
  EXPECT_NEAR(c.pgf_derivative(0.5), 1.5 * 0.5, 1e-15);
}

TEST(CountLaw, ExtinctionMatchesQuadraticRoot) {
  // 3/4 s^2 - s + 1/4 = 0 has roots 1/3 and 1.
  const double a = 0.75, b = -1.0, c = 0.25;
  const double smallest = (-b - std::sqrt(b * b - 4 * a * c)) / (2 * a);
  EXPECT_NEAR(CountLaw::finite({0.25, 0.0, 0.75}).extinction_probability(), smallest, 1e-13);
  EXPECT_DOUBLE_EQ(CountLaw::finite({0.5, 0.5}).extinction_probability(), 1.0);
}

TEST(CountLaw, GeometricLaw) {
  const double m = 2.5;
  auto g = CountLaw::geometric(m);
  const double q = m / (1.0 + m);
  for (std::size_t n = 0; n < 6; ++n) EXPECT_NEAR(g.prob(n), (1 - q) * std::pow(q, n), 1e-15);
  EXPECT_DOUBLE_EQ(g.mean(), m);
  EXPECT_NEAR(g.pgf(0.4), 1.0 / (1.0 + m * 0.6), 1e-15);
  EXPECT_NEAR(g.extinction_probability(), 1.0 / m, 1e-12);
  EXPECT_THROW(CountLaw::geometric(-1.0), ValidationError);
}

TEST(Laws, ValidationRejectsBadMass) {
  EXPECT_THROW(validate_law(GeneralLaw{{Atom{{}, 0.5}}}, "x"), ValidationError);
  EXPECT_THROW(validate_law(GeneralLaw{{Atom{{}, 1.2}, Atom{{}, -0.2}}}, "x"), ValidationError);
  EXPECT_THROW(validate_law(FactoredLaw{CountLaw::finite({0.5, 0.4}), {}}, "x"), ValidationError);
  EXPECT_NO_THROW(validate_law(FactoredLaw{CountLaw::finite({0.5, 0.5}), {{Site::at(0), 1.0}}}, "x"));
}

TEST(Laws, MomentRowOfGeneralLaw) {
  GeneralLaw g{{Atom{{{Site::at(1), 2}}, 0.5}, Atom{{{Site::at(1), 1}, {Site::at(2), 3}}, 0.5}}};
  auto row = moment_row(g);
  double m1 = 0, m2 = 0;
  for (const auto& p : row) (p.site == Site::at(1) ? m1 : m2) += p.weight;
  EXPECT_DOUBLE_EQ(m1, 1.5);
  EXPECT_DOUBLE_EQ(m2, 1.5);
  EXPECT_DOUBLE_EQ(death_probability(g), 0.0);
}

TEST(Counterpart, GeometricMeanIsLambdaKOverD) {
  auto law = counterpart_law({{Site::at(0), 1.0}, {Site::at(1), 3.0}}, 0.5, 2.0);
  EXPECT_TRUE(law.count.is_geometric());
  EXPECT_DOUBLE_EQ(law.count.mean(), 0.5 * 4.0 / 2.0);
  EXPECT_THROW(counterpart_law({}, 0.0, 1.0), ValidationError);
  EXPECT_THROW(counterpart_law({}, 1.0, 0.0), ValidationError);
}

TEST(Truncate, TreeBallHasExpectedShape) {
  auto g = tree_edge_breeding(3, 0.5);
  auto dom = truncate(g.model, g.root, 2);
  EXPECT_EQ(dom->size(), 1u + 3u + 6u);
  EXPECT_EQ(dom->boundary.size(), 12u);
  for (std::size_t i = 1; i < dom->size(); ++i) EXPECT_LE(dom->depth[i - 1], dom->depth[i]);
  EXPECT_FALSE(dom->is_interior(static_cast<std::size_t>(dom->index_of(Site::parse("0.1")))));
  EXPECT_TRUE(dom->is_interior(0));
  EXPECT_THROW(dom->index_of(Site::parse("0.1.1")), ValidationError);
}

TEST(Truncate, BudgetIsEnforced) {
  auto g = tree_edge_breeding(3, 0.5);
  EXPECT_THROW(truncate(g.model, g.root, 30, BoundaryPolicy::OutsideExtinct, 1000), ResourceError);
  EXPECT_THROW(truncate(g.model, g.root, -1), ValidationError);
}

TEST(MomentMatrix, TreeRowsAreLambdaOnEdges) {
  const double lambda = 0.3;
  auto g = tree_edge_breeding(4, lambda);
  auto dom = truncate(g.model, g.root, 2);
  auto m = moment_matrix(*dom);
  for (std::size_t i = 0; i < dom->size(); ++i) {
    EXPECT_NEAR(m.row_sum(i), lambda * 4, 1e-14);
    EXPECT_NEAR(m.outside_mass(i), dom->sites[i].coord.size() == 2 ? lambda * 3 : 0.0, 1e-14);
    for (const auto& [j, v] : m.rows[i]) {
      EXPECT_EQ(tree::distance(dom->sites[i], dom->sites[static_cast<std::size_t>(j)]), 1);
      EXPECT_NEAR(v, lambda, 1e-14);
    }
  }
}

TEST(Graph, IrreducibleClasses) {
  EXPECT_TRUE(irreducible_classes(MomentMatrix::from_dense({{0, 1}, {1, 0}})).irreducible());
  auto p = irreducible_classes(MomentMatrix::from_dense({{1, 1, 0}, {0, 1, 0}, {0, 0, 1}}));
  EXPECT_EQ(p.count(), 3u);
  EXPECT_EQ(p.class_of[0] == p.class_of[1], false);
}

TEST(Graph, AssumptionOneFlagsDeterministicSingleChild) {
  auto lazy = [](double stay) {
    BrwModel m("pair", Site::at(0), [stay](const Site& s) -> SiteLaw {
      Site other = Site::at(1 - s.coord[0]);
      if (stay == 0.0) return GeneralLaw{{Atom{{{other, 1}}, 1.0}}};
      return GeneralLaw{{Atom{{{other, 1}}, 1.0 - stay}, Atom{{{other, 2}}, stay}}};
    });
    m.with_sites({Site::at(0), Site::at(1)});
    return full_domain(std::make_shared<const BrwModel>(std::move(m)));
  };
  EXPECT_FALSE(assumption1_check(*lazy(0.0)).at(0));
  EXPECT_TRUE(assumption1_check(*lazy(0.3)).at(0));
}

TEST(Projection, TreeProjectsOntoGaltonWatson) {
  auto g = tree_edge_breeding(3, 0.5);
  auto dom = truncate(g.model, g.root, 3);
  auto pr = project_via_map(*dom, {"*"}, [](const Site&) { return std::string("*"); });
  EXPECT_TRUE(pr.valid);
  auto law = std::get<FactoredLaw>(pr.model->law(Site::at(0)));
  EXPECT_TRUE(law.count.is_geometric());
  EXPECT_NEAR(law.count.mean(), 1.5, 1e-14);
}

TEST(Projection, ResiduesModThreeOnHalfLineAreNotALocalIsomorphism) {
  // Parity would be consistent (every step flips it); residues mod 3 are not,
  // since 0 only steps up while 3 steps both ways.
  auto g = halfline_ex43();
  auto dom = truncate(g.model, g.root, 8);
  auto pr = project_via_map(*dom, {"0", "1", "2"},
                            [](const Site& s) { return std::to_string(s.coord[0] % 3); });
  EXPECT_FALSE(pr.valid);
  EXPECT_FALSE(pr.mismatches.empty());
  EXPECT_THROW(project_via_map(*dom, {"0"}, [](const Site&) { return std::string("1"); }), ValidationError);
}
