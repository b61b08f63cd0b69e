#include <gtest/gtest.h>

#include <cmath>

#include "brwlab/brwlab.hpp"

using namespace brw;

TEST(StrongLocal, TreeAboveLambdaSIsStrong) {
  auto g = tree_edge_breeding(3, 0.5);
  auto t = strong_local_test(truncate(g.model, g.root, 6), TargetSet::of({g.root}));
  EXPECT_EQ(t.verdict, StrongVerdict::Strong);
  EXPECT_EQ(t.report.status, Status::Pass);
}

TEST(StrongLocal, HalfLineIsNonStrong) {
  auto g = halfline_ex43();
  auto t = strong_local_test(truncate(g.model, g.root, 20), TargetSet::of({Site::at(0)}));
  EXPECT_EQ(t.verdict, StrongVerdict::NonStrong);
  ASSERT_EQ(t.report.witnesses.size(), 1u);
  EXPECT_GT(t.report.witnesses[0].values.at("gap"), 1e-8);
}

TEST(StrongLocal, SubcriticalHasNoSurvival) {
  auto g = gw_law(CountLaw::finite({0.6, 0.0, 0.4}));
  auto t = strong_local_test(full_domain(g.model), TargetSet::of({g.root}));
  EXPECT_EQ(t.verdict, StrongVerdict::NoSurvival);
}

TEST(StrongLocal, TreeWithLoopMiddleProbe) {
  auto g = tree_with_loop(3, 0.35, 3.0);
  auto t = strong_local_test(truncate(g.model, g.root, 12), TargetSet::of({g.root}), 1e-8);
  EXPECT_EQ(t.verdict, StrongVerdict::NonStrong);
}

TEST(StrongLocal, WideBracketsAreUndecided) {
  // Without hints the policy bracket at radius 3 is too wide to decide.
  auto model = std::make_shared<const BrwModel>(
      halfline_model("plain", CountLaw::finite({0.25, 0.0, 0.75}), [](std::int64_t i) { return i == 0 ? 1.0 : 0.7; }));
  auto t = strong_local_test(truncate(model, Site::at(0), 3), TargetSet::of({Site::at(0)}));
  EXPECT_EQ(t.verdict, StrongVerdict::Undecided);
  EXPECT_EQ(t.report.status, Status::Undecided);
}

TEST(MaxPrinciple, HoldsOnSolverOutput) {
  auto g = halfline_ex43();
  auto dom = truncate(g.model, g.root, 30);
  auto qb = solve_global_extinction(dom, {1e-12, 1'000'000});
  auto q = solve_local_extinction(dom, TargetSet::of({Site::at(0)}), {1e-12, 1'000'000});
  EXPECT_TRUE(max_principle_check(q.lower, qb.lower).passed());
  EXPECT_TRUE(max_principle_check(qb.lower, qb.lower).passed());
}

TEST(MaxPrinciple, PreconditionFailureIsUndecided) {
  auto dom = full_domain(two_site_cubic().model);
  auto qb = solve_global_extinction(dom, {1e-14, 1'000'000});
  auto r = max_principle_check(SiteVector::constant(dom, 0.9), qb.lower);
  EXPECT_EQ(r.status, Status::Undecided);
}

TEST(MaxPrinciple, SkipsSitesWithoutNeighboursAndBoundary) {
  auto g = halfline_ex43();
  auto dom = truncate(g.model, g.root, 10);
  auto qb = solve_global_extinction(dom, {1e-12, 1'000'000});
  auto r = max_principle_check(qb.lower, qb.lower);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.detail, "10 interior sites checked");
}

TEST(MvWitness, SpataruVectorIsAWitness) {
  auto sp = spataru_recursion(0.5, ThetaSchedule::constant(0.5), 400);
  auto dom = truncate(sp.companion, Site::at(0), 200);
  auto qb = solve_global_extinction(dom, {1e-12, 1'000'000});
  std::vector<double> v(dom->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = sp.z[static_cast<std::size_t>(dom->sites[i].coord[0])];
  const auto a = TargetSet::of({Site::at(0)});
  EXPECT_TRUE(mv_witness_verify(SiteVector::from(dom, v), qb.lower, a).passed());
  // q-bar itself separates nothing.
  EXPECT_FALSE(mv_witness_verify(qb.lower, qb.lower, a).passed());
  auto slt = strong_local_test(dom, a);
  EXPECT_NE(slt.verdict, StrongVerdict::Strong);
}

TEST(MvWitness, RejectsVectorBelowQbar) {
  auto dom = full_domain(two_site_cubic().model);
  auto qb = solve_global_extinction(dom, {1e-14, 1'000'000});
  auto r = mv_witness_verify(SiteVector::constant(dom, 0.1), qb.lower, TargetSet::of({Site::at(0)}));
  EXPECT_EQ(r.verdict, "PRECONDITION");
  EXPECT_THROW(mv_witness_verify(qb.lower, qb.lower, TargetSet::everything()), ValidationError);
}

TEST(Convexity, NeedsTwoChildrenOnTheSupport) {
  auto binary = full_domain(gw_law(CountLaw::finite({0.25, 0.0, 0.75})).model);
  auto single = full_domain(gw_law(CountLaw::finite({0.25, 0.75})).model);
  EXPECT_TRUE(convexity_condition(*binary, 0, SiteVector::constant(binary, 0.5), SiteVector::constant(binary, 0.1)));
  EXPECT_FALSE(convexity_condition(*binary, 0, SiteVector::constant(binary, 0.5), SiteVector::constant(binary, 0.0)));
  EXPECT_FALSE(convexity_condition(*single, 0, SiteVector::constant(single, 0.5), SiteVector::constant(single, 0.1)));
  auto cubic = full_domain(two_site_cubic().model);
  EXPECT_TRUE(convexity_condition(*cubic, 0, SiteVector::from(cubic, {0.0, 0.0}), SiteVector::from(cubic, {0.0, 0.2})));
  EXPECT_FALSE(convexity_condition(*cubic, 0, SiteVector::from(cubic, {0.0, 0.0}), SiteVector::from(cubic, {0.2, 0.0})));
}

TEST(TwoFixedPoints, TwoSiteCubic) {
  auto r = finite_two_fixed_points(two_site_cubic().model, 20, 3);
  ASSERT_TRUE(r.passed()) << r.detail;
  const auto& v = r.witnesses.at(0).values;
  ASSERT_EQ(v.size(), 2u);
  EXPECT_NEAR(v.at("limit_0"), (std::sqrt(5.0) - 1) / 2, 1e-8);
  EXPECT_NEAR(v.at("limit_1"), 1.0, 1e-8);
}

TEST(TwoFixedPoints, GaltonWatsonAndSubcritical) {
  auto r = finite_two_fixed_points(gw_law(CountLaw::finite({0.25, 0.0, 0.75})).model, 10, 1);
  ASSERT_TRUE(r.passed());
  EXPECT_NEAR(r.witnesses[0].values.at("limit_0"), 1.0 / 3.0, 1e-8);
  auto sub = finite_two_fixed_points(gw_law(CountLaw::finite({0.6, 0.0, 0.4})).model, 10, 1);
  ASSERT_TRUE(sub.passed());
  EXPECT_EQ(sub.witnesses[0].values.size(), 1u);
}

TEST(TwoFixedPoints, ReducibleIsUndecided) {
  BrwModel m("reducible", Site::at(0), [](const Site& s) -> SiteLaw {
    if (s.coord[0] == 0) return FactoredLaw{CountLaw::finite({0.25, 0.0, 0.75}), {{Site::at(1), 1.0}}};
    return FactoredLaw{CountLaw::finite({0.25, 0.0, 0.75}), {{Site::at(1), 1.0}}};
  });
  m.with_sites({Site::at(0), Site::at(1)});
  auto r = finite_two_fixed_points(std::make_shared<const BrwModel>(std::move(m)), 5, 1);
  EXPECT_EQ(r.status, Status::Undecided);
}

TEST(StrongLocal, TreeBetweenCriticalValuesIsNeverStrong) {
  // Global survival without local survival on T_3.
  auto g = tree_edge_breeding(3, 0.34);
  auto t = strong_local_test(truncate(g.model, g.root, 10), TargetSet::of({g.root}));
  EXPECT_NE(t.verdict, StrongVerdict::Strong);
  EXPECT_NE(t.verdict, StrongVerdict::NoSurvival);
}

TEST(StrongLocal, SmallWindowBeforeTheCrossingStaysUndecided) {
  // On the tree with a loop at lambda = 0.35, q0 overtakes q-bar only from depth 4.
  auto g = tree_with_loop(3, 0.35, 3.0);
  auto t = strong_local_test(truncate(g.model, g.root, 3), TargetSet::of({g.root}));
  EXPECT_EQ(t.verdict, StrongVerdict::Undecided);
}

TEST(SupTrend, HalfLineGrowsTowardOne) {
  auto g = halfline_ex43();
  auto r = sup_trend(g.model, g.root, TargetSet::of({Site::at(0)}), {10, 20, 40});
  ASSERT_EQ(r.witnesses.size(), 3u);
  EXPECT_EQ(r.verdict, "TREND");
  for (std::size_t k = 1; k < 3; ++k)
    EXPECT_GT(r.witnesses[k].values.at("sup_q_lower"), r.witnesses[k - 1].values.at("sup_q_lower"));
  EXPECT_GT(r.witnesses[2].values.at("max_gap"), 0.0);
  EXPECT_THROW(sup_trend(g.model, g.root, TargetSet::everything(), {5}), ValidationError);
}
