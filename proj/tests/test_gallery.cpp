#include <gtest/gtest.h>

#include <cmath>

#include "brwlab/brwlab.hpp"

using namespace brw;

namespace {

// Green function of SRW on T_d by summing radial-chain occupation
// probabilities, divided by the sphere size.
double green_by_series(int d, double z, int r, int terms = 4000) {
  std::vector<double> p(static_cast<std::size_t>(terms) + 2, 0.0), nx(p.size());
  p[0] = 1.0;
  double acc = r == 0 ? 1.0 : 0.0, zn = 1.0;
  for (int n = 1; n <= terms; ++n) {
    std::fill(nx.begin(), nx.end(), 0.0);
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
      if (p[k] == 0.0) continue;
      if (k == 0) nx[1] += p[0];
      else {
        nx[k + 1] += p[k] * (d - 1.0) / d;
        nx[k - 1] += p[k] / d;
      }
    }
    p.swap(nx);
    zn *= z;
    acc += p[static_cast<std::size_t>(r)] * zn;
  }
  const double sphere = r == 0 ? 1.0 : d * std::pow(d - 1.0, r - 1);
  return acc / sphere;
}

}  // namespace

TEST(Tree, NeighboursAndDistance) {
  auto nb = tree::neighbors(Site{}, 3);
  EXPECT_EQ(nb.size(), 3u);
  auto w = Site::parse("2.0.1");
  EXPECT_EQ(tree::neighbors(w, 3).size(), 3u);
  for (const auto& v : tree::neighbors(w, 3)) EXPECT_EQ(tree::distance(v, w), 1);
  EXPECT_TRUE(tree::valid_word(w, 3));
  EXPECT_FALSE(tree::valid_word(Site::parse("0.2"), 3));
  EXPECT_EQ(tree::distance(Site::parse("0.1"), Site::parse("1.1")), 4);
}

TEST(Tree, GreenFunctionMatchesSeries) {
  for (int d : {3, 4})
    for (double z : {0.5, 0.9})
      for (int r : {0, 1, 3}) EXPECT_NEAR(tree::green(d, z, r), green_by_series(d, z, r), 1e-10) << d << z << r;
}

TEST(Tree, LambdaS) {
  EXPECT_NEAR(tree::lambda_s(3), 1.0 / (2 * std::sqrt(2.0)), 1e-15);
  EXPECT_NEAR(tree::lambda_s(4), 1.0 / (2 * std::sqrt(3.0)), 1e-15);
}

TEST(Tree, LoopModelCarriesTheRateAtTheRoot) {
  auto g = tree_with_loop(3, 0.35, 3.0);
  auto dom = truncate(g.model, g.root, 1);
  auto m = moment_matrix(*dom);
  EXPECT_NEAR(m.at(0, 0), 0.35 * 3.0, 1e-14);
  EXPECT_NEAR(m.row_sum(0), 0.35 * 6.0, 1e-14);
  ASSERT_TRUE(g.model->tree_symmetry());
  EXPECT_EQ(g.model->tree_symmetry()->loop_rate, 3.0);
  EXPECT_FALSE(g.notes.empty());
}

TEST(Spataru, FirstTermsFromDefiningEquations) {
  // G(z|0) = 3/4 z(1)^2 + 1/4 with p_0 = 1 gives z(1)^2 = (4 z0 - 1)/3; at
  // n >= 1 the solved square root s_n of 3/4 s^2 + 1/4 = z(n) is the mixed
  // argument and z(n+1) = 1 - (1 - theta)(1 - s_n).
  const double z0 = 0.5, theta = 0.5;
  const double z1 = std::sqrt((4 * z0 - 1) / 3);
  const double s1 = std::sqrt((4 * z1 - 1) / 3);
  const double z2 = 1 - (1 - theta) * (1 - s1);
  const double p1 = (s1 - z0) / (z2 - z0);
  auto out = spataru_recursion(z0, ThetaSchedule::constant(theta), 50);
  EXPECT_NEAR(out.z[1], z1, 1e-14);
  EXPECT_NEAR(out.z[2], z2, 1e-14);
  EXPECT_NEAR(out.p[1], p1, 1e-13);
  EXPECT_LT(out.max_residual, 1e-14);
}

TEST(Spataru, HighPrecisionReference) {
  // 40-digit reference values.
  auto out = spataru_recursion(0.5, ThetaSchedule::constant(0.5), 100);
  EXPECT_NEAR(out.z[1], 0.57735026918962576, 1e-15);
  EXPECT_NEAR(out.z[2], 0.83032825547, 1e-10);
  EXPECT_NEAR(out.p[1], 0.48635412910, 1e-10);
}

TEST(Spataru, ValidationAndSchedules) {
  EXPECT_THROW(spataru_recursion(0.2, ThetaSchedule::constant(0.5), 10), ValidationError);
  EXPECT_THROW(spataru_recursion(0.5, ThetaSchedule::constant(0.5), 1), ValidationError);
  // theta_n -> 1 drives p_n -> 1; past double resolution p_n rounds to 1.
  auto out = spataru_recursion(0.5, ThetaSchedule::to_one(), 120);
  for (std::size_t n = 1; n < out.p.size(); ++n) {
    EXPECT_GT(out.p[n], 0.0);
    EXPECT_LE(out.p[n], 1.0);
    EXPECT_GT(out.w[n + 1], 0.0L);
  }
  EXPECT_LT(out.p[5], 1.0);
  EXPECT_GT(out.p[5], out.p[2]);
  EXPECT_GT(out.p[60], 1.0 - 1e-15);
  EXPECT_LT(out.max_residual, 1e-12);
  EXPECT_THROW(spataru_recursion(0.5, ThetaSchedule::to_one(), 400), ResourceError);
  EXPECT_NO_THROW(make_gallery("spataru", {{"schedule", 1}}));
}

TEST(HalfLine43, DefaultsAndValidation) {
  EXPECT_EQ(ex43_default_p(0), 1.0);
  EXPECT_EQ(ex43_default_p(1), 0.5);
  EXPECT_GT(ex43_default_comp(30), 0.0);
  auto dg = ex43_diagnostics(ex43_default_comp);
  EXPECT_TRUE(dg.product_positive);
  EXPECT_NEAR(dg.confined_growth, 2.25 * 0.5, 1e-15);
  // p_i = 1 off the origin is rejected.
  EXPECT_THROW(halfline_ex43([](std::int64_t) { return 1.0; }, [](std::int64_t) { return 0.0; }), ValidationError);
  auto g = halfline_ex43();
  auto hint = g.model->boundary_bound(Quantity::GlobalExtinction, TargetSet::everything(), Site::at(100));
  EXPECT_NEAR(hint.lo, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(hint.hi, 1.0 / 3.0, 1e-15);
}

TEST(HalfLine43, AlwaysRightBoundIsAProbability) {
  for (int i : {2, 5, 20, 40}) {
    double b = always_right_bound(ex43_default_comp, i, 2.0);
    EXPECT_GT(b, 0.0);
    EXPECT_LE(b, 1.0);
  }
  EXPECT_LT(always_right_bound(ex43_default_comp, 2, 2.0), always_right_bound(ex43_default_comp, 10, 2.0));
}

TEST(HalfLine44, SequencesSatisfyTheConstruction) {
  auto s = ex44_sequences(CountLaw::finite({0.25, 0.0, 0.75}), 20);
  EXPECT_NEAR(s.qbar, 1.0 / 3.0, 1e-12);
  EXPECT_GT(std::exp(s.threshold_log_prefix), s.qbar);
  for (std::size_t i = 1; i < s.N.size(); ++i) EXPECT_GE(s.N[i], 1);
  for (std::size_t i = 1; i < s.p.size(); ++i) {
    EXPECT_GT(s.p[i], 0.0);
    EXPECT_LE(s.p[i], 1.0);
    EXPECT_GT(s.one_minus_p[i], 0.0);
  }
  EXPECT_THROW(ex44_sequences(CountLaw::finite({0.5, 0.5}), 10), ValidationError);
}

TEST(Gallery, EveryNameBuilds) {
  for (const auto& name : gallery_names()) {
    auto g = make_gallery(name, name == "spataru" ? GalleryParams{{"n_max", 100}} : GalleryParams{});
    ASSERT_TRUE(g.model) << name;
    EXPECT_NO_THROW(truncate(g.model, g.root, 2)) << name;
  }
  EXPECT_THROW(make_gallery("nope"), ValidationError);
}

TEST(Gallery, GaltonWatsonFromParams) {
  auto g = make_gallery("gw", {{"rho0", 0.25}, {"rho1", 0.0}, {"rho2", 0.75}});
  auto b = solve_global_extinction(full_domain(g.model));
  EXPECT_NEAR(b.lower[0], 1.0 / 3.0, 1e-9);
}
