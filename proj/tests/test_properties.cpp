#include <gtest/gtest.h>

#include <cstdlib>
#include <random>

#include "brwlab/acceptance.hpp"
#include "brwlab/brwlab.hpp"

using namespace brw;

namespace {

struct Case {
  std::string name;
  GalleryParams params;
  int radius;
};

std::vector<Case> gallery_cases() {
  return {{"gw", {}, 0},
          {"two-site-cubic", {}, 0},
          {"tree", {{"lambda", 0.5}}, 7},
          {"tree", {{"lambda", 0.3}}, 7},
          {"tree-loop", {{"lambda", 0.30}}, 7},
          {"tree-loop", {{"lambda", 0.40}}, 7},
          {"halfline-43", {}, 40},
          {"halfline-44", {}, 40},
          {"line", {{"lambda", 0.8}}, 40},
          {"line-plus-branch", {{"lambda", 0.34}}, 6},
          {"tree-plus-clique", {{"lambda", 0.34}}, 6},
          {"spataru", {{"n_max", 300}}, 150}};
}

void PrintTo(const Case& c, std::ostream* os) { *os << c.name << " R=" << c.radius; }

class GalleryProperties : public ::testing::TestWithParam<Case> {};

std::string case_name(const ::testing::TestParamInfo<Case>& info) {
  std::string s = info.param.name + "_" + std::to_string(info.index);
  for (auto& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  return s;
}

}  // namespace

TEST_P(GalleryProperties, SolversAreMonotoneAndOrdered) {
  const auto& c = GetParam();
  auto g = make_gallery(c.name, c.params);
  auto dom = g.model->is_finite() ? full_domain(g.model) : truncate(g.model, g.root, c.radius);
  const auto a = TargetSet::of({g.root});
  const SolverOptions opt{1e-12, 1'000'000};
  auto qb = solve_global_extinction(dom, opt);
  auto q0 = solve_never_visit(dom, a, opt);
  auto q = solve_local_extinction(dom, a, opt);
  for (const auto* b : {&qb, &q0, &q}) {
    EXPECT_TRUE(b->converged) << to_string(b->quantity);
    EXPECT_TRUE(b->monotone) << to_string(b->quantity);
    // Each side is converged to 1e-12 separately, so the sides may cross by about that much.
    for (std::size_t i = 0; i < dom->size(); ++i) EXPECT_LE(b->lower[i], b->upper[i] + 1e-9);
  }
  // q0 <= q and q-bar <= q: both are dominated by the local extinction vector.
  for (std::size_t i = 0; i < dom->size(); ++i) {
    EXPECT_LE(q0.lower[i], q.upper[i] + 1e-9);
    EXPECT_LE(qb.lower[i], q.upper[i] + 1e-9);
  }
  EXPECT_TRUE(max_principle_check(qb.lower, qb.lower).passed());
  EXPECT_TRUE(max_principle_check(q.lower, qb.lower).passed());
}

TEST_P(GalleryProperties, SmallestFixedPointDominance) {
  // Any fixed point obtained from another start lies above q-bar.
  const auto& c = GetParam();
  auto g = make_gallery(c.name, c.params);
  auto dom = g.model->is_finite() ? full_domain(g.model) : truncate(g.model, g.root, c.radius);
  auto qb = solve_global_extinction(dom, {1e-12, 1'000'000});
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> start(dom->size());
  for (auto& v : start) v = u(rng);
  auto run = brw::detail::iterate(*dom, start, qb.upper.boundary, nullptr, 0, {1e-12, 200'000});
  for (std::size_t i = 0; i < dom->size(); ++i) EXPECT_GE(run.v[i], qb.lower[i] - 1e-9);
}

INSTANTIATE_TEST_SUITE_P(Gallery, GalleryProperties, ::testing::ValuesIn(gallery_cases()), case_name);

TEST(Nestedness, PolicyBracketsNestInRadius) {
  for (const std::string name : {"tree", "halfline-43", "line", "tree-loop"}) {
    auto g = make_gallery(name, {{"lambda", name == "line" ? 0.8 : 0.5}});
    ExtinctionBracket prev;
    for (int radius : {4, 8, 16}) {
      if (name.rfind("tree", 0) == 0 && radius == 16) continue;  // 3 * 2^16 sites: covered by the acceptance run
      auto b = solve_global_extinction(truncate(g.model, g.root, radius), {1e-12, 1'000'000});
      if (radius > 4) {
        const auto& pd = *prev.lower.domain;
        for (std::size_t i = 0; i < pd.size(); ++i) {
          auto j = static_cast<std::size_t>(b.lower.domain->index_of(pd.sites[i]));
          EXPECT_GE(b.lower[j], prev.lower[i] - 1e-9) << name << " R=" << radius;
          EXPECT_LE(b.upper[j], prev.upper[i] + 1e-9) << name << " R=" << radius;
        }
      }
      prev = b;
    }
  }
}

TEST(StrongLocalRefinement, NestedRadiiNeverContradict) {
  struct Item {
    GalleryModel g;
    Site a;
  };
  std::vector<Item> items{{halfline_ex43(), Site::at(0)}, {tree_with_loop(3, 0.35, 3.0), Site{}},
                          {tree_with_loop(3, 0.40, 3.0), Site{}}};
  for (const auto& it : items) {
    std::vector<StrongVerdict> seen;
    for (int radius : {3, 6, 9}) {
      auto t = strong_local_test(truncate(it.g.model, it.g.root, radius), TargetSet::of({it.a}));
      if (t.verdict != StrongVerdict::Undecided) seen.push_back(t.verdict);
    }
    for (std::size_t i = 1; i < seen.size(); ++i) EXPECT_EQ(seen[i], seen[0]);
  }
}

TEST(RandomFinite, TwoFixedPointsOnIrreducibleModels) {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + static_cast<int>(u(gen) * 4);
    std::vector<std::vector<Placement>> rows(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      rows[static_cast<std::size_t>(i)].push_back({Site::at((i + 1) % n), 0.5 + u(gen)});
      if (u(gen) < 0.5) rows[static_cast<std::size_t>(i)].push_back({Site::at(static_cast<int>(u(gen) * n)), u(gen)});
      double tot = 0.0;
      for (const auto& p : rows[static_cast<std::size_t>(i)]) tot += p.weight;
      for (auto& p : rows[static_cast<std::size_t>(i)]) p.weight /= tot;
    }
    const double p0 = 0.1 + 0.5 * u(gen);
    std::vector<Site> sites;
    for (int i = 0; i < n; ++i) sites.push_back(Site::at(i));
    BrwModel m("random", Site::at(0), [rows, p0](const Site& s) -> SiteLaw {
      return FactoredLaw{CountLaw::finite({p0, 0.0, 1.0 - p0}), rows[static_cast<std::size_t>(s.coord[0])]};
    });
    m.with_sites(sites);
    auto r = finite_two_fixed_points(std::make_shared<const BrwModel>(std::move(m)), 5, static_cast<std::uint64_t>(trial));
    EXPECT_TRUE(r.passed()) << r.detail;
    EXPECT_LE(r.witnesses.at(0).values.size(), 2u);
  }
}

TEST(Determinism, MonteCarloIndependentOfThreadCount) {
  auto g = halfline_ex43();
  auto dom = truncate(g.model, g.root, 150);
  SimulationOptions opt;
  opt.trials = 5000;
  opt.horizon = 50;
  opt.seed = 31;
  std::string out[2];
  int k = 0;
  for (unsigned threads : {1u, 8u}) {
    brw::acceptance::detail::ThreadEnv env(threads);
    json j = json::array();
    for (const auto& e : estimate(*dom, g.root, {Event::global(), Event::escape({Site::at(0)}, 25)}, opt))
      j.push_back(estimate_json(e));
    out[k++] = j.dump();
  }
  EXPECT_EQ(out[0], out[1]);
}

TEST(Determinism, SolverIndependentOfThreadCount) {
  auto g = tree_edge_breeding(3, 0.5);
  std::vector<double> r[2];
  int k = 0;
  for (unsigned threads : {1u, 8u}) {
    brw::acceptance::detail::ThreadEnv env(threads);
    auto b = solve_global_extinction(truncate(g.model, g.root, 14), {1e-12, 1'000'000});
    r[k++] = b.lower.values;
  }
  EXPECT_EQ(r[0], r[1]);
}
