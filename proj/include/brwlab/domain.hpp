#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "brwlab/errors.hpp"
#include "brwlab/laws.hpp"
#include "brwlab/model.hpp"
#include "brwlab/site.hpp"

namespace brw {

enum class BoundaryPolicy { OutsideExtinct, OutsideImmortal };

inline const char* to_string(BoundaryPolicy p) {
  return p == BoundaryPolicy::OutsideExtinct ? "outside-extinct" : "outside-immortal";
}

inline double policy_value(BoundaryPolicy p) { return p == BoundaryPolicy::OutsideExtinct ? 1.0 : 0.0; }

// Targets are window indices when >= 0 and boundary indices b encoded as
// -(b+1) otherwise.
inline bool is_boundary_target(int t) { return t < 0; }
inline int boundary_slot(int t) { return -t - 1; }
inline int encode_boundary(int b) { return -(b + 1); }

// mu_x with targets resolved against a window.
struct CompiledLaw {
  struct CompiledAtom {
    std::vector<std::pair<int, int>> offspring;  // target -> count
    double prob = 0.0;
  };
  bool factored = false;
  std::vector<CompiledAtom> atoms;          // general laws
  CountLaw count = CountLaw::dirac(0);      // factored laws
  std::vector<std::pair<int, double>> row;  // factored laws
};

// A finite window of the site set, ordered breadth-first from the root, with
// the laws of its sites compiled against it. Sites referenced by a window law
// but lying outside form the boundary layer.
struct TruncatedDomain {
  ModelPtr model;
  Site root;
  int radius = 0;
  BoundaryPolicy policy = BoundaryPolicy::OutsideExtinct;
  std::vector<Site> sites;
  std::vector<int> depth;
  std::vector<CompiledLaw> laws;
  std::vector<Site> boundary;
  std::unordered_map<Site, int, SiteHash> index;
  std::unordered_map<Site, int, SiteHash> boundary_index;

  std::size_t size() const { return sites.size(); }
  bool contains(const Site& s) const { return index.count(s) > 0; }
  int index_of(const Site& s) const {
    auto it = index.find(s);
    if (it == index.end()) throw ValidationError("site " + s.str() + " is not in the window");
    return it->second;
  }
  bool is_interior(std::size_t i) const {
    const auto& law = laws[i];
    if (law.factored) {
      for (const auto& [t, w] : law.row)
        if (is_boundary_target(t)) return false;
    } else {
      for (const auto& a : law.atoms)
        for (const auto& [t, k] : a.offspring)
          if (is_boundary_target(t)) return false;
    }
    return true;
  }
};

using DomainPtr = std::shared_ptr<const TruncatedDomain>;

inline constexpr std::size_t kDefaultSiteBudget = 1'000'000;

namespace detail {

inline std::vector<Site> support_of(const SiteLaw& law) {
  std::vector<Site> out;
  for (const auto& p : moment_row(law))
    if (p.weight > 0.0) out.push_back(p.site);
  return out;
}

}  // namespace detail

// Graph-distance ball of `radius` around `root`. Finite models whose site
// list is covered by the radius yield the full list.
inline DomainPtr truncate(ModelPtr model, const Site& root, int radius, BoundaryPolicy policy = BoundaryPolicy::OutsideExtinct,
                          std::size_t site_budget = kDefaultSiteBudget) {
  if (radius < 0) throw ValidationError("radius must be >= 0");
  auto dom = std::make_shared<TruncatedDomain>();
  dom->model = model;
  dom->root = root;
  dom->radius = radius;
  dom->policy = policy;

  std::vector<SiteLaw> raw;
  std::vector<std::vector<Site>> supports;
  auto visit = [&](const Site& s, int d) {
    dom->index.emplace(s, static_cast<int>(dom->sites.size()));
    dom->sites.push_back(s);
    dom->depth.push_back(d);
    raw.push_back(model->law(s));
    validate_law(raw.back(), "law at " + model->label(s));
    auto sup = detail::support_of(raw.back());
    std::sort(sup.begin(), sup.end());
    supports.push_back(std::move(sup));
    if (dom->sites.size() > site_budget)
      throw ResourceError("truncation exceeded the site budget of " + std::to_string(site_budget) + " sites at radius " +
                          std::to_string(radius));
  };

  auto bfs_from = [&](const Site& start) {
    std::vector<Site> level{start};
    visit(start, 0);
    for (int d = 1; d <= radius && !level.empty(); ++d) {
      std::vector<Site> next;
      for (const auto& s : level) {
        for (const auto& t : supports[static_cast<std::size_t>(dom->index.at(s))]) {
          if (dom->index.count(t)) continue;
          next.push_back(t);
        }
      }
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
      if (dom->sites.size() + next.size() > site_budget)
        throw ResourceError("truncation exceeded the site budget of " + std::to_string(site_budget) + " sites at radius " +
                            std::to_string(radius));
      for (const auto& t : next) visit(t, d);
      level = std::move(next);
    }
  };

  bfs_from(root);
  if (model->is_finite()) {
    const auto& all = *model->finite_sites();
    if (static_cast<std::size_t>(radius) + 1 >= all.size()) {
      for (const auto& s : all)
        if (!dom->index.count(s)) bfs_from(s);
    }
    for (const auto& s : dom->sites)
      if (std::find(all.begin(), all.end(), s) == all.end())
        throw ValidationError("law references site " + s.str() + " missing from the model's site list");
  }

  auto target_of = [&](const Site& s) -> int {
    if (auto it = dom->index.find(s); it != dom->index.end()) return it->second;
    auto [it, inserted] = dom->boundary_index.emplace(s, static_cast<int>(dom->boundary.size()));
    if (inserted) dom->boundary.push_back(s);
    return encode_boundary(it->second);
  };

  dom->laws.resize(dom->sites.size());
  for (std::size_t i = 0; i < dom->sites.size(); ++i) {
    CompiledLaw& c = dom->laws[i];
    double rowsum = 0.0;
    for (const auto& p : moment_row(raw[i])) rowsum += p.weight;
    if (!std::isfinite(rowsum))
      throw ValidationError("infinite expected offspring at " + model->label(dom->sites[i]));
    if (auto* g = std::get_if<GeneralLaw>(&raw[i])) {
      c.factored = false;
      for (const auto& a : g->atoms) {
        CompiledLaw::CompiledAtom ca;
        ca.prob = a.prob;
        for (const auto& [s, k] : a.offspring)
          if (k > 0) ca.offspring.emplace_back(target_of(s), k);
        c.atoms.push_back(std::move(ca));
      }
    } else {
      auto& f = std::get<FactoredLaw>(raw[i]);
      c.factored = true;
      c.count = f.count;
      for (const auto& p : f.row)
        if (p.weight > 0.0) c.row.emplace_back(target_of(p.site), p.weight);
    }
  }
  return dom;
}

inline DomainPtr truncate(const BrwModel& model, const Site& root, int radius, BoundaryPolicy policy = BoundaryPolicy::OutsideExtinct,
                          std::size_t site_budget = kDefaultSiteBudget) {
  return truncate(std::make_shared<const BrwModel>(model), root, radius, policy, site_budget);
}

// Whole site list of a finite model.
inline DomainPtr full_domain(ModelPtr model, BoundaryPolicy policy = BoundaryPolicy::OutsideExtinct) {
  if (!model->is_finite()) throw ValidationError("full_domain needs a finite model");
  int r = static_cast<int>(model->finite_sites()->size());
  return truncate(model, model->root(), r, policy);
}

// Sparse first-moment matrix over a window; mass sent outside the window
// stays in a boundary column per row.
struct MomentMatrix {
  std::vector<std::vector<std::pair<int, double>>> rows;
  std::vector<std::vector<std::pair<int, double>>> boundary;

  std::size_t size() const { return rows.size(); }

  double at(std::size_t i, std::size_t j) const {
    for (const auto& [c, v] : rows[i])
      if (static_cast<std::size_t>(c) == j) return v;
    return 0.0;
  }
  double row_sum(std::size_t i) const {
    double s = 0.0;
    for (const auto& [c, v] : rows[i]) s += v;
    for (const auto& [c, v] : boundary[i]) s += v;
    return s;
  }
  double outside_mass(std::size_t i) const {
    double s = 0.0;
    for (const auto& [c, v] : boundary[i]) s += v;
    return s;
  }

  // Principal submatrix on `idx` (in that order); mass to dropped rows is discarded.
  MomentMatrix restrict_to(const std::vector<int>& idx) const {
    std::unordered_map<int, int> pos;
    for (std::size_t k = 0; k < idx.size(); ++k) pos[idx[k]] = static_cast<int>(k);
    MomentMatrix out;
    out.rows.resize(idx.size());
    out.boundary.resize(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (const auto& [c, v] : rows[static_cast<std::size_t>(idx[k])])
        if (auto it = pos.find(c); it != pos.end()) out.rows[k].emplace_back(it->second, v);
    return out;
  }

  static MomentMatrix from_dense(const std::vector<std::vector<double>>& a) {
    MomentMatrix m;
    m.rows.resize(a.size());
    m.boundary.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < a[i].size(); ++j)
        if (a[i][j] != 0.0) m.rows[i].emplace_back(static_cast<int>(j), a[i][j]);
    return m;
  }
};

inline MomentMatrix moment_matrix(const TruncatedDomain& dom) {
  MomentMatrix m;
  m.rows.resize(dom.size());
  m.boundary.resize(dom.size());
  for (std::size_t i = 0; i < dom.size(); ++i) {
    const auto& law = dom.laws[i];
    std::unordered_map<int, double> acc;
    std::vector<int> order;
    auto add = [&](int t, double w) {
      if (w == 0.0) return;
      auto [it, ins] = acc.emplace(t, 0.0);
      if (ins) order.push_back(t);
      it->second += w;
    };
    if (law.factored) {
      double mean = law.count.mean();
      for (const auto& [t, w] : law.row) add(t, mean * w);
    } else {
      for (const auto& a : law.atoms)
        for (const auto& [t, k] : a.offspring) add(t, a.prob * k);
    }
    std::sort(order.begin(), order.end(), [](int a, int b) {
      bool ba = is_boundary_target(a), bb = is_boundary_target(b);
      if (ba != bb) return !ba;
      return ba ? boundary_slot(a) < boundary_slot(b) : a < b;
    });
    for (int t : order) {
      if (is_boundary_target(t))
        m.boundary[i].emplace_back(boundary_slot(t), acc[t]);
      else
        m.rows[i].emplace_back(t, acc[t]);
    }
  }
  return m;
}

}  // namespace brw
