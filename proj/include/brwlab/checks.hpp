#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "brwlab/domain.hpp"
#include "brwlab/genfun.hpp"
#include "brwlab/graph.hpp"
#include "brwlab/model.hpp"

namespace brw {

enum class Status { Pass, Fail, Undecided };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Pass: return "PASS";
    case Status::Fail: return "FAIL";
    case Status::Undecided: return "UNDECIDED";
  }
  return "?";
}

struct Witness {
  std::string site;
  std::map<std::string, double> values;
};

struct CheckReport {
  std::string name;
  Status status = Status::Undecided;
  std::string verdict;  // check-specific label (e.g. STRONG); defaults to the status
  std::vector<Witness> witnesses;
  double tolerance = 1e-8;
  std::string detail;

  bool passed() const { return status == Status::Pass; }
};

inline constexpr double kCheckTolerance = 1e-8;
inline constexpr std::size_t kMaxWitnesses = 20;

namespace detail {

inline void add_witness(CheckReport& r, const TruncatedDomain& dom, std::size_t i, std::map<std::string, double> v) {
  if (r.witnesses.size() < kMaxWitnesses) r.witnesses.push_back({dom.model->label(dom.sites[i]), std::move(v)});
}

inline double normalized(double z, double q, double tol) {
  if (q >= 1.0 - tol) return 1.0;
  return (z - q) / (1.0 - q);
}

// P(at least one child at window site t).
inline double prob_child_at(const CompiledLaw& law, int t) {
  if (!law.factored) {
    double p = 0.0;
    for (const auto& a : law.atoms)
      for (const auto& [u, c] : a.offspring)
        if (u == t && c > 0) {
          p += a.prob;
          break;
        }
    return p;
  }
  double w = 0.0;
  for (const auto& [u, v] : law.row)
    if (u == t) w += v;
  return w == 0.0 ? 0.0 : 1.0 - law.count.pgf(1.0 - w);
}

// Out-neighbours y != x with m_xy > 0, window indices only.
inline std::vector<std::vector<int>> out_neighbours(const TruncatedDomain& dom) {
  auto m = moment_matrix(dom);
  std::vector<std::vector<int>> nb(dom.size());
  for (std::size_t i = 0; i < dom.size(); ++i)
    for (const auto& [j, v] : m.rows[i])
      if (v > 0.0 && static_cast<std::size_t>(j) != i) nb[i].push_back(j);
  return nb;
}

}  // namespace detail

// With z-hat = (z - q-bar)/(1 - q-bar): at every interior site some
// out-neighbour has z-hat at least z-hat(x), and z-hat(x) = 1 forces z-hat = 1
// on the neighbourhood. Tolerances are propagated through the division.
inline CheckReport max_principle_check(const SiteVector& z, const SiteVector& qbar, double tol = kCheckTolerance) {
  const auto& dom = *z.domain;
  CheckReport r;
  r.name = "max_principle";
  r.tolerance = tol;
  auto fp = verify_fixed_point(z);
  if (fp.excess > tol) {
    r.status = Status::Undecided;
    r.detail = "precondition G(z) >= z - tol fails by " + std::to_string(fp.excess);
    return r;
  }
  auto nb = detail::out_neighbours(dom);
  std::size_t checked = 0;
  auto scale = [&](std::size_t i) { return qbar[i] >= 1.0 - tol ? 0.0 : 1.0 / (1.0 - qbar[i]); };
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (nb[i].empty() || !dom.is_interior(i)) continue;
    ++checked;
    const double zx = detail::normalized(z[i], qbar[i], tol);
    const double sx = scale(i);
    bool larger = false;
    double best = -1e300;
    for (int j : nb[i]) {
      const auto y = static_cast<std::size_t>(j);
      const double zy = detail::normalized(z[y], qbar[y], tol);
      best = std::max(best, zy);
      if (zy >= zx - tol * (1.0 + 2.0 * (sx + scale(y)))) larger = true;
    }
    // z-hat(x) = 1 propagates: 1 - z(x) >= P(some child at y) (1 - z(y)) up
    // to the fixed-point tolerance, which is the quantitative form.
    bool top_ok = true;
    if (zx >= 1.0 - tol * (1.0 + 2.0 * sx)) {
      for (int j : nb[i]) {
        const auto y = static_cast<std::size_t>(j);
        const double pi = detail::prob_child_at(dom.laws[i], j);
        if (pi > 0.0 && pi * (1.0 - z[y]) > (1.0 - z[i]) + 2.0 * tol) top_ok = false;
      }
    }
    if (!(larger && top_ok)) {
      r.status = Status::Fail;
      detail::add_witness(r, dom, i, {{"z_hat", zx}, {"max_neighbour_z_hat", best}});
    }
  }
  if (r.status != Status::Fail) r.status = Status::Pass;
  r.verdict = to_string(r.status);
  r.detail = std::to_string(checked) + " interior sites checked";
  return r;
}

enum class StrongVerdict { Strong, NonStrong, NoSurvival, Undecided };

inline const char* to_string(StrongVerdict v) {
  switch (v) {
    case StrongVerdict::Strong: return "STRONG";
    case StrongVerdict::NonStrong: return "NON_STRONG";
    case StrongVerdict::NoSurvival: return "NO_SURVIVAL";
    case StrongVerdict::Undecided: return "UNDECIDED";
  }
  return "?";
}

struct StrongLocalResult {
  StrongVerdict verdict = StrongVerdict::Undecided;
  CheckReport report;
  ExtinctionBracket qbar;
  ExtinctionBracket never;
};

// Strong local survival in A holds iff q0(., A) <= q-bar everywhere; it fails
// iff q0(x, A) > q-bar(x) somewhere with q-bar(x) < 1. Domination is claimed
// only when it also holds on the boundary values, so that a window too small
// to reach the crossing stays undecided.
inline StrongLocalResult strong_local_test(const DomainPtr& dom, const TargetSet& a, double tol = kCheckTolerance,
                                           std::optional<SolverOptions> solver = std::nullopt) {
  SolverOptions opt = solver.value_or(SolverOptions{std::min(1e-12, tol * 1e-2), 1'000'000});
  StrongLocalResult out;
  out.qbar = solve_global_extinction(dom, opt);
  out.never = solve_never_visit(dom, a, opt);
  auto& r = out.report;
  r.name = "strong_local";
  r.tolerance = tol;
  const auto& qb = out.qbar;
  const auto& q0 = out.never;
  const std::size_t n = dom->size();

  bool all_dead = true, some_alive = false, dominated = true;
  std::optional<std::size_t> breach;
  double worst_gap = 0.0, widest = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (qb.lower[i] < 1.0 - tol) all_dead = false;
    if (qb.upper[i] < 1.0 - tol) some_alive = true;
    if (q0.upper[i] > qb.lower[i] + tol) dominated = false;
    const double gap = q0.lower[i] - qb.upper[i];
    if (qb.upper[i] < 1.0 && gap > tol && gap > worst_gap) {
      worst_gap = gap;
      breach = i;
    }
    widest = std::max({widest, qb.upper[i] - qb.lower[i], q0.upper[i] - q0.lower[i]});
  }
  for (std::size_t k = 0; k < dom->boundary.size(); ++k)
    if (q0.upper.outside(k) > qb.lower.outside(k) + tol) dominated = false;
  if (all_dead) {
    out.verdict = StrongVerdict::NoSurvival;
    r.status = Status::Pass;
  } else if (breach) {
    out.verdict = StrongVerdict::NonStrong;
    r.status = Status::Pass;
    detail::add_witness(r, *dom, *breach,
                        {{"q0_lower", q0.lower[*breach]}, {"qbar_upper", qb.upper[*breach]}, {"gap", worst_gap}});
  } else if (dominated && some_alive) {
    out.verdict = StrongVerdict::Strong;
    r.status = Status::Pass;
  } else {
    out.verdict = StrongVerdict::Undecided;
    r.status = Status::Undecided;
    r.detail = "bracket width " + std::to_string(widest);
  }
  r.verdict = to_string(out.verdict);
  if (r.detail.empty())
    r.detail = "radius " + std::to_string(dom->radius) + ", bracket width " + std::to_string(widest);
  return out;
}

// Window trend of sup_w q(w, A) and of the largest q - q-bar gap across radii.
// Either q(., A) = q-bar or sup_w q(w, A) = 1 on the whole space; a window can
// only show the trend, so this report never states a limit.
inline CheckReport sup_trend(ModelPtr model, const Site& root, const TargetSet& a, const std::vector<int>& radii,
                             BoundaryPolicy policy = BoundaryPolicy::OutsideExtinct, double tol = kCheckTolerance) {
  if (a.all) throw ValidationError("sup_trend needs a finite target set");
  CheckReport r;
  r.name = "sup_trend";
  r.tolerance = tol;
  r.status = Status::Pass;
  r.verdict = "TREND";
  const SolverOptions opt{std::min(1e-12, tol * 1e-2), 1'000'000};
  for (int radius : radii) {
    auto dom = truncate(model, root, radius, policy);
    auto q = solve_local_extinction(dom, a, opt);
    auto qb = solve_global_extinction(dom, opt);
    std::size_t arg = 0;
    double sup = -1.0, gap = 0.0;
    for (std::size_t i = 0; i < dom->size(); ++i) {
      if (q.lower[i] > sup) {
        sup = q.lower[i];
        arg = i;
      }
      gap = std::max(gap, q.lower[i] - qb.upper[i]);
    }
    r.witnesses.push_back({dom->model->label(dom->sites[arg]),
                           {{"radius", static_cast<double>(radius)}, {"sup_q_lower", sup}, {"max_gap", gap}}});
  }
  r.detail = std::to_string(radii.size()) + " radii";
  return r;
}

// Witness for the absence of strong local survival: G(v) >= v off A, and
// T^{-1}v at some supplied x0 outside A strictly exceeds its maximum over A.
inline CheckReport mv_witness_verify(const SiteVector& v, const SiteVector& qbar, const TargetSet& a,
                                     std::vector<Site> probes = {}, double tol = kCheckTolerance) {
  const auto& dom = *v.domain;
  CheckReport r;
  r.name = "mv_witness";
  r.tolerance = tol;
  if (a.all || a.sites.empty()) throw ValidationError("witness verification needs a finite nonempty A");
  for (std::size_t i = 0; i < dom.size(); ++i)
    if (v[i] < qbar[i] - tol) {
      r.status = Status::Fail;
      r.verdict = "PRECONDITION";
      r.detail = "v < q-bar beyond tolerance";
      detail::add_witness(r, dom, i, {{"v", v[i]}, {"qbar", qbar[i]}});
      return r;
    }
  auto g = eval_G(v);
  bool super = true;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (a.contains(dom.sites[i])) continue;
    if (g[i] < v[i] - tol) {
      super = false;
      detail::add_witness(r, dom, i, {{"G(v)", g[i]}, {"v", v[i]}});
    }
  }
  auto t_inv = [&](std::size_t i) { return detail::normalized(v[i], qbar[i], 0.0); };
  double on_a = -1e300;
  for (const auto& s : a.sites) on_a = std::max(on_a, t_inv(static_cast<std::size_t>(dom.index_of(s))));
  if (probes.empty())
    for (const auto& s : dom.sites)
      if (!a.contains(s)) probes.push_back(s);
  double best = -1e300;
  std::string best_site;
  for (const auto& s : probes) {
    if (a.contains(s)) continue;
    double t = t_inv(static_cast<std::size_t>(dom.index_of(s)));
    if (t > best) {
      best = t;
      best_site = dom.model->label(s);
    }
  }
  const bool separated = best > on_a + tol;
  r.status = super && separated ? Status::Pass : Status::Fail;
  r.verdict = to_string(r.status);
  r.detail = "max over A " + std::to_string(on_a) + ", max at probes " + std::to_string(best) + " (" + best_site + ")" +
             (super ? "" : "; G(v) >= v fails off A");
  return r;
}

// Strict convexity of t -> G(z + t v | x): some atom with positive mass puts
// at least two children on supp v and none outside supp z U supp v.
inline bool convexity_condition(const TruncatedDomain& dom, std::size_t x, const SiteVector& z, const SiteVector& v) {
  auto positive = [&](const SiteVector& s, int t) {
    return is_boundary_target(t) ? s.outside(static_cast<std::size_t>(boundary_slot(t))) > 0.0
                                 : s[static_cast<std::size_t>(t)] > 0.0;
  };
  const auto& law = dom.laws[x];
  if (law.factored) {
    // The atom "n children all at y" has positive mass for every n with
    // rho(n) > 0 and every y in the row.
    bool two_or_more = law.count.is_geometric() ? law.count.mean() > 0.0 : law.count.max_support() >= 2;
    if (!two_or_more) return false;
    for (const auto& [t, w] : law.row)
      if (w > 0.0 && positive(v, t)) return true;
    return false;
  }
  for (const auto& a : law.atoms) {
    if (a.prob <= 0.0) continue;
    int on_v = 0;
    bool covered = true;
    for (const auto& [t, k] : a.offspring) {
      if (positive(v, t)) on_v += k;
      else if (!positive(z, t)) covered = false;
    }
    if (on_v >= 2 && covered) return true;
  }
  return false;
}

// On a finite irreducible model G has at most two fixed points: iterates
// started above q-bar converge to q-bar or stay at 1.
inline CheckReport finite_two_fixed_points(ModelPtr model, int probes, std::uint64_t seed, double tol = kCheckTolerance) {
  CheckReport r;
  r.name = "finite_two_fixed_points";
  r.tolerance = tol;
  if (!model->is_finite()) throw ValidationError("finite_two_fixed_points needs a finite model");
  auto dom = full_domain(model);
  if (!irreducible_classes(moment_matrix(*dom)).irreducible()) {
    r.status = Status::Undecided;
    r.verdict = to_string(r.status);
    r.detail = "model is not irreducible";
    return r;
  }
  SolverOptions opt{1e-14, 10'000'000};
  auto qb = solve_global_extinction(dom, opt);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> limits_seen;
  bool ok = true;
  for (int k = 0; k <= probes; ++k) {
    std::vector<double> start(dom->size());
    for (std::size_t i = 0; i < start.size(); ++i)
      start[i] = k == 0 ? 1.0 : qb.lower[i] + unif(rng) * (1.0 - qb.lower[i]);
    auto run = detail::iterate(*dom, start, {}, nullptr, -1, opt);
    double d_q = 0.0, d_one = 0.0;
    for (std::size_t i = 0; i < start.size(); ++i) {
      d_q = std::max(d_q, std::abs(run.v[i] - qb.lower[i]));
      d_one = std::max(d_one, std::abs(run.v[i] - 1.0));
    }
    const double rep = run.v.empty() ? 0.0 : run.v[0];
    if (std::none_of(limits_seen.begin(), limits_seen.end(), [&](double s) { return std::abs(s - rep) <= tol; }))
      limits_seen.push_back(rep);
    if (!(d_q <= tol || d_one <= tol)) {
      ok = false;
      detail::add_witness(r, *dom, 0, {{"probe", static_cast<double>(k)}, {"limit_at_first_site", rep}});
    }
  }
  std::sort(limits_seen.begin(), limits_seen.end());
  r.status = ok ? Status::Pass : Status::Fail;
  r.verdict = to_string(r.status);
  r.detail = "distinct limits at first site:";
  for (double v : limits_seen) r.detail += " " + std::to_string(v);
  Witness w;
  w.site = dom->model->label(dom->sites[0]);
  for (std::size_t i = 0; i < limits_seen.size(); ++i) w.values["limit_" + std::to_string(i)] = limits_seen[i];
  r.witnesses.push_back(std::move(w));
  return r;
}

}  // namespace brw
