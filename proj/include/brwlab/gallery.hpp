#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "brwlab/domain.hpp"
#include "brwlab/errors.hpp"
#include "brwlab/genfun.hpp"
#include "brwlab/graph.hpp"
#include "brwlab/model.hpp"

namespace brw {

// A constructed example together with what the constructor learned about it.
struct GalleryModel {
  ModelPtr model;
  Site root;
  std::vector<std::string> notes;
};

// ---------------------------------------------------------------- trees

namespace tree {

// Path words: the root is the empty word, its children are 0..d-1, every
// other vertex w has children w.0 .. w.(d-2).
inline std::vector<Site> neighbors(const Site& w, int d) {
  std::vector<Site> out;
  if (w.coord.empty()) {
    for (int k = 0; k < d; ++k) out.push_back(Site::at(k));
    return out;
  }
  Site parent = w;
  parent.coord.pop_back();
  out.push_back(parent);
  for (int k = 0; k < d - 1; ++k) out.push_back(w.child(k));
  return out;
}

inline int distance(const Site& a, const Site& b) {
  std::size_t cp = 0;
  while (cp < a.coord.size() && cp < b.coord.size() && a.coord[cp] == b.coord[cp]) ++cp;
  return static_cast<int>(a.coord.size() + b.coord.size() - 2 * cp);
}

inline bool valid_word(const Site& w, int d) {
  for (std::size_t i = 0; i < w.coord.size(); ++i) {
    auto c = w.coord[i];
    if (c < 0 || c >= (i == 0 ? d : d - 1)) return false;
  }
  return true;
}

// Green function of simple random walk on T_d at distance r, evaluated at
// z <= d/(2 sqrt(d-1)).
inline double green(int d, double z, int r) {
  double disc = std::max(0.0, static_cast<double>(d) * d - 4.0 * (d - 1) * z * z);
  double root = std::sqrt(disc);
  double g00 = 2.0 * (d - 1) / (d - 2 + root);
  if (z == 0.0) return r == 0 ? 1.0 : 0.0;
  double f = (d - root) / (2.0 * (d - 1) * z);
  return std::pow(f, r) * g00;
}

inline double lambda_s(int d) { return 1.0 / (2.0 * std::sqrt(static_cast<double>(d - 1))); }

// Distance-from-root projection of the edge-breeding counterpart, with an
// optional loop at the root: a BRW on N locally isomorphic to the tree model
// through x -> |x|.
inline BrwModel radial_model(int d, double lambda, double loop) {
  BrwModel m("tree-radial", Site::at(0), [d, lambda, loop](const Site& s) -> SiteLaw {
    auto r = s.coord.at(0);
    if (r == 0) {
      std::vector<Placement> rates{{Site::at(1), static_cast<double>(d)}};
      if (loop > 0.0) rates.push_back({Site::at(0), loop});
      return counterpart_law(rates, lambda, 1.0);
    }
    return counterpart_law({{Site::at(r - 1), 1.0}, {Site::at(r + 1), static_cast<double>(d - 1)}}, lambda, 1.0);
  });
  // Far levels: the loop only adds children, so q-bar is at most the
  // branching-process value; below lambda_s the expected number of visits to
  // the root (a Green function value) bounds the probability of reaching it,
  // and when lambda d < 1 survival requires reaching it.
  const double q_gw = CountLaw::geometric(lambda * d).extinction_probability();
  const bool green_ok = lambda <= lambda_s(d);
  m.with_boundary_hint([=](Quantity q, const TargetSet& a, const Site& x) -> Interval {
    const int r = static_cast<int>(x.coord.at(0));
    const double hit = green_ok ? std::min(1.0, green(d, lambda * d, r)) : 1.0;
    if (q == Quantity::GlobalExtinction || a.all) return {lambda * d < 1.0 ? 1.0 - hit : 0.0, q_gw};
    const bool root_only = a.sites.size() == 1 && a.sites[0] == Site::at(0);
    if (root_only) return {1.0 - hit, 1.0};
    return {};
  });
  return m;
}

// Brackets of q-bar, q0(., {o}) and q(., {o}) on the radial chain, solved on
// a long window so the boundary influence at small depths is negligible.
struct RadialBounds {
  std::vector<Interval> qbar, never, local;
};

inline RadialBounds solve_radial(int d, double lambda, double loop, int levels) {
  auto model = std::make_shared<const BrwModel>(radial_model(d, lambda, loop));
  auto dom = truncate(model, Site::at(0), levels, BoundaryPolicy::OutsideExtinct);
  SolverOptions opt{1e-14, 200'000};
  auto pack = [&](const ExtinctionBracket& b) {
    std::vector<Interval> v(dom->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = {b.lower[i], std::max(b.lower[i], b.upper[i])};
    return v;
  };
  RadialBounds rb;
  rb.qbar = pack(solve_global_extinction(dom, opt));
  auto a = TargetSet::of({Site::at(0)});
  rb.never = pack(solve_never_visit(dom, a, opt));
  rb.local = pack(solve_local_extinction(dom, a, opt));
  return rb;
}

}  // namespace tree

namespace detail {

struct LazyRadial {
  int d;
  double lambda, loop;
  int levels;
  std::once_flag once;
  tree::RadialBounds bounds;

  const tree::RadialBounds& get() {
    std::call_once(once, [this] { bounds = tree::solve_radial(d, lambda, loop, levels); });
    return bounds;
  }
};

inline constexpr int kRadialLevels = 2000;

}  // namespace detail

// Edge-breeding BRW on T_d (k_xy = 1 on edges), optionally with a loop of rate
// k_yy at the root. Boundary hints come from the exact radial projection for
// quantities started anywhere with A = {root}, from the branching-process
// comparison for q-bar, and from the Green function where it converges.
inline GalleryModel tree_with_loop(int d, double lambda, double kyy) {
  if (d < 3) throw ValidationError("tree degree must be >= 3");
  if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
  if (!(kyy >= 0.0)) throw ValidationError("loop rate must be >= 0");
  ContinuousFamily fam;
  fam.lambda = lambda;
  fam.rates = [d, kyy](const Site& x) {
    std::vector<Placement> row;
    if (x.coord.empty() && kyy > 0.0) row.push_back({x, kyy});
    for (auto& y : tree::neighbors(x, d)) row.push_back({std::move(y), 1.0});
    return row;
  };
  const bool has_loop = kyy > 0.0;
  BrwModel m = counterpart_model(has_loop ? "tree-loop" : "tree", Site{}, fam);
  m.with_tree_symmetry({d, kyy}).with_irreducible(true);
  if (!has_loop) m.with_branching_isomorph(CountLaw::geometric(lambda * d));

  const double q_gw = CountLaw::geometric(lambda * d).extinction_probability();
  const double ls = tree::lambda_s(d);
  auto radial = std::make_shared<detail::LazyRadial>();
  radial->d = d;
  radial->lambda = lambda;
  radial->loop = kyy;
  radial->levels = detail::kRadialLevels;
  const Site origin{};

  m.with_boundary_hint([=](Quantity q, const TargetSet& a, const Site& x) -> Interval {
    const int r = static_cast<int>(x.coord.size());
    const bool root_only = !a.all && a.sites.size() == 1 && a.sites[0] == origin;
    const bool radial_ok = r < detail::kRadialLevels / 2;
    if (q == Quantity::GlobalExtinction || a.all) {
      if (!has_loop) return {q_gw, q_gw};
      if (radial_ok) return radial->get().qbar[static_cast<std::size_t>(r)];
      return {0.0, q_gw};
    }
    if (root_only && radial_ok) {
      const auto& rb = radial->get();
      return q == Quantity::NeverVisit ? rb.never[static_cast<std::size_t>(r)] : rb.local[static_cast<std::size_t>(r)];
    }
    // Other finite targets: expected visits bound the hitting probability
    // while the Green series converges (the loop only matters inside A).
    bool loop_inside = !has_loop || a.contains(origin);
    if (q == Quantity::NeverVisit && loop_inside && lambda <= ls) {
      double hit = 0.0;
      for (const auto& y : a.sites) hit += tree::green(d, lambda * d, tree::distance(x, y));
      return {std::max(0.0, 1.0 - hit), 1.0};
    }
    if (q == Quantity::LocalExtinction && !has_loop && lambda <= ls) return {1.0, 1.0};
    return {};
  });

  GalleryModel g{std::make_shared<const BrwModel>(std::move(m)), origin, {}};
  if (lambda * d <= 1.0) g.notes.push_back("lambda <= 1/d: global extinction");
  else if (lambda <= ls) g.notes.push_back("1/d < lambda <= 1/(2 sqrt(d-1)): pure global survival on the tree");
  else g.notes.push_back("lambda > 1/(2 sqrt(d-1)): strong local survival on the tree");
  if (has_loop && lambda * kyy > 1.0) g.notes.push_back("lambda k_yy > 1: local survival at the loop site");
  return g;
}

inline GalleryModel tree_edge_breeding(int d, double lambda) { return tree_with_loop(d, lambda, 0.0); }

// ---------------------------------------------------------------- GW

inline GalleryModel gw_law(const CountLaw& rho) {
  auto law = std::make_shared<FactoredLaw>(FactoredLaw{rho, {{Site::at(0), 1.0}}});
  BrwModel m("gw", Site::at(0), [law](const Site&) -> SiteLaw { return *law; });
  m.with_sites({Site::at(0)}).with_branching_isomorph(rho).with_irreducible(true);
  GalleryModel g{std::make_shared<const BrwModel>(std::move(m)), Site::at(0), {}};
  auto dom = full_domain(g.model);
  if (!assumption1_check(*dom).front())
    g.notes.push_back("warning: every particle has exactly one child at its own site, so the class is degenerate");
  return g;
}

// Two sites; each particle has no children w.p. 1/2 and three children at the
// other site w.p. 1/2. q-bar solves q = 1/2 + q^3/2.
inline GalleryModel two_site_cubic() {
  auto law_at = [](const Site& s) -> SiteLaw {
    Site other = Site::at(1 - s.coord.at(0));
    return GeneralLaw{{Atom{{}, 0.5}, Atom{{{other, 3}}, 0.5}}};
  };
  BrwModel m("two-site-cubic", Site::at(0), law_at);
  m.with_sites({Site::at(0), Site::at(1)}).with_irreducible(true);
  return {std::make_shared<const BrwModel>(std::move(m)), Site::at(0), {}};
}

// ---------------------------------------------------------------- half-line

using ProbabilityRule = std::function<double(std::int64_t)>;

// Default diffusion of the non-strong example: p_1 = 1/2, p_i = 1 - 4^-i.
// The complement is kept separately since p_i rounds to 1 from i = 27 on.
inline double ex43_default_comp(std::int64_t i) {
  if (i == 0) return 0.0;
  if (i == 1) return 0.5;
  return std::pow(4.0, -static_cast<double>(i));
}
inline double ex43_default_p(std::int64_t i) { return 1.0 - ex43_default_comp(i); }

struct Ex43Diagnostics {
  double log_product_prefix = 0.0;  // sum_{i=1}^{n} 2^i log p_i
  int prefix_length = 0;
  double confined_growth = 0.0;     // (3/2)^2 (1 - p_1)
  bool product_positive = false;    // sum 2^i (1 - p_i) judged convergent
};

inline Ex43Diagnostics ex43_diagnostics(const ProbabilityRule& comp, double mean = 1.5, int prefix = 200) {
  Ex43Diagnostics dg;
  dg.prefix_length = prefix;
  double tail_term = 0.0;
  for (int i = 1; i <= prefix; ++i) {
    double c = comp(i);
    double w = std::ldexp(1.0, i);
    dg.log_product_prefix += w * std::log1p(-c);
    tail_term = w * c;
  }
  dg.confined_growth = mean * mean * comp(1);
  dg.product_positive = std::isfinite(dg.log_product_prefix) && tail_term < 1e-6;
  return dg;
}

// Lower bound on the probability that every descendant of a particle at i
// always moves right: prod_{n>=0} p_{i+n}^{c^(n+1)} with c the largest
// offspring count.
inline double always_right_bound(const ProbabilityRule& comp, std::int64_t i, double c) {
  double log_sum = 0.0;
  double w = c;
  for (int n = 0; n < 4000; ++n) {
    double ci = comp(i + n);
    if (ci >= 1.0) return 0.0;
    double term = w * std::log1p(-ci);
    log_sum += term;
    if (!std::isfinite(log_sum)) return 0.0;
    if (std::abs(term) < 1e-18 && n > 8) return std::exp(log_sum);
    w *= c;
    if (!std::isfinite(w)) break;
  }
  return 0.0;
}

// BRW on N with count law rho and nearest-neighbour diffusion: from 0 to 1
// w.p. p_0 (else stay), from i >= 1 to i+1 w.p. p_i and to i-1 otherwise.
inline BrwModel halfline_model(std::string name, const CountLaw& rho, ProbabilityRule p, ProbabilityRule one_minus_p = {}) {
  if (!one_minus_p) one_minus_p = [p](std::int64_t i) { return 1.0 - p(i); };
  BrwModel m(std::move(name), Site::at(0), [rho, p, one_minus_p](const Site& s) -> SiteLaw {
    auto i = s.coord.at(0);
    if (i < 0) throw ValidationError("half-line site must be >= 0");
    double right = p(i), left = one_minus_p(i);
    FactoredLaw f{rho, {}};
    if (right > 0.0) f.row.push_back({Site::at(i + 1), right});
    if (left > 0.0) f.row.push_back({Site::at(i == 0 ? 0 : i - 1), left});
    return f;
  });
  m.with_branching_isomorph(rho);
  return m;
}

// Count law {0: 1/4, 2: 3/4} with diffusion rule p (and its complement).
inline GalleryModel halfline_ex43(ProbabilityRule p = ex43_default_p, ProbabilityRule comp = ex43_default_comp) {
  if (!comp) comp = [p](std::int64_t i) { return 1.0 - p(i); };
  if (std::abs(p(0) - 1.0) > kLawTolerance) throw ValidationError("the half-line example needs p_0 = 1");
  for (int i = 1; i <= 64; ++i)
    if (!(comp(i) > 0.0 && comp(i) < 1.0)) throw ValidationError("p_i must lie in (0,1) for i >= 1");
  const CountLaw rho = CountLaw::finite({0.25, 0.0, 0.75});
  BrwModel m = halfline_model("halfline-43", rho, p, comp);
  m.with_irreducible(true);
  const double q = rho.extinction_probability();
  const auto dg = ex43_diagnostics(comp);
  m.with_boundary_hint([comp, q, dg](Quantity kind, const TargetSet& a, const Site& x) -> Interval {
    if (kind == Quantity::GlobalExtinction || a.all) return {q, q};
    if (kind == Quantity::NeverVisit && dg.product_positive) {
      auto i = x.coord.at(0);
      bool all_left = std::all_of(a.sites.begin(), a.sites.end(), [&](const Site& s) { return s.coord.at(0) < i; });
      if (all_left) return {always_right_bound(comp, i, 2.0), 1.0};
    }
    return {};
  });
  GalleryModel g{std::make_shared<const BrwModel>(std::move(m)), Site::at(0), {}};
  if (dg.confined_growth > 1.0)
    g.notes.push_back("(3/2)^2 (1 - p_1) = " + std::to_string(dg.confined_growth) + " > 1: local survival at 0");
  if (!dg.product_positive)
    g.notes.push_back("prod p_i^(2^i) appears to vanish: the non-strong survival hypothesis is unverified");
  return g;
}

// ---------------------------------------------------------------- threshold half-line

struct Ex44Sequences {
  double qbar = 0.0;
  double target = 0.0;                 // prod alpha_i
  std::vector<std::int64_t> N;         // N_0 = 1
  std::vector<double> log_prodN;       // log prod_{j<=i} N_j
  std::vector<double> alpha;           // alpha_i = target^(2^-(i+1))
  std::vector<double> p;               // p_0 .. p_n
  std::vector<double> one_minus_p;     // exact complements
  double threshold_log_prefix = 0.0;        // sum_i prod_{j<=i}N_j log rho([0, N_{i+1}])
  double summability = 0.0;            // sum_i (1-p_i) prod_{j<=i} N_j
  std::size_t max_support = 0;         // 0 for unbounded support
};

inline Ex44Sequences ex44_sequences(const CountLaw& rho, int n_terms = 40) {
  if (!(rho.mean() > 1.0)) throw ValidationError("the threshold half-line needs a count law with mean > 1");
  if (n_terms < 1) throw ValidationError("n_terms must be >= 1");
  Ex44Sequences s;
  s.qbar = rho.extinction_probability();
  double hi = std::max(s.qbar, 1.0 - s.qbar);
  s.target = hi < 1.0 ? 0.5 * (1.0 + hi) : 0.5 * (1.0 + s.qbar);
  s.max_support = rho.is_geometric() ? 0 : rho.max_support();
  auto tail = [&](std::size_t n) {  // rho((n, inf))
    if (rho.is_geometric()) {
      double a = rho.mean() / (1.0 + rho.mean());
      return std::pow(a, static_cast<double>(n + 1));
    }
    double t = 0.0;
    for (std::size_t k = n + 1; k < rho.pmf().size(); ++k) t += rho.pmf()[k];
    return t;
  };
  s.N.push_back(1);
  s.log_prodN.push_back(0.0);
  for (int i = 0; i <= n_terms; ++i) s.alpha.push_back(std::pow(s.target, std::ldexp(1.0, -(i + 1))));
  for (int k = 0; k < n_terms; ++k) {
    // Least N with rho([0,N]) > alpha_{k+1}^(1/prod N), i.e. tail(N) < eps.
    double eps = -std::expm1(std::log(s.alpha[static_cast<std::size_t>(k + 1)]) * std::exp(-s.log_prodN.back()));
    if (!(eps > 0.0)) throw ResourceError("threshold half-line: thresholds fell below double resolution at k=" + std::to_string(k));
    if (rho.is_geometric() && eps < 1e-12)
      throw ValidationError("count law needs mass beyond the 1-1e-12 cutoff to meet the half-line threshold at k=" +
                            std::to_string(k));
    std::size_t n = 0;
    while (!(tail(n) < eps)) ++n;
    n = std::max<std::size_t>(n, 1);
    s.N.push_back(static_cast<std::int64_t>(n));
    s.threshold_log_prefix += std::exp(s.log_prodN.back()) * std::log1p(-tail(n));
    s.log_prodN.push_back(s.log_prodN.back() + std::log(static_cast<double>(n)));
  }
  const double rbar = rho.mean();
  s.p.push_back(0.5 * (1.0 - 1.0 / rbar));
  s.one_minus_p.push_back(1.0 - s.p[0]);
  for (int i = 1; i <= n_terms; ++i) {
    double c = std::exp(-2.0 * std::log(static_cast<double>(i)) - s.log_prodN[static_cast<std::size_t>(i)]);
    s.one_minus_p.push_back(c);
    s.p.push_back(1.0 - c);
    s.summability += c * std::exp(s.log_prodN[static_cast<std::size_t>(i)]);
  }
  if (!(s.summability < std::numbers::pi * std::numbers::pi / 6.0))
    throw ValidationError("threshold half-line: summability bound violated");
  if (!(std::exp(s.threshold_log_prefix) > s.qbar)) throw ValidationError("threshold half-line: product inequality violated on the prefix");
  return s;
}

inline GalleryModel halfline_ex44(const CountLaw& rho, int n_terms = 40) {
  auto seq = std::make_shared<Ex44Sequences>(ex44_sequences(rho, n_terms));
  // Past the computed prefix the largest support point satisfies the rule.
  auto log_prod = [seq](std::int64_t i) {
    if (static_cast<std::size_t>(i) < seq->log_prodN.size()) return seq->log_prodN[static_cast<std::size_t>(i)];
    double extra = seq->max_support > 0 ? std::log(static_cast<double>(seq->max_support)) : std::log(static_cast<double>(seq->N.back()));
    return seq->log_prodN.back() + extra * static_cast<double>(i - static_cast<std::int64_t>(seq->log_prodN.size()) + 1);
  };
  auto comp = [seq, log_prod](std::int64_t i) {
    if (i == 0) return seq->one_minus_p[0];
    return std::exp(-2.0 * std::log(static_cast<double>(i)) - log_prod(i));
  };
  auto p = [seq, comp](std::int64_t i) { return i == 0 ? seq->p[0] : 1.0 - comp(i); };
  BrwModel m = halfline_model("halfline-44", rho, p, comp);
  m.with_irreducible(true);
  const double q = seq->qbar;
  m.with_boundary_hint([q](Quantity kind, const TargetSet& a, const Site&) -> Interval {
    if (kind == Quantity::GlobalExtinction || a.all) return {q, q};
    return {};
  });
  GalleryModel g{std::make_shared<const BrwModel>(std::move(m)), Site::at(0), {}};
  g.notes.push_back("target prod alpha = " + std::to_string(seq->target) + ", q-bar = " + std::to_string(q));
  return g;
}

// ---------------------------------------------------------------- third fixed point

// Stored as 1 - theta_n so that schedules tending to 1 stay exact.
struct ThetaSchedule {
  std::string description;
  std::function<long double(int)> one_minus_theta;

  static ThetaSchedule constant(double t) {
    if (!(t > 0.0 && t < 1.0)) throw ValidationError("theta must lie in (0,1)");
    return {"constant " + std::to_string(t), [t](int) { return 1.0L - static_cast<long double>(t); }};
  }
  static ThetaSchedule to_one() {
    return {"1 - 2^-(n+1)", [](int n) { return std::ldexp(1.0L, -(n + 1)); }};
  }
  // Longest n_max the schedule supports before 1 - z(n) underflows.
  int default_n_max() const { return description.rfind("constant", 0) == 0 ? 10000 : 150; }
};

struct SpataruOutput {
  std::vector<double> z;            // z(0..n_max)
  std::vector<double> p;            // p_0..p_{n_max-1}, p_0 = 1
  std::vector<long double> w;       // 1 - z, kept separately for accuracy
  std::string theta_schedule;
  double max_residual = 0.0;        // fixed-point residual at indices 0..n_max-1
  ModelPtr companion;
};

// Third fixed point of the half-line generating function
// G(z|n) = 3/4 (p_n z(n+1) + (1-p_n) z(n-1))^2 + 1/4.
// Works with complements w = 1 - z in extended precision: 1 - z decays
// geometrically and leaves double range long before n = 10^4.
inline SpataruOutput spataru_recursion(double z0, const ThetaSchedule& schedule, int n_max) {
  if (!(z0 > 1.0 / 3.0 && z0 < 1.0)) throw ValidationError("z0 must lie in (1/3, 1)");
  if (n_max < 2) throw ValidationError("n_max must be >= 2");
  using LD = long double;
  auto u_of = [](LD w) {  // 1 - sqrt(1 - 4w/3)
    LD a = 4.0L * w / 3.0L;
    return a / (1.0L + std::sqrt(1.0L - a));
  };
  SpataruOutput out;
  out.theta_schedule = schedule.description;
  std::vector<LD> w(static_cast<std::size_t>(n_max) + 1), pl(static_cast<std::size_t>(n_max));
  w[0] = 1.0L - static_cast<LD>(z0);
  w[1] = u_of(w[0]);
  pl[0] = 1.0L;
  for (int n = 1; n < n_max; ++n) {
    LD c = schedule.one_minus_theta(n);
    if (!(c > 0.0L && c < 1.0L)) throw ValidationError("theta_n must lie in (0,1) at n=" + std::to_string(n));
    LD u = u_of(w[static_cast<std::size_t>(n)]);
    LD next = c * u;
    if (!(next > 0.0L) || !std::isnormal(next))
      throw ResourceError("1 - z(n) underflows extended precision at n=" + std::to_string(n + 1) +
                          "; reduce n_max or slow the theta schedule");
    w[static_cast<std::size_t>(n) + 1] = next;
    LD wm = w[static_cast<std::size_t>(n) - 1];
    pl[static_cast<std::size_t>(n)] = (wm - u) / (wm - next);
  }
  LD worst = 0.0L;
  for (int n = 0; n < n_max; ++n) {
    LD pn = pl[static_cast<std::size_t>(n)];
    LD wl = n == 0 ? w[1] : w[static_cast<std::size_t>(n) - 1];  // p_0 = 1 ignores the left term
    LD u = pn * w[static_cast<std::size_t>(n) + 1] + (1.0L - pn) * wl;
    LD g = 0.75L * u * (2.0L - u);
    worst = std::max(worst, std::abs(g - w[static_cast<std::size_t>(n)]));
  }
  out.max_residual = static_cast<double>(worst);
  out.w = w;
  for (LD v : w) out.z.push_back(static_cast<double>(1.0L - v));
  for (LD v : pl) out.p.push_back(static_cast<double>(v));
  for (std::size_t n = 1; n < out.p.size(); ++n)
    if (!(out.p[n] > 0.0 && out.p[n] <= 1.0)) throw ValidationError("p_n left (0,1] at n=" + std::to_string(n));

  auto ps = std::make_shared<std::vector<double>>(out.p);
  ProbabilityRule rule = [ps](std::int64_t i) {
    return static_cast<std::size_t>(i) < ps->size() ? (*ps)[static_cast<std::size_t>(i)] : ps->back();
  };
  BrwModel m = halfline_model("spataru", CountLaw::finite({0.25, 0.0, 0.75}), rule);
  m.with_irreducible(true);
  m.with_boundary_hint([](Quantity kind, const TargetSet& a, const Site&) -> Interval {
    if (kind == Quantity::GlobalExtinction || a.all) return {1.0 / 3.0, 1.0 / 3.0};
    return {};
  });
  out.companion = std::make_shared<const BrwModel>(std::move(m));
  return out;
}

// ---------------------------------------------------------------- pasted graphs

// Site-breeding BRW on Z: rate 1 to each neighbour, so k(x) = 2.
inline GalleryModel line_site_breeding(double lambda) {
  ContinuousFamily fam;
  fam.lambda = lambda;
  fam.rates = [](const Site& x) {
    auto i = x.coord.at(0);
    return std::vector<Placement>{{Site::at(i - 1), 1.0}, {Site::at(i + 1), 1.0}};
  };
  BrwModel m = counterpart_model("line", Site::at(0), fam);
  m.with_branching_isomorph(CountLaw::geometric(2.0 * lambda)).with_irreducible(true);
  const double q = CountLaw::geometric(2.0 * lambda).extinction_probability();
  m.with_boundary_hint([q](Quantity kind, const TargetSet& a, const Site&) -> Interval {
    if (kind == Quantity::GlobalExtinction || a.all) return {q, q};
    return {};
  });
  return {std::make_shared<const BrwModel>(std::move(m)), Site::at(0), {}};
}

// N (sites {0,i}) with one branch of T_3 (sites {1,word}, every vertex with
// two children) attached to 0 by an edge; edge-breeding.
inline GalleryModel line_plus_branch(double lambda) {
  ContinuousFamily fam;
  fam.lambda = lambda;
  fam.rates = [](const Site& x) {
    std::vector<Placement> row;
    if (x.coord.at(0) == 0) {
      auto i = x.coord.at(1);
      if (i > 0) row.push_back({Site({0, i - 1}), 1.0});
      row.push_back({Site({0, i + 1}), 1.0});
      if (i == 0) row.push_back({Site({1}), 1.0});
      return row;
    }
    if (x.coord.size() == 1) {
      row.push_back({Site({0, 0}), 1.0});
    } else {
      Site parent = x;
      parent.coord.pop_back();
      row.push_back({parent, 1.0});
    }
    row.push_back({x.child(0), 1.0});
    row.push_back({x.child(1), 1.0});
    return row;
  };
  BrwModel m = counterpart_model("line-plus-branch", Site({0, 0}), fam);
  m.with_irreducible(true);
  const double q_tree = CountLaw::geometric(3.0 * lambda).extinction_probability();
  // Sub-tree of T_3 with the same rates: survival dominated by T_3's.
  m.with_boundary_hint([q_tree](Quantity kind, const TargetSet& a, const Site&) -> Interval {
    if (kind == Quantity::GlobalExtinction || a.all) return {q_tree, 1.0};
    return {};
  });
  GalleryModel g{std::make_shared<const BrwModel>(std::move(m)), Site({0, 0}), {}};
  g.notes.push_back("paper: lambda_w = 1/3 < 1/(2 sqrt 2) = lambda_s; reproduced as windowed estimates only");
  return g;
}

// T_3 (sites {0,word}) with a complete graph on k+1 vertices (sites {1,j})
// attached to the tree root by an edge; edge-breeding.
inline GalleryModel tree_plus_clique(double lambda, int k) {
  if (k < 2) throw ValidationError("clique degree must be >= 2");
  ContinuousFamily fam;
  fam.lambda = lambda;
  fam.rates = [k](const Site& x) {
    std::vector<Placement> row;
    if (x.coord.at(0) == 1) {
      auto j = x.coord.at(1);
      for (int i = 0; i <= k; ++i)
        if (i != j) row.push_back({Site({1, i}), 1.0});
      if (j == 0) row.push_back({Site({0}), 1.0});
      return row;
    }
    Site w(std::vector<std::int64_t>(x.coord.begin() + 1, x.coord.end()));
    for (const auto& y : tree::neighbors(w, 3)) {
      Site t({0});
      t.coord.insert(t.coord.end(), y.coord.begin(), y.coord.end());
      row.push_back({t, 1.0});
    }
    if (w.coord.empty()) row.push_back({Site({1, 0}), 1.0});
    return row;
  };
  BrwModel m = counterpart_model("tree-plus-clique", Site({0}), fam);
  m.with_irreducible(true);
  GalleryModel g{std::make_shared<const BrwModel>(std::move(m)), Site({0}), {}};
  g.notes.push_back("paper: lambda_w <= 1/k and no pure global survival phase");
  return g;
}

// ---------------------------------------------------------------- registry

using GalleryParams = std::map<std::string, double>;

inline double param(const GalleryParams& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

// Count law from "rho0".."rhoK" or "mean" (geometric).
inline CountLaw count_from_params(const GalleryParams& p, const CountLaw& fallback) {
  if (auto it = p.find("mean"); it != p.end()) return CountLaw::geometric(it->second);
  std::vector<double> pmf;
  for (int k = 0;; ++k) {
    auto it = p.find("rho" + std::to_string(k));
    if (it == p.end()) {
      bool later = false;
      for (const auto& [key, v] : p)
        if (key.rfind("rho", 0) == 0 && key.size() > 3 && std::stoi(key.substr(3)) > k) later = true;
      if (!later) break;
      pmf.push_back(0.0);
      continue;
    }
    pmf.push_back(it->second);
  }
  return pmf.empty() ? fallback : CountLaw::finite(pmf);
}

inline const std::vector<std::string>& gallery_names() {
  static const std::vector<std::string> names{"tree",     "tree-loop", "halfline-43",     "halfline-44",     "spataru",
                                              "gw",       "two-site-cubic", "line-plus-branch", "tree-plus-clique", "line"};
  return names;
}

inline GalleryModel make_gallery(const std::string& name, const GalleryParams& p = {}) {
  const CountLaw binary = CountLaw::finite({0.25, 0.0, 0.75});
  if (name == "tree") return tree_edge_breeding(static_cast<int>(param(p, "d", 3)), param(p, "lambda", 0.5));
  if (name == "tree-loop")
    return tree_with_loop(static_cast<int>(param(p, "d", 3)), param(p, "lambda", 0.35), param(p, "kyy", 3.0));
  if (name == "halfline-43") {
    if (p.count("p")) {
      double c = p.at("p");
      return halfline_ex43([c](std::int64_t i) { return i == 0 ? 1.0 : c; }, [c](std::int64_t i) { return i == 0 ? 0.0 : 1.0 - c; });
    }
    double p1 = param(p, "p1", 0.5);
    return halfline_ex43([p1](std::int64_t i) { return i == 1 ? p1 : ex43_default_p(i); },
                         [p1](std::int64_t i) { return i == 1 ? 1.0 - p1 : ex43_default_comp(i); });
  }
  if (name == "halfline-44") return halfline_ex44(count_from_params(p, binary), static_cast<int>(param(p, "terms", 40)));
  if (name == "spataru") {
    auto sched = param(p, "schedule", 0) != 0 ? ThetaSchedule::to_one() : ThetaSchedule::constant(param(p, "theta", 0.5));
    auto out = spataru_recursion(param(p, "z0", 0.5), sched, static_cast<int>(param(p, "n_max", sched.default_n_max())));
    GalleryModel g{out.companion, Site::at(0), {}};
    g.notes.push_back("fixed-point residual " + std::to_string(out.max_residual));
    return g;
  }
  if (name == "gw") return gw_law(count_from_params(p, binary));
  if (name == "two-site-cubic") return two_site_cubic();
  if (name == "line-plus-branch") return line_plus_branch(param(p, "lambda", 0.34));
  if (name == "tree-plus-clique") return tree_plus_clique(param(p, "lambda", 0.34), static_cast<int>(param(p, "k", 4)));
  if (name == "line") return line_site_breeding(param(p, "lambda", 1.0));
  throw ValidationError("unknown gallery model '" + name + "'");
}

}  // namespace brw
