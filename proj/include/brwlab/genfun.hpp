#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "brwlab/domain.hpp"
#include "brwlab/errors.hpp"
#include "brwlab/model.hpp"
#include "brwlab/parallel.hpp"

namespace brw {

// An element z of [0,1]^X restricted to a window. Values on the boundary
// layer default to the domain's policy unless given explicitly.
struct SiteVector {
  DomainPtr domain;
  std::vector<double> values;
  std::vector<double> boundary;  // empty: use the policy value

  static SiteVector constant(DomainPtr dom, double v) {
    SiteVector z;
    z.values.assign(dom->size(), v);
    z.domain = std::move(dom);
    return z;
  }
  static SiteVector from(DomainPtr dom, std::vector<double> vals) {
    if (vals.size() != dom->size()) throw ValidationError("vector length does not match the window");
    SiteVector z;
    z.domain = std::move(dom);
    z.values = std::move(vals);
    return z;
  }

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double at(const Site& s) const { return values[static_cast<std::size_t>(domain->index_of(s))]; }
  double outside(std::size_t b) const { return boundary.empty() ? policy_value(domain->policy) : boundary[b]; }
};

namespace detail {

inline void check_unit_interval(const SiteVector& z) {
  auto bad = [](double v) { return !(v >= 0.0 && v <= 1.0); };
  for (std::size_t i = 0; i < z.values.size(); ++i)
    if (bad(z.values[i]))
      throw DomainError("value " + std::to_string(z.values[i]) + " at site " + z.domain->model->label(z.domain->sites[i]) +
                        " lies outside [0,1]");
  for (std::size_t b = 0; b < z.boundary.size(); ++b)
    if (bad(z.boundary[b]))
      throw DomainError("boundary value at " + z.domain->boundary[b].str() + " lies outside [0,1]");
}

// G(z|x) for one compiled law; `val(t)` resolves window and boundary targets.
template <class Lookup>
double law_value(const CompiledLaw& law, Lookup&& val) {
  if (law.factored) {
    if (law.row.empty()) return law.count.prob(0);
    // Work with the complement u = 1 - Pz so the geometric closed form
    // 1/(1+M(1-z)) stays accurate near z = 1.
    double u = 0.0;
    for (const auto& [t, w] : law.row) u += w * (1.0 - val(t));
    u = std::clamp(u, 0.0, 1.0);
    return law.count.pgf_from_complement(u);
  }
  double g = 0.0;
  for (const auto& a : law.atoms) {
    double term = a.prob;
    for (const auto& [t, k] : a.offspring) {
      double v = val(t);
      term *= k == 1 ? v : std::pow(v, k);
    }
    g += term;
  }
  return g;
}

inline constexpr std::size_t kParallelThreshold = 1u << 15;

// out = G(v) on the window with fixed boundary values; sites flagged in
// `pinned` are held at 0 (the A-clause of the never-visit recursion).
inline void apply_G(const TruncatedDomain& dom, const std::vector<double>& v, const std::vector<double>& bnd,
                    const std::vector<char>* pinned, std::vector<double>& out) {
  out.resize(v.size());
  auto val = [&](int t) { return is_boundary_target(t) ? bnd[static_cast<std::size_t>(boundary_slot(t))] : v[static_cast<std::size_t>(t)]; };
  auto body = [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      out[i] = (pinned && (*pinned)[i]) ? 0.0 : std::min(1.0, law_value(dom.laws[i], val));
  };
  if (v.size() >= kParallelThreshold)
    parallel_chunks(v.size(), 64, thread_budget(), body);
  else
    body(0, 0, v.size());
}

inline std::vector<double> boundary_values(const SiteVector& z) {
  std::vector<double> b(z.domain->boundary.size());
  for (std::size_t k = 0; k < b.size(); ++k) b[k] = z.outside(k);
  return b;
}

}  // namespace detail

// G(z) on the window of z.
inline SiteVector eval_G(const SiteVector& z) {
  detail::check_unit_interval(z);
  SiteVector out;
  out.domain = z.domain;
  out.boundary = z.boundary;
  detail::apply_G(*z.domain, z.values, detail::boundary_values(z), nullptr, out.values);
  return out;
}

struct ExtinctionBracket {
  Quantity quantity = Quantity::GlobalExtinction;
  TargetSet target;
  SiteVector lower;  // OutsideImmortal side (or a priori lower bounds)
  SiteVector upper;  // OutsideExtinct side (or a priori upper bounds)
  int radius = 0;
  long iterations = 0;
  double residual = 0.0;
  bool converged = false;
  bool monotone = true;

  double width() const {
    double w = 0.0;
    for (std::size_t i = 0; i < lower.size(); ++i) w = std::max(w, upper[i] - lower[i]);
    return w;
  }
};

struct SolverOptions {
  double tol = 1e-10;
  long max_iter = 1'000'000;
};

namespace detail {

struct RunResult {
  std::vector<double> v;
  long iterations = 0;
  bool converged = false;
  bool monotone = true;
  double residual = 0.0;
};

// Picard iteration of G with frozen boundary values. `direction` is +1 for
// the nondecreasing runs and -1 for the never-visit run.
inline RunResult iterate(const TruncatedDomain& dom, std::vector<double> start, const std::vector<double>& bnd,
                         const std::vector<char>* pinned, int direction, const SolverOptions& opt,
                         double slack = 1e-14) {
  if (!(opt.tol > 0.0)) throw ValidationError("tolerance must be positive");
  if (opt.max_iter < 1) throw ValidationError("max_iter must be >= 1");
  RunResult r;
  std::vector<double> next;
  r.v = std::move(start);
  for (long it = 1; it <= opt.max_iter; ++it) {
    apply_G(dom, r.v, bnd, pinned, next);
    double step = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
      double d = next[i] - r.v[i];
      if (direction * d < -slack) r.monotone = false;
      step = std::max(step, std::abs(d));
    }
    r.v.swap(next);
    r.iterations = it;
    if (step < opt.tol) {
      r.converged = true;
      break;
    }
  }
  apply_G(dom, r.v, bnd, pinned, next);
  for (std::size_t i = 0; i < next.size(); ++i) r.residual = std::max(r.residual, std::abs(next[i] - r.v[i]));
  return r;
}

inline std::vector<double> hinted_boundary(const TruncatedDomain& dom, Quantity q, const TargetSet& a, bool upper) {
  std::vector<double> b(dom.boundary.size());
  for (std::size_t k = 0; k < b.size(); ++k) {
    Interval iv = dom.model->boundary_bound(q, a, dom.boundary[k]);
    b[k] = upper ? iv.hi : iv.lo;
  }
  return b;
}

inline SiteVector wrap(const DomainPtr& dom, std::vector<double> v, std::vector<double> bnd) {
  SiteVector z;
  z.domain = dom;
  z.values = std::move(v);
  z.boundary = std::move(bnd);
  return z;
}

inline std::vector<char> target_mask(const TruncatedDomain& dom, const TargetSet& a) {
  if (a.all) throw ValidationError("target set ALL has no never-visit quantity");
  if (a.sites.empty()) throw ValidationError("target set must be nonempty");
  std::vector<char> mask(dom.size(), 0);
  for (const auto& s : a.sites) mask[static_cast<std::size_t>(dom.index_of(s))] = 1;
  return mask;
}

inline void absorb(ExtinctionBracket& br, const RunResult& r) {
  br.iterations = std::max(br.iterations, r.iterations);
  br.residual = std::max(br.residual, r.residual);
  br.converged = br.converged && r.converged;
  br.monotone = br.monotone && r.monotone;
}

}  // namespace detail

// q-bar: iterate from 0 under both boundary sides.
inline ExtinctionBracket solve_global_extinction(const DomainPtr& dom, SolverOptions opt = {}) {
  ExtinctionBracket br;
  br.quantity = Quantity::GlobalExtinction;
  br.target = TargetSet::everything();
  br.radius = dom->radius;
  br.converged = true;
  std::vector<double> zero(dom->size(), 0.0);
  auto lo_b = detail::hinted_boundary(*dom, Quantity::GlobalExtinction, br.target, false);
  auto hi_b = detail::hinted_boundary(*dom, Quantity::GlobalExtinction, br.target, true);
  auto lo = detail::iterate(*dom, zero, lo_b, nullptr, +1, opt);
  auto hi = detail::iterate(*dom, zero, hi_b, nullptr, +1, opt);
  detail::absorb(br, lo);
  detail::absorb(br, hi);
  br.lower = detail::wrap(dom, std::move(lo.v), std::move(lo_b));
  br.upper = detail::wrap(dom, std::move(hi.v), std::move(hi_b));
  return br;
}

namespace detail {

inline ExtinctionBracket never_visit_runs(const DomainPtr& dom, const TargetSet& a, std::vector<double> lo_b,
                                          std::vector<double> hi_b, const SolverOptions& opt) {
  auto mask = target_mask(*dom, a);
  ExtinctionBracket br;
  br.quantity = Quantity::NeverVisit;
  br.target = a;
  br.radius = dom->radius;
  br.converged = true;
  std::vector<double> start(dom->size());
  for (std::size_t i = 0; i < start.size(); ++i) start[i] = mask[i] ? 0.0 : 1.0;
  auto lo = iterate(*dom, start, lo_b, &mask, -1, opt);
  auto hi = iterate(*dom, start, hi_b, &mask, -1, opt);
  absorb(br, lo);
  absorb(br, hi);
  br.lower = wrap(dom, std::move(lo.v), std::move(lo_b));
  br.upper = wrap(dom, std::move(hi.v), std::move(hi_b));
  return br;
}

}  // namespace detail

// q0(., A): probability that the progeny never occupies A. Starts from 1
// off A and 0 on A and decreases.
inline ExtinctionBracket solve_never_visit(const DomainPtr& dom, const TargetSet& a, SolverOptions opt = {}) {
  return detail::never_visit_runs(dom, a, detail::hinted_boundary(*dom, Quantity::NeverVisit, a, false),
                                  detail::hinted_boundary(*dom, Quantity::NeverVisit, a, true), opt);
}

// q(., A): seeded with q0(., A), then iterated upward.
inline ExtinctionBracket solve_local_extinction(const DomainPtr& dom, const TargetSet& a, SolverOptions opt = {}) {
  if (a.all) return solve_global_extinction(dom, opt);
  // Since q0 <= q, an upper bound of q also bounds q0; every lower bound of
  // q0, q-bar or q bounds q from below.
  const std::size_t nb = dom->boundary.size();
  std::vector<double> seed_lo(nb), seed_hi(nb), lo_b(nb), hi_b(nb);
  const auto all = TargetSet::everything();
  for (std::size_t k = 0; k < nb; ++k) {
    const Site& s = dom->boundary[k];
    Interval q = dom->model->boundary_bound(Quantity::LocalExtinction, a, s);
    Interval q0 = dom->model->boundary_bound(Quantity::NeverVisit, a, s);
    Interval qb = dom->model->boundary_bound(Quantity::GlobalExtinction, all, s);
    seed_lo[k] = q0.lo;
    seed_hi[k] = std::min(q0.hi, q.hi);
    lo_b[k] = std::max({q.lo, q0.lo, qb.lo});
    hi_b[k] = q.hi;
  }
  auto seed = detail::never_visit_runs(dom, a, seed_lo, seed_hi, opt);
  ExtinctionBracket br;
  br.quantity = Quantity::LocalExtinction;
  br.target = a;
  br.radius = dom->radius;
  br.converged = seed.converged;
  br.monotone = seed.monotone;
  br.iterations = seed.iterations;
  // The seeds are fixed points with boundary values dominated by these, so
  // both runs are nondecreasing up to the seed residual.
  const double slack = std::max(1e-14, 2.0 * seed.residual);
  auto lo = detail::iterate(*dom, seed.lower.values, lo_b, nullptr, +1, opt, slack);
  auto hi = detail::iterate(*dom, seed.upper.values, hi_b, nullptr, +1, opt, slack);
  detail::absorb(br, lo);
  detail::absorb(br, hi);
  br.lower = detail::wrap(dom, std::move(lo.v), std::move(lo_b));
  br.upper = detail::wrap(dom, std::move(hi.v), std::move(hi_b));
  return br;
}

struct FixedPointReport {
  double residual = 0.0;       // max |G(z) - z|
  double excess = 0.0;         // max (z - G(z))_+
  std::size_t residual_at = 0;  // window index of the largest |G(z) - z|
  std::size_t excess_at = 0;
};

inline FixedPointReport verify_fixed_point(const SiteVector& z) {
  auto g = eval_G(z);
  FixedPointReport r;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double d = std::abs(g[i] - z[i]);
    if (d > r.residual) {
      r.residual = d;
      r.residual_at = i;
    }
    double e = z[i] - g[i];
    if (e > r.excess) {
      r.excess = e;
      r.excess_at = i;
    }
  }
  return r;
}

// Conjugation of G by T_w(z) = z(1-w) + w with w = q-bar: the generating
// function of the process conditioned on survival.
class NoDeathTransform {
 public:
  explicit NoDeathTransform(SiteVector qbar) : qbar_(std::move(qbar)) {
    detail::check_unit_interval(qbar_);
    for (std::size_t i = 0; i < qbar_.size(); ++i)
      if (qbar_[i] >= 1.0)
        throw DomainError("q-bar equals 1 at site " + qbar_.domain->model->label(qbar_.domain->sites[i]) +
                          "; the no-death transform needs q-bar < 1 on the window");
  }

  const SiteVector& qbar() const { return qbar_; }

  SiteVector T(const SiteVector& z) const {
    SiteVector out = z;
    for (std::size_t i = 0; i < z.size(); ++i) out.values[i] = z[i] * (1.0 - qbar_[i]) + qbar_[i];
    out.boundary = detail::boundary_values(z);
    for (std::size_t b = 0; b < out.boundary.size(); ++b)
      out.boundary[b] = out.boundary[b] * (1.0 - qbar_.outside(b)) + qbar_.outside(b);
    return out;
  }

  // Inverse on the window; boundary entries where q-bar is 1 map to 1.
  SiteVector T_inv(const SiteVector& z) const {
    SiteVector out = z;
    for (std::size_t i = 0; i < z.size(); ++i) out.values[i] = (z[i] - qbar_[i]) / (1.0 - qbar_[i]);
    out.boundary = detail::boundary_values(z);
    for (std::size_t b = 0; b < out.boundary.size(); ++b) {
      double w = qbar_.outside(b);
      out.boundary[b] = w >= 1.0 ? 1.0 : (out.boundary[b] - w) / (1.0 - w);
    }
    return out;
  }

  SiteVector G_hat(const SiteVector& z) const {
    auto g = eval_G(T(z));
    SiteVector out = z;
    for (std::size_t i = 0; i < z.size(); ++i)
      out.values[i] = std::clamp((g[i] - qbar_[i]) / (1.0 - qbar_[i]), 0.0, 1.0);
    return out;
  }

 private:
  SiteVector qbar_;
};

inline NoDeathTransform no_death_transform(const SiteVector& qbar) { return NoDeathTransform(qbar); }

}  // namespace brw
