#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "brwlab/domain.hpp"
#include "brwlab/errors.hpp"
#include "brwlab/model.hpp"

namespace brw {

struct PerronResult {
  double value = 0.0;
  std::vector<double> vector;  // normalized to unit l1 norm
  long iterations = 0;
  bool converged = false;
};

// Dominant eigenvalue of a nonnegative matrix (boundary column ignored) by
// power iteration on M + I from the uniform vector. The shift removes the
// sign alternation of bipartite structures.
inline PerronResult perron_root(const MomentMatrix& m, double rel_tol = 1e-12, long max_iter = 200'000) {
  PerronResult r;
  const std::size_t n = m.size();
  if (n == 0) return r;
  bool zero = true;
  for (const auto& row : m.rows)
    for (const auto& [c, v] : row)
      if (v != 0.0) zero = false;
  std::vector<double> x(n, 1.0 / static_cast<double>(n)), y(n);
  if (zero) {
    r.vector = x;
    r.converged = true;
    return r;
  }
  double prev = -1.0;
  int stable = 0;
  for (long it = 1; it <= max_iter; ++it) {
    // y = (M + I) x
    for (std::size_t i = 0; i < n; ++i) {
      double s = x[i];
      for (const auto& [c, v] : m.rows[i]) s += v * x[static_cast<std::size_t>(c)];
      y[i] = s;
    }
    double norm = 0.0;
    for (double v : y) norm += v;
    double est = norm - 1.0;  // x has unit l1 norm
    // Collatz-Wielandt bounds when the iterate is positive.
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    bool positive = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (x[i] <= 1e-300) {
        positive = false;
        break;
      }
      double ratio = y[i] / x[i];
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / norm;
    r.iterations = it;
    r.value = est;
    if (positive && hi - lo <= rel_tol * hi) {
      r.value = 0.5 * (lo + hi) - 1.0;
      r.converged = true;
      break;
    }
    if (prev >= 0.0 && std::abs(est - prev) <= rel_tol * std::max(1.0, std::abs(est))) {
      if (++stable >= 20) {
        r.converged = true;
        break;
      }
    } else {
      stable = 0;
    }
    prev = est;
  }
  r.value = std::max(0.0, r.value);
  r.vector = std::move(x);
  return r;
}

struct GrowthEstimate {
  std::vector<std::pair<int, double>> sequence;  // (n, a_n)
  double value = 0.0;
  int period = 1;           // 2 when odd-n terms vanish
  double oscillation = 0.0;  // spread of the reported subsequence over the trailing half
  bool converged = true;
};

namespace detail {

// Fills a_n from log-scaled coefficients c_n = log(m^(n)) (or -inf).
inline GrowthEstimate finish_growth(const std::vector<double>& logc) {
  GrowthEstimate g;
  const int n_max = static_cast<int>(logc.size()) - 1;
  bool odd_zero = n_max >= 2;
  bool even_zero = true;
  for (int n = 1; n <= n_max; ++n) {
    double a = std::isfinite(logc[n]) ? std::exp(logc[n] / n) : 0.0;
    g.sequence.emplace_back(n, a);
    if (n % 2 == 1 && a > 0.0) odd_zero = false;
    if (n % 2 == 0 && a > 0.0) even_zero = false;
  }
  if (odd_zero && !even_zero) g.period = 2;
  int last = n_max;
  if (g.period == 2 && last % 2 == 1) --last;
  if (last < 1) return g;
  g.value = g.sequence[static_cast<std::size_t>(last - 1)].second;
  double lo = g.value, hi = g.value;
  for (int n = std::max(1, last / 2); n <= last; ++n) {
    if (g.period == 2 && n % 2 == 1) continue;
    double a = g.sequence[static_cast<std::size_t>(n - 1)].second;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  g.oscillation = hi - lo;
  g.converged = g.value == 0.0 || g.oscillation <= 0.05 * g.value;
  return g;
}

// Left products e_x M^n with renormalization; reports log of the entry at
// `target` (or of the row sum when target < 0) for n = 0..n_max.
inline std::vector<double> left_power_logs(const MomentMatrix& m, std::size_t x, int target, int n_max) {
  std::vector<double> v(m.size(), 0.0), w(m.size());
  v[x] = 1.0;
  double log_scale = 0.0;
  std::vector<double> out(static_cast<std::size_t>(n_max) + 1, -std::numeric_limits<double>::infinity());
  out[0] = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t z = 0; z < m.size(); ++z) {
      if (v[z] == 0.0) continue;
      for (const auto& [y, val] : m.rows[z]) w[static_cast<std::size_t>(y)] += v[z] * val;
    }
    double s = 0.0;
    for (double a : w) s += a;
    if (s == 0.0) break;
    for (double& a : w) a /= s;
    log_scale += std::log(s);
    v.swap(w);
    if (target < 0) {
      out[static_cast<std::size_t>(n)] = log_scale;
    } else if (v[static_cast<std::size_t>(target)] > 0.0) {
      out[static_cast<std::size_t>(n)] = log_scale + std::log(v[static_cast<std::size_t>(target)]);
    }
  }
  return out;
}

// Distance-from-root projection of the tree moment matrix: site k stands for
// the sphere of radius k. Exact for quantities started at the root.
inline MomentMatrix radial_matrix(const TreeSymmetry& t, double edge_moment, int levels) {
  const int d = t.degree;
  MomentMatrix m;
  m.rows.resize(static_cast<std::size_t>(levels) + 1);
  m.boundary.resize(m.rows.size());
  for (int k = 0; k <= levels; ++k) {
    auto& row = m.rows[static_cast<std::size_t>(k)];
    if (k == 0) {
      if (t.loop_rate > 0.0) row.emplace_back(0, edge_moment * t.loop_rate);
      if (levels >= 1) row.emplace_back(1, edge_moment * d);
      continue;
    }
    row.emplace_back(k - 1, edge_moment);
    if (k < levels) row.emplace_back(k + 1, edge_moment * (d - 1));
    else m.boundary[static_cast<std::size_t>(k)].emplace_back(0, edge_moment * (d - 1));
  }
  return m;
}

}  // namespace detail

// Return-probability growth of simple random walk on T_d via the radial
// birth-death chain, scaled by lambda*d.
inline GrowthEstimate radial_tree_growth(int d, double lambda_k, int n_max) {
  if (d < 3) throw ValidationError("radial_tree_growth needs d >= 3");
  if (n_max < 1) throw ValidationError("n_max must be >= 1");
  const int steps = 2 * n_max;
  const double up = static_cast<double>(d - 1) / d, down = 1.0 / d;
  std::vector<double> r(static_cast<std::size_t>(n_max) + 2, 0.0), nx(r.size());
  r[0] = 1.0;
  double log_scale = 0.0;
  std::vector<double> logc(static_cast<std::size_t>(steps) + 1, -std::numeric_limits<double>::infinity());
  logc[0] = 0.0;
  const double log_ld = std::log(lambda_k * d);
  for (int s = 1; s <= steps; ++s) {
    std::fill(nx.begin(), nx.end(), 0.0);
    int reach = std::min(s, steps - s + 1);
    for (int k = 0; k <= std::min(reach, n_max); ++k) {
      double v = r[static_cast<std::size_t>(k)];
      if (v == 0.0) continue;
      if (k == 0) {
        nx[1] += v;
      } else {
        if (k + 1 <= n_max + 1) nx[static_cast<std::size_t>(k + 1)] += v * up;
        nx[static_cast<std::size_t>(k - 1)] += v * down;
      }
    }
    double tot = 0.0;
    for (double v : nx) tot += v;
    if (tot == 0.0) break;
    for (double& v : nx) v /= tot;
    log_scale += std::log(tot);
    r.swap(nx);
    if (r[0] > 0.0) logc[static_cast<std::size_t>(s)] = log_scale + std::log(r[0]) + s * log_ld;
  }
  return detail::finish_growth(logc);
}

inline constexpr int kRowSum = -1;

// a_n = (m^(n)_xy)^(1/n), or (sum_y m^(n)_xy)^(1/n) when `y` is empty. Tree
// models started at the root use the exact radial projection; otherwise the
// window must contain every path that matters.
inline GrowthEstimate growth_sequence(const TruncatedDomain& dom, const Site& x, const std::optional<Site>& y, int n_max) {
  if (n_max < 1) throw ValidationError("n_max must be >= 1");
  const auto& tree = dom.model->tree_symmetry();
  if (tree && x.coord.empty() && (!y || y->coord.empty())) {
    double lambda = dom.model->continuous() ? dom.model->continuous()->lambda : 1.0;
    auto m = detail::radial_matrix(*tree, lambda, n_max + 1);
    return detail::finish_growth(detail::left_power_logs(m, 0, y ? 0 : -1, n_max));
  }
  const int xi = dom.index_of(x);
  const int yi = y ? dom.index_of(*y) : -1;
  if (!dom.boundary.empty()) {
    int depth = dom.depth[static_cast<std::size_t>(xi)];
    int need = depth + (y ? (n_max + 1) / 2 : n_max);
    if (dom.radius < need)
      throw ValidationError("window radius " + std::to_string(dom.radius) + " too small for n_max=" + std::to_string(n_max) +
                            "; need radius >= " + std::to_string(need));
  }
  auto m = moment_matrix(dom);
  return detail::finish_growth(detail::left_power_logs(m, static_cast<std::size_t>(xi), yi, n_max));
}

enum class Indicator { False, True, Undecided };

inline const char* to_string(Indicator i) {
  switch (i) {
    case Indicator::False: return "false";
    case Indicator::True: return "true";
    case Indicator::Undecided: return "undecided";
  }
  return "?";
}

struct CriticalParams {
  double K_s = 0.0;
  double K_w = 0.0;
  double lambda_s = 0.0;
  double lambda_w_lower = 0.0;
  double margin = 0.0;
  Indicator pure_global_indicator = Indicator::Undecided;
  GrowthEstimate diag;
  GrowthEstimate rowsum;
};

// K_s = M_s(x,x)/lambda and K_w = M_w(x)/lambda for a continuous family;
// m_xy is linear in lambda so one window suffices.
inline CriticalParams critical_params(const TruncatedDomain& dom, const Site& x, int n_max) {
  const auto& fam = dom.model->continuous();
  if (!fam) throw ValidationError("critical_params needs a model of continuous kind");
  CriticalParams c;
  c.diag = growth_sequence(dom, x, x, n_max);
  c.rowsum = growth_sequence(dom, x, std::nullopt, n_max);
  const double lambda = fam->lambda;
  c.K_s = c.diag.value / lambda;
  c.K_w = c.rowsum.value / lambda;
  c.lambda_s = c.K_s > 0.0 ? 1.0 / c.K_s : std::numeric_limits<double>::infinity();
  c.lambda_w_lower = c.K_w > 0.0 ? 1.0 / c.K_w : std::numeric_limits<double>::infinity();
  c.margin = 3.0 * (c.diag.oscillation + c.rowsum.oscillation) / lambda;
  if (!c.diag.converged || !c.rowsum.converged)
    c.pure_global_indicator = Indicator::Undecided;
  else
    c.pure_global_indicator = c.K_s < c.K_w - c.margin ? Indicator::True : Indicator::False;
  return c;
}

inline void write_growth_csv(std::ostream& os, const GrowthEstimate& g) {
  os << "n,a_n\n";
  os.precision(17);
  for (const auto& [n, a] : g.sequence) os << n << ',' << a << '\n';
}

}  // namespace brw
