#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "brwlab/checks.hpp"
#include "brwlab/domain.hpp"
#include "brwlab/gallery.hpp"
#include "brwlab/genfun.hpp"
#include "brwlab/io.hpp"
#include "brwlab/montecarlo.hpp"
#include "brwlab/spectral.hpp"

namespace brw::acceptance {

struct CriterionResult {
  int id = 0;
  std::string key;  // filter token
  std::string title;
  bool passed = false;
  std::string measured;
  double seconds = 0.0;
};

inline CriterionResult header(int id, std::string key, std::string title) {
  CriterionResult r;
  r.id = id;
  r.key = std::move(key);
  r.title = std::move(title);
  return r;
}

namespace detail {

inline std::string fmt(double v, int prec = 10) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : "; ") + x;
  return s;
}

inline bool within_rel(double v, double target, double rel) { return std::abs(v - target) <= rel * std::abs(target); }

// Scoped override of BRWLAB_THREADS.
class ThreadEnv {
 public:
  explicit ThreadEnv(unsigned n) {
    if (const char* old = std::getenv("BRWLAB_THREADS")) saved_ = old, had_ = true;
    setenv("BRWLAB_THREADS", std::to_string(n).c_str(), 1);
  }
  ~ThreadEnv() {
    if (had_) setenv("BRWLAB_THREADS", saved_.c_str(), 1);
    else unsetenv("BRWLAB_THREADS");
  }
  ThreadEnv(const ThreadEnv&) = delete;
  ThreadEnv& operator=(const ThreadEnv&) = delete;

 private:
  std::string saved_;
  bool had_ = false;
};

}  // namespace detail

inline CriterionResult galton_watson() {
  auto r = header(1, "gw", "Galton-Watson minimal fixed point");
  auto g = gw_law(CountLaw::finite({0.25, 0.0, 0.75}));
  auto b = solve_global_extinction(full_domain(g.model), {});
  const double q = b.lower[0];
  r.passed = b.converged && std::abs(q - 1.0 / 3.0) <= 1e-9 && std::abs(b.upper[0] - 1.0 / 3.0) <= 1e-9;
  r.measured = "qbar=" + detail::fmt(q, 12) + " iterations=" + std::to_string(b.iterations);
  return r;
}

inline CriterionResult tree_parameters() {
  auto r = header(2, "tree", "Tree critical parameters (d=3,4)");
  bool ok = true;
  std::string m;
  for (int d : {3, 4}) {
    const double lambda = 1.0 / d;
    auto ks_seq = radial_tree_growth(d, lambda, 1000);
    const double K_s = ks_seq.value / lambda;
    auto g = tree_edge_breeding(d, lambda);
    auto dom = truncate(g.model, g.root, 1);
    auto c = critical_params(*dom, g.root, 2000);
    const double target_s = 2.0 * std::sqrt(static_cast<double>(d - 1));
    const bool ok_d = ks_seq.converged && detail::within_rel(K_s, target_s, 0.02) &&
                      detail::within_rel(c.K_w, d, 0.01) && detail::within_rel(1.0 / K_s, 1.0 / target_s, 0.02) &&
                      detail::within_rel(c.lambda_w_lower, 1.0 / d, 0.01) && c.pure_global_indicator == Indicator::True;
    ok = ok && ok_d;
    m += "d=" + std::to_string(d) + ": K_s=" + detail::fmt(K_s, 8) + " (2sqrt(d-1)=" + detail::fmt(target_s, 8) +
         ") K_w=" + detail::fmt(c.K_w, 8) + " lambda_s=" + detail::fmt(1.0 / K_s, 7) + " indicator=" +
         to_string(c.pure_global_indicator) + "; ";
  }
  r.passed = ok;
  r.measured = m;
  return r;
}

inline CriterionResult three_fixed_points() {
  auto r = header(3, "spataru", "Three fixed points of one irreducible G");
  auto out = spataru_recursion(0.5, ThetaSchedule::constant(0.5), 10'000);
  // z = 1 - w; monotonicity and range are checked on the complements, which
  // stay exact after z itself rounds to 1.
  bool increasing = true, in_range = true, p_ok = true;
  for (std::size_t n = 0; n < out.w.size(); ++n) {
    if (!(out.w[n] > 0.0L && out.w[n] < 2.0L / 3.0L)) in_range = false;
    if (n > 0 && !(out.w[n] < out.w[n - 1])) increasing = false;
  }
  for (std::size_t n = 1; n < out.p.size(); ++n)
    if (!(out.p[n] > 0.0 && out.p[n] < 1.0)) p_ok = false;
  const bool distinct = std::abs(out.z[0] - 1.0 / 3.0) > 1e-3 && out.w[0] > 1e-3L;
  r.passed = out.max_residual < 1e-12 && increasing && in_range && p_ok && distinct;
  r.measured = "residual=" + detail::fmt(out.max_residual, 3) + " z1=" + detail::fmt(out.z[1]) +
               " z2=" + detail::fmt(out.z[2]) + " p1=" + detail::fmt(out.p[1]) +
               " strictly_increasing=" + (increasing ? "yes" : "no") + " p_in_(0,1)=" + (p_ok ? "yes" : "no");
  return r;
}

inline CriterionResult halfline_non_strong() {
  auto r = header(4, "halfline-43", "Non-strong local survival on the half-line");
  auto g = halfline_ex43();
  const TargetSet a = TargetSet::of({Site::at(0)});
  int found = -1;
  for (int radius = 10; radius <= 60 && found < 0; radius += 10) {
    auto t = strong_local_test(truncate(g.model, g.root, radius), a);
    if (t.verdict == StrongVerdict::NonStrong) found = radius;
  }
  SimulationOptions opt;
  opt.trials = 100'000;
  opt.horizon = 400;
  opt.cap = 1'000'000'000'000LL;
  opt.seed = 20240607;
  auto dom = truncate(g.model, g.root, 2 * opt.horizon + 2);
  auto est = estimate(*dom, g.root, {Event::global(), Event::escape({Site::at(0)}, 50)}, opt);
  const auto& glob = est[0];
  const auto& esc = est[1];
  const bool mc_ok = std::abs(glob.point - 2.0 / 3.0) <= 4.0 * glob.stderr_ && esc.point > 0.0;
  r.passed = found > 0 && mc_ok;
  r.measured = "NON_STRONG at radius " + (found > 0 ? std::to_string(found) : std::string("none")) +
               "; GLOBAL=" + detail::fmt(glob.point, 6) + "+-" + detail::fmt(glob.stderr_, 3) +
               " ESCAPE({0},50)=" + detail::fmt(esc.point, 6) + " capped=" + std::to_string(glob.capped_trials);
  return r;
}

inline CriterionResult tree_loop_pattern() {
  auto r = header(5, "tree-loop", "Non-monotone strong local survival on T_3 with a loop");
  const TargetSet a = TargetSet::of({Site{}});
  struct Probe {
    double lambda;
    StrongVerdict want;
  };
  bool ok = true;
  for (Probe p : {Probe{0.30, StrongVerdict::Strong}, Probe{0.35, StrongVerdict::NonStrong}, Probe{0.40, StrongVerdict::Strong}}) {
    auto g = tree_with_loop(3, p.lambda, 3.0);
    auto t = strong_local_test(truncate(g.model, g.root, 12), a, 1e-8);
    const bool middle = p.want == StrongVerdict::NonStrong;
    const bool hit = t.verdict == p.want || (middle && t.verdict == StrongVerdict::Undecided);
    ok = ok && hit;
    r.measured += "lambda=" + detail::fmt(p.lambda, 3) + ":" + to_string(t.verdict) + " ";
  }
  r.passed = ok;
  return r;
}

inline CriterionResult property_suites() {
  auto r = header(6, "properties", "Property suites over the gallery");
  std::vector<std::string> failures;
  auto fail = [&](const std::string& s) { failures.push_back(s); };

  struct Case {
    std::string name;
    GalleryParams params;
    int radius;
  };
  const std::vector<Case> cases{{"gw", {}, 0},
                                {"two-site-cubic", {}, 0},
                                {"tree", {{"lambda", 0.5}}, 8},
                                {"tree-loop", {{"lambda", 0.35}}, 8},
                                {"halfline-43", {}, 40},
                                {"halfline-44", {}, 40},
                                {"line", {{"lambda", 1.0}}, 40},
                                {"line-plus-branch", {{"lambda", 0.34}}, 6},
                                {"tree-plus-clique", {{"lambda", 0.34}}, 6},
                                {"spataru", {{"n_max", 400}}, 200}};
  const SolverOptions opt{1e-12, 1'000'000};
  for (const auto& c : cases) {
    auto g = make_gallery(c.name, c.params);
    auto dom = g.model->is_finite() ? full_domain(g.model) : truncate(g.model, g.root, c.radius);
    const TargetSet a = TargetSet::of({g.root});
    auto qb = solve_global_extinction(dom, opt);
    auto q0 = solve_never_visit(dom, a, opt);
    auto ql = solve_local_extinction(dom, a, opt);
    for (const auto* b : {&qb, &q0, &ql})
      if (!b->monotone || !b->converged) fail(c.name + ": " + to_string(b->quantity) + " not monotone/converged");
    for (std::size_t i = 0; i < dom->size(); ++i)
      if (qb.lower[i] > ql.upper[i] + 1e-9) fail(c.name + ": qbar exceeds q(.,A)");
    for (const auto* z : {&qb.lower, &ql.lower})
      if (!max_principle_check(*z, qb.lower).passed()) fail(c.name + ": max principle");
  }

  // Nestedness: upper brackets shrink and lower brackets grow with R.
  for (const std::string name : {"tree", "halfline-43", "line"}) {
    auto g = make_gallery(name, {{"lambda", name == "tree" ? 0.5 : 1.0}});
    ExtinctionBracket prev;
    bool have = false;
    for (int radius : {4, 8, 16}) {
      auto b = solve_global_extinction(truncate(g.model, g.root, radius), opt);
      if (have) {
        const auto& pd = *prev.lower.domain;
        for (std::size_t i = 0; i < pd.size(); ++i) {
          const std::size_t j = static_cast<std::size_t>(b.lower.domain->index_of(pd.sites[i]));
          if (b.lower[j] < prev.lower[i] - 1e-9 || b.upper[j] > prev.upper[i] + 1e-9) {
            fail(name + ": nestedness at R=" + std::to_string(radius));
            break;
          }
        }
      }
      prev = b;
      have = true;
    }
  }

  // Dominance: the third fixed point lies above q-bar.
  {
    auto sp = spataru_recursion(0.5, ThetaSchedule::constant(0.5), 400);
    auto dom = truncate(sp.companion, Site::at(0), 200);
    auto qb = solve_global_extinction(dom, opt);
    for (std::size_t i = 0; i < dom->size(); ++i)
      if (qb.lower[i] > sp.z[static_cast<std::size_t>(dom->sites[i].coord[0])] + 1e-9) fail("spataru: dominance");
  }

  auto two = finite_two_fixed_points(two_site_cubic().model, 25, 11);
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  bool limits_ok = two.passed() && two.witnesses.size() == 1 && two.witnesses[0].values.size() == 2;
  if (limits_ok) {
    limits_ok = std::abs(two.witnesses[0].values.at("limit_0") - golden) <= 1e-8 &&
                std::abs(two.witnesses[0].values.at("limit_1") - 1.0) <= 1e-8;
  }
  if (!limits_ok) fail("two-site cubic limits: " + two.detail);

  {
    auto g = halfline_ex43();
    auto dom = truncate(g.model, g.root, 200);
    SimulationOptions so;
    so.trials = 4000;
    so.horizon = 60;
    so.seed = 99;
    std::string out[2];
    int k = 0;
    for (unsigned threads : {1u, 8u}) {
      detail::ThreadEnv env(threads);
      json j = json::array();
      for (const auto& e : estimate(*dom, g.root, {Event::global(), Event::escape({Site::at(0)}, 20)}, so))
        j.push_back(estimate_json(e));
      out[k++] = j.dump();
    }
    if (out[0] != out[1]) fail("MC output differs between 1 and 8 threads");
  }

  r.passed = failures.empty();
  r.measured = failures.empty() ? "all properties hold" : std::to_string(failures.size()) + " failures: " + detail::join(failures);
  return r;
}

inline CriterionResult counterpart_identity() {
  auto r = header(7, "counterpart", "Continuous-time counterpart identity");
  std::mt19937_64 gen(424242);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double worst_moment = 0.0, stat = 0.0;
  long dof = 0;
  int rejections = 0;
  const int specs = 100;
  const std::int64_t samples = 100'000;
  for (int s = 0; s < specs; ++s) {
    ContinuousSpec spec;
    const int n = 2 + static_cast<int>(unif(gen) * 5);
    for (int i = 0; i < n; ++i) spec.sites.push_back(Site::at(i));
    spec.lambda = 0.2 + 1.8 * unif(gen);
    for (int i = 0; i < n; ++i) {
      spec.death[Site::at(i)] = 0.5 + 1.5 * unif(gen);
      for (int j = 0; j < n; ++j)
        if (j == (i + 1) % n || unif(gen) < 0.4) spec.rates[Site::at(i)].push_back({Site::at(j), 0.05 + 2.0 * unif(gen)});
    }
    auto model = std::make_shared<const BrwModel>(build_discrete_counterpart(spec));
    auto dom = full_domain(model);
    auto m = moment_matrix(*dom);
    for (int i = 0; i < n; ++i) {
      std::vector<double> expect(static_cast<std::size_t>(n), 0.0);
      for (const auto& p : spec.rates[Site::at(i)])
        expect[static_cast<std::size_t>(p.site.coord[0])] += spec.lambda * p.weight / spec.death[Site::at(i)];
      for (int j = 0; j < n; ++j) {
        const double got = m.at(static_cast<std::size_t>(dom->index_of(Site::at(i))), static_cast<std::size_t>(dom->index_of(Site::at(j))));
        worst_moment = std::max(worst_moment, std::abs(got - expect[static_cast<std::size_t>(j)]));
      }
    }
    // Offspring total from a single particle at a random site.
    const int x = static_cast<int>(unif(gen) * n);
    double k = 0.0;
    for (const auto& p : spec.rates[Site::at(x)]) k += p.weight;
    const double mu = spec.lambda * k / spec.death[Site::at(x)];
    const double q = mu / (1.0 + mu);
    std::vector<std::int64_t> counts;
    Rng rng = trial_stream(9000 + static_cast<std::uint64_t>(s), 0);
    const auto start = ParticleConfiguration::single(dom->index_of(Site::at(x)));
    for (std::int64_t t = 0; t < samples; ++t) {
      auto next = step(*dom, start, rng);
      auto c = static_cast<std::size_t>(next.total());
      if (counts.size() <= c) counts.resize(c + 1, 0);
      ++counts[c];
    }
    // Bins 0..B-1 with expected count >= 5, plus the tail.
    double chi = 0.0, tail_p = 1.0;
    std::int64_t tail_n = samples;
    int bins = 0;
    for (std::size_t b = 0;; ++b) {
      const double pb = (1.0 - q) * std::pow(q, static_cast<double>(b));
      if (pb * samples < 5.0 || (tail_p - pb) * samples < 5.0) break;
      const double obs = b < counts.size() ? static_cast<double>(counts[b]) : 0.0;
      chi += (obs - pb * samples) * (obs - pb * samples) / (pb * samples);
      tail_p -= pb;
      tail_n -= static_cast<std::int64_t>(obs);
      ++bins;
    }
    chi += (tail_n - tail_p * samples) * (tail_n - tail_p * samples) / (tail_p * samples);
    ++bins;
    if (bins < 2) continue;
    boost::math::chi_squared one(bins - 1);
    if (boost::math::cdf(boost::math::complement(one, chi)) < 0.01) ++rejections;
    stat += chi;
    dof += bins - 1;
  }
  boost::math::chi_squared all(static_cast<double>(dof));
  const double p_combined = boost::math::cdf(boost::math::complement(all, stat));
  // At the 1% level about one of 100 independent specs rejects by chance;
  // more than 5 has probability below 1e-3.
  r.passed = worst_moment <= 1e-12 && p_combined >= 0.01 && rejections <= 5;
  r.measured = "max |m - lambda k/d|=" + detail::fmt(worst_moment, 3) + " combined chi2=" + detail::fmt(stat, 6) + " on " +
               std::to_string(dof) + " dof (p=" + detail::fmt(p_combined, 4) + ") individual rejections=" +
               std::to_string(rejections) + "/" + std::to_string(specs);
  return r;
}

struct Criterion {
  int id;
  std::string key;
  std::function<CriterionResult()> run;
};

inline const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{{1, "gw", galton_watson},          {2, "tree", tree_parameters},
                                          {3, "spataru", three_fixed_points}, {4, "halfline-43", halfline_non_strong},
                                          {5, "tree-loop", tree_loop_pattern}, {6, "properties", property_suites},
                                          {7, "counterpart", counterpart_identity}};
  return all;
}

// Runs the criteria whose key or number matches `filter` (empty: all).
inline std::vector<CriterionResult> run(const std::string& filter = "",
                                        const std::function<void(const CriterionResult&)>& on_result = {}) {
  std::vector<CriterionResult> out;
  for (const auto& c : criteria()) {
    if (!filter.empty() && filter != c.key && filter != std::to_string(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult res;
    try {
      res = c.run();
    } catch (const std::exception& e) {
      res = header(c.id, c.key, c.key);
      res.measured = std::string("exception: ") + e.what();
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (on_result) on_result(res);
    out.push_back(std::move(res));
  }
  return out;
}

inline std::string csv_field(const std::string& s) {
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

// Columns: criterion,key,passed,seconds,measured
inline std::string summary_csv(const std::vector<CriterionResult>& rows) {
  std::ostringstream os;
  os << "# brwlab " << kVersion << " reproduce\n";
  os << "criterion,key,passed,seconds,measured\n";
  for (const auto& r : rows)
    os << r.id << ',' << r.key << ',' << (r.passed ? "true" : "false") << ',' << detail::fmt(r.seconds, 4) << ','
       << csv_field(r.measured) << '\n';
  return os.str();
}

}  // namespace brw::acceptance
