#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "brwlab/domain.hpp"
#include "brwlab/errors.hpp"
#include "brwlab/model.hpp"
#include "brwlab/parallel.hpp"

namespace brw {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

// Independent stream for trial `index`, a pure function of (seed, index).
inline Rng trial_stream(std::uint64_t master_seed, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(master_seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

// eta_n: particle counts per window site, sorted by window index.
struct ParticleConfiguration {
  std::vector<std::pair<int, std::int64_t>> counts;
  int generation = 0;
  std::int64_t escaped = 0;  // children sent outside under OutsideImmortal

  std::int64_t total() const {
    std::int64_t t = 0;
    for (const auto& [i, c] : counts) t += c;
    return t;
  }
  std::int64_t at(int i) const {
    for (const auto& [j, c] : counts)
      if (j == i) return c;
    return 0;
  }
  static ParticleConfiguration single(int site) { return {{{site, 1}}, 0, 0}; }
};

namespace detail {

inline std::int64_t binomial(Rng& rng, std::int64_t n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  return std::binomial_distribution<std::int64_t>(n, p)(rng);
}

// Total number of children of c particles sharing one count law.
inline std::int64_t sample_children(Rng& rng, const CountLaw& law, std::int64_t c) {
  if (c == 0) return 0;
  if (law.is_geometric()) {
    double m = law.mean();
    return std::negative_binomial_distribution<std::int64_t>(c, 1.0 / (1.0 + m))(rng);
  }
  const auto& pmf = law.pmf();
  std::int64_t left = c, total = 0;
  double mass = 1.0;
  for (std::size_t n = 0; n < pmf.size() && left > 0; ++n) {
    std::int64_t k = n + 1 == pmf.size() ? left : binomial(rng, left, mass > 0.0 ? pmf[n] / mass : 1.0);
    total += static_cast<std::int64_t>(n) * k;
    left -= k;
    mass -= pmf[n];
  }
  return total;
}

// Multinomial split of n items over `weights` (summing to 1) by sequential
// binomials; calls emit(slot, count) for nonzero counts.
template <class Weights, class Emit>
void multinomial(Rng& rng, std::int64_t n, const Weights& weights, Emit&& emit) {
  double mass = 1.0;
  for (std::size_t j = 0; j < weights.size() && n > 0; ++j) {
    double w = weights[j].second;
    std::int64_t k = j + 1 == weights.size() ? n : binomial(rng, n, mass > 0.0 ? std::min(1.0, w / mass) : 1.0);
    if (k > 0) emit(j, k);
    n -= k;
    mass -= w;
  }
}

}  // namespace detail

// One generation: every particle reproduces independently according to the
// law of its site; children are pooled per site.
inline ParticleConfiguration step(const TruncatedDomain& dom, const ParticleConfiguration& config, Rng& rng) {
  std::vector<std::int64_t> next(dom.size(), 0);
  std::vector<int> touched;
  ParticleConfiguration out;
  out.generation = config.generation + 1;
  out.escaped = config.escaped;
  auto deposit = [&](int t, std::int64_t k) {
    if (is_boundary_target(t)) {
      if (dom.policy == BoundaryPolicy::OutsideImmortal) out.escaped += k;
      return;
    }
    if (next[static_cast<std::size_t>(t)] == 0) touched.push_back(t);
    next[static_cast<std::size_t>(t)] += k;
  };
  for (const auto& [i, c] : config.counts) {
    const auto& law = dom.laws[static_cast<std::size_t>(i)];
    if (law.factored) {
      std::int64_t n = detail::sample_children(rng, law.count, c);
      if (n == 0 || law.row.empty()) continue;
      detail::multinomial(rng, n, law.row, [&](std::size_t j, std::int64_t k) { deposit(law.row[j].first, k); });
    } else {
      std::vector<std::pair<int, double>> probs;
      probs.reserve(law.atoms.size());
      for (std::size_t a = 0; a < law.atoms.size(); ++a) probs.emplace_back(static_cast<int>(a), law.atoms[a].prob);
      detail::multinomial(rng, c, probs, [&](std::size_t a, std::int64_t k) {
        for (const auto& [t, m] : law.atoms[a].offspring) deposit(t, k * m);
      });
    }
  }
  std::sort(touched.begin(), touched.end());
  out.counts.reserve(touched.size());
  for (int t : touched) out.counts.emplace_back(t, next[static_cast<std::size_t>(t)]);
  return out;
}

enum class EventKind { Global, Local, NeverVisit, Escape };

// GLOBAL: alive at the horizon. LOCAL: alive and a visit to A after
// generation `gen`. NEVER_VISIT: no visit to A in generations 0..horizon.
// ESCAPE: alive and no visit to A after generation `gen`.
struct Event {
  EventKind kind = EventKind::Global;
  std::vector<Site> targets;
  int gen = 0;

  static Event global() { return {}; }
  static Event local(std::vector<Site> a, int settle) { return {EventKind::Local, std::move(a), settle}; }
  static Event never_visit(std::vector<Site> a) { return {EventKind::NeverVisit, std::move(a), 0}; }
  static Event escape(std::vector<Site> a, int before) { return {EventKind::Escape, std::move(a), before}; }

  std::string name() const {
    std::string set;
    for (std::size_t i = 0; i < targets.size(); ++i) set += (i ? "," : "") + targets[i].str();
    switch (kind) {
      case EventKind::Global: return "GLOBAL";
      case EventKind::Local: return "LOCAL({" + set + "}," + std::to_string(gen) + ")";
      case EventKind::NeverVisit: return "NEVER_VISIT({" + set + "})";
      case EventKind::Escape: return "ESCAPE({" + set + "}," + std::to_string(gen) + ")";
    }
    return "?";
  }
};

struct EstimateCI {
  std::string event;
  double point = 0.0;
  double stderr_ = 0.0;
  std::int64_t trials = 0;
  std::int64_t hits = 0;
  std::int64_t capped_trials = 0;
  std::uint64_t seed = 0;
  int horizon = 0;
  // Same event evaluated at twice the horizon on the same trajectories.
  double point_2h = 0.0;
  bool horizon_bias = false;
};

struct SimulationOptions {
  std::int64_t trials = 10'000;
  int horizon = 100;
  std::int64_t cap = 1'000'000;
  std::uint64_t seed = 1;
  bool second_horizon = true;
};

namespace detail {

// Per-trial record: alive flags at h and 2h, and for each event's target set
// the last observed generation with a visit (or -1).
struct TrialRecord {
  bool alive_h = false, alive_2h = false, capped = false;
  std::vector<int> last_visit_h, last_visit_2h;
};

inline TrialRecord run_trial(const TruncatedDomain& dom, int start, const std::vector<std::vector<char>>& masks,
                             const SimulationOptions& opt, Rng rng) {
  TrialRecord r;
  r.last_visit_h.assign(masks.size(), -1);
  r.last_visit_2h.assign(masks.size(), -1);
  const int end = opt.second_horizon ? 2 * opt.horizon : opt.horizon;
  ParticleConfiguration cfg = ParticleConfiguration::single(start);
  auto record = [&](const ParticleConfiguration& c) {
    for (std::size_t e = 0; e < masks.size(); ++e)
      for (const auto& [i, k] : c.counts)
        if (masks[e][static_cast<std::size_t>(i)]) {
          if (c.generation <= opt.horizon) r.last_visit_h[e] = c.generation;
          r.last_visit_2h[e] = c.generation;
          break;
        }
  };
  record(cfg);
  for (int g = 1; g <= end; ++g) {
    cfg = step(dom, cfg, rng);
    record(cfg);
    const std::int64_t pop = cfg.total();
    if (cfg.escaped > 0 || pop > opt.cap) {
      // Escaped particles never die under OutsideImmortal; a capped trial is
      // counted as surviving and its later visits are unobserved.
      r.capped = pop > opt.cap;
      r.alive_h = r.alive_2h = true;
      return r;
    }
    if (pop == 0) {
      r.alive_h = g > opt.horizon;
      return r;
    }
    if (g == opt.horizon) r.alive_h = true;
  }
  r.alive_2h = true;
  if (!opt.second_horizon) r.alive_h = true;
  return r;
}

inline bool event_hit(const Event& ev, bool alive, int last_visit) {
  switch (ev.kind) {
    case EventKind::Global: return alive;
    case EventKind::Local: return alive && last_visit > ev.gen;
    case EventKind::NeverVisit: return last_visit < 0;
    case EventKind::Escape: return alive && last_visit <= ev.gen;
  }
  return false;
}

}  // namespace detail

// Monte Carlo estimates of event probabilities for the progeny of one
// particle at `start`. Results depend only on (domain, start, events,
// options): trial i always uses stream i, counts are summed exactly.
inline std::vector<EstimateCI> estimate(const TruncatedDomain& dom, const Site& start, const std::vector<Event>& events,
                                        const SimulationOptions& opt) {
  if (opt.trials < 1) throw ValidationError("trials must be >= 1");
  if (opt.horizon < 1) throw ValidationError("horizon must be >= 1");
  if (opt.cap < 1) throw ValidationError("cap must be >= 1");
  for (const auto& ev : events)
    if ((ev.kind == EventKind::Local || ev.kind == EventKind::Escape) && opt.horizon < ev.gen)
      throw ValidationError("horizon " + std::to_string(opt.horizon) + " is below settle generation " + std::to_string(ev.gen));
  const int s = dom.index_of(start);
  std::vector<std::vector<char>> masks;
  for (const auto& ev : events) {
    std::vector<char> m(dom.size(), 0);
    for (const auto& t : ev.targets) m[static_cast<std::size_t>(dom.index_of(t))] = 1;
    masks.push_back(std::move(m));
  }

  constexpr std::size_t kChunks = 256;
  struct Tally {
    std::vector<std::int64_t> hits_h, hits_2h;
    std::int64_t capped = 0;
  };
  std::vector<Tally> tallies(kChunks);
  parallel_chunks(static_cast<std::size_t>(opt.trials), kChunks, thread_budget(), [&](std::size_t c, std::size_t b, std::size_t e) {
    Tally t;
    t.hits_h.assign(events.size(), 0);
    t.hits_2h.assign(events.size(), 0);
    for (std::size_t i = b; i < e; ++i) {
      auto rec = detail::run_trial(dom, s, masks, opt, trial_stream(opt.seed, i));
      t.capped += rec.capped;
      for (std::size_t k = 0; k < events.size(); ++k) {
        t.hits_h[k] += detail::event_hit(events[k], rec.alive_h, rec.last_visit_h[k]);
        t.hits_2h[k] += detail::event_hit(events[k], rec.alive_2h, rec.last_visit_2h[k]);
      }
    }
    tallies[c] = std::move(t);
  });

  std::vector<EstimateCI> out;
  for (std::size_t k = 0; k < events.size(); ++k) {
    std::int64_t h = 0, h2 = 0, capped = 0;
    for (const auto& t : tallies) {
      if (t.hits_h.empty()) continue;
      h += t.hits_h[k];
      h2 += t.hits_2h[k];
      capped += t.capped;
    }
    EstimateCI ci;
    ci.event = events[k].name();
    ci.trials = opt.trials;
    ci.hits = h;
    ci.capped_trials = capped;
    ci.seed = opt.seed;
    ci.horizon = opt.horizon;
    const double n = static_cast<double>(opt.trials);
    ci.point = static_cast<double>(h) / n;
    ci.stderr_ = std::sqrt(ci.point * (1.0 - ci.point) / n);
    ci.point_2h = opt.second_horizon ? static_cast<double>(h2) / n : ci.point;
    ci.horizon_bias = std::abs(ci.point - ci.point_2h) > 3.0 * std::max(ci.stderr_, 1.0 / n);
    out.push_back(std::move(ci));
  }
  return out;
}

struct OccupancyEntry {
  Site site;
  double expected = 0.0;  // m^(n)_{start,y}
  double empirical = 0.0;
  double z = 0.0;
};

struct OccupancyReport {
  int generation = 0;
  std::vector<OccupancyEntry> entries;
  bool flagged = false;  // some |z| > 4
};

// Empirical mean counts after n generations against the row of M^n.
inline OccupancyReport occupancy_check(const TruncatedDomain& dom, const Site& start, int n, std::int64_t trials,
                                       std::uint64_t seed) {
  if (n < 0 || trials < 2) throw ValidationError("occupancy_check needs n >= 0 and trials >= 2");
  const int s = dom.index_of(start);
  auto m = moment_matrix(dom);
  std::vector<double> row(dom.size(), 0.0), nx(dom.size());
  row[static_cast<std::size_t>(s)] = 1.0;
  for (int k = 0; k < n; ++k) {
    std::fill(nx.begin(), nx.end(), 0.0);
    for (std::size_t z = 0; z < row.size(); ++z)
      if (row[z] != 0.0)
        for (const auto& [y, v] : m.rows[z]) nx[static_cast<std::size_t>(y)] += row[z] * v;
    row.swap(nx);
  }

  constexpr std::size_t kChunks = 64;
  std::vector<std::vector<double>> sum(kChunks), sumsq(kChunks);
  parallel_chunks(static_cast<std::size_t>(trials), kChunks, thread_budget(), [&](std::size_t c, std::size_t b, std::size_t e) {
    std::vector<double> s1(dom.size(), 0.0), s2(dom.size(), 0.0);
    for (std::size_t i = b; i < e; ++i) {
      Rng rng = trial_stream(seed, i);
      auto cfg = ParticleConfiguration::single(s);
      for (int k = 0; k < n; ++k) cfg = step(dom, cfg, rng);
      for (const auto& [j, cnt] : cfg.counts) {
        double v = static_cast<double>(cnt);
        s1[static_cast<std::size_t>(j)] += v;
        s2[static_cast<std::size_t>(j)] += v * v;
      }
    }
    sum[c] = std::move(s1);
    sumsq[c] = std::move(s2);
  });

  OccupancyReport rep;
  rep.generation = n;
  const double t = static_cast<double>(trials);
  for (std::size_t y = 0; y < dom.size(); ++y) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t c = 0; c < kChunks; ++c) {
      if (sum[c].empty()) continue;
      s1 += sum[c][y];
      s2 += sumsq[c][y];
    }
    if (s1 == 0.0 && row[y] == 0.0) continue;
    OccupancyEntry e;
    e.site = dom.sites[y];
    e.expected = row[y];
    e.empirical = s1 / t;
    double var = std::max(0.0, (s2 - t * e.empirical * e.empirical) / (t - 1.0));
    double se = std::sqrt(var / t);
    double diff = e.empirical - e.expected;
    if (se > 0.0)
      e.z = diff / se;
    else
      e.z = std::abs(diff) <= 1e-9 * std::max(1.0, e.expected) ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    if (std::abs(e.z) > 4.0) rep.flagged = true;
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

}  // namespace brw
