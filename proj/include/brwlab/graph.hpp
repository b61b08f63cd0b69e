#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <utility>
#include <vector>

#include "brwlab/domain.hpp"

namespace brw {

// Irreducible classes of a window: strongly connected components of the
// graph {(x,y): m_xy > 0}, restricted to window sites.
struct ClassPartition {
  std::vector<int> class_of;              // per window site
  std::vector<std::vector<int>> classes;  // members, each sorted by window index
  std::set<std::pair<int, int>> reaches;  // condensation edges (c1 -> c2), c1 != c2

  bool irreducible() const { return classes.size() == 1; }
  std::size_t count() const { return classes.size(); }
};

inline ClassPartition irreducible_classes(const MomentMatrix& m) {
  const int n = static_cast<int>(m.size());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<int> stack;
  std::vector<std::vector<int>> comps;
  int counter = 0;

  // Iterative Tarjan: frames hold (vertex, next edge position).
  std::vector<std::pair<int, std::size_t>> frames;
  for (int s = 0; s < n; ++s) {
    if (index[s] != -1) continue;
    frames.emplace_back(s, 0);
    index[s] = low[s] = counter++;
    stack.push_back(s);
    on_stack[s] = 1;
    while (!frames.empty()) {
      auto& [v, pos] = frames.back();
      const auto& row = m.rows[static_cast<std::size_t>(v)];
      if (pos < row.size()) {
        auto [w, val] = row[pos++];
        if (val <= 0.0) continue;
        if (index[w] == -1) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          frames.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::vector<int> c;
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = static_cast<int>(comps.size());
          c.push_back(w);
        } while (w != v);
        std::sort(c.begin(), c.end());
        comps.push_back(std::move(c));
      }
      int finished = v;
      frames.pop_back();
      if (!frames.empty()) {
        int parent = frames.back().first;
        low[parent] = std::min(low[parent], low[finished]);
      }
    }
  }

  // Renumber classes by their smallest member so the output does not depend
  // on traversal order.
  std::vector<int> order(comps.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return comps[a].front() < comps[b].front(); });
  std::vector<int> renum(comps.size());
  ClassPartition out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    renum[order[k]] = static_cast<int>(k);
    out.classes.push_back(comps[order[k]]);
  }
  out.class_of.resize(n);
  for (int v = 0; v < n; ++v) out.class_of[v] = renum[comp[v]];
  for (int v = 0; v < n; ++v)
    for (const auto& [w, val] : m.rows[static_cast<std::size_t>(v)])
      if (val > 0.0 && out.class_of[v] != out.class_of[w]) out.reaches.emplace(out.class_of[v], out.class_of[w]);
  return out;
}

// Probability that a particle at window site i has exactly one child inside
// the site set `members` (given by a membership mask over window indices).
inline double prob_one_child_inside(const CompiledLaw& law, const std::vector<char>& inside) {
  auto in = [&](int t) { return !is_boundary_target(t) && inside[static_cast<std::size_t>(t)]; };
  if (!law.factored) {
    double p = 0.0;
    for (const auto& a : law.atoms) {
      int k = 0;
      for (const auto& [t, c] : a.offspring)
        if (in(t)) k += c;
      if (k == 1) p += a.prob;
    }
    return p;
  }
  double pin = 0.0;
  for (const auto& [t, w] : law.row)
    if (in(t)) pin += w;
  if (pin == 0.0) return 0.0;
  // sum_n rho(n) n pin (1-pin)^(n-1)
  if (law.count.is_geometric()) {
    double m = law.count.mean();
    double a = m / (1.0 + m);
    double r = 1.0 - a * (1.0 - pin);
    return (1.0 - a) * pin * a / (r * r);
  }
  double p = 0.0;
  const auto& pmf = law.count.pmf();
  for (std::size_t n = 1; n < pmf.size(); ++n)
    p += pmf[n] * static_cast<double>(n) * pin * std::pow(1.0 - pin, static_cast<double>(n - 1));
  return p;
}

// Per class: true iff some member can have a number of children inside the
// class different from one with positive probability.
inline std::vector<bool> assumption1_check(const TruncatedDomain& dom, const ClassPartition& parts) {
  std::vector<bool> out;
  std::vector<char> inside(dom.size(), 0);
  for (const auto& members : parts.classes) {
    for (int v : members) inside[static_cast<std::size_t>(v)] = 1;
    bool ok = false;
    for (int v : members)
      if (prob_one_child_inside(dom.laws[static_cast<std::size_t>(v)], inside) < 1.0 - kLawTolerance) {
        ok = true;
        break;
      }
    for (int v : members) inside[static_cast<std::size_t>(v)] = 0;
    out.push_back(ok);
  }
  return out;
}

inline std::vector<bool> assumption1_check(const TruncatedDomain& dom) {
  return assumption1_check(dom, irreducible_classes(moment_matrix(dom)));
}

}  // namespace brw
