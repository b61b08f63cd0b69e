#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "brwlab/domain.hpp"

namespace brw {

// Pushforward of a window law through a finite labeling, in canonical form.
struct LabelLaw {
  bool factored = false;
  CountLaw count = CountLaw::dirac(0);
  std::vector<double> row;  // per label
  // General form: sorted atoms, each a per-label count vector.
  std::vector<std::pair<std::vector<int>, double>> atoms;
};

namespace detail {

inline void canonicalize(std::vector<std::pair<std::vector<int>, double>>& atoms) {
  std::sort(atoms.begin(), atoms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<std::vector<int>, double>> merged;
  for (auto& a : atoms) {
    if (a.second == 0.0) continue;
    if (!merged.empty() && merged.back().first == a.first)
      merged.back().second += a.second;
    else
      merged.push_back(std::move(a));
  }
  atoms = std::move(merged);
}

// Multinomial expansion of a finite-count factored law over labels.
inline std::vector<std::pair<std::vector<int>, double>> expand_factored(const LabelLaw& law) {
  std::vector<std::pair<std::vector<int>, double>> out;
  const std::size_t L = law.row.size();
  const auto& pmf = law.count.pmf();
  for (std::size_t n = 0; n < pmf.size(); ++n) {
    if (pmf[n] == 0.0) continue;
    std::vector<int> counts(L, 0);
    std::function<void(std::size_t, int, double)> rec = [&](std::size_t l, int left, double coef) {
      if (l + 1 == L || L == 0) {
        if (L == 0) {
          if (left == 0) out.emplace_back(counts, pmf[n] * coef);
          return;
        }
        counts[l] = left;
        out.emplace_back(counts, pmf[n] * coef * std::pow(law.row[l], left) / std::tgamma(left + 1.0));
        counts[l] = 0;
        return;
      }
      for (int k = 0; k <= left; ++k) {
        counts[l] = k;
        rec(l + 1, left - k, coef * std::pow(law.row[l], k) / std::tgamma(k + 1.0));
      }
      counts[l] = 0;
    };
    rec(0, static_cast<int>(n), std::tgamma(static_cast<double>(n) + 1.0));
  }
  canonicalize(out);
  return out;
}

inline bool same_atoms(const std::vector<std::pair<std::vector<int>, double>>& a,
                       const std::vector<std::pair<std::vector<int>, double>>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].first != b[i].first) return false;
    if (std::abs(a[i].second - b[i].second) > kLawTolerance) return false;
  }
  return true;
}

inline bool same_law(const LabelLaw& a, const LabelLaw& b) {
  if (a.factored && b.factored) {
    if (!(a.count == b.count)) return false;
    if (a.count.mean() == 0.0) return true;
    for (std::size_t l = 0; l < a.row.size(); ++l)
      if (std::abs(a.row[l] - b.row[l]) > kLawTolerance) return false;
    return true;
  }
  auto atoms_of = [](const LabelLaw& x) {
    if (!x.factored) return x.atoms;
    if (x.count.is_geometric()) return std::vector<std::pair<std::vector<int>, double>>{};
    return expand_factored(x);
  };
  if ((a.factored && a.count.is_geometric()) || (b.factored && b.count.is_geometric())) return false;
  return same_atoms(atoms_of(a), atoms_of(b));
}

}  // namespace detail

struct ProjectionResult {
  std::shared_ptr<const BrwModel> model;  // BRW on the label set
  bool valid = false;
  std::vector<int> label_of_site;         // per window site
  std::vector<std::string> mismatches;    // sites whose pushforward disagrees
};

// Pushforward of the window laws through a labeling onto a declared finite
// label set. Valid iff every site sharing a label yields the same law.
inline ProjectionResult project_via_map(const TruncatedDomain& dom, const std::vector<std::string>& labels,
                                        const std::function<std::string(const Site&)>& g) {
  if (labels.empty()) throw ValidationError("empty label set");
  std::map<std::string, int> lid;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (!lid.emplace(labels[i], static_cast<int>(i)).second) throw ValidationError("duplicate label " + labels[i]);
  auto label_index = [&](const Site& s) {
    auto name = g(s);
    auto it = lid.find(name);
    if (it == lid.end())
      throw ValidationError("labeling maps " + s.str() + " to '" + name + "', outside the declared finite label set");
    return it->second;
  };
  const std::size_t L = labels.size();
  std::vector<int> window_label(dom.size());
  std::vector<int> boundary_label(dom.boundary.size());
  for (std::size_t i = 0; i < dom.size(); ++i) window_label[i] = label_index(dom.sites[i]);
  for (std::size_t b = 0; b < dom.boundary.size(); ++b) boundary_label[b] = label_index(dom.boundary[b]);
  auto lab = [&](int t) {
    return is_boundary_target(t) ? boundary_label[static_cast<std::size_t>(boundary_slot(t))]
                                 : window_label[static_cast<std::size_t>(t)];
  };

  std::vector<std::optional<LabelLaw>> chosen(L);
  ProjectionResult out;
  out.valid = true;
  out.label_of_site = window_label;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    const auto& law = dom.laws[i];
    LabelLaw pf;
    pf.factored = law.factored;
    if (law.factored) {
      pf.count = law.count;
      pf.row.assign(L, 0.0);
      for (const auto& [t, w] : law.row) pf.row[static_cast<std::size_t>(lab(t))] += w;
    } else {
      for (const auto& a : law.atoms) {
        std::vector<int> counts(L, 0);
        for (const auto& [t, k] : a.offspring) counts[static_cast<std::size_t>(lab(t))] += k;
        pf.atoms.emplace_back(std::move(counts), a.prob);
      }
      detail::canonicalize(pf.atoms);
    }
    auto& slot = chosen[static_cast<std::size_t>(window_label[i])];
    if (!slot) {
      slot = std::move(pf);
    } else if (!detail::same_law(*slot, pf)) {
      out.valid = false;
      out.mismatches.push_back(dom.model ? dom.model->label(dom.sites[i]) : dom.sites[i].str());
    }
  }

  auto laws = std::make_shared<std::vector<SiteLaw>>(L);
  std::vector<Site> sites;
  std::map<std::int64_t, std::string> names;
  for (std::size_t l = 0; l < L; ++l) {
    sites.push_back(Site::at(static_cast<std::int64_t>(l)));
    names[static_cast<std::int64_t>(l)] = labels[l];
    if (!chosen[l]) {
      (*laws)[l] = FactoredLaw{CountLaw::dirac(0), {}};
      continue;
    }
    const auto& pf = *chosen[l];
    if (pf.factored) {
      FactoredLaw f{pf.count, {}};
      for (std::size_t k = 0; k < L; ++k)
        if (pf.row[k] > 0.0) f.row.push_back({Site::at(static_cast<std::int64_t>(k)), pf.row[k]});
      (*laws)[l] = std::move(f);
    } else {
      GeneralLaw gl;
      for (const auto& [counts, p] : pf.atoms) {
        Atom a;
        a.prob = p;
        for (std::size_t k = 0; k < L; ++k)
          if (counts[k] > 0) a.offspring.emplace_back(Site::at(static_cast<std::int64_t>(k)), counts[k]);
        gl.atoms.push_back(std::move(a));
      }
      (*laws)[l] = std::move(gl);
    }
  }
  BrwModel label_model("projection", Site::at(window_label.empty() ? 0 : window_label[0]),
                       [laws](const Site& s) -> SiteLaw { return (*laws)[static_cast<std::size_t>(s.coord.at(0))]; });
  label_model.with_sites(sites).with_names(names);
  out.model = std::make_shared<const BrwModel>(std::move(label_model));
  return out;
}

}  // namespace brw
