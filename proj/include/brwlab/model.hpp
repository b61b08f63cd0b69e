#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "brwlab/errors.hpp"
#include "brwlab/laws.hpp"
#include "brwlab/site.hpp"

namespace brw {

// Target set A for local quantities; `all` stands for A = X.
struct TargetSet {
  bool all = false;
  std::vector<Site> sites;

  static TargetSet everything() { return {true, {}}; }
  static TargetSet of(std::vector<Site> s) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return {false, std::move(s)};
  }
  bool contains(const Site& s) const {
    return all || std::binary_search(sites.begin(), sites.end(), s);
  }
};

enum class Quantity { GlobalExtinction, NeverVisit, LocalExtinction };

inline const char* to_string(Quantity q) {
  switch (q) {
    case Quantity::GlobalExtinction: return "global";
    case Quantity::NeverVisit: return "never-visit";
    case Quantity::LocalExtinction: return "local";
  }
  return "?";
}

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

// A priori bounds on a quantity at a site outside a truncation window. The
// defaults [0,1] reproduce the OutsideImmortal / OutsideExtinct policies;
// gallery models tighten them where a comparison argument gives rigorous
// values (e.g. q-bar equals the Galton-Watson root on models locally
// isomorphic to a branching process).
using BoundaryHint = std::function<Interval(Quantity, const TargetSet&, const Site&)>;

// Continuous-time rates: for each site the row of k_xy, plus lambda and the
// death rate d(x).
struct ContinuousFamily {
  std::function<std::vector<Placement>(const Site&)> rates;
  double lambda = 1.0;
  std::function<double(const Site&)> death = [](const Site&) { return 1.0; };
};

// Finite continuous-time specification as read from a model file.
struct ContinuousSpec {
  std::vector<Site> sites;
  std::map<Site, std::vector<Placement>> rates;
  double lambda = 1.0;
  std::map<Site, double> death;  // missing sites default to 1
};

// Distance-from-root projection of T_d (optionally with a loop at the root).
struct TreeSymmetry {
  int degree = 3;
  double loop_rate = 0.0;
};

// The couple (X, mu): a root, a per-site law, and the optional structure
// downstream solvers exploit. Immutable once built.
class BrwModel {
 public:
  using LawFn = std::function<SiteLaw(const Site&)>;

  BrwModel(std::string name, Site root, LawFn law) : name_(std::move(name)), root_(std::move(root)), law_(std::move(law)) {}

  const std::string& name() const { return name_; }
  const Site& root() const { return root_; }
  SiteLaw law(const Site& x) const { return law_(x); }

  // Finite models list every site; generator-backed models return nullopt.
  const std::optional<std::vector<Site>>& finite_sites() const { return finite_sites_; }
  bool is_finite() const { return finite_sites_.has_value(); }

  std::string label(const Site& s) const {
    if (!names_.empty() && s.coord.size() == 1) {
      auto it = names_.find(s.coord[0]);
      if (it != names_.end()) return it->second;
    }
    return s.str();
  }
  Site site_by_label(const std::string& text) const {
    for (const auto& [i, n] : names_)
      if (n == text) return Site::at(i);
    return Site::parse(text);
  }

  const std::optional<ContinuousFamily>& continuous() const { return continuous_; }
  const std::optional<TreeSymmetry>& tree_symmetry() const { return tree_; }
  // Count law of the branching process this model is locally isomorphic to
  // through the constant labeling, when declared.
  const std::optional<CountLaw>& branching_isomorph() const { return branching_; }
  std::optional<bool> declared_irreducible() const { return irreducible_; }

  Interval boundary_bound(Quantity q, const TargetSet& a, const Site& outside) const {
    if (!hint_) return {};
    Interval iv = hint_(q, a, outside);
    iv.lo = std::clamp(iv.lo, 0.0, 1.0);
    iv.hi = std::clamp(iv.hi, iv.lo, 1.0);
    return iv;
  }
  bool has_boundary_hint() const { return static_cast<bool>(hint_); }

  // Builder-style setters used by constructors.
  BrwModel& with_sites(std::vector<Site> sites) {
    finite_sites_ = std::move(sites);
    return *this;
  }
  BrwModel& with_names(std::map<std::int64_t, std::string> names) {
    names_ = std::move(names);
    return *this;
  }
  BrwModel& with_continuous(ContinuousFamily c) {
    continuous_ = std::move(c);
    return *this;
  }
  BrwModel& with_tree_symmetry(TreeSymmetry t) {
    tree_ = t;
    return *this;
  }
  BrwModel& with_branching_isomorph(CountLaw c) {
    branching_ = std::move(c);
    return *this;
  }
  BrwModel& with_irreducible(bool flag) {
    irreducible_ = flag;
    return *this;
  }
  BrwModel& with_boundary_hint(BoundaryHint h) {
    hint_ = std::move(h);
    return *this;
  }
  BrwModel& with_name(std::string n) {
    name_ = std::move(n);
    return *this;
  }

 private:
  std::string name_;
  Site root_;
  LawFn law_;
  std::optional<std::vector<Site>> finite_sites_;
  std::map<std::int64_t, std::string> names_;
  std::optional<ContinuousFamily> continuous_;
  std::optional<TreeSymmetry> tree_;
  std::optional<CountLaw> branching_;
  std::optional<bool> irreducible_;
  BoundaryHint hint_;
};

using ModelPtr = std::shared_ptr<const BrwModel>;

// Law of the discrete-time counterpart at one site: geometric count with mean
// lambda k(x)/d(x), children dispersed by k_xy/k(x).
inline FactoredLaw counterpart_law(const std::vector<Placement>& rates, double lambda, double death) {
  if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
  if (!(death > 0.0)) throw ValidationError("death rate must be positive");
  double k = 0.0;
  for (const auto& r : rates) {
    if (!(r.weight >= 0.0) || !std::isfinite(r.weight)) throw ValidationError("negative or non-finite rate");
    k += r.weight;
  }
  FactoredLaw law{CountLaw::dirac(0), {}};
  if (k == 0.0) return law;
  law.count = CountLaw::geometric(lambda * k / death);
  for (const auto& r : rates)
    if (r.weight > 0.0) law.row.push_back({r.site, r.weight / k});
  return law;
}

// Generator-backed counterpart for a continuous family.
inline BrwModel counterpart_model(std::string name, Site root, ContinuousFamily fam) {
  if (!(fam.lambda > 0.0)) throw ValidationError("lambda must be positive");
  auto rates = fam.rates;
  auto death = fam.death;
  double lambda = fam.lambda;
  BrwModel m(std::move(name), std::move(root),
             [rates, death, lambda](const Site& x) -> SiteLaw { return counterpart_law(rates(x), lambda, death(x)); });
  m.with_continuous(std::move(fam));
  return m;
}

// Discrete-time counterpart of a finite continuous-time specification.
inline BrwModel build_discrete_counterpart(const ContinuousSpec& spec) {
  if (!(spec.lambda > 0.0)) throw ValidationError("lambda must be positive, got " + std::to_string(spec.lambda));
  if (spec.sites.empty()) throw ValidationError("continuous spec has no sites");
  for (const auto& [x, row] : spec.rates)
    for (const auto& r : row)
      if (!(r.weight >= 0.0)) throw ValidationError("negative rate at " + x.str());
  for (const auto& [x, d] : spec.death)
    if (!(d > 0.0)) throw ValidationError("non-positive death rate at " + x.str());
  auto shared = std::make_shared<ContinuousSpec>(spec);
  ContinuousFamily fam;
  fam.lambda = spec.lambda;
  fam.rates = [shared](const Site& x) {
    auto it = shared->rates.find(x);
    return it == shared->rates.end() ? std::vector<Placement>{} : it->second;
  };
  fam.death = [shared](const Site& x) {
    auto it = shared->death.find(x);
    return it == shared->death.end() ? 1.0 : it->second;
  };
  BrwModel m = counterpart_model("continuous", spec.sites.front(), std::move(fam));
  m.with_sites(spec.sites);
  return m;
}

}  // namespace brw
