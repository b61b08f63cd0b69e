#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "brwlab/errors.hpp"
#include "brwlab/site.hpp"

namespace brw {

inline constexpr double kLawTolerance = 1e-12;

// Offspring-count law on N: either a finite pmf or the geometric law with
// mean m, rho(i) = (1/(1+m)) (m/(1+m))^i. The geometric form is kept
// symbolic so its generating function stays closed-form.
class CountLaw {
 public:
  static CountLaw finite(std::vector<double> pmf) {
    CountLaw c;
    c.geometric_ = false;
    while (pmf.size() > 1 && pmf.back() == 0.0) pmf.pop_back();
    c.pmf_ = std::move(pmf);
    c.validate();
    return c;
  }
  static CountLaw geometric(double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean))
      throw ValidationError("geometric count law needs a finite mean >= 0, got " + std::to_string(mean));
    CountLaw c;
    c.geometric_ = true;
    c.mean_ = mean;
    if (mean == 0.0) {
      c.geometric_ = false;
      c.pmf_ = {1.0};
    }
    return c;
  }
  static CountLaw dirac(std::size_t n) {
    std::vector<double> pmf(n + 1, 0.0);
    pmf[n] = 1.0;
    return finite(std::move(pmf));
  }

  bool is_geometric() const { return geometric_; }
  const std::vector<double>& pmf() const { return pmf_; }

  double mean() const {
    if (geometric_) return mean_;
    double m = 0.0;
    for (std::size_t i = 0; i < pmf_.size(); ++i) m += static_cast<double>(i) * pmf_[i];
    return m;
  }

  double prob(std::size_t n) const {
    if (geometric_) {
      double a = mean_ / (1.0 + mean_);
      return std::pow(a, static_cast<double>(n)) / (1.0 + mean_);
    }
    return n < pmf_.size() ? pmf_[n] : 0.0;
  }

  // Largest n with positive mass, or npos for the geometric law.
  std::size_t max_support() const {
    if (geometric_) return static_cast<std::size_t>(-1);
    return pmf_.size() - 1;
  }

  // Probability generating function at s in [0,1].
  double pgf(double s) const {
    if (geometric_) return 1.0 / (1.0 + mean_ * (1.0 - s));
    double acc = 0.0;
    for (std::size_t i = pmf_.size(); i-- > 0;) acc = acc * s + pmf_[i];
    return acc;
  }

  // Same, evaluated from the complement u = 1 - s (better conditioned near s=1).
  double pgf_from_complement(double u) const {
    if (geometric_) return 1.0 / (1.0 + mean_ * u);
    return pgf(1.0 - u);
  }

  // P(N <= n).
  double cdf(std::size_t n) const {
    if (geometric_) {
      double a = mean_ / (1.0 + mean_);
      return 1.0 - std::pow(a, static_cast<double>(n + 1));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i <= n && i < pmf_.size(); ++i) acc += pmf_[i];
    return acc;
  }

  double pgf_derivative(double s) const {
    if (geometric_) {
      double d = 1.0 + mean_ * (1.0 - s);
      return mean_ / (d * d);
    }
    double acc = 0.0;
    for (std::size_t i = pmf_.size(); i-- > 1;) acc = acc * s + static_cast<double>(i) * pmf_[i];
    return acc;
  }

  // Smallest fixed point of the pgf on [0,1] (Galton-Watson extinction).
  // Newton from 0 increases monotonically to the root since pgf - id is
  // convex and decreasing on [0, q).
  double extinction_probability() const {
    if (geometric_) return mean_ <= 1.0 ? 1.0 : 1.0 / mean_;
    if (pmf_.size() == 2 && pmf_[1] == 1.0) return 0.0;
    if (mean() <= 1.0) return 1.0;
    if (pmf_[0] == 0.0) return 0.0;
    double q = 0.0;
    for (int it = 0; it < 200; ++it) {
      double f = pgf(q) - q;
      double df = pgf_derivative(q) - 1.0;
      if (df >= 0.0) break;
      double next = q - f / df;
      if (!(next > q)) break;
      q = next;
    }
    return q;
  }

  bool operator==(const CountLaw& o) const {
    if (geometric_ != o.geometric_) return false;
    if (geometric_) return std::abs(mean_ - o.mean_) <= kLawTolerance;
    if (pmf_.size() != o.pmf_.size()) return false;
    for (std::size_t i = 0; i < pmf_.size(); ++i)
      if (std::abs(pmf_[i] - o.pmf_[i]) > kLawTolerance) return false;
    return true;
  }

 private:
  void validate() const {
    if (pmf_.empty()) throw ValidationError("empty count pmf");
    double total = 0.0;
    for (double p : pmf_) {
      if (!(p >= 0.0) || p > 1.0) throw ValidationError("count pmf entry outside [0,1]");
      total += p;
    }
    if (std::abs(total - 1.0) > kLawTolerance)
      throw ValidationError("count pmf sums to " + std::to_string(total) + ", expected 1");
  }

  bool geometric_ = false;
  double mean_ = 0.0;
  std::vector<double> pmf_{1.0};
};

// One target of a dispersal row or an offspring map.
struct Placement {
  Site site;
  double weight = 0.0;
};

struct Atom {
  std::vector<std::pair<Site, int>> offspring;  // site -> number of children
  double prob = 0.0;

  int total() const {
    int n = 0;
    for (const auto& [s, k] : offspring) n += k;
    return n;
  }
};

// mu_x as an explicit finite list of offspring configurations.
struct GeneralLaw {
  std::vector<Atom> atoms;
};

// mu_x with independent diffusion: a count drawn from `count`, children
// placed independently according to the probability row `row`.
struct FactoredLaw {
  CountLaw count;
  std::vector<Placement> row;
};

using SiteLaw = std::variant<GeneralLaw, FactoredLaw>;

inline void validate_law(const SiteLaw& law, const std::string& where) {
  if (const auto* g = std::get_if<GeneralLaw>(&law)) {
    if (g->atoms.empty()) throw ValidationError(where + ": general law with no atoms");
    double total = 0.0;
    for (const auto& a : g->atoms) {
      if (!(a.prob >= 0.0) || a.prob > 1.0) throw ValidationError(where + ": atom probability outside [0,1]");
      for (const auto& [s, k] : a.offspring)
        if (k < 0) throw ValidationError(where + ": negative offspring count");
      total += a.prob;
    }
    if (std::abs(total - 1.0) > kLawTolerance)
      throw ValidationError(where + ": atom probabilities sum to " + std::to_string(total));
    return;
  }
  const auto& f = std::get<FactoredLaw>(law);
  if (f.count.mean() == 0.0 && f.row.empty()) return;
  double total = 0.0;
  for (const auto& p : f.row) {
    if (!(p.weight >= 0.0) || p.weight > 1.0) throw ValidationError(where + ": diffusion weight outside [0,1]");
    total += p.weight;
  }
  if (std::abs(total - 1.0) > kLawTolerance)
    throw ValidationError(where + ": diffusion row sums to " + std::to_string(total));
}

// Expected number of children sent to each target, m_{x,.}.
inline std::vector<Placement> moment_row(const SiteLaw& law) {
  std::vector<Placement> out;
  auto add = [&out](const Site& s, double w) {
    if (w == 0.0) return;
    for (auto& p : out)
      if (p.site == s) {
        p.weight += w;
        return;
      }
    out.push_back({s, w});
  };
  if (const auto* g = std::get_if<GeneralLaw>(&law)) {
    for (const auto& a : g->atoms)
      for (const auto& [s, k] : a.offspring) add(s, a.prob * k);
  } else {
    const auto& f = std::get<FactoredLaw>(law);
    double m = f.count.mean();
    for (const auto& p : f.row) add(p.site, m * p.weight);
  }
  return out;
}

// Probability of having no children at all.
inline double death_probability(const SiteLaw& law) {
  if (const auto* g = std::get_if<GeneralLaw>(&law)) {
    double p = 0.0;
    for (const auto& a : g->atoms)
      if (a.total() == 0) p += a.prob;
    return p;
  }
  return std::get<FactoredLaw>(law).count.prob(0);
}

}  // namespace brw
