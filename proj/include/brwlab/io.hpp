#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "brwlab/checks.hpp"
#include "brwlab/domain.hpp"
#include "brwlab/errors.hpp"
#include "brwlab/gallery.hpp"
#include "brwlab/genfun.hpp"
#include "brwlab/model.hpp"
#include "brwlab/montecarlo.hpp"
#include "brwlab/spectral.hpp"

namespace brw {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

struct LoadedModel {
  ModelPtr model;
  Site root;
  std::vector<std::string> notes;
  json source;  // the parsed description, kept for provenance and re-loading
};

namespace detail {

inline double number_at(const json& j, const std::string& where) {
  if (!j.is_number()) throw ValidationError(where + ": expected a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(where + ": non-finite number");
  return v;
}

inline std::string site_key(const json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<std::int64_t>());
  throw ValidationError(where + ": site names must be strings or integers");
}

// Site names are mapped to Site::at(position) with the name kept as label.
struct SiteTable {
  std::vector<Site> sites;
  std::map<std::string, Site> by_name;
  std::map<std::int64_t, std::string> names;

  const Site& lookup(const std::string& name, const std::string& where) const {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ValidationError(where + ": unknown site '" + name + "'");
    return it->second;
  }
};

inline SiteTable read_sites(const json& doc) {
  if (!doc.contains("sites") || !doc["sites"].is_array() || doc["sites"].empty())
    throw ValidationError("sites: expected a nonempty array");
  SiteTable t;
  const auto& arr = doc["sites"];
  for (std::size_t i = 0; i < arr.size(); ++i) {
    auto name = site_key(arr[i], "sites[" + std::to_string(i) + "]");
    if (t.by_name.count(name)) throw ValidationError("sites[" + std::to_string(i) + "]: duplicate site '" + name + "'");
    Site s = Site::at(static_cast<std::int64_t>(i));
    t.sites.push_back(s);
    t.by_name.emplace(name, s);
    t.names.emplace(static_cast<std::int64_t>(i), name);
  }
  return t;
}

inline const json& object_field(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_object()) throw ValidationError(std::string(key) + ": expected an object");
  return doc[key];
}

inline CountLaw read_count(const json& j, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  if (j.contains("geometric")) return CountLaw::geometric(number_at(j["geometric"], where + ".geometric"));
  if (!j.contains("pmf")) throw ValidationError(where + ": needs 'pmf' or 'geometric'");
  const auto& p = j["pmf"];
  std::vector<double> pmf;
  if (p.is_array()) {
    for (std::size_t n = 0; n < p.size(); ++n) pmf.push_back(number_at(p[n], where + ".pmf[" + std::to_string(n) + "]"));
  } else if (p.is_object()) {
    for (const auto& [k, v] : p.items()) {
      std::size_t n = 0;
      try {
        n = std::stoul(k);
      } catch (...) {
        throw ValidationError(where + ".pmf: key '" + k + "' is not a count");
      }
      if (pmf.size() <= n) pmf.resize(n + 1, 0.0);
      pmf[n] = number_at(v, where + ".pmf." + k);
    }
  } else {
    throw ValidationError(where + ".pmf: expected an array or object");
  }
  return CountLaw::finite(std::move(pmf));
}

inline std::vector<Placement> read_row(const json& j, const SiteTable& t, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object of site weights");
  std::vector<Placement> row;
  for (const auto& [k, v] : j.items()) row.push_back({t.lookup(k, where), number_at(v, where + "." + k)});
  return row;
}

inline ModelPtr finite_model(std::string name, const SiteTable& t, std::map<Site, SiteLaw> laws) {
  for (const auto& s : t.sites)
    if (!laws.count(s)) laws.emplace(s, SiteLaw{FactoredLaw{CountLaw::dirac(0), {}}});
  for (const auto& [s, law] : laws) validate_law(law, "laws." + t.names.at(s.coord[0]));
  auto shared = std::make_shared<std::map<Site, SiteLaw>>(std::move(laws));
  BrwModel m(std::move(name), t.sites.front(), [shared](const Site& x) -> SiteLaw {
    auto it = shared->find(x);
    if (it == shared->end()) throw DomainError("site " + x.str() + " is not part of the model");
    return it->second;
  });
  m.with_sites(t.sites).with_names(t.names);
  return std::make_shared<const BrwModel>(std::move(m));
}

}  // namespace detail

// Model file schema (see README): "kind" selects finite-general,
// finite-factored, continuous or gallery.
inline LoadedModel load_model_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("model: expected a JSON object");
  if (!doc.contains("kind") || !doc["kind"].is_string()) throw ValidationError("kind: expected a string");
  const std::string kind = doc["kind"].get<std::string>();
  LoadedModel out;
  out.source = doc;
  if (kind == "gallery") {
    if (!doc.contains("name") || !doc["name"].is_string()) throw ValidationError("name: expected a string");
    GalleryParams p;
    if (doc.contains("params")) {
      for (const auto& [k, v] : detail::object_field(doc, "params").items()) p[k] = detail::number_at(v, "params." + k);
    }
    auto g = make_gallery(doc["name"].get<std::string>(), p);
    out.model = g.model;
    out.root = g.root;
    out.notes = g.notes;
    return out;
  }
  if (kind != "finite-general" && kind != "finite-factored" && kind != "continuous")
    throw ValidationError("kind: unknown kind '" + kind + "'");
  auto t = detail::read_sites(doc);
  if (kind == "finite-general") {
    std::map<Site, SiteLaw> laws;
    for (const auto& [k, atoms] : detail::object_field(doc, "laws").items()) {
      const std::string where = "laws." + k;
      const Site& x = t.lookup(k, where);
      if (!atoms.is_array()) throw ValidationError(where + ": expected an array of atoms");
      GeneralLaw law;
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        const std::string aw = where + "[" + std::to_string(i) + "]";
        if (!atoms[i].is_object() || !atoms[i].contains("prob")) throw ValidationError(aw + ": atom needs 'prob'");
        Atom a;
        a.prob = detail::number_at(atoms[i]["prob"], aw + ".prob");
        if (atoms[i].contains("offspring")) {
          const auto& off = atoms[i]["offspring"];
          if (!off.is_object()) throw ValidationError(aw + ".offspring: expected an object");
          for (const auto& [y, n] : off.items()) {
            if (!n.is_number_integer() || n.get<long>() < 0)
              throw ValidationError(aw + ".offspring." + y + ": expected a nonnegative integer");
            if (n.get<long>() > 0) a.offspring.emplace_back(t.lookup(y, aw + ".offspring"), n.get<int>());
          }
        }
        law.atoms.push_back(std::move(a));
      }
      laws[x] = std::move(law);
    }
    out.model = detail::finite_model("finite-general", t, std::move(laws));
  } else if (kind == "finite-factored") {
    std::map<Site, SiteLaw> laws;
    for (const auto& [k, spec] : detail::object_field(doc, "laws").items()) {
      const std::string where = "laws." + k;
      const Site& x = t.lookup(k, where);
      if (!spec.is_object() || !spec.contains("count")) throw ValidationError(where + ": needs 'count'");
      FactoredLaw law{detail::read_count(spec["count"], where + ".count"), {}};
      if (spec.contains("row")) law.row = detail::read_row(spec["row"], t, where + ".row");
      laws[x] = std::move(law);
    }
    out.model = detail::finite_model("finite-factored", t, std::move(laws));
  } else if (kind == "continuous") {
    ContinuousSpec spec;
    spec.sites = t.sites;
    if (!doc.contains("lambda")) throw ValidationError("lambda: required for continuous models");
    spec.lambda = detail::number_at(doc["lambda"], "lambda");
    for (const auto& [k, row] : detail::object_field(doc, "rates").items())
      spec.rates[t.lookup(k, "rates." + k)] = detail::read_row(row, t, "rates." + k);
    if (doc.contains("death"))
      for (const auto& [k, v] : detail::object_field(doc, "death").items())
        spec.death[t.lookup(k, "death." + k)] = detail::number_at(v, "death." + k);
    BrwModel m = build_discrete_counterpart(spec);
    m.with_names(t.names);
    out.model = std::make_shared<const BrwModel>(std::move(m));
  } else {
    throw ValidationError("kind: unknown kind '" + kind + "'");
  }
  out.root = t.sites.front();
  return out;
}

inline LoadedModel load_model_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return load_model_json(doc);
}

inline LoadedModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return load_model_text(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

inline json gallery_source(const std::string& name, const GalleryParams& p) {
  json j{{"kind", "gallery"}, {"name", name}, {"params", json::object()}};
  for (const auto& [k, v] : p) j["params"][k] = v;
  return j;
}

// ---------------------------------------------------------------- metadata

inline json metadata(const std::string& command, const json& parameters) {
  return json{{"tool", "brwlab"}, {"version", kVersion}, {"command", command}, {"parameters", parameters}};
}

inline void write_csv_header(std::ostream& os, const json& meta) {
  os << "# brwlab " << kVersion << '\n';
  for (const auto& [k, v] : meta.items())
    if (k != "tool" && k != "version") os << "# " << k << ": " << v.dump() << '\n';
}

// ---------------------------------------------------------------- vectors

inline const char* policy_name(BoundaryPolicy p) {
  return p == BoundaryPolicy::OutsideExtinct ? "outside-extinct" : "outside-immortal";
}

inline BoundaryPolicy parse_policy(const std::string& s) {
  if (s == "outside-extinct" || s == "extinct") return BoundaryPolicy::OutsideExtinct;
  if (s == "outside-immortal" || s == "immortal") return BoundaryPolicy::OutsideImmortal;
  throw ValidationError("unknown boundary policy '" + s + "'");
}

inline Quantity parse_quantity(const std::string& s) {
  if (s == "global") return Quantity::GlobalExtinction;
  if (s == "never-visit") return Quantity::NeverVisit;
  if (s == "local") return Quantity::LocalExtinction;
  throw ValidationError("unknown quantity '" + s + "'");
}

// Sup-norm residual of one bracket side; never-visit pins A to 0.
inline double side_residual(const SiteVector& z, Quantity q, const TargetSet& a) {
  auto g = eval_G(z);
  double r = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double target = g[i];
    if (q == Quantity::NeverVisit && a.contains(z.domain->sites[i])) target = 0.0;
    r = std::max(r, std::abs(target - z[i]));
  }
  return r;
}

inline json target_json(const ModelPtr& m, const TargetSet& a) {
  if (a.all) return "ALL";
  json arr = json::array();
  for (const auto& s : a.sites) arr.push_back(m->label(s));
  return arr;
}

inline TargetSet parse_target(const ModelPtr& m, const json& j) {
  if (j.is_string() && j.get<std::string>() == "ALL") return TargetSet::everything();
  if (!j.is_array()) throw ValidationError("target: expected \"ALL\" or an array of sites");
  std::vector<Site> s;
  for (const auto& e : j) s.push_back(m->site_by_label(detail::site_key(e, "target")));
  return TargetSet::of(std::move(s));
}

inline json bracket_json(const ExtinctionBracket& b, const json& meta) {
  const auto& dom = *b.lower.domain;
  json j;
  j["meta"] = meta;
  j["quantity"] = to_string(b.quantity);
  j["target"] = target_json(dom.model, b.target);
  j["radius"] = b.radius;
  j["policy"] = policy_name(dom.policy);
  j["iterations"] = b.iterations;
  j["residual"] = b.residual;
  j["residual_lower"] = side_residual(b.lower, b.quantity, b.target);
  j["residual_upper"] = side_residual(b.upper, b.quantity, b.target);
  j["converged"] = b.converged;
  j["monotone"] = b.monotone;
  json sites = json::array(), lo = json::array(), hi = json::array();
  for (std::size_t i = 0; i < dom.size(); ++i) {
    sites.push_back(dom.model->label(dom.sites[i]));
    lo.push_back(b.lower[i]);
    hi.push_back(b.upper[i]);
  }
  json bs = json::array(), blo = json::array(), bhi = json::array();
  for (std::size_t k = 0; k < dom.boundary.size(); ++k) {
    bs.push_back(dom.model->label(dom.boundary[k]));
    blo.push_back(b.lower.outside(k));
    bhi.push_back(b.upper.outside(k));
  }
  j["sites"] = sites;
  j["lower"] = lo;
  j["upper"] = hi;
  j["boundary_sites"] = bs;
  j["boundary_lower"] = blo;
  j["boundary_upper"] = bhi;
  return j;
}

// Columns: site,lower,upper in breadth-first window order.
inline void write_bracket_csv(std::ostream& os, const ExtinctionBracket& b, const json& meta) {
  json m = meta;
  m["quantity"] = to_string(b.quantity);
  m["radius"] = b.radius;
  m["iterations"] = b.iterations;
  m["residual"] = b.residual;
  m["converged"] = b.converged;
  write_csv_header(os, m);
  os << "site,lower,upper\n";
  os.precision(17);
  const auto& dom = *b.lower.domain;
  for (std::size_t i = 0; i < dom.size(); ++i)
    os << dom.model->label(dom.sites[i]) << ',' << b.lower[i] << ',' << b.upper[i] << '\n';
}

struct VectorCheck {
  double residual_lower = 0.0, residual_upper = 0.0;
  double reported_lower = 0.0, reported_upper = 0.0;
  bool exact() const { return residual_lower == reported_lower && residual_upper == reported_upper; }
};

// Rebuilds the window from the embedded model source and recomputes both
// side residuals from the stored values.
inline VectorCheck verify_bracket_json(const json& j) {
  try {
    const auto& meta = j.at("meta");
    auto loaded = load_model_json(meta.at("parameters").at("model"));
    auto dom = truncate(loaded.model, loaded.root, j.at("radius").get<int>(), parse_policy(j.at("policy").get<std::string>()));
    auto a = parse_target(loaded.model, j.at("target"));
    auto q = parse_quantity(j.at("quantity").get<std::string>());
    const auto& sites = j.at("sites");
    if (sites.size() != dom->size() || j.at("boundary_sites").size() != dom->boundary.size())
      throw ValidationError("vector does not match the rebuilt window");
    for (std::size_t i = 0; i < dom->size(); ++i)
      if (sites[i].get<std::string>() != dom->model->label(dom->sites[i]))
        throw ValidationError("site order differs at position " + std::to_string(i));
    auto side = [&](const char* v, const char* bv) {
      return detail::wrap(dom, j.at(v).get<std::vector<double>>(), j.at(bv).get<std::vector<double>>());
    };
    VectorCheck c;
    c.residual_lower = side_residual(side("lower", "boundary_lower"), q, a);
    c.residual_upper = side_residual(side("upper", "boundary_upper"), q, a);
    c.reported_lower = j.at("residual_lower").get<double>();
    c.reported_upper = j.at("residual_upper").get<double>();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("vector file: ") + e.what());
  }
}

// ---------------------------------------------------------------- results

inline json estimate_json(const EstimateCI& e) {
  return json{{"event", e.event},           {"point", e.point},
              {"stderr", e.stderr_},        {"trials", e.trials},
              {"hits", e.hits},             {"capped_trials", e.capped_trials},
              {"seed", e.seed},             {"horizon", e.horizon},
              {"point_2h", e.point_2h},     {"horizon_bias", e.horizon_bias}};
}

inline json report_json(const CheckReport& r) {
  json w = json::array();
  for (const auto& x : r.witnesses) {
    json v = json::object();
    for (const auto& [k, val] : x.values) v[k] = val;
    w.push_back(json{{"site", x.site}, {"values", v}});
  }
  return json{{"name", r.name},         {"status", to_string(r.status)}, {"verdict", r.verdict},
              {"tolerance", r.tolerance}, {"detail", r.detail},            {"witnesses", w}};
}

inline json growth_json(const GrowthEstimate& g) {
  return json{{"value", g.value}, {"period", g.period}, {"oscillation", g.oscillation}, {"converged", g.converged},
              {"length", g.sequence.size()}};
}

inline json critical_json(const CriticalParams& c) {
  return json{{"K_s", c.K_s},
              {"K_w", c.K_w},
              {"lambda_s", c.lambda_s},
              {"lambda_w_lower", c.lambda_w_lower},
              {"margin", c.margin},
              {"pure_global_indicator", to_string(c.pure_global_indicator)},
              {"diag", growth_json(c.diag)},
              {"rowsum", growth_json(c.rowsum)}};
}

// Writes through a sibling temporary so a failed run leaves no partial file.
inline void write_file_atomically(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << content;
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      throw ValidationError("write failed for '" + path + "'");
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw ValidationError("cannot move output into '" + path + "'");
  }
}

}  // namespace brw
