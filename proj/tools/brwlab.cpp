// brwlab command-line front end.
//
// Exit codes: 0 success, 1 malformed input or I/O failure, 2 a check failed,
// 3 undecided verdict or unconverged solver (artifacts are still written).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "brwlab/acceptance.hpp"
#include "brwlab/brwlab.hpp"

namespace {

using brw::json;

constexpr int kOk = 0, kBadInput = 1, kCheckFailed = 2, kUndecided = 3;

struct ModelArgs {
  std::string file;
  std::string gallery;
  std::vector<std::string> params;
};

struct WindowArgs {
  int radius = 10;
  std::string policy = "outside-extinct";
};

struct OutputArgs {
  std::string out;
  std::string format = "json";
};

void add_model_options(CLI::App* cmd, ModelArgs& m) {
  auto* f = cmd->add_option("--model", m.file, "Model file (JSON)");
  auto* g = cmd->add_option("--gallery", m.gallery, "Built-in model name");
  f->excludes(g);
  cmd->add_option("--param", m.params, "Gallery parameter key=value (repeatable)");
}

void add_window_options(CLI::App* cmd, WindowArgs& w) {
  cmd->add_option("--radius", w.radius, "Truncation radius around the root")->check(CLI::NonNegativeNumber);
  cmd->add_option("--policy", w.policy, "Boundary policy")->check(CLI::IsMember({"outside-extinct", "outside-immortal"}));
}

void add_output_options(CLI::App* cmd, OutputArgs& o, bool csv_allowed = true) {
  cmd->add_option("--out", o.out, "Output path (default: stdout)");
  if (csv_allowed) cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
}

brw::GalleryParams parse_params(const std::vector<std::string>& kv) {
  brw::GalleryParams p;
  for (const auto& s : kv) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw brw::ValidationError("parameter '" + s + "' is not key=value");
    try {
      p[s.substr(0, eq)] = std::stod(s.substr(eq + 1));
    } catch (const std::exception&) {
      throw brw::ValidationError("parameter '" + s + "' has a non-numeric value");
    }
  }
  return p;
}

brw::LoadedModel resolve(const ModelArgs& m) {
  if (!m.file.empty()) return brw::load_model_file(m.file);
  if (!m.gallery.empty()) return brw::load_model_json(brw::gallery_source(m.gallery, parse_params(m.params)));
  throw brw::ValidationError("give --model FILE or --gallery NAME");
}

brw::DomainPtr window(const brw::LoadedModel& lm, const WindowArgs& w) {
  auto policy = brw::parse_policy(w.policy);
  if (lm.model->is_finite()) return brw::full_domain(lm.model, policy);
  return brw::truncate(lm.model, lm.root, w.radius, policy);
}

std::vector<brw::Site> parse_sites(const brw::ModelPtr& model, const std::string& list) {
  std::vector<brw::Site> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(model->site_by_label(item));
  if (out.empty()) throw brw::ValidationError("empty site list");
  return out;
}

brw::TargetSet parse_target(const brw::LoadedModel& lm, const std::string& text) {
  if (text.empty()) return brw::TargetSet::of({lm.root});
  if (text == "ALL") return brw::TargetSet::everything();
  return brw::TargetSet::of(parse_sites(lm.model, text));
}

void emit(const OutputArgs& o, const std::string& content) {
  if (o.out.empty()) {
    std::cout << content;
    std::cout.flush();
  } else {
    brw::write_file_atomically(o.out, content);
  }
}

json common_params(const brw::LoadedModel& lm, const WindowArgs& w) {
  return json{{"model", lm.source}, {"radius", w.radius}, {"policy", w.policy}};
}

// ------------------------------------------------------------------ solve

struct SolveArgs {
  ModelArgs model;
  WindowArgs win;
  OutputArgs out;
  std::string quantity = "global";
  std::string target;
  double tol = 1e-10;
  long max_iter = 1'000'000;
};

int run_solve(const SolveArgs& a) {
  auto lm = resolve(a.model);
  auto dom = window(lm, a.win);
  brw::SolverOptions opt{a.tol, a.max_iter};
  auto q = brw::parse_quantity(a.quantity);
  auto target = q == brw::Quantity::GlobalExtinction ? brw::TargetSet::everything() : parse_target(lm, a.target);
  brw::ExtinctionBracket b;
  if (q == brw::Quantity::GlobalExtinction) b = brw::solve_global_extinction(dom, opt);
  else if (q == brw::Quantity::NeverVisit) b = brw::solve_never_visit(dom, target, opt);
  else b = brw::solve_local_extinction(dom, target, opt);

  json params = common_params(lm, a.win);
  params["radius"] = b.radius;
  params["quantity"] = a.quantity;
  params["tol"] = a.tol;
  params["max_iter"] = a.max_iter;
  auto meta = brw::metadata("solve", params);
  std::ostringstream os;
  if (a.out.format == "csv") brw::write_bracket_csv(os, b, meta);
  else os << brw::bracket_json(b, meta).dump(2) << '\n';
  emit(a.out, os.str());
  if (!b.converged) {
    std::cerr << "solver did not converge within " << a.max_iter << " iterations\n";
    return kUndecided;
  }
  return kOk;
}

// ------------------------------------------------------------------ verify

int run_verify(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw brw::ValidationError("cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw brw::ValidationError(path + ": malformed JSON at byte " + std::to_string(e.byte));
  }
  auto c = brw::verify_bracket_json(j);
  std::cout.precision(17);
  std::cout << "residual lower " << c.residual_lower << " (reported " << c.reported_lower << ")\n"
            << "residual upper " << c.residual_upper << " (reported " << c.reported_upper << ")\n"
            << (c.exact() ? "reproduced exactly\n" : "MISMATCH\n");
  return c.exact() ? kOk : kCheckFailed;
}

// ------------------------------------------------------------------ spectral

struct SpectralArgs {
  ModelArgs model;
  WindowArgs win;
  OutputArgs out;
  std::string site;
  int n_max = 200;
};

int run_spectral(const SpectralArgs& a) {
  auto lm = resolve(a.model);
  auto dom = window(lm, a.win);
  const brw::Site x = a.site.empty() ? lm.root : lm.model->site_by_label(a.site);
  auto diag = brw::growth_sequence(*dom, x, x, a.n_max);
  auto rows = brw::growth_sequence(*dom, x, std::nullopt, a.n_max);
  json params = common_params(lm, a.win);
  params["site"] = lm.model->label(x);
  params["n_max"] = a.n_max;
  auto meta = brw::metadata("spectral", params);
  std::ostringstream os;
  if (a.out.format == "csv") {
    brw::write_csv_header(os, meta);
    os << "n,diag,rowsum\n";
    os.precision(17);
    for (std::size_t i = 0; i < diag.sequence.size(); ++i)
      os << diag.sequence[i].first << ',' << diag.sequence[i].second << ',' << rows.sequence[i].second << '\n';
  } else {
    json j{{"meta", meta}, {"diag", brw::growth_json(diag)}, {"rowsum", brw::growth_json(rows)}};
    if (lm.model->continuous()) j["critical"] = brw::critical_json(brw::critical_params(*dom, x, a.n_max));
    if (lm.model->is_finite()) j["perron_root"] = brw::perron_root(brw::moment_matrix(*dom)).value;
    os << j.dump(2) << '\n';
  }
  emit(a.out, os.str());
  return diag.converged && rows.converged ? kOk : kUndecided;
}

// ------------------------------------------------------------------ simulate

struct SimulateArgs {
  ModelArgs model;
  OutputArgs out;
  std::string start;
  std::vector<std::string> events;
  std::int64_t trials = 10'000;
  int horizon = 100;
  std::int64_t cap = 1'000'000;
  std::uint64_t seed = 1;
  int radius = -1;
  std::string policy = "outside-extinct";
};

// global | local:A:g | never:A | escape:A:g, with A a comma list of sites.
brw::Event parse_event(const brw::ModelPtr& model, const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  auto gen = [&](std::size_t i) {
    try {
      return std::stoi(parts.at(i));
    } catch (const std::exception&) {
      throw brw::ValidationError("event '" + text + "': missing or bad generation");
    }
  };
  if (parts.size() == 1 && parts[0] == "global") return brw::Event::global();
  if (parts.size() == 3 && parts[0] == "local") return brw::Event::local(parse_sites(model, parts[1]), gen(2));
  if (parts.size() == 2 && parts[0] == "never") return brw::Event::never_visit(parse_sites(model, parts[1]));
  if (parts.size() == 3 && parts[0] == "escape") return brw::Event::escape(parse_sites(model, parts[1]), gen(2));
  throw brw::ValidationError("cannot parse event '" + text + "'");
}

int run_simulate(const SimulateArgs& a) {
  auto lm = resolve(a.model);
  WindowArgs w{a.radius < 0 ? 2 * a.horizon + 2 : a.radius, a.policy};
  auto dom = window(lm, w);
  const brw::Site start = a.start.empty() ? lm.root : lm.model->site_by_label(a.start);
  std::vector<brw::Event> events;
  for (const auto& e : a.events) events.push_back(parse_event(lm.model, e));
  if (events.empty()) events.push_back(brw::Event::global());
  brw::SimulationOptions opt;
  opt.trials = a.trials;
  opt.horizon = a.horizon;
  opt.cap = a.cap;
  opt.seed = a.seed;
  auto est = brw::estimate(*dom, start, events, opt);
  json params = common_params(lm, w);
  params.update(json{{"start", lm.model->label(start)}, {"trials", a.trials}, {"horizon", a.horizon}, {"cap", a.cap},
                     {"seed", a.seed}, {"events", a.events}});
  auto meta = brw::metadata("simulate", params);
  std::ostringstream os;
  if (a.out.format == "csv") {
    brw::write_csv_header(os, meta);
    os << "event,point,stderr,trials,hits,capped_trials,seed,horizon,point_2h,horizon_bias\n";
    os.precision(17);
    for (const auto& e : est)
      os << e.event << ',' << e.point << ',' << e.stderr_ << ',' << e.trials << ',' << e.hits << ',' << e.capped_trials
         << ',' << e.seed << ',' << e.horizon << ',' << e.point_2h << ',' << (e.horizon_bias ? "true" : "false") << '\n';
  } else {
    json arr = json::array();
    for (const auto& e : est) arr.push_back(brw::estimate_json(e));
    os << json{{"meta", meta}, {"estimates", arr}}.dump(2) << '\n';
  }
  emit(a.out, os.str());
  return kOk;
}

// ------------------------------------------------------------------ check

struct CheckArgs {
  ModelArgs model;
  WindowArgs win;
  OutputArgs out;
  std::string target;
  double tol = brw::kCheckTolerance;
  int probes = 20;
  std::uint64_t seed = 1;
};

int aggregate(const std::vector<brw::CheckReport>& reports) {
  int code = kOk;
  for (const auto& r : reports) {
    if (r.status == brw::Status::Fail) return kCheckFailed;
    if (r.status == brw::Status::Undecided) code = kUndecided;
  }
  return code;
}

std::vector<brw::CheckReport> check_suite(const brw::LoadedModel& lm, const brw::DomainPtr& dom, const brw::TargetSet& a,
                                          double tol, int probes, std::uint64_t seed) {
  std::vector<brw::CheckReport> out;
  brw::SolverOptions opt{std::min(1e-12, tol * 1e-2), 1'000'000};
  auto slt = brw::strong_local_test(dom, a, tol, opt);
  out.push_back(slt.report);
  out.push_back(brw::max_principle_check(slt.qbar.lower, slt.qbar.lower, tol));
  out.back().name = "max_principle(qbar)";
  if (!a.all) {
    auto ql = brw::solve_local_extinction(dom, a, opt);
    out.push_back(brw::max_principle_check(ql.lower, slt.qbar.lower, tol));
    out.back().name = "max_principle(q)";
  }
  if (lm.model->is_finite()) out.push_back(brw::finite_two_fixed_points(lm.model, probes, seed, tol));
  else if (!a.all && dom->radius >= 2)
    out.push_back(brw::sup_trend(lm.model, lm.root, a, {dom->radius / 2, dom->radius}, dom->policy, tol));
  if (lm.source.value("kind", "") == "gallery" && lm.source.value("name", "") == "spataru" && !a.all) {
    // The recursion output is itself the witness v.
    const auto& p = lm.source["params"];
    auto sched = p.value("schedule", 0.0) != 0.0 ? brw::ThetaSchedule::to_one()
                                                 : brw::ThetaSchedule::constant(p.value("theta", 0.5));
    auto sp = brw::spataru_recursion(p.value("z0", 0.5), sched,
                                     static_cast<int>(p.value("n_max", static_cast<double>(sched.default_n_max()))));
    std::vector<double> v(dom->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = sp.z[static_cast<std::size_t>(dom->sites[i].coord[0])];
    out.push_back(brw::mv_witness_verify(brw::SiteVector::from(dom, v), slt.qbar.lower, a, {}, tol));
  }
  return out;
}

int run_check(const CheckArgs& c) {
  auto lm = resolve(c.model);
  auto dom = window(lm, c.win);
  auto reports = check_suite(lm, dom, parse_target(lm, c.target), c.tol, c.probes, c.seed);
  json params = common_params(lm, c.win);
  params.update(json{{"tol", c.tol}, {"seed", c.seed}});
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(brw::report_json(r));
  emit(c.out, json{{"meta", brw::metadata("check", params)}, {"reports", arr}}.dump(2) + "\n");
  return aggregate(reports);
}

// ------------------------------------------------------------------ gallery

int run_gallery(const std::string& name, const std::vector<std::string>& extras, const WindowArgs& w, const OutputArgs& o) {
  brw::GalleryParams p;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string key = extras[i];
    if (key.rfind("--", 0) != 0) throw brw::ValidationError("unexpected argument '" + key + "'");
    key = key.substr(2);
    std::string value;
    if (auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) throw brw::ValidationError("missing value for --" + key);
      value = extras[++i];
    }
    p[key] = parse_params({key + "=" + value}).at(key);
  }
  auto lm = brw::load_model_json(brw::gallery_source(name, p));
  auto dom = window(lm, w);
  const auto a = brw::TargetSet::of({lm.root});
  brw::SolverOptions opt{1e-12, 1'000'000};
  auto qb = brw::solve_global_extinction(dom, opt);
  auto ql = brw::solve_local_extinction(dom, a, opt);
  auto reports = check_suite(lm, dom, a, brw::kCheckTolerance, 20, 1);

  json j;
  j["meta"] = brw::metadata("gallery", common_params(lm, w));
  j["notes"] = lm.notes;
  const std::size_t r = static_cast<std::size_t>(dom->index_of(lm.root));
  j["root"] = {{"qbar", {qb.lower[r], qb.upper[r]}}, {"q_local", {ql.lower[r], ql.upper[r]}}};
  if (lm.model->continuous()) {
    const bool radial = lm.model->tree_symmetry().has_value();
    const int n_max = radial ? 2000 : std::max(1, dom->radius);
    j["critical"] = brw::critical_json(brw::critical_params(*dom, lm.root, n_max));
  }
  json arr = json::array();
  for (const auto& rep : reports) arr.push_back(brw::report_json(rep));
  j["checks"] = arr;
  emit(o, j.dump(2) + "\n");
  return aggregate(reports);
}

// ------------------------------------------------------------------ reproduce

int run_reproduce(const std::string& out_dir, const std::string& filter) {
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  const fs::path target = dir / "summary.csv";
  // Refuse up front so a long run never ends without its summary.
  {
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path probe = dir / ".brwlab-write-probe";
    std::ofstream test(probe);
    if (!test) throw brw::ValidationError("output directory '" + out_dir + "' is not writable");
    test.close();
    fs::remove(probe);
  }
  auto rows = brw::acceptance::run(filter, [](const brw::acceptance::CriterionResult& r) {
    std::cout << "criterion " << r.id << " [" << r.key << "] " << (r.passed ? "PASS" : "FAIL") << " (" << r.seconds
              << " s) " << r.measured << std::endl;
  });
  if (rows.empty()) throw brw::ValidationError("filter '" + filter + "' matches no criterion");
  brw::write_file_atomically(target.string(), brw::acceptance::summary_csv(rows));
  for (const auto& r : rows)
    if (!r.passed) return kCheckFailed;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"brwlab: extinction probabilities and survival phases of branching random walks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(brw::kVersion));

  SolveArgs solve;
  auto* c_solve = app.add_subcommand("solve", "Bracket q-bar, q(., A) or q0(., A) on a window");
  add_model_options(c_solve, solve.model);
  add_window_options(c_solve, solve.win);
  add_output_options(c_solve, solve.out);
  c_solve->add_option("--quantity", solve.quantity, "global | local | never-visit")
      ->check(CLI::IsMember({"global", "local", "never-visit"}));
  c_solve->add_option("--target", solve.target, "Target set A: comma list of sites or ALL (default: root)");
  c_solve->add_option("--tol", solve.tol, "Convergence tolerance (sup-norm step)")->check(CLI::PositiveNumber);
  c_solve->add_option("--max-iter", solve.max_iter, "Iteration cap")->check(CLI::PositiveNumber);

  SpectralArgs spec;
  auto* c_spec = app.add_subcommand("spectral", "Growth sequences and critical parameters");
  add_model_options(c_spec, spec.model);
  add_window_options(c_spec, spec.win);
  add_output_options(c_spec, spec.out);
  c_spec->add_option("--site", spec.site, "Start site (default: root)");
  c_spec->add_option("--n-max", spec.n_max, "Number of terms")->check(CLI::PositiveNumber);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Monte Carlo survival estimates");
  add_model_options(c_sim, sim.model);
  add_output_options(c_sim, sim.out);
  c_sim->add_option("--start", sim.start, "Start site (default: root)");
  c_sim->add_option("--event", sim.events, "global | local:A:g | never:A | escape:A:g (repeatable)");
  c_sim->add_option("--trials", sim.trials)->check(CLI::PositiveNumber);
  c_sim->add_option("--horizon", sim.horizon)->check(CLI::PositiveNumber);
  c_sim->add_option("--cap", sim.cap, "Population cap; capped trials count as surviving")->check(CLI::PositiveNumber);
  c_sim->add_option("--seed", sim.seed);
  c_sim->add_option("--radius", sim.radius, "Window radius (default: 2*horizon+2)");
  c_sim->add_option("--policy", sim.policy)->check(CLI::IsMember({"outside-extinct", "outside-immortal"}));

  CheckArgs chk;
  auto* c_chk = app.add_subcommand("check", "Run the theorem-check suite");
  add_model_options(c_chk, chk.model);
  add_window_options(c_chk, chk.win);
  add_output_options(c_chk, chk.out, false);
  c_chk->add_option("--target", chk.target, "Target set A (default: root)");
  c_chk->add_option("--tol", chk.tol)->check(CLI::PositiveNumber);
  c_chk->add_option("--probes", chk.probes, "Random starts for the finite two-fixed-point check");
  c_chk->add_option("--seed", chk.seed);

  std::string gname;
  WindowArgs gwin;
  OutputArgs gout;
  auto* c_gal = app.add_subcommand("gallery", "Build a named model and run the full pipeline");
  c_gal->add_option("name", gname, "Model name")->required()->check(CLI::IsMember(brw::gallery_names()));
  add_window_options(c_gal, gwin);
  add_output_options(c_gal, gout, false);
  c_gal->allow_extras();

  std::string rdir = ".", rfilter;
  auto* c_rep = app.add_subcommand("reproduce", "Run the acceptance suite and write summary.csv");
  c_rep->add_option("--out-dir", rdir, "Directory for summary.csv");
  c_rep->add_option("--filter", rfilter, "Criterion key or number");

  std::string vpath;
  auto* c_ver = app.add_subcommand("verify", "Recompute the residuals of a JSON vector file");
  c_ver->add_option("file", vpath)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadInput;
  }

  try {
    if (*c_solve) return run_solve(solve);
    if (*c_spec) return run_spectral(spec);
    if (*c_sim) return run_simulate(sim);
    if (*c_chk) return run_check(chk);
    if (*c_gal) return run_gallery(gname, c_gal->remaining(), gwin, gout);
    if (*c_rep) return run_reproduce(rdir, rfilter);
    if (*c_ver) return run_verify(vpath);
  } catch (const brw::ResourceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUndecided;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  }
  return kBadInput;
}
