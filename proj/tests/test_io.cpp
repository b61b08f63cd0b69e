#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "brwlab/brwlab.hpp"

using namespace brw;

namespace {

std::string models_dir() { return BRWLAB_MODELS_DIR; }

std::string error_of(const std::string& text) {
  try {
    load_model_text(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ModelFile, GaltonWatsonFile) {
  auto lm = load_model_file(models_dir() + "/gw.json");
  auto b = solve_global_extinction(full_domain(lm.model));
  EXPECT_NEAR(b.lower[0], 1.0 / 3.0, 1e-10);
  EXPECT_EQ(lm.model->label(lm.root), "o");
}

TEST(ModelFile, GeneralLawFile) {
  auto lm = load_model_file(models_dir() + "/two_site_cubic.json");
  auto b = solve_global_extinction(full_domain(lm.model), {1e-14, 1'000'000});
  EXPECT_NEAR(b.lower[0], (std::sqrt(5.0) - 1) / 2, 1e-10);
  EXPECT_EQ(lm.model->site_by_label("b"), Site::at(1));
}

TEST(ModelFile, ContinuousFileGivesCounterpartMoments) {
  auto lm = load_model_file(models_dir() + "/two_state_continuous.json");
  auto dom = full_domain(lm.model);
  auto m = moment_matrix(*dom);
  const double lambda = 0.8;
  EXPECT_NEAR(m.at(0, 1), lambda * 1.0 / 1.0, 1e-15);
  EXPECT_NEAR(m.at(0, 0), lambda * 0.5 / 1.0, 1e-15);
  EXPECT_NEAR(m.at(1, 0), lambda * 2.0 / 1.5, 1e-15);
  ASSERT_TRUE(lm.model->continuous());
}

TEST(ModelFile, GalleryKind) {
  auto lm = load_model_file(models_dir() + "/tree_d3.json");
  ASSERT_TRUE(lm.model->tree_symmetry());
  EXPECT_EQ(lm.model->tree_symmetry()->degree, 3);
}

TEST(ModelFile, ErrorsCarryLocations) {
  EXPECT_NE(error_of(R"({"kind":"finite-factored","sites":["o"],"laws":{"o":{"count":{"pmf":[0.5,"x"]}}}})")
                .find("laws.o.count.pmf[1]"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"kind":"finite-general","sites":["a"],"laws":{"a":[{"prob":1,"offspring":{"zz":1}}]}})")
                .find("unknown site 'zz'"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"kind":"finite-factored","sites":["o"],"laws":{"o":{"count":{"pmf":[0.5,0.4]}}}})"), "");
  EXPECT_NE(error_of(R"({"kind":"continuous","sites":["a"],"rates":{}})").find("lambda"), std::string::npos);
  EXPECT_NE(error_of(R"({"kind":"mystery"})").find("unknown kind"), std::string::npos);
  EXPECT_NE(error_of("{not json").find("byte"), std::string::npos);
  EXPECT_NE(error_of(R"({"kind":"finite-factored","sites":["a","a"],"laws":{}})").find("duplicate"), std::string::npos);
  EXPECT_THROW(load_model_file("/nonexistent/model.json"), ValidationError);
}

TEST(Vectors, JsonRoundTripReproducesResiduals) {
  for (const char* q : {"global", "never-visit", "local"}) {
    auto src = gallery_source("halfline-43", {});
    auto lm = load_model_json(src);
    auto dom = truncate(lm.model, lm.root, 25);
    const auto a = TargetSet::of({Site::at(0)});
    ExtinctionBracket b;
    auto quantity = parse_quantity(q);
    if (quantity == Quantity::GlobalExtinction) b = solve_global_extinction(dom);
    else if (quantity == Quantity::NeverVisit) b = solve_never_visit(dom, a);
    else b = solve_local_extinction(dom, a);
    auto j = bracket_json(b, metadata("solve", json{{"model", src}}));
    auto reparsed = json::parse(j.dump());
    auto check = verify_bracket_json(reparsed);
    EXPECT_TRUE(check.exact()) << q;
    EXPECT_EQ(reparsed["sites"][0], "0");
  }
}

TEST(Vectors, CsvColumnsAndOrder) {
  auto lm = load_model_file(models_dir() + "/two_site_cubic.json");
  auto b = solve_global_extinction(full_domain(lm.model));
  std::ostringstream os;
  write_bracket_csv(os, b, metadata("solve", json::object()));
  std::istringstream in(os.str());
  std::string line;
  std::vector<std::string> body;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') body.push_back(line);
  ASSERT_EQ(body.size(), 3u);
  EXPECT_EQ(body[0], "site,lower,upper");
  EXPECT_EQ(body[1].substr(0, 2), "a,");
  EXPECT_EQ(body[2].substr(0, 2), "b,");
  EXPECT_EQ(os.str().rfind("# brwlab ", 0), 0u);
}

TEST(Results, EstimateAndReportJson) {
  EstimateCI e;
  e.event = "GLOBAL";
  e.point = 0.5;
  e.seed = 9;
  auto j = estimate_json(e);
  for (const char* k : {"event", "point", "stderr", "trials", "capped_trials", "seed", "horizon"}) EXPECT_TRUE(j.contains(k));
  CheckReport r;
  r.name = "x";
  r.status = Status::Fail;
  r.witnesses.push_back({"o", {{"v", 1.0}}});
  auto rj = report_json(r);
  EXPECT_EQ(rj["status"], "FAIL");
  EXPECT_EQ(rj["witnesses"][0]["site"], "o");
}

TEST(Output, AtomicWriteLeavesNoPartialFile) {
  EXPECT_THROW(write_file_atomically("/nonexistent-dir/out.csv", "x"), ValidationError);
  auto path = (std::filesystem::temp_directory_path() / "brwlab_atomic_test.txt").string();
  write_file_atomically(path, "hello\n");
  std::ifstream in(path);
  std::string s;
  std::getline(in, s);
  EXPECT_EQ(s, "hello");
  EXPECT_FALSE(std::filesystem::exists(path + ".tmp"));
  std::remove(path.c_str());
}
