// Apache License, Version 2.0, refer to LICENSE.txt.
//
// Synthetic data generation, scorer adapters, and the command line
// driven end to end through run_cli.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "latrec/cli.hpp"
#include "latrec/scoring.hpp"
#include "latrec/synthetic.hpp"

#include "helpers.hpp"

using namespace latrec;

namespace {

// Runs the CLI in-process with stdout/stderr captured.
int run(const std::vector<std::string>& args, std::string* out = nullptr,
        std::string* err = nullptr) {
  std::vector<const char*> argv{"latrec"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::stringstream so, se;
  auto* co = std::cout.rdbuf(so.rdbuf());
  auto* ce = std::cerr.rdbuf(se.rdbuf());
  int rc = -1;
  try {
    rc = run_cli(static_cast<int>(argv.size()), argv.data());
  } catch (...) {
    std::cout.rdbuf(co);
    std::cerr.rdbuf(ce);
    throw;
  }
  std::cout.rdbuf(co);
  std::cerr.rdbuf(ce);
  if (out) *out = so.str();
  if (err) *err = se.str();
  return rc;
}

GenSpec small_spec(Regime regime, std::uint64_t seed) {
  GenSpec spec;
  spec.num_users = 40;
  spec.num_items = 30;
  spec.num_facets = 3;
  spec.fg = 2;
  spec.fl = 1;
  spec.density = 0.2;
  spec.seed = seed;
  spec.regime = regime;
  return spec;
}

}  // namespace

TEST_CASE("regime names round trip") {
  for (auto r : {Regime::CorrelatedFacets, Regime::IndependentFacets,
                 Regime::Collapsed, Regime::Mixed})
    CHECK(regime_from_string(to_string(r)) == r);
  CHECK_THROWS_AS(regime_from_string("bogus"), ValidationError);
}

TEST_CASE("generator is deterministic and respects dimensions") {
  const GenSpec spec = small_spec(Regime::Mixed, 4);
  const SyntheticData a = generate(spec);
  const SyntheticData b = generate(spec);
  REQUIRE(a.dataset.events.size() == b.dataset.events.size());
  CHECK(a.responses == b.responses);
  CHECK(a.label_threshold == b.label_threshold);
  CHECK(a.dataset.num_users == 40);
  CHECK(a.dataset.num_items == 30);
  CHECK(a.dataset.num_facets == 3);
  CHECK(a.dataset.user_features.size() == 40);
  CHECK(a.responses.size() == a.dataset.events.size());
  for (const Event& e : a.dataset.events) {
    CHECK(e.user < 40);
    CHECK(e.item < 30);
    CHECK(e.facet < 3);
  }

  GenSpec other = spec;
  other.seed = 5;
  CHECK(generate(other).responses != a.responses);

  GenSpec bad = spec;
  bad.density = 1.5;
  CHECK_THROWS_AS(generate(bad), ValidationError);
  bad = spec;
  bad.positive_rate = 0.0;
  CHECK_THROWS_AS(generate(bad), ValidationError);
}

TEST_CASE("labels threshold the responses at the global quantile") {
  const GenSpec spec = small_spec(Regime::Mixed, 7);
  const SyntheticData d = generate(spec);
  std::size_t positives = 0;
  for (std::size_t e = 0; e < d.dataset.events.size(); ++e) {
    CHECK(d.dataset.events[e].label ==
          (d.responses[e] > d.label_threshold ? 1 : 0));
    positives += d.dataset.events[e].label;
  }
  const double rate =
      static_cast<double>(positives) / d.dataset.events.size();
  CHECK(rate == Catch::Approx(spec.positive_rate).margin(0.02));
}

TEST_CASE("responses are truth scores plus calibrated noise") {
  GenSpec spec = small_spec(Regime::Mixed, 9);
  spec.num_users = 80;
  spec.num_items = 60;
  spec.var_y = 0.25;
  const SyntheticData d = generate(spec);

  double ss = 0.0;
  for (std::size_t e = 0; e < d.dataset.events.size(); ++e) {
    const Event& ev = d.dataset.events[e];
    const double resid =
        d.responses[e] -
        score(d.truth.config, d.truth.factors, ev.user, ev.item, ev.facet);
    ss += resid * resid;
  }
  const auto n = static_cast<double>(d.dataset.events.size());
  const double var = ss / n;
  const double se = 0.25 * std::sqrt(2.0 / (n - 1.0));
  CHECK(var == Catch::Approx(0.25).margin(4.0 * se));

  // Noise vanishes when var_y does.
  spec.var_y = 1e-12;
  const SyntheticData exact = generate(spec);
  for (std::size_t e = 0; e < exact.dataset.events.size(); ++e) {
    const Event& ev = exact.dataset.events[e];
    CHECK(std::abs(exact.responses[e] -
                   score(exact.truth.config, exact.truth.factors, ev.user,
                         ev.item, ev.facet)) < 1e-5);
  }
}

TEST_CASE("collapsed regime replicates facet zero everywhere") {
  const SyntheticData d = generate(small_spec(Regime::Collapsed, 11));
  const FactorState& s = d.truth.factors;
  for (std::int32_t k = 1; k < 3; ++k) {
    CHECK(s.alpha_ik.col(k) == s.alpha_ik.col(0));
    CHECK(s.beta_jk.col(k) == s.beta_jk.col(0));
    CHECK(s.w_k.row(k) == s.w_k.row(0));
  }
  for (std::int64_t i = 0; i < d.dataset.num_users; ++i)
    for (std::int32_t k = 1; k < 3; ++k)
      CHECK(s.u_ik.row(i * 3 + k) == s.u_ik.row(i * 3));
  // Scores therefore ignore the facet.
  for (std::int64_t i = 0; i < 5; ++i)
    for (std::int64_t j = 0; j < 5; ++j) {
      const double s0 = score(d.truth.config, s, i, j, 0);
      CHECK(score(d.truth.config, s, i, j, 1) == s0);
      CHECK(score(d.truth.config, s, i, j, 2) == s0);
    }
}

TEST_CASE("scorer adapters agree with their underlying models") {
  const SyntheticData d = generate(small_spec(Regime::Mixed, 13));
  const ScoreFn fn = make_model_scorer(d.truth, d.dataset.user_features,
                                       d.dataset.item_features);
  for (const Event& e :
       {d.dataset.events[0], d.dataset.events[5], d.dataset.events[9]}) {
    const double direct = score_with_fallback(
        d.truth.config, d.truth.factors, d.truth.priors, d.truth.presence,
        d.dataset.user_features[static_cast<std::size_t>(e.user)],
        d.dataset.item_features[static_cast<std::size_t>(e.item)], e.user,
        e.item, e.facet);
    CHECK(fn(e.user, e.item, e.facet) == direct);
  }
  // Ids beyond the feature tables read as empty feature vectors.
  CHECK(std::isfinite(fn(1000, 1000, 0)));

  std::stringstream buf;
  write_predictions(buf, {d.dataset.events[0], d.dataset.events[1]}, fn);
  std::string line;
  std::getline(buf, line);
  CHECK(line == "#user\titem\tfacet\tscore");
  std::getline(buf, line);
  CHECK(line.find('\t') != std::string::npos);
}

TEST_CASE("retrieval adapter ignores facets and checks item range") {
  const Corpus c = Corpus::build({{0, "alpha beta"}, {1, "beta gamma"}}, 2);
  std::vector<UserProfile> profiles(1);
  profiles[0].counts = {{c.term_id("beta"), 1}};
  RetrievalParams params;
  const ScoreFn fn =
      make_retrieval_scorer(RetrievalKind::Bm25, profiles, c, params);
  CHECK(fn(0, 0, 0) == fn(0, 0, 2));
  CHECK(fn(5, 0, 0) == 0.0);  // unknown user -> empty profile
  CHECK_THROWS_AS(fn(0, 7, 0), DimensionError);
  CHECK(retrieval_kind_from_string("cos") == RetrievalKind::Cos);
  CHECK_THROWS_AS(retrieval_kind_from_string("tfidf"), ValidationError);
}

// ---------------------------------------------------------------------------
// CLI end to end.

TEST_CASE("cli pipeline: synth, split, train, predict, eval, tune") {
  testutil::TempDir dir;
  const std::string data = dir.file("data");
  const std::string sp = dir.file("sp");

  REQUIRE(run({"synth", "--users", "50", "--items", "40", "--facets", "2",
               "--fg", "1", "--fl", "1", "--density", "0.15", "--seed", "3",
               "--regime", "mixed", "--out", data}) == 0);
  REQUIRE(run({"split", "--events", data + "/events.tsv", "--seed", "2",
               "--out", sp}) == 0);

  const std::string model = dir.file("lat.model");
  std::string out;
  REQUIRE(run({"train", "--events", sp + "/train.tsv", "--user-features",
               data + "/user_features.tsv", "--item-features",
               data + "/item_features.tsv", "--model", "lat", "--fg", "1",
               "--fl", "1", "--em-iters", "4", "--gibbs-samples", "20",
               "--burn-in", "5", "--seed", "1", "--out", model},
              &out) == 0);
  CHECK(out.find("wrote") != std::string::npos);
  CHECK(std::filesystem::exists(model));
  CHECK(std::filesystem::exists(model + ".diag.csv"));

  const std::string preds = dir.file("preds.tsv");
  REQUIRE(run({"predict", "--events", sp + "/test.tsv", "--model-file", model,
               "--user-features", data + "/user_features.tsv",
               "--item-features", data + "/item_features.tsv", "--out",
               preds}) == 0);
  const ParsedEvents test_ev = parse_events(sp + "/test.tsv");
  std::ifstream pf(preds);
  std::string line;
  std::getline(pf, line);
  CHECK(line == "#user\titem\tfacet\tscore");
  std::size_t rows = 0;
  while (std::getline(pf, line))
    if (!line.empty()) ++rows;
  CHECK(rows == test_ev.events.size());

  const std::string evald = dir.file("evald");
  REQUIRE(run({"eval", "--events", sp + "/test.tsv", "--model-file", model,
               "--user-features", data + "/user_features.tsv",
               "--item-features", data + "/item_features.tsv",
               "--train-events", sp + "/train.tsv", "--metrics",
               "p@1,p@3,map", "--out", evald},
              &out) == 0);
  CHECK(out.find("map=") != std::string::npos);
  CHECK(std::filesystem::exists(evald + "/report.csv"));
  CHECK(std::filesystem::exists(evald + "/per_query.tsv"));
  CHECK(std::filesystem::exists(evald + "/pr_curve.csv"));
  {
    std::ifstream rep(evald + "/report.csv");
    std::getline(rep, line);
    CHECK(line == "slice,queries,evaluated,p@1,p@3,map");
    std::getline(rep, line);
    CHECK(line.rfind("overall,", 0) == 0);
    bool has_activity = false;
    while (std::getline(rep, line))
      has_activity = has_activity || line.rfind("0-5,", 0) == 0 ||
                     line.rfind("6-10,", 0) == 0;
    CHECK(has_activity);
  }

  // Tune over a tiny grid, then make sure the winner loads.
  const std::string tuned = dir.file("tuned.model");
  REQUIRE(run({"tune", "--events", sp + "/train.tsv", "--tune-events",
               sp + "/tune.tsv", "--user-features",
               data + "/user_features.tsv", "--item-features",
               data + "/item_features.tsv", "--model", "bst", "--fg-grid",
               "1,2", "--fl-grid", "1,2", "--em-iters", "2",
               "--gibbs-samples", "10", "--burn-in", "3", "--out", tuned},
              &out) == 0);
  CHECK(out.find("selected fg=") != std::string::npos);
  CHECK(load_model(tuned).config.kind == ModelKind::Bst);
  {
    // BST normalizes fl to 0, so the four grid points collapse to two.
    std::ifstream grid(tuned + ".grid.csv");
    std::getline(grid, line);
    CHECK(line == "fg,fl,tune_map,selected");
    int grid_rows = 0, selected = 0;
    while (std::getline(grid, line)) {
      if (line.empty()) continue;
      ++grid_rows;
      if (line.back() == '1') ++selected;
    }
    CHECK(grid_rows == 2);
    CHECK(selected == 1);
  }
}

TEST_CASE("cli reruns are byte identical") {
  testutil::TempDir dir;
  const std::string data = dir.file("data");
  REQUIRE(run({"synth", "--users", "30", "--items", "25", "--facets", "2",
               "--density", "0.2", "--seed", "8", "--out", data}) == 0);

  auto train_to = [&](const std::string& name) {
    REQUIRE(run({"train", "--events", data + "/events.tsv",
                 "--user-features", data + "/user_features.tsv",
                 "--item-features", data + "/item_features.tsv", "--model",
                 "smf", "--fl", "1", "--em-iters", "3", "--gibbs-samples",
                 "10", "--burn-in", "3", "--seed", "5", "--out",
                 dir.file(name)}) == 0);
    return testutil::read_text(dir.file(name));
  };
  const std::string first = train_to("a.model");
  const std::string second = train_to("b.model");
  CHECK(first == second);
  CHECK(testutil::read_text(dir.file("a.model.diag.csv")) ==
        testutil::read_text(dir.file("b.model.diag.csv")));

  // Same for the generator itself.
  const std::string data2 = dir.file("data2");
  REQUIRE(run({"synth", "--users", "30", "--items", "25", "--facets", "2",
               "--density", "0.2", "--seed", "8", "--out", data2}) == 0);
  CHECK(testutil::read_text(data + "/events.tsv") ==
        testutil::read_text(data2 + "/events.tsv"));
  CHECK(testutil::read_text(data + "/truth.model") ==
        testutil::read_text(data2 + "/truth.model"));
}

TEST_CASE("cli trains and scores retrieval and bilinear baselines") {
  testutil::TempDir dir;
  const std::string data = dir.file("data");
  REQUIRE(run({"synth", "--users", "40", "--items", "30", "--facets", "2",
               "--density", "0.25", "--seed", "6", "--out", data}) == 0);

  // Item text: simple generated vocabulary.
  {
    std::ofstream text(dir.file("text.tsv"));
    const char* words[] = {"alpha", "beta", "gamma", "delta", "epsilon"};
    for (int j = 0; j < 30; ++j) {
      text << j << '\t';
      for (int w = 0; w <= j % 4; ++w) text << words[(j + w) % 5] << ' ';
      text << '\n';
    }
  }

  const std::string evald = dir.file("eval_bm25");
  std::string out;
  REQUIRE(run({"eval", "--events", data + "/events.tsv", "--model", "bm25",
               "--train-events", data + "/events.tsv", "--item-text",
               dir.file("text.tsv"), "--metrics", "p@1,map", "--out", evald},
              &out) == 0);
  CHECK(std::filesystem::exists(evald + "/report.csv"));

  // Retrieval models refuse to train but accept parameters at eval.
  std::string err;
  CHECK(run({"train", "--events", data + "/events.tsv", "--model", "cos",
             "--out", dir.file("x.model")},
            &out, &err) == 1);
  CHECK(err.find("needs no training") != std::string::npos);
  REQUIRE(run({"eval", "--events", data + "/events.tsv", "--model", "lm",
               "--mu", "500", "--train-events", data + "/events.tsv",
               "--item-text", dir.file("text.tsv"), "--metrics", "map",
               "--out", dir.file("eval_lm")}) == 0);

  const std::string bi = dir.file("bi.model");
  REQUIRE(run({"train", "--events", data + "/events.tsv", "--user-features",
               data + "/user_features.tsv", "--item-features",
               data + "/item_features.tsv", "--model", "bilinear", "--seed",
               "2", "--out", bi}) == 0);
  REQUIRE(run({"predict", "--events", data + "/events.tsv", "--model-file",
               bi, "--user-features", data + "/user_features.tsv",
               "--item-features", data + "/item_features.tsv", "--out",
               dir.file("bi_preds.tsv")}) == 0);
}

TEST_CASE("cli eval runs the paired test between per-query files") {
  testutil::TempDir dir;
  const std::string data = dir.file("data");
  REQUIRE(run({"synth", "--users", "40", "--items", "30", "--facets", "2",
               "--density", "0.2", "--seed", "12", "--out", data}) == 0);
  const std::string sp = dir.file("sp");
  REQUIRE(run({"split", "--events", data + "/events.tsv", "--seed", "1",
               "--out", sp}) == 0);

  auto eval_with_seed = [&](const std::string& name, const char* seed) {
    const std::string model = dir.file(name + ".model");
    REQUIRE(run({"train", "--events", sp + "/train.tsv", "--user-features",
                 data + "/user_features.tsv", "--item-features",
                 data + "/item_features.tsv", "--model", "bst", "--fg", "1",
                 "--em-iters", "2", "--gibbs-samples", "8", "--burn-in", "2",
                 "--seed", seed, "--out", model}) == 0);
    REQUIRE(run({"eval", "--events", sp + "/test.tsv", "--model-file", model,
                 "--user-features", data + "/user_features.tsv",
                 "--item-features", data + "/item_features.tsv", "--out",
                 dir.file(name)}) == 0);
    return dir.file(name) + "/per_query.tsv";
  };
  const std::string a = eval_with_seed("run_a", "3");
  const std::string b = eval_with_seed("run_b", "4");

  std::string out;
  REQUIRE(run({"eval", "--t-test-a", a, "--t-test-b", b, "--t-test-metric",
               "p@1"},
              &out) == 0);
  CHECK(out.find("metric=p@1") != std::string::npos);
  CHECK(out.find("t=") != std::string::npos);
  CHECK(out.find("significance=") != std::string::npos);
  REQUIRE(run({"eval", "--t-test-a", a, "--t-test-b", b, "--t-test-metric",
               "map"},
              &out) == 0);
  CHECK(out.find("metric=map") != std::string::npos);

  // Comparing a file against itself: zero diff everywhere.
  REQUIRE(run({"eval", "--t-test-a", a, "--t-test-b", a}, &out) == 0);
  CHECK(out.find("p=1") != std::string::npos);

  std::string err;
  CHECK(run({"eval", "--t-test-a", a}, &out, &err) == 1);
}

TEST_CASE("cli analyze writes correlation and per-type profiles") {
  testutil::TempDir dir;
  testutil::write_text(
      dir, "counts.csv",
      "item,category_l1,category_l2,category_l3,pageviews,linkviews,clicks,"
      "share_actions,mail_actions\n"
      "0,news,politics,,4000,2000,300,40,8\n"
      "1,news,world,,3000,1500,150,15,9\n"
      "2,sports,mlb,,5000,2500,500,10,25\n");
  const std::string out_dir = dir.file("analysis");
  std::string out;
  REQUIRE(run({"analyze", "--counts", dir.file("counts.csv"),
               "--min-denominator", "1000", "--out", out_dir},
              &out) == 0);
  for (const char* f : {"/correlations.csv", "/log_ratio_share.csv",
                        "/cv_share.csv", "/log_ratio_mail.csv",
                        "/cv_mail.csv"})
    CHECK(std::filesystem::exists(out_dir + f));
  const std::string corr = testutil::read_text(out_dir + "/correlations.csv");
  CHECK(corr.rfind("type,share,mail,ctr", 0) == 0);
}

TEST_CASE("cli exit codes distinguish missing files from other errors") {
  testutil::TempDir dir;
  std::string out, err;
  CHECK(run({"train", "--events", dir.file("absent.tsv"), "--out",
             dir.file("m.model")},
            &out, &err) == 2);
  CHECK(err.find("absent.tsv") != std::string::npos);

  CHECK(run({"eval", "--events", dir.file("absent.tsv"), "--model-file",
             dir.file("nope.model"), "--out", dir.file("e")},
            &out, &err) == 2);

  // Validation problems are exit 1.
  testutil::write_text(dir, "bad.tsv", "0\t0\t0\t7\n");
  CHECK(run({"train", "--events", dir.file("bad.tsv"), "--out",
             dir.file("m.model")},
            &out, &err) == 1);

  // CLI parse errors are nonzero and not 2.
  const int rc = run({"train", "--events"}, &out, &err);
  CHECK(rc != 0);
  CHECK(rc != 2);
  CHECK(run({"nonsense"}, &out, &err) != 0);
  CHECK(run({"train", "--events", "x", "--model", "magic", "--out", "y"},
            &out, &err) != 0);
}

TEST_CASE("cli help lists every documented flag with defaults") {
  std::string out;
  CHECK(run({"--help"}, &out) == 0);
  for (const char* cmd : {"train", "predict", "eval", "split", "analyze",
                          "synth", "tune"})
    CHECK(out.find(cmd) != std::string::npos);

  CHECK(run({"train", "--help"}, &out) == 0);
  for (const char* flag :
       {"--events", "--user-features", "--item-features", "--model", "--fg",
        "--fl", "--em-iters", "--gibbs-samples", "--burn-in", "--seed",
        "--out"})
    CHECK(out.find(flag) != std::string::npos);
  CHECK(out.find("30") != std::string::npos);   // em-iters default
  CHECK(out.find("100") != std::string::npos);  // gibbs-samples default

  CHECK(run({"eval", "--help"}, &out) == 0);
  for (const char* flag : {"--metrics", "--mu", "--k1", "--k3", "--b",
                           "--t-test-a", "--t-test-b", "--t-test-metric"})
    CHECK(out.find(flag) != std::string::npos);

  CHECK(run({"analyze", "--help"}, &out) == 0);
  CHECK(out.find("--min-denominator") != std::string::npos);
  CHECK(out.find("2000") != std::string::npos);

  CHECK(run({"tune", "--help"}, &out) == 0);
  CHECK(out.find("1,2,4,8,16") != std::string::npos);
}
