// Apache License, Version 2.0, refer to LICENSE.txt.
//
// Command-line pipelines over the library: train, predict, eval,
// split, analyze, synth, and tune. Every command is a pure function of
// its input files, flags, and seed, so reruns produce byte-identical
// outputs. Exit codes: 0 success, 2 missing/unreadable file, 1 any
// other error.

#pragma once

#include <CLI11.hpp>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "latrec/analysis.hpp"
#include "latrec/bilinear.hpp"
#include "latrec/data.hpp"
#include "latrec/errors.hpp"
#include "latrec/metrics.hpp"
#include "latrec/model.hpp"
#include "latrec/model_io.hpp"
#include "latrec/retrieval.hpp"
#include "latrec/scoring.hpp"
#include "latrec/split.hpp"
#include "latrec/synthetic.hpp"
#include "latrec/text.hpp"
#include "latrec/trainer.hpp"

namespace latrec {
namespace cli_detail {

struct MetricSelection {
  std::vector<int> ks;
  bool map = false;
};

inline MetricSelection parse_metrics(const std::string& list) {
  MetricSelection sel;
  for (const auto& tok : detail::split_on(list, ',')) {
    if (tok == "map") {
      sel.map = true;
    } else if (tok.rfind("p@", 0) == 0) {
      const auto k = detail::parse_int(tok.substr(2), "metric rank", 0);
      if (k < 1) throw ValidationError("metric rank must be >= 1");
      sel.ks.push_back(static_cast<int>(k));
    } else {
      throw ValidationError("unknown metric '" + tok +
                            "' (expected p@<k> or map)");
    }
  }
  if (sel.ks.empty() && !sel.map)
    throw ValidationError("metric list is empty");
  return sel;
}

inline std::vector<std::int32_t> parse_grid(const std::string& list) {
  std::vector<std::int32_t> out;
  for (const auto& tok : detail::split_on(list, ','))
    out.push_back(
        static_cast<std::int32_t>(detail::parse_int(tok, "grid value", 0)));
  if (out.empty()) throw ValidationError("grid is empty");
  for (auto v : out)
    if (v < 0) throw ValidationError("grid values must be >= 0");
  return out;
}

inline Dataset load_dataset(const std::string& events,
                            const std::string& user_features,
                            const std::string& item_features) {
  ParsedEvents ev = parse_events(events);
  ParsedFeatures uf, itf;
  if (!user_features.empty()) uf = parse_features(user_features);
  if (!item_features.empty()) itf = parse_features(item_features);
  return make_dataset(std::move(ev), std::move(uf), std::move(itf));
}

inline bool is_retrieval_name(const std::string& m) {
  return m == "cos" || m == "lm" || m == "bm25";
}

inline bool is_factor_name(const std::string& m) {
  return m == "lat" || m == "bst" || m == "smf" || m == "cmf";
}

inline std::uint32_t peek_model_kind(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  detail::BinReader r(in);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, detail::kModelMagic, 8) != 0)
    throw FormatError("not a model file (bad magic): " + path);
  r.u32();  // version, checked by the real loader
  return r.u32();
}

// Everything a ScoreFn may reference, owned together so the callback
// stays valid for the caller's scope.
struct ScoringContext {
  TrainedModel model;
  BilinearModel bilinear;
  std::vector<FeatureVector> user_features;
  std::vector<FeatureVector> item_features;
  Corpus corpus;
  std::vector<UserProfile> profiles;
  RetrievalParams params;
  ScoreFn score;
};

struct ScorerInputs {
  std::string model_file;
  std::string model_name;  // used when model_file is empty (retrieval)
  std::string user_features;
  std::string item_features;
  std::string train_events;
  std::string item_text;
  RetrievalParams params;
  // Id-space hints from the events being scored.
  std::int64_t num_users_hint = 0;
  std::int64_t num_items_hint = 0;
};

inline std::unique_ptr<ScoringContext> build_scorer(const ScorerInputs& in) {
  auto ctx = std::make_unique<ScoringContext>();
  ctx->params = in.params;
  if (!in.model_file.empty()) {
    if (!in.user_features.empty())
      ctx->user_features = parse_features(in.user_features).rows;
    if (!in.item_features.empty())
      ctx->item_features = parse_features(in.item_features).rows;
    if (peek_model_kind(in.model_file) == detail::kKindBilinear) {
      ctx->bilinear = load_bilinear(in.model_file);
      ctx->score = make_bilinear_scorer(ctx->bilinear, ctx->user_features,
                                        ctx->item_features);
    } else {
      ctx->model = load_model(in.model_file);
      ctx->score = make_model_scorer(ctx->model, ctx->user_features,
                                     ctx->item_features);
    }
    return ctx;
  }
  if (!is_retrieval_name(in.model_name))
    throw ValidationError(
        "scoring needs --model-file, or --model cos|lm|bm25 with "
        "--train-events and --item-text");
  if (in.train_events.empty() || in.item_text.empty())
    throw ValidationError("retrieval models need --train-events and "
                          "--item-text");
  auto text_in = detail::open_input(in.item_text);
  const auto texts = parse_item_text(text_in);
  std::int64_t num_items = in.num_items_hint;
  for (const auto& [id, t] : texts) num_items = std::max(num_items, id + 1);
  const ParsedEvents train = parse_events(in.train_events);
  const std::int64_t num_users =
      std::max(in.num_users_hint, train.num_users);
  ctx->corpus = Corpus::build(texts, num_items);
  ctx->profiles = build_user_profiles(train.events, num_users, ctx->corpus);
  ctx->score =
      make_retrieval_scorer(retrieval_kind_from_string(in.model_name),
                            ctx->profiles, ctx->corpus, ctx->params);
  return ctx;
}

struct TrainArgs {
  std::string events, user_features, item_features, responses, out;
  std::string model = "lat";
  std::int32_t fg = 2, fl = 2;
  TrainOptions train;
  BilinearOptions bilinear;
};

inline int cmd_train(const TrainArgs& a) {
  if (is_retrieval_name(a.model))
    throw ValidationError("model '" + a.model +
                          "' needs no training; use it directly in eval");
  Dataset ds = load_dataset(a.events, a.user_features, a.item_features);
  if (a.model == "bilinear") {
    BilinearOptions opts = a.bilinear;
    opts.seed = a.train.seed;
    const BilinearModel m = fit_bilinear(ds, opts);
    for (const auto& w : m.warnings) std::cerr << "warning: " << w << '\n';
    save_bilinear(a.out, m);
    std::cout << "wrote " << a.out << '\n';
    return 0;
  }
  const ModelConfig cfg =
      ModelConfig::from_dataset(ds, model_kind_from_string(a.model), a.fg,
                                a.fl);
  std::optional<std::vector<double>> responses;
  if (!a.responses.empty()) responses = parse_responses(a.responses);
  const FitResult res =
      fit(ds, cfg, a.train, responses ? &*responses : nullptr);
  save_model(a.out, res.model);
  auto diag = detail::open_output(a.out + ".diag.csv");
  write_trace_csv(diag, res.trace);
  std::cout << "wrote " << a.out << " and " << a.out << ".diag.csv\n";
  return 0;
}

struct PredictArgs {
  std::string events, out;
  ScorerInputs scorer;
};

inline int cmd_predict(const PredictArgs& a) {
  ParsedEvents ev = parse_events(a.events);
  ScorerInputs in = a.scorer;
  in.num_users_hint = ev.num_users;
  in.num_items_hint = ev.num_items;
  const auto ctx = build_scorer(in);
  auto out = detail::open_output(a.out);
  write_predictions(out, ev.events, ctx->score);
  std::cout << "wrote " << a.out << '\n';
  return 0;
}

struct EvalArgs {
  std::string events, out;
  std::string metrics = "p@1,p@3,p@5,map";
  ScorerInputs scorer;
  std::string t_test_a, t_test_b;
  std::string t_test_metric = "ap";
};

inline int cmd_eval(const EvalArgs& a) {
  if (!a.t_test_a.empty() || !a.t_test_b.empty()) {
    if (a.t_test_a.empty() || a.t_test_b.empty())
      throw ValidationError("paired test needs both --t-test-a and "
                            "--t-test-b");
    auto ia = detail::open_input(a.t_test_a);
    auto ib = detail::open_input(a.t_test_b);
    const auto fa = parse_per_query_tsv(ia);
    const auto fb = parse_per_query_tsv(ib);
    const TTestResult r = paired_t_test_files(fa, fb, a.t_test_metric);
    std::cout << "metric=" << a.t_test_metric << " n=" << r.n
              << " mean_diff=" << r.mean_diff << " t=" << r.t
              << " p=" << r.p_text << " significance=" << r.bucket << '\n';
    return 0;
  }
  if (a.events.empty())
    throw ValidationError("eval needs --events with test queries");
  if (a.out.empty()) throw ValidationError("eval needs --out directory");
  const MetricSelection sel = parse_metrics(a.metrics);

  ParsedEvents ev = parse_events(a.events);
  ScorerInputs in = a.scorer;
  in.num_users_hint = ev.num_users;
  in.num_items_hint = ev.num_items;
  const auto ctx = build_scorer(in);

  std::vector<std::int64_t> activity;
  if (!a.scorer.train_events.empty()) {
    const ParsedEvents train = parse_events(a.scorer.train_events);
    activity = user_activity_counts(
        train.events, std::max(train.num_users, ev.num_users));
  }
  const auto queries = group_queries(ev.events);
  const MetricReport rep =
      evaluate_queries(queries, ctx->score, sel.ks, activity);

  std::filesystem::create_directories(a.out);
  {
    auto f = detail::open_output(a.out + "/report.csv");
    write_metric_report_csv(f, rep, sel.ks);
  }
  {
    auto f = detail::open_output(a.out + "/per_query.tsv");
    write_per_query_tsv(f, rep, sel.ks);
  }
  if (!rep.pr_curve.empty()) {
    auto f = detail::open_output(a.out + "/pr_curve.csv");
    write_pr_curve_csv(f, rep.pr_curve);
  }
  std::cout << "queries=" << rep.overall.queries
            << " evaluated=" << rep.overall.evaluated;
  for (int k : sel.ks)
    std::cout << " p@" << k << "=" << rep.overall.p_at.at(k);
  if (sel.map) std::cout << " map=" << rep.overall.map;
  if (rep.skipped_no_relevant > 0)
    std::cout << " skipped_no_relevant=" << rep.skipped_no_relevant;
  std::cout << '\n';
  return 0;
}

struct SplitArgs {
  std::string events, out;
  std::uint64_t seed = 1;
  int min_user_actions = 0;
};

inline int cmd_split(const SplitArgs& a) {
  Dataset ds = make_dataset(parse_events(a.events));
  SplitOptions opts;
  opts.seed = a.seed;
  opts.min_user_actions = a.min_user_actions;
  const SplitSpec spec = split_train_tune_test(ds, opts);
  std::filesystem::create_directories(a.out);
  write_split(a.out, spec);
  std::cout << "train_events=" << spec.train.events.size()
            << " tune_queries=" << spec.tune.size()
            << " test_queries=" << spec.test.size() << '\n';
  return 0;
}

struct AnalyzeArgs {
  std::string counts, out;
  std::int64_t min_denominator = 2000;
  int level = 1;
};

inline int cmd_analyze(const AnalyzeArgs& a) {
  auto in = detail::open_input(a.counts);
  const AggregateCounts counts = parse_aggregate_counts(in);
  std::filesystem::create_directories(a.out);
  {
    auto f = detail::open_output(a.out + "/correlations.csv");
    write_correlation_csv(f, correlation_matrix(counts, a.min_denominator));
  }
  for (const auto& type : counts.action_types) {
    {
      auto f = detail::open_output(a.out + "/log_ratio_" + type + ".csv");
      write_log_ratio_csv(f, log_ratio_profile(counts, type, a.level));
    }
    {
      auto f = detail::open_output(a.out + "/cv_" + type + ".csv");
      write_cv_csv(f,
                   cv_by_category(counts, type, a.level, a.min_denominator));
    }
  }
  std::cout << "wrote analysis for " << counts.action_types.size()
            << " action types to " << a.out << '\n';
  return 0;
}

struct SynthArgs {
  std::string out;
  GenSpec spec;
  std::string regime = "mixed";
};

inline int cmd_synth(SynthArgs a) {
  a.spec.regime = regime_from_string(a.regime);
  const SyntheticData data = generate(a.spec);
  std::filesystem::create_directories(a.out);
  write_events(a.out + "/events.tsv", data.dataset.events,
               data.dataset.num_users, data.dataset.num_items,
               data.dataset.num_facets);
  write_features(a.out + "/user_features.tsv", data.dataset.user_features);
  write_features(a.out + "/item_features.tsv", data.dataset.item_features);
  write_responses(a.out + "/responses.tsv", data.responses);
  save_model(a.out + "/truth.model", data.truth);
  std::int64_t positives = 0;
  for (const Event& e : data.dataset.events) positives += e.label;
  std::cout << "events=" << data.dataset.events.size()
            << " positives=" << positives
            << " threshold=" << data.label_threshold << '\n';
  return 0;
}

struct TuneArgs {
  std::string events, tune_events, user_features, item_features, responses,
      out;
  std::string model = "lat";
  std::string fg_grid = "1,2,4,8,16";
  std::string fl_grid = "1,2,4,8,16";
  TrainOptions train;
};

inline int cmd_tune(const TuneArgs& a) {
  if (!is_factor_name(a.model))
    throw ValidationError("tune supports the factor models only");
  Dataset ds = load_dataset(a.events, a.user_features, a.item_features);
  const ParsedEvents tune_ev = parse_events(a.tune_events);
  const auto tune_queries = group_queries(tune_ev.events);
  if (tune_queries.empty()) throw ValidationError("tuning set is empty");
  std::optional<std::vector<double>> responses;
  if (!a.responses.empty()) responses = parse_responses(a.responses);

  const auto kind = model_kind_from_string(a.model);
  std::vector<std::pair<std::int32_t, std::int32_t>> grid;
  for (auto fg : parse_grid(a.fg_grid))
    for (auto fl : parse_grid(a.fl_grid)) {
      const ModelConfig cfg =
          ModelConfig::from_dataset(ds, kind, fg, fl).normalized();
      const std::pair<std::int32_t, std::int32_t> pt{cfg.fg, cfg.fl};
      bool seen = false;
      for (const auto& g : grid) seen = seen || g == pt;
      if (!seen) grid.push_back(pt);
    }

  struct Entry {
    std::int32_t fg, fl;
    double map;
  };
  std::vector<Entry> table;
  std::optional<FitResult> best;
  std::size_t best_idx = 0;
  for (const auto& [fg, fl] : grid) {
    const ModelConfig cfg = ModelConfig::from_dataset(ds, kind, fg, fl);
    FitResult res = fit(ds, cfg, a.train, responses ? &*responses : nullptr);
    const ScoreFn score =
        make_model_scorer(res.model, ds.user_features, ds.item_features);
    const MetricReport rep = evaluate_queries(tune_queries, score, {});
    table.push_back(Entry{fg, fl, rep.overall.map});
    const bool better =
        !best || rep.overall.map > table[best_idx].map ||
        (rep.overall.map == table[best_idx].map &&
         fg + fl < table[best_idx].fg + table[best_idx].fl);
    if (better) {
      best = std::move(res);
      best_idx = table.size() - 1;
    }
  }
  save_model(a.out, best->model);
  {
    auto f = detail::open_output(a.out + ".grid.csv");
    f.precision(17);
    f << "fg,fl,tune_map,selected\n";
    for (std::size_t g = 0; g < table.size(); ++g)
      f << table[g].fg << ',' << table[g].fl << ',' << table[g].map << ','
        << (g == best_idx ? 1 : 0) << '\n';
  }
  std::cout << "selected fg=" << table[best_idx].fg
            << " fl=" << table[best_idx].fl
            << " tune_map=" << table[best_idx].map << ", wrote " << a.out
            << " and " << a.out << ".grid.csv\n";
  return 0;
}

inline void add_scorer_flags(CLI::App* cmd, ScorerInputs& s) {
  cmd->add_option("--model-file", s.model_file,
                  "trained model file (factor or bilinear)");
  cmd->add_option("--model", s.model_name,
                  "model kind; cos|lm|bm25 score without a model file")
      ->check(CLI::IsMember(
          {"lat", "bst", "smf", "cmf", "bilinear", "cos", "lm", "bm25"}));
  cmd->add_option("--user-features", s.user_features,
                  "user feature file (id idx:val ...)");
  cmd->add_option("--item-features", s.item_features, "item feature file");
  cmd->add_option("--train-events", s.train_events,
                  "training events (retrieval profiles, activity buckets)");
  cmd->add_option("--item-text", s.item_text,
                  "item text file (item_id<TAB>text)");
  cmd->add_option("--mu", s.params.mu, "Dirichlet smoothing mass")
      ->capture_default_str();
  cmd->add_option("--k1", s.params.k1, "BM25 document tf saturation")
      ->capture_default_str();
  cmd->add_option("--k3", s.params.k3, "BM25 query tf saturation")
      ->capture_default_str();
  cmd->add_option("--b", s.params.b, "BM25 length normalization")
      ->capture_default_str();
}

inline void add_train_option_flags(CLI::App* cmd, TrainOptions& t) {
  cmd->add_option("--em-iters", t.em_iters, "EM iterations")
      ->capture_default_str();
  cmd->add_option("--gibbs-samples", t.gibbs_samples,
                  "retained Gibbs samples per E-step")
      ->capture_default_str();
  cmd->add_option("--burn-in", t.burn_in, "discarded sweeps per E-step")
      ->capture_default_str();
  cmd->add_option("--seed", t.seed, "random seed")->capture_default_str();
  cmd->add_option("--ridge-lambda", t.ridge_lambda,
                  "ridge weight in the M-step regressions")
      ->capture_default_str();
  cmd->add_option("--variance-floor", t.variance_floor,
                  "lower bound for variance estimates")
      ->capture_default_str();
  cmd->add_flag("--freeze-var-y{false}", t.learn_var_y,
                "keep the response variance at its initial value");
}

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv) {
  using namespace cli_detail;
  CLI::App app{"multi-faceted ranking toolkit: latent factor models with "
               "regression priors, retrieval baselines, and ranking "
               "evaluation"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "fit a model");
  train_cmd->add_option("--events", train_args.events, "training events file")
      ->required();
  train_cmd->add_option("--user-features", train_args.user_features,
                        "user feature file");
  train_cmd->add_option("--item-features", train_args.item_features,
                        "item feature file");
  train_cmd->add_option("--responses", train_args.responses,
                        "real-valued responses aligned with events");
  train_cmd
      ->add_option("--model", train_args.model,
                   "model kind: lat|bst|smf|cmf|bilinear")
      ->check(CLI::IsMember({"lat", "bst", "smf", "cmf", "bilinear", "cos",
                             "lm", "bm25"}))
      ->capture_default_str();
  train_cmd->add_option("--fg", train_args.fg, "global factor rank")
      ->capture_default_str();
  train_cmd->add_option("--fl", train_args.fl, "local factor rank")
      ->capture_default_str();
  add_train_option_flags(train_cmd, train_args.train);
  train_cmd->add_option("--cv-folds", train_args.bilinear.folds,
                        "cross-validation folds (bilinear)")
      ->capture_default_str();
  train_cmd->add_option("--out", train_args.out, "output model file")
      ->required();

  PredictArgs predict_args;
  auto* predict_cmd =
      app.add_subcommand("predict", "score (user,item,facet) triples");
  predict_cmd
      ->add_option("--events", predict_args.events,
                   "triples to score, events format (labels ignored)")
      ->required();
  add_scorer_flags(predict_cmd, predict_args.scorer);
  predict_cmd->add_option("--out", predict_args.out, "output TSV")->required();

  EvalArgs eval_args;
  auto* eval_cmd =
      app.add_subcommand("eval", "rank test queries and report metrics");
  eval_cmd->add_option("--events", eval_args.events,
                       "test events with labels");
  add_scorer_flags(eval_cmd, eval_args.scorer);
  eval_cmd->add_option("--metrics", eval_args.metrics,
                       "comma list of p@<k> and map")
      ->capture_default_str();
  eval_cmd->add_option("--out", eval_args.out, "output directory");
  eval_cmd->add_option("--t-test-a", eval_args.t_test_a,
                       "per-query TSV of the first run (paired test mode)");
  eval_cmd->add_option("--t-test-b", eval_args.t_test_b,
                       "per-query TSV of the second run");
  eval_cmd->add_option("--t-test-metric", eval_args.t_test_metric,
                       "column to compare (e.g. ap, p@1)")
      ->capture_default_str();

  SplitArgs split_args;
  auto* split_cmd = app.add_subcommand(
      "split", "hold one facet out per user into tune/test query sets");
  split_cmd->add_option("--events", split_args.events, "events file")
      ->required();
  split_cmd->add_option("--seed", split_args.seed, "random seed")
      ->capture_default_str();
  split_cmd->add_option("--min-user-actions", split_args.min_user_actions,
                        "keep users with at least this many positives in "
                        "some facet")
      ->capture_default_str();
  split_cmd->add_option("--out", split_args.out, "output directory")
      ->required();

  AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand(
      "analyze", "exploratory statistics over aggregate counts");
  analyze_cmd->add_option("--counts", analyze_args.counts,
                          "aggregate counts CSV")
      ->required();
  analyze_cmd->add_option("--min-denominator", analyze_args.min_denominator,
                          "minimum views for a rate to enter correlations")
      ->capture_default_str();
  analyze_cmd->add_option("--level", analyze_args.level,
                          "category depth for profiles (1-3)")
      ->capture_default_str();
  analyze_cmd->add_option("--out", analyze_args.out, "output directory")
      ->required();

  SynthArgs synth_args;
  auto* synth_cmd =
      app.add_subcommand("synth", "generate a synthetic dataset with truth");
  synth_cmd->add_option("--users", synth_args.spec.num_users, "user count")
      ->capture_default_str();
  synth_cmd->add_option("--items", synth_args.spec.num_items, "item count")
      ->capture_default_str();
  synth_cmd->add_option("--facets", synth_args.spec.num_facets, "facet count")
      ->capture_default_str();
  synth_cmd->add_option("--fg", synth_args.spec.fg, "global factor rank")
      ->capture_default_str();
  synth_cmd->add_option("--fl", synth_args.spec.fl, "local factor rank")
      ->capture_default_str();
  synth_cmd
      ->add_option("--user-feature-dim", synth_args.spec.user_feature_dim,
                   "user feature dimension")
      ->capture_default_str();
  synth_cmd
      ->add_option("--item-feature-dim", synth_args.spec.item_feature_dim,
                   "item feature dimension")
      ->capture_default_str();
  synth_cmd->add_option("--density", synth_args.spec.density,
                        "observation probability per triple")
      ->capture_default_str();
  synth_cmd->add_option("--positive-rate", synth_args.spec.positive_rate,
                        "share of events labeled positive")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth_args.spec.seed, "random seed")
      ->capture_default_str();
  synth_cmd
      ->add_option("--regime", synth_args.regime,
                   "correlated-facets|independent-facets|collapsed|mixed")
      ->check(CLI::IsMember({"correlated-facets", "independent-facets",
                             "collapsed", "mixed"}))
      ->capture_default_str();
  synth_cmd->add_option("--w-scale", synth_args.spec.w_scale,
                        "tensor strength")
      ->capture_default_str();
  synth_cmd->add_option("--local-scale", synth_args.spec.local_scale,
                        "local factor strength")
      ->capture_default_str();
  synth_cmd->add_option("--var-y", synth_args.spec.var_y, "response noise")
      ->capture_default_str();
  synth_cmd->add_option("--out", synth_args.out, "output directory")
      ->required();

  TuneArgs tune_args;
  auto* tune_cmd = app.add_subcommand(
      "tune", "grid search over factor ranks by tuning-set MAP");
  tune_cmd->add_option("--events", tune_args.events, "training events file")
      ->required();
  tune_cmd->add_option("--tune-events", tune_args.tune_events,
                       "tuning queries, events format")
      ->required();
  tune_cmd->add_option("--user-features", tune_args.user_features,
                       "user feature file");
  tune_cmd->add_option("--item-features", tune_args.item_features,
                       "item feature file");
  tune_cmd->add_option("--responses", tune_args.responses,
                       "real-valued responses aligned with events");
  tune_cmd->add_option("--model", tune_args.model, "model kind: lat|bst|smf|cmf")
      ->check(CLI::IsMember({"lat", "bst", "smf", "cmf"}))
      ->capture_default_str();
  tune_cmd->add_option("--fg-grid", tune_args.fg_grid, "comma list of F_g")
      ->capture_default_str();
  tune_cmd->add_option("--fl-grid", tune_args.fl_grid, "comma list of F_l")
      ->capture_default_str();
  add_train_option_flags(tune_cmd, tune_args.train);
  tune_cmd->add_option("--out", tune_args.out, "output model file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (predict_cmd->parsed()) return cmd_predict(predict_args);
    if (eval_cmd->parsed()) return cmd_eval(eval_args);
    if (split_cmd->parsed()) return cmd_split(split_args);
    if (analyze_cmd->parsed()) return cmd_analyze(analyze_args);
    if (synth_cmd->parsed()) return cmd_synth(synth_args);
    if (tune_cmd->parsed()) return cmd_tune(tune_args);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace latrec
