// Apache License, Version 2.0, refer to LICENSE.txt.
//
// Text processing, the three retrieval scorers against hand-evaluated
// formulas on a five-document corpus, scorer monotonicity properties,
// and the per-facet bilinear regression baseline.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "latrec/bilinear.hpp"
#include "latrec/model_io.hpp"
#include "latrec/retrieval.hpp"
#include "latrec/text.hpp"

#include "helpers.hpp"

using namespace latrec;

namespace {

std::unordered_map<std::int64_t, std::string> five_docs() {
  return {{0, "apple banana apple"},
          {1, "banana cherry"},
          {2, "cherry apple date"},
          {3, "date egg"},
          {4, "fig"}};
}

UserProfile profile_of(std::initializer_list<std::pair<const char*, int>>
                           counts,
                       const Corpus& c) {
  UserProfile p;
  for (const auto& [term, n] : counts)
    p.counts.emplace_back(c.term_id(term), n);
  std::sort(p.counts.begin(), p.counts.end());
  return p;
}

}  // namespace

TEST_CASE("tokenizer lowercases and splits on non-alphanumerics") {
  CHECK(tokenize("Hello, World-2!") ==
        std::vector<std::string>{"hello", "world", "2"});
  CHECK(tokenize("  a  b ") == std::vector<std::string>{"a", "b"});
  CHECK(tokenize("...") == std::vector<std::string>{});
  CHECK(tokenize("") == std::vector<std::string>{});
}

TEST_CASE("item text parser keeps tabs inside the text column") {
  std::istringstream in("0\tHello world\n# note\n2\tTabs\tstay here\n\n");
  const auto texts = parse_item_text(in);
  REQUIRE(texts.size() == 2);
  CHECK(texts.at(0) == "Hello world");
  CHECK(texts.at(2) == "Tabs\tstay here");

  std::istringstream dup("0\ta\n0\tb\n");
  CHECK_THROWS_AS(parse_item_text(dup), ParseError);
  std::istringstream no_tab("0 missing tab\n");
  CHECK_THROWS_AS(parse_item_text(no_tab), ParseError);
  std::istringstream bad_id("x\ttext\n");
  CHECK_THROWS_AS(parse_item_text(bad_id), ParseError);
}

TEST_CASE("corpus statistics match hand counts") {
  const Corpus c = Corpus::build(five_docs(), 5);
  CHECK(c.num_docs == 5);
  CHECK(c.total_cf == 11);
  CHECK(c.avg_doc_len == Catch::Approx(11.0 / 5.0));
  CHECK(c.doc_len == std::vector<std::int64_t>{3, 2, 3, 2, 1});

  const auto apple = c.term_id("apple");
  REQUIRE(apple >= 0);
  CHECK(c.df[static_cast<std::size_t>(apple)] == 2);
  CHECK(c.cf[static_cast<std::size_t>(apple)] == 3);
  CHECK(c.term_id("durian") == -1);

  // doc_terms rows are sorted by term id with correct counts.
  for (const auto& doc : c.doc_terms)
    for (std::size_t t = 1; t < doc.size(); ++t)
      CHECK(doc[t - 1].first < doc[t].first);

  // Extra unseen item slots become empty documents.
  const Corpus wide = Corpus::build(five_docs(), 8);
  CHECK(wide.doc_terms[7].empty());
  CHECK(wide.avg_doc_len == Catch::Approx(11.0 / 8.0));

  CHECK_THROWS_AS(Corpus::build(five_docs(), 3), ValidationError);
}

TEST_CASE("user profiles pool distinct positive items across facets") {
  const Corpus c = Corpus::build(five_docs(), 5);
  const std::vector<Event> events{
      {0, 0, 0, 1}, {0, 0, 1, 1},  // same item, two facets: counted once
      {0, 1, 0, 1}, {0, 2, 0, 0},  // negative ignored
      {1, 4, 2, 1}, {2, 3, 0, 0}};
  const UserProfile p0 = build_user_profile(events, 0, c);
  // Items 0 and 1: apple 2, banana 1+1, cherry 1.
  const UserProfile expect =
      profile_of({{"apple", 2}, {"banana", 2}, {"cherry", 1}}, c);
  CHECK(p0.counts == expect.counts);

  const auto all = build_user_profiles(events, 3, c);
  REQUIRE(all.size() == 3);
  CHECK(all[0].counts == p0.counts);
  CHECK(all[1].counts == profile_of({{"fig", 1}}, c).counts);
  CHECK(all[2].empty());
}

TEST_CASE("cosine matches the hand-evaluated five-document corpus") {
  const Corpus c = Corpus::build(five_docs(), 5);
  const UserProfile p = profile_of({{"apple", 2}, {"banana", 1}}, c);

  // All profile/doc-2 terms have df = 2, so the common idf cancels:
  // cos = dot / (|q||d|) = 2 / (sqrt(5) * sqrt(3)).
  CHECK(score_cosine(p, 2, c) ==
        Catch::Approx(2.0 / std::sqrt(15.0)).epsilon(1e-9));
  // Doc 0 has exactly the profile counts: parallel vectors.
  CHECK(score_cosine(p, 0, c) == Catch::Approx(1.0).epsilon(1e-9));
  // No overlap.
  CHECK(score_cosine(p, 4, c) == 0.0);
  // Mixed-df case, spelled out in full.
  const UserProfile q = profile_of({{"egg", 1}, {"apple", 1}}, c);
  const double i_apple = std::log(6.0 / 3.0) + 1.0;
  const double i_egg = std::log(6.0 / 2.0) + 1.0;
  const double i_date = std::log(6.0 / 3.0) + 1.0;
  const double dot = (1.0 * i_egg) * (1.0 * i_egg);  // doc 3: date egg
  const double qn = std::sqrt(i_egg * i_egg + i_apple * i_apple);
  const double dn = std::sqrt(i_date * i_date + i_egg * i_egg);
  CHECK(score_bm25(q, 3, c, 1.0, 1000.0, 0.75) > 0.0);
  CHECK(score_cosine(q, 3, c) == Catch::Approx(dot / (qn * dn)).epsilon(1e-9));

  CHECK(score_cosine(UserProfile{}, 0, c) == 0.0);
}

TEST_CASE("dirichlet language model matches the hand formula") {
  const Corpus c = Corpus::build(five_docs(), 5);
  const UserProfile p = profile_of({{"apple", 2}, {"banana", 1}}, c);
  const double mu = 10.0;

  // Doc 2 = {cherry, apple, date}, len 3. Smoothing mass for banana.
  const double p_apple = 3.0 / 11.0, p_banana = 2.0 / 11.0;
  const double expected = 2.0 * std::log((1.0 + mu * p_apple) / (3.0 + mu)) +
                          1.0 * std::log((0.0 + mu * p_banana) / (3.0 + mu));
  CHECK(score_lm_dirichlet(p, 2, c, mu) ==
        Catch::Approx(expected).epsilon(1e-9));

  // Empty profile scores zero; empty doc is pure smoothing.
  CHECK(score_lm_dirichlet(UserProfile{}, 2, c, mu) == 0.0);
  const Corpus wide = Corpus::build(five_docs(), 6);
  const UserProfile pw = profile_of({{"apple", 2}, {"banana", 1}}, wide);
  const double empty_doc = 2.0 * std::log(mu * p_apple / mu) +
                           std::log(mu * p_banana / mu);
  CHECK(score_lm_dirichlet(pw, 5, wide, mu) ==
        Catch::Approx(empty_doc).epsilon(1e-9));
  CHECK_THROWS_AS(score_lm_dirichlet(p, 2, c, 0.0), ValidationError);
}

TEST_CASE("bm25 matches the hand formula and clamps negative idf") {
  const Corpus c = Corpus::build(five_docs(), 5);
  const UserProfile p = profile_of({{"apple", 2}, {"banana", 1}}, c);
  const double k1 = 1.2, k3 = 1000.0, b = 0.75;

  // Doc 2: only apple overlaps; idf = ln((5-2+0.5)/(2+0.5)) = ln 1.4.
  const double idf = std::log(1.4);
  const double norm = k1 * ((1.0 - b) + b * 3.0 / (11.0 / 5.0));
  const double doc_part = ((k1 + 1.0) * 1.0) / (norm + 1.0);
  const double query_part = ((k3 + 1.0) * 2.0) / (k3 + 2.0);
  CHECK(score_bm25(p, 2, c, k1, k3, b) ==
        Catch::Approx(idf * doc_part * query_part).epsilon(1e-9));

  // A term present in most documents gets idf clamped to zero.
  const Corpus common = Corpus::build(
      {{0, "shared shared rare"}, {1, "shared"}, {2, "shared"}}, 3);
  const UserProfile ps = profile_of({{"shared", 1}}, common);
  CHECK(score_bm25(ps, 0, common, k1, k3, b) == 0.0);
  const UserProfile pr = profile_of({{"rare", 1}}, common);
  CHECK(score_bm25(pr, 0, common, k1, k3, b) > 0.0);

  CHECK(score_bm25(UserProfile{}, 0, c, k1, k3, b) == 0.0);
  CHECK_THROWS_AS(score_bm25(p, 0, c, -1.0, k3, b), ValidationError);
  CHECK_THROWS_AS(score_bm25(p, 0, c, k1, k3, 1.5), ValidationError);
}

TEST_CASE("bm25 and lm rank higher term frequency higher at equal length") {
  StreamRng rng(derive_stream(606, {1}));
  const std::vector<std::string> fillers{"red",  "blue", "green",
                                         "gray", "pink", "teal"};
  for (int rep = 0; rep < 150; ++rep) {
    const int len = 3 + static_cast<int>(rng.uniform_index(8));
    const int tf_b = static_cast<int>(rng.uniform_index(len));  // may be 0
    const int tf_a =
        tf_b + 1 + static_cast<int>(rng.uniform_index(len - tf_b));
    auto doc = [&](int tf) {
      std::string s;
      for (int t = 0; t < tf; ++t) s += "query ";
      for (int t = tf; t < len; ++t)
        s += fillers[rng.uniform_index(fillers.size())] + " ";
      return s;
    };
    std::unordered_map<std::int64_t, std::string> texts{{0, doc(tf_a)},
                                                        {1, doc(tf_b)}};
    // Six more docs without the query term keep its df low.
    for (std::int64_t d = 2; d < 8; ++d) {
      std::string s;
      for (int t = 0; t < len; ++t)
        s += fillers[rng.uniform_index(fillers.size())] + " ";
      texts[d] = s;
    }
    const Corpus c = Corpus::build(texts, 8);
    UserProfile p;
    p.counts = {{c.term_id("query"), 1 + static_cast<int>(
                                             rng.uniform_index(3))}};

    CHECK(score_bm25(p, 0, c, 1.0, 1000.0, 0.75) >
          score_bm25(p, 1, c, 1.0, 1000.0, 0.75));
    CHECK(score_lm_dirichlet(p, 0, c, 2000.0) >
          score_lm_dirichlet(p, 1, c, 2000.0));

    // Dirichlet smoothing washes out the gap as mu grows.
    const double gap_small = score_lm_dirichlet(p, 0, c, 10.0) -
                             score_lm_dirichlet(p, 1, c, 10.0);
    const double gap_large = score_lm_dirichlet(p, 0, c, 1e9) -
                             score_lm_dirichlet(p, 1, c, 1e9);
    CHECK(gap_large < gap_small);
    CHECK(std::abs(gap_large) < 1e-6);
  }
}

// ---------------------------------------------------------------------------
// Bilinear baseline.

namespace {

Dataset bilinear_dataset(std::int64_t users, std::int64_t items,
                         std::int32_t facets, std::uint64_t seed,
                         std::vector<Eigen::MatrixXd>* true_w = nullptr) {
  Dataset ds;
  ds.num_users = users;
  ds.num_items = items;
  ds.num_facets = facets;
  ds.user_feature_dim = 3;
  ds.item_feature_dim = 3;
  ds.user_features.resize(static_cast<std::size_t>(users));
  ds.item_features.resize(static_cast<std::size_t>(items));
  StreamRng rng(derive_stream(seed, {77}));
  for (auto& fv : ds.user_features)
    fv.entries = {{0, rng.normal()}, {1, rng.normal()}, {2, rng.normal()}};
  for (auto& fv : ds.item_features)
    fv.entries = {{0, rng.normal()}, {1, rng.normal()}, {2, rng.normal()}};

  std::vector<Eigen::MatrixXd> W(static_cast<std::size_t>(facets));
  for (auto& w : W) {
    w.resize(3, 3);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) w(a, b) = rng.normal();
  }
  if (true_w) *true_w = W;

  for (std::int64_t i = 0; i < users; ++i)
    for (std::int64_t j = 0; j < items; ++j)
      for (std::int32_t k = 0; k < facets; ++k) {
        if (rng.uniform() > 0.5) continue;
        double z = -0.3;
        for (const auto& [a, va] : ds.user_features[i].entries)
          for (const auto& [b, vb] : ds.item_features[j].entries)
            z += va * vb * W[static_cast<std::size_t>(k)](a, b);
        const double prob = 1.0 / (1.0 + std::exp(-2.0 * z));
        ds.events.push_back(
            Event{i, j, k, static_cast<std::uint8_t>(rng.uniform() < prob)});
      }
  return ds;
}

}  // namespace

TEST_CASE("bilinear fit recovers the generating interaction matrix") {
  std::vector<Eigen::MatrixXd> true_w;
  const Dataset ds = bilinear_dataset(60, 60, 1, 5, &true_w);
  BilinearOptions opts;
  opts.seed = 3;
  const BilinearModel m = fit_bilinear(ds, opts);
  REQUIRE(m.W.size() == 1);
  CHECK(m.warnings.empty());

  const Eigen::Map<const Eigen::VectorXd> a(true_w[0].data(), 9);
  const Eigen::Map<const Eigen::VectorXd> b(m.W[0].data(), 9);
  const double cosine = a.dot(b) / (a.norm() * b.norm());
  CHECK(cosine > 0.9);
  CHECK(m.chosen_lambda(0) > 0.0);

  // The model scores through the same contraction used to simulate.
  const double s = m.score(ds.user_features[0], ds.item_features[1], 0);
  double expect = m.intercept(0);
  for (const auto& [p, vp] : ds.user_features[0].entries)
    for (const auto& [q, vq] : ds.item_features[1].entries)
      expect += vp * vq * m.W[0](p, q);
  CHECK(s == Catch::Approx(expect).epsilon(1e-12));
}

TEST_CASE("bilinear intercept is the exact unpenalized log odds") {
  Dataset ds;
  ds.num_users = 40;
  ds.num_items = 10;
  ds.num_facets = 1;
  ds.user_feature_dim = 1;
  ds.item_feature_dim = 1;
  ds.user_features.resize(40);  // all-zero features
  ds.item_features.resize(10);
  StreamRng rng(derive_stream(8, {12}));
  std::int64_t pos = 0, n = 0;
  for (std::int64_t i = 0; i < 40; ++i)
    for (std::int64_t j = 0; j < 10; ++j) {
      const bool label = rng.uniform() < 0.25;
      pos += label;
      ++n;
      ds.events.push_back(Event{i, j, 0, static_cast<std::uint8_t>(label)});
    }
  const BilinearModel m = fit_bilinear(ds, BilinearOptions{});
  const double expected =
      std::log(static_cast<double>(pos) / static_cast<double>(n - pos));
  CHECK(m.intercept(0) == Catch::Approx(expected).epsilon(1e-6));
  CHECK(m.W[0].cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("bilinear handles single-class and empty facets with warnings") {
  Dataset ds = bilinear_dataset(10, 10, 3, 9);
  // Facet 1: force all positives. Facet 2: drop everything.
  std::vector<Event> events;
  for (Event e : ds.events) {
    if (e.facet == 1) e.label = 1;
    if (e.facet != 2) events.push_back(e);
  }
  ds.events = events;
  std::int64_t n1 = 0;
  for (const Event& e : ds.events) n1 += e.facet == 1;

  const BilinearModel m = fit_bilinear(ds, BilinearOptions{});
  REQUIRE(m.warnings.size() == 2);
  // Single class: add-one smoothed log odds, zero interactions.
  const double p_hat = static_cast<double>(n1 + 1) /
                       static_cast<double>(n1 + 2);
  CHECK(m.intercept(1) ==
        Catch::Approx(std::log(p_hat / (1.0 - p_hat))).epsilon(1e-12));
  CHECK(m.W[1].cwiseAbs().maxCoeff() == 0.0);
  CHECK(m.intercept(2) == 0.0);
  CHECK(m.W[2].cwiseAbs().maxCoeff() == 0.0);

  bool mentions_facet = false;
  for (const auto& w : m.warnings)
    mentions_facet = mentions_facet || w.find("facet") != std::string::npos;
  CHECK(mentions_facet);
}

TEST_CASE("bilinear fitting is deterministic and needs features") {
  const Dataset ds = bilinear_dataset(20, 20, 2, 13);
  BilinearOptions opts;
  opts.seed = 4;
  const BilinearModel a = fit_bilinear(ds, opts);
  const BilinearModel b = fit_bilinear(ds, opts);
  CHECK(a.W[0] == b.W[0]);
  CHECK(a.W[1] == b.W[1]);
  CHECK(a.intercept == b.intercept);
  CHECK(a.chosen_lambda == b.chosen_lambda);

  Dataset no_features = ds;
  no_features.user_feature_dim = 0;
  for (auto& fv : no_features.user_features) fv.entries.clear();
  CHECK_THROWS_AS(fit_bilinear(no_features, opts), ValidationError);
}

TEST_CASE("bilinear serialization round trips and families stay separate") {
  testutil::TempDir dir;
  const Dataset ds = bilinear_dataset(15, 15, 2, 21);
  const BilinearModel m = fit_bilinear(ds, BilinearOptions{});
  const std::string path = dir.file("b.model");
  save_bilinear(path, m);
  const BilinearModel r = load_bilinear(path);
  CHECK(r.num_facets == m.num_facets);
  CHECK(r.pu == m.pu);
  CHECK(r.pv == m.pv);
  CHECK(r.W[0] == m.W[0]);
  CHECK(r.W[1] == m.W[1]);
  CHECK(r.intercept == m.intercept);
  CHECK(r.chosen_lambda == m.chosen_lambda);

  // A factor-model loader must refuse this file, and vice versa.
  CHECK_THROWS_MATCHES(load_model(path), FormatError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("family")));
  ModelConfig cfg;
  cfg.num_users = 2;
  cfg.num_items = 2;
  cfg.num_facets = 1;
  TrainedModel factor;
  factor.config = cfg;
  factor.priors = PriorParams::initial(cfg);
  factor.factors = FactorState::zeros(cfg);
  factor.presence = TrainingPresence::none(cfg);
  save_model(dir.file("f.model"), factor);
  CHECK_THROWS_AS(load_bilinear(dir.file("f.model")), FormatError);

  // Score dimension guards.
  FeatureVector wide;
  wide.entries = {{7, 1.0}};
  CHECK_THROWS_AS(m.score(wide, ds.item_features[0], 0), DimensionError);
  CHECK_THROWS_AS(m.score(ds.user_features[0], ds.item_features[0], 5),
                  DimensionError);
}
