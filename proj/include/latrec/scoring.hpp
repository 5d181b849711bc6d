// Apache License, Version 2.0, refer to LICENSE.txt.
//
// Adapters exposing every model family as a (user, item, facet) score
// callback, the shape the evaluation and prediction paths consume. The
// callbacks hold references; the referenced objects must outlive them.

#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "latrec/bilinear.hpp"
#include "latrec/data.hpp"
#include "latrec/errors.hpp"
#include "latrec/model.hpp"
#include "latrec/model_io.hpp"
#include "latrec/retrieval.hpp"
#include "latrec/text.hpp"

namespace latrec {

using ScoreFn = std::function<double(std::int64_t, std::int64_t, std::int32_t)>;

namespace detail {

inline const FeatureVector& feature_or_empty(
    const std::vector<FeatureVector>& table, std::int64_t id) {
  static const FeatureVector kEmpty{};
  if (id < 0 || id >= static_cast<std::int64_t>(table.size())) return kEmpty;
  return table[static_cast<std::size_t>(id)];
}

}  // namespace detail

// Factor model scores with regression-prior fallback for users, items,
// or (user, facet) pairs never seen in training. Features come from
// the evaluation-side tables.
inline ScoreFn make_model_scorer(const TrainedModel& m,
                                 const std::vector<FeatureVector>& user_features,
                                 const std::vector<FeatureVector>& item_features) {
  return [&m, &user_features, &item_features](std::int64_t i, std::int64_t j,
                                              std::int32_t k) {
    return score_with_fallback(m.config, m.factors, m.priors, m.presence,
                               detail::feature_or_empty(user_features, i),
                               detail::feature_or_empty(item_features, j), i,
                               j, k);
  };
}

inline ScoreFn make_bilinear_scorer(
    const BilinearModel& m, const std::vector<FeatureVector>& user_features,
    const std::vector<FeatureVector>& item_features) {
  return [&m, &user_features, &item_features](std::int64_t i, std::int64_t j,
                                              std::int32_t k) {
    return m.score(detail::feature_or_empty(user_features, i),
                   detail::feature_or_empty(item_features, j), k);
  };
}

enum class RetrievalKind { Cos, Lm, Bm25 };

inline RetrievalKind retrieval_kind_from_string(const std::string& s) {
  if (s == "cos") return RetrievalKind::Cos;
  if (s == "lm") return RetrievalKind::Lm;
  if (s == "bm25") return RetrievalKind::Bm25;
  throw ValidationError("unknown retrieval model '" + s + "'");
}

// Retrieval baselines ignore the facet: the profile pools positives
// across facets and the item side is plain text.
inline ScoreFn make_retrieval_scorer(RetrievalKind kind,
                                     const std::vector<UserProfile>& profiles,
                                     const Corpus& corpus,
                                     const RetrievalParams& params) {
  params.validate();
  return [kind, &profiles, &corpus, params](std::int64_t i, std::int64_t j,
                                            std::int32_t) {
    static const UserProfile kEmpty{};
    const UserProfile& prof =
        (i >= 0 && i < static_cast<std::int64_t>(profiles.size()))
            ? profiles[static_cast<std::size_t>(i)]
            : kEmpty;
    if (j < 0 || j >= corpus.num_docs)
      throw DimensionError("item " + std::to_string(j) +
                           " has no text in the corpus");
    switch (kind) {
      case RetrievalKind::Cos:
        return score_cosine(prof, j, corpus);
      case RetrievalKind::Lm:
        return score_lm_dirichlet(prof, j, corpus, params.mu);
      case RetrievalKind::Bm25:
        return score_bm25(prof, j, corpus, params.k1, params.k3, params.b);
    }
    throw ValidationError("unreachable retrieval kind");
  };
}

// TSV of scores for the given triples: user, item, facet, score.
inline void write_predictions(std::ostream& out,
                              const std::vector<Event>& events,
                              const ScoreFn& score) {
  out.precision(17);
  out << "#user\titem\tfacet\tscore\n";
  for (const Event& e : events)
    out << e.user << '\t' << e.item << '\t' << e.facet << '\t'
        << score(e.user, e.item, e.facet) << '\n';
}

}  // namespace latrec
