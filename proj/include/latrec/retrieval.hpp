// Apache License, Version 2.0, refer to LICENSE.txt.
//
// Retrieval baselines scoring a user profile (as the query) against
// item text: tf-idf cosine, Dirichlet-smoothed language model, and
// Okapi BM25 with query-term weighting.

#pragma once

#include <cmath>
#include <cstdint>

#include "latrec/errors.hpp"
#include "latrec/text.hpp"

namespace latrec {

struct RetrievalParams {
  double mu = 2000.0;  // Dirichlet smoothing mass
  double k1 = 1.0;     // BM25 document tf saturation
  double k3 = 1000.0;  // BM25 query tf saturation
  double b = 0.75;     // BM25 length normalization

  void validate() const {
    if (mu <= 0.0) throw ValidationError("mu must be positive");
    if (k1 < 0.0) throw ValidationError("k1 must be nonnegative");
    if (k3 < 0.0) throw ValidationError("k3 must be nonnegative");
    if (b < 0.0 || b > 1.0) throw ValidationError("b must lie in [0, 1]");
  }
};

namespace detail {

inline double idf_cosine(const Corpus& c, std::int32_t t) {
  return std::log((static_cast<double>(c.num_docs) + 1.0) /
                  (static_cast<double>(c.df[static_cast<std::size_t>(t)]) +
                   1.0)) +
         1.0;
}

inline double idf_bm25(const Corpus& c, std::int32_t t) {
  const auto df = static_cast<double>(c.df[static_cast<std::size_t>(t)]);
  const double v =
      std::log((static_cast<double>(c.num_docs) - df + 0.5) / (df + 0.5));
  return v > 0.0 ? v : 0.0;
}

// Collection model with add-one mass for terms never seen in the
// collection (the profile may contain them when built elsewhere).
inline double collection_prob(const Corpus& c, std::int32_t t) {
  if (t >= 0 && t < static_cast<std::int32_t>(c.cf.size()) &&
      c.cf[static_cast<std::size_t>(t)] > 0)
    return static_cast<double>(c.cf[static_cast<std::size_t>(t)]) /
           static_cast<double>(c.total_cf);
  return 1.0 / (static_cast<double>(c.total_cf) +
                static_cast<double>(c.terms.size()) + 1.0);
}

// Walks two term-sorted sparse vectors, calling f(term, qtf, tf) for
// every profile term with the document count (0 when absent).
template <typename F>
void join_profile_doc(const TermCounts& profile, const TermCounts& doc, F&& f) {
  std::size_t di = 0;
  for (const auto& [t, qtf] : profile) {
    while (di < doc.size() && doc[di].first < t) ++di;
    const std::int32_t tf =
        (di < doc.size() && doc[di].first == t) ? doc[di].second : 0;
    f(t, qtf, tf);
  }
}

}  // namespace detail

// Cosine of the tf-idf weighted vectors; tf is the raw count and
// idf = ln((N+1)/(df+1)) + 1 on both sides. Zero when either side is
// empty.
inline double score_cosine(const UserProfile& profile, std::int64_t item,
                           const Corpus& corpus) {
  const TermCounts& doc = corpus.doc_terms[static_cast<std::size_t>(item)];
  if (profile.empty() || doc.empty()) return 0.0;
  double dot = 0.0;
  detail::join_profile_doc(profile.counts, doc,
                           [&](std::int32_t t, std::int32_t qtf,
                               std::int32_t tf) {
                             if (tf == 0) return;
                             const double idf = detail::idf_cosine(corpus, t);
                             dot += (qtf * idf) * (tf * idf);
                           });
  if (dot == 0.0) return 0.0;
  double qn = 0.0;
  for (const auto& [t, qtf] : profile.counts) {
    const double w = qtf * detail::idf_cosine(corpus, t);
    qn += w * w;
  }
  double dn = 0.0;
  for (const auto& [t, tf] : doc) {
    const double w = tf * detail::idf_cosine(corpus, t);
    dn += w * w;
  }
  return dot / (std::sqrt(qn) * std::sqrt(dn));
}

// Query log likelihood under the Dirichlet-smoothed document model:
// sum over profile terms of qtf * ln((tf + mu p_coll) / (len + mu)).
inline double score_lm_dirichlet(const UserProfile& profile, std::int64_t item,
                                 const Corpus& corpus, double mu) {
  if (mu <= 0.0) throw ValidationError("mu must be positive");
  if (profile.empty()) return 0.0;
  const TermCounts& doc = corpus.doc_terms[static_cast<std::size_t>(item)];
  const auto len =
      static_cast<double>(corpus.doc_len[static_cast<std::size_t>(item)]);
  double score = 0.0;
  detail::join_profile_doc(
      profile.counts, doc,
      [&](std::int32_t t, std::int32_t qtf, std::int32_t tf) {
        const double pc = detail::collection_prob(corpus, t);
        score += qtf * std::log((tf + mu * pc) / (len + mu));
      });
  return score;
}

// Okapi BM25 with query-term frequency weighting. The idf is clamped
// at zero so very common terms never subtract.
inline double score_bm25(const UserProfile& profile, std::int64_t item,
                         const Corpus& corpus, double k1, double k3,
                         double b) {
  if (k1 < 0.0 || k3 < 0.0) throw ValidationError("k1, k3 must be nonnegative");
  if (b < 0.0 || b > 1.0) throw ValidationError("b must lie in [0, 1]");
  if (profile.empty()) return 0.0;
  const TermCounts& doc = corpus.doc_terms[static_cast<std::size_t>(item)];
  const auto len =
      static_cast<double>(corpus.doc_len[static_cast<std::size_t>(item)]);
  const double rel_len =
      corpus.avg_doc_len > 0.0 ? len / corpus.avg_doc_len : 1.0;
  const double norm = k1 * ((1.0 - b) + b * rel_len);
  double score = 0.0;
  detail::join_profile_doc(
      profile.counts, doc,
      [&](std::int32_t t, std::int32_t qtf, std::int32_t tf) {
        if (tf == 0) return;
        const double doc_part = ((k1 + 1.0) * tf) / (norm + tf);
        const double query_part = ((k3 + 1.0) * qtf) / (k3 + qtf);
        score += detail::idf_bm25(corpus, t) * doc_part * query_part;
      });
  return score;
}

}  // namespace latrec
