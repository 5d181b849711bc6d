// Apache License, Version 2.0, refer to LICENSE.txt.
//
// Ranking metrics over (user, facet) queries: precision at k, average
// precision, interpolated precision-recall curves, paired significance
// tests, and slice breakdowns by facet and user activity.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "latrec/data.hpp"
#include "latrec/errors.hpp"

namespace latrec {

// Labels of one query in rank order: highest score first, ties broken
// by ascending item id so every metric is a pure function of the
// (score, label) multiset.
template <typename Scorer>
std::vector<std::uint8_t> rank_labels(const QueryGroup& q, Scorer&& scorer) {
  std::vector<std::pair<double, std::int64_t>> order;
  order.reserve(q.items.size());
  for (std::size_t n = 0; n < q.items.size(); ++n)
    order.emplace_back(-scorer(q.user, q.items[n].first, q.facet),
                       q.items[n].first);
  std::vector<std::size_t> idx(q.items.size());
  for (std::size_t n = 0; n < idx.size(); ++n) idx[n] = n;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return order[a] < order[b];
  });
  std::vector<std::uint8_t> out;
  out.reserve(idx.size());
  for (std::size_t n : idx) out.push_back(q.items[n].second);
  return out;
}

// Fraction of the top k that is relevant, with denominator k even when
// the query has fewer than k items; a user with a single positive can
// never exceed 1/k.
inline double precision_at_k(const std::vector<std::uint8_t>& ranked, int k) {
  if (k < 1) throw ValidationError("precision_at_k requires k >= 1");
  const auto top = std::min<std::size_t>(static_cast<std::size_t>(k),
                                         ranked.size());
  int hits = 0;
  for (std::size_t r = 0; r < top; ++r) hits += ranked[r] ? 1 : 0;
  return static_cast<double>(hits) / k;
}

// Mean of precision@r over the relevant ranks r; empty when the query
// has no relevant item (such queries are excluded from MAP).
inline std::optional<double> average_precision(
    const std::vector<std::uint8_t>& ranked) {
  int hits = 0;
  double sum = 0.0;
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    if (!ranked[r]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  if (hits == 0) return std::nullopt;
  return sum / hits;
}

inline double lift(double model_value, double baseline_value) {
  if (baseline_value <= 0.0)
    throw ValidationError("lift requires a positive baseline value");
  return (model_value - baseline_value) / baseline_value;
}

// Interpolated precision at the 11 recall points {0.0, 0.1, ..., 1.0}:
// the maximum precision attained at any rank whose recall reaches the
// point. Requires at least one relevant item.
inline std::vector<double> interpolated_precision(
    const std::vector<std::uint8_t>& ranked) {
  int total = 0;
  for (auto l : ranked) total += l ? 1 : 0;
  if (total == 0)
    throw ValidationError("precision-recall needs a relevant item");
  std::vector<double> prec, rec;
  int hits = 0;
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    if (ranked[r]) ++hits;
    prec.push_back(static_cast<double>(hits) / static_cast<double>(r + 1));
    rec.push_back(static_cast<double>(hits) / total);
  }
  std::vector<double> out(11, 0.0);
  for (int g = 0; g <= 10; ++g) {
    const double target = g / 10.0;
    double best = 0.0;
    for (std::size_t r = 0; r < prec.size(); ++r)
      if (rec[r] >= target - 1e-12) best = std::max(best, prec[r]);
    out[static_cast<std::size_t>(g)] = best;
  }
  return out;
}

namespace detail {

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Continued fraction for the incomplete beta (modified Lentz).
inline double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 3e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double reg_incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0)
    throw ValidationError("incomplete beta requires positive parameters");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = a * std::log(x) + b * std::log1p(-x) -
                          detail::log_beta(a, b);
  if (x < (a + 1.0) / (a + b + 2.0))
    return std::exp(ln_front) * detail::beta_cf(a, b, x) / a;
  return 1.0 - std::exp(ln_front) * detail::beta_cf(b, a, 1.0 - x) / b;
}

// Two-sided tail probability of Student's t with df degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
  if (df <= 0.0) throw ValidationError("degrees of freedom must be positive");
  if (!std::isfinite(t)) return 0.0;
  return reg_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  double mean_diff = 0.0;
  std::int64_t n = 0;
  std::string bucket;   // one of p<1e-4, p<1e-3, p<0.05, insignificant
  std::string p_text;   // numeric, or "<1e-10" for degenerate cases
};

inline std::string significance_bucket(double p) {
  if (p < 1e-4) return "p<1e-4";
  if (p < 1e-3) return "p<1e-3";
  if (p < 0.05) return "p<0.05";
  return "insignificant";
}

// Two-sided paired t-test on per-query differences a - b.
inline TTestResult paired_t_test(const std::vector<double>& a,
                                 const std::vector<double>& b) {
  if (a.size() != b.size())
    throw ValidationError("paired t-test requires equal-length vectors");
  if (a.size() < 2)
    throw ValidationError("paired t-test requires at least 2 pairs");
  const auto n = static_cast<std::int64_t>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  TTestResult out;
  out.n = n;
  out.mean_diff = mean;
  const double var = ss / static_cast<double>(n - 1);
  if (var == 0.0) {
    if (mean == 0.0) {
      out.t = 0.0;
      out.p = 1.0;
      out.bucket = "insignificant";
      out.p_text = "1";
      return out;
    }
    out.t = mean > 0 ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity();
    out.p = 0.0;
    out.bucket = significance_bucket(0.0);
    out.p_text = "<1e-10";
    return out;
  }
  out.t = mean / std::sqrt(var / static_cast<double>(n));
  out.p = student_t_two_sided_p(out.t, static_cast<double>(n - 1));
  out.bucket = significance_bucket(out.p);
  if (out.p < 1e-10) {
    out.p_text = "<1e-10";
  } else {
    std::ostringstream os;
    os << std::setprecision(6) << out.p;
    out.p_text = os.str();
  }
  return out;
}

// Per-query metric values; `ap` is empty when the query has no
// relevant item.
struct QueryMetrics {
  std::int64_t user = 0;
  std::int32_t facet = 0;
  std::int64_t num_items = 0;
  std::int64_t num_positive = 0;
  std::map<int, double> p_at;
  std::optional<double> ap;
};

struct SliceMetrics {
  std::string key;
  std::int64_t queries = 0;    // all queries in the slice
  std::int64_t evaluated = 0;  // queries with >= 1 relevant (MAP denominator)
  std::map<int, double> p_at;  // mean over all queries
  double map = 0.0;            // mean AP over evaluated queries
};

struct MetricReport {
  std::vector<QueryMetrics> per_query;
  SliceMetrics overall;
  std::vector<SliceMetrics> by_facet;     // key "facet=<k>"
  std::vector<SliceMetrics> by_activity;  // key = bucket label
  std::int64_t skipped_no_relevant = 0;
  std::vector<double> pr_curve;  // 11-point interpolated, mean over queries
};

// Training-activity buckets used for the per-activity breakdown.
inline const std::vector<std::string>& activity_bucket_labels() {
  static const std::vector<std::string> kLabels = {"0-5",   "6-10",  "11-15",
                                                   "16-25", "26-49", "50+"};
  return kLabels;
}

inline int activity_bucket(std::int64_t actions) {
  if (actions <= 5) return 0;
  if (actions <= 10) return 1;
  if (actions <= 15) return 2;
  if (actions <= 25) return 3;
  if (actions <= 49) return 4;
  return 5;
}

// Positive training actions per user, the activity measure behind the
// bucket breakdown.
inline std::vector<std::int64_t> user_activity_counts(
    const std::vector<Event>& train_events, std::int64_t num_users) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(num_users), 0);
  for (const Event& e : train_events)
    if (e.label && e.user < num_users)
      counts[static_cast<std::size_t>(e.user)]++;
  return counts;
}

namespace detail {

struct SliceAccum {
  std::int64_t queries = 0;
  std::int64_t evaluated = 0;
  std::map<int, double> p_sum;
  double ap_sum = 0.0;

  void add(const QueryMetrics& qm) {
    ++queries;
    for (const auto& [k, v] : qm.p_at) p_sum[k] += v;
    if (qm.ap) {
      ++evaluated;
      ap_sum += *qm.ap;
    }
  }
  SliceMetrics finish(std::string key) const {
    SliceMetrics s;
    s.key = std::move(key);
    s.queries = queries;
    s.evaluated = evaluated;
    for (const auto& [k, v] : p_sum)
      s.p_at[k] = queries ? v / static_cast<double>(queries) : 0.0;
    s.map = evaluated ? ap_sum / static_cast<double>(evaluated) : 0.0;
    return s;
  }
};

}  // namespace detail

// Scores and evaluates every query. `activity` may be empty, which
// omits the activity breakdown; out-of-range users land in the
// sparsest bucket.
template <typename Scorer>
MetricReport evaluate_queries(const std::vector<QueryGroup>& queries,
                              Scorer&& scorer, const std::vector<int>& ks,
                              const std::vector<std::int64_t>& activity = {}) {
  MetricReport rep;
  detail::SliceAccum overall;
  std::map<std::int32_t, detail::SliceAccum> facet_acc;
  std::map<int, detail::SliceAccum> act_acc;
  std::vector<double> pr_sum(11, 0.0);
  std::int64_t pr_n = 0;
  for (const QueryGroup& q : queries) {
    const auto ranked = rank_labels(q, scorer);
    QueryMetrics qm;
    qm.user = q.user;
    qm.facet = q.facet;
    qm.num_items = static_cast<std::int64_t>(ranked.size());
    qm.num_positive = q.num_positive();
    for (int k : ks) qm.p_at[k] = precision_at_k(ranked, k);
    qm.ap = average_precision(ranked);
    if (!qm.ap) ++rep.skipped_no_relevant;
    if (qm.ap) {
      const auto curve = interpolated_precision(ranked);
      for (std::size_t g = 0; g < curve.size(); ++g) pr_sum[g] += curve[g];
      ++pr_n;
    }
    overall.add(qm);
    facet_acc[q.facet].add(qm);
    if (!activity.empty()) {
      const std::int64_t acts =
          q.user < static_cast<std::int64_t>(activity.size())
              ? activity[static_cast<std::size_t>(q.user)]
              : 0;
      act_acc[activity_bucket(acts)].add(qm);
    }
    rep.per_query.push_back(std::move(qm));
  }
  rep.overall = overall.finish("overall");
  for (const auto& [facet, acc] : facet_acc)
    rep.by_facet.push_back(acc.finish("facet=" + std::to_string(facet)));
  for (const auto& [bucket, acc] : act_acc)
    rep.by_activity.push_back(
        acc.finish(activity_bucket_labels()[static_cast<std::size_t>(bucket)]));
  if (pr_n > 0) {
    rep.pr_curve.resize(11);
    for (std::size_t g = 0; g < 11; ++g)
      rep.pr_curve[g] = pr_sum[g] / static_cast<double>(pr_n);
  }
  return rep;
}

// CSV with one row per slice: overall, then facets, then activity.
inline void write_metric_report_csv(std::ostream& out,
                                    const MetricReport& rep,
                                    const std::vector<int>& ks) {
  out.precision(17);
  out << "slice,queries,evaluated";
  for (int k : ks) out << ",p@" << k;
  out << ",map\n";
  auto row = [&](const SliceMetrics& s) {
    out << s.key << ',' << s.queries << ',' << s.evaluated;
    for (int k : ks) {
      auto it = s.p_at.find(k);
      out << ',' << (it == s.p_at.end() ? 0.0 : it->second);
    }
    out << ',' << s.map << '\n';
  };
  row(rep.overall);
  for (const auto& s : rep.by_facet) row(s);
  for (const auto& s : rep.by_activity) row(s);
}

inline void write_pr_curve_csv(std::ostream& out,
                               const std::vector<double>& curve) {
  out.precision(17);
  out << "recall,precision\n";
  for (std::size_t g = 0; g < curve.size(); ++g)
    out << (g / 10.0) << ',' << curve[g] << '\n';
}

// Per-query TSV so two runs can be compared with the paired test.
// Columns: user, facet, one per k, then ap (NA when undefined).
inline void write_per_query_tsv(std::ostream& out, const MetricReport& rep,
                                const std::vector<int>& ks) {
  out.precision(17);
  out << "#user\tfacet";
  for (int k : ks) out << "\tp@" << k;
  out << "\tap\n";
  for (const QueryMetrics& qm : rep.per_query) {
    out << qm.user << '\t' << qm.facet;
    for (int k : ks) {
      auto it = qm.p_at.find(k);
      out << '\t' << (it == qm.p_at.end() ? 0.0 : it->second);
    }
    if (qm.ap)
      out << '\t' << *qm.ap << '\n';
    else
      out << "\tNA\n";
  }
}

struct PerQueryFile {
  std::vector<std::string> columns;  // metric names after user/facet
  // (user, facet) -> metric values, NaN for NA.
  std::vector<std::tuple<std::int64_t, std::int32_t, std::vector<double>>>
      rows;
};

inline PerQueryFile parse_per_query_tsv(std::istream& in) {
  PerQueryFile f;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_on(line, '\t');
    if (line_no == 1 && line[0] == '#') {
      if (fields.size() < 3)
        throw ParseError("header needs user, facet and a metric", line_no);
      for (std::size_t c = 2; c < fields.size(); ++c)
        f.columns.push_back(fields[c]);
      continue;
    }
    if (f.columns.empty())
      throw ParseError("missing #user<TAB>facet<TAB>... header", line_no);
    if (fields.size() != f.columns.size() + 2)
      throw ParseError("expected " + std::to_string(f.columns.size() + 2) +
                           " fields, got " + std::to_string(fields.size()),
                       line_no);
    std::vector<double> vals;
    for (std::size_t c = 2; c < fields.size(); ++c)
      vals.push_back(fields[c] == "NA"
                         ? std::numeric_limits<double>::quiet_NaN()
                         : detail::parse_double(fields[c], "metric value",
                                                line_no));
    f.rows.emplace_back(
        detail::parse_int(fields[0], "user id", line_no),
        static_cast<std::int32_t>(
            detail::parse_int(fields[1], "facet id", line_no)),
        std::move(vals));
  }
  if (f.columns.empty()) throw FormatError("per-query file is empty");
  return f;
}

// Paired test between two per-query files on the named metric. The
// files must cover exactly the same queries; pairs where either side
// is NA are dropped.
inline TTestResult paired_t_test_files(const PerQueryFile& a,
                                       const PerQueryFile& b,
                                       const std::string& metric) {
  // MAP is the mean of per-query AP, so testing "map" means pairing
  // the ap column.
  const std::string wanted = metric == "map" ? "ap" : metric;
  auto col = [&](const PerQueryFile& f) {
    for (std::size_t c = 0; c < f.columns.size(); ++c)
      if (f.columns[c] == wanted) return c;
    throw ValidationError("metric '" + metric + "' not present in file");
  };
  const auto ca = col(a), cb = col(b);
  std::map<std::pair<std::int64_t, std::int32_t>, double> ma, mb;
  for (const auto& [u, k, v] : a.rows) ma[{u, k}] = v[ca];
  for (const auto& [u, k, v] : b.rows) mb[{u, k}] = v[cb];
  std::vector<std::string> only_a, only_b;
  for (const auto& [key, v] : ma)
    if (!mb.count(key))
      only_a.push_back("(" + std::to_string(key.first) + "," +
                       std::to_string(key.second) + ")");
  for (const auto& [key, v] : mb)
    if (!ma.count(key))
      only_b.push_back("(" + std::to_string(key.first) + "," +
                       std::to_string(key.second) + ")");
  if (!only_a.empty() || !only_b.empty()) {
    std::string msg = "query sets differ;";
    if (!only_a.empty()) {
      msg += " only in first:";
      for (const auto& s : only_a) msg += " " + s;
    }
    if (!only_b.empty()) {
      msg += " only in second:";
      for (const auto& s : only_b) msg += " " + s;
    }
    throw ValidationError(msg);
  }
  std::vector<double> va, vb;
  for (const auto& [key, v] : ma) {
    const double w = mb[key];
    if (std::isnan(v) || std::isnan(w)) continue;
    va.push_back(v);
    vb.push_back(w);
  }
  return paired_t_test(va, vb);
}

}  // namespace latrec
