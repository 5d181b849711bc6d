// Apache License, Version 2.0, refer to LICENSE.txt.
//
// Exploratory statistics over aggregated per-item counts: post-read
// action rates, correlations between action types (and click-through),
// category-level log-ratio profiles, and within-stratum coefficients
// of variation.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "latrec/data.hpp"
#include "latrec/errors.hpp"

namespace latrec {

// One row of the aggregate counts file. Missing category levels are
// empty strings.
struct AggregateRow {
  std::int64_t item = 0;
  std::array<std::string, 3> category;
  std::int64_t pageviews = 0;
  std::int64_t linkviews = 0;
  std::int64_t clicks = 0;
  std::vector<std::int64_t> actions;  // one per action type
};

struct AggregateCounts {
  std::vector<std::string> action_types;
  std::vector<AggregateRow> rows;

  const AggregateRow* find(std::int64_t item) const {
    auto it = index_.find(item);
    return it == index_.end() ? nullptr : &rows[it->second];
  }
  int type_index(const std::string& type) const {
    for (std::size_t t = 0; t < action_types.size(); ++t)
      if (action_types[t] == type) return static_cast<int>(t);
    return -1;
  }
  void rebuild_index() {
    index_.clear();
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!index_.emplace(rows[r].item, r).second)
        throw ValidationError("duplicate item " + std::to_string(rows[r].item) +
                              " in aggregate counts");
    }
  }

 private:
  std::unordered_map<std::int64_t, std::size_t> index_;
};

// CSV format:
//   item,category_l1,category_l2,category_l3,pageviews,linkviews,clicks,
//   <type>_actions,...
inline AggregateCounts parse_aggregate_counts(std::istream& in) {
  AggregateCounts out;
  std::string line;
  long line_no = 0;
  constexpr const char* kFixed[7] = {"item",      "category_l1", "category_l2",
                                     "category_l3", "pageviews", "linkviews",
                                     "clicks"};
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_on(line, ',');
    if (line_no == 1) {
      if (fields.size() < 8)
        throw ParseError("header needs the 7 fixed columns and at least one "
                         "<type>_actions column",
                         line_no);
      for (int c = 0; c < 7; ++c)
        if (fields[static_cast<std::size_t>(c)] != kFixed[c])
          throw ParseError(std::string("expected header column '") +
                               kFixed[c] + "', got '" +
                               fields[static_cast<std::size_t>(c)] + "'",
                           line_no);
      for (std::size_t c = 7; c < fields.size(); ++c) {
        const std::string& name = fields[c];
        const std::string suffix = "_actions";
        if (name.size() <= suffix.size() ||
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) !=
                0)
          throw ParseError("action column '" + name +
                               "' must end with _actions",
                           line_no);
        out.action_types.push_back(name.substr(0, name.size() - suffix.size()));
      }
      continue;
    }
    if (out.action_types.empty())
      throw ParseError("missing header row", line_no);
    if (fields.size() != 7 + out.action_types.size())
      throw ParseError("expected " +
                           std::to_string(7 + out.action_types.size()) +
                           " fields, got " + std::to_string(fields.size()),
                       line_no);
    AggregateRow row;
    row.item = detail::parse_int(fields[0], "item id", line_no);
    for (int c = 0; c < 3; ++c)
      row.category[static_cast<std::size_t>(c)] =
          fields[static_cast<std::size_t>(c + 1)];
    row.pageviews = detail::parse_int(fields[4], "pageviews", line_no);
    row.linkviews = detail::parse_int(fields[5], "linkviews", line_no);
    row.clicks = detail::parse_int(fields[6], "clicks", line_no);
    if (row.pageviews < 0 || row.linkviews < 0 || row.clicks < 0)
      throw ValidationError("line " + std::to_string(line_no) +
                            ": counts must be nonnegative");
    for (std::size_t c = 7; c < fields.size(); ++c) {
      const auto v = detail::parse_int(fields[c], "action count", line_no);
      if (v < 0)
        throw ValidationError("line " + std::to_string(line_no) +
                              ": counts must be nonnegative");
      row.actions.push_back(v);
    }
    out.rows.push_back(std::move(row));
  }
  if (out.action_types.empty()) throw FormatError("aggregate file is empty");
  out.rebuild_index();
  return out;
}

// Post-read rate: actions of the type divided by pageviews; empty when
// the item has no pageviews (or is unknown).
inline std::optional<double> action_rate(const AggregateCounts& counts,
                                         std::int64_t item,
                                         const std::string& type) {
  const int t = counts.type_index(type);
  if (t < 0) throw ValidationError("unknown action type '" + type + "'");
  const AggregateRow* row = counts.find(item);
  if (!row || row->pageviews <= 0) return std::nullopt;
  return static_cast<double>(row->actions[static_cast<std::size_t>(t)]) /
         static_cast<double>(row->pageviews);
}

// Click-through rate: clicks divided by linkviews.
inline std::optional<double> click_rate(const AggregateCounts& counts,
                                        std::int64_t item) {
  const AggregateRow* row = counts.find(item);
  if (!row || row->linkviews <= 0) return std::nullopt;
  return static_cast<double>(row->clicks) /
         static_cast<double>(row->linkviews);
}

struct CorrelationResult {
  std::vector<std::string> names;  // action types, then "ctr"
  Eigen::MatrixXd corr;            // NaN where undefined
  Eigen::MatrixXd pair_count;      // items entering each pair
};

// Pairwise Pearson correlation across items of the per-type rates and
// click-through. A rate enters only when its denominator reaches
// min_denominator; each pair uses the items where both sides are
// defined. Pairs with fewer than two items or zero variance stay NaN.
inline CorrelationResult correlation_matrix(const AggregateCounts& counts,
                                            std::int64_t min_denominator) {
  if (min_denominator < 1)
    throw ValidationError("min_denominator must be at least 1");
  const auto ntypes = counts.action_types.size();
  const auto cols = ntypes + 1;
  CorrelationResult res;
  res.names = counts.action_types;
  res.names.push_back("ctr");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  // Rate per (item, column); NaN encodes "undefined".
  Eigen::MatrixXd rates(static_cast<Eigen::Index>(counts.rows.size()), cols);
  rates.setConstant(nan);
  for (std::size_t r = 0; r < counts.rows.size(); ++r) {
    const AggregateRow& row = counts.rows[r];
    if (row.pageviews >= min_denominator)
      for (std::size_t t = 0; t < ntypes; ++t)
        rates(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) =
            static_cast<double>(row.actions[t]) /
            static_cast<double>(row.pageviews);
    if (row.linkviews >= min_denominator)
      rates(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(ntypes)) =
          static_cast<double>(row.clicks) / static_cast<double>(row.linkviews);
  }
  res.corr = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(cols),
                                       static_cast<Eigen::Index>(cols), nan);
  res.pair_count = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cols),
                                         static_cast<Eigen::Index>(cols));
  for (Eigen::Index s = 0; s < static_cast<Eigen::Index>(cols); ++s) {
    for (Eigen::Index t = s; t < static_cast<Eigen::Index>(cols); ++t) {
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      std::int64_t n = 0;
      for (Eigen::Index r = 0; r < rates.rows(); ++r) {
        const double x = rates(r, s), y = rates(r, t);
        if (std::isnan(x) || std::isnan(y)) continue;
        ++n;
        sx += x; sy += y; sxx += x * x; syy += y * y; sxy += x * y;
      }
      res.pair_count(s, t) = res.pair_count(t, s) =
          static_cast<double>(n);
      if (n < 2) continue;
      const double dn = static_cast<double>(n);
      const double vx = sxx - sx * sx / dn;
      const double vy = syy - sy * sy / dn;
      const double cxy = sxy - sx * sy / dn;
      if (vx <= 0.0 || vy <= 0.0) continue;  // zero variance: undefined
      res.corr(s, t) = res.corr(t, s) = cxy / std::sqrt(vx * vy);
    }
  }
  return res;
}

struct LogRatioEntry {
  std::string category;
  double action_fraction = 0.0;
  double pageview_fraction = 0.0;
  // Missing when the action fraction is zero (log diverges).
  std::optional<double> log_ratio;
};

namespace detail {

inline std::string category_key(const AggregateRow& row, int level) {
  std::string key = row.category[0];
  for (int l = 1; l < level; ++l) {
    if (row.category[static_cast<std::size_t>(l)].empty()) break;
    key += "/" + row.category[static_cast<std::size_t>(l)];
  }
  return key;
}

}  // namespace detail

// Per-category log ratio between the category's share of actions and
// its share of pageviews (natural log). Categories with no pageviews
// are excluded; items with no category at level 1 are skipped.
inline std::vector<LogRatioEntry> log_ratio_profile(
    const AggregateCounts& counts, const std::string& type, int level = 1) {
  if (level < 1 || level > 3)
    throw ValidationError("category level must be 1, 2, or 3");
  const int t = counts.type_index(type);
  if (t < 0) throw ValidationError("unknown action type '" + type + "'");
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> agg;
  std::int64_t total_actions = 0, total_views = 0;
  for (const AggregateRow& row : counts.rows) {
    if (row.category[0].empty()) continue;
    auto& [acts, views] = agg[detail::category_key(row, level)];
    acts += row.actions[static_cast<std::size_t>(t)];
    views += row.pageviews;
    total_actions += row.actions[static_cast<std::size_t>(t)];
    total_views += row.pageviews;
  }
  std::vector<LogRatioEntry> out;
  if (total_views == 0 || total_actions == 0) return out;
  for (const auto& [cat, av] : agg) {
    const auto& [acts, views] = av;
    if (views == 0) continue;  // zero pageview share: excluded
    LogRatioEntry e;
    e.category = cat;
    e.action_fraction =
        static_cast<double>(acts) / static_cast<double>(total_actions);
    e.pageview_fraction =
        static_cast<double>(views) / static_cast<double>(total_views);
    if (acts > 0)
      e.log_ratio = std::log(e.action_fraction / e.pageview_fraction);
    out.push_back(std::move(e));
  }
  return out;
}

// Sample standard deviation over mean; empty for fewer than two rates
// or a nonpositive mean. Values above 0.2 read as high variation.
inline std::optional<double> coefficient_of_variation(
    const std::vector<double>& rates) {
  if (rates.size() < 2) return std::nullopt;
  double mean = 0.0;
  for (double r : rates) mean += r;
  mean /= static_cast<double>(rates.size());
  if (mean <= 0.0) return std::nullopt;
  double ss = 0.0;
  for (double r : rates) ss += (r - mean) * (r - mean);
  const double sd = std::sqrt(ss / static_cast<double>(rates.size() - 1));
  return sd / mean;
}

constexpr double kHighVariationThreshold = 0.2;

struct CvEntry {
  std::string category;
  std::int64_t articles = 0;
  std::optional<double> cv;
  bool high_variation = false;
};

// Within-category coefficient of variation of item rates for one
// action type, over items passing the denominator filter.
inline std::vector<CvEntry> cv_by_category(const AggregateCounts& counts,
                                           const std::string& type,
                                           int level = 1,
                                           std::int64_t min_denominator = 1) {
  if (level < 1 || level > 3)
    throw ValidationError("category level must be 1, 2, or 3");
  if (min_denominator < 1)
    throw ValidationError("min_denominator must be at least 1");
  const int t = counts.type_index(type);
  if (t < 0) throw ValidationError("unknown action type '" + type + "'");
  std::map<std::string, std::vector<double>> per_cat;
  for (const AggregateRow& row : counts.rows) {
    if (row.category[0].empty()) continue;
    if (row.pageviews < min_denominator) continue;
    per_cat[detail::category_key(row, level)].push_back(
        static_cast<double>(row.actions[static_cast<std::size_t>(t)]) /
        static_cast<double>(row.pageviews));
  }
  std::vector<CvEntry> out;
  for (const auto& [cat, rates] : per_cat) {
    CvEntry e;
    e.category = cat;
    e.articles = static_cast<std::int64_t>(rates.size());
    e.cv = coefficient_of_variation(rates);
    e.high_variation = e.cv && *e.cv > kHighVariationThreshold;
    out.push_back(std::move(e));
  }
  return out;
}

inline void write_correlation_csv(std::ostream& out,
                                  const CorrelationResult& res) {
  out.precision(17);
  out << "type";
  for (const auto& n : res.names) out << ',' << n;
  out << '\n';
  for (Eigen::Index s = 0; s < res.corr.rows(); ++s) {
    out << res.names[static_cast<std::size_t>(s)];
    for (Eigen::Index t = 0; t < res.corr.cols(); ++t) {
      if (std::isnan(res.corr(s, t)))
        out << ",undefined";
      else
        out << ',' << res.corr(s, t);
    }
    out << '\n';
  }
}

inline void write_log_ratio_csv(std::ostream& out,
                                const std::vector<LogRatioEntry>& entries) {
  out.precision(17);
  out << "category,action_fraction,pageview_fraction,log_ratio\n";
  for (const auto& e : entries) {
    out << e.category << ',' << e.action_fraction << ','
        << e.pageview_fraction << ',';
    if (e.log_ratio)
      out << *e.log_ratio << '\n';
    else
      out << "-inf\n";
  }
}

inline void write_cv_csv(std::ostream& out,
                         const std::vector<CvEntry>& entries) {
  out.precision(17);
  out << "category,articles,cv,high_variation\n";
  for (const auto& e : entries) {
    out << e.category << ',' << e.articles << ',';
    if (e.cv)
      out << *e.cv;
    else
      out << "undefined";
    out << ',' << (e.high_variation ? 1 : 0) << '\n';
  }
}

}  // namespace latrec
