// Apache License, Version 2.0, refer to LICENSE.txt.
//
// Core observation tables. An event is one (user, item, facet) triple
// with a binary response: did the user take the facet's action on the
// item after reading it. Users, items, and facets are dense 0-based
// integer ids.

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "latrec/errors.hpp"

namespace latrec {

struct Event {
  std::int64_t user = 0;
  std::int64_t item = 0;
  std::int32_t facet = 0;
  std::uint8_t label = 0;  // 0 or 1
};

// Sparse feature vector, entries sorted by ascending index.
struct FeatureVector {
  std::vector<std::pair<std::int32_t, double>> entries;

  double dot(const std::vector<double>& dense) const {
    double s = 0.0;
    for (const auto& [idx, val] : entries) {
      if (idx < static_cast<std::int32_t>(dense.size())) s += dense[idx] * val;
    }
    return s;
  }
};

struct Dataset {
  std::vector<Event> events;  // file order
  std::int64_t num_users = 0;   // M
  std::int64_t num_items = 0;   // N
  std::int32_t num_facets = 0;  // K
  std::vector<FeatureVector> user_features;  // may be empty
  std::vector<FeatureVector> item_features;
  std::int32_t user_feature_dim = 0;
  std::int32_t item_feature_dim = 0;
};

// All events of one (user, facet) pair; the unit of ranking.
struct QueryGroup {
  std::int64_t user = 0;
  std::int32_t facet = 0;
  std::vector<std::pair<std::int64_t, std::uint8_t>> items;  // (item, label)

  int num_positive() const {
    int n = 0;
    for (const auto& [item, label] : items) n += label;
    return n;
  }
};

namespace detail {

inline std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline long long parse_int(const std::string& tok, const char* what,
                           long line) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(tok, &used);
  } catch (const std::exception&) {
    throw ParseError(std::string("expected integer ") + what + ", got '" +
                         tok + "'",
                     line);
  }
  if (used != tok.size())
    throw ParseError(std::string("trailing characters after ") + what +
                         " in '" + tok + "'",
                     line);
  return v;
}

inline double parse_double(const std::string& tok, const char* what,
                           long line) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw ParseError(std::string("expected number ") + what + ", got '" + tok +
                         "'",
                     line);
  }
  if (used != tok.size())
    throw ParseError(std::string("trailing characters after ") + what +
                         " in '" + tok + "'",
                     line);
  return v;
}

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path);
  return out;
}

}  // namespace detail

struct ParsedEvents {
  std::vector<Event> events;
  std::int64_t num_users = 0;
  std::int64_t num_items = 0;
  std::int32_t num_facets = 0;
  bool had_header = false;
};

// Reads tab-separated `user item facet label` lines. An optional first
// line `#M N K` declares the index space; otherwise counts are
// inferred as max index + 1. Labels must be 0 or 1. Event order is
// preserved.
inline ParsedEvents parse_events_stream(std::istream& in) {
  ParsedEvents out;
  std::string line;
  long lineno = 0;
  std::int64_t max_user = -1, max_item = -1;
  std::int32_t max_facet = -1;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (lineno != 1)
        throw ParseError("header line allowed only at the top of the file",
                         lineno);
      std::istringstream hs(line.substr(1));
      long long m = 0, n = 0, k = 0;
      if (!(hs >> m >> n >> k) || m < 0 || n < 0 || k < 0)
        throw ParseError("header must be '#M N K' with nonnegative integers",
                         lineno);
      out.num_users = m;
      out.num_items = n;
      out.num_facets = static_cast<std::int32_t>(k);
      out.had_header = true;
      continue;
    }
    const auto cols = detail::split_on(line, '\t');
    if (cols.size() != 4)
      throw ParseError("expected 4 tab-separated columns, got " +
                           std::to_string(cols.size()),
                       lineno);
    Event e;
    e.user = detail::parse_int(cols[0], "user id", lineno);
    e.item = detail::parse_int(cols[1], "item id", lineno);
    e.facet = static_cast<std::int32_t>(
        detail::parse_int(cols[2], "facet id", lineno));
    const long long label = detail::parse_int(cols[3], "label", lineno);
    if (e.user < 0 || e.item < 0 || e.facet < 0)
      throw ParseError("ids must be nonnegative", lineno);
    if (label != 0 && label != 1)
      throw ParseError("label must be 0 or 1, got " + std::to_string(label),
                       lineno);
    e.label = static_cast<std::uint8_t>(label);
    if (out.had_header) {
      if (e.user >= out.num_users || e.item >= out.num_items ||
          e.facet >= out.num_facets)
        throw ValidationError("line " + std::to_string(lineno) +
                              ": event index exceeds declared header counts");
    }
    max_user = std::max(max_user, e.user);
    max_item = std::max(max_item, e.item);
    max_facet = std::max(max_facet, e.facet);
    out.events.push_back(e);
  }
  if (!out.had_header) {
    out.num_users = max_user + 1;
    out.num_items = max_item + 1;
    out.num_facets = max_facet + 1;
  }
  return out;
}

inline ParsedEvents parse_events(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_events_stream(in);
}

// One event per line, with a `#M N K` header so the index space
// round-trips even when trailing users or items have no events.
inline void write_events_stream(std::ostream& out,
                                const std::vector<Event>& events,
                                std::int64_t num_users, std::int64_t num_items,
                                std::int32_t num_facets) {
  out << '#' << num_users << ' ' << num_items << ' ' << num_facets << '\n';
  for (const Event& e : events) {
    out << e.user << '\t' << e.item << '\t' << e.facet << '\t'
        << static_cast<int>(e.label) << '\n';
  }
}

inline void write_events(const std::string& path,
                         const std::vector<Event>& events,
                         std::int64_t num_users, std::int64_t num_items,
                         std::int32_t num_facets) {
  auto out = detail::open_output(path);
  write_events_stream(out, events, num_users, num_items, num_facets);
}

struct ParsedFeatures {
  std::vector<FeatureVector> rows;  // indexed by id; gaps are empty
  std::int32_t dim = 0;             // max feature index + 1
};

// Reads `id idx:val idx:val ...` lines (space separated). Feature
// indices must be strictly ascending within a line.
inline ParsedFeatures parse_features_stream(std::istream& in) {
  ParsedFeatures out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    const long long id = detail::parse_int(tok, "row id", lineno);
    if (id < 0) throw ParseError("row id must be nonnegative", lineno);
    FeatureVector fv;
    std::int32_t prev = -1;
    while (ls >> tok) {
      const std::size_t colon = tok.find(':');
      if (colon == std::string::npos)
        throw ParseError("expected idx:val, got '" + tok + "'", lineno);
      const auto idx = static_cast<std::int32_t>(
          detail::parse_int(tok.substr(0, colon), "feature index", lineno));
      const double val =
          detail::parse_double(tok.substr(colon + 1), "feature value", lineno);
      if (idx < 0) throw ParseError("feature index must be nonnegative", lineno);
      if (idx <= prev)
        throw ParseError("feature indices must be strictly ascending", lineno);
      prev = idx;
      fv.entries.emplace_back(idx, val);
      out.dim = std::max(out.dim, idx + 1);
    }
    if (static_cast<std::size_t>(id) >= out.rows.size())
      out.rows.resize(static_cast<std::size_t>(id) + 1);
    if (!out.rows[static_cast<std::size_t>(id)].entries.empty())
      throw ParseError("duplicate row id " + std::to_string(id), lineno);
    out.rows[static_cast<std::size_t>(id)] = std::move(fv);
  }
  return out;
}

inline ParsedFeatures parse_features(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_features_stream(in);
}

inline void write_features_stream(std::ostream& out,
                                  const std::vector<FeatureVector>& rows) {
  out.precision(17);
  for (std::size_t id = 0; id < rows.size(); ++id) {
    out << id;
    for (const auto& [idx, val] : rows[id].entries)
      out << ' ' << idx << ':' << val;
    out << '\n';
  }
}

inline void write_features(const std::string& path,
                           const std::vector<FeatureVector>& rows) {
  auto out = detail::open_output(path);
  write_features_stream(out, rows);
}

// Real-valued responses, one per line, aligned with an events file.
inline std::vector<double> parse_responses(const std::string& path) {
  auto in = detail::open_input(path);
  std::vector<double> out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    out.push_back(detail::parse_double(line, "response", lineno));
  }
  return out;
}

inline void write_responses(const std::string& path,
                            const std::vector<double>& values) {
  auto out = detail::open_output(path);
  out.precision(17);
  for (double v : values) out << v << '\n';
}

// Rejects duplicate (user, item, facet) triples and out-of-range ids.
inline void validate_events(const std::vector<Event>& events,
                            std::int64_t num_users, std::int64_t num_items,
                            std::int32_t num_facets) {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(events.size() * 2);
  for (std::size_t idx = 0; idx < events.size(); ++idx) {
    const Event& e = events[idx];
    if (e.user < 0 || e.user >= num_users || e.item < 0 ||
        e.item >= num_items || e.facet < 0 || e.facet >= num_facets)
      throw ValidationError("event " + std::to_string(idx) +
                            " has out-of-range indices");
    // Triple packed into 64 bits; fits comfortably at the supported
    // scale (ids < 2^24, facets < 2^16).
    if (num_users >= (1ll << 24) || num_items >= (1ll << 24) ||
        num_facets >= (1 << 16))
      throw ValidationError("index space too large for duplicate check");
    const std::uint64_t key =
        (static_cast<std::uint64_t>(e.user) << 40) |
        (static_cast<std::uint64_t>(e.item) << 16) |
        static_cast<std::uint64_t>(e.facet);
    if (!seen.insert(key).second)
      throw ValidationError(
          "duplicate (user, item, facet) triple at event " +
          std::to_string(idx) + ": " + std::to_string(e.user) + "," +
          std::to_string(e.item) + "," + std::to_string(e.facet));
  }
}

inline Dataset make_dataset(ParsedEvents parsed,
                            ParsedFeatures user_features = {},
                            ParsedFeatures item_features = {}) {
  Dataset ds;
  ds.events = std::move(parsed.events);
  ds.num_users = parsed.num_users;
  ds.num_items = parsed.num_items;
  ds.num_facets = parsed.num_facets;
  validate_events(ds.events, ds.num_users, ds.num_items, ds.num_facets);
  ds.user_features = std::move(user_features.rows);
  ds.item_features = std::move(item_features.rows);
  ds.user_feature_dim = user_features.dim;
  ds.item_feature_dim = item_features.dim;
  if (static_cast<std::int64_t>(ds.user_features.size()) > ds.num_users ||
      static_cast<std::int64_t>(ds.item_features.size()) > ds.num_items)
    throw ValidationError("feature table has more rows than the event index space");
  ds.user_features.resize(static_cast<std::size_t>(ds.num_users));
  ds.item_features.resize(static_cast<std::size_t>(ds.num_items));
  return ds;
}

// Groups events into (user, facet) queries. Output is ordered by
// ascending (user, facet) and items ascend within each query, so the
// grouping is reproducible regardless of input order.
inline std::vector<QueryGroup> group_queries(const std::vector<Event>& events) {
  std::vector<Event> sorted(events);
  std::sort(sorted.begin(), sorted.end(), [](const Event& a, const Event& b) {
    if (a.user != b.user) return a.user < b.user;
    if (a.facet != b.facet) return a.facet < b.facet;
    return a.item < b.item;
  });
  std::vector<QueryGroup> out;
  for (const Event& e : sorted) {
    if (out.empty() || out.back().user != e.user ||
        out.back().facet != e.facet) {
      QueryGroup g;
      g.user = e.user;
      g.facet = e.facet;
      out.push_back(std::move(g));
    }
    out.back().items.emplace_back(e.item, e.label);
  }
  return out;
}

inline std::vector<Event> flatten_queries(const std::vector<QueryGroup>& queries) {
  std::vector<Event> out;
  for (const QueryGroup& q : queries)
    for (const auto& [item, label] : q.items)
      out.push_back(Event{q.user, item, q.facet, label});
  return out;
}

}  // namespace latrec
