// Apache License, Version 2.0, refer to LICENSE.txt.
//
// Train / tune / test protocol. For every user that took at least one
// positive action, one facet with a positive is drawn uniformly at
// random and that user's whole (user, facet) group is held out; the
// held-out queries then land in the tuning set with probability 1/3
// and in the test set otherwise. Users without positives stay in
// training only. Randomness is keyed per user, so one user's draw
// never shifts another's.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "latrec/data.hpp"
#include "latrec/rng.hpp"

namespace latrec {

struct SplitOptions {
  std::uint64_t seed = 1;
  // Drop users whose best facet has fewer than this many positive
  // events. Applied before splitting; 0 disables the filter.
  int min_user_actions = 0;
};

struct SplitSpec {
  Dataset train;  // same index space as the input
  std::vector<QueryGroup> tune;
  std::vector<QueryGroup> test;
  std::uint64_t seed = 0;
  int min_user_actions = 0;
};

// Keeps only users with at least `min_actions` positives in some
// single facet. Ids are preserved; removed users simply lose their
// events.
inline Dataset filter_min_user_actions(const Dataset& ds, int min_actions) {
  if (min_actions <= 0) return ds;
  std::vector<std::map<std::int32_t, int>> positives(
      static_cast<std::size_t>(ds.num_users));
  for (const Event& e : ds.events)
    if (e.label) positives[static_cast<std::size_t>(e.user)][e.facet]++;
  std::vector<bool> keep(static_cast<std::size_t>(ds.num_users), false);
  for (std::int64_t u = 0; u < ds.num_users; ++u)
    for (const auto& [facet, n] : positives[static_cast<std::size_t>(u)])
      if (n >= min_actions) keep[static_cast<std::size_t>(u)] = true;
  Dataset out = ds;
  out.events.clear();
  for (const Event& e : ds.events)
    if (keep[static_cast<std::size_t>(e.user)]) out.events.push_back(e);
  return out;
}

inline SplitSpec split_train_tune_test(const Dataset& input,
                                       const SplitOptions& opts = {}) {
  const Dataset ds = filter_min_user_actions(input, opts.min_user_actions);

  // Facets with a positive, per user, in ascending facet order.
  std::vector<std::vector<std::int32_t>> pos_facets(
      static_cast<std::size_t>(ds.num_users));
  {
    std::vector<std::map<std::int32_t, int>> counts(
        static_cast<std::size_t>(ds.num_users));
    for (const Event& e : ds.events)
      if (e.label) counts[static_cast<std::size_t>(e.user)][e.facet]++;
    for (std::int64_t u = 0; u < ds.num_users; ++u)
      for (const auto& [facet, n] : counts[static_cast<std::size_t>(u)])
        pos_facets[static_cast<std::size_t>(u)].push_back(facet);
  }

  std::vector<std::int32_t> held(static_cast<std::size_t>(ds.num_users), -1);
  std::vector<bool> to_tune(static_cast<std::size_t>(ds.num_users), false);
  for (std::int64_t u = 0; u < ds.num_users; ++u) {
    const auto& facets = pos_facets[static_cast<std::size_t>(u)];
    if (facets.empty()) continue;
    StreamRng pick(derive_stream(opts.seed, {stream_phase::kSplitFacet,
                                             static_cast<std::uint64_t>(u)}));
    held[static_cast<std::size_t>(u)] =
        facets[pick.uniform_index(facets.size())];
    StreamRng assign(derive_stream(
        opts.seed, {stream_phase::kSplitAssign, static_cast<std::uint64_t>(u)}));
    to_tune[static_cast<std::size_t>(u)] = assign.uniform() < 1.0 / 3.0;
  }

  SplitSpec spec;
  spec.seed = opts.seed;
  spec.min_user_actions = opts.min_user_actions;
  spec.train = ds;
  spec.train.events.clear();
  std::vector<Event> held_events;
  for (const Event& e : ds.events) {
    if (held[static_cast<std::size_t>(e.user)] == e.facet)
      held_events.push_back(e);
    else
      spec.train.events.push_back(e);
  }
  for (QueryGroup& q : group_queries(held_events)) {
    if (to_tune[static_cast<std::size_t>(q.user)])
      spec.tune.push_back(std::move(q));
    else
      spec.test.push_back(std::move(q));
  }
  return spec;
}

namespace detail {

inline std::size_t count_events(const std::vector<QueryGroup>& queries) {
  std::size_t n = 0;
  for (const auto& q : queries) n += q.items.size();
  return n;
}

}  // namespace detail

// Writes train.tsv, tune.tsv, test.tsv (events format) plus
// manifest.json into `dir`. Tune and test files are flattened query
// lists in ascending (user, facet, item) order.
inline void write_split(const std::string& dir, const SplitSpec& spec) {
  const auto& tr = spec.train;
  write_events(dir + "/train.tsv", tr.events, tr.num_users, tr.num_items,
               tr.num_facets);
  write_events(dir + "/tune.tsv", flatten_queries(spec.tune), tr.num_users,
               tr.num_items, tr.num_facets);
  write_events(dir + "/test.tsv", flatten_queries(spec.test), tr.num_users,
               tr.num_items, tr.num_facets);
  auto out = detail::open_output(dir + "/manifest.json");
  out << "{\n"
      << "  \"format\": \"latrec-split\",\n"
      << "  \"version\": 1,\n"
      << "  \"seed\": " << spec.seed << ",\n"
      << "  \"min_user_actions\": " << spec.min_user_actions << ",\n"
      << "  \"num_users\": " << tr.num_users << ",\n"
      << "  \"num_items\": " << tr.num_items << ",\n"
      << "  \"num_facets\": " << tr.num_facets << ",\n"
      << "  \"train_events\": " << tr.events.size() << ",\n"
      << "  \"tune_queries\": " << spec.tune.size() << ",\n"
      << "  \"tune_events\": " << detail::count_events(spec.tune) << ",\n"
      << "  \"test_queries\": " << spec.test.size() << ",\n"
      << "  \"test_events\": " << detail::count_events(spec.test) << "\n"
      << "}\n";
}

}  // namespace latrec
