// Apache License, Version 2.0, refer to LICENSE.txt.
//
// Text plumbing for the retrieval baselines: a fixed tokenizer
// (lowercase, split on non-alphanumerics, no stemming or stopwords),
// corpus statistics over item text, and pooled user profiles.

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <istream>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "latrec/data.hpp"
#include "latrec/errors.hpp"

namespace latrec {

inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto uc = static_cast<unsigned char>(ch);
    if (std::isalnum(uc)) {
      cur.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Item text file: `item_id<TAB>text` per line; the text may itself
// contain tabs. Lines starting with '#' are ignored.
inline std::unordered_map<std::int64_t, std::string> parse_item_text(
    std::istream& in) {
  std::unordered_map<std::int64_t, std::string> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError("expected item_id<TAB>text", line_no);
    const auto id = detail::parse_int(line.substr(0, tab), "item id", line_no);
    if (id < 0) throw ParseError("negative item id", line_no);
    if (!out.emplace(id, line.substr(tab + 1)).second)
      throw ParseError("duplicate item id " + std::to_string(id), line_no);
  }
  return out;
}

// Sparse term-count vector sorted by term id.
using TermCounts = std::vector<std::pair<std::int32_t, std::int32_t>>;

struct Corpus {
  std::int64_t num_docs = 0;          // all items count as documents
  std::vector<TermCounts> doc_terms;  // per item, sorted by term id
  std::vector<std::int64_t> doc_len;  // sum of counts
  std::vector<std::int64_t> df;       // documents containing the term
  std::vector<std::int64_t> cf;       // collection frequency
  std::int64_t total_cf = 0;
  double avg_doc_len = 0.0;
  std::vector<std::string> terms;     // term id -> string
  std::unordered_map<std::string, std::int32_t> dict;

  std::int32_t term_id(const std::string& term) const {
    auto it = dict.find(term);
    return it == dict.end() ? -1 : it->second;
  }

  static Corpus build(
      const std::unordered_map<std::int64_t, std::string>& texts,
      std::int64_t num_items) {
    Corpus c;
    c.num_docs = num_items;
    c.doc_terms.resize(static_cast<std::size_t>(num_items));
    c.doc_len.assign(static_cast<std::size_t>(num_items), 0);
    for (const auto& [id, text] : texts) {
      if (id < 0 || id >= num_items)
        throw ValidationError("item text id " + std::to_string(id) +
                              " outside item range");
      std::unordered_map<std::int32_t, std::int32_t> counts;
      for (const auto& tok : tokenize(text)) {
        auto it = c.dict.find(tok);
        std::int32_t t;
        if (it == c.dict.end()) {
          t = static_cast<std::int32_t>(c.terms.size());
          c.dict.emplace(tok, t);
          c.terms.push_back(tok);
        } else {
          t = it->second;
        }
        counts[t]++;
      }
      TermCounts& doc = c.doc_terms[static_cast<std::size_t>(id)];
      doc.assign(counts.begin(), counts.end());
      std::sort(doc.begin(), doc.end());
      std::int64_t len = 0;
      for (const auto& [t, n] : doc) len += n;
      c.doc_len[static_cast<std::size_t>(id)] = len;
    }
    c.df.assign(c.terms.size(), 0);
    c.cf.assign(c.terms.size(), 0);
    for (const auto& doc : c.doc_terms)
      for (const auto& [t, n] : doc) {
        c.df[static_cast<std::size_t>(t)]++;
        c.cf[static_cast<std::size_t>(t)] += n;
        c.total_cf += n;
      }
    c.avg_doc_len = num_items > 0
                        ? static_cast<double>(c.total_cf) /
                              static_cast<double>(num_items)
                        : 0.0;
    return c;
  }
};

// Pooled term counts over the distinct items the user acted on
// positively in training, across all facets.
struct UserProfile {
  TermCounts counts;
  bool empty() const { return counts.empty(); }
};

inline UserProfile build_user_profile(const std::vector<Event>& train_events,
                                      std::int64_t user, const Corpus& corpus) {
  std::set<std::int64_t> items;
  for (const Event& e : train_events)
    if (e.user == user && e.label) items.insert(e.item);
  std::unordered_map<std::int32_t, std::int32_t> acc;
  for (std::int64_t j : items)
    for (const auto& [t, n] : corpus.doc_terms[static_cast<std::size_t>(j)])
      acc[t] += n;
  UserProfile p;
  p.counts.assign(acc.begin(), acc.end());
  std::sort(p.counts.begin(), p.counts.end());
  return p;
}

// All profiles in one pass over the events.
inline std::vector<UserProfile> build_user_profiles(
    const std::vector<Event>& train_events, std::int64_t num_users,
    const Corpus& corpus) {
  std::vector<std::set<std::int64_t>> items(
      static_cast<std::size_t>(num_users));
  for (const Event& e : train_events)
    if (e.label && e.user < num_users)
      items[static_cast<std::size_t>(e.user)].insert(e.item);
  std::vector<UserProfile> out(static_cast<std::size_t>(num_users));
  for (std::int64_t i = 0; i < num_users; ++i) {
    std::unordered_map<std::int32_t, std::int32_t> acc;
    for (std::int64_t j : items[static_cast<std::size_t>(i)])
      for (const auto& [t, n] : corpus.doc_terms[static_cast<std::size_t>(j)])
        acc[t] += n;
    auto& p = out[static_cast<std::size_t>(i)];
    p.counts.assign(acc.begin(), acc.end());
    std::sort(p.counts.begin(), p.counts.end());
  }
  return out;
}

}  // namespace latrec
