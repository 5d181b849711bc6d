// Apache License, Version 2.0, refer to LICENSE.txt.
//
// Binary model container. Layout: an 8-byte magic, a fixed header
// (version, kind, dimensions), then little-endian float64 arrays in
// declared order. Factor models store factors, regression priors,
// variances, and training-presence masks; the bilinear baseline
// stores its weight matrices. Writing the same model twice yields
// byte-identical files.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "latrec/errors.hpp"
#include "latrec/model.hpp"

namespace latrec {

struct TrainedModel {
  ModelConfig config;
  PriorParams priors;
  FactorState factors;
  TrainingPresence presence;
};

namespace detail {

constexpr char kModelMagic[8] = {'L', 'A', 'T', 'R', 'E', 'C', 'M', '1'};
constexpr std::uint32_t kModelVersion = 1;
constexpr std::uint32_t kKindBilinear = 4;

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are unsupported");

template <typename T>
inline T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    T out;
    auto* src = reinterpret_cast<const unsigned char*>(&v);
    auto* dst = reinterpret_cast<unsigned char*>(&out);
    for (std::size_t b = 0; b < sizeof(T); ++b) dst[b] = src[sizeof(T) - 1 - b];
    return out;
  }
}

class BinWriter {
 public:
  explicit BinWriter(std::ostream& out) : out_(out) {}
  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u32(std::uint32_t v) { v = to_little(v); bytes(&v, 4); }
  void i64(std::int64_t v) { v = to_little(v); bytes(&v, 8); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    bits = to_little(bits);
    bytes(&bits, 8);
  }
  void f64_array(const double* p, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      bytes(p, n * 8);
    } else {
      for (std::size_t e = 0; e < n; ++e) f64(p[e]);
    }
  }

 private:
  std::ostream& out_;
};

class BinReader {
 public:
  explicit BinReader(std::istream& in) : in_(in) {}
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw FormatError("model file truncated");
  }
  std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return to_little(v); }
  std::int64_t i64() { std::int64_t v; bytes(&v, 8); return to_little(v); }
  double f64() {
    std::uint64_t bits;
    bytes(&bits, 8);
    bits = to_little(bits);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  void f64_array(double* p, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      bytes(p, n * 8);
    } else {
      for (std::size_t e = 0; e < n; ++e) p[e] = f64();
    }
  }

 private:
  std::istream& in_;
};

inline void write_mask(BinWriter& w, const std::vector<std::uint8_t>& mask) {
  for (std::uint8_t m : mask) w.f64(m ? 1.0 : 0.0);
}

inline void read_mask(BinReader& r, std::vector<std::uint8_t>& mask) {
  for (auto& m : mask) m = r.f64() != 0.0 ? 1 : 0;
}

}  // namespace detail

inline void serialize_model(std::ostream& out, const TrainedModel& model) {
  const ModelConfig& c = model.config;
  const auto ke = c.effective_facets();
  detail::BinWriter w(out);
  w.bytes(detail::kModelMagic, 8);
  w.u32(detail::kModelVersion);
  w.u32(static_cast<std::uint32_t>(c.kind));
  w.i64(c.num_users);
  w.i64(c.num_items);
  w.u32(static_cast<std::uint32_t>(c.num_facets));
  w.u32(static_cast<std::uint32_t>(c.fg));
  w.u32(static_cast<std::uint32_t>(c.fl));
  w.u32(static_cast<std::uint32_t>(c.user_feature_dim));
  w.u32(static_cast<std::uint32_t>(c.item_feature_dim));

  const FactorState& s = model.factors;
  w.f64_array(s.alpha_ik.data(), static_cast<std::size_t>(s.alpha_ik.size()));
  w.f64_array(s.beta_jk.data(), static_cast<std::size_t>(s.beta_jk.size()));
  w.f64_array(s.alpha_i.data(), static_cast<std::size_t>(s.alpha_i.size()));
  w.f64_array(s.beta_j.data(), static_cast<std::size_t>(s.beta_j.size()));
  w.f64_array(s.u_i.data(), static_cast<std::size_t>(s.u_i.size()));
  w.f64_array(s.v_j.data(), static_cast<std::size_t>(s.v_j.size()));
  w.f64_array(s.w_k.data(), static_cast<std::size_t>(s.w_k.size()));
  w.f64_array(s.u_ik.data(), static_cast<std::size_t>(s.u_ik.size()));
  w.f64_array(s.v_jk.data(), static_cast<std::size_t>(s.v_jk.size()));

  const PriorParams& p = model.priors;
  w.f64_array(p.g.data(), static_cast<std::size_t>(p.g.size()));
  w.f64_array(p.d.data(), static_cast<std::size_t>(p.d.size()));
  w.f64_array(p.q.data(), static_cast<std::size_t>(p.q.size()));
  w.f64_array(p.r.data(), static_cast<std::size_t>(p.r.size()));
  for (std::int32_t k = 0; k < ke; ++k)
    w.f64_array(p.G[k].data(), static_cast<std::size_t>(p.G[k].size()));
  for (std::int32_t k = 0; k < ke; ++k)
    w.f64_array(p.D[k].data(), static_cast<std::size_t>(p.D[k].size()));
  w.f64_array(p.var_alpha.data(), static_cast<std::size_t>(p.var_alpha.size()));
  w.f64_array(p.var_beta.data(), static_cast<std::size_t>(p.var_beta.size()));
  w.f64_array(p.var_u.data(), static_cast<std::size_t>(p.var_u.size()));
  w.f64_array(p.var_v.data(), static_cast<std::size_t>(p.var_v.size()));
  w.f64(p.var_u0);
  w.f64(p.var_v0);
  w.f64(p.var_y);

  detail::write_mask(w, model.presence.user_facet);
  detail::write_mask(w, model.presence.item_facet);
  detail::write_mask(w, model.presence.user);
  detail::write_mask(w, model.presence.item);
}

inline TrainedModel deserialize_model(std::istream& in) {
  detail::BinReader r(in);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, detail::kModelMagic, 8) != 0)
    throw FormatError("not a model file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != detail::kModelVersion)
    throw FormatError("unsupported model version " + std::to_string(version));
  const std::uint32_t kind = r.u32();
  if (kind >= detail::kKindBilinear)
    throw FormatError("model file holds a different model family");

  ModelConfig c;
  c.kind = static_cast<ModelKind>(kind);
  c.num_users = r.i64();
  c.num_items = r.i64();
  c.num_facets = static_cast<std::int32_t>(r.u32());
  c.fg = static_cast<std::int32_t>(r.u32());
  c.fl = static_cast<std::int32_t>(r.u32());
  c.user_feature_dim = static_cast<std::int32_t>(r.u32());
  c.item_feature_dim = static_cast<std::int32_t>(r.u32());
  c.validate();
  const auto ke = c.effective_facets();

  TrainedModel m;
  m.config = c;
  m.factors = FactorState::zeros(c);
  FactorState& s = m.factors;
  r.f64_array(s.alpha_ik.data(), static_cast<std::size_t>(s.alpha_ik.size()));
  r.f64_array(s.beta_jk.data(), static_cast<std::size_t>(s.beta_jk.size()));
  r.f64_array(s.alpha_i.data(), static_cast<std::size_t>(s.alpha_i.size()));
  r.f64_array(s.beta_j.data(), static_cast<std::size_t>(s.beta_j.size()));
  r.f64_array(s.u_i.data(), static_cast<std::size_t>(s.u_i.size()));
  r.f64_array(s.v_j.data(), static_cast<std::size_t>(s.v_j.size()));
  r.f64_array(s.w_k.data(), static_cast<std::size_t>(s.w_k.size()));
  r.f64_array(s.u_ik.data(), static_cast<std::size_t>(s.u_ik.size()));
  r.f64_array(s.v_jk.data(), static_cast<std::size_t>(s.v_jk.size()));

  m.priors = PriorParams::initial(c);
  PriorParams& p = m.priors;
  r.f64_array(p.g.data(), static_cast<std::size_t>(p.g.size()));
  r.f64_array(p.d.data(), static_cast<std::size_t>(p.d.size()));
  r.f64_array(p.q.data(), static_cast<std::size_t>(p.q.size()));
  r.f64_array(p.r.data(), static_cast<std::size_t>(p.r.size()));
  for (std::int32_t k = 0; k < ke; ++k)
    r.f64_array(p.G[k].data(), static_cast<std::size_t>(p.G[k].size()));
  for (std::int32_t k = 0; k < ke; ++k)
    r.f64_array(p.D[k].data(), static_cast<std::size_t>(p.D[k].size()));
  r.f64_array(p.var_alpha.data(), static_cast<std::size_t>(p.var_alpha.size()));
  r.f64_array(p.var_beta.data(), static_cast<std::size_t>(p.var_beta.size()));
  r.f64_array(p.var_u.data(), static_cast<std::size_t>(p.var_u.size()));
  r.f64_array(p.var_v.data(), static_cast<std::size_t>(p.var_v.size()));
  p.var_u0 = r.f64();
  p.var_v0 = r.f64();
  p.var_y = r.f64();

  m.presence = TrainingPresence::none(c);
  detail::read_mask(r, m.presence.user_facet);
  detail::read_mask(r, m.presence.item_facet);
  detail::read_mask(r, m.presence.user);
  detail::read_mask(r, m.presence.item);
  return m;
}

inline void save_model(const std::string& path, const TrainedModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  serialize_model(out, model);
}

inline TrainedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  return deserialize_model(in);
}

}  // namespace latrec
