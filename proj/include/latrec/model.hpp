// Apache License, Version 2.0, refer to LICENSE.txt.
//
// Latent factor models for per-facet response prediction. The full
// model (LAT) scores a (user i, item j, facet k) triple as
//
//   s(i,j,k) = alpha_ik + beta_jk + <u_i, v_j, w_k> + u_ik' v_jk
//
// where <u,v,w> = sum_f u[f] v[f] w[f]. Restrictions of the same
// parameterization give the related models:
//
//   BST  drops the local factors (F_l = 0),
//   SMF  drops the global tensor and global bias layer (F_g = 0),
//   CMF  additionally ties all facets together (single parameter
//        facet, rank F_l).
//
// Biases and local factors have feature-regression priors; the global
// layer ties facets together:
//
//   alpha_ik ~ N(g_k' x_i + q_k alpha_i, var_alpha_k),  alpha_i ~ N(0,1)
//   beta_jk  ~ N(d_k' x_j + r_k beta_j,  var_beta_k),   beta_j  ~ N(0,1)
//   u_ik ~ N(G_k x_i, var_u_k I)    v_jk ~ N(D_k x_j, var_v_k I)
//   u_i  ~ N(0, var_u0 I)   v_j ~ N(0, var_v0 I)   w_k ~ N(0, I)
//
// Observations use a Gaussian response: y_ijk ~ N(s(i,j,k), var_y).

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "latrec/data.hpp"
#include "latrec/errors.hpp"
#include "latrec/rng.hpp"

namespace latrec {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ModelKind : std::int32_t { Lat = 0, Bst = 1, Smf = 2, Cmf = 3 };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Lat: return "lat";
    case ModelKind::Bst: return "bst";
    case ModelKind::Smf: return "smf";
    case ModelKind::Cmf: return "cmf";
  }
  return "?";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "lat") return ModelKind::Lat;
  if (s == "bst") return ModelKind::Bst;
  if (s == "smf") return ModelKind::Smf;
  if (s == "cmf") return ModelKind::Cmf;
  throw ValidationError("unknown model kind: " + s);
}

struct ModelConfig {
  ModelKind kind = ModelKind::Lat;
  std::int64_t num_users = 0;   // M
  std::int64_t num_items = 0;   // N
  std::int32_t num_facets = 0;  // K, as observed in the data
  std::int32_t fg = 0;          // global factor rank
  std::int32_t fl = 0;          // local (per facet) factor rank
  std::int32_t user_feature_dim = 0;
  std::int32_t item_feature_dim = 0;

  // CMF ties every facet to one parameter set.
  std::int32_t effective_facets() const {
    return kind == ModelKind::Cmf ? std::min<std::int32_t>(1, num_facets)
                                  : num_facets;
  }
  std::int32_t effective_facet(std::int32_t k) const {
    return kind == ModelKind::Cmf ? 0 : k;
  }
  // The global bias layer (alpha_i, beta_j smoothing the per-facet
  // biases) belongs to the global part of the model and is active
  // exactly when the tensor is, so configurations with fg = 0 reduce
  // to SMF/CMF scoring identically.
  bool global_biases() const { return fg > 0; }

  // Applies the dimensional restrictions implied by the kind.
  ModelConfig normalized() const {
    ModelConfig c = *this;
    if (c.kind == ModelKind::Bst) c.fl = 0;
    if (c.kind == ModelKind::Smf || c.kind == ModelKind::Cmf) c.fg = 0;
    return c;
  }

  void validate() const {
    if (num_users < 0 || num_items < 0 || num_facets < 0)
      throw ValidationError("model dimensions must be nonnegative");
    if (fg < 0 || fl < 0)
      throw ValidationError("factor ranks must be nonnegative");
    if (user_feature_dim < 0 || item_feature_dim < 0)
      throw ValidationError("feature dimensions must be nonnegative");
    if (kind == ModelKind::Bst && fl != 0)
      throw ValidationError("bst requires fl = 0");
    if ((kind == ModelKind::Smf || kind == ModelKind::Cmf) && fg != 0)
      throw ValidationError("smf/cmf require fg = 0");
  }

  static ModelConfig from_dataset(const Dataset& ds, ModelKind kind,
                                  std::int32_t fg, std::int32_t fl) {
    ModelConfig c;
    c.kind = kind;
    c.num_users = ds.num_users;
    c.num_items = ds.num_items;
    c.num_facets = ds.num_facets;
    c.fg = fg;
    c.fl = fl;
    c.user_feature_dim = ds.user_feature_dim;
    c.item_feature_dim = ds.item_feature_dim;
    return c.normalized();
  }
};

// Regression coefficients and variances (the Theta of the EM loop).
// All per-facet containers have effective_facets() entries.
struct PriorParams {
  RowMatrix g;  // Ke x pu, bias regression for users
  RowMatrix d;  // Ke x pv, bias regression for items
  Eigen::VectorXd q;  // Ke, weight of the global user bias
  Eigen::VectorXd r;  // Ke, weight of the global item bias
  std::vector<RowMatrix> G;  // Ke of fl x pu, local user factor regression
  std::vector<RowMatrix> D;  // Ke of fl x pv
  Eigen::VectorXd var_alpha;  // Ke
  Eigen::VectorXd var_beta;   // Ke
  Eigen::VectorXd var_u;      // Ke
  Eigen::VectorXd var_v;      // Ke
  double var_u0 = 1.0;
  double var_v0 = 1.0;
  double var_y = 1.0;

  // Zero coefficients, unit variances.
  static PriorParams initial(const ModelConfig& cfg) {
    const auto ke = cfg.effective_facets();
    PriorParams p;
    p.g = RowMatrix::Zero(ke, cfg.user_feature_dim);
    p.d = RowMatrix::Zero(ke, cfg.item_feature_dim);
    p.q = Eigen::VectorXd::Zero(ke);
    p.r = Eigen::VectorXd::Zero(ke);
    p.G.assign(ke, RowMatrix::Zero(cfg.fl, cfg.user_feature_dim));
    p.D.assign(ke, RowMatrix::Zero(cfg.fl, cfg.item_feature_dim));
    p.var_alpha = Eigen::VectorXd::Ones(ke);
    p.var_beta = Eigen::VectorXd::Ones(ke);
    p.var_u = Eigen::VectorXd::Ones(ke);
    p.var_v = Eigen::VectorXd::Ones(ke);
    return p;
  }
};

// All latent factors. Local factor row for (id, facet) is
// id * effective_facets + facet.
struct FactorState {
  RowMatrix alpha_ik;  // M x Ke
  RowMatrix beta_jk;   // N x Ke
  Eigen::VectorXd alpha_i;  // M, global user bias
  Eigen::VectorXd beta_j;   // N
  RowMatrix u_i;   // M x fg
  RowMatrix v_j;   // N x fg
  RowMatrix w_k;   // Ke x fg
  RowMatrix u_ik;  // (M*Ke) x fl
  RowMatrix v_jk;  // (N*Ke) x fl

  static FactorState zeros(const ModelConfig& cfg) {
    const auto ke = cfg.effective_facets();
    FactorState s;
    s.alpha_ik = RowMatrix::Zero(cfg.num_users, ke);
    s.beta_jk = RowMatrix::Zero(cfg.num_items, ke);
    s.alpha_i = Eigen::VectorXd::Zero(cfg.num_users);
    s.beta_j = Eigen::VectorXd::Zero(cfg.num_items);
    s.u_i = RowMatrix::Zero(cfg.num_users, cfg.fg);
    s.v_j = RowMatrix::Zero(cfg.num_items, cfg.fg);
    s.w_k = RowMatrix::Zero(ke, cfg.fg);
    s.u_ik = RowMatrix::Zero(cfg.num_users * ke, cfg.fl);
    s.v_jk = RowMatrix::Zero(cfg.num_items * ke, cfg.fl);
    return s;
  }
};

// Which (user, facet) / (item, facet) pairs actually had training
// observations. Prediction falls back to regression priors for the
// rest.
struct TrainingPresence {
  std::vector<std::uint8_t> user_facet;  // M * Ke
  std::vector<std::uint8_t> item_facet;  // N * Ke
  std::vector<std::uint8_t> user;        // M
  std::vector<std::uint8_t> item;        // N

  static TrainingPresence none(const ModelConfig& cfg) {
    const auto ke = cfg.effective_facets();
    TrainingPresence p;
    p.user_facet.assign(static_cast<std::size_t>(cfg.num_users) * ke, 0);
    p.item_facet.assign(static_cast<std::size_t>(cfg.num_items) * ke, 0);
    p.user.assign(static_cast<std::size_t>(cfg.num_users), 0);
    p.item.assign(static_cast<std::size_t>(cfg.num_items), 0);
    return p;
  }

  static TrainingPresence from_events(const ModelConfig& cfg,
                                      const std::vector<Event>& events) {
    TrainingPresence p = none(cfg);
    const auto ke = cfg.effective_facets();
    for (const Event& e : events) {
      const auto k = cfg.effective_facet(e.facet);
      p.user_facet[static_cast<std::size_t>(e.user) * ke + k] = 1;
      p.item_facet[static_cast<std::size_t>(e.item) * ke + k] = 1;
      p.user[static_cast<std::size_t>(e.user)] = 1;
      p.item[static_cast<std::size_t>(e.item)] = 1;
    }
    return p;
  }
};

// <u, v, w> = sum_f u[f] v[f] w[f]. All three must share length.
template <typename A, typename B, typename C>
inline double tensor_product(const A& u, const B& v, const C& w) {
  if (u.size() != v.size() || v.size() != w.size())
    throw DimensionError("tensor product requires equal lengths");
  double s = 0.0;
  for (Eigen::Index f = 0; f < u.size(); ++f) s += u[f] * v[f] * w[f];
  return s;
}

namespace detail {

inline void check_triple(const ModelConfig& cfg, std::int64_t i,
                         std::int64_t j, std::int32_t k) {
  if (i < 0 || i >= cfg.num_users || j < 0 || j >= cfg.num_items || k < 0 ||
      k >= cfg.num_facets)
    throw DimensionError("score index out of range: user " + std::to_string(i) +
                         ", item " + std::to_string(j) + ", facet " +
                         std::to_string(k));
}

// y = A x for a sparse x. Rows of A beyond the feature entries are
// ignored, matching the convention that absent features are zero.
inline Eigen::VectorXd regress(const RowMatrix& coef, const FeatureVector& x) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(coef.rows());
  for (const auto& [idx, val] : x.entries)
    if (idx < coef.cols()) out += coef.col(idx) * val;
  return out;
}

inline double regress_scalar(const RowMatrix& coef, Eigen::Index row,
                             const FeatureVector& x) {
  double s = 0.0;
  for (const auto& [idx, val] : x.entries)
    if (idx < coef.cols()) s += coef(row, idx) * val;
  return s;
}

}  // namespace detail

// Score with every factor taken from the state as-is. `k` is a facet
// id of the original data space.
inline double score(const ModelConfig& cfg, const FactorState& s,
                    std::int64_t i, std::int64_t j, std::int32_t k) {
  detail::check_triple(cfg, i, j, k);
  const auto ke = cfg.effective_facets();
  const auto kk = cfg.effective_facet(k);
  double y = s.alpha_ik(i, kk) + s.beta_jk(j, kk);
  if (cfg.fg > 0) y += tensor_product(s.u_i.row(i), s.v_j.row(j), s.w_k.row(kk));
  if (cfg.fl > 0)
    y += s.u_ik.row(i * ke + kk).dot(s.v_jk.row(j * ke + kk));
  return y;
}

// Score for prediction. Factors missing from training are replaced by
// their prior regression means:
//
//   alpha_ik -> g_k' x_i + q_k alpha_i     u_ik -> G_k x_i
//   beta_jk  -> d_k' x_j + r_k beta_j      v_jk -> D_k x_j
//
// and entirely unseen users/items use zero global factors. Ids at or
// beyond the trained index space are treated as unseen.
inline double score_with_fallback(const ModelConfig& cfg, const FactorState& s,
                                  const PriorParams& p,
                                  const TrainingPresence& presence,
                                  const FeatureVector& x_user,
                                  const FeatureVector& x_item, std::int64_t i,
                                  std::int64_t j, std::int32_t k) {
  if (i < 0 || j < 0 || k < 0 || k >= cfg.num_facets)
    throw DimensionError("score index out of range");
  const auto ke = cfg.effective_facets();
  const auto kk = cfg.effective_facet(k);
  const bool user_known = i < cfg.num_users && presence.user[i];
  const bool item_known = j < cfg.num_items && presence.item[j];
  const bool uf = user_known && presence.user_facet[i * ke + kk];
  const bool jf = item_known && presence.item_facet[j * ke + kk];

  const double alpha_i = user_known ? s.alpha_i(i) : 0.0;
  const double beta_j = item_known ? s.beta_j(j) : 0.0;

  double y;
  if (uf) {
    y = s.alpha_ik(i, kk);
  } else {
    y = detail::regress_scalar(p.g, kk, x_user);
    if (cfg.global_biases()) y += p.q(kk) * alpha_i;
  }
  if (jf) {
    y += s.beta_jk(j, kk);
  } else {
    y += detail::regress_scalar(p.d, kk, x_item);
    if (cfg.global_biases()) y += p.r(kk) * beta_j;
  }
  if (cfg.fg > 0 && user_known && item_known)
    y += tensor_product(s.u_i.row(i), s.v_j.row(j), s.w_k.row(kk));
  if (cfg.fl > 0) {
    const Eigen::VectorXd u =
        uf ? Eigen::VectorXd(s.u_ik.row(i * ke + kk))
           : detail::regress(p.G[kk], x_user);
    const Eigen::VectorXd v =
        jf ? Eigen::VectorXd(s.v_jk.row(j * ke + kk))
           : detail::regress(p.D[kk], x_item);
    y += u.dot(v);
  }
  return y;
}

// Starting point for the Gibbs chain: biases at their prior regression
// means, factor vectors at prior means plus Gaussian jitter. With the
// initial (zero) coefficients everything is 0 up to jitter.
inline FactorState init_factors(const ModelConfig& cfg, const PriorParams& p,
                                const Dataset& ds, std::uint64_t seed,
                                double jitter = 0.01) {
  FactorState s = FactorState::zeros(cfg);
  const auto ke = cfg.effective_facets();
  // Array ids for stream derivation.
  enum : std::uint64_t { kUi = 0, kVj = 1, kWk = 2, kUik = 3, kVjk = 4 };

  for (std::int64_t i = 0; i < cfg.num_users; ++i)
    for (std::int32_t k = 0; k < ke; ++k)
      s.alpha_ik(i, k) = detail::regress_scalar(
          p.g, k, ds.user_features[static_cast<std::size_t>(i)]);
  for (std::int64_t j = 0; j < cfg.num_items; ++j)
    for (std::int32_t k = 0; k < ke; ++k)
      s.beta_jk(j, k) = detail::regress_scalar(
          p.d, k, ds.item_features[static_cast<std::size_t>(j)]);

  auto jitter_row = [&](auto row, std::uint64_t array,
                        std::uint64_t unit) {
    StreamRng rng(derive_stream(seed, {stream_phase::kInit, array, unit}));
    for (Eigen::Index f = 0; f < row.size(); ++f)
      row[f] += jitter * rng.normal();
  };
  for (std::int64_t i = 0; i < cfg.num_users; ++i)
    jitter_row(s.u_i.row(i), kUi, static_cast<std::uint64_t>(i));
  for (std::int64_t j = 0; j < cfg.num_items; ++j)
    jitter_row(s.v_j.row(j), kVj, static_cast<std::uint64_t>(j));
  for (std::int32_t k = 0; k < ke; ++k)
    jitter_row(s.w_k.row(k), kWk, static_cast<std::uint64_t>(k));
  for (std::int64_t i = 0; i < cfg.num_users; ++i)
    for (std::int32_t k = 0; k < ke; ++k) {
      auto row = s.u_ik.row(i * ke + k);
      row = detail::regress(p.G[k], ds.user_features[static_cast<std::size_t>(i)])
                .transpose();
      jitter_row(row, kUik, static_cast<std::uint64_t>(i * ke + k));
    }
  for (std::int64_t j = 0; j < cfg.num_items; ++j)
    for (std::int32_t k = 0; k < ke; ++k) {
      auto row = s.v_jk.row(j * ke + k);
      row = detail::regress(p.D[k], ds.item_features[static_cast<std::size_t>(j)])
                .transpose();
      jitter_row(row, kVjk, static_cast<std::uint64_t>(j * ke + k));
    }
  return s;
}

}  // namespace latrec
