// Apache License, Version 2.0, refer to LICENSE.txt.
//
// Gibbs sampling for the factor models. Every full conditional is
// Gaussian because the response is Gaussian and each factor enters the
// score linearly once everything else is fixed:
//
//   posterior precision = I / prior_var + sum_e z_e z_e' / var_y
//   posterior mean      = precision^-1 (prior_mean / prior_var
//                                       + sum_e z_e resid_e / var_y)
//
// with z_e the effective regressor of the factor in observation e
// (1 for biases, v_jk for u_ik, v_j o w_k for u_i, u_i o v_j for w_k)
// and resid_e the response minus all other score terms.
//
// One sweep visits blocks in a fixed order: per-facet biases, global
// biases, local factors facet by facet, then the global factors.
// Units inside a block are conditionally independent given the rest,
// so they may be sampled in parallel; each unit draws from a stream
// keyed by (seed, phase, iteration, sweep, block, unit), which makes
// the chain bit-reproducible for any thread count.

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "latrec/data.hpp"
#include "latrec/errors.hpp"
#include "latrec/model.hpp"
#include "latrec/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace latrec {

struct GaussianPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// The conjugate update above, in covariance form. `regressors` holds
// one observation per row.
inline GaussianPosterior vector_factor_conditional(
    const Eigen::MatrixXd& regressors, const Eigen::VectorXd& residuals,
    const Eigen::VectorXd& prior_mean, double prior_var, double obs_var) {
  if (prior_var <= 0.0 || obs_var <= 0.0)
    throw TrainingError("conditional update requires positive variances");
  if (regressors.rows() != residuals.size())
    throw DimensionError("regressor rows must match residual count");
  if (regressors.cols() != prior_mean.size())
    throw DimensionError("regressor width must match prior mean length");
  const Eigen::Index f = prior_mean.size();
  Eigen::MatrixXd precision = Eigen::MatrixXd::Identity(f, f) / prior_var;
  precision.noalias() += regressors.transpose() * regressors / obs_var;
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success)
    throw TrainingError("posterior precision is not positive definite");
  Eigen::VectorXd b = prior_mean / prior_var;
  b.noalias() += regressors.transpose() * residuals / obs_var;
  GaussianPosterior out;
  out.mean = llt.solve(b);
  out.cov = llt.solve(Eigen::MatrixXd::Identity(f, f));
  return out;
}

struct ScalarPosterior {
  double mean = 0.0;
  double var = 0.0;
};

inline ScalarPosterior scalar_factor_conditional(double resid_sum,
                                                 std::int64_t count,
                                                 double prior_mean,
                                                 double prior_var,
                                                 double obs_var) {
  if (prior_var <= 0.0 || obs_var <= 0.0)
    throw TrainingError("conditional update requires positive variances");
  const double precision =
      1.0 / prior_var + static_cast<double>(count) / obs_var;
  ScalarPosterior out;
  out.var = 1.0 / precision;
  out.mean = out.var * (prior_mean / prior_var + resid_sum / obs_var);
  return out;
}

// One training observation with a real-valued response. Facet ids are
// in the effective (possibly tied) space.
struct Obs {
  std::int64_t user = 0;
  std::int64_t item = 0;
  std::int32_t facet = 0;
  double y = 0.0;
};

// Observations plus the adjacency lists each Gibbs block walks, and
// dense feature copies for the regression caches.
struct TrainTable {
  ModelConfig cfg;  // normalized
  std::vector<Obs> obs;
  // CSR adjacency: entry lists hold observation indices.
  std::vector<std::int64_t> uf_off, uf_idx;  // by (user, facet), M*Ke+1
  std::vector<std::int64_t> if_off, if_idx;  // by (item, facet)
  std::vector<std::int64_t> u_off, u_idx;    // by user
  std::vector<std::int64_t> i_off, i_idx;    // by item
  std::vector<std::int64_t> k_off, k_idx;    // by facet
  RowMatrix x_user;         // M x pu, dense
  RowMatrix x_item;         // N x pv
  Eigen::MatrixXd xx_user;  // pu x pu Gram of user features
  Eigen::MatrixXd xx_item;

  static TrainTable build(const Dataset& ds, const ModelConfig& config,
                          const std::vector<double>* responses = nullptr) {
    ModelConfig cfg = config.normalized();
    cfg.validate();
    if (responses && responses->size() != ds.events.size())
      throw DimensionError("response vector must align with events");
    TrainTable t;
    t.cfg = cfg;
    const auto ke = cfg.effective_facets();
    t.obs.reserve(ds.events.size());
    for (std::size_t e = 0; e < ds.events.size(); ++e) {
      const Event& ev = ds.events[e];
      t.obs.push_back(Obs{ev.user, ev.item, cfg.effective_facet(ev.facet),
                          responses ? (*responses)[e]
                                    : static_cast<double>(ev.label)});
    }
    auto csr = [](std::int64_t buckets, auto&& key, std::int64_t n,
                  std::vector<std::int64_t>& off,
                  std::vector<std::int64_t>& idx) {
      off.assign(static_cast<std::size_t>(buckets) + 1, 0);
      for (std::int64_t e = 0; e < n; ++e)
        off[static_cast<std::size_t>(key(e)) + 1]++;
      for (std::size_t b = 1; b < off.size(); ++b) off[b] += off[b - 1];
      idx.resize(static_cast<std::size_t>(n));
      std::vector<std::int64_t> cursor(off.begin(), off.end() - 1);
      for (std::int64_t e = 0; e < n; ++e)
        idx[static_cast<std::size_t>(
            cursor[static_cast<std::size_t>(key(e))]++)] = e;
    };
    const auto n = static_cast<std::int64_t>(t.obs.size());
    csr(
        cfg.num_users * ke,
        [&](std::int64_t e) { return t.obs[e].user * ke + t.obs[e].facet; }, n,
        t.uf_off, t.uf_idx);
    csr(
        cfg.num_items * ke,
        [&](std::int64_t e) { return t.obs[e].item * ke + t.obs[e].facet; }, n,
        t.if_off, t.if_idx);
    csr(
        cfg.num_users, [&](std::int64_t e) { return t.obs[e].user; }, n,
        t.u_off, t.u_idx);
    csr(
        cfg.num_items, [&](std::int64_t e) { return t.obs[e].item; }, n,
        t.i_off, t.i_idx);
    csr(
        ke, [&](std::int64_t e) { return t.obs[e].facet; }, n, t.k_off,
        t.k_idx);

    t.x_user = RowMatrix::Zero(cfg.num_users, cfg.user_feature_dim);
    for (std::int64_t i = 0; i < cfg.num_users; ++i)
      for (const auto& [idx, val] :
           ds.user_features[static_cast<std::size_t>(i)].entries)
        t.x_user(i, idx) = val;
    t.x_item = RowMatrix::Zero(cfg.num_items, cfg.item_feature_dim);
    for (std::int64_t j = 0; j < cfg.num_items; ++j)
      for (const auto& [idx, val] :
           ds.item_features[static_cast<std::size_t>(j)].entries)
        t.x_item(j, idx) = val;
    t.xx_user = t.x_user.transpose() * t.x_user;
    t.xx_item = t.x_item.transpose() * t.x_item;
    return t;
  }
};

namespace detail {

// Block tags for stream derivation; values are part of the
// reproducibility contract.
enum GibbsBlock : std::uint64_t {
  kBlockAlphaIk = 0,
  kBlockBetaJk = 1,
  kBlockAlphaI = 2,
  kBlockBetaJ = 3,
  kBlockUik = 4,
  kBlockVjk = 5,
  kBlockUi = 6,
  kBlockVj = 7,
  kBlockWk = 8,
};

}  // namespace detail

// Full score of one observation from the current state. No bounds
// checks; hot path. `k` is an effective facet id.
inline double raw_score(const ModelConfig& cfg, const FactorState& s,
                        std::int64_t i, std::int64_t j, std::int32_t k) {
  const auto ke = cfg.effective_facets();
  double y = s.alpha_ik(i, k) + s.beta_jk(j, k);
  if (cfg.fg > 0) {
    double t = 0.0;
    for (std::int32_t f = 0; f < cfg.fg; ++f)
      t += s.u_i(i, f) * s.v_j(j, f) * s.w_k(k, f);
    y += t;
  }
  if (cfg.fl > 0) y += s.u_ik.row(i * ke + k).dot(s.v_jk.row(j * ke + k));
  return y;
}

namespace detail {

inline double tensor_term(const ModelConfig& cfg, const FactorState& s,
                          std::int64_t i, std::int64_t j, std::int32_t k) {
  double t = 0.0;
  for (std::int32_t f = 0; f < cfg.fg; ++f)
    t += s.u_i(i, f) * s.v_j(j, f) * s.w_k(k, f);
  return t;
}

inline double local_term(const ModelConfig& cfg, const FactorState& s,
                         std::int64_t i, std::int64_t j, std::int32_t k) {
  if (cfg.fl == 0) return 0.0;
  const auto ke = cfg.effective_facets();
  return s.u_ik.row(i * ke + k).dot(s.v_jk.row(j * ke + k));
}

}  // namespace detail

class GibbsSampler {
 public:
  GibbsSampler(const TrainTable& table, std::uint64_t seed)
      : t_(table),
        cfg_(table.cfg),
        ke_(table.cfg.effective_facets()),
        seed_(seed) {}

  // Recomputes the feature parts of the prior means. Call after every
  // parameter update.
  void refresh_prior_means(const PriorParams& p) {
    feat_alpha_ = t_.x_user * p.g.transpose();  // M x Ke
    feat_beta_ = t_.x_item * p.d.transpose();   // N x Ke
    if (cfg_.fl > 0) {
      feat_u_.resize(cfg_.num_users * ke_, cfg_.fl);
      for (std::int32_t k = 0; k < ke_; ++k) {
        const RowMatrix mk = t_.x_user * p.G[k].transpose();  // M x fl
        for (std::int64_t i = 0; i < cfg_.num_users; ++i)
          feat_u_.row(i * ke_ + k) = mk.row(i);
      }
      feat_v_.resize(cfg_.num_items * ke_, cfg_.fl);
      for (std::int32_t k = 0; k < ke_; ++k) {
        const RowMatrix mk = t_.x_item * p.D[k].transpose();
        for (std::int64_t j = 0; j < cfg_.num_items; ++j)
          feat_v_.row(j * ke_ + k) = mk.row(j);
      }
    }
  }

  // One systematic sweep over all blocks. (phase, em_iter, sweep)
  // identify this sweep in the stream key space.
  void sweep(FactorState& s, const PriorParams& p, std::uint64_t phase,
             std::uint64_t em_iter, std::uint64_t sweep_idx) const {
    sample_bias_block(s, p, phase, em_iter, sweep_idx, /*user_side=*/true);
    sample_bias_block(s, p, phase, em_iter, sweep_idx, /*user_side=*/false);
    if (cfg_.global_biases()) {
      sample_global_bias(s, p, phase, em_iter, sweep_idx, true);
      sample_global_bias(s, p, phase, em_iter, sweep_idx, false);
    }
    if (cfg_.fl > 0) {
      for (std::int32_t k = 0; k < ke_; ++k) {
        sample_local_block(s, p, k, phase, em_iter, sweep_idx, true);
        sample_local_block(s, p, k, phase, em_iter, sweep_idx, false);
      }
    }
    if (cfg_.fg > 0) {
      sample_global_factor(s, p, phase, em_iter, sweep_idx, true);
      sample_global_factor(s, p, phase, em_iter, sweep_idx, false);
      sample_w(s, p, phase, em_iter, sweep_idx);
    }
  }

  // Single-unit draws. Public so tests can drive one coordinate with
  // everything else frozen.

  double draw_alpha_ik(const FactorState& s, const PriorParams& p,
                       std::int64_t i, std::int32_t k, StreamRng& rng) const {
    double resid_sum = 0.0;
    std::int64_t n = 0;
    for (auto e = t_.uf_off[i * ke_ + k]; e < t_.uf_off[i * ke_ + k + 1];
         ++e) {
      const Obs& o = t_.obs[static_cast<std::size_t>(t_.uf_idx[e])];
      resid_sum += o.y - s.beta_jk(o.item, k) -
                   detail::tensor_term(cfg_, s, i, o.item, k) -
                   detail::local_term(cfg_, s, i, o.item, k);
      ++n;
    }
    double prior_mean = feat_alpha_(i, k);
    if (cfg_.global_biases()) prior_mean += p.q(k) * s.alpha_i(i);
    const auto post = scalar_factor_conditional(resid_sum, n, prior_mean,
                                                p.var_alpha(k), p.var_y);
    return post.mean + std::sqrt(post.var) * rng.normal();
  }

  double draw_beta_jk(const FactorState& s, const PriorParams& p,
                      std::int64_t j, std::int32_t k, StreamRng& rng) const {
    double resid_sum = 0.0;
    std::int64_t n = 0;
    for (auto e = t_.if_off[j * ke_ + k]; e < t_.if_off[j * ke_ + k + 1];
         ++e) {
      const Obs& o = t_.obs[static_cast<std::size_t>(t_.if_idx[e])];
      resid_sum += o.y - s.alpha_ik(o.user, k) -
                   detail::tensor_term(cfg_, s, o.user, j, k) -
                   detail::local_term(cfg_, s, o.user, j, k);
      ++n;
    }
    double prior_mean = feat_beta_(j, k);
    if (cfg_.global_biases()) prior_mean += p.r(k) * s.beta_j(j);
    const auto post = scalar_factor_conditional(resid_sum, n, prior_mean,
                                                p.var_beta(k), p.var_y);
    return post.mean + std::sqrt(post.var) * rng.normal();
  }

  // alpha_i has no direct observations; the alpha_ik priors in which
  // it appears as a regressor play the likelihood role, and its own
  // prior is N(0,1).
  double draw_alpha_i(const FactorState& s, const PriorParams& p,
                      std::int64_t i, StreamRng& rng) const {
    double precision = 1.0;
    double weighted = 0.0;
    for (std::int32_t k = 0; k < ke_; ++k) {
      precision += p.q(k) * p.q(k) / p.var_alpha(k);
      weighted +=
          p.q(k) * (s.alpha_ik(i, k) - feat_alpha_(i, k)) / p.var_alpha(k);
    }
    const double var = 1.0 / precision;
    return var * weighted + std::sqrt(var) * rng.normal();
  }

  double draw_beta_j(const FactorState& s, const PriorParams& p,
                     std::int64_t j, StreamRng& rng) const {
    double precision = 1.0;
    double weighted = 0.0;
    for (std::int32_t k = 0; k < ke_; ++k) {
      precision += p.r(k) * p.r(k) / p.var_beta(k);
      weighted +=
          p.r(k) * (s.beta_jk(j, k) - feat_beta_(j, k)) / p.var_beta(k);
    }
    const double var = 1.0 / precision;
    return var * weighted + std::sqrt(var) * rng.normal();
  }

  Eigen::VectorXd draw_u_ik(const FactorState& s, const PriorParams& p,
                            std::int64_t i, std::int32_t k,
                            StreamRng& rng) const {
    const auto row = i * ke_ + k;
    return draw_vector(
        t_.uf_off[row], t_.uf_off[row + 1], t_.uf_idx,
        [&](const Obs& o, Eigen::VectorXd& z) {
          z = s.v_jk.row(o.item * ke_ + k).transpose();
        },
        [&](const Obs& o) {
          return o.y - s.alpha_ik(i, k) - s.beta_jk(o.item, k) -
                 detail::tensor_term(cfg_, s, i, o.item, k);
        },
        feat_u_.row(row).transpose(), p.var_u(k), p.var_y, cfg_.fl, rng);
  }

  Eigen::VectorXd draw_v_jk(const FactorState& s, const PriorParams& p,
                            std::int64_t j, std::int32_t k,
                            StreamRng& rng) const {
    const auto row = j * ke_ + k;
    return draw_vector(
        t_.if_off[row], t_.if_off[row + 1], t_.if_idx,
        [&](const Obs& o, Eigen::VectorXd& z) {
          z = s.u_ik.row(o.user * ke_ + k).transpose();
        },
        [&](const Obs& o) {
          return o.y - s.alpha_ik(o.user, k) - s.beta_jk(j, k) -
                 detail::tensor_term(cfg_, s, o.user, j, k);
        },
        feat_v_.row(row).transpose(), p.var_v(k), p.var_y, cfg_.fl, rng);
  }

  Eigen::VectorXd draw_u_i(const FactorState& s, const PriorParams& p,
                           std::int64_t i, StreamRng& rng) const {
    return draw_vector(
        t_.u_off[i], t_.u_off[i + 1], t_.u_idx,
        [&](const Obs& o, Eigen::VectorXd& z) {
          z = (s.v_j.row(o.item).cwiseProduct(s.w_k.row(o.facet))).transpose();
        },
        [&](const Obs& o) {
          return o.y - s.alpha_ik(i, o.facet) - s.beta_jk(o.item, o.facet) -
                 detail::local_term(cfg_, s, i, o.item, o.facet);
        },
        Eigen::VectorXd::Zero(cfg_.fg), p.var_u0, p.var_y, cfg_.fg, rng);
  }

  Eigen::VectorXd draw_v_j(const FactorState& s, const PriorParams& p,
                           std::int64_t j, StreamRng& rng) const {
    return draw_vector(
        t_.i_off[j], t_.i_off[j + 1], t_.i_idx,
        [&](const Obs& o, Eigen::VectorXd& z) {
          z = (s.u_i.row(o.user).cwiseProduct(s.w_k.row(o.facet))).transpose();
        },
        [&](const Obs& o) {
          return o.y - s.alpha_ik(o.user, o.facet) - s.beta_jk(j, o.facet) -
                 detail::local_term(cfg_, s, o.user, j, o.facet);
        },
        Eigen::VectorXd::Zero(cfg_.fg), p.var_v0, p.var_y, cfg_.fg, rng);
  }

  Eigen::VectorXd draw_w_k(const FactorState& s, const PriorParams& p,
                           std::int32_t k, StreamRng& rng) const {
    return draw_vector(
        t_.k_off[k], t_.k_off[k + 1], t_.k_idx,
        [&](const Obs& o, Eigen::VectorXd& z) {
          z = (s.u_i.row(o.user).cwiseProduct(s.v_j.row(o.item))).transpose();
        },
        [&](const Obs& o) {
          return o.y - s.alpha_ik(o.user, k) - s.beta_jk(o.item, k) -
                 detail::local_term(cfg_, s, o.user, o.item, k);
        },
        Eigen::VectorXd::Zero(cfg_.fg), 1.0, p.var_y, cfg_.fg, rng);
  }

  const TrainTable& table() const { return t_; }

 private:
  template <typename FillRegressor, typename Residual>
  Eigen::VectorXd draw_vector(std::int64_t lo, std::int64_t hi,
                              const std::vector<std::int64_t>& idx,
                              FillRegressor&& fill, Residual&& residual,
                              const Eigen::VectorXd& prior_mean,
                              double prior_var, double var_y, Eigen::Index f,
                              StreamRng& rng) const {
    if (prior_var <= 0.0 || var_y <= 0.0)
      throw TrainingError("conditional update requires positive variances");
    Eigen::MatrixXd precision = Eigen::MatrixXd::Identity(f, f) / prior_var;
    Eigen::VectorXd b = prior_mean / prior_var;
    Eigen::VectorXd z(f);
    for (auto e = lo; e < hi; ++e) {
      const Obs& o = t_.obs[static_cast<std::size_t>(idx[static_cast<std::size_t>(e)])];
      fill(o, z);
      precision.noalias() += z * z.transpose() / var_y;
      b.noalias() += z * (residual(o) / var_y);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success)
      throw TrainingError("posterior precision not positive definite");
    for (Eigen::Index a = 0; a < f; ++a) z(a) = rng.normal();
    // cov = P^-1 = L^-T L^-1, so mean + L^-T z has the right law.
    return llt.solve(b) + llt.matrixU().solve(z);
  }

  StreamRng unit_rng(std::uint64_t phase, std::uint64_t em_iter,
                     std::uint64_t sweep, std::uint64_t block,
                     std::uint64_t unit) const {
    return StreamRng(
        derive_stream(seed_, {phase, em_iter, sweep, block, unit}));
  }

  void sample_bias_block(FactorState& s, const PriorParams& p,
                         std::uint64_t phase, std::uint64_t em_iter,
                         std::uint64_t sweep, bool user_side) const {
    const std::int64_t rows = user_side ? cfg_.num_users : cfg_.num_items;
    const std::uint64_t block =
        user_side ? detail::kBlockAlphaIk : detail::kBlockBetaJk;
    const std::int64_t units = rows * ke_;
#pragma omp parallel for schedule(static)
    for (std::int64_t u = 0; u < units; ++u) {
      StreamRng rng =
          unit_rng(phase, em_iter, sweep, block, static_cast<std::uint64_t>(u));
      const std::int64_t id = u / ke_;
      const auto k = static_cast<std::int32_t>(u % ke_);
      if (user_side)
        s.alpha_ik(id, k) = draw_alpha_ik(s, p, id, k, rng);
      else
        s.beta_jk(id, k) = draw_beta_jk(s, p, id, k, rng);
    }
  }

  void sample_global_bias(FactorState& s, const PriorParams& p,
                          std::uint64_t phase, std::uint64_t em_iter,
                          std::uint64_t sweep, bool user_side) const {
    const std::int64_t rows = user_side ? cfg_.num_users : cfg_.num_items;
    const std::uint64_t block =
        user_side ? detail::kBlockAlphaI : detail::kBlockBetaJ;
#pragma omp parallel for schedule(static)
    for (std::int64_t id = 0; id < rows; ++id) {
      StreamRng rng = unit_rng(phase, em_iter, sweep, block,
                               static_cast<std::uint64_t>(id));
      if (user_side)
        s.alpha_i(id) = draw_alpha_i(s, p, id, rng);
      else
        s.beta_j(id) = draw_beta_j(s, p, id, rng);
    }
  }

  void sample_local_block(FactorState& s, const PriorParams& p, std::int32_t k,
                          std::uint64_t phase, std::uint64_t em_iter,
                          std::uint64_t sweep, bool user_side) const {
    const std::int64_t rows = user_side ? cfg_.num_users : cfg_.num_items;
    const std::uint64_t block =
        user_side ? detail::kBlockUik : detail::kBlockVjk;
#pragma omp parallel for schedule(static)
    for (std::int64_t id = 0; id < rows; ++id) {
      StreamRng rng = unit_rng(phase, em_iter, sweep, block,
                               static_cast<std::uint64_t>(id * ke_ + k));
      if (user_side)
        s.u_ik.row(id * ke_ + k) = draw_u_ik(s, p, id, k, rng).transpose();
      else
        s.v_jk.row(id * ke_ + k) = draw_v_jk(s, p, id, k, rng).transpose();
    }
  }

  void sample_global_factor(FactorState& s, const PriorParams& p,
                            std::uint64_t phase, std::uint64_t em_iter,
                            std::uint64_t sweep, bool user_side) const {
    const std::int64_t rows = user_side ? cfg_.num_users : cfg_.num_items;
    const std::uint64_t block = user_side ? detail::kBlockUi : detail::kBlockVj;
#pragma omp parallel for schedule(static)
    for (std::int64_t id = 0; id < rows; ++id) {
      StreamRng rng = unit_rng(phase, em_iter, sweep, block,
                               static_cast<std::uint64_t>(id));
      if (user_side)
        s.u_i.row(id) = draw_u_i(s, p, id, rng).transpose();
      else
        s.v_j.row(id) = draw_v_j(s, p, id, rng).transpose();
    }
  }

  void sample_w(FactorState& s, const PriorParams& p, std::uint64_t phase,
                std::uint64_t em_iter, std::uint64_t sweep) const {
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < ke_; ++k) {
      StreamRng rng = unit_rng(phase, em_iter, sweep, detail::kBlockWk,
                               static_cast<std::uint64_t>(k));
      s.w_k.row(k) =
          draw_w_k(s, p, static_cast<std::int32_t>(k), rng).transpose();
    }
  }

  const TrainTable& t_;
  const ModelConfig& cfg_;
  const std::int32_t ke_;
  const std::uint64_t seed_;
  RowMatrix feat_alpha_;  // M x Ke, g_k' x_i
  RowMatrix feat_beta_;   // N x Ke
  RowMatrix feat_u_;      // (M*Ke) x fl, G_k x_i
  RowMatrix feat_v_;
};

}  // namespace latrec
