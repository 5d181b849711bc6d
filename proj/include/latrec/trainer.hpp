// Apache License, Version 2.0, refer to LICENSE.txt.
//
// Monte Carlo EM. The E-step runs the Gibbs sampler and accumulates
// moments of the factors; the M-step maximizes the expected complete
// data log likelihood in closed form (ridge regressions for the
// feature maps, residual averages for the variances). The fit records
// a per-iteration trace so the ascent property of EM can be checked:
// the M-step maximizes the same Monte Carlo objective the trace
// reports, so up to the ridge term and sampling noise the value after
// the M-step can never fall below the value before it.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "latrec/data.hpp"
#include "latrec/errors.hpp"
#include "latrec/gibbs.hpp"
#include "latrec/model.hpp"
#include "latrec/model_io.hpp"
#include "latrec/rng.hpp"

namespace latrec {

struct TrainOptions {
  int em_iters = 30;
  int gibbs_samples = 100;  // retained per E-step
  int burn_in = 20;         // discarded per E-step
  std::uint64_t seed = 1;
  double variance_floor = 1e-8;
  double ridge_lambda = 1e-6;
  double init_jitter = 0.01;
  bool learn_var_y = true;

  void validate() const {
    if (em_iters < 1) throw ValidationError("em_iters must be at least 1");
    if (gibbs_samples < 1)
      throw ValidationError("gibbs_samples must be at least 1");
    if (burn_in < 0) throw ValidationError("burn_in must be nonnegative");
    if (variance_floor <= 0.0)
      throw ValidationError("variance_floor must be positive");
    if (ridge_lambda < 0.0)
      throw ValidationError("ridge_lambda must be nonnegative");
    if (init_jitter < 0.0)
      throw ValidationError("init_jitter must be nonnegative");
  }
};

// Monte Carlo moments of the factors, averaged over retained samples
// after finalize(). These are sufficient for both the M-step and the
// expected complete data log likelihood.
struct SufficientStats {
  explicit SufficientStats(const ModelConfig& config) : cfg(config.normalized()) {
    const auto ke = cfg.effective_facets();
    a1 = Eigen::VectorXd::Zero(cfg.num_users);
    a2 = Eigen::VectorXd::Zero(cfg.num_users);
    b1 = Eigen::VectorXd::Zero(cfg.num_items);
    b2 = Eigen::VectorXd::Zero(cfg.num_items);
    A1 = RowMatrix::Zero(cfg.num_users, ke);
    A2 = RowMatrix::Zero(cfg.num_users, ke);
    Aa = RowMatrix::Zero(cfg.num_users, ke);
    B1 = RowMatrix::Zero(cfg.num_items, ke);
    B2 = RowMatrix::Zero(cfg.num_items, ke);
    Bb = RowMatrix::Zero(cfg.num_items, ke);
    U1 = RowMatrix::Zero(cfg.num_users * ke, cfg.fl);
    U2 = Eigen::VectorXd::Zero(cfg.num_users * ke);
    V1 = RowMatrix::Zero(cfg.num_items * ke, cfg.fl);
    V2 = Eigen::VectorXd::Zero(cfg.num_items * ke);
  }

  ModelConfig cfg;
  int num_samples = 0;
  double resid_sq = 0.0;     // sum over observations of squared residual
  Eigen::VectorXd a1, a2;    // moments of alpha_i
  Eigen::VectorXd b1, b2;    // moments of beta_j
  RowMatrix A1, A2, Aa;      // alpha_ik, alpha_ik^2, alpha_i * alpha_ik
  RowMatrix B1, B2, Bb;      // item mirrors
  RowMatrix U1;              // u_ik rows
  Eigen::VectorXd U2;        // |u_ik|^2 per row
  RowMatrix V1;
  Eigen::VectorXd V2;
  double su2 = 0.0;          // sum_i |u_i|^2
  double sv2 = 0.0;
  double sw2 = 0.0;          // sum_k |w_k|^2
  std::vector<double> loglik_samples;  // complete data loglik per sample

  // Adds one Gibbs sample. `priors` are the current (pre M-step)
  // parameters; the per-sample log likelihood is recorded under them.
  void accumulate(const FactorState& s, const TrainTable& t,
                  const PriorParams& priors);
  // Converts raw sums into averages over the retained samples.
  void finalize() {
    if (num_samples < 1) throw TrainingError("no Gibbs samples accumulated");
    const double inv = 1.0 / num_samples;
    resid_sq *= inv;
    a1 *= inv; a2 *= inv; b1 *= inv; b2 *= inv;
    A1 *= inv; A2 *= inv; Aa *= inv;
    B1 *= inv; B2 *= inv; Bb *= inv;
    U1 *= inv; U2 *= inv; V1 *= inv; V2 *= inv;
    su2 *= inv; sv2 *= inv; sw2 *= inv;
  }
};

namespace detail {

// Complete data log likelihood given a precomputed residual sum of
// squares. Constant 2*pi terms are dropped throughout; log variance
// terms are kept because the M-step updates the variances.
inline double loglik_given_resid(const ModelConfig& cfg, const FactorState& s,
                                 const PriorParams& p, const TrainTable& t,
                                 double resid_sq) {
  const auto ke = cfg.effective_facets();
  const auto n = static_cast<double>(t.obs.size());
  double ll = -0.5 * (n * std::log(p.var_y) + resid_sq / p.var_y);
  const RowMatrix ma = t.x_user * p.g.transpose();  // M x Ke
  const RowMatrix mb = t.x_item * p.d.transpose();  // N x Ke
  for (std::int32_t k = 0; k < ke; ++k) {
    double ssa = 0.0;
    for (std::int64_t i = 0; i < cfg.num_users; ++i) {
      double mean = ma(i, k);
      if (cfg.global_biases()) mean += p.q(k) * s.alpha_i(i);
      const double d = s.alpha_ik(i, k) - mean;
      ssa += d * d;
    }
    ll -= 0.5 * (cfg.num_users * std::log(p.var_alpha(k)) +
                 ssa / p.var_alpha(k));
    double ssb = 0.0;
    for (std::int64_t j = 0; j < cfg.num_items; ++j) {
      double mean = mb(j, k);
      if (cfg.global_biases()) mean += p.r(k) * s.beta_j(j);
      const double d = s.beta_jk(j, k) - mean;
      ssb += d * d;
    }
    ll -= 0.5 * (cfg.num_items * std::log(p.var_beta(k)) +
                 ssb / p.var_beta(k));
  }
  if (cfg.global_biases())
    ll -= 0.5 * (s.alpha_i.squaredNorm() + s.beta_j.squaredNorm());
  if (cfg.fl > 0) {
    for (std::int32_t k = 0; k < ke; ++k) {
      const RowMatrix pu = t.x_user * p.G[k].transpose();  // M x fl
      double ssu = 0.0;
      for (std::int64_t i = 0; i < cfg.num_users; ++i)
        ssu += (s.u_ik.row(i * ke + k) - pu.row(i)).squaredNorm();
      ll -= 0.5 * (cfg.num_users * cfg.fl * std::log(p.var_u(k)) +
                   ssu / p.var_u(k));
      const RowMatrix pv = t.x_item * p.D[k].transpose();
      double ssv = 0.0;
      for (std::int64_t j = 0; j < cfg.num_items; ++j)
        ssv += (s.v_jk.row(j * ke + k) - pv.row(j)).squaredNorm();
      ll -= 0.5 * (cfg.num_items * cfg.fl * std::log(p.var_v(k)) +
                   ssv / p.var_v(k));
    }
  }
  if (cfg.fg > 0) {
    ll -= 0.5 * (cfg.num_users * cfg.fg * std::log(p.var_u0) +
                 s.u_i.squaredNorm() / p.var_u0);
    ll -= 0.5 * (cfg.num_items * cfg.fg * std::log(p.var_v0) +
                 s.v_j.squaredNorm() / p.var_v0);
    ll -= 0.5 * s.w_k.squaredNorm();
  }
  return ll;
}

}  // namespace detail

// Log of p(y, factors | parameters) up to the dropped 2*pi constants.
inline double complete_data_loglik(const ModelConfig& cfg,
                                   const FactorState& s, const PriorParams& p,
                                   const TrainTable& t) {
  double resid_sq = 0.0;
  for (const Obs& o : t.obs) {
    const double r = o.y - raw_score(cfg, s, o.user, o.item, o.facet);
    resid_sq += r * r;
  }
  return detail::loglik_given_resid(cfg, s, p, t, resid_sq);
}

inline void SufficientStats::accumulate(const FactorState& s,
                                        const TrainTable& t,
                                        const PriorParams& priors) {
  const auto ke = cfg.effective_facets();
  double rs = 0.0;
  for (const Obs& o : t.obs) {
    const double r = o.y - raw_score(cfg, s, o.user, o.item, o.facet);
    rs += r * r;
  }
  resid_sq += rs;
  if (cfg.global_biases()) {
    a1 += s.alpha_i;
    a2 += s.alpha_i.cwiseAbs2();
    b1 += s.beta_j;
    b2 += s.beta_j.cwiseAbs2();
    Aa += s.alpha_i.asDiagonal() * s.alpha_ik;
    Bb += s.beta_j.asDiagonal() * s.beta_jk;
  }
  A1 += s.alpha_ik;
  A2 += s.alpha_ik.cwiseAbs2();
  B1 += s.beta_jk;
  B2 += s.beta_jk.cwiseAbs2();
  if (cfg.fl > 0) {
    U1 += s.u_ik;
    U2 += s.u_ik.rowwise().squaredNorm();
    V1 += s.v_jk;
    V2 += s.v_jk.rowwise().squaredNorm();
  }
  if (cfg.fg > 0) {
    su2 += s.u_i.squaredNorm();
    sv2 += s.v_j.squaredNorm();
    sw2 += s.w_k.squaredNorm();
  }
  loglik_samples.push_back(detail::loglik_given_resid(cfg, s, priors, t, rs));
  ++num_samples;
}

// Expected complete data log likelihood under the Monte Carlo
// distribution captured in `stats`, evaluated at `p`. Agrees with the
// average of the per-sample values when evaluated at the parameters
// the samples were drawn under; the M-step maximizes this function of
// `p` with `stats` held fixed.
inline double expected_loglik(const SufficientStats& stats,
                              const PriorParams& p, const TrainTable& t) {
  const ModelConfig& cfg = stats.cfg;
  const auto ke = cfg.effective_facets();
  const auto M = cfg.num_users;
  const auto N = cfg.num_items;
  const auto n = static_cast<double>(t.obs.size());
  double ll = -0.5 * (n * std::log(p.var_y) + stats.resid_sq / p.var_y);
  for (std::int32_t k = 0; k < ke; ++k) {
    const Eigen::VectorXd ma = t.x_user * p.g.row(k).transpose();  // M
    // E (alpha_ik - m_i - q a_i)^2 summed over users, from moments.
    double ss = stats.A2.col(k).sum() - 2.0 * ma.dot(stats.A1.col(k)) +
                ma.squaredNorm();
    if (cfg.global_biases()) {
      const double q = p.q(k);
      ss += -2.0 * q * stats.Aa.col(k).sum() + 2.0 * q * ma.dot(stats.a1) +
            q * q * stats.a2.sum();
    }
    ll -= 0.5 * (M * std::log(p.var_alpha(k)) + ss / p.var_alpha(k));
    const Eigen::VectorXd mb = t.x_item * p.d.row(k).transpose();
    double ssb = stats.B2.col(k).sum() - 2.0 * mb.dot(stats.B1.col(k)) +
                 mb.squaredNorm();
    if (cfg.global_biases()) {
      const double r = p.r(k);
      ssb += -2.0 * r * stats.Bb.col(k).sum() + 2.0 * r * mb.dot(stats.b1) +
             r * r * stats.b2.sum();
    }
    ll -= 0.5 * (N * std::log(p.var_beta(k)) + ssb / p.var_beta(k));
  }
  if (cfg.global_biases())
    ll -= 0.5 * (stats.a2.sum() + stats.b2.sum());
  if (cfg.fl > 0) {
    for (std::int32_t k = 0; k < ke; ++k) {
      const RowMatrix pu = t.x_user * p.G[k].transpose();  // M x fl
      double ss = 0.0;
      for (std::int64_t i = 0; i < M; ++i)
        ss += stats.U2(i * ke + k) -
              2.0 * pu.row(i).dot(stats.U1.row(i * ke + k)) +
              pu.row(i).squaredNorm();
      ll -= 0.5 * (M * cfg.fl * std::log(p.var_u(k)) + ss / p.var_u(k));
      const RowMatrix pv = t.x_item * p.D[k].transpose();
      double ssv = 0.0;
      for (std::int64_t j = 0; j < N; ++j)
        ssv += stats.V2(j * ke + k) -
               2.0 * pv.row(j).dot(stats.V1.row(j * ke + k)) +
               pv.row(j).squaredNorm();
      ll -= 0.5 * (N * cfg.fl * std::log(p.var_v(k)) + ssv / p.var_v(k));
    }
  }
  if (cfg.fg > 0) {
    ll -= 0.5 * (M * cfg.fg * std::log(p.var_u0) + stats.su2 / p.var_u0);
    ll -= 0.5 * (N * cfg.fg * std::log(p.var_v0) + stats.sv2 / p.var_v0);
    ll -= 0.5 * stats.sw2;
  }
  return ll;
}

namespace detail {

// Ridge solve of (gram + lambda I) theta = rhs for each rhs column.
inline Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& gram,
                                   const Eigen::MatrixXd& rhs, double lambda) {
  Eigen::MatrixXd a = gram;
  a.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw TrainingError("ridge system is not positive definite");
  return llt.solve(rhs);
}

struct BiasFit {
  Eigen::VectorXd coef;  // feature weights
  double mix = 0.0;      // weight on the global bias
  double var = 0.0;      // residual variance
};

// Fits alpha_ik ~ g' x_i + q alpha_i (or beta's mirror) from moments.
// With no global bias the design is the features alone.
inline BiasFit fit_bias_regression(const Eigen::MatrixXd& xx,
                                   const RowMatrix& x,
                                   const Eigen::VectorXd& m1,  // E target
                                   const Eigen::VectorXd& m2,  // E target^2
                                   const Eigen::VectorXd& cross,  // E a*target
                                   const Eigen::VectorXd& a1,
                                   const Eigen::VectorXd& a2, bool with_mix,
                                   double lambda) {
  const Eigen::Index p = xx.rows();
  const auto rows = static_cast<double>(x.rows());
  BiasFit out;
  if (with_mix) {
    Eigen::MatrixXd gram(p + 1, p + 1);
    gram.topLeftCorner(p, p) = xx;
    gram.topRightCorner(p, 1) = x.transpose() * a1;
    gram.bottomLeftCorner(1, p) = gram.topRightCorner(p, 1).transpose();
    gram(p, p) = a2.sum();
    Eigen::VectorXd rhs(p + 1);
    rhs.head(p) = x.transpose() * m1;
    rhs(p) = cross.sum();
    const Eigen::VectorXd theta = ridge_solve(gram, rhs, lambda);
    out.coef = theta.head(p);
    out.mix = theta(p);
    const double rss =
        m2.sum() - 2.0 * theta.dot(rhs) + theta.dot(gram * theta);
    out.var = rss / rows;
  } else {
    const Eigen::VectorXd rhs = x.transpose() * m1;
    const Eigen::VectorXd theta = ridge_solve(xx, rhs, lambda);
    out.coef = theta;
    out.mix = 0.0;
    const double rss =
        m2.sum() - 2.0 * theta.dot(rhs) + theta.dot(xx * theta);
    out.var = rss / rows;
  }
  return out;
}

}  // namespace detail

// Closed-form M-step. Returns the new parameters; `floored` (if given)
// receives the number of variance estimates clipped at the floor.
inline PriorParams m_step(const SufficientStats& stats, const TrainTable& t,
                          const TrainOptions& opts, int* floored = nullptr) {
  const ModelConfig& cfg = stats.cfg;
  const auto ke = cfg.effective_facets();
  PriorParams p = PriorParams::initial(cfg);
  int clipped = 0;
  auto track = [&](double v) {
    if (v <= opts.variance_floor) ++clipped;
    return std::max(opts.variance_floor, v);
  };
  for (std::int32_t k = 0; k < ke; ++k) {
    const auto fa = detail::fit_bias_regression(
        t.xx_user, t.x_user, stats.A1.col(k), stats.A2.col(k),
        stats.Aa.col(k), stats.a1, stats.a2, cfg.global_biases(),
        opts.ridge_lambda);
    p.g.row(k) = fa.coef.transpose();
    p.q(k) = fa.mix;
    p.var_alpha(k) = track(fa.var);
    const auto fb = detail::fit_bias_regression(
        t.xx_item, t.x_item, stats.B1.col(k), stats.B2.col(k),
        stats.Bb.col(k), stats.b1, stats.b2, cfg.global_biases(),
        opts.ridge_lambda);
    p.d.row(k) = fb.coef.transpose();
    p.r(k) = fb.mix;
    p.var_beta(k) = track(fb.var);
  }
  if (cfg.fl > 0) {
    for (std::int32_t k = 0; k < ke; ++k) {
      RowMatrix eu(cfg.num_users, cfg.fl);  // E[u_ik] by user
      for (std::int64_t i = 0; i < cfg.num_users; ++i)
        eu.row(i) = stats.U1.row(i * ke + k);
      const Eigen::MatrixXd a = detail::ridge_solve(
          t.xx_user, t.x_user.transpose() * eu, opts.ridge_lambda);
      p.G[k] = a.transpose();
      const RowMatrix pred = t.x_user * a;  // M x fl
      double ss = 0.0;
      for (std::int64_t i = 0; i < cfg.num_users; ++i)
        ss += stats.U2(i * ke + k) - 2.0 * pred.row(i).dot(eu.row(i)) +
              pred.row(i).squaredNorm();
      p.var_u(k) = track(ss / (cfg.num_users * cfg.fl));

      RowMatrix ev(cfg.num_items, cfg.fl);
      for (std::int64_t j = 0; j < cfg.num_items; ++j)
        ev.row(j) = stats.V1.row(j * ke + k);
      const Eigen::MatrixXd b = detail::ridge_solve(
          t.xx_item, t.x_item.transpose() * ev, opts.ridge_lambda);
      p.D[k] = b.transpose();
      const RowMatrix predv = t.x_item * b;
      double ssv = 0.0;
      for (std::int64_t j = 0; j < cfg.num_items; ++j)
        ssv += stats.V2(j * ke + k) - 2.0 * predv.row(j).dot(ev.row(j)) +
               predv.row(j).squaredNorm();
      p.var_v(k) = track(ssv / (cfg.num_items * cfg.fl));
    }
  }
  if (cfg.fg > 0) {
    p.var_u0 = track(stats.su2 / (cfg.num_users * cfg.fg));
    p.var_v0 = track(stats.sv2 / (cfg.num_items * cfg.fg));
  }
  if (opts.learn_var_y && !t.obs.empty())
    p.var_y = track(stats.resid_sq / static_cast<double>(t.obs.size()));
  if (floored) *floored = clipped;
  return p;
}

struct EmIterationStats {
  int iter = 0;
  double mean_sample_loglik = 0.0;      // average of per-sample values
  double expected_loglik = 0.0;         // same objective from moments
  double loglik_se = 0.0;               // batch-means standard error
  double expected_loglik_after = 0.0;   // objective at the new parameters
  double var_y = 0.0;
  int floored_variances = 0;
};

// Batch-means standard error of the mean of a correlated series.
inline double batch_means_se(const std::vector<double>& xs,
                             int target_batches = 10) {
  const auto n = static_cast<int>(xs.size());
  if (n < 2) return 0.0;
  const int nb = std::min(target_batches, n);
  const int bs = n / nb;
  std::vector<double> means(static_cast<std::size_t>(nb), 0.0);
  for (int b = 0; b < nb; ++b) {
    double s = 0.0;
    for (int i = b * bs; i < (b + 1) * bs; ++i)
      s += xs[static_cast<std::size_t>(i)];
    means[static_cast<std::size_t>(b)] = s / bs;
  }
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= nb;
  double ss = 0.0;
  for (double m : means) ss += (m - mean) * (m - mean);
  if (nb < 2) return 0.0;
  return std::sqrt(ss / (nb - 1) / nb);
}

struct FitResult {
  TrainedModel model;
  std::vector<EmIterationStats> trace;
};

inline void write_trace_csv(std::ostream& out,
                            const std::vector<EmIterationStats>& trace) {
  out << "iter,mean_sample_loglik,expected_loglik,loglik_se,"
         "expected_loglik_after_mstep,var_y,floored_variances\n";
  out.precision(17);
  for (const auto& e : trace)
    out << e.iter << ',' << e.mean_sample_loglik << ',' << e.expected_loglik
        << ',' << e.loglik_se << ',' << e.expected_loglik_after << ','
        << e.var_y << ',' << e.floored_variances << '\n';
}

// Fits one model. `responses` optionally replaces the binary labels
// with real-valued targets of the same length as ds.events.
inline FitResult fit(const Dataset& ds, const ModelConfig& config,
                     const TrainOptions& opts,
                     const std::vector<double>* responses = nullptr) {
  opts.validate();
  const ModelConfig cfg = config.normalized();
  cfg.validate();
  const TrainTable table = TrainTable::build(ds, cfg, responses);
  PriorParams p = PriorParams::initial(cfg);
  FactorState s = init_factors(cfg, p, ds, opts.seed, opts.init_jitter);
  GibbsSampler sampler(table, opts.seed);
  const int total_sweeps = opts.burn_in + opts.gibbs_samples;

  std::vector<EmIterationStats> trace;
  trace.reserve(static_cast<std::size_t>(opts.em_iters));
  for (int iter = 0; iter < opts.em_iters; ++iter) {
    sampler.refresh_prior_means(p);
    SufficientStats stats(cfg);
    for (int sw = 0; sw < total_sweeps; ++sw) {
      sampler.sweep(s, p, stream_phase::kGibbs,
                    static_cast<std::uint64_t>(iter),
                    static_cast<std::uint64_t>(sw));
      if (sw >= opts.burn_in) stats.accumulate(s, table, p);
    }
    stats.finalize();
    EmIterationStats es;
    es.iter = iter;
    double mean_ll = 0.0;
    for (double v : stats.loglik_samples) mean_ll += v;
    es.mean_sample_loglik = mean_ll / stats.num_samples;
    es.expected_loglik = expected_loglik(stats, p, table);
    es.loglik_se = batch_means_se(stats.loglik_samples);
    PriorParams next = m_step(stats, table, opts, &es.floored_variances);
    es.expected_loglik_after = expected_loglik(stats, next, table);
    es.var_y = next.var_y;
    if (!std::isfinite(es.expected_loglik) ||
        !std::isfinite(es.expected_loglik_after))
      throw TrainingError("log likelihood diverged at iteration " +
                          std::to_string(iter));
    trace.push_back(es);
    p = next;
  }

  // Posterior mean pass under the final parameters.
  sampler.refresh_prior_means(p);
  FactorState mean = FactorState::zeros(cfg);
  for (int sw = 0; sw < total_sweeps; ++sw) {
    sampler.sweep(s, p, stream_phase::kFinalPass,
                  static_cast<std::uint64_t>(opts.em_iters),
                  static_cast<std::uint64_t>(sw));
    if (sw < opts.burn_in) continue;
    mean.alpha_ik += s.alpha_ik;
    mean.beta_jk += s.beta_jk;
    mean.alpha_i += s.alpha_i;
    mean.beta_j += s.beta_j;
    mean.u_i += s.u_i;
    mean.v_j += s.v_j;
    mean.w_k += s.w_k;
    mean.u_ik += s.u_ik;
    mean.v_jk += s.v_jk;
  }
  const double inv = 1.0 / opts.gibbs_samples;
  mean.alpha_ik *= inv;
  mean.beta_jk *= inv;
  mean.alpha_i *= inv;
  mean.beta_j *= inv;
  mean.u_i *= inv;
  mean.v_j *= inv;
  mean.w_k *= inv;
  mean.u_ik *= inv;
  mean.v_jk *= inv;

  FitResult out{TrainedModel{cfg, p, std::move(mean),
                             TrainingPresence::from_events(cfg, ds.events)},
                std::move(trace)};
  return out;
}

}  // namespace latrec
