// Apache License, Version 2.0, refer to LICENSE.txt.
//
// Bilinear baseline: per facet, an L2-regularized logistic regression
// on the outer product of user and item features, so the score is
// x_i' W_k x_j + intercept. The regularization weight is picked from a
// fixed grid by cross-validated log loss with seeded fold assignment;
// the intercept is never penalized.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "latrec/data.hpp"
#include "latrec/errors.hpp"
#include "latrec/model.hpp"
#include "latrec/model_io.hpp"
#include "latrec/rng.hpp"

namespace latrec {

struct BilinearOptions {
  int folds = 5;
  std::uint64_t seed = 1;
  std::vector<double> lambda_grid = {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  int max_newton_iters = 100;
  double grad_tol = 1e-9;

  void validate() const {
    if (folds < 2) throw ValidationError("cross-validation needs >= 2 folds");
    if (lambda_grid.empty()) throw ValidationError("lambda grid is empty");
    for (double l : lambda_grid)
      if (l <= 0.0) throw ValidationError("lambda values must be positive");
  }
};

struct BilinearModel {
  std::int64_t num_facets = 0;
  std::int64_t pu = 0;
  std::int64_t pv = 0;
  std::vector<Eigen::MatrixXd> W;  // pu x pv per facet
  Eigen::VectorXd intercept;
  Eigen::VectorXd chosen_lambda;
  std::vector<std::string> warnings;

  double score(const FeatureVector& x_user, const FeatureVector& x_item,
               std::int32_t k) const {
    if (k < 0 || k >= num_facets)
      throw DimensionError("facet index out of range");
    double s = intercept(k);
    const Eigen::MatrixXd& w = W[static_cast<std::size_t>(k)];
    for (const auto& [a, va] : x_user.entries) {
      if (a >= pu) throw DimensionError("user feature index out of range");
      for (const auto& [b, vb] : x_item.entries) {
        if (b >= pv) throw DimensionError("item feature index out of range");
        s += va * vb * w(a, b);
      }
    }
    return s;
  }
};

namespace detail {

inline double softplus(double s) {
  return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

// Negative log likelihood of the logistic model over the given rows,
// without the penalty.
inline double logistic_loss(const RowMatrix& z,
                            const std::vector<std::uint8_t>& y,
                            const std::vector<std::int64_t>& rows,
                            const Eigen::VectorXd& w) {
  double loss = 0.0;
  for (std::int64_t r : rows) {
    const double s = z.row(r).dot(w);
    loss += softplus(s) - (y[static_cast<std::size_t>(r)] ? s : 0.0);
  }
  return loss;
}

// Newton fit with backtracking. The last coefficient is the intercept
// and stays unpenalized. Single-class subsets get the closed-form
// add-one intercept.
inline Eigen::VectorXd newton_logistic(const RowMatrix& z,
                                       const std::vector<std::uint8_t>& y,
                                       const std::vector<std::int64_t>& rows,
                                       double lambda, int max_iters,
                                       double tol) {
  const Eigen::Index d = z.cols();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  std::int64_t pos = 0;
  for (std::int64_t r : rows) pos += y[static_cast<std::size_t>(r)] ? 1 : 0;
  if (pos == 0 || pos == static_cast<std::int64_t>(rows.size())) {
    const double p_hat = (static_cast<double>(pos) + 1.0) /
                         (static_cast<double>(rows.size()) + 2.0);
    w(d - 1) = std::log(p_hat / (1.0 - p_hat));
    return w;
  }
  auto penalized = [&](const Eigen::VectorXd& v) {
    return logistic_loss(z, y, rows, v) +
           0.5 * lambda * v.head(d - 1).squaredNorm();
  };
  double loss = penalized(w);
  for (int iter = 0; iter < max_iters; ++iter) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
    for (std::int64_t r : rows) {
      const double s = z.row(r).dot(w);
      const double p = 1.0 / (1.0 + std::exp(-s));
      const double resid = p - (y[static_cast<std::size_t>(r)] ? 1.0 : 0.0);
      g.noalias() += resid * z.row(r).transpose();
      h.noalias() += (p * (1.0 - p)) * z.row(r).transpose() * z.row(r);
    }
    g.head(d - 1) += lambda * w.head(d - 1);
    h.diagonal().head(d - 1).array() += lambda;
    if (g.lpNorm<Eigen::Infinity>() < tol) break;
    h.diagonal().array() += 1e-12;
    const Eigen::VectorXd step = -h.ldlt().solve(g);
    double t = 1.0;
    Eigen::VectorXd cand = w + step;
    double cand_loss = penalized(cand);
    int halvings = 0;
    while (cand_loss > loss && halvings < 40) {
      t *= 0.5;
      cand = w + t * step;
      cand_loss = penalized(cand);
      ++halvings;
    }
    if (cand_loss >= loss && halvings >= 40) break;
    w = cand;
    loss = cand_loss;
  }
  return w;
}

}  // namespace detail

inline BilinearModel fit_bilinear(const Dataset& ds,
                                  const BilinearOptions& opts = {}) {
  opts.validate();
  BilinearModel m;
  m.num_facets = ds.num_facets;
  m.pu = ds.user_feature_dim;
  m.pv = ds.item_feature_dim;
  if (m.pu < 1 || m.pv < 1)
    throw ValidationError("bilinear model requires user and item features");
  const Eigen::Index d = m.pu * m.pv + 1;
  m.W.assign(static_cast<std::size_t>(m.num_facets),
             Eigen::MatrixXd::Zero(m.pu, m.pv));
  m.intercept = Eigen::VectorXd::Zero(m.num_facets);
  m.chosen_lambda = Eigen::VectorXd::Zero(m.num_facets);

  for (std::int32_t k = 0; k < m.num_facets; ++k) {
    // Dense outer-product design for this facet's events.
    std::vector<std::size_t> ev;
    for (std::size_t e = 0; e < ds.events.size(); ++e)
      if (ds.events[e].facet == k) ev.push_back(e);
    const auto n = static_cast<std::int64_t>(ev.size());
    if (n == 0) {
      m.warnings.push_back("facet " + std::to_string(k) +
                           ": no events, leaving coefficients at zero");
      continue;
    }
    RowMatrix z = RowMatrix::Zero(n, d);
    std::vector<std::uint8_t> y(static_cast<std::size_t>(n), 0);
    std::int64_t pos = 0;
    for (std::int64_t r = 0; r < n; ++r) {
      const Event& e = ds.events[ev[static_cast<std::size_t>(r)]];
      const auto& xu = ds.user_features[static_cast<std::size_t>(e.user)];
      const auto& xi = ds.item_features[static_cast<std::size_t>(e.item)];
      for (const auto& [a, va] : xu.entries)
        for (const auto& [b, vb] : xi.entries) z(r, a * m.pv + b) = va * vb;
      z(r, d - 1) = 1.0;
      y[static_cast<std::size_t>(r)] = e.label;
      pos += e.label ? 1 : 0;
    }
    std::vector<std::int64_t> all(static_cast<std::size_t>(n));
    for (std::int64_t r = 0; r < n; ++r) all[static_cast<std::size_t>(r)] = r;

    if (pos == 0 || pos == n) {
      const double p_hat =
          (static_cast<double>(pos) + 1.0) / (static_cast<double>(n) + 2.0);
      m.intercept(k) = std::log(p_hat / (1.0 - p_hat));
      m.chosen_lambda(k) = opts.lambda_grid.front();
      m.warnings.push_back("facet " + std::to_string(k) +
                           ": single-class labels, intercept-only fit");
      continue;
    }

    // Deterministic fold assignment from the seed.
    StreamRng fold_rng(derive_stream(opts.seed, {stream_phase::kCvFolds,
                                                 static_cast<std::uint64_t>(k)}));
    std::vector<int> fold(static_cast<std::size_t>(n));
    for (std::int64_t r = 0; r < n; ++r)
      fold[static_cast<std::size_t>(r)] = static_cast<int>(
          fold_rng.uniform_index(static_cast<std::uint64_t>(opts.folds)));

    double best_loss = 0.0;
    double best_lambda = opts.lambda_grid.front();
    bool have_best = false;
    for (double lambda : opts.lambda_grid) {
      double cv_loss = 0.0;
      for (int f = 0; f < opts.folds; ++f) {
        std::vector<std::int64_t> train_rows, held_rows;
        for (std::int64_t r = 0; r < n; ++r)
          (fold[static_cast<std::size_t>(r)] == f ? held_rows : train_rows)
              .push_back(r);
        if (train_rows.empty() || held_rows.empty()) continue;
        const Eigen::VectorXd w =
            detail::newton_logistic(z, y, train_rows, lambda,
                                    opts.max_newton_iters, opts.grad_tol);
        cv_loss += detail::logistic_loss(z, y, held_rows, w);
      }
      // Ties go to the larger lambda (the grid is ascending).
      if (!have_best || cv_loss <= best_loss) {
        best_loss = cv_loss;
        best_lambda = lambda;
        have_best = true;
      }
    }
    const Eigen::VectorXd w = detail::newton_logistic(
        z, y, all, best_lambda, opts.max_newton_iters, opts.grad_tol);
    for (std::int64_t a = 0; a < m.pu; ++a)
      for (std::int64_t b = 0; b < m.pv; ++b)
        m.W[static_cast<std::size_t>(k)](a, b) = w(a * m.pv + b);
    m.intercept(k) = w(d - 1);
    m.chosen_lambda(k) = best_lambda;
  }
  return m;
}

// Bilinear models share the container format with the factor models
// but carry their own kind tag.
inline void serialize_bilinear(std::ostream& out, const BilinearModel& m) {
  detail::BinWriter w(out);
  w.bytes(detail::kModelMagic, 8);
  w.u32(detail::kModelVersion);
  w.u32(detail::kKindBilinear);
  w.i64(m.num_facets);
  w.i64(m.pu);
  w.i64(m.pv);
  for (const auto& wk : m.W)
    w.f64_array(wk.data(), static_cast<std::size_t>(wk.size()));
  w.f64_array(m.intercept.data(), static_cast<std::size_t>(m.intercept.size()));
  w.f64_array(m.chosen_lambda.data(),
              static_cast<std::size_t>(m.chosen_lambda.size()));
}

inline BilinearModel deserialize_bilinear(std::istream& in) {
  detail::BinReader r(in);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, detail::kModelMagic, 8) != 0)
    throw FormatError("not a model file (bad magic)");
  const auto version = r.u32();
  if (version != detail::kModelVersion)
    throw FormatError("unsupported model version " + std::to_string(version));
  const auto kind = r.u32();
  if (kind != detail::kKindBilinear)
    throw FormatError("model file holds a different model family");
  BilinearModel m;
  m.num_facets = r.i64();
  m.pu = r.i64();
  m.pv = r.i64();
  if (m.num_facets < 0 || m.pu < 1 || m.pv < 1)
    throw FormatError("bilinear model header is invalid");
  m.W.assign(static_cast<std::size_t>(m.num_facets),
             Eigen::MatrixXd::Zero(m.pu, m.pv));
  for (auto& wk : m.W)
    r.f64_array(wk.data(), static_cast<std::size_t>(wk.size()));
  m.intercept.resize(m.num_facets);
  r.f64_array(m.intercept.data(), static_cast<std::size_t>(m.intercept.size()));
  m.chosen_lambda.resize(m.num_facets);
  r.f64_array(m.chosen_lambda.data(),
              static_cast<std::size_t>(m.chosen_lambda.size()));
  return m;
}

inline void save_bilinear(const std::string& path, const BilinearModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  serialize_bilinear(out, m);
}

inline BilinearModel load_bilinear(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  return deserialize_bilinear(in);
}

}  // namespace latrec
