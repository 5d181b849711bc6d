// Apache License, Version 2.0, refer to LICENSE.txt.
//
// Synthetic data from the generative model, with the ground truth
// returned alongside. Regimes shape the truth so the qualitative model
// ordering can be exercised:
//   correlated-facets:  large tensor weights, negligible local factors
//   independent-facets: negligible tensor, strong local factors
//   collapsed:          no facet dependence at all (one shared signal)
//   mixed:              strong tensor and strong local factors, with
//                       facet-specific biases
// Responses are Gaussian (score plus noise); binary labels threshold
// the responses at a global quantile so ranking metrics have relevant
// items at a configurable rate.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "latrec/data.hpp"
#include "latrec/errors.hpp"
#include "latrec/model.hpp"
#include "latrec/model_io.hpp"
#include "latrec/rng.hpp"

namespace latrec {

enum class Regime { CorrelatedFacets, IndependentFacets, Collapsed, Mixed };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::CorrelatedFacets: return "correlated-facets";
    case Regime::IndependentFacets: return "independent-facets";
    case Regime::Collapsed: return "collapsed";
    case Regime::Mixed: return "mixed";
  }
  return "?";
}

inline Regime regime_from_string(const std::string& s) {
  if (s == "correlated-facets") return Regime::CorrelatedFacets;
  if (s == "independent-facets") return Regime::IndependentFacets;
  if (s == "collapsed") return Regime::Collapsed;
  if (s == "mixed") return Regime::Mixed;
  throw ValidationError("unknown regime '" + s + "'");
}

struct GenSpec {
  std::int64_t num_users = 200;
  std::int64_t num_items = 200;
  std::int32_t num_facets = 3;
  std::int32_t fg = 2;
  std::int32_t fl = 1;
  std::int32_t user_feature_dim = 4;
  std::int32_t item_feature_dim = 4;
  double density = 0.05;        // probability a (user,item,facet) is observed
  double positive_rate = 0.10;  // share of events labeled positive
  std::uint64_t seed = 1;
  Regime regime = Regime::Mixed;
  double w_scale = 2.0;      // tensor strength
  double local_scale = 1.0;  // local factor strength
  double var_y = 0.25;       // response noise
  // Explicit truth parameters override the regime preset.
  std::optional<PriorParams> priors;

  void validate() const {
    if (num_users < 1 || num_items < 1 || num_facets < 1)
      throw ValidationError("generator needs users, items and facets");
    if (fg < 0 || fl < 0) throw ValidationError("factor ranks are >= 0");
    if (user_feature_dim < 1 || item_feature_dim < 1)
      throw ValidationError("feature dimensions must be >= 1");
    if (!(density > 0.0) || density > 1.0)
      throw ValidationError("density must lie in (0, 1]");
    if (!(positive_rate > 0.0) || positive_rate >= 1.0)
      throw ValidationError("positive_rate must lie in (0, 1)");
    if (var_y < 0.0) throw ValidationError("var_y must be nonnegative");
    if (w_scale < 0.0 || local_scale < 0.0)
      throw ValidationError("scales must be nonnegative");
  }

  ModelConfig config() const {
    ModelConfig c;
    c.kind = ModelKind::Lat;
    c.num_users = num_users;
    c.num_items = num_items;
    c.num_facets = num_facets;
    c.fg = fg;
    c.fl = fl;
    c.user_feature_dim = user_feature_dim;
    c.item_feature_dim = item_feature_dim;
    return c;
  }
};

struct SyntheticData {
  Dataset dataset;                // binary labels
  std::vector<double> responses;  // Gaussian response per event
  TrainedModel truth;             // generating factors and parameters
  double label_threshold = 0.0;
};

namespace detail {

// Sub-stream tags under the synthetic phase.
enum SynthStream : std::uint64_t {
  kSynFeatUser = 1,
  kSynFeatItem = 2,
  kSynAlphaI = 3,
  kSynBetaJ = 4,
  kSynAlphaIk = 5,
  kSynBetaJk = 6,
  kSynUi = 7,
  kSynVj = 8,
  kSynWk = 9,
  kSynUik = 10,
  kSynVjk = 11,
  kSynObs = 12,
  kSynNoise = 13,
};

inline StreamRng synth_rng(std::uint64_t seed, std::uint64_t sub) {
  return StreamRng(derive_stream(seed, {stream_phase::kSynth, sub}));
}

// Regime presets for the truth parameters. Coefficient matrices are
// sampled here so the feature channel carries real signal.
inline PriorParams preset_priors(const GenSpec& spec, const ModelConfig& cfg) {
  PriorParams p = PriorParams::initial(cfg);
  StreamRng rng(derive_stream(spec.seed, {stream_phase::kSynth, 0}));
  const auto ke = cfg.effective_facets();
  const bool collapsed = spec.regime == Regime::Collapsed;

  auto fill = [&](auto& mat, double scale) {
    for (Eigen::Index r = 0; r < mat.rows(); ++r)
      for (Eigen::Index c = 0; c < mat.cols(); ++c)
        mat(r, c) = scale * rng.normal();
  };
  fill(p.g, 0.5);
  fill(p.d, 0.5);
  if (collapsed)
    for (std::int32_t k = 1; k < ke; ++k) {
      p.g.row(k) = p.g.row(0);
      p.d.row(k) = p.d.row(0);
    }
  if (cfg.global_biases()) {
    p.q.setConstant(0.5);
    p.r.setConstant(0.5);
  }
  p.var_alpha.setConstant(0.04);
  p.var_beta.setConstant(0.04);

  double g_scale = 0.0, local_var = 1e-4;
  switch (spec.regime) {
    case Regime::CorrelatedFacets:
      g_scale = 0.0;
      local_var = 1e-4;
      break;
    case Regime::IndependentFacets:
    case Regime::Collapsed:
    case Regime::Mixed:
      g_scale = spec.local_scale;
      local_var = 0.04;
      break;
  }
  for (std::int32_t k = 0; k < ke; ++k) {
    fill(p.G[k], g_scale / std::sqrt(static_cast<double>(cfg.user_feature_dim)));
    fill(p.D[k], g_scale / std::sqrt(static_cast<double>(cfg.item_feature_dim)));
  }
  if (collapsed)
    for (std::int32_t k = 1; k < ke; ++k) {
      p.G[k] = p.G[0];
      p.D[k] = p.D[0];
    }
  if (cfg.fl > 0) {
    p.var_u.setConstant(local_var);
    p.var_v.setConstant(local_var);
  }
  if (cfg.fg > 0) {
    const bool tensor_on = spec.regime != Regime::IndependentFacets;
    p.var_u0 = tensor_on ? 1.0 : 0.01;
    p.var_v0 = tensor_on ? 1.0 : 0.01;
  }
  p.var_y = spec.var_y;
  return p;
}

}  // namespace detail

inline SyntheticData generate(const GenSpec& spec) {
  spec.validate();
  const ModelConfig cfg = spec.config();
  cfg.validate();
  const auto ke = cfg.effective_facets();
  const PriorParams p =
      spec.priors ? *spec.priors : detail::preset_priors(spec, cfg);

  SyntheticData out;
  Dataset& ds = out.dataset;
  ds.num_users = cfg.num_users;
  ds.num_items = cfg.num_items;
  ds.num_facets = cfg.num_facets;
  ds.user_feature_dim = cfg.user_feature_dim;
  ds.item_feature_dim = cfg.item_feature_dim;

  // Standard normal features, stored sparse but fully populated.
  {
    StreamRng rng = detail::synth_rng(spec.seed, detail::kSynFeatUser);
    ds.user_features.resize(static_cast<std::size_t>(cfg.num_users));
    for (auto& fv : ds.user_features) {
      fv.entries.clear();
      for (std::int32_t c = 0; c < cfg.user_feature_dim; ++c)
        fv.entries.emplace_back(c, rng.normal());
    }
  }
  {
    StreamRng rng = detail::synth_rng(spec.seed, detail::kSynFeatItem);
    ds.item_features.resize(static_cast<std::size_t>(cfg.num_items));
    for (auto& fv : ds.item_features) {
      fv.entries.clear();
      for (std::int32_t c = 0; c < cfg.item_feature_dim; ++c)
        fv.entries.emplace_back(c, rng.normal());
    }
  }
  RowMatrix xu = RowMatrix::Zero(cfg.num_users, cfg.user_feature_dim);
  for (std::int64_t i = 0; i < cfg.num_users; ++i)
    for (const auto& [c, v] : ds.user_features[static_cast<std::size_t>(i)].entries)
      xu(i, c) = v;
  RowMatrix xi = RowMatrix::Zero(cfg.num_items, cfg.item_feature_dim);
  for (std::int64_t j = 0; j < cfg.num_items; ++j)
    for (const auto& [c, v] : ds.item_features[static_cast<std::size_t>(j)].entries)
      xi(j, c) = v;

  // Factors from the priors. The collapsed regime replicates one
  // facet's draw so the truth carries no facet dependence.
  FactorState s = FactorState::zeros(cfg);
  const bool collapsed = spec.regime == Regime::Collapsed;
  if (cfg.global_biases()) {
    StreamRng ra = detail::synth_rng(spec.seed, detail::kSynAlphaI);
    for (std::int64_t i = 0; i < cfg.num_users; ++i) s.alpha_i(i) = ra.normal();
    StreamRng rb = detail::synth_rng(spec.seed, detail::kSynBetaJ);
    for (std::int64_t j = 0; j < cfg.num_items; ++j) s.beta_j(j) = rb.normal();
  }
  {
    StreamRng rng = detail::synth_rng(spec.seed, detail::kSynAlphaIk);
    for (std::int64_t i = 0; i < cfg.num_users; ++i)
      for (std::int32_t k = 0; k < ke; ++k) {
        if (collapsed && k > 0) {
          s.alpha_ik(i, k) = s.alpha_ik(i, 0);
          continue;
        }
        double mean = p.g.row(k).dot(xu.row(i));
        if (cfg.global_biases()) mean += p.q(k) * s.alpha_i(i);
        s.alpha_ik(i, k) = mean + std::sqrt(p.var_alpha(k)) * rng.normal();
      }
  }
  {
    StreamRng rng = detail::synth_rng(spec.seed, detail::kSynBetaJk);
    for (std::int64_t j = 0; j < cfg.num_items; ++j)
      for (std::int32_t k = 0; k < ke; ++k) {
        if (collapsed && k > 0) {
          s.beta_jk(j, k) = s.beta_jk(j, 0);
          continue;
        }
        double mean = p.d.row(k).dot(xi.row(j));
        if (cfg.global_biases()) mean += p.r(k) * s.beta_j(j);
        s.beta_jk(j, k) = mean + std::sqrt(p.var_beta(k)) * rng.normal();
      }
  }
  if (cfg.fg > 0) {
    StreamRng ru = detail::synth_rng(spec.seed, detail::kSynUi);
    for (std::int64_t i = 0; i < cfg.num_users; ++i)
      for (std::int32_t f = 0; f < cfg.fg; ++f)
        s.u_i(i, f) = std::sqrt(p.var_u0) * ru.normal();
    StreamRng rv = detail::synth_rng(spec.seed, detail::kSynVj);
    for (std::int64_t j = 0; j < cfg.num_items; ++j)
      for (std::int32_t f = 0; f < cfg.fg; ++f)
        s.v_j(j, f) = std::sqrt(p.var_v0) * rv.normal();
    // Tensor weights are regime-shaped rather than prior draws.
    StreamRng rw = detail::synth_rng(spec.seed, detail::kSynWk);
    const double unit = 1.0 / std::sqrt(static_cast<double>(cfg.fg));
    switch (spec.regime) {
      case Regime::CorrelatedFacets: {
        Eigen::VectorXd base(cfg.fg);
        for (std::int32_t f = 0; f < cfg.fg; ++f) base(f) = unit;
        for (std::int32_t k = 0; k < ke; ++k)
          for (std::int32_t f = 0; f < cfg.fg; ++f)
            s.w_k(k, f) = spec.w_scale * (base(f) + 0.2 * unit * rw.normal());
        break;
      }
      case Regime::IndependentFacets:
        for (std::int32_t k = 0; k < ke; ++k)
          for (std::int32_t f = 0; f < cfg.fg; ++f)
            s.w_k(k, f) = 0.05 * unit * rw.normal();
        break;
      case Regime::Collapsed:
        for (std::int32_t f = 0; f < cfg.fg; ++f)
          s.w_k(0, f) = spec.w_scale * unit * rw.normal();
        for (std::int32_t k = 1; k < ke; ++k) s.w_k.row(k) = s.w_k.row(0);
        break;
      case Regime::Mixed:
        for (std::int32_t k = 0; k < ke; ++k)
          for (std::int32_t f = 0; f < cfg.fg; ++f)
            s.w_k(k, f) = spec.w_scale * unit * rw.normal();
        break;
    }
  }
  if (cfg.fl > 0) {
    StreamRng ru = detail::synth_rng(spec.seed, detail::kSynUik);
    for (std::int64_t i = 0; i < cfg.num_users; ++i)
      for (std::int32_t k = 0; k < ke; ++k) {
        if (collapsed && k > 0) {
          s.u_ik.row(i * ke + k) = s.u_ik.row(i * ke);
          continue;
        }
        const Eigen::VectorXd mean = p.G[k] * xu.row(i).transpose();
        for (std::int32_t f = 0; f < cfg.fl; ++f)
          s.u_ik(i * ke + k, f) =
              mean(f) + std::sqrt(p.var_u(k)) * ru.normal();
      }
    StreamRng rv = detail::synth_rng(spec.seed, detail::kSynVjk);
    for (std::int64_t j = 0; j < cfg.num_items; ++j)
      for (std::int32_t k = 0; k < ke; ++k) {
        if (collapsed && k > 0) {
          s.v_jk.row(j * ke + k) = s.v_jk.row(j * ke);
          continue;
        }
        const Eigen::VectorXd mean = p.D[k] * xi.row(j).transpose();
        for (std::int32_t f = 0; f < cfg.fl; ++f)
          s.v_jk(j * ke + k, f) =
              mean(f) + std::sqrt(p.var_v(k)) * rv.normal();
      }
  }

  // Observed triples and responses.
  {
    StreamRng robs = detail::synth_rng(spec.seed, detail::kSynObs);
    StreamRng rnoise = detail::synth_rng(spec.seed, detail::kSynNoise);
    const double noise_sd = std::sqrt(spec.var_y);
    for (std::int64_t i = 0; i < cfg.num_users; ++i)
      for (std::int64_t j = 0; j < cfg.num_items; ++j)
        for (std::int32_t k = 0; k < cfg.num_facets; ++k) {
          if (robs.uniform() >= spec.density) continue;
          const double y = score(cfg, s, i, j, k) + noise_sd * rnoise.normal();
          ds.events.push_back(Event{i, j, k, 0});
          out.responses.push_back(y);
        }
  }
  if (out.responses.empty())
    throw ValidationError("density produced no observations");

  // Binary labels: responses above the global (1 - rate) quantile.
  {
    std::vector<double> sorted = out.responses;
    std::sort(sorted.begin(), sorted.end());
    auto idx = static_cast<std::size_t>(
        (1.0 - spec.positive_rate) * static_cast<double>(sorted.size()));
    if (idx >= sorted.size()) idx = sorted.size() - 1;
    out.label_threshold = sorted[idx];
    for (std::size_t e = 0; e < ds.events.size(); ++e)
      ds.events[e].label = out.responses[e] > out.label_threshold ? 1 : 0;
  }

  out.truth = TrainedModel{cfg, p, std::move(s),
                           TrainingPresence::from_events(cfg, ds.events)};
  return out;
}

}  // namespace latrec
