#include "hybrid_spkr/mlp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hybrid_spkr/error.hpp"
#include "hybrid_spkr/rng.hpp"
#include "hybrid_spkr/vq.hpp"

namespace hybrid_spkr {
namespace {

// sigmoid(35) is the largest value that stays below 1.0 in double precision.
constexpr double kLogitClamp = 35.0;
constexpr double kMuFloor = 1e-20;

struct LabelledSet {
  FeatureSet inputs;
  std::vector<double> targets;
};

LabelledSet make_set(const FeatureSet& excitatory, const FeatureSet& inhibitory) {
  LabelledSet set;
  set.inputs = excitatory;
  set.inputs.append(inhibitory);
  set.targets.assign(excitatory.size(), 1.0);
  set.targets.resize(excitatory.size() + inhibitory.size(), 0.0);
  return set;
}

double sse_of(const MlpModel& model, const LabelledSet& set) {
  double sse = 0.0;
  for (std::size_t i = 0; i < set.inputs.size(); ++i) {
    const double e = set.targets[i] - forward(model, set.inputs[i]);
    sse += e * e;
  }
  return sse;
}

MlpModel random_model(std::size_t n_inputs, const TrainConfig& cfg, Rng& rng) {
  MlpModel m = MlpModel::zeros(n_inputs, cfg.n_hidden);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  const double hidden_scale = 1.0 / std::sqrt(static_cast<double>(n_inputs));
  const double output_scale = 1.0 / std::sqrt(static_cast<double>(cfg.n_hidden));
  for (double& w : m.w1) w = unit(rng) * hidden_scale;
  for (double& b : m.b1) b = unit(rng) * hidden_scale;
  for (double& w : m.w2) w = unit(rng) * output_scale;
  m.b2 = unit(rng) * output_scale;
  return m;
}

// One batch Levenberg-Marquardt run. `mu` carries over between calls.
class LmRun {
 public:
  LmRun(MlpModel model, const LabelledSet& set, double mu, const TrainConfig& cfg)
      : model_(std::move(model)), set_(set), cfg_(cfg), mu_(mu) {
    trace_.sse.push_back(sse_of(model_, set_));
  }

  // Returns false when no step could be accepted before mu exceeded mu_max.
  bool epoch(std::size_t& rejected) {
    if (trace_.stalled) return false;
    const std::size_t n = set_.inputs.size();
    const std::size_t p = model_.parameter_count();
    Eigen::MatrixXd jac(n, p);
    Eigen::VectorXd err(n);
    std::vector<double> grad(p);
    for (std::size_t i = 0; i < n; ++i) {
      const double y = forward_with_gradient(model_, set_.inputs[i], grad);
      err(static_cast<Eigen::Index>(i)) = set_.targets[i] - y;
      for (std::size_t k = 0; k < p; ++k) jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = grad[k];
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jte = jac.transpose() * err;
    const auto theta = pack_parameters(model_);
    const double current = trace_.sse.back();

    while (mu_ <= cfg_.mu_max) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal().array() += mu_;
      Eigen::LLT<Eigen::MatrixXd> llt(damped);
      if (llt.info() == Eigen::Success) {
        const Eigen::VectorXd delta = llt.solve(jte);
        std::vector<double> trial(p);
        for (std::size_t k = 0; k < p; ++k) trial[k] = theta[k] + delta(static_cast<Eigen::Index>(k));
        MlpModel candidate = model_;
        unpack_parameters(trial, candidate);
        const double sse = sse_of(candidate, set_);
        if (std::isfinite(sse) && sse < current) {
          model_ = std::move(candidate);
          trace_.sse.push_back(sse);
          mu_ = std::max(mu_ / cfg_.mu_factor, kMuFloor);
          return true;
        }
      }
      ++rejected;
      mu_ *= cfg_.mu_factor;
    }
    trace_.stalled = true;
    return false;
  }

  const MlpModel& model() const { return model_; }
  MlpModel take_model() { return std::move(model_); }
  const StartTrace& trace() const { return trace_; }
  StartTrace take_trace() { return std::move(trace_); }
  double sse() const { return trace_.sse.back(); }
  double mu() const { return mu_; }

 private:
  MlpModel model_;
  const LabelledSet& set_;
  const TrainConfig& cfg_;
  double mu_;
  StartTrace trace_;
};

}  // namespace

MlpModel MlpModel::zeros(std::size_t n_inputs, std::size_t n_hidden) {
  MlpModel m;
  m.n_inputs = n_inputs;
  m.n_hidden = n_hidden;
  m.w1.assign(n_inputs * n_hidden, 0.0);
  m.b1.assign(n_hidden, 0.0);
  m.w2.assign(n_hidden, 0.0);
  m.b2 = 0.0;
  return m;
}

void MlpModel::validate() const {
  require(n_inputs >= 1 && n_hidden >= 1, ErrorCode::kDimensionMismatch, "network needs inputs and hidden units");
  require(w1.size() == n_inputs * n_hidden && b1.size() == n_hidden && w2.size() == n_hidden,
          ErrorCode::kDimensionMismatch, "weight arrays do not match the declared dimensions");
  require(input_mean.size() == input_scale.size() && (input_mean.empty() || input_mean.size() == n_inputs),
          ErrorCode::kDimensionMismatch, "input normalisation does not match n_inputs");
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  require(finite(w1) && finite(b1) && finite(w2) && std::isfinite(b2) && finite(input_mean) && finite(input_scale),
          ErrorCode::kInvalidArgument, "non-finite network parameter");
}

double sigmoid(double z) {
  z = std::clamp(z, -kLogitClamp, kLogitClamp);
  return 1.0 / (1.0 + std::exp(-z));
}

std::vector<double> pack_parameters(const MlpModel& model) {
  std::vector<double> p;
  p.reserve(model.parameter_count());
  p.insert(p.end(), model.w1.begin(), model.w1.end());
  p.insert(p.end(), model.b1.begin(), model.b1.end());
  p.insert(p.end(), model.w2.begin(), model.w2.end());
  p.push_back(model.b2);
  return p;
}

void unpack_parameters(std::span<const double> params, MlpModel& model) {
  require(params.size() == model.parameter_count(), ErrorCode::kDimensionMismatch, "parameter vector length");
  auto it = params.begin();
  const auto nw1 = static_cast<std::ptrdiff_t>(model.w1.size());
  const auto nh = static_cast<std::ptrdiff_t>(model.n_hidden);
  std::copy(it, it + nw1, model.w1.begin());
  it += nw1;
  std::copy(it, it + nh, model.b1.begin());
  it += nh;
  std::copy(it, it + nh, model.w2.begin());
  it += nh;
  model.b2 = *it;
}

double forward(const MlpModel& model, std::span<const double> x) {
  if (x.size() != model.n_inputs) {
    fail(ErrorCode::kDimensionMismatch,
         "input has " + std::to_string(x.size()) + " values, network expects " + std::to_string(model.n_inputs));
  }
  const bool norm = !model.input_mean.empty();
  double z = model.b2;
  for (std::size_t h = 0; h < model.n_hidden; ++h) {
    const double* w = model.w1.data() + h * model.n_inputs;
    double a = model.b1[h];
    for (std::size_t i = 0; i < model.n_inputs; ++i) {
      const double xi = norm ? (x[i] - model.input_mean[i]) * model.input_scale[i] : x[i];
      a += w[i] * xi;
    }
    z += model.w2[h] * sigmoid(a);
  }
  return sigmoid(z);
}

double forward_with_gradient(const MlpModel& model, std::span<const double> x, std::span<double> gradient) {
  require(x.size() == model.n_inputs, ErrorCode::kDimensionMismatch, "input length");
  require(gradient.size() == model.parameter_count(), ErrorCode::kDimensionMismatch, "gradient length");
  const std::size_t ni = model.n_inputs;
  const std::size_t nh = model.n_hidden;
  const bool norm = !model.input_mean.empty();

  std::vector<double> xin(ni);
  for (std::size_t i = 0; i < ni; ++i) xin[i] = norm ? (x[i] - model.input_mean[i]) * model.input_scale[i] : x[i];

  std::vector<double> hidden(nh);
  double z = model.b2;
  for (std::size_t h = 0; h < nh; ++h) {
    const double* w = model.w1.data() + h * ni;
    double a = model.b1[h];
    for (std::size_t i = 0; i < ni; ++i) a += w[i] * xin[i];
    hidden[h] = sigmoid(a);
    z += model.w2[h] * hidden[h];
  }
  const double y = sigmoid(z);
  const double dy = y * (1.0 - y);

  double* g_w1 = gradient.data();
  double* g_b1 = g_w1 + nh * ni;
  double* g_w2 = g_b1 + nh;
  double* g_b2 = g_w2 + nh;
  for (std::size_t h = 0; h < nh; ++h) {
    const double dh = dy * model.w2[h] * hidden[h] * (1.0 - hidden[h]);
    for (std::size_t i = 0; i < ni; ++i) g_w1[h * ni + i] = dh * xin[i];
    g_b1[h] = dh;
    g_w2[h] = dy * hidden[h];
  }
  *g_b2 = dy;
  return y;
}

void TrainConfig::validate() const {
  require(n_starts >= 1 && epochs_per_start >= 1 && n_hidden >= 1, ErrorCode::kInvalidArgument,
          "starts, warm-up epochs and hidden units must be positive");
  require(mu_init > 0.0 && mu_max > 0.0 && mu_factor > 1.0, ErrorCode::kInvalidArgument,
          "mu_init and mu_max must be positive and mu_factor > 1");
  require(early_stop_relative >= 0.0, ErrorCode::kInvalidArgument, "early-stop threshold must be non-negative");
}

double training_sse(const MlpModel& model, const FeatureSet& excitatory, const FeatureSet& inhibitory) {
  return sse_of(model, make_set(excitatory, inhibitory));
}

MlpModel lm_train(const FeatureSet& excitatory, const FeatureSet& inhibitory, const TrainConfig& config,
                  TrainReport* report) {
  config.validate();
  require(!excitatory.empty() && !inhibitory.empty(), ErrorCode::kEmptyInput,
          "both excitatory and inhibitory vectors are required");
  require(excitatory.dim() == inhibitory.dim(), ErrorCode::kDimensionMismatch, "class dimensions differ");

  const LabelledSet set = make_set(excitatory, inhibitory);
  const std::size_t ni = set.inputs.dim();

  std::vector<double> mean, scale;
  if (config.normalize_inputs) {
    mean.assign(ni, 0.0);
    scale.assign(ni, 0.0);
    const double n = static_cast<double>(set.inputs.size());
    for (std::size_t r = 0; r < set.inputs.size(); ++r) {
      for (std::size_t j = 0; j < ni; ++j) mean[j] += set.inputs[r][j];
    }
    for (double& m : mean) m /= n;
    for (std::size_t r = 0; r < set.inputs.size(); ++r) {
      for (std::size_t j = 0; j < ni; ++j) scale[j] += (set.inputs[r][j] - mean[j]) * (set.inputs[r][j] - mean[j]);
    }
    for (double& s : scale) {
      const double sd = std::sqrt(s / n);
      s = sd > 0.0 ? 1.0 / sd : 1.0;
    }
  }

  TrainReport local;
  TrainReport& rep = report ? *report : local;
  rep = {};

  std::vector<LmRun> runs;
  runs.reserve(config.n_starts);
  for (std::size_t s = 0; s < config.n_starts; ++s) {
    Rng rng(derive_seed(config.seed, "mlp-start", s));
    MlpModel init = random_model(ni, config, rng);
    init.input_mean = mean;
    init.input_scale = scale;
    runs.emplace_back(std::move(init), set, config.mu_init, config);
    for (std::size_t e = 0; e < config.epochs_per_start; ++e) {
      if (!runs.back().epoch(rep.rejected_steps)) break;
    }
    rep.warmup.push_back(runs.back().trace());
  }

  std::size_t best = 0;
  for (std::size_t s = 1; s < runs.size(); ++s) {
    if (runs[s].sse() < runs[best].sse()) best = s;
  }
  rep.selected_start = best;

  LmRun& chosen = runs[best];
  LmRun cont(chosen.take_model(), set, chosen.mu(), config);
  for (std::size_t e = 0; e < config.final_epochs; ++e) {
    const double before = cont.sse();
    if (!cont.epoch(rep.rejected_steps)) break;
    if (before - cont.sse() < config.early_stop_relative * before) break;
  }
  rep.final_sse = cont.sse();
  rep.continuation = cont.take_trace();
  return cont.take_model();
}

FeatureSet compress_impostors(const FeatureSet& impostors, std::size_t target_count, std::uint64_t seed) {
  require(target_count >= 1, ErrorCode::kInvalidArgument, "target count must be positive");
  require(impostors.size() >= target_count, ErrorCode::kInsufficientData,
          std::to_string(impostors.size()) + " impostor vectors for a target of " + std::to_string(target_count));
  std::size_t size = 1;
  while (size < target_count) size <<= 1;
  size = std::min(size, impostors.size());

  const FeatureSet centroids = lbg_centroids(impostors, size, seed);
  if (size == target_count) return centroids;

  std::vector<std::size_t> counts(size, 0);
  for (std::size_t i = 0; i < impostors.size(); ++i) ++counts[nearest_centroid(impostors[i], centroids)];
  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  order.resize(target_count);
  std::sort(order.begin(), order.end());

  FeatureSet out(centroids.dim());
  out.reserve(target_count);
  for (std::size_t c : order) out.push_back(centroids[c]);
  return out;
}

double accumulate_similarity(const MlpModel& model, const FeatureSet& frames) {
  require(!frames.empty(), ErrorCode::kEmptyInput, "no frames to score");
  double total = 0.0;
  for (std::size_t i = 0; i < frames.size(); ++i) total += forward(model, frames[i]);
  return total;
}

std::vector<RankedSpeaker> mlp_identify(const FeatureSet& frames, std::span<const MlpModel> models) {
  require(!models.empty(), ErrorCode::kEmptyInput, "no enrolled networks");
  std::vector<double> scores(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) scores[i] = accumulate_similarity(models[i], frames);
  return rank_scores(scores, RankOrder::kDescending);
}

}  // namespace hybrid_spkr
