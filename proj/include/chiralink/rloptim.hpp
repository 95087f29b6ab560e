// Model-free pulse calibration: a Gaussian-policy proximal-policy-
// optimization loop that tunes the 73-parameter PulseSet against
// shot-sampled rewards, the shot-sampled photon-transfer environment it
// trains on (optionally with control-line distortion), and a simple
// random-search baseline used for comparison in tests.
//
// Copyright (c) 2026 the chiralink authors
// SPDX-License-Identifier: MIT
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "chiralink/analysis.hpp"
#include "chiralink/network.hpp"
#include "chiralink/protocol.hpp"
#include "chiralink/pulses.hpp"
#include "chiralink/qops.hpp"
#include "chiralink/rng.hpp"

namespace chiralink {

// ---------------------------------------------------------------------------
// Hyper-parameters
// ---------------------------------------------------------------------------

// Full-scale defaults match the published calibration loop; desk_scale()
// shrinks the run to CI size without touching the learning dynamics.
struct PpoHyper {
  double learning_rate = 0.005;
  int policy_updates_per_epoch = 20;
  double importance_ratio_clip = 0.05;
  int batch_size = 150;
  long shots_per_trial = 1000;
  double value_loss_coefficient = 0.5;
  double gradient_clip = 1.0;  // global gradient norm bound
  double log_prob_clip = 0.0;  // clamp on per-trial log importance ratios; 0 disables
  int network_layers = 4;
  int nodes_per_layer = 10;
  int epochs = 1000;

  // Policy conditioning (configuration, not part of the core table): actions
  // live in normalized units, parameter = seed + action_span * scale * a.
  double action_span = 1.0;
  double initial_policy_std = 0.25;

  static PpoHyper table_s4() { return PpoHyper{}; }

  static PpoHyper desk_scale() {
    PpoHyper h;
    h.epochs = 200;
    h.batch_size = 30;
    h.shots_per_trial = 200;
    return h;
  }

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("PpoHyper: learning_rate must be > 0");
    if (policy_updates_per_epoch < 1)
      throw std::invalid_argument("PpoHyper: policy_updates_per_epoch must be >= 1");
    if (!(importance_ratio_clip > 0.0 && importance_ratio_clip <= 1.0))
      throw std::invalid_argument("PpoHyper: importance_ratio_clip must lie in (0, 1]");
    if (batch_size < 2) throw std::invalid_argument("PpoHyper: batch_size must be >= 2");
    if (shots_per_trial < 1) throw std::invalid_argument("PpoHyper: shots_per_trial must be >= 1");
    if (value_loss_coefficient < 0.0)
      throw std::invalid_argument("PpoHyper: value_loss_coefficient must be >= 0");
    if (!(gradient_clip > 0.0)) throw std::invalid_argument("PpoHyper: gradient_clip must be > 0");
    if (log_prob_clip < 0.0) throw std::invalid_argument("PpoHyper: log_prob_clip must be >= 0");
    if (network_layers < 1) throw std::invalid_argument("PpoHyper: network_layers must be >= 1");
    if (nodes_per_layer < 1) throw std::invalid_argument("PpoHyper: nodes_per_layer must be >= 1");
    if (epochs < 1) throw std::invalid_argument("PpoHyper: epochs must be >= 1");
    if (!(action_span > 0.0)) throw std::invalid_argument("PpoHyper: action_span must be > 0");
    if (!(initial_policy_std > 1e-6 && initial_policy_std < 1e2))
      throw std::invalid_argument("PpoHyper: initial_policy_std must lie in (1e-6, 1e2)");
  }
};

// ---------------------------------------------------------------------------
// Reward
// ---------------------------------------------------------------------------

// Fraction of shots with exactly one of the absorber data-qubit pair excited
// (outcome 01 or 10 on a 2-qubit record).
inline double reward(const ShotRecord& record) {
  if (record.shots < 1) throw std::invalid_argument("reward: record holds no shots");
  long hits = 0;
  long total = 0;
  for (const auto& [bits, count] : record.counts) {
    if (bits.size() != 2 || bits.find_first_not_of("01") != std::string::npos)
      throw std::invalid_argument("reward: counts must be over 2-qubit outcomes");
    if (count < 0) throw std::invalid_argument("reward: negative count");
    total += count;
    if (bits == "01" || bits == "10") hits += count;
  }
  if (total != record.shots)
    throw std::invalid_argument("reward: counts do not sum to the shot total");
  return static_cast<double>(hits) / static_cast<double>(record.shots);
}

// ---------------------------------------------------------------------------
// Action scaling
// ---------------------------------------------------------------------------

inline constexpr double kDetuningScale = 0.01;  // rad/ns per unit action
inline constexpr double kPhaseScale = 1.0;      // rad per unit action
inline constexpr double kDelayScale = 20.0;     // ns per unit action

// Natural scale of each flat PulseSet parameter, used to map normalized
// policy actions onto physical units. Segment amplitudes move on the seed's
// own peak coupling (floored at a tenth of the |g| bound for degenerate
// seeds) — the transfer is a matched-filter problem, so exploration noise
// must stay a fraction of the working amplitude, not of the rail.
// Detunings explore a small fraction of the photon bandwidth for the same
// reason; phases and the absorption delay move on their natural ranges.
inline std::array<double, PulseSet::kParamCount> param_scales(const PulseSet& seed) {
  std::array<double, PulseSet::kParamCount> s{};
  const std::array<double, PulseSet::kParamCount> flat = seed.to_flat();
  const int n_seg = PulseSet::kEnvelopes * PulseSet::kSegments * 2;
  double peak = 0.1 * seed.g_max;
  for (int i = 0; i < n_seg; ++i) peak = std::max(peak, std::abs(flat[i]));
  for (int i = 0; i < n_seg; ++i) s[i] = peak;
  for (int i = 0; i < PulseSet::kEnvelopes; ++i) {
    s[n_seg + i] = kDetuningScale;
    s[n_seg + PulseSet::kEnvelopes + i] = kPhaseScale;
  }
  s[PulseSet::kParamCount - 1] = kDelayScale;
  return s;
}

// ---------------------------------------------------------------------------
// Learning-curve records
// ---------------------------------------------------------------------------

// One sampled trial: the normalized parameter deltas drawn from the policy
// and the shot-estimated reward they earned.
struct Episode {
  std::array<double, PulseSet::kParamCount> params{};
  double reward = 0.0;
  int epoch = 0;
};

struct EpochStats {
  int epoch = 0;
  double mean_reward = 0.0;
  double best_reward = 0.0;
  double policy_std_norm = 0.0;
};

// One applied gradient step, logged for the clipping audit: the clamped
// importance ratios used by the surrogate never deviate from 1 by more than
// the configured clip.
struct UpdateRecord {
  int epoch = 0;
  int update = 0;
  double max_ratio_deviation = 0.0;  // max_j |clamp(r_j) - 1|
  double grad_norm = 0.0;            // global norm before clipping
  double value_loss = 0.0;
};

struct LearningCurve {
  std::vector<EpochStats> per_epoch;
  std::vector<UpdateRecord> updates;
};

struct OptimizeResult {
  PulseSet best_pulses;          // highest shot-reward trial seen (earliest on ties)
  double best_reward = -1.0;
  PulseSet policy_mean_pulses;   // deterministic pulses at the final policy mean
  LearningCurve curve;
};

// One learning-curve record per line, machine-readable.
inline std::string to_ndjson(const EpochStats& s) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "{\"epoch\":" << s.epoch << ",\"mean_reward\":" << s.mean_reward
      << ",\"best_reward\":" << s.best_reward << ",\"policy_std_norm\":" << s.policy_std_norm
      << "}";
  return out.str();
}

// A trial environment maps (candidate pulses, per-trial seed) to a projective
// shot record on the absorber data-qubit pair; it must be deterministic in
// that pair and safe to call concurrently.
using TrialEnv = std::function<ShotRecord(const PulseSet&, uint64_t)>;

// ---------------------------------------------------------------------------
// Shot-sampled transfer environment
// ---------------------------------------------------------------------------

// Full photon-transfer protocol on a fixed device, reduced to the closed
// one-excitation sector once at construction so each trial only swaps the
// four coupler envelopes and integrates a 9x9 master equation. Control-line
// distortion, when configured, acts on the absorption envelopes exactly as
// in the protocol runner.
class TransferEnv {
 public:
  explicit TransferEnv(const DeviceParams& device, const DistortionModel& distortion = {},
                       const TimeGrid& grid = TimeGrid{0.0, 250.0, 0.1, 50}, long shots = 200)
      : shots_(shots) {
    if (shots_ < 1) throw std::invalid_argument("TransferEnv: shots must be >= 1");
    template_.direction = Direction::kRight;
    template_.mode = ProtocolMode::kFullTransfer;
    template_.device = device;
    template_.envelopes = EnvelopeSource::kSegmented;
    template_.prep = PrepKind::kPsiPlus;
    template_.initial_pi_fraction = 1.0;
    template_.grid = grid;
    template_.distortion = distortion;

    NetworkSpec net = build_cascaded(device);
    const EnvelopeFn idle = [](double) { return Complex(0.0, 0.0); };
    const std::array<std::pair<int, int>, 4> pairs = {{{3, 1}, {4, 2}, {7, 5}, {8, 6}}};
    coupler_base_ = net.generator.h_time_dependent.size();
    for (const auto& [data, wg] : pairs)
      net.generator.h_time_dependent.push_back(parametric_coupling(data, wg, idle, net));

    basis_ = make_excitation_basis(8, 1);
    net = restrict_network(net, basis_);
    generator_ = net.generator;
    rho0_ = ket_to_density(restrict_ket(detail::initial_register_ket(template_), basis_));

    outcome_of_.resize(basis_.states.size());
    for (size_t i = 0; i < basis_.states.size(); ++i) {
      const unsigned mask = basis_.states[i];
      // Site 6 (Q7) occupies bit 1 and site 7 (Q8) bit 0 of the basis index.
      outcome_of_[i] = static_cast<int>(((mask >> 1) & 1u) * 2u + (mask & 1u));
    }
  }

  ShotRecord operator()(const PulseSet& pulses, uint64_t trial_seed) const {
    return sample_shots(absorber_pair_state(pulses), shots_, trial_seed);
  }

  // Noiseless probability that exactly one of the absorber pair is excited
  // at the end of the run (the infinite-shot limit of the reward).
  double transfer_probability(const PulseSet& pulses) const {
    const DensityMatrix rho = absorber_pair_state(pulses);
    return rho(1, 1).real() + rho(2, 2).real();
  }

  long shots() const { return shots_; }

 private:
  DensityMatrix absorber_pair_state(const PulseSet& pulses) const {
    ProtocolConfig cfg = template_;
    cfg.pulses = pulses;
    const detail::CouplerEnvelopes couplers = detail::realized_envelopes(cfg);
    GeneratorSpec gen = generator_;
    for (size_t k = 0; k < 4; ++k)
      gen.h_time_dependent[coupler_base_ + k].envelope = couplers.env[k];
    const Trajectory tr = evolve(rho0_, gen, cfg.grid, {});
    DensityMatrix rho4 = DensityMatrix::Zero(4, 4);
    for (Eigen::Index i = 0; i < tr.final_state.rows(); ++i)
      rho4(outcome_of_[static_cast<size_t>(i)], outcome_of_[static_cast<size_t>(i)]) +=
          std::max(0.0, tr.final_state(i, i).real());
    const double total = rho4.trace().real();
    if (total > 0.0) rho4 /= total;
    return rho4;
  }

  ProtocolConfig template_;
  GeneratorSpec generator_;
  ExcitationBasis basis_;
  DensityMatrix rho0_;
  size_t coupler_base_ = 0;
  long shots_ = 200;
  std::vector<int> outcome_of_;
};

// ---------------------------------------------------------------------------
// Policy network
// ---------------------------------------------------------------------------

namespace detail {

using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Small dense network mapping a constant observation to per-parameter
// Gaussian mean/log-std heads and a scalar value baseline. Parameters are
// held as a flat list of tensors so the optimizer can treat them uniformly.
struct PolicyNet {
  int layers = 0;
  int nodes = 0;
  int n_actions = PulseSet::kParamCount;

  std::vector<RealMatrix> trunk_w;
  std::vector<RealVector> trunk_b;
  RealMatrix head_mean_w, head_std_w, head_value_w;
  RealVector head_mean_b, head_std_b, head_value_b;

  // Forward cache and outputs.
  std::vector<RealVector> acts;
  RealVector mean, log_std;
  double value = 0.0;

  void init(int n_layers, int n_nodes, double init_log_std, uint64_t seed) {
    layers = n_layers;
    nodes = n_nodes;
    SplitMix64 rng(seed);
    trunk_w.clear();
    trunk_b.clear();
    for (int l = 0; l < layers; ++l) {
      const int fan_in = l == 0 ? 1 : nodes;
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + nodes));
      RealMatrix w(nodes, fan_in);
      for (int r = 0; r < nodes; ++r)
        for (int c = 0; c < fan_in; ++c) w(r, c) = (2.0 * rng.uniform() - 1.0) * bound;
      trunk_w.push_back(std::move(w));
      trunk_b.push_back(RealVector::Zero(nodes));
    }
    // Zero-initialized heads start the policy exactly at the seed pulses
    // with the configured exploration width.
    head_mean_w = RealMatrix::Zero(n_actions, nodes);
    head_std_w = RealMatrix::Zero(n_actions, nodes);
    head_value_w = RealMatrix::Zero(1, nodes);
    head_mean_b = RealVector::Zero(n_actions);
    head_std_b = RealVector::Constant(n_actions, init_log_std);
    head_value_b = RealVector::Zero(1);
  }

  void forward() {
    acts.assign(static_cast<size_t>(layers), RealVector());
    RealVector x = RealVector::Ones(1);
    for (int l = 0; l < layers; ++l) {
      x = ((trunk_w[static_cast<size_t>(l)] * x + trunk_b[static_cast<size_t>(l)]).array().tanh())
              .matrix();
      acts[static_cast<size_t>(l)] = x;
    }
    mean = head_mean_w * x + head_mean_b;
    log_std = head_std_w * x + head_std_b;
    value = (head_value_w * x + head_value_b)(0);
  }

  // All parameter tensors in a fixed order (vectors as single columns).
  std::vector<RealMatrix*> tensors() {
    std::vector<RealMatrix*> out;
    for (auto& w : trunk_w) out.push_back(&w);
    out.push_back(&head_mean_w);
    out.push_back(&head_std_w);
    out.push_back(&head_value_w);
    return out;
  }
  std::vector<RealVector*> vectors() {
    std::vector<RealVector*> out;
    for (auto& b : trunk_b) out.push_back(&b);
    out.push_back(&head_mean_b);
    out.push_back(&head_std_b);
    out.push_back(&head_value_b);
    return out;
  }

  // Backpropagate head gradients to all parameters (requires a prior
  // forward()). Gradient layout mirrors tensors()/vectors().
  void backward(const RealVector& g_mean, const RealVector& g_log_std, double g_value,
                std::vector<RealMatrix>& gw, std::vector<RealVector>& gb) const {
    const RealVector& top = acts.back();
    gw.assign(static_cast<size_t>(layers) + 3, RealMatrix());
    gb.assign(static_cast<size_t>(layers) + 3, RealVector());

    gw[static_cast<size_t>(layers)] = g_mean * top.transpose();
    gb[static_cast<size_t>(layers)] = g_mean;
    gw[static_cast<size_t>(layers) + 1] = g_log_std * top.transpose();
    gb[static_cast<size_t>(layers) + 1] = g_log_std;
    gw[static_cast<size_t>(layers) + 2] = g_value * top.transpose();
    gb[static_cast<size_t>(layers) + 2] = RealVector::Constant(1, g_value);

    RealVector dh = head_mean_w.transpose() * g_mean + head_std_w.transpose() * g_log_std +
                    head_value_w.transpose() * RealVector::Constant(1, g_value);
    for (int l = layers - 1; l >= 0; --l) {
      const RealVector& h = acts[static_cast<size_t>(l)];
      const RealVector dz = dh.cwiseProduct((1.0 - h.array().square()).matrix());
      const RealVector prev = l == 0 ? RealVector::Ones(1) : acts[static_cast<size_t>(l) - 1];
      gw[static_cast<size_t>(l)] = dz * prev.transpose();
      gb[static_cast<size_t>(l)] = dz;
      dh = trunk_w[static_cast<size_t>(l)].transpose() * dz;
    }
  }
};

// Adam with a global-norm gradient clip; returns the pre-clip norm.
struct Adam {
  std::vector<RealMatrix> mw, vw;
  std::vector<RealVector> mb, vb;
  long t = 0;

  explicit Adam(PolicyNet& net) {
    for (auto* w : net.tensors()) {
      mw.push_back(RealMatrix::Zero(w->rows(), w->cols()));
      vw.push_back(RealMatrix::Zero(w->rows(), w->cols()));
    }
    for (auto* b : net.vectors()) {
      mb.push_back(RealVector::Zero(b->size()));
      vb.push_back(RealVector::Zero(b->size()));
    }
  }

  double step(PolicyNet& net, std::vector<RealMatrix>& gw, std::vector<RealVector>& gb,
              double lr, double clip) {
    double sq = 0.0;
    for (const auto& g : gw) sq += g.squaredNorm();
    for (const auto& g : gb) sq += g.squaredNorm();
    const double norm = std::sqrt(sq);
    const double scale = norm > clip ? clip / norm : 1.0;
    ++t;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    auto tensors = net.tensors();
    for (size_t k = 0; k < tensors.size(); ++k) {
      const RealMatrix g = gw[k] * scale;
      mw[k] = b1 * mw[k] + (1.0 - b1) * g;
      vw[k] = b2 * vw[k] + (1.0 - b2) * g.cwiseProduct(g);
      tensors[k]->noalias() -=
          lr * (mw[k] / c1).cwiseQuotient(((vw[k] / c2).cwiseSqrt().array() + eps).matrix());
    }
    auto vecs = net.vectors();
    for (size_t k = 0; k < vecs.size(); ++k) {
      const RealVector g = gb[k] * scale;
      mb[k] = b1 * mb[k] + (1.0 - b1) * g;
      vb[k] = b2 * vb[k] + (1.0 - b2) * g.cwiseProduct(g);
      *vecs[k] -= lr * (mb[k] / c1).cwiseQuotient(((vb[k] / c2).cwiseSqrt().array() + eps).matrix());
    }
    return norm;
  }
};

inline void check_policy_std(const RealVector& log_std) {
  const double smin = std::exp(log_std.minCoeff());
  const double smax = std::exp(log_std.maxCoeff());
  if (smin < 1e-6 || smax > 1e2) {
    std::ostringstream msg;
    msg << "optimize: policy standard deviation diverged (min " << smin << ", max " << smax
        << ")";
    throw std::runtime_error(msg.str());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// PPO optimizer
// ---------------------------------------------------------------------------

// Proximal-policy-optimization loop over the flat PulseSet parameters.
// Per epoch: sample batch_size normalized parameter vectors from the current
// Gaussian policy, evaluate their shot rewards, then apply
// policy_updates_per_epoch clipped-surrogate gradient steps with a value
// baseline and per-batch advantage normalization. All randomness flows
// through split seeds keyed on (run seed, epoch, trial), so batch trials may
// be evaluated on any number of threads with bit-identical results.
inline OptimizeResult optimize(const TrialEnv& env, uint64_t seed, const PpoHyper& hyper,
                               const PulseSet& seed_pulses, int n_threads = 1) {
  hyper.validate();
  if (n_threads < 1) throw std::invalid_argument("optimize: n_threads must be >= 1");
  if (!env) throw std::invalid_argument("optimize: environment is empty");

  const int n = PulseSet::kParamCount;
  const int batch = hyper.batch_size;
  std::array<double, PulseSet::kParamCount> scales = param_scales(seed_pulses);
  for (double& s : scales) s *= hyper.action_span;
  const std::array<double, PulseSet::kParamCount> flat_seed = seed_pulses.to_flat();

  const auto realize = [&](const Episode& ep) {
    PulseSet p = seed_pulses;
    std::array<double, PulseSet::kParamCount> flat = flat_seed;
    for (int i = 0; i < n; ++i) flat[static_cast<size_t>(i)] += scales[static_cast<size_t>(i)] *
                                                                ep.params[static_cast<size_t>(i)];
    p.from_flat(flat);
    return p;
  };

  detail::PolicyNet net;
  net.init(hyper.network_layers, hyper.nodes_per_layer, std::log(hyper.initial_policy_std),
           mix_seed(seed, ~0ull, 1));
  detail::Adam adam(net);

  OptimizeResult out;
  out.best_pulses = seed_pulses;
  out.curve.per_epoch.reserve(static_cast<size_t>(hyper.epochs));
  out.curve.updates.reserve(static_cast<size_t>(hyper.epochs) *
                            static_cast<size_t>(hyper.policy_updates_per_epoch));

  std::vector<Episode> episodes(static_cast<size_t>(batch));
  std::vector<double> logp_old(static_cast<size_t>(batch));
  const double half_log_2pi = 0.5 * std::log(2.0 * 3.14159265358979323846);

  for (int e = 0; e < hyper.epochs; ++e) {
    net.forward();
    detail::check_policy_std(net.log_std);
    const detail::RealVector mu = net.mean;
    const detail::RealVector sigma = net.log_std.array().exp();
    const double value_baseline = net.value;
    const double log_std_sum = net.log_std.sum();

    // Sample the batch; each trial owns an independent, order-free stream.
    for (int j = 0; j < batch; ++j) {
      SplitMix64 g(mix_seed(seed, 2 * static_cast<uint64_t>(e), static_cast<uint64_t>(j)));
      Episode& ep = episodes[static_cast<size_t>(j)];
      ep.epoch = e;
      double lp = 0.0;
      for (int i = 0; i < n; ++i) {
        const double z = g.normal();
        ep.params[static_cast<size_t>(i)] = mu(i) + sigma(i) * z;
        lp += -0.5 * z * z;
      }
      logp_old[static_cast<size_t>(j)] = lp - log_std_sum - n * half_log_2pi;
    }

    // Evaluate rewards (optionally in parallel; slot-indexed writes keep the
    // result independent of scheduling).
    const auto eval_one = [&](int j) {
      const uint64_t trial_seed =
          mix_seed(seed, 2 * static_cast<uint64_t>(e) + 1, static_cast<uint64_t>(j));
      episodes[static_cast<size_t>(j)].reward =
          reward(env(realize(episodes[static_cast<size_t>(j)]), trial_seed));
    };
    if (n_threads == 1 || batch == 1) {
      for (int j = 0; j < batch; ++j) eval_one(j);
    } else {
      const int workers = std::min(n_threads, batch);
      std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
      std::vector<std::thread> pool;
      pool.reserve(static_cast<size_t>(workers));
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
          try {
            for (int j = w; j < batch; j += workers) eval_one(j);
          } catch (...) {
            errors[static_cast<size_t>(w)] = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
    }

    // Epoch statistics and the running best (earliest trial wins ties).
    double mean_r = 0.0;
    double best_r = -1.0;
    for (int j = 0; j < batch; ++j) {
      const double r = episodes[static_cast<size_t>(j)].reward;
      mean_r += r;
      best_r = std::max(best_r, r);
      if (r > out.best_reward) {
        out.best_reward = r;
        out.best_pulses = realize(episodes[static_cast<size_t>(j)]);
      }
    }
    mean_r /= static_cast<double>(batch);
    out.curve.per_epoch.push_back(EpochStats{e, mean_r, best_r, sigma.norm()});

    // Advantages against the value baseline, normalized across the batch.
    detail::RealVector adv(batch);
    for (int j = 0; j < batch; ++j) adv(j) = episodes[static_cast<size_t>(j)].reward -
                                             value_baseline;
    const double adv_mean = adv.mean();
    const double adv_std =
        std::sqrt((adv.array() - adv_mean).square().sum() / static_cast<double>(batch));
    adv = ((adv.array() - adv_mean) / (adv_std + 1e-8)).matrix();

    // Clipped-surrogate updates reusing the sampled batch.
    for (int u = 0; u < hyper.policy_updates_per_epoch; ++u) {
      net.forward();
      const detail::RealVector sig_now = net.log_std.array().exp();
      const double log_std_now = net.log_std.sum();

      detail::RealVector g_mean = detail::RealVector::Zero(n);
      detail::RealVector g_log_std = detail::RealVector::Zero(n);
      double max_dev = 0.0;
      double value_err = 0.0;
      detail::RealVector z(n);
      const double eps_clip = hyper.importance_ratio_clip;
      for (int j = 0; j < batch; ++j) {
        const Episode& ep = episodes[static_cast<size_t>(j)];
        double quad = 0.0;
        for (int i = 0; i < n; ++i) {
          z(i) = (ep.params[static_cast<size_t>(i)] - net.mean(i)) / sig_now(i);
          quad += z(i) * z(i);
        }
        const double lp = -0.5 * quad - log_std_now - n * half_log_2pi;
        double dlr = lp - logp_old[static_cast<size_t>(j)];
        bool saturated = false;
        if (hyper.log_prob_clip > 0.0) {
          const double c = hyper.log_prob_clip;
          if (dlr > c || dlr < -c) saturated = true;
          dlr = std::clamp(dlr, -c, c);
        }
        const double ratio = std::exp(dlr);
        const double clamped = std::clamp(ratio, 1.0 - eps_clip, 1.0 + eps_clip);
        max_dev = std::max(max_dev, std::abs(clamped - 1.0));
        const double s_plain = ratio * adv(j);
        const double s_clip = clamped * adv(j);
        // min() selects the unclipped branch when s_plain <= s_clip; the
        // clipped branch carries gradient only while the clamp is inactive,
        // which is already covered by that case.
        const bool flows = s_plain <= s_clip && !saturated;
        if (flows) {
          const double coeff = -adv(j) * ratio / static_cast<double>(batch);
          for (int i = 0; i < n; ++i) {
            g_mean(i) += coeff * z(i) / sig_now(i);
            g_log_std(i) += coeff * (z(i) * z(i) - 1.0);
          }
        }
        const double verr = net.value - ep.reward;
        value_err += verr;
      }
      const double value_loss = [&] {
        double acc = 0.0;
        for (int j = 0; j < batch; ++j) {
          const double d = net.value - episodes[static_cast<size_t>(j)].reward;
          acc += d * d;
        }
        return acc / static_cast<double>(batch);
      }();
      const double g_value =
          hyper.value_loss_coefficient * 2.0 * value_err / static_cast<double>(batch);

      std::vector<detail::RealMatrix> gw;
      std::vector<detail::RealVector> gb;
      net.backward(g_mean, g_log_std, g_value, gw, gb);
      const double grad_norm =
          adam.step(net, gw, gb, hyper.learning_rate, hyper.gradient_clip);
      out.curve.updates.push_back(UpdateRecord{e, u, max_dev, grad_norm, value_loss});

      net.forward();
      detail::check_policy_std(net.log_std);
    }
  }

  // Deterministic pulses at the converged policy mean.
  net.forward();
  Episode mean_ep;
  for (int i = 0; i < n; ++i) mean_ep.params[static_cast<size_t>(i)] = net.mean(i);
  out.policy_mean_pulses = realize(mean_ep);
  return out;
}

// ---------------------------------------------------------------------------
// Random-search baseline
// ---------------------------------------------------------------------------

struct RandomSearchResult {
  PulseSet best_pulses;
  double best_reward = -1.0;
  std::vector<double> rewards;
};

// Isotropic Gaussian search around the seed pulses in the same normalized
// units as the policy; the simple baseline the optimizer is compared against.
inline RandomSearchResult random_search(const TrialEnv& env, uint64_t seed, int n_trials,
                                        double search_std, const PulseSet& seed_pulses) {
  if (n_trials < 1) throw std::invalid_argument("random_search: n_trials must be >= 1");
  if (!(search_std > 0.0)) throw std::invalid_argument("random_search: search_std must be > 0");
  if (!env) throw std::invalid_argument("random_search: environment is empty");
  const std::array<double, PulseSet::kParamCount> scales = param_scales(seed_pulses);
  const std::array<double, PulseSet::kParamCount> flat_seed = seed_pulses.to_flat();

  RandomSearchResult out;
  out.best_pulses = seed_pulses;
  out.rewards.reserve(static_cast<size_t>(n_trials));
  for (int t = 0; t < n_trials; ++t) {
    SplitMix64 g(mix_seed(seed, static_cast<uint64_t>(t), 0x5EA8C4));
    PulseSet p = seed_pulses;
    std::array<double, PulseSet::kParamCount> flat = flat_seed;
    for (size_t i = 0; i < flat.size(); ++i) flat[i] += scales[i] * search_std * g.normal();
    p.from_flat(flat);
    const double r =
        reward(env(p, mix_seed(seed, static_cast<uint64_t>(t), 0x5EA8C5)));
    out.rewards.push_back(r);
    if (r > out.best_reward) {
      out.best_reward = r;
      out.best_pulses = p;
    }
  }
  return out;
}

}  // namespace chiralink
