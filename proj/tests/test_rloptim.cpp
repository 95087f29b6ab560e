// Tests for the PPO pulse optimizer, its shot reward, and the transfer
// environment. Oracles: hand-built shot records for the reward examples, a
// dense grid search over the two live parameters of a synthetic
// quadratic-reward environment (computed from the closed form, independent
// of the optimizer), and the binomial error of shot estimates.
//
// Copyright (c) 2026 the chiralink authors
// SPDX-License-Identifier: MIT
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "chiralink/protocol.hpp"
#include "chiralink/pulses.hpp"
#include "chiralink/rloptim.hpp"
#include "chiralink/rng.hpp"

using namespace chiralink;

namespace {

PulseSet standard_seed() {
  const DeviceParams dev = standard_device();
  return seed_pulse_set(detail::module_rate(dev, Module::kA), kStandardPhotonRate);
}

// Synthetic environment: expected reward is an inverted paraboloid in two
// chosen flat parameters (c57_seg3_i and c68_seg4_i), expressed in the same
// normalized action units the optimizer works in; every other parameter is
// inert. Shots are sampled from the exact probability.
struct QuadraticEnv {
  PulseSet seed = standard_seed();
  std::array<double, PulseSet::kParamCount> scales = param_scales(seed);
  std::array<double, PulseSet::kParamCount> flat0 = seed.to_flat();
  int index_a = 38;  // c57_seg3_i
  int index_b = 56;  // c68_seg4_i
  double opt_a = 0.30;   // optimum, normalized units
  double opt_b = -0.20;
  double width = 0.50;   // wide enough that the seed itself scores ~0.48
  long shots = 4000;

  double probability(const PulseSet& p) const {
    const auto flat = p.to_flat();
    const double a = (flat[index_a] - flat0[index_a]) / scales[index_a];
    const double b = (flat[index_b] - flat0[index_b]) / scales[index_b];
    const double q = 1.0 - std::pow((a - opt_a) / width, 2) - std::pow((b - opt_b) / width, 2);
    return std::clamp(q, 0.0, 1.0);
  }

  // Expected reward at a point of the 2-parameter restriction.
  double probability_at(double a, double b) const {
    PulseSet p = seed;
    auto flat = flat0;
    flat[index_a] += scales[index_a] * a;
    flat[index_b] += scales[index_b] * b;
    p.from_flat(flat);
    return probability(p);
  }

  ShotRecord operator()(const PulseSet& p, uint64_t trial_seed) const {
    const double q = probability(p);
    DensityMatrix rho = DensityMatrix::Zero(4, 4);
    rho(0, 0) = 1.0 - q;
    rho(1, 1) = q;
    return sample_shots(rho, shots, trial_seed);
  }
};

double median_mean_reward(const LearningCurve& curve, size_t lo, size_t hi) {
  std::vector<double> v;
  for (size_t e = lo; e < hi && e < curve.per_epoch.size(); ++e)
    v.push_back(curve.per_epoch[e].mean_reward);
  std::sort(v.begin(), v.end());
  return 0.5 * (v[(v.size() - 1) / 2] + v[v.size() / 2]);
}

}  // namespace

TEST_CASE("reward counts single-excitation outcomes", "[rloptim]") {
  ShotRecord rec;
  rec.shots = 5;
  rec.counts = {{"01", 5}};
  CHECK(reward(rec) == 1.0);

  rec.counts = {{"00", 5}};
  CHECK(reward(rec) == 0.0);

  rec.counts = {{"00", 1}, {"01", 2}, {"10", 1}, {"11", 1}};
  CHECK(reward(rec) == Catch::Approx(0.6).margin(1e-15));

  // Expectation of the indicator on diag(0.1, 0.3, 0.4, 0.2) is 0.7; a large
  // sample must sit within a few binomial sigma (~7e-4) of it.
  DensityMatrix rho = DensityMatrix::Zero(4, 4);
  rho(0, 0) = 0.1;
  rho(1, 1) = 0.3;
  rho(2, 2) = 0.4;
  rho(3, 3) = 0.2;
  const ShotRecord big = sample_shots(rho, 400000, 71);
  CHECK(reward(big) == Catch::Approx(0.7).margin(0.005));

  ShotRecord bad;
  bad.shots = 0;
  CHECK_THROWS_AS(reward(bad), std::invalid_argument);
  bad.shots = 3;
  bad.counts = {{"001", 3}};
  CHECK_THROWS_AS(reward(bad), std::invalid_argument);
  bad.counts = {{"0x", 3}};
  CHECK_THROWS_AS(reward(bad), std::invalid_argument);
  bad.counts = {{"01", 2}};  // does not sum to shots
  CHECK_THROWS_AS(reward(bad), std::invalid_argument);
  bad.counts = {{"01", 5}, {"10", -2}};
  CHECK_THROWS_AS(reward(bad), std::invalid_argument);
}

TEST_CASE("hyper-parameter tables and validation", "[rloptim]") {
  const PpoHyper full = PpoHyper::table_s4();
  CHECK(full.learning_rate == 0.005);
  CHECK(full.policy_updates_per_epoch == 20);
  CHECK(full.importance_ratio_clip == 0.05);
  CHECK(full.batch_size == 150);
  CHECK(full.shots_per_trial == 1000);
  CHECK(full.value_loss_coefficient == 0.5);
  CHECK(full.gradient_clip == 1.0);
  CHECK(full.log_prob_clip == 0.0);
  CHECK(full.network_layers == 4);
  CHECK(full.nodes_per_layer == 10);
  CHECK(full.epochs == 1000);
  CHECK_NOTHROW(full.validate());

  const PpoHyper desk = PpoHyper::desk_scale();
  CHECK(desk.epochs == 200);
  CHECK(desk.batch_size == 30);
  CHECK(desk.shots_per_trial == 200);
  // The desk-scale run only shrinks the budget, not the learning dynamics.
  CHECK(desk.learning_rate == full.learning_rate);
  CHECK(desk.importance_ratio_clip == full.importance_ratio_clip);
  CHECK(desk.policy_updates_per_epoch == full.policy_updates_per_epoch);
  CHECK(desk.network_layers == full.network_layers);
  CHECK(desk.nodes_per_layer == full.nodes_per_layer);

  auto broken = [] { return PpoHyper::desk_scale(); };
  PpoHyper h = broken();
  h.learning_rate = 0.0;
  CHECK_THROWS_AS(h.validate(), std::invalid_argument);
  h = broken();
  h.importance_ratio_clip = 0.0;
  CHECK_THROWS_AS(h.validate(), std::invalid_argument);
  h = broken();
  h.importance_ratio_clip = 1.5;
  CHECK_THROWS_AS(h.validate(), std::invalid_argument);
  h = broken();
  h.batch_size = 1;
  CHECK_THROWS_AS(h.validate(), std::invalid_argument);
  h = broken();
  h.shots_per_trial = 0;
  CHECK_THROWS_AS(h.validate(), std::invalid_argument);
  h = broken();
  h.gradient_clip = 0.0;
  CHECK_THROWS_AS(h.validate(), std::invalid_argument);
  h = broken();
  h.log_prob_clip = -1.0;
  CHECK_THROWS_AS(h.validate(), std::invalid_argument);
  h = broken();
  h.network_layers = 0;
  CHECK_THROWS_AS(h.validate(), std::invalid_argument);
  h = broken();
  h.nodes_per_layer = 0;
  CHECK_THROWS_AS(h.validate(), std::invalid_argument);
  h = broken();
  h.epochs = 0;
  CHECK_THROWS_AS(h.validate(), std::invalid_argument);
  h = broken();
  h.action_span = 0.0;
  CHECK_THROWS_AS(h.validate(), std::invalid_argument);
  h = broken();
  h.initial_policy_std = 1e-7;
  CHECK_THROWS_AS(h.validate(), std::invalid_argument);
  h = broken();
  h.initial_policy_std = 200.0;
  CHECK_THROWS_AS(h.validate(), std::invalid_argument);
}

TEST_CASE("parameter scales follow the seed amplitude", "[rloptim]") {
  const PulseSet seed = standard_seed();
  const auto s = param_scales(seed);
  double peak = 0.0;
  const auto flat = seed.to_flat();
  for (int i = 0; i < 64; ++i) peak = std::max(peak, std::abs(flat[i]));
  REQUIRE(peak > 0.1 * seed.g_max);  // the ideal seed is loud enough to set the scale
  for (int i = 0; i < 64; ++i) CHECK(s[i] == peak);
  for (int i = 64; i < 68; ++i) CHECK(s[i] == kDetuningScale);
  for (int i = 68; i < 72; ++i) CHECK(s[i] == kPhaseScale);
  CHECK(s[72] == kDelayScale);

  // A silent seed falls back to a tenth of the amplitude bound.
  PulseSet quiet;
  const auto sq = param_scales(quiet);
  CHECK(sq[0] == Catch::Approx(0.1 * quiet.g_max));

  // The two live indices of the synthetic environment are the parameters
  // they claim to be.
  CHECK(PulseSet::param_name(38) == "c57_seg3_i");
  CHECK(PulseSet::param_name(56) == "c68_seg4_i");
}

TEST_CASE("grid-search oracle pins the synthetic optimum", "[rloptim]") {
  const QuadraticEnv env;
  // Dense grid over the 2-parameter restriction in normalized units. The
  // optimum (0.30, -0.20) lies on grid nodes, so the argmax must hit it
  // exactly and attain the analytic maximum of 1.
  double best = -1.0;
  double arg_a = 0.0, arg_b = 0.0;
  for (int ia = -40; ia <= 40; ++ia) {
    for (int ib = -40; ib <= 40; ++ib) {
      const double a = 0.025 * ia;
      const double b = 0.025 * ib;
      const double q = env.probability_at(a, b);
      if (q > best) {
        best = q;
        arg_a = a;
        arg_b = b;
      }
    }
  }
  CHECK(best == Catch::Approx(1.0).margin(1e-12));
  CHECK(arg_a == Catch::Approx(env.opt_a).margin(1e-12));
  CHECK(arg_b == Catch::Approx(env.opt_b).margin(1e-12));

  // Shot sampling concentrates on the expected reward at a mid-bowl point.
  PulseSet probe = env.seed;
  auto flat = env.flat0;
  flat[env.index_a] += env.scales[env.index_a] * 0.2;
  flat[env.index_b] += env.scales[env.index_b] * -0.1;
  probe.from_flat(flat);
  const double q_probe = env.probability(probe);
  REQUIRE(q_probe > 0.5);
  const ShotRecord rec = env(probe, 99);
  const double sigma = std::sqrt(q_probe * (1.0 - q_probe) / static_cast<double>(env.shots));
  CHECK(std::abs(reward(rec) - q_probe) < 6.0 * sigma);
}

TEST_CASE("optimizer recovers the synthetic optimum", "[rloptim]") {
  const QuadraticEnv env;
  PpoHyper hyper = PpoHyper::desk_scale();
  hyper.epochs = 300;
  hyper.shots_per_trial = env.shots;

  const OptimizeResult res =
      optimize([&](const PulseSet& p, uint64_t s) { return env(p, s); }, 424242, hyper, env.seed);

  REQUIRE(res.curve.per_epoch.size() == 300);
  REQUIRE(res.curve.updates.size() == 300u * 20u);

  // Recovery within 5% of the parameter scale against the grid-search
  // optimum, judged at the converged policy mean.
  const auto flat_mean = res.policy_mean_pulses.to_flat();
  const auto flat0 = env.flat0;
  const double rec_a = (flat_mean[env.index_a] - flat0[env.index_a]) / env.scales[env.index_a];
  const double rec_b = (flat_mean[env.index_b] - flat0[env.index_b]) / env.scales[env.index_b];
  CHECK(std::abs(rec_a - env.opt_a) < 0.05);
  CHECK(std::abs(rec_b - env.opt_b) < 0.05);

  // The learning curve trends upward and ends near the analytic maximum.
  CHECK(median_mean_reward(res.curve, 200, 300) > median_mean_reward(res.curve, 0, 100));
  CHECK(env.probability(res.policy_mean_pulses) > 0.99);
  CHECK(res.best_reward <= 1.0);
  for (const auto& st : res.curve.per_epoch) {
    CHECK(st.mean_reward >= 0.0);
    CHECK(st.mean_reward <= 1.0);
    CHECK(st.best_reward >= st.mean_reward);
  }

  // Importance-ratio clipping audit: no applied update ever used a clamped
  // ratio deviating from 1 by more than the configured clip.
  for (const auto& up : res.curve.updates) {
    CHECK(up.max_ratio_deviation <= hyper.importance_ratio_clip + 1e-12);
    CHECK(std::isfinite(up.grad_norm));
    CHECK(up.value_loss >= 0.0);
  }

  // The baseline random search with the same trial budget does not beat the
  // converged policy mean.
  const RandomSearchResult rs = random_search(
      [&](const PulseSet& p, uint64_t s) { return env(p, s); }, 424242, 9000, 0.5, env.seed);
  REQUIRE(rs.rewards.size() == 9000);
  CHECK(env.probability(res.policy_mean_pulses) >= env.probability(rs.best_pulses) - 0.01);
}

TEST_CASE("same seed gives a bitwise-identical learning curve", "[rloptim]") {
  const QuadraticEnv env;
  PpoHyper hyper = PpoHyper::desk_scale();
  hyper.epochs = 6;
  hyper.batch_size = 8;
  hyper.shots_per_trial = 100;

  const TrialEnv trial = [&](const PulseSet& p, uint64_t s) { return env(p, s); };
  const OptimizeResult one = optimize(trial, 7, hyper, env.seed, 1);
  const OptimizeResult two = optimize(trial, 7, hyper, env.seed, 1);
  const OptimizeResult par = optimize(trial, 7, hyper, env.seed, 3);

  auto same_curve = [](const OptimizeResult& x, const OptimizeResult& y) {
    REQUIRE(x.curve.per_epoch.size() == y.curve.per_epoch.size());
    REQUIRE(x.curve.updates.size() == y.curve.updates.size());
    for (size_t e = 0; e < x.curve.per_epoch.size(); ++e) {
      CHECK(x.curve.per_epoch[e].epoch == y.curve.per_epoch[e].epoch);
      CHECK(x.curve.per_epoch[e].mean_reward == y.curve.per_epoch[e].mean_reward);
      CHECK(x.curve.per_epoch[e].best_reward == y.curve.per_epoch[e].best_reward);
      CHECK(x.curve.per_epoch[e].policy_std_norm == y.curve.per_epoch[e].policy_std_norm);
    }
    for (size_t u = 0; u < x.curve.updates.size(); ++u) {
      CHECK(x.curve.updates[u].max_ratio_deviation == y.curve.updates[u].max_ratio_deviation);
      CHECK(x.curve.updates[u].grad_norm == y.curve.updates[u].grad_norm);
      CHECK(x.curve.updates[u].value_loss == y.curve.updates[u].value_loss);
    }
    CHECK(x.best_reward == y.best_reward);
    const auto fx = x.best_pulses.to_flat();
    const auto fy = y.best_pulses.to_flat();
    for (size_t i = 0; i < fx.size(); ++i) CHECK(fx[i] == fy[i]);
    const auto mx = x.policy_mean_pulses.to_flat();
    const auto my = y.policy_mean_pulses.to_flat();
    for (size_t i = 0; i < mx.size(); ++i) CHECK(mx[i] == my[i]);
  };
  same_curve(one, two);
  // Parallel batch evaluation is bit-for-bit the serial result: per-trial
  // streams are split on (epoch, trial), so scheduling cannot matter.
  same_curve(one, par);

  // A different seed diverges immediately.
  const OptimizeResult other = optimize(trial, 8, hyper, env.seed, 1);
  CHECK(other.curve.per_epoch[0].mean_reward != one.curve.per_epoch[0].mean_reward);
}

TEST_CASE("divergence guard trips on collapsing policy width", "[rloptim]") {
  const QuadraticEnv env;
  PpoHyper hyper = PpoHyper::desk_scale();
  hyper.epochs = 40;
  hyper.batch_size = 6;
  hyper.shots_per_trial = 50;
  hyper.learning_rate = 2.0;        // Adam's first steps move ~lr per weight
  hyper.initial_policy_std = 1e-5;  // two large downward steps cross 1e-6
  const TrialEnv trial = [&](const PulseSet& p, uint64_t s) { return env(p, s); };
  CHECK_THROWS_AS(optimize(trial, 11, hyper, env.seed), std::runtime_error);
}

TEST_CASE("optimizer rejects bad arguments", "[rloptim]") {
  const QuadraticEnv env;
  const TrialEnv trial = [&](const PulseSet& p, uint64_t s) { return env(p, s); };
  PpoHyper hyper = PpoHyper::desk_scale();
  hyper.epochs = 1;
  CHECK_THROWS_AS(optimize(trial, 1, hyper, env.seed, 0), std::invalid_argument);
  CHECK_THROWS_AS(optimize(TrialEnv{}, 1, hyper, env.seed), std::invalid_argument);
  PpoHyper bad = hyper;
  bad.epochs = 0;
  CHECK_THROWS_AS(optimize(trial, 1, bad, env.seed), std::invalid_argument);
  CHECK_THROWS_AS(random_search(trial, 1, 0, 0.5, env.seed), std::invalid_argument);
  CHECK_THROWS_AS(random_search(trial, 1, 5, 0.0, env.seed), std::invalid_argument);
  CHECK_THROWS_AS(random_search(TrialEnv{}, 1, 5, 0.5, env.seed), std::invalid_argument);
}

TEST_CASE("random search is deterministic and tracks its best", "[rloptim]") {
  const QuadraticEnv env;
  const TrialEnv trial = [&](const PulseSet& p, uint64_t s) { return env(p, s); };
  const RandomSearchResult a = random_search(trial, 5, 40, 0.4, env.seed);
  const RandomSearchResult b = random_search(trial, 5, 40, 0.4, env.seed);
  REQUIRE(a.rewards.size() == 40);
  CHECK(a.best_reward == b.best_reward);
  CHECK(a.best_reward == *std::max_element(a.rewards.begin(), a.rewards.end()));
  const auto fa = a.best_pulses.to_flat();
  const auto fb = b.best_pulses.to_flat();
  for (size_t i = 0; i < fa.size(); ++i) CHECK(fa[i] == fb[i]);
}

TEST_CASE("learning-curve NDJSON records are stable", "[rloptim]") {
  EpochStats s;
  s.epoch = 3;
  s.mean_reward = 0.5;
  s.best_reward = 0.75;
  s.policy_std_norm = 2.0;
  CHECK(to_ndjson(s) ==
        "{\"epoch\":3,\"mean_reward\":0.5,\"best_reward\":0.75,\"policy_std_norm\":2}");
  // Full-precision round trip of an irrational value.
  s.mean_reward = 1.0 / 3.0;
  const std::string line = to_ndjson(s);
  const size_t pos = line.find("\"mean_reward\":");
  REQUIRE(pos != std::string::npos);
  const double parsed = std::strtod(line.c_str() + pos + 14, nullptr);
  CHECK(parsed == 1.0 / 3.0);
}

TEST_CASE("transfer environment is deterministic and matches the protocol", "[rloptim]") {
  const DeviceParams dev = standard_device();
  const PulseSet seed = standard_seed();
  const TransferEnv clean(dev);

  // Shot records are deterministic in (pulses, trial seed) and well-formed.
  const ShotRecord r1 = clean(seed, 123);
  const ShotRecord r2 = clean(seed, 123);
  REQUIRE(r1.shots == 200);
  CHECK(r1.counts == r2.counts);
  long total = 0;
  for (const auto& [bits, count] : r1.counts) {
    CHECK(bits.size() == 2);
    total += count;
  }
  CHECK(total == r1.shots);
  const ShotRecord r3 = clean(seed, 124);
  CHECK(r1.counts != r3.counts);

  // The noiseless transfer probability sits in the regression bracket and
  // the shot reward concentrates on it.
  const double p = clean.transfer_probability(seed);
  CHECK(p > 0.70);
  CHECK(p < 0.77);
  CHECK(std::abs(reward(r1) - p) < 0.13);

  // Against the full protocol runner on the same grid the final absorber
  // populations must agree to integrator precision.
  ProtocolConfig cfg;
  cfg.device = dev;
  cfg.pulses = seed;
  cfg.grid = TimeGrid{0.0, 250.0, 0.1, 50};
  const TrajectoryResult run_out = run(cfg);
  const double p_run = run_out.data_qubit_populations[2].back() +
                       run_out.data_qubit_populations[3].back();
  CHECK(std::abs(p - p_run) < 1e-9);

  // Distortion on the absorption line degrades the seed pulses well below
  // the clean transfer (this is the gap the optimizer is asked to close).
  const TransferEnv distorted(dev, training_distortion());
  const double p_dist = distorted.transfer_probability(seed);
  CHECK(p_dist / p > 0.55);
  CHECK(p_dist / p < 0.80);

  CHECK_THROWS_AS(TransferEnv(dev, DistortionModel{}, TimeGrid{0.0, 250.0, 0.1, 50}, 0),
                  std::invalid_argument);
}
