// Run-configuration parsing and serialization for the batch runner, plus the
// small output-formatting helpers shared by every artifact the tools write:
// RFC-4180 CSV quoting, NDJSON records, and the header line carrying the
// artifact version and the configuration content hash.
//
// The config format is human-readable dotted key-value text. Units are
// explicit in key names (gamma_mhz, t1_us, dt_ns) and converted exactly once
// here: frequencies to rad/ns, times to ns. Unknown or duplicate keys are
// rejected so silent typos cannot change physics.
//
// Copyright (c) 2026 the chiralink authors
// SPDX-License-Identifier: MIT
#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chiralink/network.hpp"
#include "chiralink/protocol.hpp"
#include "chiralink/pulses.hpp"

namespace chiralink {

inline constexpr const char* kArtifactVersion = "0.1.0";

// Frequencies are accepted in MHz/GHz at the boundary and held in rad/ns
// internally; times in us/ns are held in ns.
inline constexpr double kMhzToRadPerNs = 2.0 * 3.14159265358979323846 * 1e-3;
inline constexpr double kGhzToRadPerNs = 2.0 * 3.14159265358979323846;
inline constexpr double kUsToNs = 1e3;

enum class Command { kSimulate, kScatter, kBudget, kOptimize, kDelay };

// One parsed run request: which job to run, the device and pulse blocks, the
// integration grid, protocol options, and the job-specific extras.
struct RunConfig {
  Command command = Command::kSimulate;
  uint64_t seed = 0;
  std::string output_dir = ".";

  DeviceParams device = standard_device();
  EnvelopeSource source = EnvelopeSource::kSegmented;
  double gamma_ph = kStandardPhotonRate;  // rad/ns, used by ideal envelopes
  PulseSet pulses;
  TimeGrid grid{0.0, 400.0, 0.05, 4};

  Direction direction = Direction::kRight;
  ProtocolMode mode = ProtocolMode::kFullTransfer;
  PrepKind prep = PrepKind::kPsiPlus;
  double pi_fraction = 1.0;
  DistortionModel distortion{};

  // Detuning sweep for the scatter job (rad/ns bounds, inclusive).
  bool has_sweep = false;
  double sweep_lo = 0.0;
  double sweep_hi = 0.0;
  int sweep_points = 0;
  double epsilon = 0.0;  // rad/ns probe-drive amplitude

  // Optimizer options: desk-scale defaults unless full_scale, with an
  // optional epoch override (0 keeps the preset).
  bool full_scale = false;
  int epochs = 0;
};

namespace detail {

inline std::string trim(std::string_view s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline double parse_double(const std::string& token, const std::string& key) {
  const std::string t = trim(token);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size())
    throw std::invalid_argument("config: key '" + key + "' has a malformed number '" + t + "'");
  return v;
}

inline long long parse_int(const std::string& token, const std::string& key) {
  const std::string t = trim(token);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size())
    throw std::invalid_argument("config: key '" + key + "' has a malformed integer '" + t + "'");
  return v;
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : value) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// Parsed key-value lines with consumption tracking: after extraction, any
// key nobody asked for is an error.
struct ConfigMap {
  std::map<std::string, std::string> values;
  mutable std::set<std::string> consumed;

  bool has(const std::string& key) const {
    const bool present = values.count(key) > 0;
    if (present) consumed.insert(key);
    return present;
  }

  std::string raw(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) throw std::invalid_argument("config: missing key '" + key + "'");
    consumed.insert(key);
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? raw(key) : fallback;
  }

  double get_double(const std::string& key, double fallback, double unit = 1.0) const {
    return has(key) ? parse_double(raw(key), key) * unit : fallback;
  }

  long long get_int(const std::string& key, long long fallback) const {
    return has(key) ? parse_int(raw(key), key) : fallback;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = trim(raw(key));
    if (v == "true") return true;
    if (v == "false") return false;
    throw std::invalid_argument("config: key '" + key + "' must be true or false");
  }

  template <size_t N>
  std::array<double, N> get_array(const std::string& key, const std::array<double, N>& fallback,
                                  double unit = 1.0) const {
    if (!has(key)) return fallback;
    const std::vector<std::string> parts = split_list(raw(key));
    if (parts.size() != N)
      throw std::invalid_argument("config: key '" + key + "' needs exactly " + std::to_string(N) +
                                  " comma-separated values");
    std::array<double, N> out{};
    for (size_t i = 0; i < N; ++i) out[i] = parse_double(parts[i], key) * unit;
    return out;
  }

  void reject_unknown() const {
    for (const auto& [key, value] : values)
      if (consumed.count(key) == 0)
        throw std::invalid_argument("config: unknown key '" + key + "'");
  }
};

inline ConfigMap tokenize_config(const std::string& text) {
  ConfigMap map;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not a key = value pair");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty() ||
        key.find_first_not_of("abcdefghijklmnopqrstuvwxyz0123456789_.") != std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(line_no) + " has a bad key '" +
                                  key + "'");
    if (!map.values.emplace(key, value).second)
      throw std::invalid_argument("config: duplicate key '" + key + "'");
  }
  return map;
}

inline std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

template <size_t N>
std::string format_array(const std::array<double, N>& a, double unit) {
  std::string out;
  for (size_t i = 0; i < N; ++i) {
    if (i) out += ", ";
    out += format_double(a[i] / unit);
  }
  return out;
}

inline const std::map<std::string, Command>& command_names() {
  static const std::map<std::string, Command> names = {{"simulate", Command::kSimulate},
                                                       {"scatter", Command::kScatter},
                                                       {"budget", Command::kBudget},
                                                       {"optimize", Command::kOptimize},
                                                       {"delay", Command::kDelay}};
  return names;
}

inline std::string command_name(Command c) {
  for (const auto& [name, value] : command_names())
    if (value == c) return name;
  throw std::logic_error("command_name: unmapped command");
}

}  // namespace detail

inline void validate_run_config(const RunConfig& cfg);

inline RunConfig parse_run_config(const std::string& text) {
  const detail::ConfigMap map = detail::tokenize_config(text);
  RunConfig cfg;

  {
    const std::string name = map.raw("command");
    const auto it = detail::command_names().find(name);
    if (it == detail::command_names().end())
      throw std::invalid_argument("config: unknown command '" + name + "'");
    cfg.command = it->second;
  }
  const long long seed = map.get_int("seed", 0);
  if (seed < 0) throw std::invalid_argument("config: seed must be non-negative");
  cfg.seed = static_cast<uint64_t>(seed);
  cfg.output_dir = map.get_string("output_dir", ".");

  cfg.device.gamma = map.get_array<4>("device.gamma_mhz", cfg.device.gamma, kMhzToRadPerNs);
  cfg.device.kd = map.get_double("device.kd_rad", cfg.device.kd);
  cfg.device.eta = map.get_double("device.eta", cfg.device.eta);
  cfg.device.t1_data = map.get_array<4>("device.t1_us", cfg.device.t1_data, kUsToNs);
  cfg.device.t2star_data = map.get_array<4>("device.t2star_us", cfg.device.t2star_data, kUsToNs);
  cfg.device.intra_module_phase =
      map.get_double("device.intra_phase_rad", cfg.device.intra_module_phase);
  cfg.device.residual_exchange =
      map.get_double("device.residual_exchange_mhz", cfg.device.residual_exchange, kMhzToRadPerNs);

  {
    const std::string source = map.get_string("pulses.source", "segmented");
    if (source == "ideal")
      cfg.source = EnvelopeSource::kIdeal;
    else if (source == "segmented")
      cfg.source = EnvelopeSource::kSegmented;
    else
      throw std::invalid_argument("config: pulses.source must be ideal or segmented");
  }
  cfg.gamma_ph = map.get_double("pulses.gamma_ph_mhz", cfg.gamma_ph, kMhzToRadPerNs);
  cfg.pulses.total_duration =
      map.get_double("pulses.total_duration_ns", cfg.pulses.total_duration);
  cfg.pulses.g_max = map.get_double("pulses.g_max_mhz", cfg.pulses.g_max, kMhzToRadPerNs);
  {
    static constexpr const char* kCouplers[4] = {"c13", "c24", "c57", "c68"};
    for (int e = 0; e < PulseSet::kEnvelopes; ++e) {
      std::array<double, PulseSet::kSegments> seg{};
      for (int s = 0; s < PulseSet::kSegments; ++s) seg[s] = cfg.pulses.seg_i[e][s];
      seg = map.get_array<PulseSet::kSegments>(
          std::string("pulses.") + kCouplers[e] + "_seg_i_mhz", seg, kMhzToRadPerNs);
      for (int s = 0; s < PulseSet::kSegments; ++s) cfg.pulses.seg_i[e][s] = seg[s];
      for (int s = 0; s < PulseSet::kSegments; ++s) seg[s] = cfg.pulses.seg_q[e][s];
      seg = map.get_array<PulseSet::kSegments>(
          std::string("pulses.") + kCouplers[e] + "_seg_q_mhz", seg, kMhzToRadPerNs);
      for (int s = 0; s < PulseSet::kSegments; ++s) cfg.pulses.seg_q[e][s] = seg[s];
    }
    std::array<double, 4> det{cfg.pulses.detuning[0], cfg.pulses.detuning[1],
                              cfg.pulses.detuning[2], cfg.pulses.detuning[3]};
    det = map.get_array<4>("pulses.detuning_mhz", det, kMhzToRadPerNs);
    std::array<double, 4> ph{cfg.pulses.phase[0], cfg.pulses.phase[1], cfg.pulses.phase[2],
                             cfg.pulses.phase[3]};
    ph = map.get_array<4>("pulses.phase_rad", ph);
    for (int e = 0; e < 4; ++e) {
      cfg.pulses.detuning[e] = det[e];
      cfg.pulses.phase[e] = ph[e];
    }
    cfg.pulses.global_delay = map.get_double("pulses.global_delay_ns", cfg.pulses.global_delay);
  }

  cfg.grid.t_start = map.get_double("grid.t_start_ns", cfg.grid.t_start);
  cfg.grid.t_end = map.get_double("grid.t_end_ns", cfg.grid.t_end);
  cfg.grid.dt = map.get_double("grid.dt_ns", cfg.grid.dt);
  cfg.grid.sample_stride = static_cast<int>(map.get_int("grid.sample_stride",
                                                        cfg.grid.sample_stride));

  {
    const std::string dir = map.get_string("protocol.direction", "right");
    if (dir == "right")
      cfg.direction = Direction::kRight;
    else if (dir == "left")
      cfg.direction = Direction::kLeft;
    else
      throw std::invalid_argument("config: protocol.direction must be right or left");
    const std::string mode = map.get_string("protocol.mode", "full_transfer");
    if (mode == "full_transfer")
      cfg.mode = ProtocolMode::kFullTransfer;
    else if (mode == "half_emission")
      cfg.mode = ProtocolMode::kHalfEmission;
    else if (mode == "emit_only")
      cfg.mode = ProtocolMode::kEmitOnly;
    else if (mode == "transparency")
      cfg.mode = ProtocolMode::kTransparency;
    else
      throw std::invalid_argument("config: unknown protocol.mode '" + mode + "'");
    const std::string prep = map.get_string("protocol.prep", "psi_plus");
    if (prep == "psi_plus")
      cfg.prep = PrepKind::kPsiPlus;
    else if (prep == "psi_minus")
      cfg.prep = PrepKind::kPsiMinus;
    else
      throw std::invalid_argument("config: protocol.prep must be psi_plus or psi_minus");
    cfg.pi_fraction = map.get_double("protocol.pi_fraction", cfg.pi_fraction);
  }

  cfg.distortion.tau_lp = map.get_double("distortion.tau_lp_ns", cfg.distortion.tau_lp);
  cfg.distortion.cubic = map.get_double("distortion.cubic", cfg.distortion.cubic);
  cfg.distortion.phase_offset = map.get_double("distortion.phase_rad",
                                               cfg.distortion.phase_offset);

  if (map.has("sweep.delta_mhz")) {
    const std::vector<std::string> parts = detail::split_list(map.raw("sweep.delta_mhz"));
    if (parts.size() != 3)
      throw std::invalid_argument("config: sweep.delta_mhz needs 'lo, hi, points'");
    cfg.has_sweep = true;
    cfg.sweep_lo = detail::parse_double(parts[0], "sweep.delta_mhz") * kMhzToRadPerNs;
    cfg.sweep_hi = detail::parse_double(parts[1], "sweep.delta_mhz") * kMhzToRadPerNs;
    cfg.sweep_points = static_cast<int>(detail::parse_int(parts[2], "sweep.delta_mhz"));
  }
  cfg.epsilon = map.get_double("sweep.epsilon_mhz", cfg.epsilon, kMhzToRadPerNs);

  cfg.full_scale = map.get_bool("optimize.full_scale", cfg.full_scale);
  cfg.epochs = static_cast<int>(map.get_int("optimize.epochs", cfg.epochs));

  map.reject_unknown();
  validate_run_config(cfg);
  return cfg;
}

inline void validate_run_config(const RunConfig& cfg) {
  cfg.device.validate();
  if (!(cfg.gamma_ph > 0.0)) throw std::invalid_argument("config: pulses.gamma_ph_mhz must be > 0");
  if (!(cfg.pulses.total_duration > 0.0))
    throw std::invalid_argument("config: pulses.total_duration_ns must be > 0");
  if (!(cfg.grid.dt > 0.0) || !(cfg.grid.t_end > cfg.grid.t_start))
    throw std::invalid_argument("config: grid must have dt > 0 and t_end > t_start");
  if (cfg.grid.sample_stride < 1)
    throw std::invalid_argument("config: grid.sample_stride must be >= 1");
  if (!(cfg.pi_fraction > 0.0 && cfg.pi_fraction <= 1.0))
    throw std::invalid_argument("config: protocol.pi_fraction must lie in (0, 1]");
  if (cfg.epochs < 0) throw std::invalid_argument("config: optimize.epochs must be >= 0");
  if (cfg.command == Command::kScatter) {
    if (!cfg.has_sweep) throw std::invalid_argument("config: scatter needs a sweep.delta_mhz block");
    if (cfg.sweep_points < 1)
      throw std::invalid_argument("config: sweep.delta_mhz needs at least one point");
    if (!(cfg.epsilon > 0.0))
      throw std::invalid_argument("config: scatter needs sweep.epsilon_mhz > 0");
  }
  if (cfg.source == EnvelopeSource::kSegmented &&
      (cfg.command == Command::kSimulate || cfg.command == Command::kBudget)) {
    double loudest = 0.0;
    const auto flat = cfg.pulses.to_flat();
    for (int i = 0; i < PulseSet::kEnvelopes * PulseSet::kSegments * 2; ++i)
      loudest = std::max(loudest, std::abs(flat[i]));
    if (loudest == 0.0)
      throw std::invalid_argument(
          "config: pulses.source = segmented but every segment amplitude is zero");
  }
}

inline std::string serialize_run_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "command = " << detail::command_name(cfg.command) << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "output_dir = " << cfg.output_dir << "\n";
  out << "device.gamma_mhz = " << detail::format_array(cfg.device.gamma, kMhzToRadPerNs) << "\n";
  out << "device.kd_rad = " << detail::format_double(cfg.device.kd) << "\n";
  out << "device.eta = " << detail::format_double(cfg.device.eta) << "\n";
  out << "device.t1_us = " << detail::format_array(cfg.device.t1_data, kUsToNs) << "\n";
  out << "device.t2star_us = " << detail::format_array(cfg.device.t2star_data, kUsToNs) << "\n";
  out << "device.intra_phase_rad = " << detail::format_double(cfg.device.intra_module_phase)
      << "\n";
  out << "device.residual_exchange_mhz = "
      << detail::format_double(cfg.device.residual_exchange / kMhzToRadPerNs) << "\n";
  out << "pulses.source = "
      << (cfg.source == EnvelopeSource::kIdeal ? "ideal" : "segmented") << "\n";
  out << "pulses.gamma_ph_mhz = " << detail::format_double(cfg.gamma_ph / kMhzToRadPerNs) << "\n";
  out << "pulses.total_duration_ns = " << detail::format_double(cfg.pulses.total_duration) << "\n";
  out << "pulses.g_max_mhz = " << detail::format_double(cfg.pulses.g_max / kMhzToRadPerNs) << "\n";
  static constexpr const char* kCouplers[4] = {"c13", "c24", "c57", "c68"};
  for (int e = 0; e < PulseSet::kEnvelopes; ++e) {
    std::array<double, PulseSet::kSegments> seg{};
    for (int s = 0; s < PulseSet::kSegments; ++s) seg[s] = cfg.pulses.seg_i[e][s];
    out << "pulses." << kCouplers[e]
        << "_seg_i_mhz = " << detail::format_array(seg, kMhzToRadPerNs) << "\n";
    for (int s = 0; s < PulseSet::kSegments; ++s) seg[s] = cfg.pulses.seg_q[e][s];
    out << "pulses." << kCouplers[e]
        << "_seg_q_mhz = " << detail::format_array(seg, kMhzToRadPerNs) << "\n";
  }
  const std::array<double, 4> det{cfg.pulses.detuning[0], cfg.pulses.detuning[1],
                                  cfg.pulses.detuning[2], cfg.pulses.detuning[3]};
  out << "pulses.detuning_mhz = " << detail::format_array(det, kMhzToRadPerNs) << "\n";
  const std::array<double, 4> ph{cfg.pulses.phase[0], cfg.pulses.phase[1], cfg.pulses.phase[2],
                                 cfg.pulses.phase[3]};
  out << "pulses.phase_rad = " << detail::format_array(ph, 1.0) << "\n";
  out << "pulses.global_delay_ns = " << detail::format_double(cfg.pulses.global_delay) << "\n";
  out << "grid.t_start_ns = " << detail::format_double(cfg.grid.t_start) << "\n";
  out << "grid.t_end_ns = " << detail::format_double(cfg.grid.t_end) << "\n";
  out << "grid.dt_ns = " << detail::format_double(cfg.grid.dt) << "\n";
  out << "grid.sample_stride = " << cfg.grid.sample_stride << "\n";
  out << "protocol.direction = " << (cfg.direction == Direction::kRight ? "right" : "left")
      << "\n";
  out << "protocol.mode = ";
  switch (cfg.mode) {
    case ProtocolMode::kFullTransfer: out << "full_transfer"; break;
    case ProtocolMode::kHalfEmission: out << "half_emission"; break;
    case ProtocolMode::kEmitOnly: out << "emit_only"; break;
    case ProtocolMode::kTransparency: out << "transparency"; break;
  }
  out << "\n";
  out << "protocol.prep = " << (cfg.prep == PrepKind::kPsiMinus ? "psi_minus" : "psi_plus")
      << "\n";
  out << "protocol.pi_fraction = " << detail::format_double(cfg.pi_fraction) << "\n";
  out << "distortion.tau_lp_ns = " << detail::format_double(cfg.distortion.tau_lp) << "\n";
  out << "distortion.cubic = " << detail::format_double(cfg.distortion.cubic) << "\n";
  out << "distortion.phase_rad = " << detail::format_double(cfg.distortion.phase_offset) << "\n";
  if (cfg.has_sweep) {
    out << "sweep.delta_mhz = " << detail::format_double(cfg.sweep_lo / kMhzToRadPerNs) << ", "
        << detail::format_double(cfg.sweep_hi / kMhzToRadPerNs) << ", " << cfg.sweep_points
        << "\n";
  }
  out << "sweep.epsilon_mhz = " << detail::format_double(cfg.epsilon / kMhzToRadPerNs) << "\n";
  out << "optimize.full_scale = " << (cfg.full_scale ? "true" : "false") << "\n";
  out << "optimize.epochs = " << cfg.epochs << "\n";
  return out.str();
}

// Value equality at full floating-point fidelity: unit conversion may cost a
// final-bit rounding on serialize/parse, nothing more.
inline bool run_config_equal(const RunConfig& a, const RunConfig& b) {
  const auto close = [](double x, double y) {
    if (x == y) return true;  // covers infinities
    return std::abs(x - y) <= 1e-12 * std::max({1.0, std::abs(x), std::abs(y)});
  };
  if (a.command != b.command || a.seed != b.seed || a.output_dir != b.output_dir) return false;
  for (int i = 0; i < 4; ++i)
    if (!close(a.device.gamma[i], b.device.gamma[i]) ||
        !close(a.device.t1_data[i], b.device.t1_data[i]) ||
        !close(a.device.t2star_data[i], b.device.t2star_data[i]))
      return false;
  if (!close(a.device.kd, b.device.kd) || !close(a.device.eta, b.device.eta) ||
      !close(a.device.intra_module_phase, b.device.intra_module_phase) ||
      !close(a.device.residual_exchange, b.device.residual_exchange))
    return false;
  if (a.source != b.source || !close(a.gamma_ph, b.gamma_ph)) return false;
  {
    const auto fa = a.pulses.to_flat();
    const auto fb = b.pulses.to_flat();
    for (size_t i = 0; i < fa.size(); ++i)
      if (!close(fa[i], fb[i])) return false;
    if (!close(a.pulses.total_duration, b.pulses.total_duration) ||
        !close(a.pulses.g_max, b.pulses.g_max))
      return false;
  }
  if (!close(a.grid.t_start, b.grid.t_start) || !close(a.grid.t_end, b.grid.t_end) ||
      !close(a.grid.dt, b.grid.dt) || a.grid.sample_stride != b.grid.sample_stride)
    return false;
  if (a.direction != b.direction || a.mode != b.mode || a.prep != b.prep ||
      !close(a.pi_fraction, b.pi_fraction))
    return false;
  if (!close(a.distortion.tau_lp, b.distortion.tau_lp) ||
      !close(a.distortion.cubic, b.distortion.cubic) ||
      !close(a.distortion.phase_offset, b.distortion.phase_offset))
    return false;
  if (a.has_sweep != b.has_sweep) return false;
  if (a.has_sweep &&
      (!close(a.sweep_lo, b.sweep_lo) || !close(a.sweep_hi, b.sweep_hi) ||
       a.sweep_points != b.sweep_points))
    return false;
  if (!close(a.epsilon, b.epsilon)) return false;
  if (a.full_scale != b.full_scale || a.epochs != b.epochs) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Output formatting
// ---------------------------------------------------------------------------

// 64-bit FNV-1a of the canonical serialized config, as fixed-width hex.
inline uint64_t fnv1a(std::string_view s) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string config_hash(const RunConfig& cfg) {
  std::ostringstream out;
  out << std::hex << std::setfill('0') << std::setw(16) << fnv1a(serialize_run_config(cfg));
  return out.str();
}

// Header line for text/CSV artifacts.
inline std::string artifact_header(const RunConfig& cfg) {
  return std::string("# artifact_version=") + kArtifactVersion + " config_hash=" +
         config_hash(cfg) + "\n";
}

// Header record for NDJSON artifacts (a JSON object, so the stream stays
// one-object-per-line throughout).
inline std::string ndjson_header(const RunConfig& cfg) {
  return std::string("{\"artifact_version\":\"") + kArtifactVersion + "\",\"config_hash\":\"" +
         config_hash(cfg) + "\"}\n";
}

// RFC-4180 quoting: fields containing commas, quotes, or line breaks are
// wrapped in double quotes with embedded quotes doubled.
inline std::string csv_field(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  out += '\n';
  return out;
}

}  // namespace chiralink
