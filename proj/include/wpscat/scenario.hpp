#pragma once

// Scenario runner: JSON config validation, the named experiments, CSV
// datasets and the run manifest.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "wpscat/golden.hpp"
#include "wpscat/packets.hpp"
#include "wpscat/scattered_packet.hpp"
#include "wpscat/stationary.hpp"
#include "wpscat/version.hpp"

namespace wpscat {

using json = nlohmann::json;

enum class Experiment { fluxmap, overlap, dcs_convergence, kernels, golden, delta0_demo };

inline std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::fluxmap: return "fluxmap";
    case Experiment::overlap: return "overlap";
    case Experiment::dcs_convergence: return "dcs_convergence";
    case Experiment::kernels: return "kernels";
    case Experiment::golden: return "golden";
    case Experiment::delta0_demo: return "delta0_demo";
  }
  return "?";
}

/// All violations found in a config, one message per entry.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : "\n") + s;
    return out;
  }
  std::vector<std::string> violations_;
};

/// A numerical operation failed while running an experiment.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(std::string operation, const std::string& what)
      : std::runtime_error(operation + ": " + what), operation_(std::move(operation)) {}
  const std::string& operation() const { return operation_; }

 private:
  std::string operation_;
};

struct PacketConfig {
  double radius{1.0};
  Vec3 momentum{0.0, 0.0, 1.0};
  std::optional<Vec3> center;
  double mass{1.0};

  PacketSpec with_radius(double r) const { return PacketSpec(r, momentum, mass, center); }
  PacketSpec spec() const { return with_radius(radius); }
};

struct ToyConfig {
  complex matrix_element{1.0, 0.0};
  double state_density{1.0};
  double initial_energy{0.0};
  double band_lo{-10.0};
  double band_hi{10.0};

  ContinuumToy toy() const {
    return ContinuumToy::flat(matrix_element, state_density, initial_energy, band_lo, band_hi);
  }
};

struct SpectrumConfig {
  double center{0.0};
  double width{1.0};
  double intermediate_energy{50.0};
};

struct SweepConfig {
  std::vector<double> T, R_I, r, theta, t;
};

struct ScenarioConfig {
  Experiment experiment{Experiment::kernels};
  std::string output{"out"};
  std::optional<PacketConfig> packet;
  std::optional<AmplitudeModel> amplitude;
  double potential_range{0.0};
  ToyConfig toy;
  SpectrumConfig spectrum;
  SweepConfig sweep;
  Tolerance tolerance;

  // kernels
  std::vector<KernelKind> kernel_kinds{KernelKind::delta_t, KernelKind::fejer, KernelKind::rate_derivative};
  double energy_min{-10.0}, energy_max{10.0};
  int energy_count{201};
  // overlap
  std::optional<double> theta_min;
  // dcs_convergence
  double distance_factor{20.0};
  PacketFieldModel field_model{PacketFieldModel::smeared};
  // delta0_demo
  std::vector<double> multipliers{1.0, 2.0};

  /// The validated config with every default filled in, keys sorted.
  json canonical;
};

namespace detail {

inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

// Walks a JSON object, recording violations instead of stopping at the first.
class Reader {
 public:
  Reader(std::vector<std::string>& violations) : violations_(violations) {}

  void fail(const std::string& key, const std::string& message) { violations_.push_back(key + ": " + message); }

  bool object(const json& j, const std::string& key) {
    if (!j.is_object()) {
      fail(key, "must be an object");
      return false;
    }
    return true;
  }

  void known_keys(const json& j, const std::string& prefix, std::initializer_list<std::string_view> keys) {
    for (const auto& item : j.items()) {
      if (std::find(keys.begin(), keys.end(), item.key()) == keys.end())
        fail(prefix + item.key(), "unknown key");
    }
  }

  std::optional<double> number(const json& j, const std::string& key) {
    if (!j.is_number()) {
      fail(key, "must be a number");
      return std::nullopt;
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
      fail(key, "must be finite");
      return std::nullopt;
    }
    return v;
  }

  std::optional<double> positive(const json& j, const std::string& key, const std::string& name) {
    auto v = number(j, key);
    if (v && !(*v > 0.0)) {
      fail(key, name + " must be positive");
      return std::nullopt;
    }
    return v;
  }

  std::optional<std::vector<double>> numbers(const json& j, const std::string& key, std::size_t size = 0) {
    if (!j.is_array()) {
      fail(key, "must be a list of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    bool ok = true;
    for (std::size_t i = 0; i < j.size(); ++i) {
      auto v = number(j[i], key + "[" + std::to_string(i) + "]");
      if (v) out.push_back(*v);
      else ok = false;
    }
    if (size != 0 && j.size() != size) {
      fail(key, "must have exactly " + std::to_string(size) + " entries");
      ok = false;
    }
    return ok ? std::optional(out) : std::nullopt;
  }

  std::optional<std::vector<double>> sweep(const json& j, const std::string& key) {
    auto v = numbers(j, key);
    if (!v) return std::nullopt;
    if (v->empty()) {
      fail(key, "sweep list must be non-empty");
      return std::nullopt;
    }
    for (std::size_t i = 1; i < v->size(); ++i) {
      if (!((*v)[i] > (*v)[i - 1])) {
        fail(key, "sweep list must be strictly increasing");
        return std::nullopt;
      }
    }
    return v;
  }

  std::optional<complex> complex_value(const json& j, const std::string& key) {
    if (j.is_number()) {
      auto v = number(j, key);
      return v ? std::optional(complex(*v, 0.0)) : std::nullopt;
    }
    auto v = numbers(j, key, 2);
    return v ? std::optional(complex((*v)[0], (*v)[1])) : std::nullopt;
  }

  std::optional<std::string> string(const json& j, const std::string& key) {
    if (!j.is_string()) {
      fail(key, "must be a string");
      return std::nullopt;
    }
    return j.get<std::string>();
  }

 private:
  std::vector<std::string>& violations_;
};

inline json to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
inline json to_json(complex c) { return json::array({c.real(), c.imag()}); }

inline std::optional<Experiment> parse_experiment(std::string_view name) {
  for (auto e : {Experiment::fluxmap, Experiment::overlap, Experiment::dcs_convergence, Experiment::kernels,
                 Experiment::golden, Experiment::delta0_demo})
    if (to_string(e) == name) return e;
  return std::nullopt;
}

inline std::optional<KernelKind> parse_kernel(std::string_view name) {
  for (auto k : {KernelKind::delta_t, KernelKind::fejer, KernelKind::rate_derivative})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

inline std::string_view to_string(PacketFieldModel m) {
  switch (m) {
    case PacketFieldModel::linearized: return "linearized";
    case PacketFieldModel::smeared: return "smeared";
    case PacketFieldModel::exact: return "exact";
  }
  return "?";
}

}  // namespace detail

/// Parses and checks a JSON scenario config. Relative amplitude-table paths
/// are resolved against base_dir. Throws ConfigError listing every violation.
inline ScenarioConfig validate_config(std::string_view text, const std::filesystem::path& base_dir = ".") {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, column] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError({"syntax error at line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                       e.what()});
  }

  std::vector<std::string> violations;
  detail::Reader rd(violations);
  ScenarioConfig cfg;
  if (!rd.object(root, "config")) throw ConfigError(violations);
  rd.known_keys(root, "", {"experiment", "output", "packet", "amplitude", "potential_range", "toy", "spectrum",
                           "sweep", "tolerance", "energy", "kernels", "overlap", "dcs", "multipliers"});

  json canon = json::object();

  if (!root.contains("experiment")) {
    rd.fail("experiment", "required (one of fluxmap, overlap, dcs_convergence, kernels, golden, delta0_demo)");
    throw ConfigError(violations);
  }
  if (auto name = rd.string(root["experiment"], "experiment")) {
    if (auto e = detail::parse_experiment(*name)) cfg.experiment = *e;
    else {
      rd.fail("experiment", "unknown experiment '" + *name + "'");
      throw ConfigError(violations);
    }
  } else {
    throw ConfigError(violations);
  }
  canon["experiment"] = std::string(to_string(cfg.experiment));

  if (root.contains("output")) {
    if (auto s = rd.string(root["output"], "output")) cfg.output = *s;
  }
  canon["output"] = cfg.output;

  if (root.contains("tolerance")) {
    const json& t = root["tolerance"];
    if (rd.object(t, "tolerance")) {
      rd.known_keys(t, "tolerance.", {"abs_tol", "rel_tol", "max_subdivisions"});
      if (t.contains("abs_tol"))
        if (auto v = rd.positive(t["abs_tol"], "tolerance.abs_tol", "abs_tol")) cfg.tolerance.abs_tol = *v;
      if (t.contains("rel_tol"))
        if (auto v = rd.positive(t["rel_tol"], "tolerance.rel_tol", "rel_tol")) cfg.tolerance.rel_tol = *v;
      if (t.contains("max_subdivisions")) {
        if (!t["max_subdivisions"].is_number_integer() || t["max_subdivisions"].get<long long>() < 1)
          rd.fail("tolerance.max_subdivisions", "must be an integer >= 1");
        else
          cfg.tolerance.max_subdivisions = static_cast<int>(t["max_subdivisions"].get<long long>());
      }
    }
  }
  canon["tolerance"] = {{"abs_tol", cfg.tolerance.abs_tol},
                        {"rel_tol", cfg.tolerance.rel_tol},
                        {"max_subdivisions", cfg.tolerance.max_subdivisions}};

  // Sweeps.
  if (root.contains("sweep")) {
    const json& s = root["sweep"];
    if (rd.object(s, "sweep")) {
      rd.known_keys(s, "sweep.", {"T", "R_I", "r", "theta", "t"});
      auto read = [&](const char* key, std::vector<double>& out) {
        if (s.contains(key))
          if (auto v = rd.sweep(s[key], std::string("sweep.") + key)) out = *v;
      };
      read("T", cfg.sweep.T);
      read("R_I", cfg.sweep.R_I);
      read("r", cfg.sweep.r);
      read("theta", cfg.sweep.theta);
      read("t", cfg.sweep.t);
    }
  }

  // Packet, amplitude, potential range.
  bool packet_ok = true;
  if (root.contains("packet")) {
    const json& p = root["packet"];
    if (rd.object(p, "packet")) {
      rd.known_keys(p, "packet.", {"radius", "momentum", "center", "mass"});
      PacketConfig pc;
      if (!p.contains("radius")) rd.fail("packet.radius", "required"), packet_ok = false;
      else if (auto v = rd.positive(p["radius"], "packet.radius", "radius")) pc.radius = *v;
      else packet_ok = false;
      if (!p.contains("momentum")) rd.fail("packet.momentum", "required"), packet_ok = false;
      else if (auto v = rd.numbers(p["momentum"], "packet.momentum", 3)) {
        pc.momentum = {(*v)[0], (*v)[1], (*v)[2]};
        if (!(norm(pc.momentum) > 0.0)) rd.fail("packet.momentum", "momentum must be non-zero"), packet_ok = false;
      } else packet_ok = false;
      if (p.contains("center")) {
        if (auto v = rd.numbers(p["center"], "packet.center", 3)) pc.center = Vec3{(*v)[0], (*v)[1], (*v)[2]};
        else packet_ok = false;
      }
      if (p.contains("mass")) {
        if (auto v = rd.positive(p["mass"], "packet.mass", "mass")) pc.mass = *v;
        else packet_ok = false;
      }
      if (packet_ok) {
        cfg.packet = pc;
        canon["packet"] = {{"radius", pc.radius}, {"momentum", detail::to_json(pc.momentum)}, {"mass", pc.mass}};
        if (pc.center) canon["packet"]["center"] = detail::to_json(*pc.center);
      }
    } else {
      packet_ok = false;
    }
  }

  if (root.contains("potential_range")) {
    if (auto v = rd.positive(root["potential_range"], "potential_range", "potential range"))
      cfg.potential_range = *v;
    canon["potential_range"] = cfg.potential_range;
  }

  if (root.contains("amplitude")) {
    const json& a = root["amplitude"];
    if (rd.object(a, "amplitude")) {
      const double mass = cfg.packet ? cfg.packet->mass : 1.0;
      std::string kind = "isotropic";
      if (a.contains("kind"))
        if (auto s = rd.string(a["kind"], "amplitude.kind")) kind = *s;
      json ca = {{"kind", kind}};
      if (kind == "isotropic") {
        rd.known_keys(a, "amplitude.", {"kind", "a0"});
        complex a0{1.0, 0.0};
        if (a.contains("a0"))
          if (auto v = rd.complex_value(a["a0"], "amplitude.a0")) a0 = *v;
        cfg.amplitude = IsotropicAmplitude{a0};
        ca["a0"] = detail::to_json(a0);
      } else if (kind == "born_yukawa") {
        rd.known_keys(a, "amplitude.", {"kind", "coupling", "screening"});
        BornYukawaAmplitude m{1.0, 1.0, mass};
        if (a.contains("coupling"))
          if (auto v = rd.number(a["coupling"], "amplitude.coupling")) m.coupling = *v;
        if (!a.contains("screening")) rd.fail("amplitude.screening", "required for born_yukawa");
        else if (auto v = rd.positive(a["screening"], "amplitude.screening", "screening")) m.screening = *v;
        cfg.amplitude = m;
        ca["coupling"] = m.coupling;
        ca["screening"] = m.screening;
      } else if (kind == "tabulated") {
        rd.known_keys(a, "amplitude.", {"kind", "file"});
        if (!a.contains("file")) rd.fail("amplitude.file", "required for tabulated");
        else if (auto f = rd.string(a["file"], "amplitude.file")) {
          std::filesystem::path path(*f);
          if (path.is_relative()) path = base_dir / path;
          try {
            cfg.amplitude = load_tabulated_amplitude(path.string());
          } catch (const std::exception& e) {
            rd.fail("amplitude.file", e.what());
          }
          ca["file"] = *f;
        }
      } else {
        rd.fail("amplitude.kind", "unknown kind '" + kind + "' (isotropic, born_yukawa, tabulated)");
      }
      canon["amplitude"] = ca;
    }
  }

  // Toy and spectrum.
  if (root.contains("toy")) {
    const json& t = root["toy"];
    if (rd.object(t, "toy")) {
      rd.known_keys(t, "toy.", {"matrix_element", "state_density", "initial_energy", "band"});
      if (t.contains("initial_energy"))
        if (auto v = rd.number(t["initial_energy"], "toy.initial_energy")) cfg.toy.initial_energy = *v;
      cfg.toy.band_lo = cfg.toy.initial_energy - 10.0;
      cfg.toy.band_hi = cfg.toy.initial_energy + 10.0;
      if (t.contains("matrix_element"))
        if (auto v = rd.complex_value(t["matrix_element"], "toy.matrix_element")) cfg.toy.matrix_element = *v;
      if (t.contains("state_density")) {
        if (auto v = rd.number(t["state_density"], "toy.state_density")) {
          if (*v < 0.0) rd.fail("toy.state_density", "state density must be non-negative");
          else cfg.toy.state_density = *v;
        }
      }
      if (t.contains("band"))
        if (auto v = rd.numbers(t["band"], "toy.band", 2)) {
          cfg.toy.band_lo = (*v)[0];
          cfg.toy.band_hi = (*v)[1];
        }
      if (!(cfg.toy.band_lo < cfg.toy.initial_energy && cfg.toy.initial_energy < cfg.toy.band_hi))
        rd.fail("toy.initial_energy", "initial energy must lie strictly inside the band");
    }
  } else {
    cfg.toy.band_lo = cfg.toy.initial_energy - 10.0;
    cfg.toy.band_hi = cfg.toy.initial_energy + 10.0;
  }

  if (root.contains("spectrum")) {
    const json& s = root["spectrum"];
    if (rd.object(s, "spectrum")) {
      rd.known_keys(s, "spectrum.", {"center", "width", "intermediate_energy"});
      if (s.contains("center"))
        if (auto v = rd.number(s["center"], "spectrum.center")) cfg.spectrum.center = *v;
      if (s.contains("width"))
        if (auto v = rd.positive(s["width"], "spectrum.width", "spectrum width")) cfg.spectrum.width = *v;
      if (!s.contains("intermediate_energy")) cfg.spectrum.intermediate_energy = cfg.spectrum.center + 50.0 * cfg.spectrum.width;
      else if (auto v = rd.number(s["intermediate_energy"], "spectrum.intermediate_energy"))
        cfg.spectrum.intermediate_energy = *v;
    }
  }

  // Experiment-specific sections.
  if (root.contains("energy")) {
    const json& e = root["energy"];
    if (rd.object(e, "energy")) {
      rd.known_keys(e, "energy.", {"min", "max", "count"});
      if (e.contains("min"))
        if (auto v = rd.number(e["min"], "energy.min")) cfg.energy_min = *v;
      if (e.contains("max"))
        if (auto v = rd.number(e["max"], "energy.max")) cfg.energy_max = *v;
      if (e.contains("count")) {
        if (!e["count"].is_number_integer() || e["count"].get<long long>() < 2 || e["count"].get<long long>() > 1000000)
          rd.fail("energy.count", "must be an integer in [2, 1000000]");
        else
          cfg.energy_count = static_cast<int>(e["count"].get<long long>());
      }
      if (!(cfg.energy_max > cfg.energy_min)) rd.fail("energy", "max must exceed min");
    }
  }
  if (root.contains("kernels")) {
    const json& k = root["kernels"];
    if (!k.is_array() || k.empty()) {
      rd.fail("kernels", "must be a non-empty list of kernel names");
    } else {
      cfg.kernel_kinds.clear();
      for (std::size_t i = 0; i < k.size(); ++i) {
        const std::string key = "kernels[" + std::to_string(i) + "]";
        if (auto s = rd.string(k[i], key)) {
          if (auto kind = detail::parse_kernel(*s)) cfg.kernel_kinds.push_back(*kind);
          else rd.fail(key, "unknown kernel '" + *s + "' (delta_T, fejer, rate_derivative)");
        }
      }
    }
  }
  if (root.contains("overlap")) {
    const json& o = root["overlap"];
    if (rd.object(o, "overlap")) {
      rd.known_keys(o, "overlap.", {"theta_min"});
      if (o.contains("theta_min")) {
        if (auto v = rd.number(o["theta_min"], "overlap.theta_min")) {
          if (!(*v > 0.0 && *v < std::numbers::pi)) rd.fail("overlap.theta_min", "must lie in (0, pi)");
          else cfg.theta_min = *v;
        }
      }
    }
  }
  if (root.contains("dcs")) {
    const json& d = root["dcs"];
    if (rd.object(d, "dcs")) {
      rd.known_keys(d, "dcs.", {"distance_factor", "field_model"});
      if (d.contains("distance_factor"))
        if (auto v = rd.positive(d["distance_factor"], "dcs.distance_factor", "distance factor"))
          cfg.distance_factor = *v;
      if (d.contains("field_model")) {
        if (auto s = rd.string(d["field_model"], "dcs.field_model")) {
          if (*s == "linearized") cfg.field_model = PacketFieldModel::linearized;
          else if (*s == "smeared") cfg.field_model = PacketFieldModel::smeared;
          else if (*s == "exact") cfg.field_model = PacketFieldModel::exact;
          else rd.fail("dcs.field_model", "unknown model '" + *s + "' (linearized, smeared, exact)");
        }
      }
    }
  }
  if (root.contains("multipliers")) {
    if (auto v = rd.sweep(root["multipliers"], "multipliers")) {
      if (std::any_of(v->begin(), v->end(), [](double m) { return !(m > 0.0); }))
        rd.fail("multipliers", "window multipliers must be positive");
      else
        cfg.multipliers = *v;
    }
  }

  // Requirements of the chosen experiment.
  auto require = [&](bool present, const std::string& key, const std::string& why) {
    if (!present) rd.fail(key, "required for experiment " + std::string(to_string(cfg.experiment)) + why);
  };
  auto has_sweep = [&](const char* key) {
    return root.contains("sweep") && root["sweep"].is_object() && root["sweep"].contains(key);
  };
  auto require_scatter = [&] {
    require(root.contains("packet"), "packet", "");
    require(root.contains("amplitude"), "amplitude", "");
    require(root.contains("potential_range"), "potential_range", "");
  };
  auto check_separation = [&](double radius, const std::string& key) {
    if (cfg.potential_range > 0.0 && radius < ScatterScenario::kMinSeparation * cfg.potential_range)
      rd.fail(key, "packet radius R_I must be at least 10x the potential range R_v (packet much larger than the "
                   "interaction region)");
  };

  switch (cfg.experiment) {
    case Experiment::kernels:
    case Experiment::delta0_demo: require(has_sweep("T"), "sweep.T", ""); break;
    case Experiment::golden: {
      require(has_sweep("T"), "sweep.T", "");
      const double half = std::min(cfg.toy.initial_energy - cfg.toy.band_lo, cfg.toy.band_hi - cfg.toy.initial_energy);
      for (double T : cfg.sweep.T)
        if (!(T > 0.0) || 4.0 * std::numbers::pi / T > half) {
          rd.fail("sweep.T", "T = " + std::to_string(T) + " too small for band (needs 4 pi / T <= band half-width)");
          break;
        }
      break;
    }
    case Experiment::overlap:
      require_scatter();
      require(has_sweep("t"), "sweep.t", "");
      if (cfg.packet) check_separation(cfg.packet->radius, "packet.radius");
      break;
    case Experiment::fluxmap:
      require_scatter();
      require(has_sweep("r"), "sweep.r", "");
      require(has_sweep("theta"), "sweep.theta", "");
      if (cfg.packet) check_separation(cfg.packet->radius, "packet.radius");
      break;
    case Experiment::dcs_convergence:
      require_scatter();
      require(has_sweep("R_I"), "sweep.R_I", "");
      for (double r : cfg.sweep.R_I) check_separation(r, "sweep.R_I");
      if (cfg.sweep.theta.empty()) cfg.sweep.theta = {0.5 * std::numbers::pi};
      break;
  }
  for (double T : cfg.sweep.T)
    if (!(T > 0.0)) {
      rd.fail("sweep.T", "durations must be positive");
      break;
    }
  for (double th : cfg.sweep.theta)
    if (!(th >= 0.0 && th <= std::numbers::pi)) {
      rd.fail("sweep.theta", "angles must lie in [0, pi]");
      break;
    }
  for (const auto* list : {&cfg.sweep.r, &cfg.sweep.R_I})
    if (std::any_of(list->begin(), list->end(), [](double v) { return !(v > 0.0); })) {
      rd.fail(list == &cfg.sweep.r ? "sweep.r" : "sweep.R_I", "values must be positive");
    }

  if (!violations.empty()) throw ConfigError(violations);

  switch (cfg.experiment) {
    case Experiment::kernels: {
      json kinds = json::array();
      for (auto k : cfg.kernel_kinds) kinds.push_back(std::string(to_string(k)));
      canon["kernels"] = kinds;
      canon["energy"] = {{"min", cfg.energy_min}, {"max", cfg.energy_max}, {"count", cfg.energy_count}};
      break;
    }
    case Experiment::golden:
      canon["toy"] = {{"matrix_element", detail::to_json(cfg.toy.matrix_element)},
                      {"state_density", cfg.toy.state_density},
                      {"initial_energy", cfg.toy.initial_energy},
                      {"band", json::array({cfg.toy.band_lo, cfg.toy.band_hi})}};
      canon["spectrum"] = {{"center", cfg.spectrum.center},
                           {"width", cfg.spectrum.width},
                           {"intermediate_energy", cfg.spectrum.intermediate_energy}};
      break;
    case Experiment::delta0_demo: canon["multipliers"] = cfg.multipliers; break;
    case Experiment::overlap:
      if (cfg.theta_min) canon["overlap"] = {{"theta_min", *cfg.theta_min}};
      break;
    case Experiment::dcs_convergence:
      canon["dcs"] = {{"distance_factor", cfg.distance_factor},
                      {"field_model", std::string(detail::to_string(cfg.field_model))}};
      break;
    case Experiment::fluxmap: break;
  }
  json sweep = json::object();
  if (!cfg.sweep.T.empty()) sweep["T"] = cfg.sweep.T;
  if (!cfg.sweep.R_I.empty()) sweep["R_I"] = cfg.sweep.R_I;
  if (!cfg.sweep.r.empty()) sweep["r"] = cfg.sweep.r;
  if (!cfg.sweep.theta.empty()) sweep["theta"] = cfg.sweep.theta;
  if (!cfg.sweep.t.empty()) sweep["t"] = cfg.sweep.t;
  canon["sweep"] = sweep;
  cfg.canonical = canon;
  return cfg;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({path.string() + ": cannot open config file"});
  std::ostringstream text;
  text << in.rdbuf();
  return validate_config(text.str(), path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const ScenarioConfig& cfg) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(cfg.canonical.dump());
  return out.str();
}

/// An in-memory CSV table: header line plus rows.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string render() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
    out += '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
      out += '\n';
    }
    return out;
  }
};

inline std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

/// Writes to a temporary sibling, then renames over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// Runs body(i) for i in [0, n) on up to `threads` workers; results must be
/// stored by index so the outcome does not depend on scheduling.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace detail {

template <typename F>
auto guarded(const std::string& operation, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ToleranceNotReached& e) {
    throw NumericalFailure(operation, e.what());
  } catch (const DomainError& e) {
    throw NumericalFailure(operation, e.what());
  } catch (const KernelTooWide& e) {
    throw NumericalFailure(operation, e.what());
  }
}

inline std::vector<Table> run_kernels(const ScenarioConfig& cfg, int threads) {
  Table values{"kernels.csv", {"kind", "E [energy]", "T [time]", "value [1/energy]"}, {}};
  Table norms{"kernel_normalization.csv",
              {"kind", "T [time]", "integral [1]", "expected [1]", "abs_error [1]"},
              {}};
  for (auto kind : cfg.kernel_kinds) {
    for (double T : cfg.sweep.T) {
      const KernelSpec spec{kind, T};
      for (int i = 0; i < cfg.energy_count; ++i) {
        const double e = cfg.energy_min + (cfg.energy_max - cfg.energy_min) * i / (cfg.energy_count - 1);
        values.rows.push_back({std::string(to_string(kind)), fmt(e), fmt(T), fmt(kernel_value(spec, e))});
      }
    }
  }
  struct Job {
    KernelKind kind;
    double T;
  };
  std::vector<Job> jobs;
  for (auto kind : cfg.kernel_kinds)
    for (double T : cfg.sweep.T) jobs.push_back({kind, T});
  std::vector<double> integral(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    integral[i] = guarded("kernel_normalization", [&] { return kernel_normalization({jobs[i].kind, jobs[i].T}, cfg.tolerance); });
  });
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const double expected = jobs[i].kind == KernelKind::delta_t ? 1.0 : 2.0 * std::numbers::pi;
    norms.rows.push_back({std::string(to_string(jobs[i].kind)), fmt(jobs[i].T), fmt(integral[i]), fmt(expected),
                          fmt(std::abs(integral[i] - expected))});
  }
  return {values, norms};
}

inline std::vector<Table> run_golden(const ScenarioConfig& cfg, int threads) {
  const ContinuumToy toy = cfg.toy.toy();
  const double limit = golden_rule_limit(toy);
  Table conv{"golden_convergence.csv", {"kernel", "T [time]", "estimate [1/time]", "limit [1/time]", "error [1/time]"}, {}};
  Table bt{"boundary_term.csv",
           {"T [time]", "re [1/energy]", "im [1/energy]", "abs [1/energy]", "log_abs [1]"},
           {}};
  const std::vector<KernelKind> kinds{KernelKind::fejer, KernelKind::rate_derivative};
  std::vector<double> rate(kinds.size() * cfg.sweep.T.size());
  parallel_for(rate.size(), threads, [&](std::size_t i) {
    const auto kind = kinds[i / cfg.sweep.T.size()];
    const double T = cfg.sweep.T[i % cfg.sweep.T.size()];
    rate[i] = guarded("golden_rate", [&] { return golden_rate(toy, T, cfg.tolerance, kind); });
  });
  for (std::size_t i = 0; i < rate.size(); ++i)
    conv.rows.push_back({std::string(to_string(kinds[i / cfg.sweep.T.size()])), fmt(cfg.sweep.T[i % cfg.sweep.T.size()]),
                         fmt(rate[i]), fmt(limit), fmt(rate[i] - limit)});

  const auto spectrum = InitialPacketSpectrum::gaussian(cfg.spectrum.center, cfg.spectrum.width);
  std::vector<ScaledComplex> terms(cfg.sweep.T.size());
  parallel_for(terms.size(), threads, [&](std::size_t i) {
    terms[i] = guarded("boundary_term", [&] {
      return boundary_term_scaled(spectrum, cfg.spectrum.intermediate_energy, cfg.sweep.T[i], cfg.tolerance);
    });
  });
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const complex v = terms[i].value();
    bt.rows.push_back({fmt(cfg.sweep.T[i]), fmt(v.real()), fmt(v.imag()), fmt(std::abs(v)), fmt(terms[i].log_abs())});
  }
  return {conv, bt};
}

inline std::vector<Table> run_delta0(const ScenarioConfig& cfg) {
  Table t{"delta0.csv", {"T [time]", "multiplier [1]", "delta0 [time]"}, {}};
  for (double T : cfg.sweep.T)
    for (double m : cfg.multipliers) t.rows.push_back({fmt(T), fmt(m), fmt(delta0_heuristic_demo(T, m))});
  return {t};
}

inline ScatterScenario make_scenario(const ScenarioConfig& cfg, double radius) {
  AmplitudeModel amplitude = *cfg.amplitude;
  if (auto* b = std::get_if<BornYukawaAmplitude>(&amplitude)) b->mass = cfg.packet->mass;
  return ScatterScenario(cfg.packet->with_radius(radius), amplitude, cfg.potential_range);
}

// Deterministic points inside the scattered layer with theta > theta_min.
inline std::vector<Vec3> shell_samples(const ScatterScenario& s, double t, double theta_min, std::size_t count) {
  const auto [inner, outer] = shell_radii(s, t, ShellModel::exact);
  const Frame frame = Frame::along(s.packet().direction());
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Vec3> points;
  for (std::size_t i = 0; i < count; ++i) {
    const double f = (i + 0.5) / count;
    const double theta = theta_min + (std::numbers::pi - theta_min) * f;
    const double r = std::max(inner, 0.0) + (outer - std::max(inner, 0.0)) * std::fmod(0.5 + i * 0.618033988749895, 1.0);
    points.push_back(frame.spherical(r, theta, i * golden_angle));
  }
  return points;
}

inline std::vector<Table> run_overlap(const ScenarioConfig& cfg, int threads) {
  const ScatterScenario s = make_scenario(cfg, cfg.packet->radius);
  Table t{"overlap.csv",
          {"t [time]", "shell_inner [length]", "shell_outer [length]", "theta_min [rad]", "overlap [1]",
           "max_interference [1/(length^2 time)]"},
          {}};
  std::vector<std::vector<std::string>> rows(cfg.sweep.t.size());
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    const double time = cfg.sweep.t[i];
    const auto [inner, outer] = shell_radii(s, time, ShellModel::exact);
    const double centre = 0.5 * (inner + outer);
    const double theta_min =
        cfg.theta_min.value_or(centre > 0.0 ? default_theta_min(s, centre) : 0.5 * std::numbers::pi);
    const double overlap = guarded("overlap_measure", [&] { return overlap_measure(s, time, theta_min, cfg.tolerance); });
    double max_flux = 0.0;
    if (outer > 0.0) {
      const double h = default_fd_step(s.packet().momentum_magnitude());
      for (const Vec3& x : shell_samples(s, time, theta_min, 50))
        if (norm(x) > 0.0) max_flux = std::max(max_flux, norm(interference_flux(s, x, time, h)));
    }
    rows[i] = {fmt(time), fmt(inner), fmt(outer), fmt(theta_min), fmt(overlap), fmt(max_flux)};
  });
  t.rows = std::move(rows);
  return {t};
}

inline std::vector<Table> run_fluxmap(const ScenarioConfig& cfg, int threads) {
  const ScatterScenario s = make_scenario(cfg, cfg.packet->radius);
  const PacketSpec& packet = s.packet();
  const Frame frame = Frame::along(packet.direction());
  const double h = default_fd_step(packet.momentum_magnitude());
  std::vector<double> times = cfg.sweep.t;

  Table field{"scattered_field.csv",
              {"t [time]", "r [length]", "theta [rad]", "phi [rad]", "re [1/length]", "im [1/length]",
               "j_r [1/(length^2 time)]"},
              {}};
  struct Point {
    double t, r, theta;
  };
  std::vector<Point> points;
  for (double r : cfg.sweep.r) {
    const std::vector<double> ts = times.empty() ? std::vector<double>{detector_time(s, r)} : times;
    for (double time : ts)
      for (double theta : cfg.sweep.theta) points.push_back({time, r, theta});
  }
  std::vector<std::vector<std::string>> rows(points.size());
  parallel_for(points.size(), threads, [&](std::size_t i) {
    const auto& pt = points[i];
    const Vec3 x = frame.spherical(pt.r, pt.theta, 0.0);
    auto scattered = [&](const Vec3& y) { return scattered_approx(s, y, pt.t); };
    const complex value = scattered(x);
    const FluxVector j = flux_density(value, gradient_central(scattered, x, h), packet.mass());
    rows[i] = {fmt(pt.t), fmt(pt.r), fmt(pt.theta), fmt(0.0), fmt(value.real()), fmt(value.imag()),
               fmt(dot(j.j, x / pt.r))};
  });
  field.rows = std::move(rows);

  Table flux{"stationary_flux.csv",
             {"r [length]", "theta [rad]", "j_incident [1/(length^2 time)]", "j_scattered [1/(length^2 time)]",
              "j_grad_s_i [1/(length^2 time)]", "j_grad_i_s [1/(length^2 time)]", "j_total [1/(length^2 time)]"},
             {}};
  const StationaryState state{packet.momentum(), packet.mass(), s.amplitude()};
  for (double r : cfg.sweep.r)
    for (double theta : cfg.sweep.theta) {
      const Vec3 x = frame.spherical(r, theta, 0.0);
      const Vec3 radial = x / r;
      const auto terms = flux_terms(state, x, h);
      double total = 0.0;
      std::vector<std::string> row{fmt(r), fmt(theta)};
      for (const auto& term : terms) {
        row.push_back(fmt(dot(term.j, radial)));
        total += dot(term.j, radial);
      }
      row.push_back(fmt(total));
      flux.rows.push_back(row);
    }
  return {field, flux};
}

inline std::vector<Table> run_dcs(const ScenarioConfig& cfg, int threads) {
  Table t{"dcs_convergence.csv",
          {"R_I [length]", "pR [1]", "r [length]", "t [time]", "theta [rad]", "packet_dcs [length^2]",
           "stationary_dcs [length^2]", "rel_error [1]"},
          {}};
  struct Job {
    double radius, theta;
  };
  std::vector<Job> jobs;
  for (double radius : cfg.sweep.R_I)
    for (double theta : cfg.sweep.theta) jobs.push_back({radius, theta});
  std::vector<std::vector<std::string>> rows(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    const ScatterScenario s = make_scenario(cfg, jobs[i].radius);
    const double r = cfg.distance_factor * jobs[i].radius;
    const double time = detector_time(s, r);
    PacketDcsOptions options;
    options.model = cfg.field_model;
    const double packet = guarded("packet_dcs", [&] { return packet_dcs(s, jobs[i].theta, 0.0, r, time, options); });
    const StationaryState state{s.packet().momentum(), s.packet().mass(), s.amplitude()};
    const double stationary = stationary_dcs(state, jobs[i].theta);
    const double rel = stationary != 0.0 ? std::abs(packet - stationary) / stationary : std::abs(packet);
    rows[i] = {fmt(jobs[i].radius), fmt(jobs[i].radius * s.packet().momentum_magnitude()), fmt(r), fmt(time),
               fmt(jobs[i].theta), fmt(packet), fmt(stationary), fmt(rel)};
  });
  t.rows = std::move(rows);
  return {t};
}

}  // namespace detail

struct RunReport {
  std::filesystem::path output_dir;
  std::vector<std::pair<std::string, std::size_t>> files;  ///< name, data rows
  std::string config_hash;
};

/// Runs the configured experiment and writes its CSV files and manifest.json
/// into output_dir. Nothing is written unless every computation succeeds.
inline RunReport run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& output_dir, int threads = 1) {
  std::vector<Table> tables;
  switch (cfg.experiment) {
    case Experiment::kernels: tables = detail::run_kernels(cfg, threads); break;
    case Experiment::golden: tables = detail::run_golden(cfg, threads); break;
    case Experiment::delta0_demo: tables = detail::run_delta0(cfg); break;
    case Experiment::overlap: tables = detail::run_overlap(cfg, threads); break;
    case Experiment::fluxmap: tables = detail::run_fluxmap(cfg, threads); break;
    case Experiment::dcs_convergence: tables = detail::run_dcs(cfg, threads); break;
  }

  std::filesystem::create_directories(output_dir);
  RunReport report{output_dir, {}, config_hash(cfg)};
  json files = json::array();
  for (const auto& table : tables) {
    write_atomic(output_dir / table.name, table.render());
    report.files.emplace_back(table.name, table.rows.size());
    files.push_back({{"name", table.name}, {"rows", table.rows.size()}});
  }
  json manifest = {{"toolkit", kToolkitName},
                   {"version", kToolkitVersion},
                   {"experiment", std::string(to_string(cfg.experiment))},
                   {"config_hash", report.config_hash},
                   {"config", cfg.canonical},
                   {"units", "natural units, hbar = 1"},
                   {"files", files}};
  write_atomic(output_dir / "manifest.json", manifest.dump(2) + "\n");
  return report;
}

}  // namespace wpscat
