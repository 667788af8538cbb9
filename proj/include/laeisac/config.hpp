#pragma once

// Run configuration: a flat `key = value` file (TOML-like scalars, `#` comments),
// validated on load, with command-line overrides layered on top.

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "laeisac/agent.hpp"
#include "laeisac/env.hpp"

namespace laeisac {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  // system
  int n_antennas = 6;
  int n_uavs = 4;
  int n_slots = 40;
  double p_max_dbm = 40.0;
  double noise_comm_dbm = -80.0;
  double noise_sensing_dbm = -80.0;
  double l0_db = -30.0;
  double d0 = 1.0;
  double path_loss_exponent = 3.2;
  double sensing_path_loss_exponent = 3.2;
  double d_over_lambda = 0.5;
  double snr_min_db = 1.0;
  bool snr_penalty_db = true;

  // geometry and mobility
  double uav_speed = 10.0;
  double uav_altitude = 80.0;
  double start_x_min = -150.0, start_x_max = -80.0, start_y_min = 60.0, start_y_max = 150.0;
  double goal_x_min = 90.0, goal_x_max = 160.0, goal_y_min = 50.0, goal_y_max = 160.0;
  bool resample_mission = false;
  double target_x = -60.0, target_y = 100.0, target_altitude = 70.0;
  double target_speed = 10.0;
  double target_azimuth_deg = 30.0, target_elevation_deg = 30.0;
  double mu_a = 0.9, mu_e = 0.9;
  double xi_a_deg = 10.0, xi_e_deg = 10.0;
  double sigma_a_deg = 10.0, sigma_e_deg = 10.0;
  double d_min = 20.0;
  double arrival_tolerance = 10.0;

  // reward and state
  double delta1 = 20.0;
  double delta2 = 10.0;
  double state_channel_scale = 1e8;
  double state_position_scale = 0.01;
  double state_sensing_scale = 0.0;

  // learning
  std::string scheme = "deeplsc";
  int gru_hidden = 128;
  int fc_hidden = 128;
  double lr_actor = 1e-4;
  double lr_critic = 2e-4;
  int buffer_size = 2000;
  int minibatch = 64;
  double zeta = 0.999;
  double kappa = 0.999;
  double chi_actor = 1e-4;
  double chi_critic = 1e-4;
  double sigma_c_init = 0.9;
  double sigma_s_init = 0.9;
  double sigma_u_init = 0.9;
  double gamma = 1.0;
  bool bootstrap_terminal = false;
  double reward_scale = 1.0;
  double reward_offset = 0.0;
  double grad_clip = 0.0;
  double ac2_std = 0.3;
  int train_iterations = 1;

  // run
  int episodes = 5000;
  std::uint64_t seed = 1;
  int repeats = 1;
  double max_wall_seconds = 0.0;
  int ma_window = 200;

  EnvConfig env_config() const {
    EnvConfig e;
    e.antennas = n_antennas;
    e.uavs = n_uavs;
    e.slots = n_slots;
    e.p_max = dbm_to_watts(p_max_dbm);
    e.noise.comm = dbm_to_watts(noise_comm_dbm);
    e.noise.sensing = dbm_to_watts(noise_sensing_dbm);
    e.channel.l0 = db_to_linear(l0_db);
    e.channel.d0 = d0;
    e.channel.exponent = path_loss_exponent;
    e.channel.sensing_exponent = sensing_path_loss_exponent;
    e.channel.d_over_lambda = d_over_lambda;
    e.uav_step = uav_speed;
    e.uav_altitude = uav_altitude;
    e.start_area = Rect{start_x_min, start_x_max, start_y_min, start_y_max};
    e.goal_area = Rect{goal_x_min, goal_x_max, goal_y_min, goal_y_max};
    e.resample_mission = resample_mission;
    e.target_start = Vec2(target_x, target_y);
    e.target_altitude = target_altitude;
    e.target_azimuth = deg2rad(target_azimuth_deg);
    e.target_elevation = deg2rad(target_elevation_deg);
    e.target_step = target_speed;
    e.mobility.mu_a = mu_a;
    e.mobility.mu_e = mu_e;
    e.mobility.xi_a = deg2rad(xi_a_deg);
    e.mobility.xi_e = deg2rad(xi_e_deg);
    e.mobility.sigma_a = deg2rad(sigma_a_deg);
    e.mobility.sigma_e = deg2rad(sigma_e_deg);
    e.d_min = d_min;
    e.arrival_tolerance = arrival_tolerance;
    e.delta1 = delta1;
    e.delta2 = delta2;
    e.snr_min_db = snr_min_db;
    e.snr_penalty_db = snr_penalty_db;
    e.state_channel_scale = state_channel_scale;
    e.state_position_scale = state_position_scale;
    e.state_sensing_scale = state_sensing_scale;
    return e;
  }

  AgentConfig agent_config() const {
    AgentConfig a;
    a.scheme = scheme_from_string(scheme);
    a.gru_hidden = gru_hidden;
    a.fc_hidden = fc_hidden;
    a.lr_actor = lr_actor;
    a.lr_critic = lr_critic;
    a.chi_actor = chi_actor;
    a.chi_critic = chi_critic;
    a.sigma_c = sigma_c_init;
    a.sigma_s = sigma_s_init;
    a.sigma_u = sigma_u_init;
    a.kappa = kappa;
    a.gamma = gamma;
    a.bootstrap_terminal = bootstrap_terminal;
    a.reward_scale = reward_scale;
    a.reward_offset = reward_offset;
    a.grad_clip = grad_clip;
    a.ac2_std = ac2_std;
    a.buffer_capacity = static_cast<std::size_t>(buffer_size);
    a.minibatch = static_cast<std::size_t>(minibatch);
    a.zeta = zeta;
    a.train_iterations = train_iterations;
    return a;
  }

  bool operator==(const RunConfig&) const = default;
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
T parse_value(const std::string& key, const std::string& text) {
  const auto fail = [&] { return ConfigError(key + ": cannot parse '" + text + "'"); };
  if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw fail();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (text.size() >= 2 && text.front() == '"' && text.back() == '"') return text.substr(1, text.size() - 2);
    return text;
  } else {
    errno = 0;
    char* end = nullptr;
    T v{};
    if constexpr (std::is_same_v<T, double>) {
      v = std::strtod(text.c_str(), &end);
    } else if constexpr (std::is_same_v<T, int>) {
      const long long l = std::strtoll(text.c_str(), &end, 10);
      if (l < INT32_MIN || l > INT32_MAX) throw fail();
      v = static_cast<int>(l);
    } else {
      if (!text.empty() && text.front() == '-') throw fail();
      v = static_cast<T>(std::strtoull(text.c_str(), &end, 10));
    }
    if (text.empty() || errno != 0 || end == nullptr || *end != '\0') throw fail();
    return v;
  }
}

template <class T>
std::string print_value(const T& v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_same_v<T, std::string>) {
    return "\"" + v + "\"";
  } else if constexpr (std::is_same_v<T, double>) {
    return format_double(v);
  } else {
    return std::to_string(v);
  }
}

struct Field {
  std::string key;
  std::string symbol;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <class T>
Field field(std::string key, std::string symbol, T RunConfig::*member) {
  Field f;
  f.key = key;
  f.symbol = std::move(symbol);
  f.get = [member](const RunConfig& c) { return print_value(c.*member); };
  f.set = [member, key](RunConfig& c, const std::string& text) { c.*member = parse_value<T>(key, text); };
  return f;
}

}  // namespace config_detail

/// Every recognised key, in file order, with the symbol used in error messages.
inline const std::vector<config_detail::Field>& config_fields() {
  using config_detail::field;
  static const std::vector<config_detail::Field> fields = {
      field("n_antennas", "N", &RunConfig::n_antennas),
      field("n_uavs", "M", &RunConfig::n_uavs),
      field("n_slots", "T", &RunConfig::n_slots),
      field("p_max_dbm", "P_max", &RunConfig::p_max_dbm),
      field("noise_comm_dbm", "sigma_m^2", &RunConfig::noise_comm_dbm),
      field("noise_sensing_dbm", "sigma_b^2", &RunConfig::noise_sensing_dbm),
      field("l0_db", "L0", &RunConfig::l0_db),
      field("d0", "D0", &RunConfig::d0),
      field("path_loss_exponent", "path-loss exponent", &RunConfig::path_loss_exponent),
      field("sensing_path_loss_exponent", "sensing path-loss exponent", &RunConfig::sensing_path_loss_exponent),
      field("d_over_lambda", "d/lambda", &RunConfig::d_over_lambda),
      field("snr_min_db", "Gamma_min", &RunConfig::snr_min_db),
      field("snr_penalty_db", "dB penalty mode", &RunConfig::snr_penalty_db),
      field("uav_speed", "v", &RunConfig::uav_speed),
      field("uav_altitude", "H", &RunConfig::uav_altitude),
      field("start_x_min", "start area", &RunConfig::start_x_min),
      field("start_x_max", "start area", &RunConfig::start_x_max),
      field("start_y_min", "start area", &RunConfig::start_y_min),
      field("start_y_max", "start area", &RunConfig::start_y_max),
      field("goal_x_min", "goal area", &RunConfig::goal_x_min),
      field("goal_x_max", "goal area", &RunConfig::goal_x_max),
      field("goal_y_min", "goal area", &RunConfig::goal_y_min),
      field("goal_y_max", "goal area", &RunConfig::goal_y_max),
      field("resample_mission", "mission resampling", &RunConfig::resample_mission),
      field("target_x", "target x", &RunConfig::target_x),
      field("target_y", "target y", &RunConfig::target_y),
      field("target_altitude", "H_Tar", &RunConfig::target_altitude),
      field("target_speed", "v_Tar", &RunConfig::target_speed),
      field("target_azimuth_deg", "phi(0)", &RunConfig::target_azimuth_deg),
      field("target_elevation_deg", "varphi(0)", &RunConfig::target_elevation_deg),
      field("mu_a", "mu_a", &RunConfig::mu_a),
      field("mu_e", "mu_e", &RunConfig::mu_e),
      field("xi_a_deg", "xi_a", &RunConfig::xi_a_deg),
      field("xi_e_deg", "xi_e", &RunConfig::xi_e_deg),
      field("sigma_a_deg", "sigma_phi", &RunConfig::sigma_a_deg),
      field("sigma_e_deg", "sigma_varphi", &RunConfig::sigma_e_deg),
      field("d_min", "D_min", &RunConfig::d_min),
      field("arrival_tolerance", "delta_arr", &RunConfig::arrival_tolerance),
      field("delta1", "delta_1", &RunConfig::delta1),
      field("delta2", "delta_2", &RunConfig::delta2),
      field("state_channel_scale", "channel feature scale", &RunConfig::state_channel_scale),
      field("state_position_scale", "position feature scale", &RunConfig::state_position_scale),
      field("state_sensing_scale", "sensing feature scale", &RunConfig::state_sensing_scale),
      field("scheme", "scheme", &RunConfig::scheme),
      field("gru_hidden", "GRU width", &RunConfig::gru_hidden),
      field("fc_hidden", "FC width", &RunConfig::fc_hidden),
      field("lr_actor", "alpha_a", &RunConfig::lr_actor),
      field("lr_critic", "alpha_c", &RunConfig::lr_critic),
      field("buffer_size", "D", &RunConfig::buffer_size),
      field("minibatch", "N_e", &RunConfig::minibatch),
      field("zeta", "zeta", &RunConfig::zeta),
      field("kappa", "kappa", &RunConfig::kappa),
      field("chi_actor", "chi_a", &RunConfig::chi_actor),
      field("chi_critic", "chi_c", &RunConfig::chi_critic),
      field("sigma_c_init", "sigma_c,init", &RunConfig::sigma_c_init),
      field("sigma_s_init", "sigma_s,init", &RunConfig::sigma_s_init),
      field("sigma_u_init", "sigma_u,init", &RunConfig::sigma_u_init),
      field("gamma", "gamma", &RunConfig::gamma),
      field("bootstrap_terminal", "terminal bootstrap", &RunConfig::bootstrap_terminal),
      field("reward_scale", "reward scale", &RunConfig::reward_scale),
      field("reward_offset", "reward offset", &RunConfig::reward_offset),
      field("grad_clip", "gradient clip", &RunConfig::grad_clip),
      field("ac2_std", "AC2 policy std", &RunConfig::ac2_std),
      field("train_iterations", "updates per episode", &RunConfig::train_iterations),
      field("episodes", "episodes", &RunConfig::episodes),
      field("seed", "seed", &RunConfig::seed),
      field("repeats", "repeats", &RunConfig::repeats),
      field("max_wall_seconds", "wall-clock budget", &RunConfig::max_wall_seconds),
      field("ma_window", "moving-average window", &RunConfig::ma_window),
  };
  return fields;
}

inline const config_detail::Field& config_field(const std::string& key) {
  for (const auto& f : config_fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown configuration key '" + key + "'");
}

inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  config_field(key).set(cfg, value);
}

/// Range checks; the message names the key and its symbol.
inline void validate(const RunConfig& c) {
  auto need = [](bool ok, const std::string& key, const std::string& what) {
    if (!ok) {
      const auto& f = config_field(key);
      throw ConfigError(key + " (" + f.symbol + ") " + what);
    }
  };
  need(c.n_antennas >= 1, "n_antennas", "must be >= 1, got " + std::to_string(c.n_antennas));
  need(c.n_uavs >= 1 && c.n_uavs <= 10, "n_uavs", "must lie in [1, 10], got " + std::to_string(c.n_uavs));
  need(c.n_slots >= 3, "n_slots", "must be >= 3, got " + std::to_string(c.n_slots));
  for (const auto& f : config_fields()) {
    // every numeric field must at least be finite
    const std::string text = f.get(c);
    if (text == "nan" || text == "-nan" || text == "inf" || text == "-inf") need(false, f.key, "must be finite");
  }
  need(c.d0 > 0, "d0", "must be positive");
  need(c.path_loss_exponent > 0, "path_loss_exponent", "must be positive");
  need(c.sensing_path_loss_exponent > 0, "sensing_path_loss_exponent", "must be positive");
  need(c.d_over_lambda > 0, "d_over_lambda", "must be positive");
  need(c.uav_speed > 0, "uav_speed", "must be positive");
  need(c.uav_altitude > 0, "uav_altitude", "must be positive");
  need(c.start_x_min <= c.start_x_max, "start_x_min", "must not exceed start_x_max");
  need(c.start_y_min <= c.start_y_max, "start_y_min", "must not exceed start_y_max");
  need(c.goal_x_min <= c.goal_x_max, "goal_x_min", "must not exceed goal_x_max");
  need(c.goal_y_min <= c.goal_y_max, "goal_y_min", "must not exceed goal_y_max");
  need(c.target_altitude > 0, "target_altitude", "must be positive");
  need(c.target_speed >= 0, "target_speed", "must be non-negative");
  need(c.mu_a >= 0 && c.mu_a <= 1, "mu_a", "must lie in [0, 1]");
  need(c.mu_e >= 0 && c.mu_e <= 1, "mu_e", "must lie in [0, 1]");
  need(c.sigma_a_deg >= 0, "sigma_a_deg", "must be non-negative");
  need(c.sigma_e_deg >= 0, "sigma_e_deg", "must be non-negative");
  need(c.d_min >= 0, "d_min", "must be non-negative");
  need(c.arrival_tolerance > 0, "arrival_tolerance", "must be positive");
  need(c.delta1 >= 0, "delta1", "must be non-negative");
  need(c.delta2 >= 0, "delta2", "must be non-negative");
  need(c.state_channel_scale > 0, "state_channel_scale", "must be positive");
  need(c.state_position_scale > 0, "state_position_scale", "must be positive");
  need(c.state_sensing_scale >= 0, "state_sensing_scale", "must be non-negative");
  try {
    (void)scheme_from_string(c.scheme);
  } catch (const std::invalid_argument& e) {
    need(false, "scheme", e.what());
  }
  need(c.gru_hidden >= 1, "gru_hidden", "must be >= 1");
  need(c.fc_hidden >= 1, "fc_hidden", "must be >= 1");
  need(c.lr_actor >= 0, "lr_actor", "must be non-negative");
  need(c.lr_critic >= 0, "lr_critic", "must be non-negative");
  need(c.buffer_size >= 1, "buffer_size", "must be >= 1");
  need(c.minibatch >= 1, "minibatch", "must be >= 1");
  need(c.zeta > 0 && c.zeta <= 1, "zeta", "must lie in (0, 1]");
  need(c.kappa > 0 && c.kappa <= 1, "kappa", "must lie in (0, 1]");
  need(c.chi_actor >= 0 && c.chi_actor <= 1, "chi_actor", "must lie in [0, 1]");
  need(c.chi_critic >= 0 && c.chi_critic <= 1, "chi_critic", "must lie in [0, 1]");
  need(c.sigma_c_init >= 0, "sigma_c_init", "must be non-negative");
  need(c.sigma_s_init >= 0, "sigma_s_init", "must be non-negative");
  need(c.sigma_u_init >= 0, "sigma_u_init", "must be non-negative");
  need(c.gamma >= 0 && c.gamma <= 1, "gamma", "must lie in [0, 1]");
  need(c.reward_scale > 0, "reward_scale", "must be positive");
  need(c.grad_clip >= 0, "grad_clip", "must be non-negative");
  need(c.ac2_std > 0, "ac2_std", "must be positive");
  need(c.train_iterations >= 1, "train_iterations", "must be >= 1");
  need(c.episodes >= 0, "episodes", "must be non-negative");
  need(c.repeats >= 1, "repeats", "must be >= 1");
  need(c.max_wall_seconds >= 0, "max_wall_seconds", "must be non-negative");
  need(c.ma_window >= 1, "ma_window", "must be >= 1");
}

/// Parses `key = value` lines on top of `base`. Blank lines and `#` comments are
/// skipped; a `[section]` line is accepted and ignored so TOML tables read naturally.
inline RunConfig parse_config(std::istream& in, const std::string& source, RunConfig base = {}) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string text = line;
    bool quoted = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == '"') quoted = !quoted;
      if (text[i] == '#' && !quoted) {
        text.resize(i);
        break;
      }
    }
    text = config_detail::trim(text);
    if (text.empty() || (text.front() == '[' && text.back() == ']')) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = config_detail::trim(std::string_view(text).substr(0, eq));
    const std::string value = config_detail::trim(std::string_view(text).substr(eq + 1));
    try {
      set_config_value(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate(base);
  return base;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path.string());
  return parse_config(in, path.string());
}

inline std::string dump_config(const RunConfig& cfg) {
  std::ostringstream os;
  for (const auto& f : config_fields()) os << f.key << " = " << f.get(cfg) << "\n";
  return os.str();
}

inline void save_config(const RunConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write configuration file " + path.string());
  out << dump_config(cfg);
}

/// Applies `key=value` overrides (command line), then re-validates.
inline void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides) {
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + kv + "' is not key=value");
    set_config_value(cfg, config_detail::trim(std::string_view(kv).substr(0, eq)),
                     config_detail::trim(std::string_view(kv).substr(eq + 1)));
  }
  validate(cfg);
}

/// LAE_ISAC_SEED, when set, replaces the seed from the file.
inline void apply_seed_env(RunConfig& cfg) {
  if (const char* s = std::getenv("LAE_ISAC_SEED"); s && *s) {
    set_config_value(cfg, "seed", s);
  }
}

}  // namespace laeisac
