#include "config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <stovamp/errors.hpp>

namespace stovamp::cli {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string &key, const std::string &v) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used == 0 || used != v.size() || !std::isfinite(out)) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

long long to_integer(const std::string &key, const std::string &v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used == 0 || used != v.size()) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

int to_int(const std::string &key, const std::string &v) {
  const long long x = to_integer(key, v);
  if (x < -2147483647LL || x > 2147483647LL) {
    throw ConfigError("config key '" + key + "': value out of range");
  }
  return static_cast<int>(x);
}

bool to_bool(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1") {
    return true;
  }
  if (v == "false" || v == "0") {
    return false;
  }
  throw ConfigError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::string one_of(const std::string &key, const std::string &v, std::initializer_list<const char *> allowed) {
  std::string list;
  for (const char *a : allowed) {
    if (v == a) {
      return v;
    }
    list += list.empty() ? a : std::string(" | ") + a;
  }
  throw ConfigError("config key '" + key + "': expected " + list + ", got '" + v + "'");
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::to_pairs() const {
  return {
      {"experiment", experiment},
      {"n", std::to_string(n)},
      {"height", std::to_string(height)},
      {"width", std::to_string(width)},
      {"blocks", std::to_string(blocks)},
      {"alpha", format_double(alpha)},
      {"snr_db", format_double(snr_db)},
      {"rho", format_double(rho)},
      {"iterations", std::to_string(iterations)},
      {"schedule", schedule},
      {"block_order", block_order},
      {"early_stop", format_double(early_stop)},
      {"init_tau_scale", format_double(init_tau_scale)},
      {"prior_variance", format_double(prior_variance)},
      {"seed", std::to_string(seed)},
      {"solver", solver},
      {"image", image},
      {"output_dir", output_dir},
      {"record_wall_time", record_wall_time ? "true" : "false"},
  };
}

void ExperimentConfig::set(const std::string &key, const std::string &value) {
  if (key == "experiment") {
    experiment = one_of(key, value, {"haar", "cdp", "custom"});
  } else if (key == "n") {
    n = to_int(key, value);
  } else if (key == "height") {
    height = to_int(key, value);
  } else if (key == "width") {
    width = to_int(key, value);
  } else if (key == "blocks") {
    blocks = to_int(key, value);
  } else if (key == "alpha") {
    alpha = to_double(key, value);
  } else if (key == "snr_db") {
    snr_db = to_double(key, value);
  } else if (key == "rho") {
    rho = to_double(key, value);
  } else if (key == "iterations") {
    iterations = to_int(key, value);
  } else if (key == "schedule") {
    schedule = one_of(key, value, {"sequential", "parallel"});
  } else if (key == "block_order") {
    block_order = one_of(key, value, {"fixed", "random"});
  } else if (key == "early_stop") {
    early_stop = to_double(key, value);
  } else if (key == "init_tau_scale") {
    init_tau_scale = to_double(key, value);
  } else if (key == "prior_variance") {
    prior_variance = to_double(key, value);
  } else if (key == "seed") {
    const long long s = to_integer(key, value);
    if (s < 0) {
      throw ConfigError("config key 'seed': must be non-negative");
    }
    seed = static_cast<std::uint64_t>(s);
  } else if (key == "solver") {
    solver = one_of(key, value, {"stochastic", "vamp"});
  } else if (key == "image") {
    image = value;
  } else if (key == "output_dir") {
    output_dir = value;
  } else if (key == "record_wall_time") {
    record_wall_time = to_bool(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

int ExperimentConfig::haar_rows() const {
  return static_cast<int>(std::lround(alpha * n / blocks));
}

int ExperimentConfig::signal_dim() const { return experiment == "haar" ? n : height * width; }

void ExperimentConfig::validate() const {
  if (blocks < 1) {
    throw ConfigError("blocks must be >= 1");
  }
  if (iterations < 1) {
    throw ConfigError("iterations must be >= 1");
  }
  if (!(rho > 0 && rho <= 1)) {
    throw ConfigError("rho must lie in (0, 1]");
  }
  if (early_stop < 0) {
    throw ConfigError("early_stop must be >= 0");
  }
  if (!(init_tau_scale > 0)) {
    throw ConfigError("init_tau_scale must be positive");
  }
  if (!(prior_variance > 0)) {
    throw ConfigError("prior_variance must be positive");
  }
  if (experiment == "haar") {
    if (n < 1) {
      throw ConfigError("n must be >= 1");
    }
    if (!(alpha > 0)) {
      throw ConfigError("alpha must be positive");
    }
    if (haar_rows() < n) {
      throw ConfigError("haar blocks need round(alpha*n/blocks) >= n, got " + std::to_string(haar_rows()));
    }
  } else {
    if (height < 1 || width < 1) {
      throw ConfigError("height and width must be >= 1");
    }
    if (experiment == "cdp" && image.empty()) {
      throw ConfigError("experiment = cdp needs an image path");
    }
  }
}

ExperimentConfig parse_config_text(const std::string &text, const std::string &origin) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') {
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    try {
      config.set(key, trim(t.substr(eq + 1)));
    } catch (const ConfigError &e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return config;
}

ExperimentConfig load_config(const std::string &path) { return parse_config_text(read_file(path), path); }

ExperimentConfig config_from_trace(const std::string &path) {
  std::istringstream in(read_file(path));
  std::string line, body;
  while (std::getline(in, line) && !line.empty() && line[0] == '#') {
    if (line.rfind("# [", 0) == 0) {
      continue;
    }
    body += line.substr(1) + "\n";
  }
  return parse_config_text(body, path);
}

void apply_overrides(ExperimentConfig &config, const std::vector<std::pair<std::string, std::string>> &overrides) {
  for (const auto &[k, v] : overrides) {
    try {
      config.set(k, v);
    } catch (const ConfigError &e) {
      throw ConfigError(std::string("--") + k + ": " + e.what());
    }
  }
}

} // namespace stovamp::cli
