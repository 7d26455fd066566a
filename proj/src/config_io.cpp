#include "dcl/config_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace dcl {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("expected a number, got '" + std::string(s) + "'");
  }
  return v;
}

long long to_integer(std::string_view s) {
  s = trim(s);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("expected an integer, got '" + std::string(s) + "'");
  }
  return v;
}

bool to_bool(std::string_view s) {
  s = trim(s);
  if (s == "on" || s == "true" || s == "1" || s == "yes") return true;
  if (s == "off" || s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("expected on/off, got '" + std::string(s) + "'");
}

Vec3 to_vec3(std::string_view s) {
  std::istringstream in{std::string(s)};
  std::string a, b, c, extra;
  if (!(in >> a >> b >> c) || (in >> extra)) {
    throw ConfigError("expected three numbers, got '" + std::string(trim(s)) + "'");
  }
  return {to_double(a), to_double(b), to_double(c)};
}

std::vector<Vec3> to_anchors(std::string_view s) {
  std::vector<Vec3> out;
  while (!trim(s).empty()) {
    const auto semi = s.find(';');
    out.push_back(to_vec3(s.substr(0, semi)));
    if (semi == std::string_view::npos) break;
    s.remove_prefix(semi + 1);
  }
  if (out.empty()) throw ConfigError("anchors: at least one anchor required");
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_vec3(const Vec3& v) {
  return fmt_double(v.x()) + " " + fmt_double(v.y()) + " " + fmt_double(v.z());
}

using Setter = std::function<void(RunConfig&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"imu_rate", [](RunConfig& c, std::string_view v) { c.scenario.imu_rate = to_double(v); }},
      {"uwb_rate", [](RunConfig& c, std::string_view v) { c.scenario.uwb_rate = to_double(v); }},
      {"uwb_range", [](RunConfig& c, std::string_view v) { c.scenario.uwb_range = to_double(v); }},
      {"uwb_noise_std",
       [](RunConfig& c, std::string_view v) { c.scenario.uwb_noise = to_double(v); }},
      {"gyro_noise",
       [](RunConfig& c, std::string_view v) { c.scenario.gyro_noise = to_double(v); }},
      {"gyro_bias", [](RunConfig& c, std::string_view v) { c.scenario.gyro_bias = to_double(v); }},
      {"accel_noise",
       [](RunConfig& c, std::string_view v) { c.scenario.accel_noise = to_double(v); }},
      {"accel_bias",
       [](RunConfig& c, std::string_view v) { c.scenario.accel_bias = to_double(v); }},
      {"robot_count",
       [](RunConfig& c, std::string_view v) {
         c.scenario.robot_count = static_cast<int>(to_integer(v));
       }},
      {"anchors", [](RunConfig& c, std::string_view v) { c.scenario.anchors = to_anchors(v); }},
      {"duration", [](RunConfig& c, std::string_view v) { c.scenario.duration = to_double(v); }},
      {"gravity", [](RunConfig& c, std::string_view v) { c.scenario.gravity = to_vec3(v); }},
      {"biases",
       [](RunConfig& c, std::string_view v) { c.scenario.biases_enabled = to_bool(v); }},
      {"filter_gyro_noise",
       [](RunConfig& c, std::string_view v) { c.scenario.filter_gyro_noise = to_double(v); }},
      {"filter_accel_noise",
       [](RunConfig& c, std::string_view v) { c.scenario.filter_accel_noise = to_double(v); }},
      {"filter_uwb_noise_std",
       [](RunConfig& c, std::string_view v) { c.scenario.filter_uwb_noise = to_double(v); }},
      {"init_sigma_rot",
       [](RunConfig& c, std::string_view v) { c.scenario.init_sigma_rot = to_double(v); }},
      {"init_sigma_vel",
       [](RunConfig& c, std::string_view v) { c.scenario.init_sigma_vel = to_double(v); }},
      {"init_sigma_pos",
       [](RunConfig& c, std::string_view v) { c.scenario.init_sigma_pos = to_double(v); }},
      {"init_perturbation",
       [](RunConfig& c, std::string_view v) { c.scenario.init_perturbation = to_bool(v); }},
      {"fusion", [](RunConfig& c, std::string_view v) { set_fusion(c.scenario, v); }},
      {"filters", [](RunConfig& c, std::string_view v) { set_filters(c.scenario, v); }},
      {"trials",
       [](RunConfig& c, std::string_view v) {
         c.scenario.trials = static_cast<int>(to_integer(v));
       }},
      {"seed",
       [](RunConfig& c, std::string_view v) {
         const long long s = to_integer(v);
         if (s < 0) throw ConfigError("seed must be non-negative");
         c.scenario.seed = static_cast<std::uint64_t>(s);
       }},
      {"preset", [](RunConfig& c, std::string_view v) { c.presets = parse_presets(v); }},
      {"threads",
       [](RunConfig& c, std::string_view v) { c.threads = static_cast<int>(to_integer(v)); }},
      {"output", [](RunConfig& c, std::string_view v) { c.output_dir = std::string(trim(v)); }},
  };
  return table;
}

}  // namespace

void set_fusion(ScenarioConfig& config, std::string_view value) {
  value = trim(value);
  if (value == "ci") {
    config.fusion = FusionMode::ci;
  } else if (value == "naive") {
    config.fusion = FusionMode::naive;
  } else {
    throw ConfigError("fusion must be ci or naive, got '" + std::string(value) + "'");
  }
}

void set_filters(ScenarioConfig& config, std::string_view value) {
  value = trim(value);
  if (value == "both") {
    config.run_dinekf = config.run_qdekf = true;
  } else if (value == "dinekf") {
    config.run_dinekf = true;
    config.run_qdekf = false;
  } else if (value == "qdekf") {
    config.run_dinekf = false;
    config.run_qdekf = true;
  } else {
    throw ConfigError("filters must be both, dinekf or qdekf, got '" + std::string(value) + "'");
  }
}

std::vector<int> parse_presets(std::string_view value) {
  value = trim(value);
  if (value == "all") return {1, 2, 3};
  std::set<int> seen;
  std::vector<int> out;
  while (!value.empty()) {
    const auto comma = value.find(',');
    const long long p = to_integer(value.substr(0, comma));
    if (p < 1 || p > 3) throw ConfigError("preset must be 1, 2 or 3");
    if (seen.insert(static_cast<int>(p)).second) out.push_back(static_cast<int>(p));
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError("preset list is empty");
  return out;
}

void RunConfig::validate() const {
  try {
    scenario.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (scenario.robot_count > 4) throw ConfigError("presets define at most 4 robots");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (presets.empty()) throw ConfigError("no preset selected");
  if (output_dir.empty()) throw ConfigError("output directory must not be empty");
}

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where + "unknown key '" + std::string(key) + "'");
    if (!seen.emplace(key).second) {
      throw ConfigError(where + "duplicate key '" + std::string(key) + "'");
    }
    try {
      it->second(config, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + std::string(key) + ": " + e.what());
    }
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string canonical_text(const RunConfig& config) {
  const ScenarioConfig& s = config.scenario;
  std::string anchors;
  for (std::size_t i = 0; i < s.anchors.size(); ++i) {
    if (i > 0) anchors += "; ";
    anchors += fmt_vec3(s.anchors[i]);
  }
  std::string presets;
  for (std::size_t i = 0; i < config.presets.size(); ++i) {
    if (i > 0) presets += ",";
    presets += std::to_string(config.presets[i]);
  }
  const char* filters = s.run_dinekf && s.run_qdekf ? "both" : (s.run_dinekf ? "dinekf" : "qdekf");
  std::ostringstream out;
  out << "imu_rate = " << fmt_double(s.imu_rate) << "\n"
      << "uwb_rate = " << fmt_double(s.uwb_rate) << "\n"
      << "uwb_range = " << fmt_double(s.uwb_range) << "\n"
      << "uwb_noise_std = " << fmt_double(s.uwb_noise) << "\n"
      << "gyro_noise = " << fmt_double(s.gyro_noise) << "\n"
      << "gyro_bias = " << fmt_double(s.gyro_bias) << "\n"
      << "accel_noise = " << fmt_double(s.accel_noise) << "\n"
      << "accel_bias = " << fmt_double(s.accel_bias) << "\n"
      << "robot_count = " << s.robot_count << "\n"
      << "anchors = " << anchors << "\n"
      << "duration = " << fmt_double(s.duration) << "\n"
      << "gravity = " << fmt_vec3(s.gravity) << "\n"
      << "biases = " << (s.biases_enabled ? "on" : "off") << "\n"
      << "filter_gyro_noise = " << fmt_double(s.filter_gyro_noise) << "\n"
      << "filter_accel_noise = " << fmt_double(s.filter_accel_noise) << "\n"
      << "filter_uwb_noise_std = " << fmt_double(s.filter_uwb_noise) << "\n"
      << "init_sigma_rot = " << fmt_double(s.init_sigma_rot) << "\n"
      << "init_sigma_vel = " << fmt_double(s.init_sigma_vel) << "\n"
      << "init_sigma_pos = " << fmt_double(s.init_sigma_pos) << "\n"
      << "init_perturbation = " << (s.init_perturbation ? "on" : "off") << "\n"
      << "fusion = " << (s.fusion == FusionMode::ci ? "ci" : "naive") << "\n"
      << "filters = " << filters << "\n"
      << "trials = " << s.trials << "\n"
      << "seed = " << s.seed << "\n"
      << "preset = " << presets << "\n"
      << "threads = " << config.threads << "\n"
      << "output = " << config.output_dir << "\n";
  return out.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t experiment_hash(const RunConfig& config) {
  RunConfig normalized = config;
  normalized.threads = 1;
  normalized.output_dir = "-";
  return fnv1a64(canonical_text(normalized));
}

}  // namespace dcl
