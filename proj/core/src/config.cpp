#include "tkgode/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tkg {

TrainConfig RunConfig::train_config() const {
  TrainConfig cfg;
  cfg.dim = dim;
  cfg.layers = layers;
  cfg.history_length = history_length;
  cfg.jump_w = jump_w;
  cfg.delta_init = delta_init;
  cfg.decoder = decoder_from_name(decoder);
  if (activation == "tanh")
    cfg.activation = Activation::Tanh;
  else if (activation == "identity")
    cfg.activation = Activation::Identity;
  else
    throw ConfigError("unknown activation: " + activation);
  cfg.learning_rate = learning_rate;
  cfg.epochs = epochs;
  cfg.batch_size = batch_size;
  cfg.seed = seed;
  cfg.solver.steps_per_interval = steps_per_interval;
  cfg.solver.chebyshev_nodes = chebyshev_nodes;
  cfg.solver.backward_mode = backward_mode_from_name(backward);

  if (dim < 1 || layers < 1 || history_length < 1 || epochs < 0 || batch_size < 1 ||
      steps_per_interval < 1 || chebyshev_nodes < 2)
    throw ConfigError("run config: size fields must be positive (chebyshev_nodes >= 2)");
  if (jump_w < 0.0) throw ConfigError("run config: jump_w must be >= 0");
  if (learning_rate < 0.0) throw ConfigError("run config: learning_rate must be >= 0");
  return cfg;
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

long to_long(const std::string& v, const std::string& key) {
  long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("config value for " + key + " is not an integer: " + v);
  return out;
}

double to_double(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config value for " + key + " is not a number: " + v);
  }
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));

    if (key == "dataset_dir") cfg.dataset_dir = value;
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "dim") cfg.dim = static_cast<int>(to_long(value, key));
    else if (key == "layers") cfg.layers = static_cast<int>(to_long(value, key));
    else if (key == "history_length") cfg.history_length = static_cast<int>(to_long(value, key));
    else if (key == "decoder") cfg.decoder = value;
    else if (key == "activation") cfg.activation = value;
    else if (key == "jump_w") cfg.jump_w = to_double(value, key);
    else if (key == "delta_init") cfg.delta_init = to_double(value, key);
    else if (key == "learning_rate") cfg.learning_rate = to_double(value, key);
    else if (key == "epochs") cfg.epochs = static_cast<int>(to_long(value, key));
    else if (key == "batch_size") cfg.batch_size = static_cast<int>(to_long(value, key));
    else if (key == "steps_per_interval")
      cfg.steps_per_interval = static_cast<int>(to_long(value, key));
    else if (key == "chebyshev_nodes")
      cfg.chebyshev_nodes = static_cast<int>(to_long(value, key));
    else if (key == "backward") cfg.backward = value;
    else if (key == "seed") cfg.seed = static_cast<uint64_t>(to_long(value, key));
    else
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown key: " + key);
  }
  return cfg;
}

RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config_text(buf.str(), path);
}

std::string resolved_config_text(const RunConfig& cfg) {
  char num[64];
  std::ostringstream out;
  out << "activation = " << cfg.activation << '\n';
  out << "backward = " << cfg.backward << '\n';
  out << "batch_size = " << cfg.batch_size << '\n';
  out << "chebyshev_nodes = " << cfg.chebyshev_nodes << '\n';
  out << "dataset_dir = " << cfg.dataset_dir << '\n';
  out << "decoder = " << cfg.decoder << '\n';
  std::snprintf(num, sizeof(num), "%.17g", cfg.delta_init);
  out << "delta_init = " << num << '\n';
  out << "dim = " << cfg.dim << '\n';
  out << "epochs = " << cfg.epochs << '\n';
  out << "history_length = " << cfg.history_length << '\n';
  std::snprintf(num, sizeof(num), "%.17g", cfg.jump_w);
  out << "jump_w = " << num << '\n';
  out << "layers = " << cfg.layers << '\n';
  std::snprintf(num, sizeof(num), "%.17g", cfg.learning_rate);
  out << "learning_rate = " << num << '\n';
  out << "out_dir = " << cfg.out_dir << '\n';
  out << "seed = " << cfg.seed << '\n';
  out << "steps_per_interval = " << cfg.steps_per_interval << '\n';
  return out.str();
}

void write_resolved_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write resolved config: " + path);
  out << resolved_config_text(cfg);
}

}  // namespace tkg
