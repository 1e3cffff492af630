#include "opart/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "opart/error.hpp"

namespace opart {

namespace {

using nlohmann::json;

template <typename T>
void read_key(const json& j, const char* key, T& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw Error(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

RunConfig Defaults::run_config() const {
  RunConfig config;
  config.hyper = hyper;
  config.hyper.alpha = cost.alpha;
  config.hyper.beta = cost.beta;
  config.init = init;
  config.seed = seed;
  config.lock_strength = lock_strength;
  return config;
}

Defaults parse_defaults(const std::string& json_text, Defaults base) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error("config must be a JSON object");

  static const char* const known[] = {
      "alpha",     "beta",           "epsilon_floor", "lambda_bar", "tau_bar",
      "step_mode", "step",           "max_iters",     "r",          "init",
      "seed",      "occupancy_seed", "rounds",        "filling",    "lock_strength"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw Error("unknown config key '" + key + "'");
    }
  }

  Defaults d = std::move(base);
  read_key(j, "alpha", d.cost.alpha);
  read_key(j, "beta", d.cost.beta);
  read_key(j, "epsilon_floor", d.cost.epsilon_floor);
  read_key(j, "lambda_bar", d.hyper.lambda_bar);
  read_key(j, "tau_bar", d.hyper.tau_bar);
  read_key(j, "step", d.hyper.step);
  read_key(j, "max_iters", d.hyper.max_iters);
  read_key(j, "r", d.hyper.scaling_samples);
  read_key(j, "seed", d.seed);
  read_key(j, "occupancy_seed", d.occupancy_seed);
  read_key(j, "rounds", d.rounds);
  read_key(j, "lock_strength", d.lock_strength);
  std::string name;
  if (j.contains("step_mode")) {
    read_key(j, "step_mode", name);
    d.hyper.step_mode = parse_step_mode(name);
  }
  if (j.contains("init")) {
    read_key(j, "init", name);
    d.init = parse_init_scheme(name);
  }
  if (j.contains("filling")) {
    const auto& f = j.at("filling");
    if (!f.is_object()) throw Error("config key 'filling' must be an object");
    read_key(f, "admin_fraction", d.filling.admin_fraction);
    read_key(f, "public_fraction", d.filling.public_fraction);
    if (f.contains("residential_fraction")) {
      double value = 0.0;
      read_key(f, "residential_fraction", value);
      d.filling.residential_fraction = value;
    }
  }
  d.hyper.alpha = d.cost.alpha;
  d.hyper.beta = d.cost.beta;

  if (d.hyper.max_iters < 1) throw Error("max_iters must be at least 1");
  if (d.hyper.scaling_samples < 1) throw Error("r must be at least 1");
  if (d.rounds < 1) throw Error("rounds must be at least 1");
  if (!(d.cost.beta > 0.0)) throw Error("beta must be positive");
  if (!(d.cost.epsilon_floor > 0.0)) throw Error("epsilon_floor must be positive");
  if (!(d.hyper.lambda_bar >= 0.0) || !(d.hyper.tau_bar >= 0.0)) {
    throw Error("lambda_bar and tau_bar must be nonnegative");
  }
  if (!(d.lock_strength > 0.0)) throw Error("lock_strength must be positive");
  return d;
}

Defaults load_defaults(const std::filesystem::path& path, Defaults base) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_defaults(text.str(), std::move(base));
}

std::string defaults_to_json(const Defaults& d) {
  nlohmann::ordered_json j;
  j["alpha"] = d.cost.alpha;
  j["beta"] = d.cost.beta;
  j["epsilon_floor"] = d.cost.epsilon_floor;
  j["lambda_bar"] = d.hyper.lambda_bar;
  j["tau_bar"] = d.hyper.tau_bar;
  j["step_mode"] = to_string(d.hyper.step_mode);
  j["step"] = d.hyper.step;
  j["max_iters"] = d.hyper.max_iters;
  j["r"] = d.hyper.scaling_samples;
  j["init"] = to_string(d.init);
  j["seed"] = d.seed;
  j["occupancy_seed"] = d.occupancy_seed;
  j["rounds"] = d.rounds;
  j["lock_strength"] = d.lock_strength;
  nlohmann::ordered_json f;
  f["admin_fraction"] = d.filling.admin_fraction;
  f["public_fraction"] = d.filling.public_fraction;
  if (d.filling.residential_fraction) f["residential_fraction"] = *d.filling.residential_fraction;
  j["filling"] = f;
  return j.dump(2);
}

}  // namespace opart
