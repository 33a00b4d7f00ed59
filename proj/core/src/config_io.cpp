#include <json.hpp>

#include "binfair/errors.hpp"
#include "binfair/training.hpp"

namespace binfair {

namespace {

using json = nlohmann::ordered_json;

json parse(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(std::string("unknown ") + what + " key '" + key + "'");
}

}  // namespace

TrainConfig train_config_from_json(std::string_view text, const TrainConfig& defaults) {
  const json j = parse(text);
  reject_unknown(j,
                 {"gamma", "variant", "epochs", "batch_size", "learning_rate", "hidden_layers", "hidden_width",
                  "binary_width", "hidden_activation", "binary_bias", "seed"},
                 "train config");
  TrainConfig cfg = defaults;
  read(j, "gamma", cfg.gamma);
  if (j.contains("variant")) cfg.variant = parse_variant(j.at("variant").get<std::string>());
  read(j, "epochs", cfg.epochs);
  read(j, "batch_size", cfg.batch_size);
  read(j, "learning_rate", cfg.learning_rate);
  read(j, "hidden_layers", cfg.hidden_layers);
  read(j, "hidden_width", cfg.hidden_width);
  read(j, "binary_width", cfg.binary_width);
  if (j.contains("hidden_activation")) cfg.hidden_activation = parse_activation(j.at("hidden_activation").get<std::string>());
  read(j, "binary_bias", cfg.binary_bias);
  read(j, "seed", cfg.seed);
  cfg.validate();
  return cfg;
}

std::string train_config_to_json(const TrainConfig& cfg) {
  json j;
  j["gamma"] = cfg.gamma;
  j["variant"] = std::string(to_string(cfg.variant));
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["learning_rate"] = cfg.learning_rate;
  j["hidden_layers"] = cfg.hidden_layers;
  j["hidden_width"] = cfg.hidden_width;
  j["binary_width"] = cfg.binary_width;
  j["hidden_activation"] = std::string(to_string(cfg.hidden_activation));
  j["binary_bias"] = cfg.binary_bias;
  j["seed"] = cfg.seed;
  return j.dump(2);
}

SearchSpace search_space_from_json(std::string_view text) {
  const json j = parse(text);
  reject_unknown(j, {"gamma", "batch_size", "hidden_layers", "hidden_widths", "binary_widths", "learning_rate", "variants"},
                 "search space");
  SearchSpace s;
  auto range = [&](const char* key, auto& lo, auto& hi) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2) throw ConfigError(std::string("'") + key + "' must be a [min, max] pair");
    using T = std::decay_t<decltype(lo)>;
    lo = v[0].get<T>();
    hi = v[1].get<T>();
  };
  range("gamma", s.gamma_min, s.gamma_max);
  range("batch_size", s.batch_min, s.batch_max);
  range("hidden_layers", s.layers_min, s.layers_max);
  range("learning_rate", s.lr_min, s.lr_max);
  read(j, "hidden_widths", s.widths);
  read(j, "binary_widths", s.binary_widths);
  if (j.contains("variants")) {
    s.variants.clear();
    for (const auto& v : j.at("variants")) s.variants.push_back(parse_variant(v.get<std::string>()));
  }
  s.validate();
  return s;
}

std::string search_space_to_json(const SearchSpace& s) {
  json j;
  j["gamma"] = {s.gamma_min, s.gamma_max};
  j["batch_size"] = {s.batch_min, s.batch_max};
  j["hidden_layers"] = {s.layers_min, s.layers_max};
  j["hidden_widths"] = s.widths;
  j["binary_widths"] = s.binary_widths;
  j["learning_rate"] = {s.lr_min, s.lr_max};
  json variants = json::array();
  for (auto v : s.variants) variants.push_back(std::string(to_string(v)));
  j["variants"] = variants;
  return j.dump(2);
}

}  // namespace binfair
