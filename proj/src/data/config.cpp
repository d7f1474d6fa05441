/*
 * Copyright (c) 2026 The Inhibitor Attention Authors
 *
 * Licensed under the Apache License, Version 2.0;
 * You may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an 'AS IS' BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "data/config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "core/error.hpp"

namespace ihb {

bool operator==(const TrainSettings& a, const TrainSettings& b) {
  return a.learning_rate == b.learning_rate && a.warmup_ratio == b.warmup_ratio &&
         a.lr_decay == b.lr_decay && a.batch_size == b.batch_size &&
         a.accumulation_steps == b.accumulation_steps && a.epochs == b.epochs &&
         a.adam.beta1 == b.adam.beta1 && a.adam.beta2 == b.adam.beta2 && a.adam.eps == b.adam.eps &&
         a.adam.weight_decay == b.adam.weight_decay && a.seq_len == b.seq_len &&
         a.max_steps == b.max_steps && a.seed == b.seed;
}

bool operator==(const DataSettings& a, const DataSettings& b) {
  const auto& x = a.synthetic;
  const auto& y = b.synthetic;
  return a.train_path == b.train_path && a.eval_path == b.eval_path &&
         a.holdout_fraction == b.holdout_fraction && x.n_examples == y.n_examples &&
         x.n_classes == y.n_classes && x.min_len == y.min_len && x.max_len == y.max_len &&
         x.majority_prob == y.majority_prob && x.seed == y.seed;
}

std::size_t RunConfig::parameter_estimate() const {
  const auto& m = model;
  const std::size_t hd = m.n_heads * m.d_head;
  const std::size_t per_layer = 3 * m.d_model * hd + hd * m.d_model + 2 * m.d_model * m.d_ffn +
                                m.d_ffn + 5 * m.d_model + 3 * m.n_heads;
  return (m.vocab_size + m.max_seq_len + 2) * m.d_model + m.n_layers * per_layer;
}

void RunConfig::validate() const {
  try {
    model.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("[model] ") + e.what());
  }
  if (train.batch_size == 0) throw ConfigError("[train] batch_size must be >= 1");
  if (train.epochs == 0) throw ConfigError("[train] epochs must be >= 1");
  if (train.seq_len == 0) throw ConfigError("[train] seq_len must be >= 1");
  if (train.seq_len > model.max_seq_len) {
    throw ConfigError("[train] seq_len exceeds [model] max_seq_len");
  }
  if (!(train.warmup_ratio >= 0.0 && train.warmup_ratio < 1.0)) {
    throw ConfigError("[train] warmup_ratio must lie in [0,1)");
  }
  if (!(train.learning_rate >= 0.0)) throw ConfigError("[train] learning_rate must be >= 0");
  if (!(train.adam.eps > 0.0)) throw ConfigError("[train] adam_eps must be > 0");
  for (double b : {train.adam.beta1, train.adam.beta2}) {
    if (!(b >= 0.0 && b < 1.0)) throw ConfigError("[train] adam betas must lie in [0,1)");
  }
  if (!(train.adam.weight_decay >= 0.0)) throw ConfigError("[train] weight_decay must be >= 0");
  if (!(plan.temperature > 0.0)) throw ConfigError("[distill] temperature must be > 0");
  if (plan.regime == Regime::task_specific || plan.regime == Regime::finetune) {
    if (model.n_classes == 0) throw ConfigError("[model] n_classes must be >= 1 for a classification regime");
  }
  try {
    if (plan.regime == Regime::layerwise) plan.validate(model.n_layers, model.n_layers);
    if (plan.regime == Regime::task_specific) {
      DistillPlan p = plan;
      p.layer_mapping.clear();  // mapping is checked against the actual teacher
      p.validate(model.n_layers, model.n_layers);
    }
  } catch (const ContractError& e) {
    throw ConfigError(std::string("[distill] ") + e.what());
  }
}

std::size_t levenshtein(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

namespace {

struct Where {
  const std::string& origin;
  std::size_t line;
  const std::string& key;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(origin + ":" + std::to_string(line) + ": key '" + key + "': " + msg);
  }
};

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s, const Where& w) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) w.fail("expected a real number, got '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s, const Where& w) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    w.fail("expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::size_t> parse_list(const std::string& s, const Where& w) {
  std::vector<std::size_t> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_u64(trim(item), w));
  return out;
}

std::string format_list(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

template <class F>
auto enum_value(const Where& w, F&& parse, const std::string& s) {
  try {
    return parse(s);
  } catch (const Error& e) {
    w.fail(e.what());
  }
}

struct Key {
  const char* section;
  const char* name;
  std::function<void(RunConfig&, const std::string&, const Where&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define IHB_SIZE_KEY(sec, key, field)                                                            \
  Key {                                                                                          \
    sec, key, [](RunConfig& c, const std::string& v, const Where& w) { c.field = parse_u64(v, w); }, \
        [](const RunConfig& c) { return std::to_string(c.field); }                               \
  }
#define IHB_REAL_KEY(sec, key, field)                                                                \
  Key {                                                                                              \
    sec, key, [](RunConfig& c, const std::string& v, const Where& w) { c.field = parse_double(v, w); }, \
        [](const RunConfig& c) { return format_double(c.field); }                                    \
  }
#define IHB_STR_KEY(sec, key, field)                                                          \
  Key {                                                                                       \
    sec, key, [](RunConfig& c, const std::string& v, const Where&) { c.field = v; },          \
        [](const RunConfig& c) { return c.field; }                                            \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      IHB_STR_KEY("run", "name", name),

      IHB_SIZE_KEY("model", "n_layers", model.n_layers),
      IHB_SIZE_KEY("model", "d_model", model.d_model),
      IHB_SIZE_KEY("model", "d_ffn", model.d_ffn),
      IHB_SIZE_KEY("model", "n_heads", model.n_heads),
      IHB_SIZE_KEY("model", "d_head", model.d_head),
      IHB_SIZE_KEY("model", "vocab_size", model.vocab_size),
      IHB_SIZE_KEY("model", "max_seq_len", model.max_seq_len),
      IHB_REAL_KEY("model", "dropout", model.dropout),
      IHB_REAL_KEY("model", "attention_dropout", model.attention_dropout),
      Key{"model", "variant",
          [](RunConfig& c, const std::string& v, const Where& w) {
            c.model.attention_variant = enum_value(w, parse_variant, v);
          },
          [](const RunConfig& c) { return std::string(to_string(c.model.attention_variant)); }},
      IHB_SIZE_KEY("model", "n_classes", model.n_classes),
      IHB_REAL_KEY("model", "init_std", model.init_std),
      IHB_REAL_KEY("model", "eta_init", model.eta_init),

      IHB_REAL_KEY("train", "learning_rate", train.learning_rate),
      IHB_REAL_KEY("train", "warmup_ratio", train.warmup_ratio),
      Key{"train", "lr_decay",
          [](RunConfig& c, const std::string& v, const Where& w) {
            c.train.lr_decay = enum_value(w, parse_decay, v);
          },
          [](const RunConfig& c) { return std::string(to_string(c.train.lr_decay)); }},
      IHB_SIZE_KEY("train", "batch_size", train.batch_size),
      IHB_SIZE_KEY("train", "accumulation_steps", train.accumulation_steps),
      IHB_SIZE_KEY("train", "epochs", train.epochs),
      IHB_REAL_KEY("train", "adam_eps", train.adam.eps),
      IHB_REAL_KEY("train", "adam_beta1", train.adam.beta1),
      IHB_REAL_KEY("train", "adam_beta2", train.adam.beta2),
      IHB_REAL_KEY("train", "weight_decay", train.adam.weight_decay),
      IHB_SIZE_KEY("train", "seq_len", train.seq_len),
      IHB_SIZE_KEY("train", "max_steps", train.max_steps),
      IHB_SIZE_KEY("train", "seed", train.seed),

      Key{"distill", "regime",
          [](RunConfig& c, const std::string& v, const Where& w) {
            c.plan.regime = enum_value(w, parse_regime, v);
          },
          [](const RunConfig& c) { return std::string(to_string(c.plan.regime)); }},
      Key{"distill", "layer_schedule",
          [](RunConfig& c, const std::string& v, const Where& w) { c.plan.layer_schedule = parse_list(v, w); },
          [](const RunConfig& c) { return format_list(c.plan.layer_schedule); }},
      IHB_REAL_KEY("distill", "temperature", plan.temperature),
      IHB_REAL_KEY("distill", "distill_weight", plan.distill_weight),
      IHB_REAL_KEY("distill", "hidden_weight", plan.hidden_weight),
      Key{"distill", "layer_mapping",
          [](RunConfig& c, const std::string& v, const Where& w) { c.plan.layer_mapping = parse_list(v, w); },
          [](const RunConfig& c) { return format_list(c.plan.layer_mapping); }},

      IHB_STR_KEY("data", "train_path", data.train_path),
      IHB_STR_KEY("data", "eval_path", data.eval_path),
      IHB_REAL_KEY("data", "holdout_fraction", data.holdout_fraction),
      IHB_SIZE_KEY("data", "synthetic_examples", data.synthetic.n_examples),
      IHB_SIZE_KEY("data", "synthetic_classes", data.synthetic.n_classes),
      IHB_SIZE_KEY("data", "synthetic_min_len", data.synthetic.min_len),
      IHB_SIZE_KEY("data", "synthetic_max_len", data.synthetic.max_len),
      IHB_REAL_KEY("data", "synthetic_majority", data.synthetic.majority_prob),
      IHB_SIZE_KEY("data", "synthetic_seed", data.synthetic.seed),
  };
  return table;
}

#undef IHB_SIZE_KEY
#undef IHB_REAL_KEY
#undef IHB_STR_KEY

const std::vector<std::string>& sections() {
  static const std::vector<std::string> s = {"run", "model", "train", "distill", "data"};
  return s;
}

std::string nearest(const std::string& word, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = static_cast<std::size_t>(-1);
  for (const auto& c : candidates) {
    const auto d = levenshtein(word, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t lineno = 0;
  std::vector<std::string> seen;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      const auto& all = sections();
      if (std::find(all.begin(), all.end(), section) == all.end()) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown section [" + section +
                          "]; did you mean [" + nearest(section, all) + "]?");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": key '" + key + "' outside any section");
    }
    const Key* match = nullptr;
    std::vector<std::string> section_keys;
    for (const auto& k : keys()) {
      if (k.section != section) continue;
      section_keys.emplace_back(k.name);
      if (key == k.name) match = &k;
    }
    if (match == nullptr) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "' in [" +
                        section + "]; did you mean '" + nearest(key, section_keys) + "'?");
    }
    const std::string qualified = section + "." + key;
    if (std::find(seen.begin(), seen.end(), qualified) != seen.end()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    seen.push_back(qualified);
    match->set(cfg, value, Where{origin, lineno, key});
  }
  cfg.plan.epochs_per_layer = cfg.train.epochs;
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string serialize_config(const RunConfig& c) {
  std::string out;
  std::string current;
  for (const auto& k : keys()) {
    if (current != k.section) {
      if (!current.empty()) out += "\n";
      current = k.section;
      out += "[" + current + "]\n";
    }
    out += std::string(k.name) + " = " + k.get(c) + "\n";
  }
  return out;
}

namespace {

RunConfig full_scale_base(const std::string& name, Regime regime) {
  RunConfig c;
  c.name = name;
  c.model = EncoderConfig::distilbert();
  c.model.attention_variant = Variant::inhibitor;
  c.train.seq_len = 128;
  c.plan.regime = regime;
  return c;
}

RunConfig full_scale(const std::string& name) {
  if (name == "layerwise") {
    auto c = full_scale_base(name, Regime::layerwise);
    c.train.warmup_ratio = 0.05;
    c.train.learning_rate = 5e-4;
    c.train.batch_size = 16;
    c.train.accumulation_steps = 4;
    c.train.epochs = 2;
    c.train.lr_decay = Decay::cosine;
    return c;
  }
  if (name == "fulllayer") {
    auto c = full_scale_base(name, Regime::full_layer);
    c.train.warmup_ratio = 0.05;
    c.train.learning_rate = 3e-4;
    c.train.batch_size = 16;
    c.train.accumulation_steps = 32;
    c.train.epochs = 3;
    c.train.lr_decay = Decay::cosine;
    return c;
  }
  if (name == "taskkd") {
    auto c = full_scale_base(name, Regime::task_specific);
    c.model.n_classes = 2;
    c.train.warmup_ratio = 0.0;
    c.train.learning_rate = 2e-5;
    c.train.batch_size = 16;
    c.train.accumulation_steps = 0;
    c.train.epochs = 3;
    c.train.lr_decay = Decay::linear;
    c.plan.temperature = 4.0;
    c.plan.distill_weight = 0.5;
    c.plan.hidden_weight = 0.5;
    return c;
  }
  if (name == "finetune") {
    auto c = full_scale_base(name, Regime::finetune);
    c.model.n_classes = 2;
    c.train.warmup_ratio = 0.0;
    c.train.learning_rate = 2e-5;
    c.train.batch_size = 16;
    c.train.epochs = 3;
    c.train.lr_decay = Decay::linear;
    return c;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

RunConfig desk(const std::string& name) {
  RunConfig c = full_scale(name);
  c.name = "desk/" + name;
  const Variant v = c.model.attention_variant;
  const std::size_t classes = c.model.n_classes;
  c.model = EncoderConfig::desk();
  c.model.attention_variant = v;
  c.model.n_classes = classes;
  c.train.seq_len = 16;
  c.data.synthetic = SyntheticTask{};
  if (name == "layerwise") {
    c.train.learning_rate = 3e-3;
    c.train.accumulation_steps = 1;
    c.train.epochs = 8;
  } else if (name == "fulllayer") {
    c.train.learning_rate = 1e-3;
    c.train.accumulation_steps = 1;
    c.train.epochs = 4;
  } else if (name == "taskkd") {
    c.train.learning_rate = 1e-3;
    c.train.epochs = 4;
  } else {
    c.train.learning_rate = 1e-3;
    c.train.epochs = 6;
  }
  return c;
}

std::string canonical(const std::string& name) {
  if (name == "full_layer") return "fulllayer";
  if (name == "task_specific") return "taskkd";
  return name;
}

}  // namespace

std::vector<std::string> builtin_preset_names() {
  return {"layerwise", "fulllayer", "taskkd", "finetune",
          "desk/layerwise", "desk/fulllayer", "desk/taskkd", "desk/finetune"};
}

RunConfig builtin_preset(const std::string& raw) {
  std::string name = raw;
  if (name.size() > 4 && name.substr(name.size() - 4) == ".cfg") name.resize(name.size() - 4);
  RunConfig c = name.rfind("desk/", 0) == 0 ? desk(canonical(name.substr(5))) : full_scale(canonical(name));
  c.plan.epochs_per_layer = c.train.epochs;
  c.validate();
  return c;
}

RunConfig resolve_config(const std::string& path_or_preset) {
  if (std::filesystem::is_regular_file(path_or_preset)) return load_config(path_or_preset);
  const auto names = builtin_preset_names();
  std::string name = path_or_preset;
  if (name.size() > 4 && name.substr(name.size() - 4) == ".cfg") name.resize(name.size() - 4);
  name = canonical(name);
  if (std::find(names.begin(), names.end(), name) != names.end()) return builtin_preset(name);
  throw ConfigError("no config file or preset named '" + path_or_preset + "'");
}

}  // namespace ihb
