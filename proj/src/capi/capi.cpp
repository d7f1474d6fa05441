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

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <json.hpp>
#include <new>
#include <stdexcept>
#include <string>

#include "core/error.hpp"
#include "cost/cost.hpp"
#include "data/checkpoint.hpp"
#include "data/config.hpp"
#include "data/dataset.hpp"
#include "diag/gradcheck_suite.hpp"
#include "distill/distill.hpp"
#include "inhibitor/inhibitor.h"

#ifndef INHIBITOR_VERSION_STRING
#define INHIBITOR_VERSION_STRING "0.0.0"
#endif

struct ihb_config {
  ihb::RunConfig c;
};

struct ihb_dataset {
  ihb::Dataset d;
};

struct ihb_model {
  explicit ihb_model(ihb::ModelState&& s) : m(std::move(s)) {}
  ihb::ModelState m;
};

namespace {

using nlohmann::ordered_json;

thread_local std::string g_last_error;

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

ihb_status status_of(ihb::ErrorKind k) {
  switch (k) {
    case ihb::ErrorKind::dimension: return IHB_ERR_DIMENSION;
    case ihb::ErrorKind::contract: return IHB_ERR_CONTRACT;
    case ihb::ErrorKind::degenerate_reduction: return IHB_ERR_DEGENERATE;
    case ihb::ErrorKind::numeric: return IHB_ERR_NUMERIC;
    case ihb::ErrorKind::input: return IHB_ERR_INPUT;
    case ihb::ErrorKind::config: return IHB_ERR_CONFIG;
    case ihb::ErrorKind::corrupt_checkpoint: return IHB_ERR_CORRUPT_CHECKPOINT;
    case ihb::ErrorKind::io: return IHB_ERR_IO;
    case ihb::ErrorKind::internal: return IHB_ERR_INTERNAL;
  }
  return IHB_ERR_INTERNAL;
}

template <class F>
ihb_status guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return IHB_OK;
  } catch (const InvalidArgument& e) {
    g_last_error = e.what();
    return IHB_ERR_INVALID_ARGUMENT;
  } catch (const ihb::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return IHB_ERR_INTERNAL;
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("json: ") + e.what();
    return IHB_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return IHB_ERR_INTERNAL;
  }
}


template <class T>
T& need(T* p, const char* what) {
  if (p == nullptr) throw InvalidArgument(std::string(what) + " must not be NULL");
  return *p;
}

const char* need_str(const char* p, const char* what) {
  if (p == nullptr) throw InvalidArgument(std::string(what) + " must not be NULL");
  return p;
}

void need_out(const void* p) {
  if (p == nullptr) throw InvalidArgument("output pointer must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

bool is_tsv(const std::string& path) {
  return std::filesystem::path(path).extension() == ".tsv";
}

ihb::Dataset load_any(const std::string& path, bool labeled) {
  return labeled || is_tsv(path) ? ihb::load_tsv(path) : ihb::load_text(path);
}

ihb::LossSink sink_for(ihb_loss_callback cb, void* user) {
  if (cb == nullptr) return {};
  return [cb, user](const ihb::LossRecord& r) { cb(ihb::to_jsonl(r).c_str(), user); };
}

ordered_json phase_json(const ihb::PhaseResult& p) {
  ordered_json j{{"phase", p.phase},
                 {"layer", p.layer},
                 {"steps", p.losses.size()},
                 {"initial_loss", p.losses.empty() ? 0.0 : p.losses.front()},
                 {"final_loss", p.losses.empty() ? 0.0 : p.losses.back()},
                 {"census", p.census},
                 {"changed", p.changed},
                 {"frozen_changed", p.frozen_changed}};
  return j;
}

}  // namespace

extern "C" {

const char* ihb_last_error(void) { return g_last_error.c_str(); }

const char* ihb_status_name(ihb_status s) {
  switch (s) {
    case IHB_OK: return "ok";
    case IHB_ERR_DIMENSION: return "dimension error";
    case IHB_ERR_CONTRACT: return "contract error";
    case IHB_ERR_DEGENERATE: return "degenerate reduction";
    case IHB_ERR_NUMERIC: return "numeric error";
    case IHB_ERR_INPUT: return "input error";
    case IHB_ERR_CONFIG: return "config error";
    case IHB_ERR_CORRUPT_CHECKPOINT: return "corrupt checkpoint";
    case IHB_ERR_IO: return "i/o error";
    case IHB_ERR_INTERNAL: return "internal error";
    case IHB_ERR_INVALID_ARGUMENT: return "invalid argument";
  }
  return "unknown status";
}

const char* ihb_version(void) { return INHIBITOR_VERSION_STRING; }

void ihb_string_free(char* s) { std::free(s); }

// ---- configuration ---------------------------------------------------------

ihb_status ihb_config_resolve(const char* path_or_preset, ihb_config** out) {
  return guard([&] {
    need_out(out);
    *out = new ihb_config{ihb::resolve_config(need_str(path_or_preset, "path_or_preset"))};
  });
}

ihb_status ihb_config_parse(const char* text, ihb_config** out) {
  return guard([&] {
    need_out(out);
    need(text, "text");
    *out = new ihb_config{ihb::parse_config(text)};
  });
}

void ihb_config_free(ihb_config* config) { delete config; }

ihb_status ihb_config_serialize(const ihb_config* config, char** out_text) {
  return guard([&] {
    need_out(out_text);
    *out_text = dup_string(ihb::serialize_config(need(config, "config").c));
  });
}

ihb_status ihb_config_preset_names(char** out_text) {
  return guard([&] {
    need_out(out_text);
    std::string s;
    for (const auto& n : ihb::builtin_preset_names()) s += n + "\n";
    *out_text = dup_string(s);
  });
}

ihb_status ihb_config_set_seed(ihb_config* config, uint64_t seed) {
  return guard([&] { need(config, "config").c.train.seed = seed; });
}

ihb_status ihb_config_seed(const ihb_config* config, uint64_t* out) {
  return guard([&] {
    need_out(out);
    *out = need(config, "config").c.train.seed;
  });
}

ihb_status ihb_config_set_regime(ihb_config* config, const char* regime) {
  return guard([&] {
    auto& c = need(config, "config").c;
    try {
      c.plan.regime = ihb::parse_regime(need_str(regime, "regime"));
    } catch (const ihb::ContractError& e) {
      throw ihb::ConfigError(e.what());
    }
  });
}

ihb_status ihb_config_regime(const ihb_config* config, char** out) {
  return guard([&] {
    need_out(out);
    *out = dup_string(ihb::to_string(need(config, "config").c.plan.regime));
  });
}

ihb_status ihb_config_set_variant(ihb_config* config, const char* variant) {
  return guard([&] {
    auto& c = need(config, "config").c;
    try {
      c.model.attention_variant = ihb::parse_variant(need_str(variant, "variant"));
    } catch (const ihb::ContractError& e) {
      throw ihb::ConfigError(e.what());
    }
  });
}

ihb_status ihb_config_seq_len(const ihb_config* config, size_t* out) {
  return guard([&] {
    need_out(out);
    *out = need(config, "config").c.train.seq_len;
  });
}

ihb_status ihb_config_n_classes(const ihb_config* config, size_t* out) {
  return guard([&] {
    need_out(out);
    *out = need(config, "config").c.model.n_classes;
  });
}

ihb_status ihb_config_full_scale(const ihb_config* config, int* out) {
  return guard([&] {
    need_out(out);
    *out = need(config, "config").c.full_scale() ? 1 : 0;
  });
}

// ---- datasets --------------------------------------------------------------

ihb_status ihb_dataset_load(const char* path, int labeled, ihb_dataset** out) {
  return guard([&] {
    need_out(out);
    need(path, "path");
    *out = new ihb_dataset{labeled ? ihb::load_tsv(path) : ihb::load_text(path)};
  });
}

ihb_status ihb_dataset_from_config(const ihb_config* config, ihb_dataset** train_out, ihb_dataset** eval_out) {
  return guard([&] {
    need_out(train_out);
    const auto& c = need(config, "config").c;
    const bool labeled = c.plan.regime == ihb::Regime::task_specific || c.plan.regime == ihb::Regime::finetune;
    ihb::Dataset all = c.data.train_path.empty() ? ihb::make_synthetic(c.data.synthetic)
                                                 : load_any(c.data.train_path, labeled);
    ihb::Dataset train, eval;
    if (!c.data.eval_path.empty()) {
      train = std::move(all);
      eval = load_any(c.data.eval_path, labeled);
    } else {
      std::tie(train, eval) = ihb::split_holdout(all, c.data.holdout_fraction);
    }
    if (train.examples.empty()) throw ihb::InputError("training split is empty");
    auto* t = new ihb_dataset{std::move(train)};
    if (eval_out != nullptr) {
      try {
        *eval_out = new ihb_dataset{std::move(eval)};
      } catch (...) {
        delete t;
        throw;
      }
    }
    *train_out = t;
  });
}

ihb_status ihb_dataset_save(const ihb_dataset* data, const char* path, int labeled) {
  return guard([&] {
    const auto& d = need(data, "data").d;
    need(path, "path");
    if (labeled) {
      ihb::save_tsv(d, path);
    } else {
      ihb::save_text(d, path);
    }
  });
}

ihb_status ihb_dataset_size(const ihb_dataset* data, size_t* out) {
  return guard([&] {
    need_out(out);
    *out = need(data, "data").d.examples.size();
  });
}

void ihb_dataset_free(ihb_dataset* data) { delete data; }

// ---- models ----------------------------------------------------------------

ihb_status ihb_model_init(const ihb_config* config, const char* variant, uint64_t seed, ihb_model** out) {
  return guard([&] {
    need_out(out);
    ihb::EncoderConfig mc = need(config, "config").c.model;
    if (variant != nullptr) mc.attention_variant = ihb::parse_variant(variant);
    *out = new ihb_model(ihb::ModelState::init(mc, seed));
  });
}

ihb_status ihb_model_load(const char* path, ihb_model** out) {
  return guard([&] {
    need_out(out);
    *out = new ihb_model(ihb::load_checkpoint(need_str(path, "path")));
  });
}

ihb_status ihb_model_save(const ihb_model* model, const char* path) {
  return guard([&] { ihb::save_checkpoint(need(model, "model").m, need_str(path, "path")); });
}

ihb_status ihb_model_student(const ihb_model* teacher, const char* variant, ihb_model** out) {
  return guard([&] {
    need_out(out);
    const auto v = ihb::parse_variant(need_str(variant, "variant"));
    *out = new ihb_model(ihb::init_student_from_teacher(need(teacher, "teacher").m, v));
  });
}

ihb_status ihb_model_ensure_classifier(ihb_model* model, size_t n_classes, uint64_t seed) {
  return guard([&] {
    auto& m = need(model, "model").m;
    if (m.classifier && m.config().n_classes == n_classes) return;
    m.attach_classifier(n_classes, seed);
  });
}

ihb_status ihb_model_describe(const ihb_model* model, char** out_json) {
  return guard([&] {
    need_out(out_json);
    const auto& m = need(model, "model").m;
    const auto& c = m.config();
    ordered_json params = ordered_json::array();
    for (const auto& p : m.parameters()) params.push_back({{"name", p.name}, {"shape", p.tensor.shape()}});
    const ordered_json j{{"config",
                          {{"n_layers", c.n_layers},
                           {"d_model", c.d_model},
                           {"d_ffn", c.d_ffn},
                           {"n_heads", c.n_heads},
                           {"d_head", c.d_head},
                           {"vocab_size", c.vocab_size},
                           {"max_seq_len", c.max_seq_len},
                           {"variant", ihb::to_string(c.attention_variant)},
                           {"n_classes", c.n_classes}}},
                         {"parameters", params}};
    *out_json = dup_string(j.dump());
  });
}

void ihb_model_free(ihb_model* model) { delete model; }

// ---- training and evaluation -----------------------------------------------

ihb_status ihb_distill(const ihb_config* config, const ihb_model* teacher, ihb_model* student,
                       const ihb_dataset* data, ihb_loss_callback callback, void* user, char** summary_json) {
  return guard([&] {
    const auto& c = need(config, "config").c;
    const auto& t = need(teacher, "teacher").m;
    auto& s = need(student, "student").m;
    const auto& d = need(data, "data").d;
    const auto sink = sink_for(callback, user);
    ihb::RunResult r;
    switch (c.plan.regime) {
      case ihb::Regime::layerwise:
        r = ihb::run_layerwise(t, s, d, c.plan, c.train, sink);
        break;
      case ihb::Regime::full_layer:
        r = ihb::run_full_layer(t, s, d, c.plan, c.train, sink);
        break;
      case ihb::Regime::task_specific:
        r = ihb::run_task_specific(t, s, d, c.plan, c.train, sink);
        break;
      case ihb::Regime::finetune:
        throw ihb::ConfigError("regime 'finetune' is not a distillation regime");
    }
    if (summary_json != nullptr) {
      ordered_json phases = ordered_json::array();
      for (const auto& p : r.phases) phases.push_back(phase_json(p));
      const ordered_json j{{"regime", ihb::to_string(c.plan.regime)}, {"steps", r.steps}, {"phases", phases}};
      *summary_json = dup_string(j.dump());
    }
  });
}

ihb_status ihb_finetune(const ihb_config* config, ihb_model* model, const ihb_dataset* train,
                        const ihb_dataset* eval, ihb_loss_callback callback, void* user, char** summary_json) {
  return guard([&] {
    const auto& c = need(config, "config").c;
    auto& m = need(model, "model").m;
    const ihb::Dataset empty;
    const auto r = ihb::finetune(m, need(train, "train").d, eval ? eval->d : empty, c.train, sink_for(callback, user));
    if (summary_json != nullptr) {
      const ordered_json j{{"regime", "finetune"},
                           {"steps", r.losses.size()},
                           {"initial_loss", r.losses.empty() ? 0.0 : r.losses.front()},
                           {"final_loss", r.losses.empty() ? 0.0 : r.losses.back()},
                           {"epoch_accuracy", r.epoch_accuracy}};
      *summary_json = dup_string(j.dump());
    }
  });
}

ihb_status ihb_eval_accuracy(const ihb_model* model, const ihb_dataset* data, size_t seq_len, double* out) {
  return guard([&] {
    need_out(out);
    *out = ihb::evaluate_accuracy(need(model, "model").m, need(data, "data").d, seq_len);
  });
}

ihb_status ihb_eval_hidden_mse(const ihb_model* teacher, const ihb_model* student, const ihb_dataset* data,
                               size_t seq_len, double* out) {
  return guard([&] {
    need_out(out);
    *out = ihb::evaluate_hidden_mse(need(teacher, "teacher").m, need(student, "student").m, need(data, "data").d,
                                    seq_len);
  });
}

// ---- diagnostics -----------------------------------------------------------

ihb_status ihb_gradcheck(const char* variant, uint64_t seed, size_t trials, char** out_json) {
  return guard([&] {
    need_out(out_json);
    const auto v = ihb::parse_variant(need_str(variant, "variant"));
    ordered_json rows = ordered_json::array();
    for (const auto& r : ihb::run_gradcheck_suite(v, seed, trials)) {
      rows.push_back({{"op", r.op}, {"instances", r.instances}, {"max_rel_error", r.max_rel_error}});
    }
    *out_json = dup_string(rows.dump());
  });
}

ihb_status ihb_bench(const char* grid, char** out_csv, char** out_table) {
  return guard([&] {
    const auto shapes = grid ? ihb::parse_grid(grid) : ihb::default_grid();
    const auto rows = ihb::compare_report(shapes);
    std::string csv = ihb::cost_csv(rows);
    std::string table = ihb::cost_table(rows);
    char* c = out_csv ? dup_string(csv) : nullptr;
    if (out_table) {
      try {
        *out_table = dup_string(table);
      } catch (...) {
        std::free(c);
        throw;
      }
    }
    if (out_csv) *out_csv = c;
  });
}

}  // extern "C"
