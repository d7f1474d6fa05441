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

// Command-line front end. Talks to the library through the C API only.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "inhibitor/inhibitor.h"

#ifndef INHIBITOR_GIT_DESCRIBE
#define INHIBITOR_GIT_DESCRIBE "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr double kGradTolerance = 1e-5;

/// Carries an exit code out of a command body.
struct Exit {
  int code;
  std::string message;
};

[[noreturn]] void fail(ihb_status s, const std::string& context) {
  const bool usage = s == IHB_ERR_CONFIG || s == IHB_ERR_INVALID_ARGUMENT;
  throw Exit{usage ? kExitUsage : kExitFailure,
             context + ": " + ihb_status_name(s) + ": " + ihb_last_error()};
}

void check(ihb_status s, const std::string& context) {
  if (s != IHB_OK) fail(s, context);
}

struct ConfigDel { void operator()(ihb_config* p) const { ihb_config_free(p); } };
struct DatasetDel { void operator()(ihb_dataset* p) const { ihb_dataset_free(p); } };
struct ModelDel { void operator()(ihb_model* p) const { ihb_model_free(p); } };
using ConfigPtr = std::unique_ptr<ihb_config, ConfigDel>;
using DatasetPtr = std::unique_ptr<ihb_dataset, DatasetDel>;
using ModelPtr = std::unique_ptr<ihb_model, ModelDel>;

std::string take(char* s) {
  std::string out = s ? s : "";
  ihb_string_free(s);
  return out;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Exit{kExitFailure, "cannot write " + path.string()};
}

/// Run id recorded by the manifest next to `checkpoint`, if any.
std::optional<std::string> lineage_of(const std::string& checkpoint) {
  const fs::path manifest = fs::path(checkpoint).parent_path() / "manifest.json";
  if (checkpoint.empty() || !fs::is_regular_file(manifest)) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(read_text(manifest.string()));
    if (j.contains("run_id")) return j.at("run_id").get<std::string>();
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

void ensure_fresh(const std::string& out_dir) {
  if (fs::exists(out_dir)) {
    throw Exit{kExitFailure, "output directory '" + out_dir + "' already exists; refusing to overwrite"};
  }
}

/// Output directory plus manifest bookkeeping for one command.
class Run {
 public:
  Run(std::string command, std::string out_dir) : command_(std::move(command)), dir_(std::move(out_dir)) {
    started_ = utc_now();
    if (fs::exists(dir_)) {
      throw Exit{kExitFailure, "output directory '" + dir_.string() + "' already exists; refusing to overwrite"};
    }
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Exit{kExitFailure, "cannot create '" + dir_.string() + "': " + ec.message()};
  }

  const fs::path& dir() const { return dir_; }
  fs::path file(const char* name) const { return dir_ / name; }

  void set(const std::string& key, ordered_json value) { extra_[key] = std::move(value); }
  void identity(const std::string& config_ref, const std::string& config_text, std::uint64_t seed,
                const std::vector<std::string>& inputs) {
    config_ref_ = config_ref;
    seed_ = seed;
    std::uint64_t h = fnv1a(command_);
    h = fnv1a(config_text, h);
    h = fnv1a(std::to_string(seed), h);
    h = fnv1a(fs::absolute(dir_).lexically_normal().string(), h);
    for (const auto& in : inputs) h = fnv1a(in, h);
    run_id_ = hex16(h);
  }
  const std::string& run_id() const { return run_id_; }

  void finish() const {
    ordered_json m;
    m["command"] = command_;
    m["run_id"] = run_id_;
    m["config"] = config_ref_;
    m["seed"] = seed_;
    m["version"] = INHIBITOR_GIT_DESCRIBE;
    m["started_at"] = started_;
    m["finished_at"] = utc_now();
    m["output_dir"] = dir_.string();
    for (const auto& [k, v] : extra_.items()) m[k] = v;
    write_text(file("manifest.json"), m.dump(2) + "\n");
  }

 private:
  std::string command_;
  fs::path dir_;
  std::string started_;
  std::string config_ref_;
  std::uint64_t seed_ = 0;
  std::string run_id_;
  ordered_json extra_ = ordered_json::object();
};

struct LossLog {
  std::ofstream out;
  static void callback(const char* record, void* user) {
    auto* self = static_cast<LossLog*>(user);
    self->out << record << '\n';
  }
};

/// --seed, else INHIBITOR_SEED, else the config's own seed.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, ihb_config* cfg) {
  std::uint64_t seed = 0;
  if (flag) {
    seed = *flag;
  } else if (const char* env = std::getenv("INHIBITOR_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0' || env[0] == '-') throw Exit{kExitUsage, std::string("INHIBITOR_SEED is not an integer: ") + env};
    seed = v;
  } else {
    check(ihb_config_seed(cfg, &seed), "config");
    return seed;
  }
  check(ihb_config_set_seed(cfg, seed), "config");
  return seed;
}

ConfigPtr load_config(const std::string& ref) {
  ihb_config* c = nullptr;
  const ihb_status s = ihb_config_resolve(ref.c_str(), &c);
  if (s != IHB_OK) {
    // A missing file or unknown preset is a usage problem.
    throw Exit{kExitUsage, "config '" + ref + "': " + ihb_status_name(s) + ": " + ihb_last_error()};
  }
  ConfigPtr cfg(c);
  int full = 0;
  check(ihb_config_full_scale(cfg.get(), &full), "config");
  if (full) {
    std::cerr << "warning: '" << ref
              << "' describes a full-scale model; expect very long runtimes and several GB of memory. "
                 "The desk/ presets are sized for a laptop.\n";
  }
  return cfg;
}

ModelPtr load_model(const std::string& path, const char* what) {
  ihb_model* m = nullptr;
  const ihb_status s = ihb_model_load(path.c_str(), &m);
  if (s != IHB_OK) {
    throw Exit{kExitFailure, std::string("cannot load ") + what + " '" + path + "': " + ihb_last_error()};
  }
  return ModelPtr(m);
}

std::pair<DatasetPtr, DatasetPtr> config_data(ihb_config* cfg) {
  ihb_dataset* tr = nullptr;
  ihb_dataset* ev = nullptr;
  check(ihb_dataset_from_config(cfg, &tr, &ev), "data");
  return {DatasetPtr(tr), DatasetPtr(ev)};
}

// ---------------------------------------------------------------------------

struct GradcheckArgs {
  std::string variant = "all";
  std::size_t trials = 50;
};

int cmd_gradcheck(const GradcheckArgs& a, std::optional<std::uint64_t> seed_flag) {
  std::uint64_t seed = 42;
  if (seed_flag) {
    seed = *seed_flag;
  } else if (const char* env = std::getenv("INHIBITOR_SEED"); env && *env) {
    char* end = nullptr;
    seed = std::strtoull(env, &end, 10);
    if (*end != '\0') throw Exit{kExitUsage, std::string("INHIBITOR_SEED is not an integer: ") + env};
  }
  std::vector<std::string> variants;
  if (a.variant == "all") {
    variants = {"inhibitor", "dot_product"};
  } else {
    variants = {a.variant};
  }
  bool ok = true;
  std::printf("%-12s %-20s %9s %14s  %s\n", "variant", "op", "instances", "max_rel_error", "status");
  for (const auto& v : variants) {
    char* json = nullptr;
    check(ihb_gradcheck(v.c_str(), seed, a.trials, &json), "gradcheck");
    for (const auto& row : nlohmann::json::parse(take(json))) {
      const double err = row.at("max_rel_error").get<double>();
      const bool pass = err < kGradTolerance;
      ok = ok && pass;
      std::printf("%-12s %-20s %9zu %14.6e  %s\n", v.c_str(), row.at("op").get<std::string>().c_str(),
                  row.at("instances").get<std::size_t>(), err, pass ? "ok" : "FAIL");
    }
  }
  return ok ? kExitOk : kExitFailure;
}

struct TrainArgs {
  std::string config;
  std::string out;
  std::string teacher;
  std::string student;
  std::string model;
  std::string variant;
  std::string phase;
  std::optional<std::uint64_t> seed;
};

const char* default_config_for(const std::string& phase) {
  if (phase == "layerwise") return "desk/layerwise";
  if (phase == "full") return "desk/fulllayer";
  if (phase == "task") return "desk/taskkd";
  return "desk/finetune";
}

const char* regime_for(const std::string& phase) {
  if (phase == "layerwise") return "layerwise";
  if (phase == "full") return "full_layer";
  if (phase == "task") return "task_specific";
  return "finetune";
}

int cmd_distill(const TrainArgs& a) {
  ensure_fresh(a.out);
  const std::string config_ref = a.config.empty() ? default_config_for(a.phase) : a.config;
  ConfigPtr cfg = load_config(config_ref);
  check(ihb_config_set_regime(cfg.get(), regime_for(a.phase)), "config");
  const std::uint64_t seed = resolve_seed(a.seed, cfg.get());

  ModelPtr teacher = load_model(a.teacher, "teacher");
  ModelPtr student;
  if (!a.student.empty()) {
    student = load_model(a.student, "student");
  } else {
    ihb_model* s = nullptr;
    check(ihb_model_student(teacher.get(), a.variant.empty() ? "inhibitor" : a.variant.c_str(), &s), "student");
    student.reset(s);
  }
  auto [train, eval] = config_data(cfg.get());

  Run run("distill " + a.phase, a.out);
  const std::string config_text = take([&] {
    char* t = nullptr;
    check(ihb_config_serialize(cfg.get(), &t), "config");
    return t;
  }());
  run.identity(config_ref, config_text, seed, {read_text(a.teacher), a.student.empty() ? "" : read_text(a.student)});
  run.set("phase", a.phase);
  run.set("teacher", a.teacher);
  run.set("teacher_run_id", lineage_of(a.teacher) ? ordered_json(*lineage_of(a.teacher)) : ordered_json(nullptr));
  run.set("student_init", a.student.empty() ? ordered_json(nullptr) : ordered_json(a.student));
  const auto parent = lineage_of(a.student);
  run.set("parent_run_id", parent ? ordered_json(*parent) : ordered_json(nullptr));
  write_text(run.file("config.cfg"), config_text);

  LossLog log{std::ofstream(run.file("losses.jsonl"), std::ios::binary)};
  char* summary = nullptr;
  check(ihb_distill(cfg.get(), teacher.get(), student.get(), train.get(), &LossLog::callback, &log, &summary),
        "distill");
  log.out.flush();
  ordered_json metrics = ordered_json::parse(take(summary));

  std::size_t seq_len = 0;
  check(ihb_config_seq_len(cfg.get(), &seq_len), "config");
  std::size_t n_eval = 0;
  check(ihb_dataset_size(eval.get(), &n_eval), "data");
  const ihb_dataset* probe = n_eval > 0 ? eval.get() : train.get();
  if (a.phase != "task") {
    double mse = 0.0;
    check(ihb_eval_hidden_mse(teacher.get(), student.get(), probe, seq_len, &mse), "eval");
    metrics["eval_hidden_mse"] = mse;
  } else {
    double acc = 0.0;
    check(ihb_eval_accuracy(student.get(), probe, seq_len, &acc), "eval");
    metrics["eval_accuracy"] = acc;
  }
  check(ihb_model_save(student.get(), run.file("model.ckpt").c_str()), "save");
  write_text(run.file("metrics.json"), metrics.dump(2) + "\n");
  run.finish();
  std::printf("run %s: %s finished, %zu optimizer steps, outputs in %s\n", run.run_id().c_str(), a.phase.c_str(),
              metrics.value("steps", std::size_t{0}), run.dir().c_str());
  return kExitOk;
}

int cmd_finetune(const TrainArgs& a, const std::string& command) {
  ensure_fresh(a.out);
  const std::string config_ref = a.config.empty() ? "desk/finetune" : a.config;
  ConfigPtr cfg = load_config(config_ref);
  check(ihb_config_set_regime(cfg.get(), "finetune"), "config");
  if (!a.variant.empty()) check(ihb_config_set_variant(cfg.get(), a.variant.c_str()), "config");
  const std::uint64_t seed = resolve_seed(a.seed, cfg.get());

  ModelPtr model;
  if (!a.model.empty()) {
    model = load_model(a.model, "model");
  } else {
    ihb_model* m = nullptr;
    check(ihb_model_init(cfg.get(), nullptr, seed, &m), "init");
    model.reset(m);
  }
  auto [train, eval] = config_data(cfg.get());

  Run run(command, a.out);
  const std::string config_text = take([&] {
    char* t = nullptr;
    check(ihb_config_serialize(cfg.get(), &t), "config");
    return t;
  }());
  run.identity(config_ref, config_text, seed, {a.model.empty() ? "" : read_text(a.model)});
  const auto parent = lineage_of(a.model);
  run.set("model_init", a.model.empty() ? ordered_json(nullptr) : ordered_json(a.model));
  run.set("parent_run_id", parent ? ordered_json(*parent) : ordered_json(nullptr));
  write_text(run.file("config.cfg"), config_text);

  // A distilled student may lack a classifier head.
  std::size_t n_classes = 0;
  {
    char* desc = nullptr;
    check(ihb_model_describe(model.get(), &desc), "model");
    n_classes = nlohmann::json::parse(take(desc)).at("config").at("n_classes").get<std::size_t>();
  }
  if (n_classes == 0) {
    std::size_t want = 0;
    check(ihb_config_n_classes(cfg.get(), &want), "config");
    check(ihb_model_ensure_classifier(model.get(), want == 0 ? 2 : want, seed), "classifier");
  }

  LossLog log{std::ofstream(run.file("losses.jsonl"), std::ios::binary)};
  char* summary = nullptr;
  check(ihb_finetune(cfg.get(), model.get(), train.get(), eval.get(), &LossLog::callback, &log, &summary),
        "finetune");
  log.out.flush();
  ordered_json metrics = ordered_json::parse(take(summary));
  check(ihb_model_save(model.get(), run.file("model.ckpt").c_str()), "save");
  write_text(run.file("metrics.json"), metrics.dump(2) + "\n");
  run.finish();
  const auto& acc = metrics.at("epoch_accuracy");
  std::printf("run %s: %s finished, held-out accuracy %.4f, outputs in %s\n", run.run_id().c_str(),
              command.c_str(), acc.empty() ? 0.0 : acc.back().get<double>(), run.dir().c_str());
  return kExitOk;
}

struct EvalArgs {
  std::string model;
  std::string data;
  std::string metric = "accuracy";
  std::string teacher;
  std::size_t seq_len = 16;
  std::string out;
};

int cmd_eval(const EvalArgs& a) {
  if (a.metric == "mse" && a.teacher.empty()) throw Exit{kExitUsage, "--metric mse needs --teacher"};
  ModelPtr model = load_model(a.model, "model");
  ihb_dataset* d = nullptr;
  const bool labeled = a.metric == "accuracy";
  if (ihb_dataset_load(a.data.c_str(), labeled ? 1 : 0, &d) != IHB_OK) {
    throw Exit{kExitFailure, "cannot load data '" + a.data + "': " + ihb_last_error()};
  }
  DatasetPtr data(d);
  double value = 0.0;
  if (labeled) {
    check(ihb_eval_accuracy(model.get(), data.get(), a.seq_len, &value), "eval");
  } else {
    ModelPtr teacher = load_model(a.teacher, "teacher");
    check(ihb_eval_hidden_mse(teacher.get(), model.get(), data.get(), a.seq_len, &value), "eval");
  }
  ordered_json metrics{{"metric", a.metric}, {"value", value}, {"model", a.model}, {"data", a.data}};
  if (!a.teacher.empty()) metrics["teacher"] = a.teacher;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  std::printf("%s %s\n", a.metric.c_str(), buf);
  if (!a.out.empty()) {
    Run run("eval", a.out);
    run.identity("", a.metric, 0, {read_text(a.model), read_text(a.data), a.teacher});
    write_text(run.file("metrics.json"), metrics.dump(2) + "\n");
    run.finish();
  }
  return kExitOk;
}

int cmd_bench(const std::string& grid, const std::string& out) {
  char* csv = nullptr;
  char* table = nullptr;
  const ihb_status s = ihb_bench(grid.empty() ? nullptr : grid.c_str(), &csv, &table);
  if (s == IHB_ERR_CONFIG) throw Exit{kExitUsage, std::string("bad --grid: ") + ihb_last_error()};
  check(s, "bench");
  const std::string csv_text = take(csv);
  const std::string table_text = take(table);
  std::fputs(table_text.c_str(), stdout);
  if (!out.empty()) {
    Run run("bench", out);
    run.identity("", grid, 0, {});
    run.set("grid", grid.empty() ? ordered_json("default") : ordered_json(grid));
    write_text(run.file("report.csv"), csv_text);
    write_text(run.file("report.txt"), table_text);
    run.finish();
  }
  return kExitOk;
}

int cmd_make_data(const std::string& config_ref, const std::string& out, bool text,
                  std::optional<std::uint64_t> seed) {
  ConfigPtr cfg = load_config(config_ref);
  (void)seed;
  ihb_dataset* tr = nullptr;
  ihb_dataset* ev = nullptr;
  check(ihb_dataset_from_config(cfg.get(), &tr, &ev), "data");
  DatasetPtr train(tr), eval(ev);
  if (fs::exists(out)) throw Exit{kExitFailure, "'" + out + "' already exists; refusing to overwrite"};
  const fs::path base(out);
  fs::create_directories(base);
  const char* ext = text ? ".txt" : ".tsv";
  check(ihb_dataset_save(train.get(), (base / (std::string("train") + ext)).c_str(), text ? 0 : 1), "save");
  check(ihb_dataset_save(eval.get(), (base / (std::string("eval") + ext)).c_str(), text ? 0 : 1), "save");
  std::printf("wrote %s and %s\n", (base / (std::string("train") + ext)).c_str(),
              (base / (std::string("eval") + ext)).c_str());
  return kExitOk;
}

int cmd_show_config(const std::string& config_ref) {
  ConfigPtr cfg = load_config(config_ref);
  char* text = nullptr;
  check(ihb_config_serialize(cfg.get(), &text), "config");
  std::fputs(take(text).c_str(), stdout);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inhibitor attention: distillation, fine-tuning, gradient checks and cost reports"};
  app.set_version_flag("--version", std::string(INHIBITOR_GIT_DESCRIBE) + " (library " + ihb_version() + ")");
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Random seed (falls back to INHIBITOR_SEED, then the config)");
  };

  GradcheckArgs gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  add_seed(gradcheck);
  gradcheck->add_option("--variant", gc.variant, "inhibitor, dot_product or all")
      ->check(CLI::IsMember({"inhibitor", "dot_product", "all"}));
  gradcheck->add_option("--trials", gc.trials, "Random instances per op")->check(CLI::PositiveNumber);

  TrainArgs distill_args;
  auto* distill = app.add_subcommand("distill", "Distill a student from a teacher checkpoint");
  add_seed(distill);
  distill->add_option("--phase", distill_args.phase, "layerwise, full or task")
      ->required()
      ->check(CLI::IsMember({"layerwise", "full", "task"}));
  distill->add_option("--config", distill_args.config, "Config file or preset (default: desk/<phase>)");
  distill->add_option("--teacher", distill_args.teacher, "Teacher checkpoint")->required();
  distill->add_option("--student", distill_args.student, "Start from this student checkpoint");
  distill->add_option("--variant", distill_args.variant, "Student attention variant when starting from the teacher")
      ->check(CLI::IsMember({"inhibitor", "dot_product"}));
  distill->add_option("--out", distill_args.out, "New output directory")->required();

  TrainArgs ft_args;
  auto* finetune = app.add_subcommand("finetune", "Fine-tune a classifier on a labeled task");
  add_seed(finetune);
  finetune->add_option("--config", ft_args.config, "Config file or preset (default: desk/finetune)");
  finetune->add_option("--model", ft_args.model, "Start from this checkpoint (default: fresh model)");
  finetune->add_option("--variant", ft_args.variant, "Attention variant of a fresh model")
      ->check(CLI::IsMember({"inhibitor", "dot_product"}));
  finetune->add_option("--out", ft_args.out, "New output directory")->required();

  TrainArgs teacher_args;
  auto* init_teacher = app.add_subcommand(
      "init-teacher", "Train a seeded dot-product model on the synthetic task as a stand-in teacher");
  add_seed(init_teacher);
  init_teacher->add_option("--config", teacher_args.config, "Config file or preset (default: desk/finetune)");
  init_teacher->add_option("--out", teacher_args.out, "New output directory")->required();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a dataset");
  eval->add_option("--model", ev.model, "Checkpoint to evaluate")->required();
  eval->add_option("--data", ev.data, "Labeled TSV (accuracy) or text file (mse)")->required();
  eval->add_option("--metric", ev.metric, "accuracy or mse")->check(CLI::IsMember({"accuracy", "mse"}));
  eval->add_option("--teacher", ev.teacher, "Reference checkpoint for --metric mse");
  eval->add_option("--seq-len", ev.seq_len, "Tokens per sequence")->check(CLI::PositiveNumber);
  eval->add_option("--out", ev.out, "Optional new output directory for metrics.json");

  std::string grid, bench_out;
  auto* bench = app.add_subcommand("bench", "Operation-count comparison of the two attention variants");
  bench->add_option("--grid", grid, "Shapes, e.g. \"n=2,d=2,dv=2;n=512,d=64,dv=64\"");
  bench->add_option("--out", bench_out, "New output directory for report.csv");

  std::string data_config = "desk/finetune", data_out;
  bool data_text = false;
  auto* make_data = app.add_subcommand("make-data", "Write the synthetic corpus as train/eval files");
  add_seed(make_data);
  make_data->add_option("--config", data_config, "Config file or preset");
  make_data->add_option("--out", data_out, "New output directory")->required();
  make_data->add_flag("--text", data_text, "Unlabeled text instead of TSV");

  std::string show_ref;
  auto* show = app.add_subcommand("show-config", "Print a config in canonical form");
  show->add_option("config", show_ref, "Config file or preset")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    (void)app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gradcheck) return cmd_gradcheck(gc, seed);
    if (*distill) {
      distill_args.seed = seed;
      return cmd_distill(distill_args);
    }
    if (*finetune) {
      ft_args.seed = seed;
      return cmd_finetune(ft_args, "finetune");
    }
    if (*init_teacher) {
      teacher_args.seed = seed;
      teacher_args.variant = "dot_product";
      return cmd_finetune(teacher_args, "init-teacher");
    }
    if (*eval) return cmd_eval(ev);
    if (*bench) return cmd_bench(grid, bench_out);
    if (*make_data) return cmd_make_data(data_config, data_out, data_text, seed);
    if (*show) return cmd_show_config(show_ref);
  } catch (const Exit& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
