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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "core/error.hpp"
#include "data/checkpoint.hpp"
#include "data/config.hpp"
#include "data/dataset.hpp"
#include "data/tokenizer.hpp"

using namespace ihb;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ihb_data_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

}  // namespace

TEST_CASE("byte-level tokenizer") {
  const Tokenizer t = Tokenizer::byte_level();
  CHECK(t.encode("") == std::vector<std::size_t>{kClsId});
  CHECK(t.encode("AB") == std::vector<std::size_t>{2, 69, 70});
  CHECK(t.vocab_size() == 260);
  std::mt19937_64 eng(1);
  for (int i = 0; i < 1000; ++i) {
    std::string s(eng() % 40, '\0');
    for (auto& c : s) c = static_cast<char>(eng() % 256);
    CHECK(t.decode(t.encode(s)) == s);
  }
}

TEST_CASE("whitespace tokenizer ranks by frequency then lexicographically") {
  const std::vector<std::string> corpus = {"b a c", "a b", "a d"};
  const Tokenizer t = Tokenizer::whitespace(corpus, kFirstFreeId + 2);
  CHECK(t.encode("a b c") == std::vector<std::size_t>{kClsId, 4, 5, kUnkId});
}

TEST_CASE("batch_iter determinism, remainders and non-empty rows") {
  Dataset d;
  for (int i = 0; i < 5; ++i) d.examples.push_back({std::string(static_cast<std::size_t>(i) * 3, 'x'), std::nullopt});
  const Tokenizer tok = Tokenizer::byte_level();
  const auto a = batch_iter(d, tok, 2, 6, 7);
  const auto b = batch_iter(d, tok, 2, 6, 7);
  REQUIRE(a.size() == 3);
  CHECK(a[0].size == 2);
  CHECK(a[1].size == 2);
  CHECK(a[2].size == 1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].ids == b[i].ids);
    CHECK(a[i].valid == b[i].valid);
    for (std::size_t r = 0; r < a[i].size; ++r) CHECK(a[i].row_valid(r)[0] == 1);
  }
  CHECK_THROWS_AS(batch_iter(Dataset{}, tok, 2, 6, 7), InputError);
}

TEST_CASE("synthetic task labels follow the planted majority") {
  const Dataset d = make_synthetic(SyntheticTask{});
  CHECK(d.examples.size() == 512);
  CHECK(d.n_classes() == 2);
  std::size_t ones = 0;
  for (const auto& e : d.examples) {
    CHECK(e.label == synthetic_label(e.text, 2));
    ones += *e.label;
  }
  CHECK(ones > 150);
  CHECK(ones < 362);
  const auto [tr, ev] = split_holdout(d, 0.2);
  CHECK(ev.examples.size() == 102);
  CHECK(tr.examples.size() + ev.examples.size() == 512);
}

TEST_CASE("tsv and text round trips, with located errors") {
  TempDir tmp;
  Dataset d;
  d.examples = {{"alpha beta", 0}, {"gamma", 1}};
  save_tsv(d, tmp.file("d.tsv"));
  const Dataset back = load_tsv(tmp.file("d.tsv"));
  REQUIRE(back.examples.size() == 2);
  CHECK(back.examples[1].text == "gamma");
  CHECK(back.examples[1].label == 1u);
  save_text(d, tmp.file("d.txt"));
  CHECK(load_text(tmp.file("d.txt")).examples[0].text == "alpha beta");
  spit(tmp.file("bad.tsv"), "0\tok\nx\tbad\n");
  try {
    load_tsv(tmp.file("bad.tsv"));
    FAIL("expected an input error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  CHECK_THROWS_AS(load_text(tmp.file("missing.txt")), Error);
}

TEST_CASE("checkpoint save, load, save is byte-identical") {
  TempDir tmp;
  EncoderConfig c = EncoderConfig::desk();
  c.attention_variant = Variant::inhibitor;
  c.n_classes = 2;
  const ModelState m = ModelState::init(c, 13);
  save_checkpoint(m, tmp.file("a.ckpt"));
  const ModelState back = load_checkpoint(tmp.file("a.ckpt"));
  save_checkpoint(back, tmp.file("b.ckpt"));
  CHECK(slurp(tmp.file("a.ckpt")) == slurp(tmp.file("b.ckpt")));
  CHECK(back.config() == c);
  for (std::size_t i = 0; i < m.parameters().size(); ++i) {
    const auto x = m.parameters()[i].tensor.data();
    const auto y = back.parameters()[i].tensor.data();
    CHECK(std::equal(x.begin(), x.end(), y.begin()));
  }
}

TEST_CASE("checkpoint manifest lists the inhibitor scalars") {
  TempDir tmp;
  EncoderConfig c = EncoderConfig::desk();
  c.attention_variant = Variant::inhibitor;
  save_checkpoint(ModelState::init(c, 1), tmp.file("m.ckpt"));
  const CheckpointInfo info = inspect_checkpoint(tmp.file("m.ckpt"));
  std::size_t scalars = 0;
  for (const auto& t : info.tensors) {
    for (const char* s : {".gamma", ".eta", ".delta"}) {
      if (t.name.size() > 6 && t.name.ends_with(s)) {
        ++scalars;
        CHECK(t.shape == Shape{1});
      }
    }
  }
  CHECK(scalars == 2 * 4 * 3);
  CHECK(info.blob_offset % kBlobAlignment == 0);
}

TEST_CASE("single-byte flips are detected") {
  TempDir tmp;
  save_checkpoint(ModelState::init(EncoderConfig::desk(), 2), tmp.file("m.ckpt"));
  const std::string good = slurp(tmp.file("m.ckpt"));
  const CheckpointInfo info = inspect_checkpoint(tmp.file("m.ckpt"));
  std::mt19937_64 eng(3);
  std::vector<std::size_t> offsets = {0, 5, 9, 17, 25, info.blob_offset - 1, info.blob_offset, good.size() - 1};
  for (int i = 0; i < 40; ++i) offsets.push_back(eng() % good.size());
  for (std::size_t off : offsets) {
    std::string bad = good;
    bad[off] = static_cast<char>(bad[off] ^ 0x10);
    spit(tmp.file("bad.ckpt"), bad);
    CHECK_THROWS_AS(load_checkpoint(tmp.file("bad.ckpt")), CorruptCheckpointError);
  }
  spit(tmp.file("short.ckpt"), good.substr(0, good.size() - 8));
  CHECK_THROWS_AS(load_checkpoint(tmp.file("short.ckpt")), CorruptCheckpointError);
  spit(tmp.file("long.ckpt"), good + "x");
  CHECK_THROWS_AS(load_checkpoint(tmp.file("long.ckpt")), CorruptCheckpointError);
}

TEST_CASE("payload corruption names the tensor") {
  TempDir tmp;
  save_checkpoint(ModelState::init(EncoderConfig::desk(), 2), tmp.file("m.ckpt"));
  const CheckpointInfo info = inspect_checkpoint(tmp.file("m.ckpt"));
  std::string bad = slurp(tmp.file("m.ckpt"));
  const auto& victim = info.tensors.at(3);
  bad[info.blob_offset + victim.offset + 2] ^= 0x01;
  spit(tmp.file("bad.ckpt"), bad);
  try {
    load_checkpoint(tmp.file("bad.ckpt"));
    FAIL("expected corruption");
  } catch (const CorruptCheckpointError& e) {
    CHECK(std::string(e.what()).find(victim.name) != std::string::npos);
  }
}

TEST_CASE("crc32 of a known string") { CHECK(crc32_of("123456789", 9) == 0xCBF43926u); }

TEST_CASE("preset values") {
  const RunConfig lw = builtin_preset("layerwise");
  CHECK(lw.train.learning_rate == 5e-4);
  CHECK(lw.train.epochs == 2);
  CHECK(lw.train.accumulation_steps == 4);
  CHECK(lw.train.lr_decay == Decay::cosine);
  CHECK(lw.train.warmup_ratio == 0.05);
  CHECK(lw.plan.regime == Regime::layerwise);
  CHECK(lw.full_scale());

  const RunConfig ts = builtin_preset("task_specific");
  CHECK(ts == builtin_preset("taskkd"));
  CHECK(ts.plan.temperature == 4.0);
  CHECK(ts.plan.distill_weight == 0.5);
  CHECK(ts.plan.hidden_weight == 0.5);
  CHECK(ts.train.lr_decay == Decay::linear);

  CHECK_FALSE(builtin_preset("desk/layerwise").full_scale());
  CHECK_THROWS_AS(builtin_preset("nonexistent"), ConfigError);
}

TEST_CASE("config text round trips for every preset") {
  for (const auto& name : builtin_preset_names()) {
    const RunConfig c = builtin_preset(name);
    CHECK(parse_config(serialize_config(c)) == c);
  }
}

TEST_CASE("config errors name the line and suggest keys") {
  try {
    parse_config("[train]\nlearnig_rate = 1e-3\n", "x.cfg");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("learnig_rate") != std::string::npos);
    CHECK(msg.find("did you mean 'learning_rate'") != std::string::npos);
    CHECK(msg.find("x.cfg:2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("[train]\nepochs = 2\nepochs = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[nope]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("epochs = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[train]\nepochs = two\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[distill]\ntemperature = 0\n"), ConfigError);
  CHECK(levenshtein("learnig_rate", "learning_rate") == 1);
}

TEST_CASE("shipped config files equal the built-in presets") {
  const fs::path dir = fs::path(INHIBITOR_SOURCE_DIR) / "configs";
  for (const auto& name : builtin_preset_names()) {
    if (name == "full_layer" || name == "task_specific") continue;
    const fs::path file = dir / (name + ".cfg");
    REQUIRE_MESSAGE(fs::exists(file), file.string());
    CHECK(slurp(file.string()) == serialize_config(builtin_preset(name)));
  }
}
