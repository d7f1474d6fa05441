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

#include "data/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "core/error.hpp"

namespace ihb {

using nlohmann::json;

std::uint32_t crc32_of(const void* data, std::size_t n) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  const auto* p = static_cast<const Bytef*>(data);
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = ::crc32(crc, p, chunk);
    p += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

namespace {

constexpr char kMagic[4] = {'I', 'H', 'B', 'T'};
constexpr std::size_t kHeaderBytes = 20;

template <class U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <class U>
U get_le(const std::string& in, std::size_t at) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return v;
}

json config_to_json(const EncoderConfig& c) {
  return json{{"n_layers", c.n_layers},
              {"d_model", c.d_model},
              {"d_ffn", c.d_ffn},
              {"n_heads", c.n_heads},
              {"d_head", c.d_head},
              {"vocab_size", c.vocab_size},
              {"max_seq_len", c.max_seq_len},
              {"dropout", c.dropout},
              {"attention_dropout", c.attention_dropout},
              {"variant", to_string(c.attention_variant)},
              {"n_classes", c.n_classes},
              {"init_std", c.init_std},
              {"eta_init", c.eta_init}};
}

EncoderConfig config_from_json(const json& j) {
  EncoderConfig c;
  c.n_layers = j.at("n_layers").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.d_ffn = j.at("d_ffn").get<std::size_t>();
  c.n_heads = j.at("n_heads").get<std::size_t>();
  c.d_head = j.at("d_head").get<std::size_t>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.max_seq_len = j.at("max_seq_len").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.attention_dropout = j.at("attention_dropout").get<double>();
  c.attention_variant = parse_variant(j.at("variant").get<std::string>());
  c.n_classes = j.at("n_classes").get<std::size_t>();
  c.init_std = j.at("init_std").get<double>();
  c.eta_init = j.at("eta_init").get<double>();
  return c;
}

std::string encode_values(std::span<const double> values) {
  std::string out;
  out.reserve(values.size() * 8);
  for (double d : values) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(d));
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read of '" + path + "' failed");
  return data;
}

CheckpointInfo parse_header(const std::string& file, const std::string& path) {
  if (file.size() < kHeaderBytes || std::memcmp(file.data(), kMagic, 4) != 0) {
    throw CorruptCheckpointError(path + ": not a checkpoint (bad magic)");
  }
  CheckpointInfo info;
  info.version = get_le<std::uint32_t>(file, 4);
  if (info.version != kCheckpointVersion) {
    throw CorruptCheckpointError(path + ": unsupported version " + std::to_string(info.version));
  }
  const auto mlen = get_le<std::uint64_t>(file, 8);
  if (mlen > file.size() - kHeaderBytes) throw CorruptCheckpointError(path + ": truncated manifest");
  if (crc32_of(file.data() + kHeaderBytes, mlen) != get_le<std::uint32_t>(file, 16)) {
    throw CorruptCheckpointError(path + ": manifest checksum mismatch");
  }
  json m;
  try {
    m = json::parse(file.substr(kHeaderBytes, mlen));
    info.config = config_from_json(m.at("config"));
    for (const auto& t : m.at("tensors")) {
      if (t.at("dtype").get<std::string>() != "f64") {
        throw CorruptCheckpointError(path + ": tensor '" + t.at("name").get<std::string>() +
                                     "' has unsupported dtype");
      }
      info.tensors.push_back(TensorRecord{t.at("name").get<std::string>(), t.at("shape").get<Shape>(),
                                          t.at("offset").get<std::uint64_t>(),
                                          t.at("nbytes").get<std::uint64_t>(),
                                          t.at("crc32").get<std::uint32_t>()});
    }
  } catch (const CorruptCheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CorruptCheckpointError(path + ": unreadable manifest: " + e.what());
  }
  const std::uint64_t header = kHeaderBytes + mlen;
  info.blob_offset = (header + kBlobAlignment - 1) / kBlobAlignment * kBlobAlignment;
  return info;
}

}  // namespace

void save_checkpoint(const ModelState& state, const std::string& path) {
  json tensors = json::array();
  std::string blob;
  for (const auto& p : state.parameters()) {
    const std::string bytes = encode_values(p.tensor.data());
    tensors.push_back(json{{"name", p.name},
                           {"shape", p.tensor.shape()},
                           {"dtype", "f64"},
                           {"offset", blob.size()},
                           {"nbytes", bytes.size()},
                           {"crc32", crc32_of(bytes.data(), bytes.size())}});
    blob += bytes;
  }
  const json manifest{{"format", "IHBT"},
                      {"version", kCheckpointVersion},
                      {"config", config_to_json(state.config())},
                      {"tensors", tensors},
                      {"blob_bytes", blob.size()}};
  const std::string mtext = manifest.dump();

  std::string out(kMagic, 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, mtext.size());
  put_le<std::uint32_t>(out, crc32_of(mtext.data(), mtext.size()));
  out += mtext;
  out.resize((out.size() + kBlobAlignment - 1) / kBlobAlignment * kBlobAlignment, '\0');
  out += blob;

  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write '" + tmp.string() + "'");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    f.flush();
    if (!f) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot move checkpoint into '" + path + "': " + ec.message());
  }
}

CheckpointInfo inspect_checkpoint(const std::string& path) { return parse_header(read_file(path), path); }

ModelState load_checkpoint(const std::string& path) {
  const std::string file = read_file(path);
  const CheckpointInfo info = parse_header(file, path);
  try {
    info.config.validate();
  } catch (const Error& e) {
    throw CorruptCheckpointError(path + ": invalid config echo: " + e.what());
  }
  if (info.blob_offset > file.size()) throw CorruptCheckpointError(path + ": truncated before payload");
  for (std::uint64_t i = kHeaderBytes + get_le<std::uint64_t>(file, 8); i < info.blob_offset; ++i) {
    if (file[i] != '\0') throw CorruptCheckpointError(path + ": non-zero alignment padding");
  }
  const std::uint64_t blob_size = file.size() - info.blob_offset;

  ModelState state = ModelState::init(info.config, 0);
  auto& params = state.parameters();
  if (params.size() != info.tensors.size()) {
    throw CorruptCheckpointError(path + ": expected " + std::to_string(params.size()) + " tensors, found " +
                                 std::to_string(info.tensors.size()));
  }
  std::uint64_t expected_offset = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& rec = info.tensors[i];
    auto& p = params[i];
    if (rec.name != p.name) {
      throw CorruptCheckpointError(path + ": tensor '" + rec.name + "' where '" + p.name + "' was expected");
    }
    if (rec.shape != p.tensor.shape()) {
      throw CorruptCheckpointError(path + ": tensor '" + rec.name + "' has the wrong shape");
    }
    if (rec.nbytes != p.tensor.size() * 8 || rec.offset != expected_offset ||
        rec.offset + rec.nbytes > blob_size) {
      throw CorruptCheckpointError(path + ": tensor '" + rec.name + "' has an invalid byte range");
    }
    const char* bytes = file.data() + info.blob_offset + rec.offset;
    if (crc32_of(bytes, rec.nbytes) != rec.crc32) {
      throw CorruptCheckpointError(path + ": checksum mismatch in tensor '" + rec.name + "'");
    }
    auto values = p.tensor.mutable_data();
    for (std::size_t k = 0; k < values.size(); ++k) {
      values[k] = std::bit_cast<double>(get_le<std::uint64_t>(file, info.blob_offset + rec.offset + 8 * k));
    }
    expected_offset += rec.nbytes;
  }
  if (expected_offset != blob_size) throw CorruptCheckpointError(path + ": trailing bytes after payload");
  return state;
}

}  // namespace ihb
