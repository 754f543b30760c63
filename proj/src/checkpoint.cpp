// Copyright 2026 The LADDER-VFI Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ladder/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>
#include <zlib.h>

#include "ladder/error.hpp"

namespace ladder {

static_assert(std::endian::native == std::endian::little, "checkpoint payloads are little-endian");

namespace {

constexpr char kMagic[8] = {'L', 'A', 'D', 'D', 'E', 'R', 'C', 'K'};

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t offset) {
  T value;
  std::memcpy(&value, in.data() + offset, sizeof(T));
  return value;
}

std::uint32_t checksum(const char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::map<std::string, std::string> model_fields(const ModelConfig& cfg) {
  ExperimentConfig e;
  e.model = cfg;
  std::map<std::string, std::string> out;
  std::istringstream in(serialize_config(e));
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model.", 0) != 0) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

const char* kind_name(int kind) {
  static const char* names[] = {"param", "adam_m", "adam_v"};
  return names[kind];
}

}  // namespace

void require_same_architecture(const ModelConfig& saved, const ModelConfig& current) {
  if (saved.base_width != current.base_width) {
    fail("checkpoint was trained with base width {} but the model has base width {}",
         saved.base_width, current.base_width);
  }
  const auto a = model_fields(saved);
  const auto b = model_fields(current);
  for (const auto& [key, value] : a) {
    const auto it = b.find(key);
    if (it == b.end() || it->second != value) {
      fail("checkpoint architecture differs at '{}': checkpoint has{}, model has{}", key, value,
           it == b.end() ? std::string(" <none>") : it->second);
    }
  }
}

void save_checkpoint(const std::string& path, const CheckpointState& state) {
  using nlohmann::json;
  const std::map<std::string, Tensor>* groups[] = {&state.params, &state.adam_m, &state.adam_v};
  json dir = json::array();
  std::uint64_t offset = 0;
  for (int kind = 0; kind < 3; ++kind) {
    for (const auto& [name, t] : *groups[kind]) {
      const Shape s = t.shape();
      dir.push_back({{"name", name},
                     {"kind", kind_name(kind)},
                     {"shape", {s.n, s.c, s.h, s.w}},
                     {"offset", offset},
                     {"count", t.numel()}});
      offset += t.numel();
    }
  }
  json header = {{"config", serialize_config(state.config)},
                 {"stage", stage_name(state.stage)},
                 {"stage_complete", state.stage_complete},
                 {"step", state.step},
                 {"samples_consumed", state.samples_consumed},
                 {"rng_state", state.rng_state},
                 {"optimizer_steps", state.optimizer_steps},
                 {"tensors", dir}};
  const std::string htext = header.dump();

  std::string blob(kMagic, sizeof(kMagic));
  put<std::uint32_t>(blob, kCheckpointVersion);
  put<std::uint64_t>(blob, htext.size());
  blob += htext;
  blob.reserve(blob.size() + offset * sizeof(float) + 4);
  for (const auto* g : groups) {
    for (const auto& [name, t] : *g) {
      blob.append(reinterpret_cast<const char*>(t.data()), t.numel() * sizeof(float));
    }
  }
  put<std::uint32_t>(blob, checksum(blob.data(), blob.size()));

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot open '{}' for writing", tmp);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      fail("failed writing checkpoint '{}'", path);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail("cannot move checkpoint into place at '{}': {}", path, ec.message());
}

CheckpointState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open checkpoint '{}'", path);
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  constexpr std::size_t prefix = sizeof(kMagic) + 4 + 8;
  if (blob.size() < prefix + 4 || std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0) {
    fail("'{}' is not a checkpoint or is truncated ({} bytes)", path, blob.size());
  }
  const auto version = get<std::uint32_t>(blob, sizeof(kMagic));
  if (version != kCheckpointVersion) {
    fail("checkpoint '{}' has format version {}, expected {}", path, version, kCheckpointVersion);
  }
  const auto hlen = get<std::uint64_t>(blob, sizeof(kMagic) + 4);
  if (hlen > blob.size() - prefix - 4) fail("checkpoint '{}' is truncated (header)", path);
  const std::size_t body = blob.size() - 4;
  const auto stored = get<std::uint32_t>(blob, body);
  if (checksum(blob.data(), body) != stored) {
    fail("checkpoint '{}' is corrupt or truncated (checksum mismatch)", path);
  }

  using nlohmann::json;
  json header;
  try {
    header = json::parse(blob.begin() + prefix, blob.begin() + static_cast<std::ptrdiff_t>(prefix + hlen));
  } catch (const json::exception& e) {
    fail("checkpoint '{}' has an unreadable header: {}", path, e.what());
  }
  CheckpointState st;
  try {
    st.config = parse_config(header.at("config").get<std::string>(), path + " (embedded config)");
    st.stage = parse_stage(header.at("stage").get<std::string>());
    st.stage_complete = header.at("stage_complete").get<bool>();
    st.step = header.at("step").get<std::int64_t>();
    st.samples_consumed = header.at("samples_consumed").get<std::uint64_t>();
    st.rng_state = header.at("rng_state").get<std::string>();
    st.optimizer_steps = header.at("optimizer_steps").get<std::int64_t>();
    const std::size_t payload = prefix + hlen;
    const std::size_t floats = (body - payload) / sizeof(float);
    if ((body - payload) % sizeof(float) != 0) fail("checkpoint '{}' has a ragged payload", path);
    for (const auto& e : header.at("tensors")) {
      const auto shape = e.at("shape").get<std::vector<int>>();
      const auto off = e.at("offset").get<std::uint64_t>();
      const auto count = e.at("count").get<std::uint64_t>();
      require(shape.size() == 4, "checkpoint '{}': bad tensor shape", path);
      const Shape s{shape[0], shape[1], shape[2], shape[3]};
      require(s.numel() == count && off + count <= floats,
              "checkpoint '{}': tensor '{}' lies outside the payload", path,
              e.at("name").get<std::string>());
      Tensor t(s);
      std::memcpy(t.data(), blob.data() + payload + off * sizeof(float), count * sizeof(float));
      const std::string kind = e.at("kind").get<std::string>();
      auto& dst = kind == "param" ? st.params : kind == "adam_m" ? st.adam_m : st.adam_v;
      dst.emplace(e.at("name").get<std::string>(), std::move(t));
    }
  } catch (const json::exception& e) {
    fail("checkpoint '{}' has a malformed header: {}", path, e.what());
  }
  return st;
}

void capture(const nn::ParamStore& store, const AdamW* optimizer, CheckpointState& state) {
  state.params.clear();
  state.adam_m.clear();
  state.adam_v.clear();
  for (const auto& p : store.params()) state.params[p.name] = p.var.value();
  state.optimizer_steps = 0;
  if (optimizer != nullptr) {
    state.optimizer_steps = optimizer->steps();
    for (const auto& s : optimizer->slots()) {
      state.adam_m[s.param.name] = s.m;
      state.adam_v[s.param.name] = s.v;
    }
  }
}

void restore_params(const CheckpointState& state, const ModelConfig& cfg, nn::ParamStore& store) {
  require_same_architecture(state.config.model, cfg);
  require(state.params.size() == store.params().size(),
          "checkpoint holds {} parameters, model has {}", state.params.size(), store.params().size());
  for (const auto& p : store.params()) {
    const auto it = state.params.find(p.name);
    require(it != state.params.end(), "checkpoint lacks parameter '{}'", p.name);
    require(it->second.shape() == p.var.shape(), "parameter '{}': checkpoint shape {} vs model {}",
            p.name, it->second.shape().str(), p.var.shape().str());
  }
  for (auto& p : store.params()) p.var.mutable_value() = state.params.at(p.name);
}

void restore_optimizer(const CheckpointState& state, AdamW& optimizer) {
  for (const auto& s : optimizer.slots()) {
    const auto m = state.adam_m.find(s.param.name);
    const auto v = state.adam_v.find(s.param.name);
    require(m != state.adam_m.end() && v != state.adam_v.end(),
            "checkpoint lacks optimizer state for '{}'", s.param.name);
    require(m->second.shape() == s.m.shape() && v->second.shape() == s.v.shape(),
            "optimizer state for '{}' has the wrong shape", s.param.name);
  }
  for (auto& s : optimizer.slots()) {
    s.m = state.adam_m.at(s.param.name);
    s.v = state.adam_v.at(s.param.name);
  }
  optimizer.set_steps(state.optimizer_steps);
}

}  // namespace ladder
