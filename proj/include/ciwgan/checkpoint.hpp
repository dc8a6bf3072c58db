// Copyright 2026 The ciwgan Authors
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

#pragma once

// Checkpoint directories: manifest.json plus one raw little-endian float32
// file per parameter tensor, named <network>.<layer>.<weight|bias>.f32.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"

#include "ciwgan/errors.hpp"
#include "ciwgan/latent.hpp"
#include "ciwgan/models.hpp"
#include "ciwgan/raw_io.hpp"
#include "ciwgan/rng.hpp"

namespace ciwgan {

inline constexpr int kCheckpointFormat = 1;

inline nlohmann::json to_json(const LatentSpec& s) {
  return {{"kind", to_string(s.kind)},
          {"code_size", s.code_size},
          {"noise_dim", s.noise_dim},
          {"train_scale", s.train_scale},
          {"marginal_scale", s.marginal_scale}};
}

inline LatentSpec latent_from_json(const nlohmann::json& j) {
  LatentSpec s;
  s.kind = parse_code_kind(j.at("kind").get<std::string>());
  s.code_size = j.at("code_size").get<std::size_t>();
  s.noise_dim = j.value("noise_dim", s.noise_dim);
  s.train_scale = j.value("train_scale", s.train_scale);
  s.marginal_scale = j.value("marginal_scale", s.marginal_scale);
  s.validate();
  return s;
}

inline nlohmann::json to_json(const ArchitectureConfig& a) {
  return {{"slice_len", a.slice_len}, {"model_dim", a.model_dim}, {"kernel", a.kernel},          {"stride", a.stride},
          {"seed_len", a.seed_len},   {"phase_shuffle", a.phase_shuffle}, {"slope", a.slope}};
}

inline ArchitectureConfig arch_from_json(const nlohmann::json& j) {
  ArchitectureConfig a;
  a.slice_len = j.value("slice_len", a.slice_len);
  a.model_dim = j.value("model_dim", a.model_dim);
  a.kernel = j.value("kernel", a.kernel);
  a.stride = j.value("stride", a.stride);
  a.seed_len = j.value("seed_len", a.seed_len);
  a.phase_shuffle = j.value("phase_shuffle", a.phase_shuffle);
  a.slope = j.value("slope", a.slope);
  (void)a.stages();
  (void)a.geometry();
  return a;
}

/// The three networks of one model together with the latent layout.
struct ModelSet {
  LatentSpec latent;
  ArchitectureConfig arch;
  Network<float> G, D, Q;

  static ModelSet create(const LatentSpec& latent, const ArchitectureConfig& arch, Rng& rng) {
    ModelSet m;
    m.latent = latent;
    m.arch = arch;
    m.G = make_generator(latent, arch, rng);
    m.D = make_discriminator(arch, rng);
    m.Q = make_q_network(latent, arch, rng);
    return m;
  }
};

namespace detail {

template <class Fn>
void for_each_tensor(Network<float>& net, Fn&& fn) {
  const auto names = net.param_names();
  const auto ps = net.params();
  for (std::size_t i = 0; i < ps.size(); ++i) fn(net.name() + "." + names[i], *ps[i]);
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& dir, ModelSet& m, std::uint64_t step,
                            const nlohmann::json& extra = nlohmann::json::object()) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["format_version"] = kCheckpointFormat;
  j["step"] = step;
  j["latent"] = to_json(m.latent);
  j["latent_layout"] = m.latent.layout();
  j["architecture"] = to_json(m.arch);
  j["fingerprints"] = {{"generator", m.G.fingerprint()}, {"discriminator", m.D.fingerprint()}, {"qnetwork", m.Q.fingerprint()}};
  auto& tensors = j["tensors"] = nlohmann::json::array();
  for (auto* net : {&m.G, &m.D, &m.Q})
    detail::for_each_tensor(*net, [&](const std::string& name, const Tensor& t) {
      const std::string file = name + ".f32";
      write_f32_le(dir / file, t.values());
      tensors.push_back({{"name", name}, {"file", file}, {"shape", t.shape()}});
    });
  if (!extra.empty()) j["extra"] = extra;
  write_text(dir / "manifest.json", j.dump(2) + "\n");
}

struct LoadedCheckpoint {
  ModelSet models;
  std::uint64_t step = 0;
  nlohmann::json manifest;
};

/// Rebuilds the networks described by the manifest and fills in the stored
/// tensors. Throws IoError on missing files, fingerprint or shape mismatch.
inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("checkpoint '" + dir.string() + "' is not a directory");
  LoadedCheckpoint out;
  try {
    out.manifest = nlohmann::json::parse(read_text(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint manifest in '" + dir.string() + "' is malformed: " + e.what());
  }
  const auto& j = out.manifest;
  try {
    if (j.at("format_version").get<int>() != kCheckpointFormat)
      throw IoError("checkpoint format " + j.at("format_version").dump() + " is not supported");
    out.step = j.at("step").get<std::uint64_t>();
    Rng scratch(0);
    out.models = ModelSet::create(latent_from_json(j.at("latent")), arch_from_json(j.at("architecture")), scratch);
    const auto& fp = j.at("fingerprints");
    auto& m = out.models;
    if (fp.at("generator") != m.G.fingerprint() || fp.at("discriminator") != m.D.fingerprint() ||
        fp.at("qnetwork") != m.Q.fingerprint())
      throw IoError("checkpoint '" + dir.string() + "': architecture fingerprint mismatch");
    std::map<std::string, std::string> files;
    for (const auto& t : j.at("tensors")) files[t.at("name").get<std::string>()] = t.at("file").get<std::string>();
    for (auto* net : {&m.G, &m.D, &m.Q})
      detail::for_each_tensor(*net, [&](const std::string& name, Tensor& t) {
        const auto it = files.find(name);
        if (it == files.end()) throw IoError("checkpoint '" + dir.string() + "' lacks tensor " + name);
        auto values = read_f32_le(dir / it->second);
        if (values.size() != t.size())
          throw IoError("checkpoint tensor " + name + " has " + std::to_string(values.size()) + " values, expected " +
                        std::to_string(t.size()));
        t = Tensor(t.shape(), std::move(values));
      });
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint manifest in '" + dir.string() + "' is incomplete: " + e.what());
  } catch (const ValidationError& e) {
    throw IoError("checkpoint manifest in '" + dir.string() + "' is invalid: " + e.what());
  }
  return out;
}

}  // namespace ciwgan
