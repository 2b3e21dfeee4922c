// include/omr/checkpoint.hpp

// Copyright 2026  omr-toolkit authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.
//
// Checkpoint file layout:
//   magic "OMRF" | u32 version (LE) | u64 metadata byte length (LE) |
//   UTF-8 JSON metadata | raw float32 (LE) payloads in declaration order.
// The metadata lists every tensor with its name and shape; loading audits
// names and shapes against the receiving model and refuses mismatches.

#ifndef OMR_CHECKPOINT_HPP_
#define OMR_CHECKPOINT_HPP_

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "omr/model.hpp"
#include "omr/optim.hpp"

namespace omr {

struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr char kCheckpointMagic[4] = {'O', 'M', 'R', 'F'};

struct Checkpoint {
  ModelConfig config;
  long iteration = 0;
  long adam_step = 0;
  bool has_optimizer = false;
  std::vector<std::pair<std::string, Tensor>> tensors;  // declaration order

  const Tensor* find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return &t;
    return nullptr;
  }
};

namespace ckptdetail {

static_assert(sizeof(float) == 4, "float32 payload requires 4-byte float");

inline void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw CheckpointError("truncated checkpoint header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw CheckpointError("truncated checkpoint header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void write_f32_payload(std::ostream& out, const Tensor& t) {
  std::vector<float> buf(t.numel());
  for (std::size_t i = 0; i < t.numel(); ++i) buf[i] = static_cast<float>(t[i]);
  // LE byte order assumed for the raw dump; this toolkit targets LE hosts.
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * 4));
}

inline Tensor read_f32_payload(std::istream& in, const Shape& shape) {
  Tensor t(shape);
  std::vector<float> buf(t.numel());
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * 4));
  if (static_cast<std::size_t>(in.gcount()) != buf.size() * 4)
    throw CheckpointError("truncated checkpoint payload");
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<Real>(buf[i]);
  return t;
}

}  // namespace ckptdetail

// Gathers (name, tensor) pairs in declaration order: parameters, running
// norm statistics, then optimizer moments when present.
inline std::vector<std::pair<std::string, Tensor*>> checkpoint_slots(
    Model& model, Adam* adam) {
  std::vector<std::pair<std::string, Tensor*>> slots;
  model.visit_params(
      [&](const std::string& name, Param& p) { slots.emplace_back(name, &p.v); });
  model.visit_state(
      [&](const std::string& name, Tensor& t) { slots.emplace_back(name, &t); });
  if (adam) {
    for (auto& s : adam->slots()) {
      slots.emplace_back("opt.m." + s.name, &s.m);
      slots.emplace_back("opt.v." + s.name, &s.v);
    }
  }
  return slots;
}

inline void save_checkpoint(const std::filesystem::path& path, Model& model,
                            long iteration, Adam* adam = nullptr) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  const auto slots = checkpoint_slots(model, adam);

  nlohmann::json meta;
  meta["config"] = model.config();
  meta["iteration"] = iteration;
  meta["has_optimizer"] = adam != nullptr;
  meta["adam_step"] = adam ? adam->step_count() : 0;
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& [name, t] : slots)
    tensors.push_back({{"name", name}, {"shape", t->shape()}});
  meta["tensors"] = std::move(tensors);
  const std::string meta_str = meta.dump();

  out.write(kCheckpointMagic, 4);
  ckptdetail::write_u32(out, kCheckpointVersion);
  ckptdetail::write_u64(out, meta_str.size());
  out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
  for (const auto& [name, t] : slots) ckptdetail::write_f32_payload(out, *t);
  if (!out) throw CheckpointError("write failed for " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw CheckpointError("bad checkpoint magic in " + path.string());
  const std::uint32_t version = ckptdetail::read_u32(in);
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(version) + " in " + path.string());
  const std::uint64_t meta_len = ckptdetail::read_u64(in);
  std::string meta_str(meta_len, '\0');
  in.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
  if (static_cast<std::uint64_t>(in.gcount()) != meta_len)
    throw CheckpointError("truncated checkpoint metadata in " + path.string());

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_str);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint metadata: ") + e.what());
  }
  Checkpoint ckpt;
  ckpt.config = meta.at("config").get<ModelConfig>();
  ckpt.iteration = meta.at("iteration").get<long>();
  ckpt.has_optimizer = meta.at("has_optimizer").get<bool>();
  ckpt.adam_step = meta.at("adam_step").get<long>();
  for (const auto& entry : meta.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    const Shape shape = entry.at("shape").get<Shape>();
    ckpt.tensors.emplace_back(name, ckptdetail::read_f32_payload(in, shape));
  }
  return ckpt;
}

// Installs checkpoint tensors into the model (and optimizer when present),
// auditing every name and shape first. Optimizer tensors in the file are
// ignored when no optimizer is being restored.
inline void apply_checkpoint(const Checkpoint& ckpt, Model& model,
                             Adam* adam = nullptr) {
  const bool restore_opt = adam && ckpt.has_optimizer;
  auto slots = checkpoint_slots(model, restore_opt ? adam : nullptr);
  std::vector<const std::pair<std::string, Tensor>*> wanted;
  for (const auto& entry : ckpt.tensors) {
    if (!restore_opt && entry.first.rfind("opt.", 0) == 0) continue;
    wanted.push_back(&entry);
  }
  if (slots.size() != wanted.size())
    throw CheckpointError(
        "checkpoint tensor count " + std::to_string(wanted.size()) +
        " does not match the model's " + std::to_string(slots.size()));
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto& [want_name, dst] = slots[i];
    const auto& [got_name, src] = *wanted[i];
    if (want_name != got_name)
      throw CheckpointError("checkpoint tensor '" + got_name +
                            "' where the model expects '" + want_name + "'");
    if (src.shape() != dst->shape())
      throw CheckpointError("checkpoint tensor '" + got_name + "' has shape " +
                            shape_str(src.shape()) + ", model expects " +
                            shape_str(dst->shape()));
  }
  for (std::size_t i = 0; i < slots.size(); ++i) *slots[i].second = wanted[i]->second;
  if (restore_opt) adam->set_step_count(ckpt.adam_step);
}

}  // namespace omr

#endif  // OMR_CHECKPOINT_HPP_
