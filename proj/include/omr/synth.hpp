// include/omr/synth.hpp

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
// Synthetic desk-scale corpus: 128-high strips with a five-line staff and one
// distinct geometric glyph per token (shape selected by id % 4, vertical
// offset by id / 4). Token files are written in both encodings next to each
// image. Fully deterministic for a given seed.

#ifndef OMR_SYNTH_HPP_
#define OMR_SYNTH_HPP_

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "omr/data.hpp"
#include "omr/rng.hpp"

namespace omr {

struct SynthSpec {
  std::size_t count = 10;
  std::uint64_t seed = 1;
  std::size_t vocab_size = 16;  // at most 32
  std::size_t min_tokens = 3;
  std::size_t max_tokens = 9;
  std::size_t glyph_width = 16;  // horizontal cell per glyph, px
};

inline std::vector<std::string> synth_token_names(std::size_t vocab_size,
                                                  Encoding encoding) {
  if (vocab_size < 1 || vocab_size > 32)
    throw DataError("synth: vocab size must be in [1, 32]");
  static const char* pitches[12] = {"C4", "D4", "E4", "F4", "G4", "A4",
                                    "B4", "C5", "D5", "E5", "F5", "G5"};
  static const char* positions[12] = {"L1", "L2", "L3", "L4", "L5", "S1",
                                      "S2", "S3", "S4", "S5", "S6", "S7"};
  static const char* types[3] = {"quarter", "half", "eighth"};
  // ids 0-1 are structural, everything above is a note so even tiny
  // vocabularies carry the pitch/type metrics
  std::vector<std::string> names;
  for (std::size_t id = 0; id < vocab_size; ++id) {
    std::string name;
    if (encoding == Encoding::Semantic) {
      switch (id) {
        case 0: name = "barline"; break;
        case 1: name = "clef-G2"; break;
        default: {
          const std::size_t k = id - 2;
          name = std::string("note-") + pitches[k % 12] + "_" + types[k / 12];
        }
      }
    } else {
      switch (id) {
        case 0: name = "barline-L1"; break;
        case 1: name = "clef.G-L2"; break;
        default: {
          const std::size_t k = id - 2;
          name = std::string("note.") + types[k / 12] + "-" + positions[k % 12];
        }
      }
    }
    names.push_back(std::move(name));
  }
  return names;
}

namespace detail {

inline void draw_glyph(GrayImage& img, std::size_t id, std::size_t x0,
                       long y_jitter, std::size_t cell_w) {
  const std::size_t kind = id % 4;
  // 14px vertical slots keep the eight position classes separable after the
  // encoder's 16x height pooling
  const long y_center = 64 + static_cast<long>(id / 4) * 14 - 49 + y_jitter;
  const long r = static_cast<long>(cell_w) / 2 - 1;
  const long cx = static_cast<long>(x0) + static_cast<long>(cell_w) / 2;
  auto put = [&](long x, long y) {
    if (x >= 0 && y >= 0 && x < static_cast<long>(img.width) &&
        y < static_cast<long>(img.height))
      img.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = 0;
  };
  switch (kind) {
    case 0:  // filled disc
      for (long dy = -r; dy <= r; ++dy)
        for (long dx = -r; dx <= r; ++dx)
          if (dx * dx + dy * dy <= r * r) put(cx + dx, y_center + dy);
      break;
    case 1:  // hollow circle, 3px ring
      for (long dy = -r; dy <= r; ++dy)
        for (long dx = -r; dx <= r; ++dx) {
          const long d2 = dx * dx + dy * dy;
          if (d2 <= r * r && d2 >= (r - 3) * (r - 3)) put(cx + dx, y_center + dy);
        }
      break;
    case 2:  // vertical bar, full glyph height
      for (long dy = -2 * r; dy <= 2 * r; ++dy)
        for (long dx = -2; dx <= 2; ++dx) put(cx + dx, y_center + dy);
      break;
    case 3:  // solid wedge
      for (long dy = -r; dy <= r; ++dy) {
        const long half = (r - std::abs(dy)) + 1;
        for (long dx = -half; dx <= half; ++dx) put(cx + dx, y_center + dy);
      }
      break;
  }
}

}  // namespace detail

// Renders one sample; exposed separately so tests can probe single strips.
inline GrayImage synth_render(const std::vector<int>& ids, Rng& rng,
                              std::size_t glyph_width) {
  const std::size_t margin_l = static_cast<std::size_t>(rng.uniform_int(4, 8));
  const std::size_t margin_r = static_cast<std::size_t>(rng.uniform_int(4, 8));
  std::vector<std::size_t> gaps(ids.size());
  std::size_t width = margin_l + margin_r;
  for (auto& g : gaps) {
    g = static_cast<std::size_t>(rng.uniform_int(2, 6));
    width += glyph_width + g;
  }
  width = std::max(width, kMinWidth);

  GrayImage img;
  img.width = width;
  img.height = kInputHeight;
  img.pixels.assign(width * kInputHeight, 255);
  // five 2px staff lines, 8px apart, centered on row 60; thick enough to
  // survive a 3x3 erosion like real scans do
  for (int line = 0; line < 5; ++line) {
    const std::size_t y = 44 + 8 * static_cast<std::size_t>(line);
    for (std::size_t x = 0; x < width; ++x) {
      img.at(x, y) = 0;
      img.at(x, y + 1) = 0;
    }
  }
  std::size_t x = margin_l;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const long jitter = rng.uniform_int(-3, 3);
    detail::draw_glyph(img, static_cast<std::size_t>(ids[i]), x, jitter,
                       glyph_width);
    x += glyph_width + gaps[i];
  }
  return img;
}

// Writes <out_dir>/sample####.pgm plus .semantic and .agnostic token files.
// Every vocabulary entry is guaranteed to appear in the corpus.
inline void synth_generate(const std::filesystem::path& out_dir,
                           const SynthSpec& spec) {
  namespace fs = std::filesystem;
  if (spec.count == 0) throw DataError("synth: count must be positive");
  if (spec.min_tokens < 1 || spec.max_tokens < spec.min_tokens)
    throw DataError("synth: bad token count range");
  fs::create_directories(out_dir);

  const auto semantic = synth_token_names(spec.vocab_size, Encoding::Semantic);
  const auto agnostic = synth_token_names(spec.vocab_size, Encoding::Agnostic);

  Rng rng(spec.seed);
  std::vector<std::vector<int>> sequences(spec.count);
  std::vector<bool> used(spec.vocab_size, false);
  for (auto& seq : sequences) {
    const std::size_t len = static_cast<std::size_t>(rng.uniform_int(
        static_cast<long>(spec.min_tokens), static_cast<long>(spec.max_tokens)));
    seq.resize(len);
    for (auto& id : seq) {
      id = static_cast<int>(rng.uniform_int(0, static_cast<long>(spec.vocab_size) - 1));
      used[static_cast<std::size_t>(id)] = true;
    }
  }
  // coverage pass: splice unused ids into deterministic spots
  for (std::size_t id = 0; id < spec.vocab_size; ++id) {
    if (used[id]) continue;
    auto& seq = sequences[id % sequences.size()];
    seq[static_cast<std::size_t>(rng.uniform_int(
        0, static_cast<long>(seq.size()) - 1))] = static_cast<int>(id);
  }

  for (std::size_t i = 0; i < sequences.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "sample%04zu", i);
    const GrayImage img = synth_render(sequences[i], rng, spec.glyph_width);
    save_pgm(out_dir / (std::string(stem) + ".pgm"), img);
    auto write_tokens = [&](const std::string& ext,
                            const std::vector<std::string>& names) {
      std::ofstream out(out_dir / (std::string(stem) + ext), std::ios::binary);
      for (std::size_t j = 0; j < sequences[i].size(); ++j)
        out << (j ? " " : "") << names[static_cast<std::size_t>(sequences[i][j])];
      out << "\n";
    };
    write_tokens(".semantic", semantic);
    write_tokens(".agnostic", agnostic);
  }
}

}  // namespace omr

#endif  // OMR_SYNTH_HPP_
