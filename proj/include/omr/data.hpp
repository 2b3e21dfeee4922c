// include/omr/data.hpp

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
// Corpus ingestion and preprocessing. Corpus layout: <root>/<id>.png or
// <id>.pgm next to <id>.semantic / <id>.agnostic (one staff per file,
// whitespace-separated tokens). Images are white-background (1.0), ink dark
// (0.0); width padding uses the background value.

#ifndef OMR_DATA_HPP_
#define OMR_DATA_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "omr/ctc.hpp"
#include "omr/metrics.hpp"
#include "omr/rng.hpp"
#include "omr/tensor.hpp"

#if defined(OMR_WITH_PNG)
#include <png.h>
#endif

namespace omr {

struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// 8-bit grayscale images and file formats
// ---------------------------------------------------------------------------

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  std::uint8_t& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
  std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

inline GrayImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P2")
    throw DataError("unsupported PGM magic '" + magic + "' in " + path.string());
  auto next_value = [&]() -> long {
    // skips whitespace and '#' comment lines
    while (true) {
      int c = in.peek();
      if (c == '#') {
        std::string line;
        std::getline(in, line);
      } else if (std::isspace(c)) {
        in.get();
      } else {
        break;
      }
    }
    long v;
    if (!(in >> v)) throw DataError("truncated PGM header in " + path.string());
    return v;
  };
  const long w = next_value(), h = next_value(), maxval = next_value();
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
    throw DataError("bad PGM header in " + path.string());
  GrayImage img;
  img.width = static_cast<std::size_t>(w);
  img.height = static_cast<std::size_t>(h);
  img.pixels.resize(img.width * img.height);
  if (magic == "P5") {
    in.get();  // single whitespace after maxval
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (static_cast<std::size_t>(in.gcount()) != img.pixels.size())
      throw DataError("truncated PGM payload in " + path.string());
  } else {
    for (auto& p : img.pixels) {
      long v;
      if (!(in >> v)) throw DataError("truncated PGM payload in " + path.string());
      p = static_cast<std::uint8_t>(std::clamp<long>(v, 0, 255));
    }
  }
  if (maxval != 255)
    for (auto& p : img.pixels)
      p = static_cast<std::uint8_t>(p * 255 / maxval);
  return img;
}

inline void save_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write image " + path.string());
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
}

#if defined(OMR_WITH_PNG)
inline GrayImage load_png(const std::filesystem::path& path) {
  std::FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) throw DataError("cannot open image " + path.string());
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw DataError("libpng init failed");
  }
  GrayImage img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw DataError("png decode failed for " + path.string());
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_packing(png);
  const png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  img.pixels.resize(img.width * img.height);
  std::vector<png_bytep> rows(img.height);
  for (std::size_t y = 0; y < img.height; ++y)
    rows[y] = img.pixels.data() + y * img.width;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}
#endif

inline bool is_image_file(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
#if defined(OMR_WITH_PNG)
  return ext == ".pgm" || ext == ".png";
#else
  return ext == ".pgm";
#endif
}

inline GrayImage load_image(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".pgm") return load_pgm(path);
#if defined(OMR_WITH_PNG)
  if (ext == ".png") return load_png(path);
#endif
  throw DataError("unsupported image format: " + path.string());
}

// ---------------------------------------------------------------------------
// Preprocessing: bilinear resize to height 128, aspect ratio preserved,
// values scaled to [0,1] with white background at 1.0.
// ---------------------------------------------------------------------------

constexpr std::size_t kInputHeight = 128;
constexpr std::size_t kMinWidth = 16;

// img: [1, H, W] -> [1, out_h, out_w]
inline Tensor bilinear_resize(const Tensor& img, std::size_t out_h,
                              std::size_t out_w) {
  const std::size_t h = img.extent(1), w = img.extent(2);
  Tensor out({1, out_h, out_w});
  const Real sy = static_cast<Real>(h) / static_cast<Real>(out_h);
  const Real sx = static_cast<Real>(w) / static_cast<Real>(out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    Real fy = (static_cast<Real>(y) + 0.5) * sy - 0.5;
    fy = std::clamp<Real>(fy, 0, static_cast<Real>(h - 1));
    const std::size_t y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const Real wy = fy - static_cast<Real>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      Real fx = (static_cast<Real>(x) + 0.5) * sx - 0.5;
      fx = std::clamp<Real>(fx, 0, static_cast<Real>(w - 1));
      const std::size_t x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const Real wx = fx - static_cast<Real>(x0);
      const Real top = (1 - wx) * img(0, y0, x0) + wx * img(0, y0, x1);
      const Real bot = (1 - wx) * img(0, y1, x0) + wx * img(0, y1, x1);
      out(0, y, x) = (1 - wy) * top + wy * bot;
    }
  }
  return out;
}

inline Tensor tensor_from_image(const GrayImage& img) {
  Tensor t({1, img.height, img.width});
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    t[i] = static_cast<Real>(img.pixels[i]) / 255.0;
  return t;
}

inline GrayImage image_from_tensor(const Tensor& t) {
  GrayImage img;
  img.height = t.extent(1);
  img.width = t.extent(2);
  img.pixels.resize(img.width * img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const Real v = std::clamp<Real>(t[i], 0.0, 1.0);
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return img;
}

inline Tensor preprocess_image(const GrayImage& raw) {
  if (raw.height < 1 || raw.width < 1) throw DataError("empty image");
  const std::size_t out_w = static_cast<std::size_t>(std::lround(
      static_cast<double>(raw.width) * static_cast<double>(kInputHeight) /
      static_cast<double>(raw.height)));
  if (out_w < kMinWidth)
    throw DataError("image too narrow after resize: width " +
                    std::to_string(out_w) + " < " + std::to_string(kMinWidth));
  Tensor t = tensor_from_image(raw);
  if (raw.height == kInputHeight && out_w == raw.width) return t;
  return bilinear_resize(t, kInputHeight, out_w);
}

// ---------------------------------------------------------------------------
// Vocabulary: dense ids in [0, size), blank id == size.
// ---------------------------------------------------------------------------

class Vocabulary {
 public:
  Vocabulary() = default;

  static Vocabulary build(const std::vector<TokenSeq>& token_lists,
                          Encoding encoding) {
    std::map<std::string, int> sorted;  // lexicographic order
    for (const auto& seq : token_lists)
      for (const auto& tok : seq) sorted.emplace(tok, 0);
    if (sorted.empty()) throw DataError("cannot build a vocabulary from no tokens");
    Vocabulary v;
    v.encoding_ = encoding;
    for (auto& [tok, id] : sorted) {
      id = static_cast<int>(v.id_to_token_.size());
      v.id_to_token_.push_back(tok);
    }
    v.token_to_id_ = std::move(sorted);
    return v;
  }

  std::size_t size() const { return id_to_token_.size(); }
  int blank_id() const { return static_cast<int>(size()); }
  Encoding encoding() const { return encoding_; }

  int encode(const std::string& token) const {
    auto it = token_to_id_.find(token);
    if (it == token_to_id_.end())
      throw DataError("token not in vocabulary: " + token);
    return it->second;
  }

  std::vector<int> encode(const TokenSeq& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(encode(t));
    return ids;
  }

  const std::string& decode(int id) const {
    if (id < 0 || id >= static_cast<int>(size()))
      throw DataError("id out of vocabulary range: " + std::to_string(id));
    return id_to_token_[static_cast<std::size_t>(id)];
  }

  TokenSeq decode(const std::vector<int>& ids) const {
    TokenSeq out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back(decode(id));
    return out;
  }

  bool contains(const std::string& token) const {
    return token_to_id_.count(token) > 0;
  }

  // One token per line; the id is the zero-based line number.
  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write vocabulary " + path.string());
    for (const auto& tok : id_to_token_) out << tok << "\n";
  }

  static Vocabulary load(const std::filesystem::path& path, Encoding encoding) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read vocabulary " + path.string());
    Vocabulary v;
    v.encoding_ = encoding;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      v.token_to_id_[line] = static_cast<int>(v.id_to_token_.size());
      v.id_to_token_.push_back(line);
    }
    if (v.id_to_token_.empty()) throw DataError("empty vocabulary " + path.string());
    return v;
  }

 private:
  std::vector<std::string> id_to_token_;
  std::map<std::string, int> token_to_id_;
  Encoding encoding_ = Encoding::Semantic;
};

// ---------------------------------------------------------------------------
// Corpus scanning
// ---------------------------------------------------------------------------

struct CorpusEntry {
  std::string id;
  std::filesystem::path image_path;
  TokenSeq tokens;
};

struct CorpusLoadStats {
  std::size_t usable = 0;
  std::size_t skipped = 0;
};

inline TokenSeq read_token_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read token file " + path.string());
  TokenSeq tokens;
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

// Deterministic ordering (lexicographic by path); image/token pairs that do
// not line up are skipped with a warning.
inline std::vector<CorpusEntry> load_corpus(const std::filesystem::path& root,
                                            Encoding encoding,
                                            CorpusLoadStats* stats = nullptr,
                                            std::ostream* log = nullptr) {
  namespace fs = std::filesystem;
  if (!fs::exists(root) || !fs::is_directory(root))
    throw DataError("corpus root does not exist: " + root.string());
  std::vector<fs::path> images;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && is_image_file(e.path())) images.push_back(e.path());
  std::sort(images.begin(), images.end(),
            [](const fs::path& a, const fs::path& b) { return a.string() < b.string(); });

  const std::string token_ext =
      std::string(".") + encoding_name(encoding);
  std::vector<CorpusEntry> entries;
  CorpusLoadStats local;
  CorpusLoadStats& st = stats ? *stats : local;
  for (const auto& img_path : images) {
    fs::path tok_path = img_path;
    tok_path.replace_extension(token_ext);
    if (!fs::exists(tok_path)) {
      ++st.skipped;
      if (log)
        *log << "warning: skipping " << img_path.string()
             << " (no sibling " << token_ext << " file)\n";
      continue;
    }
    CorpusEntry entry;
    entry.image_path = img_path;
    entry.id = fs::relative(img_path, root).replace_extension("").generic_string();
    try {
      entry.tokens = read_token_file(tok_path);
    } catch (const DataError& err) {
      ++st.skipped;
      if (log) *log << "warning: " << err.what() << "\n";
      continue;
    }
    entries.push_back(std::move(entry));
    ++st.usable;
  }
  if (entries.empty())
    throw DataError("no usable samples under " + root.string());
  return entries;
}

// ---------------------------------------------------------------------------
// Samples and batches
// ---------------------------------------------------------------------------

struct Sample {
  std::string id;
  Tensor image;             // [1, 128, W], values in [0,1]
  std::vector<int> target;  // token ids, blank excluded
};

inline Sample make_sample(const CorpusEntry& entry, const Vocabulary& vocab) {
  Sample s;
  s.id = entry.id;
  s.image = preprocess_image(load_image(entry.image_path));
  s.target = vocab.encode(entry.tokens);
  return s;
}

// Frames available to CTC after encoding; 4 is the encoder width divisor.
inline bool ctc_feasible(const Sample& s, std::size_t width_divisor = 4) {
  const std::size_t frames = s.image.extent(2) / width_divisor;
  std::span<const int> target(s.target.data(), s.target.size());
  return frames >= ctc_min_frames(target);
}

constexpr std::size_t kDefaultBatchSize = 16;
constexpr Real kPadValue = 1.0;  // background white

struct Batch {
  Tensor images;                          // [N, 1, 128, W_max]
  std::vector<std::size_t> widths;        // true W per item
  std::vector<std::vector<int>> targets;  // per-item token ids
  std::vector<std::string> ids;

  std::size_t size() const { return widths.size(); }
};

inline Batch make_batch(std::span<const Sample> samples,
                        std::size_t max_n = kDefaultBatchSize) {
  if (samples.empty()) throw DataError("make_batch: no samples");
  const std::size_t n = std::min(samples.size(), max_n);
  std::size_t w_max = 0, height = samples[0].image.extent(1);
  for (std::size_t i = 0; i < n; ++i)
    w_max = std::max(w_max, samples[i].image.extent(2));
  Batch b;
  b.images = Tensor::full({n, 1, height, w_max}, kPadValue);
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor& img = samples[i].image;
    const std::size_t w = img.extent(2);
    if (img.extent(1) != height)
      throw DataError("make_batch: inconsistent sample heights");
    for (std::size_t y = 0; y < height; ++y)
      std::copy(img.data() + y * w, img.data() + (y + 1) * w,
                b.images.data() + (i * height + y) * w_max);
    b.widths.push_back(w);
    b.targets.push_back(samples[i].target);
    b.ids.push_back(samples[i].id);
  }
  return b;
}

// ---------------------------------------------------------------------------
// Deterministic splits by id hash
// ---------------------------------------------------------------------------

enum class Split { Train, Val, Test };

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

inline Split split_of(const std::string& id, const SplitFractions& f) {
  const std::uint64_t h = hash_str(0x5eed5517ULL, id);
  const double u = static_cast<double>(h % 1000000ULL) / 1e6;
  if (u < f.train) return Split::Train;
  if (u < f.train + f.val) return Split::Val;
  return Split::Test;
}

}  // namespace omr

#endif  // OMR_DATA_HPP_
