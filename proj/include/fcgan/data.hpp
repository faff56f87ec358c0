#pragma once

// HR / LR / BHR triples, corpus indexing and seeded train/val/test splits.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fcgan/image_io.hpp"
#include "fcgan/ratio.hpp"
#include "fcgan/resample.hpp"

namespace fcgan {

inline constexpr std::size_t kDefaultImageSize = 128;
inline constexpr std::size_t kUpscale = 4;

/// x -> 2x - 1, mapping [0, 1] onto [-1, 1].
inline Image normalize(const Image& img01) {
  Image out = img01;
  for (float& v : out.data()) v = 2.0f * v - 1.0f;
  return out;
}

/// Inverse of normalize, clamped to [0, 1].
inline Image denormalize(const Image& imgn) {
  Image out = imgn;
  for (float& v : out.data()) v = std::clamp((v + 1.0f) * 0.5f, 0.0f, 1.0f);
  return out;
}

/// One training example; all three images are normalized to [-1, 1].
struct PairRecord {
  std::string id;
  Image hr;   // (3, S, S)
  Image lr;   // (3, S/4, S/4) = bicubic_resample(hr)
  Image bhr;  // (3, S, S)     = bicubic_resample(lr)
};

struct Degraded {
  Image lr;
  Image bhr;
};

/// x4 bicubic down- then up-sampling of a square HR image.
inline Degraded degrade(const Image& hr, std::size_t image_size = kDefaultImageSize) {
  if (hr.rank() != 3 || hr.dim(0) != kRgb || hr.dim(1) != image_size || hr.dim(2) != image_size) {
    fail(ErrorKind::kShape, "degrade expects a (3, " + std::to_string(image_size) + ", " +
                                std::to_string(image_size) + ") image, got " + shape_string(hr.shape()));
  }
  Degraded out;
  out.lr = bicubic_resample(hr, image_size / kUpscale, image_size / kUpscale);
  out.bhr = bicubic_resample(out.lr, image_size, image_size);
  return out;
}

/// Crop-resizes a decoded [0, 1] image, snaps it to the 8-bit grid so that a
/// PNG of the HR image reproduces it exactly, then degrades it.
inline PairRecord make_record(std::string id, const Image& decoded01, std::size_t image_size = kDefaultImageSize) {
  PairRecord r;
  r.id = std::move(id);
  r.hr = normalize(quantize(center_crop_resize(decoded01, image_size)));
  Degraded d = degrade(r.hr, image_size);
  r.lr = std::move(d.lr);
  r.bhr = std::move(d.bhr);
  return r;
}

/// Image files of a directory keyed by file stem, in sorted order.
class Corpus {
 public:
  explicit Corpus(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!std::filesystem::is_directory(dir_)) fail(ErrorKind::kIo, "corpus directory not found: " + dir_.string());
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
      if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
      const std::string stem = entry.path().stem().string();
      if (!files_.emplace(stem, entry.path()).second) {
        fail(ErrorKind::kValue, "corpus has two images with stem '" + stem + "' in " + dir_.string());
      }
    }
  }

  const std::filesystem::path& dir() const { return dir_; }
  std::size_t size() const { return files_.size(); }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& [id, path] : files_) out.push_back(id);
    return out;
  }

  const std::filesystem::path& path(const std::string& id) const {
    const auto it = files_.find(id);
    if (it == files_.end()) fail(ErrorKind::kIo, "image '" + id + "' not found in " + dir_.string());
    return it->second;
  }

  PairRecord load(const std::string& id, std::size_t image_size = kDefaultImageSize) const {
    return make_record(id, decode_image(path(id)), image_size);
  }

  std::vector<PairRecord> load(const std::vector<std::string>& ids, std::size_t image_size = kDefaultImageSize) const {
    std::vector<PairRecord> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(load(id, image_size));
    return out;
  }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::filesystem::path> files_;
};

enum class Split { kTrain, kVal, kTest };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

inline Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  fail(ErrorKind::kFormat, "unknown split '" + name + "' (expected train, val or test)");
}

/// Disjoint train/val/test id lists covering a corpus.
///
/// Allocation: ids are sorted, shuffled with a seeded mt19937_64, then val and
/// test take floor(n * fraction) ids each and train takes the remainder.
struct SplitManifest {
  std::vector<std::string> train, val, test;
  std::uint64_t seed = 0;
  std::array<Ratio, 3> fractions{Ratio(9, 10), Ratio(1, 20), Ratio(1, 20)};

  const std::vector<std::string>& ids(Split s) const {
    return s == Split::kTrain ? train : (s == Split::kVal ? val : test);
  }
  std::vector<std::string>& ids(Split s) {
    return s == Split::kTrain ? train : (s == Split::kVal ? val : test);
  }
};

inline std::array<Ratio, 3> parse_fractions(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  for (std::string part; std::getline(in, part, ',');) parts.push_back(part);
  if (parts.size() != 3) fail(ErrorKind::kFormat, "fractions must be three comma-separated values, got '" + text + "'");
  std::array<Ratio, 3> out;
  for (std::size_t i = 0; i < 3; ++i) out[i] = parse_ratio(parts[i]);
  // a/b + c/d + e/f == 1 checked in 128-bit to avoid overflow
  using Wide = unsigned __int128;
  const Wide den = Wide(out[0].den) * out[1].den * out[2].den;
  const Wide num = Wide(out[0].num) * out[1].den * out[2].den + Wide(out[1].num) * out[0].den * out[2].den +
                   Wide(out[2].num) * out[0].den * out[1].den;
  if (num != den) fail(ErrorKind::kValue, "fractions must sum to 1, got '" + text + "'");
  return out;
}

inline std::size_t floor_share(std::size_t n, const Ratio& r) {
  return static_cast<std::size_t>((static_cast<unsigned __int128>(n) * r.num) / r.den);
}

inline SplitManifest build_manifest(const std::vector<std::string>& corpus_ids, std::uint64_t seed,
                                    const std::array<Ratio, 3>& fractions) {
  if (corpus_ids.empty()) fail(ErrorKind::kValue, "cannot build a manifest from an empty corpus");
  std::vector<std::string> ids = corpus_ids;
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) fail(ErrorKind::kValue, "duplicate ids in corpus");
  std::mt19937_64 engine(seed);
  std::shuffle(ids.begin(), ids.end(), engine);

  SplitManifest m;
  m.seed = seed;
  m.fractions = fractions;
  const std::size_t n_val = floor_share(ids.size(), fractions[1]);
  const std::size_t n_test = floor_share(ids.size(), fractions[2]);
  const std::size_t n_train = ids.size() - n_val - n_test;
  m.train.assign(ids.begin(), ids.begin() + n_train);
  m.val.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
  m.test.assign(ids.begin() + n_train + n_val, ids.end());
  return m;
}

inline SplitManifest build_manifest(const Corpus& corpus, std::uint64_t seed, const std::array<Ratio, 3>& fractions) {
  if (corpus.size() < 3) {
    fail(ErrorKind::kValue, "corpus " + corpus.dir().string() + " has " + std::to_string(corpus.size()) +
                                " images; at least 3 are required");
  }
  return build_manifest(corpus.ids(), seed, fractions);
}

/// Text form: a '#' header with seed and fractions, then one "<split>\t<id>" line per id.
inline std::string format_manifest(const SplitManifest& m) {
  std::ostringstream out;
  out << "# fcgan manifest seed=" << m.seed << " fractions=" << m.fractions[0].str() << ','
      << m.fractions[1].str() << ',' << m.fractions[2].str() << '\n';
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    for (const auto& id : m.ids(s)) out << split_name(s) << '\t' << id << '\n';
  }
  return out.str();
}

inline SplitManifest parse_manifest(std::istream& in) {
  SplitManifest m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream header(line.substr(1));
      std::string token;
      while (header >> token) {
        if (token.rfind("seed=", 0) == 0) m.seed = std::stoull(token.substr(5));
        if (token.rfind("fractions=", 0) == 0) m.fractions = parse_fractions(token.substr(10));
      }
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab + 1 == line.size()) {
      fail(ErrorKind::kFormat, "manifest line " + std::to_string(line_no) + " is not '<split>\\t<id>'");
    }
    m.ids(parse_split(line.substr(0, tab))).push_back(line.substr(tab + 1));
  }
  return m;
}

inline void save_manifest(const SplitManifest& m, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << format_manifest(m);
  if (!out) fail(ErrorKind::kIo, "cannot write manifest " + path.string());
}

inline SplitManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open manifest " + path.string());
  return parse_manifest(in);
}

}  // namespace fcgan
