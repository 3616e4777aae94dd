#include "mvnmt/data.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace mvnmt {

namespace {

constexpr char kFeatureMagic[4] = {'M', 'V', 'N', 'F'};
constexpr uint32_t kFeatureVersion = 1;

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw DataError(std::string("feature file: truncated while reading ") + what);
  return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
         static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

void put_f32(std::ostream& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

float get_f32(std::istream& in, const char* what) {
  uint32_t bits = get_u32(in, what);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

void write_features(const std::string& path, const FeatureSet& fs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("feature file: cannot write " + path);
  out.write(kFeatureMagic, 4);
  put_u32(out, kFeatureVersion);
  put_u32(out, static_cast<uint32_t>(fs.per_image.size()));
  for (const Tensor& t : fs.per_image) {
    if (t.rank() != 2 || t.cols() != fs.dim)
      throw DataError("feature file: image block " + t.shape_str() + " does not match dim " +
                      std::to_string(fs.dim));
    put_u32(out, static_cast<uint32_t>(t.rows()));
  }
  put_u32(out, static_cast<uint32_t>(fs.dim));
  for (const Tensor& t : fs.per_image)
    for (double v : t.data) put_f32(out, static_cast<float>(v));
  if (!out) throw DataError("feature file: write failed for " + path);
}

FeatureSet read_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("feature file: cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kFeatureMagic, 4) != 0)
    throw DataError("feature file: bad magic in " + path);
  const uint32_t version = get_u32(in, "version");
  if (version != kFeatureVersion)
    throw DataError("feature file: unsupported version " + std::to_string(version));
  const uint32_t count = get_u32(in, "image count");
  std::vector<uint32_t> rows(count);
  for (uint32_t i = 0; i < count; ++i) rows[i] = get_u32(in, "rows table");
  const uint32_t dim = get_u32(in, "feature dim");
  if (dim == 0) throw DataError("feature file: zero feature dim");

  FeatureSet fs;
  fs.dim = dim;
  fs.per_image.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    if (rows[i] == 0) throw DataError("feature file: image " + std::to_string(i) + " has no rows");
    Tensor t({static_cast<int64_t>(rows[i]), static_cast<int64_t>(dim)});
    for (double& v : t.data) v = static_cast<double>(get_f32(in, "payload"));
    fs.per_image.push_back(std::move(t));
  }
  char extra;
  if (in.read(&extra, 1)) throw DataError("feature file: trailing bytes in " + path);
  return fs;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (const auto& line : lines) out << line << "\n";
}

EncodedCorpus encode_corpus(const std::vector<std::string>& src_lines,
                            const std::vector<std::string>& tgt_lines, const Vocabulary& src_vocab,
                            const Vocabulary& tgt_vocab, int64_t maxlen) {
  if (src_lines.size() != tgt_lines.size())
    throw DataError("corpus: source has " + std::to_string(src_lines.size()) +
                    " lines but target has " + std::to_string(tgt_lines.size()));
  EncodedCorpus out;
  for (size_t i = 0; i < src_lines.size(); ++i) {
    if (src_lines[i].empty() || tgt_lines[i].empty())
      throw DataError("corpus: empty line at " + std::to_string(i + 1));
    SentencePair p;
    p.src = src_vocab.encode(src_lines[i], true);
    p.tgt = tgt_vocab.encode(tgt_lines[i], true);
    p.image_index = static_cast<int>(i);
    if (static_cast<int64_t>(p.src.size()) - 1 > maxlen ||
        static_cast<int64_t>(p.tgt.size()) - 1 > maxlen) {
      ++out.dropped;
      continue;
    }
    out.pairs.push_back(std::move(p));
  }
  return out;
}

SyntheticTask parse_task(const std::string& name) {
  if (name == "copy") return SyntheticTask::kCopy;
  if (name == "reverse") return SyntheticTask::kReverse;
  if (name == "lexical-map") return SyntheticTask::kLexicalMap;
  throw DataError("unknown synthetic task '" + name + "' (expected copy|reverse|lexical-map)");
}

ImageMode parse_image_mode(const std::string& name) {
  if (name == "correlated") return ImageMode::kCorrelated;
  if (name == "random") return ImageMode::kRandom;
  throw DataError("unknown image mode '" + name + "' (expected correlated|random)");
}

SyntheticData gen_synthetic(const SyntheticSpec& spec) {
  if (spec.vocab_size < 3) throw DataError("gen_synthetic: vocab size must be at least 3");
  if (spec.pairs < 2) throw DataError("gen_synthetic: need at least 2 pairs");
  if (spec.feature_dim < spec.vocab_size)
    throw DataError("gen_synthetic: feature dim " + std::to_string(spec.feature_dim) +
                    " smaller than vocab size " + std::to_string(spec.vocab_size));

  Rng rng(spec.seed);

  // Word types w01..wNN; lexicographic order equals numeric order.
  std::vector<std::string> words;
  int width = spec.vocab_size > 99 ? 3 : 2;
  for (int64_t i = 0; i < spec.vocab_size; ++i) {
    std::string n = std::to_string(i + 1);
    while (static_cast<int>(n.size()) < width) n = "0" + n;
    words.push_back("w" + n);
  }

  // Seeded permutation over word types for the lexical-map task.
  std::vector<int64_t> mapping(words.size());
  std::iota(mapping.begin(), mapping.end(), 0);
  for (size_t i = mapping.size(); i > 1; --i)
    std::swap(mapping[i - 1], mapping[rng.below(i)]);

  const int64_t val_count = std::max<int64_t>(1, spec.pairs / 30);
  SyntheticData data;
  data.train_features.dim = spec.feature_dim;
  data.val_features.dim = spec.feature_dim;

  for (int64_t n = 0; n < spec.pairs; ++n) {
    const int64_t len = 2 + static_cast<int64_t>(rng.below(11));  // uniform 2..12
    std::vector<int64_t> toks(static_cast<size_t>(len));
    for (auto& t : toks) t = static_cast<int64_t>(rng.below(static_cast<uint64_t>(spec.vocab_size)));

    std::vector<int64_t> tgt = toks;
    switch (spec.task) {
      case SyntheticTask::kCopy: break;
      case SyntheticTask::kReverse: std::reverse(tgt.begin(), tgt.end()); break;
      case SyntheticTask::kLexicalMap:
        for (auto& t : tgt) t = mapping[static_cast<size_t>(t)];
        break;
    }

    std::string src_line, tgt_line;
    for (size_t i = 0; i < toks.size(); ++i) {
      if (i) {
        src_line += ' ';
        tgt_line += ' ';
      }
      src_line += words[static_cast<size_t>(toks[i])];
      tgt_line += words[static_cast<size_t>(tgt[i])];
    }

    Tensor feat({1, spec.feature_dim});
    if (spec.image_mode == ImageMode::kCorrelated) {
      for (int64_t t : toks) feat.at(0, t) = 1.0;
    } else {
      for (double& v : feat.data) v = rng.normal();
    }

    const bool is_val = n < val_count;
    auto& src = is_val ? data.val_src : data.train_src;
    auto& tgt_out = is_val ? data.val_tgt : data.train_tgt;
    auto& feats = is_val ? data.val_features : data.train_features;
    src.push_back(std::move(src_line));
    tgt_out.push_back(std::move(tgt_line));
    feats.per_image.push_back(std::move(feat));
  }
  return data;
}

void write_synthetic(const SyntheticData& data, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_lines(dir + "/train.src", data.train_src);
  write_lines(dir + "/train.tgt", data.train_tgt);
  write_features(dir + "/train.feat", data.train_features);
  write_lines(dir + "/val.src", data.val_src);
  write_lines(dir + "/val.tgt", data.val_tgt);
  write_features(dir + "/val.feat", data.val_features);
}

}  // namespace mvnmt
