#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvnmt/rng.hpp"
#include "mvnmt/tensor.hpp"
#include "mvnmt/vocab.hpp"

namespace mvnmt {

// Per-image feature block: [l, dim] with row 0 the whole-image vector.
struct FeatureSet {
  int64_t dim = 0;
  std::vector<Tensor> per_image;

  size_t count() const { return per_image.size(); }
};

// MVNF container: magic, version, image count, rows-per-image table, feature
// dim, then little-endian f32 payload grouped per image.
void write_features(const std::string& path, const FeatureSet& fs);
FeatureSet read_features(const std::string& path);

struct SentencePair {
  std::vector<int> src;  // EOS-terminated ids
  std::vector<int> tgt;
  int image_index = -1;  // line number, indexing the feature file
};

std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);

// EOS appended to every sentence; unknown tokens map to UNK; pairs where
// either side exceeds maxlen tokens (before EOS) are dropped and counted.
struct EncodedCorpus {
  std::vector<SentencePair> pairs;
  int64_t dropped = 0;
};
EncodedCorpus encode_corpus(const std::vector<std::string>& src_lines,
                            const std::vector<std::string>& tgt_lines, const Vocabulary& src_vocab,
                            const Vocabulary& tgt_vocab, int64_t maxlen);

enum class SyntheticTask { kCopy, kReverse, kLexicalMap };
SyntheticTask parse_task(const std::string& name);

enum class ImageMode { kCorrelated, kRandom };
ImageMode parse_image_mode(const std::string& name);

struct SyntheticSpec {
  SyntheticTask task = SyntheticTask::kCopy;
  ImageMode image_mode = ImageMode::kCorrelated;
  int64_t vocab_size = 12;   // distinct word types
  int64_t pairs = 517;       // total; 1/30 held out for validation
  int64_t feature_dim = 64;  // padded indicator / noise width
  uint64_t seed = 1;
};

struct SyntheticData {
  std::vector<std::string> train_src, train_tgt;
  std::vector<std::string> val_src, val_tgt;
  FeatureSet train_features, val_features;
};

// Source lengths uniform in [2, 12]; targets per task; `correlated` features
// are bag-of-token indicators over the generator vocabulary (zero padded),
// `random` features are standard-normal noise.
SyntheticData gen_synthetic(const SyntheticSpec& spec);

// Writes <prefix>/{train,val}.{src,tgt,feat}.
void write_synthetic(const SyntheticData& data, const std::string& dir);

}  // namespace mvnmt
