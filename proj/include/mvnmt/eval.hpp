#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvnmt/vocab.hpp"

namespace mvnmt {

using TokenSeq = std::vector<std::string>;

// Corpus BLEU in [0, 1]: geometric mean of modified 1..4-gram precisions with
// the brevity penalty exp(1 - r/c) for c < r; no smoothing, so a zero match
// at any order gives 0.
double bleu_corpus(const std::vector<TokenSeq>& hypotheses, const std::vector<TokenSeq>& references);

// Position-wise matches over the total reference token count.
double token_accuracy(const std::vector<TokenSeq>& hypotheses,
                      const std::vector<TokenSeq>& references);

struct BucketRow {
  int64_t lo = 0, hi = 0;  // half-open [lo, hi) over source lengths
  int64_t count = 0;
  double bleu = 0.0;
  double token_acc = 0.0;
  bool empty = true;
};

// Corpus-level scores recomputed per source-length bucket. Edges must be
// strictly increasing and cover every length; bucket counts partition the
// corpus.
std::vector<BucketRow> length_bucket_report(const std::vector<TokenSeq>& hypotheses,
                                            const std::vector<TokenSeq>& references,
                                            const std::vector<int64_t>& source_lengths,
                                            const std::vector<int64_t>& edges);

// CSV with header bucket_lo,bucket_hi,count,bleu,token_acc; empty buckets
// leave the score fields blank.
std::string bucket_csv(const std::vector<BucketRow>& rows);

}  // namespace mvnmt
