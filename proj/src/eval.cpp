#include "mvnmt/eval.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace mvnmt {

namespace {

using NgramCounts = std::map<std::vector<std::string>, int64_t>;

NgramCounts ngrams(const TokenSeq& toks, size_t n) {
  NgramCounts out;
  if (toks.size() < n) return out;
  for (size_t i = 0; i + n <= toks.size(); ++i)
    ++out[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                   toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return out;
}

void check_aligned(const std::vector<TokenSeq>& hyp, const std::vector<TokenSeq>& ref,
                   const char* what) {
  if (hyp.size() != ref.size())
    throw DataError(std::string(what) + ": " + std::to_string(hyp.size()) + " hypotheses vs " +
                    std::to_string(ref.size()) + " references");
  if (hyp.empty()) throw DataError(std::string(what) + ": empty corpus");
}

}  // namespace

double bleu_corpus(const std::vector<TokenSeq>& hypotheses,
                   const std::vector<TokenSeq>& references) {
  check_aligned(hypotheses, references, "bleu_corpus");

  int64_t matched[4] = {0, 0, 0, 0};
  int64_t total[4] = {0, 0, 0, 0};
  int64_t hyp_len = 0, ref_len = 0;
  for (size_t i = 0; i < hypotheses.size(); ++i) {
    hyp_len += static_cast<int64_t>(hypotheses[i].size());
    ref_len += static_cast<int64_t>(references[i].size());
    for (size_t n = 1; n <= 4; ++n) {
      NgramCounts h = ngrams(hypotheses[i], n);
      NgramCounts r = ngrams(references[i], n);
      for (const auto& [gram, count] : h) {
        total[n - 1] += count;
        auto it = r.find(gram);
        if (it != r.end()) matched[n - 1] += std::min(count, it->second);
      }
    }
  }

  double log_precision = 0.0;
  for (int n = 0; n < 4; ++n) {
    if (matched[n] == 0 || total[n] == 0) return 0.0;
    log_precision += 0.25 * std::log(static_cast<double>(matched[n]) / static_cast<double>(total[n]));
  }
  if (hyp_len == 0) return 0.0;
  const double bp =
      hyp_len < ref_len ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len))
                        : 1.0;
  return bp * std::exp(log_precision);
}

double token_accuracy(const std::vector<TokenSeq>& hypotheses,
                      const std::vector<TokenSeq>& references) {
  check_aligned(hypotheses, references, "token_accuracy");
  int64_t matches = 0, ref_tokens = 0;
  for (size_t i = 0; i < hypotheses.size(); ++i) {
    ref_tokens += static_cast<int64_t>(references[i].size());
    const size_t overlap = std::min(hypotheses[i].size(), references[i].size());
    for (size_t j = 0; j < overlap; ++j)
      if (hypotheses[i][j] == references[i][j]) ++matches;
  }
  return ref_tokens == 0 ? 0.0 : static_cast<double>(matches) / static_cast<double>(ref_tokens);
}

std::vector<BucketRow> length_bucket_report(const std::vector<TokenSeq>& hypotheses,
                                            const std::vector<TokenSeq>& references,
                                            const std::vector<int64_t>& source_lengths,
                                            const std::vector<int64_t>& edges) {
  check_aligned(hypotheses, references, "length_bucket_report");
  if (source_lengths.size() != hypotheses.size())
    throw DataError("length_bucket_report: source length list misaligned");
  if (edges.size() < 2) throw DataError("length_bucket_report: need at least two edges");
  for (size_t i = 1; i < edges.size(); ++i)
    if (edges[i] <= edges[i - 1])
      throw DataError("length_bucket_report: edges must be strictly increasing");

  const size_t buckets = edges.size() - 1;
  std::vector<std::vector<size_t>> members(buckets);
  for (size_t i = 0; i < source_lengths.size(); ++i) {
    const int64_t len = source_lengths[i];
    bool placed = false;
    for (size_t b = 0; b < buckets; ++b)
      if (len >= edges[b] && len < edges[b + 1]) {
        members[b].push_back(i);
        placed = true;
        break;
      }
    if (!placed)
      throw DataError("length_bucket_report: source length " + std::to_string(len) +
                      " outside bucket edges");
  }

  std::vector<BucketRow> rows;
  for (size_t b = 0; b < buckets; ++b) {
    BucketRow row;
    row.lo = edges[b];
    row.hi = edges[b + 1];
    row.count = static_cast<int64_t>(members[b].size());
    if (!members[b].empty()) {
      std::vector<TokenSeq> h, r;
      for (size_t i : members[b]) {
        h.push_back(hypotheses[i]);
        r.push_back(references[i]);
      }
      row.bleu = bleu_corpus(h, r);
      row.token_acc = token_accuracy(h, r);
      row.empty = false;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string bucket_csv(const std::vector<BucketRow>& rows) {
  std::ostringstream os;
  os << "bucket_lo,bucket_hi,count,bleu,token_acc\n";
  for (const auto& r : rows) {
    os << r.lo << "," << r.hi << "," << r.count << ",";
    if (!r.empty) os << r.bleu;
    os << ",";
    if (!r.empty) os << r.token_acc;
    os << "\n";
  }
  return os.str();
}

}  // namespace mvnmt
