#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "mvnmt/tensor.hpp"

namespace mvnmt {

// Data ingestion and format violations (ragged corpora, bad magic numbers,
// truncated payloads, unknown config keys). CLI maps these to exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Token dictionary with two reserved ids: 0 = end of sequence, 1 = unknown.
class Vocabulary {
 public:
  static constexpr int kEos = 0;
  static constexpr int kUnk = 1;

  Vocabulary();

  // Whitespace tokens ranked by descending frequency, ties broken
  // lexicographically; the top max_size - 2 survive next to the reserved ids.
  static Vocabulary build(const std::vector<std::string>& lines, size_t max_size);

  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  int id(const std::string& token) const;  // kUnk when absent
  const std::string& token(int id) const;
  size_t size() const { return tokens_.size(); }

  std::vector<int> encode(const std::string& line, bool append_eos) const;
  std::string decode(const std::vector<int>& ids) const;  // stops before EOS

 private:
  void add_token(const std::string& tok);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// ASCII-whitespace tokenization; locale independent.
std::vector<std::string> split_tokens(const std::string& line);

}  // namespace mvnmt
