#include "mvnmt/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

namespace mvnmt {

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> out;
  size_t i = 0;
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
  };
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

Vocabulary::Vocabulary() {
  add_token("<eos>");
  add_token("<unk>");
}

void Vocabulary::add_token(const std::string& tok) {
  ids_.emplace(tok, static_cast<int>(tokens_.size()));
  tokens_.push_back(tok);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& lines, size_t max_size) {
  if (lines.empty()) throw DataError("build_vocab: empty corpus");
  if (max_size < 2) throw DataError("build_vocab: max_size must be at least 2");

  std::map<std::string, int64_t> counts;  // ordered map gives the lexicographic tie-break
  for (const auto& line : lines)
    for (const auto& tok : split_tokens(line)) ++counts[tok];

  std::vector<std::pair<std::string, int64_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary v;
  const size_t keep = max_size - 2;
  for (size_t i = 0; i < ranked.size() && i < keep; ++i) v.add_token(ranked[i].first);
  return v;
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("vocab: cannot open " + path);
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (v.ids_.count(line)) throw DataError("vocab: duplicate token '" + line + "' in " + path);
    v.add_token(line);
  }
  return v;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("vocab: cannot write " + path);
  for (size_t i = 2; i < tokens_.size(); ++i) out << tokens_[i] << "\n";
}

int Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<size_t>(id) >= tokens_.size())
    throw DataError("vocab: id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::string& line, bool append_eos) const {
  std::vector<int> out;
  for (const auto& tok : split_tokens(line)) out.push_back(id(tok));
  if (append_eos) out.push_back(kEos);
  return out;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id == kEos) break;
    if (!out.empty()) out += ' ';
    out += token(id);
  }
  return out;
}

}  // namespace mvnmt
