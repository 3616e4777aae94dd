#include "mvnmt/config.hpp"

#include <fstream>

#include "mvnmt/data.hpp"

namespace mvnmt {

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw DataError("config: key " + key + " wants true/false, got '" + v + "'");
}

int64_t parse_int(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    int64_t out = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw DataError("config: key " + key + " wants an integer, got '" + v + "'");
  }
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw DataError("config: key " + key + " wants a number, got '" + v + "'");
  }
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void RunConfig::resolve() {
  parse_variant(variant);  // validates the name
  if (dim_pic < 0) dim_pic = variant == "g" ? 512 : 256;
  if (decay_c < 0) decay_c = (variant == "nmt" || variant == "g") ? 0.001 : 0.0005;
}

RunConfig parse_config(const std::vector<std::string>& lines, const std::string& origin) {
  RunConfig rc;
  int lineno = 0;
  for (const auto& raw : lines) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("config " + origin + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));

    if (key == "variant") rc.variant = val;
    else if (key == "dim") rc.dim = parse_int(val, key);
    else if (key == "dim_word") rc.dim_word = parse_int(val, key);
    else if (key == "dimv") rc.dimv = parse_int(val, key);
    else if (key == "dim_pic") rc.dim_pic = parse_int(val, key);
    else if (key == "dim_fc7") rc.dim_fc7 = parse_int(val, key);
    else if (key == "batchsize") rc.batchsize = parse_int(val, key);
    else if (key == "maxlen") rc.maxlen = parse_int(val, key);
    else if (key == "lr") rc.lr = parse_double(val, key);
    else if (key == "decay_c") rc.decay_c = parse_double(val, key);
    else if (key == "seed") rc.seed = static_cast<uint64_t>(parse_int(val, key));
    else if (key == "validate_every") rc.validate_every = parse_int(val, key);
    else if (key == "patience") rc.patience = parse_int(val, key);
    else if (key == "max_iters") rc.max_iters = parse_int(val, key);
    else if (key == "init_std") rc.init_std = parse_double(val, key);
    else if (key == "gate_fix") rc.gate_fix = parse_bool(val, key);
    else if (key == "latent_direct") rc.latent_direct = parse_bool(val, key);
    else if (key == "checkpoint_f32") rc.checkpoint_f32 = parse_bool(val, key);
    else if (key == "length_normalize") rc.length_normalize = parse_bool(val, key);
    else if (key == "beam") rc.beam = parse_int(val, key);
    else if (key == "vocab_max") rc.vocab_max = parse_int(val, key);
    else if (key == "bucket_edges") rc.bucket_edges = val;
    else if (key == "train_source") rc.train_source = val;
    else if (key == "train_target") rc.train_target = val;
    else if (key == "train_features") rc.train_features = val;
    else if (key == "val_source") rc.val_source = val;
    else if (key == "val_target") rc.val_target = val;
    else if (key == "val_features") rc.val_features = val;
    else if (key == "vocab_source") rc.vocab_source = val;
    else if (key == "vocab_target") rc.vocab_target = val;
    else
      throw DataError("config " + origin + ":" + std::to_string(lineno) + ": unknown key '" +
                      key + "'");
  }
  return rc;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("config: cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return parse_config(lines, path);
}

std::vector<int64_t> parse_bucket_edges(const std::string& spec) {
  std::vector<int64_t> edges;
  std::string cur;
  for (char c : spec + ",") {
    if (c == ',') {
      if (!cur.empty()) edges.push_back(parse_int(trim(cur), "bucket_edges"));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (edges.size() < 2) throw DataError("bucket_edges: need at least two edges");
  for (size_t i = 1; i < edges.size(); ++i)
    if (edges[i] <= edges[i - 1]) throw DataError("bucket_edges: edges must be strictly increasing");
  return edges;
}

ModelConfig to_model_config(const RunConfig& rc, int64_t vocab_src, int64_t vocab_tgt) {
  ModelConfig mc;
  mc.variant = parse_variant(rc.variant);
  mc.d_h = rc.dim;
  mc.d_emb = rc.dim_word;
  mc.d_z = rc.dimv;
  mc.d_pi = rc.dim_pic;
  mc.d_fc7 = rc.dim_fc7;
  mc.vocab_src = vocab_src;
  mc.vocab_tgt = vocab_tgt;
  mc.gate_fix = rc.gate_fix;
  mc.latent_direct = rc.latent_direct;
  return mc;
}

}  // namespace mvnmt
