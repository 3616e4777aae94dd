#include "mvnmt/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace mvnmt {

namespace {

constexpr char kMagic[4] = {'M', 'V', 'N', 'C'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kFlagF32 = 1u;

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, uint64_t v) {
  put_u32(out, static_cast<uint32_t>(v));
  put_u32(out, static_cast<uint32_t>(v >> 32));
}

void put_f64(std::ostream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

void put_f32(std::ostream& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

uint32_t get_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw DataError(std::string("checkpoint: truncated while reading ") + what);
  return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
         static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

uint64_t get_u64(std::istream& in, const char* what) {
  uint64_t lo = get_u32(in, what);
  uint64_t hi = get_u32(in, what);
  return lo | hi << 32;
}

double get_f64(std::istream& in, const char* what) {
  uint64_t bits = get_u64(in, what);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

float get_f32(std::istream& in, const char* what) {
  uint32_t bits = get_u32(in, what);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in, const char* what) {
  const uint32_t len = get_u32(in, what);
  if (len > (1u << 20)) throw DataError(std::string("checkpoint: implausible string length in ") + what);
  std::string s(len, '\0');
  if (len && !in.read(s.data(), len))
    throw DataError(std::string("checkpoint: truncated while reading ") + what);
  return s;
}

void put_tensor(std::ostream& out, const std::string& name, const Tensor& t, bool f32) {
  put_string(out, name);
  put_u32(out, static_cast<uint32_t>(t.rank()));
  for (int64_t d : t.shape) put_u32(out, static_cast<uint32_t>(d));
  if (f32)
    for (double v : t.data) put_f32(out, static_cast<float>(v));
  else
    for (double v : t.data) put_f64(out, v);
}

std::pair<std::string, Tensor> get_tensor(std::istream& in, bool f32) {
  std::string name = get_string(in, "parameter name");
  const uint32_t rank = get_u32(in, "rank");
  if (rank == 0 || rank > 8) throw DataError("checkpoint: bad rank for " + name);
  std::vector<int64_t> shape(rank);
  for (auto& d : shape) {
    d = get_u32(in, "dims");
    if (d <= 0) throw DataError("checkpoint: bad dimension for " + name);
  }
  Tensor t(shape);
  if (f32)
    for (double& v : t.data) v = static_cast<double>(get_f32(in, "payload"));
  else
    for (double& v : t.data) v = get_f64(in, "payload");
  return {std::move(name), std::move(t)};
}

}  // namespace

Checkpoint Checkpoint::from_params(const std::string& variant, const ParamSet& ps) {
  Checkpoint c;
  c.variant = variant;
  for (const auto& e : ps.entries()) c.params.emplace_back(e.name, e.value);
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::string& path, bool f32) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("checkpoint: cannot write " + tmp);
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, f32 ? kFlagF32 : 0u);
    put_string(out, c.variant);
    put_u32(out, static_cast<uint32_t>(c.params.size()));
    for (const auto& [name, t] : c.params) put_tensor(out, name, t, f32);

    if (c.has_optimizer) {
      out.write("OPTS", 4);
      put_u32(out, static_cast<uint32_t>(c.opt_grad_acc.size()));
      for (size_t i = 0; i < c.opt_grad_acc.size(); ++i) {
        put_tensor(out, c.opt_grad_acc[i].first, c.opt_grad_acc[i].second, false);
        put_tensor(out, c.opt_update_acc[i].first, c.opt_update_acc[i].second, false);
      }
    }
    if (c.has_rng) {
      out.write("RNGS", 4);
      for (uint64_t w : c.rng_state.s) put_u64(out, w);
      put_f64(out, c.rng_state.cached);
      put_u32(out, c.rng_state.has_cached);
    }
    if (c.has_iteration) {
      out.write("ITER", 4);
      put_u64(out, c.iteration);
    }
    if (!out) throw DataError("checkpoint: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DataError("checkpoint: cannot rename " + tmp + " to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("checkpoint: bad magic in " + path);
  const uint32_t version = get_u32(in, "version");
  if (version != kVersion)
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  const uint32_t flags = get_u32(in, "flags");
  const bool f32 = (flags & kFlagF32) != 0;

  Checkpoint c;
  c.variant = get_string(in, "variant tag");
  const uint32_t count = get_u32(in, "parameter count");
  c.params.reserve(count);
  for (uint32_t i = 0; i < count; ++i) c.params.push_back(get_tensor(in, f32));

  char tag[4];
  while (in.read(tag, 4)) {
    if (std::memcmp(tag, "OPTS", 4) == 0) {
      const uint32_t n = get_u32(in, "optimizer count");
      for (uint32_t i = 0; i < n; ++i) {
        c.opt_grad_acc.push_back(get_tensor(in, false));
        c.opt_update_acc.push_back(get_tensor(in, false));
      }
      c.has_optimizer = true;
    } else if (std::memcmp(tag, "RNGS", 4) == 0) {
      for (uint64_t& w : c.rng_state.s) w = get_u64(in, "rng state");
      c.rng_state.cached = get_f64(in, "rng cache");
      c.rng_state.has_cached = static_cast<uint8_t>(get_u32(in, "rng cache flag"));
      c.has_rng = true;
    } else if (std::memcmp(tag, "ITER", 4) == 0) {
      c.iteration = get_u64(in, "iteration");
      c.has_iteration = true;
    } else {
      throw DataError("checkpoint: unknown section tag in " + path);
    }
  }
  return c;
}

std::string CheckpointCompat::report() const {
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) {
      if (!s.empty()) s += ", ";
      s += x;
    }
    return s;
  };
  std::string out = "carried " + std::to_string(carried.size()) + " parameter(s)";
  if (!missing.empty()) out += "; missing (freshly initialized): " + join(missing);
  if (!extra.empty()) out += "; extra (ignored): " + join(extra);
  if (!shape_mismatch.empty()) out += "; shape mismatch (freshly initialized): " + join(shape_mismatch);
  return out;
}

CheckpointCompat apply_checkpoint(const Checkpoint& c, ParamSet& ps) {
  CheckpointCompat compat;
  std::unordered_map<std::string, char> seen;
  for (const auto& [name, t] : c.params) {
    if (!ps.has(name)) {
      compat.extra.push_back(name);
      continue;
    }
    seen[name] = 1;
    Tensor& dst = ps.at(name);
    if (!dst.same_shape(t)) {
      compat.shape_mismatch.push_back(name + " (checkpoint " + t.shape_str() + ", model " +
                                      dst.shape_str() + ")");
    } else {
      dst = t;
      compat.carried.push_back(name);
    }
  }
  for (const auto& e : ps.entries())
    if (!seen.count(e.name)) compat.missing.push_back(e.name);
  return compat;
}

void load_exact(const Checkpoint& c, ParamSet& ps) {
  CheckpointCompat compat = apply_checkpoint(c, ps);
  if (!compat.exact())
    throw DataError("checkpoint does not match the model: " + compat.report());
}

}  // namespace mvnmt
