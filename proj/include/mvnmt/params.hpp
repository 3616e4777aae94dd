#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "mvnmt/rng.hpp"
#include "mvnmt/tensor.hpp"

namespace mvnmt {

// Named model parameters in registration order. Registration order is fixed by
// the model construction code, which keeps initialization draws, checkpoint
// layout and update order deterministic.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    bool is_bias = false;
  };

  Tensor& add(const std::string& name, std::vector<int64_t> shape, bool is_bias) {
    if (index_.count(name)) throw ContractError("ParamSet: duplicate parameter " + name);
    index_.emplace(name, entries_.size());
    entries_.push_back(Entry{name, Tensor(std::move(shape)), is_bias});
    return entries_.back().value;
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }
  Tensor& at(const std::string& name) { return entries_[index_.at(name)].value; }
  const Tensor& at(const std::string& name) const { return entries_[index_.at(name)].value; }
  bool is_bias(const std::string& name) const { return entries_[index_.at(name)].is_bias; }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

  // Weights ~ N(0, init_std^2), biases exactly zero, in registration order.
  void initialize(Rng& rng, double init_std) {
    for (Entry& e : entries_) {
      if (e.is_bias) {
        std::fill(e.value.data.begin(), e.value.data.end(), 0.0);
      } else {
        for (double& v : e.value.data) v = rng.normal(0.0, init_std);
      }
    }
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, size_t> index_;
};

}  // namespace mvnmt
