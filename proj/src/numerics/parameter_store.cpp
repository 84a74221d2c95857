#include "mtl/numerics/parameter_store.hpp"

#include "mtl/error.hpp"

namespace mtl {

Tensor& ParameterStore::add(std::string name, Tensor tensor, bool trainable) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
  tensor.set_requires_grad(trainable);
  index_.emplace(name, entries_.size());
  entries_.push_back(Entry{std::move(name), std::move(tensor), trainable});
  return entries_.back().tensor;
}

std::size_t ParameterStore::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw StateError("unknown parameter: " + std::string(name));
  return it->second;
}

bool ParameterStore::contains(std::string_view name) const { return index_.count(std::string(name)) > 0; }

Tensor& ParameterStore::get(std::string_view name) { return entries_[index_of(name)].tensor; }

const Tensor& ParameterStore::get(std::string_view name) const { return entries_[index_of(name)].tensor; }

bool ParameterStore::trainable(std::string_view name) const { return entries_[index_of(name)].trainable; }

void ParameterStore::set_trainable(std::string_view name, bool trainable) {
  Entry& e = entries_[index_of(name)];
  e.trainable = trainable;
  if (e.tensor.requires_grad() != trainable) e.tensor.set_requires_grad(trainable);
}

std::size_t ParameterStore::set_trainable_prefix(std::string_view prefix, bool trainable) {
  std::size_t touched = 0;
  for (Entry& e : entries_) {
    if (std::string_view(e.name).substr(0, prefix.size()) == prefix) {
      e.trainable = trainable;
      if (e.tensor.requires_grad() != trainable) e.tensor.set_requires_grad(trainable);
      ++touched;
    }
  }
  return touched;
}

void ParameterStore::set_all_trainable(bool trainable) { set_trainable_prefix("", trainable); }

void ParameterStore::zero_grad() {
  for (Entry& e : entries_) e.tensor.zero_grad();
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const Entry& e : entries_) n += e.tensor.numel();
  return n;
}

ParameterStore ParameterStore::clone() const {
  ParameterStore out;
  for (const Entry& e : entries_) {
    Tensor copy = e.tensor.clone();
    out.index_.emplace(e.name, out.entries_.size());
    out.entries_.push_back(Entry{e.name, std::move(copy), e.trainable});
  }
  return out;
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
  if (other.size() != size()) throw StateError("parameter store sizes differ");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Entry& src = other.entries_[i];
    Entry& dst = entries_[i];
    if (src.name != dst.name || src.tensor.shape() != dst.tensor.shape()) {
      throw StateError("parameter layout differs at " + dst.name);
    }
    auto out = dst.tensor.mutable_data();
    auto in = src.tensor.data();
    std::copy(in.begin(), in.end(), out.begin());
  }
}

bool ParameterStore::bitwise_equal(const ParameterStore& other) const {
  if (other.size() != size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name) return false;
    if (!entries_[i].tensor.bitwise_equal(other.entries_[i].tensor)) return false;
  }
  return true;
}

bool ParameterStore::bitwise_equal_prefix(const ParameterStore& other, std::string_view prefix) const {
  for (const Entry& e : entries_) {
    if (std::string_view(e.name).substr(0, prefix.size()) != prefix) continue;
    if (!other.contains(e.name) || !e.tensor.bitwise_equal(other.get(e.name))) return false;
  }
  return true;
}

}  // namespace mtl
