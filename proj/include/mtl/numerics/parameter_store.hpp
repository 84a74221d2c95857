#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mtl/numerics/tensor.hpp"

namespace mtl {

// Named parameters in insertion order. Each entry carries a trainable flag;
// setting it also toggles the tensor's requires_grad.
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
    bool trainable = true;
  };

  Tensor& add(std::string name, Tensor tensor, bool trainable = true);

  bool contains(std::string_view name) const;
  Tensor& get(std::string_view name);
  const Tensor& get(std::string_view name) const;
  bool trainable(std::string_view name) const;

  void set_trainable(std::string_view name, bool trainable);
  // Applies to every parameter whose name starts with `prefix`; returns how
  // many were touched.
  std::size_t set_trainable_prefix(std::string_view prefix, bool trainable);
  void set_all_trainable(bool trainable);

  void zero_grad();

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }

  // Deep copy: fresh tensors, same names, values and flags.
  ParameterStore clone() const;
  // Overwrites values from a store with the same names and shapes.
  void copy_values_from(const ParameterStore& other);
  bool bitwise_equal(const ParameterStore& other) const;
  // Bitwise comparison restricted to names starting with `prefix`.
  bool bitwise_equal_prefix(const ParameterStore& other, std::string_view prefix) const;

 private:
  std::size_t index_of(std::string_view name) const;

  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace mtl
