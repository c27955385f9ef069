#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "graphrt/error.hpp"

namespace graphrt {

using BufferId = std::uint64_t;

// Dense row-major float32 buffer. A Tensor is an identity, not a value: the
// buffer_id is assigned once at allocation and survives every in-place write,
// which is what makes captured bindings meaningful. Tensors are movable but
// not copyable; clone() produces an independent buffer with a fresh id.
class Tensor {
 public:
  explicit Tensor(std::vector<std::int64_t> shape);

  Tensor(const Tensor&) = delete;
  Tensor& operator=(const Tensor&) = delete;
  Tensor(Tensor&&) noexcept = default;
  Tensor& operator=(Tensor&&) noexcept = default;

  static Tensor zeros(std::vector<std::int64_t> shape) { return Tensor(std::move(shape)); }

  const std::vector<std::int64_t>& shape() const noexcept { return shape_; }
  std::int64_t numel() const noexcept { return static_cast<std::int64_t>(data_.size()); }
  BufferId buffer_id() const noexcept { return id_; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  float* raw() noexcept { return data_.data(); }
  const float* raw() const noexcept { return data_.data(); }

  float& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  float operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  void fill(float v);

  // Re-shapes (and if needed re-sizes) the buffer in place. The id is stable:
  // this models an in-place metadata change, and exists mainly so replay
  // validation against frozen shapes is testable.
  void reshape(std::vector<std::int64_t> shape);

  Tensor clone() const;

 private:
  std::vector<std::int64_t> shape_;
  std::vector<float> data_;
  BufferId id_;
};

inline std::int64_t shape_numel(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_to_string(const std::vector<std::int64_t>& shape);

}  // namespace graphrt
