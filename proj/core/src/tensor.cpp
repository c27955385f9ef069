#include "graphrt/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <string>

namespace graphrt {

namespace {
std::atomic<BufferId> g_next_buffer_id{1};
}

Tensor::Tensor(std::vector<std::int64_t> shape)
    : shape_(std::move(shape)), id_(g_next_buffer_id.fetch_add(1)) {
  for (auto d : shape_) {
    if (d <= 0) raise(Errc::ShapeMismatch, "tensor dims must be positive, got " + shape_to_string(shape_));
  }
  data_.assign(static_cast<std::size_t>(shape_numel(shape_)), 0.0f);
}

void Tensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::reshape(std::vector<std::int64_t> shape) {
  for (auto d : shape) {
    if (d <= 0) raise(Errc::ShapeMismatch, "tensor dims must be positive");
  }
  shape_ = std::move(shape);
  data_.resize(static_cast<std::size_t>(shape_numel(shape_)), 0.0f);
}

Tensor Tensor::clone() const {
  Tensor t(shape_);
  std::copy(data_.begin(), data_.end(), t.data_.begin());
  return t;
}

std::string shape_to_string(const std::vector<std::int64_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  s += "]";
  return s;
}

}  // namespace graphrt
