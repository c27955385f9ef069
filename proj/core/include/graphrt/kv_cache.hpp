#pragma once

#include <cstdint>
#include <vector>

#include "graphrt/tensor.hpp"

namespace graphrt {

// Per-layer key/value store for one sequence. Each layer holds a pair of
// [max_seq, n_heads, head_dim] tensors allocated once up front; cur_len marks
// how many positions are live. Rows at or beyond cur_len are never read.
// The tensors' buffer ids are stable for the cache's lifetime, so captured
// graphs may bind them like any other workspace buffer.
class KvCache {
 public:
  KvCache(int n_layers, int max_seq, int n_heads, int head_dim);

  int n_layers() const noexcept { return n_layers_; }
  int max_seq() const noexcept { return max_seq_; }
  int n_heads() const noexcept { return n_heads_; }
  int head_dim() const noexcept { return head_dim_; }
  int cur_len() const noexcept { return cur_len_; }

  Tensor& key(int layer) { return keys_[static_cast<std::size_t>(layer)]; }
  Tensor& value(int layer) { return values_[static_cast<std::size_t>(layer)]; }
  const Tensor& key(int layer) const { return keys_[static_cast<std::size_t>(layer)]; }
  const Tensor& value(int layer) const { return values_[static_cast<std::size_t>(layer)]; }

  // Drops all live positions; buffer ids and contents are untouched.
  void reset() noexcept { cur_len_ = 0; }

  // Direct length override for tests and tooling that fill rows by hand.
  void set_len(int len);

  // Used by the kv_append kernel; not for general use.
  void advance_len();

 private:
  int n_layers_, max_seq_, n_heads_, head_dim_;
  int cur_len_ = 0;
  std::vector<Tensor> keys_, values_;
};

}  // namespace graphrt
