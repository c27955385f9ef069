#include "graphrt/kv_cache.hpp"

namespace graphrt {

KvCache::KvCache(int n_layers, int max_seq, int n_heads, int head_dim)
    : n_layers_(n_layers), max_seq_(max_seq), n_heads_(n_heads), head_dim_(head_dim) {
  if (n_layers < 1 || max_seq < 1 || n_heads < 1 || head_dim < 1)
    raise(Errc::InvalidConfig, "kv cache dims must be positive");
  keys_.reserve(static_cast<std::size_t>(n_layers));
  values_.reserve(static_cast<std::size_t>(n_layers));
  for (int l = 0; l < n_layers; ++l) {
    keys_.emplace_back(std::vector<std::int64_t>{max_seq, n_heads, head_dim});
    values_.emplace_back(std::vector<std::int64_t>{max_seq, n_heads, head_dim});
  }
}

void KvCache::set_len(int len) {
  if (len < 0 || len > max_seq_) raise(Errc::CacheFull, "length outside [0, max_seq]");
  cur_len_ = len;
}

void KvCache::advance_len() {
  if (cur_len_ >= max_seq_) raise(Errc::CacheFull, "kv cache at max_seq");
  ++cur_len_;
}

}  // namespace graphrt
