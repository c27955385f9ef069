#include "graphrt/graph_cache.hpp"

#include <limits>
#include <string>

#include "graphrt/error.hpp"

namespace graphrt {

GraphCache::GraphCache(std::size_t capacity, EvictionPolicy policy)
    : capacity_(capacity), policy_(policy) {
  if (capacity == 0) raise(Errc::InvalidConfig, "cache capacity must be positive");
}

std::optional<ExecGraphPtr> GraphCache::lookup(int length_key) {
  auto it = entries_.find(length_key);
  if (it == entries_.end()) {
    ++stats_.misses;
    return std::nullopt;
  }
  ++stats_.hits;
  Entry& e = it->second;
  ++e.use_count;
  e.last_use_seq = ++seq_;
  if (in_session_) e.active = true;
  return e.graph;
}

std::optional<int> GraphCache::insert(int length_key, ExecGraphPtr graph) {
  if (!graph) raise(Errc::InvalidConfig, "insert: null graph");
  if (graph->length_key() != length_key) {
    raise(Errc::KeyMismatch, "insert: graph built for length " +
                                 std::to_string(graph->length_key()) +
                                 " filed under key " + std::to_string(length_key));
  }
  std::optional<int> evicted;
  auto it = entries_.find(length_key);
  if (it != entries_.end()) {
    // Replacement: newer capture supersedes the old graph in place.
    Entry& e = it->second;
    e.graph = std::move(graph);
    e.use_count = 0;
    e.insert_seq = ++seq_;
    e.last_use_seq = e.insert_seq;
    if (in_session_) e.active = true;
    ++stats_.inserts;
    return evicted;
  }
  if (entries_.size() == capacity_) {
    int victim = pick_victim();
    entries_.erase(victim);
    ++stats_.evictions;
    evicted = victim;
  }
  Entry e;
  e.graph = std::move(graph);
  e.insert_seq = ++seq_;
  e.last_use_seq = e.insert_seq;
  if (in_session_) e.active = true;
  entries_.emplace(length_key, std::move(e));
  ++stats_.inserts;
  return evicted;
}

int GraphCache::pick_victim() const {
  // Scan in key order; strict < keeps the first (smallest-key) candidate on
  // exact ties of the ranking pair, but the pairs below are unique by
  // construction: insert_seq is unique, and last_use_seq is unique.
  int victim = entries_.begin()->first;
  std::uint64_t best_primary = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t best_secondary = std::numeric_limits<std::uint64_t>::max();
  for (const auto& [key, e] : entries_) {
    std::uint64_t primary, secondary;
    if (policy_ == EvictionPolicy::LeastUsed) {
      primary = e.use_count;
      secondary = e.insert_seq;  // ties on use count: evict the oldest insert
    } else {
      primary = e.last_use_seq;
      secondary = e.insert_seq;
    }
    if (primary < best_primary || (primary == best_primary && secondary < best_secondary)) {
      best_primary = primary;
      best_secondary = secondary;
      victim = key;
    }
  }
  return victim;
}

int GraphCache::precapture_warmup(int lo, int hi,
                                  const std::function<ExecGraphPtr(int)>& capture_fn) {
  if (hi < lo) return 0;
  std::size_t span = static_cast<std::size_t>(hi - lo + 1);
  if (span > capacity_) {
    raise(Errc::WarmupExceedsCapacity,
          "warm-up range [" + std::to_string(lo) + ", " + std::to_string(hi) + "] holds " +
              std::to_string(span) + " graphs but capacity is " + std::to_string(capacity_));
  }
  int captured = 0;
  for (int key = lo; key <= hi; ++key) {
    if (contains(key)) continue;
    insert(key, capture_fn(key));
    ++captured;
  }
  return captured;
}

void GraphCache::begin_session() {
  in_session_ = true;
  for (auto& [key, e] : entries_) e.active = false;
}

std::size_t GraphCache::release_inactive() {
  std::size_t dropped = 0;
  for (auto it = entries_.begin(); it != entries_.end();) {
    if (!it->second.active) {
      it = entries_.erase(it);
      ++dropped;
    } else {
      ++it;
    }
  }
  stats_.releases += dropped;
  return dropped;
}

std::uint64_t GraphCache::use_count(int length_key) const {
  auto it = entries_.find(length_key);
  if (it == entries_.end()) raise(Errc::EmptyCache, "use_count: no entry for key " + std::to_string(length_key));
  return it->second.use_count;
}

}  // namespace graphrt
