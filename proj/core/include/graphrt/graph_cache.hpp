#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>

#include "graphrt/exec_graph.hpp"

namespace graphrt {

// Eviction policy for a full cache. LeastUsed evicts the entry with the
// smallest use count, breaking ties by insertion order (oldest first).
// LeastRecentlyUsed is the config-selectable alternative: smallest last-use
// sequence number, where an entry's insertion counts as its first use.
enum class EvictionPolicy { LeastUsed, LeastRecentlyUsed };

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t inserts = 0;
  std::uint64_t evictions = 0;
  std::uint64_t releases = 0;
};

// Rolling buffer of captured graphs keyed by sequence length. Bounded
// capacity; deterministic: iteration and eviction scans run in key order and
// all tie-breaking uses explicit sequence numbers.
class GraphCache {
 public:
  explicit GraphCache(std::size_t capacity, EvictionPolicy policy = EvictionPolicy::LeastUsed);

  // Hit: returns the graph and increments its use count. Miss: counts and
  // returns nullopt.
  std::optional<ExecGraphPtr> lookup(int length_key);

  // Inserts (or replaces) the graph for its key. Replacement resets the use
  // count and does not evict. A fresh insert into a full cache evicts one
  // entry per the policy first; the evicted key is returned. Raises
  // KeyMismatch if graph->length_key() != length_key.
  std::optional<int> insert(int length_key, ExecGraphPtr graph);

  // Captures every length in [lo, hi] via capture_fn and inserts the results.
  // Raises WarmupExceedsCapacity if the range is larger than the capacity.
  // Lengths already cached are skipped. Returns the number captured.
  // An empty range (hi < lo) is a no-op.
  int precapture_warmup(int lo, int hi, const std::function<ExecGraphPtr(int)>& capture_fn);

  // Marks the start of a decode session: entries used or inserted from this
  // point count as active. Warm-up inserts that happen before any session are
  // inactive until first use.
  void begin_session();

  // Drops every entry that was neither used nor inserted since the last
  // begin_session (or ever, if none was started). Returns the number dropped.
  std::size_t release_inactive();

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool contains(int length_key) const { return entries_.count(length_key) != 0; }
  std::uint64_t use_count(int length_key) const;
  const CacheStats& stats() const noexcept { return stats_; }

 private:
  struct Entry {
    ExecGraphPtr graph;
    std::uint64_t use_count = 0;
    std::uint64_t insert_seq = 0;
    std::uint64_t last_use_seq = 0;
    bool active = false;  // used or inserted in the current session
  };

  int pick_victim() const;

  std::size_t capacity_;
  EvictionPolicy policy_;
  std::map<int, Entry> entries_;
  std::uint64_t seq_ = 0;
  bool in_session_ = false;
  CacheStats stats_;
};

}  // namespace graphrt
