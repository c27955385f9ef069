#include <map>
#include <random>
#include <vector>

#include <doctest.h>

#include "graphrt/exec_graph.hpp"
#include "graphrt/graph_cache.hpp"
#include "graphrt/kernels.hpp"
#include "test_util.hpp"

using namespace graphrt;

namespace {

// Builds throwaway single-kernel graphs for arbitrary keys.
struct GraphFactory {
  Workspace ws;
  Tensor& t;
  CaptureEngine engine;
  GraphFactory() : t(ws.alloc({4})), engine(ws, {}) {}
  ExecGraphPtr make(int key) {
    return capture_sequence(engine, key, std::vector<KernelInvocation>{make_relu(t)});
  }
};

// Independent reference for the eviction policies: same rules, naive scans.
struct RefCache {
  struct Entry {
    std::uint64_t use = 0, insert_seq = 0, last_use = 0;
  };
  std::size_t cap;
  bool lru;
  std::map<int, Entry> m;
  std::uint64_t seq = 0;

  bool lookup(int k) {
    auto it = m.find(k);
    if (it == m.end()) return false;
    ++it->second.use;
    it->second.last_use = ++seq;
    return true;
  }
  void insert(int k) {
    auto it = m.find(k);
    if (it != m.end()) {
      it->second.use = 0;
      it->second.insert_seq = ++seq;
      it->second.last_use = it->second.insert_seq;
      return;
    }
    if (m.size() == cap) {
      int victim = m.begin()->first;
      std::uint64_t best_p = ~0ull, best_s = ~0ull;
      for (auto& [key, e] : m) {
        const std::uint64_t p = lru ? e.last_use : e.use;
        if (p < best_p || (p == best_p && e.insert_seq < best_s)) {
          best_p = p;
          best_s = e.insert_seq;
          victim = key;
        }
      }
      m.erase(victim);
    }
    Entry e;
    e.insert_seq = ++seq;
    e.last_use = e.insert_seq;
    m[k] = e;
  }
};

}  // namespace

TEST_CASE("cache: hit/miss accounting and lookup counts uses") {
  GraphFactory f;
  GraphCache cache(4);
  CHECK(!cache.lookup(1).has_value());
  cache.insert(1, f.make(1));
  CHECK(cache.lookup(1).has_value());
  CHECK(cache.use_count(1) == 1);
  cache.lookup(1);
  CHECK(cache.use_count(1) == 2);
  CHECK(cache.stats().hits == 2);
  CHECK(cache.stats().misses == 1);
  CHECK(cache.stats().inserts == 1);
  CHECK_RAISES(Errc::EmptyCache, cache.use_count(9));
}

TEST_CASE("cache: least-used eviction, insertion order breaks ties") {
  GraphFactory f;
  GraphCache cache(2);
  cache.insert(1, f.make(1));
  cache.insert(2, f.make(2));
  cache.lookup(1);  // key 1 now has a use
  auto evicted = cache.insert(3, f.make(3));
  REQUIRE(evicted.has_value());
  CHECK(*evicted == 2);  // fewest uses
  CHECK(cache.contains(1));
  CHECK(cache.contains(3));

  GraphCache tie(2);
  tie.insert(1, f.make(1));
  tie.insert(2, f.make(2));  // both unused
  auto victim = tie.insert(3, f.make(3));
  REQUIRE(victim.has_value());
  CHECK(*victim == 1);  // tie: the older insert goes
}

TEST_CASE("cache: reinsert replaces in place and resets the use count") {
  GraphFactory f;
  GraphCache cache(2);
  cache.insert(1, f.make(1));
  cache.lookup(1);
  cache.lookup(1);
  cache.insert(2, f.make(2));
  CHECK(cache.use_count(1) == 2);
  auto evicted = cache.insert(1, f.make(1));  // replacement, not a new entry
  CHECK(!evicted.has_value());
  CHECK(cache.size() == 2);
  CHECK(cache.use_count(1) == 0);
  CHECK(cache.stats().evictions == 0);
}

TEST_CASE("cache: key must match the graph it files") {
  GraphFactory f;
  GraphCache cache(2);
  CHECK_RAISES(Errc::KeyMismatch, cache.insert(5, f.make(3)));
  CHECK_RAISES(Errc::InvalidConfig, GraphCache(0));
}

TEST_CASE("cache: least-used and LRU diverge on early heavy use") {
  GraphFactory f;
  // Key 1 is used a lot early, key 2 once later. Least-used keeps 1; LRU
  // keeps 2.
  GraphCache lu(2, EvictionPolicy::LeastUsed);
  lu.insert(1, f.make(1));
  lu.lookup(1);
  lu.lookup(1);
  lu.lookup(1);
  lu.insert(2, f.make(2));
  lu.lookup(2);
  auto lu_victim = lu.insert(3, f.make(3));
  REQUIRE(lu_victim.has_value());
  CHECK(*lu_victim == 2);

  GraphCache lru(2, EvictionPolicy::LeastRecentlyUsed);
  lru.insert(1, f.make(1));
  lru.lookup(1);
  lru.lookup(1);
  lru.lookup(1);
  lru.insert(2, f.make(2));
  lru.lookup(2);
  auto lru_victim = lru.insert(3, f.make(3));
  REQUIRE(lru_victim.has_value());
  CHECK(*lru_victim == 1);
}

TEST_CASE("cache: random op stream matches the reference model") {
  GraphFactory f;
  std::vector<ExecGraphPtr> graphs;
  const int key_range = 12;
  for (int k = 1; k <= key_range; ++k) graphs.push_back(f.make(k));

  for (std::size_t cap : {1u, 2u, 4u, 8u}) {
    for (bool lru : {false, true}) {
      GraphCache cache(cap, lru ? EvictionPolicy::LeastRecentlyUsed : EvictionPolicy::LeastUsed);
      RefCache ref{cap, lru, {}, 0};
      std::mt19937_64 eng(1000 + cap + (lru ? 100 : 0));
      for (int op = 0; op < 10000; ++op) {
        const int key = 1 + static_cast<int>(eng() % key_range);
        if (eng() % 10 < 6) {
          CHECK(cache.lookup(key).has_value() == ref.lookup(key));
        } else {
          cache.insert(key, graphs[static_cast<std::size_t>(key - 1)]);
          ref.insert(key);
        }
      }
      CHECK(cache.size() == ref.m.size());
      for (const auto& [key, e] : ref.m) {
        CHECK(cache.contains(key));
        CHECK(cache.use_count(key) == e.use);
      }
    }
  }
}

TEST_CASE("cache: warm-up pre-captures a range once") {
  GraphFactory f;
  GraphCache cache(8);
  int built = 0;
  auto fn = [&](int key) {
    ++built;
    return f.make(key);
  };
  CHECK(cache.precapture_warmup(1, 5, fn) == 5);
  CHECK(built == 5);
  CHECK(cache.size() == 5);
  for (int k = 1; k <= 5; ++k) CHECK(cache.contains(k));

  CHECK(cache.precapture_warmup(4, 6, fn) == 1);  // 4 and 5 already cached
  CHECK(built == 6);

  CHECK(cache.precapture_warmup(3, 2, fn) == 0);  // inverted range: no-op
  CHECK_RAISES(Errc::WarmupExceedsCapacity, cache.precapture_warmup(1, 9, fn));
}

TEST_CASE("cache: release drops only entries untouched this session") {
  GraphFactory f;
  GraphCache cache(8);
  cache.insert(1, f.make(1));  // pre-session (warm-up style)
  cache.insert(2, f.make(2));

  cache.begin_session();
  cache.lookup(1);             // used: survives
  cache.insert(3, f.make(3));  // inserted: survives
  CHECK(cache.release_inactive() == 1);
  CHECK(cache.contains(1));
  CHECK(!cache.contains(2));
  CHECK(cache.contains(3));
  CHECK(cache.stats().releases == 1);

  // Without begin_session everything is inactive.
  GraphCache cold(4);
  cold.insert(1, f.make(1));
  CHECK(cold.release_inactive() == 1);
  CHECK(cold.size() == 0);

  // A new session resets activity.
  cache.begin_session();
  CHECK(cache.release_inactive() == 2);
  CHECK(cache.size() == 0);
}
