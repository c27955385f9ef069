#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "graphrt/pipeline.hpp"

namespace graphrt {

// Latency sweep over modes x prompt lengths x generation lengths. Every cell
// gets its own Session (persistent cache, warm trial first), every trial its
// own device clock and jitter stream.
struct BenchConfig {
  ModelConfig model;
  CacheConfig cache;
  CostModel cost;
  std::vector<RunMode> modes{RunMode::Eager,       RunMode::Hybrid,      RunMode::GraphOnly,
                             RunMode::AblateAsync, RunMode::AblateFused, RunMode::AblateBoth};
  std::vector<int> prompt_lens{10, 50, 100};
  std::vector<int> gen_lens{10, 50, 100};
  int trials = 100;  // kept trials; one extra warm trial runs first
  std::uint64_t base_seed = 42;
  SampleStrategy strategy = SampleStrategy::greedy();
  bool capture_trace = false;  // keep the device timeline of the first kept
                               // trial of the first cell
};

// One CSV row = one trial of one cell. trial == -1 is the warm trial (cache
// population); summaries exclude it.
struct TrialRow {
  RunMode mode = RunMode::Eager;
  int prompt_len = 0;
  int gen_len = 0;
  int trial = 0;
  double ttft_us = 0.0;
  double total_us = 0.0;
  double mean_tok_us = 0.0;
  double p99_tok_us = 0.0;
  std::uint64_t dispatches = 0;
  std::uint64_t replays = 0;
  std::uint64_t captures = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;

  bool operator==(const TrialRow&) const = default;
};

// Kept-trials aggregate for one cell. Per-token stats are computed over the
// pooled per-token samples of every kept trial, not over per-trial summaries.
struct CellSummary {
  RunMode mode = RunMode::Eager;
  int prompt_len = 0;
  int gen_len = 0;
  int kept_trials = 0;
  double ttft_mean_us = 0.0;
  double ttft_p99_us = 0.0;
  double tok_mean_us = 0.0;
  double tok_p50_us = 0.0;
  double tok_p99_us = 0.0;
  double total_mean_us = 0.0;
  double replays_mean = 0.0;
  double captures_mean = 0.0;
};

struct BenchResult {
  std::vector<TrialRow> rows;
  std::vector<CellSummary> summaries;
  std::vector<std::string> skipped_cells;  // p + g over the model's capacity
  std::string trace_csv;                   // set when capture_trace
};

// Deterministic prompt for a (seed, length) pair; shared by every mode so
// cells differing only in mode decode identical token streams.
std::vector<int> make_prompt(std::uint64_t base_seed, int prompt_len, int vocab_size);

// Jitter seed for one trial; the warm trial (-1) maps to base_seed itself.
inline std::uint64_t trial_jitter_seed(std::uint64_t base_seed, int trial) {
  return base_seed + static_cast<std::uint64_t>(static_cast<std::int64_t>(trial) + 1);
}

// Runs the sweep. `progress`, if given, receives one line per finished cell.
BenchResult run_bench(const BenchConfig& cfg, std::ostream* progress = nullptr);

// Nearest-rank percentile: the ceil(p/100 * n)-th smallest sample. p in
// (0, 100]. Raises EmptySamples on an empty vector.
double percentile(std::vector<double> samples, double p);

inline constexpr const char* kCsvHeader =
    "mode,prompt_len,gen_len,trial,ttft_us,total_us,mean_tok_us,p99_tok_us,"
    "dispatches,replays,captures,cache_hits,cache_misses";

// Byte-stable CSV: fixed header, modes by name, floats in shortest
// round-trippable form. parse_csv inverts emit_csv exactly.
void emit_csv(std::ostream& os, const std::vector<TrialRow>& rows);
std::vector<TrialRow> parse_csv(std::istream& is);
void write_csv_file(const std::string& path, const std::vector<TrialRow>& rows);
std::vector<TrialRow> read_csv_file(const std::string& path);

// Fixed-width comparison tables (one per metric), length pairs down, modes
// across.
void format_summary(std::ostream& os, const std::vector<CellSummary>& summaries);

// Flat `section.key = value` config file ('#' starts a comment). Returned
// map preserves no order; unknown keys are the caller's problem until
// apply_config, which raises InvalidConfig on keys it does not know.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> parse_config_file(const std::string& path);  // IoError
void apply_config(BenchConfig& cfg, const std::map<std::string, std::string>& kv);

}  // namespace graphrt
