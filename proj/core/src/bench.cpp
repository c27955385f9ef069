#include "graphrt/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "graphrt/error.hpp"

namespace graphrt {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) raise(Errc::EmptySamples, "mean of empty sample set");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace

std::vector<int> make_prompt(std::uint64_t base_seed, int prompt_len, int vocab_size) {
  std::mt19937_64 eng(base_seed * 1000003ULL + static_cast<std::uint64_t>(prompt_len));
  std::vector<int> prompt(static_cast<std::size_t>(prompt_len));
  for (int& t : prompt) t = static_cast<int>(eng() % static_cast<std::uint64_t>(vocab_size));
  return prompt;
}

double percentile(std::vector<double> samples, double p) {
  if (samples.empty()) raise(Errc::EmptySamples, "percentile of empty sample set");
  if (!(p > 0.0) || p > 100.0) raise(Errc::InvalidConfig, "percentile p outside (0, 100]");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  if (rank == 0) rank = 1;
  return samples[rank - 1];
}

BenchResult run_bench(const BenchConfig& cfg, std::ostream* progress) {
  if (cfg.trials < 1) raise(Errc::InvalidConfig, "bench trials must be >= 1");
  BenchResult out;
  bool trace_pending = cfg.capture_trace;

  for (RunMode mode : cfg.modes) {
    for (int p : cfg.prompt_lens) {
      for (int g : cfg.gen_lens) {
        if (p + g > cfg.model.max_seq_len) {
          out.skipped_cells.push_back(std::string(mode_name(mode)) + " p=" + std::to_string(p) +
                                      " g=" + std::to_string(g) + " exceeds max_seq_len");
          continue;
        }
        Session session(cfg.model, cfg.cache, cfg.cost);
        const std::vector<int> prompt = make_prompt(cfg.base_seed, p, cfg.model.vocab_size);

        std::vector<double> pooled_tok, ttfts, totals;
        pooled_tok.reserve(static_cast<std::size_t>(cfg.trials) * static_cast<std::size_t>(g));
        ttfts.reserve(static_cast<std::size_t>(cfg.trials));
        totals.reserve(static_cast<std::size_t>(cfg.trials));
        double replay_sum = 0.0, capture_sum = 0.0;

        for (int trial = -1; trial < cfg.trials; ++trial) {
          GenerationRequest req;
          req.mode = mode;
          req.prompt = prompt;
          req.gen_len = g;
          req.strategy = cfg.strategy;
          req.sampler_seed = cfg.base_seed;
          req.jitter_seed = trial_jitter_seed(cfg.base_seed, trial);
          req.record_trace = trace_pending && trial == 0;

          GenerationResult r = session.run(req);
          if (req.record_trace) {
            out.trace_csv = std::move(r.trace_csv);
            trace_pending = false;
          }

          TrialRow row;
          row.mode = mode;
          row.prompt_len = p;
          row.gen_len = g;
          row.trial = trial;
          row.ttft_us = r.ttft_us;
          row.total_us = r.total_us;
          row.mean_tok_us = mean_of(r.per_token_us);
          row.p99_tok_us = percentile(r.per_token_us, 99.0);
          row.dispatches = r.counters.dispatches;
          row.replays = r.counters.graph_replays;
          row.captures = r.counters.captures;
          row.cache_hits = r.cache_delta.hits;
          row.cache_misses = r.cache_delta.misses;
          out.rows.push_back(row);

          if (trial >= 0) {
            pooled_tok.insert(pooled_tok.end(), r.per_token_us.begin(), r.per_token_us.end());
            ttfts.push_back(r.ttft_us);
            totals.push_back(r.total_us);
            replay_sum += static_cast<double>(r.counters.graph_replays);
            capture_sum += static_cast<double>(r.counters.captures);
          }
        }

        CellSummary s;
        s.mode = mode;
        s.prompt_len = p;
        s.gen_len = g;
        s.kept_trials = cfg.trials;
        s.ttft_mean_us = mean_of(ttfts);
        s.ttft_p99_us = percentile(ttfts, 99.0);
        s.tok_mean_us = mean_of(pooled_tok);
        s.tok_p50_us = percentile(pooled_tok, 50.0);
        s.tok_p99_us = percentile(pooled_tok, 99.0);
        s.total_mean_us = mean_of(totals);
        s.replays_mean = replay_sum / static_cast<double>(cfg.trials);
        s.captures_mean = capture_sum / static_cast<double>(cfg.trials);
        out.summaries.push_back(s);

        if (progress) {
          *progress << "cell " << mode_name(mode) << " p=" << p << " g=" << g
                    << ": ttft_mean=" << fmt(s.ttft_mean_us)
                    << "us tok_p99=" << fmt(s.tok_p99_us) << "us\n";
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

void emit_csv(std::ostream& os, const std::vector<TrialRow>& rows) {
  os << kCsvHeader << '\n';
  for (const TrialRow& r : rows) {
    os << mode_name(r.mode) << ',' << r.prompt_len << ',' << r.gen_len << ',' << r.trial << ','
       << fmt(r.ttft_us) << ',' << fmt(r.total_us) << ',' << fmt(r.mean_tok_us) << ','
       << fmt(r.p99_tok_us) << ',' << r.dispatches << ',' << r.replays << ',' << r.captures
       << ',' << r.cache_hits << ',' << r.cache_misses << '\n';
  }
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_num(const std::string& s, const char* what) {
  T value{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    raise(Errc::IoError, std::string("csv: bad ") + what + " '" + s + "'");
  }
  return value;
}

}  // namespace

std::vector<TrialRow> parse_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) raise(Errc::IoError, "csv: empty input");
  if (line == std::string(kCsvHeader) + "\r") line.pop_back();
  if (line != kCsvHeader) raise(Errc::IoError, "csv: unexpected header '" + line + "'");

  std::vector<TrialRow> rows;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f = split(line, ',');
    if (f.size() != 13) raise(Errc::IoError, "csv: expected 13 fields, got " +
                                                 std::to_string(f.size()));
    TrialRow r;
    r.mode = mode_from_name(f[0]);
    r.prompt_len = parse_num<int>(f[1], "prompt_len");
    r.gen_len = parse_num<int>(f[2], "gen_len");
    r.trial = parse_num<int>(f[3], "trial");
    r.ttft_us = parse_num<double>(f[4], "ttft_us");
    r.total_us = parse_num<double>(f[5], "total_us");
    r.mean_tok_us = parse_num<double>(f[6], "mean_tok_us");
    r.p99_tok_us = parse_num<double>(f[7], "p99_tok_us");
    r.dispatches = parse_num<std::uint64_t>(f[8], "dispatches");
    r.replays = parse_num<std::uint64_t>(f[9], "replays");
    r.captures = parse_num<std::uint64_t>(f[10], "captures");
    r.cache_hits = parse_num<std::uint64_t>(f[11], "cache_hits");
    r.cache_misses = parse_num<std::uint64_t>(f[12], "cache_misses");
    rows.push_back(r);
  }
  return rows;
}

void write_csv_file(const std::string& path, const std::vector<TrialRow>& rows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) raise(Errc::IoError, "cannot open '" + path + "' for writing");
  emit_csv(os, rows);
  if (!os) raise(Errc::IoError, "write failed for '" + path + "'");
}

std::vector<TrialRow> read_csv_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(Errc::IoError, "cannot open '" + path + "' for reading");
  return parse_csv(is);
}

// ---------------------------------------------------------------------------
// Summary tables

namespace {

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

void one_table(std::ostream& os, const std::vector<CellSummary>& sums, const char* title,
               double CellSummary::* field) {
  // Preserve encounter order for both axes.
  std::vector<std::pair<int, int>> cells;
  std::vector<RunMode> modes;
  for (const CellSummary& s : sums) {
    std::pair<int, int> pg{s.prompt_len, s.gen_len};
    if (std::find(cells.begin(), cells.end(), pg) == cells.end()) cells.push_back(pg);
    if (std::find(modes.begin(), modes.end(), s.mode) == modes.end()) modes.push_back(s.mode);
  }
  os << title << " (us)\n";
  os << "  prompt    gen";
  for (RunMode m : modes) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), " %14s", mode_name(m));
    os << buf;
  }
  os << '\n';
  for (auto [p, g] : cells) {
    char head[32];
    std::snprintf(head, sizeof(head), "  %6d %6d", p, g);
    os << head;
    for (RunMode m : modes) {
      const CellSummary* found = nullptr;
      for (const CellSummary& s : sums) {
        if (s.mode == m && s.prompt_len == p && s.gen_len == g) {
          found = &s;
          break;
        }
      }
      char buf[32];
      if (found) {
        std::snprintf(buf, sizeof(buf), " %14s", fixed3(found->*field).c_str());
      } else {
        std::snprintf(buf, sizeof(buf), " %14s", "-");
      }
      os << buf;
    }
    os << '\n';
  }
  os << '\n';
}

}  // namespace

void format_summary(std::ostream& os, const std::vector<CellSummary>& summaries) {
  if (summaries.empty()) {
    os << "no cells ran\n";
    return;
  }
  one_table(os, summaries, "ttft mean", &CellSummary::ttft_mean_us);
  one_table(os, summaries, "per-token p50", &CellSummary::tok_p50_us);
  one_table(os, summaries, "per-token p99", &CellSummary::tok_p99_us);
  one_table(os, summaries, "total mean", &CellSummary::total_mean_us);
}

// ---------------------------------------------------------------------------
// Config files

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  raise(Errc::InvalidConfig, "config: bad bool for " + key + ": '" + v + "'");
}

template <typename T>
T parse_cfg_num(const std::string& v, const std::string& key) {
  T value{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), value);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    raise(Errc::InvalidConfig, "config: bad number for " + key + ": '" + v + "'");
  }
  return value;
}

std::vector<int> parse_int_list(const std::string& v, const std::string& key) {
  std::vector<int> out;
  for (const std::string& part : split(v, ',')) {
    out.push_back(parse_cfg_num<int>(trim(part), key));
  }
  if (out.empty()) raise(Errc::InvalidConfig, "config: empty list for " + key);
  return out;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      raise(Errc::InvalidConfig, "config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      raise(Errc::InvalidConfig, "config line " + std::to_string(lineno) + ": empty key");
    }
    kv[key] = value;  // last writer wins
  }
  return kv;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) raise(Errc::IoError, "cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

void apply_config(BenchConfig& cfg, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "model.n_layers") cfg.model.n_layers = parse_cfg_num<int>(value, key);
    else if (key == "model.d_model") cfg.model.d_model = parse_cfg_num<int>(value, key);
    else if (key == "model.n_heads") cfg.model.n_heads = parse_cfg_num<int>(value, key);
    else if (key == "model.vocab_size") cfg.model.vocab_size = parse_cfg_num<int>(value, key);
    else if (key == "model.max_seq_len") cfg.model.max_seq_len = parse_cfg_num<int>(value, key);
    else if (key == "model.ln_eps") cfg.model.ln_eps = parse_cfg_num<float>(value, key);
    else if (key == "model.seed") cfg.model.seed = parse_cfg_num<std::uint64_t>(value, key);
    else if (key == "cache.capacity") cfg.cache.capacity = parse_cfg_num<std::size_t>(value, key);
    else if (key == "cache.warmup_lo") cfg.cache.warmup_lo = parse_cfg_num<int>(value, key);
    else if (key == "cache.warmup_hi") cfg.cache.warmup_hi = parse_cfg_num<int>(value, key);
    else if (key == "cache.prefill_uses_graphs")
      cfg.cache.prefill_uses_graphs = parse_bool(value, key);
    else if (key == "cache.policy") {
      if (value == "least_used") cfg.cache.policy = EvictionPolicy::LeastUsed;
      else if (value == "lru") cfg.cache.policy = EvictionPolicy::LeastRecentlyUsed;
      else raise(Errc::InvalidConfig, "config: unknown cache.policy '" + value + "'");
    } else if (key == "cost.launch_us")
      cfg.cost.launch_overhead_us = parse_cfg_num<double>(value, key);
    else if (key == "cost.host_us") cfg.cost.host_dispatch_us = parse_cfg_num<double>(value, key);
    else if (key == "cost.alpha") cfg.cost.alpha_us_per_mflop = parse_cfg_num<double>(value, key);
    else if (key == "cost.capture_us")
      cfg.cost.capture_us_per_kernel = parse_cfg_num<double>(value, key);
    else if (key == "cost.jitter") {
      if (value == "none") cfg.cost.jitter = JitterKind::None;
      else if (value == "lognormal") cfg.cost.jitter = JitterKind::Lognormal;
      else raise(Errc::InvalidConfig, "config: unknown cost.jitter '" + value + "'");
    } else if (key == "cost.jitter_sigma")
      cfg.cost.jitter_sigma = parse_cfg_num<double>(value, key);
    else if (key == "bench.modes") {
      cfg.modes.clear();
      for (const std::string& part : split(value, ',')) cfg.modes.push_back(mode_from_name(trim(part)));
      if (cfg.modes.empty()) raise(Errc::InvalidConfig, "config: empty bench.modes");
    } else if (key == "bench.prompt_lens")
      cfg.prompt_lens = parse_int_list(value, key);
    else if (key == "bench.gen_lens")
      cfg.gen_lens = parse_int_list(value, key);
    else if (key == "bench.trials") cfg.trials = parse_cfg_num<int>(value, key);
    else if (key == "bench.seed") cfg.base_seed = parse_cfg_num<std::uint64_t>(value, key);
    else if (key == "bench.strategy") {
      if (value == "greedy") cfg.strategy.kind = SampleStrategy::Kind::Greedy;
      else if (value == "temperature") cfg.strategy.kind = SampleStrategy::Kind::Temperature;
      else raise(Errc::InvalidConfig, "config: unknown bench.strategy '" + value + "'");
    } else if (key == "bench.temperature")
      cfg.strategy.temperature = parse_cfg_num<double>(value, key);
    else if (key == "bench.trace")
      cfg.capture_trace = parse_bool(value, key);
    else
      raise(Errc::InvalidConfig, "config: unknown key '" + key + "'");
  }
}

}  // namespace graphrt
