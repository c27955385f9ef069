// Latency sweep driver: runs the execution-mode grid over the virtual
// device, writes per-trial rows as CSV, and prints comparison tables.
// Option precedence: built-in defaults, then --config file, then flags.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "graphrt/bench.hpp"
#include "graphrt/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"hybrid graph-replay latency bench (virtual device)"};

  std::string config_path;
  std::string modes_csv, prompt_csv, gen_csv;
  int trials = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_path = "bench.csv";
  std::string trace_path;
  double launch_us = -1, host_us = -1, alpha = -1, capture_us = -1, jitter_sigma = -1;
  std::string jitter_kind;
  int dump_plan_len = 0;
  bool quiet = false;

  app.add_option("--config", config_path, "config file (section.key = value lines)");
  app.add_option("--mode", modes_csv, "comma list: eager,hybrid,graph_only,ablate_async,ablate_fused,ablate_both");
  app.add_option("--prompt-lens", prompt_csv, "comma list of prompt lengths");
  app.add_option("--gen-lens", gen_csv, "comma list of generation lengths");
  app.add_option("--trials", trials, "kept trials per cell (a warm trial always runs first)");
  auto* seed_opt = app.add_option("--seed", seed, "base seed for prompts and jitter streams");
  app.add_option("--out", out_path, "output CSV path")->capture_default_str();
  app.add_option("--trace", trace_path, "write the device timeline of the first kept trial of the first cell to this path");
  app.add_option("--cost.launch-us", launch_us, "per-launch overhead, us");
  app.add_option("--cost.host-us", host_us, "per-dispatch host cost, us");
  app.add_option("--cost.alpha", alpha, "compute cost, us per MFLOP");
  app.add_option("--cost.capture-us", capture_us, "capture cost per kernel, us");
  app.add_option("--cost.jitter", jitter_kind, "none | lognormal");
  app.add_option("--cost.jitter-sigma", jitter_sigma, "lognormal sigma");
  app.add_option("--dump-plan", dump_plan_len, "print the static plan for this length and exit");
  app.add_flag("--quiet", quiet, "suppress per-cell progress lines");

  CLI11_PARSE(app, argc, argv);
  seed_set = seed_opt->count() > 0;

  try {
    graphrt::BenchConfig cfg;
    if (!config_path.empty()) graphrt::apply_config(cfg, graphrt::parse_config_file(config_path));

    // Flags beat the config file; route them through the same applier.
    std::map<std::string, std::string> flags;
    if (!modes_csv.empty()) flags["bench.modes"] = modes_csv;
    if (!prompt_csv.empty()) flags["bench.prompt_lens"] = prompt_csv;
    if (!gen_csv.empty()) flags["bench.gen_lens"] = gen_csv;
    if (trials >= 0) flags["bench.trials"] = std::to_string(trials);
    if (seed_set) flags["bench.seed"] = std::to_string(seed);
    if (launch_us >= 0) flags["cost.launch_us"] = std::to_string(launch_us);
    if (host_us >= 0) flags["cost.host_us"] = std::to_string(host_us);
    if (alpha >= 0) flags["cost.alpha"] = std::to_string(alpha);
    if (capture_us >= 0) flags["cost.capture_us"] = std::to_string(capture_us);
    if (!jitter_kind.empty()) flags["cost.jitter"] = jitter_kind;
    if (jitter_sigma >= 0) flags["cost.jitter_sigma"] = std::to_string(jitter_sigma);
    graphrt::apply_config(cfg, flags);
    if (!trace_path.empty()) cfg.capture_trace = true;

    if (dump_plan_len > 0) {
      graphrt::Model model(cfg.model);
      const auto& plan = model.plan(dump_plan_len);
      graphrt::CaptureEngine engine(model.workspace(), model.weight_ids());
      auto graph = graphrt::capture_sequence(engine, dump_plan_len, {plan.data(), plan.size()});
      graph->dump(std::cout);
      return 0;
    }

    graphrt::BenchResult result = graphrt::run_bench(cfg, quiet ? nullptr : &std::cerr);

    graphrt::write_csv_file(out_path, result.rows);
    if (!trace_path.empty()) {
      std::ofstream ts(trace_path, std::ios::binary);
      if (!ts) graphrt::raise(graphrt::Errc::IoError, "cannot open '" + trace_path + "'");
      ts << result.trace_csv;
    }
    for (const std::string& s : result.skipped_cells) std::cerr << "skipped: " << s << '\n';

    graphrt::format_summary(std::cout, result.summaries);
    std::cout << "wrote " << result.rows.size() << " rows to " << out_path << '\n';
    return 0;
  } catch (const graphrt::Error& e) {
    std::cerr << "error [" << graphrt::errc_name(e.code()) << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
