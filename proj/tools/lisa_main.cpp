#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lisa/analysis.hpp"
#include "lisa/evidence.hpp"
#include "lisa/induction.hpp"
#include "lisa/memory.hpp"
#include "lisa/providers.hpp"
#include "lisa/simulator.hpp"
#include "lisa/util.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct SimulateArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::string method;
  std::string provider;
  int seeds = 1;
  std::optional<std::uint64_t> seed;
  std::optional<double> rho;
  std::optional<double> tau_refuse;
  std::optional<double> tau_allow;
  std::optional<double> delta;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << content;
}

int run_simulate(const SimulateArgs& args) {
  if (!fs::exists(args.config_path)) {
    std::cerr << "usage error: config file not found: " << args.config_path << "\n";
    return kExitUsage;
  }
  lisa::sim::DeploymentConfig config;
  try {
    config = lisa::sim::config_from_json(read_file(args.config_path));
  } catch (const std::exception& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (!args.method.empty()) {
    const auto parsed = lisa::sim::parse_method(args.method);
    if (!parsed || !lisa::sim::method_implemented(*parsed)) {
      std::cerr << "usage error: unknown or unimplemented method '" << args.method
                << "'; valid methods:";
      for (const auto& name : lisa::sim::implemented_method_names()) std::cerr << " " << name;
      std::cerr << "\n";
      return kExitUsage;
    }
    config.method = *parsed;
  }
  if (args.seed) config.seed = *args.seed;
  if (args.rho) config.noise_rho = *args.rho;
  if (args.tau_refuse) config.gating.tau_refuse = *args.tau_refuse;
  if (args.tau_allow) config.gating.tau_allow = *args.tau_allow;
  if (args.delta) config.gating.delta = *args.delta;
  if (!args.provider.empty()) config.provider = args.provider;

  try {
    config.validate();
  } catch (const std::exception& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  fs::create_directories(args.out_dir);
  const auto result = lisa::sim::run_seeds(config, args.seeds);
  for (const auto& run : result.runs) {
    const std::string tag = "seed" + std::to_string(run.config.seed);
    write_file(fs::path(args.out_dir) / ("metrics_" + tag + ".csv"), run.csv);
    lisa::memory::save_snapshot(run.final_snapshot,
                                fs::path(args.out_dir) / ("snapshot_" + tag + ".json"));
    const auto& final_row = run.rows.back();
    std::cout << lisa::sim::method_name(config.method) << " seed " << run.config.seed
              << ": final accuracy " << lisa::util::format_fixed(final_row.accuracy, 4)
              << ", macro-F1 " << lisa::util::format_fixed(final_row.macro_f1, 4)
              << ", latency " << lisa::util::format_fixed(final_row.mean_latency, 3)
              << ", memory " << final_row.broad_count << " broad / " << final_row.local_count
              << " local\n";
  }
  if (args.seeds > 1) {
    write_file(fs::path(args.out_dir) / "aggregate.csv", result.aggregate_csv);
    std::cout << "aggregate over " << args.seeds << " seeds: final macro-F1 "
              << lisa::util::format_fixed(result.final_macro_f1_mean, 4) << " +/- "
              << lisa::util::format_fixed(result.final_macro_f1_std, 4) << "\n";
  }
  std::cout << "outputs written to " << args.out_dir << "\n";
  return kExitOk;
}

int run_calibrate(double tau, double delta, int max_contradictions) {
  if (!(tau > 0.0 && tau < 1.0) || !(delta > 0.0 && delta < 1.0)) {
    std::cerr << "usage error: tau and delta must lie in (0,1)\n";
    return kExitUsage;
  }
  std::cout << "contradictions,min_support,confidence\n";
  for (int c = 0; c <= max_contradictions; ++c) {
    std::int64_t s = 0;
    while (lisa::evidence::beta_lower_quantile(s, c, delta) < tau) ++s;
    std::cout << c << ',' << s << ','
              << lisa::util::format_fixed(lisa::evidence::beta_lower_quantile(s, c, delta), 4)
              << "\n";
  }
  return kExitOk;
}

int run_inspect(const std::string& path) {
  lisa::memory::MemorySnapshot snapshot;
  try {
    snapshot = lisa::memory::load_snapshot(path);
  } catch (const std::exception& e) {
    std::cerr << "inspect failed: " << e.what() << "\n";
    return kExitRuntime;
  }
  std::cout << "snapshot version " << snapshot.version << ": " << snapshot.broad.size()
            << " broad, " << snapshot.local.size() << " local\n";
  std::cout << "gating: delta=" << snapshot.gating.delta
            << " tau_refuse=" << snapshot.gating.tau_refuse
            << " tau_allow=" << snapshot.gating.tau_allow << "\n";

  std::vector<const lisa::memory::BroadPolicy*> broad;
  for (const auto& p : snapshot.broad) broad.push_back(&p);
  std::sort(broad.begin(), broad.end(), [&](const auto* a, const auto* b) {
    const double ca = lisa::evidence::confidence(a->evidence, snapshot.gating.delta);
    const double cb = lisa::evidence::confidence(b->evidence, snapshot.gating.delta);
    if (ca != cb) return ca > cb;
    return a->policy_id < b->policy_id;
  });
  for (const auto* p : broad) {
    const double conf = lisa::evidence::confidence(p->evidence, snapshot.gating.delta);
    std::cout << "  [broad] " << p->policy_id
              << " label=" << lisa::memory::label_word(p->recommended_label)
              << " confidence=" << lisa::util::format_fixed(conf, 4) << " evidence=("
              << p->evidence.support << "," << p->evidence.contradiction << ")"
              << (p->near_conflict ? " near-conflict" : "") << "\n";
    std::cout << "          " << p->statement << "\n";
  }
  for (const auto& r : snapshot.local) {
    std::cout << "  [local] " << r.rule_id
              << " label=" << lisa::memory::label_word(r.recommended_label) << " evidence=("
              << r.evidence.support << "," << r.evidence.contradiction << ")\n";
    for (const auto& pivot : r.pivots)
      std::cout << "          pivot: " << pivot.description << "\n";
  }
  return kExitOk;
}

int run_verify(std::uint64_t seed) {
  bool all_pass = true;
  for (const auto& check : lisa::analysis::run_verification_suite(seed)) {
    std::cout << (check.pass ? "PASS" : "FAIL") << " " << check.name << ": " << check.detail
              << "\n";
    all_pass = all_pass && check.pass;
  }
  return all_pass ? kExitOk : kExitRuntime;
}

int run_gap_curves(const std::vector<std::int64_t>& n_values, const std::vector<double>& thetas,
                   double delta, const std::string& out_path) {
  const auto rows = lisa::analysis::gap_curves(n_values, thetas, delta);
  const std::string csv = lisa::analysis::gap_curves_csv(rows);
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    write_file(out_path, csv);
    std::cout << "gap curves written to " << out_path << "\n";
  }
  return kExitOk;
}

int run_refresh(const std::string& bank_path, const std::string& snapshot_path,
                const std::string& out_path, const std::string& provider,
                const lisa::evidence::GatingConfig& gating) {
  lisa::memory::ReportBank bank;
  for (auto& report : lisa::memory::load_reports(bank_path)) bank.record(std::move(report));

  lisa::memory::MemorySnapshot previous;
  previous.gating = gating;
  if (!snapshot_path.empty()) previous = lisa::memory::load_snapshot(snapshot_path);

  auto providers = lisa::providers::make_providers(
      provider, [](const lisa::memory::CaseRecord&) { return lisa::Label::Refuse; });
  lisa::induction::OfflineRefresher refresher(
      {providers.inducer.get(), providers.embedder.get()}, gating);
  const auto next = refresher.refresh(bank, previous);
  lisa::memory::save_snapshot(next, out_path);
  std::cout << "refreshed memory: version " << next.version << ", " << next.broad.size()
            << " broad, " << next.local.size() << " local -> " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lisa: lifelong guardrail adaptation engine"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Run a seeded deployment simulation");
  simulate->add_option("--config", sim_args.config_path, "Deployment config (JSON)")->required();
  simulate->add_option("--out-dir", sim_args.out_dir, "Output directory");
  simulate->add_option("--method", sim_args.method, "Adaptation method override");
  simulate->add_option("--provider", sim_args.provider, "Provider backend (stub|http)");
  simulate->add_option("--seeds", sim_args.seeds, "Number of consecutive seeds to run");
  std::uint64_t seed_opt = 0;
  auto* seed_flag = simulate->add_option("--seed", seed_opt, "Base seed override");
  double rho_opt = 0, tr_opt = 0, ta_opt = 0, delta_opt = 0;
  auto* rho_flag = simulate->add_option("--rho", rho_opt, "Label-flip noise probability");
  auto* tr_flag = simulate->add_option("--tau-refuse", tr_opt, "Refuse-side threshold");
  auto* ta_flag = simulate->add_option("--tau-allow", ta_opt, "Allow-side threshold");
  auto* delta_flag = simulate->add_option("--delta", delta_opt, "Posterior quantile level");

  double cal_tau = 0.55, cal_delta = 0.05;
  int cal_max = 5;
  auto* calibrate = app.add_subcommand("calibrate", "Minimal support table for a threshold");
  calibrate->add_option("--tau", cal_tau, "Surfacing threshold");
  calibrate->add_option("--delta", cal_delta, "Posterior quantile level");
  calibrate->add_option("--max-contradictions", cal_max, "Table rows: c = 0..max");

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "Dump a memory snapshot");
  inspect->add_option("snapshot", inspect_path, "Snapshot file")->required();

  std::uint64_t verify_seed = 7;
  auto* verify = app.add_subcommand("verify", "Run the numerical verification suite");
  verify->add_option("--seed", verify_seed, "Randomization seed");

  std::vector<std::int64_t> gap_n = {5, 10, 20, 50, 100, 200, 500, 1000};
  std::vector<double> gap_theta = {0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0};
  double gap_delta = 0.05;
  std::string gap_out;
  auto* gap = app.add_subcommand("gap-curves", "Beta vs Hoeffding lower-bound table");
  gap->add_option("--n", gap_n, "Evidence sizes")->delimiter(',');
  gap->add_option("--theta", gap_theta, "Empirical accuracies")->delimiter(',');
  gap->add_option("--delta", gap_delta, "Quantile level");
  gap->add_option("--out", gap_out, "Output CSV path (stdout when omitted)");

  std::string refresh_bank, refresh_snapshot, refresh_out = "snapshot.json";
  std::string refresh_provider = "stub";
  lisa::evidence::GatingConfig refresh_gating;
  auto* refresh = app.add_subcommand("refresh", "Rebuild memory from a report bank");
  refresh->add_option("--bank", refresh_bank, "Reports file (JSON)")->required();
  refresh->add_option("--snapshot", refresh_snapshot, "Previous snapshot (optional)");
  refresh->add_option("--out", refresh_out, "Output snapshot path");
  refresh->add_option("--provider", refresh_provider, "Provider backend (stub|http)");
  refresh->add_option("--delta", refresh_gating.delta, "Posterior quantile level");
  refresh->add_option("--tau-refuse", refresh_gating.tau_refuse, "Refuse-side threshold");
  refresh->add_option("--tau-allow", refresh_gating.tau_allow, "Allow-side threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  if (seed_flag->count()) sim_args.seed = seed_opt;
  if (rho_flag->count()) sim_args.rho = rho_opt;
  if (tr_flag->count()) sim_args.tau_refuse = tr_opt;
  if (ta_flag->count()) sim_args.tau_allow = ta_opt;
  if (delta_flag->count()) sim_args.delta = delta_opt;

  try {
    if (simulate->parsed()) return run_simulate(sim_args);
    if (calibrate->parsed()) return run_calibrate(cal_tau, cal_delta, cal_max);
    if (inspect->parsed()) return run_inspect(inspect_path);
    if (verify->parsed()) return run_verify(verify_seed);
    if (gap->parsed()) return run_gap_curves(gap_n, gap_theta, gap_delta, gap_out);
    if (refresh->parsed())
      return run_refresh(refresh_bank, refresh_snapshot, refresh_out, refresh_provider,
                         refresh_gating);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
