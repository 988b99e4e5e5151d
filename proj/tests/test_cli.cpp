#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lisa/memory.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const fs::path out_file = fs::temp_directory_path() / "lisa_cli_out.txt";
  const std::string cmd =
      std::string(LISA_CLI_PATH) + " " + args + " > " + out_file.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WEXITSTATUS(status);
  std::ifstream in(out_file);
  std::ostringstream buf;
  buf << in.rdbuf();
  result.output = buf.str();
  return result;
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "lisa_cli_test";
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path path = scratch_dir() / name;
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST_CASE("calibrate reproduces the minimal support table") {
  const auto result = run_cli("calibrate --tau 0.55 --delta 0.05 --max-contradictions 5");
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("contradictions,min_support,confidence") == 0);
  CHECK(result.output.find("0,5,") != std::string::npos);
  CHECK(result.output.find("1,7,") != std::string::npos);
  CHECK(result.output.find("2,9,") != std::string::npos);
  CHECK(result.output.find("3,11,") != std::string::npos);
  CHECK(result.output.find("5,15,") != std::string::npos);

  // Just-below-delta threshold is already satisfied with zero support.
  const auto low = run_cli("calibrate --tau 0.0499 --delta 0.05 --max-contradictions 0");
  CHECK(low.output.find("0,0,") != std::string::npos);

  CHECK(run_cli("calibrate --tau 1.5").exit_code == 2);
}

TEST_CASE("simulate: usage errors exit 2") {
  CHECK(run_cli("simulate").exit_code == 2);  // missing --config
  CHECK(run_cli("simulate --config /nonexistent/cfg.json").exit_code == 2);

  const auto cfg = write_config("cfg_ok.json", R"({"days": 2, "stream_per_day": 10,
    "heldout_size": 20, "seed": 3})");
  const auto bad_method = run_cli("simulate --config " + cfg.string() + " --method frobnicate");
  CHECK(bad_method.exit_code == 2);
  CHECK(bad_method.output.find("valid methods:") != std::string::npos);
  CHECK(bad_method.output.find("lisa") != std::string::npos);

  // Reserved baseline slot is rejected with an explanation.
  const auto agrail = run_cli("simulate --config " + cfg.string() + " --method agrail");
  CHECK(agrail.exit_code == 2);

  const auto bad_cfg = write_config("cfg_bad.json", R"({"method": "what-is-this"})");
  CHECK(run_cli("simulate --config " + bad_cfg.string()).exit_code == 2);
}

TEST_CASE("simulate writes a CSV with one row per day plus snapshot") {
  const auto cfg = write_config("cfg_run.json", R"({"days": 3, "stream_per_day": 12,
    "heldout_size": 30, "seed": 2, "method": "pure"})");
  const fs::path out = scratch_dir() / "run_pure";
  fs::remove_all(out);
  const auto result = run_cli("simulate --config " + cfg.string() + " --out-dir " + out.string());
  CHECK(result.exit_code == 0);

  std::ifstream csv(out / "metrics_seed2.csv");
  REQUIRE(csv);
  std::string line;
  int rows = 0;
  std::getline(csv, line);
  CHECK(line == "day,method,seed,accuracy,macro_f1,latency,broad_count,local_count");
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);

  CHECK(fs::exists(out / "snapshot_seed2.json"));
}

TEST_CASE("simulate --seeds runs multiple seeds plus an aggregate") {
  const auto cfg = write_config("cfg_seeds.json", R"({"days": 2, "stream_per_day": 10,
    "heldout_size": 20, "seed": 1, "method": "case_memory"})");
  const fs::path out = scratch_dir() / "run_seeds";
  fs::remove_all(out);
  const auto result =
      run_cli("simulate --config " + cfg.string() + " --seeds 3 --out-dir " + out.string());
  CHECK(result.exit_code == 0);
  CHECK(fs::exists(out / "metrics_seed1.csv"));
  CHECK(fs::exists(out / "metrics_seed2.csv"));
  CHECK(fs::exists(out / "metrics_seed3.csv"));
  CHECK(fs::exists(out / "aggregate.csv"));
  CHECK(result.output.find("aggregate over 3 seeds") != std::string::npos);
}

TEST_CASE("simulate is deterministic at fixed config and seed") {
  const auto cfg = write_config("cfg_det.json", R"({"days": 2, "stream_per_day": 15,
    "heldout_size": 25, "seed": 9, "method": "lisa"})");
  const fs::path out1 = scratch_dir() / "det1";
  const fs::path out2 = scratch_dir() / "det2";
  fs::remove_all(out1);
  fs::remove_all(out2);
  CHECK(run_cli("simulate --config " + cfg.string() + " --out-dir " + out1.string()).exit_code ==
        0);
  CHECK(run_cli("simulate --config " + cfg.string() + " --out-dir " + out2.string()).exit_code ==
        0);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  CHECK(slurp(out1 / "metrics_seed9.csv") == slurp(out2 / "metrics_seed9.csv"));
  CHECK(slurp(out1 / "snapshot_seed9.json") == slurp(out2 / "snapshot_seed9.json"));
}

TEST_CASE("inspect prints memory sizes and confidences, fails on corrupt files") {
  lisa::memory::MemorySnapshot snap;
  snap.version = 2;
  lisa::memory::BroadPolicy p;
  p.policy_id = "b1";
  p.statement = "data=credentials situation indicates inappropriate.";
  p.recommended_label = lisa::Label::Refuse;
  p.evidence = {5, 0};
  snap.broad.push_back(p);
  const fs::path path = scratch_dir() / "snap.json";
  lisa::memory::save_snapshot(snap, path);

  const auto result = run_cli("inspect " + path.string());
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("1 broad, 0 local") != std::string::npos);
  CHECK(result.output.find("confidence=0.6070") != std::string::npos);

  lisa::memory::MemorySnapshot empty;
  lisa::memory::save_snapshot(empty, scratch_dir() / "empty.json");
  const auto empty_result = run_cli("inspect " + (scratch_dir() / "empty.json").string());
  CHECK(empty_result.output.find("0 broad, 0 local") != std::string::npos);

  std::ofstream(scratch_dir() / "corrupt.json") << "{\"version\": 1, \"broad\": [{]";
  const auto corrupt = run_cli("inspect " + (scratch_dir() / "corrupt.json").string());
  CHECK(corrupt.exit_code == 1);
  CHECK(corrupt.output.find("inspect failed") != std::string::npos);
}

TEST_CASE("verify prints one line per check and exits zero") {
  const auto result = run_cli("verify --seed 7");
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("PASS confidence-monotonicity") != std::string::npos);
  CHECK(result.output.find("PASS closed-form-quantile") != std::string::npos);
  CHECK(result.output.find("FAIL") == std::string::npos);
}

TEST_CASE("gap-curves emits the comparison table") {
  const auto result = run_cli("gap-curves --n 10,100 --theta 0.5,1.0 --delta 0.05");
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("n,theta_hat,beta_bound,hoeffding_bound") == 0);
  CHECK(result.output.find("10,1.000000,0.761596,") != std::string::npos);
}

TEST_CASE("refresh rebuilds a snapshot from a report bank file") {
  // Reports forming one mixed neighborhood and one recurring refuse family.
  std::vector<lisa::memory::Report> reports;
  auto add = [&](const std::string& id, const std::string& summary, lisa::Label corrected) {
    lisa::memory::Report r;
    r.record.case_id = id;
    r.record.domain = "health";
    r.record.scenario_text = "text " + id;
    r.record.scenario_summary = summary;
    r.record.group_id = "g:" + id;
    r.record.attributes = {{"audience", summary.find("public") != std::string::npos
                                            ? "public"
                                            : "fringe"}};
    r.predicted_label = lisa::opposite(corrected);
    r.corrected_label = corrected;
    r.day = 1;
    reports.push_back(std::move(r));
  };
  add("m1", "scenario ns=health action=share data=schedule audience=public purpose=gossip",
      lisa::Label::Allow);
  add("m2", "scenario ns=health action=share data=schedule audience=fringe purpose=gossip",
      lisa::Label::Refuse);
  add("f1", "scenario ns=health action=send data=credentials audience=fringe purpose=support",
      lisa::Label::Refuse);
  add("f2", "scenario ns=health action=send data=credentials audience=fringe purpose=gossip",
      lisa::Label::Refuse);

  const fs::path bank = scratch_dir() / "bank.json";
  lisa::memory::save_reports(reports, bank);
  const fs::path out = scratch_dir() / "refresh_out.json";
  const auto result =
      run_cli("refresh --bank " + bank.string() + " --out " + out.string());
  CHECK(result.exit_code == 0);
  const auto snap = lisa::memory::load_snapshot(out);
  CHECK(snap.version == 1);
  CHECK(snap.local.size() == 2);  // the mixed pair
  CHECK_FALSE(snap.broad.empty());

  CHECK(run_cli("refresh --bank /nonexistent.json --out " + out.string()).exit_code == 1);
}

TEST_CASE("unknown subcommands and bare invocations are usage errors") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("no-such-command").exit_code == 2);
}
