#include "lisa/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "lisa/util.hpp"

namespace lisa::sim {

using guardrail::DecideOptions;
using guardrail::Decision;
using guardrail::GateMode;
using memory::MemorySnapshot;
using memory::Report;
using nlohmann::json;

std::optional<Method> parse_method(const std::string& name) {
  static const std::map<std::string, Method> table = {
      {"pure", Method::Pure},
      {"case_memory", Method::CaseMemory},
      {"broad_only", Method::BroadOnly},
      {"lisa", Method::Lisa},
      {"lisa_no_gate", Method::LisaNoGate},
      {"lisa_no_local", Method::LisaNoLocal},
      {"lisa_no_both", Method::LisaNoBoth},
      {"gate_accuracy", Method::GateAccuracy},
      {"agrail", Method::Agrail},
  };
  const auto it = table.find(name);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::string method_name(Method method) {
  switch (method) {
    case Method::Pure: return "pure";
    case Method::CaseMemory: return "case_memory";
    case Method::BroadOnly: return "broad_only";
    case Method::Lisa: return "lisa";
    case Method::LisaNoGate: return "lisa_no_gate";
    case Method::LisaNoLocal: return "lisa_no_local";
    case Method::LisaNoBoth: return "lisa_no_both";
    case Method::GateAccuracy: return "gate_accuracy";
    case Method::Agrail: return "agrail";
  }
  return "unknown";
}

std::vector<std::string> implemented_method_names() {
  return {"pure",          "case_memory",  "broad_only",   "lisa",
          "lisa_no_gate",  "lisa_no_local", "lisa_no_both", "gate_accuracy"};
}

bool method_implemented(Method method) { return method != Method::Agrail; }

bool method_uses_policies(Method method) {
  switch (method) {
    case Method::Pure:
    case Method::CaseMemory:
      return false;
    default:
      return method_implemented(method);
  }
}

DecideOptions decide_options_for(Method method) {
  DecideOptions opts;
  switch (method) {
    case Method::Pure:
      opts.use_cases = opts.use_broad = opts.use_local = false;
      break;
    case Method::CaseMemory:
      opts.use_broad = opts.use_local = false;
      opts.engage_on_cases = true;
      break;
    case Method::BroadOnly:
    case Method::LisaNoBoth:
      opts.use_local = false;
      opts.gate_mode = GateMode::None;
      break;
    case Method::Lisa:
      break;
    case Method::LisaNoGate:
      opts.gate_mode = GateMode::None;
      break;
    case Method::LisaNoLocal:
      opts.use_local = false;
      break;
    case Method::GateAccuracy:
      opts.gate_mode = GateMode::Accuracy;
      break;
    case Method::Agrail:
      throw std::invalid_argument("method 'agrail' is a reserved baseline slot; "
                                  "its checklist internals are not implemented");
  }
  return opts;
}

void DeploymentConfig::validate() const {
  if (days < 1) throw std::invalid_argument("config: days must be >= 1");
  if (stream_per_day < 1) throw std::invalid_argument("config: stream_per_day must be >= 1");
  if (heldout_size < 1) throw std::invalid_argument("config: heldout_size must be >= 1");
  if (!(noise_rho >= 0.0 && noise_rho <= 1.0))
    throw std::invalid_argument("config: noise_rho must lie in [0,1]");
  if (!method_implemented(method))
    throw std::invalid_argument("method 'agrail' is a reserved baseline slot; "
                                "its checklist internals are not implemented");
  gating.validate();
  if (provider != "stub" && provider != "http")
    throw std::invalid_argument("config: provider must be 'stub' or 'http'");
}

DeploymentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw memory::ParseError(std::string("config: invalid JSON: ") + e.what());
  }
  DeploymentConfig cfg;
  cfg.days = j.value("days", cfg.days);
  cfg.stream_per_day = j.value("stream_per_day", cfg.stream_per_day);
  cfg.heldout_size = j.value("heldout_size", cfg.heldout_size);
  cfg.noise_rho = j.value("noise_rho", cfg.noise_rho);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("method")) {
    const std::string name = j.at("method").get<std::string>();
    const auto parsed = parse_method(name);
    if (!parsed) {
      std::string valid;
      for (const auto& m : implemented_method_names()) valid += (valid.empty() ? "" : ", ") + m;
      throw memory::ParseError("config: unknown method '" + name + "' (valid: " + valid + ")");
    }
    cfg.method = *parsed;
  }
  if (j.contains("gating")) {
    const auto& jg = j.at("gating");
    cfg.gating.delta = jg.value("delta", cfg.gating.delta);
    cfg.gating.tau_refuse = jg.value("tau_refuse", cfg.gating.tau_refuse);
    cfg.gating.tau_allow = jg.value("tau_allow", cfg.gating.tau_allow);
  }
  if (j.contains("world")) {
    const auto& jw = j.at("world");
    cfg.world.plain_rules = jw.value("plain_rules", cfg.world.plain_rules);
    cfg.world.mixed_pairs = jw.value("mixed_pairs", cfg.world.mixed_pairs);
    cfg.world.base_coverage = jw.value("base_coverage", cfg.world.base_coverage);
    cfg.world.boundary_boost = jw.value("boundary_boost", cfg.world.boundary_boost);
  }
  cfg.provider = j.value("provider", cfg.provider);
  return cfg;
}

std::string config_to_json(const DeploymentConfig& config) {
  json j;
  j["days"] = config.days;
  j["stream_per_day"] = config.stream_per_day;
  j["heldout_size"] = config.heldout_size;
  j["noise_rho"] = config.noise_rho;
  j["seed"] = config.seed;
  j["method"] = method_name(config.method);
  j["gating"] = {{"delta", config.gating.delta},
                 {"tau_refuse", config.gating.tau_refuse},
                 {"tau_allow", config.gating.tau_allow}};
  j["world"] = {{"plain_rules", config.world.plain_rules},
                {"mixed_pairs", config.world.mixed_pairs},
                {"base_coverage", config.world.base_coverage},
                {"boundary_boost", config.world.boundary_boost}};
  j["provider"] = config.provider;
  return j.dump(2) + "\n";
}

std::vector<Report> apply_noise(std::vector<Report> reports, double rho, util::Rng& rng) {
  if (!(rho >= 0.0 && rho <= 1.0))
    throw std::invalid_argument("apply_noise: rho must lie in [0,1]");
  for (auto& report : reports) {
    if (util::next_bernoulli(rng, rho)) {
      report.corrected_label = opposite(report.corrected_label);
      report.flipped = true;
    }
  }
  return reports;
}

std::pair<double, double> amortized_cost(double tokens_in, double tokens_out,
                                         std::int64_t reuse_k) {
  if (reuse_k < 1) throw std::domain_error("amortized_cost: reuse_k must be >= 1");
  const double k = static_cast<double>(reuse_k);
  return {tokens_in / k, tokens_out / k};
}

MetricsRow compute_metrics(const std::vector<Label>& predicted, const std::vector<Label>& truth) {
  if (predicted.size() != truth.size() || predicted.empty())
    throw std::invalid_argument("compute_metrics: size mismatch or empty input");
  MetricsRow row;
  std::int64_t correct = 0;
  std::int64_t tp[2] = {0, 0}, pred_n[2] = {0, 0}, true_n[2] = {0, 0};
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const int p = static_cast<int>(predicted[i]);
    const int t = static_cast<int>(truth[i]);
    if (p == t) {
      ++correct;
      ++tp[p];
    }
    ++pred_n[p];
    ++true_n[t];
  }
  row.accuracy = static_cast<double>(correct) / static_cast<double>(predicted.size());

  double f1[2];
  double precision[2], recall[2];
  for (int c = 0; c < 2; ++c) {
    const bool p_def = pred_n[c] > 0;
    const bool r_def = true_n[c] > 0;
    precision[c] = p_def ? static_cast<double>(tp[c]) / static_cast<double>(pred_n[c]) : 0.0;
    recall[c] = r_def ? static_cast<double>(tp[c]) / static_cast<double>(true_n[c]) : 0.0;
    if (!p_def || !r_def || precision[c] + recall[c] == 0.0) {
      f1[c] = 0.0;
      row.degenerate_f1 = true;
    } else {
      f1[c] = 2.0 * precision[c] * recall[c] / (precision[c] + recall[c]);
    }
  }
  row.precision_allow = precision[0];
  row.recall_allow = recall[0];
  row.f1_allow = f1[0];
  row.precision_refuse = precision[1];
  row.recall_refuse = recall[1];
  row.f1_refuse = f1[1];
  row.macro_f1 = 0.5 * (f1[0] + f1[1]);
  return row;
}

namespace {

std::string csv_row(const MetricsRow& row, Method method, std::uint64_t seed) {
  std::ostringstream out;
  out << row.day << ',' << method_name(method) << ',' << seed << ','
      << util::format_fixed(row.accuracy, 6) << ',' << util::format_fixed(row.macro_f1, 6) << ','
      << util::format_fixed(row.mean_latency, 6) << ',' << row.broad_count << ','
      << row.local_count;
  return out.str();
}

}  // namespace

ExperimentResult run_experiment(const DeploymentConfig& config) {
  config.validate();

  const SyntheticWorld world(config.world, util::derive_seed(config.seed, "world"));
  providers::ProviderSet prov = providers::make_providers(config.provider, world.base_fn());

  util::Rng heldout_rng(util::derive_seed(config.seed, "heldout"));
  util::Rng stream_rng(util::derive_seed(config.seed, "stream"));
  util::Rng noise_rng(util::derive_seed(config.seed, "noise"));

  std::vector<memory::CaseRecord> heldout;
  std::vector<Label> heldout_truth;
  for (int i = 0; i < config.heldout_size; ++i) {
    heldout.push_back(world.sample_case(heldout_rng, "h" + std::to_string(i), true));
    heldout_truth.push_back(world.truth(heldout.back()));
  }

  const DecideOptions opts = decide_options_for(config.method);
  const bool uses_policies = method_uses_policies(config.method);

  memory::ReportBank bank;
  guardrail::CasePool pool;
  induction::OfflineRefresher refresher({prov.inducer.get(), prov.embedder.get()},
                                        config.gating);
  MemorySnapshot snapshot;
  snapshot.gating = config.gating;

  ExperimentResult result;
  result.config = config;
  std::ostringstream csv;
  csv << kMetricsCsvHeader << "\n";

  std::int64_t cumulative_reports = 0;
  std::int64_t cumulative_decisions = 0;

  for (int day = 1; day <= config.days; ++day) {
    const auto index = guardrail::SnapshotIndex::build(snapshot, *prov.embedder);

    // Online phase: decide the day's stream and collect sparse feedback for
    // the cases this method itself misclassified.
    std::vector<Report> reports;
    std::map<std::string, Decision> decisions;
    for (int i = 0; i < config.stream_per_day; ++i) {
      const std::string case_id = "d" + std::to_string(day) + "-s" + std::to_string(i);
      const memory::CaseRecord record = world.sample_case(stream_rng, case_id, false);
      const Decision decision =
          guardrail::decide(record, index, pool, *prov.guard, *prov.embedder, opts);
      ++cumulative_decisions;
      const Label truth = world.truth(record);
      if (decision.label != truth) {
        Report report;
        report.record = record;
        report.predicted_label = decision.label;
        report.corrected_label = truth;
        report.day = day;
        decisions.emplace(case_id, decision);
        reports.push_back(std::move(report));
      }
    }
    reports = apply_noise(std::move(reports), config.noise_rho, noise_rng);

    // Day-end feedback: record reports and route evidence updates to the
    // items each decision surfaced, in report order.
    for (const auto& report : reports) {
      bank.record(report);
      pool.add(report.record, report.corrected_label, *prov.embedder);
      guardrail::apply_feedback(decisions.at(report.record.case_id), report.corrected_label,
                                snapshot);
    }
    cumulative_reports += static_cast<std::int64_t>(reports.size());

    // Offline refresh, then held-out evaluation on the updated memory.
    if (uses_policies) {
      snapshot = refresher.refresh(bank, snapshot);
    }

    const auto eval_index = guardrail::SnapshotIndex::build(snapshot, *prov.embedder);
    std::vector<Label> predicted;
    predicted.reserve(heldout.size());
    double latency_sum = 0.0;
    for (const auto& record : heldout) {
      const Decision decision =
          guardrail::decide(record, eval_index, pool, *prov.guard, *prov.embedder, opts);
      ++cumulative_decisions;
      predicted.push_back(decision.label);
      latency_sum += decision.simulated_latency;
    }
    MetricsRow row = compute_metrics(predicted, heldout_truth);
    row.day = day;
    row.mean_latency = latency_sum / static_cast<double>(heldout.size());
    row.broad_count = static_cast<int>(snapshot.broad.size());
    row.local_count = static_cast<int>(snapshot.local.size());
    const auto amortized =
        amortized_cost(kInduceTokensIn * static_cast<double>(cumulative_reports),
                       kInduceTokensOut * static_cast<double>(cumulative_reports),
                       std::max<std::int64_t>(1, cumulative_decisions));
    row.amortized_tokens_in = amortized.first;
    row.amortized_tokens_out = amortized.second;
    csv << csv_row(row, config.method, config.seed) << "\n";
    result.rows.push_back(row);
  }

  result.final_snapshot = std::move(snapshot);
  result.reports = bank.all();
  result.csv = csv.str();
  return result;
}

MultiSeedResult run_seeds(DeploymentConfig config, int seeds) {
  if (seeds < 1) throw std::invalid_argument("run_seeds: seeds must be >= 1");
  MultiSeedResult out;
  const std::uint64_t base_seed = config.seed;
  for (int i = 0; i < seeds; ++i) {
    config.seed = base_seed + static_cast<std::uint64_t>(i);
    out.runs.push_back(run_experiment(config));
  }

  const int days = config.days;
  std::ostringstream agg;
  agg << "day,method,accuracy_mean,accuracy_std,macro_f1_mean,macro_f1_std,latency_mean,"
         "latency_std\n";
  auto mean_std = [&](auto getter, int day_index) {
    double mean = 0.0;
    for (const auto& run : out.runs) mean += getter(run.rows[day_index]);
    mean /= static_cast<double>(out.runs.size());
    double var = 0.0;
    for (const auto& run : out.runs) {
      const double d = getter(run.rows[day_index]) - mean;
      var += d * d;
    }
    var /= static_cast<double>(out.runs.size());
    return std::make_pair(mean, std::sqrt(var));
  };
  for (int d = 0; d < days; ++d) {
    const auto acc = mean_std([](const MetricsRow& r) { return r.accuracy; }, d);
    const auto f1 = mean_std([](const MetricsRow& r) { return r.macro_f1; }, d);
    const auto lat = mean_std([](const MetricsRow& r) { return r.mean_latency; }, d);
    agg << d + 1 << ',' << method_name(config.method) << ','
        << util::format_fixed(acc.first, 6) << ',' << util::format_fixed(acc.second, 6) << ','
        << util::format_fixed(f1.first, 6) << ',' << util::format_fixed(f1.second, 6) << ','
        << util::format_fixed(lat.first, 6) << ',' << util::format_fixed(lat.second, 6) << "\n";
    if (d + 1 == days) {
      out.final_macro_f1_mean = f1.first;
      out.final_macro_f1_std = f1.second;
    }
  }
  out.aggregate_csv = agg.str();
  return out;
}

}  // namespace lisa::sim
