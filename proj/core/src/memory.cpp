#include "lisa/memory.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace lisa::memory {

using nlohmann::json;

Label parse_label_word(const std::string& word) {
  if (word == "allow" || word == "appropriate" || word == "ALLOW" || word == "0")
    return Label::Allow;
  if (word == "refuse" || word == "inappropriate" || word == "REFUSE" || word == "1")
    return Label::Refuse;
  throw ParseError("unrecognized label word: '" + word + "'");
}

const BroadPolicy* MemorySnapshot::find_broad(const std::string& id) const {
  for (const auto& p : broad)
    if (p.policy_id == id) return &p;
  return nullptr;
}

BroadPolicy* MemorySnapshot::find_broad(const std::string& id) {
  for (auto& p : broad)
    if (p.policy_id == id) return &p;
  return nullptr;
}

const LocalRule* MemorySnapshot::find_local(const std::string& id) const {
  for (const auto& r : local)
    if (r.rule_id == id) return &r;
  return nullptr;
}

LocalRule* MemorySnapshot::find_local(const std::string& id) {
  for (auto& r : local)
    if (r.rule_id == id) return &r;
  return nullptr;
}

void ReportBank::record(Report report) {
  auto key = std::make_pair(report.record.case_id, report.day);
  if (!seen_.insert(key).second) {
    throw std::invalid_argument("ReportBank: duplicate report for case '" +
                                report.record.case_id + "' on day " +
                                std::to_string(report.day));
  }
  max_day_ = std::max(max_day_, report.day);
  reports_.push_back(std::move(report));
}

std::vector<Report> ReportBank::on_day(int day) const {
  std::vector<Report> out;
  for (const auto& r : reports_)
    if (r.day == day) out.push_back(r);
  return out;
}

void update_evidence(BroadPolicy& policy, Label corrected_label) {
  if (policy.recommended_label == corrected_label) {
    policy.evidence.support += 1;
    policy.runtime_evidence.support += 1;
  } else {
    policy.evidence.contradiction += 1;
    policy.runtime_evidence.contradiction += 1;
  }
}

void update_evidence(LocalRule& rule, Label corrected_label) {
  if (rule.recommended_label == corrected_label) {
    rule.evidence.support += 1;
  } else {
    rule.evidence.contradiction += 1;
  }
}

namespace {

json evidence_to_json(const EvidenceCounts& ev) {
  return json{{"support", ev.support}, {"contradiction", ev.contradiction}};
}

EvidenceCounts evidence_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("support") || !j.contains("contradiction"))
    throw ParseError("malformed evidence object in " + where);
  EvidenceCounts ev;
  ev.support = j.at("support").get<std::int64_t>();
  ev.contradiction = j.at("contradiction").get<std::int64_t>();
  if (ev.support < 0 || ev.contradiction < 0)
    throw ParseError("negative evidence count in " + where);
  return ev;
}

json case_to_json(const CaseRecord& c) {
  return json{{"case_id", c.case_id},
              {"namespace", c.domain},
              {"scenario_text", c.scenario_text},
              {"scenario_summary", c.scenario_summary},
              {"group_id", c.group_id},
              {"attributes", c.attributes}};
}

CaseRecord case_from_json(const json& j, const std::string& where) {
  CaseRecord c;
  try {
    c.case_id = j.at("case_id").get<std::string>();
    c.domain = j.at("namespace").get<std::string>();
    c.scenario_text = j.at("scenario_text").get<std::string>();
    c.scenario_summary = j.at("scenario_summary").get<std::string>();
    c.group_id = j.at("group_id").get<std::string>();
    if (j.contains("attributes"))
      c.attributes = j.at("attributes").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw ParseError("malformed case record in " + where + ": " + e.what());
  }
  return c;
}

json pivot_to_json(const PivotCue& p) {
  return json{{"attribute", p.attribute},
              {"allow_value", p.allow_value},
              {"refuse_value", p.refuse_value},
              {"description", p.description}};
}

PivotCue pivot_from_json(const json& j, const std::string& where) {
  PivotCue p;
  try {
    p.attribute = j.at("attribute").get<std::string>();
    p.allow_value = j.at("allow_value").get<std::string>();
    p.refuse_value = j.at("refuse_value").get<std::string>();
    p.description = j.at("description").get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError("malformed pivot in " + where + ": " + e.what());
  }
  return p;
}

}  // namespace

std::string snapshot_to_json(const MemorySnapshot& snapshot) {
  json j;
  j["version"] = snapshot.version;
  j["gating"] = json{{"delta", snapshot.gating.delta},
                     {"tau_refuse", snapshot.gating.tau_refuse},
                     {"tau_allow", snapshot.gating.tau_allow}};
  j["broad"] = json::array();
  for (const auto& p : snapshot.broad) {
    json jp;
    jp["policy_id"] = p.policy_id;
    jp["statement"] = p.statement;
    jp["title"] = p.title;
    jp["description"] = p.description;
    jp["recommended_label"] = label_word(p.recommended_label);
    jp["evidence"] = evidence_to_json(p.evidence);
    jp["runtime_evidence"] = evidence_to_json(p.runtime_evidence);
    jp["provenance"] = p.provenance;
    jp["label_skew"] = json{{"allow", p.label_skew.allow}, {"refuse", p.label_skew.refuse}};
    jp["near_conflict"] = p.near_conflict;
    j["broad"].push_back(std::move(jp));
  }
  j["local"] = json::array();
  for (const auto& r : snapshot.local) {
    json jr;
    jr["rule_id"] = r.rule_id;
    jr["region_summary"] = r.region_summary;
    jr["recommended_label"] = label_word(r.recommended_label);
    jr["pivots"] = json::array();
    for (const auto& p : r.pivots) jr["pivots"].push_back(pivot_to_json(p));
    jr["evidence"] = evidence_to_json(r.evidence);
    jr["source_cluster_id"] = r.source_cluster_id;
    jr["rendered_text"] = r.rendered_text;
    j["local"].push_back(std::move(jr));
  }
  return j.dump(2) + "\n";
}

MemorySnapshot snapshot_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("snapshot: invalid JSON document: ") + e.what());
  }
  MemorySnapshot snap;
  try {
    snap.version = j.at("version").get<std::int64_t>();
    const auto& jg = j.at("gating");
    snap.gating.delta = jg.at("delta").get<double>();
    snap.gating.tau_refuse = jg.at("tau_refuse").get<double>();
    snap.gating.tau_allow = jg.at("tau_allow").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("snapshot: missing version/gating: ") + e.what());
  }
  std::size_t idx = 0;
  for (const auto& jp : j.value("broad", json::array())) {
    const std::string where = "broad[" + std::to_string(idx++) + "]";
    BroadPolicy p;
    try {
      p.policy_id = jp.at("policy_id").get<std::string>();
      p.statement = jp.at("statement").get<std::string>();
      p.title = jp.value("title", "");
      p.description = jp.value("description", "");
      p.recommended_label = parse_label_word(jp.at("recommended_label").get<std::string>());
      p.evidence = evidence_from_json(jp.at("evidence"), where);
      if (jp.contains("runtime_evidence"))
        p.runtime_evidence = evidence_from_json(jp.at("runtime_evidence"), where);
      p.provenance = jp.value("provenance", std::vector<std::string>{});
      if (jp.contains("label_skew")) {
        p.label_skew.allow = jp.at("label_skew").value("allow", std::int64_t{0});
        p.label_skew.refuse = jp.at("label_skew").value("refuse", std::int64_t{0});
      }
      p.near_conflict = jp.value("near_conflict", false);
    } catch (const json::exception& e) {
      throw ParseError("snapshot: malformed record " + where + ": " + e.what());
    }
    if (p.statement.empty()) throw ParseError("snapshot: empty statement in " + where);
    snap.broad.push_back(std::move(p));
  }
  idx = 0;
  for (const auto& jr : j.value("local", json::array())) {
    const std::string where = "local[" + std::to_string(idx++) + "]";
    LocalRule r;
    try {
      r.rule_id = jr.at("rule_id").get<std::string>();
      r.region_summary = jr.at("region_summary").get<std::string>();
      r.recommended_label = parse_label_word(jr.at("recommended_label").get<std::string>());
      for (const auto& pj : jr.value("pivots", json::array()))
        r.pivots.push_back(pivot_from_json(pj, where));
      r.evidence = evidence_from_json(jr.at("evidence"), where);
      r.source_cluster_id = jr.value("source_cluster_id", "");
      r.rendered_text = jr.value("rendered_text", "");
    } catch (const json::exception& e) {
      throw ParseError("snapshot: malformed record " + where + ": " + e.what());
    }
    snap.local.push_back(std::move(r));
  }
  return snap;
}

void save_snapshot(const MemorySnapshot& snapshot, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open snapshot file for writing: " + path.string());
  out << snapshot_to_json(snapshot);
}

MemorySnapshot load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open snapshot file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return snapshot_from_json(buf.str());
}

std::string reports_to_json(const std::vector<Report>& reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    arr.push_back(json{{"case", case_to_json(r.record)},
                       {"predicted_label", label_word(r.predicted_label)},
                       {"corrected_label", label_word(r.corrected_label)},
                       {"day", r.day},
                       {"flipped", r.flipped}});
  }
  return json{{"reports", arr}}.dump(2) + "\n";
}

std::vector<Report> reports_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("reports: invalid JSON document: ") + e.what());
  }
  std::vector<Report> out;
  std::size_t idx = 0;
  for (const auto& jr : j.value("reports", json::array())) {
    const std::string where = "reports[" + std::to_string(idx++) + "]";
    Report r;
    try {
      r.record = case_from_json(jr.at("case"), where);
      r.predicted_label = parse_label_word(jr.at("predicted_label").get<std::string>());
      r.corrected_label = parse_label_word(jr.at("corrected_label").get<std::string>());
      r.day = jr.at("day").get<int>();
      r.flipped = jr.value("flipped", false);
    } catch (const json::exception& e) {
      throw ParseError("reports: malformed record " + where + ": " + e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

void save_reports(const std::vector<Report>& reports, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open reports file for writing: " + path.string());
  out << reports_to_json(reports);
}

std::vector<Report> load_reports(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open reports file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return reports_from_json(buf.str());
}

}  // namespace lisa::memory
