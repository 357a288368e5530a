#include "claimaudit/report.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "claimaudit/errors.hpp"
#include "claimaudit/version.hpp"

namespace claimaudit {

namespace {

using nlohmann::json;

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw AuditError(ErrorCode::IoError, "cannot open file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw AuditError(ErrorCode::IoError, "cannot write file: " + path.string());
  }
  out << text;
}

std::string format2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

Inequality inequality_from_string(const std::string& s) {
  if (s == "strict") return Inequality::Strict;
  if (s == "non_strict") return Inequality::NonStrict;
  throw AuditError(ErrorCode::ConfigError, "inequality must be strict or non_strict");
}

std::string to_string(Inequality i) {
  return i == Inequality::Strict ? "strict" : "non_strict";
}

Rq2Form rq2_form_from_string(const std::string& s) {
  if (s == "absolute") return Rq2Form::Absolute;
  if (s == "signed") return Rq2Form::Signed;
  throw AuditError(ErrorCode::ConfigError, "rq2_form must be absolute or signed");
}

std::string to_string(Rq2Form f) { return f == Rq2Form::Absolute ? "absolute" : "signed"; }

}  // namespace

AuditConfig load_audit_config(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw AuditError(ErrorCode::ConfigError,
                     "bad config " + path.string() + ": " + e.what());
  }
  AuditConfig config;
  try {
    if (doc.contains("dataset")) {
      const auto& d = doc["dataset"];
      config.claims_path = d.value("claims", config.claims_path);
      config.workers_path = d.value("workers", config.workers_path);
      config.annotations_path = d.value("annotations", config.annotations_path);
    }
    config.out_dir = doc.value("out", config.out_dir);
    if (doc.contains("dimension")) {
      auto dim = dimension_from_string(doc["dimension"].get<std::string>());
      if (!dim) throw AuditError(ErrorCode::ConfigError, "unknown dimension");
      config.dimension = *dim;
    }
    if (doc.contains("variants")) {
      config.variants = doc["variants"].get<std::vector<int>>();
    }
    if (doc.contains("filter")) {
      const auto& f = doc["filter"];
      config.filter_threshold = f.value("threshold", config.filter_threshold);
      config.gold_midpoint = f.value("gold_midpoint", config.gold_midpoint);
    }
    if (doc.contains("provider")) {
      const auto& p = doc["provider"];
      config.provider.kind = p.value("kind", config.provider.kind);
      config.provider.endpoint = p.value("endpoint", config.provider.endpoint);
      config.provider.path = p.value("path", config.provider.path);
      config.provider.model = p.value("model", config.provider.model);
      config.provider.temperature = p.value("temperature", config.provider.temperature);
      config.provider.timeout_seconds = p.value("timeout_seconds", config.provider.timeout_seconds);
      config.provider.max_retries = p.value("max_retries", config.provider.max_retries);
      config.provider.requests_per_minute =
          p.value("requests_per_minute", config.provider.requests_per_minute);
      config.provider.api_key_env = p.value("api_key_env", config.provider.api_key_env);
      config.provider.mock_script = p.value("script", config.provider.mock_script);
    }
    if (doc.contains("bootstrap")) {
      const auto& b = doc["bootstrap"];
      config.bootstrap.B = b.value("B", config.bootstrap.B);
      config.bootstrap.seed = b.value("seed", config.bootstrap.seed);
      if (b.contains("inequality")) {
        config.bootstrap.inequality = inequality_from_string(b["inequality"].get<std::string>());
      }
      if (b.contains("rq2_form")) {
        config.bootstrap.rq2_form = rq2_form_from_string(b["rq2_form"].get<std::string>());
      }
    }
    if (doc.contains("zscore")) {
      const auto& z = doc["zscore"];
      config.zscore.split_by_gender = z.value("split_by_gender", config.zscore.split_by_gender);
      config.zscore.pool_llm_variants =
          z.value("pool_llm_variants", config.zscore.pool_llm_variants);
    }
    config.prompt_config_path = doc.value("prompts", config.prompt_config_path);
  } catch (const json::exception& e) {
    throw AuditError(ErrorCode::ConfigError,
                     "bad config " + path.string() + ": " + e.what());
  }
  if (config.variants.empty()) {
    throw AuditError(ErrorCode::ConfigError, "at least one prompt variant is required");
  }
  for (int v : config.variants) {
    if (v != 1 && v != 2) {
      throw AuditError(ErrorCode::ConfigError, "prompt variants must be 1 or 2");
    }
  }
  if (config.bootstrap.B < 1) {
    throw AuditError(ErrorCode::ConfigError, "bootstrap B must be >= 1");
  }
  return config;
}

namespace {

json settings_json(const AuditConfig& config) {
  json variants = json::array();
  for (int v : config.variants) variants.push_back(v);
  return json{
      {"dimension", claimaudit::to_string(config.dimension)},
      {"variants", variants},
      {"filter", {{"threshold", config.filter_threshold},
                  {"gold_midpoint", config.gold_midpoint}}},
      {"provider", {{"kind", config.provider.kind},
                    {"endpoint", config.provider.endpoint},
                    {"model", config.provider.model},
                    {"temperature", config.provider.temperature},
                    {"max_retries", config.provider.max_retries}}},
      {"bootstrap", {{"B", config.bootstrap.B},
                     {"seed", config.bootstrap.seed},
                     {"inequality", to_string(config.bootstrap.inequality)},
                     {"rq2_form", to_string(config.bootstrap.rq2_form)}}},
      {"zscore", config.zscore.describe()},
  };
}

}  // namespace

std::string settings_to_json(const AuditConfig& config) {
  json j = settings_json(config);
  j["dataset"] = {{"claims", config.claims_path},
                  {"workers", config.workers_path},
                  {"annotations", config.annotations_path}};
  return j.dump(2) + "\n";
}

DirLock::DirLock(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  path_ = dir / kLockFile;
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) {
      throw AuditError(ErrorCode::LockHeld,
                       "output directory is locked by " + path_.string() +
                           "; remove the file if no other run is active");
    }
    throw AuditError(ErrorCode::IoError, "cannot create lock file: " + path_.string());
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto written = ::write(fd, pid.data(), pid.size());
  ::close(fd);
  held_ = true;
}

DirLock::~DirLock() {
  if (held_) {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
}

std::string significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "-";
}

std::vector<FigureRow> export_figure_data(const GroupedScores& grouped, int prompt_variant) {
  std::vector<FigureRow> rows;
  struct CellSpec {
    Source source;
    Condition condition;
    int variant;
  };
  for (const auto& topic : grouped.topics()) {
    TopicDivergence div;
    try {
      div = topic_divergence(grouped, topic, prompt_variant);
    } catch (const AuditError&) {
      continue;  // no eligible claims; counts reflect exclusion
    }
    const CellSpec specs[] = {
        {Source::Human, Condition::Man, 0},
        {Source::Human, Condition::Woman, 0},
        {Source::Llm, Condition::ManConditioned, prompt_variant},
        {Source::Llm, Condition::WomanConditioned, prompt_variant},
        {Source::Llm, Condition::Base, prompt_variant},
    };
    for (const auto& spec : specs) {
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto& claim_id : div.included) {
        if (const auto* cell = grouped.cell(claim_id, spec.source, spec.condition, spec.variant)) {
          for (double z : *cell) sum += z;
          count += cell->size();
        }
      }
      if (count == 0) continue;
      rows.push_back({topic, prompt_variant, spec.source, spec.condition,
                      sum / static_cast<double>(count), count});
    }
  }
  return rows;
}

csv::Table figure_rows_to_table(const std::vector<FigureRow>& rows) {
  csv::Table t;
  t.header = {"topic", "prompt_variant", "source", "condition", "mean_z", "count"};
  for (const auto& r : rows) {
    char mean_buf[64];
    std::snprintf(mean_buf, sizeof(mean_buf), "%.17g", r.mean_z);
    t.rows.push_back({r.topic, std::to_string(r.prompt_variant), claimaudit::to_string(r.source),
                      claimaudit::to_string(r.condition), mean_buf, std::to_string(r.count)});
  }
  return t;
}

namespace {

json analysis_to_json(const TopicAnalysis& a) {
  json excluded = json::array();
  for (const auto& e : a.excluded) {
    excluded.push_back({{"claim_id", e.claim_id}, {"reason", e.reason}});
  }
  json j = {
      {"topic", a.result.topic},
      {"statistic", claimaudit::to_string(a.result.statistic_kind)},
      {"prompt_variant", a.result.prompt_variant},
      {"value", a.result.value},
      {"p_value", a.result.p_value},
      {"stars", significance_stars(a.result.p_value)},
      {"B", a.result.B},
      {"seed", a.result.seed},
      {"included_claims", a.included},
      {"excluded_claims", excluded},
  };
  if (a.result.mse_man) j["mse_man"] = *a.result.mse_man;
  if (a.result.mse_woman) j["mse_woman"] = *a.result.mse_woman;
  return j;
}

TopicAnalysis analysis_from_json(const json& j) {
  TopicAnalysis a;
  a.result.topic = j.at("topic").get<std::string>();
  a.result.statistic_kind =
      j.at("statistic").get<std::string>() == "D_hat" ? StatisticKind::DHat : StatisticKind::EHat;
  a.result.prompt_variant = j.at("prompt_variant").get<int>();
  a.result.value = j.at("value").get<double>();
  a.result.p_value = j.at("p_value").get<double>();
  a.result.B = j.at("B").get<std::uint64_t>();
  a.result.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("mse_man")) a.result.mse_man = j["mse_man"].get<double>();
  if (j.contains("mse_woman")) a.result.mse_woman = j["mse_woman"].get<double>();
  a.included = j.at("included_claims").get<std::vector<std::string>>();
  for (const auto& e : j.at("excluded_claims")) {
    a.excluded.push_back({e.at("claim_id").get<std::string>(), e.at("reason").get<std::string>()});
  }
  return a;
}

}  // namespace

std::string analyses_to_json(const std::vector<TopicAnalysis>& analyses) {
  json rows = json::array();
  for (const auto& a : analyses) rows.push_back(analysis_to_json(a));
  return json{{"rows", rows}}.dump(2) + "\n";
}

std::vector<TopicAnalysis> analyses_from_json(const std::string& text) {
  std::vector<TopicAnalysis> out;
  json doc;
  try {
    doc = json::parse(text);
    for (const auto& row : doc.at("rows")) out.push_back(analysis_from_json(row));
  } catch (const json::exception& e) {
    throw AuditError(ErrorCode::IoError, std::string("bad analysis file: ") + e.what());
  }
  return out;
}

namespace {

json filter_json(const FilterReport& filter, std::size_t dedupe_removed) {
  json removed = json::array();
  for (const auto& r : filter.removed) {
    json row = {{"worker_id", r.worker_id},
                {"annotations_removed", r.annotations_removed}};
    if (r.accuracy) {
      row["accuracy"] = *r.accuracy;
    } else {
      row["accuracy"] = nullptr;
    }
    removed.push_back(row);
  }
  return json{{"threshold", filter.threshold},
              {"workers_before", filter.workers_before},
              {"workers_after", filter.workers_after},
              {"annotations_before", filter.annotations_before},
              {"annotations_after", filter.annotations_after},
              {"claims_pruned", filter.claims_pruned},
              {"duplicates_removed", dedupe_removed},
              {"removed", removed}};
}

std::pair<FilterReport, std::size_t> filter_from_json(const json& j) {
  FilterReport filter;
  filter.threshold = j.at("threshold").get<double>();
  filter.workers_before = j.at("workers_before").get<std::size_t>();
  filter.workers_after = j.at("workers_after").get<std::size_t>();
  filter.annotations_before = j.at("annotations_before").get<std::size_t>();
  filter.annotations_after = j.at("annotations_after").get<std::size_t>();
  filter.claims_pruned = j.at("claims_pruned").get<std::size_t>();
  for (const auto& row : j.at("removed")) {
    RemovedWorker r;
    r.worker_id = row.at("worker_id").get<std::string>();
    if (!row.at("accuracy").is_null()) r.accuracy = row.at("accuracy").get<double>();
    r.annotations_removed = row.at("annotations_removed").get<std::size_t>();
    filter.removed.push_back(std::move(r));
  }
  return {filter, j.at("duplicates_removed").get<std::size_t>()};
}

json coverage_json(const CoverageReport& coverage) {
  json gaps = json::array();
  for (const auto& g : coverage.gaps) {
    gaps.push_back({{"claim_id", g.claim_id},
                    {"condition", claimaudit::to_string(g.condition)},
                    {"prompt_variant", g.prompt_variant},
                    {"slot", g.slot},
                    {"reason", g.reason}});
  }
  return json{{"planned", coverage.planned},
              {"filled", coverage.filled},
              {"complete", coverage.complete()},
              {"gaps", gaps}};
}

CoverageReport coverage_from_json(const json& j) {
  CoverageReport coverage;
  coverage.planned = j.at("planned").get<std::size_t>();
  coverage.filled = j.at("filled").get<std::size_t>();
  for (const auto& g : j.at("gaps")) {
    CoverageGap gap;
    gap.claim_id = g.at("claim_id").get<std::string>();
    auto cond = condition_from_string(g.at("condition").get<std::string>());
    gap.condition = cond.value_or(Condition::Base);
    gap.prompt_variant = g.at("prompt_variant").get<int>();
    gap.slot = g.at("slot").get<std::size_t>();
    gap.reason = g.at("reason").get<std::string>();
    coverage.gaps.push_back(std::move(gap));
  }
  return coverage;
}

}  // namespace

std::string report_to_json(const AuditReport& report, const AuditConfig& config) {
  json rq1 = json::array();
  for (const auto& a : report.rq1) rq1.push_back(analysis_to_json(a));
  json rq2 = json::array();
  for (const auto& a : report.rq2) rq2.push_back(analysis_to_json(a));

  json figure = json::array();
  for (const auto& r : report.figure_data) {
    figure.push_back({{"topic", r.topic},
                      {"prompt_variant", r.prompt_variant},
                      {"source", claimaudit::to_string(r.source)},
                      {"condition", claimaudit::to_string(r.condition)},
                      {"mean_z", r.mean_z},
                      {"count", r.count}});
  }
  json warnings = json::array();
  for (const auto& w : report.warnings) {
    warnings.push_back({{"code", w.code}, {"context", w.context}, {"message", w.message}});
  }

  json j = {
      {"tool", {{"name", kToolName}, {"version", kToolVersion}}},
      {"incomplete", report.incomplete},
      {"dataset",
       {{"claims_path", report.dataset.provenance.claims_path},
        {"workers_path", report.dataset.provenance.workers_path},
        {"annotations_path", report.dataset.provenance.annotations_path},
        {"claims", report.dataset.claims},
        {"workers", report.dataset.workers},
        {"human_annotations", report.dataset.human_annotations},
        {"llm_annotations", report.dataset.llm_annotations},
        {"duplicates_removed", report.dataset.dedupe_removed}}},
      {"filter", filter_json(report.filter, report.dataset.dedupe_removed)},
      {"settings", settings_json(config)},
      {"coverage", coverage_json(report.coverage)},
      {"rq1", rq1},
      {"rq2", rq2},
      {"figure_data", figure},
      {"warnings", warnings},
  };
  return j.dump(2) + "\n";
}

namespace {

struct VariantCell {
  const TopicAnalysis* rq1 = nullptr;
  const TopicAnalysis* rq2 = nullptr;
};

std::string pad_right(const std::string& s, std::size_t width) {
  if (s.size() >= width) return s;
  return s + std::string(width - s.size(), ' ');
}

std::string pad_left(const std::string& s, std::size_t width) {
  if (s.size() >= width) return s;
  return std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string report_to_text(const AuditReport& report, const AuditConfig& config) {
  std::ostringstream out;
  out << kToolName << " " << kToolVersion << " audit report\n";
  if (report.incomplete) {
    out << "status: INCOMPLETE (" << report.coverage.gaps.size() << " coverage gaps)\n";
  } else {
    out << "status: complete\n";
  }
  out << "\n";
  out << "dataset\n";
  out << "  claims:      " << report.dataset.provenance.claims_path << "\n";
  out << "  workers:     " << report.dataset.provenance.workers_path << "\n";
  out << "  annotations: " << report.dataset.provenance.annotations_path << "\n";
  out << "  claims=" << report.dataset.claims << " workers=" << report.dataset.workers
      << " human_annotations=" << report.dataset.human_annotations
      << " llm_annotations=" << report.dataset.llm_annotations
      << " duplicates_removed=" << report.dataset.dedupe_removed << "\n";
  out << "  workers_removed=" << report.filter.removed.size()
      << " (gold accuracy threshold > " << format2(report.filter.threshold) << ")\n";
  out << "\n";
  out << "settings\n";
  out << "  dimension=" << claimaudit::to_string(config.dimension);
  out << " variants=";
  for (std::size_t i = 0; i < config.variants.size(); ++i) {
    if (i) out << ",";
    out << config.variants[i];
  }
  out << " B=" << config.bootstrap.B << " seed=" << config.bootstrap.seed
      << " inequality=" << to_string(config.bootstrap.inequality)
      << " rq2_form=" << to_string(config.bootstrap.rq2_form)
      << " zscore=" << config.zscore.describe() << " provider=" << config.provider.kind
      << " model=" << config.provider.model << "\n";
  out << "\n";

  // topic -> variant -> rows
  std::map<std::string, std::map<int, VariantCell>> table;
  for (const auto& a : report.rq1) table[a.result.topic][a.result.prompt_variant].rq1 = &a;
  for (const auto& a : report.rq2) table[a.result.topic][a.result.prompt_variant].rq2 = &a;

  const std::size_t topic_width = 24;
  out << "RQ1: gender-conditioned divergence (E_hat per topic)\n";
  out << pad_right("  Topic", topic_width + 2);
  for (int v : config.variants) {
    out << pad_left("E(P" + std::to_string(v) + ")", 10) << pad_left("Sig", 5);
  }
  out << "\n";
  for (const auto& [topic, cells] : table) {
    bool any = false;
    for (const auto& [v, cell] : cells) any = any || cell.rq1 != nullptr;
    if (!any) continue;
    out << "  " << pad_right(topic, topic_width);
    for (int v : config.variants) {
      auto it = cells.find(v);
      if (it != cells.end() && it->second.rq1) {
        out << pad_left(format2(it->second.rq1->result.value), 10)
            << pad_left(significance_stars(it->second.rq1->result.p_value), 5);
      } else {
        out << pad_left("n/a", 10) << pad_left("", 5);
      }
    }
    out << "\n";
  }
  out << "\n";
  out << "RQ2: neutral-prompt alignment (D_hat = |MSE_women - MSE_men|)\n";
  out << pad_right("  Topic", topic_width + 2);
  for (int v : config.variants) {
    const std::string sv = std::to_string(v);
    out << pad_left("MSE_m(P" + sv + ")", 11) << pad_left("MSE_w(P" + sv + ")", 11)
        << pad_left("p(P" + sv + ")", 9) << pad_left("Sig", 5);
  }
  out << "\n";
  for (const auto& [topic, cells] : table) {
    bool any = false;
    for (const auto& [v, cell] : cells) any = any || cell.rq2 != nullptr;
    if (!any) continue;
    out << "  " << pad_right(topic, topic_width);
    for (int v : config.variants) {
      auto it = cells.find(v);
      if (it != cells.end() && it->second.rq2) {
        const TopicResult& r = it->second.rq2->result;
        out << pad_left(format2(r.mse_man.value_or(0.0)), 11)
            << pad_left(format2(r.mse_woman.value_or(0.0)), 11)
            << pad_left(format2(r.p_value), 9)
            << pad_left(significance_stars(r.p_value), 5);
      } else {
        out << pad_left("n/a", 11) << pad_left("n/a", 11) << pad_left("n/a", 9)
            << pad_left("", 5);
      }
    }
    out << "\n";
  }
  out << "\n";
  out << "Note: (*) p < 0.05, (**) p < 0.01, (***) p < 0.001; (-) not significant.\n";

  if (!report.coverage.complete()) {
    out << "\ncoverage gaps\n";
    for (const auto& g : report.coverage.gaps) {
      out << "  " << g.claim_id << " " << claimaudit::to_string(g.condition) << " v"
          << g.prompt_variant << " slot " << g.slot << ": " << g.reason << "\n";
    }
  }
  if (!report.warnings.empty()) {
    out << "\nwarnings\n";
    for (const auto& w : report.warnings) {
      out << "  [" << w.code << "] " << w.context << ": " << w.message << "\n";
    }
  }
  return out.str();
}

IngestOutput stage_ingest(const AuditConfig& config, std::ostream& log) {
  LoadReport loaded = load_dataset(config.claims_path, config.workers_path,
                                   config.annotations_path);
  if (!loaded.ok()) {
    for (const auto& e : loaded.errors) log << e.format() << "\n";
    throw AuditError(ErrorCode::BadValue,
                     "dataset failed validation with " +
                         std::to_string(loaded.errors.size()) + " errors");
  }
  IngestOutput out;
  DedupeResult deduped = dedupe(loaded.bundle);
  out.dedupe_removed = deduped.removed;
  FilterResult filtered =
      filter_workers(deduped.bundle, config.filter_threshold, {config.gold_midpoint});
  out.bundle = std::move(filtered.bundle);
  out.filter = std::move(filtered.report);

  const std::filesystem::path dir = config.out_dir;
  write_text_file(dir / kSettingsFile, settings_to_json(config));
  save_dataset(out.bundle, dir / kRetainedClaimsFile, dir / kRetainedWorkersFile,
               dir / kRetainedAnnotationsFile);
  write_text_file(dir / kFilterReportTextFile, out.filter.format());
  write_text_file(dir / kFilterReportJsonFile,
                  filter_json(out.filter, out.dedupe_removed).dump(2) + "\n");
  log << "ingest: " << out.bundle.claims.size() << " claims, "
      << out.bundle.workers.size() << " workers, " << out.bundle.annotations.size()
      << " annotations retained (" << out.dedupe_removed << " duplicates, "
      << out.filter.removed.size() << " workers removed)\n";
  return out;
}

CollectOutput stage_collect(const AuditConfig& config, const DatasetBundle& retained,
                            std::ostream& log) {
  const std::filesystem::path dir = config.out_dir;
  auto provider = make_provider(config.provider);

  CollectOptions options;
  if (!config.prompt_config_path.empty()) {
    options.prompts = load_prompt_config(config.prompt_config_path);
  }
  // Mock and cache-only runs use a fixed clock so reruns are byte-identical.
  FixedClock fixed_clock;
  SystemClock system_clock;
  options.clock = config.provider.kind == "http"
                      ? static_cast<Clock*>(&system_clock)
                      : static_cast<Clock*>(&fixed_clock);

  ResponseCache cache(dir / kCacheFile);
  CollectOutput out;
  std::vector<CollectionRecord> records;
  for (int variant : config.variants) {
    CollectionPlan plan = plan_collection(retained, config.dimension, variant);
    CollectionResult result =
        collect(plan, retained, *provider, config.provider, cache, options);
    out.annotations.insert(out.annotations.end(), result.annotations.begin(),
                           result.annotations.end());
    records.insert(records.end(), result.records.begin(), result.records.end());
    out.coverage.planned += result.coverage.planned;
    out.coverage.filled += result.coverage.filled;
    out.coverage.gaps.insert(out.coverage.gaps.end(), result.coverage.gaps.begin(),
                             result.coverage.gaps.end());
  }

  csv::write_file(dir / kLlmAnnotationsFile, annotations_to_table(out.annotations));
  write_collection_records(dir / kCollectionRecordsFile, records);
  write_text_file(dir / kCoverageFile, coverage_json(out.coverage).dump(2) + "\n");
  log << "collect: " << out.coverage.filled << "/" << out.coverage.planned
      << " slots filled, " << out.coverage.gaps.size() << " gaps\n";
  return out;
}

std::vector<TopicAnalysis> stage_analyze(const AuditConfig& config,
                                         const GroupedScores& grouped, TestKind kind,
                                         std::ostream& log) {
  std::vector<TopicAnalysis> rows;
  for (int variant : config.variants) {
    for (const auto& topic : grouped.topics()) {
      try {
        rows.push_back(kind == TestKind::Rq1
                           ? rq1_bootstrap(grouped, topic, variant, config.bootstrap)
                           : rq2_bootstrap(grouped, topic, variant, config.bootstrap));
      } catch (const AuditError& e) {
        if (e.code() != ErrorCode::EmptyTopic) throw;
        log << (kind == TestKind::Rq1 ? "rq1" : "rq2") << ": skipping topic '" << topic
            << "' variant " << variant << ": " << e.what() << "\n";
      }
    }
  }
  const std::filesystem::path dir = config.out_dir;
  write_text_file(dir / (kind == TestKind::Rq1 ? kRq1ResultsFile : kRq2ResultsFile),
                  analyses_to_json(rows));
  return rows;
}

DatasetBundle read_retained(const AuditConfig& config) {
  const std::filesystem::path dir = config.out_dir;
  LoadReport loaded = load_dataset(dir / kRetainedClaimsFile, dir / kRetainedWorkersFile,
                                   dir / kRetainedAnnotationsFile);
  if (!loaded.ok()) {
    throw AuditError(ErrorCode::BadValue, "retained dataset failed validation; rerun ingest");
  }
  return std::move(loaded.bundle);
}

std::vector<Annotation> read_llm_annotations(const AuditConfig& config,
                                             const DatasetBundle& /*retained*/) {
  const std::filesystem::path dir = config.out_dir;
  LoadReport loaded = load_dataset(dir / kRetainedClaimsFile, dir / kRetainedWorkersFile,
                                   dir / kLlmAnnotationsFile);
  if (!loaded.ok()) {
    throw AuditError(ErrorCode::BadValue, "llm annotations failed validation; rerun collect");
  }
  return std::move(loaded.bundle.annotations);
}

namespace {

std::vector<GroupWarning> topic_skip_warnings(const GroupedScores& grouped,
                                              const AuditConfig& config,
                                              const std::vector<TopicAnalysis>& rq1,
                                              const std::vector<TopicAnalysis>& rq2) {
  std::vector<GroupWarning> warnings;
  if (config.dimension != Dimension::GroupHarm) {
    warnings.push_back({"DIMENSION_EXTENSION", claimaudit::to_string(config.dimension),
                        "prompts for this dimension reuse the group-harm scaffold with "
                        "the question text swapped"});
  }
  auto has_row = [](const std::vector<TopicAnalysis>& rows, const std::string& topic,
                    int variant) {
    return std::any_of(rows.begin(), rows.end(), [&](const TopicAnalysis& a) {
      return a.result.topic == topic && a.result.prompt_variant == variant;
    });
  };
  for (const auto& topic : grouped.topics()) {
    for (int v : config.variants) {
      if (!has_row(rq1, topic, v)) {
        warnings.push_back({"EMPTY_TOPIC", topic + "/v" + std::to_string(v),
                            "no claims eligible for divergence analysis"});
      }
      if (!has_row(rq2, topic, v)) {
        warnings.push_back({"EMPTY_TOPIC", topic + "/v" + std::to_string(v),
                            "no claims eligible for alignment analysis"});
      }
    }
  }
  return warnings;
}

}  // namespace

RunOutcome stage_report(const AuditConfig& config, std::ostream& log) {
  const std::filesystem::path dir = config.out_dir;
  DatasetBundle retained = read_retained(config);
  std::vector<Annotation> llm = read_llm_annotations(config, retained);

  std::vector<Annotation> all_annotations = retained.annotations;
  all_annotations.insert(all_annotations.end(), llm.begin(), llm.end());
  GroupedScores grouped =
      zscore_normalize(retained.claims, all_annotations, config.dimension, config.zscore);

  AuditReport report;
  report.dataset.provenance = {config.claims_path, config.workers_path,
                               config.annotations_path};
  report.dataset.claims = retained.claims.size();
  report.dataset.workers = retained.workers.size();
  report.dataset.human_annotations = retained.annotations.size();
  report.dataset.llm_annotations = llm.size();

  json filter_doc;
  try {
    filter_doc = json::parse(read_text_file(dir / kFilterReportJsonFile));
    auto [filter, dedupe_removed] = filter_from_json(filter_doc);
    report.filter = std::move(filter);
    report.dataset.dedupe_removed = dedupe_removed;
  } catch (const json::exception& e) {
    throw AuditError(ErrorCode::IoError, std::string("bad filter report: ") + e.what());
  }
  try {
    report.coverage = coverage_from_json(json::parse(read_text_file(dir / kCoverageFile)));
  } catch (const json::exception& e) {
    throw AuditError(ErrorCode::IoError, std::string("bad coverage file: ") + e.what());
  }
  report.rq1 = analyses_from_json(read_text_file(dir / kRq1ResultsFile));
  report.rq2 = analyses_from_json(read_text_file(dir / kRq2ResultsFile));
  for (int v : config.variants) {
    auto rows = export_figure_data(grouped, v);
    report.figure_data.insert(report.figure_data.end(), rows.begin(), rows.end());
  }
  report.warnings = grouped.warnings;
  auto skips = topic_skip_warnings(grouped, config, report.rq1, report.rq2);
  report.warnings.insert(report.warnings.end(), skips.begin(), skips.end());
  report.incomplete = !report.coverage.complete();

  write_text_file(dir / kReportJsonFile, report_to_json(report, config));
  write_text_file(dir / kReportTextFile, report_to_text(report, config));
  csv::write_file(dir / kFigureDataFile, figure_rows_to_table(report.figure_data));
  log << "report: " << report.rq1.size() << " rq1 rows, " << report.rq2.size()
      << " rq2 rows -> " << (dir / kReportJsonFile).string() << "\n";

  RunOutcome outcome;
  outcome.exit_code = report.incomplete ? 3 : 0;
  outcome.report = std::move(report);
  return outcome;
}

RunOutcome run_audit(const AuditConfig& config, std::ostream& log) {
  RunOutcome outcome;
  if (config.claims_path.empty() || config.workers_path.empty() ||
      config.annotations_path.empty()) {
    throw AuditError(ErrorCode::ConfigError, "dataset paths are required");
  }
  DirLock lock(config.out_dir);
  const std::filesystem::path dir = config.out_dir;
  write_text_file(dir / kSettingsFile, settings_to_json(config));

  IngestOutput ingested = stage_ingest(config, log);
  CollectOutput collected = stage_collect(config, ingested.bundle, log);

  std::vector<Annotation> all_annotations = ingested.bundle.annotations;
  all_annotations.insert(all_annotations.end(), collected.annotations.begin(),
                         collected.annotations.end());
  GroupedScores grouped = zscore_normalize(ingested.bundle.claims, all_annotations,
                                           config.dimension, config.zscore);

  std::vector<TopicAnalysis> rq1 = stage_analyze(config, grouped, TestKind::Rq1, log);
  std::vector<TopicAnalysis> rq2 = stage_analyze(config, grouped, TestKind::Rq2, log);

  AuditReport report;
  report.dataset.provenance = {config.claims_path, config.workers_path,
                               config.annotations_path};
  report.dataset.claims = ingested.bundle.claims.size();
  report.dataset.workers = ingested.bundle.workers.size();
  report.dataset.human_annotations = ingested.bundle.annotations.size();
  report.dataset.llm_annotations = collected.annotations.size();
  report.dataset.dedupe_removed = ingested.dedupe_removed;
  report.filter = ingested.filter;
  report.coverage = collected.coverage;
  report.rq1 = std::move(rq1);
  report.rq2 = std::move(rq2);
  for (int v : config.variants) {
    auto rows = export_figure_data(grouped, v);
    report.figure_data.insert(report.figure_data.end(), rows.begin(), rows.end());
  }
  report.warnings = grouped.warnings;
  auto skips = topic_skip_warnings(grouped, config, report.rq1, report.rq2);
  report.warnings.insert(report.warnings.end(), skips.begin(), skips.end());
  report.incomplete = !report.coverage.complete();

  write_text_file(dir / kReportJsonFile, report_to_json(report, config));
  write_text_file(dir / kReportTextFile, report_to_text(report, config));
  csv::write_file(dir / kFigureDataFile, figure_rows_to_table(report.figure_data));

  log << "report: " << report.rq1.size() << " rq1 rows, " << report.rq2.size()
      << " rq2 rows -> " << (dir / kReportJsonFile).string() << "\n";
  outcome.exit_code = report.incomplete ? 3 : 0;
  outcome.report = std::move(report);
  return outcome;
}

}  // namespace claimaudit
