#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "claimaudit/collector.hpp"
#include "claimaudit/ingest.hpp"
#include "claimaudit/prompts.hpp"
#include "claimaudit/provider.hpp"
#include "claimaudit/stats.hpp"

namespace claimaudit {

// Fixed filenames inside the output directory; the stage subcommands hand
// work to each other through these.
inline constexpr const char* kRetainedClaimsFile = "retained_claims.csv";
inline constexpr const char* kRetainedWorkersFile = "retained_workers.csv";
inline constexpr const char* kRetainedAnnotationsFile = "retained_annotations.csv";
inline constexpr const char* kFilterReportTextFile = "filter_report.txt";
inline constexpr const char* kFilterReportJsonFile = "filter_report.json";
inline constexpr const char* kLlmAnnotationsFile = "llm_annotations.csv";
inline constexpr const char* kCollectionRecordsFile = "collection_records.jsonl";
inline constexpr const char* kCoverageFile = "coverage.json";
inline constexpr const char* kCacheFile = "cache.jsonl";
inline constexpr const char* kRq1ResultsFile = "rq1_results.json";
inline constexpr const char* kRq2ResultsFile = "rq2_results.json";
inline constexpr const char* kReportJsonFile = "report.json";
inline constexpr const char* kReportTextFile = "report.txt";
inline constexpr const char* kFigureDataFile = "figure_data.csv";
inline constexpr const char* kSettingsFile = "settings.json";
inline constexpr const char* kLockFile = ".claimaudit.lock";

struct AuditConfig {
  std::string claims_path;
  std::string workers_path;
  std::string annotations_path;
  std::string out_dir = "audit_out";
  Dimension dimension = Dimension::GroupHarm;
  std::vector<int> variants = {1, 2};
  double filter_threshold = 0.8;
  int gold_midpoint = 3;
  ProviderConfig provider;
  BootstrapSettings bootstrap;
  ZscorePolicy zscore;
  std::string prompt_config_path;
};

AuditConfig load_audit_config(const std::filesystem::path& path);
std::string settings_to_json(const AuditConfig& config);

/// Exclusive lock on an output directory; removed on destruction.
class DirLock {
 public:
  explicit DirLock(const std::filesystem::path& dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  std::filesystem::path path_;
  bool held_ = false;
};

std::string significance_stars(double p);

struct FigureRow {
  std::string topic;
  int prompt_variant = 0;
  Source source = Source::Human;
  Condition condition = Condition::Undisclosed;
  double mean_z = 0.0;
  std::size_t count = 0;
};

/// Per (topic, source, condition) mean z-score and count over the claims
/// eligible for the divergence analysis of that prompt variant.
std::vector<FigureRow> export_figure_data(const GroupedScores& grouped, int prompt_variant);
csv::Table figure_rows_to_table(const std::vector<FigureRow>& rows);

struct DatasetSummary {
  Provenance provenance;
  std::size_t claims = 0;
  std::size_t workers = 0;
  std::size_t human_annotations = 0;
  std::size_t llm_annotations = 0;
  std::size_t dedupe_removed = 0;
};

struct AuditReport {
  DatasetSummary dataset;
  FilterReport filter;
  CoverageReport coverage;
  std::vector<TopicAnalysis> rq1;
  std::vector<TopicAnalysis> rq2;
  std::vector<FigureRow> figure_data;
  std::vector<GroupWarning> warnings;
  bool incomplete = false;
};

std::string report_to_json(const AuditReport& report, const AuditConfig& config);
std::string report_to_text(const AuditReport& report, const AuditConfig& config);

// Analysis persistence for the stage subcommands.
std::string analyses_to_json(const std::vector<TopicAnalysis>& analyses);
std::vector<TopicAnalysis> analyses_from_json(const std::string& text);

struct RunOutcome {
  int exit_code = 0;
  std::optional<AuditReport> report;
};

/// Full pipeline: ingest -> filter -> plan -> collect -> normalize ->
/// rq1 -> rq2 -> render, all outputs under config.out_dir. Exit code 0 on
/// success, 1 for validation problems, 2 for provider failures, 3 when the
/// plan could not be fully collected (report still written, marked
/// incomplete).
RunOutcome run_audit(const AuditConfig& config, std::ostream& log);

// Individual pipeline stages, shared by run_audit and the CLI subcommands.
// All assume the output directory lock is already held.
struct IngestOutput {
  DatasetBundle bundle;
  FilterReport filter;
  std::size_t dedupe_removed = 0;
};
IngestOutput stage_ingest(const AuditConfig& config, std::ostream& log);

struct CollectOutput {
  std::vector<Annotation> annotations;
  CoverageReport coverage;
};
CollectOutput stage_collect(const AuditConfig& config, const DatasetBundle& retained,
                            std::ostream& log);

std::vector<TopicAnalysis> stage_analyze(const AuditConfig& config,
                                         const GroupedScores& grouped, TestKind kind,
                                         std::ostream& log);

DatasetBundle read_retained(const AuditConfig& config);
std::vector<Annotation> read_llm_annotations(const AuditConfig& config,
                                             const DatasetBundle& retained);

/// Reassembles the final report from persisted stage outputs.
RunOutcome stage_report(const AuditConfig& config, std::ostream& log);

}  // namespace claimaudit
