#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "claimaudit/ingest.hpp"
#include "claimaudit/prompts.hpp"
#include "claimaudit/provider.hpp"
#include "claimaudit/types.hpp"

namespace claimaudit {

/// Per-claim request counts for one (dimension, prompt variant) run.
/// Conditioned counts mirror the retained human annotation counts; the
/// base count is their sum.
struct PlanEntry {
  std::string claim_id;
  std::size_t man_conditioned = 0;
  std::size_t woman_conditioned = 0;
  std::size_t base = 0;
};

struct CollectionPlan {
  Dimension dimension = Dimension::GroupHarm;
  int prompt_variant = 1;
  std::vector<PlanEntry> entries;  // sorted by claim_id

  std::size_t total_slots() const;
};

CollectionPlan plan_collection(const DatasetBundle& bundle, Dimension dimension,
                               int prompt_variant);

/// Audit trail for one request attempt against one planned slot.
struct CollectionRecord {
  std::string claim_id;
  Condition condition = Condition::Base;
  int prompt_variant = 1;
  std::size_t slot = 0;  // 0-based within (claim, condition)
  int attempt = 1;       // 1-based
  std::string prompt;
  std::string response;
  std::optional<int> rating;
  bool refusal = false;
  bool parse_failure = false;
  std::string provider;
  std::string model;
  double temperature = 0.0;
  std::string timestamp;

  std::string to_json_line() const;
};

struct CoverageGap {
  std::string claim_id;
  Condition condition = Condition::Base;
  int prompt_variant = 1;
  std::size_t slot = 0;
  std::string reason;
};

struct CoverageReport {
  std::size_t planned = 0;
  std::size_t filled = 0;
  std::vector<CoverageGap> gaps;

  bool complete() const { return gaps.empty(); }
};

struct CollectionResult {
  std::vector<Annotation> annotations;
  std::vector<CollectionRecord> records;
  CoverageReport coverage;
};

/// Append-only response cache keyed by (model, prompt, temperature).
/// Entries for one key keep their append order, so retry sequences replay
/// exactly. Safe for concurrent use.
class ResponseCache {
 public:
  ResponseCache() = default;  // in-memory only
  explicit ResponseCache(const std::filesystem::path& file);

  std::size_t count(const std::string& model, const std::string& prompt,
                    double temperature) const;
  /// nth cached response for the key (0-based), with its recorded timestamp.
  std::optional<std::pair<std::string, std::string>> get(const std::string& model,
                                                         const std::string& prompt,
                                                         double temperature,
                                                         std::size_t index) const;
  void append(const std::string& model, const std::string& prompt, double temperature,
              const std::string& response, const std::string& timestamp);

  std::size_t size() const;

 private:
  static std::string key_of(const std::string& model, const std::string& prompt,
                            double temperature);

  std::map<std::string, std::vector<std::pair<std::string, std::string>>> entries_;
  std::unique_ptr<std::ofstream> out_;
  mutable std::mutex mu_;
};

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::string now() = 0;  // ISO 8601 UTC
};

class SystemClock : public Clock {
 public:
  std::string now() override;
};

/// Constant timestamp source for deterministic runs.
class FixedClock : public Clock {
 public:
  explicit FixedClock(std::string stamp = "1970-01-01T00:00:00Z")
      : stamp_(std::move(stamp)) {}
  std::string now() override { return stamp_; }

 private:
  std::string stamp_;
};

struct CollectOptions {
  PromptConfig prompts = default_prompt_config();
  std::string man_word = "man";
  std::string woman_word = "woman";
  Clock* clock = nullptr;  // defaults to the system clock
};

/// Executes the plan. Each unique (model, prompt, temperature) key is
/// resolved once: cached attempts replay first, live calls fill in the
/// rest, refusals and unparseable replies retrying up to the provider's
/// budget. Unfilled slots become coverage gaps; ratings are never invented.
CollectionResult collect(const CollectionPlan& plan, const DatasetBundle& bundle,
                         ChatProvider& provider, const ProviderConfig& config,
                         ResponseCache& cache, const CollectOptions& options = {});

void write_collection_records(const std::filesystem::path& path,
                              const std::vector<CollectionRecord>& records);

}  // namespace claimaudit
