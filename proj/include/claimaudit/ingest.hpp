#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "claimaudit/csv.hpp"
#include "claimaudit/errors.hpp"
#include "claimaudit/types.hpp"

namespace claimaudit {

/// Where a loaded dataset came from.
struct Provenance {
  std::string claims_path;
  std::string workers_path;
  std::string annotations_path;
};

struct DatasetBundle {
  std::vector<Claim> claims;
  std::vector<WorkerProfile> workers;
  std::vector<Annotation> annotations;
  Provenance provenance;

  const Claim* find_claim(const std::string& claim_id) const;
  const WorkerProfile* find_worker(const std::string& worker_id) const;
};

/// One rejected or inconsistent row. `row` is the 1-based data row number
/// within `file` (0 for file-level problems such as a missing column).
struct ValidationError {
  ErrorCode code;
  std::string file;
  std::size_t row = 0;
  std::string field;
  std::string message;

  std::string format() const;
};

struct LoadReport {
  DatasetBundle bundle;
  std::vector<ValidationError> errors;

  bool ok() const { return errors.empty(); }
};

/// Loads and validates the three tabular files. Every row is either loaded
/// into the bundle or reported in `errors`; rows with errors are skipped.
LoadReport load_dataset(const std::filesystem::path& claims_path,
                        const std::filesystem::path& workers_path,
                        const std::filesystem::path& annotations_path);

/// Re-checks all dataset invariants on an in-memory bundle.
std::vector<ValidationError> validate_bundle(const DatasetBundle& bundle);

csv::Table claims_to_table(const std::vector<Claim>& claims);
csv::Table workers_to_table(const std::vector<WorkerProfile>& workers);
csv::Table annotations_to_table(const std::vector<Annotation>& annotations);

/// Writes the bundle back out in the same three-file format.
void save_dataset(const DatasetBundle& bundle,
                  const std::filesystem::path& claims_path,
                  const std::filesystem::path& workers_path,
                  const std::filesystem::path& annotations_path);

struct GoldRule {
  // Ratings <= midpoint count as "perceived true", >= midpoint+1 as false.
  int midpoint = 3;
};

/// Fraction of the worker's gold-claim perceived-truth annotations that agree
/// with the claim's veracity label. nullopt when the worker has none.
std::optional<double> gold_accuracy(const DatasetBundle& bundle,
                                    const std::string& worker_id,
                                    const GoldRule& rule = {});

struct RemovedWorker {
  std::string worker_id;
  std::optional<double> accuracy;  // nullopt: no gold annotations
  std::size_t annotations_removed = 0;
};

struct FilterReport {
  double threshold = 0.8;
  std::vector<RemovedWorker> removed;
  std::size_t annotations_before = 0;
  std::size_t annotations_after = 0;
  std::size_t workers_before = 0;
  std::size_t workers_after = 0;
  std::size_t claims_pruned = 0;

  std::string format() const;
};

struct FilterResult {
  DatasetBundle bundle;
  FilterReport report;
};

/// Drops every annotation from workers whose gold accuracy is not strictly
/// above the threshold (or who have no gold annotations), then prunes
/// workers and claims no annotation references. LLM annotations are never
/// removed.
FilterResult filter_workers(const DatasetBundle& bundle, double threshold = 0.8,
                            const GoldRule& rule = {});

struct DedupeResult {
  DatasetBundle bundle;
  std::size_t removed = 0;
};

/// Keeps the first annotation in file order per (worker, claim, dimension).
DedupeResult dedupe(const DatasetBundle& bundle);

}  // namespace claimaudit
