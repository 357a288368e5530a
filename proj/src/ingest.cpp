#include "claimaudit/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace claimaudit {

namespace {

constexpr const char* kClaimColumns[] = {"claim_id", "text",    "topic",
                                         "veracity", "is_gold", "checked_date"};
constexpr const char* kWorkerColumns[] = {"worker_id", "gender",
                                          "age_range", "education",
                                          "sexual_orientation", "race"};
constexpr const char* kAnnotationColumns[] = {"claim_id",      "source",
                                              "condition",     "worker_id",
                                              "prompt_variant", "dimension",
                                              "rating",        "harmed_groups"};

// Separator for the list-valued harmed_groups cell.
constexpr char kGroupSep = '|';

std::optional<int> parse_int(const std::string& s) {
  int value = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

std::optional<bool> parse_bool(const std::string& s) {
  std::string v = s;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  return std::nullopt;
}

bool valid_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

std::vector<std::string> split_groups(const std::string& cell) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(cell);
  while (std::getline(ss, item, kGroupSep)) {
    // trim
    auto b = item.find_first_not_of(" \t");
    auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string join_groups(const std::vector<std::string>& groups) {
  std::string out;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (i) out.push_back(kGroupSep);
    out += groups[i];
  }
  return out;
}

struct ColumnIndex {
  std::unordered_map<std::string, std::size_t> index;

  std::optional<std::size_t> at(const std::string& name) const {
    auto it = index.find(name);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
};

// Checks required columns, reporting each missing one. Returns nullopt if
// the file cannot be processed.
template <std::size_t N>
std::optional<ColumnIndex> check_columns(const csv::Table& table,
                                         const char* const (&required)[N],
                                         const std::string& file,
                                         std::vector<ValidationError>& errors) {
  ColumnIndex cols;
  bool ok = true;
  for (const char* name : required) {
    auto idx = table.column(name);
    if (!idx) {
      errors.push_back({ErrorCode::MissingColumn, file, 0, name,
                        "required column is missing"});
      ok = false;
    } else {
      cols.index[name] = *idx;
    }
  }
  if (!ok) return std::nullopt;
  return cols;
}

std::string cell(const std::vector<std::string>& row, std::size_t idx) {
  return idx < row.size() ? row[idx] : std::string();
}

}  // namespace

const Claim* DatasetBundle::find_claim(const std::string& claim_id) const {
  for (const auto& c : claims) {
    if (c.claim_id == claim_id) return &c;
  }
  return nullptr;
}

const WorkerProfile* DatasetBundle::find_worker(const std::string& worker_id) const {
  for (const auto& w : workers) {
    if (w.worker_id == worker_id) return &w;
  }
  return nullptr;
}

std::string ValidationError::format() const {
  std::ostringstream out;
  out << error_code_name(code) << " in " << file;
  if (row > 0) out << " row " << row;
  if (!field.empty()) out << " field '" << field << "'";
  out << ": " << message;
  return out.str();
}

LoadReport load_dataset(const std::filesystem::path& claims_path,
                        const std::filesystem::path& workers_path,
                        const std::filesystem::path& annotations_path) {
  LoadReport report;
  report.bundle.provenance = {claims_path.string(), workers_path.string(),
                              annotations_path.string()};
  auto& errors = report.errors;

  const csv::Table claims_table = csv::read_file(claims_path);
  const csv::Table workers_table = csv::read_file(workers_path);
  const csv::Table annotations_table = csv::read_file(annotations_path);

  const std::string claims_file = claims_path.filename().string();
  const std::string workers_file = workers_path.filename().string();
  const std::string annotations_file = annotations_path.filename().string();

  std::unordered_set<std::string> claim_ids;
  if (auto cols = check_columns(claims_table, kClaimColumns, claims_file, errors)) {
    for (std::size_t r = 0; r < claims_table.rows.size(); ++r) {
      const auto& row = claims_table.rows[r];
      const std::size_t rowno = r + 1;
      Claim claim;
      claim.claim_id = cell(row, *cols->at("claim_id"));
      claim.text = cell(row, *cols->at("text"));
      claim.topic = cell(row, *cols->at("topic"));
      bool ok = true;
      if (claim.claim_id.empty()) {
        errors.push_back({ErrorCode::BadValue, claims_file, rowno, "claim_id", "empty id"});
        ok = false;
      } else if (!claim_ids.insert(claim.claim_id).second) {
        errors.push_back({ErrorCode::DuplicateId, claims_file, rowno, "claim_id",
                          "duplicate claim_id '" + claim.claim_id + "'"});
        ok = false;
      }
      if (claim.text.empty()) {
        errors.push_back({ErrorCode::BadValue, claims_file, rowno, "text", "claim text is empty"});
        ok = false;
      }
      if (auto v = veracity_from_string(cell(row, *cols->at("veracity")))) {
        claim.veracity = *v;
      } else {
        errors.push_back({ErrorCode::BadValue, claims_file, rowno, "veracity",
                          "expected TRUE or FALSE, got '" + cell(row, *cols->at("veracity")) + "'"});
        ok = false;
      }
      if (auto g = parse_bool(cell(row, *cols->at("is_gold")))) {
        claim.is_gold = *g;
      } else {
        errors.push_back({ErrorCode::BadValue, claims_file, rowno, "is_gold",
                          "expected true/false, got '" + cell(row, *cols->at("is_gold")) + "'"});
        ok = false;
      }
      if (ok && claim.is_gold && claim.topic != "Gold") {
        errors.push_back({ErrorCode::BadValue, claims_file, rowno, "topic",
                          "gold claims must use topic 'Gold'"});
        ok = false;
      }
      const std::string date = cell(row, *cols->at("checked_date"));
      if (!date.empty()) {
        if (!valid_iso_date(date)) {
          errors.push_back({ErrorCode::BadValue, claims_file, rowno, "checked_date",
                            "expected YYYY-MM-DD, got '" + date + "'"});
          ok = false;
        } else {
          claim.checked_date = date;
        }
      }
      if (ok) report.bundle.claims.push_back(std::move(claim));
    }
  }

  std::unordered_map<std::string, Gender> worker_gender;
  if (auto cols = check_columns(workers_table, kWorkerColumns, workers_file, errors)) {
    for (std::size_t r = 0; r < workers_table.rows.size(); ++r) {
      const auto& row = workers_table.rows[r];
      const std::size_t rowno = r + 1;
      WorkerProfile worker;
      worker.worker_id = cell(row, *cols->at("worker_id"));
      bool ok = true;
      if (worker.worker_id.empty()) {
        errors.push_back({ErrorCode::BadValue, workers_file, rowno, "worker_id", "empty id"});
        ok = false;
      } else if (worker_gender.count(worker.worker_id)) {
        errors.push_back({ErrorCode::DuplicateId, workers_file, rowno, "worker_id",
                          "duplicate worker_id '" + worker.worker_id + "'"});
        ok = false;
      }
      if (auto g = gender_from_string(cell(row, *cols->at("gender")))) {
        worker.gender = *g;
      } else {
        errors.push_back({ErrorCode::BadValue, workers_file, rowno, "gender",
                          "unknown gender '" + cell(row, *cols->at("gender")) + "'"});
        ok = false;
      }
      auto opt_field = [&](const char* name) -> std::optional<std::string> {
        std::string v = cell(row, *cols->at(name));
        if (v.empty()) return std::nullopt;
        return v;
      };
      worker.age_range = opt_field("age_range");
      worker.education = opt_field("education");
      worker.sexual_orientation = opt_field("sexual_orientation");
      worker.race = opt_field("race");
      if (ok) {
        worker_gender.emplace(worker.worker_id, worker.gender);
        report.bundle.workers.push_back(std::move(worker));
      }
    }
  }

  if (auto cols = check_columns(annotations_table, kAnnotationColumns, annotations_file, errors)) {
    for (std::size_t r = 0; r < annotations_table.rows.size(); ++r) {
      const auto& row = annotations_table.rows[r];
      const std::size_t rowno = r + 1;
      Annotation ann;
      ann.claim_id = cell(row, *cols->at("claim_id"));
      bool ok = true;

      if (!claim_ids.count(ann.claim_id)) {
        errors.push_back({ErrorCode::DanglingReference, annotations_file, rowno, "claim_id",
                          "unknown claim '" + ann.claim_id + "'"});
        ok = false;
      }

      auto source = source_from_string(cell(row, *cols->at("source")));
      if (!source) {
        errors.push_back({ErrorCode::BadValue, annotations_file, rowno, "source",
                          "expected human or llm, got '" + cell(row, *cols->at("source")) + "'"});
        continue;
      }
      ann.source = *source;

      const std::string worker_id = cell(row, *cols->at("worker_id"));
      const std::string variant_cell = cell(row, *cols->at("prompt_variant"));
      const std::string condition_cell = cell(row, *cols->at("condition"));

      if (ann.source == Source::Human) {
        if (worker_id.empty()) {
          errors.push_back({ErrorCode::BadValue, annotations_file, rowno, "worker_id",
                            "human annotation requires a worker_id"});
          ok = false;
        } else if (!worker_gender.count(worker_id)) {
          errors.push_back({ErrorCode::DanglingReference, annotations_file, rowno, "worker_id",
                            "unknown worker '" + worker_id + "'"});
          ok = false;
        } else {
          ann.worker_id = worker_id;
          ann.condition = condition_from_gender(worker_gender.at(worker_id));
        }
        if (!variant_cell.empty()) {
          errors.push_back({ErrorCode::BadValue, annotations_file, rowno, "prompt_variant",
                            "human annotations must not set prompt_variant"});
          ok = false;
        }
        if (ok && !condition_cell.empty()) {
          auto cond = condition_from_string(condition_cell);
          if (!cond || *cond != ann.condition) {
            errors.push_back({ErrorCode::BadValue, annotations_file, rowno, "condition",
                              "condition '" + condition_cell +
                                  "' does not match worker gender"});
            ok = false;
          }
        }
      } else {
        if (!worker_id.empty()) {
          errors.push_back({ErrorCode::BadValue, annotations_file, rowno, "worker_id",
                            "llm annotations must not set worker_id"});
          ok = false;
        }
        auto cond = condition_from_string(condition_cell);
        if (!cond || !llm_condition(*cond)) {
          errors.push_back({ErrorCode::BadValue, annotations_file, rowno, "condition",
                            "expected man_conditioned/woman_conditioned/base, got '" +
                                condition_cell + "'"});
          ok = false;
        } else {
          ann.condition = *cond;
        }
        auto variant = parse_int(variant_cell);
        if (!variant || (*variant != 1 && *variant != 2)) {
          errors.push_back({ErrorCode::BadValue, annotations_file, rowno, "prompt_variant",
                            "expected 1 or 2, got '" + variant_cell + "'"});
          ok = false;
        } else {
          ann.prompt_variant = *variant;
        }
      }

      auto dim = dimension_from_string(cell(row, *cols->at("dimension")));
      if (!dim) {
        errors.push_back({ErrorCode::BadValue, annotations_file, rowno, "dimension",
                          "unknown dimension '" + cell(row, *cols->at("dimension")) + "'"});
        ok = false;
      } else {
        ann.dimension = *dim;
      }

      const std::string rating_cell = cell(row, *cols->at("rating"));
      auto rating = parse_int(rating_cell);
      if (!rating || *rating < 1 || *rating > 6) {
        errors.push_back({ErrorCode::BadRating, annotations_file, rowno, "rating",
                          "rating must be an integer in 1..6, got '" + rating_cell + "'"});
        ok = false;
      } else {
        ann.rating = *rating;
      }

      const std::string groups_cell = cell(row, *cols->at("harmed_groups"));
      if (!groups_cell.empty()) {
        if (dim && *dim != Dimension::GroupHarm) {
          errors.push_back({ErrorCode::BadValue, annotations_file, rowno, "harmed_groups",
                            "harmed_groups only allowed for group_harm annotations"});
          ok = false;
        } else {
          ann.harmed_groups = split_groups(groups_cell);
        }
      }

      if (ok) report.bundle.annotations.push_back(std::move(ann));
    }
  }

  return report;
}

std::vector<ValidationError> validate_bundle(const DatasetBundle& bundle) {
  std::vector<ValidationError> errors;
  std::unordered_set<std::string> claim_ids;
  std::unordered_map<std::string, Gender> worker_gender;

  for (std::size_t i = 0; i < bundle.claims.size(); ++i) {
    const Claim& c = bundle.claims[i];
    if (!claim_ids.insert(c.claim_id).second) {
      errors.push_back({ErrorCode::DuplicateId, "claims", i + 1, "claim_id",
                        "duplicate claim_id '" + c.claim_id + "'"});
    }
    if (c.text.empty()) {
      errors.push_back({ErrorCode::BadValue, "claims", i + 1, "text", "claim text is empty"});
    }
    if (c.is_gold && c.topic != "Gold") {
      errors.push_back({ErrorCode::BadValue, "claims", i + 1, "topic",
                        "gold claims must use topic 'Gold'"});
    }
  }
  for (std::size_t i = 0; i < bundle.workers.size(); ++i) {
    const WorkerProfile& w = bundle.workers[i];
    if (worker_gender.count(w.worker_id)) {
      errors.push_back({ErrorCode::DuplicateId, "workers", i + 1, "worker_id",
                        "duplicate worker_id '" + w.worker_id + "'"});
    }
    worker_gender.emplace(w.worker_id, w.gender);
  }
  for (std::size_t i = 0; i < bundle.annotations.size(); ++i) {
    const Annotation& a = bundle.annotations[i];
    if (a.rating < 1 || a.rating > 6) {
      errors.push_back({ErrorCode::BadRating, "annotations", i + 1, "rating",
                        "rating out of range"});
    }
    if (!claim_ids.count(a.claim_id)) {
      errors.push_back({ErrorCode::DanglingReference, "annotations", i + 1, "claim_id",
                        "unknown claim '" + a.claim_id + "'"});
    }
    if (a.source == Source::Human) {
      auto gender = worker_gender.find(a.worker_id);
      if (a.worker_id.empty() || gender == worker_gender.end()) {
        errors.push_back({ErrorCode::DanglingReference, "annotations", i + 1, "worker_id",
                          "unknown worker '" + a.worker_id + "'"});
      }
      if (a.prompt_variant != 0) {
        errors.push_back({ErrorCode::BadValue, "annotations", i + 1, "prompt_variant",
                          "human annotation with prompt_variant"});
      }
      if (!human_condition(a.condition)) {
        errors.push_back({ErrorCode::BadValue, "annotations", i + 1, "condition",
                          "human annotation with llm condition"});
      } else if (gender != worker_gender.end() &&
                 a.condition != condition_from_gender(gender->second)) {
        errors.push_back({ErrorCode::BadValue, "annotations", i + 1, "condition",
                          "condition does not match the worker's gender"});
      }
    } else {
      if (!a.worker_id.empty()) {
        errors.push_back({ErrorCode::BadValue, "annotations", i + 1, "worker_id",
                          "llm annotation with worker_id"});
      }
      if (a.prompt_variant != 1 && a.prompt_variant != 2) {
        errors.push_back({ErrorCode::BadValue, "annotations", i + 1, "prompt_variant",
                          "llm annotation needs prompt_variant 1 or 2"});
      }
      if (!llm_condition(a.condition)) {
        errors.push_back({ErrorCode::BadValue, "annotations", i + 1, "condition",
                          "llm annotation with human condition"});
      }
    }
    if (!a.harmed_groups.empty() && a.dimension != Dimension::GroupHarm) {
      errors.push_back({ErrorCode::BadValue, "annotations", i + 1, "harmed_groups",
                        "harmed_groups only allowed for group_harm annotations"});
    }
  }
  return errors;
}

csv::Table claims_to_table(const std::vector<Claim>& claims) {
  csv::Table t;
  t.header = {"claim_id", "text", "topic", "veracity", "is_gold", "checked_date"};
  for (const auto& c : claims) {
    t.rows.push_back({c.claim_id, c.text, c.topic, to_string(c.veracity),
                      c.is_gold ? "true" : "false", c.checked_date.value_or("")});
  }
  return t;
}

csv::Table workers_to_table(const std::vector<WorkerProfile>& workers) {
  csv::Table t;
  t.header = {"worker_id", "gender", "age_range", "education", "sexual_orientation", "race"};
  for (const auto& w : workers) {
    t.rows.push_back({w.worker_id, to_string(w.gender), w.age_range.value_or(""),
                      w.education.value_or(""), w.sexual_orientation.value_or(""),
                      w.race.value_or("")});
  }
  return t;
}

csv::Table annotations_to_table(const std::vector<Annotation>& annotations) {
  csv::Table t;
  t.header = {"claim_id", "source", "condition", "worker_id", "prompt_variant",
              "dimension", "rating", "harmed_groups"};
  for (const auto& a : annotations) {
    t.rows.push_back({a.claim_id, to_string(a.source), to_string(a.condition),
                      a.worker_id,
                      a.prompt_variant ? std::to_string(a.prompt_variant) : "",
                      to_string(a.dimension), std::to_string(a.rating),
                      join_groups(a.harmed_groups)});
  }
  return t;
}

void save_dataset(const DatasetBundle& bundle,
                  const std::filesystem::path& claims_path,
                  const std::filesystem::path& workers_path,
                  const std::filesystem::path& annotations_path) {
  csv::write_file(claims_path, claims_to_table(bundle.claims));
  csv::write_file(workers_path, workers_to_table(bundle.workers));
  csv::write_file(annotations_path, annotations_to_table(bundle.annotations));
}

std::optional<double> gold_accuracy(const DatasetBundle& bundle,
                                    const std::string& worker_id,
                                    const GoldRule& rule) {
  std::unordered_map<std::string, Veracity> gold_claims;
  for (const auto& c : bundle.claims) {
    if (c.is_gold) gold_claims.emplace(c.claim_id, c.veracity);
  }
  std::size_t total = 0;
  std::size_t correct = 0;
  for (const auto& a : bundle.annotations) {
    if (a.source != Source::Human || a.worker_id != worker_id) continue;
    if (a.dimension != Dimension::PerceivedTruth) continue;
    auto it = gold_claims.find(a.claim_id);
    if (it == gold_claims.end()) continue;
    ++total;
    const bool perceived_true = a.rating <= rule.midpoint;
    const bool actually_true = it->second == Veracity::True;
    if (perceived_true == actually_true) ++correct;
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::string FilterReport::format() const {
  std::ostringstream out;
  out << "worker filtering report\n";
  out << "threshold: gold accuracy > " << threshold << "\n";
  out << "workers: " << workers_before << " -> " << workers_after << "\n";
  out << "annotations: " << annotations_before << " -> " << annotations_after << "\n";
  out << "claims pruned: " << claims_pruned << "\n";
  if (removed.empty()) {
    out << "removed workers: none\n";
  } else {
    out << "removed workers:\n";
    for (const auto& r : removed) {
      out << "  " << r.worker_id << "  accuracy=";
      if (r.accuracy) {
        out << *r.accuracy;
      } else {
        out << "n/a (no gold annotations)";
      }
      out << "  annotations_removed=" << r.annotations_removed << "\n";
    }
  }
  return out.str();
}

FilterResult filter_workers(const DatasetBundle& bundle, double threshold,
                            const GoldRule& rule) {
  FilterResult result;
  result.report.threshold = threshold;
  result.report.annotations_before = bundle.annotations.size();
  result.report.workers_before = bundle.workers.size();

  std::set<std::string> dropped;
  for (const auto& w : bundle.workers) {
    auto acc = gold_accuracy(bundle, w.worker_id, rule);
    if (!acc || *acc <= threshold) {
      dropped.insert(w.worker_id);
      RemovedWorker removed;
      removed.worker_id = w.worker_id;
      removed.accuracy = acc;
      result.report.removed.push_back(std::move(removed));
    }
  }

  DatasetBundle& out = result.bundle;
  out.provenance = bundle.provenance;
  std::unordered_set<std::string> referenced_claims;
  std::unordered_set<std::string> referenced_workers;
  for (const auto& a : bundle.annotations) {
    if (a.source == Source::Human && dropped.count(a.worker_id)) {
      for (auto& r : result.report.removed) {
        if (r.worker_id == a.worker_id) {
          ++r.annotations_removed;
          break;
        }
      }
      continue;
    }
    out.annotations.push_back(a);
    referenced_claims.insert(a.claim_id);
    if (!a.worker_id.empty()) referenced_workers.insert(a.worker_id);
  }
  for (const auto& c : bundle.claims) {
    if (referenced_claims.count(c.claim_id)) {
      out.claims.push_back(c);
    } else {
      ++result.report.claims_pruned;
    }
  }
  for (const auto& w : bundle.workers) {
    if (referenced_workers.count(w.worker_id)) out.workers.push_back(w);
  }

  result.report.annotations_after = out.annotations.size();
  result.report.workers_after = out.workers.size();
  return result;
}

DedupeResult dedupe(const DatasetBundle& bundle) {
  DedupeResult result;
  result.bundle.provenance = bundle.provenance;
  result.bundle.claims = bundle.claims;
  result.bundle.workers = bundle.workers;

  std::set<std::tuple<std::string, std::string, Dimension>> seen;
  for (const auto& a : bundle.annotations) {
    if (a.source == Source::Human) {
      auto key = std::make_tuple(a.worker_id, a.claim_id, a.dimension);
      if (!seen.insert(key).second) {
        ++result.removed;
        continue;
      }
    }
    result.bundle.annotations.push_back(a);
  }
  return result;
}

}  // namespace claimaudit
