#include "claimaudit/types.hpp"

#include <algorithm>
#include <cctype>

#include "claimaudit/errors.hpp"

namespace claimaudit {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MISSING_COLUMN";
    case ErrorCode::BadRating: return "BAD_RATING";
    case ErrorCode::BadValue: return "BAD_VALUE";
    case ErrorCode::DanglingReference: return "DANGLING_REFERENCE";
    case ErrorCode::DuplicateId: return "DUPLICATE_ID";
    case ErrorCode::NoGoldAnnotations: return "NO_GOLD_ANNOTATIONS";
    case ErrorCode::MissingGender: return "MISSING_GENDER";
    case ErrorCode::UnknownVariant: return "UNKNOWN_VARIANT";
    case ErrorCode::ParseFailure: return "PARSE_FAILURE";
    case ErrorCode::ProviderUnreachable: return "PROVIDER_UNREACHABLE";
    case ErrorCode::RateLimited: return "RATE_LIMITED";
    case ErrorCode::CoverageGap: return "COVERAGE_GAP";
    case ErrorCode::DegenerateGroup: return "DEGENERATE_GROUP";
    case ErrorCode::MissingCell: return "MISSING_CELL";
    case ErrorCode::EmptyTopic: return "EMPTY_TOPIC";
    case ErrorCode::BudgetExceeded: return "BUDGET_EXCEEDED";
    case ErrorCode::IoError: return "IO_ERROR";
    case ErrorCode::ConfigError: return "CONFIG_ERROR";
    case ErrorCode::LockHeld: return "LOCK_HELD";
  }
  return "UNKNOWN";
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

bool human_condition(Condition c) {
  switch (c) {
    case Condition::Man:
    case Condition::Woman:
    case Condition::Nonbinary:
    case Condition::Undisclosed:
      return true;
    default:
      return false;
  }
}

bool llm_condition(Condition c) { return !human_condition(c); }

Condition condition_from_gender(Gender g) {
  switch (g) {
    case Gender::Man: return Condition::Man;
    case Gender::Woman: return Condition::Woman;
    case Gender::Nonbinary: return Condition::Nonbinary;
    case Gender::Undisclosed: return Condition::Undisclosed;
  }
  return Condition::Undisclosed;
}

std::string to_string(Veracity v) { return v == Veracity::True ? "TRUE" : "FALSE"; }

std::string to_string(Gender g) {
  switch (g) {
    case Gender::Man: return "man";
    case Gender::Woman: return "woman";
    case Gender::Nonbinary: return "nonbinary";
    case Gender::Undisclosed: return "undisclosed";
  }
  return "undisclosed";
}

std::string to_string(Source s) { return s == Source::Human ? "human" : "llm"; }

std::string to_string(Condition c) {
  switch (c) {
    case Condition::Man: return "man";
    case Condition::Woman: return "woman";
    case Condition::Nonbinary: return "nonbinary";
    case Condition::Undisclosed: return "undisclosed";
    case Condition::ManConditioned: return "man_conditioned";
    case Condition::WomanConditioned: return "woman_conditioned";
    case Condition::Base: return "base";
  }
  return "undisclosed";
}

std::string to_string(Dimension d) {
  switch (d) {
    case Dimension::Prioritization: return "prioritization";
    case Dimension::GeneralPublic: return "general_public";
    case Dimension::GroupHarm: return "group_harm";
    case Dimension::PerceivedTruth: return "perceived_truth";
  }
  return "group_harm";
}

std::string to_string(StatisticKind k) { return k == StatisticKind::EHat ? "E_hat" : "D_hat"; }

std::optional<Veracity> veracity_from_string(const std::string& s) {
  const std::string v = lower(s);
  if (v == "true") return Veracity::True;
  if (v == "false") return Veracity::False;
  return std::nullopt;
}

std::optional<Gender> gender_from_string(const std::string& s) {
  const std::string v = lower(s);
  if (v == "man") return Gender::Man;
  if (v == "woman") return Gender::Woman;
  if (v == "nonbinary" || v == "non-binary") return Gender::Nonbinary;
  if (v == "undisclosed" || v.empty()) return Gender::Undisclosed;
  return std::nullopt;
}

std::optional<Source> source_from_string(const std::string& s) {
  const std::string v = lower(s);
  if (v == "human") return Source::Human;
  if (v == "llm") return Source::Llm;
  return std::nullopt;
}

std::optional<Condition> condition_from_string(const std::string& s) {
  const std::string v = lower(s);
  if (v == "man_conditioned") return Condition::ManConditioned;
  if (v == "woman_conditioned") return Condition::WomanConditioned;
  if (v == "base") return Condition::Base;
  if (auto g = gender_from_string(s)) return condition_from_gender(*g);
  return std::nullopt;
}

std::optional<Dimension> dimension_from_string(const std::string& s) {
  const std::string v = lower(s);
  if (v == "prioritization") return Dimension::Prioritization;
  if (v == "general_public") return Dimension::GeneralPublic;
  if (v == "group_harm") return Dimension::GroupHarm;
  if (v == "perceived_truth") return Dimension::PerceivedTruth;
  return std::nullopt;
}

}  // namespace claimaudit
