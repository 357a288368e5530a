#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace claimaudit {

enum class Veracity { True, False };

enum class Gender { Man, Woman, Nonbinary, Undisclosed };

enum class Source { Human, Llm };

/// Annotation condition. Human annotations carry the annotator's gender;
/// LLM annotations carry the prompt conditioning.
enum class Condition {
  Man,
  Woman,
  Nonbinary,
  Undisclosed,
  ManConditioned,
  WomanConditioned,
  Base,
};

enum class Dimension { Prioritization, GeneralPublic, GroupHarm, PerceivedTruth };

/// One fact-checked statement.
struct Claim {
  std::string claim_id;
  std::string text;
  std::string topic;
  Veracity veracity = Veracity::False;
  bool is_gold = false;
  std::optional<std::string> checked_date;  // ISO YYYY-MM-DD

  bool operator==(const Claim&) const = default;
};

/// Demographics of a human annotator. Gender is the analysis key; the rest
/// are optional survey fields kept as free-form enumerated strings.
struct WorkerProfile {
  std::string worker_id;
  Gender gender = Gender::Undisclosed;
  std::optional<std::string> age_range;
  std::optional<std::string> education;
  std::optional<std::string> sexual_orientation;
  std::optional<std::string> race;

  bool operator==(const WorkerProfile&) const = default;
};

/// One 1-6 Likert assessment of a claim on one dimension.
struct Annotation {
  std::string claim_id;
  Source source = Source::Human;
  Condition condition = Condition::Undisclosed;
  std::string worker_id;    // present iff source == Human
  int prompt_variant = 0;   // 1 or 2, present iff source == Llm
  Dimension dimension = Dimension::GroupHarm;
  int rating = 0;           // 1..6
  std::vector<std::string> harmed_groups;  // GroupHarm only

  bool operator==(const Annotation&) const = default;
};

/// A z-scored rating carrying the group it was standardized within.
struct NormalizedScore {
  std::size_t annotation_index = 0;  // index into the source annotation list
  double z = 0.0;
  std::string group_key;
};

enum class StatisticKind { EHat, DHat };

/// Per-topic statistic with its bootstrap metadata.
struct TopicResult {
  std::string topic;
  StatisticKind statistic_kind = StatisticKind::EHat;
  double value = 0.0;
  double p_value = 0.0;
  std::uint64_t B = 0;
  std::uint64_t seed = 0;
  std::optional<double> mse_man;    // DHat only
  std::optional<double> mse_woman;  // DHat only
  int prompt_variant = 0;
};

bool human_condition(Condition c);
bool llm_condition(Condition c);
Condition condition_from_gender(Gender g);

// Enum <-> string codecs used by the tabular file formats and configs.
// *_from_string return nullopt on unknown input.
std::string to_string(Veracity v);
std::string to_string(Gender g);
std::string to_string(Source s);
std::string to_string(Condition c);
std::string to_string(Dimension d);
std::string to_string(StatisticKind k);
std::optional<Veracity> veracity_from_string(const std::string& s);
std::optional<Gender> gender_from_string(const std::string& s);
std::optional<Source> source_from_string(const std::string& s);
std::optional<Condition> condition_from_string(const std::string& s);
std::optional<Dimension> dimension_from_string(const std::string& s);

}  // namespace claimaudit
