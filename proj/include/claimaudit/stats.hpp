#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "claimaudit/types.hpp"

namespace claimaudit {

double mean(const std::vector<double>& values);
double population_variance(const std::vector<double>& values);

/// How raw ratings are grouped before z-scoring. The default pools all
/// human ratings into one group and all LLM ratings into one group per
/// prompt variant.
struct ZscorePolicy {
  bool split_by_gender = false;    // humans per gender, llm per condition
  bool pool_llm_variants = false;  // one llm group across both variants

  std::string describe() const;
};

/// z-scores for one vector of raw values, population convention.
/// Degenerate input (fewer than two values or zero variance) maps to all
/// zeros with the flag set.
struct ZscoreVector {
  std::vector<double> z;
  bool degenerate = false;
};
ZscoreVector zscore_vector(const std::vector<double>& values);

struct CellKey {
  std::string claim_id;
  Source source = Source::Human;
  Condition condition = Condition::Undisclosed;
  int prompt_variant = 0;  // 0 for human cells

  auto operator<=>(const CellKey&) const = default;
};

struct GroupWarning {
  std::string code;
  std::string context;
  std::string message;
};

struct GroupedScores {
  Dimension dimension = Dimension::GroupHarm;
  std::string policy;
  std::map<CellKey, std::vector<double>> cells;
  std::map<std::string, std::string> claim_topic;  // claim_id -> topic
  std::vector<NormalizedScore> scores;
  std::vector<GroupWarning> warnings;

  const std::vector<double>* cell(const std::string& claim_id, Source source,
                                  Condition condition, int prompt_variant) const;
  /// All human z-scores for a claim, cells concatenated in condition order.
  std::vector<double> human_all(const std::string& claim_id) const;
  std::vector<std::string> topics() const;
  std::vector<std::string> claims_in_topic(const std::string& topic) const;
};

/// Standardizes ratings of one dimension within the policy's groups.
/// Constant groups come back as all-zero z-scores with a DEGENERATE_GROUP
/// warning rather than failing.
GroupedScores zscore_normalize(const std::vector<Claim>& claims,
                               const std::vector<Annotation>& annotations,
                               Dimension dimension, const ZscorePolicy& policy = {});

enum class Inequality { Strict, NonStrict };
enum class Rq2Form { Absolute, Signed };

struct BootstrapSettings {
  std::uint64_t B = 10000;
  std::uint64_t seed = 0;
  Inequality inequality = Inequality::NonStrict;
  Rq2Form rq2_form = Rq2Form::Absolute;
};

/// Claim-level gender divergence statistic: how much the gender gap in
/// LLM scores exceeds the human gender gap, damped by within-claim spread.
/// Throws AuditError(MissingCell) when one of the four cells is empty.
double claim_divergence(const GroupedScores& grouped, const std::string& claim_id,
                        int prompt_variant);

struct ExcludedClaim {
  std::string claim_id;
  std::string reason;
};

struct TopicDivergence {
  double value = 0.0;
  std::vector<std::string> included;
  std::vector<ExcludedClaim> excluded;
};

/// Mean claim divergence over the topic's eligible claims.
TopicDivergence topic_divergence(const GroupedScores& grouped, const std::string& topic,
                                 int prompt_variant);

struct TopicAnalysis {
  TopicResult result;
  std::vector<std::string> included;
  std::vector<ExcludedClaim> excluded;
};

/// Bootstrap test of whether the topic divergence exceeds what resampling
/// under the no-difference null produces. Within each gender, human and
/// LLM scores are pooled per claim and redrawn at the original per-source
/// counts each iteration.
TopicAnalysis rq1_bootstrap(const GroupedScores& grouped, const std::string& topic,
                            int prompt_variant, const BootstrapSettings& settings);

struct GenderMse {
  double value = 0.0;
  std::vector<std::string> included;
  std::vector<ExcludedClaim> excluded;
};

/// Mean squared gap between one gender's human claim means and the
/// neutrally prompted LLM claim means. Claims need both gender cells and a
/// base cell so that the two genders are compared on the same claim set.
GenderMse gender_mse(const GroupedScores& grouped, const std::string& topic,
                     Gender gender, int prompt_variant);

struct AlignmentGap {
  double d_hat = 0.0;
  double mse_man = 0.0;
  double mse_woman = 0.0;
  std::vector<std::string> included;
  std::vector<ExcludedClaim> excluded;
};

/// Absolute difference of the two gender MSEs for a topic.
AlignmentGap alignment_gap(const GroupedScores& grouped, const std::string& topic,
                           int prompt_variant);

/// Bootstrap test of whether the neutral LLM sits closer to one gender.
/// Per claim the two human gender samples are pooled and redrawn at the
/// original per-gender counts; the base LLM mean stays fixed.
TopicAnalysis rq2_bootstrap(const GroupedScores& grouped, const std::string& topic,
                            int prompt_variant, const BootstrapSettings& settings);

enum class TestKind { Rq1, Rq2 };

struct OracleResult {
  double p_value = 0.0;
  std::uint64_t assignments = 0;
};

/// Exact exceedance probability by enumerating every resample assignment.
/// Throws AuditError(BudgetExceeded) when the assignment count passes the
/// budget.
OracleResult exact_enumeration_oracle(const GroupedScores& grouped,
                                      const std::string& topic, int prompt_variant,
                                      TestKind kind, const BootstrapSettings& settings,
                                      std::uint64_t budget = 1000000);

}  // namespace claimaudit
