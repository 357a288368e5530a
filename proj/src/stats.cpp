#include "claimaudit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "claimaudit/errors.hpp"
#include "claimaudit/rng.hpp"

namespace claimaudit {

namespace {

// Sum / sum-of-squares accumulator. The bootstrap, the enumeration oracle
// and the observed statistics all share this algebra so that a resample
// reproducing the observed assignment yields the identical double.
struct Acc {
  double s = 0.0;
  double q = 0.0;
  std::size_t n = 0;

  void add(double v) {
    s += v;
    q += v * v;
    ++n;
  }
  void add_all(const std::vector<double>& values) {
    for (double v : values) add(v);
  }
  double mean() const { return s / static_cast<double>(n); }
};

double union_variance(const Acc& a, const Acc& b) {
  const double n = static_cast<double>(a.n + b.n);
  const double m = (a.s + b.s) / n;
  return (a.q + b.q) / n - m * m;
}

bool exceeds(double x, double ref, Inequality inequality) {
  return inequality == Inequality::Strict ? x > ref : x >= ref;
}

std::string cell_name(Source source, Condition condition, int variant) {
  std::string name = to_string(source) + "/" + to_string(condition);
  if (variant > 0) name += "/v" + std::to_string(variant);
  return name;
}

std::string group_key_for(const Annotation& a, const ZscorePolicy& policy) {
  std::string key;
  if (a.source == Source::Human) {
    key = "human";
  } else {
    key = "llm";
    if (!policy.pool_llm_variants) key += ":v" + std::to_string(a.prompt_variant);
  }
  if (policy.split_by_gender) key += ":" + to_string(a.condition);
  return key;
}

constexpr Condition kHumanConditions[] = {Condition::Man, Condition::Woman,
                                          Condition::Nonbinary, Condition::Undisclosed};

}  // namespace

double mean(const std::vector<double>& values) {
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double population_variance(const std::vector<double>& values) {
  const double m = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return s / static_cast<double>(values.size());
}

std::string ZscorePolicy::describe() const {
  std::string desc = split_by_gender ? "by_source_and_gender" : "by_source";
  desc += pool_llm_variants ? ",llm_pooled_variants" : ",llm_per_variant";
  return desc;
}

ZscoreVector zscore_vector(const std::vector<double>& values) {
  ZscoreVector out;
  out.z.assign(values.size(), 0.0);
  if (values.size() < 2) {
    out.degenerate = true;
    return out;
  }
  const double m = mean(values);
  const double var = population_variance(values);
  if (var <= 0.0) {
    out.degenerate = true;
    return out;
  }
  const double sd = std::sqrt(var);
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.z[i] = (values[i] - m) / sd;
  }
  return out;
}

const std::vector<double>* GroupedScores::cell(const std::string& claim_id, Source source,
                                               Condition condition,
                                               int prompt_variant) const {
  auto it = cells.find(CellKey{claim_id, source, condition, prompt_variant});
  if (it == cells.end()) return nullptr;
  return &it->second;
}

std::vector<double> GroupedScores::human_all(const std::string& claim_id) const {
  std::vector<double> out;
  for (Condition c : kHumanConditions) {
    if (const auto* v = cell(claim_id, Source::Human, c, 0)) {
      out.insert(out.end(), v->begin(), v->end());
    }
  }
  return out;
}

std::vector<std::string> GroupedScores::topics() const {
  std::set<std::string> unique;
  for (const auto& [claim, topic] : claim_topic) unique.insert(topic);
  return {unique.begin(), unique.end()};
}

std::vector<std::string> GroupedScores::claims_in_topic(const std::string& topic) const {
  std::vector<std::string> out;
  for (const auto& [claim, t] : claim_topic) {
    if (t == topic) out.push_back(claim);
  }
  return out;
}

GroupedScores zscore_normalize(const std::vector<Claim>& claims,
                               const std::vector<Annotation>& annotations,
                               Dimension dimension, const ZscorePolicy& policy) {
  GroupedScores grouped;
  grouped.dimension = dimension;
  grouped.policy = policy.describe();
  for (const auto& c : claims) grouped.claim_topic[c.claim_id] = c.topic;

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    if (annotations[i].dimension != dimension) continue;
    groups[group_key_for(annotations[i], policy)].push_back(i);
  }

  for (const auto& [key, indices] : groups) {
    std::vector<double> raw;
    raw.reserve(indices.size());
    for (std::size_t idx : indices) raw.push_back(static_cast<double>(annotations[idx].rating));
    ZscoreVector zs = zscore_vector(raw);
    if (zs.degenerate) {
      grouped.warnings.push_back(
          {"DEGENERATE_GROUP", key,
           "group has constant ratings or fewer than two annotations; z-scores set to 0"});
    }
    for (std::size_t k = 0; k < indices.size(); ++k) {
      const Annotation& a = annotations[indices[k]];
      grouped.scores.push_back({indices[k], zs.z[k], key});
      const CellKey cell{a.claim_id, a.source, a.condition,
                         a.source == Source::Llm ? a.prompt_variant : 0};
      grouped.cells[cell].push_back(zs.z[k]);
    }
  }
  std::sort(grouped.scores.begin(), grouped.scores.end(),
            [](const NormalizedScore& a, const NormalizedScore& b) {
              return a.annotation_index < b.annotation_index;
            });
  return grouped;
}

namespace {

struct MaybeDivergence {
  std::optional<double> value;
  std::string reason;
};

MaybeDivergence try_claim_divergence(const GroupedScores& grouped,
                                     const std::string& claim_id, int variant) {
  const auto* hm = grouped.cell(claim_id, Source::Human, Condition::Man, 0);
  const auto* hw = grouped.cell(claim_id, Source::Human, Condition::Woman, 0);
  const auto* lm = grouped.cell(claim_id, Source::Llm, Condition::ManConditioned, variant);
  const auto* lw = grouped.cell(claim_id, Source::Llm, Condition::WomanConditioned, variant);

  std::vector<std::string> missing;
  if (!hm) missing.push_back(cell_name(Source::Human, Condition::Man, 0));
  if (!hw) missing.push_back(cell_name(Source::Human, Condition::Woman, 0));
  if (!lm) missing.push_back(cell_name(Source::Llm, Condition::ManConditioned, variant));
  if (!lw) missing.push_back(cell_name(Source::Llm, Condition::WomanConditioned, variant));
  if (!missing.empty()) {
    std::string reason = "missing cells:";
    for (const auto& m : missing) reason += " " + m;
    return {std::nullopt, reason};
  }

  Acc acc_hm, acc_hw, acc_lm, acc_lw;
  acc_hm.add_all(*hm);
  acc_hw.add_all(*hw);
  acc_lm.add_all(*lm);
  acc_lw.add_all(*lw);

  // Variance over all human scores of the claim (any gender) and over the
  // gender-conditioned llm scores; the base condition never enters here.
  Acc acc_h_all;
  for (Condition c : kHumanConditions) {
    if (const auto* v = grouped.cell(claim_id, Source::Human, c, 0)) acc_h_all.add_all(*v);
  }
  Acc acc_l_all;
  acc_l_all.add_all(*lm);
  acc_l_all.add_all(*lw);

  const double var_h = acc_h_all.q / static_cast<double>(acc_h_all.n) -
                       acc_h_all.mean() * acc_h_all.mean();
  const double var_l = acc_l_all.q / static_cast<double>(acc_l_all.n) -
                       acc_l_all.mean() * acc_l_all.mean();
  const double numerator = std::abs(acc_lw.mean() - acc_lm.mean()) -
                           std::abs(acc_hw.mean() - acc_hm.mean());
  return {numerator / std::sqrt(1.0 + var_h + var_l), ""};
}

}  // namespace

double claim_divergence(const GroupedScores& grouped, const std::string& claim_id,
                        int prompt_variant) {
  MaybeDivergence d = try_claim_divergence(grouped, claim_id, prompt_variant);
  if (!d.value) {
    throw AuditError(ErrorCode::MissingCell, "claim '" + claim_id + "': " + d.reason);
  }
  return *d.value;
}

TopicDivergence topic_divergence(const GroupedScores& grouped, const std::string& topic,
                                 int prompt_variant) {
  TopicDivergence out;
  double sum = 0.0;
  for (const auto& claim_id : grouped.claims_in_topic(topic)) {
    MaybeDivergence d = try_claim_divergence(grouped, claim_id, prompt_variant);
    if (d.value) {
      out.included.push_back(claim_id);
      sum += *d.value;
    } else {
      out.excluded.push_back({claim_id, d.reason});
    }
  }
  if (out.included.empty()) {
    throw AuditError(ErrorCode::EmptyTopic,
                     "topic '" + topic + "' has no claims eligible for divergence");
  }
  out.value = sum / static_cast<double>(out.included.size());
  return out;
}

namespace {

struct Rq1Claim {
  std::vector<double> men_pool;    // human men first, then man-conditioned llm
  std::vector<double> women_pool;  // human women first, then woman-conditioned llm
  std::size_t n_hm = 0, n_lm = 0, n_hw = 0, n_lw = 0;
};

struct Rq1Data {
  std::vector<Rq1Claim> claims;
  TopicDivergence observed;
};

Rq1Data prepare_rq1(const GroupedScores& grouped, const std::string& topic, int variant) {
  Rq1Data data;
  data.observed = topic_divergence(grouped, topic, variant);
  for (const auto& claim_id : data.observed.included) {
    const auto* hm = grouped.cell(claim_id, Source::Human, Condition::Man, 0);
    const auto* hw = grouped.cell(claim_id, Source::Human, Condition::Woman, 0);
    const auto* lm = grouped.cell(claim_id, Source::Llm, Condition::ManConditioned, variant);
    const auto* lw = grouped.cell(claim_id, Source::Llm, Condition::WomanConditioned, variant);
    Rq1Claim c;
    c.men_pool = *hm;
    c.men_pool.insert(c.men_pool.end(), lm->begin(), lm->end());
    c.women_pool = *hw;
    c.women_pool.insert(c.women_pool.end(), lw->begin(), lw->end());
    c.n_hm = hm->size();
    c.n_lm = lm->size();
    c.n_hw = hw->size();
    c.n_lw = lw->size();
    data.claims.push_back(std::move(c));
  }
  return data;
}

double rq1_statistic(const Acc& hm, const Acc& lm, const Acc& hw, const Acc& lw) {
  const double var_h = union_variance(hm, hw);
  const double var_l = union_variance(lm, lw);
  const double numerator =
      std::abs(lw.mean() - lm.mean()) - std::abs(hw.mean() - hm.mean());
  return numerator / std::sqrt(1.0 + var_h + var_l);
}

double rq1_resample(const Rq1Claim& c, std::uint64_t seed, std::uint64_t iteration,
                    std::uint64_t claim_ordinal) {
  Acc hm, lm, hw, lw;
  SubstreamRng r_hm(seed, iteration, claim_ordinal, 0);
  for (std::size_t k = 0; k < c.n_hm; ++k) hm.add(c.men_pool[r_hm.bounded(c.men_pool.size())]);
  SubstreamRng r_lm(seed, iteration, claim_ordinal, 1);
  for (std::size_t k = 0; k < c.n_lm; ++k) lm.add(c.men_pool[r_lm.bounded(c.men_pool.size())]);
  SubstreamRng r_hw(seed, iteration, claim_ordinal, 2);
  for (std::size_t k = 0; k < c.n_hw; ++k) hw.add(c.women_pool[r_hw.bounded(c.women_pool.size())]);
  SubstreamRng r_lw(seed, iteration, claim_ordinal, 3);
  for (std::size_t k = 0; k < c.n_lw; ++k) lw.add(c.women_pool[r_lw.bounded(c.women_pool.size())]);
  return rq1_statistic(hm, lm, hw, lw);
}

}  // namespace

TopicAnalysis rq1_bootstrap(const GroupedScores& grouped, const std::string& topic,
                            int prompt_variant, const BootstrapSettings& settings) {
  const Rq1Data data = prepare_rq1(grouped, topic, prompt_variant);
  const double e_hat = data.observed.value;
  const std::size_t n_claims = data.claims.size();

  std::uint64_t count = 0;
  for (std::uint64_t b = 0; b < settings.B; ++b) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n_claims; ++j) {
      sum += rq1_resample(data.claims[j], settings.seed, b, j);
    }
    const double e_b = sum / static_cast<double>(n_claims);
    if (exceeds(e_b, e_hat, settings.inequality)) ++count;
  }

  TopicAnalysis analysis;
  analysis.result.topic = topic;
  analysis.result.statistic_kind = StatisticKind::EHat;
  analysis.result.value = e_hat;
  analysis.result.p_value = static_cast<double>(count) / static_cast<double>(settings.B);
  analysis.result.B = settings.B;
  analysis.result.seed = settings.seed;
  analysis.result.prompt_variant = prompt_variant;
  analysis.included = data.observed.included;
  analysis.excluded = data.observed.excluded;
  return analysis;
}

namespace {

struct Rq2Claim {
  std::vector<double> pool;  // human men first, then human women
  std::size_t n_m = 0, n_w = 0;
  double base_mean = 0.0;
  double obs_mean_m = 0.0;
  double obs_mean_w = 0.0;
};

struct Rq2Data {
  std::vector<Rq2Claim> claims;
  std::vector<std::string> included;
  std::vector<ExcludedClaim> excluded;
  double mse_man = 0.0;
  double mse_woman = 0.0;
};

Rq2Data prepare_rq2(const GroupedScores& grouped, const std::string& topic, int variant) {
  Rq2Data data;
  for (const auto& claim_id : grouped.claims_in_topic(topic)) {
    const auto* hm = grouped.cell(claim_id, Source::Human, Condition::Man, 0);
    const auto* hw = grouped.cell(claim_id, Source::Human, Condition::Woman, 0);
    const auto* base = grouped.cell(claim_id, Source::Llm, Condition::Base, variant);
    std::vector<std::string> missing;
    if (!hm) missing.push_back(cell_name(Source::Human, Condition::Man, 0));
    if (!hw) missing.push_back(cell_name(Source::Human, Condition::Woman, 0));
    if (!base) missing.push_back(cell_name(Source::Llm, Condition::Base, variant));
    if (!missing.empty()) {
      std::string reason = "missing cells:";
      for (const auto& m : missing) reason += " " + m;
      data.excluded.push_back({claim_id, reason});
      continue;
    }
    Rq2Claim c;
    c.pool = *hm;
    c.pool.insert(c.pool.end(), hw->begin(), hw->end());
    c.n_m = hm->size();
    c.n_w = hw->size();
    Acc acc_m, acc_w, acc_base;
    acc_m.add_all(*hm);
    acc_w.add_all(*hw);
    acc_base.add_all(*base);
    c.base_mean = acc_base.mean();
    c.obs_mean_m = acc_m.mean();
    c.obs_mean_w = acc_w.mean();
    data.claims.push_back(std::move(c));
    data.included.push_back(claim_id);
  }
  if (data.claims.empty()) {
    throw AuditError(ErrorCode::EmptyTopic,
                     "topic '" + topic + "' has no claims eligible for alignment analysis");
  }
  const double n = static_cast<double>(data.claims.size());
  double sum_m = 0.0, sum_w = 0.0;
  for (const auto& c : data.claims) {
    sum_m += (c.obs_mean_m - c.base_mean) * (c.obs_mean_m - c.base_mean);
    sum_w += (c.obs_mean_w - c.base_mean) * (c.obs_mean_w - c.base_mean);
  }
  data.mse_man = sum_m / n;
  data.mse_woman = sum_w / n;
  return data;
}

double rq2_form_statistic(double mse_man, double mse_woman, Rq2Form form) {
  return form == Rq2Form::Absolute ? std::abs(mse_woman - mse_man) : mse_man - mse_woman;
}

}  // namespace

GenderMse gender_mse(const GroupedScores& grouped, const std::string& topic, Gender gender,
                     int prompt_variant) {
  const Rq2Data data = prepare_rq2(grouped, topic, prompt_variant);
  GenderMse out;
  out.value = gender == Gender::Man ? data.mse_man : data.mse_woman;
  out.included = data.included;
  out.excluded = data.excluded;
  return out;
}

AlignmentGap alignment_gap(const GroupedScores& grouped, const std::string& topic,
                           int prompt_variant) {
  const Rq2Data data = prepare_rq2(grouped, topic, prompt_variant);
  AlignmentGap out;
  out.mse_man = data.mse_man;
  out.mse_woman = data.mse_woman;
  out.d_hat = std::abs(data.mse_woman - data.mse_man);
  out.included = data.included;
  out.excluded = data.excluded;
  return out;
}

TopicAnalysis rq2_bootstrap(const GroupedScores& grouped, const std::string& topic,
                            int prompt_variant, const BootstrapSettings& settings) {
  const Rq2Data data = prepare_rq2(grouped, topic, prompt_variant);
  const double n = static_cast<double>(data.claims.size());
  const double obs_stat = rq2_form_statistic(data.mse_man, data.mse_woman, settings.rq2_form);

  std::uint64_t count = 0;
  for (std::uint64_t b = 0; b < settings.B; ++b) {
    double sum_m = 0.0, sum_w = 0.0;
    for (std::size_t j = 0; j < data.claims.size(); ++j) {
      const Rq2Claim& c = data.claims[j];
      Acc m, w;
      SubstreamRng r_m(settings.seed, b, j, 0);
      for (std::size_t k = 0; k < c.n_m; ++k) m.add(c.pool[r_m.bounded(c.pool.size())]);
      SubstreamRng r_w(settings.seed, b, j, 1);
      for (std::size_t k = 0; k < c.n_w; ++k) w.add(c.pool[r_w.bounded(c.pool.size())]);
      sum_m += (m.mean() - c.base_mean) * (m.mean() - c.base_mean);
      sum_w += (w.mean() - c.base_mean) * (w.mean() - c.base_mean);
    }
    const double stat = rq2_form_statistic(sum_m / n, sum_w / n, settings.rq2_form);
    if (exceeds(stat, obs_stat, settings.inequality)) ++count;
  }

  TopicAnalysis analysis;
  analysis.result.topic = topic;
  analysis.result.statistic_kind = StatisticKind::DHat;
  analysis.result.value = std::abs(data.mse_woman - data.mse_man);
  analysis.result.p_value = static_cast<double>(count) / static_cast<double>(settings.B);
  analysis.result.B = settings.B;
  analysis.result.seed = settings.seed;
  analysis.result.mse_man = data.mse_man;
  analysis.result.mse_woman = data.mse_woman;
  analysis.result.prompt_variant = prompt_variant;
  analysis.included = data.included;
  analysis.excluded = data.excluded;
  return analysis;
}

namespace {

constexpr std::uint64_t kBudgetOverflow = ~0ULL;

std::uint64_t pow_saturating(std::uint64_t base, std::uint64_t exp) {
  std::uint64_t result = 1;
  for (std::uint64_t i = 0; i < exp; ++i) {
    if (base != 0 && result > kBudgetOverflow / base) return kBudgetOverflow;
    result *= base;
  }
  return result;
}

std::uint64_t mul_saturating(std::uint64_t a, std::uint64_t b) {
  if (b != 0 && a > kBudgetOverflow / b) return kBudgetOverflow;
  return a * b;
}

// Enumerates all draw assignments for one rq1 claim; returns the
// resampled statistic per assignment.
std::vector<double> enumerate_rq1_claim(const Rq1Claim& c) {
  const std::size_t dm = c.n_hm + c.n_lm;
  const std::size_t dw = c.n_hw + c.n_lw;
  const std::size_t total_draws = dm + dw;
  std::vector<std::size_t> digits(total_draws, 0);
  std::vector<double> values;

  for (;;) {
    Acc hm, lm, hw, lw;
    for (std::size_t i = 0; i < total_draws; ++i) {
      if (i < dm) {
        const double v = c.men_pool[digits[i]];
        if (i < c.n_hm) {
          hm.add(v);
        } else {
          lm.add(v);
        }
      } else {
        const double v = c.women_pool[digits[i]];
        if (i < dm + c.n_hw) {
          hw.add(v);
        } else {
          lw.add(v);
        }
      }
    }
    values.push_back(rq1_statistic(hm, lm, hw, lw));

    // advance odometer
    std::size_t pos = total_draws;
    while (pos > 0) {
      --pos;
      const std::size_t radix = pos < dm ? c.men_pool.size() : c.women_pool.size();
      if (++digits[pos] < radix) break;
      digits[pos] = 0;
      if (pos == 0) return values;
    }
  }
}

// Same for one rq2 claim; per assignment the squared residuals of the
// resampled man and woman means against the fixed base mean.
std::vector<std::pair<double, double>> enumerate_rq2_claim(const Rq2Claim& c) {
  const std::size_t total_draws = c.n_m + c.n_w;
  std::vector<std::size_t> digits(total_draws, 0);
  std::vector<std::pair<double, double>> values;

  for (;;) {
    Acc m, w;
    for (std::size_t i = 0; i < total_draws; ++i) {
      const double v = c.pool[digits[i]];
      if (i < c.n_m) {
        m.add(v);
      } else {
        w.add(v);
      }
    }
    const double rm = m.mean() - c.base_mean;
    const double rw = w.mean() - c.base_mean;
    values.emplace_back(rm * rm, rw * rw);

    std::size_t pos = total_draws;
    while (pos > 0) {
      --pos;
      if (++digits[pos] < c.pool.size()) break;
      digits[pos] = 0;
      if (pos == 0) return values;
    }
  }
}

}  // namespace

OracleResult exact_enumeration_oracle(const GroupedScores& grouped, const std::string& topic,
                                      int prompt_variant, TestKind kind,
                                      const BootstrapSettings& settings,
                                      std::uint64_t budget) {
  std::uint64_t total = 1;
  OracleResult out;

  if (kind == TestKind::Rq1) {
    const Rq1Data data = prepare_rq1(grouped, topic, prompt_variant);
    for (const auto& c : data.claims) {
      const std::uint64_t per_claim =
          mul_saturating(pow_saturating(c.men_pool.size(), c.n_hm + c.n_lm),
                         pow_saturating(c.women_pool.size(), c.n_hw + c.n_lw));
      total = mul_saturating(total, per_claim);
    }
    if (total > budget) {
      throw AuditError(ErrorCode::BudgetExceeded,
                       "enumeration needs " +
                           (total == kBudgetOverflow ? std::string(">2^64")
                                                     : std::to_string(total)) +
                           " assignments, budget is " + std::to_string(budget));
    }

    std::vector<std::vector<double>> per_claim;
    per_claim.reserve(data.claims.size());
    for (const auto& c : data.claims) per_claim.push_back(enumerate_rq1_claim(c));

    const double e_hat = data.observed.value;
    const double n_claims = static_cast<double>(data.claims.size());
    std::vector<std::size_t> idx(per_claim.size(), 0);
    std::uint64_t hits = 0;
    for (;;) {
      double sum = 0.0;
      for (std::size_t j = 0; j < per_claim.size(); ++j) sum += per_claim[j][idx[j]];
      if (exceeds(sum / n_claims, e_hat, settings.inequality)) ++hits;

      std::size_t pos = idx.size();
      bool done = false;
      while (pos > 0) {
        --pos;
        if (++idx[pos] < per_claim[pos].size()) break;
        idx[pos] = 0;
        if (pos == 0) done = true;
      }
      if (done) break;
    }
    out.p_value = static_cast<double>(hits) / static_cast<double>(total);
    out.assignments = total;
    return out;
  }

  const Rq2Data data = prepare_rq2(grouped, topic, prompt_variant);
  for (const auto& c : data.claims) {
    total = mul_saturating(total, pow_saturating(c.pool.size(), c.n_m + c.n_w));
  }
  if (total > budget) {
    throw AuditError(ErrorCode::BudgetExceeded,
                     "enumeration needs " +
                         (total == kBudgetOverflow ? std::string(">2^64")
                                                   : std::to_string(total)) +
                         " assignments, budget is " + std::to_string(budget));
  }

  std::vector<std::vector<std::pair<double, double>>> per_claim;
  per_claim.reserve(data.claims.size());
  for (const auto& c : data.claims) per_claim.push_back(enumerate_rq2_claim(c));

  const double n = static_cast<double>(data.claims.size());
  const double obs_stat = rq2_form_statistic(data.mse_man, data.mse_woman, settings.rq2_form);
  std::vector<std::size_t> idx(per_claim.size(), 0);
  std::uint64_t hits = 0;
  for (;;) {
    double sum_m = 0.0, sum_w = 0.0;
    for (std::size_t j = 0; j < per_claim.size(); ++j) {
      sum_m += per_claim[j][idx[j]].first;
      sum_w += per_claim[j][idx[j]].second;
    }
    const double stat = rq2_form_statistic(sum_m / n, sum_w / n, settings.rq2_form);
    if (exceeds(stat, obs_stat, settings.inequality)) ++hits;

    std::size_t pos = idx.size();
    bool done = false;
    while (pos > 0) {
      --pos;
      if (++idx[pos] < per_claim[pos].size()) break;
      idx[pos] = 0;
      if (pos == 0) done = true;
    }
    if (done) break;
  }
  out.p_value = static_cast<double>(hits) / static_cast<double>(total);
  out.assignments = total;
  return out;
}

}  // namespace claimaudit
