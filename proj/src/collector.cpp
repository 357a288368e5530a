#include "claimaudit/collector.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <map>
#include <sstream>

#include <json.hpp>

#include "claimaudit/errors.hpp"

namespace claimaudit {

std::size_t CollectionPlan::total_slots() const {
  std::size_t total = 0;
  for (const auto& e : entries) total += e.man_conditioned + e.woman_conditioned + e.base;
  return total;
}

CollectionPlan plan_collection(const DatasetBundle& bundle, Dimension dimension,
                               int prompt_variant) {
  CollectionPlan plan;
  plan.dimension = dimension;
  plan.prompt_variant = prompt_variant;

  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // claim -> (men, women)
  for (const auto& c : bundle.claims) counts[c.claim_id];
  for (const auto& a : bundle.annotations) {
    if (a.source != Source::Human || a.dimension != dimension) continue;
    auto it = counts.find(a.claim_id);
    if (it == counts.end()) continue;
    if (a.condition == Condition::Man) ++it->second.first;
    if (a.condition == Condition::Woman) ++it->second.second;
  }
  for (const auto& [claim_id, mw] : counts) {
    PlanEntry entry;
    entry.claim_id = claim_id;
    entry.man_conditioned = mw.first;
    entry.woman_conditioned = mw.second;
    entry.base = mw.first + mw.second;
    plan.entries.push_back(std::move(entry));
  }
  return plan;
}

std::string CollectionRecord::to_json_line() const {
  nlohmann::json j = {
      {"claim_id", claim_id},
      {"condition", to_string(condition)},
      {"prompt_variant", prompt_variant},
      {"slot", slot},
      {"attempt", attempt},
      {"prompt", prompt},
      {"response", response},
      {"refusal", refusal},
      {"parse_failure", parse_failure},
      {"provider", provider},
      {"model", model},
      {"temperature", temperature},
      {"timestamp", timestamp},
  };
  if (rating) {
    j["rating"] = *rating;
  } else {
    j["rating"] = nullptr;
  }
  return j.dump();
}

ResponseCache::ResponseCache(const std::filesystem::path& file) {
  if (std::filesystem::exists(file)) {
    std::ifstream in(file);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw AuditError(ErrorCode::IoError,
                         "bad cache line in " + file.string() + ": " + e.what());
      }
      const std::string key = key_of(j.at("model").get<std::string>(),
                                     j.at("prompt").get<std::string>(),
                                     j.at("temperature").get<double>());
      entries_[key].emplace_back(j.at("response").get<std::string>(),
                                 j.value("timestamp", std::string()));
    }
  }
  out_ = std::make_unique<std::ofstream>(file, std::ios::app | std::ios::binary);
  if (!*out_) {
    throw AuditError(ErrorCode::IoError, "cannot open cache for append: " + file.string());
  }
}

std::string ResponseCache::key_of(const std::string& model, const std::string& prompt,
                                  double temperature) {
  std::ostringstream key;
  key << model << '\x1f' << temperature << '\x1f' << prompt;
  return key.str();
}

std::size_t ResponseCache::count(const std::string& model, const std::string& prompt,
                                 double temperature) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(key_of(model, prompt, temperature));
  return it == entries_.end() ? 0 : it->second.size();
}

std::optional<std::pair<std::string, std::string>> ResponseCache::get(
    const std::string& model, const std::string& prompt, double temperature,
    std::size_t index) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(key_of(model, prompt, temperature));
  if (it == entries_.end() || index >= it->second.size()) return std::nullopt;
  return it->second[index];
}

void ResponseCache::append(const std::string& model, const std::string& prompt,
                           double temperature, const std::string& response,
                           const std::string& timestamp) {
  std::lock_guard<std::mutex> lock(mu_);
  entries_[key_of(model, prompt, temperature)].emplace_back(response, timestamp);
  if (out_) {
    nlohmann::json j = {
        {"model", model},     {"prompt", prompt},       {"temperature", temperature},
        {"response", response}, {"timestamp", timestamp},
    };
    *out_ << j.dump() << '\n';
    out_->flush();
  }
}

std::size_t ResponseCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::size_t total = 0;
  for (const auto& [key, list] : entries_) total += list.size();
  return total;
}

std::string SystemClock::now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

struct AttemptOutcome {
  std::string response;
  std::string timestamp;
  std::optional<int> rating;
  bool refusal = false;
  bool parse_failure = false;
};

struct Resolution {
  std::vector<AttemptOutcome> attempts;
  std::optional<int> rating;  // set when some attempt produced one
  std::string gap_reason;
};

Resolution resolve_key(const std::string& prompt, const SlotContext& base_slot,
                       ChatProvider& provider, const ProviderConfig& config,
                       ResponseCache& cache, const PromptConfig& prompts, Clock& clock) {
  Resolution res;
  const int max_attempts = config.max_retries + 1;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    AttemptOutcome outcome;
    const std::size_t cached = cache.count(config.model, prompt, config.temperature);
    if (static_cast<std::size_t>(attempt) <= cached) {
      auto entry = cache.get(config.model, prompt, config.temperature,
                             static_cast<std::size_t>(attempt) - 1);
      outcome.response = entry->first;
      outcome.timestamp = entry->second;
    } else {
      SlotContext slot = base_slot;
      slot.attempt = attempt;
      outcome.response = provider.complete(slot, prompt);
      outcome.timestamp = clock.now();
      cache.append(config.model, prompt, config.temperature, outcome.response,
                   outcome.timestamp);
    }
    if (auto parsed = try_parse_rating(outcome.response, prompts.refusal_phrases)) {
      outcome.rating = parsed->rating;
      outcome.refusal = parsed->refusal;
    } else {
      outcome.parse_failure = true;
    }
    const bool resolved = outcome.rating.has_value();
    const bool refusal = outcome.refusal;
    res.attempts.push_back(std::move(outcome));
    if (resolved) {
      res.rating = res.attempts.back().rating;
      return res;
    }
    res.gap_reason = refusal ? "refusal" : "unparseable response";
  }
  res.gap_reason += " after " + std::to_string(max_attempts) + " attempts";
  return res;
}

}  // namespace

CollectionResult collect(const CollectionPlan& plan, const DatasetBundle& bundle,
                         ChatProvider& provider, const ProviderConfig& config,
                         ResponseCache& cache, const CollectOptions& options) {
  CollectionResult result;
  SystemClock system_clock;
  Clock& clock = options.clock ? *options.clock : system_clock;

  std::map<std::string, std::string> claim_text;
  for (const auto& c : bundle.claims) claim_text[c.claim_id] = c.text;

  // One resolution per unique cache key; identical prompts never hit the
  // provider twice.
  std::map<std::string, Resolution> resolved;

  std::vector<PlanEntry> entries = plan.entries;
  std::sort(entries.begin(), entries.end(),
            [](const PlanEntry& a, const PlanEntry& b) { return a.claim_id < b.claim_id; });

  constexpr Condition kConditions[] = {Condition::ManConditioned,
                                       Condition::WomanConditioned, Condition::Base};
  for (const auto& entry : entries) {
    auto text_it = claim_text.find(entry.claim_id);
    if (text_it == claim_text.end()) {
      throw AuditError(ErrorCode::DanglingReference,
                       "plan references unknown claim '" + entry.claim_id + "'");
    }
    for (Condition condition : kConditions) {
      std::size_t want = 0;
      std::optional<std::string> gender;
      Conditioning conditioning = Conditioning::Neutral;
      switch (condition) {
        case Condition::ManConditioned:
          want = entry.man_conditioned;
          gender = options.man_word;
          conditioning = Conditioning::Gendered;
          break;
        case Condition::WomanConditioned:
          want = entry.woman_conditioned;
          gender = options.woman_word;
          conditioning = Conditioning::Gendered;
          break;
        default:
          want = entry.base;
          break;
      }
      if (want == 0) continue;
      result.coverage.planned += want;

      const std::string prompt =
          render_prompt(plan.prompt_variant, conditioning, gender, text_it->second,
                        plan.dimension, options.prompts);
      std::ostringstream key_buf;
      key_buf << config.model << '\x1f' << config.temperature << '\x1f' << prompt;
      const std::string key = key_buf.str();
      auto it = resolved.find(key);
      if (it == resolved.end()) {
        SlotContext slot{entry.claim_id, condition, plan.prompt_variant, 1};
        it = resolved
                 .emplace(key, resolve_key(prompt, slot, provider, config, cache,
                                           options.prompts, clock))
                 .first;
      }
      const Resolution& res = it->second;

      for (std::size_t slot_idx = 0; slot_idx < want; ++slot_idx) {
        for (std::size_t a = 0; a < res.attempts.size(); ++a) {
          const AttemptOutcome& attempt = res.attempts[a];
          CollectionRecord record;
          record.claim_id = entry.claim_id;
          record.condition = condition;
          record.prompt_variant = plan.prompt_variant;
          record.slot = slot_idx;
          record.attempt = static_cast<int>(a + 1);
          record.prompt = prompt;
          record.response = attempt.response;
          record.rating = attempt.rating;
          record.refusal = attempt.refusal;
          record.parse_failure = attempt.parse_failure;
          record.provider = provider.name();
          record.model = config.model;
          record.temperature = config.temperature;
          record.timestamp = attempt.timestamp;
          result.records.push_back(std::move(record));
        }
        if (res.rating) {
          Annotation ann;
          ann.claim_id = entry.claim_id;
          ann.source = Source::Llm;
          ann.condition = condition;
          ann.prompt_variant = plan.prompt_variant;
          ann.dimension = plan.dimension;
          ann.rating = *res.rating;
          result.annotations.push_back(std::move(ann));
          ++result.coverage.filled;
        } else {
          result.coverage.gaps.push_back({entry.claim_id, condition, plan.prompt_variant,
                                          slot_idx, res.gap_reason});
        }
      }
    }
  }
  return result;
}

void write_collection_records(const std::filesystem::path& path,
                              const std::vector<CollectionRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw AuditError(ErrorCode::IoError, "cannot write records: " + path.string());
  }
  for (const auto& r : records) out << r.to_json_line() << '\n';
}

}  // namespace claimaudit
