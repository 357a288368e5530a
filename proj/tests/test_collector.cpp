#include <doctest.h>

#include <algorithm>

#include "claimaudit/collector.hpp"
#include "claimaudit/errors.hpp"
#include "helpers.hpp"

using namespace claimaudit;
using namespace testutil;

namespace {

DatasetBundle planning_bundle() {
  DatasetBundle b;
  b.claims = {make_claim("c1", "Abortion"), make_claim("c2", "Sports"),
              make_claim("c3", "USA"), make_claim("c_empty", "USA")};
  b.workers.push_back(make_worker("m1", Gender::Man));
  b.workers.push_back(make_worker("w1", Gender::Woman));
  auto add = [&](const std::string& claim, Gender g, int times) {
    for (int i = 0; i < times; ++i) {
      b.annotations.push_back(human_annotation(
          claim, g == Gender::Man ? "m1" : "w1", g, 3));
    }
  };
  // c1: 7 women, 3 men (the count-matching example)
  add("c1", Gender::Woman, 7);
  add("c1", Gender::Man, 3);
  // c2: 2 women, 2 men; c3: 5 women, 0 men
  add("c2", Gender::Woman, 2);
  add("c2", Gender::Man, 2);
  add("c3", Gender::Woman, 5);
  return b;
}

const PlanEntry& entry_for(const CollectionPlan& plan, const std::string& claim) {
  auto it = std::find_if(plan.entries.begin(), plan.entries.end(),
                         [&](const PlanEntry& e) { return e.claim_id == claim; });
  REQUIRE(it != plan.entries.end());
  return *it;
}

/// Provider wrapper counting live calls.
class CountingProvider : public ChatProvider {
 public:
  explicit CountingProvider(ChatProvider& inner) : inner_(inner) {}
  std::string complete(const SlotContext& slot, const std::string& prompt) override {
    ++calls;
    return inner_.complete(slot, prompt);
  }
  std::string name() const override { return inner_.name(); }
  int calls = 0;

 private:
  ChatProvider& inner_;
};

std::string records_blob(const std::vector<CollectionRecord>& records) {
  std::string blob;
  for (const auto& r : records) blob += r.to_json_line() + "\n";
  return blob;
}

}  // namespace

TEST_CASE("plan_collection count-matches retained human annotations") {
  DatasetBundle b = planning_bundle();
  CollectionPlan plan = plan_collection(b, Dimension::GroupHarm, 1);
  REQUIRE(plan.entries.size() == 4);

  const PlanEntry& c1 = entry_for(plan, "c1");
  CHECK(c1.man_conditioned == 3);
  CHECK(c1.woman_conditioned == 7);
  CHECK(c1.base == 10);

  const PlanEntry& c2 = entry_for(plan, "c2");
  CHECK(c2.man_conditioned == 2);
  CHECK(c2.woman_conditioned == 2);
  CHECK(c2.base == 4);

  const PlanEntry& c3 = entry_for(plan, "c3");
  CHECK(c3.man_conditioned == 0);
  CHECK(c3.woman_conditioned == 5);
  CHECK(c3.base == 5);

  const PlanEntry& empty = entry_for(plan, "c_empty");
  CHECK(empty.man_conditioned == 0);
  CHECK(empty.woman_conditioned == 0);
  CHECK(empty.base == 0);

  CHECK(plan.total_slots() == 20 + 8 + 10);
}

TEST_CASE("plan_collection ignores other dimensions and llm annotations") {
  DatasetBundle b = planning_bundle();
  b.annotations.push_back(
      human_annotation("c2", "m1", Gender::Man, 5, Dimension::PerceivedTruth));
  b.annotations.push_back(llm_annotation("c2", Condition::ManConditioned, 1, 4));
  CollectionPlan plan = plan_collection(b, Dimension::GroupHarm, 1);
  CHECK(entry_for(plan, "c2").man_conditioned == 2);
}

TEST_CASE("collect fills every slot from a constant provider") {
  DatasetBundle b;
  b.claims = {make_claim("c1", "USA")};
  b.workers = {make_worker("m1", Gender::Man), make_worker("w1", Gender::Woman)};
  for (int i = 0; i < 2; ++i) b.annotations.push_back(human_annotation("c1", "m1", Gender::Man, 3));
  b.annotations.push_back(human_annotation("c1", "w1", Gender::Woman, 4));

  CollectionPlan plan = plan_collection(b, Dimension::GroupHarm, 1);
  REQUIRE(plan.total_slots() == 6);  // man 2, woman 1, base 3

  MockProvider provider;
  provider.set_default_response("4");
  ProviderConfig config;
  ResponseCache cache;
  FixedClock clock;
  CollectOptions options;
  options.clock = &clock;

  CollectionResult result = collect(plan, b, provider, config, cache, options);
  REQUIRE(result.annotations.size() == 6);
  for (const auto& a : result.annotations) {
    CHECK(a.rating == 4);
    CHECK(a.source == Source::Llm);
    CHECK(a.prompt_variant == 1);
  }
  CHECK(result.coverage.complete());
  CHECK(result.coverage.planned == 6);
  CHECK(result.coverage.filled == 6);
  // canonical order: conditions man, woman, base with slot indices
  CHECK(result.annotations[0].condition == Condition::ManConditioned);
  CHECK(result.annotations[2].condition == Condition::WomanConditioned);
  CHECK(result.annotations[3].condition == Condition::Base);
  CHECK(result.records.size() == 6);
}

TEST_CASE("collect retries refusals and records the attempt count") {
  DatasetBundle b;
  b.claims = {make_claim("c1", "USA")};
  b.workers = {make_worker("m1", Gender::Man), make_worker("w1", Gender::Woman)};
  b.annotations.push_back(human_annotation("c1", "m1", Gender::Man, 3));
  b.annotations.push_back(human_annotation("c1", "w1", Gender::Woman, 4));

  MockProvider provider;
  provider.set_default_response("2");
  provider.add_response("c1", Condition::ManConditioned,
                        {"As an AI language model, I do not have personal opinions or "
                         "biases.",
                         "3"});
  ProviderConfig config;
  config.max_retries = 2;
  ResponseCache cache;
  FixedClock clock;
  CollectOptions options;
  options.clock = &clock;

  CollectionPlan plan = plan_collection(b, Dimension::GroupHarm, 1);
  CollectionResult result = collect(plan, b, provider, config, cache, options);

  auto man_ann = std::find_if(result.annotations.begin(), result.annotations.end(),
                              [](const Annotation& a) {
                                return a.condition == Condition::ManConditioned;
                              });
  REQUIRE(man_ann != result.annotations.end());
  CHECK(man_ann->rating == 3);

  // the man-conditioned slot replays two attempts: refusal then rating
  std::vector<const CollectionRecord*> man_records;
  for (const auto& r : result.records) {
    if (r.condition == Condition::ManConditioned) man_records.push_back(&r);
  }
  REQUIRE(man_records.size() == 2);
  CHECK(man_records[0]->refusal);
  CHECK(man_records[0]->attempt == 1);
  CHECK(man_records[1]->rating == 3);
  CHECK(man_records[1]->attempt == 2);
  CHECK(result.coverage.complete());
}

TEST_CASE("collect reports persistent refusals as coverage gaps") {
  DatasetBundle b;
  b.claims = {make_claim("c1", "USA")};
  b.workers = {make_worker("m1", Gender::Man), make_worker("w1", Gender::Woman)};
  b.annotations.push_back(human_annotation("c1", "m1", Gender::Man, 3));
  b.annotations.push_back(human_annotation("c1", "w1", Gender::Woman, 4));

  MockProvider provider;
  provider.set_default_response("5");
  provider.add_response("c1", Condition::Base, {"As an AI language model, I do not have "
                                                "personal opinions or biases."});
  ProviderConfig config;
  config.max_retries = 1;
  ResponseCache cache;
  FixedClock clock;
  CollectOptions options;
  options.clock = &clock;

  CollectionPlan plan = plan_collection(b, Dimension::GroupHarm, 1);
  CollectionResult result = collect(plan, b, provider, config, cache, options);

  CHECK(result.coverage.planned == 4);
  CHECK(result.coverage.filled == 2);
  REQUIRE(result.coverage.gaps.size() == 2);  // both base slots
  for (const auto& gap : result.coverage.gaps) {
    CHECK(gap.condition == Condition::Base);
    CHECK(gap.reason.find("refusal") != std::string::npos);
  }
  // gaps never fabricate annotations
  for (const auto& a : result.annotations) CHECK(a.condition != Condition::Base);
}

TEST_CASE("collect never exceeds the plan and pools identical prompts") {
  DatasetBundle b;
  b.claims = {make_claim("c1", "USA")};
  b.workers = {make_worker("m1", Gender::Man), make_worker("w1", Gender::Woman)};
  for (int i = 0; i < 3; ++i) {
    b.annotations.push_back(human_annotation("c1", "m1", Gender::Man, 3));
    b.annotations.push_back(human_annotation("c1", "w1", Gender::Woman, 4));
  }

  MockProvider inner;
  inner.set_default_response("4");
  CountingProvider provider(inner);
  ProviderConfig config;
  ResponseCache cache;
  FixedClock clock;
  CollectOptions options;
  options.clock = &clock;

  CollectionPlan plan = plan_collection(b, Dimension::GroupHarm, 1);
  CollectionResult result = collect(plan, b, provider, config, cache, options);

  REQUIRE(result.annotations.size() == 12);  // 3 + 3 + 6
  // one live call per unique prompt: man, woman, base
  CHECK(provider.calls == 3);
  std::size_t man = 0, woman = 0, base = 0;
  for (const auto& a : result.annotations) {
    man += a.condition == Condition::ManConditioned;
    woman += a.condition == Condition::WomanConditioned;
    base += a.condition == Condition::Base;
  }
  CHECK(man == 3);
  CHECK(woman == 3);
  CHECK(base == 6);
}

TEST_CASE("cache replay reproduces a live run without touching the provider") {
  DatasetBundle b;
  b.claims = {make_claim("c1", "USA"), make_claim("c2", "Sports")};
  b.workers = {make_worker("m1", Gender::Man), make_worker("w1", Gender::Woman)};
  b.annotations.push_back(human_annotation("c1", "m1", Gender::Man, 2));
  b.annotations.push_back(human_annotation("c1", "w1", Gender::Woman, 5));
  b.annotations.push_back(human_annotation("c2", "m1", Gender::Man, 1));

  TempDir dir;
  const auto cache_path = dir.path() / "cache.jsonl";
  ProviderConfig config;
  config.max_retries = 1;
  CollectionPlan plan = plan_collection(b, Dimension::GroupHarm, 1);
  FixedClock clock;
  CollectOptions options;
  options.clock = &clock;

  MockProvider provider;
  provider.set_default_response("4");
  provider.add_response("c1", Condition::WomanConditioned,
                        {"As an AI language model, I do not have personal opinions or "
                         "biases.",
                         "6"});

  CollectionResult live;
  {
    ResponseCache cache(cache_path);
    live = collect(plan, b, provider, config, cache, options);
  }
  REQUIRE(live.coverage.complete());

  NullProvider null_provider;
  ResponseCache cache(cache_path);
  CollectionResult replay = collect(plan, b, null_provider, config, cache, options);

  CHECK(replay.annotations.size() == live.annotations.size());
  for (std::size_t i = 0; i < live.annotations.size(); ++i) {
    CHECK(replay.annotations[i] == live.annotations[i]);
  }
  // identical record streams except the provider name column
  auto normalize = [](std::vector<CollectionRecord> records) {
    for (auto& r : records) r.provider = "x";
    return records;
  };
  CHECK(records_blob(normalize(replay.records)) == records_blob(normalize(live.records)));
}

TEST_CASE("two seeded mock runs produce byte-identical record streams") {
  DatasetBundle b = planning_bundle();
  CollectionPlan plan = plan_collection(b, Dimension::GroupHarm, 2);
  ProviderConfig config;
  FixedClock clock;
  CollectOptions options;
  options.clock = &clock;

  auto run = [&]() {
    MockProvider provider;
    provider.set_default_response("4");
    ResponseCache cache;  // fresh in-memory cache per run
    return collect(plan, b, provider, config, cache, options);
  };
  CollectionResult first = run();
  CollectionResult second = run();
  CHECK(records_blob(first.records) == records_blob(second.records));
  CHECK(first.records.size() == plan.total_slots());
}

TEST_CASE("mock provider scripts sequences per key from a config file") {
  TempDir dir;
  const auto script = dir.path() / "mock.json";
  spit(script, R"({
    "default": "2",
    "responses": {
      "c9|base": ["nope, no digits", "5"],
      "c9|man_conditioned": "1"
    }
  })");
  MockProvider provider = MockProvider::from_file(script);
  SlotContext slot{"c9", Condition::Base, 1, 1};
  CHECK(provider.complete(slot, "p") == "nope, no digits");
  slot.attempt = 2;
  CHECK(provider.complete(slot, "p") == "5");
  slot.attempt = 9;  // past the end: last entry repeats
  CHECK(provider.complete(slot, "p") == "5");
  slot.condition = Condition::ManConditioned;
  CHECK(provider.complete(slot, "p") == "1");
  slot.claim_id = "other";
  CHECK(provider.complete(slot, "p") == "2");
}

TEST_CASE("null provider reports the provider-unreachable error") {
  NullProvider provider;
  SlotContext slot;
  CHECK_THROWS_WITH_AS(provider.complete(slot, "p"),
                       doctest::Contains("PROVIDER_UNREACHABLE"), AuditError);
}
