// Acceptance suite: one pass/fail line per criterion, nonzero exit when
// any criterion fails. Conditional criteria print SKIP when their inputs
// are absent.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "claimaudit/collector.hpp"
#include "claimaudit/errors.hpp"
#include "claimaudit/ingest.hpp"
#include "claimaudit/report.hpp"
#include "claimaudit/stats.hpp"

using namespace claimaudit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  enum Kind { Pass, Fail, Skip } kind = Pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

fs::path scratch_dir() {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("claimaudit_acceptance_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---------------------------------------------------------------------------
// criterion 1: z-score groups hit mean 0 / variance 1 on randomized datasets

Outcome normalization_invariants() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> rating(1, 6);
  std::uniform_int_distribution<int> n_annotations(4, 60);
  std::uniform_int_distribution<int> n_claims(1, 6);
  std::uniform_int_distribution<int> variant(1, 2);
  std::uniform_int_distribution<int> kind(0, 3);

  for (int trial = 0; trial < 1000; ++trial) {
    const int claims_count = n_claims(rng);
    std::vector<Claim> claims;
    for (int i = 0; i < claims_count; ++i) {
      Claim c;
      c.claim_id = "c" + std::to_string(i);
      c.text = "t";
      c.topic = "T" + std::to_string(i % 3);
      claims.push_back(c);
    }
    std::vector<Annotation> annotations;
    const int count = n_annotations(rng);
    for (int i = 0; i < count; ++i) {
      Annotation a;
      a.claim_id = "c" + std::to_string(i % claims_count);
      a.rating = rating(rng);
      a.dimension = Dimension::GroupHarm;
      switch (kind(rng)) {
        case 0:
          a.source = Source::Human;
          a.condition = Condition::Man;
          a.worker_id = "w" + std::to_string(i % 7);
          break;
        case 1:
          a.source = Source::Human;
          a.condition = Condition::Woman;
          a.worker_id = "w" + std::to_string(i % 7);
          break;
        default:
          a.source = Source::Llm;
          a.condition = kind(rng) == 2 ? Condition::ManConditioned : Condition::Base;
          a.prompt_variant = variant(rng);
      }
      annotations.push_back(a);
    }
    ZscorePolicy policy;
    policy.split_by_gender = trial % 3 == 1;
    policy.pool_llm_variants = trial % 3 == 2;
    GroupedScores grouped =
        zscore_normalize(claims, annotations, Dimension::GroupHarm, policy);

    std::map<std::string, std::vector<double>> by_group;
    for (const auto& s : grouped.scores) by_group[s.group_key].push_back(s.z);
    std::set<std::string> degenerate;
    for (const auto& w : grouped.warnings) degenerate.insert(w.context);
    for (const auto& [key, zs] : by_group) {
      if (degenerate.count(key)) continue;
      if (std::abs(mean(zs)) >= 1e-9) {
        return {Outcome::Fail, "group " + key + " mean off: " + std::to_string(mean(zs))};
      }
      if (std::abs(population_variance(zs) - 1.0) >= 1e-9) {
        return {Outcome::Fail,
                "group " + key + " variance off: " + std::to_string(population_variance(zs))};
      }
    }
  }
  const double elapsed = seconds_since(start);
  if (elapsed >= 5.0) {
    return {Outcome::Fail, "took " + std::to_string(elapsed) + "s (budget 5s)"};
  }
  return {Outcome::Pass, "1000 datasets in " + std::to_string(elapsed) + "s"};
}

// ---------------------------------------------------------------------------
// criterion 2: claim statistic equals a straight-line re-implementation

double reference_mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double reference_popvar(const std::vector<double>& v) {
  const double m = reference_mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

// direct transcription of the claim-level statistic
double reference_claim_statistic(const std::vector<double>& hm, const std::vector<double>& hw,
                                 const std::vector<double>& lm, const std::vector<double>& lw) {
  std::vector<double> humans = hm;
  humans.insert(humans.end(), hw.begin(), hw.end());
  std::vector<double> llms = lm;
  llms.insert(llms.end(), lw.begin(), lw.end());
  const double numerator = std::abs(reference_mean(lw) - reference_mean(lm)) -
                           std::abs(reference_mean(hw) - reference_mean(hm));
  return numerator /
         std::sqrt(1.0 + reference_popvar(humans) + reference_popvar(llms));
}

GroupedScores cells_instance(const std::vector<double>& hm, const std::vector<double>& hw,
                             const std::vector<double>& lm, const std::vector<double>& lw,
                             int variant = 1) {
  GroupedScores g;
  g.claim_topic["c"] = "T";
  g.cells[CellKey{"c", Source::Human, Condition::Man, 0}] = hm;
  g.cells[CellKey{"c", Source::Human, Condition::Woman, 0}] = hw;
  g.cells[CellKey{"c", Source::Llm, Condition::ManConditioned, variant}] = lm;
  g.cells[CellKey{"c", Source::Llm, Condition::WomanConditioned, variant}] = lw;
  return g;
}

Outcome eq1_correctness() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> z(-2.5, 2.5);
  std::uniform_int_distribution<std::size_t> size(1, 5);

  for (int trial = 0; trial < 1000; ++trial) {
    auto draw = [&](std::size_t n) {
      std::vector<double> v(n);
      for (auto& x : v) x = z(rng);
      return v;
    };
    const auto hm = draw(size(rng)), hw = draw(size(rng)), lm = draw(size(rng)),
               lw = draw(size(rng));
    const double expected = reference_claim_statistic(hm, hw, lm, lw);
    const double actual = claim_divergence(cells_instance(hm, hw, lm, lw), "c", 1);
    if (std::abs(expected - actual) > 1e-12) {
      return {Outcome::Fail, "trial " + std::to_string(trial) + ": |" +
                                 std::to_string(expected) + " - " + std::to_string(actual) +
                                 "| > 1e-12"};
    }
  }

  // hand-derived example: gaps 2 vs 1, variances 0.25 and 1 -> 0.6667
  const double hand =
      claim_divergence(cells_instance({0.5, 0.5}, {-0.5, -0.5}, {-1.0}, {1.0}), "c", 1);
  if (std::abs(hand - 0.6667) > 1e-4) {
    return {Outcome::Fail, "hand example gave " + std::to_string(hand)};
  }
  return {Outcome::Pass, "1000 random claims within 1e-12; hand example " +
                             std::to_string(hand)};
}

// ---------------------------------------------------------------------------
// criterion 3: both bootstrap tests track the exact enumeration oracle

Outcome bootstrap_vs_oracle() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> z(-2, 2);
  std::uniform_int_distribution<int> small(1, 2);
  std::uniform_int_distribution<int> tiny(1, 3);
  auto draw = [&](int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = z(rng);
    return v;
  };

  int checked = 0;
  for (int instance = 0; instance < 20; ++instance) {
    BootstrapSettings settings;
    settings.B = 10000;
    settings.seed = 9000 + static_cast<std::uint64_t>(instance);
    settings.inequality = instance % 2 ? Inequality::Strict : Inequality::NonStrict;
    settings.rq2_form = instance % 4 < 2 ? Rq2Form::Absolute : Rq2Form::Signed;

    double exact = 0.0, estimate = 0.0;
    if (instance % 2 == 0) {
      // rq1 on one claim, counts 1..2 per cell
      GroupedScores g = cells_instance(draw(small(rng)), draw(small(rng)),
                                       draw(small(rng)), draw(small(rng)));
      OracleResult oracle = exact_enumeration_oracle(g, "T", 1, TestKind::Rq1, settings);
      exact = oracle.p_value;
      estimate = rq1_bootstrap(g, "T", 1, settings).result.p_value;
    } else {
      // rq2 on one claim, counts 1..3 per gender
      GroupedScores g;
      g.claim_topic["c"] = "T";
      g.cells[CellKey{"c", Source::Human, Condition::Man, 0}] = draw(tiny(rng));
      g.cells[CellKey{"c", Source::Human, Condition::Woman, 0}] = draw(tiny(rng));
      g.cells[CellKey{"c", Source::Llm, Condition::Base, 1}] = draw(2);
      OracleResult oracle = exact_enumeration_oracle(g, "T", 1, TestKind::Rq2, settings);
      exact = oracle.p_value;
      estimate = rq2_bootstrap(g, "T", 1, settings).result.p_value;
    }
    const double tol = std::max(
        0.02, 3.0 * std::sqrt(exact * (1.0 - exact) / static_cast<double>(settings.B)));
    if (std::abs(estimate - exact) > tol) {
      return {Outcome::Fail, "instance " + std::to_string(instance) + ": |" +
                                 std::to_string(estimate) + " - " + std::to_string(exact) +
                                 "| > " + std::to_string(tol)};
    }
    ++checked;
  }
  const double elapsed = seconds_since(start);
  if (elapsed >= 120.0) {
    return {Outcome::Fail, "took " + std::to_string(elapsed) + "s (budget 120s)"};
  }
  return {Outcome::Pass, std::to_string(checked) + " instances in " +
                             std::to_string(elapsed) + "s"};
}

// ---------------------------------------------------------------------------
// shared pipeline fixtures

AuditConfig sample_config(const fs::path& out_dir) {
  const fs::path sample = SAMPLE_DATA_DIR;
  AuditConfig config;
  config.claims_path = (sample / "claims.csv").string();
  config.workers_path = (sample / "workers.csv").string();
  config.annotations_path = (sample / "annotations.csv").string();
  config.out_dir = out_dir.string();
  config.provider.kind = "mock";
  config.provider.mock_script = (sample / "mock_responses.json").string();
  config.provider.model = "mock-chat";
  config.bootstrap.B = 10000;
  config.bootstrap.seed = 42;
  return config;
}

// criterion 4: byte-identical machine reports from identical seeded runs

Outcome determinism() {
  const fs::path dir = scratch_dir();
  std::ostringstream log;
  AuditConfig a = sample_config(dir / "a");
  AuditConfig b = sample_config(dir / "b");
  if (run_audit(a, log).exit_code != 0) return {Outcome::Fail, "first run failed"};
  if (run_audit(b, log).exit_code != 0) return {Outcome::Fail, "second run failed"};
  const std::string ra = slurp(fs::path(a.out_dir) / kReportJsonFile);
  const std::string rb = slurp(fs::path(b.out_dir) / kReportJsonFile);
  if (ra.empty() || ra != rb) {
    return {Outcome::Fail, "reports differ between identical runs"};
  }
  return {Outcome::Pass, std::to_string(ra.size()) + " byte report reproduced"};
}

// criterion 5: all-constant data stays null under the non-strict rule

Outcome degenerate_data() {
  const fs::path dir = scratch_dir();

  DatasetBundle bundle;
  for (int t = 0; t < 2; ++t) {
    for (int c = 0; c < 2; ++c) {
      Claim claim;
      claim.claim_id = "t" + std::to_string(t) + "c" + std::to_string(c);
      claim.text = "constant claim";
      claim.topic = "Topic" + std::to_string(t);
      bundle.claims.push_back(claim);
    }
  }
  Claim gold;
  gold.claim_id = "gold1";
  gold.text = "constant gold";
  gold.topic = "Gold";
  gold.veracity = Veracity::False;  // rating 4 counts as "perceived false"
  gold.is_gold = true;
  bundle.claims.push_back(gold);

  const std::vector<std::pair<std::string, Gender>> workers = {
      {"m1", Gender::Man}, {"m2", Gender::Man}, {"w1", Gender::Woman}, {"w2", Gender::Woman}};
  for (const auto& [id, gender] : workers) {
    WorkerProfile w;
    w.worker_id = id;
    w.gender = gender;
    bundle.workers.push_back(w);
    for (const auto& claim : bundle.claims) {
      Annotation a;
      a.claim_id = claim.claim_id;
      a.source = Source::Human;
      a.condition = condition_from_gender(gender);
      a.worker_id = id;
      a.dimension = Dimension::GroupHarm;
      a.rating = 4;
      bundle.annotations.push_back(a);
      if (claim.is_gold) {
        Annotation pt = a;
        pt.dimension = Dimension::PerceivedTruth;
        bundle.annotations.push_back(pt);
      }
    }
  }
  save_dataset(bundle, dir / "claims.csv", dir / "workers.csv", dir / "annotations.csv");

  const fs::path script = dir / "mock.json";
  std::ofstream(script) << R"({"default": "4"})";

  AuditConfig config;
  config.claims_path = (dir / "claims.csv").string();
  config.workers_path = (dir / "workers.csv").string();
  config.annotations_path = (dir / "annotations.csv").string();
  config.out_dir = (dir / "out").string();
  config.provider.kind = "mock";
  config.provider.mock_script = script.string();
  config.bootstrap.B = 10000;
  config.bootstrap.seed = 5;
  config.bootstrap.inequality = Inequality::NonStrict;

  std::ostringstream log;
  RunOutcome outcome = run_audit(config, log);
  if (outcome.exit_code != 0 || !outcome.report) {
    return {Outcome::Fail, "pipeline failed on constant data"};
  }
  const AuditReport& report = *outcome.report;
  if (report.rq1.empty() || report.rq2.empty()) {
    return {Outcome::Fail, "no analysis rows produced"};
  }
  for (const auto& row : report.rq1) {
    if (row.result.value != 0.0) {
      return {Outcome::Fail,
              "E for " + row.result.topic + " is " + std::to_string(row.result.value)};
    }
    if (row.result.p_value != 1.0) {
      return {Outcome::Fail,
              "rq1 p for " + row.result.topic + " is " + std::to_string(row.result.p_value)};
    }
  }
  for (const auto& row : report.rq2) {
    if (row.result.value != 0.0) {
      return {Outcome::Fail,
              "D for " + row.result.topic + " is " + std::to_string(row.result.value)};
    }
    if (row.result.p_value != 1.0) {
      return {Outcome::Fail,
              "rq2 p for " + row.result.topic + " is " + std::to_string(row.result.p_value)};
    }
  }
  return {Outcome::Pass, std::to_string(report.rq1.size()) + " topic rows, all null"};
}

// criterion 6: the bundled sample runs end to end through the cli

Outcome end_to_end_sample() {
  const fs::path dir = scratch_dir();
  const fs::path out = dir / "out";
  AuditConfig config = sample_config(out);

  nlohmann::json cfg = {
      {"dataset",
       {{"claims", config.claims_path},
        {"workers", config.workers_path},
        {"annotations", config.annotations_path}}},
      {"out", out.string()},
      {"provider",
       {{"kind", "mock"}, {"script", config.provider.mock_script}, {"model", "mock-chat"}}},
      {"bootstrap", {{"B", 10000}, {"seed", 42}}},
  };
  const fs::path cfg_path = dir / "config.json";
  std::ofstream(cfg_path) << cfg.dump(2);

  const auto start = std::chrono::steady_clock::now();
  const std::string command = std::string(CLAIMAUDIT_BIN) + " run -c " + cfg_path.string() +
                              " > " + (dir / "stdout.txt").string() + " 2>&1";
  const int status = std::system(command.c_str());
  const double elapsed = seconds_since(start);
  const int exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (exit_code != 0) {
    return {Outcome::Fail,
            "cli exited " + std::to_string(exit_code) + ": " + slurp(dir / "stdout.txt")};
  }
  if (elapsed >= 60.0) {
    return {Outcome::Fail, "took " + std::to_string(elapsed) + "s (budget 60s)"};
  }

  nlohmann::json report;
  try {
    report = nlohmann::json::parse(slurp(out / kReportJsonFile));
  } catch (const std::exception& e) {
    return {Outcome::Fail, std::string("bad report.json: ") + e.what()};
  }
  if (report.value("incomplete", true)) return {Outcome::Fail, "report marked incomplete"};

  // topic-table shape: one row per (topic, variant) with stars derived
  // from the p column by the note's thresholds
  const std::string text = slurp(out / kReportTextFile);
  if (text.find("(*) p < 0.05") == std::string::npos) {
    return {Outcome::Fail, "report.txt lacks the significance note"};
  }
  std::size_t rows = 0;
  for (const char* section : {"rq1", "rq2"}) {
    for (const auto& row : report.at(section)) {
      ++rows;
      const double p = row.at("p_value").get<double>();
      if (row.at("stars").get<std::string>() != significance_stars(p)) {
        return {Outcome::Fail, "stars mismatch on " + row.at("topic").get<std::string>()};
      }
    }
  }
  for (const char* topic : {"Abortion", "Sports", "Gold"}) {
    if (text.find(topic) == std::string::npos) {
      return {Outcome::Fail, std::string("report.txt lacks topic ") + topic};
    }
  }
  if (rows != 12) {
    return {Outcome::Fail, "expected 12 analysis rows, got " + std::to_string(rows)};
  }
  return {Outcome::Pass, "cli run in " + std::to_string(elapsed) + "s, 12 starred rows"};
}

// criterion 7: reproduction against the released data, when supplied

Outcome conditional_reproduction() {
  const char* human_dir = std::getenv("CLAIMAUDIT_TOPICMISINFO_DIR");
  const char* llm_dir = std::getenv("CLAIMAUDIT_LLM_ARCHIVE_DIR");
  if (!human_dir || !llm_dir) {
    return {Outcome::Skip,
            "set CLAIMAUDIT_TOPICMISINFO_DIR (claims/workers/annotations csv) and "
            "CLAIMAUDIT_LLM_ARCHIVE_DIR (llm_annotations.csv) to enable"};
  }
  LoadReport loaded = load_dataset(fs::path(human_dir) / "claims.csv",
                                   fs::path(human_dir) / "workers.csv",
                                   fs::path(human_dir) / "annotations.csv");
  if (!loaded.ok()) return {Outcome::Fail, "released dataset failed validation"};
  DatasetBundle bundle = filter_workers(dedupe(loaded.bundle).bundle).bundle;

  LoadReport llm_loaded = load_dataset(fs::path(human_dir) / "claims.csv",
                                       fs::path(human_dir) / "workers.csv",
                                       fs::path(llm_dir) / "llm_annotations.csv");
  if (!llm_loaded.ok()) return {Outcome::Fail, "archived llm annotations failed validation"};

  std::vector<Annotation> all = bundle.annotations;
  all.insert(all.end(), llm_loaded.bundle.annotations.begin(),
             llm_loaded.bundle.annotations.end());
  GroupedScores grouped = zscore_normalize(bundle.claims, all, Dimension::GroupHarm, {});

  BootstrapSettings settings;
  settings.B = 10000;
  settings.seed = 42;
  TopicAnalysis rq1 = rq1_bootstrap(grouped, "Abortion", 1, settings);
  if (std::abs(rq1.result.value - 0.56) > 0.01) {
    return {Outcome::Fail, "Abortion E (prompt 1) = " + std::to_string(rq1.result.value)};
  }
  TopicAnalysis rq2 = rq2_bootstrap(grouped, "Abortion", 1, settings);
  if (std::abs(rq2.result.mse_man.value_or(-1) - 0.86) > 0.01 ||
      std::abs(rq2.result.mse_woman.value_or(-1) - 2.16) > 0.01) {
    return {Outcome::Fail, "Abortion MSEs = " + std::to_string(*rq2.result.mse_man) + "/" +
                               std::to_string(*rq2.result.mse_woman)};
  }
  if (rq2.result.p_value >= 0.001) {
    return {Outcome::Fail, "Abortion rq2 p = " + std::to_string(rq2.result.p_value)};
  }
  return {Outcome::Pass, "released-data checks matched"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"normalization-invariants", normalization_invariants},
      {"eq1-correctness", eq1_correctness},
      {"bootstrap-vs-oracle", bootstrap_vs_oracle},
      {"determinism", determinism},
      {"degenerate-data", degenerate_data},
      {"end-to-end-sample", end_to_end_sample},
      {"conditional-reproduction", conditional_reproduction},
  };

  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome outcome;
    try {
      outcome = fn();
    } catch (const std::exception& e) {
      outcome = {Outcome::Fail, std::string("exception: ") + e.what()};
    }
    const char* label = outcome.kind == Outcome::Pass   ? "PASS"
                        : outcome.kind == Outcome::Skip ? "SKIP"
                                                        : "FAIL";
    std::cout << label << " - " << name;
    if (!outcome.detail.empty()) std::cout << " (" << outcome.detail << ")";
    std::cout << "\n";
    if (outcome.kind == Outcome::Fail) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
