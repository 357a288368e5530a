#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "claimaudit/errors.hpp"
#include "claimaudit/report.hpp"
#include "claimaudit/version.hpp"

namespace {

using namespace claimaudit;

struct Overrides {
  std::optional<std::string> claims, workers, annotations, out;
  std::optional<std::string> dimension;
  std::optional<std::vector<int>> variants;
  std::optional<double> threshold;
  std::optional<int> gold_midpoint;
  std::optional<std::string> provider_kind, mock_script, model, endpoint, api_path, api_key_env;
  std::optional<double> temperature, rpm;
  std::optional<int> timeout, max_retries;
  std::optional<std::uint64_t> bootstrap_b, seed;
  std::optional<std::string> inequality, rq2_form;
  std::optional<bool> split_by_gender, pool_llm_variants;
  std::optional<std::string> prompts;
};

void add_override_flags(CLI::App* cmd, std::string& config_path, Overrides& o) {
  cmd->add_option("-c,--config", config_path, "JSON config file; flags override it");
  cmd->add_option("--claims", o.claims, "claims csv path");
  cmd->add_option("--workers", o.workers, "workers csv path");
  cmd->add_option("--annotations", o.annotations, "annotations csv path");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--dimension", o.dimension,
                  "prioritization|general_public|group_harm|perceived_truth");
  cmd->add_option("--variants", o.variants, "prompt variants to run (1 2)");
  cmd->add_option("--threshold", o.threshold, "gold accuracy threshold (strict >)");
  cmd->add_option("--gold-midpoint", o.gold_midpoint,
                  "ratings <= midpoint count as perceived true");
  cmd->add_option("--provider", o.provider_kind, "provider kind: mock|http|null");
  cmd->add_option("--mock-script", o.mock_script, "mock provider response script");
  cmd->add_option("--model", o.model, "model name");
  cmd->add_option("--endpoint", o.endpoint, "provider endpoint (scheme://host[:port])");
  cmd->add_option("--api-path", o.api_path, "provider request path");
  cmd->add_option("--api-key-env", o.api_key_env, "env var holding the API key");
  cmd->add_option("--temperature", o.temperature, "sampling temperature");
  cmd->add_option("--timeout", o.timeout, "request timeout seconds");
  cmd->add_option("--max-retries", o.max_retries, "retries per request/slot");
  cmd->add_option("--rpm", o.rpm, "client-side requests per minute");
  cmd->add_option("-B,--iterations", o.bootstrap_b, "bootstrap iterations");
  cmd->add_option("--seed", o.seed, "bootstrap master seed");
  cmd->add_option("--inequality", o.inequality, "strict|non_strict exceedance");
  cmd->add_option("--rq2-form", o.rq2_form, "absolute|signed rq2 statistic");
  cmd->add_flag("--split-by-gender{true},--no-split-by-gender{false}", o.split_by_gender,
                "z-score groups split by gender/condition");
  cmd->add_flag("--pool-llm-variants{true},--no-pool-llm-variants{false}",
                o.pool_llm_variants, "pool llm prompt variants into one z-score group");
  cmd->add_option("--prompts", o.prompts, "prompt template/refusal config file");
}

AuditConfig make_config(const std::string& config_path, const Overrides& o) {
  AuditConfig config;
  if (!config_path.empty()) config = load_audit_config(config_path);
  if (o.claims) config.claims_path = *o.claims;
  if (o.workers) config.workers_path = *o.workers;
  if (o.annotations) config.annotations_path = *o.annotations;
  if (o.out) config.out_dir = *o.out;
  if (o.dimension) {
    auto dim = dimension_from_string(*o.dimension);
    if (!dim) throw AuditError(ErrorCode::ConfigError, "unknown dimension " + *o.dimension);
    config.dimension = *dim;
  }
  if (o.variants) config.variants = *o.variants;
  if (o.threshold) config.filter_threshold = *o.threshold;
  if (o.gold_midpoint) config.gold_midpoint = *o.gold_midpoint;
  if (o.provider_kind) config.provider.kind = *o.provider_kind;
  if (o.mock_script) config.provider.mock_script = *o.mock_script;
  if (o.model) config.provider.model = *o.model;
  if (o.endpoint) config.provider.endpoint = *o.endpoint;
  if (o.api_path) config.provider.path = *o.api_path;
  if (o.api_key_env) config.provider.api_key_env = *o.api_key_env;
  if (o.temperature) config.provider.temperature = *o.temperature;
  if (o.timeout) config.provider.timeout_seconds = *o.timeout;
  if (o.max_retries) config.provider.max_retries = *o.max_retries;
  if (o.rpm) config.provider.requests_per_minute = *o.rpm;
  if (o.bootstrap_b) config.bootstrap.B = *o.bootstrap_b;
  if (o.seed) config.bootstrap.seed = *o.seed;
  if (o.inequality) {
    if (*o.inequality == "strict") {
      config.bootstrap.inequality = Inequality::Strict;
    } else if (*o.inequality == "non_strict") {
      config.bootstrap.inequality = Inequality::NonStrict;
    } else {
      throw AuditError(ErrorCode::ConfigError, "inequality must be strict or non_strict");
    }
  }
  if (o.rq2_form) {
    if (*o.rq2_form == "absolute") {
      config.bootstrap.rq2_form = Rq2Form::Absolute;
    } else if (*o.rq2_form == "signed") {
      config.bootstrap.rq2_form = Rq2Form::Signed;
    } else {
      throw AuditError(ErrorCode::ConfigError, "rq2_form must be absolute or signed");
    }
  }
  if (o.split_by_gender) config.zscore.split_by_gender = *o.split_by_gender;
  if (o.pool_llm_variants) config.zscore.pool_llm_variants = *o.pool_llm_variants;
  if (o.prompts) config.prompt_config_path = *o.prompts;
  for (int v : config.variants) {
    if (v != 1 && v != 2) {
      throw AuditError(ErrorCode::ConfigError, "prompt variants must be 1 or 2");
    }
  }
  return config;
}

int exit_code_for(const AuditError& e) {
  switch (e.code()) {
    case ErrorCode::ProviderUnreachable:
    case ErrorCode::RateLimited:
      return 2;
    case ErrorCode::CoverageGap:
      return 3;
    default:
      return 1;
  }
}

GroupedScores grouped_from_outputs(const AuditConfig& config) {
  DatasetBundle retained = read_retained(config);
  std::vector<Annotation> llm = read_llm_annotations(config, retained);
  std::vector<Annotation> all = retained.annotations;
  all.insert(all.end(), llm.begin(), llm.end());
  return zscore_normalize(retained.claims, all, config.dimension, config.zscore);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(kToolName) +
               " - audits how LLM claim annotations track demographic differences "
               "in human annotations"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  std::string config_path;
  Overrides o;
  CLI::App* cmd_ingest = app.add_subcommand(
      "ingest", "load, validate, dedupe and gold-filter the dataset");
  CLI::App* cmd_collect = app.add_subcommand(
      "collect", "plan and run count-matched LLM annotation collection");
  CLI::App* cmd_rq1 = app.add_subcommand(
      "analyze-rq1", "gender-conditioned divergence bootstrap test");
  CLI::App* cmd_rq2 = app.add_subcommand(
      "analyze-rq2", "neutral-prompt alignment bootstrap test");
  CLI::App* cmd_report = app.add_subcommand(
      "report", "assemble the report from persisted stage outputs");
  CLI::App* cmd_oracle = app.add_subcommand(
      "oracle", "exact enumeration p-value for small instances");
  CLI::App* cmd_run = app.add_subcommand("run", "full pipeline: ingest through report");
  for (CLI::App* cmd :
       {cmd_ingest, cmd_collect, cmd_rq1, cmd_rq2, cmd_report, cmd_oracle, cmd_run}) {
    add_override_flags(cmd, config_path, o);
  }

  std::string oracle_topic;
  std::string oracle_test = "rq1";
  int oracle_variant = 1;
  std::uint64_t oracle_budget = 1000000;
  cmd_oracle->add_option("--topic", oracle_topic, "topic to enumerate")->required();
  cmd_oracle->add_option("--test", oracle_test, "rq1|rq2");
  cmd_oracle->add_option("--variant", oracle_variant, "prompt variant");
  cmd_oracle->add_option("--budget", oracle_budget, "max enumeration assignments");

  CLI11_PARSE(app, argc, argv);

  try {
    AuditConfig config = make_config(config_path, o);

    if (cmd_run->parsed()) {
      return run_audit(config, std::cout).exit_code;
    }
    if (cmd_ingest->parsed()) {
      DirLock lock(config.out_dir);
      stage_ingest(config, std::cout);
      return 0;
    }
    if (cmd_collect->parsed()) {
      DirLock lock(config.out_dir);
      DatasetBundle retained = read_retained(config);
      CollectOutput collected = stage_collect(config, retained, std::cout);
      return collected.coverage.complete() ? 0 : 3;
    }
    if (cmd_rq1->parsed() || cmd_rq2->parsed()) {
      DirLock lock(config.out_dir);
      GroupedScores grouped = grouped_from_outputs(config);
      stage_analyze(config, grouped, cmd_rq1->parsed() ? TestKind::Rq1 : TestKind::Rq2,
                    std::cout);
      return 0;
    }
    if (cmd_report->parsed()) {
      DirLock lock(config.out_dir);
      return stage_report(config, std::cout).exit_code;
    }
    if (cmd_oracle->parsed()) {
      DirLock lock(config.out_dir);
      GroupedScores grouped = grouped_from_outputs(config);
      const TestKind kind = oracle_test == "rq2" ? TestKind::Rq2 : TestKind::Rq1;
      OracleResult result = exact_enumeration_oracle(grouped, oracle_topic, oracle_variant,
                                                     kind, config.bootstrap, oracle_budget);
      double observed = 0.0;
      if (kind == TestKind::Rq1) {
        observed = topic_divergence(grouped, oracle_topic, oracle_variant).value;
      } else {
        observed = alignment_gap(grouped, oracle_topic, oracle_variant).d_hat;
      }
      nlohmann::json out = {{"topic", oracle_topic},
                            {"test", oracle_test},
                            {"prompt_variant", oracle_variant},
                            {"observed", observed},
                            {"exact_p_value", result.p_value},
                            {"assignments", result.assignments}};
      std::cout << out.dump(2) << "\n";
      return 0;
    }
  } catch (const AuditError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
