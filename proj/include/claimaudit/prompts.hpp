#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "claimaudit/types.hpp"

namespace claimaudit {

enum class Conditioning { Gendered, Neutral };

/// Prompt templates and refusal phrases. Defaults are embedded; a config
/// file can override any part.
struct PromptConfig {
  std::string gendered_1;
  std::string gendered_2;
  std::string neutral_1;
  std::string neutral_2;
  std::vector<std::string> refusal_phrases;

  const std::string& body(int variant, Conditioning conditioning) const;
};

PromptConfig default_prompt_config();

/// Loads overrides from a JSON file; fields not present keep their defaults.
PromptConfig load_prompt_config(const std::filesystem::path& path);

/// Question text per assessment dimension, as given to annotators.
const std::string& dimension_question(Dimension d);

/// Fills the {gender}, {question} and {claim} slots of the selected template.
/// The group-harm question is the one the templates were written around;
/// other dimensions swap their question text into the same scaffold.
std::string render_prompt(int variant, Conditioning conditioning,
                          const std::optional<std::string>& gender,
                          const std::string& claim_text,
                          Dimension dimension = Dimension::GroupHarm,
                          const PromptConfig& config = default_prompt_config());

struct ParsedResponse {
  std::optional<int> rating;  // 1..6
  bool refusal = false;
  std::string raw_text;
};

/// Extracts the first standalone integer in 1..6; failing that, checks the
/// refusal phrase list. Returns nullopt when neither applies.
std::optional<ParsedResponse> try_parse_rating(
    const std::string& raw_text,
    const std::vector<std::string>& refusal_phrases = default_prompt_config().refusal_phrases);

/// Same as try_parse_rating but throws AuditError(ParseFailure).
ParsedResponse parse_rating(
    const std::string& raw_text,
    const std::vector<std::string>& refusal_phrases = default_prompt_config().refusal_phrases);

}  // namespace claimaudit
