#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "forge/manifest.hpp"
#include "forge/taskgen.hpp"

namespace forge {

enum class PromptVariant { vanilla, implicit_stepwise, implicit_multiview, explicit_stepwise, explicit_multiview };

inline constexpr std::array<PromptVariant, 5> kAllPromptVariants = {
    PromptVariant::vanilla, PromptVariant::implicit_stepwise, PromptVariant::implicit_multiview,
    PromptVariant::explicit_stepwise, PromptVariant::explicit_multiview};

std::string_view to_string(PromptVariant v);
// Accepts both "implicit_stepwise" and "implicit-stepwise".
std::optional<PromptVariant> parse_prompt_variant(std::string_view s);

// Reasoning-injection sentences, verbatim.
namespace prompt_text {
inline constexpr std::string_view kStepwise = "Let's think step by step before answering the question!";
inline constexpr std::string_view kMultiView =
    "Before answering, compare the two images to identify the same objects across different viewpoints. "
    "Analyze how each object's appearance, position, and visibility change due to the viewpoint shift. "
    "Use this comparison to resolve spatial ambiguities. Think step by step. Ensure your reasoning is "
    "consistent and grounded in visual evidence from all views. Only after this reasoning, choose the "
    "correct answer.";
inline constexpr std::string_view kImplicitClose =
    "And you should perform your step-by-step reasoning privately and not reveal it to the user.";
inline constexpr std::string_view kExplicitClose =
    "Please briefly show your reasoning process (within 500 words if possible), and conclude your answer "
    "in the format: 'The answer is A/B/C/D'.";
inline constexpr std::string_view kLetterInstruction =
    "Answer with the option's letter (A, B, C, or D) from the given choices.";
}  // namespace prompt_text

std::string render_prompt(PromptVariant variant, std::string_view question, const OptionSet& options);

// Last "answer is X" clause wins; otherwise a lone letter such as "C",
// "(C)" or "C."; otherwise nothing.
std::optional<char> extract_answer(std::string_view raw);

struct EvalResult {
  std::string item_id;
  std::string raw_response;
  std::optional<char> extracted;
  std::optional<bool> correct;  // set iff extracted is set and the item was joined
  int retries = 0;
  std::optional<std::string> error;
};

nlohmann::ordered_json result_to_json(const EvalResult& r);
EvalResult result_from_json(const nlohmann::json& j);
std::vector<EvalResult> load_results(const std::filesystem::path& path);
void write_results(const std::filesystem::path& path, std::span<const EvalResult> results);

struct ScoreCounts {
  std::int64_t total = 0;
  std::int64_t correct = 0;
  std::int64_t answered = 0;
  std::int64_t unparseable = 0;

  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

struct ScoreReport {
  std::string run_label;
  std::map<TaskKind, ScoreCounts> per_task;
  ScoreCounts overall;
};

// Unparseable responses count as incorrect. Throws UnknownItem.
ScoreReport score(std::span<const EvalResult> results, const Manifest& manifest, std::string run_label);

nlohmann::ordered_json report_to_json(const ScoreReport& report);

// Exact fraction with a positive denominator.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t num, std::int64_t den);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend bool operator==(const Rational&, const Rational&) = default;
};

struct DeltaRow {
  std::string run_label;
  std::string task;  // task name or "overall"
  Rational accuracy_pct;
  std::optional<Rational> delta_pp;  // absent for the first run
};

// Percentage-point change versus the preceding report, per task and overall.
std::vector<DeltaRow> delta_table(std::span<const ScoreReport> reports);

std::string deltas_csv(std::span<const DeltaRow> rows);

}  // namespace forge
