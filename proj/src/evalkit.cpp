#include "forge/evalkit.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "forge/errors.hpp"

namespace forge {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_open_mark(char c) { return c == '(' || c == '[' || c == '{' || c == '"' || c == '\'' || c == '*'; }

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Reads the option letter that follows an "answer is" clause starting at pos.
std::optional<char> letter_after(std::string_view raw, std::string_view lower, std::size_t pos) {
  bool bracketed = false;
  while (pos < raw.size() && (is_space(raw[pos]) || raw[pos] == ':' || is_open_mark(raw[pos]))) {
    bracketed = bracketed || is_open_mark(raw[pos]);
    ++pos;
  }
  if (lower.substr(pos, 6) == "option") {
    pos += 6;
    while (pos < raw.size() && (is_space(raw[pos]) || raw[pos] == ':' || is_open_mark(raw[pos]))) {
      bracketed = bracketed || is_open_mark(raw[pos]);
      ++pos;
    }
  }
  if (pos >= raw.size()) return std::nullopt;
  const char c = raw[pos];
  const char next = pos + 1 < raw.size() ? raw[pos + 1] : '\0';
  if (next != '\0' && is_alnum(next)) return std::nullopt;
  if (c >= 'A' && c <= 'D') return c;
  if (c >= 'a' && c <= 'd') {
    // "the answer is a chair": a bare lowercase letter followed by a space is an article.
    if (!bracketed && (next == '\0' ? false : is_space(next))) return std::nullopt;
    return static_cast<char>(c - 'a' + 'A');
  }
  return std::nullopt;
}

std::int64_t checked_i64(__int128 v) {
  if (v > INT64_MAX || v < INT64_MIN) throw std::overflow_error("rational overflow");
  return static_cast<std::int64_t>(v);
}

}  // namespace

std::string_view to_string(PromptVariant v) {
  switch (v) {
    case PromptVariant::vanilla: return "vanilla";
    case PromptVariant::implicit_stepwise: return "implicit_stepwise";
    case PromptVariant::implicit_multiview: return "implicit_multiview";
    case PromptVariant::explicit_stepwise: return "explicit_stepwise";
    case PromptVariant::explicit_multiview: return "explicit_multiview";
  }
  return "vanilla";
}

std::optional<PromptVariant> parse_prompt_variant(std::string_view s) {
  std::string norm(s);
  std::replace(norm.begin(), norm.end(), '-', '_');
  for (PromptVariant v : kAllPromptVariants) {
    if (to_string(v) == norm) return v;
  }
  return std::nullopt;
}

std::string render_prompt(PromptVariant variant, std::string_view question, const OptionSet& options) {
  std::string out(question);
  out += '\n';
  for (std::size_t i = 0; i < 4; ++i) out += fmt::format("{}. {}\n", kLetters[i], options[i]);

  using namespace prompt_text;
  switch (variant) {
    case PromptVariant::vanilla:
      out += kLetterInstruction;
      break;
    case PromptVariant::implicit_stepwise:
      out += fmt::format("{} {}\n{}", kStepwise, kImplicitClose, kLetterInstruction);
      break;
    case PromptVariant::implicit_multiview:
      out += fmt::format("{} {}\n{}", kMultiView, kImplicitClose, kLetterInstruction);
      break;
    case PromptVariant::explicit_stepwise:
      out += fmt::format("{} {}", kStepwise, kExplicitClose);
      break;
    case PromptVariant::explicit_multiview:
      out += fmt::format("{} {}", kMultiView, kExplicitClose);
      break;
  }
  return out;
}

std::optional<char> extract_answer(std::string_view raw) {
  const std::string lower = lowercase(raw);
  static constexpr std::string_view kClause = "answer is";
  std::optional<char> found;
  for (std::size_t pos = lower.find(kClause); pos != std::string::npos; pos = lower.find(kClause, pos + 1)) {
    if (auto letter = letter_after(raw, lower, pos + kClause.size())) found = letter;
  }
  if (found) return found;

  // Standalone letter, optionally wrapped: "C", "(C)", "C.", "**C**".
  std::size_t b = 0, e = raw.size();
  while (b < e && is_space(raw[b])) ++b;
  while (e > b && is_space(raw[e - 1])) --e;
  while (b < e && (raw[b] == '(' || raw[b] == '[' || raw[b] == '*')) ++b;
  while (e > b && (raw[e - 1] == '.' || raw[e - 1] == ':')) --e;
  while (e > b && (raw[e - 1] == ')' || raw[e - 1] == ']' || raw[e - 1] == '*')) --e;
  while (b < e && is_space(raw[b])) ++b;
  while (e > b && is_space(raw[e - 1])) --e;
  if (e - b == 1) {
    const char c = raw[b];
    if (c >= 'A' && c <= 'D') return c;
    if (c >= 'a' && c <= 'd') return static_cast<char>(c - 'a' + 'A');
  }
  return std::nullopt;
}

nlohmann::ordered_json result_to_json(const EvalResult& r) {
  nlohmann::ordered_json j;
  j["item_id"] = r.item_id;
  j["raw_response"] = r.raw_response;
  j["extracted"] = r.extracted ? nlohmann::ordered_json(std::string(1, *r.extracted)) : nlohmann::ordered_json();
  j["correct"] = r.correct ? nlohmann::ordered_json(*r.correct) : nlohmann::ordered_json();
  j["retries"] = r.retries;
  j["error"] = r.error ? nlohmann::ordered_json(*r.error) : nlohmann::ordered_json();
  return j;
}

EvalResult result_from_json(const nlohmann::json& j) {
  EvalResult r;
  r.item_id = j.at("item_id").get<std::string>();
  r.raw_response = j.value("raw_response", std::string());
  if (j.contains("extracted") && j["extracted"].is_string()) {
    const auto s = j["extracted"].get<std::string>();
    if (s.size() == 1) r.extracted = s[0];
  }
  if (j.contains("correct") && j["correct"].is_boolean()) r.correct = j["correct"].get<bool>();
  r.retries = j.value("retries", 0);
  if (j.contains("error") && j["error"].is_string()) r.error = j["error"].get<std::string>();
  return r;
}

std::vector<EvalResult> load_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open results " + path.string());
  std::vector<EvalResult> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(result_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

void write_results(const std::filesystem::path& path, std::span<const EvalResult> results) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : results) out << result_to_json(r).dump() << '\n';
}

ScoreReport score(std::span<const EvalResult> results, const Manifest& manifest, std::string run_label) {
  ScoreReport report;
  report.run_label = std::move(run_label);
  for (const EvalResult& r : results) {
    const QAItem* item = manifest.find(r.item_id);
    if (!item) throw UnknownItem("result refers to unknown item " + r.item_id);
    // Re-extract when the stored letter is missing so hand-written files score too.
    const std::optional<char> letter = r.extracted ? r.extracted : extract_answer(r.raw_response);
    for (ScoreCounts* c : {&report.per_task[item->task], &report.overall}) {
      ++c->total;
      if (letter) {
        ++c->answered;
        if (*letter == item->answer) ++c->correct;
      } else {
        ++c->unparseable;
      }
    }
  }
  return report;
}

nlohmann::ordered_json report_to_json(const ScoreReport& report) {
  auto counts = [](const ScoreCounts& c) {
    nlohmann::ordered_json j;
    j["accuracy"] = c.accuracy();
    j["total"] = c.total;
    j["correct"] = c.correct;
    j["answered"] = c.answered;
    j["unparseable"] = c.unparseable;
    return j;
  };
  nlohmann::ordered_json j;
  j["run_label"] = report.run_label;
  j["overall"] = counts(report.overall);
  nlohmann::ordered_json per_task;
  for (const auto& [task, c] : report.per_task) per_task[std::string(to_string(task))] = counts(c);
  j["per_task"] = std::move(per_task);
  return j;
}

Rational Rational::make(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::domain_error("zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  return g > 1 ? Rational{num / g, den / g} : Rational{num, den};
}

Rational operator+(const Rational& a, const Rational& b) {
  const __int128 num = static_cast<__int128>(a.num) * b.den + static_cast<__int128>(b.num) * a.den;
  const __int128 den = static_cast<__int128>(a.den) * b.den;
  __int128 x = num < 0 ? -num : num, y = den;
  while (y != 0) {
    const __int128 t = x % y;
    x = y;
    y = t;
  }
  const __int128 g = x == 0 ? 1 : x;
  return Rational::make(checked_i64(num / g), checked_i64(den / g));
}

Rational operator-(const Rational& a, const Rational& b) { return a + Rational{-b.num, b.den}; }

std::vector<DeltaRow> delta_table(std::span<const ScoreReport> reports) {
  std::vector<std::string> tasks;
  for (TaskKind t : kAllTasks) {
    const bool present = std::any_of(reports.begin(), reports.end(),
                                     [&](const ScoreReport& r) { return r.per_task.contains(t); });
    if (present) tasks.emplace_back(to_string(t));
  }
  tasks.emplace_back("overall");

  auto pct = [](const ScoreReport& r, const std::string& task) {
    const ScoreCounts* c = &r.overall;
    if (task != "overall") {
      const auto it = r.per_task.find(*parse_task(task));
      if (it == r.per_task.end()) return Rational{0, 1};
      c = &it->second;
    }
    return c->total == 0 ? Rational{0, 1} : Rational::make(100 * c->correct, c->total);
  };

  std::vector<DeltaRow> rows;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    for (const auto& task : tasks) {
      DeltaRow row{reports[i].run_label, task, pct(reports[i], task), std::nullopt};
      if (i > 0) row.delta_pp = row.accuracy_pct - pct(reports[i - 1], task);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string deltas_csv(std::span<const DeltaRow> rows) {
  std::string out = "run_label,task,accuracy,delta\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{:.4f},{}\n", r.run_label, r.task, r.accuracy_pct.value(),
                       r.delta_pp ? fmt::format("{:+.4f}", r.delta_pp->value()) : std::string());
  }
  return out;
}

}  // namespace forge
