#include "forge/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "forge/errors.hpp"
#include "forge/evalkit.hpp"
#include "forge/infer.hpp"
#include "forge/manifest.hpp"
#include "forge/ropelab.hpp"
#include "forge/taskgen.hpp"

namespace forge::cli {
namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Mulset scale: 38.2k items over 5.2k scenes, 30k of them in train.
constexpr std::int64_t kMulsetScenes = 5200;
constexpr std::int64_t kMulsetItems = 38200;
constexpr std::int64_t kMulsetTrain = 30000;

template <typename... Args>
void note(const RunConfig& rc, int level, fmt::format_string<Args...> f, Args&&... args) {
  if (rc.verbosity >= level) fmt::print(stderr, "{}\n", fmt::format(f, std::forward<Args>(args)...));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string::npos ? s.size() : comma;
    std::string part = s.substr(start, end - start);
    part.erase(0, part.find_first_not_of(" \t"));
    part.erase(part.find_last_not_of(" \t") + 1);
    if (!part.empty()) out.push_back(std::move(part));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// Refuses to reuse a non-empty output directory unless forced; with --force
// only the files this subcommand writes are cleared.
void prepare_out_dir(const RunConfig& rc, std::initializer_list<const char*> outputs, bool allow_existing = false) {
  const fs::path& out = rc.out_dir;
  if (fs::exists(out)) {
    if (!fs::is_directory(out)) throw UsageError(fmt::format("--out {} exists and is not a directory", out.string()));
    if (!fs::is_empty(out) && !rc.force && !allow_existing) {
      throw UsageError(fmt::format("output directory {} is not empty (use --force to overwrite)", out.string()));
    }
    if (rc.force && !allow_existing) {
      for (const char* name : outputs) fs::remove_all(out / name);
    }
  }
  fs::create_directories(out);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
}

struct CommonFlags {
  std::string out;
  std::string config;  // consumed by expand_config before parsing
  bool force = false;
  int verbose = 0;
  bool quiet = false;

  void attach(CLI::App* sub, bool out_required = true) {
    auto* o = sub->add_option("--out", out, "Output directory");
    if (out_required) o->required();
    sub->add_flag("--force", force, "Overwrite existing outputs");
    sub->add_flag("-v,--verbose", verbose, "More diagnostics on stderr");
    sub->add_flag("-q,--quiet", quiet, "Only errors on stderr");
    sub->add_option("--config", config, "Flat key=value file using flag names as keys");
  }

  RunConfig resolve(std::string name) const {
    return {std::move(name), fs::absolute(out), force, quiet ? 0 : 1 + (verbose > 0 ? 1 : 0)};
  }
};

struct GenerateFlags {
  CommonFlags common;
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> scenes;
  std::optional<std::int64_t> items;
  std::optional<std::string> per_task;
  std::optional<double> min_area_ratio;
  std::optional<double> angle_thresh;
  std::optional<double> train_frac;
  std::optional<unsigned> threads;
};

int cmd_generate(const GenerateFlags& f) {
  const RunConfig rc = f.common.resolve("generate");
  SceneConfig scene_cfg;
  GenConfig gen;
  std::optional<std::int64_t> items;

  if (f.preset) {
    gen.scenes = kMulsetScenes;
    items = kMulsetItems;
    gen.train_fraction = static_cast<double>(kMulsetTrain) / kMulsetItems;
  }
  if (f.seed) scene_cfg.seed = gen.seed = *f.seed;
  if (f.items) items = *f.items;
  if (f.per_task) {
    const auto parts = split_list(*f.per_task);
    if (parts.size() != 3) throw UsageError("--per-task expects three comma-separated counts");
    TaskCounts counts;
    for (std::size_t i = 0; i < 3; ++i) {
      try {
        counts.values[i] = std::stoll(parts[i]);
      } catch (const std::exception&) {
        throw UsageError(fmt::format("--per-task: '{}' is not an integer", parts[i]));
      }
    }
    if (f.items && counts.total() != *f.items) {
      throw UsageError(fmt::format("--per-task sums to {} but --items is {}", counts.total(), *f.items));
    }
    gen.target_counts = counts;
  } else if (items) {
    if (*items < 0) throw UsageError("--items must be >= 0");
    gen.target_counts = TaskCounts::even_split(*items);
  }
  if (f.scenes) {
    gen.scenes = *f.scenes;
  } else if (!f.preset && (f.items || f.per_task)) {
    // Keep the preset's items-per-scene density.
    const auto total = gen.target_counts.total();
    gen.scenes = std::max<std::int64_t>(1, (total * kMulsetScenes + kMulsetItems - 1) / kMulsetItems);
  }
  if (f.min_area_ratio) gen.min_area_ratio = *f.min_area_ratio;
  if (f.angle_thresh) gen.angle_thresh_deg = *f.angle_thresh;
  if (f.train_frac) gen.train_fraction = *f.train_frac;
  if (f.threads) gen.threads = *f.threads;
  scene_cfg.validate();
  gen.validate();

  prepare_out_dir(rc, {"dataset.jsonl", "manifest_header.json", "generation_stats.json", "images"});
  note(rc, 2, "generating {} items over {} scenes (seed {}) into {}", gen.target_counts.total(), gen.scenes, gen.seed,
       rc.out_dir.string());
  const auto t0 = std::chrono::steady_clock::now();
  const BuildSummary s = build_dataset(scene_cfg, gen, rc.out_dir);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  note(rc, 1, "wrote {} items ({} train / {} test) from {} scenes in {:.1f}s", s.items, s.train, s.test,
       s.scenes_used, secs);
  for (TaskKind t : kAllTasks) note(rc, 2, "  {}: {}", to_string(t), s.per_task[t]);
  for (const auto& [why, n] : s.rejections) note(rc, 2, "  rejected {}: {}", why, n);
  return kExitOk;
}

struct EvaluateFlags {
  CommonFlags common;
  std::string manifest;
  std::string split = "all";
  std::string prompt = "vanilla";
  std::string endpoint;
  std::string model = "default";
  std::string mock;
  int parallelism = 1;
  double timeout = 120.0;
  int max_retries = 4;
  double temperature = 0.0;
  std::int64_t request_seed = 1;
  bool resume = false;
};

int cmd_evaluate(const EvaluateFlags& f) {
  const RunConfig rc = f.common.resolve("evaluate");
  if (f.endpoint.empty() == f.mock.empty()) throw UsageError("exactly one of --endpoint or --mock is required");
  const auto variant = parse_prompt_variant(f.prompt);
  if (!variant) throw UsageError(fmt::format("unknown --prompt '{}'", f.prompt));

  EndpointConfig endpoint;
  endpoint.base_url = f.mock.empty() ? f.endpoint : "mock://" + f.mock;
  endpoint.model_name = f.model;
  if (const char* key = std::getenv("FORGE_API_KEY")) endpoint.api_key = key;
  endpoint.parallelism = f.parallelism;
  endpoint.timeout_s = f.timeout;
  endpoint.max_retries = f.max_retries;
  endpoint.temperature = f.temperature;
  endpoint.request_seed = f.request_seed;
  endpoint.validate();

  const Manifest manifest = load_manifest(fs::absolute(f.manifest));
  std::unique_ptr<Transport> transport =
      f.mock.empty() ? std::unique_ptr<Transport>(std::make_unique<HttpTransport>(endpoint))
                     : make_mock_transport(f.mock, manifest);

  prepare_out_dir(rc, {"results.jsonl"}, f.resume);
  EvaluateOptions options;
  if (f.split != "all") options.split = f.split;
  options.variant = *variant;
  options.resume = f.resume;

  const auto results = evaluate_dataset(manifest, endpoint, *transport, options, rc.out_dir / "results.jsonl");
  const auto failed = std::count_if(results.begin(), results.end(), [](const EvalResult& r) { return r.error.has_value(); });
  note(rc, 1, "evaluated {} items ({} failed) with prompt {}", results.size(), failed, to_string(*variant));
  return kExitOk;
}

struct ScoreFlags {
  CommonFlags common;
  std::string manifest;
  std::vector<std::string> results;
  std::string labels;
  bool deltas = false;
};

std::string default_label(const fs::path& results) {
  // r.jsonl -> "r"; runs/qwen/results.jsonl -> "qwen".
  const std::string stem = results.stem().string();
  if (stem == "results" && results.has_parent_path() && !results.parent_path().filename().empty()) {
    return results.parent_path().filename().string();
  }
  return stem;
}

int cmd_score(const ScoreFlags& f) {
  const RunConfig rc = f.common.resolve("score");
  std::vector<std::string> labels = split_list(f.labels);
  if (!labels.empty() && labels.size() != f.results.size()) {
    throw UsageError(fmt::format("--labels has {} entries for {} results files", labels.size(), f.results.size()));
  }
  if (f.deltas && f.results.size() < 2) throw UsageError("--deltas needs at least two --results files");
  if (labels.empty()) {
    for (const auto& r : f.results) labels.push_back(default_label(fs::absolute(r)));
  }

  const Manifest manifest = load_manifest(fs::absolute(f.manifest));
  std::vector<ScoreReport> reports;
  for (std::size_t i = 0; i < f.results.size(); ++i) {
    reports.push_back(score(load_results(fs::absolute(f.results[i])), manifest, labels[i]));
  }

  prepare_out_dir(rc, {"report.json", "deltas.csv"});
  nlohmann::ordered_json doc;
  if (reports.size() == 1) {
    doc = report_to_json(reports.front());
  } else {
    doc = nlohmann::ordered_json::array();
    for (const auto& r : reports) doc.push_back(report_to_json(r));
  }
  write_text(rc.out_dir / "report.json", doc.dump(2) + "\n");
  if (f.deltas) write_text(rc.out_dir / "deltas.csv", deltas_csv(delta_table(reports)));
  for (const auto& r : reports) {
    note(rc, 1, "{}: {}/{} correct ({:.4f}), {} unparseable", r.run_label, r.overall.correct, r.overall.total,
         r.overall.accuracy(), r.overall.unparseable);
  }
  return kExitOk;
}

struct RopeFlags {
  CommonFlags common;
  bool suite = false;
  std::uint64_t seed = 1;
  int grid_size = 8;
  int trials = 500;
  int head_dim = 64;
  double base = 10000.0;
  std::optional<std::string> strategy;
  std::string dims;
  std::string scope = "both";
  std::optional<std::string> reference;
  std::uint64_t ablation_seed = 0;
  unsigned threads = 0;
};

int cmd_ropelab(const RopeFlags& f) {
  using namespace forge::rope;
  const RunConfig rc = f.common.resolve("ropelab");
  nlohmann::ordered_json doc;
  bool ok = true;

  if (f.suite) {
    prepare_out_dir(rc, {"report.json"});
    const auto t0 = std::chrono::steady_clock::now();
    SuiteOptions options;
    options.seed = f.seed;
    const auto checks = property_suite(options);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    doc = suite_to_json(checks, secs);
    for (const auto& c : checks) {
      ok = ok && c.passed;
      note(rc, c.passed ? 2 : 0, "{} {} ({} cases, worst {:.3g})", c.passed ? "pass" : "FAIL", c.name, c.cases, c.worst);
    }
  } else {
    std::optional<AblationSpec> spec;
    if (f.strategy) {
      AblationSpec s;
      s.strategy = *parse_strategy(*f.strategy);
      for (const auto& d : split_list(f.dims)) {
        const auto dim = parse_dim(d);
        if (!dim) throw UsageError(fmt::format("unknown dimension '{}'", d));
        s.dims.push_back(*dim);
      }
      s.scope = *parse_scope(f.scope);
      if (f.reference) s.reference = parse_reference(*f.reference);
      s.rng_seed = f.ablation_seed;
      try {
        s.validate(scheme_dims(Scheme::rope2d));
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      spec = s;
    } else if (!f.dims.empty() || f.reference) {
      throw UsageError("--dims/--reference need --strategy");
    }
    if (f.grid_size < 4 || f.trials < 100) throw UsageError("probe needs --grid-size >= 4 and --trials >= 100");
    prepare_out_dir(rc, {"report.json"});
    ProbeOptions options;
    options.head_dim = f.head_dim;
    options.base = f.base;
    options.content_seed = f.seed;
    options.threads = f.threads;
    const ProbeReport report = directional_probe(f.grid_size, f.trials, spec, options);
    doc = probe_to_json(report);
    note(rc, 1, "{}: horizontal {:.6g} -> {:.6g}, vertical {:.6g} -> {:.6g}", spec ? spec->label() : "baseline",
         report.baseline_horizontal, report.horizontal_margin, report.baseline_vertical, report.vertical_margin);
  }
  write_text(rc.out_dir / "report.json", doc.dump(2) + "\n");
  if (!ok) {
    fmt::print(stderr, "error: property suite failed\n");
    return kExitRuntime;
  }
  return kExitOk;
}

std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t\r"));
  s.erase(s.find_last_not_of(" \t\r") + 1);
  return s;
}

// Applies a subcommand's --config file: every key names a long flag of that
// subcommand, and keys already given on the command line are left alone so
// explicit flags win. (CLI11 only reads config files on the top-level app.)
void expand_config(CLI::App& app, std::vector<std::string>& args) {
  CLI::App* sub = nullptr;
  std::size_t sub_pos = 0;
  for (std::size_t i = 0; i < args.size() && !sub; ++i) {
    if (args[i].starts_with("-")) continue;
    sub = app.get_subcommand_no_throw(args[i]);
    sub_pos = i;
    if (!sub) return;
  }
  if (!sub) return;
  std::optional<std::string> path;
  for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].starts_with("--config=")) path = args[i].substr(9);
  }
  if (!path) return;
  std::ifstream in(*path);
  if (!in) throw UsageError(fmt::format("cannot read --config file {}", *path));

  auto given = [&](const CLI::Option* opt) {
    for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
      for (const auto& l : opt->get_lnames()) {
        if (args[i] == "--" + l || args[i].starts_with("--" + l + "=")) return true;
      }
      for (const auto& s : opt->get_snames()) {
        if (args[i] == "-" + s) return true;
      }
    }
    return false;
  };

  std::vector<std::string> extra;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(fmt::format("{}:{}: expected key = value", *path, lineno));
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    const CLI::Option* opt = key == "config" ? nullptr : sub->get_option_no_throw("--" + key);
    if (!opt) throw UsageError(fmt::format("{}:{}: unknown key '{}'", *path, lineno, key));
    if (given(opt)) continue;
    if (opt->get_expected_min() == 0) {
      if (value == "true" || value == "1" || value == "yes") {
        extra.push_back("--" + key);
      } else if (value != "false" && value != "0" && value != "no") {
        throw UsageError(fmt::format("{}:{}: '{}' expects true or false", *path, lineno, key));
      }
    } else {
      extra.push_back("--" + key);
      extra.push_back(value);
    }
  }
  args.insert(args.end(), extra.begin(), extra.end());
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Multi-view spatial QA dataset generator, evaluation harness and RoPE ablation lab", "forge"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  GenerateFlags gen;
  auto* g = app.add_subcommand("generate", "Generate scenes, renders and the QA manifest");
  gen.common.attach(g);
  g->add_option("--preset", gen.preset, "Scale preset")->check(CLI::IsMember({"mulset"}));
  g->add_option("--seed", gen.seed, "Master seed (default 7)");
  g->add_option("--scenes", gen.scenes, "Scene budget");
  g->add_option("--items", gen.items, "Total items, split evenly across tasks");
  g->add_option("--per-task", gen.per_task, "Occlusion,distance,azimuth counts");
  g->add_option("--min-area-ratio", gen.min_area_ratio, "Minimum visible pixel fraction (default 0.005)");
  g->add_option("--angle-thresh", gen.angle_thresh, "Azimuth boundary margin in degrees (default 15)");
  g->add_option("--train-frac", gen.train_frac, "Fraction of items assigned to train");
  g->add_option("--threads", gen.threads, "Worker threads (0 = all cores)");

  EvaluateFlags ev;
  auto* e = app.add_subcommand("evaluate", "Query a chat-completions endpoint (or a mock) for every item");
  ev.common.attach(e);
  e->add_option("--manifest", ev.manifest, "Path to dataset.jsonl")->required();
  e->add_option("--split", ev.split, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));
  e->add_option("--prompt", ev.prompt,
                "vanilla|implicit-stepwise|implicit-multiview|explicit-stepwise|explicit-multiview");
  e->add_option("--endpoint", ev.endpoint, "Base URL, e.g. http://localhost:8000/v1");
  e->add_option("--model", ev.model, "Model name sent with each request");
  e->add_option("--mock", ev.mock, "Offline transport: fixed:X, echo-key or flaky[:n[:X]]");
  e->add_option("--parallelism", ev.parallelism, "Concurrent requests")->check(CLI::PositiveNumber);
  e->add_option("--timeout", ev.timeout, "Per-request timeout in seconds");
  e->add_option("--max-retries", ev.max_retries, "Retries on timeout, 429 and 5xx");
  e->add_option("--temperature", ev.temperature, "Sampling temperature");
  e->add_option("--request-seed", ev.request_seed, "Seed sent with each request");
  e->add_flag("--resume", ev.resume, "Skip items already in results.jsonl");

  ScoreFlags sc;
  auto* s = app.add_subcommand("score", "Score results files against the manifest");
  sc.common.attach(s);
  s->add_option("--manifest", sc.manifest, "Path to dataset.jsonl")->required();
  s->add_option("--results", sc.results, "results.jsonl (repeat for ordered runs)")->required();
  s->add_option("--labels", sc.labels, "Comma-separated run labels");
  s->add_flag("--deltas", sc.deltas, "Also write deltas.csv over the ordered runs");

  RopeFlags rp;
  auto* r = app.add_subcommand("ropelab", "Directional RoPE ablation probe or invariant suite");
  rp.common.attach(r);
  r->add_flag("--suite", rp.suite, "Run the invariant suite instead of the probe");
  r->add_option("--seed", rp.seed, "Content / suite seed");
  r->add_option("--grid-size", rp.grid_size, "Probe grid side");
  r->add_option("--trials", rp.trials, "Probe trials");
  r->add_option("--head-dim", rp.head_dim, "Head dimension");
  r->add_option("--base", rp.base, "RoPE base");
  r->add_option("--strategy", rp.strategy, "mask, shuffle or constant")
      ->check(CLI::IsMember({"mask", "shuffle", "constant"}));
  r->add_option("--dims", rp.dims, "Comma-separated dimensions (h,w)");
  r->add_option("--scope", rp.scope, "text, vision or both")->check(CLI::IsMember({"text", "vision", "both"}));
  r->add_option("--reference", rp.reference, "first or last (constant only)")
      ->check(CLI::IsMember({"first", "last"}));
  r->add_option("--ablation-seed", rp.ablation_seed, "Shuffle seed");
  r->add_option("--threads", rp.threads, "Worker threads (0 = all cores)");

  std::vector<std::string> expanded = args;
  try {
    expand_config(app, expanded);
  } catch (const UsageError& err) {
    fmt::print(stderr, "error: {}\n", err.what());
    return kExitUsage;
  }
  std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err, std::cerr, std::cerr);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (g->parsed()) return cmd_generate(gen);
    if (e->parsed()) return cmd_evaluate(ev);
    if (s->parsed()) return cmd_score(sc);
    return cmd_ropelab(rp);
  } catch (const UsageError& err) {
    fmt::print(stderr, "error: {}\nRun 'forge {} --help' for usage.\n", err.what(), app.get_subcommands().front()->get_name());
    return kExitUsage;
  } catch (const InvalidConfig& err) {
    fmt::print(stderr, "error: {}\n", err.what());
    return kExitUsage;
  } catch (const std::exception& err) {
    fmt::print(stderr, "error: {}\n", err.what());
    return kExitRuntime;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace forge::cli
