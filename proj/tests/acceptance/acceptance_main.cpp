// Acceptance suite: one PASS/FAIL line per criterion on stdout, exit status 0
// only when every checked criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "../oracle.hpp"
#include "forge/cli.hpp"
#include "forge/evalkit.hpp"
#include "forge/png_io.hpp"
#include "forge/render.hpp"
#include "forge/rng.hpp"
#include "forge/ropelab.hpp"
#include "forge/taskgen.hpp"

namespace fs = std::filesystem;
using namespace forge;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
  std::vector<std::string> problems;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    if (problems.size() < 8) problems.push_back(what);
  }
};

int failures = 0;

void emit(int number, std::string_view title, const Verdict& v) {
  if (!v.pass) ++failures;
  fmt::print("{}  {}  {}: {}\n", v.pass ? "PASS" : "FAIL", number, title, v.detail);
  for (const auto& p : v.problems) fmt::print("        - {}\n", p);
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(oracle::slurp(p)); }

// Streams both trees; returns the first difference or an empty string.
std::string first_difference(const fs::path& a, const fs::path& b, std::int64_t& files) {
  std::vector<std::string> la, lb;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) la.push_back(fs::relative(e.path(), a).string());
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) lb.push_back(fs::relative(e.path(), b).string());
  }
  std::sort(la.begin(), la.end());
  std::sort(lb.begin(), lb.end());
  files = std::ssize(la);
  if (la != lb) return "file lists differ";
  std::vector<char> ba(1 << 20), bb(1 << 20);
  for (const auto& rel : la) {
    std::ifstream fa(a / rel, std::ios::binary), fb(b / rel, std::ios::binary);
    while (fa && fb) {
      fa.read(ba.data(), std::ssize(ba));
      fb.read(bb.data(), std::ssize(bb));
      if (fa.gcount() != fb.gcount() || !std::equal(ba.begin(), ba.begin() + fa.gcount(), bb.begin())) return rel;
    }
  }
  return {};
}

constexpr std::int64_t kItems = 38200, kTrain = 30000, kTest = 8200;

// 1. Scale and determinism.
Verdict criterion_scale(const fs::path& run1, const fs::path& run2, bool keep) {
  Verdict v;
  std::array<double, 2> secs{};
  for (int r = 0; r < 2; ++r) {
    const fs::path out = r == 0 ? run1 : run2;
    fs::remove_all(out);
    const auto t0 = std::chrono::steady_clock::now();
    const int rc = cli::run({"generate", "--preset", "mulset", "--seed", "7", "--out", out.string(), "-q"});
    secs[static_cast<std::size_t>(r)] = seconds_since(t0);
    v.require(rc == 0, fmt::format("run {} exited {}", r + 1, rc));
    if (rc != 0) return v;
  }
  std::int64_t files = 0;
  const std::string diff = first_difference(run1, run2, files);
  v.require(diff.empty(), "runs differ at " + diff);
  if (!keep) fs::remove_all(run2);

  const auto stats = read_json(run1 / "generation_stats.json");
  const std::int64_t items = stats["items"], scenes = stats["scenes_used"];
  const std::int64_t train = stats["train"], test = stats["test"];
  v.require(items == kItems, fmt::format("items {} != {}", items, kItems));
  v.require(scenes >= 5000, fmt::format("only {} scenes", scenes));
  v.require(std::abs(train - kTrain) <= kTrain / 100, fmt::format("train {} outside 1% of {}", train, kTrain));
  v.require(std::abs(test - kTest) <= kTest / 100, fmt::format("test {} outside 1% of {}", test, kTest));
  for (double s : secs) v.require(s < 600.0, fmt::format("run took {:.1f}s", s));
  v.detail = fmt::format("{} items over {} scenes, train {} / test {}, {} files byte-identical, runs {:.1f}s and {:.1f}s",
                         items, scenes, train, test, files, secs[0], secs[1]);
  return v;
}

CameraPose camera_from(const nlohmann::json& j) {
  CameraPose c;
  c.position = Eigen::Vector3d(j["position"][0].get<double>(), j["position"][1].get<double>(),
                               j["position"][2].get<double>());
  c.yaw = j["yaw"];
  c.pitch = j["pitch"];
  c.fov_y_deg = j["fov_y_deg"];
  c.resolution = {j["resolution"][0].get<int>(), j["resolution"][1].get<int>()};
  return c;
}

Eigen::Vector3d vec(const nlohmann::json& j) { return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()}; }

struct AuditResult {
  Verdict constraints;
  Verdict oracle;
  std::int64_t items = 0;
  std::int64_t letter_a = 0;
  std::vector<std::string> ids;
};

// 2 and 3. One streaming pass over the manifest. Scenes are re-sampled from
// the seed and every answer is re-derived by brute force; a sample of scenes
// is also re-rendered and compared with the images on disk and a ray caster.
AuditResult audit(const fs::path& root) {
  AuditResult out;
  Verdict& c = out.constraints;
  Verdict& o = out.oracle;
  const auto header = read_json(root / "manifest_header.json");
  const double min_area = header["gen_config"]["min_area_ratio"];
  const double angle = header["gen_config"]["angle_thresh_deg"];
  const int margin_px = header["gen_config"]["mask_margin_px"];
  const int border_px = header["gen_config"]["mask_border_px"];
  SceneConfig sc;
  sc.seed = header["scene_config"]["seed"];
  o.require(fmt::format("{:016x}", sc.digest()) == header["scene_config"]["digest"].get<std::string>(),
            "scene config digest differs from the header");

  std::int64_t az_items = 0, objects_checked = 0, min_margin_count = 0;
  double min_margin = 1e9;
  std::int64_t rerendered = 0, ray_pixels = 0;
  std::string current_scene;
  std::int64_t distinct_scenes = 0;
  Scene scene;
  bool sample_scene_now = false;
  RenderedView view_a, view_b;
  Rng pixel_rng(2024);

  std::ifstream in(root / "dataset.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    const std::string id = j["id"];
    out.ids.push_back(id);
    ++out.items;
    const auto& prov = j["provenance"];
    const std::string task = j["task"];

    // Four distinct options keyed A-D, answer among them.
    const auto& opts = j["options"];
    std::set<std::string> texts;
    bool keys_ok = opts.is_object() && opts.size() == 4;
    for (char k : kLetters) {
      const std::string key(1, k);
      keys_ok = keys_ok && opts.contains(key) && opts[key].is_string();
      if (keys_ok) texts.insert(opts[key].get<std::string>());
    }
    c.require(keys_ok && texts.size() == 4, id + ": options are not four distinct A-D entries");
    const std::string answer = j["answer"];
    c.require(answer.size() == 1 && answer[0] >= 'A' && answer[0] <= 'D', id + ": answer is not a letter");
    if (!keys_ok || answer.size() != 1) continue;
    const std::string answer_text = opts[answer];
    out.letter_a += answer == "A";
    for (const auto& p : j["image_paths"]) o.require(fs::exists(root / p.get<std::string>()), id + ": missing image");

    // Re-sample the scene once per run of items.
    const std::string scene_id = prov["scene_id"];
    if (scene_id != current_scene) {
      current_scene = scene_id;
      scene = sample_scene(sc, std::stoull(scene_id.substr(scene_id.find('_') + 1)));
      sample_scene_now = distinct_scenes++ % 97 == 0;
      if (sample_scene_now) {
        ++rerendered;
        view_a = render_view(scene, camera_from(prov["cameras"]["A"]));
        view_b = render_view(scene, camera_from(prov["cameras"]["B"]));
        o.require(read_png(root / "images" / (scene_id + "_viewA.png")) == view_a.image, scene_id + ": view A differs");
        o.require(read_png(root / "images" / (scene_id + "_viewB.png")) == view_b.image, scene_id + ": view B differs");
        for (const RenderedView* v : {&view_a, &view_b}) {
          for (int k = 0; k < 400; ++k) {
            const int x = pixel_rng.range(1, v->width() - 2), y = pixel_rng.range(1, v->height() - 2);
            bool interior = true;
            for (int dy = -1; dy <= 1; ++dy) {
              for (int dx = -1; dx <= 1; ++dx) interior = interior && v->id_at(x + dx, y + dy) == v->id_at(x, y);
            }
            if (!interior) continue;
            ++ray_pixels;
            const int want = oracle::cast_pixel(scene, v->camera, x, y);
            const int got = v->id_at(x, y) == kBackgroundId ? -1 : v->id_at(x, y);
            o.require(want == got, fmt::format("{}: ray oracle disagrees at ({}, {})", scene_id, x, y));
          }
        }
      }
    }
    const auto& objs = prov["objects"];
    bool same = objs.size() == scene.objects.size();
    for (std::size_t k = 0; same && k < objs.size(); ++k) {
      same = objs[k]["id"] == scene.objects[k].id && objs[k]["category"] == scene.objects[k].category &&
             vec(objs[k]["centroid"]) == scene.objects[k].centroid;
    }
    o.require(same, id + ": provenance objects differ from the re-sampled scene");
    if (!same) continue;
    auto category_count = [&](const std::string& cat) {
      return std::count_if(scene.objects.begin(), scene.objects.end(), [&](const auto& ob) { return ob.category == cat; });
    };
    auto area_matches = [&](const nlohmann::json& ref, int obj) {
      if (!sample_scene_now) return;
      const double total = static_cast<double>(view_a.id_map.size());
      const auto count = [&](const RenderedView& v) {
        return static_cast<double>(std::count(v.id_map.begin(), v.id_map.end(), static_cast<std::uint16_t>(obj))) / total;
      };
      o.require(ref["area_ratio_a"].get<double>() == count(view_a) && ref["area_ratio_b"].get<double>() == count(view_b),
                fmt::format("{}: stored area ratios of object {} differ from the re-render", id, obj));
    };

    if (task == "occlusion_restoration") {
      const int masked = prov["masked_object_id"];
      ++objects_checked;
      c.require(prov["area_ratio_a"].get<double>() >= min_area && prov["area_ratio_b"].get<double>() >= min_area,
                id + ": masked object below min_area_ratio");
      o.require(scene.object(masked).category == answer_text, id + ": masked category lookup disagrees");
      for (const auto& e : prov["view_b_objects"]) {
        o.require(e["id"] == masked || e["category"] != answer_text, id + ": masked category visible twice in B");
      }
      o.require(j["image_paths"][1] == fmt::format("images/{}_viewB_masked_obj{}.png", scene_id, masked),
                id + ": masked image path");
      area_matches(prov, masked);
      if (sample_scene_now) {
        const auto m = mask_object(view_b, masked, margin_px, border_px);
        o.require(read_png(root / j["image_paths"][1].get<std::string>()) == m.image, id + ": masked image differs");
      }
    } else if (task == "distance_comparison") {
      const int ref = prov["reference"]["id"];
      ++objects_checked;
      c.require(prov["reference"]["area_ratio_a"].get<double>() >= min_area &&
                    prov["reference"]["area_ratio_b"].get<double>() >= min_area,
                id + ": reference below min_area_ratio");
      for (const auto& cand : prov["candidates"]) {
        ++objects_checked;
        c.require(std::max(cand["area_ratio_a"].get<double>(), cand["area_ratio_b"].get<double>()) >= min_area,
                  id + ": candidate below min_area_ratio");
        area_matches(cand, cand["id"]);
      }
      area_matches(prov["reference"], ref);
      const int nearest = oracle::nearest_exhaustive(scene, ref);
      o.require(nearest >= 0 && scene.object(nearest).category == answer_text, id + ": brute-force nearest disagrees");
      o.require(category_count(answer_text) == 1 && category_count(scene.object(ref).category) == 1,
                id + ": answer or reference category is not unique");
    } else if (task == "azimuth_transfer") {
      ++az_items;
      const int ref = prov["reference"]["id"], tgt = prov["target"]["id"];
      objects_checked += 2;
      c.require(prov["reference"]["area_ratio_a"].get<double>() >= min_area, id + ": reference below min_area_ratio");
      c.require(prov["target"]["area_ratio_b"].get<double>() >= min_area, id + ": target below min_area_ratio");
      area_matches(prov["reference"], ref);
      area_matches(prov["target"], tgt);
      const Eigen::Vector3d observer = vec(prov["cameras"]["A"]["position"]);
      const double az = oracle::azimuth_world(observer, scene.object(ref).centroid, scene.object(tgt).centroid);
      const double margin = oracle::boundary_margin(az);
      min_margin = std::min(min_margin, margin);
      min_margin_count += margin >= angle;
      c.require(margin >= 15.0 && prov["boundary_margin_deg"].get<double>() >= 15.0,
                fmt::format("{}: boundary margin {:.3f}", id, margin));
      o.require(oracle::quadrant(az) == answer_text, id + ": atan2 re-derivation disagrees");
      o.require(std::abs(az - prov["azimuth_deg"].get<double>()) < 1e-9, id + ": stored azimuth differs");
      o.require(category_count(scene.object(ref).category) == 1 && category_count(scene.object(tgt).category) == 1,
                id + ": azimuth categories are not unique");
    } else {
      o.require(false, id + ": unknown task " + task);
    }
  }
  c.detail = fmt::format("{} items with 4 distinct options; {} azimuth items, min boundary margin {:.3f} deg; {} participating "
                         "objects at >= {} of the image",
                         out.items, az_items, min_margin, objects_checked, min_area);
  o.detail = fmt::format("{} answers re-derived on re-sampled scenes; {} scenes re-rendered and compared with disk, "
                         "{} pixels checked against a ray caster",
                         out.items, rerendered, ray_pixels);
  return out;
}

// 4. Scoring fixture.
Verdict criterion_scoring() {
  Verdict v;
  auto fixture = [](const std::string& label, std::int64_t correct, std::int64_t n) {
    std::vector<QAItem> items;
    std::vector<EvalResult> results;
    for (std::int64_t i = 0; i < n; ++i) {
      QAItem item;
      item.id = item_id_for(i);
      item.task = TaskKind::distance_comparison;
      item.options = {"a", "b", "c", "d"};
      item.answer = 'C';
      EvalResult r;
      r.item_id = item.id;
      r.raw_response = i < correct ? "The answer is C" : "The answer is A";
      items.push_back(std::move(item));
      results.push_back(std::move(r));
    }
    const Manifest m({}, nlohmann::json::object(), std::move(items));
    return score(results, m, label);
  };
  const auto r = fixture("human", 69, 80);
  const double pct = 100.0 * r.per_task.at(TaskKind::distance_comparison).accuracy();
  v.require(std::abs(pct - 86.25) <= 1e-9, fmt::format("69/80 scored {}", pct));

  auto overall_delta = [&](std::int64_t a, std::int64_t b) {
    const std::vector<ScoreReport> reports = {fixture("prev", a, 1000), fixture("next", b, 1000)};
    return *delta_table(reports).back().delta_pp;
  };
  const Rational up = overall_delta(354, 443), down = overall_delta(568, 554);
  v.require(up == Rational::make(89, 10) && std::abs(up.value() - 8.9) <= 1e-9, fmt::format("35.4 -> 44.3 gave {}", up.value()));
  v.require(down == Rational::make(-14, 10) && std::abs(down.value() + 1.4) <= 1e-9,
            fmt::format("56.8 -> 55.4 gave {}", down.value()));
  v.detail = fmt::format("69/80 = {:.2f}%, 35.4 -> 44.3 = {:+.1f}, 56.8 -> 55.4 = {:+.1f} (exact rationals {}/{}, {}/{})",
                         pct, up.value(), down.value(), up.num, up.den, down.num, down.den);
  return v;
}

// 5. RoPE property suite at full size.
Verdict criterion_suite() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto checks = rope::property_suite(rope::SuiteOptions{});
  const double secs = seconds_since(t0);
  std::string summary;
  for (const auto& ch : checks) {
    v.require(ch.passed, fmt::format("{} failed (worst {:.3g}, tolerance {:.3g})", ch.name, ch.worst, ch.tolerance));
    summary += fmt::format("{}{} x{} worst {:.2g}", summary.empty() ? "" : "; ", ch.name, ch.cases, ch.worst);
  }
  for (const char* name : {"norm_preservation", "rope1d_relative_identity", "shuffle_preserves_multiset",
                           "mask_all_equals_no_pe_attention"}) {
    v.require(std::any_of(checks.begin(), checks.end(), [&](const auto& ch) { return ch.name == name; }),
              std::string("missing check ") + name);
  }
  auto find = [&](const char* name) {
    return std::find_if(checks.begin(), checks.end(), [&](const auto& ch) { return ch.name == name; });
  };
  if (auto it = find("norm_preservation"); it != checks.end()) v.require(it->cases >= 10000, "too few norm vectors");
  if (auto it = find("rope1d_relative_identity"); it != checks.end()) v.require(it->cases >= 1000, "too few identity cases");
  v.require(secs < 30.0, fmt::format("suite took {:.1f}s", secs));
  v.detail = fmt::format("{:.2f}s; {}", secs, summary);
  return v;
}

// 6. Directional probe trends.
Verdict criterion_probe() {
  Verdict v;
  auto spec = [](rope::Strategy s, std::vector<rope::Dim> dims) {
    rope::AblationSpec a;
    a.strategy = s;
    a.dims = std::move(dims);
    a.rng_seed = 1;
    return a;
  };
  const auto sw = rope::directional_probe(8, 500, spec(rope::Strategy::shuffle, {rope::Dim::w}));
  const auto sh = rope::directional_probe(8, 500, spec(rope::Strategy::shuffle, {rope::Dim::h}));
  const auto mhw = rope::directional_probe(8, 500, spec(rope::Strategy::mask, {rope::Dim::h, rope::Dim::w}));
  const double sh_v_red = 1.0 - sh.vertical_margin / sh.baseline_vertical;
  const double sh_h_change = sh.horizontal_margin / sh.baseline_horizontal - 1.0;
  v.require(sw.baseline_horizontal > 0.0 && sw.baseline_vertical > 0.0, "baseline margins not positive");
  v.require(sw.horizontal_reduction() >= 0.9, fmt::format("shuffle-w horizontal reduction {:.3f}", sw.horizontal_reduction()));
  v.require(std::abs(sw.vertical_change()) <= 0.1, fmt::format("shuffle-w vertical change {:.3f}", sw.vertical_change()));
  v.require(sh_v_red >= 0.9, fmt::format("shuffle-h vertical reduction {:.3f}", sh_v_red));
  v.require(std::abs(sh_h_change) <= 0.1, fmt::format("shuffle-h horizontal change {:.3f}", sh_h_change));
  v.require(mhw.horizontal_margin == 0.0 && mhw.vertical_margin == 0.0, "mask-hw margins not exactly 0");
  v.detail = fmt::format(
      "baseline h {:.4f} v {:.4f}; shuffle-w h -{:.1f}% v {:+.1f}%; shuffle-h v -{:.1f}% h {:+.1f}%; mask-hw h {} v {}",
      sw.baseline_horizontal, sw.baseline_vertical, 100 * sw.horizontal_reduction(), 100 * sw.vertical_change(),
      100 * sh_v_red, 100 * sh_h_change, mhw.horizontal_margin, mhw.vertical_margin);
  return v;
}

// 7. End-to-end mock evaluation through the CLI.
Verdict criterion_mock(const fs::path& data, const fs::path& work, const AuditResult& audit_result) {
  Verdict v;
  const std::string manifest = (data / "dataset.jsonl").string();
  auto evaluate = [&](const std::string& name, const std::string& mock, int parallelism) {
    const fs::path out = work / name;
    fs::remove_all(out);
    const int rc = cli::run({"evaluate", "--manifest", manifest, "--mock", mock, "--parallelism",
                             std::to_string(parallelism), "--out", out.string(), "-q"});
    v.require(rc == 0, fmt::format("evaluate {} exited {}", name, rc));
    return out / "results.jsonl";
  };
  auto score_run = [&](const fs::path& results, const std::string& name) -> nlohmann::json {
    const fs::path out = work / ("score_" + name);
    fs::remove_all(out);
    const int rc = cli::run({"score", "--manifest", manifest, "--results", results.string(), "--out", out.string(), "-q"});
    v.require(rc == 0, fmt::format("score {} exited {}", name, rc));
    return rc == 0 ? read_json(out / "report.json") : nlohmann::json::object();
  };

  const auto echo = evaluate("echo", "echo-key", 16);
  const auto fixed1 = evaluate("fixedA_p1", "fixed:A", 1);
  const auto fixed16 = evaluate("fixedA_p16", "fixed:A", 16);
  if (!v.pass) return v;

  const auto echo_report = score_run(echo, "echo");
  const auto fixed_report = score_run(fixed1, "fixedA");
  const double echo_acc = echo_report["overall"]["accuracy"];
  const std::int64_t fixed_correct = fixed_report["overall"]["correct"];
  const std::int64_t total = fixed_report["overall"]["total"];
  const double freq_a = static_cast<double>(audit_result.letter_a) / static_cast<double>(audit_result.items);
  v.require(echo_acc == 1.0, fmt::format("echo-key accuracy {}", echo_acc));
  v.require(total == audit_result.items, "fixed:A scored a different item count");
  v.require(fixed_correct == audit_result.letter_a, fmt::format("fixed:A correct {} but {} answers are A", fixed_correct,
                                                                audit_result.letter_a));
  v.require(freq_a >= 0.22 && freq_a <= 0.28, fmt::format("letter-A frequency {:.4f}", freq_a));
  v.require(oracle::slurp(fixed1) == oracle::slurp(fixed16), "parallelism 1 and 16 outputs differ");

  std::ifstream in(fixed16);
  std::string line;
  std::size_t k = 0;
  bool ordered = true;
  while (std::getline(in, line)) {
    ordered = ordered && k < audit_result.ids.size() && nlohmann::json::parse(line)["item_id"] == audit_result.ids[k];
    ++k;
  }
  v.require(ordered && k == audit_result.ids.size(), "results are not in manifest order");
  v.detail = fmt::format("echo-key accuracy {:.4f}; fixed:A accuracy {:.4f} = letter-A frequency {}/{}; "
                         "parallelism 1 and 16 byte-identical and in manifest order",
                         echo_acc, static_cast<double>(fixed_correct) / static_cast<double>(total), audit_result.letter_a,
                         audit_result.items);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria for the forge toolkit"};
  std::string work = (fs::temp_directory_path() / "forge_acceptance").string();
  std::string reuse;
  bool keep = false;
  app.add_option("--work", work, "Scratch directory");
  app.add_option("--reuse", reuse, "Audit an existing preset dataset instead of generating (criterion 1 is skipped)");
  app.add_flag("--keep", keep, "Keep generated data");
  CLI11_PARSE(app, argc, argv);

  const fs::path work_dir = fs::absolute(work);
  fs::create_directories(work_dir);
  fs::path data = work_dir / "run1";

  if (reuse.empty()) {
    emit(1, "scale & determinism", criterion_scale(data, work_dir / "run2", keep));
  } else {
    data = fs::absolute(reuse);
    fmt::print("SKIP  1  scale & determinism: --reuse given, generation not rerun\n");
  }
  if (!fs::exists(data / "dataset.jsonl")) {
    fmt::print("FAIL  2-7  no dataset to audit\n");
    return 1;
  }
  const AuditResult a = audit(data);
  emit(2, "constraint audit", a.constraints);
  emit(3, "oracle equivalence", a.oracle);
  emit(4, "scoring fixture", criterion_scoring());
  emit(5, "rope property suite", criterion_suite());
  emit(6, "directional probe trend", criterion_probe());
  emit(7, "end-to-end mock evaluation", criterion_mock(data, work_dir, a));
  fmt::print("N/A   8  fine-tuned model accuracies, real-model ablation tables, attention maps and human evaluation "
             "are not reproducible at desk scale; their arithmetic is covered by 4 and 7\n");

  if (!keep) {
    for (const char* d : {"run1", "run2", "echo", "fixedA_p1", "fixedA_p16", "score_echo", "score_fixedA"}) {
      fs::remove_all(work_dir / d);
    }
  }
  fmt::print("{} of 7 checked criteria passed\n", 7 - failures - (reuse.empty() ? 0 : 1));
  return failures == 0 ? 0 : 1;
}
