#include "forge/ropelab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "forge/errors.hpp"
#include "forge/rng.hpp"

namespace forge::rope {
namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> parse_enum(std::string_view s, const std::array<Enum, N>& all) {
  for (Enum e : all) {
    if (to_string(e) == s) return e;
  }
  return std::nullopt;
}

bool in_scope(Modality m, Scope scope) {
  return scope == Scope::both || (scope == Scope::text && m == Modality::text) ||
         (scope == Scope::vision && m == Modality::vision);
}

}  // namespace

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::rope1d: return "rope1d";
    case Scheme::rope2d: return "rope2d";
    case Scheme::mrope: return "mrope";
  }
  return "rope1d";
}

std::string_view to_string(Dim d) {
  switch (d) {
    case Dim::seq: return "seq";
    case Dim::h: return "h";
    case Dim::w: return "w";
    case Dim::t: return "t";
    case Dim::x: return "x";
    case Dim::y: return "y";
  }
  return "seq";
}

std::optional<Scheme> parse_scheme(std::string_view s) {
  return parse_enum(s, std::array{Scheme::rope1d, Scheme::rope2d, Scheme::mrope});
}

std::optional<Dim> parse_dim(std::string_view s) {
  return parse_enum(s, std::array{Dim::seq, Dim::h, Dim::w, Dim::t, Dim::x, Dim::y});
}

std::vector<Dim> scheme_dims(Scheme s) {
  switch (s) {
    case Scheme::rope1d: return {Dim::seq};
    case Scheme::rope2d: return {Dim::h, Dim::w};
    case Scheme::mrope: return {Dim::t, Dim::x, Dim::y};
  }
  return {};
}

RopeConfig RopeConfig::rope1d(int head_dim, double base) { return {Scheme::rope1d, head_dim, base, {head_dim / 2}}; }

RopeConfig RopeConfig::rope2d(int head_dim, double base) {
  const int pairs = head_dim / 2;
  return {Scheme::rope2d, head_dim, base, {pairs / 2, pairs - pairs / 2}};
}

RopeConfig RopeConfig::mrope(int head_dim, int t_pairs, int x_pairs, int y_pairs, double base) {
  return {Scheme::mrope, head_dim, base, {t_pairs, x_pairs, y_pairs}};
}

void RopeConfig::validate() const {
  if (head_dim <= 0 || head_dim % 2 != 0) throw DimensionMismatch("head_dim must be a positive even number");
  if (!(base > 1.0)) throw DimensionMismatch("base must be > 1");
  if (dim_split.size() != scheme_dims(scheme).size()) {
    throw DimensionMismatch(fmt::format("{} needs {} dimension groups", to_string(scheme), scheme_dims(scheme).size()));
  }
  int sum = 0;
  for (int g : dim_split) {
    if (g < 1) throw DimensionMismatch("every dimension needs at least one pair group");
    sum += g;
  }
  if (sum != head_dim / 2) throw DimensionMismatch("dim_split must sum to head_dim / 2 pair groups");
}

std::vector<double> RopeConfig::frequencies() const {
  std::vector<double> f;
  f.reserve(static_cast<std::size_t>(head_dim / 2));
  if (scheme == Scheme::rope2d) {
    for (int block : dim_split) {
      for (int j = 0; j < block; ++j) f.push_back(std::pow(base, -static_cast<double>(j) / block));
    }
  } else {
    for (int g = 0; g < head_dim / 2; ++g) f.push_back(std::pow(base, -2.0 * g / head_dim));
  }
  return f;
}

std::vector<int> RopeConfig::group_owner() const {
  std::vector<int> owner;
  for (std::size_t d = 0; d < dim_split.size(); ++d) owner.insert(owner.end(), static_cast<std::size_t>(dim_split[d]), static_cast<int>(d));
  return owner;
}

std::vector<double> apply_rope(std::span<const double> vector, std::span<const std::int64_t> positions,
                               const RopeConfig& config) {
  config.validate();
  if (vector.size() != static_cast<std::size_t>(config.head_dim)) {
    throw DimensionMismatch(fmt::format("vector has {} entries, head_dim is {}", vector.size(), config.head_dim));
  }
  if (positions.size() != config.dim_split.size()) {
    throw DimensionMismatch(fmt::format("{} expects {} position indices, got {}", to_string(config.scheme),
                                        config.dim_split.size(), positions.size()));
  }
  const std::vector<double> freq = config.frequencies();
  const std::vector<int> owner = config.group_owner();
  std::vector<double> out(vector.begin(), vector.end());
  for (std::size_t g = 0; g < freq.size(); ++g) {
    const std::int64_t p = positions[static_cast<std::size_t>(owner[g])];
    if (p == 0) continue;
    const double angle = static_cast<double>(p) * freq[g];
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double a = vector[2 * g];
    const double b = vector[2 * g + 1];
    out[2 * g] = a * c - b * s;
    out[2 * g + 1] = a * s + b * c;
  }
  return out;
}

std::vector<std::int64_t> PositionGrid::positions_of(std::size_t token) const {
  std::vector<std::int64_t> p(dims.size());
  for (std::size_t d = 0; d < dims.size(); ++d) p[d] = index[d][token];
  return p;
}

const std::vector<std::int64_t>& PositionGrid::column(Dim d) const {
  const auto it = std::find(dims.begin(), dims.end(), d);
  if (it == dims.end()) throw std::invalid_argument(fmt::format("grid has no '{}' dimension", to_string(d)));
  return index[static_cast<std::size_t>(it - dims.begin())];
}

std::vector<std::int64_t>& PositionGrid::column(Dim d) {
  return const_cast<std::vector<std::int64_t>&>(std::as_const(*this).column(d));
}

PositionGrid image_grid(int rows, int cols) {
  PositionGrid g;
  g.dims = {Dim::h, Dim::w};
  g.index.assign(2, {});
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      g.modality.push_back(Modality::vision);
      g.index[0].push_back(r);
      g.index[1].push_back(c);
    }
  }
  return g;
}

PositionGrid sequence_grid(int tokens, Modality modality) {
  PositionGrid g;
  g.dims = {Dim::seq};
  g.index.assign(1, {});
  for (int i = 0; i < tokens; ++i) {
    g.modality.push_back(modality);
    g.index[0].push_back(i);
  }
  return g;
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::mask: return "mask";
    case Strategy::shuffle: return "shuffle";
    case Strategy::constant: return "constant";
  }
  return "mask";
}

std::string_view to_string(Scope s) {
  switch (s) {
    case Scope::text: return "text";
    case Scope::vision: return "vision";
    case Scope::both: return "both";
  }
  return "both";
}

std::string_view to_string(Reference r) { return r == Reference::first ? "first" : "last"; }

std::optional<Strategy> parse_strategy(std::string_view s) {
  return parse_enum(s, std::array{Strategy::mask, Strategy::shuffle, Strategy::constant});
}
std::optional<Scope> parse_scope(std::string_view s) {
  return parse_enum(s, std::array{Scope::text, Scope::vision, Scope::both});
}
std::optional<Reference> parse_reference(std::string_view s) {
  return parse_enum(s, std::array{Reference::first, Reference::last});
}

void AblationSpec::validate(std::span<const Dim> available) const {
  if (dims.empty()) throw std::invalid_argument("ablation needs at least one target dimension");
  for (Dim d : dims) {
    if (std::find(available.begin(), available.end(), d) == available.end()) {
      throw std::invalid_argument(fmt::format("dimension '{}' is not part of this encoding", to_string(d)));
    }
  }
  if ((strategy == Strategy::constant) != reference.has_value()) {
    throw std::invalid_argument("a reference token is required for, and only for, the constant strategy");
  }
}

std::string AblationSpec::label() const {
  std::string dims_s;
  for (Dim d : dims) dims_s += to_string(d);
  std::string out = fmt::format("{}-{}", to_string(strategy), dims_s);
  if (reference) out += fmt::format("-{}", to_string(*reference));
  if (scope != Scope::both) out += fmt::format("({})", to_string(scope));
  return out;
}

nlohmann::ordered_json spec_to_json(const AblationSpec& spec) {
  nlohmann::ordered_json j;
  j["strategy"] = to_string(spec.strategy);
  nlohmann::ordered_json dims = nlohmann::ordered_json::array();
  for (Dim d : spec.dims) dims.push_back(to_string(d));
  j["dimensions"] = std::move(dims);
  j["modality_scope"] = to_string(spec.scope);
  j["reference"] = spec.reference ? nlohmann::ordered_json(to_string(*spec.reference)) : nlohmann::ordered_json();
  j["rng_seed"] = spec.rng_seed;
  j["label"] = spec.label();
  return j;
}

PositionGrid ablate_positions(const PositionGrid& grid, const AblationSpec& spec) {
  spec.validate(grid.dims);
  std::vector<std::size_t> scoped;
  for (std::size_t i = 0; i < grid.tokens(); ++i) {
    if (in_scope(grid.modality[i], spec.scope)) scoped.push_back(i);
  }
  if (scoped.empty()) throw EmptyScope(fmt::format("no {} tokens to ablate", to_string(spec.scope)));

  PositionGrid out = grid;
  for (Dim d : spec.dims) {
    std::vector<std::int64_t>& col = out.column(d);
    switch (spec.strategy) {
      case Strategy::mask:
        for (std::size_t i : scoped) col[i] = 0;
        break;
      case Strategy::shuffle: {
        std::vector<std::int64_t> values;
        values.reserve(scoped.size());
        for (std::size_t i : scoped) values.push_back(col[i]);
        Rng rng(mix_seed(spec.rng_seed, static_cast<std::uint64_t>(d)));
        rng.shuffle(std::span<std::int64_t>(values));
        for (std::size_t k = 0; k < scoped.size(); ++k) col[scoped[k]] = values[k];
        break;
      }
      case Strategy::constant: {
        const std::size_t ref = *spec.reference == Reference::first ? scoped.front() : scoped.back();
        const std::int64_t value = col[ref];
        for (std::size_t i : scoped) col[i] = value;
        break;
      }
    }
  }
  return out;
}

Eigen::MatrixXd attention_scores(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& keys, const PositionGrid& grid,
                                 const RopeConfig& config, const AblationSpec* spec) {
  config.validate();
  if (queries.cols() != config.head_dim || keys.cols() != config.head_dim) {
    throw DimensionMismatch("query/key width must equal head_dim");
  }
  if (static_cast<std::size_t>(queries.rows()) != grid.tokens() ||
      static_cast<std::size_t>(keys.rows()) != grid.tokens()) {
    throw DimensionMismatch("grid must cover every query and key token");
  }
  const std::vector<Dim> dims = scheme_dims(config.scheme);
  if (grid.dims != dims) throw DimensionMismatch("grid dimensions do not match the encoding scheme");

  const PositionGrid positions = spec ? ablate_positions(grid, *spec) : grid;
  const auto n = static_cast<Eigen::Index>(grid.tokens());
  const auto d = static_cast<Eigen::Index>(config.head_dim);
  Eigen::MatrixXd q_rot(n, d), k_rot(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto p = positions.positions_of(static_cast<std::size_t>(i));
    const Eigen::VectorXd qi = queries.row(i).transpose();
    const Eigen::VectorXd ki = keys.row(i).transpose();
    const auto qr = apply_rope(std::span<const double>(qi.data(), static_cast<std::size_t>(d)), p, config);
    const auto kr = apply_rope(std::span<const double>(ki.data(), static_cast<std::size_t>(d)), p, config);
    q_rot.row(i) = Eigen::Map<const Eigen::RowVectorXd>(qr.data(), d);
    k_rot.row(i) = Eigen::Map<const Eigen::RowVectorXd>(kr.data(), d);
  }
  return (q_rot * k_rot.transpose()) / std::sqrt(static_cast<double>(config.head_dim));
}

double ProbeReport::horizontal_reduction() const {
  return baseline_horizontal == 0.0 ? 0.0 : 1.0 - horizontal_margin / baseline_horizontal;
}

double ProbeReport::vertical_change() const {
  return baseline_vertical == 0.0 ? 0.0 : vertical_margin / baseline_vertical - 1.0;
}

nlohmann::ordered_json probe_to_json(const ProbeReport& r) {
  nlohmann::ordered_json j;
  j["scheme"] = r.scheme;
  j["spec"] = r.spec ? spec_to_json(*r.spec) : nlohmann::ordered_json();
  j["grid_size"] = r.grid_size;
  j["trials"] = r.trials;
  j["baseline"] = {{"horizontal_margin", r.baseline_horizontal}, {"vertical_margin", r.baseline_vertical}};
  j["ablated"] = {{"horizontal_margin", r.horizontal_margin}, {"vertical_margin", r.vertical_margin}};
  j["reduction_pct"] = {{"horizontal", 100.0 * r.horizontal_reduction()},
                        {"vertical", -100.0 * r.vertical_change()}};
  return j;
}

namespace {

struct TrialMargins {
  double base_h = 0, base_v = 0, abl_h = 0, abl_v = 0;
};

// Mean neighbour-score gap for one head: the head prefers offset `preferred`
// (relative to the query), the competing neighbour sits at -preferred.
double neighbour_gap(const std::vector<double>& q, const std::vector<double>& k, const PositionGrid& pos, int g,
                     bool horizontal, const RopeConfig& config) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(config.head_dim));
  auto score = [&](std::size_t i, std::size_t j) {
    const std::int64_t rel[2] = {pos.index[0][j] - pos.index[0][i], pos.index[1][j] - pos.index[1][i]};
    const auto kr = apply_rope(k, rel, config);
    double s = 0.0;
    for (std::size_t c = 0; c < q.size(); ++c) s += q[c] * kr[c];
    return s * scale;
  };
  double sum = 0.0;
  int count = 0;
  for (int r = 0; r < g; ++r) {
    for (int c = 0; c < g; ++c) {
      if (horizontal ? (c == 0 || c == g - 1) : (r == 0 || r == g - 1)) continue;
      const auto i = static_cast<std::size_t>(r * g + c);
      const auto prev = horizontal ? i - 1 : i - static_cast<std::size_t>(g);
      const auto next = horizontal ? i + 1 : i + static_cast<std::size_t>(g);
      sum += score(i, prev) - score(i, next);
      ++count;
    }
  }
  return sum / count;
}

}  // namespace

ProbeReport directional_probe(int grid_size, int trials, const std::optional<AblationSpec>& spec,
                              const ProbeOptions& options) {
  if (grid_size < 4) throw std::invalid_argument("grid_size must be >= 4");
  if (trials < 100) throw std::invalid_argument("trials must be >= 100");
  const RopeConfig config = RopeConfig::rope2d(options.head_dim, options.base);
  config.validate();
  const PositionGrid grid = image_grid(grid_size, grid_size);
  if (spec) spec->validate(grid.dims);

  std::vector<TrialMargins> per_trial(static_cast<std::size_t>(trials));
  auto run_trial = [&](std::size_t t) {
    Rng rng(mix_seed(options.content_seed, t));
    const auto d = static_cast<std::size_t>(config.head_dim);
    std::vector<double> qh(d), qv(d);
    for (double& v : qh) v = rng.normal();
    for (double& v : qv) v = rng.normal();
    // Keys are the query rotated one step back along the attended axis, so
    // the score peaks at the left (resp. upper) neighbour.
    const std::int64_t one_col[2] = {0, 1};
    const std::int64_t one_row[2] = {1, 0};
    const auto kh = apply_rope(qh, one_col, config);
    const auto kv = apply_rope(qv, one_row, config);

    TrialMargins m;
    m.base_h = neighbour_gap(qh, kh, grid, grid_size, true, config);
    m.base_v = neighbour_gap(qv, kv, grid, grid_size, false, config);
    if (spec) {
      AblationSpec trial_spec = *spec;
      trial_spec.rng_seed = mix_seed(spec->rng_seed, t);
      const PositionGrid ablated = ablate_positions(grid, trial_spec);
      m.abl_h = neighbour_gap(qh, kh, ablated, grid_size, true, config);
      m.abl_v = neighbour_gap(qv, kv, ablated, grid_size, false, config);
    } else {
      m.abl_h = m.base_h;
      m.abl_v = m.base_v;
    }
    per_trial[t] = m;
  };

  const unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&] {
        for (std::size_t t = next++; t < per_trial.size(); t = next++) run_trial(t);
      });
    }
  }

  ProbeReport report;
  report.scheme = std::string(to_string(config.scheme));
  report.spec = spec;
  report.grid_size = grid_size;
  report.trials = trials;
  for (const auto& m : per_trial) {
    report.baseline_horizontal += m.base_h;
    report.baseline_vertical += m.base_v;
    report.horizontal_margin += m.abl_h;
    report.vertical_margin += m.abl_v;
  }
  report.baseline_horizontal /= trials;
  report.baseline_vertical /= trials;
  report.horizontal_margin /= trials;
  report.vertical_margin /= trials;
  return report;
}

namespace {

RopeConfig random_config(Rng& rng) {
  const int head_dim = 2 * static_cast<int>(rng.range(3, 48));
  const int pairs = head_dim / 2;
  switch (rng.below(3)) {
    case 0: return RopeConfig::rope1d(head_dim);
    case 1: return RopeConfig::rope2d(head_dim);
    default: {
      const int t = static_cast<int>(rng.range(1, pairs - 2));
      const int x = static_cast<int>(rng.range(1, pairs - t - 1));
      return RopeConfig::mrope(head_dim, t, x, pairs - t - x);
    }
  }
}

PositionGrid random_grid(Rng& rng, Scheme scheme) {
  PositionGrid g;
  g.dims = scheme_dims(scheme);
  g.index.assign(g.dims.size(), {});
  const auto n = rng.range(2, 40);
  for (std::int64_t i = 0; i < n; ++i) {
    g.modality.push_back(rng.bernoulli(0.5) ? Modality::vision : Modality::text);
    for (auto& col : g.index) col.push_back(rng.range(0, 63));
  }
  return g;
}

AblationSpec random_spec(Rng& rng, const PositionGrid& grid, Strategy strategy) {
  AblationSpec spec;
  spec.strategy = strategy;
  for (Dim d : grid.dims) {
    if (rng.bernoulli(0.5)) spec.dims.push_back(d);
  }
  if (spec.dims.empty()) spec.dims.push_back(grid.dims[rng.below(grid.dims.size())]);
  spec.scope = std::array{Scope::text, Scope::vision, Scope::both}[rng.below(3)];
  if (strategy == Strategy::constant) spec.reference = rng.bernoulli(0.5) ? Reference::first : Reference::last;
  spec.rng_seed = rng.next();
  return spec;
}

std::vector<double> normal_vector(Rng& rng, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = rng.normal();
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool has_scope(const PositionGrid& g, Scope scope) {
  return std::any_of(g.modality.begin(), g.modality.end(), [&](Modality m) { return in_scope(m, scope); });
}

}  // namespace

std::vector<SuiteCheck> property_suite(const SuiteOptions& options) {
  std::vector<SuiteCheck> checks;
  Rng rng(mix_seed(options.seed, 0x50BE));

  {
    SuiteCheck c{"norm_preservation", true, options.norm_vectors, 0.0, 1e-9};
    for (int i = 0; i < options.norm_vectors; ++i) {
      const RopeConfig cfg = random_config(rng);
      const auto v = normal_vector(rng, cfg.head_dim);
      std::vector<std::int64_t> pos(cfg.dim_split.size());
      for (auto& p : pos) p = rng.range(-4096, 4096);
      const auto r = apply_rope(v, pos, cfg);
      const double n0 = std::sqrt(dot(v, v));
      const double err = std::abs(std::sqrt(dot(r, r)) - n0) / n0;
      c.worst = std::max(c.worst, err);
    }
    c.passed = c.worst <= c.tolerance;
    checks.push_back(c);
  }

  {
    SuiteCheck c{"rope1d_relative_identity", true, options.identity_cases, 0.0, 1e-6};
    for (int i = 0; i < options.identity_cases; ++i) {
      const RopeConfig cfg = RopeConfig::rope1d(2 * static_cast<int>(rng.range(1, 64)));
      const auto q = normal_vector(rng, cfg.head_dim);
      const auto k = normal_vector(rng, cfg.head_dim);
      const std::int64_t m = rng.range(0, 2048);
      const std::int64_t n = rng.range(0, 2048);
      const std::int64_t mn = m - n;
      const double lhs = dot(apply_rope(q, std::span(&m, 1), cfg), apply_rope(k, std::span(&n, 1), cfg));
      const double rhs = dot(apply_rope(q, std::span(&mn, 1), cfg), k);
      c.worst = std::max(c.worst, std::abs(lhs - rhs));
    }
    c.passed = c.worst <= c.tolerance;
    checks.push_back(c);
  }

  SuiteCheck shuffle{"shuffle_preserves_multiset", true, 0, 0.0, 0.0};
  SuiteCheck mask{"mask_zeroes_and_is_idempotent", true, 0, 0.0, 0.0};
  SuiteCheck constant{"constant_single_value_and_idempotent", true, 0, 0.0, 0.0};
  SuiteCheck untouched{"out_of_scope_untouched", true, 0, 0.0, 0.0};
  SuiteCheck mask_all{"mask_all_equals_no_pe_attention", true, 0, 0.0, 0.0};
  for (int i = 0; i < options.grid_cases; ++i) {
    const RopeConfig cfg = random_config(rng);
    const PositionGrid grid = random_grid(rng, cfg.scheme);
    for (Strategy strategy : {Strategy::mask, Strategy::shuffle, Strategy::constant}) {
      const AblationSpec spec = random_spec(rng, grid, strategy);
      if (!has_scope(grid, spec.scope)) continue;
      const PositionGrid out = ablate_positions(grid, spec);
      for (std::size_t d = 0; d < grid.dims.size(); ++d) {
        const bool targeted = std::find(spec.dims.begin(), spec.dims.end(), grid.dims[d]) != spec.dims.end();
        std::vector<std::int64_t> before, after, values;
        for (std::size_t t = 0; t < grid.tokens(); ++t) {
          const bool scoped = in_scope(grid.modality[t], spec.scope);
          if (!targeted || !scoped) {
            ++untouched.cases;
            untouched.passed = untouched.passed && out.index[d][t] == grid.index[d][t];
            continue;
          }
          before.push_back(grid.index[d][t]);
          after.push_back(out.index[d][t]);
        }
        if (!targeted) continue;
        switch (strategy) {
          case Strategy::shuffle:
            std::sort(before.begin(), before.end());
            std::sort(after.begin(), after.end());
            ++shuffle.cases;
            shuffle.passed = shuffle.passed && before == after;
            break;
          case Strategy::mask:
            ++mask.cases;
            mask.passed = mask.passed && std::all_of(after.begin(), after.end(), [](auto v) { return v == 0; });
            break;
          case Strategy::constant:
            ++constant.cases;
            constant.passed = constant.passed && std::adjacent_find(after.begin(), after.end(), std::not_equal_to<>()) == after.end();
            break;
        }
      }
      if (strategy != Strategy::shuffle) {
        const PositionGrid twice = ablate_positions(out, spec);
        auto& check = strategy == Strategy::mask ? mask : constant;
        check.passed = check.passed && twice.index == out.index;
      }
    }

    const auto n = static_cast<Eigen::Index>(grid.tokens());
    const Eigen::MatrixXd Q = Eigen::MatrixXd::NullaryExpr(n, cfg.head_dim, [&] { return rng.normal(); });
    const Eigen::MatrixXd K = Eigen::MatrixXd::NullaryExpr(n, cfg.head_dim, [&] { return rng.normal(); });
    const AblationSpec all{Strategy::mask, grid.dims, Scope::both, std::nullopt, 0};
    const Eigen::MatrixXd plain = (Q * K.transpose()) / std::sqrt(static_cast<double>(cfg.head_dim));
    ++mask_all.cases;
    mask_all.passed = mask_all.passed && attention_scores(Q, K, grid, cfg, &all) == plain;
  }
  for (auto* c : {&shuffle, &mask, &constant, &untouched, &mask_all}) checks.push_back(*c);
  return checks;
}

nlohmann::ordered_json suite_to_json(std::span<const SuiteCheck> checks, double seconds) {
  nlohmann::ordered_json j;
  bool all = true;
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    all = all && c.passed;
    list.push_back({{"name", c.name}, {"passed", c.passed}, {"cases", c.cases}, {"worst_error", c.worst},
                    {"tolerance", c.tolerance}});
  }
  j["passed"] = all;
  j["seconds"] = seconds;
  j["checks"] = std::move(list);
  return j;
}

}  // namespace forge::rope
