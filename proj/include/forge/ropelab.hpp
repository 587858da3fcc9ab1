#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace forge::rope {

enum class Scheme { rope1d, rope2d, mrope };
// seq: the single index of 1D-RoPE; h/w: image row/column; t/x/y: M-RoPE axes.
enum class Dim { seq, h, w, t, x, y };

std::string_view to_string(Scheme s);
std::string_view to_string(Dim d);
std::optional<Scheme> parse_scheme(std::string_view s);
std::optional<Dim> parse_dim(std::string_view s);

// Dimensions a scheme consumes, in pair-group order.
std::vector<Dim> scheme_dims(Scheme s);

struct RopeConfig {
  Scheme scheme = Scheme::rope1d;
  int head_dim = 64;
  double base = 10000.0;
  // Rotary pair groups per dimension (same order as scheme_dims). Groups are
  // contiguous blocks: rope2d = [h | w], mrope = [t | x | y].
  std::vector<int> dim_split;

  static RopeConfig rope1d(int head_dim, double base = 10000.0);
  // Halves the pair groups between h and w.
  static RopeConfig rope2d(int head_dim, double base = 10000.0);
  static RopeConfig mrope(int head_dim, int t_pairs, int x_pairs, int y_pairs, double base = 10000.0);

  // Throws DimensionMismatch.
  void validate() const;
  // Rotation frequency of every pair group. rope2d restarts the spectrum in
  // each block (each axis sees the full range); rope1d and mrope slice one
  // global spectrum base^(-2i/d).
  std::vector<double> frequencies() const;
  // Which dimension slot (index into scheme_dims) drives each pair group.
  std::vector<int> group_owner() const;
};

// Rotates each consecutive coordinate pair by position * theta of its group.
// `positions` has one entry per scheme dimension. Offsets may be negative.
// Throws DimensionMismatch.
std::vector<double> apply_rope(std::span<const double> vector, std::span<const std::int64_t> positions,
                               const RopeConfig& config);

enum class Modality { text, vision };

struct PositionGrid {
  std::vector<Dim> dims;
  std::vector<Modality> modality;                 // one per token
  std::vector<std::vector<std::int64_t>> index;   // [dim][token]

  std::size_t tokens() const { return modality.size(); }
  std::vector<std::int64_t> positions_of(std::size_t token) const;
  const std::vector<std::int64_t>& column(Dim d) const;
  std::vector<std::int64_t>& column(Dim d);
};

// Row-major grid of vision tokens with h = row, w = column.
PositionGrid image_grid(int rows, int cols);
// 1D sequence 0..n-1.
PositionGrid sequence_grid(int tokens, Modality modality = Modality::text);

enum class Strategy { mask, shuffle, constant };
enum class Scope { text, vision, both };
enum class Reference { first, last };

std::string_view to_string(Strategy s);
std::string_view to_string(Scope s);
std::string_view to_string(Reference r);
std::optional<Strategy> parse_strategy(std::string_view s);
std::optional<Scope> parse_scope(std::string_view s);
std::optional<Reference> parse_reference(std::string_view s);

struct AblationSpec {
  Strategy strategy = Strategy::mask;
  std::vector<Dim> dims;
  Scope scope = Scope::both;
  std::optional<Reference> reference;  // constant only
  std::uint64_t rng_seed = 0;          // shuffle only

  // Throws std::invalid_argument when the spec does not fit the grid's dims.
  void validate(std::span<const Dim> available) const;
  std::string label() const;
};

nlohmann::ordered_json spec_to_json(const AblationSpec& spec);

// mask: zero; shuffle: seeded permutation over in-scope tokens; constant:
// copy the first/last in-scope token's index. Throws EmptyScope.
PositionGrid ablate_positions(const PositionGrid& grid, const AblationSpec& spec);

// Row i of queries/keys is token i. score(i, j) = <R(p_i) q_i, R(p_j) k_j> / sqrt(d).
Eigen::MatrixXd attention_scores(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& keys, const PositionGrid& grid,
                                 const RopeConfig& config, const AblationSpec* spec = nullptr);

struct ProbeReport {
  std::string scheme;
  std::optional<AblationSpec> spec;
  int grid_size = 0;
  int trials = 0;
  double baseline_horizontal = 0.0;
  double baseline_vertical = 0.0;
  double horizontal_margin = 0.0;
  double vertical_margin = 0.0;

  // 1 - ablated / baseline, as a fraction.
  double horizontal_reduction() const;
  double vertical_change() const;
};

nlohmann::ordered_json probe_to_json(const ProbeReport& report);

struct ProbeOptions {
  int head_dim = 64;
  double base = 10000.0;
  std::uint64_t content_seed = 1;
  unsigned threads = 0;
};

// 2D-RoPE probe over a grid_size x grid_size image. A "look left" head (key =
// query rotated by one column) scores the true left neighbour against the
// right one; horizontal_margin is the mean gap over interior tokens and
// trials. vertical_margin uses a "look up" head the same way. Content vectors
// are shared by all tokens, so only positions separate the neighbours.
ProbeReport directional_probe(int grid_size, int trials, const std::optional<AblationSpec>& spec,
                              const ProbeOptions& options = {});

struct SuiteCheck {
  std::string name;
  bool passed = false;
  std::int64_t cases = 0;
  double worst = 0.0;  // largest observed error (0 for exact checks)
  double tolerance = 0.0;
};

struct SuiteOptions {
  std::uint64_t seed = 1;
  int norm_vectors = 10000;
  int identity_cases = 1000;
  int grid_cases = 200;
};

// Randomized invariant checks: norm preservation, the rope1d relative-position
// identity, ablation multiset/idempotence rules and mask-all equivalence.
std::vector<SuiteCheck> property_suite(const SuiteOptions& options = {});
nlohmann::ordered_json suite_to_json(std::span<const SuiteCheck> checks, double seconds);

}  // namespace forge::rope
