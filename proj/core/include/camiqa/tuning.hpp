#pragma once

// Camera tuning by pairwise ranking: render a parameter sweep, play a
// round-robin tournament with the comparison heads, pick the Borda winner.

#include "camiqa/synthetic.hpp"
#include "camiqa/training.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace camiqa {

/// Cartesian product of per-parameter step lists over a base configuration.
struct SweepSpec {
  SceneSpec scene;
  std::vector<Param> varied;
  std::vector<std::vector<double>> steps;  // one list of physical values per varied param
  CameraParameters base;                   // values of the parameters not varied
  std::uint64_t seed = 0;

  size_t size() const;
  void validate() const;
};

/// Evenly spaced steps in normalized units centred on the scene optimum,
/// +-half_span, clamped to the range table; an odd count contains the optimum.
SweepSpec make_sweep(const SceneSpec& scene, std::vector<Param> varied, int n_steps,
                     double half_span, std::uint64_t seed, const ParameterRanges& ranges = {});

struct SweepCandidate {
  std::string id;
  CameraParameters params;
  ImageSample sample;
};

/// One render per configuration, in row-major order of the step lists.
std::vector<SweepCandidate> simulate_sweep(const SweepSpec& spec, const ParameterRanges& ranges = {});

struct TuningResult {
  std::vector<std::string> ids;
  std::vector<size_t> ranking;  // candidate indices, best first
  std::vector<double> borda;    // per candidate; empty for score-based ranking
  std::vector<double> scores;   // tie-break or ranking scores per candidate
  size_t winner = 0;
};

/// Raw directional comparator: probability that i beats j (not symmetrized).
using RawComparator = std::function<double(size_t i, size_t j)>;

/// Round robin over all ordered pairs (n(n-1) comparator calls), symmetrized
/// c(i,j) = (raw(i,j) + 1 - raw(j,i)) / 2, Borda = mean_j c(i,j). Ranking by
/// Borda, then tiebreak score, then index.
TuningResult rank_by_tournament(size_t n, const RawComparator& raw,
                                std::span<const double> tiebreak);

/// Tournament with the model's overall comparison head; overall score head breaks ties.
TuningResult rank_candidates(std::span<const SweepCandidate> candidates, const QualityModel& model,
                             const TrainConfig& cfg);

/// Descending score, ties by index.
TuningResult score_rank_candidates(std::span<const double> scores);

/// Fraction of sweeps with judge(winner_a) > judge(winner_b); ties count 1/2.
double win_rate(std::span<const double> judge_a, std::span<const double> judge_b);

void write_tuning_result(std::ostream& out, const TuningResult& result,
                         std::span<const SweepCandidate> candidates);

}  // namespace camiqa
