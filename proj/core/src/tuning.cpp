#include "camiqa/tuning.hpp"

#include "camiqa/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace camiqa {

size_t SweepSpec::size() const {
  if (steps.empty()) return 0;
  size_t n = 1;
  for (const auto& s : steps) n *= s.size();
  return n;
}

void SweepSpec::validate() const {
  scene.validate();
  if (varied.size() != steps.size() || varied.empty()) {
    throw UsageError("sweep needs one step list per varied parameter");
  }
  for (size_t i = 0; i < varied.size(); ++i) {
    for (size_t j = i + 1; j < varied.size(); ++j) {
      if (varied[i] == varied[j]) throw UsageError("sweep varies a parameter twice");
    }
    if (steps[i].empty()) throw UsageError("empty step list for " + std::string(param_name(varied[i])));
  }
  if (size() < 2) throw UsageError("sweep needs at least two configurations");
  base.validate();
}

SweepSpec make_sweep(const SceneSpec& scene, std::vector<Param> varied, int n_steps,
                     double half_span, std::uint64_t seed, const ParameterRanges& ranges) {
  if (n_steps < 2) throw UsageError("sweep needs at least two steps");
  SweepSpec spec;
  spec.scene = scene;
  spec.base = scene.optimal_params;
  spec.seed = seed;
  spec.varied = std::move(varied);
  for (auto p : spec.varied) {
    const double centre = normalize_value(p, scene.optimal_params.get(p), ranges);
    std::vector<double> values;
    for (int i = 0; i < n_steps; ++i) {
      const double t = -1.0 + 2.0 * i / static_cast<double>(n_steps - 1);
      double unit = std::clamp(centre + half_span * t, 0.0, 1.0);
      // Land exactly on the optimum at the centre step.
      values.push_back(2 * i == n_steps - 1 ? scene.optimal_params.get(p)
                                            : denormalize_value(p, unit, ranges));
    }
    spec.steps.push_back(std::move(values));
  }
  return spec;
}

std::vector<SweepCandidate> simulate_sweep(const SweepSpec& spec, const ParameterRanges& ranges) {
  spec.validate();
  std::vector<SweepCandidate> out;
  const size_t n = spec.size();
  for (size_t k = 0; k < n; ++k) {
    CameraParameters p = spec.base;
    size_t rest = k;
    for (size_t v = spec.varied.size(); v-- > 0;) {
      const auto& s = spec.steps[v];
      p.set(spec.varied[v], s[rest % s.size()]);
      rest /= s.size();
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "cfg%03zu", k);
    SweepCandidate c;
    c.id = buf;
    c.params = p;
    c.sample = render_image(spec.scene, p, spec.scene.scene_id + "_" + c.id, ranges);
    out.push_back(std::move(c));
  }
  return out;
}

TuningResult rank_by_tournament(size_t n, const RawComparator& raw, std::span<const double> tiebreak) {
  if (n < 2) throw UsageError("ranking needs at least two candidates");
  if (!tiebreak.empty() && tiebreak.size() != n) throw UsageError("tie-break scores misaligned");
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (i != j) r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = raw(i, j);
    }
  }
  TuningResult res;
  res.borda.assign(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
      total += (r(a, b) + 1.0 - r(b, a)) / 2.0;
    }
    res.borda[i] = total / static_cast<double>(n - 1);
  }
  res.scores.assign(tiebreak.begin(), tiebreak.end());
  res.ranking.resize(n);
  std::iota(res.ranking.begin(), res.ranking.end(), size_t{0});
  std::sort(res.ranking.begin(), res.ranking.end(), [&](size_t a, size_t b) {
    if (res.borda[a] != res.borda[b]) return res.borda[a] > res.borda[b];
    if (!res.scores.empty() && res.scores[a] != res.scores[b]) return res.scores[a] > res.scores[b];
    return a < b;
  });
  res.winner = res.ranking.front();
  return res;
}

TuningResult rank_candidates(std::span<const SweepCandidate> candidates, const QualityModel& model,
                             const TrainConfig& cfg) {
  const size_t n = candidates.size();
  if (n < 2) throw UsageError("ranking needs at least two candidates");
  std::vector<Eigen::RowVectorXd> feats;
  std::vector<double> scores;
  for (const auto& c : candidates) {
    const auto prep = preprocess(c.sample, cfg.resize, cfg.crop, center_draw(cfg.resize, cfg.crop));
    feats.push_back(model.embed(prep.image, prep.boxes, prep.params));
    scores.push_back(at(predict_attributes(model.heads, feats.back()), Attribute::overall));
  }
  auto res = rank_by_tournament(
      n,
      [&](size_t i, size_t j) {
        return at(compare_pair_raw(model.heads, feats[i], feats[j]), Attribute::overall);
      },
      scores);
  for (const auto& c : candidates) res.ids.push_back(c.id);
  return res;
}

TuningResult score_rank_candidates(std::span<const double> scores) {
  if (scores.size() < 2) throw UsageError("ranking needs at least two candidates");
  TuningResult res;
  res.scores.assign(scores.begin(), scores.end());
  res.ranking.resize(scores.size());
  std::iota(res.ranking.begin(), res.ranking.end(), size_t{0});
  std::stable_sort(res.ranking.begin(), res.ranking.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  res.winner = res.ranking.front();
  return res;
}

double win_rate(std::span<const double> judge_a, std::span<const double> judge_b) {
  if (judge_a.empty()) throw DataError("win rate over an empty set of sweeps");
  if (judge_a.size() != judge_b.size()) throw DataError("win rate inputs are not paired");
  double wins = 0.0;
  for (size_t i = 0; i < judge_a.size(); ++i) {
    if (judge_a[i] > judge_b[i]) {
      wins += 1.0;
    } else if (judge_a[i] == judge_b[i]) {
      wins += 0.5;
    }
  }
  return wins / static_cast<double>(judge_a.size());
}

void write_tuning_result(std::ostream& out, const TuningResult& result,
                         std::span<const SweepCandidate> candidates) {
  out << "winner " << candidates[result.winner].id << '\n';
  for (size_t rank = 0; rank < result.ranking.size(); ++rank) {
    const size_t i = result.ranking[rank];
    out << "rank " << rank + 1 << ' ' << candidates[i].id;
    if (!result.borda.empty()) out << " borda " << format_double(result.borda[i]);
    if (!result.scores.empty()) out << " score " << format_double(result.scores[i]);
    for (auto p : kParams) out << ' ' << param_name(p) << '=' << format_double(candidates[i].params.get(p));
    out << '\n';
  }
}

}  // namespace camiqa
