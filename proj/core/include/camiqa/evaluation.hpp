#pragma once

#include "camiqa/types.hpp"

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace camiqa {

/// Spearman rank correlation with average ranks for ties.
/// Requires equal lengths >= 3; throws NumericalError on zero rank variance.
double srcc(std::span<const double> x, std::span<const double> y);

/// Pearson linear correlation without any nonlinear pre-mapping.
double plcc(std::span<const double> x, std::span<const double> y);

/// Average (fractional) ranks, 1-based.
std::vector<double> average_ranks(std::span<const double> v);

/// Fraction of hard-labelled pairs whose predicted direction agrees with the
/// label. Pairs labelled exactly 0.5 are excluded; throws DataError when no
/// pair remains.
double fg_acc(std::span<const double> predictions, std::span<const double> labels);

/// fg_acc with c_hat = 1[s_p > s_q]; equal scores count as wrong on hard pairs.
double score_based_fg_acc(std::span<const double> scores_p, std::span<const double> scores_q,
                          std::span<const double> labels);
double score_based_fg_acc(const std::map<std::string, double>& scores,
                          std::span<const PairPreference> pairs,
                          Attribute attribute = Attribute::overall);

struct GmadPair {
  double level = 0;   // defender bin centre
  size_t first = 0;   // image index, first < second
  size_t second = 0;
  double attacker_gap = 0;
};

/// gMAD pair selection: defender levels are n_levels evenly spaced values
/// from min to max (inclusive); images within tol of a level form its bin and
/// the pair with the largest attacker difference is returned. Ties go to the
/// smallest (first, second). Bins with fewer than two images are skipped.
std::vector<GmadPair> gmad_select(std::span<const double> defender,
                                  std::span<const double> attacker, int n_levels, double tol);

struct MetricReport {
  std::map<Attribute, double> srcc;
  std::map<Attribute, double> plcc;
  std::map<Attribute, double> fg_acc;
  size_t images = 0;
  size_t pairs = 0;

  bool operator==(const MetricReport&) const = default;
};

/// One metric per line: "<name> <attribute> <value>", then count lines.
void write_report(std::ostream& out, const MetricReport& report);
std::string format_report(const MetricReport& report);
MetricReport parse_report(std::istream& in);

}  // namespace camiqa
