#include "camiqa/evaluation.hpp"

#include "camiqa/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace camiqa {

namespace {

void check_lengths(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("correlation inputs differ in length");
  if (x.size() < 3) throw DataError("correlation needs at least 3 values");
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) throw NumericalError("correlation of a zero-variance input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<size_t> order(v.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double srcc(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double plcc(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y);
  return pearson(x, y);
}

double fg_acc(std::span<const double> predictions, std::span<const double> labels) {
  if (predictions.size() != labels.size()) throw DataError("fg_acc inputs differ in length");
  size_t counted = 0, correct = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0.5) continue;
    ++counted;
    if ((labels[i] > 0.5 && predictions[i] > 0.5) || (labels[i] < 0.5 && predictions[i] < 0.5)) {
      ++correct;
    }
  }
  if (counted == 0) throw DataError("fg_acc: no pair with a hard preference label");
  return static_cast<double>(correct) / static_cast<double>(counted);
}

double score_based_fg_acc(std::span<const double> scores_p, std::span<const double> scores_q,
                          std::span<const double> labels) {
  if (scores_p.size() != scores_q.size()) throw DataError("score lists differ in length");
  std::vector<double> pred(scores_p.size());
  for (size_t i = 0; i < pred.size(); ++i) pred[i] = scores_p[i] > scores_q[i] ? 1.0 : 0.0;
  // A tie predicts "q preferred" via 0; flip it to an always-wrong value so
  // ties never count as correct on either label side.
  for (size_t i = 0; i < pred.size(); ++i) {
    if (scores_p[i] == scores_q[i]) pred[i] = labels[i] > 0.5 ? 0.0 : 1.0;
  }
  return fg_acc(pred, labels);
}

double score_based_fg_acc(const std::map<std::string, double>& scores,
                          std::span<const PairPreference> pairs, Attribute attribute) {
  std::vector<double> sp, sq, lab;
  for (const auto& pr : pairs) {
    auto p = scores.find(pr.image_p);
    auto q = scores.find(pr.image_q);
    if (p == scores.end() || q == scores.end()) {
      throw DataError("missing score for pair " + pr.image_p + "/" + pr.image_q);
    }
    sp.push_back(p->second);
    sq.push_back(q->second);
    lab.push_back(at(pr.labels, attribute));
  }
  return score_based_fg_acc(sp, sq, lab);
}

std::vector<GmadPair> gmad_select(std::span<const double> defender,
                                  std::span<const double> attacker, int n_levels, double tol) {
  if (defender.size() != attacker.size()) throw DataError("gmad: score lists differ in length");
  if (n_levels < 1) throw UsageError("gmad: n_levels must be positive");
  if (defender.empty()) return {};
  const auto [lo_it, hi_it] = std::minmax_element(defender.begin(), defender.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<GmadPair> out;
  for (int k = 0; k < n_levels; ++k) {
    const double level = n_levels == 1 ? lo : lo + (hi - lo) * k / (n_levels - 1);
    std::vector<size_t> members;
    for (size_t i = 0; i < defender.size(); ++i) {
      if (std::abs(defender[i] - level) <= tol) members.push_back(i);
    }
    if (members.size() < 2) continue;
    GmadPair best{level, members[0], members[1], -1.0};
    for (size_t a = 0; a < members.size(); ++a) {
      for (size_t b = a + 1; b < members.size(); ++b) {
        const double gap = std::abs(attacker[members[a]] - attacker[members[b]]);
        if (gap > best.attacker_gap) best = {level, members[a], members[b], gap};
      }
    }
    out.push_back(best);
  }
  return out;
}

void write_report(std::ostream& out, const MetricReport& r) {
  char buf[64];
  auto emit = [&](const char* name, const std::map<Attribute, double>& m) {
    for (const auto& [attr, v] : m) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << name << ' ' << attribute_name(attr) << ' ' << buf << '\n';
    }
  };
  emit("srcc", r.srcc);
  emit("plcc", r.plcc);
  emit("fg_acc", r.fg_acc);
  out << "count images " << r.images << '\n';
  out << "count pairs " << r.pairs << '\n';
}

std::string format_report(const MetricReport& report) {
  std::ostringstream os;
  write_report(os, report);
  return os.str();
}

MetricReport parse_report(std::istream& in) {
  MetricReport r;
  std::string name, key;
  double value = 0;
  while (in >> name >> key >> value) {
    if (name == "count") {
      if (key == "images") r.images = static_cast<size_t>(value);
      else if (key == "pairs") r.pairs = static_cast<size_t>(value);
      continue;
    }
    const Attribute a = attribute_from_name(key);
    if (name == "srcc") r.srcc[a] = value;
    else if (name == "plcc") r.plcc[a] = value;
    else if (name == "fg_acc") r.fg_acc[a] = value;
    else throw DataError("unknown metric '" + name + "'");
  }
  return r;
}

}  // namespace camiqa
