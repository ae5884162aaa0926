// Acceptance runner. `acceptance` runs every criterion; `acceptance N` runs one.
// Prints one PASS/FAIL line per criterion and exits non-zero on any failure.

#include <camiqa/annotation.hpp>
#include <camiqa/evaluation.hpp>
#include <camiqa/gcpf.hpp>
#include <camiqa/heads.hpp>
#include <camiqa/hfe.hpp>
#include <camiqa/manifest.hpp>
#include <camiqa/runtime.hpp>
#include <camiqa/synthetic.hpp>
#include <camiqa/training.hpp>
#include <camiqa/tuning.hpp>

#include "cli.hpp"
#include "gradcheck.hpp"
#include "tempdir.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

namespace camiqa {
namespace {

using ad::Matrix;
using ad::Tape;
using ad::Var;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Matrix randn(Eigen::Index r, Eigen::Index c, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ",") + fmt("%.3f", x);
  return s;
}

// ---------------------------------------------------------------- 1

double preference_rule(double s_p, double s_q, const std::vector<double>& votes) {
  if (std::abs(s_p - s_q) > 0.8) return s_p > s_q ? 1.0 : 0.0;
  double total = 0.0;
  for (double v : votes) total += v;
  return total / static_cast<double>(votes.size());
}

MOSRecord mos_of(const std::string& id, double overall) {
  MOSRecord m;
  m.image_id = id;
  m.mos = {overall, 3, 3, 3, 3};
  m.count = 1;
  return m;
}

Outcome criterion1() {
  int mismatches = 0, cases = 0;
  for (int k = 1; k <= 4; ++k) {
    std::vector<int> idx(static_cast<size_t>(k), 0);
    while (true) {
      std::vector<double> votes;
      for (int i : idx) votes.push_back(0.5 * i);
      for (double ds : {0.0, 0.4, 0.8, 0.81, 1.5}) {
        for (double sign : {1.0, -1.0}) {
          const double s_p = 2.0 + (sign > 0 ? ds : 0.0), s_q = 2.0 + (sign > 0 ? 0.0 : ds);
          const std::vector<MOSRecord> imgs = {mos_of("p", s_p), mos_of("q", s_q)};
          auto pair = build_scene_pairs(imgs, "s")[0];
          if (pair.fine_grained) pair = refine_preference(pair, votes);
          mismatches += at(pair.labels, Attribute::overall) != preference_rule(s_p, s_q, votes);
          ++cases;
        }
      }
      size_t pos = 0;
      while (pos < idx.size() && ++idx[pos] == 3) idx[pos++] = 0;
      if (pos == idx.size()) break;
    }
  }
  return {mismatches == 0, fmt("%d cases, %d mismatches", cases, mismatches)};
}

// ---------------------------------------------------------------- 2

std::vector<double> counting_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      less += w < v[i];
      equal += w == v[i];
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

double pearson_direct(const std::vector<double>& x, const std::vector<double>& y) {
  long double n = static_cast<long double>(x.size()), sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += static_cast<long double>(x[i]) * x[i];
    syy += static_cast<long double>(y[i]) * y[i];
    sxy += static_cast<long double>(x[i]) * y[i];
  }
  const long double cov = n * sxy - sx * sy;
  return static_cast<double>(cov / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy)));
}

Outcome criterion2() {
  Rng rng(2024);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double worst_s = 0, worst_p = 0, worst_mono = 0;
  std::vector<std::pair<std::vector<double>, std::vector<double>>> samples;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x(50), y(50);
    for (size_t i = 0; i < 50; ++i) {
      x[i] = u(rng);
      y[i] = 0.6 * x[i] + u(rng);
      // Every other vector gets heavy ties.
      if (t % 2) {
        x[i] = std::round(x[i]);
        y[i] = std::round(y[i] * 2) / 2;
      }
    }
    worst_s = std::max(worst_s, std::abs(srcc(x, y) - pearson_direct(counting_ranks(x), counting_ranks(y))));
    worst_p = std::max(worst_p, std::abs(plcc(x, y) - pearson_direct(x, y)));
    samples.emplace_back(std::move(x), std::move(y));
  }
  std::uniform_real_distribution<double> coef(0.2, 2.0);
  for (int k = 0; k < 20; ++k) {
    const double a = coef(rng), b = coef(rng), c = coef(rng) - 1.0;
    const std::function<double(double)> transforms[] = {
        [=](double v) { return a * std::exp(b * v) + c; },
        [=](double v) { return a * v * v * v + b * v + c; },
        [=](double v) { return std::atan(a * v) * b + c; },
        [=](double v) { return a / (1.0 + std::exp(b * v)) + c; },  // decreasing
    };
    const auto& f = transforms[k % 4];
    const bool decreasing = k % 4 == 3;
    for (int s = 0; s < 10; ++s) {
      const auto& [x, y] = samples[static_cast<size_t>(k * 10 + s)];
      std::vector<double> fx(x.size());
      std::transform(x.begin(), x.end(), fx.begin(), f);
      const double want = decreasing ? -srcc(x, y) : srcc(x, y);
      worst_mono = std::max(worst_mono, std::abs(srcc(fx, y) - want));
    }
  }
  const bool pass = worst_s <= 1e-9 && worst_p <= 1e-9 && worst_mono <= 1e-12;
  return {pass, fmt("max |srcc-brute| %.2e, |plcc-brute| %.2e, monotone drift %.2e", worst_s, worst_p,
                    worst_mono)};
}

// ---------------------------------------------------------------- 3

std::vector<ad::Parameter*> all_params(nn::ParameterStore& store) {
  std::vector<ad::Parameter*> out;
  for (auto& p : store.all()) out.push_back(&p);
  return out;
}

Outcome criterion3() {
  constexpr int C = 8, D = 16, kSeeds = 20;
  std::map<std::string, double> worst;
  for (int seed = 0; seed < kSeeds; ++seed) {
    {
      nn::ParameterStore store;
      Rng rng(3000 + seed);
      CrossAttention ca(store, "ca", C, rng);
      ad::Parameter fh("f_h", randn(1, C, rng)), cells("cells", randn(9, C, rng));
      const Matrix w = randn(1, C, rng);
      auto params = all_params(store);
      params.push_back(&fh);
      params.push_back(&cells);
      const auto r = testing::check_gradients(params, [&](Tape& t) {
        return ad::sum(ad::mul(ca(t, t.param(fh), t.param(cells)), t.constant(w)));
      });
      worst["cross_attention"] = std::max(worst["cross_attention"], r.worst_relative_error);
    }
    {
      nn::ParameterStore store;
      Rng rng(3100 + seed);
      PartitionTransform pt(store, "pt", C, rng);
      ad::Parameter x("x", randn(5 * 6, C, rng));
      const Matrix w = randn(30, C, rng);
      auto params = all_params(store);
      params.push_back(&x);
      std::uniform_real_distribution<double> u(0, 90);
      const double x0 = u(rng), y0 = u(rng) * 0.8;
      const auto part = partition_nine(5, 6, std::vector<Box>{{x0, y0, x0 + 10, y0 + 10}}, 16);
      const auto r = testing::check_gradients(params, [&](Tape& t) {
        FeatureMap map{t.param(x), 5, 6, 16};
        return ad::sum(ad::mul(pt(t, map, part).data, t.constant(w)));
      });
      worst["partition_transform"] = std::max(worst["partition_transform"], r.worst_relative_error);
    }
    {
      nn::ParameterStore store;
      Rng rng(3200 + seed);
      GatLayer gat(store, "g", GatLayerConfig{4, D, D / 4, true, true}, rng);
      ad::Parameter x("x", randn(kGraphNodes, D, rng));
      auto params = all_params(store);
      params.push_back(&x);
      const auto mask = adjacency_mask(build_edges(), kGraphNodes);
      const Matrix w = randn(kGraphNodes, D, rng);
      const auto r = testing::check_gradients(params, [&](Tape& t) {
        return ad::sum(ad::mul(gat(t, t.param(x), mask), t.constant(w)));
      });
      worst["gat_layer"] = std::max(worst["gat_layer"], r.worst_relative_error);
    }
    {
      nn::ParameterStore store;
      Rng rng(3300 + seed);
      QualityHeads heads(store, "heads", C, rng);
      ad::Parameter f("f", randn(4, C, rng));
      std::uniform_real_distribution<double> mos(1, 5), var(0, 1.5);
      Matrix m(4, 5), v(4, 5);
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = mos(rng);
        v.data()[i] = var(rng);
      }
      std::vector<ad::Parameter*> params = {&f};
      for (auto& p : store.all()) {
        if (p.name().find(".score.") != std::string::npos) params.push_back(&p);
      }
      const auto r = testing::check_gradients(
          params, [&](Tape& t) { return regression_loss(heads.predict(t, t.param(f)), m, v); });
      worst["regression_loss"] = std::max(worst["regression_loss"], r.worst_relative_error);
    }
    {
      nn::ParameterStore store;
      Rng rng(3400 + seed);
      QualityHeads heads(store, "heads", C, rng);
      ad::Parameter a("a", randn(4, C, rng)), b("b", randn(4, C, rng));
      std::uniform_real_distribution<double> lab(0, 1);
      Matrix labels(4, 5);
      for (Eigen::Index i = 0; i < labels.size(); ++i) labels.data()[i] = lab(rng);
      labels.row(0).setConstant(1.0);
      std::vector<ad::Parameter*> params = {&a, &b};
      for (auto& p : store.all()) {
        if (p.name().find(".compare.") != std::string::npos) params.push_back(&p);
      }
      const auto r = testing::check_gradients(params, [&](Tape& t) {
        return ranking_loss(heads.compare_raw(t, t.param(a), t.param(b)), labels);
      });
      worst["ranking_loss"] = std::max(worst["ranking_loss"], r.worst_relative_error);
    }
  }
  bool pass = true;
  std::string detail = fmt("%d seeds;", kSeeds);
  for (const auto& [name, err] : worst) {
    pass = pass && err < 1e-4;
    detail += fmt(" %s %.2e", name.c_str(), err);
  }
  return {pass, detail};
}

// ---------------------------------------------------------------- 4

constexpr int node(Param p) { return 1 + static_cast<int>(p); }

Outcome criterion4() {
  const auto edges = build_edges();
  std::set<Edge> want;
  for (int i = 1; i <= kNumParams; ++i) want.insert({0, i});
  want.insert({node(Param::aperture), node(Param::shutter)});
  want.insert({node(Param::aperture), node(Param::iso)});
  want.insert({node(Param::shutter), node(Param::iso)});
  want.insert({node(Param::contrast), node(Param::saturation)});
  want.insert({node(Param::contrast), node(Param::sharpness)});
  want.insert({node(Param::saturation), node(Param::sharpness)});
  want.insert({node(Param::white_balance), node(Param::saturation)});
  const std::set<Edge> got(edges.begin(), edges.end());

  bool ok = edges.size() == 14 && got == want && neighbors(edges, 0).size() == 7;
  ok = ok && neighbors(edges, node(Param::iso)) ==
                 std::vector<int>{0, node(Param::aperture), node(Param::shutter)};
  for (auto a : {Param::contrast, Param::saturation, Param::sharpness}) {
    const auto n = neighbors(edges, node(a));
    for (auto b : {Param::contrast, Param::saturation, Param::sharpness}) {
      if (a != b) ok = ok && std::find(n.begin(), n.end(), node(b)) != n.end();
    }
  }

  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    nn::ParameterStore store;
    Rng rng(4000 + trial);
    ParameterFusion pf(store, "gcpf", 8, 16, 4, rng);
    std::uniform_real_distribution<double> u(0, 1);
    std::array<double, kNumParams> p{};
    for (auto& v : p) v = u(rng);
    Tape t(false);
    GcpfTrace trace;
    pf(t, t.constant(randn(1, 8, rng, 3.0)), p, &trace);
    for (const auto* layer : {&trace.layer1_attention, &trace.layer2_attention}) {
      for (const auto& a : *layer) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) worst = std::max(worst, std::abs(a.row(i).sum() - 1.0));
      }
    }
  }
  return {ok && worst <= 1e-6,
          fmt("edges %zu, visual degree %zu, structure %s, max |row sum - 1| %.2e", edges.size(),
              neighbors(edges, 0).size(), ok ? "ok" : "wrong", worst)};
}

// ---------------------------------------------------------------- 5

Outcome criterion5() {
  nn::ParameterStore store;
  Rng rng(5000);
  QualityHeads heads(store, "heads", 16, rng);
  double worst_pair = 0, worst_self = 0, worst_borda = 0;
  for (int i = 0; i < 100; ++i) {
    const Eigen::RowVectorXd a = randn(1, 16, rng, 2.0), b = randn(1, 16, rng, 2.0);
    const auto ab = compare_pair(heads, a, b), ba = compare_pair(heads, b, a), aa = compare_pair(heads, a, a);
    for (size_t k = 0; k < kNumAttributes; ++k) {
      worst_pair = std::max(worst_pair, std::abs(ab[k] + ba[k] - 1.0));
      worst_self = std::max(worst_self, std::abs(aa[k] - 0.5));
    }
  }
  std::uniform_real_distribution<double> u(0, 1);
  for (size_t n = 2; n <= 20; ++n) {
    for (int trial = 0; trial < 5; ++trial) {
      Matrix r(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = u(rng);
      const std::vector<double> none;
      const auto res = rank_by_tournament(
          n, [&](size_t i, size_t j) { return r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); },
          none);
      const double sum = std::accumulate(res.borda.begin(), res.borda.end(), 0.0);
      worst_borda = std::max(worst_borda, std::abs(sum - n / 2.0));
    }
  }
  const bool pass = worst_pair <= 1e-9 && worst_self <= 1e-9 && worst_borda <= 1e-9;
  return {pass, fmt("max |c(a,b)+c(b,a)-1| %.2e, |c(a,a)-0.5| %.2e, |borda sum - n/2| %.2e", worst_pair,
                    worst_self, worst_borda)};
}

// ---------------------------------------------------------------- 6-8 shared

// `data` carries every pair so test FG-ACC can be measured; `train_data`
// keeps only pairs from training scenes.
struct Prepared {
  testing::TempDir dir{"acc"};
  TrainingData data;
  TrainingData train_data;
};

// Ten variants per scene, 16 annotators, noise 0.3; the last six scenes are held out.
std::unique_ptr<Prepared> make_data(std::uint64_t seed, GeneratorOptions opt, int scenes = 26) {
  opt.train_fraction = (scenes - 6.0) / scenes;
  auto p = std::make_unique<Prepared>();
  p->data.root = p->dir.path();
  p->data.manifest = generate_dataset(scenes, 10, 16, 0.3, seed, p->dir.path(), opt);
  const auto ann = annotation_pipeline(p->data.manifest);
  p->data.mos = ann.mos;
  p->data.pairs = ann.pairs;
  p->train_data = p->data;
  p->train_data.pairs = training_pairs(p->data.manifest, ann.pairs);
  return p;
}

// Recipe for criteria 7 and 8. At the default rate and batch the few hundred
// optimizer steps this data allows barely move the weights, so these train
// longer at a higher rate on native-resolution inputs (96 px renders).
TrainConfig fast_recipe(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.seed = seed;
  cfg.learning_rate_max = 3e-3;
  cfg.batch_size = 16;
  cfg.epochs = 20;
  cfg.resize = 96;
  cfg.crop = 80;
  return cfg;
}

// ---------------------------------------------------------------- 6

Outcome criterion6() {
  std::vector<double> srcc_v, fg_v, untrained_v;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto prep = make_data(600 + seed, {});
    TrainConfig cfg;  // defaults throughout
    cfg.seed = seed;
    QualityModel untrained(cfg.model_config(), seed);
    untrained_v.push_back(
        evaluate_model(untrained, cfg, prep->data, Split::test).fg_acc.at(Attribute::overall));
    const auto res = train(prep->train_data, cfg);
    const auto rep = evaluate_model(*res.model, cfg, prep->data, Split::test);
    srcc_v.push_back(rep.srcc.at(Attribute::overall));
    fg_v.push_back(rep.fg_acc.at(Attribute::overall));
  }
  const double s = median3(srcc_v), f = median3(fg_v), u = median3(untrained_v);
  const bool untrained_ok = std::all_of(untrained_v.begin(), untrained_v.end(),
                                        [](double v) { return std::abs(v - 0.5) <= 0.08; });
  const bool pass = s >= 0.80 && f >= 0.65 && untrained_ok;
  return {pass, fmt("median srcc %.3f [%s] (>= 0.80), median fg_acc %.3f [%s] (>= 0.65), "
                    "untrained fg_acc %.3f [%s] (0.5 +- 0.08)",
                    s, join(srcc_v).c_str(), f, join(fg_v).c_str(), u, join(untrained_v).c_str())};
}

// ---------------------------------------------------------------- 7

Outcome criterion7() {
  std::vector<double> gains, base_v, gcpf_v;
  for (std::uint64_t seed : {1, 2, 3}) {
    GeneratorOptions opt;
    opt.shared_optimum = true;
    const auto prep = make_data(700 + seed, opt);
    double fg[2] = {0, 0};
    for (int arm = 0; arm < 2; ++arm) {
      auto cfg = fast_recipe(seed);
      cfg.use_gcpf = arm == 1;
      const auto res = train(prep->train_data, cfg);
      fg[arm] = evaluate_model(*res.model, cfg, prep->data, Split::test).fg_acc.at(Attribute::overall);
    }
    base_v.push_back(fg[0]);
    gcpf_v.push_back(fg[1]);
    gains.push_back(fg[1] - fg[0]);
  }
  const double g = median3(gains);
  return {g >= 0.05, fmt("median fg_acc gain %.3f (>= 0.05); blind [%s], with parameters [%s]", g,
                         join(base_v).c_str(), join(gcpf_v).c_str())};
}

// ---------------------------------------------------------------- 8

// Sweeps vary one capture-side parameter at a time. Colour balance, saturation
// and contrast are left out: each scene has a random palette, so their optimum
// cannot be read off a single render without a reference.
constexpr Param kSweepParams[] = {Param::aperture, Param::shutter, Param::iso, Param::sharpness};

Outcome criterion8() {
  const auto prep = make_data(800, {}, 66);
  const auto cfg = fast_recipe(8);
  const auto res = train(prep->train_data, cfg);

  constexpr int kSweeps = 20, kConfigs = 15;
  const size_t top_k = static_cast<size_t>(std::ceil(0.2 * kConfigs));
  int in_top = 0;
  std::vector<double> ranker_q, random_q;
  Rng random_scorer(88);
  std::uniform_real_distribution<double> u(0, 1);
  GeneratorOptions gopt;
  for (int s = 0; s < kSweeps; ++s) {
    const auto scene = random_scene(fmt("sweep_%02d", s), derive_seed(8, {hash_tag("sweep"), std::uint64_t(s)}),
                                    gopt);
    const Param varied = kSweepParams[static_cast<size_t>(s) % std::size(kSweepParams)];
    const auto cands = simulate_sweep(make_sweep(scene, {varied}, kConfigs, 0.35, static_cast<std::uint64_t>(s)));
    std::vector<double> q;
    for (const auto& c : cands) q.push_back(at(true_quality(c.params, scene.optimal_params), Attribute::overall));
    std::vector<double> sorted = q;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const auto ranked = rank_candidates(cands, *res.model, cfg);
    in_top += q[ranked.winner] >= sorted[top_k - 1];
    ranker_q.push_back(q[ranked.winner]);
    std::vector<double> noise(cands.size());
    for (auto& v : noise) v = u(random_scorer);
    random_q.push_back(q[score_rank_candidates(noise).winner]);
  }
  const double frac = static_cast<double>(in_top) / kSweeps;
  const double wr = win_rate(ranker_q, random_q);
  return {frac >= 0.70 && wr >= 0.9,
          fmt("winner in top %zu of %d in %d/%d sweeps (%.2f >= 0.70), win rate vs random %.3f (>= 0.9)",
              top_k, kConfigs, in_top, kSweeps, frac, wr)};
}

// ---------------------------------------------------------------- 9

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return "<missing>";
  return {std::istreambuf_iterator<char>(in), {}};
}

int pipeline(const std::filesystem::path& dir, std::string& log) {
  {
    std::ofstream(dir / "run.conf") << "train.epochs = 2\n";
  }
  const std::vector<std::string> base = {"--out-dir", dir.string(), "--seed", "99", "--config",
                                         (dir / "run.conf").string()};
  const std::vector<std::vector<std::string>> steps = {
      {"generate", "--scenes", "10", "--variants", "6", "--annotators", "8", "--size", "64",
       "--train-fraction", "0.7"},
      {"annotate"},
      {"train"},
      {"eval"}};
  for (const auto& step : steps) {
    auto args = base;
    args.insert(args.end(), step.begin(), step.end());
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    log += err.str();
    if (code != 0) return code;
  }
  return 0;
}

Outcome criterion9() {
  testing::TempDir a("repro_a"), b("repro_b");
  std::string log;
  const int ca = pipeline(a.path(), log), cb = pipeline(b.path(), log);
  if (ca != 0 || cb != 0) return {false, fmt("pipeline exit codes %d/%d: %s", ca, cb, log.c_str())};
  int same = 0, total = 0;
  std::string differing;
  for (const char* f : {"manifest.jsonl", "mos.jsonl", "pairs.jsonl", "screening.jsonl", "checkpoint.bin",
                        "train_log.txt", "metrics.txt"}) {
    ++total;
    if (slurp(a / f) == slurp(b / f)) ++same;
    else differing += std::string(" ") + f;
  }
  const auto manifest = load_manifest(a / "manifest.jsonl");
  for (const auto& s : manifest.samples) {
    ++total;
    if (slurp(a / s.path) == slurp(b / s.path)) ++same;
    else differing += " " + s.path;
  }
  return {same == total, fmt("%d/%d files bit-identical%s", same, total, differing.c_str())};
}

}  // namespace
}  // namespace camiqa

int main(int argc, char** argv) {
  using namespace camiqa;
  configure_allocator();
  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3,
                                                          criterion4, criterion5, criterion6,
                                                          criterion7, criterion8, criterion9};
  // Wall-clock budgets in seconds; 0 means unbounded.
  const std::vector<double> budget = {1, 0, 120, 0, 0, 900, 0, 0, 0};
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::cerr << "usage: acceptance [1-" << criteria.size() << "]\n";
    return 1;
  }
  bool all = true;
  for (size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<int>(i) + 1 != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (budget[i] > 0 && secs > budget[i]) {
      o.pass = false;
      o.detail += fmt("; over the %.0fs budget", budget[i]);
    }
    std::cout << "criterion " << i + 1 << ' ' << (o.pass ? "PASS" : "FAIL") << "  " << o.detail
              << fmt("  [%.1fs]", secs) << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
