#include <camiqa/evaluation.hpp>
#include <camiqa/gcpf.hpp>
#include <camiqa/heads.hpp>
#include <camiqa/model.hpp>
#include <camiqa/runtime.hpp>
#include <camiqa/tuning.hpp>

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace camiqa;

Image noise_image(int size, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Image img(size, size);
  for (Eigen::Index i = 0; i < img.pixels.size(); ++i) img.pixels.data()[i] = u(rng);
  return img;
}

void BM_BackboneForward(benchmark::State& state) {
  nn::ParameterStore store;
  Rng rng(1);
  SmallConvBackbone net(store, BackboneConfig{}, rng);
  const Image img = noise_image(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) {
    ad::Tape tape(false);
    benchmark::DoNotOptimize(net.forward(tape, img).data.value().data());
  }
}
BENCHMARK(BM_BackboneForward)->Arg(96)->Arg(224)->Unit(benchmark::kMillisecond);

// Forward and backward of the pairwise loss for one image pair.
void BM_PairTrainStep(benchmark::State& state) {
  ModelConfig cfg;
  cfg.use_gcpf = state.range(0) != 0;
  QualityModel model(cfg, 3);
  const Image a = noise_image(224, 4), b = noise_image(224, 5);
  const std::vector<Box> boxes = {{60, 50, 160, 170}};
  const CameraParameters params;
  const ad::Matrix labels = ad::Matrix::Constant(1, kNumAttributes, 1.0);
  for (auto _ : state) {
    ad::Tape tape;
    ad::Var fa = model.features(tape, a, boxes, params);
    ad::Var fb = model.features(tape, b, boxes, params);
    ad::Var loss = ranking_loss(model.heads.compare_raw(tape, fa, fb), labels);
    tape.backward(loss);
    benchmark::DoNotOptimize(loss.scalar());
  }
}
BENCHMARK(BM_PairTrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_GatLayer(benchmark::State& state) {
  nn::ParameterStore store;
  Rng rng(6);
  const int dim = static_cast<int>(state.range(0));
  GatLayer gat(store, "g", GatLayerConfig{4, dim, dim / 4, true, true}, rng);
  const auto mask = adjacency_mask(build_edges(), kGraphNodes);
  std::normal_distribution<double> n;
  ad::Matrix x(kGraphNodes, dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  for (auto _ : state) {
    ad::Tape tape(false);
    benchmark::DoNotOptimize(gat(tape, tape.constant(x), mask).value().data());
  }
}
BENCHMARK(BM_GatLayer)->Arg(16)->Arg(128);

void BM_Srcc(benchmark::State& state) {
  Rng rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> x(static_cast<size_t>(state.range(0))), y(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    x[i] = u(rng);
    y[i] = x[i] + u(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(srcc(x, y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Srcc)->RangeMultiplier(8)->Range(64, 32768)->Complexity(benchmark::oNLogN);

void BM_Tournament(benchmark::State& state) {
  const size_t n = static_cast<size_t>(state.range(0));
  const std::vector<double> none;
  for (auto _ : state) {
    auto res = rank_by_tournament(n, [](size_t i, size_t j) { return i < j ? 0.7 : 0.3; }, none);
    benchmark::DoNotOptimize(res.winner);
  }
}
BENCHMARK(BM_Tournament)->Arg(15)->Arg(100);

}  // namespace

int main(int argc, char** argv) {
  camiqa::configure_allocator();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
