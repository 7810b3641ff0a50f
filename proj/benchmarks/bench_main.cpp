#include <benchmark/benchmark.h>

#include "audet/model/arl.hpp"
#include "audet/numerics/ops.hpp"
#include "audet/numerics/rng.hpp"
#include "audet/objective/losses.hpp"
#include "audet/trainer/model.hpp"

using namespace audet;

namespace {

Tensor<float> uniform(Shape shape, Rng& rng, double lo, double hi) {
  std::vector<float> data(numel(shape));
  for (float& v : data) v = static_cast<float>(rng.uniform(lo, hi));
  return Tensor<float>(std::move(shape), std::move(data));
}

LabelVector some_labels() {
  LabelVector l{};
  for (std::size_t j = 0; j < kNumAus; ++j) l[j] = std::int8_t(j % 3 == 0);
  return l;
}

void BM_Conv2dForward(benchmark::State& state) {
  const auto c = std::size_t(state.range(0));
  Rng rng(1);
  const auto x = uniform({c, 32, 32}, rng, -1, 1);
  const auto w = uniform({c, c, 3, 3}, rng, -0.1, 0.1);
  const auto b = uniform({c}, rng, -0.1, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d(x, w, b, 1, 1));
}
BENCHMARK(BM_Conv2dForward)->Arg(8)->Arg(32);

void BM_Conv2dBackward(benchmark::State& state) {
  const auto c = std::size_t(state.range(0));
  Rng rng(2);
  const auto x0 = uniform({c, 32, 32}, rng, -1, 1);
  const auto w0 = uniform({c, c, 3, 3}, rng, -0.1, 0.1);
  const auto b0 = uniform({c}, rng, -0.1, 0.1);
  for (auto _ : state) {
    Tape<float> tape;
    const auto x = tape.input(x0), w = tape.input(w0), b = tape.input(b0);
    tape.backward(ops::sum(ops::conv2d(x, w, b, 1, 1)));
    benchmark::DoNotOptimize(tape.grad(w));
  }
}
BENCHMARK(BM_Conv2dBackward)->Arg(8)->Arg(32);

void BM_TopkGraph(benchmark::State& state) {
  Rng rng(3);
  const auto nodes = uniform({kNumAus, 64}, rng, -1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(build_topk_graph(nodes, 4));
}
BENCHMARK(BM_TopkGraph);

void BM_CircleLoss(benchmark::State& state) {
  Rng rng(4);
  const auto logits = uniform({kNumAus}, rng, -3, 3);
  const auto labels = some_labels();
  for (auto _ : state) benchmark::DoNotOptimize(circle_loss(logits, labels));
}
BENCHMARK(BM_CircleLoss);

void BM_ModelForward(benchmark::State& state) {
  ModelConfig cfg;
  cfg.use_arl = cfg.use_lrp = cfg.use_ff = state.range(0) != 0;
  AuModel<float> model(cfg);
  Rng rng(5);
  const auto img = uniform({3, cfg.backbone.height, cfg.backbone.width}, rng, 0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(img, nullptr).probs);
}
BENCHMARK(BM_ModelForward)->ArgName("full")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ModelTrainStep(benchmark::State& state) {
  ModelConfig cfg;
  AuModel<float> model(cfg);
  Rng rng(6);
  const auto img = uniform({3, cfg.backbone.height, cfg.backbone.width}, rng, 0, 1);
  const auto labels = some_labels();
  for (auto _ : state) {
    Tape<float> tape;
    const auto out = model.forward(img, &tape);
    tape.backward(total_loss(out.probs, out.logits, labels, true).total);
    for (auto* p : model.parameters()) p->zero_grad();
  }
}
BENCHMARK(BM_ModelTrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
