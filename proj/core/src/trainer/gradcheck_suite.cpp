#include "audet/trainer/gradcheck_suite.hpp"

#include <algorithm>
#include <memory>

#include "audet/numerics/ops.hpp"
#include "audet/objective/losses.hpp"
#include "audet/trainer/model.hpp"

namespace audet {

namespace {

using D = double;
using Output = std::function<Tensor<D>(Tape<D>*)>;

// One instantiated case at one random point.
struct Setup {
  std::vector<std::unique_ptr<Parameter<D>>> owned;
  std::vector<Parameter<D>*> params;
  std::shared_ptr<void> keep_alive;  // module under test
  Output output;

  Parameter<D>& add(const std::string& name, Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                    bool away_from_zero = false) {
    std::vector<D> v(numel(shape));
    for (D& x : v) {
      x = rng.uniform(lo, hi);
      // keeps relu inputs clear of the kink by more than the probe step
      if (away_from_zero) x = (x < 0 ? -0.1 : 0.1) + 0.9 * x;
    }
    owned.push_back(std::make_unique<Parameter<D>>(name,
                                                   Tensor<D>(std::move(shape), std::move(v))));
    params.push_back(owned.back().get());
    return *owned.back();
  }

  void adopt(std::vector<Parameter<D>*> module_params, Rng& rng, double noise) {
    for (auto* p : module_params) {
      std::vector<D> v = p->value.vec();
      for (D& x : v) x += noise * rng.normal();
      p->value = Tensor<D>(p->value.shape(), std::move(v));
      params.push_back(p);
    }
  }
};

using Factory = std::function<Setup(Rng&)>;

struct GradCase {
  std::string name;
  Factory make;
};

LabelVector random_labels(Rng& rng) {
  LabelVector y;
  for (auto& v : y) v = static_cast<std::int8_t>(static_cast<int>(rng.below(3)) - 1);
  y[rng.below(kNumAus)] = 1;  // at least one of each set
  for (std::size_t j = 0; j < kNumAus; ++j) {
    if (y[j] != 1) {
      y[j] = 0;
      break;
    }
  }
  return y;
}

template <typename Fn>
Factory unary(Shape shape, Fn fn, bool away_from_zero = false) {
  return [shape, fn, away_from_zero](Rng& rng) {
    Setup s;
    auto& x = s.add("x", shape, rng, -1.0, 1.0, away_from_zero);
    s.output = [&x, fn](Tape<D>* t) { return fn(use(x, t)); };
    return s;
  };
}

template <typename Fn>
Factory binary(Shape a_shape, Shape b_shape, Fn fn) {
  return [a_shape, b_shape, fn](Rng& rng) {
    Setup s;
    auto& a = s.add("a", a_shape, rng);
    auto& b = s.add("b", b_shape, rng);
    s.output = [&a, &b, fn](Tape<D>* t) { return fn(use(a, t), use(b, t)); };
    return s;
  };
}

template <typename Fn>
Factory ternary(Shape a_shape, Shape b_shape, Shape c_shape, Fn fn) {
  return [a_shape, b_shape, c_shape, fn](Rng& rng) {
    Setup s;
    auto& a = s.add("a", a_shape, rng);
    auto& b = s.add("b", b_shape, rng);
    auto& c = s.add("c", c_shape, rng);
    s.output = [&a, &b, &c, fn](Tape<D>* t) { return fn(use(a, t), use(b, t), use(c, t)); };
    return s;
  };
}

std::vector<GradCase> cases() {
  std::vector<GradCase> out;
  out.push_back({"linear", ternary({5}, {4, 5}, {4}, [](auto x, auto w, auto b) { return ops::linear(x, w, b); })});
  out.push_back({"linear.rows", ternary({3, 5}, {4, 5}, {4}, [](auto x, auto w, auto b) { return ops::linear(x, w, b); })});
  out.push_back({"linear.no_bias", binary({3, 5}, {4, 5}, [](auto x, auto w) { return ops::linear(x, w); })});
  out.push_back({"conv1x1", ternary({3, 4, 4}, {2, 3}, {2}, [](auto x, auto w, auto b) { return ops::conv1x1(x, w, b); })});
  out.push_back({"conv2d.stride2", ternary({2, 6, 6}, {3, 2, 3, 3}, {3},
                                           [](auto x, auto w, auto b) { return ops::conv2d(x, w, b, 2, 1); })});
  out.push_back({"conv2d.stride1", ternary({2, 5, 5}, {2, 2, 3, 3}, {2},
                                           [](auto x, auto w, auto b) { return ops::conv2d(x, w, b, 1, 1); })});
  out.push_back({"relu", unary({20}, [](auto x) { return ops::relu(x); }, true)});
  out.push_back({"sigmoid", unary({20}, [](auto x) { return ops::sigmoid(ops::affine(x, D(4))); })});
  out.push_back({"softmax", unary({3, 5}, [](auto x) { return ops::softmax(ops::affine(x, D(3))); })});
  out.push_back({"layer_norm", ternary({3, 6}, {6}, {6}, [](auto x, auto g, auto b) { return ops::layer_norm(x, g, b); })});
  out.push_back({"global_avg_pool", unary({3, 4, 4}, [](auto x) { return ops::global_avg_pool(x); })});
  out.push_back({"channel_max", unary({4, 3, 3}, [](auto x) { return ops::channel_max(x); })});
  out.push_back({"add", binary({3, 4}, {3, 4}, [](auto a, auto b) { return ops::add(a, b); })});
  out.push_back({"add.broadcast", binary({3, 4, 4}, {1, 4, 4}, [](auto a, auto b) { return ops::add(a, b); })});
  out.push_back({"sub", binary({3, 4}, {1, 4}, [](auto a, auto b) { return ops::sub(a, b); })});
  out.push_back({"mul", binary({3, 4}, {3, 4}, [](auto a, auto b) { return ops::mul(a, b); })});
  out.push_back({"mul.broadcast", binary({3, 4, 4}, {1, 4, 4}, [](auto a, auto b) { return ops::mul(a, b); })});
  out.push_back({"affine", unary({10}, [](auto x) { return ops::affine(x, D(-0.7), D(0.3)); })});
  out.push_back({"concat", ternary({2, 3}, {3, 3}, {3}, [](auto a, auto b, auto c) { return ops::concat<D>({a, b, c}); })});
  out.push_back({"reshape", unary({2, 6}, [](auto x) { return ops::reshape(x, {3, 4}); })});
  out.push_back({"slice_rows", unary({5, 3}, [](auto x) { return ops::slice_rows(x, 1, 3); })});
  out.push_back({"matmul", binary({3, 4}, {4, 2}, [](auto a, auto b) { return ops::matmul(a, b); })});
  out.push_back({"attention", ternary({5, 8}, {5, 8}, {5, 8}, [](auto q, auto k, auto v) {
                   return ops::attention(ops::affine(q, D(2)), k, v, 2);
                 })});
  out.push_back({"sum", unary({3, 4}, [](auto x) { return ops::sum(x); })});
  out.push_back({"mean", unary({3, 4}, [](auto x) { return ops::mean(x); })});

  out.push_back({"bce_loss", [](Rng& rng) {
                   Setup s;
                   auto& x = s.add("x", {kNumAus}, rng, -3.0, 3.0);
                   const LabelVector y = random_labels(rng);
                   s.output = [&x, y](Tape<D>* t) { return bce_loss(ops::sigmoid(use(x, t)), y); };
                   return s;
                 }});
  out.push_back({"circle_loss", [](Rng& rng) {
                   Setup s;
                   auto& x = s.add("x", {kNumAus}, rng, -3.0, 3.0);
                   const LabelVector y = random_labels(rng);
                   s.output = [&x, y](Tape<D>* t) { return circle_loss(use(x, t), y); };
                   return s;
                 }});

  const ModelConfig mc = gradcheck_model_config();
  const std::size_t c = mc.backbone.feature_channels(), h = mc.backbone.feature_height(), w = mc.backbone.feature_width();

  out.push_back({"backbone", [mc](Rng& rng) {
                   Setup s;
                   auto module = std::make_shared<Backbone<D>>(mc.backbone, rng);
                   std::vector<Parameter<D>*> ps;
                   module->collect(ps);
                   s.adopt(ps, rng, 0.05);
                   auto& x = s.add("image", {mc.backbone.in_channels, mc.backbone.height, mc.backbone.width}, rng, 0.0, 1.0);
                   s.keep_alive = module;
                   Backbone<D>* m = module.get();
                   s.output = [m, &x](Tape<D>* t) { return m->logits(m->forward(use(x, t), t).embedding, t); };
                   return s;
                 }});
  out.push_back({"lrp", [mc, c, h, w](Rng& rng) {
                   Setup s;
                   auto module = std::make_shared<LocalRegionPerception<D>>(mc.lrp(), rng);
                   std::vector<Parameter<D>*> ps;
                   module->collect(ps);
                   s.adopt(ps, rng, 0.2);
                   auto& x = s.add("features", {c, h, w}, rng);
                   s.keep_alive = module;
                   auto* m = module.get();
                   s.output = [m, &x](Tape<D>* t) {
                     const Tensor<D> f = use(x, t);
                     return apply_attention(f, m->attention(f, t));
                   };
                   return s;
                 }});
  out.push_back({"arl", [mc, c, h, w](Rng& rng) {
                   Setup s;
                   auto module = std::make_shared<RelationLearning<D>>(mc.arl(), rng);
                   std::vector<Parameter<D>*> ps;
                   module->collect(ps);
                   s.adopt(ps, rng, 0.2);
                   auto& x = s.add("features", {c, h, w}, rng);
                   s.keep_alive = module;
                   auto* m = module.get();
                   s.output = [m, &x](Tape<D>* t) { return m->forward(use(x, t), t).logits; };
                   return s;
                 }});
  out.push_back({"fuse_fixed", binary({kNumAus}, {kNumAus}, [](auto a, auto b) { return fuse_fixed(a, b, 0.3); })});
  out.push_back({"fusion.attention", [mc, c](Rng& rng) {
                   Setup s;
                   auto module = std::make_shared<AttentionFusion<D>>(mc.fusion(), rng);
                   std::vector<Parameter<D>*> ps;
                   module->collect(ps);
                   s.adopt(ps, rng, 0.2);
                   auto& pooled = s.add("pooled", {c}, rng);
                   auto& refined = s.add("refined", {kNumAus, mc.d}, rng);
                   auto& bl = s.add("backbone_logits", {kNumAus}, rng);
                   auto& al = s.add("au_logits", {kNumAus}, rng);
                   s.keep_alive = module;
                   auto* m = module.get();
                   s.output = [m, &pooled, &refined, &bl, &al](Tape<D>* t) {
                     return m->forward(use(pooled, t), use(refined, t), use(bl, t), use(al, t), t).fused;
                   };
                   return s;
                 }});
  out.push_back({"model.full", [mc](Rng& rng) {
                   Setup s;
                   ModelConfig cfg = mc;
                   cfg.seed = rng.next();
                   auto model = std::make_shared<AuModel<D>>(cfg);
                   s.adopt(model->parameters(), rng, 0.05);
                   auto& x = s.add("image", {cfg.backbone.in_channels, cfg.backbone.height, cfg.backbone.width}, rng,
                                   0.0, 1.0);
                   const LabelVector y = random_labels(rng);
                   s.keep_alive = model;
                   auto* m = model.get();
                   s.output = [m, &x, y](Tape<D>* t) {
                     const auto out = m->forward(use(x, t), t);
                     return total_loss(out.probs, out.logits, y, true).total;
                   };
                   return s;
                 }});
  return out;
}

}  // namespace

ModelConfig gradcheck_model_config() {
  ModelConfig c;
  c.backbone.height = 16;
  c.backbone.width = 16;
  c.backbone.stage_channels = {4, 8};
  c.r = 2;
  c.M = 2;
  c.k = 3;
  c.d = 4;
  c.d_t = 8;
  c.heads = 2;
  c.encoder_layers = 2;
  return c;
}

GradCheckSuiteResult run_gradcheck_suite(const GradCheckSuiteOptions& options,
                                         const std::function<void(const GradCheckCase&)>& progress) {
  GradCheckSuiteResult result;
  const auto specs = cases();
  for (std::size_t ci = 0; ci < specs.size(); ++ci) {
    GradCheckCase gc{specs[ci].name, {}, 0};
    Rng rng(options.seed * 1000003ULL + ci);
    for (std::size_t p = 0; p < options.points; ++p) {
      Setup setup = specs[ci].make(rng);
      const Tensor<D> probe = setup.output(nullptr);
      std::vector<D> r(probe.size());
      for (D& v : r) v = rng.normal();
      const Tensor<D> weights(probe.shape(), std::move(r));
      const Output& f = setup.output;
      const auto loss = [&f, &weights](Tape<D>* t) { return ops::sum(ops::mul(f(t), weights)); };
      GradCheckOptions opts;
      opts.max_coordinates = options.max_coordinates;
      opts.seed = rng.next();
      const GradCheckReport rep = grad_check_parameters(loss, setup.params, opts);
      const std::size_t coords = gc.report.coordinates + rep.coordinates;
      const bool valid = gc.report.valid && rep.valid;
      if (p == 0 || rep.max_rel_error > gc.report.max_rel_error) gc.report = rep;
      gc.report.coordinates = coords;
      gc.report.valid = valid;
      ++gc.points;
    }
    result.max_rel_error = std::max(result.max_rel_error, gc.report.max_rel_error);
    result.passed = result.passed && gc.report.passed(options.tolerance);
    if (progress) progress(gc);
    result.cases.push_back(std::move(gc));
  }
  return result;
}

}  // namespace audet
