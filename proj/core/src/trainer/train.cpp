#include "audet/trainer/train.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "audet/dataset/augment.hpp"
#include "audet/numerics/ops.hpp"
#include "audet/numerics/sgd.hpp"

namespace audet {

namespace {

constexpr std::uint64_t kDataStream = 0xD1B54A32D192ED03ULL;

std::string parameter_norms(const std::vector<Parameter<float>*>& params) {
  std::ostringstream os;
  os.precision(6);
  for (const auto* p : params) {
    os << "\n  " << p->name << " |w|=" << l2_norm<float>(p->value.data())
       << " |g|=" << l2_norm<float>(p->grad);
  }
  return os.str();
}

}  // namespace

TrainResult train(const ModelConfig& config, const TrainSchedule& schedule, const TrainData& data,
                  const EpochCallback& on_epoch) {
  AuModel<float> model = build_model(config);
  return train(model, schedule, data, on_epoch);
}

TrainResult train(AuModel<float>& model, const TrainSchedule& schedule, const TrainData& data,
                  const EpochCallback& on_epoch) {
  schedule.validate();
  if (data.train.empty()) throw UsageError("train: empty sample plan");
  if (!data.loader) throw UsageError("train: no image loader");
  const std::vector<FrameRecord>& val = data.val.empty() ? data.train : data.val;
  const bool use_circle = model.config().use_circle_loss;

  Rng rng(model.config().seed ^ kDataStream);
  const auto params = model.parameters();
  for (auto* p : params) p->zero_grad();

  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  double best = -1.0;
  std::size_t epochs_run = 0;
  for (std::size_t epoch = 0; epoch < schedule.epochs; ++epoch) {
    if (schedule.max_steps != 0 && result.steps >= schedule.max_steps) break;
    const double lr = lr_at(epoch, schedule);
    rng.shuffle(order);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += schedule.batch_size) {
      if (schedule.max_steps != 0 && result.steps >= schedule.max_steps) break;
      const std::size_t end = std::min(order.size(), begin + schedule.batch_size);
      try {
        Tape<float> tape;
        std::optional<Tensor<float>> sum;
        double bce = 0, circle = 0;
        for (std::size_t i = begin; i < end; ++i) {
          const FrameRecord& frame = data.train[order[i]];
          Tensor<float> image = data.loader(frame);
          if (schedule.augment) image = augment(image, rng);
          const auto out = model.forward(image, &tape);
          const auto terms = total_loss(out.probs, out.logits, frame.labels, use_circle);
          bce += terms.bce.item();
          circle += terms.circle.item();
          sum = sum ? ops::add(*sum, terms.total) : terms.total;
        }
        const float inv = 1.0f / static_cast<float>(end - begin);
        const Tensor<float> loss = ops::affine(*sum, inv);
        if (!std::isfinite(loss.item())) throw NumericError("non-finite loss");
        if (loss.tracked()) tape.backward(loss);  // untracked: every label masked
        sgd_step<float>(params, lr);
        rec.loss.bce += bce / double(end - begin);
        rec.loss.circle += circle / double(end - begin);
        rec.loss.total += loss.item();
      } catch (const NumericError& e) {
        throw NumericError("training aborted at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batches) + ": " + e.what() + "\nparameter norms:" +
                           parameter_norms(params));
      }
      ++batches;
      ++result.steps;
    }
    if (batches > 0) {
      rec.loss.bce /= double(batches);
      rec.loss.circle /= double(batches);
      rec.loss.total /= double(batches);
    }
    rec.steps = result.steps;
    ++epochs_run;

    const F1Report report = evaluate(model, val, data.loader, schedule.threshold);
    rec.macro_f1 = report.macro;
    rec.f1 = report.per_au;
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (report.macro > best) {
      best = report.macro;
      result.best_epoch = epoch;
      result.best_checkpoint = snapshot(model, static_cast<std::uint32_t>(epochs_run));
    }
  }
  result.final_checkpoint = snapshot(model, static_cast<std::uint32_t>(epochs_run));
  return result;
}

Prediction predict(AuModel<float>& model, const std::vector<FrameRecord>& records, const ImageLoader& loader) {
  Prediction out;
  out.probs.reserve(records.size());
  out.fusion_weights.reserve(records.size());
  for (const auto& rec : records) {
    const auto fwd = model.forward(loader(rec), nullptr);
    ProbVector p;
    for (std::size_t j = 0; j < kNumAus; ++j) p[j] = fwd.probs[j];
    out.probs.push_back(p);
    if (fwd.fusion_weights) {
      ProbVector w;
      const auto& fw = *fwd.fusion_weights;
      for (std::size_t j = 0; j < kNumAus; ++j) w[j] = fw[fw.size() == 1 ? 0 : j];
      out.fusion_weights.push_back(w);
    } else {
      out.fusion_weights.push_back(std::nullopt);
    }
  }
  return out;
}

F1Report score(const std::vector<ProbVector>& probs, const std::vector<FrameRecord>& records, double threshold) {
  if (probs.size() != records.size()) {
    throw UsageError("score: " + std::to_string(probs.size()) + " predictions for " +
                     std::to_string(records.size()) + " records");
  }
  std::vector<BinaryVector> preds;
  std::vector<LabelVector> labels;
  preds.reserve(probs.size());
  labels.reserve(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    preds.push_back(binarize(probs[i], threshold));
    labels.push_back(records[i].labels);
  }
  return f1_scores(preds, labels);
}

F1Report evaluate(AuModel<float>& model, const std::vector<FrameRecord>& records, const ImageLoader& loader,
                  double threshold) {
  return score(predict(model, records, loader).probs, records, threshold);
}

std::string history_line(const EpochRecord& record) {
  nlohmann::ordered_json f1 = nlohmann::ordered_json::object();
  for (std::size_t j = 0; j < kNumAus; ++j) f1[std::string(kAuNames[j])] = record.f1[j];
  nlohmann::ordered_json j{{"epoch", record.epoch},    {"lr", record.lr},
                           {"bce", record.loss.bce},   {"circle", record.loss.circle},
                           {"total", record.loss.total}, {"macro_f1", record.macro_f1},
                           {"f1", f1},                 {"steps", record.steps}};
  return j.dump();
}

}  // namespace audet
