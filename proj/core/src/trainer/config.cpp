#include "audet/trainer/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "audet/errors.hpp"

namespace audet {

using nlohmann::json;

void ModelConfig::validate() const {
  if (use_lrp && !use_arl) {
    throw ConfigError("model config: use_lrp requires use_arl (the attention map gates the features "
                      "consumed by node extraction)");
  }
  if (use_ff && !use_arl) {
    throw ConfigError("model config: use_ff requires use_arl (fusion needs both backbone and AU logits)");
  }
  if (load_pretrained_backbone && pretrained_backbone.empty()) {
    throw ConfigError("model config: load_pretrained_backbone requires pretrained_backbone path");
  }
  backbone.validate();
  if (use_lrp) lrp().validate();
  if (use_arl) arl().validate();
  if (use_ff) {
    const FusionConfig f = fusion();
    f.validate();
  }
}

LrpConfig ModelConfig::lrp() const {
  return {M, r, backbone.feature_channels()};
}

ArlConfig ModelConfig::arl() const {
  return {backbone.feature_channels(), d, k, gnn_layers};
}

FusionConfig ModelConfig::fusion() const {
  FusionConfig f;
  f.variant = ff_variant;
  f.alpha = alpha;
  f.token_dim = d_t;
  f.layers = encoder_layers;
  f.heads = heads;
  f.channels = backbone.feature_channels();
  f.node_dim = d;
  return f;
}

ModelConfig ablation_row(int row, const std::string& pretrained_backbone) {
  if (row < 1 || row > kAblationRows) {
    throw ConfigError("ablation row " + std::to_string(row) + " outside 1.." + std::to_string(kAblationRows));
  }
  ModelConfig c;
  c.use_circle_loss = row >= 2;
  c.load_pretrained_backbone = row >= 3;
  if (c.load_pretrained_backbone) c.pretrained_backbone = pretrained_backbone;
  c.use_arl = row >= 4;
  c.use_lrp = row >= 5;
  c.use_ff = row >= 6;
  return c;
}

std::string ablation_row_name(int row) {
  static const char* kNames[] = {"baseline", "+circle loss", "+pretrained backbone", "+ARL", "+LRP", "+FF"};
  if (row < 1 || row > kAblationRows) throw ConfigError("ablation row " + std::to_string(row) + " unknown");
  return kNames[row - 1];
}

void TrainSchedule::validate() const {
  if (epochs == 0) throw ConfigError("schedule: epochs must be positive");
  if (!(base_lr > 0.0) || !std::isfinite(base_lr)) throw ConfigError("schedule: base_lr must be positive");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) throw ConfigError("schedule: decay_factor must be in (0, 1]");
  if (batch_size == 0) throw ConfigError("schedule: batch_size must be positive");
  for (std::size_t i = 1; i < decay_epochs.size(); ++i) {
    if (decay_epochs[i] <= decay_epochs[i - 1]) throw ConfigError("schedule: decay_epochs must increase");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("schedule: threshold must be in (0, 1)");
}

double lr_at(std::size_t epoch, const TrainSchedule& schedule) {
  if (epoch >= schedule.epochs) {
    throw UsageError("lr_at: epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(schedule.epochs) + ")");
  }
  int decays = 0;
  for (std::size_t e : schedule.decay_epochs) decays += e <= epoch ? 1 : 0;
  // Dividing by an exact integer power keeps 0.001 -> 1e-4 -> 1e-5 -> 1e-6
  // correctly rounded; repeated multiplication by 0.1 drifts.
  const double inverse = 1.0 / schedule.decay_factor;
  if (std::abs(inverse - std::round(inverse)) < 1e-9) {
    return schedule.base_lr / std::pow(std::round(inverse), decays);
  }
  return schedule.base_lr * std::pow(schedule.decay_factor, decays);
}

namespace {

json model_json(const ModelConfig& c) {
  return json{{"use_circle_loss", c.use_circle_loss},
              {"load_pretrained_backbone", c.load_pretrained_backbone},
              {"pretrained_backbone", c.pretrained_backbone},
              {"use_arl", c.use_arl},
              {"use_lrp", c.use_lrp},
              {"use_ff", c.use_ff},
              {"ff_variant", to_string(c.ff_variant)},
              {"in_channels", c.backbone.in_channels},
              {"height", c.backbone.height},
              {"width", c.backbone.width},
              {"stage_channels", c.backbone.stage_channels},
              {"r", c.r},
              {"M", c.M},
              {"k", c.k},
              {"d", c.d},
              {"d_t", c.d_t},
              {"heads", c.heads},
              {"encoder_layers", c.encoder_layers},
              {"gnn_layers", c.gnn_layers},
              {"alpha", c.alpha},
              {"seed", c.seed}};
}

json schedule_json(const TrainSchedule& s) {
  return json{{"epochs", s.epochs},         {"base_lr", s.base_lr},       {"decay_epochs", s.decay_epochs},
              {"decay_factor", s.decay_factor}, {"batch_size", s.batch_size}, {"max_steps", s.max_steps},
              {"augment", s.augment},       {"threshold", s.threshold}};
}

template <typename V>
void read(const json& j, const std::string& key, V& out) {
  try {
    out = j.get<V>();
  } catch (const json::exception& e) {
    throw FormatError("config: bad value for '" + key + "': " + e.what());
  }
}

void expect_object(const json& j, const std::string& what) {
  if (!j.is_object()) throw FormatError("config: '" + what + "' must be a JSON object");
}

ModelConfig parse_model(const json& j) {
  expect_object(j, "model");
  ModelConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "use_circle_loss") read(value, key, c.use_circle_loss);
    else if (key == "load_pretrained_backbone") read(value, key, c.load_pretrained_backbone);
    else if (key == "pretrained_backbone") read(value, key, c.pretrained_backbone);
    else if (key == "use_arl") read(value, key, c.use_arl);
    else if (key == "use_lrp") read(value, key, c.use_lrp);
    else if (key == "use_ff") read(value, key, c.use_ff);
    else if (key == "ff_variant") {
      std::string v;
      read(value, key, v);
      c.ff_variant = parse_fusion_variant(v);
    } else if (key == "in_channels") read(value, key, c.backbone.in_channels);
    else if (key == "height") read(value, key, c.backbone.height);
    else if (key == "width") read(value, key, c.backbone.width);
    else if (key == "stage_channels") read(value, key, c.backbone.stage_channels);
    else if (key == "r") read(value, key, c.r);
    else if (key == "M") read(value, key, c.M);
    else if (key == "k") read(value, key, c.k);
    else if (key == "d") read(value, key, c.d);
    else if (key == "d_t") read(value, key, c.d_t);
    else if (key == "heads") read(value, key, c.heads);
    else if (key == "encoder_layers") read(value, key, c.encoder_layers);
    else if (key == "gnn_layers") read(value, key, c.gnn_layers);
    else if (key == "alpha") read(value, key, c.alpha);
    else if (key == "seed") read(value, key, c.seed);
    else throw FormatError("config: unknown model key '" + key + "'");
  }
  return c;
}

TrainSchedule parse_schedule(const json& j) {
  expect_object(j, "schedule");
  TrainSchedule s;
  for (const auto& [key, value] : j.items()) {
    if (key == "epochs") read(value, key, s.epochs);
    else if (key == "base_lr") read(value, key, s.base_lr);
    else if (key == "decay_epochs") read(value, key, s.decay_epochs);
    else if (key == "decay_factor") read(value, key, s.decay_factor);
    else if (key == "batch_size") read(value, key, s.batch_size);
    else if (key == "max_steps") read(value, key, s.max_steps);
    else if (key == "augment") read(value, key, s.augment);
    else if (key == "threshold") read(value, key, s.threshold);
    else throw FormatError("config: unknown schedule key '" + key + "'");
  }
  return s;
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config: invalid JSON: ") + e.what());
  }
}

}  // namespace

std::string to_json(const ModelConfig& config) {
  return model_json(config).dump();
}

std::string to_json(const RunConfig& config) {
  return json{{"model", model_json(config.model)}, {"schedule", schedule_json(config.schedule)}}.dump(2);
}

ModelConfig model_config_from_json(const std::string& text) {
  return parse_model(parse(text));
}

RunConfig run_config_from_json(const std::string& text) {
  const json j = parse(text);
  expect_object(j, "config");
  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "model") c.model = parse_model(value);
    else if (key == "schedule") c.schedule = parse_schedule(value);
    else throw FormatError("config: unknown top-level key '" + key + "'");
  }
  c.model.validate();
  c.schedule.validate();
  return c;
}

RunConfig read_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return run_config_from_json(ss.str());
}

}  // namespace audet
