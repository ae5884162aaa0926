#include "camiqa/training.hpp"

#include "camiqa/error.hpp"
#include "camiqa/image.hpp"
#include "camiqa/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <set>

namespace camiqa {

using ad::Matrix;
using ad::Var;

// --- configuration -------------------------------------------------------

TrainConfig TrainConfig::from_config(const KeyValueConfig& kv) {
  TrainConfig c;
  c.learning_rate_max = kv.get_double("train.learning_rate_max", c.learning_rate_max);
  c.lr_floor_divisor = kv.get_double("train.lr_floor_divisor", c.lr_floor_divisor);
  c.batch_size = static_cast<int>(kv.get_int("train.batch_size", c.batch_size));
  c.epochs = static_cast<int>(kv.get_int("train.epochs", c.epochs));
  c.resize = static_cast<int>(kv.get_int("train.resize", c.resize));
  c.crop = static_cast<int>(kv.get_int("train.crop", c.crop));
  c.lambda_reg = kv.get_double("train.lambda_reg", c.lambda_reg);
  c.lambda_rank = kv.get_double("train.lambda_rank", c.lambda_rank);
  c.weight_decay = kv.get_double("train.weight_decay", c.weight_decay);
  c.validation_fraction = kv.get_double("train.validation_fraction", c.validation_fraction);
  c.seed = static_cast<std::uint64_t>(kv.get_int("train.seed", static_cast<long>(c.seed)));
  c.use_gcpf = kv.get_bool("train.use_gcpf", c.use_gcpf);
  c.score_bias = kv.get_double("train.score_bias", c.score_bias);
  c.backbone.channels = static_cast<int>(kv.get_int("backbone.channels", c.backbone.channels));
  c.backbone.depth = static_cast<int>(kv.get_int("backbone.depth", c.backbone.depth));
  c.backbone.pretrained_path = kv.get_string("backbone.pretrained", c.backbone.pretrained_path);
  c.graph_dim = static_cast<int>(kv.get_int("graph.dim", c.graph_dim));
  c.graph_heads = static_cast<int>(kv.get_int("graph.heads", c.graph_heads));
  c.ranges = ParameterRanges::from_config(kv);
  return c;
}

void TrainConfig::write_to(KeyValueConfig& kv) const {
  kv.set("train.learning_rate_max", format_double(learning_rate_max));
  kv.set("train.lr_floor_divisor", format_double(lr_floor_divisor));
  kv.set("train.batch_size", std::to_string(batch_size));
  kv.set("train.epochs", std::to_string(epochs));
  kv.set("train.resize", std::to_string(resize));
  kv.set("train.crop", std::to_string(crop));
  kv.set("train.lambda_reg", format_double(lambda_reg));
  kv.set("train.lambda_rank", format_double(lambda_rank));
  kv.set("train.weight_decay", format_double(weight_decay));
  kv.set("train.validation_fraction", format_double(validation_fraction));
  kv.set("train.seed", std::to_string(seed));
  kv.set("train.use_gcpf", use_gcpf ? "true" : "false");
  kv.set("train.score_bias", format_double(score_bias));
  kv.set("backbone.channels", std::to_string(backbone.channels));
  kv.set("backbone.depth", std::to_string(backbone.depth));
  kv.set("backbone.pretrained", backbone.pretrained_path);
  kv.set("graph.dim", std::to_string(graph_dim));
  kv.set("graph.heads", std::to_string(graph_heads));
  ranges.write_to(kv);
}

void TrainConfig::validate() const {
  if (!(learning_rate_max > 0.0) || !std::isfinite(learning_rate_max)) {
    throw UsageError("train.learning_rate_max must be positive");
  }
  if (!(lr_floor_divisor >= 1.0)) throw UsageError("train.lr_floor_divisor must be >= 1");
  if (batch_size < 1 || epochs < 1) throw UsageError("batch size and epochs must be positive");
  if (crop < 32 || resize < crop) throw UsageError("need 32 <= crop <= resize");
  if (lambda_reg < 0.0 || lambda_rank < 0.0) throw UsageError("loss weights must be >= 0");
  if (weight_decay < 0.0) throw UsageError("weight decay must be >= 0");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw UsageError("validation fraction must lie in [0,1)");
  }
  model_config().validate();
}

ModelConfig TrainConfig::model_config() const {
  ModelConfig m;
  m.backbone = backbone;
  m.use_gcpf = use_gcpf;
  m.graph_dim = graph_dim;
  m.graph_heads = graph_heads;
  m.score_bias = score_bias;
  m.ranges = ranges;
  return m;
}

double cosine_lr(long step, long total_steps, double max_lr, double floor_divisor) {
  const double floor = max_lr / floor_divisor;
  if (total_steps <= 1) return max_lr;
  if (step >= total_steps - 1) return floor;
  const double t = static_cast<double>(std::clamp(step, 0L, total_steps - 1)) /
                   static_cast<double>(total_steps - 1);
  return floor + (max_lr - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

// --- augmentation --------------------------------------------------------

AugmentDraw draw_augment(Rng& rng, int resize, int crop) {
  std::uniform_int_distribution<int> offset(0, resize - crop);
  std::bernoulli_distribution coin(0.5);
  AugmentDraw d;
  d.crop_x = offset(rng);
  d.crop_y = offset(rng);
  d.flip.horizontal = coin(rng);
  d.flip.vertical = coin(rng);
  return d;
}

AugmentDraw center_draw(int resize, int crop) {
  AugmentDraw d;
  d.crop_x = (resize - crop) / 2;
  d.crop_y = (resize - crop) / 2;
  return d;
}

PreparedImage augment(const PreparedImage& in, const FlipDraw& flip) {
  PreparedImage out = in;
  if (flip.horizontal) {
    out.image = flip_horizontal(out.image);
    for (auto& b : out.boxes) b = flip_box_horizontal(b, out.image.width);
  }
  if (flip.vertical) {
    out.image = flip_vertical(out.image);
    for (auto& b : out.boxes) b = flip_box_vertical(b, out.image.height);
  }
  return out;
}

PreparedImage preprocess(const ImageSample& sample, int resize, int crop_size,
                         const AugmentDraw& draw) {
  PreparedImage p;
  p.params = sample.params;
  const Image resized = resize_bilinear(sample.image, resize, resize);
  p.image = crop(resized, draw.crop_x, draw.crop_y, crop_size, crop_size);
  const double sx = static_cast<double>(resize) / sample.image.width;
  const double sy = static_cast<double>(resize) / sample.image.height;
  for (const auto& b : sample.human_boxes) {
    if (auto c = crop_box(scale_box(b, sx, sy), draw.crop_x, draw.crop_y, crop_size, crop_size)) {
      p.boxes.push_back(*c);
    }
  }
  return augment(p, draw.flip);
}

std::vector<std::vector<size_t>> make_batches(size_t n_pairs, int batch_size, std::uint64_t seed,
                                              int epoch) {
  if (n_pairs == 0) throw DataError("no training pairs");
  if (batch_size < 1) throw UsageError("batch size must be positive");
  std::vector<size_t> order(n_pairs);
  for (size_t i = 0; i < n_pairs; ++i) order[i] = i;
  Rng rng(derive_seed(seed, {hash_tag("epoch"), static_cast<std::uint64_t>(epoch)}));
  for (size_t i = n_pairs - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
  std::vector<std::vector<size_t>> batches;
  for (size_t start = 0; start < n_pairs; start += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(n_pairs, start + static_cast<size_t>(batch_size));
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

// --- optimizer -----------------------------------------------------------

AdamW::AdamW(nn::ParameterStore& store, double weight_decay, double beta1, double beta2, double eps)
    : store_(store), wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps) {
  for (const auto& p : store.all()) {
    m_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    v_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  }
}

void AdamW::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  size_t i = 0;
  for (auto& p : store_.all()) {
    auto& m = m_[i];
    auto& v = v_[i];
    ++i;
    if (p.grad.size() == 0) continue;
    m = b1_ * m + (1.0 - b1_) * p.grad;
    v = b2_ * v + (1.0 - b2_) * p.grad.cwiseProduct(p.grad);
    p.value *= 1.0 - lr * wd_;
    p.value.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  }
}

// --- data plumbing -------------------------------------------------------

namespace {

std::map<std::string, Split> scene_split(const DatasetManifest& m) { return m.split; }

bool in_split(const DatasetManifest& m, const std::string& scene, Split s) {
  auto it = m.split.find(scene);
  return it != m.split.end() && it->second == s;
}

class ImageCache {
 public:
  explicit ImageCache(const TrainingData& data) : data_(data) {}

  const ImageSample& get(const std::string& id) {
    auto it = cache_.find(id);
    if (it != cache_.end()) return it->second;
    const SampleRecord* rec = data_.manifest.find_sample(id);
    if (!rec) throw DataError("image " + id + " is not in the manifest");
    return cache_.emplace(id, load_sample(data_.root, *rec)).first->second;
  }

 private:
  const TrainingData& data_;
  std::map<std::string, ImageSample> cache_;
};

Matrix mos_row(const MOSRecord& r, bool variance) {
  Matrix m(1, static_cast<Eigen::Index>(kNumAttributes));
  for (size_t i = 0; i < kNumAttributes; ++i) {
    m(0, static_cast<Eigen::Index>(i)) = variance ? r.variance[i] : r.mos[i];
  }
  return m;
}

struct SceneEval {
  std::map<std::string, AttributeArray> scores;
  std::map<std::string, Eigen::RowVectorXd> features;
};

MetricReport evaluate_scenes(const QualityModel& model, const TrainConfig& cfg,
                             const TrainingData& data, const std::set<std::string>& scenes,
                             ImageCache& cache, bool tolerate_degenerate) {
  std::map<std::string, const MOSRecord*> mos;
  for (const auto& r : data.mos) mos[r.image_id] = &r;

  SceneEval ev;
  std::vector<std::string> ids;
  for (const auto& s : data.manifest.samples) {
    if (!scenes.count(s.scene_id)) continue;
    if (!mos.count(s.image_id)) throw DataError("image " + s.image_id + " has no MOS record");
    const auto& sample = cache.get(s.image_id);
    const auto prep = preprocess(sample, cfg.resize, cfg.crop, center_draw(cfg.resize, cfg.crop));
    const auto f = model.embed(prep.image, prep.boxes, prep.params);
    ev.features[s.image_id] = f;
    ev.scores[s.image_id] = predict_attributes(model.heads, f);
    ids.push_back(s.image_id);
  }
  if (ids.empty()) throw DataError("evaluation split contains no images");

  MetricReport report;
  report.images = ids.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (auto a : kAttributes) {
    std::vector<double> pred, truth;
    for (const auto& id : ids) {
      pred.push_back(at(ev.scores[id], a));
      truth.push_back(at(mos[id]->mos, a));
    }
    try {
      report.srcc[a] = srcc(pred, truth);
      report.plcc[a] = plcc(pred, truth);
    } catch (const NumericalError&) {
      if (!tolerate_degenerate) throw;
      report.srcc[a] = nan;
      report.plcc[a] = nan;
    } catch (const DataError&) {
      if (!tolerate_degenerate) throw;
      report.srcc[a] = nan;
      report.plcc[a] = nan;
    }
  }

  std::vector<AttributeArray> chat, labels;
  for (const auto& p : data.pairs) {
    if (!p.fine_grained || !scenes.count(p.scene_id)) continue;
    if (!ev.features.count(p.image_p) || !ev.features.count(p.image_q)) {
      throw DataError("pair " + p.image_p + "/" + p.image_q + " references an unknown image");
    }
    chat.push_back(compare_pair(model.heads, ev.features[p.image_p], ev.features[p.image_q]));
    labels.push_back(p.labels);
  }
  report.pairs = chat.size();
  for (auto a : kAttributes) {
    std::vector<double> c, l;
    for (size_t i = 0; i < chat.size(); ++i) {
      c.push_back(at(chat[i], a));
      l.push_back(at(labels[i], a));
    }
    const bool any_hard =
        std::any_of(l.begin(), l.end(), [](double v) { return v != 0.5; });
    if (any_hard) {
      report.fg_acc[a] = fg_acc(c, l);
    } else if (tolerate_degenerate) {
      report.fg_acc[a] = nan;
    }
  }
  return report;
}

std::set<std::string> choose_validation(const std::vector<std::string>& train_scenes,
                                        double fraction, std::uint64_t seed) {
  std::set<std::string> out;
  const auto n = static_cast<long>(std::lround(fraction * static_cast<double>(train_scenes.size())));
  if (n < 1 || train_scenes.size() < 2) return out;
  std::vector<std::string> order = train_scenes;
  Rng rng(derive_seed(seed, {hash_tag("validation")}));
  for (size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
  const long keep = std::min<long>(n, static_cast<long>(order.size()) - 1);
  for (long i = 0; i < keep; ++i) out.insert(order[static_cast<size_t>(i)]);
  return out;
}

void load_pretrained_backbone(QualityModel& model, const std::string& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  int copied = 0;
  for (auto& p : model.store.all()) {
    if (p.name().rfind("backbone.", 0) != 0) continue;
    auto it = ckpt.weights.find(p.name());
    if (it == ckpt.weights.end()) throw DataError("pretrained backbone lacks " + p.name());
    if (it->second.rows() != p.value.rows() || it->second.cols() != p.value.cols()) {
      throw DataError("pretrained backbone shape mismatch for " + p.name());
    }
    p.value = it->second;
    ++copied;
  }
  if (copied == 0) throw DataError("pretrained checkpoint holds no backbone weights");
}

}  // namespace

std::vector<PairPreference> training_pairs(const DatasetManifest& manifest,
                                           std::span<const PairPreference> pairs) {
  std::vector<PairPreference> out;
  for (const auto& p : pairs) {
    if (in_split(manifest, p.scene_id, Split::train)) out.push_back(p);
  }
  return out;
}

// --- training ------------------------------------------------------------

TrainResult train(const TrainingData& data, const TrainConfig& cfg, std::ostream* log) {
  cfg.validate();
  const auto split = scene_split(data.manifest);

  std::map<std::string, const MOSRecord*> mos;
  for (const auto& r : data.mos) mos[r.image_id] = &r;

  // Scene leakage guard and reference checks.
  for (const auto& p : data.pairs) {
    auto it = split.find(p.scene_id);
    if (it == split.end()) throw DataError("pair scene " + p.scene_id + " has no split");
    if (it->second == Split::test) {
      throw DataError("test scene " + p.scene_id + " appears in the training pairs");
    }
    for (const auto* id : {&p.image_p, &p.image_q}) {
      const SampleRecord* rec = data.manifest.find_sample(*id);
      if (!rec) throw DataError("pair references unknown image " + *id);
      if (rec->scene_id != p.scene_id) throw DataError("pair image " + *id + " is from another scene");
      if (!mos.count(*id)) throw DataError("image " + *id + " has no MOS record");
    }
  }

  std::vector<std::string> train_scenes;
  for (const auto& [scene, s] : split) {
    if (s == Split::train) train_scenes.push_back(scene);
  }
  const auto val_scenes = choose_validation(train_scenes, cfg.validation_fraction, cfg.seed);

  std::vector<const PairPreference*> fit;
  for (const auto& p : data.pairs) {
    if (!val_scenes.count(p.scene_id)) fit.push_back(&p);
  }
  if (fit.empty()) throw DataError("no training pairs outside the validation scenes");

  TrainResult result;
  result.model = std::make_unique<QualityModel>(cfg.model_config(), cfg.seed);
  QualityModel& model = *result.model;
  if (!cfg.backbone.pretrained_path.empty()) load_pretrained_backbone(model, cfg.backbone.pretrained_path);

  ImageCache cache(data);
  AdamW opt(model.store, cfg.weight_decay);
  const LossWeights weights{cfg.lambda_reg, cfg.lambda_rank};
  const long steps_per_epoch = static_cast<long>((fit.size() + static_cast<size_t>(cfg.batch_size) - 1) /
                                                 static_cast<size_t>(cfg.batch_size));
  const long total_steps = steps_per_epoch * cfg.epochs;
  Rng aug_rng(derive_seed(cfg.seed, {hash_tag("augment")}));

  std::vector<EpochMetrics> history;
  long step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochMetrics em;
    em.epoch = epoch;
    double sum_reg = 0.0, sum_rank = 0.0;
    for (const auto& batch : make_batches(fit.size(), cfg.batch_size, cfg.seed, epoch)) {
      model.store.zero_grad();
      const double inv = 1.0 / static_cast<double>(batch.size());
      for (size_t idx : batch) {
        const PairPreference& pair = *fit[idx];
        const AugmentDraw draw = draw_augment(aug_rng, cfg.resize, cfg.crop);
        const auto a = preprocess(cache.get(pair.image_p), cfg.resize, cfg.crop, draw);
        const auto b = preprocess(cache.get(pair.image_q), cfg.resize, cfg.crop, draw);

        ad::Tape tape;
        Var fa = model.features(tape, a.image, a.boxes, a.params);
        Var fb = model.features(tape, b.image, b.boxes, b.params);
        const std::array<Var, 2> both{fa, fb};
        Var scores = model.heads.predict(tape, ad::concat_rows(both));
        Matrix target(2, static_cast<Eigen::Index>(kNumAttributes));
        Matrix variance(2, static_cast<Eigen::Index>(kNumAttributes));
        target << mos_row(*mos[pair.image_p], false), mos_row(*mos[pair.image_q], false);
        variance << mos_row(*mos[pair.image_p], true), mos_row(*mos[pair.image_q], true);
        Var reg = regression_loss(scores, target, variance);

        Matrix label(1, static_cast<Eigen::Index>(kNumAttributes));
        for (size_t i = 0; i < kNumAttributes; ++i) label(0, static_cast<Eigen::Index>(i)) = pair.labels[i];
        Var rank = ranking_loss(model.heads.compare_raw(tape, fa, fb), label);
        Var loss = total_loss(reg, rank, weights);
        if (!std::isfinite(loss.scalar())) {
          throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                               std::to_string(step) + " (pair " + pair.image_p + "/" +
                               pair.image_q + ")");
        }
        sum_reg += reg.scalar();
        sum_rank += rank.scalar();
        tape.backward(loss, inv);
      }
      opt.step(cosine_lr(step, total_steps, cfg.learning_rate_max, cfg.lr_floor_divisor));
      ++step;
    }
    const double n = static_cast<double>(fit.size());
    em.train_regression = sum_reg / n;
    em.train_ranking = sum_rank / n;
    em.train_loss = total_loss(em.train_regression, em.train_ranking, weights);

    em.val_srcc = em.val_fg_acc = std::numeric_limits<double>::quiet_NaN();
    if (!val_scenes.empty()) {
      const auto r = evaluate_scenes(model, cfg, data, val_scenes, cache, true);
      em.val_srcc = r.srcc.at(Attribute::overall);
      if (r.fg_acc.count(Attribute::overall)) em.val_fg_acc = r.fg_acc.at(Attribute::overall);
    }
    if (log) {
      *log << "epoch " << epoch << " loss " << format_double(em.train_loss) << " reg "
           << format_double(em.train_regression) << " rank " << format_double(em.train_ranking)
           << " val_srcc " << format_double(em.val_srcc) << " val_fg_acc "
           << format_double(em.val_fg_acc) << '\n';
    }
    history.push_back(em);
  }
  result.checkpoint = make_checkpoint(model, cfg, std::move(history));
  return result;
}

// --- checkpoints and evaluation -----------------------------------------

Checkpoint make_checkpoint(const QualityModel& model, const TrainConfig& cfg,
                           std::vector<EpochMetrics> history) {
  Checkpoint ckpt;
  cfg.write_to(ckpt.config);
  ckpt.history = std::move(history);
  for (const auto& p : model.store.all()) ckpt.weights[p.name()] = p.value;
  return ckpt;
}

TrainConfig config_from_checkpoint(const Checkpoint& ckpt) {
  return TrainConfig::from_config(ckpt.config);
}

std::unique_ptr<QualityModel> model_from_checkpoint(const Checkpoint& ckpt) {
  TrainConfig cfg = config_from_checkpoint(ckpt);
  cfg.backbone.pretrained_path.clear();
  auto model = std::make_unique<QualityModel>(cfg.model_config(), cfg.seed);
  size_t used = 0;
  for (auto& p : model->store.all()) {
    auto it = ckpt.weights.find(p.name());
    if (it == ckpt.weights.end()) throw DataError("checkpoint lacks weight " + p.name());
    if (it->second.rows() != p.value.rows() || it->second.cols() != p.value.cols()) {
      throw DataError("checkpoint weight " + p.name() + " has the wrong shape");
    }
    p.value = it->second;
    ++used;
  }
  if (used != ckpt.weights.size()) throw DataError("checkpoint holds weights unknown to the model");
  return model;
}

MetricReport evaluate_model(const QualityModel& model, const TrainConfig& cfg,
                            const TrainingData& data, Split split) {
  std::set<std::string> scenes;
  for (const auto& [scene, s] : data.manifest.split) {
    if (s == split) scenes.insert(scene);
  }
  if (scenes.empty()) throw DataError("evaluation split is empty");
  ImageCache cache(data);
  return evaluate_scenes(model, cfg, data, scenes, cache, false);
}

MetricReport evaluate_checkpoint(const Checkpoint& ckpt, const TrainingData& data, Split split) {
  const auto model = model_from_checkpoint(ckpt);
  return evaluate_model(*model, config_from_checkpoint(ckpt), data, split);
}

}  // namespace camiqa
