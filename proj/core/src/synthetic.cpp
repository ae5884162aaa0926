#include "camiqa/synthetic.hpp"

#include "camiqa/annotation.hpp"
#include "camiqa/error.hpp"
#include "camiqa/image.hpp"
#include "camiqa/manifest.hpp"
#include "camiqa/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>

namespace camiqa {

namespace {

constexpr double kStopsPerUnit = 6.0;
// Distortion strength per sqrt of attribute deficit; the square root keeps
// small deviations near the optimum visible.
constexpr double kBlurScale = 1.5;   // Gaussian sigma in pixels at 96 px width
constexpr double kNoiseScale = 0.05; // pixel noise standard deviation

double sq(double x) { return x * x; }

double clamp_score(double v) { return std::clamp(v, 1.0, 5.0); }

double dev(const std::array<double, kNumParams>& d, Param p) {
  return d[static_cast<size_t>(p)];
}

std::string two_digits(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", i);
  return buf;
}

std::string three_digits(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", i);
  return buf;
}

// Separable Gaussian blur with clamped borders.
void gaussian_blur(Image& img, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * sq(i / sigma));
    total += k[i + radius];
  }
  for (auto& v : k) v /= total;

  const int w = img.width, h = img.height;
  Image tmp(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += k[i + radius] * img.at(std::clamp(x + i, 0, w - 1), y, c);
        }
        tmp.at(x, y, c) = acc;
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += k[i + radius] * tmp.at(x, std::clamp(y + i, 0, h - 1), c);
        }
        img.at(x, y, c) = acc;
      }
    }
  }
}

std::uint64_t params_tag(const CameraParameters& p) {
  std::uint64_t h = 0;
  for (double v : p.values()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h = mix_seed(h ^ bits);
  }
  return h;
}

}  // namespace

void SceneSpec::validate() const {
  if (n_variants < 2) throw DataError("scene " + scene_id + ": n_variants must be >= 2");
  if (!(0.0 <= face_box.x0 && face_box.x0 < face_box.x1 && face_box.x1 <= 1.0 &&
        0.0 <= face_box.y0 && face_box.y0 < face_box.y1 && face_box.y1 <= 1.0)) {
    throw DataError("scene " + scene_id + ": face box outside the unit square");
  }
  if (width < 8 || height < 8) throw DataError("scene " + scene_id + ": image too small");
  optimal_params.validate();
}

std::array<double, kNumParams> parameter_deviations(const CameraParameters& params,
                                                    const CameraParameters& optimal,
                                                    const ParameterRanges& ranges) {
  params.validate();
  optimal.validate();
  std::array<double, kNumParams> d{};
  for (auto p : kParams) {
    d[static_cast<size_t>(p)] =
        normalize_value(p, params.get(p), ranges) - normalize_value(p, optimal.get(p), ranges);
  }
  return d;
}

double exposure_stops(const CameraParameters& params, const CameraParameters& optimal) {
  return std::log2(params.shutter / optimal.shutter) + std::log2(params.iso / optimal.iso) -
         2.0 * std::log2(params.aperture / optimal.aperture);
}

TrueQuality true_quality(const CameraParameters& params, const CameraParameters& optimal,
                         const ParameterRanges& ranges) {
  const auto d = parameter_deviations(params, optimal, ranges);
  const double ev = exposure_stops(params, optimal) / kStopsPerUnit;

  const double pen_sharp = 16.0 * sq(dev(d, Param::sharpness)) + 8.0 * sq(dev(d, Param::aperture));
  const double pen_exp = 14.0 * sq(ev) +
                         4.0 * (sq(dev(d, Param::shutter)) + sq(dev(d, Param::iso)) +
                                sq(dev(d, Param::aperture))) +
                         6.0 * sq(dev(d, Param::contrast));
  const double pen_noise = 16.0 * sq(dev(d, Param::iso));
  const double pen_face = 1.25 * 0.5 * (pen_sharp + pen_exp) +
                          10.0 * sq(dev(d, Param::white_balance)) +
                          10.0 * sq(dev(d, Param::saturation));

  TrueQuality q{};
  at(q, Attribute::sharpness) = clamp_score(5.0 - pen_sharp);
  at(q, Attribute::exposure) = clamp_score(5.0 - pen_exp);
  at(q, Attribute::noise) = clamp_score(5.0 - pen_noise);
  at(q, Attribute::face) = clamp_score(5.0 - pen_face);
  at(q, Attribute::overall) = clamp_score(
      0.4 * at(q, Attribute::face) +
      0.2 * (at(q, Attribute::sharpness) + at(q, Attribute::exposure) + at(q, Attribute::noise)));
  return q;
}

Image render_clean(const SceneSpec& scene) {
  scene.validate();
  Rng rng(derive_seed(scene.base_seed, {hash_tag("clean")}));
  std::uniform_real_distribution<double> u(0.0, 1.0);

  const int w = scene.width, h = scene.height;
  Image img(w, h);

  double top[3], bottom[3];
  for (int c = 0; c < 3; ++c) {
    top[c] = 0.25 + 0.45 * u(rng);
    bottom[c] = 0.15 + 0.45 * u(rng);
  }
  for (int y = 0; y < h; ++y) {
    const double t = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = (1.0 - t) * top[c] + t * bottom[c];
    }
  }

  // Textured panel: a sinusoidal grating gives blur something to destroy.
  const int rx0 = static_cast<int>(u(rng) * 0.4 * w);
  const int ry0 = static_cast<int>(u(rng) * 0.4 * h);
  const int rx1 = std::min(w, rx0 + static_cast<int>((0.35 + 0.25 * u(rng)) * w));
  const int ry1 = std::min(h, ry0 + static_cast<int>((0.35 + 0.25 * u(rng)) * h));
  const double freq_x = 0.6 + 0.8 * u(rng);
  const double freq_y = 0.6 + 0.8 * u(rng);
  double tint[3];
  for (double& c : tint) c = 0.3 + 0.5 * u(rng);
  for (int y = ry0; y < ry1; ++y) {
    for (int x = rx0; x < rx1; ++x) {
      const double g = 0.5 + 0.35 * std::sin(freq_x * x) * std::cos(freq_y * y);
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = tint[c] * g + 0.1;
    }
  }

  // Elliptical face with darker eyes and a mouth stroke.
  const double fx0 = scene.face_box.x0 * w, fx1 = scene.face_box.x1 * w;
  const double fy0 = scene.face_box.y0 * h, fy1 = scene.face_box.y1 * h;
  const double cx = 0.5 * (fx0 + fx1), cy = 0.5 * (fy0 + fy1);
  const double ax = 0.5 * (fx1 - fx0), ay = 0.5 * (fy1 - fy0);
  const double skin[3] = {0.80 + 0.1 * u(rng), 0.60 + 0.08 * u(rng), 0.48 + 0.08 * u(rng)};
  for (int y = static_cast<int>(fy0); y < std::min(h, static_cast<int>(std::ceil(fy1))); ++y) {
    for (int x = static_cast<int>(fx0); x < std::min(w, static_cast<int>(std::ceil(fx1))); ++x) {
      const double ex = (x + 0.5 - cx) / ax, ey = (y + 0.5 - cy) / ay;
      if (ex * ex + ey * ey > 1.0) continue;
      double shade = 1.0 - 0.15 * (ex * ex + ey * ey);
      const bool eye = (sq(ex + 0.35) + sq(ey + 0.25) < 0.02) || (sq(ex - 0.35) + sq(ey + 0.25) < 0.02);
      const bool mouth = std::abs(ey - 0.4) < 0.06 && std::abs(ex) < 0.35;
      if (eye) shade = 0.15;
      if (mouth) shade = 0.45;
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = skin[c] * shade;
    }
  }
  img.pixels = img.pixels.cwiseMax(0.0).cwiseMin(1.0);
  return img;
}

ImageSample render_image(const SceneSpec& scene, const CameraParameters& params,
                         const std::string& image_id, const ParameterRanges& ranges) {
  ImageSample s;
  s.image_id = image_id;
  s.scene_id = scene.scene_id;
  s.image = render_clean(scene);
  s.params = params;
  s.human_boxes.push_back(Box{scene.face_box.x0 * scene.width, scene.face_box.y0 * scene.height,
                              scene.face_box.x1 * scene.width, scene.face_box.y1 * scene.height});

  const auto d = parameter_deviations(params, scene.optimal_params, ranges);
  const auto tq = true_quality(params, scene.optimal_params, ranges);
  auto& px = s.image.pixels;

  // Each stage is skipped at zero deviation so the optimum stays bit-exact.
  if (const double dwb = dev(d, Param::white_balance); dwb != 0.0) {
    px.col(0) *= std::exp(0.8 * dwb);
    px.col(2) *= std::exp(-0.8 * dwb);
  }
  if (const double ds = dev(d, Param::saturation); ds != 0.0) {
    const Eigen::VectorXd gray = px.rowwise().mean();
    const double k = std::exp(1.5 * ds);
    for (int c = 0; c < 3; ++c) px.col(c) = gray + k * (px.col(c) - gray);
  }
  if (const double dc = dev(d, Param::contrast); dc != 0.0) {
    const double k = std::exp(1.5 * dc);
    px = ((px.array() - 0.5) * k + 0.5).matrix();
  }
  if (const double stops = exposure_stops(params, scene.optimal_params); stops != 0.0) {
    px *= std::exp2(stops);
  }
  if (const double deficit = 5.0 - at(tq, Attribute::sharpness); deficit > 0.0) {
    px = px.cwiseMax(0.0).cwiseMin(1.0);
    gaussian_blur(s.image, kBlurScale * std::sqrt(deficit) * scene.width / 96.0);
  }
  if (const double deficit = 5.0 - at(tq, Attribute::noise); deficit > 0.0) {
    Rng rng(derive_seed(scene.base_seed, {hash_tag("noise"), params_tag(params)}));
    std::normal_distribution<double> n(0.0, kNoiseScale * std::sqrt(deficit));
    for (Eigen::Index i = 0; i < px.size(); ++i) px.data()[i] += n(rng);
  }
  px = px.cwiseMax(0.0).cwiseMin(1.0);
  return s;
}

std::vector<AnnotationRecord> simulate_annotations(const TrueQuality& tq, int n_annotators,
                                                   double noise_sd, std::uint64_t seed,
                                                   const std::string& image_id) {
  if (n_annotators < 1) throw UsageError("simulate_annotations: need at least one annotator");
  if (!(noise_sd >= 0.0)) throw UsageError("simulate_annotations: noise_sd must be >= 0");
  std::vector<AnnotationRecord> out;
  out.reserve(static_cast<size_t>(n_annotators));
  for (int k = 0; k < n_annotators; ++k) {
    Rng rng(derive_seed(seed, {hash_tag("annot"), hash_tag(image_id), static_cast<std::uint64_t>(k)}));
    std::normal_distribution<double> n(0.0, 1.0);
    AnnotationRecord r;
    r.annotator_id = "ann" + two_digits(k);
    r.image_id = image_id;
    for (size_t a = 0; a < kNumAttributes; ++a) {
      const double v = clamp_score(tq[a] + noise_sd * n(rng));
      r.scores[a] = static_cast<int>(std::lround(v));
    }
    out.push_back(r);
  }
  return out;
}

std::vector<double> simulate_votes(const TrueQuality& p, const TrueQuality& q, int n_votes,
                                   double noise_sd, std::uint64_t seed) {
  if (n_votes < 0) throw UsageError("simulate_votes: negative vote count");
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  const double band = 0.25 * noise_sd;
  std::vector<double> votes;
  for (int k = 0; k < n_votes; ++k) {
    const double diff =
        at(p, Attribute::overall) - at(q, Attribute::overall) + 0.5 * noise_sd * n(rng);
    votes.push_back(std::abs(diff) <= band ? 0.5 : (diff > 0.0 ? 1.0 : 0.0));
  }
  return votes;
}

SceneSpec random_scene(const std::string& scene_id, std::uint64_t seed,
                       const GeneratorOptions& options) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SceneSpec s;
  s.scene_id = scene_id;
  s.base_seed = seed;
  s.width = options.width;
  s.height = options.height;
  std::array<double, kNumParams> v{};
  for (auto p : kParams) {
    const double unit = options.shared_optimum ? 0.5 : 0.3 + 0.4 * u(rng);
    v[static_cast<size_t>(p)] = denormalize_value(p, unit, options.ranges);
  }
  s.optimal_params = CameraParameters::from_values(v);
  const double fw = 0.2 + 0.15 * u(rng);
  const double fh = std::min(0.6, fw * 1.3);
  const double fx = 0.1 + (0.8 - fw) * u(rng);
  const double fy = 0.1 + (0.8 - fh) * u(rng);
  s.face_box = Box{fx, fy, fx + fw, fy + fh};
  return s;
}

std::vector<GeneratedScene> make_scenes(int n_scenes, int variants_per_scene, std::uint64_t seed,
                                        const GeneratorOptions& options) {
  if (n_scenes < 1 || variants_per_scene < 2) {
    throw UsageError("generate: need at least one scene and two variants per scene");
  }
  std::vector<GeneratedScene> out;
  for (int si = 0; si < n_scenes; ++si) {
    const auto scene_seed = derive_seed(seed, {hash_tag("scene"), static_cast<std::uint64_t>(si)});
    GeneratedScene g;
    g.spec = random_scene("scene_" + three_digits(si), scene_seed, options);
    g.spec.n_variants = variants_per_scene;

    Rng rng(derive_seed(scene_seed, {hash_tag("variants")}));
    std::uniform_real_distribution<double> u(-options.max_deviation, options.max_deviation);
    std::uniform_int_distribution<int> how_many(1, 3);
    std::uniform_int_distribution<int> which(0, static_cast<int>(kNumParams) - 1);
    for (int vi = 0; vi < variants_per_scene; ++vi) {
      std::array<double, kNumParams> unit{};
      for (auto p : kParams) {
        unit[static_cast<size_t>(p)] = normalize_value(p, g.spec.optimal_params.get(p), options.ranges);
      }
      const int k = how_many(rng);
      for (int j = 0; j < k; ++j) unit[static_cast<size_t>(which(rng))] += u(rng);
      std::array<double, kNumParams> v{};
      for (auto p : kParams) {
        const double un = std::clamp(unit[static_cast<size_t>(p)], 0.0, 1.0);
        v[static_cast<size_t>(p)] = denormalize_value(p, un, options.ranges);
      }
      const auto params = CameraParameters::from_values(v);
      g.variants.push_back(params);
      g.quality.push_back(true_quality(params, g.spec.optimal_params, options.ranges));
    }
    out.push_back(std::move(g));
  }
  return out;
}

DatasetManifest generate_dataset(int n_scenes, int variants_per_scene, int annotators,
                                 double noise_sd, std::uint64_t seed,
                                 const std::filesystem::path& out_dir,
                                 const GeneratorOptions& options) {
  if (annotators < 1) throw UsageError("generate: need at least one annotator");
  if (!(noise_sd >= 0.0)) throw UsageError("generate: noise_sd must be >= 0");
  if (n_scenes < 2) throw UsageError("generate: need at least two scenes for a split");
  options.ranges.validate();

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (ec) throw DataError("cannot create " + (out_dir / "images").string() + ": " + ec.message());

  const auto scenes = make_scenes(n_scenes, variants_per_scene, seed, options);
  DatasetManifest m;
  for (const auto& g : scenes) {
    std::vector<std::string> ids;
    std::map<std::string, TrueQuality> tq;
    std::map<std::string, double> overall;
    for (size_t vi = 0; vi < g.variants.size(); ++vi) {
      const std::string id = g.spec.scene_id + "_v" + two_digits(static_cast<int>(vi));
      const auto sample = render_image(g.spec, g.variants[vi], id, options.ranges);
      const std::string rel = "images/" + id + ".ppm";
      write_ppm(out_dir / rel, sample.image);

      SampleRecord r;
      r.image_id = id;
      r.scene_id = g.spec.scene_id;
      r.path = rel;
      r.width = sample.image.width;
      r.height = sample.image.height;
      r.boxes = sample.human_boxes;
      r.params = g.variants[vi];
      m.samples.push_back(r);

      auto ann = simulate_annotations(g.quality[vi], annotators, noise_sd, seed, id);
      Rng spam(derive_seed(seed, {hash_tag("spam"), hash_tag(id)}));
      std::uniform_int_distribution<int> any(1, 5);
      for (int k = 0; k < options.spammers; ++k) {
        AnnotationRecord a;
        a.annotator_id = "spam" + two_digits(k);
        a.image_id = id;
        for (auto& s : a.scores) s = any(spam);
        ann.push_back(a);
      }
      m.annotations.insert(m.annotations.end(), ann.begin(), ann.end());
      ids.push_back(id);
      tq[id] = g.quality[vi];
      overall[id] = at(compute_mos(ann).mos, Attribute::overall);
    }

    // Votes are collected for every pair whose simulated MOS gap is near the
    // fine-grained threshold, so screening cannot leave a fine pair unvoted.
    for (size_t i = 0; i < ids.size(); ++i) {
      for (size_t j = i + 1; j < ids.size(); ++j) {
        if (std::abs(overall[ids[i]] - overall[ids[j]]) > 1.2) continue;
        const auto votes =
            simulate_votes(tq[ids[i]], tq[ids[j]], options.votes_per_pair, noise_sd,
                           derive_seed(seed, {hash_tag("vote"), hash_tag(ids[i]), hash_tag(ids[j])}));
        for (size_t k = 0; k < votes.size(); ++k) {
          m.votes.push_back(VoteRecord{"ann" + two_digits(static_cast<int>(k)), ids[i], ids[j], votes[k]});
        }
      }
    }
  }
  validate_manifest(m);
  return split_scenes(m, options.train_fraction, derive_seed(seed, {hash_tag("split")}));
}

}  // namespace camiqa
