#include "camiqa/annotation.hpp"

#include "camiqa/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

namespace camiqa {

using nlohmann::json;

MOSRecord compute_mos(std::span<const AnnotationRecord> annotations) {
  if (annotations.empty()) throw DataError("compute_mos: no annotations");
  MOSRecord r;
  r.image_id = annotations.front().image_id;
  r.count = static_cast<int>(annotations.size());
  for (const auto& a : annotations) {
    if (a.image_id != r.image_id) throw DataError("compute_mos: annotations for several images");
  }
  const double n = static_cast<double>(annotations.size());
  for (size_t k = 0; k < kNumAttributes; ++k) {
    // Integer sums are exact and order independent.
    long sum = 0;
    for (const auto& a : annotations) sum += a.scores[k];
    long sum_sq = 0;
    for (const auto& a : annotations) sum_sq += static_cast<long>(a.scores[k]) * a.scores[k];
    // n * sum_sq - sum^2 is an exact integer.
    const auto spread = static_cast<long>(annotations.size()) * sum_sq - sum * sum;
    r.mos[k] = static_cast<double>(sum) / n;
    r.variance[k] = static_cast<double>(spread) / (n * n);
  }
  return r;
}

namespace {

std::optional<double> pearson_or_empty(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

std::map<std::string, std::vector<AnnotationRecord>> group_by_image(
    std::span<const AnnotationRecord> all) {
  std::map<std::string, std::vector<AnnotationRecord>> g;
  for (const auto& a : all) g[a.image_id].push_back(a);
  return g;
}

}  // namespace

ScreeningResult screen_annotators(std::span<const AnnotationRecord> all, double threshold) {
  const auto by_image = group_by_image(all);
  std::set<std::string> annotators;
  for (const auto& a : all) annotators.insert(a.annotator_id);
  if (annotators.size() < 2) throw DataError("screening needs at least 2 annotators");
  if (by_image.size() < 2) throw DataError("screening needs at least 2 images");

  std::map<std::string, double> provisional;
  for (const auto& [id, recs] : by_image) provisional[id] = at(compute_mos(recs).mos, Attribute::overall);

  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> series;
  for (const auto& a : all) {
    auto& [own, mos] = series[a.annotator_id];
    own.push_back(a.scores[static_cast<size_t>(Attribute::overall)]);
    mos.push_back(provisional.at(a.image_id));
  }

  ScreeningResult result;
  std::set<std::string> kept;
  for (const auto& id : annotators) {
    const auto& [own, mos] = series.at(id);
    ScreeningReport rep{id, pearson_or_empty(own, mos), false};
    rep.retained = rep.plcc_to_mos.has_value() && *rep.plcc_to_mos >= threshold;
    if (rep.retained) kept.insert(id);
    result.reports.push_back(rep);
  }
  if (kept.empty()) throw DataError("screening rejected every annotator");
  for (const auto& a : all) {
    if (kept.count(a.annotator_id)) result.retained.push_back(a);
  }
  return result;
}

std::vector<PairPreference> build_scene_pairs(std::span<const MOSRecord> scene_images,
                                              const std::string& scene_id,
                                              double fine_threshold) {
  if (scene_images.size() < 2) throw DataError("scene " + scene_id + " has fewer than 2 images");
  std::vector<PairPreference> pairs;
  pairs.reserve(scene_images.size() * (scene_images.size() - 1) / 2);
  for (size_t i = 0; i < scene_images.size(); ++i) {
    for (size_t j = i + 1; j < scene_images.size(); ++j) {
      const auto& p = scene_images[i];
      const auto& q = scene_images[j];
      PairPreference pr;
      pr.scene_id = scene_id;
      pr.image_p = p.image_id;
      pr.image_q = q.image_id;
      for (size_t k = 0; k < kNumAttributes; ++k) {
        pr.labels[k] = p.mos[k] > q.mos[k] ? 1.0 : (p.mos[k] < q.mos[k] ? 0.0 : 0.5);
      }
      const double gap = std::abs(at(p.mos, Attribute::overall) - at(q.mos, Attribute::overall));
      pr.fine_grained = gap <= fine_threshold;
      pairs.push_back(std::move(pr));
    }
  }
  return pairs;
}

PairPreference refine_preference(const PairPreference& pair, std::span<const double> votes) {
  if (!pair.fine_grained) throw UsageError("refine_preference called on a coarse pair");
  if (votes.empty()) throw DataError("refine_preference needs at least one vote");
  double total = 0.0;
  for (double v : votes) {
    if (v != 0.0 && v != 0.5 && v != 1.0) throw DataError("vote must be 0, 0.5 or 1");
    total += v;
  }
  PairPreference out = pair;
  at(out.labels, Attribute::overall) = total / static_cast<double>(votes.size());
  return out;
}

AnnotationOutput annotation_pipeline(const DatasetManifest& manifest,
                                     const AnnotationOptions& options) {
  AnnotationOutput out;
  const auto screened = screen_annotators(manifest.annotations, options.screening_threshold);
  out.screening = screened.reports;
  const auto by_image = group_by_image(screened.retained);

  std::map<std::string, std::vector<MOSRecord>> by_scene;
  std::vector<std::string> scene_order;
  for (const auto& s : manifest.samples) {
    auto it = by_image.find(s.image_id);
    if (it == by_image.end()) {
      throw DataError("image " + s.image_id + " has no retained annotations");
    }
    MOSRecord r = compute_mos(it->second);
    out.mos.push_back(r);
    if (!by_scene.count(s.scene_id)) scene_order.push_back(s.scene_id);
    by_scene[s.scene_id].push_back(std::move(r));
  }
  std::sort(scene_order.begin(), scene_order.end());

  // Votes keyed by the unordered pair; stored as preference for the first id.
  std::map<std::pair<std::string, std::string>, std::vector<double>> votes;
  for (const auto& v : manifest.votes) {
    if (v.image_p < v.image_q) {
      votes[{v.image_p, v.image_q}].push_back(v.value);
    } else {
      votes[{v.image_q, v.image_p}].push_back(1.0 - v.value);
    }
  }

  for (const auto& scene : scene_order) {
    const auto& images = by_scene.at(scene);
    if (images.size() < 2) continue;
    for (auto& pr : build_scene_pairs(images, scene, options.fine_threshold)) {
      if (pr.fine_grained) {
        ++out.fine_grained_pairs;
        const bool forward = pr.image_p < pr.image_q;
        auto it = votes.find(forward ? std::pair{pr.image_p, pr.image_q}
                                     : std::pair{pr.image_q, pr.image_p});
        if (it != votes.end()) {
          std::vector<double> v = it->second;
          if (!forward) {
            for (auto& x : v) x = 1.0 - x;
          }
          pr = refine_preference(pr, v);
          ++out.refined_pairs;
        }
      }
      out.pairs.push_back(std::move(pr));
    }
  }
  return out;
}

namespace {

json attr_object(const AttributeArray& a) {
  json j = json::object();
  for (auto attr : kAttributes) j[std::string(attribute_name(attr))] = at(a, attr);
  return j;
}

AttributeArray attr_array(const json& j) {
  AttributeArray a{};
  for (auto attr : kAttributes) at(a, attr) = j.at(std::string(attribute_name(attr))).get<double>();
  return a;
}

template <typename F>
void read_lines(const std::filesystem::path& path, F&& handle) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      handle(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

void save_mos(const std::filesystem::path& path, std::span<const MOSRecord> records) {
  auto out = open_out(path);
  for (const auto& r : records) {
    out << json{{"image_id", r.image_id},
                {"mos", attr_object(r.mos)},
                {"variance", attr_object(r.variance)},
                {"count", r.count}}
               .dump()
        << '\n';
  }
}

std::vector<MOSRecord> load_mos(const std::filesystem::path& path) {
  std::vector<MOSRecord> out;
  read_lines(path, [&](const json& j) {
    out.push_back({j.at("image_id").get<std::string>(), attr_array(j.at("mos")),
                   attr_array(j.at("variance")), j.at("count").get<int>()});
  });
  return out;
}

void save_pairs(const std::filesystem::path& path, std::span<const PairPreference> pairs) {
  auto out = open_out(path);
  for (const auto& p : pairs) {
    out << json{{"scene_id", p.scene_id},
                {"image_p", p.image_p},
                {"image_q", p.image_q},
                {"labels", attr_object(p.labels)},
                {"fine_grained", p.fine_grained}}
               .dump()
        << '\n';
  }
}

std::vector<PairPreference> load_pairs(const std::filesystem::path& path) {
  std::vector<PairPreference> out;
  read_lines(path, [&](const json& j) {
    PairPreference p;
    p.scene_id = j.at("scene_id").get<std::string>();
    p.image_p = j.at("image_p").get<std::string>();
    p.image_q = j.at("image_q").get<std::string>();
    p.labels = attr_array(j.at("labels"));
    p.fine_grained = j.at("fine_grained").get<bool>();
    for (double c : p.labels) {
      if (!(c >= 0.0 && c <= 1.0)) throw DataError("pair label outside [0,1]");
    }
    out.push_back(std::move(p));
  });
  return out;
}

void save_screening(const std::filesystem::path& path, std::span<const ScreeningReport> reports) {
  auto out = open_out(path);
  for (const auto& r : reports) {
    json j{{"annotator_id", r.annotator_id}, {"retained", r.retained}};
    j["plcc_to_mos"] = r.plcc_to_mos ? json(*r.plcc_to_mos) : json(nullptr);
    out << j.dump() << '\n';
  }
}

}  // namespace camiqa
