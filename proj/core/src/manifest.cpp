#include "camiqa/manifest.hpp"

#include "camiqa/error.hpp"
#include "camiqa/image.hpp"
#include "camiqa/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace camiqa {

using nlohmann::json;

namespace {

SampleRecord parse_sample(const json& j) {
  SampleRecord r;
  r.image_id = j.at("image_id").get<std::string>();
  r.scene_id = j.at("scene_id").get<std::string>();
  r.path = j.at("path").get<std::string>();
  r.width = j.at("width").get<int>();
  r.height = j.at("height").get<int>();
  const auto flat = j.value("boxes", std::vector<double>{});
  if (flat.size() % 4 != 0) throw DataError("boxes must be a flat list of 4-tuples");
  for (size_t i = 0; i < flat.size(); i += 4) {
    r.boxes.push_back({flat[i], flat[i + 1], flat[i + 2], flat[i + 3]});
  }
  if (j.contains("params") && !j.at("params").is_null()) {
    const auto v = j.at("params").get<std::vector<double>>();
    if (v.size() != kNumParams) throw DataError("params must list exactly 7 values");
    std::array<double, kNumParams> a{};
    std::copy(v.begin(), v.end(), a.begin());
    r.params = CameraParameters::from_values(a);
  }
  return r;
}

AnnotationRecord parse_annotation(const json& j) {
  AnnotationRecord r;
  r.annotator_id = j.at("annotator_id").get<std::string>();
  r.image_id = j.at("image_id").get<std::string>();
  const auto& scores = j.at("scores");
  for (auto a : kAttributes) {
    const auto key = std::string(attribute_name(a));
    if (!scores.contains(key)) throw DataError("missing score for attribute " + key);
    const auto& v = scores.at(key);
    if (!v.is_number_integer()) throw DataError("score for " + key + " must be an integer");
    r.scores[static_cast<size_t>(a)] = v.get<int>();
  }
  return r;
}

VoteRecord parse_vote(const json& j) {
  return {j.at("annotator_id").get<std::string>(), j.at("image_p").get<std::string>(),
          j.at("image_q").get<std::string>(), j.at("value").get<double>()};
}

json to_json(const SampleRecord& r) {
  json j{{"kind", "sample"},  {"image_id", r.image_id}, {"scene_id", r.scene_id},
         {"path", r.path},    {"width", r.width},       {"height", r.height}};
  std::vector<double> flat;
  for (const auto& b : r.boxes) flat.insert(flat.end(), {b.x0, b.y0, b.x1, b.y1});
  j["boxes"] = flat;
  if (r.params) {
    const auto v = r.params->values();
    j["params"] = std::vector<double>(v.begin(), v.end());
  }
  return j;
}

json to_json(const AnnotationRecord& r) {
  json scores = json::object();
  for (auto a : kAttributes) scores[std::string(attribute_name(a))] = r.scores[static_cast<size_t>(a)];
  return {{"kind", "annotation"},
          {"annotator_id", r.annotator_id},
          {"image_id", r.image_id},
          {"scores", scores}};
}

json to_json(const VoteRecord& r) {
  return {{"kind", "vote"},
          {"annotator_id", r.annotator_id},
          {"image_p", r.image_p},
          {"image_q", r.image_q},
          {"value", r.value}};
}

}  // namespace

void validate_manifest(DatasetManifest& m) {
  std::unordered_map<std::string, const SampleRecord*> by_id;
  for (auto& s : m.samples) {
    if (s.image_id.empty() || s.scene_id.empty()) throw DataError("sample with empty id");
    if (s.width <= 0 || s.height <= 0) throw DataError("sample " + s.image_id + ": bad size");
    std::vector<Box> kept;
    for (const auto& b : s.boxes) {
      if (auto c = crop_box(b, 0, 0, s.width, s.height)) {
        kept.push_back(*c);
      } else {
        std::cerr << "warning: dropping empty box on " << s.image_id << '\n';
      }
    }
    s.boxes = std::move(kept);
    if (s.params) s.params->validate();
  }
  for (const auto& s : m.samples) {
    if (!by_id.emplace(s.image_id, &s).second) {
      throw DataError("duplicate image_id '" + s.image_id + "'");
    }
  }
  for (const auto& a : m.annotations) {
    if (!by_id.count(a.image_id)) {
      throw DataError("annotation references unknown image_id '" + a.image_id + "'");
    }
    a.validate();
  }
  for (const auto& v : m.votes) {
    auto p = by_id.find(v.image_p);
    auto q = by_id.find(v.image_q);
    if (p == by_id.end()) throw DataError("vote references unknown image_id '" + v.image_p + "'");
    if (q == by_id.end()) throw DataError("vote references unknown image_id '" + v.image_q + "'");
    if (p->second->scene_id != q->second->scene_id) {
      throw DataError("vote compares images from different scenes");
    }
    if (v.value != 0.0 && v.value != 0.5 && v.value != 1.0) {
      throw DataError("vote value must be 0, 0.5 or 1");
    }
  }
  std::set<std::string> scenes;
  for (const auto& s : m.samples) scenes.insert(s.scene_id);
  for (const auto& [scene, split] : m.split) {
    if (!scenes.count(scene)) throw DataError("split names unknown scene '" + scene + "'");
  }
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("manifest not found: " + path.string());
  DatasetManifest m;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "sample") {
        m.samples.push_back(parse_sample(j));
      } else if (kind == "annotation") {
        m.annotations.push_back(parse_annotation(j));
      } else if (kind == "vote") {
        m.votes.push_back(parse_vote(j));
      } else if (kind == "split") {
        const auto scene = j.at("scene_id").get<std::string>();
        const auto set = j.at("set").get<std::string>();
        if (set != "train" && set != "test") throw DataError("split set must be train or test");
        const Split s = set == "train" ? Split::train : Split::test;
        auto [it, inserted] = m.split.emplace(scene, s);
        if (!inserted && it->second != s) {
          throw DataError("scene '" + scene + "' assigned to both train and test");
        }
      } else {
        throw DataError("unknown record kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed record: " +
                      e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate_manifest(m);
  return m;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path.string());
  for (const auto& s : m.samples) out << to_json(s).dump() << '\n';
  for (const auto& a : m.annotations) out << to_json(a).dump() << '\n';
  for (const auto& v : m.votes) out << to_json(v).dump() << '\n';
  for (const auto& [scene, split] : m.split) {
    out << json{{"kind", "split"}, {"scene_id", scene},
                {"set", split == Split::train ? "train" : "test"}}.dump()
        << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

DatasetManifest split_scenes(const DatasetManifest& manifest, double train_fraction,
                             std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw UsageError("train_fraction must lie strictly between 0 and 1");
  }
  auto scenes = manifest.scenes();
  if (scenes.size() < 2) throw DataError("split_scenes needs at least 2 scenes");
  Rng rng(derive_seed(seed, {0x5117ULL}));
  // Fisher-Yates with explicit index draws keeps the permutation stable across
  // standard library versions.
  for (size_t i = scenes.size() - 1; i > 0; --i) {
    const size_t j = static_cast<size_t>(rng() % (i + 1));
    std::swap(scenes[i], scenes[j]);
  }
  const auto n = static_cast<long>(scenes.size());
  long n_train = std::lround(train_fraction * static_cast<double>(n));
  n_train = std::clamp(n_train, 1L, n - 1);
  DatasetManifest out = manifest;
  out.split.clear();
  for (long i = 0; i < n; ++i) {
    out.split[scenes[static_cast<size_t>(i)]] = i < n_train ? Split::train : Split::test;
  }
  return out;
}

ImageSample load_sample(const std::filesystem::path& root, const SampleRecord& record) {
  ImageSample s;
  s.image_id = record.image_id;
  s.scene_id = record.scene_id;
  s.image = read_ppm(root / record.path);
  if (s.image.width != record.width || s.image.height != record.height) {
    throw DataError("image " + record.image_id + ": size differs from manifest");
  }
  s.human_boxes = record.boxes;
  s.params = record.params;
  s.validate();
  return s;
}

}  // namespace camiqa
