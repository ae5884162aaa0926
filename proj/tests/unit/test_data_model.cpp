#include <camiqa/config.hpp>
#include <camiqa/error.hpp>
#include <camiqa/image.hpp>
#include <camiqa/manifest.hpp>
#include <camiqa/parameters.hpp>

#include "tempdir.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

namespace camiqa {
namespace {

using testing::TempDir;

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

DatasetManifest tiny_manifest(const TempDir& dir, int n_scenes = 2) {
  DatasetManifest m;
  std::filesystem::create_directories(dir / "images");
  for (int s = 0; s < n_scenes; ++s) {
    for (int v = 0; v < 2; ++v) {
      SampleRecord r;
      r.scene_id = "scene_" + std::to_string(s);
      r.image_id = r.scene_id + "_v" + std::to_string(v);
      r.path = "images/" + r.image_id + ".ppm";
      r.width = 8;
      r.height = 6;
      r.boxes = {Box{1, 1, 4, 5}};
      CameraParameters p;
      p.iso = 200.0 * (v + 1);
      r.params = p;
      Image img(8, 6);
      img.pixels.setConstant(0.2 * (v + 1));
      write_ppm(dir / r.path, img);
      m.samples.push_back(r);
      AnnotationRecord a;
      a.annotator_id = "ann00";
      a.image_id = r.image_id;
      a.scores = {3, 3, 4, 2, 5};
      m.annotations.push_back(a);
    }
    m.votes.push_back({"ann00", "scene_" + std::to_string(s) + "_v0",
                       "scene_" + std::to_string(s) + "_v1", 0.5});
  }
  return m;
}

TEST(Manifest, EmptyFileLoadsEmpty) {
  TempDir dir;
  write_text(dir / "m.jsonl", "");
  const auto m = load_manifest(dir / "m.jsonl");
  EXPECT_EQ(m.samples.size(), 0u);
  EXPECT_EQ(m.annotations.size(), 0u);
}

TEST(Manifest, OneSampleOneAnnotation) {
  TempDir dir;
  write_text(dir / "m.jsonl",
             R"({"kind":"sample","image_id":"a","scene_id":"s","path":"a.ppm","width":4,"height":4})"
             "\n"
             R"({"kind":"annotation","annotator_id":"x","image_id":"a","scores":{"overall":3,"face":3,"sharpness":3,"exposure":3,"noise":3}})"
             "\n");
  const auto m = load_manifest(dir / "m.jsonl");
  EXPECT_EQ(m.samples.size(), 1u);
  EXPECT_EQ(m.annotations.size(), 1u);
}

TEST(Manifest, DanglingAnnotationNamesTheId) {
  TempDir dir;
  write_text(dir / "m.jsonl",
             R"({"kind":"annotation","annotator_id":"x","image_id":"ghost_img","scores":{"overall":3,"face":3,"sharpness":3,"exposure":3,"noise":3}})"
             "\n");
  try {
    load_manifest(dir / "m.jsonl");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("ghost_img"), std::string::npos);
  }
}

TEST(Manifest, MalformedLineReportsLineNumber) {
  TempDir dir;
  write_text(dir / "m.jsonl",
             R"({"kind":"sample","image_id":"a","scene_id":"s","path":"a.ppm","width":4,"height":4})"
             "\n{not json\n");
  try {
    load_manifest(dir / "m.jsonl");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
}

TEST(Manifest, ScoreOutOfRangeRejected) {
  TempDir dir;
  write_text(dir / "m.jsonl",
             R"({"kind":"sample","image_id":"a","scene_id":"s","path":"a.ppm","width":4,"height":4})"
             "\n"
             R"({"kind":"annotation","annotator_id":"x","image_id":"a","scores":{"overall":6,"face":3,"sharpness":3,"exposure":3,"noise":3}})"
             "\n");
  EXPECT_THROW(load_manifest(dir / "m.jsonl"), DataError);
}

TEST(Manifest, MissingAttributeRejected) {
  TempDir dir;
  write_text(dir / "m.jsonl",
             R"({"kind":"sample","image_id":"a","scene_id":"s","path":"a.ppm","width":4,"height":4})"
             "\n"
             R"({"kind":"annotation","annotator_id":"x","image_id":"a","scores":{"overall":3}})"
             "\n");
  EXPECT_THROW(load_manifest(dir / "m.jsonl"), DataError);
}

TEST(Manifest, RoundTrip) {
  TempDir dir;
  auto m = split_scenes(tiny_manifest(dir, 3), 0.5, 7);
  save_manifest(dir / "m.jsonl", m);
  const auto back = load_manifest(dir / "m.jsonl");
  EXPECT_EQ(back, m);
  save_manifest(dir / "m2.jsonl", back);
  std::ifstream a(dir / "m.jsonl"), b(dir / "m2.jsonl");
  std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
}

TEST(Manifest, BoxesClippedAndEmptyOnesDropped) {
  TempDir dir;
  auto m = tiny_manifest(dir, 1);
  m.samples[0].boxes = {Box{1, 1, 20, 5}, Box{9, 0, 12, 3}};
  validate_manifest(m);
  ASSERT_EQ(m.samples[0].boxes.size(), 1u);
  EXPECT_EQ(m.samples[0].boxes[0], (Box{1, 1, 8, 5}));
}

TEST(Manifest, NonPositivePhysicalParameterRejected) {
  TempDir dir;
  auto m = tiny_manifest(dir, 1);
  m.samples[0].params->iso = 0.0;
  EXPECT_THROW(validate_manifest(m), DataError);
}

TEST(Manifest, LoadSampleReadsPixels) {
  TempDir dir;
  const auto m = tiny_manifest(dir, 1);
  const auto s = load_sample(dir.path(), m.samples[1]);
  EXPECT_EQ(s.image.width, 8);
  EXPECT_NEAR(s.image.at(3, 3, 1), 0.4, 1.0 / 255);
  EXPECT_EQ(s.human_boxes.size(), 1u);
}

DatasetManifest scenes_only(int n) {
  DatasetManifest m;
  for (int s = 0; s < n; ++s) {
    SampleRecord r;
    r.scene_id = "s" + std::to_string(s);
    r.image_id = r.scene_id + "_a";
    r.path = r.image_id + ".ppm";
    r.width = r.height = 4;
    m.samples.push_back(r);
  }
  return m;
}

TEST(SplitScenes, FiveHundredFiftyFive) {
  const auto m = split_scenes(scenes_only(555), 451.0 / 555.0, 3);
  int train = 0, test = 0;
  for (const auto& [scene, split] : m.split) (split == Split::train ? train : test)++;
  EXPECT_EQ(train, 451);
  EXPECT_EQ(test, 104);
}

TEST(SplitScenes, TwoScenesHalf) {
  const auto m = split_scenes(scenes_only(2), 0.5, 11);
  int train = 0;
  for (const auto& [scene, split] : m.split) train += split == Split::train;
  EXPECT_EQ(train, 1);
  EXPECT_EQ(m.split.size(), 2u);
}

TEST(SplitScenes, Deterministic) {
  const auto a = split_scenes(scenes_only(40), 0.7, 5);
  const auto b = split_scenes(scenes_only(40), 0.7, 5);
  EXPECT_EQ(a.split, b.split);
  const auto c = split_scenes(scenes_only(40), 0.7, 6);
  EXPECT_NE(a.split, c.split);
}

TEST(SplitScenes, KeepsBothSidesNonEmpty) {
  const auto m = split_scenes(scenes_only(5), 0.99, 1);
  int train = 0;
  for (const auto& [scene, split] : m.split) train += split == Split::train;
  EXPECT_EQ(train, 4);
}

TEST(SplitScenes, InvalidFraction) {
  EXPECT_THROW(split_scenes(scenes_only(5), 1.5, 1), UsageError);
  EXPECT_THROW(split_scenes(scenes_only(1), 0.5, 1), DataError);
}

TEST(Parameters, NormalizeEndpoints) {
  const ParameterRanges r;
  for (auto p : kParams) {
    EXPECT_NEAR(normalize_value(p, r[p].min, r), 0.0, 1e-12) << param_name(p);
    EXPECT_NEAR(normalize_value(p, r[p].max, r), 1.0, 1e-12) << param_name(p);
  }
}

TEST(Parameters, IsoGeometricMeanIsHalf) {
  const ParameterRanges r;
  EXPECT_NEAR(normalize_value(Param::iso, std::sqrt(100.0 * 6400.0), r), 0.5, 1e-12);
}

TEST(Parameters, DenormalizeInverts) {
  const ParameterRanges r;
  for (auto p : kParams) {
    for (double u : {0.0, 0.13, 0.5, 0.91}) {
      EXPECT_NEAR(normalize_value(p, denormalize_value(p, u, r), r), u, 1e-12);
    }
  }
}

TEST(Parameters, NormalizeClampsAndRejectsNonPositive) {
  CameraParameters p;
  p.iso = 1e6;
  const auto v = normalize_params(p, {});
  EXPECT_EQ(v[static_cast<size_t>(Param::iso)], 1.0);
  p.iso = -1.0;
  EXPECT_THROW(normalize_params(p, {}), DataError);
}

TEST(Parameters, NameRoundTrip) {
  for (auto p : kParams) EXPECT_EQ(param_from_name(param_name(p)), p);
  for (auto a : kAttributes) EXPECT_EQ(attribute_from_name(attribute_name(a)), a);
  EXPECT_THROW(param_from_name("zoom"), DataError);
}

TEST(Config, ParseAndTypes) {
  const auto c = KeyValueConfig::parse("# comment\na = 1.5\n\nb=7 # trailing\nflag = true\nname = x y\n");
  EXPECT_DOUBLE_EQ(c.get_double("a", 0), 1.5);
  EXPECT_EQ(c.get_int("b", 0), 7);
  EXPECT_TRUE(c.get_bool("flag", false));
  EXPECT_EQ(c.get_string("name", ""), "x y");
  EXPECT_EQ(c.get_int("missing", 3), 3);
  EXPECT_THROW(c.get_int("a", 0), UsageError);
  EXPECT_THROW(KeyValueConfig::parse("novalue\n"), UsageError);
}

TEST(Config, ToStringRoundTrip) {
  KeyValueConfig c;
  c.set("z", format_double(0.1));
  c.set("a", format_double(1.0 / 3.0));
  const auto back = KeyValueConfig::parse(c.to_string());
  EXPECT_EQ(back.values(), c.values());
  EXPECT_EQ(back.get_double("a", 0), 1.0 / 3.0);
}

TEST(Image, PpmRoundTripQuantizes) {
  TempDir dir;
  Image img(5, 3);
  for (int i = 0; i < img.pixels.size(); ++i) img.pixels.data()[i] = (i % 256) / 255.0;
  write_ppm(dir / "a.ppm", img);
  EXPECT_EQ(read_ppm(dir / "a.ppm"), img);
}

TEST(Image, FlipTwiceIsIdentity) {
  Image img(7, 4);
  for (int i = 0; i < img.pixels.size(); ++i) img.pixels.data()[i] = i * 0.001;
  EXPECT_EQ(flip_horizontal(flip_horizontal(img)), img);
  EXPECT_EQ(flip_vertical(flip_vertical(img)), img);
  EXPECT_NE(flip_horizontal(img), img);
}

TEST(Image, BoxFlipArithmetic) {
  EXPECT_EQ(flip_box_horizontal(Box{10, 20, 30, 40}, 100), (Box{70, 20, 90, 40}));
  EXPECT_EQ(flip_box_vertical(Box{10, 20, 30, 40}, 100), (Box{10, 60, 30, 80}));
}

TEST(Image, CropBoxClipsOrDrops) {
  const auto b = crop_box(Box{10, 10, 50, 50}, 20, 0, 20, 30);
  ASSERT_TRUE(b.has_value());
  EXPECT_EQ(*b, (Box{0, 10, 20, 30}));
  EXPECT_FALSE(crop_box(Box{0, 0, 5, 5}, 10, 10, 5, 5).has_value());
}

TEST(Image, ResizeConstantStaysConstant) {
  Image img(10, 6);
  img.pixels.setConstant(0.3);
  const auto r = resize_bilinear(img, 17, 9);
  EXPECT_EQ(r.width, 17);
  EXPECT_NEAR(r.pixels.maxCoeff(), 0.3, 1e-12);
  EXPECT_NEAR(r.pixels.minCoeff(), 0.3, 1e-12);
}

}  // namespace
}  // namespace camiqa
