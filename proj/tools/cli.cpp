#include "cli.hpp"

#include <camiqa/annotation.hpp>
#include <camiqa/checkpoint.hpp>
#include <camiqa/error.hpp>
#include <camiqa/evaluation.hpp>
#include <camiqa/image.hpp>
#include <camiqa/manifest.hpp>
#include <camiqa/synthetic.hpp>
#include <camiqa/training.hpp>
#include <camiqa/tuning.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace camiqa::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

KeyValueConfig load_config(const Globals& g) {
  return g.config_path.empty() ? KeyValueConfig{} : KeyValueConfig::load(g.config_path);
}

std::uint64_t seed_of(const Globals& g, const KeyValueConfig& kv, const std::string& key) {
  if (g.seed) return *g.seed;
  return static_cast<std::uint64_t>(kv.get_int(key, 0));
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
  if (!f) throw DataError("failed writing " + path.string());
}

TrainingData load_training_data(const fs::path& dir) {
  TrainingData d;
  d.root = dir;
  d.manifest = load_manifest(dir / "manifest.jsonl");
  d.mos = load_mos(dir / "mos.jsonl");
  d.pairs = load_pairs(dir / "pairs.jsonl");
  return d;
}

// --- subcommands ---------------------------------------------------------

struct GenerateArgs {
  int scenes = 26;
  int variants = 10;
  int annotators = 16;
  double noise_sd = 0.3;
  double train_fraction = 20.0 / 26.0;
  int size = 96;
  int votes = 5;
  int spammers = 0;
  double max_deviation = 0.35;
  bool shared_optimum = false;
};

int cmd_generate(const Globals& g, GenerateArgs a, const CLI::App& sub, std::ostream& out) {
  const auto kv = load_config(g);
  const auto pick_int = [&](const char* opt, const char* key, int& v) {
    if (sub.count(opt) == 0) v = static_cast<int>(kv.get_int(key, v));
  };
  const auto pick_double = [&](const char* opt, const char* key, double& v) {
    if (sub.count(opt) == 0) v = kv.get_double(key, v);
  };
  pick_int("--scenes", "generate.scenes", a.scenes);
  pick_int("--variants", "generate.variants", a.variants);
  pick_int("--annotators", "generate.annotators", a.annotators);
  pick_double("--noise-sd", "generate.noise_sd", a.noise_sd);
  pick_double("--train-fraction", "generate.train_fraction", a.train_fraction);
  pick_int("--size", "generate.size", a.size);
  pick_int("--votes", "generate.votes_per_pair", a.votes);
  pick_int("--spammers", "generate.spammers", a.spammers);
  pick_double("--max-deviation", "generate.max_deviation", a.max_deviation);
  if (sub.count("--shared-optimum") == 0) a.shared_optimum = kv.get_bool("generate.shared_optimum", false);

  GeneratorOptions opt;
  opt.width = opt.height = a.size;
  opt.train_fraction = a.train_fraction;
  opt.shared_optimum = a.shared_optimum;
  opt.votes_per_pair = a.votes;
  opt.spammers = a.spammers;
  opt.max_deviation = a.max_deviation;
  opt.ranges = ParameterRanges::from_config(kv);

  const fs::path dir = g.out_dir;
  const auto m = generate_dataset(a.scenes, a.variants, a.annotators, a.noise_sd,
                                  seed_of(g, kv, "generate.seed"), dir, opt);
  save_manifest(dir / "manifest.jsonl", m);
  out << "generated " << m.samples.size() << " images in " << m.scenes().size() << " scenes, "
      << m.annotations.size() << " annotations, " << m.votes.size() << " votes -> "
      << (dir / "manifest.jsonl").string() << '\n';
  return kOk;
}

int cmd_annotate(const Globals& g, const std::string& manifest_path, std::ostream& out) {
  const auto kv = load_config(g);
  AnnotationOptions opt;
  opt.screening_threshold = kv.get_double("annotation.screening_threshold", opt.screening_threshold);
  opt.fine_threshold = kv.get_double("annotation.fine_threshold", opt.fine_threshold);
  const fs::path dir = g.out_dir;
  const fs::path mpath = manifest_path.empty() ? dir / "manifest.jsonl" : fs::path(manifest_path);
  const auto m = load_manifest(mpath);
  const auto res = annotation_pipeline(m, opt);
  save_mos(dir / "mos.jsonl", res.mos);
  save_pairs(dir / "pairs.jsonl", res.pairs);
  save_screening(dir / "screening.jsonl", res.screening);
  if (fs::absolute(mpath).parent_path() != fs::absolute(dir)) {
    // Keep manifest and annotation products side by side for train/eval.
    fs::copy_file(mpath, dir / "manifest.jsonl", fs::copy_options::overwrite_existing);
  }
  const auto kept = std::count_if(res.screening.begin(), res.screening.end(),
                                  [](const ScreeningReport& r) { return r.retained; });
  out << "annotators retained " << kept << "/" << res.screening.size() << ", images "
      << res.mos.size() << ", pairs " << res.pairs.size() << ", fine-grained "
      << res.fine_grained_pairs << " (" << format_double(res.fine_grained_fraction())
      << "), refined " << res.refined_pairs << '\n';
  return kOk;
}

int cmd_train(const Globals& g, const std::string& data_dir, std::ostream& out) {
  const auto kv = load_config(g);
  TrainConfig cfg = TrainConfig::from_config(kv);
  if (g.seed) cfg.seed = *g.seed;
  const fs::path dir = g.out_dir;
  TrainingData data = load_training_data(data_dir.empty() ? dir : fs::path(data_dir));
  data.pairs = training_pairs(data.manifest, data.pairs);
  std::ostringstream log;
  auto res = train(data, cfg, &log);
  save_checkpoint(dir / "checkpoint.bin", res.checkpoint);
  write_text(dir / "train_log.txt", log.str());
  out << log.str() << "checkpoint -> " << (dir / "checkpoint.bin").string() << '\n';
  return kOk;
}

Split parse_split(const std::string& s) {
  if (s == "test") return Split::test;
  if (s == "train") return Split::train;
  throw UsageError("split must be 'train' or 'test'");
}

int cmd_eval(const Globals& g, const std::string& data_dir, const std::string& ckpt_path,
             const std::string& split, std::ostream& out) {
  const fs::path dir = g.out_dir;
  const auto ckpt = load_checkpoint(ckpt_path.empty() ? dir / "checkpoint.bin" : fs::path(ckpt_path));
  const auto data = load_training_data(data_dir.empty() ? dir : fs::path(data_dir));
  const auto report = evaluate_checkpoint(ckpt, data, parse_split(split));
  const auto text = format_report(report);
  write_text(dir / "metrics.txt", text);
  out << text;
  return kOk;
}

struct TuneArgs {
  std::string checkpoint;
  std::vector<std::string> params{"iso"};
  int steps = 15;
  double span = 0.35;
  std::string contact_sheet;
};

int cmd_tune(const Globals& g, const TuneArgs& a, std::ostream& out) {
  const auto kv = load_config(g);
  const fs::path dir = g.out_dir;
  const auto ckpt = load_checkpoint(a.checkpoint.empty() ? dir / "checkpoint.bin" : fs::path(a.checkpoint));
  const auto model = model_from_checkpoint(ckpt);
  const auto cfg = config_from_checkpoint(ckpt);

  std::vector<Param> varied;
  for (const auto& name : a.params) {
    try {
      varied.push_back(param_from_name(name));
    } catch (const DataError& e) {
      throw UsageError(e.what());
    }
  }
  GeneratorOptions gopt;
  gopt.ranges = cfg.ranges;
  const std::uint64_t seed = seed_of(g, kv, "tune.seed");
  const auto scene = random_scene("tune", derive_seed(seed, {hash_tag("tune-scene")}), gopt);
  const auto spec = make_sweep(scene, varied, a.steps, a.span, seed, cfg.ranges);
  const auto candidates = simulate_sweep(spec, cfg.ranges);
  const auto result = rank_candidates(candidates, *model, cfg);

  std::ostringstream text;
  write_tuning_result(text, result, candidates);
  write_text(dir / "tuning.txt", text.str());
  out << text.str();
  if (!a.contact_sheet.empty()) {
    std::vector<Image> ranked;
    for (size_t i : result.ranking) ranked.push_back(candidates[i].sample.image);
    write_ppm(a.contact_sheet, contact_sheet(ranked));
  }
  return kOk;
}

struct GmadArgs {
  std::string defender;
  std::string attacker;
  int levels = 4;
  double tol = 0.1;
  std::string attribute = "overall";
};

int cmd_gmad(const Globals& g, const std::string& data_dir, const GmadArgs& a, std::ostream& out) {
  const fs::path dir = g.out_dir;
  Attribute attr;
  try {
    attr = attribute_from_name(a.attribute);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  const auto data = load_training_data(data_dir.empty() ? dir : fs::path(data_dir));
  const auto score = [&](const std::string& path) {
    const auto ckpt = load_checkpoint(path);
    const auto model = model_from_checkpoint(ckpt);
    const auto cfg = config_from_checkpoint(ckpt);
    std::vector<double> s;
    for (const auto& rec : data.manifest.samples) {
      auto it = data.manifest.split.find(rec.scene_id);
      if (it == data.manifest.split.end() || it->second != Split::test) continue;
      const auto sample = load_sample(data.root, rec);
      const auto prep = preprocess(sample, cfg.resize, cfg.crop, center_draw(cfg.resize, cfg.crop));
      s.push_back(at(predict_attributes(model->heads, model->embed(prep.image, prep.boxes, prep.params)), attr));
    }
    return s;
  };
  if (a.defender.empty() || a.attacker.empty()) {
    throw UsageError("gmad needs --defender and --attacker checkpoints");
  }
  const auto d = score(a.defender);
  const auto k = score(a.attacker);
  std::vector<std::string> ids;
  for (const auto& rec : data.manifest.samples) {
    auto it = data.manifest.split.find(rec.scene_id);
    if (it != data.manifest.split.end() && it->second == Split::test) ids.push_back(rec.image_id);
  }
  const auto pairs = gmad_select(d, k, a.levels, a.tol);
  std::ostringstream text;
  for (const auto& p : pairs) {
    text << "level " << format_double(p.level) << ' ' << ids[p.first] << ' ' << ids[p.second]
         << " attacker_gap " << format_double(p.attacker_gap) << '\n';
  }
  write_text(dir / "gmad.txt", text.str());
  out << text.str();
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fine-grained image quality assessment and camera tuning"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  app.option_defaults()->always_capture_default();
  app.add_option("--config", g.config_path, "flat key = value configuration file")
      ->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides the config)");
  app.add_option("--out-dir", g.out_dir, "directory for outputs");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "render a synthetic dataset with annotations");
  generate->add_option("--scenes", gen.scenes, "number of scenes")->check(CLI::PositiveNumber);
  generate->add_option("--variants", gen.variants, "images per scene")->check(CLI::Range(2, 1000));
  generate->add_option("--annotators", gen.annotators, "simulated annotators")->check(CLI::PositiveNumber);
  generate->add_option("--noise-sd", gen.noise_sd, "annotator noise standard deviation")
      ->check(CLI::NonNegativeNumber);
  generate->add_option("--train-fraction", gen.train_fraction, "fraction of scenes in train")
      ->check(CLI::Range(0.0, 1.0));
  generate->add_option("--size", gen.size, "image width and height")->check(CLI::Range(32, 4096));
  generate->add_option("--votes", gen.votes, "pairwise votes per near-tied pair")
      ->check(CLI::NonNegativeNumber);
  generate->add_option("--spammers", gen.spammers, "random-answer annotators")
      ->check(CLI::NonNegativeNumber);
  generate->add_option("--max-deviation", gen.max_deviation, "normalized deviation half-width")
      ->check(CLI::Range(0.0, 1.0));
  generate->add_flag("--shared-optimum", gen.shared_optimum, "one optimum for all scenes");

  std::string manifest_path;
  auto* annotate = app.add_subcommand("annotate", "screen annotators, compute MOS and pairs");
  annotate->add_option("--manifest", manifest_path, "manifest (default <out-dir>/manifest.jsonl)");

  std::string data_dir;
  auto* trainc = app.add_subcommand("train", "train a model on annotated pairs");
  trainc->add_option("--data", data_dir, "directory with manifest, mos and pairs (default <out-dir>)");

  std::string ckpt_path, split = "test";
  auto* evalc = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  evalc->add_option("--data", data_dir, "directory with manifest, mos and pairs");
  evalc->add_option("--checkpoint", ckpt_path, "checkpoint (default <out-dir>/checkpoint.bin)");
  evalc->add_option("--split", split, "train or test");

  TuneArgs tune_args;
  auto* tune = app.add_subcommand("tune", "sweep camera parameters and rank the renders");
  tune->add_option("--checkpoint", tune_args.checkpoint, "checkpoint (default <out-dir>/checkpoint.bin)");
  tune->add_option("--params", tune_args.params, "varied parameter names")->delimiter(',');
  tune->add_option("--steps", tune_args.steps, "steps per varied parameter")->check(CLI::Range(2, 100));
  tune->add_option("--span", tune_args.span, "normalized half-width around the optimum")
      ->check(CLI::Range(0.0, 1.0));
  tune->add_option("--contact-sheet", tune_args.contact_sheet, "write ranked renders as one PPM");

  GmadArgs gmad_args;
  auto* gmad = app.add_subcommand("gmad", "select gMAD pairs between two checkpoints");
  gmad->add_option("--data", data_dir, "directory with manifest, mos and pairs");
  gmad->add_option("--defender", gmad_args.defender, "defender checkpoint");
  gmad->add_option("--attacker", gmad_args.attacker, "attacker checkpoint");
  gmad->add_option("--levels", gmad_args.levels, "defender levels")->check(CLI::PositiveNumber);
  gmad->add_option("--tol", gmad_args.tol, "bin half-width")->check(CLI::NonNegativeNumber);
  gmad->add_option("--attribute", gmad_args.attribute, "attribute to score");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    fs::create_directories(g.out_dir);
    if (generate->parsed()) return cmd_generate(g, gen, *generate, out);
    if (annotate->parsed()) return cmd_annotate(g, manifest_path, out);
    if (trainc->parsed()) return cmd_train(g, data_dir, out);
    if (evalc->parsed()) return cmd_eval(g, data_dir, ckpt_path, split, out);
    if (tune->parsed()) return cmd_tune(g, tune_args, out);
    if (gmad->parsed()) return cmd_gmad(g, data_dir, gmad_args, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

}  // namespace camiqa::cli
