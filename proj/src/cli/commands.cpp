#include "skinelev/cli/commands.hpp"

#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "skinelev/cli/predictions.hpp"
#include "skinelev/csv.hpp"
#include "skinelev/dataio/class_weights.hpp"
#include "skinelev/dataio/manifest.hpp"
#include "skinelev/error.hpp"
#include "skinelev/evalstat/aggregate.hpp"
#include "skinelev/evalstat/bootstrap.hpp"
#include "skinelev/evalstat/report_io.hpp"
#include "skinelev/evalstat/stattests.hpp"
#include "skinelev/labeler/labeler.hpp"
#include "skinelev/log.hpp"
#include "skinelev/modelcore/checkpoint.hpp"
#include "skinelev/modelcore/gradcam.hpp"
#include "skinelev/random.hpp"
#include "skinelev/trainer/train.hpp"

namespace skinelev::cli {

namespace fs = std::filesystem;
using modelcore::FusionMode;

namespace {

dataio::LabelSchema load_schema(const ExperimentConfig& cfg) {
  return cfg.schema.empty() ? dataio::derm7pt_schema() : dataio::LabelSchema::load(cfg.schema);
}

dataio::DatasetManifest load_manifest(const ExperimentConfig& cfg) {
  if (cfg.manifest.empty()) throw ConfigError("config has no manifest");
  return dataio::load_manifest(cfg.manifest, load_schema(cfg));
}

fs::path split_path(const ExperimentConfig& cfg) {
  return cfg.split_file.empty() ? cfg.out_dir / "split.csv" : cfg.split_file;
}

dataio::SplitAssignment load_split(const ExperimentConfig& cfg) {
  const auto path = split_path(cfg);
  if (!fs::exists(path)) throw ConfigError("split file " + path.string() + " not found (run prepare first)");
  return dataio::SplitAssignment::from_csv(path);
}

// Attaches pseudo-labels when the fusion mode consumes them.
dataio::DatasetManifest with_aux(const ExperimentConfig& cfg, const dataio::DatasetManifest& m) {
  if (cfg.fusion == FusionMode::soft) return labeler::attach_labels(m, cfg.elevation_labels, labeler::AttachMode::soft);
  if (cfg.fusion == FusionMode::discrete_onehot) {
    return labeler::attach_labels(m, cfg.elevation_labels, labeler::AttachMode::discrete);
  }
  return m;
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  auto rel = fs::relative(p, base);
  return rel.empty() ? p.string() : rel.generic_string();
}

void check_device(const std::string& device) {
  if (device != "cpu") throw ConfigError("device '" + device + "' is not available in this build (use cpu)");
}

// Short name of an evaluate directory: "<experiment>/evaluate" -> "<experiment>".
std::string dump_name(const fs::path& dir) {
  auto p = dir.lexically_normal();
  if (p.filename().empty()) p = p.parent_path();
  if (p.filename() == "evaluate" && p.has_parent_path()) p = p.parent_path();
  return p.filename().string();
}

}  // namespace

std::vector<fs::path> resolve_checkpoints(const fs::path& path) {
  if (path.empty()) throw ConfigError("no checkpoint given");
  if (!fs::is_directory(path)) {
    if (!fs::exists(path)) throw ConfigError("checkpoint not found: " + path.string());
    return {path};
  }
  const auto runs = path / "runs.csv";
  if (!fs::exists(runs)) throw ConfigError(path.string() + " has no runs.csv (not a training output directory)");
  const auto table = read_csv(runs);
  const int col = table.column("best_checkpoint");
  if (col < 0) throw DataError(runs.string() + ": missing best_checkpoint column");
  std::vector<fs::path> out;
  for (const auto& row : table.rows) out.push_back(path / row[static_cast<std::size_t>(col)]);
  if (out.empty()) throw DataError(runs.string() + " lists no runs");
  return out;
}

void cmd_prepare(const ExperimentConfig& cfg) {
  auto manifest = load_manifest(cfg);
  const auto before = manifest.size();
  if (cfg.stratify_on != dataio::StratifyOn::none) {
    const bool by_elevation = cfg.stratify_on == dataio::StratifyOn::elevation;
    manifest = dataio::filter(manifest, [&](const dataio::ImageRecord& r) {
      return by_elevation ? r.elevation.has_value() : r.diagnosis.has_value();
    });
    if (manifest.size() != before) {
      log::warn("prepare: dropped " + std::to_string(before - manifest.size()) + " of " + std::to_string(before) +
                " records lacking the " + dataio::to_string(cfg.stratify_on) + " label");
    }
    if (manifest.records.empty()) {
      throw DataError("no record carries the " + dataio::to_string(cfg.stratify_on) + " label needed for stratification");
    }
  }
  log::info("prepare: seed " + std::to_string(cfg.seed));
  const auto split = dataio::stratified_split(manifest, cfg.split_ratios, cfg.stratify_on, cfg.seed);
  fs::create_directories(cfg.out_dir);
  write_file_atomic(cfg.out_dir / "split.csv", split.to_csv(manifest));

  const auto train = dataio::subset(manifest, split, dataio::Split::train);
  std::string weights = "# median frequency balancing over the training split\n";
  auto emit = [&](const char* key, const std::vector<std::size_t>& counts) {
    try {
      weights += std::string(key) + " = " + dataio::compute_class_weights(counts).serialize() + "\n";
    } catch (const DataError& e) {
      weights += std::string("# ") + key + ": " + e.what() + "\n";
    }
  };
  emit("elevation", train.elevation_counts());
  emit("diagnosis", train.diagnosis_counts());
  write_file_atomic(cfg.out_dir / "class_weights.txt", weights);
  log::info("prepare: train " + std::to_string(split.count(dataio::Split::train)) + ", val " +
            std::to_string(split.count(dataio::Split::val)) + ", test " +
            std::to_string(split.count(dataio::Split::test)));
}

void cmd_train(const ExperimentConfig& cfg) {
  const auto manifest = with_aux(cfg, load_manifest(cfg));
  const auto split = load_split(cfg);
  const auto train_set = dataio::subset(manifest, split, dataio::Split::train);
  const auto val_set = dataio::subset(manifest, split, dataio::Split::val);
  const auto train_dir = cfg.out_dir / "train";
  fs::create_directories(train_dir);
  log::info("train: role " + modelcore::to_string(cfg.role) + ", family " + modelcore::to_string(cfg.backbone.family) +
            ", fusion " + modelcore::to_string(cfg.fusion) + ", base seed " + std::to_string(cfg.train.seed));

  std::string runs = csv_row({"run_id", "seed", "best_epoch", "best_val_auroc", "best_checkpoint"});
  for (int r = 0; r < cfg.train.repeats; ++r) {
    auto run_cfg = cfg.train;
    run_cfg.seed = cfg.train.run_seed(r);
    trainer::make_deterministic(derive_seed(run_cfg.seed, 0x696e6974ULL));
    modelcore::FusionHead fusion;
    fusion.mode = cfg.fusion;
    fusion.aux_dim = cfg.fusion == FusionMode::none ? 0 : static_cast<std::int64_t>(manifest.schema.num_elevation());
    auto bundle = modelcore::build_model(cfg.backbone, fusion, cfg.role, manifest.schema);
    bundle.preprocess = cfg.preprocess;
    bundle.modality = manifest.common_modality();
    bundle.config_hash = cfg.hash();
    const auto log = trainer::train(bundle, train_set, val_set, run_cfg,
                                    {train_dir / ("run_" + std::to_string(r)), r, nullptr});
    const auto& best = log.epochs[static_cast<std::size_t>(log.best_epoch)];
    runs += csv_row({std::to_string(r), std::to_string(run_cfg.seed), std::to_string(log.best_epoch),
                     best.val_auroc ? fmt_double(*best.val_auroc) : "", relative_to(log.best_checkpoint, train_dir)});
  }
  write_file_atomic(train_dir / "runs.csv", runs);
}

void cmd_label(const ExperimentConfig& cfg, const RunFlags& flags) {
  if (cfg.label_checkpoint.empty()) throw ConfigError("label needs label_checkpoint");
  const auto ckpts = resolve_checkpoints(cfg.label_checkpoint);
  if (cfg.label_run < 0 || static_cast<std::size_t>(cfg.label_run) >= ckpts.size()) {
    throw ConfigError("label_run " + std::to_string(cfg.label_run) + " out of range");
  }
  const auto& ckpt = ckpts[static_cast<std::size_t>(cfg.label_run)];
  auto bundle = modelcore::load_checkpoint(ckpt);
  auto manifest = dataio::load_manifest(cfg.manifest, cfg.schema.empty() ? bundle.schema : load_schema(cfg));
  if (manifest.schema.elevation_classes != bundle.schema.elevation_classes) {
    throw ConfigError("elevation classes of the manifest schema differ from the model's");
  }
  auto preds = labeler::infer_elevations(bundle, manifest, {flags.allow_modality_mismatch, cfg.train.batch_size});
  // Identifier independent of where the pipeline ran.
  const auto id = fs::is_directory(cfg.label_checkpoint) ? relative_to(ckpt, cfg.label_checkpoint)
                                                          : ckpt.filename().string();
  for (auto& p : preds) p.source_model = id;
  const auto out = cfg.out_dir / "labels.csv";
  labeler::write_label_file(preds, bundle.schema.elevation_classes, out);
  log::info("label: " + std::to_string(preds.size()) + " predictions from " + id + " -> " + out.string());
}

std::string cmd_evaluate(const ExperimentConfig& cfg) {
  std::vector<fs::path> ckpts;
  const auto sources = cfg.checkpoints.empty() ? std::vector<fs::path>{cfg.out_dir / "train"} : cfg.checkpoints;
  for (const auto& s : sources) {
    for (auto& c : resolve_checkpoints(s)) ckpts.push_back(c);
  }
  const auto manifest = with_aux(cfg, load_manifest(cfg));
  const auto split = load_split(cfg);
  const auto eval_set = dataio::subset(manifest, split, cfg.eval_split);
  if (eval_set.records.empty()) throw DataError("evaluation split " + dataio::to_string(cfg.eval_split) + " is empty");

  PredictionDump dump;
  std::vector<evalstat::MetricReport> reports;
  std::size_t num_classes = 0;
  std::vector<int> targets;
  for (std::size_t r = 0; r < ckpts.size(); ++r) {
    auto bundle = modelcore::load_checkpoint(ckpts[r]);
    if (bundle.role != cfg.role || bundle.fusion.mode != cfg.fusion) {
      throw ConfigError("checkpoint " + ckpts[r].string() + " does not match the configured role/fusion");
    }
    if (r == 0) {
      targets = trainer::role_targets(bundle, eval_set);
      num_classes = static_cast<std::size_t>(bundle.num_classes());
      dump.classes = bundle.role == modelcore::Role::elevation ? bundle.schema.elevation_classes
                                                               : bundle.schema.diagnosis_classes;
      for (const auto& rec : eval_set.records) dump.image_ids.push_back(rec.image_id);
      dump.targets = targets;
    }
    auto probs = trainer::predict_manifest(bundle, eval_set, cfg.train.batch_size);
    auto report = evalstat::classification_metrics(probs, targets, num_classes);
    report.run_id = static_cast<int>(r);
    evalstat::attach_intervals(report, probs, targets, num_classes,
                               {cfg.ci_level, cfg.bootstrap_resamples, derive_seed(cfg.seed, r)});
    for (const auto& w : report.warnings) log::warn("evaluate run " + std::to_string(r) + ": " + w);
    reports.push_back(std::move(report));
    dump.runs.push_back(std::move(probs));
  }
  dump.mean = average_runs(dump.runs);
  auto pooled = evalstat::classification_metrics(dump.mean, targets, num_classes);
  pooled.run_id = -1;
  evalstat::attach_intervals(pooled, dump.mean, targets, num_classes,
                             {cfg.ci_level, cfg.bootstrap_resamples, derive_seed(cfg.seed, 0x706f6f6cULL)});
  const auto summary = evalstat::aggregate_runs(reports);

  const auto dir = cfg.out_dir / "evaluate";
  fs::create_directories(dir);
  const auto name = modelcore::to_string(cfg.backbone.family) + "/" + modelcore::to_string(cfg.fusion);
  auto all = reports;
  all.push_back(pooled);
  write_file_atomic(dir / "reports.jsonl",
                    evalstat::reports_to_jsonl(all, name, dataio::to_string(cfg.eval_split)));
  write_file_atomic(dir / "predictions.csv", predictions_csv(dump));
  auto sj = evalstat::to_json(summary);
  sj["model"] = name;
  sj["split"] = dataio::to_string(cfg.eval_split);
  sj["pooled"] = evalstat::to_json(pooled);
  write_file_atomic(dir / "summary.json", sj.dump(2) + "\n");
  const auto text = "model " + name + " on " + dataio::to_string(cfg.eval_split) + " (" +
                    std::to_string(eval_set.size()) + " images, " + std::to_string(reports.size()) +
                    " runs, mean ± std)\n" + summary.to_text();
  write_file_atomic(dir / "summary.txt", text);
  return text;
}

std::string cmd_compare(const ExperimentConfig& cfg) {
  if (cfg.compare_a.empty() || cfg.compare_b.empty()) throw ConfigError("compare needs compare_a and compare_b");
  const auto a = read_predictions(cfg.compare_a / "predictions.csv");
  const auto b = read_predictions(cfg.compare_b / "predictions.csv");
  const auto ra = evalstat::read_reports(cfg.compare_a / "reports.jsonl");
  const auto rb = evalstat::read_reports(cfg.compare_b / "reports.jsonl");
  if (a.classes != b.classes) throw DataError("compared models predict different classes");

  std::map<std::string, std::size_t> index_b;
  for (std::size_t i = 0; i < b.image_ids.size(); ++i) index_b[b.image_ids[i]] = i;
  if (index_b.size() != a.image_ids.size()) throw DataError("compared dumps cover different images");
  const std::size_t n = a.image_ids.size();
  auto correct_a = std::make_unique<bool[]>(n);
  auto correct_b = std::make_unique<bool[]>(n);
  for (std::size_t i = 0; i < a.image_ids.size(); ++i) {
    auto it = index_b.find(a.image_ids[i]);
    if (it == index_b.end()) throw DataError("image " + a.image_ids[i] + " missing from " + cfg.compare_b.string());
    if (b.targets[it->second] != a.targets[i]) throw DataError("target mismatch for image " + a.image_ids[i]);
    correct_a[i] = evalstat::argmax(a.mean[i]) == static_cast<std::size_t>(a.targets[i]);
    correct_b[i] = evalstat::argmax(b.mean[it->second]) == static_cast<std::size_t>(b.targets[it->second]);
  }
  const std::span<const bool> pa(correct_a.get(), n), pb(correct_b.get(), n);
  std::uint64_t disc_b = 0, disc_c = 0;
  for (std::size_t i = 0; i < n; ++i) {
    disc_b += pa[i] && !pb[i];
    disc_c += !pa[i] && pb[i];
  }
  nlohmann::json midp = nullptr;
  if (disc_b + disc_c > 0) {
    midp = evalstat::mcnemar_midp(pa, pb).midp_value;
  } else {
    log::warn("compare: no discordant pairs, McNemar mid-p undefined");
  }

  std::vector<double> auroc_a, auroc_b;
  for (const auto& r : ra) {
    if (r.auroc) auroc_a.push_back(*r.auroc);
  }
  for (const auto& r : rb) {
    if (r.auroc) auroc_b.push_back(*r.auroc);
  }
  nlohmann::json row{{"model_a", dump_name(cfg.compare_a)},
                     {"model_b", dump_name(cfg.compare_b)},
                     {"discordant_b", disc_b},
                     {"discordant_c", disc_c},
                     {"midp_value", midp},
                     {"auroc_a", auroc_a},
                     {"auroc_b", auroc_b}};
  row["n_runs_per_group"] = std::min(auroc_a.size(), auroc_b.size());
  try {
    row["cohens_d"] = evalstat::cohens_d(auroc_a, auroc_b);
  } catch (const ModelError& e) {
    row["cohens_d"] = nullptr;
    log::warn(std::string("compare: Cohen's d undefined: ") + e.what());
  }
  fs::create_directories(cfg.out_dir);
  const auto line = row.dump();
  write_file_atomic(cfg.out_dir / "compare.jsonl", line + "\n");
  return line;
}

void cmd_cam(const ExperimentConfig& cfg) {
  if (cfg.cam_images.empty()) throw ConfigError("cam needs cam_images");
  const auto ckpts = resolve_checkpoints(cfg.cam_checkpoint.empty() ? cfg.out_dir / "train" : cfg.cam_checkpoint);
  auto bundle = modelcore::load_checkpoint(ckpts.front());
  auto manifest = with_aux(cfg, dataio::load_manifest(cfg.manifest, bundle.schema));
  const auto aux_all = trainer::fusion_inputs(bundle, manifest);
  const auto& classes = bundle.role == modelcore::Role::elevation ? bundle.schema.elevation_classes
                                                                  : bundle.schema.diagnosis_classes;
  const auto dir = cfg.out_dir / "cam";
  fs::create_directories(dir);
  for (const auto& id : cfg.cam_images) {
    std::size_t index = manifest.size();
    for (std::size_t i = 0; i < manifest.size(); ++i) {
      if (manifest.records[i].image_id == id) index = i;
    }
    if (index == manifest.size()) throw DataError("cam: unknown image_id '" + id + "'");
    const auto& rec = manifest.records[index];
    const auto rgb = dataio::decode_rgb(rec.image_path);
    const auto x = dataio::preprocess_image(rgb, bundle.preprocess, false, 0);
    std::optional<torch::Tensor> aux;
    if (aux_all.defined()) aux = aux_all[static_cast<std::int64_t>(index)];

    std::vector<std::int64_t> targets;
    if (cfg.cam_class == "all") {
      for (std::size_t c = 0; c < classes.size(); ++c) targets.push_back(static_cast<std::int64_t>(c));
    } else if (cfg.cam_class == "predicted") {
      torch::NoGradGuard guard;
      bundle.net->eval();
      torch::Tensor a = aux ? aux->unsqueeze(0) : torch::Tensor();
      auto logits = bundle.net->forward(x.unsqueeze(0), a).to(torch::kFloat64).contiguous();
      std::vector<double> row(logits.data_ptr<double>(), logits.data_ptr<double>() + logits.size(1));
      targets.push_back(static_cast<std::int64_t>(evalstat::argmax(row)));
    } else {
      auto it = std::find(classes.begin(), classes.end(), cfg.cam_class);
      if (it == classes.end()) throw ConfigError("cam_class '" + cfg.cam_class + "' is not a class of the model");
      targets.push_back(it - classes.begin());
    }

    cv::Mat resized;
    const int s = bundle.preprocess.image_size;
    cv::resize(rgb, resized, cv::Size(s, s), 0, 0, cv::INTER_LINEAR);
    auto base = torch::from_blob(resized.data, {s, s, 3}, torch::kUInt8).clone();
    for (auto t : targets) {
      const auto map = modelcore::gradcam(bundle, x, t, aux);
      auto over = modelcore::overlay_heatmap(base, map).contiguous();
      cv::Mat out_rgb(s, s, CV_8UC3, over.data_ptr<std::uint8_t>()), out_bgr;
      cv::cvtColor(out_rgb, out_bgr, cv::COLOR_RGB2BGR);
      const auto file = dir / (id + "_" + classes[static_cast<std::size_t>(t)] + ".png");
      if (!cv::imwrite(file.string(), out_bgr)) throw DataError("cannot write " + file.string());
    }
  }
  log::info("cam: wrote overlays to " + dir.string());
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Elevation-aware skin lesion classification toolkit"};
  app.require_subcommand(1, 0);  // several run in pipeline order
  fs::path config_path, out;
  std::int64_t seed = -1;
  std::string device = "cpu";
  std::string log_level = "info";
  std::vector<std::string> overrides;
  RunFlags flags;
  app.add_option("--config", config_path, "Experiment config file (key = value)");
  app.add_option("--out", out, "Output directory (overrides the config's out)");
  app.add_option("--seed", seed, "Seed (overrides the config's seed)");
  app.add_option("--device", device, "Compute device")->capture_default_str();
  app.add_flag("--allow-modality-mismatch", flags.allow_modality_mismatch,
               "Label images whose modality differs from the elevation model's");
  app.add_option("--set", overrides, "Config override KEY=VALUE (repeatable)");
  app.add_option("--log-level", log_level, "debug, info, warn, error or off")->capture_default_str();

  auto* prepare = app.add_subcommand("prepare", "Stratified split and class weights");
  auto* train = app.add_subcommand("train", "Train models (elevation or diagnosis)");
  auto* label = app.add_subcommand("label", "Infer elevation pseudo-labels");
  auto* evaluate = app.add_subcommand("evaluate", "Metrics, confidence intervals and mean ± std");
  auto* compare = app.add_subcommand("compare", "McNemar mid-p and Cohen's d between two evaluations");
  auto* cam = app.add_subcommand("cam", "GradCAM overlays");
  for (auto* sub : {prepare, train, label, evaluate, compare, cam}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    log::set_level(log::parse_level(log_level));
    check_device(device);
    std::optional<std::uint64_t> seed_override;
    if (seed >= 0) seed_override = static_cast<std::uint64_t>(seed);
    const auto cfg = load_experiment(config_path, overrides, seed_override, out);
    log::info("effective seed " + std::to_string(cfg.seed) + ", config hash " + cfg.hash());
    if (prepare->parsed()) cmd_prepare(cfg);
    if (train->parsed()) cmd_train(cfg);
    if (label->parsed()) cmd_label(cfg, flags);
    if (evaluate->parsed()) std::cout << cmd_evaluate(cfg);
    if (compare->parsed()) std::cout << cmd_compare(cfg) << "\n";
    if (cam->parsed()) cmd_cam(cfg);
    return 0;
  } catch (const ConfigError& e) {
    log::error(std::string("config error: ") + e.what());
    return 2;
  } catch (const DataError& e) {
    log::error(std::string("data error: ") + e.what());
    return 3;
  } catch (const std::exception& e) {
    log::error(std::string("error: ") + e.what());
    return 4;
  }
}

}  // namespace skinelev::cli
