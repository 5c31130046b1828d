#include "skinelev/cli/experiment_config.hpp"

#include "skinelev/error.hpp"

namespace skinelev::cli {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& value) {
  if (value.empty()) return {};
  fs::path p(value);
  return p.is_absolute() ? p : base / p;
}

}  // namespace

void ExperimentConfig::validate() const {
  using modelcore::FusionMode;
  if (role == modelcore::Role::elevation && fusion != FusionMode::none) {
    throw ConfigError("fusion applies to diagnosis models only (role = elevation, fusion = " +
                      modelcore::to_string(fusion) + ")");
  }
  if ((fusion == FusionMode::soft || fusion == FusionMode::discrete_onehot) && elevation_labels.empty()) {
    throw ConfigError("fusion = " + modelcore::to_string(fusion) + " requires elevation_labels");
  }
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw ConfigError("ci_level must lie in (0,1)");
  if (bootstrap_resamples < 100) throw ConfigError("bootstrap_resamples must be at least 100");
  if (backbone.pretrained && backbone.pretrained_path.empty()) {
    throw ConfigError("pretrained = true requires pretrained_path (no weights are bundled)");
  }
  train.validate();
}

std::string ExperimentConfig::hash() const {
  // Output location and verbosity do not change what is trained.
  KeyValueFile kv;
  for (const auto& [key, value] : raw.entries()) {
    if (key != "out" && key != "log_level") kv.add(key, value);
  }
  return trainer::fnv1a_hex(kv.serialize());
}

ExperimentConfig ExperimentConfig::from_kv(KeyValueFile kv, const fs::path& base) {
  static const char* kKnown[] = {
      "manifest",      "schema",          "split_file",     "split_ratios",     "stratify_on",
      "role",          "family",          "width_multiplier", "pretrained",     "pretrained_path",
      "fusion",        "elevation_labels", "epochs",        "batch_size",       "lr",
      "momentum",      "weight_decay",    "lr_decay_factor", "lr_decay_every",  "class_weights",
      "repeats",       "seed",            "image_size",     "norm_mean",        "norm_std",
      "out",           "label_checkpoint", "label_run",     "checkpoints",      "eval_split",
      "ci_level",      "bootstrap_resamples", "compare_a",  "compare_b",        "cam_checkpoint",
      "cam_images",    "cam_class",       "log_level"};
  for (const auto& [key, value] : kv.entries()) {
    bool known = false;
    for (const char* k : kKnown) known = known || key == k;
    if (!known) throw ConfigError(kv.origin() + ": unknown key '" + key + "'");
  }

  ExperimentConfig c;
  c.manifest = resolve(base, kv.get_or("manifest", ""));
  c.schema = resolve(base, kv.get_or("schema", ""));
  c.split_file = resolve(base, kv.get_or("split_file", ""));
  const auto ratios = kv.get_doubles("split_ratios", {0.7, 0.15, 0.15});
  if (ratios.size() != 3) throw ConfigError("split_ratios needs three values");
  c.split_ratios = {ratios[0], ratios[1], ratios[2]};
  c.stratify_on = dataio::parse_stratify_on(kv.get_or("stratify_on", "elevation"));

  c.role = modelcore::parse_role(kv.get_or("role", "diagnosis"));
  c.backbone.family = modelcore::parse_family(kv.get_or("family", "vgg16-gap"));
  c.backbone.width_multiplier = kv.get_double("width_multiplier", 1.0);
  c.backbone.pretrained = kv.get_bool("pretrained", false);
  c.backbone.pretrained_path = resolve(base, kv.get_or("pretrained_path", "")).string();
  c.fusion = modelcore::parse_fusion_mode(kv.get_or("fusion", "none"));
  c.elevation_labels = resolve(base, kv.get_or("elevation_labels", ""));
  c.train = trainer::TrainConfig::from_config(kv);
  c.seed = c.train.seed;
  c.preprocess = dataio::PreprocessConfig::from_config(kv);
  c.out_dir = resolve(base, kv.get_or("out", "out"));

  c.label_checkpoint = resolve(base, kv.get_or("label_checkpoint", ""));
  c.label_run = static_cast<int>(kv.get_int("label_run", 0));
  for (const auto& item : split_list(kv.get_or("checkpoints", ""))) c.checkpoints.push_back(resolve(base, item));
  try {
    c.eval_split = dataio::parse_split(kv.get_or("eval_split", "test"));
  } catch (const DataError& e) {
    throw ConfigError(std::string("eval_split: ") + e.what());
  }
  c.ci_level = kv.get_double("ci_level", 0.95);
  c.bootstrap_resamples = static_cast<int>(kv.get_int("bootstrap_resamples", 1000));
  c.compare_a = resolve(base, kv.get_or("compare_a", ""));
  c.compare_b = resolve(base, kv.get_or("compare_b", ""));
  c.cam_checkpoint = resolve(base, kv.get_or("cam_checkpoint", ""));
  c.cam_images = split_list(kv.get_or("cam_images", ""));
  c.cam_class = kv.get_or("cam_class", "predicted");
  c.raw = std::move(kv);
  c.validate();
  return c;
}

ExperimentConfig load_experiment(const fs::path& path, const std::vector<std::string>& overrides,
                                 const std::optional<std::uint64_t>& seed, const fs::path& out) {
  KeyValueFile kv;
  fs::path base = fs::current_path();
  if (!path.empty()) {
    if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
    kv = KeyValueFile::load(path);
    base = fs::absolute(path).parent_path();
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not KEY=VALUE");
    kv.set(trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
  if (seed) kv.set("seed", std::to_string(*seed));
  if (!out.empty()) kv.set("out", fs::absolute(out).string());
  return ExperimentConfig::from_kv(std::move(kv), base);
}

}  // namespace skinelev::cli
