#include "skinelev/modelcore/checkpoint.hpp"

#include <fstream>
#include <iterator>
#include <regex>
#include <unordered_map>

#include "skinelev/csv.hpp"
#include "skinelev/error.hpp"

namespace skinelev::modelcore {

namespace fs = std::filesystem;

fs::path meta_path(const fs::path& checkpoint) { return fs::path(checkpoint.string() + ".meta"); }

KeyValueFile bundle_metadata(const ModelBundle& b) {
  KeyValueFile kv;
  kv.set("role", to_string(b.role));
  kv.set("family", to_string(b.spec.family));
  kv.set("width_multiplier", fmt_double(b.spec.width_multiplier));
  kv.set("pretrained", b.spec.pretrained ? "true" : "false");
  kv.set("feature_dim", std::to_string(b.spec.feature_dim));
  kv.set("num_classes", std::to_string(b.spec.num_classes));
  kv.set("fusion", to_string(b.fusion.mode));
  kv.set("aux_dim", std::to_string(b.fusion.aux_dim));
  kv.set("modality", b.modality ? dataio::to_string(*b.modality) : "");
  kv.set("config_hash", b.config_hash);
  b.preprocess.write_to(kv);
  kv.set("diagnosis_classes", join(b.schema.diagnosis_classes));
  kv.set("elevation_classes", join(b.schema.elevation_classes));
  for (const auto& [raw, cls] : b.schema.diagnosis_grouping) kv.add("group", raw + " -> " + cls);
  return kv;
}

void save_checkpoint(ModelBundle& bundle, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = fs::path(path.string() + ".tmp");
  torch::serialize::OutputArchive archive;
  bundle.net->save(archive);
  archive.save_to(tmp.string());
  fs::rename(tmp, path);
  write_file_atomic(meta_path(path), bundle_metadata(bundle).serialize());
  bundle.weights_ref = path.string();
}

ModelBundle load_checkpoint(const fs::path& path) {
  if (!fs::exists(path)) throw ModelError("checkpoint not found: " + path.string());
  if (!fs::exists(meta_path(path))) throw ModelError("checkpoint metadata not found: " + meta_path(path).string());
  KeyValueFile kv;
  dataio::LabelSchema schema;
  try {
    kv = KeyValueFile::load(meta_path(path));
    std::string schema_text = "diagnosis_classes = " + kv.require("diagnosis_classes") + "\n" +
                              "elevation_classes = " + kv.require("elevation_classes") + "\n";
    for (const auto& g : kv.all("group")) schema_text += "group = " + g + "\n";
    schema = dataio::LabelSchema::parse(schema_text, meta_path(path).string());
  } catch (const Error& e) {
    throw ModelError(std::string("bad checkpoint metadata: ") + e.what());
  }

  BackboneSpec spec;
  spec.family = parse_family(kv.require("family"));
  spec.width_multiplier = kv.get_double("width_multiplier", 1.0);
  spec.feature_dim = kv.get_int("feature_dim", 0);
  spec.num_classes = kv.get_int("num_classes", 0);
  FusionHead fusion;
  fusion.mode = parse_fusion_mode(kv.get_or("fusion", "none"));
  fusion.aux_dim = kv.get_int("aux_dim", 0);
  auto bundle = build_model(spec, fusion, parse_role(kv.require("role")), schema);
  bundle.spec.pretrained = kv.get_bool("pretrained", false);
  const auto modality = kv.get_or("modality", "");
  if (!modality.empty()) bundle.modality = dataio::parse_modality(modality);
  bundle.config_hash = kv.get_or("config_hash", "");
  bundle.preprocess = dataio::PreprocessConfig::from_config(kv);

  try {
    torch::serialize::InputArchive archive;
    archive.load_from(path.string());
    bundle.net->load(archive);
  } catch (const c10::Error& e) {
    throw ModelError("cannot load checkpoint " + path.string() + ": " + e.what_without_backtrace());
  }
  bundle.weights_ref = path.string();
  bundle.net->eval();
  return bundle;
}

namespace {

// Older torchvision DenseNet files name layers "norm.1" instead of "norm1".
std::string normalize_key(const std::string& key) {
  static const std::regex dense(R"(^(.*denselayer\d+\.(?:norm|relu|conv))\.((?:[12])\.(?:weight|bias|running_mean|running_var))$)");
  std::smatch m;
  if (std::regex_match(key, m, dense)) return m[1].str() + m[2].str();
  return key;
}

}  // namespace

void load_pretrained(BackboneImpl& backbone, const fs::path& state_dict) {
  std::ifstream in(state_dict, std::ios::binary);
  if (!in) throw ModelError("cannot open pretrained weights " + state_dict.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::unordered_map<std::string, torch::Tensor> source;
  try {
    auto value = torch::pickle_load(bytes);
    for (const auto& entry : value.toGenericDict()) {
      source.emplace(normalize_key(entry.key().toStringRef()), entry.value().toTensor());
    }
  } catch (const c10::Error& e) {
    throw ModelError("cannot parse pretrained weights " + state_dict.string() + ": " + e.what_without_backtrace());
  }

  const auto skip = backbone.reference_head_prefixes();
  auto skipped = [&](const std::string& key) {
    for (const auto& p : skip) {
      if (key.rfind(p, 0) == 0) return true;
    }
    return false;
  };

  torch::NoGradGuard guard;
  auto copy_into = [&](const std::string& name, torch::Tensor& dst) {
    auto it = source.find(name);
    if (it == source.end()) {
      if (name.ends_with("num_batches_tracked")) return;
      throw ModelError("pretrained weights lack '" + name + "'");
    }
    if (it->second.sizes() != dst.sizes()) {
      throw ModelError("shape mismatch for '" + name + "' in pretrained weights");
    }
    dst.copy_(it->second);
  };
  for (auto& p : backbone.named_parameters()) {
    if (!skipped(p.key())) copy_into(p.key(), p.value());
  }
  for (auto& b : backbone.named_buffers()) {
    if (!skipped(b.key())) copy_into(b.key(), b.value());
  }
}

}  // namespace skinelev::modelcore
