#include "skinelev/labeler/labeler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "skinelev/csv.hpp"
#include "skinelev/error.hpp"
#include "skinelev/evalstat/metrics.hpp"
#include "skinelev/kv_config.hpp"
#include "skinelev/trainer/train.hpp"

namespace skinelev::labeler {

std::string to_string(AttachMode m) { return m == AttachMode::soft ? "soft" : "discrete"; }

AttachMode parse_attach_mode(const std::string& s) {
  if (s == "soft") return AttachMode::soft;
  if (s == "discrete") return AttachMode::discrete;
  throw ConfigError("unknown attach mode '" + s + "'");
}

std::vector<ElevationPrediction> infer_elevations(modelcore::ModelBundle& bundle,
                                                  const dataio::DatasetManifest& manifest,
                                                  const InferOptions& options) {
  if (bundle.role != modelcore::Role::elevation) throw ModelError("labeling needs an elevation model");
  if (!bundle.modality) throw ModelError("elevation model has no recorded training modality");
  for (const auto& r : manifest.records) {
    if (r.modality != *bundle.modality && !options.allow_modality_mismatch) {
      throw DataError("modality mismatch: model trained on " + dataio::to_string(*bundle.modality) +
                      " images, record " + r.image_id + " is " + dataio::to_string(r.modality) +
                      " (use --allow-modality-mismatch to override)");
    }
  }
  dataio::ImageCache cache;
  const auto probs = trainer::predict_manifest(bundle, manifest, options.batch_size, &cache);
  const auto& classes = bundle.schema.elevation_classes;
  std::vector<ElevationPrediction> out;
  out.reserve(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    ElevationPrediction p;
    p.image_id = manifest.records[i].image_id;
    p.probs = probs[i];
    p.argmax_class = classes[evalstat::argmax(p.probs)];
    p.source_model = bundle.weights_ref;
    p.source_modality = *bundle.modality;
    out.push_back(std::move(p));
  }
  return out;
}

std::string label_csv(const std::vector<ElevationPrediction>& predictions,
                      const std::vector<std::string>& elevation_classes) {
  std::vector<std::string> header{"image_id"};
  for (const auto& c : elevation_classes) header.push_back("p_" + c);
  header.insert(header.end(), {"argmax", "source_model", "source_modality"});
  std::string out = csv_row(header);
  char buf[32];
  for (const auto& p : predictions) {
    if (p.probs.size() != elevation_classes.size()) throw DataError("prediction width differs from class count");
    std::vector<std::string> row{p.image_id};
    for (double v : p.probs) {
      std::snprintf(buf, sizeof buf, "%.9f", v);
      row.emplace_back(buf);
    }
    row.insert(row.end(), {p.argmax_class, p.source_model, dataio::to_string(p.source_modality)});
    out += csv_row(row);
  }
  return out;
}

void write_label_file(const std::vector<ElevationPrediction>& predictions,
                      const std::vector<std::string>& elevation_classes, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_file_atomic(path, label_csv(predictions, elevation_classes));
}

std::vector<ElevationPrediction> read_label_file(const std::filesystem::path& path,
                                                 const std::vector<std::string>& elevation_classes) {
  const auto table = read_csv(path);
  auto need = [&](const std::string& name) {
    const int c = table.column(name);
    if (c < 0) throw DataError(path.string() + ": missing column '" + name + "'");
    return static_cast<std::size_t>(c);
  };
  const auto id_col = need("image_id");
  std::vector<std::size_t> prob_cols;
  for (const auto& c : elevation_classes) prob_cols.push_back(need("p_" + c));
  const auto argmax_col = need("argmax");
  const auto model_col = need("source_model");
  const auto modality_col = need("source_modality");

  std::vector<ElevationPrediction> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto where = path.string() + ":" + std::to_string(table.row_lines[r]);
    ElevationPrediction p;
    p.image_id = row[id_col];
    if (p.image_id.empty()) throw DataError(where + ": empty image_id");
    double sum = 0.0;
    for (auto c : prob_cols) {
      double v;
      try {
        v = parse_double(row[c], "probability");
      } catch (const Error&) {
        throw DataError(where + ": malformed probability '" + row[c] + "'");
      }
      if (!(v >= 0.0) || !std::isfinite(v)) throw DataError(where + ": negative or non-finite probability");
      sum += v;
      p.probs.push_back(v);
    }
    if (std::abs(sum - 1.0) > 1e-6) throw DataError(where + ": probabilities do not sum to 1");
    p.argmax_class = row[argmax_col];
    // Rounding to 9 decimals can create ties; any class attaining the maximum is consistent.
    const auto named = std::find(elevation_classes.begin(), elevation_classes.end(), p.argmax_class);
    if (named == elevation_classes.end() ||
        p.probs[static_cast<std::size_t>(named - elevation_classes.begin())] != p.probs[evalstat::argmax(p.probs)]) {
      throw DataError(where + ": argmax '" + p.argmax_class + "' inconsistent with probabilities");
    }
    p.source_model = row[model_col];
    p.source_modality = dataio::parse_modality(row[modality_col]);
    out.push_back(std::move(p));
  }
  return out;
}

dataio::DatasetManifest attach_labels(const dataio::DatasetManifest& manifest,
                                      const std::vector<ElevationPrediction>& labels, AttachMode mode) {
  std::unordered_map<std::string, const ElevationPrediction*> by_id;
  for (const auto& l : labels) by_id.emplace(l.image_id, &l);
  const auto& classes = manifest.schema.elevation_classes;
  auto out = manifest;
  for (auto& r : out.records) {
    auto it = by_id.find(r.image_id);
    if (it == by_id.end()) throw DataError("label file has no row for image_id '" + r.image_id + "'");
    const auto& p = *it->second;
    if (p.probs.size() != classes.size()) throw DataError("label width differs for image_id '" + r.image_id + "'");
    if (mode == AttachMode::soft) {
      r.aux = p.probs;
    } else {
      const auto idx = manifest.schema.elevation_index(p.argmax_class);
      if (!idx) throw DataError("unknown elevation class '" + p.argmax_class + "'");
      std::vector<double> onehot(classes.size(), 0.0);
      onehot[static_cast<std::size_t>(*idx)] = 1.0;
      r.aux = std::move(onehot);
    }
  }
  return out;
}

dataio::DatasetManifest attach_labels(const dataio::DatasetManifest& manifest, const std::filesystem::path& label_file,
                                      AttachMode mode) {
  return attach_labels(manifest, read_label_file(label_file, manifest.schema.elevation_classes), mode);
}

}  // namespace skinelev::labeler
