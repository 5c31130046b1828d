#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "skinelev/dataio/manifest.hpp"
#include "skinelev/modelcore/model.hpp"

namespace skinelev::labeler {

struct ElevationPrediction {
  std::string image_id;
  std::vector<double> probs;  // schema elevation order
  std::string argmax_class;   // lowest index attaining the maximum
  std::string source_model;
  dataio::Modality source_modality = dataio::Modality::dermoscopic;
};

enum class AttachMode { soft, discrete };
std::string to_string(AttachMode m);
AttachMode parse_attach_mode(const std::string& s);

struct InferOptions {
  bool allow_modality_mismatch = false;
  int batch_size = 32;
};

// One prediction per manifest record, in manifest order, eval-mode
// preprocessing. Throws ModelError for a non-elevation bundle or one without a
// recorded modality, DataError when a record's modality differs from the
// bundle's (unless overridden) or an image cannot be read.
std::vector<ElevationPrediction> infer_elevations(modelcore::ModelBundle& bundle,
                                                  const dataio::DatasetManifest& manifest,
                                                  const InferOptions& options = {});

// CSV: image_id,p_<class>...,argmax,source_model,source_modality with
// probabilities printed to 9 decimals.
std::string label_csv(const std::vector<ElevationPrediction>& predictions,
                      const std::vector<std::string>& elevation_classes);
void write_label_file(const std::vector<ElevationPrediction>& predictions,
                      const std::vector<std::string>& elevation_classes, const std::filesystem::path& path);

// Parses a label file against the schema's elevation classes. Throws DataError
// on malformed rows, unknown classes, probabilities off the simplex (|sum-1| >
// 1e-6 or negative) or an argmax column inconsistent with the probabilities.
std::vector<ElevationPrediction> read_label_file(const std::filesystem::path& path,
                                                 const std::vector<std::string>& elevation_classes);

// Copy of `manifest` with aux set on every record: probabilities verbatim
// (soft) or the one-hot of the argmax class (discrete). Throws DataError naming
// the first manifest id missing from the label file.
dataio::DatasetManifest attach_labels(const dataio::DatasetManifest& manifest,
                                      const std::vector<ElevationPrediction>& labels, AttachMode mode);
dataio::DatasetManifest attach_labels(const dataio::DatasetManifest& manifest, const std::filesystem::path& label_file,
                                      AttachMode mode);

}  // namespace skinelev::labeler
