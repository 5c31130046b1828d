#pragma once

#include <filesystem>
#include <string>

#include "skinelev/kv_config.hpp"
#include "skinelev/modelcore/model.hpp"

namespace skinelev::modelcore {

// Checkpoints are a LibTorch archive of the network's parameters and buffers
// plus a key-value sidecar `<path>.meta` describing how to rebuild it.
std::filesystem::path meta_path(const std::filesystem::path& checkpoint);

KeyValueFile bundle_metadata(const ModelBundle& bundle);

// Writes both files; sets bundle.weights_ref to `path`.
void save_checkpoint(ModelBundle& bundle, const std::filesystem::path& path);

// Rebuilds the model from the sidecar and loads the weights. Never loads
// pretrained weights again. Throws ModelError on missing or inconsistent files.
ModelBundle load_checkpoint(const std::filesystem::path& path);

// Copies a torchvision-layout state dict (saved with torch.save) into the
// backbone. Keys of the reference classifier are skipped; any other missing
// key or shape mismatch throws ModelError.
void load_pretrained(BackboneImpl& backbone, const std::filesystem::path& state_dict);

}  // namespace skinelev::modelcore
