#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <torch/torch.h>

#include "skinelev/dataio/manifest.hpp"
#include "skinelev/dataio/preprocess.hpp"
#include "skinelev/dataio/schema.hpp"
#include "skinelev/modelcore/backbone.hpp"

namespace skinelev::modelcore {

enum class FusionMode { none, gt_onehot, soft, discrete_onehot };
enum class Role { elevation, diagnosis };

std::string to_string(FusionMode m);
FusionMode parse_fusion_mode(const std::string& s);
std::string to_string(Role r);
Role parse_role(const std::string& s);

// The fusion operator: the aux vector is concatenated to the pooled features
// right before the final linear classifier.
struct FusionHead {
  std::int64_t feature_dim = 0;
  std::int64_t aux_dim = 0;
  std::int64_t num_classes = 0;
  FusionMode mode = FusionMode::none;

  bool fused() const { return mode != FusionMode::none; }
  std::int64_t classifier_in() const { return fused() ? feature_dim + aux_dim : feature_dim; }
  // Throws ConfigError on non-positive widths or aux_dim <= 0 with fusion.
  void validate() const;
};

// Backbone followed by dropout (when the reference architecture has one) and
// a single linear classifier over [features, aux]. The aux vector is never
// dropped.
class ClassifierNetImpl : public torch::nn::Module {
 public:
  ClassifierNetImpl(Backbone backbone, const FusionHead& fusion);

  // Raw logits [N, num_classes]. `aux` must be defined iff the head is fused.
  torch::Tensor forward(const torch::Tensor& images, const torch::Tensor& aux = {});
  torch::Tensor logits_from_maps(const torch::Tensor& maps, const torch::Tensor& aux = {});

  const FusionHead& fusion() const { return fusion_; }
  BackboneImpl& backbone() { return *backbone_; }
  torch::nn::Linear& classifier() { return classifier_; }

 private:
  FusionHead fusion_;
  Backbone backbone_;
  torch::nn::Dropout dropout_{nullptr};
  torch::nn::Linear classifier_{nullptr};
};
TORCH_MODULE(ClassifierNet);

std::int64_t count_parameters(torch::nn::Module& module);
// Weights and bias of the final linear classifier.
std::int64_t classifier_parameter_count(ClassifierNet& net);

struct ModelBundle {
  BackboneSpec spec;
  FusionHead fusion;
  Role role = Role::diagnosis;
  std::optional<dataio::Modality> modality;  // modality of the training images
  dataio::LabelSchema schema;
  dataio::PreprocessConfig preprocess;
  ClassifierNet net{nullptr};
  std::string weights_ref;  // checkpoint path once saved
  std::string config_hash;

  std::int64_t num_classes() const { return spec.num_classes; }
};

// Builds a randomly initialized (or pretrained, when spec.pretrained) model.
// feature_dim / num_classes left at 0 are filled in. The new classifier gets a
// zero bias and U(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights.
// Throws ConfigError on unknown family, dimension mismatch or a class count
// that disagrees with the schema for the role.
ModelBundle build_model(BackboneSpec spec, FusionHead fusion, Role role, const dataio::LabelSchema& schema);

// Same with a caller-supplied backbone (spec.family is informational only).
ModelBundle build_model(Backbone backbone, BackboneSpec spec, FusionHead fusion, Role role,
                        const dataio::LabelSchema& schema);

// Probabilities (float64, rows on the simplex) for a preprocessed image [3,S,S]
// or batch [N,3,S,S]; a single image yields a 1-D vector.
// Throws ModelError on wrong role or image shape.
torch::Tensor forward_elevation(ModelBundle& bundle, const torch::Tensor& images);

// `aux` is [N_E] or [N, N_E] and must be given iff the head is fused; entries
// in [0,1], one-hot for gt_onehot and discrete_onehot.
// Throws ModelError on wrong role, image shape or aux.
torch::Tensor forward_diagnosis(ModelBundle& bundle, const torch::Tensor& images,
                                const std::optional<torch::Tensor>& aux = std::nullopt);

// Shape and content checks shared by inference, training and GradCAM.
// Returns batched [N,3,S,S] images / [N,A] aux.
torch::Tensor check_images(const ModelBundle& bundle, const torch::Tensor& images);
torch::Tensor check_aux(const ModelBundle& bundle, const std::optional<torch::Tensor>& aux, std::int64_t batch);

// One-hot of the row argmax, ties to the lowest index.
torch::Tensor one_hot_argmax(const torch::Tensor& probs);

}  // namespace skinelev::modelcore
