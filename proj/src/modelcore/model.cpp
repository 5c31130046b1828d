#include "skinelev/modelcore/model.hpp"

#include <cmath>

#include "skinelev/error.hpp"
#include "skinelev/modelcore/checkpoint.hpp"

namespace skinelev::modelcore {

std::string to_string(FusionMode m) {
  switch (m) {
    case FusionMode::none: return "none";
    case FusionMode::gt_onehot: return "gt_onehot";
    case FusionMode::soft: return "soft";
    case FusionMode::discrete_onehot: return "discrete_onehot";
  }
  return "?";
}

FusionMode parse_fusion_mode(const std::string& s) {
  for (auto m : {FusionMode::none, FusionMode::gt_onehot, FusionMode::soft, FusionMode::discrete_onehot}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown fusion mode '" + s + "'");
}

std::string to_string(Role r) { return r == Role::elevation ? "elevation" : "diagnosis"; }

Role parse_role(const std::string& s) {
  if (s == "elevation") return Role::elevation;
  if (s == "diagnosis") return Role::diagnosis;
  throw ConfigError("unknown role '" + s + "'");
}

void FusionHead::validate() const {
  if (feature_dim <= 0) throw ConfigError("fusion feature_dim must be positive");
  if (num_classes <= 0) throw ConfigError("fusion num_classes must be positive");
  if (fused() && aux_dim <= 0) throw ConfigError("fusion mode " + to_string(mode) + " needs aux_dim > 0");
  if (aux_dim < 0) throw ConfigError("aux_dim must be non-negative");
}

ClassifierNetImpl::ClassifierNetImpl(Backbone backbone, const FusionHead& fusion)
    : fusion_(fusion), backbone_(std::move(backbone)) {
  fusion_.validate();
  if (backbone_->feature_dim() != fusion_.feature_dim) {
    throw ConfigError("dimension mismatch: backbone feature_dim " + std::to_string(backbone_->feature_dim()) +
                      " vs fusion feature_dim " + std::to_string(fusion_.feature_dim));
  }
  register_module("backbone", backbone_);
  dropout_ = register_module("dropout", torch::nn::Dropout(backbone_->head_dropout()));
  classifier_ = register_module("classifier", torch::nn::Linear(fusion_.classifier_in(), fusion_.num_classes));
  torch::NoGradGuard guard;
  const double bound = 1.0 / std::sqrt(static_cast<double>(fusion_.classifier_in()));
  classifier_->weight.uniform_(-bound, bound);
  classifier_->bias.zero_();
}

torch::Tensor ClassifierNetImpl::logits_from_maps(const torch::Tensor& maps, const torch::Tensor& aux) {
  auto feats = dropout_(backbone_->neck(backbone_->pool(maps)));
  if (fusion_.fused()) feats = torch::cat({feats, aux.to(feats.dtype())}, 1);
  return classifier_(feats);
}

torch::Tensor ClassifierNetImpl::forward(const torch::Tensor& images, const torch::Tensor& aux) {
  if (fusion_.fused() != aux.defined()) {
    throw ModelError(fusion_.fused() ? "aux input missing for fused head" : "aux given to a mode=none model");
  }
  return logits_from_maps(backbone_->spatial(images), aux);
}

std::int64_t count_parameters(torch::nn::Module& module) {
  std::int64_t n = 0;
  for (const auto& p : module.parameters()) n += p.numel();
  return n;
}

std::int64_t classifier_parameter_count(ClassifierNet& net) { return count_parameters(*net->classifier()); }

namespace {

void check_classes(const BackboneSpec& spec, Role role, const dataio::LabelSchema& schema) {
  const auto expected = static_cast<std::int64_t>(role == Role::elevation ? schema.num_elevation()
                                                                          : schema.num_diagnosis());
  if (spec.num_classes != expected) {
    throw ConfigError("num_classes " + std::to_string(spec.num_classes) + " does not match the " + to_string(role) +
                      " classes of the schema (" + std::to_string(expected) + ")");
  }
}

}  // namespace

ModelBundle build_model(Backbone backbone, BackboneSpec spec, FusionHead fusion, Role role,
                        const dataio::LabelSchema& schema) {
  if (spec.num_classes == 0) {
    spec.num_classes =
        static_cast<std::int64_t>(role == Role::elevation ? schema.num_elevation() : schema.num_diagnosis());
  }
  check_classes(spec, role, schema);
  if (spec.feature_dim == 0) spec.feature_dim = backbone->feature_dim();
  if (spec.feature_dim != backbone->feature_dim()) {
    throw ConfigError("dimension mismatch: spec feature_dim " + std::to_string(spec.feature_dim) + " vs " +
                      std::to_string(backbone->feature_dim()));
  }
  if (fusion.feature_dim == 0) fusion.feature_dim = spec.feature_dim;
  if (fusion.num_classes == 0) fusion.num_classes = spec.num_classes;
  if (fusion.feature_dim != spec.feature_dim) {
    throw ConfigError("dimension mismatch: fusion feature_dim " + std::to_string(fusion.feature_dim) +
                      " vs backbone " + std::to_string(spec.feature_dim));
  }
  if (fusion.num_classes != spec.num_classes) throw ConfigError("dimension mismatch: fusion num_classes");
  if (role == Role::elevation && fusion.fused()) throw ConfigError("elevation models take no aux input");
  if (fusion.fused() && fusion.aux_dim != static_cast<std::int64_t>(schema.num_elevation()) && fusion.aux_dim > 0) {
    throw ConfigError("aux_dim " + std::to_string(fusion.aux_dim) + " differs from the number of elevation classes");
  }
  if (spec.pretrained) {
    if (spec.pretrained_path.empty()) throw ConfigError("pretrained=true requires pretrained_path");
    load_pretrained(*backbone, spec.pretrained_path);
  }

  ModelBundle b;
  b.spec = spec;
  b.fusion = fusion;
  b.role = role;
  b.schema = schema;
  b.net = ClassifierNet(std::move(backbone), fusion);
  return b;
}

ModelBundle build_model(BackboneSpec spec, FusionHead fusion, Role role, const dataio::LabelSchema& schema) {
  auto backbone = make_backbone(spec.family, spec.width_multiplier);
  return build_model(std::move(backbone), spec, fusion, role, schema);
}

torch::Tensor check_images(const ModelBundle& bundle, const torch::Tensor& images) {
  auto x = images;
  if (x.dim() == 3) x = x.unsqueeze(0);
  const auto s = bundle.preprocess.image_size;
  if (x.dim() != 4 || x.size(1) != 3 || x.size(2) != s || x.size(3) != s) {
    throw ModelError("wrong image shape " + std::string(c10::str(images.sizes())) + ", expected [N,3," +
                     std::to_string(s) + "," + std::to_string(s) + "]");
  }
  return x.to(torch::kFloat32);
}

torch::Tensor check_aux(const ModelBundle& bundle, const std::optional<torch::Tensor>& aux, std::int64_t batch) {
  const auto& f = bundle.fusion;
  if (!f.fused()) {
    if (aux && aux->defined()) throw ModelError("aux given to a mode=none model");
    return {};
  }
  if (!aux || !aux->defined()) throw ModelError("aux input missing for fusion mode " + to_string(f.mode));
  auto a = aux->to(torch::kFloat64);
  if (a.dim() == 1) a = a.unsqueeze(0);
  if (a.dim() != 2 || a.size(0) != batch || a.size(1) != f.aux_dim) {
    throw ModelError("aux must have shape [" + std::to_string(batch) + "," + std::to_string(f.aux_dim) + "]");
  }
  if (!torch::isfinite(a).all().item<bool>() || (a < 0).any().item<bool>() || (a > 1).any().item<bool>()) {
    throw ModelError("aux entries must lie in [0,1]");
  }
  if (f.mode == FusionMode::gt_onehot || f.mode == FusionMode::discrete_onehot) {
    const bool binary = ((a == 0) | (a == 1)).all().item<bool>();
    const bool single = (a.sum(1) == 1).all().item<bool>();
    if (!binary || !single) throw ModelError("aux must be one-hot");
  }
  return a.to(torch::kFloat32);
}

namespace {

torch::Tensor predict(ModelBundle& bundle, const torch::Tensor& images, const torch::Tensor& aux) {
  bundle.net->eval();
  torch::NoGradGuard guard;
  auto logits = bundle.net->forward(images, aux);
  return torch::softmax(logits.to(torch::kFloat64), 1);
}

}  // namespace

torch::Tensor forward_elevation(ModelBundle& bundle, const torch::Tensor& images) {
  if (bundle.role != Role::elevation) throw ModelError("forward_elevation on a diagnosis model");
  auto x = check_images(bundle, images);
  auto p = predict(bundle, x, {});
  return images.dim() == 3 ? p.squeeze(0) : p;
}

torch::Tensor forward_diagnosis(ModelBundle& bundle, const torch::Tensor& images,
                                const std::optional<torch::Tensor>& aux) {
  if (bundle.role != Role::diagnosis) throw ModelError("forward_diagnosis on an elevation model");
  auto x = check_images(bundle, images);
  auto a = check_aux(bundle, aux, x.size(0));
  auto p = predict(bundle, x, a);
  return images.dim() == 3 ? p.squeeze(0) : p;
}

torch::Tensor one_hot_argmax(const torch::Tensor& probs) {
  auto p = probs.dim() == 1 ? probs.unsqueeze(0) : probs;
  p = p.to(torch::kFloat64).contiguous();
  auto out = torch::zeros_like(p);
  auto acc = p.accessor<double, 2>();
  for (std::int64_t i = 0; i < p.size(0); ++i) {
    std::int64_t best = 0;
    for (std::int64_t j = 1; j < p.size(1); ++j) {
      if (acc[i][j] > acc[i][best]) best = j;
    }
    out[i][best] = 1.0;
  }
  return probs.dim() == 1 ? out.squeeze(0) : out;
}

}  // namespace skinelev::modelcore
