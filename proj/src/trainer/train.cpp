#include "skinelev/trainer/train.hpp"

#include <cstdio>
#include <numeric>

#include "skinelev/csv.hpp"
#include "skinelev/dataio/class_weights.hpp"
#include "skinelev/error.hpp"
#include "skinelev/log.hpp"
#include "skinelev/modelcore/checkpoint.hpp"
#include "skinelev/random.hpp"
#include "skinelev/trainer/loss.hpp"

namespace skinelev::trainer {

namespace fs = std::filesystem;
using modelcore::FusionMode;
using modelcore::ModelBundle;
using modelcore::Role;

std::vector<int> role_targets(const ModelBundle& bundle, const dataio::DatasetManifest& manifest) {
  std::vector<int> out;
  out.reserve(manifest.size());
  for (const auto& r : manifest.records) {
    const auto& label = bundle.role == Role::elevation ? r.elevation : r.diagnosis;
    if (!label) throw DataError("record " + r.image_id + " has no " + modelcore::to_string(bundle.role) + " label");
    out.push_back(*label);
  }
  return out;
}

torch::Tensor fusion_inputs(const ModelBundle& bundle, const dataio::DatasetManifest& manifest) {
  const auto mode = bundle.fusion.mode;
  if (mode == FusionMode::none) return {};
  const auto n = static_cast<std::int64_t>(manifest.size());
  const auto a = bundle.fusion.aux_dim;
  auto aux = torch::zeros({n, a}, torch::kFloat64);
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& r = manifest.records[static_cast<std::size_t>(i)];
    if (mode == FusionMode::gt_onehot) {
      if (!r.elevation) throw DataError("record " + r.image_id + " lacks the elevation label fusion gt_onehot needs");
      aux[i][*r.elevation] = 1.0;
      continue;
    }
    if (!r.aux) {
      throw DataError("record " + r.image_id + " lacks the attached elevation labels fusion " + to_string(mode) +
                      " needs");
    }
    if (static_cast<std::int64_t>(r.aux->size()) != a) throw DataError("record " + r.image_id + ": aux width");
    aux[i] = torch::tensor(*r.aux, torch::kFloat64);
  }
  if (mode == FusionMode::discrete_onehot) aux = modelcore::one_hot_argmax(aux);
  return aux.to(torch::kFloat32);
}

void make_deterministic(std::uint64_t seed) {
  torch::manual_seed(seed);
  at::globalContext().setDeterministicAlgorithms(true, false);
}

evalstat::ProbabilityMatrix predict_manifest(ModelBundle& bundle, const dataio::DatasetManifest& manifest,
                                             int batch_size, dataio::ImageCache* cache) {
  const auto aux = fusion_inputs(bundle, manifest);
  bundle.net->eval();
  torch::NoGradGuard guard;
  evalstat::ProbabilityMatrix out;
  out.reserve(manifest.size());
  std::vector<std::size_t> idx(manifest.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t start = 0; start < idx.size(); start += static_cast<std::size_t>(batch_size)) {
    const auto end = std::min(idx.size(), start + static_cast<std::size_t>(batch_size));
    std::span<const std::size_t> chunk(idx.data() + start, end - start);
    auto x = dataio::load_batch(manifest.records, chunk, bundle.preprocess, false, {}, cache);
    torch::Tensor a;
    if (aux.defined()) a = aux.slice(0, static_cast<std::int64_t>(start), static_cast<std::int64_t>(end));
    auto probs = torch::softmax(bundle.net->forward(x, a).to(torch::kFloat64), 1).contiguous();
    auto acc = probs.accessor<double, 2>();
    for (std::int64_t i = 0; i < probs.size(0); ++i) {
      out.emplace_back(acc[i].data(), acc[i].data() + probs.size(1));
    }
  }
  return out;
}

namespace {

void remove_checkpoint(const std::string& path) {
  if (path.empty()) return;
  std::error_code ec;
  fs::remove(path, ec);
  fs::remove(modelcore::meta_path(path), ec);
}

}  // namespace

RunLog train(ModelBundle& bundle, const dataio::DatasetManifest& train_set, const dataio::DatasetManifest& val_set,
             const TrainConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  if (train_set.records.empty()) throw DataError("training split is empty");
  if (val_set.records.empty()) throw DataError("validation split is empty");

  const auto num_classes = static_cast<std::size_t>(bundle.num_classes());
  const auto train_targets = role_targets(bundle, train_set);
  const auto val_targets = role_targets(bundle, val_set);
  const auto train_aux = fusion_inputs(bundle, train_set);
  fusion_inputs(bundle, val_set);  // fail early on missing labels

  dataio::ClassWeights weights;
  if (cfg.class_weights) {
    weights = *cfg.class_weights;
    if (weights.size() != num_classes) throw ConfigError("class_weights length differs from the class count");
  } else {
    std::vector<std::size_t> counts(num_classes, 0);
    for (int t : train_targets) ++counts[static_cast<std::size_t>(t)];
    weights = dataio::compute_class_weights(counts);
  }
  const auto weight_tensor = to_tensor(weights);
  log::info("run " + std::to_string(options.run_id) + ": seed " + std::to_string(cfg.seed) + ", " +
            std::to_string(train_set.size()) + " train / " + std::to_string(val_set.size()) +
            " val records, class weights [" + weights.serialize() + "]");

  make_deterministic(derive_seed(cfg.seed, 0x747261696eULL));
  auto& net = bundle.net;
  torch::optim::SGD optimizer(net->parameters(), torch::optim::SGDOptions(cfg.lr)
                                                     .momentum(cfg.momentum)
                                                     .weight_decay(cfg.weight_decay));

  if (!options.out_dir.empty()) fs::create_directories(options.out_dir);
  dataio::ImageCache cache;
  const auto targets_all = torch::tensor(std::vector<std::int64_t>(train_targets.begin(), train_targets.end()));

  RunLog log;
  log.run_id = options.run_id;
  log.seed = cfg.seed;
  std::optional<double> best_auroc;
  std::string best_path;

  std::vector<std::size_t> order(train_set.size());
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr_at(epoch);
    for (auto& group : optimizer.param_groups()) {
      static_cast<torch::optim::SGDOptions&>(group.options()).lr(lr);
    }

    std::iota(order.begin(), order.end(), 0);
    Rng(derive_seed(cfg.seed, epoch, 0x73687566ULL)).shuffle(std::span<std::size_t>(order));
    net->train();
    double loss_sum = 0.0;
    double weight_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const auto end = std::min(order.size(), start + bs);
      std::span<const std::size_t> chunk(order.data() + start, end - start);
      std::vector<std::uint64_t> seeds;
      seeds.reserve(chunk.size());
      for (auto i : chunk) seeds.push_back(derive_seed(cfg.seed, epoch, i));
      auto x = dataio::load_batch(train_set.records, chunk, bundle.preprocess, true, seeds, &cache);
      auto index = torch::tensor(std::vector<std::int64_t>(chunk.begin(), chunk.end()));
      auto y = targets_all.index_select(0, index);
      torch::Tensor a;
      if (train_aux.defined()) a = train_aux.index_select(0, index);

      optimizer.zero_grad();
      auto loss = weighted_cross_entropy(net->forward(x, a), y, weight_tensor);
      loss.backward();
      optimizer.step();
      const double wsum = weight_tensor.index_select(0, y).sum().item<double>();
      loss_sum += loss.item<double>() * wsum;
      weight_sum += wsum;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = loss_sum / weight_sum;
    const auto probs = predict_manifest(bundle, val_set, cfg.batch_size, &cache);
    {
      torch::Tensor p = torch::empty({static_cast<std::int64_t>(probs.size()), static_cast<std::int64_t>(num_classes)},
                                     torch::kFloat64);
      for (std::size_t i = 0; i < probs.size(); ++i) {
        p[static_cast<std::int64_t>(i)] = torch::tensor(probs[i], torch::kFloat64);
      }
      auto y = torch::tensor(std::vector<std::int64_t>(val_targets.begin(), val_targets.end()));
      rec.val_loss = weighted_cross_entropy(p.clamp_min(1e-300).log(), y, weight_tensor.to(torch::kFloat64))
                         .item<double>();
    }
    rec.val_auroc = evalstat::macro_auroc(probs, val_targets);

    const bool improved = rec.val_auroc && (!best_auroc || *rec.val_auroc > *best_auroc);
    const bool first = log.epochs.empty();
    if (improved || (first && !rec.val_auroc)) {
      if (rec.val_auroc) best_auroc = rec.val_auroc;
      if (!options.out_dir.empty()) {
        char name[32];
        std::snprintf(name, sizeof name, "epoch_%03d.pt", epoch);
        const auto path = (options.out_dir / name).string();
        modelcore::save_checkpoint(bundle, path);
        remove_checkpoint(best_path);
        best_path = path;
        rec.checkpoint = path;
      }
    }
    char line[160];
    std::snprintf(line, sizeof line, "run %d epoch %d: lr %.3g train_loss %.4f val_loss %.4f val_auroc %s",
                  options.run_id, epoch, lr, rec.train_loss, rec.val_loss,
                  rec.val_auroc ? std::to_string(*rec.val_auroc).c_str() : "n/a");
    log::info(line);
    log.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
  }

  log.best_epoch = best_epoch(log.epochs);
  log.best_checkpoint = best_path;
  if (!options.out_dir.empty()) {
    const auto last = (options.out_dir / "last.pt").string();
    modelcore::save_checkpoint(bundle, last);
    log.last_checkpoint = last;
    write_file_atomic(options.out_dir / "runlog.jsonl", log.to_jsonl());
  }
  return log;
}

}  // namespace skinelev::trainer
