#include "pvda/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pvda/common.hpp"

namespace pvda {

namespace {

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

std::vector<std::size_t> split_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(static_cast<std::size_t>(std::stoull(item)));
  }
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  for (std::size_t x : split_sizes(s)) out.push_back(static_cast<int>(x));
  return out;
}

const std::string& meta_at(const std::map<std::string, std::string>& meta, const std::string& key) {
  const auto it = meta.find(key);
  require<DataError>(it != meta.end(), "checkpoint metadata missing key: " + key);
  return it->second;
}

std::vector<View> batch_views(const std::vector<ImageSample>& batch) {
  std::vector<View> v(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) v[i] = batch[i].view;
  return v;
}

std::vector<int> batch_labels(const std::vector<ImageSample>& batch) {
  std::vector<int> l(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) l[i] = batch[i].location_id;
  return l;
}

}  // namespace

// ---------------------------------------------------------------------------
// TrainConfig serialization

std::map<std::string, std::string> TrainConfig::to_metadata() const {
  std::map<std::string, std::string> m;
  m["tc.encoder.backbone"] = backbone_name(encoder.backbone);
  m["tc.encoder.image_size"] = std::to_string(encoder.image_size);
  m["tc.encoder.d_embed"] = std::to_string(encoder.d_embed);
  m["tc.encoder.num_rings"] = std::to_string(encoder.num_rings);
  m["tc.encoder.remove_final_downsample"] = encoder.remove_final_downsample ? "1" : "0";
  m["tc.encoder.tiny_channels"] = join_sizes(encoder.tiny_channels);
  m["tc.encoder.refine_depth"] = std::to_string(encoder.refine_depth);
  m["tc.classifier_dropout"] = format_double(classifier_dropout);
  m["tc.disc_kernel"] = std::to_string(disc_kernel);
  m["tc.disc_pooling"] = disc_pooling_name(disc_pooling);
  m["tc.disc_widths"] = join_sizes(disc_widths);
  m["tc.discriminator_enabled"] = discriminator_enabled ? "1" : "0";
  m["tc.schedule.variant"] = schedule_variant_name(schedule.variant);
  m["tc.schedule.alpha_init"] = format_double(schedule.alpha_init);
  m["tc.schedule.alpha_step"] = format_double(schedule.alpha_step);
  m["tc.schedule.alpha_period_epochs"] = std::to_string(schedule.alpha_period_epochs);
  m["tc.schedule.max_alpha"] = format_double(schedule.max_alpha);
  m["tc.schedule.lr_decay_factor"] = format_double(schedule.lr_decay_factor);
  m["tc.schedule.lr_decay_epochs"] = join_ints(schedule.lr_decay_epochs_within_cycle);
  m["tc.schedule.no_restart_decay_epochs"] = join_ints(schedule.no_restart_decay_epochs);
  for (const auto& [group, lr] : schedule.base_lrs)
    m[std::string("tc.schedule.base_lr.") + param_group_name(group)] = format_double(lr);
  m["tc.optim.momentum"] = format_double(optim.momentum);
  m["tc.optim.weight_decay"] = format_double(optim.weight_decay);
  m["tc.optim.adam_beta1"] = format_double(optim.adam_beta1);
  m["tc.optim.adam_beta2"] = format_double(optim.adam_beta2);
  m["tc.optim.adam_eps"] = format_double(optim.adam_eps);
  m["tc.epochs"] = std::to_string(epochs);
  m["tc.batch_size"] = std::to_string(batch_size);
  m["tc.steps_per_epoch"] = std::to_string(steps_per_epoch);
  m["tc.checkpoint_every"] = std::to_string(checkpoint_every);
  m["tc.same_batch_two_steps"] = same_batch_two_steps ? "1" : "0";
  m["tc.augment_hflip"] = augment_hflip ? "1" : "0";
  m["tc.seed"] = std::to_string(seed);
  m["tc.backbone_weights_path"] = backbone_weights_path;
  return m;
}

TrainConfig TrainConfig::from_metadata(const std::map<std::string, std::string>& meta) {
  TrainConfig c;
  c.encoder.backbone = backbone_from_name(meta_at(meta, "tc.encoder.backbone"));
  c.encoder.image_size = std::stoi(meta_at(meta, "tc.encoder.image_size"));
  c.encoder.d_embed = std::stoi(meta_at(meta, "tc.encoder.d_embed"));
  c.encoder.num_rings = std::stoi(meta_at(meta, "tc.encoder.num_rings"));
  c.encoder.remove_final_downsample = meta_at(meta, "tc.encoder.remove_final_downsample") == "1";
  c.encoder.tiny_channels = split_sizes(meta_at(meta, "tc.encoder.tiny_channels"));
  c.encoder.refine_depth = std::stoi(meta_at(meta, "tc.encoder.refine_depth"));
  c.classifier_dropout = parse_double(meta_at(meta, "tc.classifier_dropout"));
  c.disc_kernel = std::stoi(meta_at(meta, "tc.disc_kernel"));
  c.disc_pooling = disc_pooling_from_name(meta_at(meta, "tc.disc_pooling"));
  c.disc_widths = split_sizes(meta_at(meta, "tc.disc_widths"));
  c.discriminator_enabled = meta_at(meta, "tc.discriminator_enabled") == "1";
  c.schedule.variant = schedule_variant_from_name(meta_at(meta, "tc.schedule.variant"));
  c.schedule.alpha_init = parse_double(meta_at(meta, "tc.schedule.alpha_init"));
  c.schedule.alpha_step = parse_double(meta_at(meta, "tc.schedule.alpha_step"));
  c.schedule.alpha_period_epochs = std::stoi(meta_at(meta, "tc.schedule.alpha_period_epochs"));
  c.schedule.max_alpha = parse_double(meta_at(meta, "tc.schedule.max_alpha"));
  c.schedule.lr_decay_factor = parse_double(meta_at(meta, "tc.schedule.lr_decay_factor"));
  c.schedule.lr_decay_epochs_within_cycle = split_ints(meta_at(meta, "tc.schedule.lr_decay_epochs"));
  c.schedule.no_restart_decay_epochs =
      split_ints(meta_at(meta, "tc.schedule.no_restart_decay_epochs"));
  for (ParamGroup g : {ParamGroup::kBackbone, ParamGroup::kEncoderRest, ParamGroup::kClassifier,
                       ParamGroup::kDiscriminator})
    c.schedule.base_lrs[g] =
        parse_double(meta_at(meta, std::string("tc.schedule.base_lr.") + param_group_name(g)));
  c.optim.momentum = parse_double(meta_at(meta, "tc.optim.momentum"));
  c.optim.weight_decay = parse_double(meta_at(meta, "tc.optim.weight_decay"));
  c.optim.adam_beta1 = parse_double(meta_at(meta, "tc.optim.adam_beta1"));
  c.optim.adam_beta2 = parse_double(meta_at(meta, "tc.optim.adam_beta2"));
  c.optim.adam_eps = parse_double(meta_at(meta, "tc.optim.adam_eps"));
  c.epochs = std::stoi(meta_at(meta, "tc.epochs"));
  c.batch_size = static_cast<std::size_t>(std::stoull(meta_at(meta, "tc.batch_size")));
  c.steps_per_epoch = std::stoi(meta_at(meta, "tc.steps_per_epoch"));
  c.checkpoint_every = std::stoi(meta_at(meta, "tc.checkpoint_every"));
  c.same_batch_two_steps = meta_at(meta, "tc.same_batch_two_steps") == "1";
  c.augment_hflip = meta_at(meta, "tc.augment_hflip") == "1";
  c.seed = std::stoull(meta_at(meta, "tc.seed"));
  c.backbone_weights_path = meta_at(meta, "tc.backbone_weights_path");
  return c;
}

// ---------------------------------------------------------------------------
// TrainState

TrainState::TrainState(const TrainConfig& config, int num_locations)
    : config_(config), num_locations_(num_locations) {
  config_.encoder.validate();
  config_.schedule.validate();
  require<UsageError>(config_.batch_size >= 2, "train: batch_size must be >= 2");
  require<UsageError>(num_locations >= 2, "train: need at least 2 locations");

  Rng enc_rng(derive_seed(config_.seed, "init.encoder"));
  encoder_ = Encoder(config_.encoder, enc_rng);
  Rng cls_rng(derive_seed(config_.seed, "init.classifier"));
  classifier_ = LocationClassifier(static_cast<std::size_t>(config_.encoder.d_embed),
                                   static_cast<std::size_t>(num_locations),
                                   config_.classifier_dropout, cls_rng);
  if (config_.discriminator_enabled) {
    DiscriminatorConfig dc;
    dc.in_channels = config_.encoder.feature_channels();
    dc.kernel = config_.disc_kernel;
    dc.pooling = config_.disc_pooling;
    dc.widths = config_.disc_widths;
    Rng disc_rng(derive_seed(config_.seed, "init.discriminator"));
    disc_ = std::make_unique<ViewDiscriminator>(dc, disc_rng);
  }

  batch_rng = Rng(derive_seed(config_.seed, "stream.batch"));
  dropout_rng = Rng(derive_seed(config_.seed, "stream.dropout"));
  augment_rng = Rng(derive_seed(config_.seed, "stream.augment"));

  backbone_init = "random(seed=" + std::to_string(config_.seed) + ")";

  std::vector<GroupedParam> enc_cls;
  {
    std::vector<nn::ParamRef> bb;
    encoder_.collect_backbone(bb);
    for (auto& p : bb) enc_cls.push_back({p, ParamGroup::kBackbone});
    std::vector<nn::ParamRef> rest;
    encoder_.collect_refine(rest);
    for (auto& p : rest) enc_cls.push_back({p, ParamGroup::kEncoderRest});
    std::vector<nn::ParamRef> cls;
    classifier_.collect("classifier", cls);
    for (auto& p : cls) enc_cls.push_back({p, ParamGroup::kClassifier});
  }
  sgd_ = SgdOptimizer(std::move(enc_cls), config_.optim.momentum, config_.optim.weight_decay);

  if (disc_) {
    std::vector<GroupedParam> dp;
    std::vector<nn::ParamRef> refs;
    disc_->collect("discriminator", refs);
    for (auto& p : refs) dp.push_back({p, ParamGroup::kDiscriminator});
    adam_ = AdamOptimizer(std::move(dp), config_.optim.adam_beta1, config_.optim.adam_beta2,
                          config_.optim.adam_eps);
  }

  for (ParamGroup g : {ParamGroup::kBackbone, ParamGroup::kEncoderRest, ParamGroup::kClassifier,
                       ParamGroup::kDiscriminator})
    incident_scale[g] = 1.0;
}

std::unique_ptr<TrainState> TrainState::create(const TrainConfig& config, int num_locations) {
  auto state = std::unique_ptr<TrainState>(new TrainState(config, num_locations));
  if (!config.backbone_weights_path.empty()) {
    const Checkpoint weights = read_checkpoint_file(config.backbone_weights_path);
    const std::size_t applied = state->encoder_.load_backbone_weights(weights.tensors);
    require<DataError>(applied > 0,
                       "no backbone tensors matched in " + config.backbone_weights_path);
    state->backbone_init = "pretrained(" + config.backbone_weights_path + ")";
    std::cerr << "[train] applied " << applied << " pretrained backbone tensors\n";
  }
  return state;
}

std::map<ParamGroup, double> TrainState::current_lrs() const {
  auto lrs = lrs_at(epoch, config_.schedule);
  for (auto& [group, lr] : lrs) lr *= incident_scale.at(group);
  return lrs;
}

void TrainState::handle_non_finite(const std::string& what,
                                   const std::vector<ParamGroup>& groups) {
  ++incident_count;
  std::string msg = "non-finite " + what + " at epoch " + std::to_string(epoch) + " step " +
                    std::to_string(global_step);
  incidents_.push_back(msg);
  std::cerr << "[train] incident: " << msg << "\n";
  require<RuntimeFailure>(incident_count < 2,
                          "aborting: repeated non-finite loss (" + msg + ")");
  for (ParamGroup g : groups) incident_scale[g] *= 0.5;
}

double TrainState::run_discriminator_step(const std::vector<ImageSample>& batch) {
  require(disc_ != nullptr, "run_discriminator_step: discriminator disabled");
  const Tensor x = batch_to_nchw(batch, config_.encoder.image_size);
  const auto views = batch_views(batch);

  // Feature maps recomputed without gradient into the encoder; inference-mode
  // normalization so encoder state is untouched.
  FeatureMaps maps = encoder_.forward_maps(x, nn::Mode::kEval, false);
  ViewProbs q = disc_->forward(maps, true);
  const double loss = view_loss(q, views);
  if (!std::isfinite(loss)) {
    handle_non_finite("view loss", {ParamGroup::kDiscriminator});
    return loss;
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  Tensor dlogits = view_loss_logit_grad(q, views, scale);
  disc_->backward(dlogits);
  const auto lrs = current_lrs();
  adam_.step({{ParamGroup::kDiscriminator, lrs.at(ParamGroup::kDiscriminator)}});
  std::vector<nn::ParamRef> dp;
  disc_->collect("discriminator", dp);
  nn::zero_grads(dp);
  return loss;
}

std::pair<double, double> TrainState::run_encoder_step(const std::vector<ImageSample>& batch,
                                                       double alpha) {
  const Tensor x = batch_to_nchw(batch, config_.encoder.image_size);
  const auto views = batch_views(batch);
  const auto labels = batch_labels(batch);
  const double scale = 1.0 / static_cast<double>(batch.size());
  const bool adversarial = disc_ != nullptr && alpha > 0.0;

  EncodeResult enc = encoder_.forward(x, nn::Mode::kTrain, true);
  LocationProbs probs = classifier_.forward(enc.parts, nn::Mode::kTrain, dropout_rng, true);
  const double l_loc = location_loss(probs, labels);

  double l_adv = 0.0;
  ViewProbs q;
  if (disc_ != nullptr) {
    q = disc_->forward(enc.maps, adversarial);
    l_adv = adversarial_loss(q, views);
  }
  const double combined = combined_loss(l_loc, l_adv, alpha);
  if (!std::isfinite(combined)) {
    handle_non_finite("combined loss",
                      {ParamGroup::kBackbone, ParamGroup::kEncoderRest, ParamGroup::kClassifier});
    return {l_loc, l_adv};
  }

  std::vector<Tensor> part_grads = classifier_.backward(labels, scale);
  Tensor maps_grad;
  if (adversarial) {
    // The adversarial gradient flows through the discriminator into the
    // feature maps only; its parameter gradients are discarded below.
    Tensor dlogits = adversarial_loss_logit_grad(q, views, alpha * scale);
    maps_grad = disc_->backward(dlogits);
  }
  encoder_.backward(part_grads, adversarial ? &maps_grad : nullptr);

  const auto lrs = current_lrs();
  sgd_.step({{ParamGroup::kBackbone, lrs.at(ParamGroup::kBackbone)},
             {ParamGroup::kEncoderRest, lrs.at(ParamGroup::kEncoderRest)},
             {ParamGroup::kClassifier, lrs.at(ParamGroup::kClassifier)}});

  nn::zero_grads(encoder_classifier_params());
  if (disc_ != nullptr) {
    std::vector<nn::ParamRef> dp;
    disc_->collect("discriminator", dp);
    nn::zero_grads(dp);  // accumulated during the adversarial backward, never applied
  }
  return {l_loc, l_adv};
}

LossReport TrainState::train_step(const std::vector<ImageSample>& step1_batch,
                                  const std::vector<ImageSample>& step2_batch) {
  const double alpha = current_alpha();
  double l_view = 0.0;
  if (disc_ != nullptr) l_view = run_discriminator_step(step1_batch);
  const auto [l_loc, l_adv] = run_encoder_step(step2_batch, alpha);
  ++global_step;
  return make_loss_report(l_loc, l_view, l_adv, alpha, step2_batch.size());
}

std::vector<nn::ParamRef> TrainState::encoder_classifier_params() {
  std::vector<nn::ParamRef> out;
  encoder_.collect_backbone(out);
  encoder_.collect_refine(out);
  classifier_.collect("classifier", out);
  return out;
}

std::vector<nn::ParamRef> TrainState::discriminator_params() {
  std::vector<nn::ParamRef> out;
  if (disc_) disc_->collect("discriminator", out);
  return out;
}

std::vector<nn::ParamRef> TrainState::all_params() {
  auto out = encoder_classifier_params();
  auto dp = discriminator_params();
  out.insert(out.end(), dp.begin(), dp.end());
  return out;
}

std::vector<nn::BufferRef> TrainState::model_buffers() {
  std::vector<nn::BufferRef> out;
  encoder_.collect_buffers(out);
  return out;
}

Checkpoint TrainState::to_checkpoint(const std::map<std::string, std::string>& extra_metadata) {
  Checkpoint ck;
  ck.metadata = config_.to_metadata();
  ck.metadata["num_locations"] = std::to_string(num_locations_);
  ck.metadata["epoch"] = std::to_string(epoch);
  ck.metadata["global_step"] = std::to_string(global_step);
  ck.metadata["incident_count"] = std::to_string(incident_count);
  for (const auto& [group, s] : incident_scale)
    ck.metadata[std::string("incident_scale.") + param_group_name(group)] = format_double(s);
  ck.metadata["rng.batch"] = batch_rng.serialize();
  ck.metadata["rng.dropout"] = dropout_rng.serialize();
  ck.metadata["rng.augment"] = augment_rng.serialize();
  ck.metadata["backbone_init"] = backbone_init;
  for (const auto& [k, v] : extra_metadata) ck.metadata[k] = v;

  for (const auto& p : all_params()) ck.tensors[p.path] = *p.value;
  for (const auto& b : model_buffers()) ck.tensors[b.path] = *b.value;
  for (const auto& b : sgd_.state_buffers()) ck.tensors[b.path] = *b.value;
  if (disc_)
    for (const auto& b : adam_.state_buffers()) ck.tensors[b.path] = *b.value;
  return ck;
}

std::unique_ptr<TrainState> TrainState::restore(const Checkpoint& checkpoint) {
  const TrainConfig config = TrainConfig::from_metadata(checkpoint.metadata);
  const int num_locations = std::stoi(meta_at(checkpoint.metadata, "num_locations"));
  // Plain construction: pretrained backbone weights (if any) are already baked
  // into the checkpoint tensors.
  auto state = std::unique_ptr<TrainState>(new TrainState(config, num_locations));

  const auto apply = [&checkpoint](const std::string& path, Tensor* dst) {
    const auto it = checkpoint.tensors.find(path);
    require<DataError>(it != checkpoint.tensors.end(), "checkpoint missing tensor: " + path);
    require<DataError>(it->second.same_shape(*dst),
                       "checkpoint tensor shape mismatch for " + path + ": stored " +
                           it->second.shape_str() + " vs model " + dst->shape_str());
    *dst = it->second;
  };

  std::size_t expected = 0;
  for (const auto& p : state->all_params()) {
    apply(p.path, p.value);
    ++expected;
  }
  for (const auto& b : state->model_buffers()) {
    apply(b.path, b.value);
    ++expected;
  }
  for (const auto& b : state->sgd_.state_buffers()) {
    apply(b.path, b.value);
    ++expected;
  }
  if (state->disc_) {
    for (const auto& b : state->adam_.state_buffers()) {
      apply(b.path, b.value);
      ++expected;
    }
    state->adam_.finish_load();
  }
  require<DataError>(expected == checkpoint.tensors.size(),
                     "checkpoint holds " + std::to_string(checkpoint.tensors.size()) +
                         " tensors but the model expects " + std::to_string(expected));

  state->epoch = std::stoi(meta_at(checkpoint.metadata, "epoch"));
  state->global_step = std::stoll(meta_at(checkpoint.metadata, "global_step"));
  state->incident_count = std::stoi(meta_at(checkpoint.metadata, "incident_count"));
  for (ParamGroup g : {ParamGroup::kBackbone, ParamGroup::kEncoderRest, ParamGroup::kClassifier,
                       ParamGroup::kDiscriminator})
    state->incident_scale[g] = parse_double(
        meta_at(checkpoint.metadata, std::string("incident_scale.") + param_group_name(g)));
  state->batch_rng.deserialize(meta_at(checkpoint.metadata, "rng.batch"));
  state->dropout_rng.deserialize(meta_at(checkpoint.metadata, "rng.dropout"));
  state->augment_rng.deserialize(meta_at(checkpoint.metadata, "rng.augment"));
  state->backbone_init = meta_at(checkpoint.metadata, "backbone_init");
  return state;
}

// ---------------------------------------------------------------------------
// Epoch loop

const char* kTrainLogHeader =
    "epoch,step,location_loss,view_loss,adversarial_loss,combined_loss,alpha,"
    "lr_backbone,lr_encoder_rest,lr_classifier,lr_discriminator,batch_size";

TrainResult train(std::unique_ptr<TrainState> state, const Dataset& train_data,
                  const std::filesystem::path& out_dir,
                  const std::map<std::string, std::string>& extra_metadata) {
  require(state != nullptr, "train: null state");
  const TrainConfig& cfg = state->config();
  require<DataError>(!train_data.samples.empty(), "train: empty training dataset");
  require<UsageError>(train_data.num_locations == state->num_locations(),
                      "train: dataset location count does not match the model");

  std::filesystem::create_directories(out_dir);
  const auto log_path = out_dir / "train_log.csv";
  std::ofstream log(log_path, state->epoch > 0 ? std::ios::app : std::ios::trunc);
  require<RuntimeFailure>(log.good(), "cannot open training log: " + log_path.string());
  if (state->epoch == 0) log << kTrainLogHeader << "\n";

  const int steps_per_epoch =
      cfg.steps_per_epoch > 0
          ? cfg.steps_per_epoch
          : std::max<int>(1, static_cast<int>(train_data.size() / cfg.batch_size));

  const auto draw_batch = [&](Rng& rng) {
    auto batch = sample_batch(train_data, cfg.batch_size, rng);
    if (cfg.augment_hflip) {
      for (auto& sample : batch)
        if (state->augment_rng.bernoulli(0.5)) hflip_image(sample.pixels);
    }
    return batch;
  };

  TrainResult result;
  while (state->epoch < cfg.epochs) {
    const int epoch = state->epoch;
    for (int step = 0; step < steps_per_epoch; ++step) {
      const auto lrs = state->current_lrs();
      const auto batch1 = draw_batch(state->batch_rng);
      LossReport report;
      if (cfg.same_batch_two_steps) {
        report = state->train_step(batch1);
      } else {
        const auto batch2 = draw_batch(state->batch_rng);
        report = state->train_step(batch1, batch2);
      }
      log << epoch << ',' << step << ',' << format_double(report.location_loss) << ','
          << format_double(report.view_loss) << ',' << format_double(report.adversarial_loss)
          << ',' << format_double(report.combined) << ',' << format_double(report.alpha) << ','
          << format_double(lrs.at(ParamGroup::kBackbone)) << ','
          << format_double(lrs.at(ParamGroup::kEncoderRest)) << ','
          << format_double(lrs.at(ParamGroup::kClassifier)) << ','
          << format_double(lrs.at(ParamGroup::kDiscriminator)) << ',' << report.batch_size
          << "\n";
    }
    state->epoch = epoch + 1;
    if (cfg.checkpoint_every > 0 && state->epoch % cfg.checkpoint_every == 0 &&
        state->epoch < cfg.epochs) {
      char name[32];
      std::snprintf(name, sizeof name, "ckpt_epoch_%04d.bin", state->epoch);
      write_checkpoint_file(out_dir / name, state->to_checkpoint(extra_metadata));
    }
  }
  log.flush();

  if (!state->incidents().empty()) {
    std::ofstream inc(out_dir / "incidents.log");
    for (const auto& line : state->incidents()) inc << line << "\n";
  }

  result.final_checkpoint = out_dir / "ckpt_final.bin";
  write_checkpoint_file(result.final_checkpoint, state->to_checkpoint(extra_metadata));
  result.log_path = log_path;
  result.epochs_run = state->epoch;
  return result;
}

}  // namespace pvda
