#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pvda/checkpoint.hpp"
#include "pvda/dataset.hpp"
#include "pvda/encoder.hpp"
#include "pvda/heads.hpp"
#include "pvda/losses.hpp"
#include "pvda/optim.hpp"
#include "pvda/schedule.hpp"

namespace pvda {

struct OptimConfig {
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct TrainConfig {
  EncoderConfig encoder;
  double classifier_dropout = 0.5;
  int disc_kernel = 3;
  DiscPooling disc_pooling = DiscPooling::kStridedConv;
  std::vector<std::size_t> disc_widths;  // empty -> Cf/2, Cf/4, Cf/8
  bool discriminator_enabled = true;
  ScheduleConfig schedule;
  OptimConfig optim;
  int epochs = 42;
  std::size_t batch_size = 8;
  int steps_per_epoch = 0;   // 0 -> floor(N / batch_size)
  int checkpoint_every = 0;  // epochs; 0 -> final checkpoint only
  bool same_batch_two_steps = true;
  bool augment_hflip = true;
  std::uint64_t seed = 1;
  std::string backbone_weights_path;

  std::map<std::string, std::string> to_metadata() const;
  static TrainConfig from_metadata(const std::map<std::string, std::string>& meta);
};

// All mutable training state: module parameters, optimizer state, epoch
// counter, and the named rng streams. Optimizers hold pointers into the
// modules, so the state is pinned (create via the factories).
class TrainState {
 public:
  static std::unique_ptr<TrainState> create(const TrainConfig& config, int num_locations);
  static std::unique_ptr<TrainState> restore(const Checkpoint& checkpoint);

  TrainState(const TrainState&) = delete;
  TrainState& operator=(const TrainState&) = delete;

  const TrainConfig& config() const { return config_; }
  int num_locations() const { return num_locations_; }

  Encoder& encoder() { return encoder_; }
  LocationClassifier& classifier() { return classifier_; }
  bool has_discriminator() const { return disc_ != nullptr; }
  ViewDiscriminator& discriminator() { return *disc_; }

  int epoch = 0;
  std::int64_t global_step = 0;
  Rng batch_rng, dropout_rng, augment_rng;

  // One full two-step iteration on the given batch(es); both batches are the
  // same object under the default same-batch policy.
  LossReport train_step(const std::vector<ImageSample>& step1_batch,
                        const std::vector<ImageSample>& step2_batch);
  LossReport train_step(const std::vector<ImageSample>& batch) {
    return train_step(batch, batch);
  }

  // Step 1: encoder and classifier frozen, discriminator minimizes the view
  // loss on feature maps recomputed without gradient into the encoder.
  // Returns the summed view loss.
  double run_discriminator_step(const std::vector<ImageSample>& batch);

  // Step 2: discriminator frozen, encoder + classifier minimize
  // location + alpha * adversarial. Returns (location, adversarial) sums.
  std::pair<double, double> run_encoder_step(const std::vector<ImageSample>& batch, double alpha);

  double current_alpha() const { return alpha_at(epoch, config_.schedule); }
  std::map<ParamGroup, double> current_lrs() const;

  Checkpoint to_checkpoint(const std::map<std::string, std::string>& extra_metadata = {});

  std::vector<nn::ParamRef> encoder_classifier_params();
  std::vector<nn::ParamRef> discriminator_params();
  std::vector<nn::ParamRef> all_params();
  std::vector<nn::BufferRef> model_buffers();

  const std::vector<std::string>& incidents() const { return incidents_; }
  int incident_count = 0;
  std::map<ParamGroup, double> incident_scale;
  std::string backbone_init;

 private:
  TrainState(const TrainConfig& config, int num_locations);

  void handle_non_finite(const std::string& what, const std::vector<ParamGroup>& groups);

  TrainConfig config_;
  int num_locations_ = 0;
  Rng init_rng_unused_;  // keeps seed derivation layout stable
  Encoder encoder_;
  LocationClassifier classifier_;
  std::unique_ptr<ViewDiscriminator> disc_;
  SgdOptimizer sgd_;
  AdamOptimizer adam_;
  std::vector<std::string> incidents_;
};

struct TrainResult {
  std::filesystem::path final_checkpoint;
  std::filesystem::path log_path;
  int epochs_run = 0;
};

// Epoch loop: deterministic batch sampling, optional horizontal-flip
// augmentation, per-step CSV logging (sums as in the objective, plus the
// batch size used for mean normalization), periodic + final checkpoints.
TrainResult train(std::unique_ptr<TrainState> state, const Dataset& train_data,
                  const std::filesystem::path& out_dir,
                  const std::map<std::string, std::string>& extra_metadata = {});

extern const char* kTrainLogHeader;

}  // namespace pvda
