#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "pvda/optim.hpp"

namespace pvda {

// Training schedule variants:
//   kPvda          - alpha grows by alpha_step every alpha_period epochs and
//                    the learning rate warm-restarts at each increase, with
//                    step decay inside the cycle.
//   kConstantAlpha - alpha stays at alpha_init; warm restarts unchanged.
//   kNoRestart     - alpha grows but the learning rate never resets; decay is
//                    applied at fixed absolute epochs instead.
enum class ScheduleVariant { kPvda, kConstantAlpha, kNoRestart };

ScheduleVariant schedule_variant_from_name(const std::string& name);
const char* schedule_variant_name(ScheduleVariant v);

struct ScheduleConfig {
  double alpha_init = 0.9;
  double alpha_step = 0.1;
  int alpha_period_epochs = 140;
  double max_alpha = std::numeric_limits<double>::infinity();
  double lr_decay_factor = 0.8;
  std::vector<int> lr_decay_epochs_within_cycle = {60, 120};
  // Absolute decay epochs for the no-restart variant.
  std::vector<int> no_restart_decay_epochs = {140, 280, 420};
  std::map<ParamGroup, double> base_lrs = {
      {ParamGroup::kBackbone, 0.001},
      {ParamGroup::kEncoderRest, 0.01},
      {ParamGroup::kClassifier, 0.01},
      {ParamGroup::kDiscriminator, 0.002},
  };
  ScheduleVariant variant = ScheduleVariant::kPvda;

  void validate() const;
};

// Adversarial-loss weight at the given epoch.
double alpha_at(int epoch, const ScheduleConfig& cfg);

// Learning rate for one parameter group at the given epoch.
double lr_at(int epoch, ParamGroup group, const ScheduleConfig& cfg);

std::map<ParamGroup, double> lrs_at(int epoch, const ScheduleConfig& cfg);

}  // namespace pvda
