#include "pvda/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pvda/common.hpp"

namespace pvda {

ScheduleVariant schedule_variant_from_name(const std::string& name) {
  if (name == "pvda") return ScheduleVariant::kPvda;
  if (name == "constant_alpha") return ScheduleVariant::kConstantAlpha;
  if (name == "no_restart") return ScheduleVariant::kNoRestart;
  fail<UsageError>("unknown schedule variant: " + name +
                   " (expected pvda|constant_alpha|no_restart)");
}

const char* schedule_variant_name(ScheduleVariant v) {
  switch (v) {
    case ScheduleVariant::kPvda: return "pvda";
    case ScheduleVariant::kConstantAlpha: return "constant_alpha";
    case ScheduleVariant::kNoRestart: return "no_restart";
  }
  return "?";
}

void ScheduleConfig::validate() const {
  require<UsageError>(alpha_init >= 0.0, "schedule: alpha_init must be >= 0");
  require<UsageError>(alpha_step >= 0.0, "schedule: alpha_step must be >= 0");
  require<UsageError>(alpha_period_epochs > 0, "schedule: alpha_period_epochs must be positive");
  require<UsageError>(lr_decay_factor > 0.0, "schedule: lr_decay_factor must be positive");
  for (int d : lr_decay_epochs_within_cycle)
    require<UsageError>(d > 0 && d < alpha_period_epochs,
                        "schedule: in-cycle decay epochs must lie inside the alpha period");
  for (const auto& [group, lr] : base_lrs)
    require<UsageError>(lr > 0.0, std::string("schedule: base lr for ") + param_group_name(group) +
                                      " must be positive");
}

double alpha_at(int epoch, const ScheduleConfig& cfg) {
  require(epoch >= 0, "alpha_at: epoch must be >= 0");
  if (cfg.variant == ScheduleVariant::kConstantAlpha) return cfg.alpha_init;
  const double alpha = cfg.alpha_init + cfg.alpha_step * (epoch / cfg.alpha_period_epochs);
  return std::min(alpha, cfg.max_alpha);
}

double lr_at(int epoch, ParamGroup group, const ScheduleConfig& cfg) {
  require(epoch >= 0, "lr_at: epoch must be >= 0");
  const auto it = cfg.base_lrs.find(group);
  require<UsageError>(it != cfg.base_lrs.end(),
                      std::string("lr_at: unknown parameter group ") + param_group_name(group));
  const double base = it->second;

  int decays = 0;
  if (cfg.variant == ScheduleVariant::kNoRestart) {
    for (int d : cfg.no_restart_decay_epochs)
      if (epoch >= d) ++decays;
  } else {
    const int e = epoch % cfg.alpha_period_epochs;
    for (int d : cfg.lr_decay_epochs_within_cycle)
      if (e >= d) ++decays;
  }
  return base * std::pow(cfg.lr_decay_factor, decays);
}

std::map<ParamGroup, double> lrs_at(int epoch, const ScheduleConfig& cfg) {
  std::map<ParamGroup, double> out;
  for (const auto& [group, base] : cfg.base_lrs) out[group] = lr_at(epoch, group, cfg);
  return out;
}

}  // namespace pvda
