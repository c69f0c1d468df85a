#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <vector>

#include "pvda/config.hpp"
#include "pvda/retrieval.hpp"
#include "pvda/training.hpp"
#include "view_probe.hpp"

using namespace pvda;

// scratch experiment driver for tuning the toy protocol; replaced by the CLI

namespace {

struct RunOutcome {
  double r1, ap, probe;
  double seconds;
};

RunOutcome run_variant(std::uint64_t seed, const char* variant, int epochs) {
  Config cfg;
  cfg.apply_profile("toy");
  ToyConfig toy = cfg.to_toy_config(seed);
  toy.gallery_distractors = 30;
  auto data = generate_toy_dataset(toy);

  TrainConfig tc = cfg.to_train_config(seed);
  tc.epochs = epochs;
  if (std::string(variant) == "alpha0") {
    tc.schedule.alpha_init = 0.0;
    tc.schedule.alpha_step = 0.0;
  } else if (std::string(variant) == "constant_alpha") {
    tc.schedule.variant = ScheduleVariant::kConstantAlpha;
  } else if (std::string(variant) == "no_restart") {
    tc.schedule.variant = ScheduleVariant::kNoRestart;
  }
  auto state = TrainState::create(tc, data.train.num_locations);
  const auto t0 = std::chrono::steady_clock::now();
  char dir[96];
  std::snprintf(dir, sizeof dir, "/tmp/pvda_exp_%s_%llu", variant, (unsigned long long)seed);
  auto result = train(std::move(state), data.train, dir);
  const auto t1 = std::chrono::steady_clock::now();

  auto restored = TrainState::restore(read_checkpoint_file(result.final_checkpoint));
  MetricsReport rep =
      evaluate(restored->encoder(), data.query, data.gallery, Protocol::kUavToSatSingle);

  std::vector<int> ytr, yte;
  auto xtr = testsupport::gap_map_features(restored->encoder(), data.train, &ytr);
  auto xte = testsupport::gap_map_features(restored->encoder(), data.query, &yte);
  auto xg = testsupport::gap_map_features(restored->encoder(), data.gallery, &yte);
  xte.insert(xte.end(), xg.begin(), xg.end());
  const double probe = testsupport::view_probe_balanced_accuracy(xtr, ytr, xte, yte);
  return {rep.recall_at_1, rep.mean_ap, probe,
          std::chrono::duration<double>(t1 - t0).count()};
}

}  // namespace

int main(int argc, char** argv) {
  const char* variant = argc > 1 ? argv[1] : "pvda";
  const int epochs = argc > 2 ? std::atoi(argv[2]) : 42;
  const int seed_lo = argc > 3 ? std::atoi(argv[3]) : 1;
  const int seed_hi = argc > 4 ? std::atoi(argv[4]) : seed_lo + 2;
  for (int seed = seed_lo; seed <= seed_hi; ++seed) {
    auto r = run_variant(static_cast<std::uint64_t>(seed), variant, epochs);
    std::printf("%s seed %d: R@1=%.3f AP=%.3f probe=%.3f (%.1fs)\n", variant, seed, r.r1, r.ap,
                r.probe, r.seconds);
    std::fflush(stdout);
  }
  return 0;
}
