#include "pvda/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pvda/common.hpp"

namespace pvda {

namespace {

const std::vector<Config::KeyDoc>& key_registry() {
  static const std::vector<Config::KeyDoc> kKeys = {
      {"data.kind", "toy", "dataset source: toy (synthetic) or tree (University-1652 layout)"},
      {"data.root", "", "root directory of the image tree (data.kind=tree)"},
      {"data.image_size", "256", "square input size for tree datasets (256 or 384)"},
      {"data.validate", "true", "decode-validate every file at load time"},
      {"toy.num_locations", "20", "training locations in the synthetic dataset"},
      {"toy.uav_per_location", "8", "UAV images per location (one satellite image each)"},
      {"toy.image_size", "32", "square input size for the synthetic dataset"},
      {"toy.view_shift_strength", "1.0", "strength of the global UAV-view appearance shift"},
      {"toy.eval_locations", "-1", "held-out eval locations; -1 means num_locations/2"},
      {"toy.gallery_distractors", "0", "extra gallery-only locations matching no query"},
      {"model.backbone", "resnet50", "feature backbone: resnet50 or tiny"},
      {"model.d_embed", "512", "dimension of each part embedding"},
      {"model.remove_final_downsample", "true",
       "drop the final stage's stride so 256 inputs give 16x16 maps"},
      {"model.tiny_channels", "8,16,32,64", "stage widths of the tiny backbone"},
      {"model.refine_depth", "1", "fully-connected layers per refinement branch (1 or 2)"},
      {"model.dropout", "0.5", "classifier dropout rate"},
      {"model.disc_pooling", "strided-conv",
       "discriminator spatial pooling: strided-conv, max-pool or avg-pool"},
      {"model.disc_kernel", "3", "discriminator conv kernel size"},
      {"model.disc_widths", "", "discriminator block widths; empty means Cf/2,Cf/4,Cf/8"},
      {"model.backbone_weights", "", "optional pretrained backbone tensor file"},
      {"train.epochs", "42", "total training epochs"},
      {"train.batch_size", "8", "samples per step (both views always present)"},
      {"train.steps_per_epoch", "0", "steps per epoch; 0 means floor(N/batch_size)"},
      {"train.checkpoint_every", "0", "epochs between periodic checkpoints; 0 means final only"},
      {"train.same_batch_two_steps", "true",
       "reuse one batch for both optimization steps of an iteration"},
      {"train.augment_hflip", "true", "random horizontal flip at train time"},
      {"train.discriminator", "true", "train the view discriminator (off = plain classification)"},
      {"sched.variant", "pvda", "schedule variant: pvda, constant_alpha or no_restart"},
      {"sched.alpha_init", "0.9", "initial adversarial-loss weight"},
      {"sched.alpha_step", "0.1", "alpha increase per period"},
      {"sched.alpha_period", "140", "epochs between alpha increases (and lr restarts)"},
      {"sched.max_alpha", "inf", "upper cap on alpha"},
      {"sched.lr_decay_factor", "0.8", "multiplicative lr decay"},
      {"sched.lr_decay_epochs", "60,120", "in-cycle epochs after which lr decays"},
      {"sched.no_restart_decay_epochs", "140,280,420",
       "absolute decay epochs for the no_restart variant"},
      {"lr.backbone", "0.001", "base learning rate of the backbone"},
      {"lr.encoder_rest", "0.01", "base learning rate of the refinement branches"},
      {"lr.classifier", "0.01", "base learning rate of the location classifier"},
      {"lr.discriminator", "0.002", "base learning rate of the view discriminator"},
      {"opt.momentum", "0.9", "SGD momentum (encoder + classifier)"},
      {"opt.weight_decay", "0.0005", "SGD weight decay"},
      {"opt.adam_beta1", "0.9", "Adam beta1 (discriminator)"},
      {"opt.adam_beta2", "0.999", "Adam beta2"},
      {"opt.adam_eps", "1e-8", "Adam epsilon"},
      {"eval.protocols", "uav-to-sat",
       "comma list of uav-to-sat, uav-to-sat-multi, sat-to-uav"},
      {"eval.per_query", "false", "also write per-query metrics CSV"},
      {"eval.dump_topk", "0", "write a ranked-result dump with this many entries per query"},
      {"eval.batch", "32", "descriptor extraction batch size"},
      {"ablate.seeds", "1", "comma list of seeds for the schedule-variant comparison"},
  };
  return kKeys;
}

}  // namespace

Config::Config() {
  for (const auto& kd : key_registry()) values_[kd.key] = kd.default_value;
}

const std::vector<Config::KeyDoc>& Config::documented_keys() { return key_registry(); }

void Config::set(const std::string& key, const std::string& value) {
  const auto it = values_.find(key);
  require<UsageError>(it != values_.end(), "unknown config key: " + key);
  it->second = value;
}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require<UsageError>(in.good(), "cannot open config file: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    const auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require<UsageError>(eq != std::string::npos, path.string() + ":" + std::to_string(line_no) +
                                                     ": expected key = value");
    set(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
  }
}

void Config::apply_override(const std::string& key_value) {
  const auto eq = key_value.find('=');
  require<UsageError>(eq != std::string::npos, "override must be key=value: " + key_value);
  set(key_value.substr(0, eq), key_value.substr(eq + 1));
}

void Config::apply_profile(const std::string& profile) {
  if (profile == "256" || profile == "384") {
    set("data.kind", "tree");
    set("data.image_size", profile);
    set("model.backbone", "resnet50");
  } else if (profile == "toy") {
    set("data.kind", "toy");
    set("model.backbone", "tiny");
    set("model.d_embed", "16");
    set("train.batch_size", "8");
    set("train.epochs", "42");
    set("train.augment_hflip", "false");
    set("sched.alpha_period", "14");
    set("sched.lr_decay_epochs", "6,12");
    set("sched.no_restart_decay_epochs", "14,28,42");
  } else {
    fail<UsageError>("unknown profile: " + profile + " (expected 256|384|toy)");
  }
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  require<UsageError>(it != values_.end(), "unknown config key: " + key);
  return it->second;
}

int Config::get_int(const std::string& key) const {
  try {
    return std::stoi(get(key));
  } catch (const std::logic_error&) {
    fail<UsageError>("config key " + key + " is not an integer: " + get(key));
  }
}

std::uint64_t Config::get_u64(const std::string& key) const {
  try {
    return std::stoull(get(key));
  } catch (const std::logic_error&) {
    fail<UsageError>("config key " + key + " is not an unsigned integer: " + get(key));
  }
}

double Config::get_double(const std::string& key) const { return parse_double(get(key)); }

bool Config::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail<UsageError>("config key " + key + " is not a boolean: " + v);
}

std::vector<int> Config::get_int_list(const std::string& key) const {
  std::vector<int> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (const std::logic_error&) {
      fail<UsageError>("config key " + key + " has a non-integer entry: " + item);
    }
  }
  return out;
}

std::vector<std::size_t> Config::get_size_list(const std::string& key) const {
  std::vector<std::size_t> out;
  for (int v : get_int_list(key)) {
    require<UsageError>(v >= 0, "config key " + key + " has a negative entry");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::string Config::dump() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::string Config::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int Config::image_size() const {
  return get("data.kind") == "toy" ? get_int("toy.image_size") : get_int("data.image_size");
}

TrainConfig Config::to_train_config(std::uint64_t seed) const {
  TrainConfig tc;
  tc.encoder.backbone = backbone_from_name(get("model.backbone"));
  tc.encoder.image_size = image_size();
  tc.encoder.d_embed = get_int("model.d_embed");
  tc.encoder.remove_final_downsample = get_bool("model.remove_final_downsample");
  tc.encoder.tiny_channels = get_size_list("model.tiny_channels");
  tc.encoder.refine_depth = get_int("model.refine_depth");
  tc.classifier_dropout = get_double("model.dropout");
  tc.disc_kernel = get_int("model.disc_kernel");
  tc.disc_pooling = disc_pooling_from_name(get("model.disc_pooling"));
  tc.disc_widths = get_size_list("model.disc_widths");
  tc.discriminator_enabled = get_bool("train.discriminator");
  tc.schedule.variant = schedule_variant_from_name(get("sched.variant"));
  tc.schedule.alpha_init = get_double("sched.alpha_init");
  tc.schedule.alpha_step = get_double("sched.alpha_step");
  tc.schedule.alpha_period_epochs = get_int("sched.alpha_period");
  tc.schedule.max_alpha = get_double("sched.max_alpha");
  tc.schedule.lr_decay_factor = get_double("sched.lr_decay_factor");
  tc.schedule.lr_decay_epochs_within_cycle = get_int_list("sched.lr_decay_epochs");
  tc.schedule.no_restart_decay_epochs = get_int_list("sched.no_restart_decay_epochs");
  tc.schedule.base_lrs[ParamGroup::kBackbone] = get_double("lr.backbone");
  tc.schedule.base_lrs[ParamGroup::kEncoderRest] = get_double("lr.encoder_rest");
  tc.schedule.base_lrs[ParamGroup::kClassifier] = get_double("lr.classifier");
  tc.schedule.base_lrs[ParamGroup::kDiscriminator] = get_double("lr.discriminator");
  tc.optim.momentum = get_double("opt.momentum");
  tc.optim.weight_decay = get_double("opt.weight_decay");
  tc.optim.adam_beta1 = get_double("opt.adam_beta1");
  tc.optim.adam_beta2 = get_double("opt.adam_beta2");
  tc.optim.adam_eps = get_double("opt.adam_eps");
  tc.epochs = get_int("train.epochs");
  tc.batch_size = static_cast<std::size_t>(get_int("train.batch_size"));
  tc.steps_per_epoch = get_int("train.steps_per_epoch");
  tc.checkpoint_every = get_int("train.checkpoint_every");
  tc.same_batch_two_steps = get_bool("train.same_batch_two_steps");
  tc.augment_hflip = get_bool("train.augment_hflip");
  tc.seed = seed;
  tc.backbone_weights_path = get("model.backbone_weights");
  return tc;
}

ToyConfig Config::to_toy_config(std::uint64_t seed) const {
  ToyConfig c;
  c.num_locations = get_int("toy.num_locations");
  c.uav_per_location = get_int("toy.uav_per_location");
  c.image_size = get_int("toy.image_size");
  c.view_shift_strength = get_double("toy.view_shift_strength");
  c.eval_locations = get_int("toy.eval_locations");
  c.gallery_distractors = get_int("toy.gallery_distractors");
  c.seed = seed;
  return c;
}

}  // namespace pvda
