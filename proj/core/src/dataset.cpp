#include "pvda/dataset.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "pvda/common.hpp"

namespace pvda {

namespace fs = std::filesystem;

const char* view_name(View v) { return v == View::kUav ? "uav" : "satellite"; }

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kQuery: return "query";
    case Split::kGallery: return "gallery";
  }
  return "?";
}

TreeSplit tree_split_from_name(const std::string& name) {
  if (name == "train") return TreeSplit::kTrain;
  if (name == "query_drone") return TreeSplit::kQueryDrone;
  if (name == "gallery_satellite") return TreeSplit::kGallerySatellite;
  if (name == "query_satellite") return TreeSplit::kQuerySatellite;
  if (name == "gallery_drone") return TreeSplit::kGalleryDrone;
  fail<UsageError>("unknown dataset split: " + name +
                   " (expected train|query_drone|gallery_satellite|query_satellite|gallery_drone)");
}

// ---------------------------------------------------------------------------
// Image decode / resize

namespace {

constexpr double kToyNoiseSigma = 0.02;

bool has_image_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  static const std::set<std::string> kKnown = {".jpg", ".jpeg", ".png", ".bmp", ".tif", ".tiff"};
  return kKnown.count(ext) > 0;
}

Tensor mat_to_tensor(const cv::Mat& bgr, int image_size) {
  cv::Mat resized;
  if (bgr.rows != image_size || bgr.cols != image_size) {
    cv::resize(bgr, resized, cv::Size(image_size, image_size), 0, 0, cv::INTER_LINEAR);
  } else {
    resized = bgr;
  }
  Tensor out({static_cast<std::size_t>(image_size), static_cast<std::size_t>(image_size), 3});
  for (int i = 0; i < image_size; ++i) {
    const auto* row = resized.ptr<cv::Vec3b>(i);
    for (int j = 0; j < image_size; ++j) {
      out(i, j, 0) = row[j][2] / 255.0;  // BGR -> RGB
      out(i, j, 1) = row[j][1] / 255.0;
      out(i, j, 2) = row[j][0] / 255.0;
    }
  }
  return out;
}

Tensor decode_image(const std::string& path, int image_size) {
  cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
  require<DataError>(!bgr.empty(), "unreadable image: " + path);
  return mat_to_tensor(bgr, image_size);
}

cv::Mat tensor_to_mat(const Tensor& pixels) {
  const int h = static_cast<int>(pixels.dim(0));
  const int w = static_cast<int>(pixels.dim(1));
  cv::Mat bgr(h, w, CV_8UC3);
  for (int i = 0; i < h; ++i) {
    auto* row = bgr.ptr<cv::Vec3b>(i);
    for (int j = 0; j < w; ++j) {
      const auto clamp8 = [](double v) {
        return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      };
      row[j][2] = clamp8(pixels(i, j, 0));
      row[j][1] = clamp8(pixels(i, j, 1));
      row[j][0] = clamp8(pixels(i, j, 2));
    }
  }
  return bgr;
}

}  // namespace

// ---------------------------------------------------------------------------
// University-1652-format loader

namespace {

struct Subtree {
  fs::path dir;
  View view;
};

std::vector<Subtree> subtrees_for(const fs::path& root, TreeSplit split) {
  switch (split) {
    case TreeSplit::kTrain:
      return {{root / "train" / "drone", View::kUav},
              {root / "train" / "satellite", View::kSatellite}};
    case TreeSplit::kQueryDrone:
      return {{root / "test" / "query_drone", View::kUav}};
    case TreeSplit::kGallerySatellite:
      return {{root / "test" / "gallery_satellite", View::kSatellite}};
    case TreeSplit::kQuerySatellite:
      return {{root / "test" / "query_satellite", View::kSatellite}};
    case TreeSplit::kGalleryDrone:
      return {{root / "test" / "gallery_drone", View::kUav}};
  }
  fail<UsageError>("bad TreeSplit");
}

Split dataset_split_for(TreeSplit split) {
  switch (split) {
    case TreeSplit::kTrain: return Split::kTrain;
    case TreeSplit::kQueryDrone:
    case TreeSplit::kQuerySatellite: return Split::kQuery;
    default: return Split::kGallery;
  }
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool dirs_only) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (dirs_only && entry.is_directory()) out.push_back(entry.path());
    if (!dirs_only && entry.is_regular_file()) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Dataset load_university1652(const fs::path& root, TreeSplit split, const LoadOptions& options,
                            LoadReport* report) {
  require<DataError>(fs::exists(root), "dataset root does not exist: " + root.string());
  const auto subtrees = subtrees_for(root, split);
  for (const auto& st : subtrees)
    require<DataError>(fs::exists(st.dir), "missing dataset directory: " + st.dir.string());

  // Union of class directory names across subtrees, sorted, defines the ids.
  std::set<std::string> class_names;
  for (const auto& st : subtrees)
    for (const auto& dir : sorted_entries(st.dir, true)) class_names.insert(dir.filename().string());
  require<DataError>(!class_names.empty(), "no class directories under " + root.string());

  Dataset ds;
  ds.split = dataset_split_for(split);
  ds.image_size = options.image_size;
  ds.location_names.assign(class_names.begin(), class_names.end());
  ds.num_locations = static_cast<int>(ds.location_names.size());
  std::map<std::string, int> id_of;
  for (int i = 0; i < ds.num_locations; ++i) id_of[ds.location_names[i]] = i;

  LoadReport local;
  local.root = root.string();
  local.split = [&] {
    switch (split) {
      case TreeSplit::kTrain: return "train";
      case TreeSplit::kQueryDrone: return "query_drone";
      case TreeSplit::kGallerySatellite: return "gallery_satellite";
      case TreeSplit::kQuerySatellite: return "query_satellite";
      case TreeSplit::kGalleryDrone: return "gallery_drone";
    }
    return "?";
  }();
  local.num_locations = class_names.size();

  // First pass: count candidate files so we know whether pixels fit eagerly.
  std::size_t total_files = 0;
  for (const auto& st : subtrees)
    for (const auto& class_dir : sorted_entries(st.dir, true))
      for (const auto& file : sorted_entries(class_dir, false))
        if (has_image_extension(file)) ++total_files;
  const bool eager = total_files <= options.max_eager_images;

  for (const auto& st : subtrees) {
    for (const auto& class_dir : sorted_entries(st.dir, true)) {
      const int loc = id_of.at(class_dir.filename().string());
      std::size_t readable = 0, files = 0;
      for (const auto& file : sorted_entries(class_dir, false)) {
        if (!has_image_extension(file)) continue;
        ++files;
        ImageSample sample;
        sample.view = st.view;
        sample.location_id = loc;
        sample.source_path = file.string();
        if (options.validate || eager) {
          cv::Mat bgr = cv::imread(sample.source_path, cv::IMREAD_COLOR);
          if (bgr.empty()) {
            std::cerr << "[dataset] warning: skipping unreadable image " << sample.source_path
                      << "\n";
            local.skipped_files.push_back(sample.source_path);
            continue;
          }
          if (eager) sample.pixels = mat_to_tensor(bgr, options.image_size);
        }
        ++readable;
        if (st.view == View::kUav)
          ++local.loaded_uav;
        else
          ++local.loaded_satellite;
        ds.samples.push_back(std::move(sample));
      }
      require<DataError>(files > 0, "class directory with zero images: " + class_dir.string());
      require<DataError>(readable > 0,
                         "class directory with zero readable images: " + class_dir.string());
    }
  }

  if (report) *report = local;
  return ds;
}

std::string LoadReport::to_json() const {
  nlohmann::json j;
  j["root"] = root;
  j["split"] = split;
  j["num_locations"] = num_locations;
  j["loaded"] = {{"uav", loaded_uav}, {"satellite", loaded_satellite}};
  j["skipped_files"] = skipped_files;
  return j.dump(2);
}

void LoadReport::write(const fs::path& path) const {
  std::ofstream out(path);
  require<RuntimeFailure>(out.good(), "cannot write load report: " + path.string());
  out << to_json() << "\n";
}

// ---------------------------------------------------------------------------
// Toy generator

namespace {

// Bilinear upsample of a G x G x 3 grid to S x S x 3.
Tensor upsample_grid(const Tensor& grid, int size) {
  const int g = static_cast<int>(grid.dim(0));
  Tensor out({static_cast<std::size_t>(size), static_cast<std::size_t>(size), 3});
  const double scale = size > 1 ? static_cast<double>(g - 1) / (size - 1) : 0.0;
  for (int i = 0; i < size; ++i) {
    const double u = i * scale;
    const int u0 = std::min(static_cast<int>(u), g - 2);
    const double fu = u - u0;
    for (int j = 0; j < size; ++j) {
      const double v = j * scale;
      const int v0 = std::min(static_cast<int>(v), g - 2);
      const double fv = v - v0;
      for (int c = 0; c < 3; ++c) {
        const double a = grid(u0, v0, c) * (1 - fu) * (1 - fv) + grid(u0 + 1, v0, c) * fu * (1 - fv) +
                         grid(u0, v0 + 1, c) * (1 - fu) * fv + grid(u0 + 1, v0 + 1, c) * fu * fv;
        out(i, j, c) = a;
      }
    }
  }
  return out;
}

int reflect_index(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

// Rotate + scale about the image center with bilinear sampling and reflected
// borders. theta_deg == 0 and scale == 1 reproduce the input exactly.
Tensor warp_image(const Tensor& img, double theta_deg, double scale) {
  const int size = static_cast<int>(img.dim(0));
  if (theta_deg == 0.0 && scale == 1.0) return img;
  Tensor out(img.shape());
  const double c = (size - 1) / 2.0;
  const double theta = theta_deg * M_PI / 180.0;
  const double cos_t = std::cos(theta), sin_t = std::sin(theta);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const double y = i - c, x = j - c;
      // inverse map: rotate by -theta, divide by scale
      const double xs = (cos_t * x + sin_t * y) / scale + c;
      const double ys = (-sin_t * x + cos_t * y) / scale + c;
      const int x0 = static_cast<int>(std::floor(xs));
      const int y0 = static_cast<int>(std::floor(ys));
      const double fx = xs - x0, fy = ys - y0;
      const int xa = reflect_index(x0, size), xb = reflect_index(x0 + 1, size);
      const int ya = reflect_index(y0, size), yb = reflect_index(y0 + 1, size);
      for (int ch = 0; ch < 3; ++ch) {
        out(i, j, ch) = img(ya, xa, ch) * (1 - fx) * (1 - fy) + img(ya, xb, ch) * fx * (1 - fy) +
                        img(yb, xa, ch) * (1 - fx) * fy + img(yb, xb, ch) * fx * fy;
      }
    }
  }
  return out;
}

// Global UAV-view color shift, scaled by strength s: per-channel gains, a
// rotation of color space about the gray axis (s = 1 cycles R -> G -> B),
// and a fixed channel bias. The gains break the rotation's isometry, so no
// pointwise color invariant survives; a luminance-like direction stays
// highly correlated across views and carries location identity for an
// encoder that learns to align the two distributions.
void apply_view_color_shift(Tensor& img, double s) {
  if (s == 0.0) return;
  const double theta = s * (2.0 * M_PI / 3.0);
  const double c = std::cos(theta), k = std::sin(theta) / std::sqrt(3.0);
  const double a = (1.0 - c) / 3.0;
  // Rodrigues rotation about (1,1,1)/sqrt(3)
  const double m[3][3] = {
      {c + a, a - k, a + k},
      {a + k, c + a, a - k},
      {a - k, a + k, c + a},
  };
  const double gain[3] = {1.0 + 0.25 * s, 1.0 - 0.20 * s, 1.0};
  const double bias[3] = {0.18 * s, 0.04 * s, -0.14 * s};
  const std::size_t n = img.dim(0) * img.dim(1);
  double* p = img.data();
  for (std::size_t i = 0; i < n; ++i, p += 3) {
    const double r = (p[0] - 0.5) * gain[0];
    const double g = (p[1] - 0.5) * gain[1];
    const double b = (p[2] - 0.5) * gain[2];
    p[0] = m[0][0] * r + m[0][1] * g + m[0][2] * b + 0.5 + bias[0];
    p[1] = m[1][0] * r + m[1][1] * g + m[1][2] * b + 0.5 + bias[1];
    p[2] = m[2][0] * r + m[2][1] * g + m[2][2] * b + 0.5 + bias[2];
  }
}

void add_noise_and_clamp(Tensor& img, Rng& rng) {
  for (std::size_t i = 0; i < img.numel(); ++i)
    img[i] = std::clamp(img[i] + rng.normal(0.0, kToyNoiseSigma), 0.0, 1.0);
}

Tensor location_base_pattern(const ToyConfig& cfg, int global_loc) {
  Rng rng(derive_seed(cfg.seed, "toy.loc." + std::to_string(global_loc)));
  Tensor grid({4, 4, 3});
  for (std::size_t i = 0; i < grid.numel(); ++i) grid[i] = rng.uniform(0.15, 0.85);
  return upsample_grid(grid, cfg.image_size);
}

ImageSample make_satellite_sample(const ToyConfig& cfg, const Tensor& base, int global_loc,
                                  int local_id) {
  Rng rng(derive_seed(cfg.seed, "toy.sample." + std::to_string(global_loc) + ".sat"));
  const double s = cfg.view_shift_strength;
  // Satellites carry a slight resampling warp of their own so interpolation
  // blur does not become a view label.
  const double jitter_angle = rng.uniform(-2.0, 2.0) * s;
  const double jitter_scale = 1.0 + rng.uniform(-0.02, 0.02) * s;
  ImageSample out;
  out.view = View::kSatellite;
  out.location_id = local_id;
  out.pixels = warp_image(base, jitter_angle, jitter_scale);
  add_noise_and_clamp(out.pixels, rng);
  return out;
}

ImageSample make_uav_sample(const ToyConfig& cfg, const Tensor& base, int global_loc, int local_id,
                            int k) {
  Rng rng(derive_seed(cfg.seed,
                      "toy.sample." + std::to_string(global_loc) + ".uav" + std::to_string(k)));
  const double s = cfg.view_shift_strength;
  const double jitter_angle = rng.uniform(-5.0, 5.0) * s;
  const double jitter_scale = 1.0 + rng.uniform(-0.08, 0.08) * s;
  ImageSample out;
  out.view = View::kUav;
  out.location_id = local_id;
  out.pixels = warp_image(base, 3.0 * s + jitter_angle, jitter_scale);
  apply_view_color_shift(out.pixels, s);
  add_noise_and_clamp(out.pixels, rng);
  return out;
}

std::string toy_location_name(int global_loc) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "loc_%04d", global_loc);
  return buf;
}

}  // namespace

ToyDatasets generate_toy_dataset(const ToyConfig& config) {
  require<UsageError>(config.num_locations >= 2, "ToyConfig: num_locations must be >= 2");
  require<UsageError>(config.uav_per_location >= 1, "ToyConfig: uav_per_location must be >= 1");
  require<UsageError>(config.image_size >= 8, "ToyConfig: image_size must be >= 8");
  require<UsageError>(config.view_shift_strength >= 0.0,
                      "ToyConfig: view_shift_strength must be >= 0");

  const int train_locs = config.num_locations;
  const int eval_locs = config.eval_locations < 0 ? config.num_locations / 2 : config.eval_locations;
  require<UsageError>(eval_locs >= 1, "ToyConfig: needs at least one eval location");
  const int distractors = config.gallery_distractors;

  ToyDatasets out;
  out.train.split = Split::kTrain;
  out.query.split = Split::kQuery;
  out.gallery.split = Split::kGallery;
  out.train.image_size = out.query.image_size = out.gallery.image_size = config.image_size;
  out.train.num_locations = train_locs;
  out.query.num_locations = eval_locs;
  out.gallery.num_locations = eval_locs + distractors;

  for (int loc = 0; loc < train_locs; ++loc) {
    const Tensor base = location_base_pattern(config, loc);
    out.train.location_names.push_back(toy_location_name(loc));
    out.train.samples.push_back(make_satellite_sample(config, base, loc, loc));
    for (int k = 0; k < config.uav_per_location; ++k)
      out.train.samples.push_back(make_uav_sample(config, base, loc, loc, k));
  }

  for (int e = 0; e < eval_locs + distractors; ++e) {
    const int global_loc = train_locs + e;
    const Tensor base = location_base_pattern(config, global_loc);
    out.gallery.location_names.push_back(toy_location_name(global_loc));
    out.gallery.samples.push_back(make_satellite_sample(config, base, global_loc, e));
    if (e < eval_locs) {
      out.query.location_names.push_back(toy_location_name(global_loc));
      for (int k = 0; k < config.uav_per_location; ++k)
        out.query.samples.push_back(make_uav_sample(config, base, global_loc, e, k));
    }
  }
  return out;
}

void write_toy_tree(const ToyConfig& config, const fs::path& out_root) {
  const ToyDatasets data = generate_toy_dataset(config);

  const auto write_sample = [](const fs::path& dir, const std::string& stem,
                               const ImageSample& sample) {
    fs::create_directories(dir);
    const fs::path file = dir / (stem + ".png");
    require<RuntimeFailure>(cv::imwrite(file.string(), tensor_to_mat(sample.pixels)),
                            "failed to write " + file.string());
  };

  std::vector<int> uav_counter(data.train.num_locations, 0);
  for (const auto& s : data.train.samples) {
    const std::string& name = data.train.location_names[s.location_id];
    if (s.view == View::kSatellite) {
      write_sample(out_root / "train" / "satellite" / name, "sat_00", s);
    } else {
      char stem[16];
      std::snprintf(stem, sizeof stem, "uav_%02d", uav_counter[s.location_id]++);
      write_sample(out_root / "train" / "drone" / name, stem, s);
    }
  }

  std::vector<int> q_counter(data.query.num_locations, 0);
  for (const auto& s : data.query.samples) {
    const std::string& name = data.query.location_names[s.location_id];
    char stem[16];
    std::snprintf(stem, sizeof stem, "uav_%02d", q_counter[s.location_id]++);
    write_sample(out_root / "test" / "query_drone" / name, stem, s);
    write_sample(out_root / "test" / "gallery_drone" / name, stem, s);
  }

  for (const auto& s : data.gallery.samples) {
    const std::string& name = data.gallery.location_names[s.location_id];
    write_sample(out_root / "test" / "gallery_satellite" / name, "sat_00", s);
    // Distractor locations appear only on the gallery side.
    if (s.location_id < data.query.num_locations)
      write_sample(out_root / "test" / "query_satellite" / name, "sat_00", s);
  }
}

// ---------------------------------------------------------------------------
// Batch sampling

std::vector<std::size_t> sample_batch_indices(const Dataset& dataset, std::size_t batch_size,
                                              Rng& rng) {
  require<UsageError>(batch_size >= 2, "sample_batch: batch_size must be >= 2");
  std::vector<std::size_t> uav, sat;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    (dataset.samples[i].view == View::kUav ? uav : sat).push_back(i);
  }
  require<UsageError>(!uav.empty() && !sat.empty(),
                      "sample_batch: dataset must contain both views");

  std::size_t n_uav = batch_size / 2;
  if (batch_size % 2 == 1 && rng.bernoulli(0.5)) ++n_uav;
  const std::size_t n_sat = batch_size - n_uav;

  std::vector<std::size_t> picked;
  picked.reserve(batch_size);
  for (std::size_t i = 0; i < n_uav; ++i)
    picked.push_back(uav[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(uav.size()) - 1))]);
  for (std::size_t i = 0; i < n_sat; ++i)
    picked.push_back(sat[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(sat.size()) - 1))]);

  // Fisher-Yates so view order within the batch is not fixed.
  for (std::size_t i = picked.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)));
    std::swap(picked[i], picked[j]);
  }
  return picked;
}

std::vector<ImageSample> sample_batch(const Dataset& dataset, std::size_t batch_size, Rng& rng) {
  std::vector<ImageSample> batch;
  batch.reserve(batch_size);
  for (std::size_t idx : sample_batch_indices(dataset, batch_size, rng)) {
    ImageSample s = dataset.samples[idx];
    if (s.pixels.empty()) s.pixels = sample_pixels(s, dataset.image_size);
    batch.push_back(std::move(s));
  }
  return batch;
}

Tensor sample_pixels(const ImageSample& sample, int image_size) {
  if (!sample.pixels.empty()) return sample.pixels;
  require<DataError>(!sample.source_path.empty(), "sample has neither pixels nor a source path");
  return decode_image(sample.source_path, image_size);
}

Tensor batch_to_nchw(const std::vector<ImageSample>& batch, int image_size) {
  require(!batch.empty(), "batch_to_nchw: empty batch");
  const auto n = batch.size();
  const auto sz = static_cast<std::size_t>(image_size);
  Tensor out({n, 3, sz, sz});
  for (std::size_t b = 0; b < n; ++b) {
    const Tensor px = sample_pixels(batch[b], image_size);
    require(px.dim(0) == sz && px.dim(1) == sz,
            "batch_to_nchw: sample size " + px.shape_str() + " does not match batch size");
    for (std::size_t i = 0; i < sz; ++i)
      for (std::size_t j = 0; j < sz; ++j)
        for (std::size_t c = 0; c < 3; ++c) out(b, c, i, j) = px(i, j, c);
  }
  return out;
}

void hflip_image(Tensor& pixels) {
  const std::size_t h = pixels.dim(0), w = pixels.dim(1);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w / 2; ++j)
      for (std::size_t c = 0; c < 3; ++c)
        std::swap(pixels(i, j, c), pixels(i, w - 1 - j, c));
}

}  // namespace pvda
