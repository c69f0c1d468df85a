#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pvda/rng.hpp"
#include "pvda/tensor.hpp"

namespace pvda {

enum class View { kUav, kSatellite };
enum class Split { kTrain, kQuery, kGallery };

const char* view_name(View v);
const char* split_name(Split s);

// One image with its view and location label. Pixels are H x W x 3 in [0,1];
// for large on-disk datasets they stay empty until materialized via
// sample_pixels (decoding 37k images eagerly is not an option).
struct ImageSample {
  Tensor pixels;
  View view = View::kUav;
  int location_id = 0;
  std::string source_path;
};

struct Dataset {
  std::vector<ImageSample> samples;
  int num_locations = 0;
  Split split = Split::kTrain;
  std::vector<std::string> location_names;  // location_id -> class directory name
  int image_size = 0;

  std::size_t size() const { return samples.size(); }
};

// Synthetic desk-scale dataset: a fixed low-frequency color pattern per
// location, plus a global color-affine + small-rotation shift applied to the
// UAV view, scaled by view_shift_strength.
struct ToyConfig {
  int num_locations = 20;
  int uav_per_location = 8;
  int image_size = 32;
  double view_shift_strength = 1.0;
  std::uint64_t seed = 1;
  // Locations held out for query/gallery; -1 means num_locations / 2. Their
  // ids do not overlap the training ids, so evaluation is on unseen places.
  int eval_locations = -1;
  // Extra gallery-only locations that match no query.
  int gallery_distractors = 0;
};

struct ToyDatasets {
  Dataset train;
  Dataset query;    // UAV views of the held-out locations
  Dataset gallery;  // satellite views of the held-out + distractor locations
};

// Which subtree of a University-1652-format directory to load.
enum class TreeSplit { kTrain, kQueryDrone, kGallerySatellite, kQuerySatellite, kGalleryDrone };

TreeSplit tree_split_from_name(const std::string& name);

struct LoadReport {
  std::string root;
  std::string split;
  std::size_t num_locations = 0;
  std::size_t loaded_uav = 0;
  std::size_t loaded_satellite = 0;
  std::vector<std::string> skipped_files;

  std::string to_json() const;
  void write(const std::filesystem::path& path) const;
};

struct LoadOptions {
  int image_size = 256;
  // Decode-validate every file at load time (unreadable files are skipped and
  // reported). Pixels are kept in memory only for datasets up to this many
  // images; larger ones are re-decoded on access.
  bool validate = true;
  std::size_t max_eager_images = 4096;
};

// Loads `<root>/train/{drone,satellite}/<class>/*` or the requested test
// subtree. Location ids follow the lexicographic order of class directory
// names, so two loads of the same tree agree.
Dataset load_university1652(const std::filesystem::path& root, TreeSplit split,
                            const LoadOptions& options = {}, LoadReport* report = nullptr);

ToyDatasets generate_toy_dataset(const ToyConfig& config);

// Writes the toy datasets as a University-1652-format image tree (PNG files),
// usable by load_university1652 and by external tooling.
void write_toy_tree(const ToyConfig& config, const std::filesystem::path& out_root);

// Draws a batch with both views present: half the slots are UAV and half
// satellite (odd batch sizes give the extra slot to a coin flip), each slot
// filled uniformly from that view's samples, then the slot order is shuffled.
std::vector<std::size_t> sample_batch_indices(const Dataset& dataset, std::size_t batch_size,
                                              Rng& rng);
std::vector<ImageSample> sample_batch(const Dataset& dataset, std::size_t batch_size, Rng& rng);

// Materialized pixels for a sample (decodes from source_path when needed).
Tensor sample_pixels(const ImageSample& sample, int image_size);

// Stacks samples into an N x 3 x H x W batch tensor.
Tensor batch_to_nchw(const std::vector<ImageSample>& batch, int image_size);

// In-place horizontal flip of an H x W x 3 image.
void hflip_image(Tensor& pixels);

}  // namespace pvda
