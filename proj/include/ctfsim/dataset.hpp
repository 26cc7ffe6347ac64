#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ctfsim {

// Images as unit-range intensities, labels as small class ids.
struct ImageSet {
  int rows = 0;
  int cols = 0;
  std::vector<float> pixels;          // count * rows * cols, row-major
  std::vector<std::uint8_t> labels;   // one per image

  int count() const { return static_cast<int>(labels.size()); }
  int pixel_dim() const { return rows * cols; }
  const float* image(int i) const { return pixels.data() + static_cast<size_t>(i) * rows * cols; }
};

// IDX readers (big-endian magic 0x803 for images, 0x801 for labels); pixels
// scaled by 1/255. DataError with the byte offset on malformed input.
ImageSet load_idx(const std::string& images_path, const std::string& labels_path);

// Writer for the same format; used to build test fixtures.
void save_idx(const std::string& images_path, const std::string& labels_path,
              const ImageSet& set);

// Class-stratified random subset (per-class counts within one of n/classes),
// deterministic in the seed. DataError when n exceeds the set size.
ImageSet subsample(const ImageSet& set, int n, std::uint64_t seed);

// FNV-1a over dimensions, labels, and pixel bytes; platform-stable.
std::uint64_t checksum(const ImageSet& set);

// Deterministic stand-in classification sets for runs without the real data:
// every class owns a few blurred random prototypes; a sample is a prototype
// plus Gaussian pixel noise. noise/overlap tune how hard the task is.
struct SyntheticSpec {
  int classes = 10;
  int rows = 28;
  int cols = 28;
  int modes = 3;          // prototypes per class
  double noise = 0.25;    // Gaussian pixel noise sigma
  double overlap = 0.0;   // blends each prototype toward the class mean of another class
  std::uint64_t seed = 7;
};

ImageSet synthetic_images(int count, const SyntheticSpec& spec, std::uint64_t salt);

// The two presets used when MNIST / Fashion-MNIST files are absent; the
// fashion stand-in is tuned harder (more overlap and noise), matching how
// the real pair orders.
SyntheticSpec synthetic_mnist_spec();
SyntheticSpec synthetic_fmnist_spec();

// Locates the conventional IDX file names under dir (train-images-idx3-ubyte
// and friends); found == false when any of the four is missing.
struct DatasetPaths {
  std::string train_images, train_labels, test_images, test_labels;
  bool found = false;
};

DatasetPaths find_idx_files(const std::string& dir);

}  // namespace ctfsim
