#include "ctfsim/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ctfsim/errors.hpp"
#include "ctfsim/rng.hpp"

namespace ctfsim {

namespace {

std::vector<std::uint8_t> read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, size_t off, const std::string& path) {
  if (off + 4 > b.size())
    throw DataError("'" + path + "' truncated at byte " + std::to_string(b.size()) +
                    " (expected 4 bytes at offset " + std::to_string(off) + ")");
  return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
         (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {char(v >> 24), char(v >> 16), char(v >> 8), char(v)};
  out.write(b, 4);
}

}  // namespace

ImageSet load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto ib = read_all(images_path);
  const auto lb = read_all(labels_path);

  char hex[16];
  const std::uint32_t im = be32(ib, 0, images_path);
  if (im != 0x00000803u) {
    std::snprintf(hex, sizeof hex, "0x%08x", im);
    throw DataError("'" + images_path + "': bad image magic " + hex + " at byte 0");
  }
  const std::uint32_t lm = be32(lb, 0, labels_path);
  if (lm != 0x00000801u) {
    std::snprintf(hex, sizeof hex, "0x%08x", lm);
    throw DataError("'" + labels_path + "': bad label magic " + hex + " at byte 0");
  }

  ImageSet set;
  const std::uint32_t n_img = be32(ib, 4, images_path);
  set.rows = static_cast<int>(be32(ib, 8, images_path));
  set.cols = static_cast<int>(be32(ib, 12, images_path));
  const std::uint32_t n_lab = be32(lb, 4, labels_path);
  if (n_img != n_lab)
    throw DataError("image/label counts differ: " + std::to_string(n_img) + " vs " +
                    std::to_string(n_lab));

  const size_t px = size_t(n_img) * set.rows * set.cols;
  if (ib.size() != 16 + px)
    throw DataError("'" + images_path + "': expected " + std::to_string(16 + px) +
                    " bytes, got " + std::to_string(ib.size()) +
                    " (truncated at byte " + std::to_string(std::min(ib.size(), 16 + px)) + ")");
  if (lb.size() != 8 + n_lab)
    throw DataError("'" + labels_path + "': expected " + std::to_string(8 + n_lab) +
                    " bytes, got " + std::to_string(lb.size()));

  set.pixels.resize(px);
  for (size_t i = 0; i < px; ++i)
    set.pixels[i] = static_cast<float>(ib[16 + i]) * (1.0f / 255.0f);
  set.labels.assign(lb.begin() + 8, lb.end());
  return set;
}

void save_idx(const std::string& images_path, const std::string& labels_path,
              const ImageSet& set) {
  std::ofstream io(images_path, std::ios::binary);
  if (!io) throw DataError("cannot write '" + images_path + "'");
  put_be32(io, 0x00000803u);
  put_be32(io, static_cast<std::uint32_t>(set.count()));
  put_be32(io, static_cast<std::uint32_t>(set.rows));
  put_be32(io, static_cast<std::uint32_t>(set.cols));
  for (float p : set.pixels) {
    const int v = static_cast<int>(std::lround(p * 255.0f));
    io.put(static_cast<char>(std::clamp(v, 0, 255)));
  }
  std::ofstream lo(labels_path, std::ios::binary);
  if (!lo) throw DataError("cannot write '" + labels_path + "'");
  put_be32(lo, 0x00000801u);
  put_be32(lo, static_cast<std::uint32_t>(set.count()));
  for (auto l : set.labels) lo.put(static_cast<char>(l));
}

ImageSet subsample(const ImageSet& set, int n, std::uint64_t seed) {
  if (n > set.count())
    throw DataError("subsample: requested " + std::to_string(n) + " of " +
                    std::to_string(set.count()) + " images");
  if (n < 0) throw DataError("subsample: negative count");

  int n_classes = 0;
  for (auto l : set.labels) n_classes = std::max(n_classes, int(l) + 1);
  std::vector<std::vector<int>> by_class(static_cast<size_t>(n_classes));
  for (int i = 0; i < set.count(); ++i) by_class[set.labels[size_t(i)]].push_back(i);

  // Quotas: floor(n / classes) each, remainder spread over the first classes
  // (in label order), capped by availability with the shortfall passed on.
  std::vector<int> quota(static_cast<size_t>(n_classes), 0);
  int assigned = 0;
  for (int c = 0; c < n_classes; ++c) {
    quota[size_t(c)] = n / n_classes + (c < n % n_classes ? 1 : 0);
    assigned += quota[size_t(c)];
  }
  for (int c = 0; c < n_classes && assigned > 0; ++c) {
    const int avail = static_cast<int>(by_class[size_t(c)].size());
    if (quota[size_t(c)] > avail) {
      int excess = quota[size_t(c)] - avail;
      quota[size_t(c)] = avail;
      for (int d = 0; d < n_classes && excess > 0; ++d) {
        if (d == c) continue;
        const int room = static_cast<int>(by_class[size_t(d)].size()) - quota[size_t(d)];
        const int take = std::min(room, excess);
        if (take > 0) {
          quota[size_t(d)] += take;
          excess -= take;
        }
      }
    }
  }

  std::vector<int> chosen;
  chosen.reserve(static_cast<size_t>(n));
  for (int c = 0; c < n_classes; ++c) {
    auto& idx = by_class[size_t(c)];
    Rng rng(rng_stream(seed, static_cast<std::uint64_t>(c)));
    // Partial Fisher-Yates: the first quota entries are a uniform sample.
    for (int k = 0; k < quota[size_t(c)]; ++k) {
      const int j = k + static_cast<int>(rng.next_u64() %
                                         static_cast<std::uint64_t>(idx.size() - size_t(k)));
      std::swap(idx[size_t(k)], idx[size_t(j)]);
      chosen.push_back(idx[size_t(k)]);
    }
  }
  // Deterministic overall shuffle so the class order does not leak into SGD.
  Rng rng(rng_stream(seed, 0xfeedULL));
  for (size_t k = chosen.size(); k > 1; --k) {
    const size_t j = static_cast<size_t>(rng.next_u64() % k);
    std::swap(chosen[k - 1], chosen[j]);
  }

  ImageSet out;
  out.rows = set.rows;
  out.cols = set.cols;
  out.pixels.resize(chosen.size() * static_cast<size_t>(set.pixel_dim()));
  out.labels.resize(chosen.size());
  for (size_t i = 0; i < chosen.size(); ++i) {
    const float* src = set.image(chosen[i]);
    std::copy(src, src + set.pixel_dim(),
              out.pixels.begin() + static_cast<long>(i) * set.pixel_dim());
    out.labels[i] = set.labels[static_cast<size_t>(chosen[i])];
  }
  return out;
}

std::uint64_t checksum(const ImageSet& set) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<std::uint64_t>(set.rows));
  mix(static_cast<std::uint64_t>(set.cols));
  for (auto l : set.labels) {
    h ^= l;
    h *= 1099511628211ull;
  }
  for (float p : set.pixels) {
    // Quantized back to the storage byte, so the checksum matches across a
    // save/load round trip.
    const int v = std::clamp(static_cast<int>(std::lround(p * 255.0f)), 0, 255);
    h ^= static_cast<std::uint64_t>(v);
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

void box_blur(std::vector<float>& img, int rows, int cols) {
  std::vector<float> tmp(img.size());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      float s = 0.0f;
      int n = 0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= rows || cc >= cols) continue;
          s += img[size_t(rr) * cols + cc];
          ++n;
        }
      }
      tmp[size_t(r) * cols + c] = s / static_cast<float>(n);
    }
  }
  img.swap(tmp);
}

}  // namespace

ImageSet synthetic_images(int count, const SyntheticSpec& spec, std::uint64_t salt) {
  const int dim = spec.rows * spec.cols;
  // Prototypes depend only on spec.seed, so train (salt 0) and test (salt 1)
  // draw from one distribution with disjoint noise.
  std::vector<std::vector<float>> protos(static_cast<size_t>(spec.classes * spec.modes));
  std::vector<std::vector<float>> class_mean(static_cast<size_t>(spec.classes),
                                             std::vector<float>(static_cast<size_t>(dim), 0.0f));
  for (int c = 0; c < spec.classes; ++c) {
    for (int m = 0; m < spec.modes; ++m) {
      auto& img = protos[size_t(c) * spec.modes + m];
      img.resize(static_cast<size_t>(dim));
      Rng rng(rng_stream(spec.seed, 1000 + c, static_cast<std::uint64_t>(m)));
      for (auto& p : img) p = static_cast<float>(rng.uniform());
      box_blur(img, spec.rows, spec.cols);
      box_blur(img, spec.rows, spec.cols);
      // Contrast stretch to fill [0, 1].
      float lo = 1.0f, hi = 0.0f;
      for (float p : img) {
        lo = std::min(lo, p);
        hi = std::max(hi, p);
      }
      const float span = hi > lo ? hi - lo : 1.0f;
      for (auto& p : img) p = (p - lo) / span;
    }
  }
  for (int c = 0; c < spec.classes; ++c) {
    for (int m = 0; m < spec.modes; ++m)
      for (int i = 0; i < dim; ++i)
        class_mean[size_t(c)][size_t(i)] +=
            protos[size_t(c) * spec.modes + m][size_t(i)] / static_cast<float>(spec.modes);
  }
  if (spec.overlap > 0.0) {
    // Pull every prototype toward the next class's mean; classes blur into
    // each other and the task gets harder without losing determinism.
    for (int c = 0; c < spec.classes; ++c) {
      const auto& other = class_mean[size_t((c + 1) % spec.classes)];
      for (int m = 0; m < spec.modes; ++m) {
        auto& img = protos[size_t(c) * spec.modes + m];
        for (int i = 0; i < dim; ++i)
          img[size_t(i)] = static_cast<float>((1.0 - spec.overlap) * img[size_t(i)] +
                                              spec.overlap * other[size_t(i)]);
      }
    }
  }

  ImageSet set;
  set.rows = spec.rows;
  set.cols = spec.cols;
  set.pixels.resize(static_cast<size_t>(count) * dim);
  set.labels.resize(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng(rng_stream(spec.seed, salt, static_cast<std::uint64_t>(i)));
    const int c = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(spec.classes));
    const int m = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(spec.modes));
    const auto& proto = protos[size_t(c) * spec.modes + m];
    float* dst = set.pixels.data() + static_cast<size_t>(i) * dim;
    for (int j = 0; j < dim; ++j) {
      const double v = proto[size_t(j)] + spec.noise * rng.gaussian();
      dst[j] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    set.labels[size_t(i)] = static_cast<std::uint8_t>(c);
  }
  return set;
}

SyntheticSpec synthetic_mnist_spec() {
  SyntheticSpec s;
  s.noise = 0.25;
  s.overlap = 0.0;
  s.seed = 7;
  return s;
}

SyntheticSpec synthetic_fmnist_spec() {
  SyntheticSpec s;
  s.noise = 0.32;
  s.overlap = 0.35;
  s.seed = 11;
  return s;
}

DatasetPaths find_idx_files(const std::string& dir) {
  namespace fs = std::filesystem;
  DatasetPaths p;
  p.train_images = dir + "/train-images-idx3-ubyte";
  p.train_labels = dir + "/train-labels-idx1-ubyte";
  p.test_images = dir + "/t10k-images-idx3-ubyte";
  p.test_labels = dir + "/t10k-labels-idx1-ubyte";
  p.found = fs::exists(p.train_images) && fs::exists(p.train_labels) &&
            fs::exists(p.test_images) && fs::exists(p.test_labels);
  return p;
}

}  // namespace ctfsim
