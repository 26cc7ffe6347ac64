#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include <doctest.h>

#include "ctfsim/dataset.hpp"
#include "ctfsim/errors.hpp"

using namespace ctfsim;

namespace {

ImageSet tiny_set() {
  ImageSet s;
  s.rows = 2;
  s.cols = 3;
  s.labels = {0, 1, 2, 1};
  s.pixels.resize(4 * 6);
  for (size_t i = 0; i < s.pixels.size(); ++i) {
    s.pixels[i] = static_cast<float>((i * 11) % 256) / 255.0f;
  }
  return s;
}

struct TempFiles {
  std::string images = "ds_test_images.idx";
  std::string labels = "ds_test_labels.idx";
  ~TempFiles() {
    std::remove(images.c_str());
    std::remove(labels.c_str());
  }
};

}  // namespace

TEST_CASE("dataset: idx round trip") {
  TempFiles f;
  const ImageSet s = tiny_set();
  save_idx(f.images, f.labels, s);
  const ImageSet back = load_idx(f.images, f.labels);
  CHECK(back.rows == 2);
  CHECK(back.cols == 3);
  CHECK(back.labels == s.labels);
  REQUIRE(back.pixels.size() == s.pixels.size());
  for (size_t i = 0; i < s.pixels.size(); ++i) {
    CHECK(back.pixels[i] == s.pixels[i]);  // values are exact 256ths
  }
  CHECK(checksum(back) == checksum(s));
}

TEST_CASE("dataset: corrupt files name the byte offset") {
  TempFiles f;
  save_idx(f.images, f.labels, tiny_set());

  // truncate the image file
  {
    FILE* fp = std::fopen(f.images.c_str(), "rb+");
    REQUIRE(fp);
    std::fseek(fp, 0, SEEK_END);
    const long full = std::ftell(fp);
    std::fclose(fp);
    std::vector<char> buf(full - 5);
    fp = std::fopen(f.images.c_str(), "rb");
    REQUIRE(std::fread(buf.data(), 1, buf.size(), fp) == buf.size());
    std::fclose(fp);
    fp = std::fopen(f.images.c_str(), "wb");
    std::fwrite(buf.data(), 1, buf.size(), fp);
    std::fclose(fp);
  }
  try {
    load_idx(f.images, f.labels);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }
}

TEST_CASE("dataset: magic is checked") {
  TempFiles f;
  save_idx(f.images, f.labels, tiny_set());
  {
    FILE* fp = std::fopen(f.images.c_str(), "rb+");
    REQUIRE(fp);
    const char junk[4] = {0, 0, 9, 9};
    std::fwrite(junk, 1, 4, fp);
    std::fclose(fp);
  }
  try {
    load_idx(f.images, f.labels);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("magic") != std::string::npos);
  }
}

TEST_CASE("dataset: count mismatch between files is rejected") {
  TempFiles f;
  const ImageSet s = tiny_set();
  save_idx(f.images, f.labels, s);
  ImageSet fewer = s;
  fewer.labels.pop_back();
  fewer.pixels.resize(3 * 6);
  const std::string other_labels = "ds_test_labels2.idx";
  const std::string other_images = "ds_test_images2.idx";
  save_idx(other_images, other_labels, fewer);
  CHECK_THROWS_AS(load_idx(f.images, other_labels), DataError);
  std::remove(other_labels.c_str());
  std::remove(other_images.c_str());
}

TEST_CASE("dataset: subsample is stratified and deterministic") {
  const ImageSet s = synthetic_images(1000, synthetic_mnist_spec(), 0);
  const ImageSet sub = subsample(s, 200, 77);
  REQUIRE(sub.count() == 200);
  std::array<int, 10> counts{};
  for (auto l : sub.labels) counts[l]++;
  for (int c = 0; c < 10; ++c) {
    CHECK(counts[c] >= 19);
    CHECK(counts[c] <= 21);
  }
  const ImageSet sub2 = subsample(s, 200, 77);
  CHECK(checksum(sub) == checksum(sub2));
  const ImageSet sub3 = subsample(s, 200, 78);
  CHECK(checksum(sub) != checksum(sub3));
  CHECK_THROWS_AS(subsample(s, 1001, 1), DataError);
}

TEST_CASE("dataset: synthetic sets are deterministic and well-formed") {
  const SyntheticSpec spec = synthetic_mnist_spec();
  const ImageSet a = synthetic_images(64, spec, 0);
  const ImageSet b = synthetic_images(64, spec, 0);
  CHECK(checksum(a) == checksum(b));
  const ImageSet c = synthetic_images(64, spec, 1);
  CHECK(checksum(a) != checksum(c));
  for (float px : a.pixels) {
    CHECK(px >= 0.0f);
    CHECK(px <= 1.0f);
  }
  for (auto l : a.labels) CHECK(l < 10);
  CHECK(a.rows == 28);
  CHECK(a.cols == 28);
}

TEST_CASE("dataset: the two stand-ins differ and the fashion one is harder") {
  const ImageSet m = synthetic_images(64, synthetic_mnist_spec(), 0);
  const ImageSet f = synthetic_images(64, synthetic_fmnist_spec(), 0);
  CHECK(checksum(m) != checksum(f));
  CHECK(synthetic_fmnist_spec().overlap > synthetic_mnist_spec().overlap);
}

TEST_CASE("dataset: find_idx_files misses cleanly") {
  const DatasetPaths p = find_idx_files("no/such/dir");
  CHECK_FALSE(p.found);
}
