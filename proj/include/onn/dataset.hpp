#pragma once

#include "onn/linalg.hpp"
#include "onn/rng.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace onn {

// ---------------------------------------------------------------------------
// IDX container (MNIST file format).
//
//   magic(4, big-endian: 0x00000801 labels | 0x00000803 images)
//   dims(4 each, big-endian) | payload(product of dims) uint8
// ---------------------------------------------------------------------------
struct IdxArray {
    std::vector<std::uint32_t> dims;
    std::vector<std::uint8_t> payload;
};

IdxArray parse_idx(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> serialize_idx(const IdxArray& array);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

inline constexpr int kRawSide = 28;
inline constexpr int kRawPixels = kRawSide * kRawSide;
inline constexpr int kSampleSide = 10;

struct RawImage {
    std::array<std::uint8_t, kRawPixels> pixels{};  // row-major grey levels
    std::uint8_t label = 0;
};

struct Sample {
    RealVector input;   // 100 values in [0,1], row-major 10x10
    int label = 0;
    RealVector target;  // one-hot, length 10
};

RealVector one_hot(int label);

// Area-weighted 28x28 -> 10x10 box filter, scaled to [0,1].
Sample downsample(const RawImage& image);

// Pairs an images file (3 dims) with a labels file (1 dim).
std::vector<RawImage> images_from_idx(const IdxArray& images, const IdxArray& labels);

struct MnistFiles {
    std::filesystem::path train_images;
    std::filesystem::path train_labels;
    std::filesystem::path test_images;
    std::filesystem::path test_labels;

    static MnistFiles in_directory(const std::filesystem::path& dir);
};

// All 70000 images: the 60000-image file followed by the 10000-image file.
std::vector<RawImage> load_mnist(const MnistFiles& files);

inline constexpr std::size_t kMnistTotal = 70000;
inline constexpr std::size_t kTrainSize = 60000;
inline constexpr std::size_t kValidationSize = 5000;
inline constexpr std::size_t kTestSize = 5000;

struct DatasetSplit {
    std::vector<Sample> train;
    std::vector<Sample> validation;
    std::vector<Sample> test;
    std::vector<std::size_t> permutation;  // source index of train, then validation, then test
    std::uint64_t split_seed = 0;
};

DatasetSplit make_split(std::span<const RawImage> all, std::uint64_t seed);

// Uniform draws with replacement from split.train.
std::vector<Sample> sample_minibatch(const DatasetSplit& split, std::size_t batch_size, Rng& rng);

}  // namespace onn
