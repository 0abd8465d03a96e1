#include "onn/dataset.hpp"

#include "onn/errors.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

namespace onn {

namespace {

constexpr std::uint32_t kLabelMagic = 0x00000801;
constexpr std::uint32_t kImageMagic = 0x00000803;

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

// Overlap of source pixel i with output cell o, in units of 1/5 pixel.
// Source pixel i spans [5i, 5i+5); output cell o spans [14o, 14o+14).
// Each cell's overlaps sum to exactly 14.
int overlap_fifths(int o, int i) {
    const int lo = std::max(14 * o, 5 * i);
    const int hi = std::min(14 * o + 14, 5 * i + 5);
    return std::max(0, hi - lo);
}

}  // namespace

IdxArray parse_idx(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) {
        throw OnnError(ErrorCode::Truncated, "IDX header shorter than the magic word");
    }
    const std::uint32_t magic = read_be32(bytes, 0);
    std::size_t ndims = 0;
    if (magic == kLabelMagic) {
        ndims = 1;
    } else if (magic == kImageMagic) {
        ndims = 3;
    } else {
        throw OnnError(ErrorCode::BadMagic, "unknown IDX magic word");
    }
    const std::size_t header = 4 + 4 * ndims;
    if (bytes.size() < header) {
        throw OnnError(ErrorCode::Truncated, "IDX dimension block is incomplete");
    }

    IdxArray out;
    std::size_t expected = 1;
    for (std::size_t d = 0; d < ndims; ++d) {
        out.dims.push_back(read_be32(bytes, 4 + 4 * d));
        expected *= out.dims.back();
    }
    const std::size_t available = bytes.size() - header;
    if (available < expected) {
        throw OnnError(ErrorCode::Truncated, "IDX payload shorter than declared");
    }
    if (available > expected) {
        throw OnnError(ErrorCode::TrailingBytes, "IDX payload longer than declared");
    }
    out.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
    return out;
}

std::vector<std::uint8_t> serialize_idx(const IdxArray& array) {
    std::uint32_t magic = 0;
    if (array.dims.size() == 1) {
        magic = kLabelMagic;
    } else if (array.dims.size() == 3) {
        magic = kImageMagic;
    } else {
        throw OnnError(ErrorCode::ShapeMismatch, "IDX arrays carry 1 or 3 dimensions");
    }
    std::size_t expected = 1;
    for (auto d : array.dims) expected *= d;
    if (expected != array.payload.size()) {
        throw OnnError(ErrorCode::ShapeMismatch, "payload size does not match dims");
    }
    std::vector<std::uint8_t> out;
    out.reserve(4 + 4 * array.dims.size() + array.payload.size());
    write_be32(out, magic);
    for (auto d : array.dims) write_be32(out, d);
    out.insert(out.end(), array.payload.begin(), array.payload.end());
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw OnnError(ErrorCode::Io, "cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

RealVector one_hot(int label) {
    RealVector t = RealVector::Zero(kNumClasses);
    t(label) = 1.0;
    return t;
}

Sample downsample(const RawImage& image) {
    // Integer accumulation keeps the result exact up to the final division:
    // sum(overlap_r * overlap_c * pixel) / (14 * 14 * 255).
    Sample s;
    s.input.resize(kSampleSide * kSampleSide);
    for (int orow = 0; orow < kSampleSide; ++orow) {
        for (int ocol = 0; ocol < kSampleSide; ++ocol) {
            long acc = 0;
            for (int r = 0; r < kRawSide; ++r) {
                const int wr = overlap_fifths(orow, r);
                if (wr == 0) continue;
                for (int c = 0; c < kRawSide; ++c) {
                    const int wc = overlap_fifths(ocol, c);
                    if (wc == 0) continue;
                    acc += static_cast<long>(wr) * wc * image.pixels[static_cast<std::size_t>(r * kRawSide + c)];
                }
            }
            s.input(orow * kSampleSide + ocol) = static_cast<double>(acc) / (196.0 * 255.0);
        }
    }
    s.label = image.label;
    s.target = one_hot(image.label);
    return s;
}

std::vector<RawImage> images_from_idx(const IdxArray& images, const IdxArray& labels) {
    if (images.dims.size() != 3 || labels.dims.size() != 1) {
        throw OnnError(ErrorCode::ShapeMismatch, "expected an images file and a labels file");
    }
    if (images.dims[1] != kRawSide || images.dims[2] != kRawSide) {
        throw OnnError(ErrorCode::ShapeMismatch, "images must be 28x28");
    }
    if (images.dims[0] != labels.dims[0]) {
        throw OnnError(ErrorCode::ShapeMismatch, "image and label counts differ");
    }
    std::vector<RawImage> out(images.dims[0]);
    for (std::size_t n = 0; n < out.size(); ++n) {
        std::copy_n(images.payload.begin() + static_cast<std::ptrdiff_t>(n * kRawPixels), kRawPixels,
                    out[n].pixels.begin());
        const auto label = labels.payload[n];
        if (label >= kNumClasses) {
            throw OnnError(ErrorCode::OutOfRange, "label >= 10 at index " + std::to_string(n));
        }
        out[n].label = label;
    }
    return out;
}

MnistFiles MnistFiles::in_directory(const std::filesystem::path& dir) {
    return {dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte", dir / "t10k-images-idx3-ubyte",
            dir / "t10k-labels-idx1-ubyte"};
}

std::vector<RawImage> load_mnist(const MnistFiles& files) {
    auto load_pair = [](const std::filesystem::path& img, const std::filesystem::path& lbl) {
        const auto img_bytes = read_file_bytes(img);
        const auto lbl_bytes = read_file_bytes(lbl);
        return images_from_idx(parse_idx(img_bytes), parse_idx(lbl_bytes));
    };
    auto all = load_pair(files.train_images, files.train_labels);
    auto test = load_pair(files.test_images, files.test_labels);
    all.insert(all.end(), test.begin(), test.end());
    return all;
}

DatasetSplit make_split(std::span<const RawImage> all, std::uint64_t seed) {
    if (all.size() != kMnistTotal) {
        throw OnnError(ErrorCode::WrongCount,
                       "expected 70000 images, got " + std::to_string(all.size()));
    }
    DatasetSplit split;
    split.split_seed = seed;
    split.permutation.resize(all.size());
    std::iota(split.permutation.begin(), split.permutation.end(), std::size_t{0});
    Rng rng(seed);
    std::shuffle(split.permutation.begin(), split.permutation.end(), rng);

    split.train.reserve(kTrainSize);
    split.validation.reserve(kValidationSize);
    split.test.reserve(kTestSize);
    for (std::size_t k = 0; k < split.permutation.size(); ++k) {
        Sample s = downsample(all[split.permutation[k]]);
        if (k < kTrainSize) {
            split.train.push_back(std::move(s));
        } else if (k < kTrainSize + kValidationSize) {
            split.validation.push_back(std::move(s));
        } else {
            split.test.push_back(std::move(s));
        }
    }
    return split;
}

std::vector<Sample> sample_minibatch(const DatasetSplit& split, std::size_t batch_size, Rng& rng) {
    if (batch_size < 1) {
        throw OnnError(ErrorCode::OutOfRange, "batch_size must be >= 1");
    }
    if (split.train.empty()) {
        throw OnnError(ErrorCode::WrongCount, "training set is empty");
    }
    std::uniform_int_distribution<std::size_t> pick(0, split.train.size() - 1);
    std::vector<Sample> batch;
    batch.reserve(batch_size);
    for (std::size_t b = 0; b < batch_size; ++b) {
        batch.push_back(split.train[pick(rng)]);
    }
    return batch;
}

}  // namespace onn
