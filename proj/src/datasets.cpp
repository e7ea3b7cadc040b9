#include "pefusion/datasets.hpp"

#include "pefusion/error.hpp"
#include "pefusion/feature_file.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <memory>
#include <random>

namespace pefusion::datasets {

namespace {

constexpr std::uint32_t idx_images_magic = 0x00000803;
constexpr std::uint32_t idx_labels_magic = 0x00000801;
constexpr std::size_t cifar_record = 3073;
constexpr std::size_t cifar_side = 32;
// Upper bound on any declared payload (16 GiB); guards the size arithmetic.
constexpr std::uint64_t max_payload = std::uint64_t{1} << 34;

// Sequential reader over a plain or gzip-compressed file. zlib reads plain files transparently.
class ByteStream {
  public:
    explicit ByteStream(const std::filesystem::path &path) : path_(path.string()) {
        {
            std::ifstream probe(path, std::ios::binary);
            if (!probe) {
                throw IoError("cannot open " + path_);
            }
            std::array<unsigned char, 2> head{};
            probe.read(reinterpret_cast<char *>(head.data()), 2);
            compressed_ = probe.gcount() == 2 && head[0] == 0x1f && head[1] == 0x8b;
        }
        file_.reset(gzopen(path_.c_str(), "rb"));
        if (!file_) {
            throw IoError("cannot open " + path_);
        }
    }

    [[nodiscard]] bool compressed() const noexcept { return compressed_; }
    [[nodiscard]] const std::string &path() const noexcept { return path_; }

    /// Reads exactly n bytes, growing the buffer in chunks so allocation tracks the data actually present.
    std::string read_exact(std::uint64_t n, const char *what) {
        std::string out;
        constexpr std::size_t chunk = 1 << 20;
        while (out.size() < n) {
            const std::size_t want = static_cast<std::size_t>(std::min<std::uint64_t>(chunk, n - out.size()));
            const std::size_t old = out.size();
            out.resize(old + want);
            const int got = gzread(file_.get(), out.data() + old, static_cast<unsigned>(want));
            if (got < 0) {
                throw FormatError(FormatError::Kind::truncated, path_ + ": corrupt compressed stream");
            }
            out.resize(old + static_cast<std::size_t>(got));
            if (static_cast<std::size_t>(got) < want) {
                throw FormatError(FormatError::Kind::truncated,
                                  path_ + ": truncated " + what + " (expected " + std::to_string(n) + " bytes, got " +
                                      std::to_string(out.size()) + ")");
            }
        }
        return out;
    }

    void expect_eof() {
        char extra = 0;
        const int got = gzread(file_.get(), &extra, 1);
        if (got > 0) {
            throw FormatError(FormatError::Kind::trailing_data, path_ + ": unexpected data after declared payload");
        }
        if (got < 0) {
            throw FormatError(FormatError::Kind::truncated, path_ + ": corrupt compressed stream");
        }
    }

  private:
    struct GzClose {
        void operator()(gzFile f) const { gzclose(f); }
    };
    std::string path_;
    bool compressed_ = false;
    std::unique_ptr<gzFile_s, GzClose> file_;
};

std::uint32_t be32(std::string_view b, std::size_t at) {
    return (static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) << 24) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 16) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 8) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3]));
}

void put_be32(std::string &out, std::uint32_t v) {
    out.push_back(static_cast<char>((v >> 24) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

GrayImage plane_from_bytes(std::string_view bytes, std::size_t height, std::size_t width, bool transpose) {
    std::vector<double> px(height * width);
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            const double v = static_cast<unsigned char>(bytes[r * width + c]) / 255.0;
            if (transpose) {
                px[c * height + r] = v;
            } else {
                px[r * width + c] = v;
            }
        }
    }
    return transpose ? GrayImage(width, height, std::move(px)) : GrayImage(height, width, std::move(px));
}

struct IdxImages {
    std::size_t count = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::string pixels;
};

IdxImages read_idx_images(const std::filesystem::path &path) {
    ByteStream in(path);
    const auto header = in.read_exact(16, "IDX image header");
    if (be32(header, 0) != idx_images_magic) {
        throw FormatError(FormatError::Kind::bad_magic, in.path() + ": not an IDX u8 image tensor (magic 0x00000803)");
    }
    IdxImages out{be32(header, 4), be32(header, 8), be32(header, 12), {}};
    if (out.rows == 0 || out.cols == 0) {
        throw FormatError(FormatError::Kind::bad_header, in.path() + ": zero image dimension");
    }
    const std::uint64_t payload = std::uint64_t{out.count} * out.rows * out.cols;
    if (payload > max_payload) {
        throw FormatError(FormatError::Kind::bad_header, in.path() + ": implausible image tensor size");
    }
    out.pixels = in.read_exact(payload, "IDX image payload");
    in.expect_eof();
    return out;
}

char to_byte(double v) {
    const double q = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
    return static_cast<char>(static_cast<unsigned char>(q));
}

}  // namespace

void LabeledImageSet::validate() const {
    if (images.size() != labels.size()) {
        throw DimensionMismatch("image set holds " + std::to_string(images.size()) + " images but " +
                                std::to_string(labels.size()) + " labels");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= class_count) {
            throw InvalidArgument("label " + std::to_string(labels[i]) + " at index " + std::to_string(i) +
                                  " is outside [0, " + std::to_string(class_count) + ")");
        }
        if (images[i].height() != images.front().height() || images[i].width() != images.front().width() ||
            images[i].channel_count() != images.front().channel_count()) {
            throw DimensionMismatch("image " + std::to_string(i) + " differs in geometry from image 0");
        }
    }
}

std::vector<Label> decode_idx_labels(std::string_view bytes, const std::string &source) {
    if (bytes.size() < 8) {
        throw FormatError(FormatError::Kind::truncated, source + ": truncated IDX label header");
    }
    if (be32(bytes, 0) != idx_labels_magic) {
        throw FormatError(FormatError::Kind::bad_magic, source + ": not an IDX u8 label vector (magic 0x00000801)");
    }
    const std::uint32_t n = be32(bytes, 4);
    if (bytes.size() - 8 < n) {
        throw FormatError(FormatError::Kind::truncated, source + ": truncated IDX label payload");
    }
    if (bytes.size() - 8 > n) {
        throw FormatError(FormatError::Kind::trailing_data, source + ": unexpected data after declared labels");
    }
    std::vector<Label> labels(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        labels[i] = static_cast<unsigned char>(bytes[8 + i]);
    }
    return labels;
}

std::vector<Label> load_idx_labels(const std::filesystem::path &path) {
    ByteStream in(path);
    auto bytes = in.read_exact(8, "IDX label header");
    if (be32(bytes, 0) != idx_labels_magic) {
        throw FormatError(FormatError::Kind::bad_magic, in.path() + ": not an IDX u8 label vector (magic 0x00000801)");
    }
    bytes += in.read_exact(be32(bytes, 4), "IDX label payload");
    in.expect_eof();
    return decode_idx_labels(bytes, in.path());
}

LabeledImageSet load_idx(const std::filesystem::path &images_path, const std::filesystem::path &labels_path,
                         const IdxOptions &options) {
    const auto raw = read_idx_images(images_path);
    auto labels = load_idx_labels(labels_path);
    if (labels.size() != raw.count) {
        throw FormatError(FormatError::Kind::count_mismatch,
                          labels_path.string() + " holds " + std::to_string(labels.size()) + " labels but " +
                              images_path.string() + " holds " + std::to_string(raw.count) + " images");
    }
    LabeledImageSet set;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < options.label_offset) {
            throw FormatError(FormatError::Kind::bad_value, labels_path.string() + ": label " +
                                                                std::to_string(labels[i]) + " below offset " +
                                                                std::to_string(options.label_offset));
        }
        labels[i] -= options.label_offset;
    }
    const Label max_label = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
    set.class_count = options.class_count != 0 ? options.class_count : static_cast<std::size_t>(max_label) + 1;
    if (!labels.empty() && max_label >= set.class_count) {
        throw FormatError(FormatError::Kind::bad_value, labels_path.string() + ": label " + std::to_string(max_label) +
                                                            " exceeds class count " + std::to_string(set.class_count));
    }
    const std::size_t plane = raw.rows * raw.cols;
    set.images.reserve(raw.count);
    for (std::size_t i = 0; i < raw.count; ++i) {
        const std::string_view bytes(raw.pixels.data() + i * plane, plane);
        set.images.emplace_back(std::vector<GrayImage>{plane_from_bytes(bytes, raw.rows, raw.cols, options.transpose)});
    }
    set.labels = std::move(labels);
    return set;
}

LabeledImageSet decode_cifar10(std::string_view bytes, const std::string &source) {
    if (bytes.empty() || bytes.size() % cifar_record != 0) {
        throw FormatError(FormatError::Kind::truncated, source + ": size " + std::to_string(bytes.size()) +
                                                            " is not a positive multiple of 3073-byte records");
    }
    LabeledImageSet set;
    set.class_count = 10;
    const std::size_t n = bytes.size() / cifar_record;
    const std::size_t plane = cifar_side * cifar_side;
    set.images.reserve(n);
    set.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto record = bytes.substr(i * cifar_record, cifar_record);
        const auto label = static_cast<unsigned char>(record[0]);
        if (label > 9) {
            throw FormatError(FormatError::Kind::bad_value,
                              source + ": record " + std::to_string(i) + " has label " + std::to_string(label));
        }
        std::vector<GrayImage> channels;
        for (std::size_t ch = 0; ch < 3; ++ch) {
            channels.push_back(plane_from_bytes(record.substr(1 + ch * plane, plane), cifar_side, cifar_side, false));
        }
        set.images.emplace_back(std::move(channels));
        set.labels.push_back(label);
    }
    return set;
}

LabeledImageSet load_cifar10(const std::vector<std::filesystem::path> &batch_paths) {
    if (batch_paths.empty()) {
        throw InvalidArgument("no CIFAR-10 batch files given");
    }
    LabeledImageSet set;
    set.class_count = 10;
    set.class_names = find_profile("cifar10").class_names;
    for (const auto &path : batch_paths) {
        auto part = decode_cifar10(fusion::read_file_bytes(path), path.string());
        std::move(part.images.begin(), part.images.end(), std::back_inserter(set.images));
        set.labels.insert(set.labels.end(), part.labels.begin(), part.labels.end());
    }
    return set;
}

std::string encode_idx_images(const LabeledImageSet &set) {
    std::string out;
    const std::size_t h = set.images.empty() ? 1 : set.images.front().height();
    const std::size_t w = set.images.empty() ? 1 : set.images.front().width();
    put_be32(out, idx_images_magic);
    put_be32(out, static_cast<std::uint32_t>(set.images.size()));
    put_be32(out, static_cast<std::uint32_t>(h));
    put_be32(out, static_cast<std::uint32_t>(w));
    for (const auto &img : set.images) {
        if (img.channel_count() != 1 || img.height() != h || img.width() != w) {
            throw DimensionMismatch("IDX image files hold homogeneous single-channel images only");
        }
        for (const double v : img.channel(0).pixels()) {
            out.push_back(to_byte(v));
        }
    }
    return out;
}

std::string encode_idx_labels(const std::vector<Label> &labels) {
    std::string out;
    put_be32(out, idx_labels_magic);
    put_be32(out, static_cast<std::uint32_t>(labels.size()));
    for (const Label l : labels) {
        if (l > 255) {
            throw InvalidArgument("IDX u8 labels cannot hold " + std::to_string(l));
        }
        out.push_back(static_cast<char>(static_cast<unsigned char>(l)));
    }
    return out;
}

void write_idx_images(const std::filesystem::path &path, const LabeledImageSet &set) {
    fusion::write_file_bytes(path, encode_idx_images(set));
}

void write_idx_labels(const std::filesystem::path &path, const std::vector<Label> &labels) {
    fusion::write_file_bytes(path, encode_idx_labels(labels));
}

std::vector<std::size_t> subsample_indices(const LabeledImageSet &set, std::size_t n_per_class, std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> by_class(set.class_count);
    for (std::size_t i = 0; i < set.labels.size(); ++i) {
        by_class.at(set.labels[i]).push_back(i);
    }
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> picked;
    picked.reserve(n_per_class * set.class_count);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto &members = by_class[c];
        if (members.size() < n_per_class) {
            const std::string name = c < set.class_names.size() ? set.class_names[c] : std::to_string(c);
            throw InvalidArgument("class '" + name + "' has " + std::to_string(members.size()) +
                                  " members, fewer than the requested " + std::to_string(n_per_class));
        }
        // Partial Fisher-Yates with an explicit index draw keeps the result library-independent.
        for (std::size_t i = 0; i < n_per_class; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng() % (members.size() - i));
            std::swap(members[i], members[j]);
        }
        picked.insert(picked.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_per_class));
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

LabeledImageSet select(const LabeledImageSet &set, const std::vector<std::size_t> &indices) {
    LabeledImageSet out;
    out.class_count = set.class_count;
    out.class_names = set.class_names;
    out.images.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (const auto i : indices) {
        out.images.push_back(set.images.at(i));
        out.labels.push_back(set.labels.at(i));
    }
    return out;
}

LabeledImageSet subsample(const LabeledImageSet &set, std::size_t n_per_class, std::uint64_t seed) {
    return select(set, subsample_indices(set, n_per_class, seed));
}

const std::vector<DatasetProfile> &profiles() {
    static const std::vector<DatasetProfile> all = [] {
        std::vector<DatasetProfile> p;
        p.push_back({"fashion-mnist", FileFormat::idx, 28, 28, 1, 10, 0, false,
                     {"T-shirt/top", "Trouser", "Pullover", "Dress", "Coat", "Sandal", "Shirt", "Sneaker", "Bag",
                      "Ankle boot"}});
        p.push_back({"kmnist", FileFormat::idx, 28, 28, 1, 10, 0, false,
                     {"o", "ki", "su", "tsu", "na", "ha", "ma", "ya", "re", "wo"}});
        std::vector<std::string> letters;
        for (char ch = 'a'; ch <= 'z'; ++ch) {
            letters.emplace_back(1, ch);
        }
        p.push_back({"emnist-letters", FileFormat::idx, 28, 28, 1, 26, 1, true, letters});
        p.push_back({"cifar10", FileFormat::cifar10, 32, 32, 3, 10, 0, false,
                     {"airplane", "automobile", "bird", "cat", "deer", "dog", "frog", "horse", "ship", "truck"}});
        return p;
    }();
    return all;
}

const DatasetProfile &find_profile(std::string_view name) {
    for (const auto &p : profiles()) {
        if (p.name == name) {
            return p;
        }
    }
    throw InvalidArgument("unknown dataset profile '" + std::string(name) + "'");
}

}  // namespace pefusion::datasets
