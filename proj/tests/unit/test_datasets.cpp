#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pefusion/datasets.hpp"
#include "pefusion/digest.hpp"
#include "pefusion/error.hpp"
#include "pefusion/feature_file.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace pefusion;
using namespace pefusion::datasets;

namespace {

const std::filesystem::path pool_dir = std::filesystem::path(PEFUSION_TEST_DATA) / "fashion-mnist-pool";

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("pefusion_datasets_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    [[nodiscard]] std::filesystem::path operator/(const std::string &name) const { return path / name; }
};

void put_be32(std::string &s, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) {
        s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
}

std::string idx_images(std::uint32_t n, std::uint32_t rows, std::uint32_t cols, const std::string &payload) {
    std::string s;
    put_be32(s, 0x00000803);
    put_be32(s, n);
    put_be32(s, rows);
    put_be32(s, cols);
    return s + payload;
}

std::string idx_labels(const std::vector<unsigned char> &labels, std::uint32_t declared) {
    std::string s;
    put_be32(s, 0x00000801);
    put_be32(s, declared);
    for (const auto l : labels) {
        s.push_back(static_cast<char>(l));
    }
    return s;
}

void write(const std::filesystem::path &p, const std::string &bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string format_code(auto &&fn) {
    try {
        fn();
    } catch (const FormatError &e) {
        return e.code();
    } catch (const Error &e) {
        return std::string("other:") + e.code();
    }
    return "ok";
}

}  // namespace

TEST_CASE("two-image IDX fixture") {
    TempDir dir;
    std::string payload;
    for (int i = 0; i < 2 * 784; ++i) {
        payload.push_back(static_cast<char>(i % 256));
    }
    write(dir / "img", idx_images(2, 28, 28, payload));
    write(dir / "lab", idx_labels({3, 7}, 2));
    const auto set = load_idx(dir / "img", dir / "lab");
    REQUIRE(set.size() == 2);
    CHECK(set.labels == std::vector<Label>{3, 7});
    CHECK(set.class_count == 8);
    CHECK(set.images[0].height() == 28);
    CHECK(set.images[0].width() == 28);
    CHECK(set.images[0].channel(0)(0, 1) == 1.0 / 255.0);
    CHECK(set.images[1].channel(0)(0, 0) == (784 % 256) / 255.0);
    CHECK(set.images[0].channel(0)(9, 3) == ((9 * 28 + 3) % 256) / 255.0);
    CHECK_NOTHROW(set.validate());

    IdxOptions t;
    t.transpose = true;
    const auto tr = load_idx(dir / "img", dir / "lab", t);
    CHECK(tr.images[0].channel(0) == set.images[0].channel(0).transposed());

    IdxOptions letters;
    letters.label_offset = 3;
    letters.class_count = 26;
    const auto shifted = load_idx(dir / "img", dir / "lab", letters);
    CHECK(shifted.labels == std::vector<Label>{0, 4});
    CHECK(shifted.class_count == 26);
}

TEST_CASE("IDX error variants") {
    TempDir dir;
    const std::string two(2 * 784, '\x10');
    write(dir / "img", idx_images(2, 28, 28, two));
    write(dir / "lab3", idx_labels({1, 2, 3}, 3));
    CHECK(format_code([&] { (void)load_idx(dir / "img", dir / "lab3"); }) == "count_mismatch");

    write(dir / "lab2", idx_labels({1, 2}, 2));
    write(dir / "short", idx_images(2, 28, 28, two.substr(0, 900)));
    CHECK(format_code([&] { (void)load_idx(dir / "short", dir / "lab2"); }) == "truncated");
    write(dir / "long", idx_images(2, 28, 28, two + "x"));
    CHECK(format_code([&] { (void)load_idx(dir / "long", dir / "lab2"); }) == "trailing_data");
    std::string magic = idx_images(2, 28, 28, two);
    magic[3] = 0x02;
    write(dir / "magic", magic);
    CHECK(format_code([&] { (void)load_idx(dir / "magic", dir / "lab2"); }) == "bad_magic");
    write(dir / "huge", idx_images(0xffffffffu, 0xffffu, 0xffffu, ""));
    CHECK(format_code([&] { (void)load_idx(dir / "huge", dir / "lab2"); }) == "bad_header");
    write(dir / "big_count", idx_images(1000000, 28, 28, two));
    CHECK(format_code([&] { (void)load_idx(dir / "big_count", dir / "lab2"); }) == "truncated");
    write(dir / "lab_short", idx_labels({1}, 2));
    CHECK(format_code([&] { (void)load_idx(dir / "img", dir / "lab_short"); }) == "truncated");
    CHECK(format_code([&] { (void)load_idx(dir / "img", dir / "img"); }) == "bad_magic");
    CHECK(format_code([&] { (void)load_idx(dir / "missing", dir / "lab2"); }) == "other:io_error");
    IdxOptions off;
    off.label_offset = 2;
    CHECK(format_code([&] { (void)load_idx(dir / "img", dir / "lab2", off); }) == "bad_value");
    IdxOptions few;
    few.class_count = 2;
    CHECK(format_code([&] { (void)load_idx(dir / "img", dir / "lab2", few); }) == "bad_value");

    CHECK(decode_idx_labels(idx_labels({4, 5}, 2)) == std::vector<Label>{4, 5});
    CHECK(format_code([&] { (void)decode_idx_labels(idx_labels({4, 5}, 3)); }) == "truncated");
    CHECK(format_code([&] { (void)decode_idx_labels("\x00\x00"); }) == "truncated");
}

TEST_CASE("IDX fuzzing never crashes") {
    TempDir dir;
    std::string payload(3 * 16, '\x80');
    const auto good = idx_images(3, 4, 4, payload);
    write(dir / "lab", idx_labels({0, 1, 2}, 3));
    std::mt19937_64 rng(1);
    for (std::size_t len = 0; len <= good.size(); ++len) {
        write(dir / "img", good.substr(0, len));
        const auto code = format_code([&] { (void)load_idx(dir / "img", dir / "lab"); });
        CHECK((len == good.size() ? code == "ok" : code != "ok"));
    }
    for (int trial = 0; trial < 300; ++trial) {
        std::string m = good;
        m[rng() % 16] = static_cast<char>(rng());
        write(dir / "img", m);
        (void)format_code([&] { (void)load_idx(dir / "img", dir / "lab"); });
    }
}

TEST_CASE("IDX round trip") {
    TempDir dir;
    LabeledImageSet set;
    std::mt19937_64 rng(3);
    for (int i = 0; i < 5; ++i) {
        std::vector<double> px(6 * 7);
        for (auto &v : px) {
            v = static_cast<double>(rng() % 256) / 255.0;
        }
        set.images.emplace_back(std::vector<GrayImage>{GrayImage(6, 7, px)});
        set.labels.push_back(static_cast<Label>(i % 3));
    }
    set.class_count = 3;
    write_idx_images(dir / "img", set);
    write_idx_labels(dir / "lab", set.labels);
    const auto back = load_idx(dir / "img", dir / "lab");
    CHECK(back.images == set.images);
    CHECK(back.labels == set.labels);
    CHECK(encode_idx_images(back) == fusion::read_file_bytes(dir / "img"));
    CHECK(encode_idx_labels(set.labels) == fusion::read_file_bytes(dir / "lab"));
}

TEST_CASE("CIFAR-10 records") {
    std::string rec(3073, '\0');
    rec[0] = 6;
    rec[1] = static_cast<char>(11);
    rec[1025] = static_cast<char>(22);
    rec[2049] = static_cast<char>(255);
    rec[1 + 32 + 5] = static_cast<char>(51);
    const auto set = decode_cifar10(rec);
    REQUIRE(set.size() == 1);
    CHECK(set.labels == std::vector<Label>{6});
    const auto &img = set.images[0];
    CHECK(img.channel_count() == 3);
    CHECK(img.height() == 32);
    CHECK(img.channel(0)(0, 0) == 11.0 / 255.0);
    CHECK(img.channel(1)(0, 0) == 22.0 / 255.0);
    CHECK(img.channel(2)(0, 0) == 1.0);
    CHECK(img.channel(0)(1, 5) == 51.0 / 255.0);
    CHECK(decode_cifar10(rec + rec).size() == 2);
    CHECK(format_code([&] { (void)decode_cifar10(rec.substr(0, 3072)); }) == "truncated");
    CHECK(format_code([&] { (void)decode_cifar10(""); }) == "truncated");
    std::string bad = rec;
    bad[0] = 10;
    CHECK(format_code([&] { (void)decode_cifar10(bad); }) == "bad_value");

    TempDir dir;
    write(dir / "b1", rec);
    write(dir / "b2", rec + rec);
    CHECK(load_cifar10({dir / "b1", dir / "b2"}).size() == 3);
    CHECK_THROWS_AS((void)load_cifar10({}), InvalidArgument);
}

TEST_CASE("class-balanced subsampling") {
    LabeledImageSet set;
    for (int i = 0; i < 60; ++i) {
        set.images.emplace_back(std::vector<GrayImage>{GrayImage(2, 2, static_cast<double>(i) / 60.0)});
        set.labels.push_back(static_cast<Label>(i % 3 == 0 ? 0 : (i % 3 == 1 ? 1 : 2)));
    }
    set.labels[59] = 0;  // class 2 now has 19 members
    set.class_count = 3;
    set.class_names = {"zero", "one", "two"};
    const auto a = subsample_indices(set, 10, 7);
    CHECK(a == subsample_indices(set, 10, 7));
    CHECK(a != subsample_indices(set, 10, 8));
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 30);
    std::vector<int> per(3, 0);
    for (const auto i : a) {
        ++per[set.labels[i]];
    }
    CHECK(per == std::vector<int>{10, 10, 10});
    const auto sub = subsample(set, 10, 7);
    CHECK(sub.size() == 30);
    CHECK(sub.images[0] == set.images[a[0]]);
    try {
        (void)subsample_indices(set, 20, 1);
        FAIL("expected InvalidArgument");
    } catch (const InvalidArgument &e) {
        CHECK(std::string(e.what()).find("two") != std::string::npos);
    }
}

TEST_CASE("profiles") {
    CHECK(profiles().size() == 4);
    CHECK(find_profile("emnist-letters").class_count == 26);
    CHECK(find_profile("emnist-letters").transpose);
    CHECK(find_profile("emnist-letters").label_offset == 1);
    CHECK(find_profile("cifar10").channels == 3);
    CHECK(find_profile("fashion-mnist").class_names.size() == 10);
    CHECK_THROWS_AS((void)find_profile("mnist-fashion"), InvalidArgument);
}

TEST_CASE("checksums") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    const auto reg = read_checksum_registry(pool_dir / "SHA256SUMS");
    CHECK(reg.size() == 4);
    CHECK(verify_checksum(pool_dir / "train-labels-idx1-ubyte.gz", reg));
    TempDir dir;
    write(dir / "train-labels-idx1-ubyte.gz", "tampered");
    CHECK(format_code([&] { (void)verify_checksum(dir / "train-labels-idx1-ubyte.gz", reg); }) == "bad_value");
    write(dir / "other.bin", "x");
    CHECK_FALSE(verify_checksum(dir / "other.bin", reg));
    write(dir / "bad_registry", "name deadbeef\n");
    CHECK(format_code([&] { (void)read_checksum_registry(dir / "bad_registry"); }) == "bad_value");
}

TEST_CASE("gzip desk pool loads with the documented balance") {
    const auto train = load_idx(pool_dir / "train-images-idx3-ubyte.gz", pool_dir / "train-labels-idx1-ubyte.gz");
    const auto test = load_idx(pool_dir / "t10k-images-idx3-ubyte.gz", pool_dir / "t10k-labels-idx1-ubyte.gz");
    CHECK(train.size() == 5000);
    CHECK(test.size() == 3000);
    std::vector<int> per(10, 0);
    double lo = 1.0;
    double hi = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) {
        ++per[train.labels[i]];
        for (const double v : train.images[i].channel(0).pixels()) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    CHECK(per == std::vector<int>(10, 500));
    CHECK(lo >= 0.0);
    CHECK(hi <= 1.0);
    CHECK(train.images[0].height() == 28);
}
