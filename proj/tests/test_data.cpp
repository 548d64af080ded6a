#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "ood/data.hpp"
#include "ood/error.hpp"

using namespace ood;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("oodkit_data_test_" + std::to_string(::getpid()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream os(path, std::ios::binary);
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> idx_images_fixture() {
    return {0x00, 0x00, 0x08, 0x03,  // magic
            0x00, 0x00, 0x00, 0x02,  // 2 images
            0x00, 0x00, 0x00, 0x02,  // 2 rows
            0x00, 0x00, 0x00, 0x02,  // 2 cols
            0,    255,  128,  64,    // image 0
            255,  0,    0,    255};  // image 1
}

std::vector<std::uint8_t> idx_labels_fixture(std::uint32_t count, const std::vector<std::uint8_t>& labels) {
    std::vector<std::uint8_t> bytes = {0x00, 0x00, 0x08, 0x01,
                                       static_cast<std::uint8_t>(count >> 24),
                                       static_cast<std::uint8_t>(count >> 16),
                                       static_cast<std::uint8_t>(count >> 8),
                                       static_cast<std::uint8_t>(count)};
    bytes.insert(bytes.end(), labels.begin(), labels.end());
    return bytes;
}

}  // namespace

TEST_CASE("idx fixture loads with exact pixel scaling") {
    TempDir dir;
    write_bytes(dir.file("imgs"), idx_images_fixture());
    write_bytes(dir.file("labs"), idx_labels_fixture(2, {3, 7}));

    const LabeledImageSet set = load_idx(dir.file("imgs"), dir.file("labs"));
    CHECK(set.count() == 2);
    CHECK(set.height() == 2);
    CHECK(set.width() == 2);
    CHECK(set.channels() == 1);
    CHECK(set.labels == std::vector<int>{3, 7});
    CHECK(set.images[0] == 0.0);
    CHECK(set.images[1] == 1.0);
    CHECK(set.images[2] == 128.0 / 255.0);
    CHECK(set.images[3] == 64.0 / 255.0);
    CHECK(set.images[4] == 1.0);
    set.check_pixels();
}

TEST_CASE("idx loader rejects bad magic, truncation and count mismatch") {
    TempDir dir;
    auto imgs = idx_images_fixture();
    imgs[3] = 0x99;
    write_bytes(dir.file("badmagic"), imgs);
    write_bytes(dir.file("labs"), idx_labels_fixture(2, {3, 7}));
    CHECK_THROWS_WITH_AS(load_idx(dir.file("badmagic"), dir.file("labs")), doctest::Contains("byte 0"),
                         format_error);

    auto truncated = idx_images_fixture();
    truncated.resize(truncated.size() - 3);
    write_bytes(dir.file("trunc"), truncated);
    CHECK_THROWS_AS(load_idx(dir.file("trunc"), dir.file("labs")), format_error);

    write_bytes(dir.file("imgs"), idx_images_fixture());
    write_bytes(dir.file("extra"), idx_labels_fixture(3, {3, 7, 1}));  // one record too many
    CHECK_THROWS_WITH_AS(load_idx(dir.file("imgs"), dir.file("extra")), doctest::Contains("count"),
                         format_error);
}

TEST_CASE("cifar fixture round trips exact bytes") {
    TempDir dir;
    std::vector<std::uint8_t> record(3073, 0);
    record[0] = 5;  // label
    record[1] = 255;              // R of pixel 0
    record[1 + 1024] = 128;       // G of pixel 0
    record[1 + 2048] = 0;         // B of pixel 0
    record[2] = 10;               // R of pixel 1
    write_bytes(dir.file("batch.bin"), record);

    const LabeledImageSet set = load_cifar10_binary({dir.file("batch.bin")});
    CHECK(set.count() == 1);
    CHECK(set.labels[0] == 5);
    CHECK(set.images[0] == 1.0);            // R interleaved first
    CHECK(set.images[1] == 128.0 / 255.0);  // G
    CHECK(set.images[2] == 0.0);            // B
    CHECK(set.images[3] == 10.0 / 255.0);   // next pixel R
    CHECK(set.anomaly_source == "cifar10");
    set.check_pixels();
}

TEST_CASE("cifar loader flags empty and misaligned files") {
    TempDir dir;
    write_bytes(dir.file("empty.bin"), {});
    const LabeledImageSet set = load_cifar10_binary({dir.file("empty.bin")});
    CHECK(set.count() == 0);

    write_bytes(dir.file("ragged.bin"), std::vector<std::uint8_t>(3072, 1));
    CHECK_THROWS_WITH_AS(load_cifar10_binary({dir.file("ragged.bin")}), doctest::Contains("3073"),
                         format_error);
}

TEST_CASE("adapt with identity geometry is bit identical") {
    LabeledImageSet set = gaussian_noise_set(3, 5, 4, 1, 0.5, 0.25, 99);
    const LabeledImageSet same = adapt_anomaly(set, 5, 4, 1);
    for (std::size_t i = 0; i < set.images.size(); ++i) CHECK(same.images[i] == set.images[i]);
}

TEST_CASE("constant color collapses to its luminance") {
    LabeledImageSet set;
    set.images = Tensor({1, 2, 2, 3});
    set.labels = {kOodLabel};
    set.origins = {Origin::Anomaly};
    for (std::size_t p = 0; p < 4; ++p) {
        set.images[p * 3 + 0] = 0.25;
        set.images[p * 3 + 1] = 0.5;
        set.images[p * 3 + 2] = 0.75;
    }
    const double lum = 0.299 * 0.25 + 0.587 * 0.5 + 0.114 * 0.75;
    const LabeledImageSet gray = adapt_anomaly(set, 2, 2, 1);
    for (std::size_t p = 0; p < 4; ++p) CHECK(gray.images[p] == doctest::Approx(lum).epsilon(1e-15));
}

TEST_CASE("2x2 checkerboard upscales to the hand-computed bilinear 4x4") {
    LabeledImageSet set;
    set.images = Tensor({1, 2, 2, 1}, {1.0, 0.0, 0.0, 1.0});
    set.labels = {kOodLabel};
    set.origins = {Origin::Anomaly};

    const LabeledImageSet up = adapt_anomaly(set, 4, 4, 1);
    const double expect[16] = {1.0,  0.75,  0.25,  0.0,   //
                               0.75, 0.625, 0.375, 0.25,  //
                               0.25, 0.375, 0.625, 0.75,  //
                               0.0,  0.25,  0.75,  1.0};
    for (std::size_t i = 0; i < 16; ++i) CHECK(up.images[i] == doctest::Approx(expect[i]).epsilon(1e-12));
    up.check_pixels();
}

TEST_CASE("unsupported channel conversions are refused") {
    LabeledImageSet set = gaussian_noise_set(1, 4, 4, 1, 0.5, 0.1, 7);
    CHECK_THROWS_AS(adapt_anomaly(set, 4, 4, 3), usage_error);
}

TEST_CASE("zero-stddev noise is constant at the mean") {
    const LabeledImageSet set = gaussian_noise_set(4, 3, 3, 1, 0.25, 0.0, 5);
    for (double v : set.images.values()) CHECK(v == 0.25);
    CHECK(set.labels[0] == kOodLabel);
    CHECK(set.anomaly_source == "gaussian_noise");
}

TEST_CASE("noise generation is deterministic per seed") {
    const LabeledImageSet a = gaussian_noise_set(8, 6, 6, 1, 0.5, 1.0, 1234);
    const LabeledImageSet b = gaussian_noise_set(8, 6, 6, 1, 0.5, 1.0, 1234);
    const LabeledImageSet c = gaussian_noise_set(8, 6, 6, 1, 0.5, 1.0, 1235);
    bool differs = false;
    for (std::size_t i = 0; i < a.images.size(); ++i) {
        CHECK(a.images[i] == b.images[i]);
        differs |= a.images[i] != c.images[i];
    }
    CHECK(differs);
}

TEST_CASE("clipped symmetric noise keeps its mean near the center") {
    const LabeledImageSet set = gaussian_noise_set(100, 10, 10, 1, 0.5, 1.0, 2024);
    double mean = 0.0;
    for (double v : set.images.values()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        mean += v;
    }
    mean /= static_cast<double>(set.images.size());
    CHECK(mean == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("blobs: one class, determinism, separation") {
    const LabeledImageSet single = synthetic_blobs(10, 1, 8, 10.0, 3);
    for (int label : single.labels) CHECK(label == 0);

    const LabeledImageSet a = synthetic_blobs(20, 3, 8, 10.0, 4);
    const LabeledImageSet b = synthetic_blobs(20, 3, 8, 10.0, 4);
    for (std::size_t i = 0; i < a.images.size(); ++i) CHECK(a.images[i] == b.images[i]);
    a.check_pixels();

    // per-class means stay near their own corner: within-class spread is tiny
    // compared with the inter-class distances at separation 10
    const std::size_t dims = 8;
    std::vector<std::vector<double>> means(3, std::vector<double>(dims, 0.0));
    for (std::size_t i = 0; i < a.count(); ++i)
        for (std::size_t j = 0; j < dims; ++j)
            means[static_cast<std::size_t>(a.labels[i])][j] += a.images[i * dims + j] / 20.0;
    for (std::size_t c1 = 0; c1 < 3; ++c1) {
        for (std::size_t c2 = c1 + 1; c2 < 3; ++c2) {
            double dist2 = 0.0;
            for (std::size_t j = 0; j < dims; ++j)
                dist2 += (means[c1][j] - means[c2][j]) * (means[c1][j] - means[c2][j]);
            CHECK(std::sqrt(dist2) > 0.3);
        }
    }
}

TEST_CASE("apply_split partitions by class with the right tags") {
    const LabeledImageSet train = synthetic_blobs(6, 6, 4, 10.0, 11);
    const LabeledImageSet test = synthetic_blobs(4, 6, 4, 10.0, 12);

    SplitConfig cfg;
    cfg.in_classes = {0, 1, 2};
    cfg.seen_out_classes = {3, 4};
    cfg.unseen_out_classes = {5};

    const SplitResult r = apply_split(train, test, cfg);
    CHECK(r.train_in.count() == 18);
    CHECK(r.seen_out.count() == 12);
    CHECK(r.test_in.count() == 12);
    CHECK(r.unseen_out.count() == 4);

    for (int l : r.train_in.labels) CHECK((l == 0 || l == 1 || l == 2));
    for (int l : r.seen_out.labels) CHECK((l == 3 || l == 4));
    for (int l : r.unseen_out.labels) CHECK(l == 5);
    for (Origin o : r.train_in.origins) CHECK(o == Origin::In);
    for (Origin o : r.seen_out.origins) CHECK(o == Origin::SeenOut);
    for (Origin o : r.unseen_out.origins) CHECK(o == Origin::UnseenNovelty);

    // partitions are disjoint by construction of the class sets
    CHECK(origin_tag(Origin::UnseenNovelty, "") == "unseen_out_novelty");
    CHECK(origin_tag(Origin::Anomaly, "cifar10") == "anomaly:cifar10");
}

TEST_CASE("overlapping or missing classes are configuration errors") {
    const LabeledImageSet train = synthetic_blobs(4, 3, 4, 10.0, 13);
    const LabeledImageSet test = synthetic_blobs(4, 3, 4, 10.0, 14);

    SplitConfig overlapping;
    overlapping.in_classes = {0, 1};
    overlapping.seen_out_classes = {1, 2};
    CHECK_THROWS_AS(apply_split(train, test, overlapping), config_error);

    SplitConfig missing;
    missing.in_classes = {0, 1};
    missing.unseen_out_classes = {9};
    CHECK_THROWS_WITH_AS(apply_split(train, test, missing), doctest::Contains("9"), config_error);

    SplitConfig too_few;
    too_few.in_classes = {0};
    CHECK_THROWS_AS(apply_split(train, test, too_few), config_error);
}

TEST_CASE("empty unseen set is legal") {
    const LabeledImageSet train = synthetic_blobs(4, 3, 4, 10.0, 15);
    const LabeledImageSet test = synthetic_blobs(4, 3, 4, 10.0, 16);
    SplitConfig cfg;
    cfg.in_classes = {0, 1, 2};
    const SplitResult r = apply_split(train, test, cfg);
    CHECK(r.unseen_out.count() == 0);
    CHECK(r.seen_out.count() == 0);
}

TEST_CASE("holdout split is seeded and sized") {
    const LabeledImageSet set = synthetic_blobs(30, 2, 4, 10.0, 17);
    const auto [kept_a, held_a] = holdout_split(set, 0.1, 5);
    const auto [kept_b, held_b] = holdout_split(set, 0.1, 5);
    CHECK(held_a.count() == 6);
    CHECK(kept_a.count() == 54);
    for (std::size_t i = 0; i < held_a.images.size(); ++i) CHECK(held_a.images[i] == held_b.images[i]);
}

TEST_CASE("network batches transpose HWC to CHW") {
    LabeledImageSet set;
    set.images = Tensor({1, 2, 2, 3});
    set.labels = {0};
    set.origins = {Origin::In};
    for (std::size_t i = 0; i < 12; ++i) set.images[i] = static_cast<double>(i) / 12.0;

    const Tensor batch = make_network_batch(set, {0});
    CHECK(batch.shape() == std::vector<std::size_t>{1, 3, 2, 2});
    // channel 0 plane = HWC values at stride 3
    CHECK(batch[0] == set.images[0]);
    CHECK(batch[1] == set.images[3]);
    CHECK(batch[2] == set.images[6]);
    CHECK(batch[3] == set.images[9]);
    // channel 1 plane
    CHECK(batch[4] == set.images[1]);
}
