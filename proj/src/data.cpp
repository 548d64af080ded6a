#include "ood/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "ood/error.hpp"
#include "ood/rng.hpp"

namespace ood {

std::string origin_tag(Origin origin, const std::string& anomaly_source) {
    switch (origin) {
        case Origin::In: return "in";
        case Origin::SeenOut: return "seen_out";
        case Origin::UnseenNovelty: return "unseen_out_novelty";
        case Origin::Anomaly: return "anomaly:" + anomaly_source;
    }
    return "?";
}

LabeledImageSet LabeledImageSet::subset(const std::vector<std::size_t>& indices) const {
    const std::size_t per = height() * width() * channels();
    LabeledImageSet out;
    out.images = Tensor({indices.size(), height(), width(), channels()});
    out.labels.reserve(indices.size());
    out.origins.reserve(indices.size());
    out.anomaly_source = anomaly_source;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t src = indices[i];
        if (src >= count()) throw usage_error("subset index out of range");
        std::copy_n(images.data() + src * per, per, out.images.data() + i * per);
        out.labels.push_back(labels[src]);
        out.origins.push_back(origins[src]);
    }
    return out;
}

void LabeledImageSet::check_pixels() const {
    for (double v : images.values()) {
        if (!(v >= 0.0 && v <= 1.0))
            throw usage_error("pixel value " + std::to_string(v) + " outside [0,1]");
    }
}

AnomalyKind anomaly_kind_from_string(const std::string& name) {
    if (name == "gaussian_noise") return AnomalyKind::GaussianNoise;
    if (name == "cifar10") return AnomalyKind::Cifar10;
    if (name == "none") return AnomalyKind::None;
    throw config_error("unknown anomaly source '" + name + "'");
}

std::string to_string(AnomalyKind kind) {
    switch (kind) {
        case AnomalyKind::GaussianNoise: return "gaussian_noise";
        case AnomalyKind::Cifar10: return "cifar10";
        case AnomalyKind::None: return "none";
    }
    return "?";
}

void SplitConfig::validate() const {
    if (in_classes.size() < 2)
        throw config_error("split: need at least 2 in-distribution classes for pairing");
    auto overlap = [](const std::vector<int>& a, const std::vector<int>& b) {
        std::set<int> sa(a.begin(), a.end());
        for (int v : b)
            if (sa.count(v)) return true;
        return false;
    };
    if (overlap(in_classes, seen_out_classes) || overlap(in_classes, unseen_out_classes) ||
        overlap(seen_out_classes, unseen_out_classes))
        throw config_error("split: class sets must be pairwise disjoint");
    std::set<int> uniq(in_classes.begin(), in_classes.end());
    if (uniq.size() != in_classes.size()) throw config_error("split: duplicate in-distribution class");
}

namespace {

std::uint32_t read_be_u32(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw format_error(path + ": truncated at byte " + std::to_string(is.tellg()));
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

std::vector<unsigned char> read_all_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw format_error("cannot open " + path);
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

LabeledImageSet load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw format_error("cannot open " + images_path);
    const std::uint32_t img_magic = read_be_u32(imgs, images_path);
    if (img_magic != 0x00000803u)
        throw format_error(images_path + ": bad magic 0x" +
                           (std::ostringstream() << std::hex << img_magic).str() + " at byte 0 (want 0x803)");
    const std::uint32_t n = read_be_u32(imgs, images_path);
    const std::uint32_t rows = read_be_u32(imgs, images_path);
    const std::uint32_t cols = read_be_u32(imgs, images_path);

    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw format_error("cannot open " + labels_path);
    const std::uint32_t lab_magic = read_be_u32(labs, labels_path);
    if (lab_magic != 0x00000801u)
        throw format_error(labels_path + ": bad magic 0x" +
                           (std::ostringstream() << std::hex << lab_magic).str() + " at byte 0 (want 0x801)");
    const std::uint32_t n_labels = read_be_u32(labs, labels_path);
    if (n_labels != n)
        throw format_error(labels_path + ": label count " + std::to_string(n_labels) +
                           " does not match image count " + std::to_string(n) + " (byte 4)");

    LabeledImageSet out;
    out.images = Tensor({n, rows, cols, 1});
    out.labels.resize(n);
    out.origins.assign(n, Origin::In);

    std::vector<unsigned char> buf(static_cast<std::size_t>(rows) * cols);
    for (std::uint32_t i = 0; i < n; ++i) {
        if (!imgs.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
            throw format_error(images_path + ": truncated at byte " +
                               std::to_string(16 + static_cast<std::size_t>(i) * buf.size()));
        double* dst = out.images.data() + static_cast<std::size_t>(i) * buf.size();
        for (std::size_t j = 0; j < buf.size(); ++j) dst[j] = buf[j] / 255.0;
    }
    std::vector<unsigned char> lab_buf(n);
    if (n > 0 && !labs.read(reinterpret_cast<char*>(lab_buf.data()), static_cast<std::streamsize>(n)))
        throw format_error(labels_path + ": truncated at byte 8");
    for (std::uint32_t i = 0; i < n; ++i) out.labels[i] = lab_buf[i];
    return out;
}

LabeledImageSet load_cifar10_binary(const std::vector<std::string>& paths) {
    constexpr std::size_t kRecord = 3073;  // label + 32*32*3
    constexpr std::size_t kPlane = 1024;

    std::vector<std::vector<unsigned char>> files;
    std::size_t total = 0;
    for (const std::string& path : paths) {
        std::vector<unsigned char> bytes = read_all_bytes(path);
        if (bytes.size() % kRecord != 0)
            throw format_error(path + ": size " + std::to_string(bytes.size()) +
                               " is not a multiple of 3073");
        if (bytes.empty()) std::cerr << "warning: " << path << " holds 0 records\n";
        total += bytes.size() / kRecord;
        files.push_back(std::move(bytes));
    }

    LabeledImageSet out;
    out.images = Tensor({total, 32, 32, 3});
    out.labels.resize(total);
    out.origins.assign(total, Origin::Anomaly);
    out.anomaly_source = "cifar10";

    std::size_t rec = 0;
    for (const auto& bytes : files) {
        for (std::size_t off = 0; off < bytes.size(); off += kRecord, ++rec) {
            out.labels[rec] = bytes[off];
            double* img = out.images.data() + rec * 32 * 32 * 3;
            for (std::size_t p = 0; p < kPlane; ++p) {
                img[p * 3 + 0] = bytes[off + 1 + p] / 255.0;
                img[p * 3 + 1] = bytes[off + 1 + kPlane + p] / 255.0;
                img[p * 3 + 2] = bytes[off + 1 + 2 * kPlane + p] / 255.0;
            }
        }
    }
    return out;
}

LabeledImageSet adapt_anomaly(const LabeledImageSet& set, std::size_t target_h, std::size_t target_w,
                              std::size_t target_c) {
    if (target_h == 0 || target_w == 0 || target_c == 0)
        throw usage_error("adapt_anomaly: target dims must be positive");
    const std::size_t h = set.height(), w = set.width(), c = set.channels();
    if (!(c == target_c || (c == 3 && target_c == 1)))
        throw usage_error("adapt_anomaly: unsupported channel conversion " + std::to_string(c) + " -> " +
                          std::to_string(target_c));

    if (h == target_h && w == target_w && c == target_c) return set;  // bit-identical

    LabeledImageSet out;
    out.images = Tensor({set.count(), target_h, target_w, target_c});
    out.labels = set.labels;
    out.origins = set.origins;
    out.anomaly_source = set.anomaly_source;

    // grayscale first (luminance), then bilinear resample with half-pixel centers
    const std::size_t mid_c = target_c;
    Tensor gray;
    const Tensor* src = &set.images;
    if (c == 3 && target_c == 1) {
        gray = Tensor({set.count(), h, w, 1});
        for (std::size_t i = 0; i < set.count(); ++i) {
            const double* in = set.images.data() + i * h * w * 3;
            double* dst = gray.data() + i * h * w;
            for (std::size_t p = 0; p < h * w; ++p)
                dst[p] = 0.299 * in[p * 3] + 0.587 * in[p * 3 + 1] + 0.114 * in[p * 3 + 2];
        }
        src = &gray;
    }

    if (h == target_h && w == target_w) {
        out.images = *src;
        return out;
    }

    const double sy = static_cast<double>(h) / static_cast<double>(target_h);
    const double sx = static_cast<double>(w) / static_cast<double>(target_w);
    for (std::size_t i = 0; i < set.count(); ++i) {
        const double* in = src->data() + i * h * w * mid_c;
        double* dst = out.images.data() + i * target_h * target_w * mid_c;
        for (std::size_t y = 0; y < target_h; ++y) {
            const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
            const std::size_t y0 = static_cast<std::size_t>(fy);
            const std::size_t y1 = std::min(y0 + 1, h - 1);
            const double wy = fy - static_cast<double>(y0);
            for (std::size_t x = 0; x < target_w; ++x) {
                const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
                const std::size_t x0 = static_cast<std::size_t>(fx);
                const std::size_t x1 = std::min(x0 + 1, w - 1);
                const double wx = fx - static_cast<double>(x0);
                for (std::size_t ch = 0; ch < mid_c; ++ch) {
                    const double v00 = in[(y0 * w + x0) * mid_c + ch];
                    const double v01 = in[(y0 * w + x1) * mid_c + ch];
                    const double v10 = in[(y1 * w + x0) * mid_c + ch];
                    const double v11 = in[(y1 * w + x1) * mid_c + ch];
                    const double top = v00 + (v01 - v00) * wx;
                    const double bot = v10 + (v11 - v10) * wx;
                    dst[(y * target_w + x) * mid_c + ch] = std::clamp(top + (bot - top) * wy, 0.0, 1.0);
                }
            }
        }
    }
    return out;
}

LabeledImageSet gaussian_noise_set(std::size_t n, std::size_t h, std::size_t w, std::size_t c,
                                   double mean, double stddev, std::uint64_t seed) {
    if (n == 0) throw usage_error("gaussian_noise_set: n must be positive");
    LabeledImageSet out;
    out.images = Tensor({n, h, w, c});
    out.labels.assign(n, kOodLabel);
    out.origins.assign(n, Origin::Anomaly);
    out.anomaly_source = "gaussian_noise";

    Rng rng(seed);
    for (double& v : out.images.values()) v = std::clamp(rng.normal(mean, stddev), 0.0, 1.0);
    return out;
}

LabeledImageSet synthetic_blobs(std::size_t n_per_class, std::size_t n_classes, std::size_t dims,
                                double separation, std::uint64_t seed) {
    if (separation <= 0.0) throw usage_error("synthetic_blobs: separation must be positive");
    if (n_per_class == 0 || n_classes == 0 || dims == 0)
        throw usage_error("synthetic_blobs: counts must be positive");

    Rng rng(seed);

    // distinct random corners of {0.15, 0.85}^dims
    std::set<std::vector<int>> taken;
    std::vector<std::vector<double>> centers;
    while (centers.size() < n_classes) {
        std::vector<int> bits(dims);
        for (auto& b : bits) b = rng.below(2) == 1;
        if (!taken.insert(bits).second) continue;
        std::vector<double> center(dims);
        for (std::size_t j = 0; j < dims; ++j) center[j] = bits[j] ? 0.85 : 0.15;
        centers.push_back(std::move(center));
    }

    double min_dist = std::sqrt(0.49 * static_cast<double>(dims));  // all-bits-differ upper bound
    for (std::size_t a = 0; a < centers.size(); ++a) {
        for (std::size_t b = a + 1; b < centers.size(); ++b) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < dims; ++j) {
                const double diff = centers[a][j] - centers[b][j];
                d2 += diff * diff;
            }
            min_dist = std::min(min_dist, std::sqrt(d2));
        }
    }
    const double sigma = n_classes > 1 ? min_dist / separation : 0.7 / separation;

    const std::size_t n = n_per_class * n_classes;
    LabeledImageSet out;
    out.images = Tensor({n, dims, 1, 1});
    out.labels.resize(n);
    out.origins.assign(n, Origin::In);
    for (std::size_t cls = 0; cls < n_classes; ++cls) {
        for (std::size_t i = 0; i < n_per_class; ++i) {
            const std::size_t idx = cls * n_per_class + i;
            out.labels[idx] = static_cast<int>(cls);
            double* v = out.images.data() + idx * dims;
            for (std::size_t j = 0; j < dims; ++j)
                v[j] = std::clamp(centers[cls][j] + sigma * rng.normal(), 0.0, 1.0);
        }
    }
    return out;
}

namespace {

std::vector<std::size_t> indices_with_labels(const LabeledImageSet& set, const std::vector<int>& classes) {
    std::set<int> wanted(classes.begin(), classes.end());
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < set.count(); ++i)
        if (wanted.count(set.labels[i])) idx.push_back(i);
    return idx;
}

void require_classes_present(const LabeledImageSet& set, const std::vector<int>& classes,
                             const std::string& which) {
    std::set<int> present(set.labels.begin(), set.labels.end());
    std::vector<int> missing;
    for (int c : classes)
        if (!present.count(c)) missing.push_back(c);
    if (!missing.empty()) {
        std::ostringstream os;
        os << which << " classes absent from dataset:";
        for (int c : missing) os << " " << c;
        throw config_error(os.str());
    }
}

}  // namespace

SplitResult apply_split(const LabeledImageSet& train_set, const LabeledImageSet& test_set,
                        const SplitConfig& config) {
    config.validate();
    require_classes_present(train_set, config.in_classes, "in-distribution (train)");
    require_classes_present(test_set, config.in_classes, "in-distribution (test)");
    require_classes_present(train_set, config.seen_out_classes, "seen out-distribution");
    require_classes_present(test_set, config.unseen_out_classes, "unseen out-distribution");

    SplitResult r;
    r.train_in = train_set.subset(indices_with_labels(train_set, config.in_classes));
    r.seen_out = train_set.subset(indices_with_labels(train_set, config.seen_out_classes));
    r.test_in = test_set.subset(indices_with_labels(test_set, config.in_classes));
    r.unseen_out = test_set.subset(indices_with_labels(test_set, config.unseen_out_classes));

    std::fill(r.train_in.origins.begin(), r.train_in.origins.end(), Origin::In);
    std::fill(r.seen_out.origins.begin(), r.seen_out.origins.end(), Origin::SeenOut);
    std::fill(r.test_in.origins.begin(), r.test_in.origins.end(), Origin::In);
    std::fill(r.unseen_out.origins.begin(), r.unseen_out.origins.end(), Origin::UnseenNovelty);
    return r;
}

std::pair<LabeledImageSet, LabeledImageSet> holdout_split(const LabeledImageSet& set, double fraction,
                                                          std::uint64_t seed) {
    if (fraction < 0.0 || fraction >= 1.0) throw usage_error("holdout fraction must lie in [0, 1)");
    std::vector<std::size_t> order(set.count());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    const std::size_t n_holdout = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(order.size())));
    std::vector<std::size_t> held(order.begin(), order.begin() + n_holdout);
    std::vector<std::size_t> kept(order.begin() + n_holdout, order.end());
    std::sort(held.begin(), held.end());
    std::sort(kept.begin(), kept.end());
    return {set.subset(kept), set.subset(held)};
}

Tensor make_network_batch(const LabeledImageSet& set, const std::vector<std::size_t>& indices) {
    const std::size_t h = set.height(), w = set.width(), c = set.channels();
    Tensor batch({indices.size(), c, h, w});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const double* src = set.images.data() + indices[i] * h * w * c;
        double* dst = batch.data() + i * c * h * w;
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                for (std::size_t ch = 0; ch < c; ++ch) dst[ch * h * w + y * w + x] = src[(y * w + x) * c + ch];
    }
    return batch;
}

}  // namespace ood
