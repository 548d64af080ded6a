#include "ood/pairs.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ood/error.hpp"

namespace ood {

namespace {

struct PairDrawer {
    PairBatch& batch;
    Rng& rng;
    std::set<std::pair<std::size_t, std::size_t>> seen;

    // keeps a drawn pair unless an identical one exists; after a bounded number
    // of redraws duplicates are accepted so tiny batches still fill the budget
    template <typename DrawFn>
    void emit(DrawFn draw, std::uint8_t y, std::uint8_t z) {
        std::pair<std::size_t, std::size_t> p;
        for (int attempt = 0; attempt < 30; ++attempt) {
            p = draw();
            auto key = std::minmax(p.first, p.second);
            if (seen.insert(std::pair(key.first, key.second)).second) break;
        }
        batch.pairs.push_back(p);
        batch.y.push_back(y);
        batch.z.push_back(z);
    }
};

}  // namespace

PairBatch build_pairs(const std::vector<int>& labels, const std::vector<SampleOrigin>& origins,
                      const PairSchedule& schedule, std::uint64_t step, Rng& rng) {
    if (labels.size() != origins.size())
        throw usage_error("build_pairs: labels and origins must align");
    if (schedule.cross_pair_ratio < 0.0 || schedule.cross_pair_ratio > 1.0 ||
        schedule.same_class_ratio < 0.0 || schedule.same_class_ratio > 1.0)
        throw usage_error("build_pairs: ratios must lie in [0, 1]");

    PairBatch batch;
    const std::size_t n = labels.size();

    std::vector<std::size_t> in_indices, out_indices;
    for (std::size_t i = 0; i < n; ++i) {
        (origins[i] == SampleOrigin::In ? in_indices : out_indices).push_back(i);
    }
    if (in_indices.size() < 2) {
        // a lone in-distribution sample (or none) cannot anchor any legal pair mix
        batch.warning = true;
        return batch;
    }

    // class -> members, in-distribution only; sorted class ids for determinism
    std::vector<std::pair<int, std::vector<std::size_t>>> by_class;
    for (std::size_t idx : in_indices) {
        auto it = std::find_if(by_class.begin(), by_class.end(),
                               [&](const auto& e) { return e.first == labels[idx]; });
        if (it == by_class.end())
            by_class.push_back({labels[idx], {idx}});
        else
            it->second.push_back(idx);
    }
    std::sort(by_class.begin(), by_class.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<std::size_t> classes_with_pairs;  // indices into by_class
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        if (by_class[c].second.size() >= 2) classes_with_pairs.push_back(c);
    }
    const bool same_feasible = !classes_with_pairs.empty();
    const bool diff_feasible = by_class.size() >= 2;

    const std::size_t budget = schedule.pairs_per_batch > 0 ? schedule.pairs_per_batch : n;
    std::size_t n_cross = 0;
    if (schedule.cross_step(step) && !out_indices.empty())
        n_cross = static_cast<std::size_t>(std::llround(schedule.cross_pair_ratio * static_cast<double>(budget)));
    std::size_t n_in = budget - n_cross;
    std::size_t n_same = static_cast<std::size_t>(std::llround(schedule.same_class_ratio * static_cast<double>(n_in)));
    std::size_t n_diff = n_in - n_same;
    if (!same_feasible) {
        n_diff += n_same;
        n_same = 0;
    }
    if (!diff_feasible) {
        n_same += n_diff;
        n_diff = 0;
    }
    if (!same_feasible && !diff_feasible) return batch;  // unreachable with >= 2 in samples

    PairDrawer drawer{batch, rng, {}};

    for (std::size_t i = 0; i < n_same; ++i) {
        drawer.emit(
            [&]() {
                const auto& members = by_class[classes_with_pairs[rng.below(classes_with_pairs.size())]].second;
                const std::size_t a = rng.below(members.size());
                std::size_t b = rng.below(members.size() - 1);
                if (b >= a) ++b;
                return std::pair(members[a], members[b]);
            },
            0, 1);
    }
    for (std::size_t i = 0; i < n_diff; ++i) {
        drawer.emit(
            [&]() {
                while (true) {
                    const std::size_t a = in_indices[rng.below(in_indices.size())];
                    const std::size_t b = in_indices[rng.below(in_indices.size())];
                    if (a != b && labels[a] != labels[b]) return std::pair(a, b);
                }
            },
            1, 1);
    }
    for (std::size_t i = 0; i < n_cross; ++i) {
        drawer.emit(
            [&]() {
                return std::pair(in_indices[rng.below(in_indices.size())],
                                 out_indices[rng.below(out_indices.size())]);
            },
            1, 1);
    }
    return batch;
}

}  // namespace ood
