#pragma once

#include <cstdint>
#include <vector>

#include "ood/rng.hpp"

namespace ood {

// Per-sample origin tag inside a minibatch: in-distribution or out-of-distribution.
enum class SampleOrigin : std::uint8_t { In = 0, Out = 1 };

// Index pairs into a minibatch with the pair labels of the metric losses:
// y = 0 same class, y = 1 different class; z = 0 both out-of-distribution,
// z = 1 otherwise. The builder never emits z = 0 or out/out pairs.
struct PairBatch {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<std::uint8_t> y;
    std::vector<std::uint8_t> z;
    bool warning = false;  // set when the batch had < 2 usable samples

    std::size_t size() const { return pairs.size(); }
};

// How pairs are drawn from a minibatch.
//   - steps are 1-based; a step s mixes (in, out) cross pairs iff s % period == 0
//     (period 2: every second batch), at cross_pair_ratio of the pair budget
//   - remaining pairs are in/in, split same-class / different-class by
//     same_class_ratio
//   - pair budget = minibatch size unless pairs_per_batch overrides it
struct PairSchedule {
    double cross_pair_ratio = 0.25;
    std::size_t period = 2;
    double same_class_ratio = 0.5;
    std::size_t pairs_per_batch = 0;  // 0 = use minibatch size

    bool cross_step(std::uint64_t step) const { return period > 0 && step % period == 0; }
};

// labels: class id per sample (out-of-distribution members may carry any value;
// they are identified by origin). Never emits self-pairs or out/out pairs; every
// out member paired gets y=1, z=1 against an in-distribution partner.
PairBatch build_pairs(const std::vector<int>& labels, const std::vector<SampleOrigin>& origins,
                      const PairSchedule& schedule, std::uint64_t step, Rng& rng);

}  // namespace ood
