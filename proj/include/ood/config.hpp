#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ood/data.hpp"
#include "ood/network.hpp"
#include "ood/pairs.hpp"

namespace ood {

// Experiment configuration: flat key = value file with [section] headers,
// overridable from the command line with --set section.key=value.
struct ExperimentConfig {
    // data
    std::string dataset = "idx";  // idx | blobs
    std::string data_dir = "data";
    SplitConfig split;
    std::size_t anomaly_count = 1000;
    double noise_mean = 0.5;
    double noise_stddev = 1.0;
    double validation_fraction = 0.1;
    std::size_t blob_per_class = 200;
    std::size_t blob_dims = 16;
    double blob_separation = 10.0;

    // model
    std::string arch =
        "conv2d:8:5:1,relu,maxpool2d:2,conv2d:16:5:1,relu,maxpool2d:2,dense:64,relu,dense:embed";
    std::size_t embedding_dim = 5;

    // train
    std::string mode = "odm";  // ce | ml | odm
    double margin = 10.0;
    std::string optimizer = "adam";
    double learning_rate = 1e-4;
    std::size_t batch_size = 64;
    std::size_t steps = 5000;
    std::uint64_t seed = 1;

    // pairs
    PairSchedule schedule;

    std::string out_dir = "run";

    static ExperimentConfig load(const std::string& path,
                                 const std::vector<std::string>& overrides = {});
    static ExperimentConfig from_overrides(const std::vector<std::string>& overrides);

    // resolves derived fields (ce head width) and checks the invariants;
    // throws config_error naming the offending field
    void finalize();

    // full resolved key = value view, sorted; echoed into reports so a run can
    // be reproduced exactly
    std::map<std::string, std::string> echo() const;

    std::size_t head_dim() const;  // |in_classes| for ce, embedding_dim otherwise
};

// Parses the layer DSL: comma-separated entries
//   conv2d:OUT:KERNEL:STRIDE | maxpool2d:WINDOW | relu | dense:OUT | dense:embed
// Input widths are inferred from input_shape; "embed" resolves to head_dim.
std::vector<LayerSpec> parse_architecture(const std::string& arch, const std::vector<std::size_t>& input_shape,
                                          std::size_t head_dim);

}  // namespace ood
