#pragma once

#include <map>
#include <string>
#include <vector>

#include "ood/config.hpp"
#include "ood/data.hpp"
#include "ood/metrics.hpp"
#include "ood/network.hpp"

namespace ood {

// Named RNG substreams derived from the experiment seed.
enum SeedStream : std::uint64_t {
    kStreamInit = 1,
    kStreamBatch = 2,
    kStreamPairs = 3,
    kStreamHoldout = 4,
    kStreamNoiseTrain = 5,
    kStreamNoiseEval = 6,
    kStreamBlobTrain = 7,
    kStreamBlobTest = 8,
    kStreamValPairs = 9,
};

// Everything a run needs, loaded/generated per the configuration.
struct ExperimentData {
    SplitResult split;
    LabeledImageSet train_core;  // train_in minus the validation holdout
    LabeledImageSet validation;
    std::vector<LabeledImageSet> seen_anomalies;  // extra training out-pool sets
    std::vector<LabeledImageSet> eval_anomalies;  // test-time anomaly sets, network geometry
    std::vector<std::size_t> input_shape() const;  // {C,H,W}
};

ExperimentData load_experiment_data(const ExperimentConfig& cfg);

struct TrainResult {
    double final_loss = 0.0;
    std::uint64_t out_out_pairs = 0;  // instrumented; any legal run ends at 0
    double wall_seconds = 0.0;
};

// Trains per cfg.mode and writes checkpoint.bin, loss_log.csv, train_report.json,
// config_echo.txt, centroids.csv (ml/odm) and timings.json into cfg.out_dir.
TrainResult cmd_train(const ExperimentConfig& cfg);

struct EvalResult {
    double in_dist_accuracy = 0.0;
    std::map<std::string, MetricsReport> per_source;  // novelty / gaussian_noise / cifar10
};

// Scores test_in and every out-distribution source with the trained detector and
// writes metrics_<source>.json, scores_<source>.csv, embeddings.csv and
// run_report.json into cfg.out_dir.
EvalResult cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path = "");

// Side-by-side table over completed runs (report.csv + report.json) plus
// per-run PCA plot data (pca_<run>.csv) in out_dir.
void cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir);

// report.csv contents as the JSON emitted alongside it (round-trip helper).
std::string report_csv_to_json(const std::string& csv_path);

// embeddings.csv helpers shared by eval, report and the tests
void write_embeddings_csv(const std::string& path, const Tensor& embeddings,
                          const std::vector<int>& labels, const std::vector<std::string>& origin_tags);
struct EmbeddingsFile {
    Tensor embeddings;
    std::vector<int> labels;
    std::vector<std::string> origin_tags;
};
EmbeddingsFile read_embeddings_csv(const std::string& path);

}  // namespace ood
