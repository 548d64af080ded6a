#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ood/error.hpp"
#include "ood/experiment.hpp"

using namespace ood;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is.good());
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

ExperimentConfig blob_config(const std::string& out_dir, const std::string& mode) {
    ExperimentConfig cfg;
    cfg.dataset = "blobs";
    cfg.split.in_classes = {0, 1, 2};
    cfg.split.seen_out_classes = {3, 4};
    cfg.split.unseen_out_classes = {5};
    cfg.split.anomaly_sources = {{AnomalyKind::GaussianNoise, false}};
    cfg.anomaly_count = 64;
    cfg.blob_dims = 16;
    cfg.blob_per_class = 64;
    cfg.blob_separation = 10.0;
    cfg.arch = "dense:32,relu,dense:embed";
    cfg.embedding_dim = 5;
    cfg.mode = mode;
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 32;
    cfg.steps = 400;
    cfg.seed = 9;
    cfg.out_dir = out_dir;
    cfg.finalize();
    return cfg;
}

struct TempTree {
    fs::path root;
    TempTree() : root(fs::temp_directory_path() / ("oodkit_exp_" + std::to_string(::getpid()))) {
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~TempTree() { fs::remove_all(root); }
    std::string dir(const std::string& name) const { return (root / name).string(); }
};

}  // namespace

TEST_CASE("config file parsing with sections and overrides") {
    TempTree tree;
    const std::string path = tree.dir("exp.conf");
    {
        std::ofstream os(path);
        os << "# experiment\n"
           << "[data]\n"
           << "dataset = blobs\n"
           << "in_classes = 0, 1\n"
           << "anomaly_sources = gaussian_noise:seen\n"
           << "[train]\n"
           << "mode = odm\n"
           << "steps = 50\n";
    }
    ExperimentConfig cfg = ExperimentConfig::load(path, {"train.batch_size=16", "pairs.schedule_period=3"});
    cfg.finalize();
    CHECK(cfg.dataset == "blobs");
    CHECK(cfg.split.in_classes == std::vector<int>{0, 1});
    CHECK(cfg.mode == "odm");
    CHECK(cfg.steps == 50);
    CHECK(cfg.batch_size == 16);
    CHECK(cfg.schedule.period == 3);
    REQUIRE(cfg.split.anomaly_sources.size() == 1);
    CHECK(cfg.split.anomaly_sources[0].seen);

    const auto echo = cfg.echo();
    CHECK(echo.at("train.mode") == "odm");
    CHECK(echo.at("data.anomaly_sources") == "gaussian_noise:seen");

    CHECK_THROWS_AS(ExperimentConfig::load(path, {"bogus.key=1"}), config_error);
    CHECK_THROWS_AS(ExperimentConfig::load(tree.dir("missing.conf")), config_error);
}

TEST_CASE("ce mode forces the head width to the class count") {
    ExperimentConfig cfg = ExperimentConfig::from_overrides(
        {"data.dataset=blobs", "data.in_classes=0,1,2,3", "train.mode=ce", "model.embedding_dim=32"});
    cfg.finalize();
    CHECK(cfg.embedding_dim == 4);
    CHECK(cfg.head_dim() == 4);
}

TEST_CASE("odm without any seen out-distribution source is invalid") {
    ExperimentConfig cfg = ExperimentConfig::from_overrides(
        {"data.dataset=blobs", "data.in_classes=0,1", "train.mode=odm"});
    CHECK_THROWS_WITH_AS(cfg.finalize(), doctest::Contains("seen_out_classes"), config_error);

    ExperimentConfig ok = ExperimentConfig::from_overrides(
        {"data.dataset=blobs", "data.in_classes=0,1", "train.mode=odm",
         "data.anomaly_sources=gaussian_noise:seen"});
    ok.finalize();  // anomaly marked seen satisfies the invariant
}

TEST_CASE("architecture strings expand to validated layer stacks") {
    const std::vector<LayerSpec> specs = parse_architecture(
        "conv2d:8:5:1,relu,maxpool2d:2,conv2d:16:5:1,relu,maxpool2d:2,dense:64,relu,dense:embed",
        {1, 28, 28}, 5);
    REQUIRE(specs.size() == 9);
    CHECK(specs[0].kind == LayerKind::Conv2d);
    CHECK(specs[0].out_channels == 8);
    CHECK(specs[6].kind == LayerKind::Dense);
    CHECK(specs[6].in == 256);  // 16 x 4 x 4 after the second pool
    CHECK(specs[6].out == 64);
    CHECK(specs[8].out == 5);

    CHECK_THROWS_AS(parse_architecture("dense", {4}, 2), config_error);
    CHECK_THROWS_AS(parse_architecture("conv2d:4:3:1", {4}, 2), config_error);
    CHECK_THROWS_AS(parse_architecture("warp:1", {4}, 2), config_error);
}

TEST_CASE("blob end-to-end: ml training converges and separates the OOD blobs") {
    TempTree tree;
    ExperimentConfig cfg = blob_config(tree.dir("run_ml"), "ml");
    const TrainResult tr = cmd_train(cfg);
    CHECK(tr.final_loss < 0.01 * cfg.margin * cfg.margin);
    CHECK(tr.out_out_pairs == 0);

    const EvalResult ev = cmd_eval(cfg);
    CHECK(ev.in_dist_accuracy == 100.0);
    CHECK(ev.per_source.at("novelty").auroc == 100.0);
    CHECK(ev.per_source.at("gaussian_noise").auroc == 100.0);

    for (const char* artifact :
         {"checkpoint.bin", "loss_log.csv", "centroids.csv", "config_echo.txt", "train_report.json",
          "metrics_novelty.json", "metrics_gaussian_noise.json", "scores_novelty.csv", "embeddings.csv",
          "run_report.json"})
        CHECK(fs::exists(fs::path(cfg.out_dir) / artifact));
}

TEST_CASE("odm training on blobs mixes seen-out pairs and stays legal") {
    TempTree tree;
    ExperimentConfig cfg = blob_config(tree.dir("run_odm"), "odm");
    const TrainResult tr = cmd_train(cfg);
    CHECK(tr.out_out_pairs == 0);
    const EvalResult ev = cmd_eval(cfg);
    CHECK(ev.in_dist_accuracy == 100.0);
    CHECK(ev.per_source.at("novelty").auroc == 100.0);
}

TEST_CASE("ce training on blobs reaches full accuracy with a softmax head") {
    TempTree tree;
    ExperimentConfig cfg = blob_config(tree.dir("run_ce"), "ce");
    cmd_train(cfg);
    CHECK_FALSE(fs::exists(fs::path(cfg.out_dir) / "centroids.csv"));  // ce has no centroids
    const EvalResult ev = cmd_eval(cfg);
    CHECK(ev.in_dist_accuracy == 100.0);
    for (const auto& [name, m] : ev.per_source) {
        CHECK(m.n_in > 0);
        CHECK(m.auroc >= 0.0);
    }
}

TEST_CASE("identical config and seed reproduce artifacts byte for byte") {
    TempTree tree;
    ExperimentConfig a = blob_config(tree.dir("rep_a"), "odm");
    a.steps = 150;
    ExperimentConfig b = blob_config(tree.dir("rep_b"), "odm");
    b.steps = 150;

    cmd_train(a);
    cmd_eval(a);
    cmd_train(b);
    cmd_eval(b);

    for (const char* artifact : {"checkpoint.bin", "loss_log.csv", "centroids.csv", "metrics_novelty.json",
                                 "metrics_gaussian_noise.json", "run_report.json", "embeddings.csv"}) {
        CHECK_MESSAGE(slurp(tree.dir("rep_a") + "/" + artifact) == slurp(tree.dir("rep_b") + "/" + artifact),
                      artifact);
    }
}

TEST_CASE("evaluation is deterministic given a checkpoint") {
    TempTree tree;
    ExperimentConfig cfg = blob_config(tree.dir("run_det"), "ml");
    cfg.steps = 120;
    cmd_train(cfg);
    const EvalResult e1 = cmd_eval(cfg);
    const std::string m1 = slurp(cfg.out_dir + "/metrics_novelty.json");
    const EvalResult e2 = cmd_eval(cfg);
    CHECK(e1.in_dist_accuracy == e2.in_dist_accuracy);
    CHECK(slurp(cfg.out_dir + "/metrics_novelty.json") == m1);
}

TEST_CASE("checkpoint/config architecture mismatches are diagnosed") {
    TempTree tree;
    ExperimentConfig cfg = blob_config(tree.dir("run_mismatch"), "ml");
    cfg.steps = 40;
    cmd_train(cfg);
    ExperimentConfig other = blob_config(tree.dir("run_mismatch"), "ml");
    other.steps = 40;
    other.arch = "dense:48,relu,dense:embed";
    CHECK_THROWS_WITH_AS(cmd_eval(other), doctest::Contains("does not match"), config_error);
}

TEST_CASE("report aggregates runs, writes PCA data and round-trips CSV to JSON") {
    TempTree tree;
    ExperimentConfig ml = blob_config(tree.dir("runs/ml"), "ml");
    ml.steps = 150;
    ExperimentConfig ce = blob_config(tree.dir("runs/ce"), "ce");
    ce.steps = 150;
    cmd_train(ml);
    cmd_eval(ml);
    cmd_train(ce);
    cmd_eval(ce);

    const std::string report_dir = tree.dir("report");
    cmd_report({ml.out_dir, ce.out_dir}, report_dir);

    CHECK(fs::exists(fs::path(report_dir) / "report.csv"));
    CHECK(fs::exists(fs::path(report_dir) / "report.json"));
    CHECK(fs::exists(fs::path(report_dir) / "pca_ml.csv"));
    CHECK(fs::exists(fs::path(report_dir) / "pca_ce.csv"));

    const std::string csv = slurp(report_dir + "/report.csv");
    CHECK(csv.find("ml,") != std::string::npos);
    CHECK(csv.find("ce,") != std::string::npos);
    CHECK(csv.find("novelty") != std::string::npos);

    // same table, two serializations
    const std::string json_from_csv = report_csv_to_json(report_dir + "/report.csv");
    std::string json_direct = slurp(report_dir + "/report.json");
    while (!json_direct.empty() && json_direct.back() == '\n') json_direct.pop_back();
    CHECK(json_from_csv == json_direct);

    const std::string pca = slurp(report_dir + "/pca_ml.csv");
    CHECK(pca.rfind("component_1,component_2,component_3,label,origin", 0) == 0);

    CHECK_THROWS_AS(cmd_report({tree.dir("nonexistent")}, report_dir), config_error);
    CHECK_THROWS_AS(cmd_report({}, report_dir), usage_error);
}

TEST_CASE("embeddings csv round trips") {
    TempTree tree;
    Tensor emb({3, 2}, {1.5, -2.0, 0.0, 4.25, 3.0, 1.0});
    const std::vector<int> labels = {2, 6, -1};
    const std::vector<std::string> tags = {"in", "in", "anomaly:gaussian_noise"};
    const std::string path = tree.dir("emb.csv");
    write_embeddings_csv(path, emb, labels, tags);

    const EmbeddingsFile back = read_embeddings_csv(path);
    CHECK(back.labels == labels);
    CHECK(back.origin_tags == tags);
    for (std::size_t i = 0; i < emb.size(); ++i) CHECK(back.embeddings[i] == emb[i]);
}
