#include "ood/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ood/checkpoint.hpp"
#include "ood/detector.hpp"
#include "ood/error.hpp"
#include "ood/gradcheck.hpp"
#include "ood/losses.hpp"
#include "ood/optimizer.hpp"
#include "ood/pairs.hpp"
#include "ood/pca.hpp"
#include "ood/rng.hpp"

namespace fs = std::filesystem;

namespace ood {

namespace {

constexpr const char* kSourceOrder[] = {"novelty", "gaussian_noise", "cifar10"};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::vector<std::string> cifar_batch_paths(const std::string& data_dir, bool test) {
    const std::vector<std::string> roots = {data_dir + "/cifar-10-batches-bin", data_dir};
    for (const std::string& root : roots) {
        if (test) {
            const std::string p = root + "/test_batch.bin";
            if (fs::exists(p)) return {p};
        } else {
            const std::string p = root + "/data_batch_1.bin";
            if (fs::exists(p)) return {p};
        }
    }
    throw config_error("cifar10 anomaly source configured but no " +
                       std::string(test ? "test_batch.bin" : "data_batch_1.bin") + " under " + data_dir);
}

LabeledImageSet head_of(const LabeledImageSet& set, std::size_t n) {
    std::vector<std::size_t> idx(std::min(n, set.count()));
    std::iota(idx.begin(), idx.end(), 0);
    return set.subset(idx);
}

}  // namespace

std::vector<std::size_t> ExperimentData::input_shape() const {
    return {split.train_in.channels(), split.train_in.height(), split.train_in.width()};
}

ExperimentData load_experiment_data(const ExperimentConfig& cfg) {
    ExperimentData data;

    LabeledImageSet train_set, test_set;
    if (cfg.dataset == "blobs") {
        std::size_t max_id = 0;
        for (const auto* ids : {&cfg.split.in_classes, &cfg.split.seen_out_classes, &cfg.split.unseen_out_classes})
            for (int c : *ids) {
                if (c < 0) throw config_error("blob class ids must be non-negative");
                max_id = std::max(max_id, static_cast<std::size_t>(c));
            }
        const std::size_t n_classes = max_id + 1;
        train_set = synthetic_blobs(cfg.blob_per_class, n_classes, cfg.blob_dims, cfg.blob_separation,
                                    mix_seed(cfg.seed, kStreamBlobTrain));
        test_set = synthetic_blobs(std::max<std::size_t>(cfg.blob_per_class / 4, 8), n_classes, cfg.blob_dims,
                                   cfg.blob_separation, mix_seed(cfg.seed, kStreamBlobTest));
    } else {
        train_set = load_idx(cfg.data_dir + "/train-images-idx3-ubyte", cfg.data_dir + "/train-labels-idx1-ubyte");
        test_set = load_idx(cfg.data_dir + "/t10k-images-idx3-ubyte", cfg.data_dir + "/t10k-labels-idx1-ubyte");
    }

    data.split = apply_split(train_set, test_set, cfg.split);

    auto held = holdout_split(data.split.train_in, cfg.validation_fraction, mix_seed(cfg.seed, kStreamHoldout));
    data.train_core = std::move(held.first);
    data.validation = std::move(held.second);

    const std::size_t h = data.split.train_in.height();
    const std::size_t w = data.split.train_in.width();
    const std::size_t c = data.split.train_in.channels();

    for (const AnomalySource& src : cfg.split.anomaly_sources) {
        if (src.kind == AnomalyKind::GaussianNoise) {
            LabeledImageSet eval_noise = gaussian_noise_set(cfg.anomaly_count, h, w, c, cfg.noise_mean,
                                                            cfg.noise_stddev, mix_seed(cfg.seed, kStreamNoiseEval));
            data.eval_anomalies.push_back(std::move(eval_noise));
            if (src.seen) {
                LabeledImageSet train_noise =
                    gaussian_noise_set(cfg.anomaly_count, h, w, c, cfg.noise_mean, cfg.noise_stddev,
                                       mix_seed(cfg.seed, kStreamNoiseTrain));
                std::fill(train_noise.origins.begin(), train_noise.origins.end(), Origin::SeenOut);
                data.seen_anomalies.push_back(std::move(train_noise));
            }
        } else if (src.kind == AnomalyKind::Cifar10) {
            LabeledImageSet raw = load_cifar10_binary(cifar_batch_paths(cfg.data_dir, /*test=*/true));
            LabeledImageSet eval_set = head_of(adapt_anomaly(raw, h, w, c), cfg.anomaly_count);
            eval_set.labels.assign(eval_set.count(), kOodLabel);  // anomalies stay unlabeled
            data.eval_anomalies.push_back(std::move(eval_set));
            if (src.seen) {
                LabeledImageSet raw_train = load_cifar10_binary(cifar_batch_paths(cfg.data_dir, /*test=*/false));
                LabeledImageSet seen_set = head_of(adapt_anomaly(raw_train, h, w, c), cfg.anomaly_count);
                seen_set.labels.assign(seen_set.count(), kOodLabel);
                std::fill(seen_set.origins.begin(), seen_set.origins.end(), Origin::SeenOut);
                data.seen_anomalies.push_back(std::move(seen_set));
            }
        }
    }
    return data;
}

namespace {

// multi-set sample pool addressed by a flat index; keeps batch assembly simple
struct SamplePool {
    std::vector<const LabeledImageSet*> sets;
    std::vector<std::size_t> offsets;  // running totals

    void add(const LabeledImageSet* set) {
        if (set->count() == 0) return;
        sets.push_back(set);
        offsets.push_back((offsets.empty() ? 0 : offsets.back()) + set->count());
    }
    std::size_t size() const { return offsets.empty() ? 0 : offsets.back(); }
    std::pair<const LabeledImageSet*, std::size_t> locate(std::size_t flat) const {
        for (std::size_t s = 0; s < sets.size(); ++s) {
            const std::size_t start = s == 0 ? 0 : offsets[s - 1];
            if (flat < offsets[s]) return {sets[s], flat - start};
        }
        throw usage_error("pool index out of range");
    }
};

struct AssembledBatch {
    Tensor inputs;  // B x C x H x W
    std::vector<int> labels;
    std::vector<SampleOrigin> origins;
};

AssembledBatch assemble(const SamplePool& pool, const std::vector<std::size_t>& flat_indices) {
    const auto [set0, i0] = pool.locate(flat_indices.empty() ? 0 : flat_indices[0]);
    const std::size_t h = set0->height(), w = set0->width(), c = set0->channels();

    AssembledBatch batch;
    batch.inputs = Tensor({flat_indices.size(), c, h, w});
    batch.labels.reserve(flat_indices.size());
    batch.origins.reserve(flat_indices.size());
    for (std::size_t i = 0; i < flat_indices.size(); ++i) {
        const auto [set, local] = pool.locate(flat_indices[i]);
        const double* src = set->images.data() + local * h * w * c;
        double* dst = batch.inputs.data() + i * c * h * w;
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                for (std::size_t ch = 0; ch < c; ++ch)
                    dst[ch * h * w + y * w + x] = src[(y * w + x) * c + ch];
        batch.labels.push_back(set->labels[local]);
        batch.origins.push_back(set->origins[local] == Origin::In ? SampleOrigin::In : SampleOrigin::Out);
    }
    return batch;
}

// distinct draws when the pool allows it, with replacement otherwise
std::vector<std::size_t> draw_indices(std::size_t pool_size, std::size_t k, Rng& rng) {
    std::vector<std::size_t> out;
    out.reserve(k);
    if (pool_size >= k) {
        std::set<std::size_t> used;
        while (out.size() < k) {
            const std::size_t v = rng.below(pool_size);
            if (used.insert(v).second) out.push_back(v);
        }
    } else {
        for (std::size_t i = 0; i < k; ++i) out.push_back(rng.below(pool_size));
    }
    return out;
}

Tensor embed_set(const Network& net, const LabeledImageSet& set) {
    const std::size_t n = set.count();
    Tensor out({n, net.embedding_dim()});
    const std::size_t chunk = 256;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < n; start += chunk) {
        const std::size_t stop = std::min(start + chunk, n);
        idx.resize(stop - start);
        std::iota(idx.begin(), idx.end(), start);
        const Tensor batch = make_network_batch(set, idx);
        const ForwardTrace trace = net.forward(batch);
        std::copy_n(trace.output.data(), trace.output.size(), out.data() + start * net.embedding_dim());
    }
    return out;
}

void write_centroids_csv(const std::string& path, const ClassCentroids& centroids) {
    std::ofstream os(path);
    os.precision(17);
    os << "class_id";
    for (std::size_t j = 0; j < centroids.dim(); ++j) os << ",c_" << (j + 1);
    os << "\n";
    for (std::size_t r = 0; r < centroids.count(); ++r) {
        os << centroids.class_ids[r];
        for (std::size_t j = 0; j < centroids.dim(); ++j) os << "," << centroids.centers.at(r, j);
        os << "\n";
    }
}

ClassCentroids read_centroids_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw format_error("cannot open centroids file " + path);
    std::string line;
    if (!std::getline(is, line) || line.rfind("class_id", 0) != 0)
        throw format_error("centroids file " + path + " has an unexpected header");

    std::vector<int> ids;
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');
        ids.push_back(std::stoi(field));
        std::vector<double> row;
        while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw format_error("centroids file " + path + " is empty");
    ClassCentroids out;
    out.class_ids = ids;
    out.centers = Tensor({rows.size(), rows[0].size()});
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size()) throw format_error("ragged centroids file " + path);
        for (std::size_t j = 0; j < rows[r].size(); ++j) out.centers.at(r, j) = rows[r][j];
    }
    return out;
}

nlohmann::ordered_json metrics_to_json(const MetricsReport& m) {
    nlohmann::ordered_json j;
    j["fpr_at_95_tpr"] = m.fpr_at_95_tpr;
    j["detection_error"] = m.detection_error;
    j["auroc"] = m.auroc;
    j["aupr_in"] = m.aupr_in;
    j["aupr_out"] = m.aupr_out;
    j["tnr_at_95_tpr"] = m.tnr_at_95_tpr;
    j["detection_accuracy"] = m.detection_accuracy;
    j["n_in"] = m.n_in;
    j["n_out"] = m.n_out;
    return j;
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
    MetricsReport m;
    m.fpr_at_95_tpr = j.at("fpr_at_95_tpr").get<double>();
    m.detection_error = j.at("detection_error").get<double>();
    m.auroc = j.at("auroc").get<double>();
    m.aupr_in = j.at("aupr_in").get<double>();
    m.aupr_out = j.at("aupr_out").get<double>();
    m.tnr_at_95_tpr = j.at("tnr_at_95_tpr").get<double>();
    m.detection_accuracy = j.at("detection_accuracy").get<double>();
    m.n_in = j.at("n_in").get<std::size_t>();
    m.n_out = j.at("n_out").get<std::size_t>();
    return m;
}

}  // namespace

TrainResult cmd_train(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(cfg.out_dir);

    const ExperimentData data = load_experiment_data(cfg);
    const std::vector<std::size_t> input_shape = data.input_shape();
    const std::vector<LayerSpec> specs = parse_architecture(cfg.arch, input_shape, cfg.head_dim());

    Network net(input_shape, specs);
    net.init_params(cfg.seed);

    Optimizer opt(optimizer_kind_from_string(cfg.optimizer), cfg.learning_rate);

    SamplePool in_pool, out_pool;
    in_pool.add(&data.train_core);
    out_pool.add(&data.split.seen_out);
    for (const LabeledImageSet& a : data.seen_anomalies) out_pool.add(&a);

    if (in_pool.size() < 2) throw config_error("training needs at least 2 in-distribution samples");
    if (cfg.mode == "odm" && out_pool.size() == 0)
        throw config_error("odm training found no seen out-distribution samples");

    // ce label remap: sorted in_classes -> 0..C-1
    std::map<int, int> class_index;
    for (std::size_t i = 0; i < cfg.split.in_classes.size(); ++i)
        class_index[cfg.split.in_classes[i]] = static_cast<int>(i);

    Rng batch_rng(mix_seed(cfg.seed, kStreamBatch));
    Rng pair_rng(mix_seed(cfg.seed, kStreamPairs));

    const MetricLossKind metric_kind = cfg.mode == "odm" ? MetricLossKind::Odm : MetricLossKind::Contrastive;
    const std::size_t val_every = std::max<std::size_t>(1, cfg.steps / 10);

    std::ofstream log(cfg.out_dir + "/loss_log.csv");
    log << "step,loss,val_loss\n";
    log.precision(17);

    TrainResult result;
    double loss_value = 0.0;

    for (std::uint64_t step = 1; step <= cfg.steps; ++step) {
        // batch composition: odm mixes out samples only on the cross steps
        std::size_t n_out = 0;
        if (cfg.mode == "odm" && cfg.schedule.cross_step(step) && out_pool.size() > 0)
            n_out = static_cast<std::size_t>(std::llround(cfg.schedule.cross_pair_ratio *
                                                          static_cast<double>(cfg.batch_size)));
        const std::size_t n_in = cfg.batch_size - n_out;

        std::vector<std::size_t> flat = draw_indices(in_pool.size(), n_in, batch_rng);
        AssembledBatch batch = assemble(in_pool, flat);
        if (n_out > 0) {
            const std::vector<std::size_t> out_flat = draw_indices(out_pool.size(), n_out, batch_rng);
            AssembledBatch extra = assemble(out_pool, out_flat);
            // append the out rows
            Tensor merged({cfg.batch_size, batch.inputs.dim(1), batch.inputs.dim(2), batch.inputs.dim(3)});
            std::copy_n(batch.inputs.data(), batch.inputs.size(), merged.data());
            std::copy_n(extra.inputs.data(), extra.inputs.size(), merged.data() + batch.inputs.size());
            batch.inputs = std::move(merged);
            batch.labels.insert(batch.labels.end(), extra.labels.begin(), extra.labels.end());
            batch.origins.insert(batch.origins.end(), extra.origins.begin(), extra.origins.end());
        }

        const ForwardTrace trace = net.forward(batch.inputs);

        Tensor output_grad;
        if (cfg.mode == "ce") {
            std::vector<int> mapped(batch.labels.size());
            for (std::size_t i = 0; i < batch.labels.size(); ++i) mapped[i] = class_index.at(batch.labels[i]);
            CrossEntropyResult ce = cross_entropy_loss(trace.output, mapped);
            loss_value = ce.value;
            output_grad = std::move(ce.logit_gradients);
        } else {
            const PairBatch pairs = build_pairs(batch.labels, batch.origins, cfg.schedule, step, pair_rng);
            for (std::size_t p = 0; p < pairs.size(); ++p) {
                const auto [a, b] = pairs.pairs[p];
                if (pairs.z[p] == 0 ||
                    (batch.origins[a] == SampleOrigin::Out && batch.origins[b] == SampleOrigin::Out))
                    ++result.out_out_pairs;
            }
            LossOutput lo = batch_metric_loss(trace.output, pairs, cfg.margin, metric_kind);
            if (lo.empty_batch)
                std::cerr << "warning: empty pair batch at step " << step << "\n";
            loss_value = lo.value;
            output_grad = std::move(lo.embedding_gradients);
        }

        if (!std::isfinite(loss_value))
            throw usage_error("training aborted: non-finite loss at step " + std::to_string(step));

        const Gradients grads = net.backward(trace, output_grad);
        opt.step(net.param_tensors(), Network::flatten(grads, net.layers()));
        net.bump_version();

        log << step << "," << loss_value << ",";
        if (step % val_every == 0 && data.validation.count() >= 2) {
            // fixed-size validation probe, deterministic per step
            const std::size_t vn = std::min<std::size_t>(data.validation.count(), 256);
            std::vector<std::size_t> vidx(vn);
            std::iota(vidx.begin(), vidx.end(), 0);
            const Tensor vbatch = make_network_batch(data.validation, vidx);
            const ForwardTrace vtrace = net.forward(vbatch);
            double val = 0.0;
            if (cfg.mode == "ce") {
                std::vector<int> mapped(vn);
                for (std::size_t i = 0; i < vn; ++i) mapped[i] = class_index.at(data.validation.labels[i]);
                val = cross_entropy_loss(vtrace.output, mapped).value;
            } else {
                Rng vrng(mix_seed(cfg.seed, kStreamValPairs + step));
                std::vector<SampleOrigin> vorigins(vn, SampleOrigin::In);
                std::vector<int> vlabels(data.validation.labels.begin(), data.validation.labels.begin() + vn);
                PairSchedule vs = cfg.schedule;
                vs.pairs_per_batch = vn;
                const PairBatch vpairs = build_pairs(vlabels, vorigins, vs, 1, vrng);
                val = batch_metric_loss(vtrace.output, vpairs, cfg.margin, metric_kind).value;
            }
            log << val;
        }
        log << "\n";
    }

    save_checkpoint(net, cfg.out_dir + "/checkpoint.bin");

    if (cfg.mode != "ce") {
        const Tensor train_embeddings = embed_set(net, data.train_core);
        const ClassCentroids centroids =
            compute_centroids(train_embeddings, data.train_core.labels, cfg.split.in_classes);
        write_centroids_csv(cfg.out_dir + "/centroids.csv", centroids);
    }

    {
        std::ofstream echo(cfg.out_dir + "/config_echo.txt");
        for (const auto& [k, v] : cfg.echo()) echo << k << " = " << v << "\n";
    }

    result.final_loss = loss_value;
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    {
        nlohmann::ordered_json j;
        j["mode"] = cfg.mode;
        j["steps"] = cfg.steps;
        j["final_loss"] = result.final_loss;
        j["out_out_pairs"] = result.out_out_pairs;
        std::ofstream os(cfg.out_dir + "/train_report.json");
        os << j.dump(2) << "\n";
    }
    {
        // wall-clock lives apart from the deterministic artifacts
        nlohmann::ordered_json j;
        j["train_wall_seconds"] = result.wall_seconds;
        j["steps_per_second"] = cfg.steps / std::max(result.wall_seconds, 1e-9);
        std::ofstream os(cfg.out_dir + "/timings.json");
        os << j.dump(2) << "\n";
    }
    return result;
}

EvalResult cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path) {
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(cfg.out_dir);
    const std::string ckpt = checkpoint_path.empty() ? cfg.out_dir + "/checkpoint.bin" : checkpoint_path;

    const ExperimentData data = load_experiment_data(cfg);
    const std::vector<std::size_t> input_shape = data.input_shape();
    const std::vector<LayerSpec> expected = parse_architecture(cfg.arch, input_shape, cfg.head_dim());

    const Network net = load_checkpoint(ckpt);
    if (net.input_shape() != input_shape || net.layers().size() != expected.size())
        throw config_error("checkpoint " + ckpt + " does not match the configured architecture");
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const LayerSpec& a = net.layers()[i];
        const LayerSpec& b = expected[i];
        if (a.kind != b.kind || a.in != b.in || a.out != b.out || a.in_channels != b.in_channels ||
            a.out_channels != b.out_channels || a.kernel != b.kernel || a.stride != b.stride ||
            a.window != b.window)
            throw config_error("checkpoint layer " + std::to_string(i) + " (" + a.to_string() +
                               ") does not match configured " + b.to_string());
    }

    ClassCentroids centroids;
    if (cfg.mode != "ce") centroids = read_centroids_csv(cfg.out_dir + "/centroids.csv");

    const std::size_t d = net.embedding_dim();
    auto score_set = [&](const LabeledImageSet& set, bool is_in) {
        std::vector<ScoreRecord> records;
        const Tensor emb = embed_set(net, set);
        records.reserve(set.count());
        for (std::size_t i = 0; i < set.count(); ++i) {
            std::span<const double> e(emb.data() + i * d, d);
            ScoreRecord rec;
            rec.is_in_distribution = is_in;
            if (cfg.mode == "ce") {
                rec.score = max_softmax_score(e);
                std::size_t arg = 0;
                for (std::size_t j = 1; j < d; ++j)
                    if (e[j] > e[arg]) arg = j;
                rec.predicted_class = cfg.split.in_classes[arg];
            } else {
                rec.score = ood_score(e, centroids);
                rec.predicted_class = classify(e, centroids);
            }
            if (set.labels[i] != kOodLabel) rec.true_class = set.labels[i];
            records.push_back(rec);
        }
        return std::pair(records, emb);
    };

    auto [in_records, in_emb] = score_set(data.split.test_in, true);

    std::size_t correct = 0;
    for (const ScoreRecord& r : in_records)
        if (r.predicted_class && r.true_class && *r.predicted_class == *r.true_class) ++correct;

    EvalResult result;
    result.in_dist_accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(in_records.size());

    // out-distribution sources, canonical order
    std::vector<std::pair<std::string, const LabeledImageSet*>> sources;
    if (data.split.unseen_out.count() > 0) sources.push_back({"novelty", &data.split.unseen_out});
    for (const LabeledImageSet& a : data.eval_anomalies) sources.push_back({a.anomaly_source, &a});
    std::stable_sort(sources.begin(), sources.end(), [](const auto& a, const auto& b) {
        auto rank = [](const std::string& s) {
            for (std::size_t i = 0; i < std::size(kSourceOrder); ++i)
                if (s == kSourceOrder[i]) return i;
            return std::size(kSourceOrder);
        };
        return rank(a.first) < rank(b.first);
    });

    // embeddings.csv rows: test_in then every source
    Tensor all_emb({in_records.size(), d});
    std::copy_n(in_emb.data(), in_emb.size(), all_emb.data());
    std::vector<int> all_labels = data.split.test_in.labels;
    std::vector<std::string> all_tags(in_records.size(), origin_tag(Origin::In, ""));

    for (const auto& [name, set] : sources) {
        auto [out_records, out_emb] = score_set(*set, false);
        const MetricsReport report = evaluate(in_records, out_records);
        result.per_source[name] = report;

        std::ofstream mj(cfg.out_dir + "/metrics_" + name + ".json");
        mj << report.to_json() << "\n";

        std::ofstream sc(cfg.out_dir + "/scores_" + name + ".csv");
        std::vector<ScoreRecord> combined = in_records;
        combined.insert(combined.end(), out_records.begin(), out_records.end());
        write_score_csv(sc, combined);

        Tensor grown({all_labels.size() + set->count(), d});
        std::copy_n(all_emb.data(), all_emb.size(), grown.data());
        std::copy_n(out_emb.data(), out_emb.size(), grown.data() + all_emb.size());
        all_emb = std::move(grown);
        for (std::size_t i = 0; i < set->count(); ++i) {
            all_labels.push_back(set->labels[i]);
            all_tags.push_back(origin_tag(set->origins[i], set->anomaly_source));
        }
    }

    write_embeddings_csv(cfg.out_dir + "/embeddings.csv", all_emb, all_labels, all_tags);

    {
        nlohmann::ordered_json j;
        j["mode"] = cfg.mode;
        j["in_dist_accuracy"] = result.in_dist_accuracy;
        nlohmann::ordered_json srcs;
        for (const auto& [name, set] : sources) srcs[name] = metrics_to_json(result.per_source.at(name));
        j["sources"] = srcs;
        nlohmann::ordered_json echo;
        for (const auto& [k, v] : cfg.echo()) echo[k] = v;
        j["config"] = echo;
        std::ofstream os(cfg.out_dir + "/run_report.json");
        os << j.dump(2) << "\n";
    }
    {
        nlohmann::ordered_json j;
        j["eval_wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::ofstream os(cfg.out_dir + "/timings_eval.json");
        os << j.dump(2) << "\n";
    }
    return result;
}

void write_embeddings_csv(const std::string& path, const Tensor& embeddings,
                          const std::vector<int>& labels, const std::vector<std::string>& origin_tags) {
    const std::size_t d = embeddings.dim(1);
    std::ofstream os(path);
    os.precision(17);
    for (std::size_t j = 0; j < d; ++j) os << "e_" << (j + 1) << ",";
    os << "label,origin\n";
    for (std::size_t i = 0; i < embeddings.dim(0); ++i) {
        for (std::size_t j = 0; j < d; ++j) os << embeddings.at(i, j) << ",";
        os << labels[i] << "," << origin_tags[i] << "\n";
    }
}

EmbeddingsFile read_embeddings_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw format_error("cannot open embeddings file " + path);
    std::string line;
    if (!std::getline(is, line)) throw format_error("embeddings file " + path + " is empty");
    const std::size_t d = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) - 1;

    EmbeddingsFile out;
    std::vector<double> values;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        for (std::size_t j = 0; j < d; ++j) {
            std::getline(ss, field, ',');
            values.push_back(std::stod(field));
        }
        std::getline(ss, field, ',');
        out.labels.push_back(std::stoi(field));
        std::getline(ss, field, ',');
        out.origin_tags.push_back(field);
    }
    out.embeddings = Tensor({out.labels.size(), d}, std::move(values));
    return out;
}

namespace {

struct ReportRow {
    std::string method;
    double in_dist_accuracy;
    std::string out_dist;
    MetricsReport metrics;
};

nlohmann::ordered_json rows_to_json(const std::vector<ReportRow>& rows) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const ReportRow& r : rows) {
        nlohmann::ordered_json j;
        j["method"] = r.method;
        j["in_dist_accuracy"] = r.in_dist_accuracy;
        j["out_dist"] = r.out_dist;
        j["fpr_at_95_tpr"] = r.metrics.fpr_at_95_tpr;
        j["detection_error"] = r.metrics.detection_error;
        j["auroc"] = r.metrics.auroc;
        j["aupr_in"] = r.metrics.aupr_in;
        j["aupr_out"] = r.metrics.aupr_out;
        arr.push_back(j);
    }
    return arr;
}

}  // namespace

void cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
    if (run_dirs.empty()) throw usage_error("report needs at least one run directory");
    fs::create_directories(out_dir);

    std::vector<ReportRow> rows;
    for (const std::string& dir : run_dirs) {
        const std::string report_path = dir + "/run_report.json";
        std::ifstream is(report_path);
        if (!is) throw config_error("missing run artifact: " + report_path);
        nlohmann::json j;
        try {
            is >> j;
        } catch (const std::exception& e) {
            throw format_error(report_path + ": " + e.what());
        }
        const std::string mode = j.at("mode").get<std::string>();
        const double acc = j.at("in_dist_accuracy").get<double>();
        for (const char* source : kSourceOrder) {
            if (!j.at("sources").contains(source)) continue;
            rows.push_back({mode, acc, source, metrics_from_json(j.at("sources").at(source))});
        }
    }

    {
        std::ofstream os(out_dir + "/report.csv");
        os << "method,in_dist_accuracy,out_dist,fpr_at_95_tpr,detection_error,auroc,aupr_in,aupr_out\n";
        for (const ReportRow& r : rows) {
            os << r.method << "," << fmt(r.in_dist_accuracy) << "," << r.out_dist << ","
               << fmt(r.metrics.fpr_at_95_tpr) << "," << fmt(r.metrics.detection_error) << ","
               << fmt(r.metrics.auroc) << "," << fmt(r.metrics.aupr_in) << "," << fmt(r.metrics.aupr_out)
               << "\n";
        }
    }
    {
        std::ofstream os(out_dir + "/report.json");
        os << rows_to_json(rows).dump(2) << "\n";
    }

    // PCA plot data per run
    for (const std::string& dir : run_dirs) {
        const std::string emb_path = dir + "/embeddings.csv";
        if (!fs::exists(emb_path)) throw config_error("missing run artifact: " + emb_path);
        const EmbeddingsFile ef = read_embeddings_csv(emb_path);
        const std::size_t n = ef.embeddings.dim(0);
        const std::size_t d = ef.embeddings.dim(1);
        const std::size_t k = std::min({static_cast<std::size_t>(3), d, n > 1 ? n - 1 : 1});
        const PcaResult pca = pca_project(ef.embeddings, k);

        const std::string run_name = fs::path(dir).filename().string();
        std::ofstream os(out_dir + "/pca_" + (run_name.empty() ? "run" : run_name) + ".csv");
        os.precision(17);
        for (std::size_t j = 0; j < k; ++j) os << "component_" << (j + 1) << ",";
        os << "label,origin\n";
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < k; ++j) os << pca.projections.at(i, j) << ",";
            os << ef.labels[i] << "," << ef.origin_tags[i] << "\n";
        }
    }
}

std::string report_csv_to_json(const std::string& csv_path) {
    std::ifstream is(csv_path);
    if (!is) throw format_error("cannot open " + csv_path);
    std::string line;
    if (!std::getline(is, line) || line.rfind("method,", 0) != 0)
        throw format_error(csv_path + ": unexpected header");

    std::vector<ReportRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        ReportRow r;
        std::getline(ss, r.method, ',');
        std::getline(ss, field, ',');
        r.in_dist_accuracy = std::stod(field);
        std::getline(ss, r.out_dist, ',');
        std::getline(ss, field, ',');
        r.metrics.fpr_at_95_tpr = std::stod(field);
        std::getline(ss, field, ',');
        r.metrics.detection_error = std::stod(field);
        std::getline(ss, field, ',');
        r.metrics.auroc = std::stod(field);
        std::getline(ss, field, ',');
        r.metrics.aupr_in = std::stod(field);
        std::getline(ss, field, ',');
        r.metrics.aupr_out = std::stod(field);
        rows.push_back(std::move(r));
    }
    return rows_to_json(rows).dump(2);
}

}  // namespace ood
