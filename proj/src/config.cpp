#include "ood/config.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ood/error.hpp"
#include "ood/optimizer.hpp"

namespace ood {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& key) {
    std::vector<int> out;
    for (const std::string& item : split_list(s)) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw config_error(key + ": '" + item + "' is not an integer");
        }
    }
    return out;
}

double parse_double(const std::string& s, const std::string& key) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw config_error(key + ": '" + s + "' is not a number");
    }
}

std::uint64_t parse_uint(const std::string& s, const std::string& key) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw config_error(key + ": '" + s + "' is not a non-negative integer");
    }
}

std::string join_ints(const std::vector<int>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ",";
        os << v[i];
    }
    return os.str();
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "data.dataset") cfg.dataset = value;
    else if (key == "data.data_dir") cfg.data_dir = value;
    else if (key == "data.in_classes") cfg.split.in_classes = parse_int_list(value, key);
    else if (key == "data.seen_out_classes") cfg.split.seen_out_classes = parse_int_list(value, key);
    else if (key == "data.unseen_out_classes") cfg.split.unseen_out_classes = parse_int_list(value, key);
    else if (key == "data.anomaly_sources") {
        cfg.split.anomaly_sources.clear();
        for (std::string item : split_list(value)) {
            AnomalySource src;
            const auto colon = item.find(':');
            if (colon != std::string::npos) {
                const std::string flag = item.substr(colon + 1);
                if (flag != "seen") throw config_error(key + ": unknown flag '" + flag + "'");
                src.seen = true;
                item = item.substr(0, colon);
            }
            src.kind = anomaly_kind_from_string(item);
            if (src.kind != AnomalyKind::None) cfg.split.anomaly_sources.push_back(src);
        }
    } else if (key == "data.anomaly_count") cfg.anomaly_count = parse_uint(value, key);
    else if (key == "data.noise_mean") cfg.noise_mean = parse_double(value, key);
    else if (key == "data.noise_stddev") cfg.noise_stddev = parse_double(value, key);
    else if (key == "data.validation_fraction") cfg.validation_fraction = parse_double(value, key);
    else if (key == "data.blob_per_class") cfg.blob_per_class = parse_uint(value, key);
    else if (key == "data.blob_dims") cfg.blob_dims = parse_uint(value, key);
    else if (key == "data.blob_separation") cfg.blob_separation = parse_double(value, key);
    else if (key == "model.arch") cfg.arch = value;
    else if (key == "model.embedding_dim") cfg.embedding_dim = parse_uint(value, key);
    else if (key == "train.mode") cfg.mode = value;
    else if (key == "train.margin") cfg.margin = parse_double(value, key);
    else if (key == "train.optimizer") cfg.optimizer = value;
    else if (key == "train.learning_rate") cfg.learning_rate = parse_double(value, key);
    else if (key == "train.batch_size") cfg.batch_size = parse_uint(value, key);
    else if (key == "train.steps") cfg.steps = parse_uint(value, key);
    else if (key == "train.seed") cfg.seed = parse_uint(value, key);
    else if (key == "pairs.cross_pair_ratio") cfg.schedule.cross_pair_ratio = parse_double(value, key);
    else if (key == "pairs.schedule_period") cfg.schedule.period = parse_uint(value, key);
    else if (key == "pairs.same_class_ratio") cfg.schedule.same_class_ratio = parse_double(value, key);
    else if (key == "pairs.pairs_per_batch") cfg.schedule.pairs_per_batch = parse_uint(value, key);
    else if (key == "run.out_dir") cfg.out_dir = value;
    else throw config_error("unknown configuration key '" + key + "'");
}

ExperimentConfig ExperimentConfig::load(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream is(path);
    if (!is) throw config_error("cannot open config file " + path);

    ExperimentConfig cfg;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error(path + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        apply_key(cfg, section.empty() ? key : section + "." + key, value);
    }
    for (const std::string& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos) throw config_error("--set expects key=value, got '" + ov + "'");
        apply_key(cfg, trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::from_overrides(const std::vector<std::string>& overrides) {
    ExperimentConfig cfg;
    for (const std::string& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos) throw config_error("--set expects key=value, got '" + ov + "'");
        apply_key(cfg, trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
    }
    return cfg;
}

std::size_t ExperimentConfig::head_dim() const {
    return mode == "ce" ? split.in_classes.size() : embedding_dim;
}

void ExperimentConfig::finalize() {
    if (mode != "ce" && mode != "ml" && mode != "odm")
        throw config_error("train.mode must be ce, ml or odm, got '" + mode + "'");
    if (dataset != "idx" && dataset != "blobs")
        throw config_error("data.dataset must be idx or blobs, got '" + dataset + "'");
    split.validate();
    if (mode == "ce") {
        // softmax head width is the class count
        embedding_dim = split.in_classes.size();
    }
    if (embedding_dim == 0) throw config_error("model.embedding_dim must be positive");
    if (batch_size < 2) throw config_error("train.batch_size must be at least 2");
    if (steps == 0) throw config_error("train.steps must be positive");
    if (margin <= 0.0) throw config_error("train.margin must be positive");
    if (learning_rate <= 0.0) throw config_error("train.learning_rate must be positive");
    if (validation_fraction < 0.0 || validation_fraction >= 1.0)
        throw config_error("data.validation_fraction must lie in [0, 1)");
    if (mode == "odm") {
        bool has_seen_anomaly = false;
        for (const AnomalySource& s : split.anomaly_sources) has_seen_anomaly |= s.seen;
        if (split.seen_out_classes.empty() && !has_seen_anomaly)
            throw config_error(
                "data.seen_out_classes: odm mode needs seen out-distribution classes or an anomaly "
                "source marked :seen");
    }
    optimizer_kind_from_string(optimizer);  // validates
    std::sort(split.in_classes.begin(), split.in_classes.end());
}

std::map<std::string, std::string> ExperimentConfig::echo() const {
    std::map<std::string, std::string> kv;
    kv["data.dataset"] = dataset;
    kv["data.data_dir"] = data_dir;
    kv["data.in_classes"] = join_ints(split.in_classes);
    kv["data.seen_out_classes"] = join_ints(split.seen_out_classes);
    kv["data.unseen_out_classes"] = join_ints(split.unseen_out_classes);
    std::ostringstream srcs;
    for (std::size_t i = 0; i < split.anomaly_sources.size(); ++i) {
        if (i) srcs << ",";
        srcs << to_string(split.anomaly_sources[i].kind);
        if (split.anomaly_sources[i].seen) srcs << ":seen";
    }
    kv["data.anomaly_sources"] = srcs.str();
    kv["data.anomaly_count"] = std::to_string(anomaly_count);
    kv["data.noise_mean"] = format_double(noise_mean);
    kv["data.noise_stddev"] = format_double(noise_stddev);
    kv["data.validation_fraction"] = format_double(validation_fraction);
    kv["data.blob_per_class"] = std::to_string(blob_per_class);
    kv["data.blob_dims"] = std::to_string(blob_dims);
    kv["data.blob_separation"] = format_double(blob_separation);
    kv["model.arch"] = arch;
    kv["model.embedding_dim"] = std::to_string(embedding_dim);
    kv["train.mode"] = mode;
    kv["train.margin"] = format_double(margin);
    kv["train.optimizer"] = optimizer;
    kv["train.learning_rate"] = format_double(learning_rate);
    kv["train.batch_size"] = std::to_string(batch_size);
    kv["train.steps"] = std::to_string(steps);
    kv["train.seed"] = std::to_string(seed);
    kv["pairs.cross_pair_ratio"] = format_double(schedule.cross_pair_ratio);
    kv["pairs.schedule_period"] = std::to_string(schedule.period);
    kv["pairs.same_class_ratio"] = format_double(schedule.same_class_ratio);
    kv["pairs.pairs_per_batch"] = std::to_string(schedule.pairs_per_batch);
    kv["run.out_dir"] = out_dir;
    return kv;
}

std::vector<LayerSpec> parse_architecture(const std::string& arch, const std::vector<std::size_t>& input_shape,
                                          std::size_t head_dim) {
    std::vector<LayerSpec> specs;
    std::vector<std::size_t> cur = input_shape;
    const auto flat = [&]() {
        return std::accumulate(cur.begin(), cur.end(), std::size_t{1}, std::multiplies<>());
    };

    for (const std::string& token : split_list(arch)) {
        std::vector<std::string> parts;
        std::stringstream ss(token);
        std::string part;
        while (std::getline(ss, part, ':')) parts.push_back(trim(part));
        if (parts.empty()) continue;
        const std::string& kind = parts[0];

        if (kind == "relu") {
            specs.push_back(LayerSpec::relu());
        } else if (kind == "maxpool2d") {
            if (parts.size() != 2) throw config_error("model.arch: maxpool2d needs a window, got '" + token + "'");
            const std::size_t win = parse_uint(parts[1], "model.arch");
            specs.push_back(LayerSpec::maxpool2d(win));
            if (cur.size() != 3) throw config_error("model.arch: maxpool2d after flat layer in '" + arch + "'");
            cur = {cur[0], cur[1] / win, cur[2] / win};
        } else if (kind == "conv2d") {
            if (parts.size() != 4)
                throw config_error("model.arch: conv2d needs out:kernel:stride, got '" + token + "'");
            if (cur.size() != 3) throw config_error("model.arch: conv2d after flat layer in '" + arch + "'");
            const std::size_t out_ch = parse_uint(parts[1], "model.arch");
            const std::size_t kernel = parse_uint(parts[2], "model.arch");
            const std::size_t stride = parse_uint(parts[3], "model.arch");
            specs.push_back(LayerSpec::conv2d(cur[0], out_ch, kernel, stride));
            if (cur[1] < kernel || cur[2] < kernel)
                throw config_error("model.arch: conv2d kernel exceeds input in '" + token + "'");
            cur = {out_ch, (cur[1] - kernel) / stride + 1, (cur[2] - kernel) / stride + 1};
        } else if (kind == "dense") {
            if (parts.size() != 2) throw config_error("model.arch: dense needs a width, got '" + token + "'");
            const std::size_t out = parts[1] == "embed" ? head_dim : parse_uint(parts[1], "model.arch");
            specs.push_back(LayerSpec::dense(flat(), out));
            cur = {out};
        } else {
            throw config_error("model.arch: unknown layer '" + token + "'");
        }
    }
    if (specs.empty()) throw config_error("model.arch is empty");
    return specs;
}

}  // namespace ood
