#include "ood/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ood/error.hpp"

namespace ood {

namespace {

void require_scores(const std::vector<double>& s, const char* which) {
    if (s.empty()) throw usage_error(std::string(which) + " score list is empty");
}

// counts of (value, #pos at value, #neg at value) over pooled distinct values, descending
struct SweepPoint {
    double value;
    std::size_t pos;
    std::size_t neg;
};

std::vector<SweepPoint> descending_sweep(const std::vector<double>& pos, const std::vector<double>& neg) {
    std::vector<std::pair<double, bool>> all;
    all.reserve(pos.size() + neg.size());
    for (double v : pos) all.push_back({v, true});
    for (double v : neg) all.push_back({v, false});
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    std::vector<SweepPoint> points;
    for (std::size_t i = 0; i < all.size();) {
        SweepPoint p{all[i].first, 0, 0};
        std::size_t j = i;
        while (j < all.size() && all[j].first == p.value) {
            (all[j].second ? p.pos : p.neg)++;
            ++j;
        }
        points.push_back(p);
        i = j;
    }
    return points;
}

}  // namespace

double threshold_at_tpr(const std::vector<double>& in_scores, double target_tpr) {
    require_scores(in_scores, "in-distribution");
    if (target_tpr <= 0.0 || target_tpr > 1.0) throw usage_error("target TPR must lie in (0, 1]");

    std::vector<double> sorted(in_scores);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const std::size_t n = sorted.size();

    // smallest k with k/n >= target; integer correction guards against
    // floating error in ceil(target*n)
    std::size_t k = static_cast<std::size_t>(std::ceil(target_tpr * static_cast<double>(n)));
    k = std::min(std::max<std::size_t>(k, 1), n);
    while (k > 1 && static_cast<double>(k - 1) / static_cast<double>(n) >= target_tpr) --k;
    while (k < n && static_cast<double>(k) / static_cast<double>(n) < target_tpr) ++k;

    return sorted[k - 1];  // k-th largest score
}

double realized_tpr(const std::vector<double>& in_scores, double threshold) {
    require_scores(in_scores, "in-distribution");
    std::size_t hits = 0;
    for (double v : in_scores)
        if (v >= threshold) ++hits;
    return static_cast<double>(hits) / static_cast<double>(in_scores.size());
}

double fpr_at_tpr(const std::vector<double>& in_scores, const std::vector<double>& out_scores,
                  double target_tpr) {
    require_scores(out_scores, "out-distribution");
    const double t = threshold_at_tpr(in_scores, target_tpr);
    std::size_t fp = 0;
    for (double v : out_scores)
        if (v >= t) ++fp;
    return 100.0 * static_cast<double>(fp) / static_cast<double>(out_scores.size());
}

double detection_error(const std::vector<double>& in_scores, const std::vector<double>& out_scores,
                       double target_tpr) {
    // TPR term fixed at the operating point, so a perfect detector scores
    // exactly 100*(1-target)/2 (2.50 at 95%) regardless of sample counts
    const double fpr = fpr_at_tpr(in_scores, out_scores, target_tpr);
    return (100.0 - 100.0 * target_tpr) * 0.5 + 0.5 * fpr;
}

double auroc(const std::vector<double>& in_scores, const std::vector<double>& out_scores) {
    require_scores(in_scores, "in-distribution");
    require_scores(out_scores, "out-distribution");

    const auto points = descending_sweep(in_scores, out_scores);
    // accumulate twice the trapezoid area in integer pair units: exact, and
    // tie groups contribute the pair-counting half credit
    double area2 = 0.0;
    std::size_t tp = 0, fp = 0;
    for (const SweepPoint& p : points) {
        const std::size_t tp_next = tp + p.pos;
        const std::size_t fp_next = fp + p.neg;
        area2 += static_cast<double>(fp_next - fp) * static_cast<double>(tp_next + tp);
        tp = tp_next;
        fp = fp_next;
    }
    return 100.0 * area2 / (2.0 * static_cast<double>(in_scores.size()) * static_cast<double>(out_scores.size()));
}

double aupr(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores) {
    require_scores(pos_scores, "positive");
    require_scores(neg_scores, "negative");

    const auto points = descending_sweep(pos_scores, neg_scores);
    // single division at the end keeps the perfect-separation case exactly 100
    double area_num = 0.0;
    std::size_t tp = 0, fp = 0;
    for (const SweepPoint& p : points) {
        tp += p.pos;
        fp += p.neg;
        if (p.pos > 0) {
            const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
            area_num += static_cast<double>(p.pos) * precision;
        }
    }
    return 100.0 * area_num / static_cast<double>(pos_scores.size());
}

double aupr_in(const std::vector<double>& in_scores, const std::vector<double>& out_scores) {
    return aupr(in_scores, out_scores);
}

double aupr_out(const std::vector<double>& in_scores, const std::vector<double>& out_scores) {
    std::vector<double> neg_pos(out_scores), neg_neg(in_scores);
    for (double& v : neg_pos) v = -v;
    for (double& v : neg_neg) v = -v;
    return aupr(neg_pos, neg_neg);
}

MetricsReport evaluate(const std::vector<ScoreRecord>& in_records,
                       const std::vector<ScoreRecord>& out_records) {
    if (in_records.empty() || out_records.empty())
        throw usage_error("evaluate needs non-empty in- and out-distribution records");

    std::vector<double> in_scores, out_scores;
    in_scores.reserve(in_records.size());
    out_scores.reserve(out_records.size());
    for (const ScoreRecord& r : in_records) in_scores.push_back(r.score);
    for (const ScoreRecord& r : out_records) out_scores.push_back(r.score);

    MetricsReport rep;
    rep.fpr_at_95_tpr = fpr_at_tpr(in_scores, out_scores);
    rep.detection_error = detection_error(in_scores, out_scores);
    rep.auroc = auroc(in_scores, out_scores);
    rep.aupr_in = aupr_in(in_scores, out_scores);
    rep.aupr_out = aupr_out(in_scores, out_scores);
    rep.tnr_at_95_tpr = 100.0 - rep.fpr_at_95_tpr;
    rep.detection_accuracy = 100.0 - rep.detection_error;
    rep.n_in = in_records.size();
    rep.n_out = out_records.size();
    return rep;
}

std::string MetricsReport::to_json() const {
    nlohmann::ordered_json j;
    j["fpr_at_95_tpr"] = fpr_at_95_tpr;
    j["detection_error"] = detection_error;
    j["auroc"] = auroc;
    j["aupr_in"] = aupr_in;
    j["aupr_out"] = aupr_out;
    j["tnr_at_95_tpr"] = tnr_at_95_tpr;
    j["detection_accuracy"] = detection_accuracy;
    j["n_in"] = n_in;
    j["n_out"] = n_out;
    return j.dump(2);
}

std::string MetricsReport::csv_header() {
    return "fpr_at_95_tpr,detection_error,auroc,aupr_in,aupr_out,tnr_at_95_tpr,detection_accuracy,n_in,n_out";
}

std::string MetricsReport::to_csv_row() const {
    std::ostringstream os;
    os.precision(17);
    os << fpr_at_95_tpr << ',' << detection_error << ',' << auroc << ',' << aupr_in << ',' << aupr_out << ','
       << tnr_at_95_tpr << ',' << detection_accuracy << ',' << n_in << ',' << n_out;
    return os.str();
}

void write_score_csv(std::ostream& os, const std::vector<ScoreRecord>& records) {
    os << "score,is_in,predicted_class,true_class\n";
    os.precision(17);
    for (const ScoreRecord& r : records) {
        os << r.score << ',' << (r.is_in_distribution ? 1 : 0) << ',';
        if (r.predicted_class) os << *r.predicted_class;
        os << ',';
        if (r.true_class) os << *r.true_class;
        os << '\n';
    }
}

std::vector<ScoreRecord> read_score_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw format_error("score csv: missing header");
    if (line.rfind("score,is_in", 0) != 0)
        throw format_error("score csv: unexpected header '" + line + "'");

    std::vector<ScoreRecord> records;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        ScoreRecord rec;
        try {
            if (!std::getline(ss, field, ',')) throw format_error("");
            rec.score = std::stod(field);
            if (!std::getline(ss, field, ',')) throw format_error("");
            rec.is_in_distribution = std::stoi(field) != 0;
            if (std::getline(ss, field, ',') && !field.empty()) rec.predicted_class = std::stoi(field);
            if (std::getline(ss, field, ',') && !field.empty()) rec.true_class = std::stoi(field);
        } catch (const std::exception&) {
            throw format_error("score csv: malformed line " + std::to_string(line_no));
        }
        records.push_back(rec);
    }
    return records;
}

}  // namespace ood
