#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ood/detector.hpp"

namespace ood {

// Threshold-independent detection metric suite. All values are percentages in
// [0, 100]; scores follow the convention higher = more in-distribution, and a
// sample is predicted in-distribution when score >= threshold.
struct MetricsReport {
    double fpr_at_95_tpr = 0.0;
    double detection_error = 0.0;
    double auroc = 0.0;
    double aupr_in = 0.0;
    double aupr_out = 0.0;
    double tnr_at_95_tpr = 0.0;       // 100 - fpr_at_95_tpr
    double detection_accuracy = 0.0;  // 100 - detection_error
    std::size_t n_in = 0;
    std::size_t n_out = 0;

    std::string to_json() const;
    static std::string csv_header();
    std::string to_csv_row() const;
};

// Largest threshold t such that the fraction of in_scores >= t reaches target_tpr.
double threshold_at_tpr(const std::vector<double>& in_scores, double target_tpr = 0.95);

// Fraction of in_scores >= t, as a fraction (not percent).
double realized_tpr(const std::vector<double>& in_scores, double threshold);

// Percentage of out_scores at or above the TPR-fixing threshold.
double fpr_at_tpr(const std::vector<double>& in_scores, const std::vector<double>& out_scores,
                  double target_tpr = 0.95);

// 100 * (0.5*(1 - target_tpr) + 0.5*FPR) at the fixed TPR operating point;
// 2.50 is the floor and the value of a perfect detector.
double detection_error(const std::vector<double>& in_scores, const std::vector<double>& out_scores,
                       double target_tpr = 0.95);

// Trapezoidal ROC area over all distinct thresholds; tie handling matches the
// pair-counting estimator with half credit for equal scores.
double auroc(const std::vector<double>& in_scores, const std::vector<double>& out_scores);

// Area under precision-recall by descending-score sweep with step-wise
// interpolation: sum of (R_i - R_{i-1}) * P_i over achieved recall levels.
double aupr(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores);

double aupr_in(const std::vector<double>& in_scores, const std::vector<double>& out_scores);
double aupr_out(const std::vector<double>& in_scores, const std::vector<double>& out_scores);

MetricsReport evaluate(const std::vector<ScoreRecord>& in_records,
                       const std::vector<ScoreRecord>& out_records);

// Score file I/O: CSV with header score,is_in,predicted_class,true_class
// (class columns may be empty).
void write_score_csv(std::ostream& os, const std::vector<ScoreRecord>& records);
std::vector<ScoreRecord> read_score_csv(std::istream& is);

}  // namespace ood
