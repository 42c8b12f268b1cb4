#pragma once

#include <vector>

#include "sage/system_model.hpp"

namespace sage {

// Per-channel Shewhart chart. Alarm limits are center +- sigma_multiplier * sigma.
struct ChartModel {
    Vector center;
    Vector sigma;  // > 0 per channel
    double sigma_multiplier = 3.0;
};

struct T2Model {
    Vector mean;
    Matrix inv_covariance;  // symmetric positive definite
    double ucl = 0.0;
};

struct WindowFeatureSpec {
    enum class Mode { raw, correlation };
    Mode mode = Mode::raw;
    int window = 100;  // raw needs >= 2, correlation >= 10
};

struct AlarmResult {
    std::vector<int> indices;  // sorted step indices
    double rate = 0.0;
};

struct DetectionReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::vector<int> alarm_indices;  // test rows predicted as attack, sorted
    long long tp = 0, fp = 0, tn = 0, fn = 0;
};

// Sample mean/std per column. data is steps x channels, needs >= 30 rows.
// A zero-variance channel is rejected by name.
ChartModel fit_control_chart(const Matrix& in_control, double sigma_multiplier = 3.0);

// Alarm at step t iff any channel falls outside its limits.
AlarmResult chart_alarm_rate(const ChartModel& chart, const Matrix& data);

// Sample mean and inverse sample covariance; ucl is the chi-squared quantile
// at `quantile` with one degree of freedom per channel.
T2Model fit_t2_model(const Matrix& in_control, double quantile = 0.9973);

// Alarm at step t iff (x - mean)' inv_cov (x - mean) > ucl.
AlarmResult hotelling_t2_alarms(const T2Model& t2, const Matrix& data);

// Average over all overlapping length-n windows of |corr_ic - corr_attack|,
// entrywise. Diagonal forced to zero; a zero-variance window contributes
// correlation 0 for the affected entries. Both inputs are T x q with the same
// shape and T >= n. zero_variance_windows, when given, receives the number of
// windows where any channel had zero variance in either input.
Matrix correlation_difference(const Matrix& in_control, const Matrix& attack, int window,
                              int* zero_variance_windows = nullptr);

// One feature row per non-overlapping window (tail remainder dropped).
// raw mode flattens the window step-major; correlation mode emits the
// upper-triangle correlations then the per-channel stds.
Matrix window_features(const Matrix& data, const WindowFeatureSpec& spec);

// k-nearest-neighbor majority vote with Euclidean distance after per-feature
// standardization by the training statistics. Labels are 0 (in control) or
// 1 (attack); vote ties go to 0. k must be odd and at most the training size.
// Unbalanced training labels trigger a warning on stderr.
DetectionReport knn_evaluate(const Matrix& train_features, const std::vector<int>& train_labels,
                             const Matrix& test_features, const std::vector<int>& test_labels,
                             int k);

}  // namespace sage
