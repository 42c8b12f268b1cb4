#include "sage/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "sage/stats.hpp"

namespace sage {

namespace {

void column_moments(const Matrix& data, Vector& mean, Vector& std_sample) {
    const Eigen::Index T = data.rows(), c = data.cols();
    mean = data.colwise().mean();
    std_sample.resize(c);
    for (Eigen::Index j = 0; j < c; ++j) {
        const double var = (data.col(j).array() - mean(j)).square().sum() /
                           static_cast<double>(T - 1);
        std_sample(j) = std::sqrt(var);
    }
}

}  // namespace

ChartModel fit_control_chart(const Matrix& in_control, double sigma_multiplier) {
    if (in_control.rows() < 30)
        throw std::invalid_argument("fit_control_chart: need at least 30 steps");
    if (in_control.cols() < 1)
        throw std::invalid_argument("fit_control_chart: need at least one channel");
    if (!(sigma_multiplier > 0))
        throw std::invalid_argument("fit_control_chart: sigma multiplier must be positive");
    ChartModel m;
    m.sigma_multiplier = sigma_multiplier;
    column_moments(in_control, m.center, m.sigma);
    for (Eigen::Index j = 0; j < m.sigma.size(); ++j)
        if (!(m.sigma(j) > 0)) {
            std::ostringstream msg;
            msg << "fit_control_chart: channel " << j << " has zero variance";
            throw std::invalid_argument(msg.str());
        }
    return m;
}

AlarmResult chart_alarm_rate(const ChartModel& chart, const Matrix& data) {
    if (data.cols() != chart.center.size())
        throw std::invalid_argument("chart_alarm_rate: channel count mismatch");
    if (data.rows() < 1) throw std::invalid_argument("chart_alarm_rate: empty trajectory");
    const Vector lo = chart.center - chart.sigma_multiplier * chart.sigma;
    const Vector hi = chart.center + chart.sigma_multiplier * chart.sigma;
    AlarmResult r;
    for (Eigen::Index t = 0; t < data.rows(); ++t) {
        bool alarm = false;
        for (Eigen::Index j = 0; j < data.cols() && !alarm; ++j)
            alarm = data(t, j) < lo(j) || data(t, j) > hi(j);
        if (alarm) r.indices.push_back(static_cast<int>(t));
    }
    r.rate = static_cast<double>(r.indices.size()) / static_cast<double>(data.rows());
    return r;
}

T2Model fit_t2_model(const Matrix& in_control, double quantile) {
    const Eigen::Index T = in_control.rows(), q = in_control.cols();
    if (T < q + 2) throw std::invalid_argument("fit_t2_model: not enough steps");
    if (!(quantile > 0) || !(quantile < 1))
        throw std::invalid_argument("fit_t2_model: quantile must be in (0,1)");
    T2Model m;
    m.mean = in_control.colwise().mean();
    const Matrix centered = in_control.rowwise() - m.mean.transpose();
    const Matrix cov = centered.transpose() * centered / static_cast<double>(T - 1);
    const Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("fit_t2_model: covariance is not positive definite");
    m.inv_covariance = llt.solve(Matrix::Identity(q, q));
    // symmetrize against round-off so downstream SPD checks hold exactly
    m.inv_covariance = ((m.inv_covariance + m.inv_covariance.transpose()) / 2.0).eval();
    m.ucl = chi_squared_quantile(quantile, static_cast<int>(q));
    return m;
}

AlarmResult hotelling_t2_alarms(const T2Model& t2, const Matrix& data) {
    if (data.cols() != t2.mean.size())
        throw std::invalid_argument("hotelling_t2_alarms: channel count mismatch");
    if (data.rows() < 1) throw std::invalid_argument("hotelling_t2_alarms: empty trajectory");
    AlarmResult r;
    for (Eigen::Index t = 0; t < data.rows(); ++t) {
        const Vector d = data.row(t).transpose() - t2.mean;
        if (d.dot(t2.inv_covariance * d) > t2.ucl) r.indices.push_back(static_cast<int>(t));
    }
    r.rate = static_cast<double>(r.indices.size()) / static_cast<double>(data.rows());
    return r;
}

namespace {

// Correlation matrix of one window; zero-variance channels get correlation 0
// with everything. Returns true when any channel was flat.
bool window_correlation(const Matrix& data, Eigen::Index start, int n, Matrix& corr) {
    const Eigen::Index q = data.cols();
    const Matrix w = data.middleRows(start, n);
    const Vector mean = w.colwise().mean();
    Matrix centered = w.rowwise() - mean.transpose();
    Vector norms(q);
    bool flat = false;
    for (Eigen::Index j = 0; j < q; ++j) {
        norms(j) = centered.col(j).norm();
        if (norms(j) < 1e-12) flat = true;
    }
    corr.setZero(q, q);
    for (Eigen::Index i = 0; i < q; ++i) {
        for (Eigen::Index j = i; j < q; ++j) {
            double v = 0.0;
            if (norms(i) >= 1e-12 && norms(j) >= 1e-12)
                v = centered.col(i).dot(centered.col(j)) / (norms(i) * norms(j));
            corr(i, j) = v;
            corr(j, i) = v;
        }
    }
    return flat;
}

}  // namespace

Matrix correlation_difference(const Matrix& in_control, const Matrix& attack, int window,
                              int* zero_variance_windows) {
    if (in_control.rows() != attack.rows() || in_control.cols() != attack.cols())
        throw std::invalid_argument("correlation_difference: shape mismatch");
    if (window < 2) throw std::invalid_argument("correlation_difference: window must be >= 2");
    if (in_control.rows() < window)
        throw std::invalid_argument("correlation_difference: trajectory shorter than window");
    const Eigen::Index q = in_control.cols();
    const Eigen::Index positions = in_control.rows() - window + 1;
    Matrix acc = Matrix::Zero(q, q);
    Matrix ci(q, q), ca(q, q);
    int flats = 0;
    for (Eigen::Index s = 0; s < positions; ++s) {
        const bool f1 = window_correlation(in_control, s, window, ci);
        const bool f2 = window_correlation(attack, s, window, ca);
        if (f1 || f2) ++flats;
        acc += (ci - ca).cwiseAbs();
    }
    acc /= static_cast<double>(positions);
    acc.diagonal().setZero();
    if (zero_variance_windows) *zero_variance_windows = flats;
    return acc;
}

Matrix window_features(const Matrix& data, const WindowFeatureSpec& spec) {
    const int n = spec.window;
    const int min_n = spec.mode == WindowFeatureSpec::Mode::correlation ? 10 : 2;
    if (n < min_n) throw std::invalid_argument("window_features: window too short for the mode");
    if (data.rows() < n) throw std::invalid_argument("window_features: trajectory shorter than window");
    const Eigen::Index q = data.cols();
    const Eigen::Index windows = data.rows() / n;

    if (spec.mode == WindowFeatureSpec::Mode::raw) {
        Matrix out(windows, static_cast<Eigen::Index>(n) * q);
        for (Eigen::Index w = 0; w < windows; ++w)
            for (int t = 0; t < n; ++t)
                for (Eigen::Index j = 0; j < q; ++j)
                    out(w, static_cast<Eigen::Index>(t) * q + j) = data(w * n + t, j);
        return out;
    }

    const Eigen::Index pairs = q * (q - 1) / 2;
    Matrix out(windows, pairs + q);
    Matrix corr(q, q);
    for (Eigen::Index w = 0; w < windows; ++w) {
        window_correlation(data, w * n, n, corr);
        Eigen::Index col = 0;
        for (Eigen::Index i = 0; i < q; ++i)
            for (Eigen::Index j = i + 1; j < q; ++j) out(w, col++) = corr(i, j);
        const Matrix block = data.middleRows(w * n, n);
        const Vector mean = block.colwise().mean();
        for (Eigen::Index j = 0; j < q; ++j)
            out(w, col++) = std::sqrt((block.col(j).array() - mean(j)).square().sum() /
                                      static_cast<double>(n));
    }
    return out;
}

DetectionReport knn_evaluate(const Matrix& train_features, const std::vector<int>& train_labels,
                             const Matrix& test_features, const std::vector<int>& test_labels,
                             int k) {
    const Eigen::Index ntr = train_features.rows(), nte = test_features.rows();
    const Eigen::Index d = train_features.cols();
    if (static_cast<Eigen::Index>(train_labels.size()) != ntr ||
        static_cast<Eigen::Index>(test_labels.size()) != nte)
        throw std::invalid_argument("knn_evaluate: label/feature row mismatch");
    if (test_features.cols() != d)
        throw std::invalid_argument("knn_evaluate: feature dimension mismatch");
    if (k < 1 || k % 2 == 0) throw std::invalid_argument("knn_evaluate: k must be odd and >= 1");
    if (static_cast<Eigen::Index>(k) > ntr)
        throw std::invalid_argument("knn_evaluate: k exceeds the training size");
    long long ones = 0;
    for (int l : train_labels) {
        if (l != 0 && l != 1) throw std::invalid_argument("knn_evaluate: labels must be 0 or 1");
        ones += l;
    }
    for (int l : test_labels)
        if (l != 0 && l != 1) throw std::invalid_argument("knn_evaluate: labels must be 0 or 1");
    if (2 * ones != ntr)
        std::cerr << "knn_evaluate: warning: training labels are unbalanced (" << ones << "/"
                  << ntr << " attack)\n";

    // standardize by the training statistics
    Vector mean, stdev;
    column_moments(train_features, mean, stdev);
    for (Eigen::Index j = 0; j < d; ++j)
        if (stdev(j) < 1e-12) stdev(j) = 1.0;
    const Matrix tr =
        (train_features.rowwise() - mean.transpose()).array().rowwise() /
        stdev.transpose().array();
    const Matrix te =
        (test_features.rowwise() - mean.transpose()).array().rowwise() /
        stdev.transpose().array();

    DetectionReport rep;
    std::vector<std::pair<double, Eigen::Index>> dist(static_cast<size_t>(ntr));
    for (Eigen::Index i = 0; i < nte; ++i) {
        for (Eigen::Index t = 0; t < ntr; ++t)
            dist[static_cast<size_t>(t)] = {(tr.row(t) - te.row(i)).squaredNorm(), t};
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        int votes = 0;
        for (int c = 0; c < k; ++c) votes += train_labels[static_cast<size_t>(dist[static_cast<size_t>(c)].second)];
        const int pred = 2 * votes > k ? 1 : 0;  // tie (even split) stays in control
        if (pred == 1) rep.alarm_indices.push_back(static_cast<int>(i));
        const int truth = test_labels[static_cast<size_t>(i)];
        if (pred == 1 && truth == 1)
            ++rep.tp;
        else if (pred == 1 && truth == 0)
            ++rep.fp;
        else if (pred == 0 && truth == 0)
            ++rep.tn;
        else
            ++rep.fn;
    }
    const double total = static_cast<double>(nte);
    rep.accuracy = total > 0 ? static_cast<double>(rep.tp + rep.tn) / total : 0.0;
    rep.precision = rep.tp + rep.fp > 0 ? static_cast<double>(rep.tp) / static_cast<double>(rep.tp + rep.fp) : 0.0;
    rep.recall = rep.tp + rep.fn > 0 ? static_cast<double>(rep.tp) / static_cast<double>(rep.tp + rep.fn) : 0.0;
    rep.f1 = rep.precision + rep.recall > 0
                 ? 2.0 * rep.precision * rep.recall / (rep.precision + rep.recall)
                 : 0.0;
    return rep;
}

}  // namespace sage
