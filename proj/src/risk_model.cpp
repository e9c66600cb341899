#include "predport/risk_model.hpp"

#include "predport/error.hpp"

#include <cmath>
#include <numeric>

namespace predport {

void RiskModel::validate() const
{
    const auto m = static_cast<Eigen::Index>(assets.size());
    if (m == 0) {
        throw DimensionError("risk model has no assets");
    }
    if (mu.size() != m || skew.size() != m || sigma.rows() != m || sigma.cols() != m) {
        throw DimensionError("risk model vectors and matrix must all have " + std::to_string(m) + " entries per side");
    }
    if (!mu.allFinite() || !sigma.allFinite() || !skew.allFinite()) {
        throw EstimationError("risk model contains non-finite values");
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        if (sigma(i, i) < 0.0) {
            throw EstimationError("negative variance for asset " + assets[static_cast<std::size_t>(i)]);
        }
        for (Eigen::Index j = 0; j < i; ++j) {
            if (std::abs(sigma(i, j) - sigma(j, i)) > 1e-12) {
                throw EstimationError("covariance matrix is not symmetric");
            }
        }
    }
}

double error_covariance(std::span<const double> a, std::span<const double> b, bool centered)
{
    if (a.size() != b.size()) {
        throw EstimationError("error series lengths differ: " + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()));
    }
    const std::size_t n = a.size();
    if (n < 2) {
        throw EstimationError("covariance needs at least 2 errors");
    }
    double ma = 0.0, mb = 0.0;
    if (centered) {
        ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
        mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
    }
    double sum = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        sum += (a[t] - ma) * (b[t] - mb);
    }
    return sum / static_cast<double>(n - 1);
}

double error_covariance(const PredictionRecord& a, const PredictionRecord& b, bool centered)
{
    return error_covariance(a.errors, b.errors, centered);
}

double error_variance(const PredictionRecord& record, bool centered)
{
    return error_covariance(record.errors, record.errors, centered);
}

double expected_return(const PredictionRecord& record, MuMode mode)
{
    if (record.predicted.empty()) {
        throw EstimationError("prediction record for " + record.asset + " is empty");
    }
    if (mode == MuMode::one_step) {
        return record.predicted.back();
    }
    return std::accumulate(record.predicted.begin(), record.predicted.end(), 0.0) /
           static_cast<double>(record.predicted.size());
}

SkewnessResult asset_skewness(std::span<const double> returns)
{
    const std::size_t n = returns.size();
    if (n < 3) {
        throw EstimationError("skewness needs at least 3 observations");
    }
    const double mean = std::accumulate(returns.begin(), returns.end(), 0.0) / static_cast<double>(n);
    double m2 = 0.0, m3 = 0.0;
    for (double r : returns) {
        const double c = r - mean;
        m2 += c * c;
        m3 += c * c * c;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    // Relative guard: rounding in the mean leaves tiny m2 for constant data.
    if (!(m2 > 1e-28 * std::max(1.0, mean * mean))) {
        return {0.0, true};
    }
    return {m3 / std::pow(m2, 1.5), false};
}

RiskModel build_risk_model(std::span<const PredictionRecord> records, std::span<const ReturnSeries> returns,
                           const RiskModelOptions& options)
{
    if (records.empty()) {
        throw EstimationError("no prediction records");
    }
    if (returns.size() != records.size()) {
        throw EstimationError("need one return series per prediction record");
    }
    const std::size_t n = records.front().errors.size();
    for (const auto& r : records) {
        if (r.errors.size() != n) {
            throw EstimationError("prediction records disagree on window length (" + std::to_string(n) + " vs " +
                                  std::to_string(r.errors.size()) + ")");
        }
    }

    const auto m = static_cast<Eigen::Index>(records.size());
    RiskModel model;
    model.estimation_window = n;
    model.mu.resize(m);
    model.skew.resize(m);
    model.sigma.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& rec = records[static_cast<std::size_t>(i)];
        model.assets.push_back(rec.asset);
        model.mu(i) = expected_return(rec, options.mu_mode);
        model.skew(i) = asset_skewness(returns[static_cast<std::size_t>(i)].returns).value;
        for (Eigen::Index j = 0; j <= i; ++j) {
            model.sigma(i, j) = error_covariance(rec, records[static_cast<std::size_t>(j)], options.centered);
        }
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            model.sigma(j, i) = model.sigma(i, j);
        }
    }

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.sigma, Eigen::EigenvaluesOnly);
    const double min_eig = eig.eigenvalues().minCoeff();
    if (min_eig < -options.psd_tolerance) {
        model.diagonal_shift = -min_eig;
        model.sigma.diagonal().array() += model.diagonal_shift;
    }
    model.validate();
    return model;
}

} // namespace predport
