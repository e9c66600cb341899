#pragma once

#include "predport/market_data.hpp"
#include "predport/predictor.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace predport {

struct RiskModel {
    std::vector<std::string> assets;
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
    Eigen::VectorXd skew;
    std::size_t estimation_window = 0;
    // Amount added to the diagonal of sigma to restore positive
    // semidefiniteness; 0 when no repair was needed.
    double diagonal_shift = 0.0;

    std::size_t size() const noexcept { return assets.size(); }
    /// Throws DimensionError / EstimationError when the invariants do not hold.
    void validate() const;
};

/// (1/(N-1)) sum_t a_t b_t. Prediction errors are assumed to have zero mean,
/// so no centering is applied unless `centered` is set.
double error_covariance(std::span<const double> a, std::span<const double> b, bool centered = false);
double error_covariance(const PredictionRecord& a, const PredictionRecord& b, bool centered = false);
double error_variance(const PredictionRecord& record, bool centered = false);

enum class MuMode { one_step, mean_of_predictions };

double expected_return(const PredictionRecord& record, MuMode mode = MuMode::one_step);

struct SkewnessResult {
    double value = 0.0;
    bool degenerate = false;
};

/// Sample skewness g1 = m3 / m2^(3/2) with population central moments.
SkewnessResult asset_skewness(std::span<const double> returns);

struct RiskModelOptions {
    MuMode mu_mode = MuMode::one_step;
    bool centered = false;
    double psd_tolerance = 1e-9;
};

/// Builds mu, the pairwise error covariance and per-asset skewness. `returns`
/// holds the full return series of each asset, aligned with `records`.
RiskModel build_risk_model(std::span<const PredictionRecord> records, std::span<const ReturnSeries> returns,
                           const RiskModelOptions& options = {});

} // namespace predport
