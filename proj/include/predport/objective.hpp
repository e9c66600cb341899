#pragma once

#include "predport/risk_model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace predport {

/// Per-asset weight limits plus the number of assets held. Limits apply only
/// to the K selected assets; unselected assets carry zero weight.
struct Bounds {
    std::vector<double> epsilon;
    std::vector<double> delta;
    std::size_t k = 0;

    static Bounds uniform(std::size_t assets, double epsilon, double delta, std::size_t k);

    std::size_t assets() const noexcept { return epsilon.size(); }
    /// Shape and range checks for a universe of `assets` assets.
    void validate(std::size_t assets) const;
    /// Throws InfeasibleBoundsError unless some K-subset admits weights that
    /// satisfy both limits and sum to 1.
    void check_cardinality_feasible() const;
};

enum class SkewMode {
    // sum_{i in Q} w_i Skew(i)
    weighted,
    // sum_{i in Q} Skew(i), independent of the weights
    literal,
};

struct ObjectiveParams {
    double lambda = 0.8;
    double theta = 0.2;
    SkewMode skew_mode = SkewMode::weighted;

    void validate() const;
};

struct Portfolio {
    std::vector<std::size_t> selection;
    Eigen::VectorXd weights;
    double mu_p = 0.0;
    // Quadratic form w' Sigma w, i.e. a variance-scale quantity.
    double sigma_p = 0.0;
};

/// Maps raw allocations s_i >= 0 of the selected assets to weights
/// w_i = eps_i + (s_i / sum s) (1 - sum eps), then clips weights above delta_i
/// and hands the excess to the unclipped assets in proportion to s (uniformly
/// when their s are all zero) until no upper limit is violated.
std::vector<double> decode_weights(std::span<const std::size_t> selection, std::span<const double> raw,
                                   const Bounds& bounds);

double portfolio_return(const Eigen::VectorXd& weights, const Eigen::VectorXd& mu);
double portfolio_risk(const Eigen::VectorXd& weights, const Eigen::MatrixXd& sigma);

/// Full-length weight vector plus mu_p and sigma_p.
Portfolio make_portfolio(std::span<const std::size_t> selection, std::span<const double> selected_weights,
                         const RiskModel& model);

double skew_term(const Portfolio& portfolio, const RiskModel& model, SkewMode mode);

/// lambda w'Sw - (1 - lambda) w'mu - theta S(Q).
double mvs_cost(const Portfolio& portfolio, const RiskModel& model, const ObjectiveParams& params);

struct PenalizedCost {
    double fitness = 0.0;
    double violation = 0.0;
    Portfolio portfolio;
};

/// Fitness of a raw chromosome. Chromosomes whose subset cannot satisfy the
/// limits are evaluated at the proportionally rescaled lower (or upper)
/// limits, and penalty_factor times the total violation is added.
PenalizedCost penalized_cost(std::span<const std::size_t> selection, std::span<const double> raw,
                             const RiskModel& model, const ObjectiveParams& params, const Bounds& bounds,
                             double penalty_factor);

} // namespace predport
