#pragma once

#include "predport/ga_solver.hpp"
#include "predport/objective.hpp"
#include "predport/risk_model.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace predport {

struct FrontierPoint {
    double lambda = 0.0;
    double theta = 0.0;
    Portfolio portfolio;
    double mu_p = 0.0;
    double sigma_p = 0.0;
    double cost = 0.0;
    // max - min best cost across repeats
    double cost_spread = 0.0;
    std::uint64_t seed = 0;
    StopReason stop_reason = StopReason::generation_limit;
    std::size_t generations = 0;
};

struct SweepFailure {
    double lambda = 0.0;
    double theta = 0.0;
    std::string message;
};

struct SweepConfig {
    std::vector<double> lambdas{1.0, 0.8, 0.2, 0.0};
    std::vector<double> thetas{0.0, 0.2, 0.8};
    std::size_t repeats = 3;
    SkewMode skew_mode = SkewMode::weighted;
    // Workers across sweep points; each GA run itself follows GAConfig::threads.
    unsigned threads = 1;
};

struct SweepResult {
    std::vector<FrontierPoint> points;
    std::vector<SweepFailure> failures;

    bool ok() const noexcept { return failures.empty(); }
};

/// One GA optimization per (lambda, theta) pair, lambda-major in grid order.
/// Repeat r of point p is seeded with derive_seed(ga.seed, p * repeats + r)
/// and the lowest-cost repeat is kept.
SweepResult sweep(const RiskModel& model, const SweepConfig& config, const Bounds& bounds, const GAConfig& ga);

/// Non-dominated theta == 0 points in (sigma_p, mu_p), sorted by sigma_p.
std::vector<FrontierPoint> efficient_filter(std::span<const FrontierPoint> points);

/// `lambda,theta,<asset weights>,mu_p,sigma_p,cost,stop_reason,seed`
std::string frontier_csv(std::span<const FrontierPoint> points, const std::vector<std::string>& assets);
/// `sigma_p,mu_p`
std::string curve_csv(std::span<const FrontierPoint> points);

} // namespace predport
