#pragma once

#include "predport/ga_solver.hpp"
#include "predport/objective.hpp"
#include "predport/risk_model.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace predport {

struct Factor {
    std::string name;
    std::array<std::string, 3> levels;
};

struct FactorGrid {
    std::vector<Factor> factors;

    /// Population size, selection, crossover fraction, crossover function and
    /// penalty factor at the levels used for tuning the GA.
    static FactorGrid ga_default();
    void validate() const;
};

/// Level indices in {0, 1, 2}; one row per run, one column per factor.
using OrthogonalArray = std::vector<std::vector<int>>;

/// Full L27(3^13): row r has base digits (r/9, r/3 % 3, r % 3).
OrthogonalArray l27();

/// First five columns of L27, one per factor of `grid`.
OrthogonalArray build_array(const FactorGrid& grid);

/// Base config with the GA factors of `grid` set to the chosen levels.
GAConfig apply_levels(GAConfig base, const FactorGrid& grid, const std::vector<int>& levels);

struct ExperimentRun {
    std::vector<int> levels;
    std::vector<double> costs;
};

/// Cost of one run given its factor levels and a derived seed.
using RunEvaluator = std::function<double(const std::vector<int>& levels, std::uint64_t seed)>;

/// Executes every row `replicates` times. Replicate r of row i is seeded with
/// derive_seed(seed, i * replicates + r).
std::vector<ExperimentRun> run_experiments(const OrthogonalArray& array, std::size_t replicates, std::uint64_t seed,
                                           const RunEvaluator& evaluate);

/// Runs the GA for each row at fixed objective parameters and records the
/// final best cost.
std::vector<ExperimentRun> run_experiments(const OrthogonalArray& array, const FactorGrid& grid,
                                           const RiskModel& model, const ObjectiveParams& params,
                                           const Bounds& bounds, const GAConfig& base, std::size_t replicates,
                                           std::uint64_t seed);

enum class TuneResponse {
    // Mean cost per level; smaller is better.
    mean_cost,
    // -10 log10(mean cost^2) per level; larger is better. Costs must be positive.
    sn_smaller_better,
};

struct TuneResult {
    std::vector<int> best_levels;
    std::vector<std::array<double, 3>> response_table;
    std::vector<bool> tie;
    std::vector<ExperimentRun> runs;
    TuneResponse response = TuneResponse::mean_cost;
};

TuneResult analyze_means(const std::vector<ExperimentRun>& runs, std::size_t factors = 5,
                         TuneResponse response = TuneResponse::mean_cost);

std::string runs_csv(const TuneResult& result, const FactorGrid& grid);
std::string response_csv(const TuneResult& result, const FactorGrid& grid);

} // namespace predport
