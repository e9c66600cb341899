#pragma once

#include "predport/objective.hpp"
#include "predport/random.hpp"
#include "predport/risk_model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace predport {

enum class CrossoverKind { scattered, single_point, two_point };
enum class SelectionKind { uniform, roulette, tournament };
enum class StopReason { stall, time, generation_limit };

const char* to_string(CrossoverKind k) noexcept;
const char* to_string(SelectionKind k) noexcept;
const char* to_string(StopReason r) noexcept;
CrossoverKind parse_crossover_kind(const std::string& text);
SelectionKind parse_selection_kind(const std::string& text);

struct GAConfig {
    std::size_t population_size = 200;
    double crossover_fraction = 0.8;
    CrossoverKind crossover_kind = CrossoverKind::single_point;
    SelectionKind selection_kind = SelectionKind::roulette;
    std::size_t tournament_size = 4;
    double penalty_factor = 10.0;
    std::size_t stall_generations = 50;
    double function_tolerance = 1e-6;
    double time_limit_seconds = 1000.0;
    std::size_t max_generations = 500;
    double mutation_swap_rate = 0.1;
    double initial_step = 0.1;
    double min_step = 1e-4;
    double max_step = 0.5;
    unsigned threads = 1;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Asset subset Q (sorted, distinct) and the raw allocation s_i in [0, 1] of
/// each selected asset.
struct Chromosome {
    std::vector<std::size_t> selection;
    std::vector<double> raw;
    std::optional<double> fitness;

    bool operator==(const Chromosome& other) const
    {
        return selection == other.selection && raw == other.raw;
    }
};

std::vector<Chromosome> init_population(std::size_t assets, std::size_t k, const GAConfig& config, Rng& rng);

/// Linear rank weights for a minimization problem: the lowest cost gets
/// weight P, the highest 1. Tied costs share the mean of their weights.
std::vector<double> rank_weights(std::span<const double> costs);

/// Index drawn with probability proportional to rank_weights(fitness).
std::size_t roulette_select(std::span<const Chromosome> population, Rng& rng);
std::size_t select_parent(std::span<const Chromosome> population, const GAConfig& config, Rng& rng);

/// Slot-wise recombination of two parents. The parents are aligned so that
/// shared assets occupy the same slots (sorted by asset) followed by each
/// parent's own assets; slot j is taken from `second` when take_second[j].
/// The child therefore always holds exactly K distinct assets: a shared asset
/// keeps the s of whichever parent owns its slot, and an asset held by one
/// parent only enters when that parent owns its slot.
Chromosome combine_aligned(const Chromosome& first, const Chromosome& second, const std::vector<bool>& take_second);

/// Genes 1..m from `first`, m+1..n from `second`, the rest from `first`
/// (0 <= m < n <= K), over the aligned slot order.
Chromosome crossover_at(const Chromosome& first, const Chromosome& second, std::size_t m, std::size_t n);

/// Randomized crossover: parent order is drawn by coin and the aligned slots
/// are shuffled before the cut points are applied, so each parent contributes
/// any given slot with probability 1/2.
Chromosome crossover(const Chromosome& a, const Chromosome& b, Rng& rng, CrossoverKind kind);

/// Step length for adaptive mutation: doubles after a generation that
/// improved the best cost, halves otherwise, clamped to [min, max].
class AdaptiveStep {
public:
    AdaptiveStep(double initial, double min, double max) : step_(initial), min_(min), max_(max) {}

    double value() const noexcept { return step_; }
    void update(bool improved) noexcept;

private:
    double step_, min_, max_;
};

/// Moves s along a random unit direction by `step` and clamps each gene to
/// [0, 1]; with probability swap_rate one selected asset is replaced by a
/// uniformly drawn unselected one.
void mutate(Chromosome& chromosome, double step, std::size_t assets, double swap_rate, Rng& rng);

struct GAResult {
    Portfolio best;
    Chromosome best_chromosome;
    double best_cost = 0.0;
    std::size_t generations = 0;
    std::size_t evaluations = 0;
    // Best cost after initialization (index 0) and after each generation.
    std::vector<double> cost_history;
    std::vector<double> mean_cost_history;
    StopReason stop_reason = StopReason::generation_limit;
    GAConfig config;
    ObjectiveParams params;
};

GAResult evolve(const RiskModel& model, const ObjectiveParams& params, const Bounds& bounds, const GAConfig& config);

/// CSV trace `generation,best_cost,mean_cost`.
std::string trace_csv(const GAResult& result);

} // namespace predport
