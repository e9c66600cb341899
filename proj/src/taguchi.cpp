#include "predport/taguchi.hpp"

#include "predport/error.hpp"
#include "predport/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace predport {

FactorGrid FactorGrid::ga_default()
{
    return {{
        {"population_size", {"50", "100", "200"}},
        {"selection", {"uniform", "roulette", "tournament"}},
        {"crossover_fraction", {"0.9", "0.6", "0.8"}},
        {"crossover_function", {"scattered", "single_point", "two_point"}},
        {"penalty_factor", {"10", "50", "100"}},
    }};
}

void FactorGrid::validate() const
{
    if (factors.size() != 5) {
        throw ConfigError("the tuner expects 5 three-level factors, got " + std::to_string(factors.size()));
    }
}

OrthogonalArray l27()
{
    // Coefficients over the base digits (A, B, C), in the usual column order.
    static constexpr int columns[13][3] = {
        {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, 2, 0}, {0, 0, 1}, {1, 0, 1}, {1, 0, 2},
        {0, 1, 1}, {1, 1, 1}, {1, 2, 2}, {0, 1, 2}, {1, 1, 2}, {1, 2, 1},
    };
    OrthogonalArray out(27, std::vector<int>(13));
    for (int r = 0; r < 27; ++r) {
        const int digits[3] = {r / 9, (r / 3) % 3, r % 3};
        for (int c = 0; c < 13; ++c) {
            out[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
                (columns[c][0] * digits[0] + columns[c][1] * digits[1] + columns[c][2] * digits[2]) % 3;
        }
    }
    return out;
}

OrthogonalArray build_array(const FactorGrid& grid)
{
    grid.validate();
    auto full = l27();
    for (auto& row : full) {
        row.resize(grid.factors.size());
    }
    return full;
}

GAConfig apply_levels(GAConfig base, const FactorGrid& grid, const std::vector<int>& levels)
{
    if (levels.size() != grid.factors.size()) {
        throw ConfigError("level assignment does not match the factor count");
    }
    for (std::size_t f = 0; f < levels.size(); ++f) {
        if (levels[f] < 0 || levels[f] > 2) {
            throw ConfigError("factor levels must be 0, 1 or 2");
        }
        const auto& name = grid.factors[f].name;
        const auto& value = grid.factors[f].levels[static_cast<std::size_t>(levels[f])];
        try {
            if (name == "population_size") {
                base.population_size = std::stoul(value);
            } else if (name == "selection") {
                base.selection_kind = parse_selection_kind(value);
            } else if (name == "crossover_fraction") {
                base.crossover_fraction = std::stod(value);
            } else if (name == "crossover_function") {
                base.crossover_kind = parse_crossover_kind(value);
            } else if (name == "penalty_factor") {
                base.penalty_factor = std::stod(value);
            } else {
                throw ConfigError("unknown GA factor '" + name + "'");
            }
        } catch (const std::logic_error&) {
            throw ConfigError("bad level '" + value + "' for factor " + name);
        }
    }
    return base;
}

std::vector<ExperimentRun> run_experiments(const OrthogonalArray& array, std::size_t replicates, std::uint64_t seed,
                                           const RunEvaluator& evaluate)
{
    if (replicates < 1) {
        throw ConfigError("replicates must be >= 1");
    }
    std::vector<ExperimentRun> runs;
    runs.reserve(array.size());
    for (std::size_t i = 0; i < array.size(); ++i) {
        ExperimentRun run{array[i], {}};
        for (std::size_t r = 0; r < replicates; ++r) {
            try {
                run.costs.push_back(evaluate(array[i], derive_seed(seed, i * replicates + r)));
            } catch (const Error& e) {
                throw Error("tuning run " + std::to_string(i + 1) + " failed: " + e.what());
            }
        }
        runs.push_back(std::move(run));
    }
    return runs;
}

std::vector<ExperimentRun> run_experiments(const OrthogonalArray& array, const FactorGrid& grid,
                                           const RiskModel& model, const ObjectiveParams& params,
                                           const Bounds& bounds, const GAConfig& base, std::size_t replicates,
                                           std::uint64_t seed)
{
    return run_experiments(array, replicates, seed, [&](const std::vector<int>& levels, std::uint64_t s) {
        GAConfig cfg = apply_levels(base, grid, levels);
        cfg.seed = s;
        return evolve(model, params, bounds, cfg).best_cost;
    });
}

TuneResult analyze_means(const std::vector<ExperimentRun>& runs, std::size_t factors, TuneResponse response)
{
    if (runs.empty()) {
        throw ConfigError("run table is empty");
    }
    const std::size_t replicates = runs.front().costs.size();
    std::vector<std::array<std::vector<double>, 3>> buckets(factors);
    std::vector<std::array<std::size_t, 3>> row_counts(factors, {0, 0, 0});
    for (const auto& run : runs) {
        if (run.levels.size() != factors) {
            throw ConfigError("run has " + std::to_string(run.levels.size()) + " factor levels, expected " +
                              std::to_string(factors));
        }
        if (run.costs.empty() || run.costs.size() != replicates) {
            throw ConfigError("run table is incomplete: replicate counts differ");
        }
        for (std::size_t f = 0; f < factors; ++f) {
            const int l = run.levels[f];
            if (l < 0 || l > 2) {
                throw ConfigError("factor levels must be 0, 1 or 2");
            }
            auto& bucket = buckets[f][static_cast<std::size_t>(l)];
            bucket.insert(bucket.end(), run.costs.begin(), run.costs.end());
            ++row_counts[f][static_cast<std::size_t>(l)];
        }
    }
    for (std::size_t f = 0; f < factors; ++f) {
        if (row_counts[f][0] == 0 || row_counts[f][0] != row_counts[f][1] || row_counts[f][1] != row_counts[f][2]) {
            throw ConfigError("run table is incomplete: factor " + std::to_string(f + 1) + " levels are unbalanced");
        }
    }

    TuneResult out;
    out.runs = runs;
    out.response = response;
    for (std::size_t f = 0; f < factors; ++f) {
        std::array<double, 3> values{};
        for (std::size_t l = 0; l < 3; ++l) {
            auto bucket = buckets[f][l];
            // Sorting first makes the sums independent of run order.
            std::sort(bucket.begin(), bucket.end());
            const auto n = static_cast<double>(bucket.size());
            if (response == TuneResponse::mean_cost) {
                values[l] = std::accumulate(bucket.begin(), bucket.end(), 0.0) / n;
            } else {
                double sq = 0.0;
                for (double c : bucket) {
                    if (!(c > 0.0)) {
                        throw ConfigError("signal-to-noise response needs strictly positive costs");
                    }
                    sq += c * c;
                }
                values[l] = -10.0 * std::log10(sq / n);
            }
        }
        // Smaller mean cost is better; larger S/N is better.
        std::array<double, 3> score = values;
        if (response == TuneResponse::sn_smaller_better) {
            for (double& s : score) {
                s = -s;
            }
        }
        const double best = *std::min_element(score.begin(), score.end());
        const double tol = 1e-12 * std::max(1.0, std::abs(best));
        int chosen = -1;
        int ties = 0;
        for (int l = 0; l < 3; ++l) {
            if (score[static_cast<std::size_t>(l)] - best <= tol) {
                if (chosen < 0) {
                    chosen = l;
                }
                ++ties;
            }
        }
        out.best_levels.push_back(chosen);
        out.tie.push_back(ties > 1);
        out.response_table.push_back(values);
    }
    return out;
}

std::string runs_csv(const TuneResult& result, const FactorGrid& grid)
{
    std::ostringstream os;
    os.precision(17);
    os << "run";
    for (const auto& f : grid.factors) {
        os << ',' << f.name;
    }
    os << ",replicate,cost\n";
    for (std::size_t i = 0; i < result.runs.size(); ++i) {
        const auto& run = result.runs[i];
        for (std::size_t r = 0; r < run.costs.size(); ++r) {
            os << i + 1;
            for (std::size_t f = 0; f < run.levels.size(); ++f) {
                os << ',' << grid.factors[f].levels[static_cast<std::size_t>(run.levels[f])];
            }
            os << ',' << r << ',' << run.costs[r] << '\n';
        }
    }
    return os.str();
}

std::string response_csv(const TuneResult& result, const FactorGrid& grid)
{
    std::ostringstream os;
    os.precision(17);
    os << "factor,level,value," << (result.response == TuneResponse::mean_cost ? "mean_cost" : "sn_ratio")
       << ",best,tie\n";
    for (std::size_t f = 0; f < result.response_table.size(); ++f) {
        for (std::size_t l = 0; l < 3; ++l) {
            os << grid.factors[f].name << ',' << l + 1 << ',' << grid.factors[f].levels[l] << ','
               << result.response_table[f][l] << ',' << (result.best_levels[f] == static_cast<int>(l) ? 1 : 0) << ','
               << (result.tie[f] ? 1 : 0) << '\n';
        }
    }
    return os.str();
}

} // namespace predport
