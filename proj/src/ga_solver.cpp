#include "predport/ga_solver.hpp"

#include "predport/error.hpp"
#include "predport/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace predport {

namespace {

void sort_genes(Chromosome& c)
{
    std::vector<std::size_t> order(c.selection.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c.selection[a] < c.selection[b]; });
    Chromosome sorted;
    sorted.selection.reserve(order.size());
    sorted.raw.reserve(order.size());
    for (std::size_t i : order) {
        sorted.selection.push_back(c.selection[i]);
        sorted.raw.push_back(c.raw[i]);
    }
    c.selection = std::move(sorted.selection);
    c.raw = std::move(sorted.raw);
}

struct Aligned {
    std::vector<std::size_t> first_assets, second_assets;
    std::vector<double> first_raw, second_raw;
};

Aligned align(const Chromosome& first, const Chromosome& second)
{
    if (first.selection.size() != second.selection.size() || first.raw.size() != first.selection.size() ||
        second.raw.size() != second.selection.size()) {
        throw DimensionError("crossover parents must hold the same number of assets");
    }
    auto position = [](const Chromosome& c, std::size_t asset) -> std::optional<std::size_t> {
        const auto it = std::find(c.selection.begin(), c.selection.end(), asset);
        if (it == c.selection.end()) {
            return std::nullopt;
        }
        return static_cast<std::size_t>(it - c.selection.begin());
    };

    std::vector<std::size_t> shared, only_first, only_second;
    for (std::size_t a : first.selection) {
        (position(second, a) ? shared : only_first).push_back(a);
    }
    for (std::size_t a : second.selection) {
        if (!position(first, a)) {
            only_second.push_back(a);
        }
    }
    std::sort(shared.begin(), shared.end());
    std::sort(only_first.begin(), only_first.end());
    std::sort(only_second.begin(), only_second.end());

    Aligned out;
    for (std::size_t a : shared) {
        out.first_assets.push_back(a);
        out.first_raw.push_back(first.raw[*position(first, a)]);
        out.second_assets.push_back(a);
        out.second_raw.push_back(second.raw[*position(second, a)]);
    }
    for (std::size_t i = 0; i < only_first.size(); ++i) {
        out.first_assets.push_back(only_first[i]);
        out.first_raw.push_back(first.raw[*position(first, only_first[i])]);
        out.second_assets.push_back(only_second[i]);
        out.second_raw.push_back(second.raw[*position(second, only_second[i])]);
    }
    return out;
}

Chromosome evaluate_into(Chromosome c, const RiskModel& model, const ObjectiveParams& params, const Bounds& bounds,
                         double penalty)
{
    c.fitness = penalized_cost(c.selection, c.raw, model, params, bounds, penalty).fitness;
    return c;
}

} // namespace

const char* to_string(CrossoverKind k) noexcept
{
    switch (k) {
    case CrossoverKind::scattered:
        return "scattered";
    case CrossoverKind::single_point:
        return "single_point";
    case CrossoverKind::two_point:
        return "two_point";
    }
    return "?";
}

const char* to_string(SelectionKind k) noexcept
{
    switch (k) {
    case SelectionKind::uniform:
        return "uniform";
    case SelectionKind::roulette:
        return "roulette";
    case SelectionKind::tournament:
        return "tournament";
    }
    return "?";
}

const char* to_string(StopReason r) noexcept
{
    switch (r) {
    case StopReason::stall:
        return "stall";
    case StopReason::time:
        return "time";
    case StopReason::generation_limit:
        return "generation_limit";
    }
    return "?";
}

CrossoverKind parse_crossover_kind(const std::string& text)
{
    if (text == "scattered") {
        return CrossoverKind::scattered;
    }
    if (text == "single_point" || text == "single-point" || text == "single") {
        return CrossoverKind::single_point;
    }
    if (text == "two_point" || text == "two-point" || text == "two") {
        return CrossoverKind::two_point;
    }
    throw ConfigError("unknown crossover kind '" + text + "'");
}

SelectionKind parse_selection_kind(const std::string& text)
{
    if (text == "uniform") {
        return SelectionKind::uniform;
    }
    if (text == "roulette") {
        return SelectionKind::roulette;
    }
    if (text == "tournament") {
        return SelectionKind::tournament;
    }
    throw ConfigError("unknown selection kind '" + text + "'");
}

void GAConfig::validate() const
{
    if (population_size < 2) {
        throw ConfigError("population_size must be >= 2");
    }
    if (!(crossover_fraction >= 0.0 && crossover_fraction <= 1.0)) {
        throw ConfigError("crossover_fraction must lie in [0, 1]");
    }
    if (!(mutation_swap_rate >= 0.0 && mutation_swap_rate <= 1.0)) {
        throw ConfigError("mutation_swap_rate must lie in [0, 1]");
    }
    if (!(function_tolerance > 0.0) || !(time_limit_seconds > 0.0)) {
        throw ConfigError("function_tolerance and time_limit_seconds must be positive");
    }
    if (!(penalty_factor >= 0.0)) {
        throw ConfigError("penalty_factor must be non-negative");
    }
    if (stall_generations < 1 || max_generations < 1 || tournament_size < 1) {
        throw ConfigError("stall_generations, max_generations and tournament_size must be >= 1");
    }
    if (!(min_step >= 0.0 && min_step <= initial_step && initial_step <= max_step)) {
        throw ConfigError("mutation steps must satisfy 0 <= min_step <= initial_step <= max_step");
    }
}

std::vector<Chromosome> init_population(std::size_t assets, std::size_t k, const GAConfig& config, Rng& rng)
{
    if (k < 1 || k > assets) {
        throw ConfigError("cannot select K=" + std::to_string(k) + " of " + std::to_string(assets) + " assets");
    }
    std::vector<Chromosome> population(config.population_size);
    std::vector<std::size_t> pool(assets);
    for (auto& c : population) {
        std::iota(pool.begin(), pool.end(), 0);
        for (std::size_t i = 0; i < k; ++i) {
            const auto j = i + uniform_index(rng, assets - i);
            std::swap(pool[i], pool[j]);
        }
        c.selection.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
        c.raw.resize(k);
        for (double& s : c.raw) {
            s = uniform01(rng);
        }
        sort_genes(c);
    }
    return population;
}

std::vector<double> rank_weights(std::span<const double> costs)
{
    const std::size_t n = costs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return costs[a] < costs[b]; });
    std::vector<double> weights(n);
    for (std::size_t r = 0; r < n;) {
        std::size_t end = r + 1;
        while (end < n && costs[order[end]] == costs[order[r]]) {
            ++end;
        }
        // Ranks r..end-1 carry weights n-r .. n-end+1; ties share the mean.
        const double mean = static_cast<double>(n) - 0.5 * static_cast<double>(r + end - 1);
        for (std::size_t q = r; q < end; ++q) {
            weights[order[q]] = mean;
        }
        r = end;
    }
    return weights;
}

std::size_t roulette_select(std::span<const Chromosome> population, Rng& rng)
{
    if (population.empty()) {
        throw ConfigError("cannot select from an empty population");
    }
    std::vector<double> costs;
    costs.reserve(population.size());
    for (const auto& c : population) {
        if (!c.fitness || !std::isfinite(*c.fitness)) {
            throw ConfigError("roulette selection needs finite fitness values");
        }
        costs.push_back(*c.fitness);
    }
    const auto weights = rank_weights(costs);
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double u = uniform01(rng) * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (u < weights[i]) {
            return i;
        }
        u -= weights[i];
    }
    return weights.size() - 1;
}

std::size_t select_parent(std::span<const Chromosome> population, const GAConfig& config, Rng& rng)
{
    if (population.empty()) {
        throw ConfigError("cannot select from an empty population");
    }
    switch (config.selection_kind) {
    case SelectionKind::roulette:
        return roulette_select(population, rng);
    case SelectionKind::uniform:
        return uniform_index(rng, population.size());
    case SelectionKind::tournament: {
        std::size_t best = uniform_index(rng, population.size());
        for (std::size_t t = 1; t < config.tournament_size; ++t) {
            const std::size_t c = uniform_index(rng, population.size());
            if (*population[c].fitness < *population[best].fitness) {
                best = c;
            }
        }
        return best;
    }
    }
    return 0;
}

Chromosome combine_aligned(const Chromosome& first, const Chromosome& second, const std::vector<bool>& take_second)
{
    const auto al = align(first, second);
    if (take_second.size() != al.first_assets.size()) {
        throw DimensionError("crossover mask length does not match K");
    }
    Chromosome child;
    for (std::size_t j = 0; j < take_second.size(); ++j) {
        if (take_second[j]) {
            child.selection.push_back(al.second_assets[j]);
            child.raw.push_back(al.second_raw[j]);
        } else {
            child.selection.push_back(al.first_assets[j]);
            child.raw.push_back(al.first_raw[j]);
        }
    }
    sort_genes(child);
    return child;
}

Chromosome crossover_at(const Chromosome& first, const Chromosome& second, std::size_t m, std::size_t n)
{
    const std::size_t k = first.selection.size();
    if (!(m < n && n <= k)) {
        throw DimensionError("crossover cut points must satisfy 0 <= m < n <= K");
    }
    std::vector<bool> mask(k);
    for (std::size_t j = 0; j < k; ++j) {
        mask[j] = j + 1 > m && j + 1 <= n;
    }
    return combine_aligned(first, second, mask);
}

Chromosome crossover(const Chromosome& a, const Chromosome& b, Rng& rng, CrossoverKind kind)
{
    const std::size_t k = a.selection.size();
    if (b.selection.size() != k) {
        throw DimensionError("crossover parents must hold the same number of assets");
    }
    const bool swap_roles = uniform01(rng) < 0.5;
    const Chromosome& first = swap_roles ? b : a;
    const Chromosome& second = swap_roles ? a : b;

    // Gene order along which the cuts are made.
    std::vector<std::size_t> slots(k);
    std::iota(slots.begin(), slots.end(), 0);
    for (std::size_t i = k; i > 1; --i) {
        std::swap(slots[i - 1], slots[uniform_index(rng, i)]);
    }

    std::vector<bool> take(k, false);
    switch (kind) {
    case CrossoverKind::scattered:
        for (std::size_t j = 0; j < k; ++j) {
            take[j] = uniform01(rng) < 0.5;
        }
        break;
    case CrossoverKind::single_point: {
        const std::size_t m = k > 1 ? 1 + uniform_index(rng, k - 1) : 0;
        for (std::size_t g = 0; g < k; ++g) {
            take[slots[g]] = g + 1 > m;
        }
        break;
    }
    case CrossoverKind::two_point: {
        // Uniform over pairs 0 <= m < n <= K.
        std::size_t m = uniform_index(rng, k + 1), n = uniform_index(rng, k);
        if (n >= m) {
            ++n;
        } else {
            std::swap(m, n);
        }
        for (std::size_t g = 0; g < k; ++g) {
            take[slots[g]] = g + 1 > m && g + 1 <= n;
        }
        break;
    }
    }
    return combine_aligned(first, second, take);
}

void AdaptiveStep::update(bool improved) noexcept
{
    step_ = std::clamp(improved ? step_ * 2.0 : step_ * 0.5, min_, max_);
}

void mutate(Chromosome& chromosome, double step, std::size_t assets, double swap_rate, Rng& rng)
{
    const std::size_t k = chromosome.raw.size();
    std::vector<double> direction(k);
    double norm = 0.0;
    for (double& d : direction) {
        d = standard_normal(rng);
        norm += d * d;
    }
    norm = std::sqrt(norm);
    if (step > 0.0 && norm > 0.0) {
        for (std::size_t i = 0; i < k; ++i) {
            chromosome.raw[i] = std::clamp(chromosome.raw[i] + step * direction[i] / norm, 0.0, 1.0);
        }
    }
    if (assets > k && uniform01(rng) < swap_rate) {
        const std::size_t pos = uniform_index(rng, k);
        std::size_t pick = uniform_index(rng, assets - k);
        // pick-th asset not in the selection (selection is sorted).
        std::size_t candidate = 0;
        for (std::size_t sel : chromosome.selection) {
            if (candidate + pick < sel) {
                break;
            }
            pick -= std::min(pick, sel - candidate);
            candidate = sel + 1;
        }
        chromosome.selection[pos] = candidate + pick;
        sort_genes(chromosome);
    }
    chromosome.fitness.reset();
}

GAResult evolve(const RiskModel& model, const ObjectiveParams& params, const Bounds& bounds, const GAConfig& config)
{
    config.validate();
    params.validate();
    model.validate();
    bounds.validate(model.size());
    bounds.check_cardinality_feasible();

    const auto started = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    };

    GAResult result;
    result.config = config;
    result.params = params;

    Rng rng(config.seed);
    auto population = init_population(model.size(), bounds.k, config, rng);
    parallel_for(
        population.size(),
        [&](std::size_t i) {
            population[i] = evaluate_into(std::move(population[i]), model, params, bounds, config.penalty_factor);
        },
        config.threads);
    result.evaluations = population.size();

    auto best_of = [&] {
        std::size_t best = 0;
        for (std::size_t i = 1; i < population.size(); ++i) {
            if (*population[i].fitness < *population[best].fitness) {
                best = i;
            }
        }
        return best;
    };
    auto mean_cost = [&] {
        double s = 0.0;
        for (const auto& c : population) {
            s += *c.fitness;
        }
        return s / static_cast<double>(population.size());
    };

    Chromosome best = population[best_of()];
    result.cost_history.push_back(*best.fitness);
    result.mean_cost_history.push_back(mean_cost());

    AdaptiveStep step(config.initial_step, config.min_step, config.max_step);
    const auto n_children = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(config.crossover_fraction * static_cast<double>(config.population_size))));

    result.stop_reason = StopReason::generation_limit;
    std::size_t generation = 0;
    while (generation < config.max_generations) {
        if (elapsed() >= config.time_limit_seconds) {
            result.stop_reason = StopReason::time;
            break;
        }
        ++generation;

        std::vector<Chromosome> children;
        children.reserve(n_children);
        for (std::size_t c = 0; c < n_children; ++c) {
            const auto& pa = population[select_parent(population, config, rng)];
            const auto& pb = population[select_parent(population, config, rng)];
            Chromosome child = crossover(pa, pb, rng, config.crossover_kind);
            mutate(child, step.value(), model.size(), config.mutation_swap_rate, rng);
            children.push_back(std::move(child));
        }
        parallel_for(
            children.size(),
            [&](std::size_t i) {
                children[i] = evaluate_into(std::move(children[i]), model, params, bounds, config.penalty_factor);
            },
            config.threads);
        result.evaluations += children.size();

        // Replacement in creation order keeps the outcome independent of threading.
        for (auto& child : children) {
            std::size_t worst = 0;
            for (std::size_t i = 1; i < population.size(); ++i) {
                if (*population[i].fitness > *population[worst].fitness) {
                    worst = i;
                }
            }
            if (*child.fitness < *population[worst].fitness) {
                population[worst] = std::move(child);
            }
        }

        const auto& gen_best = population[best_of()];
        const bool improved = *gen_best.fitness < *best.fitness;
        if (improved) {
            best = gen_best;
        }
        step.update(improved);
        result.cost_history.push_back(*best.fitness);
        result.mean_cost_history.push_back(mean_cost());

        if (generation >= config.stall_generations) {
            const double window_change = result.cost_history[generation - config.stall_generations] - *best.fitness;
            if (window_change / static_cast<double>(config.stall_generations) < config.function_tolerance) {
                result.stop_reason = StopReason::stall;
                break;
            }
        }
    }

    result.generations = generation;
    const auto eval = penalized_cost(best.selection, best.raw, model, params, bounds, config.penalty_factor);
    result.best = eval.portfolio;
    result.best_cost = eval.fitness;
    result.best_chromosome = best;
    return result;
}

std::string trace_csv(const GAResult& result)
{
    std::ostringstream os;
    os.precision(17);
    os << "generation,best_cost,mean_cost\n";
    for (std::size_t g = 0; g < result.cost_history.size(); ++g) {
        os << g << ',' << result.cost_history[g] << ',' << result.mean_cost_history[g] << '\n';
    }
    return os.str();
}

} // namespace predport
