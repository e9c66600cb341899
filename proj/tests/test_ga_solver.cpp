#include "predport/error.hpp"
#include "predport/ga_solver.hpp"

#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <vector>

using namespace predport;

namespace {

RiskModel diagonal_model(std::vector<double> variances, std::vector<double> mu)
{
    RiskModel m;
    const auto n = static_cast<Eigen::Index>(variances.size());
    for (Eigen::Index i = 0; i < n; ++i)
        m.assets.push_back("A" + std::to_string(i));
    m.sigma = Eigen::MatrixXd::Zero(n, n);
    m.mu.resize(n);
    m.skew = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        m.sigma(i, i) = variances[static_cast<std::size_t>(i)];
        m.mu(i) = mu[static_cast<std::size_t>(i)];
    }
    return m;
}

Chromosome chrom(std::vector<std::size_t> q, std::vector<double> s)
{
    return Chromosome{std::move(q), std::move(s), std::nullopt};
}

GAConfig fast_config(std::uint64_t seed)
{
    GAConfig c;
    c.population_size = 60;
    c.max_generations = 300;
    c.seed = seed;
    return c;
}

} // namespace

TEST(Enums, RoundTrip)
{
    for (auto k : {CrossoverKind::scattered, CrossoverKind::single_point, CrossoverKind::two_point})
        EXPECT_EQ(parse_crossover_kind(to_string(k)), k);
    for (auto k : {SelectionKind::uniform, SelectionKind::roulette, SelectionKind::tournament})
        EXPECT_EQ(parse_selection_kind(to_string(k)), k);
    EXPECT_THROW(parse_crossover_kind("three_point"), ConfigError);
}

TEST(GaSettings, Validation)
{
    GAConfig c;
    EXPECT_NO_THROW(c.validate());
    c.population_size = 1;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.crossover_fraction = 1.5;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.function_tolerance = 0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(InitPopulation, FullSelectionAndDeterminism)
{
    GAConfig c;
    Rng a(5), b(5);
    const auto pa = init_population(5, 5, c, a);
    const auto pb = init_population(5, 5, c, b);
    ASSERT_EQ(pa.size(), 200u);
    EXPECT_EQ(pa, pb);
    for (const auto& ch : pa) {
        EXPECT_EQ(ch.selection, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
        for (double s : ch.raw) {
            EXPECT_GE(s, 0.0);
            EXPECT_LE(s, 1.0);
        }
    }
    Rng r(1);
    EXPECT_THROW(init_population(3, 4, c, r), ConfigError);
}

TEST(InitPopulation, SubsetsDistinctAndSorted)
{
    GAConfig c;
    Rng r(3);
    for (const auto& ch : init_population(20, 6, c, r)) {
        EXPECT_TRUE(std::is_sorted(ch.selection.begin(), ch.selection.end()));
        EXPECT_EQ(std::set<std::size_t>(ch.selection.begin(), ch.selection.end()).size(), 6u);
    }
}

TEST(Roulette, RankWeights)
{
    EXPECT_EQ(rank_weights(std::vector<double>{5.0, -1.0}), (std::vector<double>{1.0, 2.0}));
    const auto tied = rank_weights(std::vector<double>{3.0, 3.0, 1.0});
    EXPECT_EQ(tied[0], tied[1]);
}

TEST(Roulette, SingleAlwaysSelected)
{
    std::vector<Chromosome> pop{chrom({0}, {0.5})};
    pop[0].fitness = 1.0;
    Rng rng(1);
    for (int i = 0; i < 100; ++i)
        EXPECT_EQ(roulette_select(pop, rng), 0u);
    EXPECT_THROW(roulette_select(std::span<const Chromosome>{}, rng), Error);
}

TEST(Roulette, TwoToOneFrequencies)
{
    std::vector<Chromosome> pop{chrom({0}, {0.1}), chrom({1}, {0.2})};
    pop[0].fitness = -3.0; // best
    pop[1].fitness = 7.0;
    Rng rng(2024);
    const int draws = 100000;
    int first = 0;
    for (int i = 0; i < draws; ++i)
        first += roulette_select(pop, rng) == 0 ? 1 : 0;
    EXPECT_NEAR(static_cast<double>(first) / draws, 2.0 / 3.0, 0.01);
}

TEST(Roulette, EqualFitnessUniform)
{
    std::vector<Chromosome> pop;
    for (std::size_t i = 0; i < 4; ++i) {
        pop.push_back(chrom({i}, {0.5}));
        pop.back().fitness = 1.0;
    }
    Rng rng(7);
    std::vector<int> counts(4, 0);
    for (int i = 0; i < 40000; ++i)
        ++counts[roulette_select(pop, rng)];
    for (int c : counts)
        EXPECT_NEAR(c / 40000.0, 0.25, 0.01);
}

TEST(Crossover, IdenticalParentsAreFixedPoint)
{
    auto a = chrom({1, 3, 5}, {0.2, 0.4, 0.9});
    a.fitness = 1.0;
    Rng rng(1);
    for (auto kind : {CrossoverKind::scattered, CrossoverKind::single_point, CrossoverKind::two_point}) {
        const auto child = crossover(a, a, rng, kind);
        EXPECT_EQ(child, a);
        EXPECT_FALSE(child.fitness);
    }
}

TEST(Crossover, BoundaryCutsTakeSecondParent)
{
    const auto a = chrom({0, 1, 2}, {0.1, 0.2, 0.3});
    const auto b = chrom({0, 1, 2}, {0.7, 0.8, 0.9});
    EXPECT_EQ(crossover_at(a, b, 0, 3), b);
    const auto c = crossover_at(a, b, 1, 2);
    EXPECT_EQ(c.raw, (std::vector<double>{0.1, 0.8, 0.3}));
    EXPECT_THROW(crossover_at(a, b, 2, 2), DimensionError);
    EXPECT_THROW(crossover_at(a, chrom({0, 1}, {0.1, 0.2}), 0, 1), Error);
}

TEST(Crossover, ChildKeepsCardinality)
{
    const auto a = chrom({0, 2, 4, 6}, {0.1, 0.2, 0.3, 0.4});
    const auto b = chrom({1, 2, 6, 9}, {0.5, 0.6, 0.7, 0.8});
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
        for (auto kind : {CrossoverKind::scattered, CrossoverKind::single_point, CrossoverKind::two_point}) {
            const auto c = crossover(a, b, rng, kind);
            ASSERT_EQ(c.selection.size(), 4u);
            EXPECT_TRUE(std::is_sorted(c.selection.begin(), c.selection.end()));
            EXPECT_EQ(std::set<std::size_t>(c.selection.begin(), c.selection.end()).size(), 4u);
            for (std::size_t j = 0; j < 4; ++j) {
                const std::size_t asset = c.selection[j];
                const double s = c.raw[j];
                const bool from_a = std::find(a.selection.begin(), a.selection.end(), asset) != a.selection.end() &&
                                    a.raw[static_cast<std::size_t>(
                                        std::find(a.selection.begin(), a.selection.end(), asset) -
                                        a.selection.begin())] == s;
                const bool from_b = std::find(b.selection.begin(), b.selection.end(), asset) != b.selection.end() &&
                                    b.raw[static_cast<std::size_t>(
                                        std::find(b.selection.begin(), b.selection.end(), asset) -
                                        b.selection.begin())] == s;
                EXPECT_TRUE(from_a || from_b);
            }
        }
    }
}

TEST(Crossover, SharedAssetInheritsFromEachParentHalfTheTime)
{
    const auto a = chrom({0, 1, 2, 3, 4}, {0.1, 0.1, 0.1, 0.1, 0.1});
    const auto b = chrom({0, 1, 2, 3, 4}, {0.9, 0.9, 0.9, 0.9, 0.9});
    for (auto kind : {CrossoverKind::single_point, CrossoverKind::two_point}) {
        Rng rng(77);
        int from_a = 0;
        const int trials = 10000;
        for (int i = 0; i < trials; ++i)
            from_a += crossover(a, b, rng, kind).raw[2] == 0.1 ? 1 : 0;
        EXPECT_NEAR(static_cast<double>(from_a) / trials, 0.5, 0.02) << to_string(kind);
    }
}

TEST(Crossover, ExclusiveAssetEntersHalfTheTime)
{
    const auto a = chrom({0, 1, 2}, {0.5, 0.5, 0.5});
    const auto b = chrom({0, 1, 7}, {0.5, 0.5, 0.5});
    Rng rng(13);
    int has7 = 0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) {
        const auto c = crossover(a, b, rng, CrossoverKind::single_point);
        has7 += std::count(c.selection.begin(), c.selection.end(), 7u) > 0 ? 1 : 0;
    }
    EXPECT_NEAR(static_cast<double>(has7) / trials, 0.5, 0.02);
}

TEST(Mutation, ZeroStepKeepsRaw)
{
    auto c = chrom({0, 1, 2}, {0.2, 0.5, 0.7});
    Rng rng(1);
    mutate(c, 0.0, 3, 0.0, rng);
    EXPECT_EQ(c.raw, (std::vector<double>{0.2, 0.5, 0.7}));
}

TEST(Mutation, AdaptiveStepSchedule)
{
    AdaptiveStep s(0.1, 1e-4, 0.5);
    s.update(true);
    EXPECT_EQ(s.value(), 0.2);
    s.update(false);
    s.update(false);
    EXPECT_EQ(s.value(), 0.05);
    for (int i = 0; i < 30; ++i)
        s.update(false);
    EXPECT_EQ(s.value(), 1e-4);
    for (int i = 0; i < 30; ++i)
        s.update(true);
    EXPECT_EQ(s.value(), 0.5);
}

TEST(Mutation, StaysInUnitBoxAndKeepsSubsetValid)
{
    Rng rng(31);
    auto c = chrom({1, 4, 6, 8}, {0.0, 1.0, 0.5, 0.99});
    for (int i = 0; i < 10000; ++i) {
        mutate(c, 0.5, 10, 0.3, rng);
        for (double s : c.raw) {
            ASSERT_GE(s, 0.0);
            ASSERT_LE(s, 1.0);
        }
        ASSERT_EQ(std::set<std::size_t>(c.selection.begin(), c.selection.end()).size(), 4u);
        ASSERT_TRUE(std::is_sorted(c.selection.begin(), c.selection.end()));
        ASSERT_LT(c.selection.back(), 10u);
    }
}

TEST(Evolve, InverseVarianceSolution)
{
    const auto m = diagonal_model({0.01, 0.04, 0.09}, {0.0, 0.0, 0.0});
    const auto b = Bounds::uniform(3, 0.0, 1.0, 3);
    const ObjectiveParams p{1.0, 0.0, SkewMode::weighted};
    const auto r = evolve(m, p, b, fast_config(4));
    const auto grid = oracle::simplex_grid(m.mu, m.sigma, m.skew, 1.0, 0.0, 0.005);
    EXPECT_LE(r.best.sigma_p, grid.cost * 1.02);
    const double z = 1 / 0.01 + 1 / 0.04 + 1 / 0.09;
    EXPECT_NEAR(r.best.weights(0), (1 / 0.01) / z, 0.02);
    EXPECT_NEAR(r.best.weights(1), (1 / 0.04) / z, 0.02);
    EXPECT_NEAR(r.best.weights(2), (1 / 0.09) / z, 0.02);
}

TEST(Evolve, ReturnOnlyObjectiveHitsVertex)
{
    // lambda = 0: the optimum puts 0.3 on the two best assets, 0.1 elsewhere
    // and the rest (0.2) on the third best.
    const auto m = diagonal_model({0.01, 0.01, 0.01, 0.01, 0.01}, {0.001, 0.005, 0.004, 0.002, 0.003});
    const auto b = Bounds::uniform(5, 0.1, 0.3, 5);
    const ObjectiveParams p{0.0, 0.0, SkewMode::weighted};
    const auto r = evolve(m, p, b, fast_config(9));
    const auto grid = oracle::simplex_grid(m.mu, m.sigma, m.skew, 0.0, 0.0, 0.005, 0.1, 0.3);
    EXPECT_NEAR(r.best_cost, grid.cost, 1e-6);
    EXPECT_NEAR(r.best.weights(1), 0.3, 1e-3);
    EXPECT_NEAR(r.best.weights(2), 0.3, 1e-3);
    EXPECT_NEAR(r.best.weights(4), 0.2, 1e-3);
    EXPECT_NEAR(r.best.weights(0), 0.1, 1e-3);
}

TEST(Evolve, MatchesGridOracleOnSmallInstances)
{
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 3; ++trial) {
        const int n = 3 + trial % 2;
        RiskModel m;
        for (int i = 0; i < n; ++i)
            m.assets.push_back("A" + std::to_string(i));
        m.sigma = oracle::random_spd(n, gen, 0.002);
        m.mu = Eigen::VectorXd::Random(n) * 0.01;
        m.skew = Eigen::VectorXd::Zero(n);
        const auto b = Bounds::uniform(static_cast<std::size_t>(n), 0.0, 1.0, static_cast<std::size_t>(n));
        for (double lambda : {0.0, 0.5, 1.0}) {
            const auto r = evolve(m, {lambda, 0.0, SkewMode::weighted}, b, fast_config(100 + trial));
            const auto g = oracle::simplex_grid(m.mu, m.sigma, m.skew, lambda, 0.0, 0.005);
            EXPECT_LE(r.best_cost - g.cost, std::max(0.05 * std::abs(g.cost), 1e-5))
                << "trial " << trial << " lambda " << lambda;
        }
    }
}

TEST(Evolve, BestCostNonIncreasingAndDeterministic)
{
    const auto m = diagonal_model({0.02, 0.03, 0.01, 0.05, 0.04, 0.02}, {0.01, 0.02, 0.0, 0.03, 0.01, 0.02});
    const auto b = Bounds::uniform(6, 0.1, 0.3, 4);
    const ObjectiveParams p{0.8, 0.2, SkewMode::weighted};
    auto cfg = fast_config(12);
    cfg.max_generations = 80;
    const auto r1 = evolve(m, p, b, cfg);
    for (std::size_t g = 1; g < r1.cost_history.size(); ++g)
        EXPECT_LE(r1.cost_history[g], r1.cost_history[g - 1]);
    EXPECT_EQ(r1.best.selection.size(), 4u);
    EXPECT_NEAR(r1.best.weights.sum(), 1.0, 1e-9);
    const auto r2 = evolve(m, p, b, cfg);
    EXPECT_EQ(r1.cost_history, r2.cost_history);
    EXPECT_EQ(r1.best.weights, r2.best.weights);
    cfg.threads = 3;
    const auto r3 = evolve(m, p, b, cfg);
    EXPECT_EQ(r1.cost_history, r3.cost_history);
}

TEST(Evolve, StopReasons)
{
    std::vector<double> var(60, 0.02), mu(60);
    for (std::size_t i = 0; i < mu.size(); ++i)
        mu[i] = 0.0001 * static_cast<double>(i % 17);
    const auto m = diagonal_model(var, mu);
    const auto b = Bounds::uniform(60, 0.05, 0.3, 10);
    const ObjectiveParams p{0.8, 0.2, SkewMode::weighted};

    GAConfig timed = fast_config(1);
    timed.population_size = 400;
    timed.max_generations = 1000000;
    timed.stall_generations = 1000000;
    timed.time_limit_seconds = 1.0;
    const auto r = evolve(m, p, b, timed);
    EXPECT_EQ(r.stop_reason, StopReason::time);
    EXPECT_NEAR(r.best.weights.sum(), 1.0, 1e-9);

    GAConfig capped = fast_config(1);
    capped.max_generations = 5;
    EXPECT_EQ(evolve(m, p, b, capped).stop_reason, StopReason::generation_limit);

    GAConfig stall = fast_config(1);
    stall.stall_generations = 5;
    stall.function_tolerance = 1.0;
    const auto s = evolve(m, p, b, stall);
    EXPECT_EQ(s.stop_reason, StopReason::stall);
    EXPECT_EQ(s.generations, 5u);
}

TEST(Evolve, RejectsInfeasibleSetupBeforeEvaluating)
{
    const auto m = diagonal_model({0.01, 0.02, 0.03}, {0, 0, 0});
    EXPECT_THROW(evolve(m, {}, Bounds::uniform(3, 0.4, 0.5, 3), fast_config(1)), InfeasibleBoundsError);
    EXPECT_THROW(evolve(m, {}, Bounds::uniform(3, 0.1, 0.3, 4), fast_config(1)), Error);
}

TEST(Evolve, TraceCsv)
{
    const auto m = diagonal_model({0.01, 0.02}, {0.01, 0.02});
    auto cfg = fast_config(2);
    cfg.max_generations = 3;
    const auto r = evolve(m, {}, Bounds::uniform(2, 0.0, 1.0, 2), cfg);
    const auto csv = trace_csv(r);
    EXPECT_EQ(csv.rfind("generation,best_cost,mean_cost\n0,", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(r.cost_history.size() + 1));
}
