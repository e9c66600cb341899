#include "predport/error.hpp"
#include "predport/taguchi.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

using namespace predport;

namespace {

// Deterministic noise-free evaluator: one unit of cost for each factor not
// at its planted level.
RunEvaluator planted(std::vector<int> optimum)
{
    return [optimum](const std::vector<int>& levels, std::uint64_t) {
        double c = 0.0;
        for (std::size_t f = 0; f < levels.size(); ++f)
            c += levels[f] != optimum[f] ? 1.0 : 0.0;
        return c;
    };
}

} // namespace

TEST(L27, BalanceAndOrthogonalityOfAllColumns)
{
    const auto a = l27();
    ASSERT_EQ(a.size(), 27u);
    for (const auto& row : a)
        ASSERT_EQ(row.size(), 13u);
    for (std::size_t c = 0; c < 13; ++c) {
        std::array<int, 3> counts{};
        for (const auto& row : a)
            ++counts[static_cast<std::size_t>(row[c])];
        EXPECT_EQ(counts, (std::array<int, 3>{9, 9, 9})) << "column " << c;
        for (std::size_t d = c + 1; d < 13; ++d) {
            std::map<std::pair<int, int>, int> pairs;
            for (const auto& row : a)
                ++pairs[{row[c], row[d]}];
            ASSERT_EQ(pairs.size(), 9u);
            for (const auto& [k, n] : pairs)
                EXPECT_EQ(n, 3) << c << "," << d;
        }
    }
}

TEST(BuildArray, FirstFiveColumns)
{
    const auto grid = FactorGrid::ga_default();
    const auto a = build_array(grid);
    const auto full = l27();
    ASSERT_EQ(a.size(), 27u);
    for (std::size_t r = 0; r < 27; ++r)
        EXPECT_EQ(a[r], std::vector<int>(full[r].begin(), full[r].begin() + 5));
    FactorGrid four = grid;
    four.factors.pop_back();
    EXPECT_THROW(build_array(four), ConfigError);
}

TEST(Grid, DefaultLevels)
{
    const auto g = FactorGrid::ga_default();
    ASSERT_EQ(g.factors.size(), 5u);
    const auto c = apply_levels(GAConfig{}, g, {2, 1, 2, 1, 0});
    EXPECT_EQ(c.population_size, 200u);
    EXPECT_EQ(c.selection_kind, SelectionKind::roulette);
    EXPECT_EQ(c.crossover_fraction, 0.8);
    EXPECT_EQ(c.crossover_kind, CrossoverKind::single_point);
    EXPECT_EQ(c.penalty_factor, 10.0);
    EXPECT_THROW(apply_levels(GAConfig{}, g, {3, 0, 0, 0, 0}), ConfigError);
}

TEST(Analyze, RecoversPlantedOptimum)
{
    const auto a = build_array(FactorGrid::ga_default());
    for (const auto& opt : std::vector<std::vector<int>>{{2, 1, 2, 1, 0}, {0, 0, 0, 0, 0}, {1, 2, 0, 2, 1}}) {
        const auto runs = run_experiments(a, 2, 1, planted(opt));
        EXPECT_EQ(runs.size(), 27u);
        const auto r = analyze_means(runs);
        EXPECT_EQ(r.best_levels, opt);
        EXPECT_TRUE(std::none_of(r.tie.begin(), r.tie.end(), [](bool t) { return t; }));
    }
}

TEST(Analyze, QuadraticStubMatchesAnalyticMeans)
{
    // cost = sum_f (level_f - 1)^2 * (f + 1). By balance, the mean at level l
    // of factor f is (l - 1)^2 (f + 1) + sum_{g != f} (g + 1) * 2/3.
    auto stub = [](const std::vector<int>& levels, std::uint64_t) {
        double c = 0.0;
        for (std::size_t f = 0; f < levels.size(); ++f)
            c += (levels[f] - 1.0) * (levels[f] - 1.0) * static_cast<double>(f + 1);
        return c;
    };
    const auto r = analyze_means(run_experiments(build_array(FactorGrid::ga_default()), 1, 1, stub));
    for (std::size_t f = 0; f < 5; ++f) {
        double others = 0.0;
        for (std::size_t g = 0; g < 5; ++g)
            if (g != f)
                others += static_cast<double>(g + 1) * 2.0 / 3.0;
        for (int l = 0; l < 3; ++l)
            EXPECT_NEAR(r.response_table[f][static_cast<std::size_t>(l)],
                        (l - 1.0) * (l - 1.0) * static_cast<double>(f + 1) + others, 1e-12);
        EXPECT_EQ(r.best_levels[f], 1);
    }
}

TEST(Analyze, ConstantResponseTiesToLowestLevel)
{
    auto flat = [](const std::vector<int>&, std::uint64_t) { return 4.2; };
    const auto r = analyze_means(run_experiments(build_array(FactorGrid::ga_default()), 1, 1, flat));
    EXPECT_EQ(r.best_levels, std::vector<int>(5, 0));
    EXPECT_TRUE(std::all_of(r.tie.begin(), r.tie.end(), [](bool t) { return t; }));
}

TEST(Analyze, InvariantToRowOrderAndConstantShift)
{
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0, 1);
    auto noisy = [&](const std::vector<int>& levels, std::uint64_t) { return levels[0] * 0.3 + levels[3] * 0.1 + u(gen); };
    auto runs = run_experiments(build_array(FactorGrid::ga_default()), 3, 1, noisy);
    const auto base = analyze_means(runs);
    std::reverse(runs.begin(), runs.end());
    EXPECT_EQ(analyze_means(runs).best_levels, base.best_levels);
    for (auto& run : runs)
        for (auto& c : run.costs)
            c += 1000.0;
    EXPECT_EQ(analyze_means(runs).best_levels, base.best_levels);
}

TEST(Analyze, IncompleteTableRejected)
{
    auto runs = run_experiments(build_array(FactorGrid::ga_default()), 2, 1, planted({0, 0, 0, 0, 0}));
    runs.pop_back();
    EXPECT_ANY_THROW(analyze_means(runs));
    runs = run_experiments(build_array(FactorGrid::ga_default()), 2, 1, planted({0, 0, 0, 0, 0}));
    runs[4].costs.pop_back();
    EXPECT_ANY_THROW(analyze_means(runs));
}

TEST(Analyze, SignalToNoiseNeedsPositiveCosts)
{
    auto runs = run_experiments(build_array(FactorGrid::ga_default()), 1, 1, planted({1, 1, 1, 1, 1}));
    for (auto& run : runs)
        run.costs[0] += 1.0;
    const auto r = analyze_means(runs, 5, TuneResponse::sn_smaller_better);
    EXPECT_EQ(r.best_levels, std::vector<int>(5, 1));
    runs[0].costs[0] = -1.0;
    EXPECT_ANY_THROW(analyze_means(runs, 5, TuneResponse::sn_smaller_better));
}

TEST(RunExperiments, SeedsAreDerivedPerRunAndReplicate)
{
    std::vector<std::uint64_t> seen;
    auto record = [&](const std::vector<int>&, std::uint64_t seed) {
        seen.push_back(seed);
        return 0.0;
    };
    run_experiments(build_array(FactorGrid::ga_default()), 3, 42, record);
    ASSERT_EQ(seen.size(), 81u);
    EXPECT_EQ(seen[4], derive_seed(42, 4));
    std::sort(seen.begin(), seen.end());
    EXPECT_EQ(std::unique(seen.begin(), seen.end()), seen.end());
}

TEST(RunExperiments, GaRunsAreDeterministic)
{
    RiskModel m;
    m.assets = {"A", "B", "C", "D"};
    m.mu = Eigen::Vector4d(0.01, 0.02, 0.015, 0.005);
    m.sigma = Eigen::Vector4d(0.02, 0.03, 0.01, 0.02).asDiagonal();
    m.skew = Eigen::Vector4d(0.1, -0.2, 0.0, 0.3);
    GAConfig base;
    base.max_generations = 10;
    const auto grid = FactorGrid::ga_default();
    const auto a = build_array(grid);
    const auto b = Bounds::uniform(4, 0.1, 0.4, 3);
    const auto r1 = run_experiments(a, grid, m, {0.8, 0.2, SkewMode::weighted}, b, base, 1, 7);
    const auto r2 = run_experiments(a, grid, m, {0.8, 0.2, SkewMode::weighted}, b, base, 1, 7);
    ASSERT_EQ(r1.size(), 27u);
    for (std::size_t i = 0; i < r1.size(); ++i)
        EXPECT_EQ(r1[i].costs, r2[i].costs);
    const auto t = analyze_means(r1);
    EXPECT_NE(runs_csv(t, grid).find("population_size"), std::string::npos);
    const auto csv = response_csv(t, grid);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 16);
}
