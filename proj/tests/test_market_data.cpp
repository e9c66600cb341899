#include "predport/error.hpp"
#include "predport/market_data.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

using namespace predport;

namespace {

PriceTable load(const std::string& text)
{
    std::istringstream in(text);
    return load_prices(in);
}

ReturnSeries weekly_series(const std::string& asset, const std::string& start, std::size_t n, double value = 0.01)
{
    ReturnSeries s;
    s.asset = asset;
    auto d = std::chrono::sys_days{*parse_date(start)};
    for (std::size_t i = 0; i < n; ++i) {
        s.returns.push_back(value * static_cast<double>(i % 7) - 0.02);
        s.dates.emplace_back(d + std::chrono::days{7 * static_cast<long>(i)});
    }
    return s;
}

} // namespace

TEST(Dates, ParseAndFormat)
{
    auto d = parse_date("2014-02-28");
    ASSERT_TRUE(d);
    EXPECT_EQ(format_date(*d), "2014-02-28");
    EXPECT_FALSE(parse_date("2014-02-30"));
    EXPECT_FALSE(parse_date("2014/02/01"));
    EXPECT_FALSE(parse_date(""));
}

TEST(LoadPrices, MondayClosesPassThrough)
{
    const auto t = load("date,asset,close\n2015-01-05,X,100\n2015-01-12,X,110\n2015-01-19,X,99\n");
    ASSERT_EQ(t.assets, std::vector<std::string>{"X"});
    const auto& p = t.prices.at("X");
    ASSERT_EQ(p.size(), 3u);
    EXPECT_DOUBLE_EQ(p[0].close, 100);
    EXPECT_DOUBLE_EQ(p[1].close, 110);
    EXPECT_DOUBLE_EQ(p[2].close, 99);
    EXPECT_TRUE(p[0].date < p[1].date && p[1].date < p[2].date);
}

TEST(LoadPrices, MissingMondayCarriesPriorClose)
{
    // 2015-01-12 is absent; the Friday before closed at 105.
    const auto t = load("date,asset,close\n2015-01-05,X,100\n2015-01-09,X,105\n2015-01-19,X,99\n");
    const auto& p = t.prices.at("X");
    ASSERT_EQ(p.size(), 3u);
    EXPECT_EQ(format_date(p[1].date), "2015-01-12");
    EXPECT_DOUBLE_EQ(p[1].close, 105);
}

TEST(LoadPrices, HeaderIsOptionalAndIndexColumnRead)
{
    const auto t = load("2015-01-05,X,100,Banking\n2015-01-12,X,101,Banking\n");
    EXPECT_EQ(t.prices.at("X").size(), 2u);
    EXPECT_EQ(t.index_membership.at("X"), "Banking");
}

TEST(LoadPrices, NonNumericCloseNamesLine)
{
    try {
        load("date,asset,close\n2015-01-05,X,100\n2015-01-12,X,abc\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_NE(std::string(e.what()).find("3"), std::string::npos);
    }
}

TEST(LoadPrices, RejectsBadRows)
{
    EXPECT_THROW(load("2015-01-05,X\n"), ParseError);
    EXPECT_THROW(load("2015-13-05,X,1\n"), ParseError);
    EXPECT_THROW(load("2015-01-05,X,-1\n"), ParseError);
    EXPECT_THROW(load("2015-01-05,X,1\n2015-01-05,X,2\n"), ParseError);
}

TEST(LoadPrices, AssetWithoutSampledDayIsExcluded)
{
    // Y trades only on a Wednesday, so no Monday falls inside its span.
    const auto t = load("2015-01-05,X,100\n2015-01-12,X,101\n2015-01-07,Y,50\n");
    EXPECT_EQ(t.assets, std::vector<std::string>{"X"});
    EXPECT_EQ(t.excluded, std::vector<std::string>{"Y"});
}

TEST(LoadPrices, ForwardFillNeverFabricates)
{
    std::mt19937 rng(3);
    std::ostringstream os;
    std::set<double> observed;
    auto d = std::chrono::sys_days{*parse_date("2015-01-05")};
    for (int i = 0; i < 200; ++i) {
        if (rng() % 3 == 0)
            continue;
        const double close = 10.0 + static_cast<double>(rng() % 1000) / 10.0;
        observed.insert(close);
        os << format_date(std::chrono::year_month_day{d + std::chrono::days{i}}) << ",X," << close << '\n';
    }
    const auto t = load(os.str());
    for (const auto& p : t.prices.at("X"))
        EXPECT_TRUE(observed.count(p.close)) << p.close;
}

TEST(ComputeReturns, HandValues)
{
    auto series = [](std::vector<double> closes) {
        std::vector<PricePoint> pts;
        auto d = std::chrono::sys_days{*parse_date("2015-01-05")};
        for (std::size_t i = 0; i < closes.size(); ++i)
            pts.push_back({std::chrono::year_month_day{d + std::chrono::days{7 * static_cast<long>(i)}}, "X",
                           closes[i]});
        return compute_returns(pts);
    };
    EXPECT_EQ(series({100, 110}).returns, std::vector<double>{0.10});
    EXPECT_EQ(series({100, 100, 100}).returns, (std::vector<double>{0, 0}));
    const auto r = series({100, 90, 99});
    EXPECT_NEAR(r.returns[0], -0.10, 1e-15);
    EXPECT_NEAR(r.returns[1], 0.10, 1e-15);
    EXPECT_EQ(format_date(r.start_date()), "2015-01-12");
    EXPECT_THROW(series({100}), InsufficientDataError);
}

TEST(ComputeReturns, RoundTripThroughPrices)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    std::vector<double> r(300);
    for (auto& v : r)
        v = u(rng);
    const auto prices = prices_from_returns(r, 37.5);
    std::vector<PricePoint> pts;
    auto d = std::chrono::sys_days{*parse_date("2015-01-05")};
    for (std::size_t i = 0; i < prices.size(); ++i)
        pts.push_back({std::chrono::year_month_day{d + std::chrono::days{7 * static_cast<long>(i)}}, "X", prices[i]});
    const auto back = compute_returns(pts);
    ASSERT_EQ(back.size(), r.size());
    for (std::size_t i = 0; i < r.size(); ++i)
        EXPECT_NEAR(back.returns[i], r[i], 1e-12 * std::max(1.0, std::abs(r[i])));
}

TEST(Align, IdenticalDatesUntouched)
{
    const std::vector<ReturnSeries> s{weekly_series("A", "2015-01-12", 30), weekly_series("B", "2015-01-12", 30)};
    const auto r = align_universe(s);
    EXPECT_EQ(r.universe.size(), 2u);
    EXPECT_EQ(r.universe.length(), 30u);
    EXPECT_TRUE(r.dropped.empty());
    EXPECT_EQ(r.universe.series[1].returns, s[1].returns);
}

TEST(Align, ShortSeriesDroppedAndReported)
{
    const std::vector<ReturnSeries> s{weekly_series("A", "2012-01-02", 221), weekly_series("B", "2014-01-06", 100)};
    const auto r = align_universe(s, 180);
    EXPECT_EQ(r.universe.assets, std::vector<std::string>{"A"});
    EXPECT_EQ(r.dropped, std::vector<std::string>{"B"});
    EXPECT_NE(format_alignment_report(r).find("B"), std::string::npos);
}

TEST(Align, IntersectsDateGrids)
{
    const std::vector<ReturnSeries> s{weekly_series("A", "2015-01-05", 20), weekly_series("B", "2015-02-02", 20)};
    const auto r = align_universe(s);
    EXPECT_EQ(r.universe.length(), 16u);
    EXPECT_EQ(format_date(r.universe.series[0].dates.front()), "2015-02-02");
    EXPECT_EQ(r.universe.series[0].dates, r.universe.series[1].dates);
}

TEST(Align, Errors)
{
    const std::vector<ReturnSeries> s{weekly_series("A", "2015-01-05", 20), weekly_series("B", "2015-01-05", 20)};
    EXPECT_THROW(align_universe(s, 50), AlignmentError);
    const std::vector<ReturnSeries> disjoint{weekly_series("A", "2015-01-05", 5),
                                             weekly_series("B", "2016-01-04", 5)};
    EXPECT_THROW(align_universe(disjoint), AlignmentError);
    const std::vector<ReturnSeries> dup{weekly_series("A", "2015-01-05", 5), weekly_series("A", "2015-01-05", 5)};
    EXPECT_THROW(align_universe(dup), AlignmentError);
}

TEST(Align, PermutationInvariantUpToOrder)
{
    const std::vector<ReturnSeries> s{weekly_series("A", "2015-01-05", 20, 0.01),
                                      weekly_series("B", "2015-01-19", 30, 0.02),
                                      weekly_series("C", "2014-12-29", 25, 0.03)};
    const std::vector<ReturnSeries> p{s[2], s[0], s[1]};
    const auto a = align_universe(s).universe;
    const auto b = align_universe(p).universe;
    ASSERT_EQ(a.length(), b.length());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto it = std::find(b.assets.begin(), b.assets.end(), a.assets[i]);
        ASSERT_NE(it, b.assets.end());
        EXPECT_EQ(a.series[i].returns, b.series[static_cast<std::size_t>(it - b.assets.begin())].returns);
    }
}
