#pragma once

#include <chrono>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace predport {

using Date = std::chrono::year_month_day;

/// Parses YYYY-MM-DD. Returns nullopt on malformed or invalid dates.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(const Date& date);

struct PricePoint {
    Date date;
    std::string asset;
    double close = 0.0;
};

/// Weekly sampled prices for every asset that had at least one sampled week,
/// keyed in order of first appearance in the file.
struct PriceTable {
    std::vector<std::string> assets;
    std::map<std::string, std::vector<PricePoint>> prices;
    std::map<std::string, std::string> index_membership;
    std::vector<std::string> excluded;
};

/// Reads a `date,asset,close[,index]` file and samples one close per asset per
/// week on `sampling_weekday`. When an asset has no observation on a sampled
/// day the most recent earlier close is carried forward. Sampled days run from
/// an asset's first observation to its last one.
PriceTable load_prices(std::istream& in, std::chrono::weekday sampling_weekday = std::chrono::Monday);
PriceTable load_prices_file(const std::string& path, std::chrono::weekday sampling_weekday = std::chrono::Monday);

struct ReturnSeries {
    std::string asset;
    std::vector<double> returns;
    // Date of the later price of each return; dates.size() == returns.size().
    std::vector<Date> dates;

    std::size_t size() const noexcept { return returns.size(); }
    Date start_date() const { return dates.front(); }
};

/// Simple returns (P[t+1] - P[t]) / P[t].
ReturnSeries compute_returns(std::span<const PricePoint> prices);

struct AssetUniverse {
    std::vector<std::string> assets;
    std::vector<ReturnSeries> series;
    std::map<std::string, std::string> index_membership;

    std::size_t size() const noexcept { return assets.size(); }
    std::size_t length() const noexcept { return series.empty() ? 0 : series.front().size(); }
};

struct AlignmentResult {
    AssetUniverse universe;
    std::vector<std::string> dropped;
};

/// Drops series shorter than `min_length` (0 keeps everything) and restricts
/// the rest to the dates they all share.
AlignmentResult align_universe(std::span<const ReturnSeries> series, std::size_t min_length = 0);

std::string format_alignment_report(const AlignmentResult& result);

/// Rebuilds a price path from returns and a starting price.
std::vector<double> prices_from_returns(std::span<const double> returns, double first_price);

} // namespace predport
