#include "predport/market_data.hpp"

#include "predport/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace predport {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

std::optional<double> parse_double(std::string_view text)
{
    if (text.empty()) {
        return std::nullopt;
    }
    // std::from_chars for double is incomplete in some toolchains; strtod on
    // a bounded copy is portable.
    std::string copy(text);
    char* end = nullptr;
    const double v = std::strtod(copy.c_str(), &end);
    if (end != copy.c_str() + copy.size()) {
        return std::nullopt;
    }
    return v;
}

struct RawRow {
    std::chrono::sys_days day;
    double close;
    std::size_t line;
};

} // namespace

std::optional<Date> parse_date(std::string_view text)
{
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        return std::nullopt;
    }
    int y = 0;
    unsigned m = 0, d = 0;
    auto ok = [](std::string_view s, auto& out) {
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        return ec == std::errc{} && p == s.data() + s.size();
    };
    if (!ok(text.substr(0, 4), y) || !ok(text.substr(5, 2), m) || !ok(text.substr(8, 2), d)) {
        return std::nullopt;
    }
    const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!date.ok()) {
        return std::nullopt;
    }
    return date;
}

std::string format_date(const Date& date)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

PriceTable load_prices(std::istream& in, std::chrono::weekday sampling_weekday)
{
    std::string line;
    std::size_t line_no = 0;

    // Header is optional but, when present, fixes the column order.
    std::size_t col_date = 0, col_asset = 1, col_close = 2;
    std::optional<std::size_t> col_index;
    std::size_t min_fields = 3;

    std::vector<std::string> order;
    std::map<std::string, std::vector<RawRow>> rows;
    std::map<std::string, std::string> membership;

    bool first = true;
    bool has_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto view = trim(line);
        if (view.empty() || view.front() == '#') {
            continue;
        }
        auto fields = split_fields(view);
        if (first) {
            first = false;
            if (!parse_date(fields[0])) {
                bool have_date = false, have_asset = false, have_close = false;
                for (std::size_t i = 0; i < fields.size(); ++i) {
                    std::string name(fields[i]);
                    std::transform(name.begin(), name.end(), name.begin(),
                                   [](unsigned char c) { return std::tolower(c); });
                    if (name == "date") {
                        col_date = i;
                        have_date = true;
                    } else if (name == "asset") {
                        col_asset = i;
                        have_asset = true;
                    } else if (name == "close") {
                        col_close = i;
                        have_close = true;
                    } else if (name == "index") {
                        col_index = i;
                    }
                }
                if (!have_date || !have_asset || !have_close) {
                    throw ParseError(line_no, "header must name date, asset and close columns");
                }
                min_fields = std::max({col_date, col_asset, col_close, col_index.value_or(0)}) + 1;
                has_header = true;
                continue;
            }
        }
        if (fields.size() < min_fields) {
            throw ParseError(line_no, "expected " + std::to_string(min_fields) + " fields, got " +
                                          std::to_string(fields.size()));
        }
        const auto date = parse_date(fields[col_date]);
        if (!date) {
            throw ParseError(line_no, "invalid date '" + std::string(fields[col_date]) + "'");
        }
        const std::string asset(fields[col_asset]);
        if (asset.empty()) {
            throw ParseError(line_no, "empty asset identifier");
        }
        const auto close = parse_double(fields[col_close]);
        if (!close || !std::isfinite(*close)) {
            throw ParseError(line_no, "non-numeric close '" + std::string(fields[col_close]) + "'");
        }
        if (*close <= 0.0) {
            throw ParseError(line_no, "close must be positive");
        }
        auto [it, inserted] = rows.try_emplace(asset);
        if (inserted) {
            order.push_back(asset);
        }
        it->second.push_back({std::chrono::sys_days{*date}, *close, line_no});
        // Without a header an optional fourth column names the index.
        const auto index_col = has_header ? col_index : std::optional<std::size_t>(3);
        if (index_col && *index_col < fields.size() && !fields[*index_col].empty()) {
            membership[asset] = std::string(fields[*index_col]);
        }
    }

    PriceTable table;
    for (const auto& asset : order) {
        auto& raw = rows[asset];
        std::stable_sort(raw.begin(), raw.end(), [](const RawRow& a, const RawRow& b) { return a.day < b.day; });
        for (std::size_t i = 1; i < raw.size(); ++i) {
            if (raw[i].day == raw[i - 1].day) {
                throw ParseError(raw[i].line, "duplicate date " + format_date(Date{raw[i].day}) + " for asset " + asset);
            }
        }

        // First sampling weekday on or after the asset's first observation.
        auto day = raw.front().day;
        day += (sampling_weekday - std::chrono::weekday{day});
        const auto last = raw.back().day;

        std::vector<PricePoint> sampled;
        std::size_t cursor = 0;
        for (; day <= last; day += std::chrono::days{7}) {
            while (cursor + 1 < raw.size() && raw[cursor + 1].day <= day) {
                ++cursor;
            }
            sampled.push_back({Date{day}, asset, raw[cursor].close});
        }
        if (sampled.empty()) {
            table.excluded.push_back(asset);
            continue;
        }
        table.assets.push_back(asset);
        table.prices.emplace(asset, std::move(sampled));
        if (auto m = membership.find(asset); m != membership.end()) {
            table.index_membership.emplace(asset, m->second);
        }
    }
    return table;
}

PriceTable load_prices_file(const std::string& path, std::chrono::weekday sampling_weekday)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open price file: " + path);
    }
    return load_prices(in, sampling_weekday);
}

ReturnSeries compute_returns(std::span<const PricePoint> prices)
{
    if (prices.size() < 2) {
        throw InsufficientDataError("at least 2 prices are needed to compute returns, got " +
                                    std::to_string(prices.size()));
    }
    ReturnSeries out;
    out.asset = prices.front().asset;
    out.returns.reserve(prices.size() - 1);
    out.dates.reserve(prices.size() - 1);
    for (std::size_t t = 0; t + 1 < prices.size(); ++t) {
        if (!(prices[t].close > 0.0) || !(prices[t + 1].close > 0.0)) {
            throw InsufficientDataError("non-positive price for asset " + out.asset);
        }
        out.returns.push_back((prices[t + 1].close - prices[t].close) / prices[t].close);
        out.dates.push_back(prices[t + 1].date);
    }
    return out;
}

AlignmentResult align_universe(std::span<const ReturnSeries> series, std::size_t min_length)
{
    if (series.empty()) {
        throw AlignmentError("no series to align");
    }
    AlignmentResult result;
    std::vector<const ReturnSeries*> kept;
    std::set<std::string> seen;
    for (const auto& s : series) {
        if (s.dates.size() != s.returns.size()) {
            throw AlignmentError("series " + s.asset + " has mismatched dates and returns");
        }
        if (!seen.insert(s.asset).second) {
            throw AlignmentError("duplicate asset identifier " + s.asset);
        }
        if (s.size() < min_length || s.size() == 0) {
            result.dropped.push_back(s.asset);
        } else {
            kept.push_back(&s);
        }
    }
    if (kept.empty()) {
        throw AlignmentError("every series is shorter than the minimum length " + std::to_string(min_length));
    }

    std::vector<std::chrono::sys_days> common;
    for (const auto& d : kept.front()->dates) {
        common.emplace_back(d);
    }
    std::sort(common.begin(), common.end());
    for (std::size_t k = 1; k < kept.size(); ++k) {
        std::vector<std::chrono::sys_days> other;
        for (const auto& d : kept[k]->dates) {
            other.emplace_back(d);
        }
        std::sort(other.begin(), other.end());
        std::vector<std::chrono::sys_days> both;
        std::set_intersection(common.begin(), common.end(), other.begin(), other.end(), std::back_inserter(both));
        common = std::move(both);
    }
    if (common.size() < 2) {
        throw AlignmentError("the common date window has " + std::to_string(common.size()) +
                             " returns; at least 2 are required");
    }

    for (const auto* s : kept) {
        ReturnSeries out;
        out.asset = s->asset;
        for (std::size_t t = 0; t < s->size(); ++t) {
            if (std::binary_search(common.begin(), common.end(), std::chrono::sys_days{s->dates[t]})) {
                out.returns.push_back(s->returns[t]);
                out.dates.push_back(s->dates[t]);
            }
        }
        result.universe.assets.push_back(out.asset);
        result.universe.series.push_back(std::move(out));
    }
    return result;
}

std::string format_alignment_report(const AlignmentResult& result)
{
    std::ostringstream os;
    const auto& u = result.universe;
    os << "assets kept: " << u.size() << "\n";
    if (u.length() > 0) {
        os << "window: " << format_date(u.series.front().dates.front()) << " .. "
           << format_date(u.series.front().dates.back()) << " (" << u.length() << " returns)\n";
    }
    os << "assets dropped: " << result.dropped.size() << "\n";
    for (const auto& a : result.dropped) {
        os << "  " << a << "\n";
    }
    return os.str();
}

std::vector<double> prices_from_returns(std::span<const double> returns, double first_price)
{
    std::vector<double> prices;
    prices.reserve(returns.size() + 1);
    prices.push_back(first_price);
    for (double r : returns) {
        prices.push_back(prices.back() * (1.0 + r));
    }
    return prices;
}

} // namespace predport
