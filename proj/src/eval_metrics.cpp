#include "predport/eval_metrics.hpp"

#include "predport/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

namespace predport {

namespace {

void check_lengths(std::span<const double> real, std::span<const double> predicted)
{
    if (real.size() != predicted.size()) {
        throw MetricError("real and predicted lengths differ: " + std::to_string(real.size()) + " vs " +
                          std::to_string(predicted.size()));
    }
    if (real.empty()) {
        throw MetricError("metrics need at least one sample");
    }
}

std::optional<double> ratio(std::size_t num, std::size_t den)
{
    if (den == 0) {
        return std::nullopt;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

double normal_cdf(double z)
{
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

} // namespace

double mean_error(std::span<const double> real, std::span<const double> predicted)
{
    check_lengths(real, predicted);
    double sum = 0.0;
    for (std::size_t t = 0; t < real.size(); ++t) {
        sum += std::abs(real[t] - predicted[t]);
    }
    return sum / static_cast<double>(real.size());
}

double signed_mean_error(std::span<const double> real, std::span<const double> predicted)
{
    check_lengths(real, predicted);
    double sum = 0.0;
    for (std::size_t t = 0; t < real.size(); ++t) {
        sum += real[t] - predicted[t];
    }
    return sum / static_cast<double>(real.size());
}

double rmse(std::span<const double> real, std::span<const double> predicted)
{
    check_lengths(real, predicted);
    double sum = 0.0;
    for (std::size_t t = 0; t < real.size(); ++t) {
        const double e = real[t] - predicted[t];
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(real.size()));
}

MapeResult mape(std::span<const double> real, std::span<const double> predicted, double floor)
{
    check_lengths(real, predicted);
    MapeResult out;
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t t = 0; t < real.size(); ++t) {
        if (std::abs(real[t]) < floor) {
            ++out.skipped;
            continue;
        }
        sum += std::abs(real[t] - predicted[t]) / std::abs(real[t]);
        ++used;
    }
    if (used > 0) {
        out.value = sum / static_cast<double>(used);
    }
    return out;
}

HitRates hit_rates(std::span<const double> real, std::span<const double> predicted)
{
    check_lengths(real, predicted);
    std::size_t agree = 0, nonzero = 0, both_pos = 0, pred_pos = 0, both_neg = 0, pred_neg = 0;
    for (std::size_t t = 0; t < real.size(); ++t) {
        // Test the factors, not the product, so underflow cannot hide a sign.
        if (real[t] != 0.0 && predicted[t] != 0.0) {
            ++nonzero;
            if ((real[t] > 0.0) == (predicted[t] > 0.0)) {
                ++agree;
            }
        }
        if (predicted[t] > 0.0) {
            ++pred_pos;
            if (real[t] > 0.0) {
                ++both_pos;
            }
        } else if (predicted[t] < 0.0) {
            ++pred_neg;
            if (real[t] < 0.0) {
                ++both_neg;
            }
        }
    }
    return {ratio(agree, nonzero), ratio(both_pos, pred_pos), ratio(both_neg, pred_neg)};
}

MetricReport evaluate(std::span<const double> real, std::span<const double> predicted, double mape_floor)
{
    MetricReport r;
    r.n = real.size();
    r.me = mean_error(real, predicted);
    r.signed_me = signed_mean_error(real, predicted);
    r.rmse = rmse(real, predicted);
    const auto m = mape(real, predicted, mape_floor);
    r.mape = m.value;
    r.mape_skipped = m.skipped;
    const auto h = hit_rates(real, predicted);
    r.hr = h.hr;
    r.hr_plus = h.hr_plus;
    r.hr_minus = h.hr_minus;
    return r;
}

double ks_threshold(std::size_t n, double alpha, KsThreshold kind)
{
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw MetricError("alpha must lie in (0, 1)");
    }
    const double rn = std::sqrt(static_cast<double>(n));
    if (kind == KsThreshold::asymptotic) {
        return std::sqrt(-0.5 * std::log(alpha / 2.0)) / rn;
    }
    // Stephens (1974), normal with estimated parameters:
    // D * (sqrt(n) - 0.01 + 0.85/sqrt(n)) is compared with these points.
    static constexpr std::array<std::pair<double, double>, 5> table{{
        {0.15, 0.775},
        {0.10, 0.819},
        {0.05, 0.895},
        {0.025, 0.955},
        {0.01, 1.035},
    }};
    if (alpha > table.front().first + 1e-12 || alpha < table.back().first - 1e-12) {
        throw MetricError("lilliefors threshold is tabulated for alpha in [0.01, 0.15]");
    }
    double c = table.back().second;
    for (std::size_t k = 0; k + 1 < table.size(); ++k) {
        const auto [a_hi, c_lo] = table[k];
        const auto [a_lo, c_hi] = table[k + 1];
        if (alpha <= a_hi && alpha >= a_lo) {
            const double t = (std::log(a_hi) - std::log(alpha)) / (std::log(a_hi) - std::log(a_lo));
            c = c_lo + t * (c_hi - c_lo);
            break;
        }
    }
    return c / (rn - 0.01 + 0.85 / rn);
}

KsResult ks_normality_test(std::span<const double> samples, double alpha, KsThreshold threshold)
{
    const std::size_t n = samples.size();
    if (n < 8) {
        throw MetricError("KS test needs at least 8 samples, got " + std::to_string(n));
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw MetricError("alpha must lie in (0, 1)");
    }
    std::vector<double> x(samples.begin(), samples.end());
    std::sort(x.begin(), x.end());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : x) {
        ss += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0) || x.front() == x.back()) {
        throw DegenerateInputError("KS test sample has zero variance");
    }

    double d = 0.0;
    const auto nd = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double f = normal_cdf((x[i] - mean) / sd);
        d = std::max({d, static_cast<double>(i + 1) / nd - f, f - static_cast<double>(i) / nd});
    }

    KsResult r;
    r.d_statistic = d;
    r.alpha = alpha;
    r.n = n;
    r.threshold = ks_threshold(n, alpha, threshold);
    r.accepted = d <= r.threshold;
    return r;
}

std::vector<MetricSummaryRow> summarize(std::span<const MetricReport> reports)
{
    auto row = [&](const std::string& name, auto&& get) {
        std::vector<double> values;
        for (const auto& r : reports) {
            const std::optional<double> v = get(r);
            if (v) {
                values.push_back(*v);
            }
        }
        MetricSummaryRow out;
        out.metric = name;
        out.count = values.size();
        if (!values.empty()) {
            out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
        }
        if (values.size() > 1) {
            double ss = 0.0;
            for (double v : values) {
                ss += (v - out.mean) * (v - out.mean);
            }
            out.variance = ss / static_cast<double>(values.size() - 1);
        }
        out.std_dev = std::sqrt(out.variance);
        return out;
    };
    return {
        row("ME", [](const MetricReport& r) { return std::optional<double>(r.me); }),
        row("RMSE", [](const MetricReport& r) { return std::optional<double>(r.rmse); }),
        row("MAPE", [](const MetricReport& r) { return r.mape; }),
        row("H_R", [](const MetricReport& r) { return r.hr; }),
        row("H_R+", [](const MetricReport& r) { return r.hr_plus; }),
        row("H_R-", [](const MetricReport& r) { return r.hr_minus; }),
    };
}

std::string summary_csv(std::span<const MetricSummaryRow> rows)
{
    std::ostringstream os;
    os.precision(17);
    os << "metric,mean,variance,std_dev\n";
    for (const auto& r : rows) {
        os << r.metric << ',' << r.mean << ',' << r.variance << ',' << r.std_dev << '\n';
    }
    return os.str();
}

} // namespace predport
