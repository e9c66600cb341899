#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace predport {

/// (1/n) sum |R_t - R^_t|.
double mean_error(std::span<const double> real, std::span<const double> predicted);
/// (1/n) sum (R_t - R^_t); the signed companion of mean_error.
double signed_mean_error(std::span<const double> real, std::span<const double> predicted);
double rmse(std::span<const double> real, std::span<const double> predicted);

struct MapeResult {
    std::optional<double> value;
    std::size_t skipped = 0;
};

/// Mean of |R_t - R^_t| / |R_t|, skipping terms with |R_t| < floor.
MapeResult mape(std::span<const double> real, std::span<const double> predicted, double floor = 1e-12);

struct HitRates {
    std::optional<double> hr;
    std::optional<double> hr_plus;
    std::optional<double> hr_minus;
};

HitRates hit_rates(std::span<const double> real, std::span<const double> predicted);

struct MetricReport {
    double me = 0.0;
    double signed_me = 0.0;
    double rmse = 0.0;
    std::optional<double> mape;
    std::size_t mape_skipped = 0;
    std::optional<double> hr;
    std::optional<double> hr_plus;
    std::optional<double> hr_minus;
    std::size_t n = 0;
};

MetricReport evaluate(std::span<const double> real, std::span<const double> predicted, double mape_floor = 1e-12);

enum class KsThreshold {
    // Critical values for a normal whose mean and sd are estimated from the
    // sample (Stephens' modified statistic).
    lilliefors,
    // c(alpha)/sqrt(n) with c(alpha) = sqrt(-ln(alpha/2)/2); valid for a fully
    // specified null distribution.
    asymptotic,
};

struct KsResult {
    double d_statistic = 0.0;
    double threshold = 0.0;
    bool accepted = false;
    double alpha = 0.05;
    std::size_t n = 0;
};

/// Kolmogorov-Smirnov test of normality against N(mean, sd) fitted to the sample.
KsResult ks_normality_test(std::span<const double> samples, double alpha = 0.05,
                           KsThreshold threshold = KsThreshold::lilliefors);

double ks_threshold(std::size_t n, double alpha, KsThreshold kind);

/// Mean, variance and standard deviation of one metric across assets.
struct MetricSummaryRow {
    std::string metric;
    double mean = 0.0;
    double variance = 0.0;
    double std_dev = 0.0;
    std::size_t count = 0;
};

std::vector<MetricSummaryRow> summarize(std::span<const MetricReport> reports);
std::string summary_csv(std::span<const MetricSummaryRow> rows);

} // namespace predport
