#include "predport/objective.hpp"

#include "predport/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace predport {

namespace {

constexpr double sum_tolerance = 1e-12;

void check_selection(std::span<const std::size_t> selection, std::size_t assets)
{
    if (selection.empty()) {
        throw DimensionError("selection is empty");
    }
    std::vector<std::size_t> sorted(selection.begin(), selection.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.back() >= assets) {
        throw DimensionError("selection refers to asset " + std::to_string(sorted.back()) + " of " +
                             std::to_string(assets));
    }
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw DimensionError("selection contains duplicate assets");
    }
}

} // namespace

Bounds Bounds::uniform(std::size_t assets, double epsilon, double delta, std::size_t k)
{
    return {std::vector<double>(assets, epsilon), std::vector<double>(assets, delta), k};
}

void Bounds::validate(std::size_t m) const
{
    if (epsilon.size() != m || delta.size() != m) {
        throw DimensionError("bounds cover " + std::to_string(epsilon.size()) + " assets, universe has " +
                             std::to_string(m));
    }
    if (k < 1 || k > m) {
        throw ConfigError("cardinality K=" + std::to_string(k) + " must lie in [1, " + std::to_string(m) + "]");
    }
    for (std::size_t i = 0; i < m; ++i) {
        if (!(epsilon[i] >= 0.0 && epsilon[i] < 1.0)) {
            throw ConfigError("lower weight limit must lie in [0, 1)");
        }
        if (!(delta[i] > 0.0 && delta[i] <= 1.0)) {
            throw ConfigError("upper weight limit must lie in (0, 1]");
        }
        if (!(epsilon[i] < delta[i])) {
            throw ConfigError("lower weight limit must be below the upper limit");
        }
    }
}

void Bounds::check_cardinality_feasible() const
{
    validate(epsilon.size());
    std::vector<double> lo = epsilon, hi = delta;
    std::sort(lo.begin(), lo.end());
    std::sort(hi.begin(), hi.end(), std::greater<>());
    const auto kk = static_cast<std::ptrdiff_t>(k);
    const double min_lo = std::accumulate(lo.begin(), lo.begin() + kk, 0.0);
    const double max_hi = std::accumulate(hi.begin(), hi.begin() + kk, 0.0);
    if (min_lo > 1.0 + sum_tolerance) {
        throw InfeasibleBoundsError("lower limits of any " + std::to_string(k) + " assets sum to more than 1");
    }
    if (max_hi < 1.0 - sum_tolerance) {
        throw InfeasibleBoundsError("upper limits of any " + std::to_string(k) + " assets sum to less than 1");
    }
}

void ObjectiveParams::validate() const
{
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw ConfigError("lambda must lie in [0, 1]");
    }
    if (!(theta >= 0.0) || !std::isfinite(theta)) {
        throw ConfigError("theta must be a finite non-negative number");
    }
}

std::vector<double> decode_weights(std::span<const std::size_t> selection, std::span<const double> raw,
                                   const Bounds& bounds)
{
    if (raw.size() != selection.size()) {
        throw DimensionError("raw allocation has " + std::to_string(raw.size()) + " entries for " +
                             std::to_string(selection.size()) + " selected assets");
    }
    check_selection(selection, bounds.assets());
    const std::size_t k = selection.size();

    double sum_eps = 0.0, sum_delta = 0.0;
    for (std::size_t i : selection) {
        sum_eps += bounds.epsilon[i];
        sum_delta += bounds.delta[i];
    }
    if (sum_eps > 1.0 + sum_tolerance) {
        throw InfeasibleBoundsError("lower limits of the selection sum to " + std::to_string(sum_eps));
    }
    if (sum_delta < 1.0 - sum_tolerance) {
        throw InfeasibleBoundsError("upper limits of the selection sum to " + std::to_string(sum_delta));
    }

    std::vector<double> s(raw.begin(), raw.end());
    double total = std::accumulate(s.begin(), s.end(), 0.0);
    if (!(total > 0.0)) {
        std::fill(s.begin(), s.end(), 1.0);
        total = static_cast<double>(k);
    }

    const double free = 1.0 - sum_eps;
    std::vector<double> w(k);
    for (std::size_t i = 0; i < k; ++i) {
        w[i] = bounds.epsilon[selection[i]] + (s[i] / total) * free;
    }

    std::vector<bool> clipped(k, false);
    for (std::size_t pass = 0; pass < k; ++pass) {
        double excess = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double cap = bounds.delta[selection[i]];
            if (!clipped[i] && w[i] > cap) {
                excess += w[i] - cap;
                w[i] = cap;
                clipped[i] = true;
            }
        }
        if (excess == 0.0) {
            break;
        }
        double s_open = 0.0;
        std::size_t n_open = 0;
        for (std::size_t i = 0; i < k; ++i) {
            if (!clipped[i]) {
                s_open += s[i];
                ++n_open;
            }
        }
        if (n_open == 0) {
            break;
        }
        for (std::size_t i = 0; i < k; ++i) {
            if (!clipped[i]) {
                w[i] += excess * (s_open > 0.0 ? s[i] / s_open : 1.0 / static_cast<double>(n_open));
            }
        }
    }
    return w;
}

double portfolio_return(const Eigen::VectorXd& weights, const Eigen::VectorXd& mu)
{
    if (weights.size() != mu.size()) {
        throw DimensionError("weights and mu differ in length");
    }
    return weights.dot(mu);
}

double portfolio_risk(const Eigen::VectorXd& weights, const Eigen::MatrixXd& sigma)
{
    if (sigma.rows() != weights.size() || sigma.cols() != weights.size()) {
        throw DimensionError("weights and sigma differ in dimension");
    }
    return weights.dot(sigma * weights);
}

Portfolio make_portfolio(std::span<const std::size_t> selection, std::span<const double> selected_weights,
                         const RiskModel& model)
{
    if (selection.size() != selected_weights.size()) {
        throw DimensionError("selection and weights differ in length");
    }
    check_selection(selection, model.size());
    Portfolio p;
    p.selection.assign(selection.begin(), selection.end());
    p.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.size()));
    for (std::size_t i = 0; i < selection.size(); ++i) {
        p.weights(static_cast<Eigen::Index>(selection[i])) = selected_weights[i];
    }
    p.mu_p = portfolio_return(p.weights, model.mu);
    p.sigma_p = portfolio_risk(p.weights, model.sigma);
    return p;
}

double skew_term(const Portfolio& portfolio, const RiskModel& model, SkewMode mode)
{
    double s = 0.0;
    for (std::size_t i : portfolio.selection) {
        const auto ii = static_cast<Eigen::Index>(i);
        s += mode == SkewMode::weighted ? portfolio.weights(ii) * model.skew(ii) : model.skew(ii);
    }
    return s;
}

double mvs_cost(const Portfolio& portfolio, const RiskModel& model, const ObjectiveParams& params)
{
    if (portfolio.weights.size() != static_cast<Eigen::Index>(model.size())) {
        throw DimensionError("portfolio and risk model differ in asset count");
    }
    const double risk = portfolio_risk(portfolio.weights, model.sigma);
    const double ret = portfolio_return(portfolio.weights, model.mu);
    const double skew = skew_term(portfolio, model, params.skew_mode);
    return params.lambda * risk - (1.0 - params.lambda) * ret - params.theta * skew;
}

PenalizedCost penalized_cost(std::span<const std::size_t> selection, std::span<const double> raw,
                             const RiskModel& model, const ObjectiveParams& params, const Bounds& bounds,
                             double penalty_factor)
{
    if (raw.size() != selection.size()) {
        throw DimensionError("raw allocation and selection differ in length");
    }
    check_selection(selection, bounds.assets());

    PenalizedCost out;
    std::vector<double> s(raw.begin(), raw.end());
    for (double& v : s) {
        if (!std::isfinite(v)) {
            out.violation += 1.0;
            v = 0.0;
        } else if (v < 0.0) {
            out.violation += -v;
            v = 0.0;
        } else if (v > 1.0) {
            out.violation += v - 1.0;
            v = 1.0;
        }
    }

    double sum_eps = 0.0, sum_delta = 0.0;
    for (std::size_t i : selection) {
        sum_eps += bounds.epsilon[i];
        sum_delta += bounds.delta[i];
    }

    std::vector<double> w(selection.size());
    if (sum_eps > 1.0 + sum_tolerance) {
        out.violation += sum_eps - 1.0;
        for (std::size_t i = 0; i < selection.size(); ++i) {
            w[i] = bounds.epsilon[selection[i]] / sum_eps;
        }
    } else if (sum_delta < 1.0 - sum_tolerance) {
        out.violation += 1.0 - sum_delta;
        for (std::size_t i = 0; i < selection.size(); ++i) {
            w[i] = bounds.delta[selection[i]] / sum_delta;
        }
    } else {
        w = decode_weights(selection, s, bounds);
    }

    out.portfolio = make_portfolio(selection, w, model);
    out.fitness = mvs_cost(out.portfolio, model, params);
    if (out.violation > 0.0) {
        out.fitness += penalty_factor * out.violation;
    }
    return out;
}

} // namespace predport
