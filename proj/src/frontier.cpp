#include "predport/frontier.hpp"

#include "predport/error.hpp"
#include "predport/parallel.hpp"
#include "predport/random.hpp"

#include <algorithm>
#include <optional>
#include <sstream>

namespace predport {

SweepResult sweep(const RiskModel& model, const SweepConfig& config, const Bounds& bounds, const GAConfig& ga)
{
    if (config.lambdas.empty() || config.thetas.empty()) {
        throw ConfigError("lambda and theta grids must be nonempty");
    }
    if (config.repeats < 1) {
        throw ConfigError("repeats must be >= 1");
    }
    model.validate();
    bounds.validate(model.size());
    bounds.check_cardinality_feasible();

    const std::size_t n = config.lambdas.size() * config.thetas.size();
    std::vector<std::optional<FrontierPoint>> slots(n);
    std::vector<std::string> errors(n);
    parallel_for(
        n,
        [&](std::size_t p) {
            const double lambda = config.lambdas[p / config.thetas.size()];
            const double theta = config.thetas[p % config.thetas.size()];
            try {
                const ObjectiveParams params{lambda, theta, config.skew_mode};
                std::optional<GAResult> best;
                double lo = 0.0, hi = 0.0;
                for (std::size_t r = 0; r < config.repeats; ++r) {
                    GAConfig cfg = ga;
                    cfg.seed = derive_seed(ga.seed, p * config.repeats + r);
                    auto result = evolve(model, params, bounds, cfg);
                    if (!best) {
                        lo = hi = result.best_cost;
                    } else {
                        lo = std::min(lo, result.best_cost);
                        hi = std::max(hi, result.best_cost);
                    }
                    if (!best || result.best_cost < best->best_cost) {
                        best = std::move(result);
                    }
                }
                FrontierPoint point;
                point.lambda = lambda;
                point.theta = theta;
                point.portfolio = best->best;
                point.mu_p = best->best.mu_p;
                point.sigma_p = best->best.sigma_p;
                point.cost = best->best_cost;
                point.cost_spread = hi - lo;
                point.seed = best->config.seed;
                point.stop_reason = best->stop_reason;
                point.generations = best->generations;
                slots[p] = std::move(point);
            } catch (const std::exception& e) {
                errors[p] = e.what();
            }
        },
        config.threads);

    SweepResult out;
    for (std::size_t p = 0; p < n; ++p) {
        if (slots[p]) {
            out.points.push_back(std::move(*slots[p]));
        } else {
            out.failures.push_back({config.lambdas[p / config.thetas.size()], config.thetas[p % config.thetas.size()],
                                    errors[p]});
        }
    }
    return out;
}

std::vector<FrontierPoint> efficient_filter(std::span<const FrontierPoint> points)
{
    std::vector<const FrontierPoint*> pool;
    for (const auto& p : points) {
        if (p.theta == 0.0) {
            pool.push_back(&p);
        }
    }
    std::vector<FrontierPoint> out;
    for (const auto* p : pool) {
        const bool dominated = std::any_of(pool.begin(), pool.end(), [&](const FrontierPoint* q) {
            return q->sigma_p <= p->sigma_p && q->mu_p >= p->mu_p && (q->sigma_p < p->sigma_p || q->mu_p > p->mu_p);
        });
        if (!dominated) {
            out.push_back(*p);
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const FrontierPoint& a, const FrontierPoint& b) {
        if (a.sigma_p != b.sigma_p) {
            return a.sigma_p < b.sigma_p;
        }
        return a.mu_p > b.mu_p;
    });
    return out;
}

std::string frontier_csv(std::span<const FrontierPoint> points, const std::vector<std::string>& assets)
{
    std::ostringstream os;
    os.precision(17);
    os << "lambda,theta";
    for (const auto& a : assets) {
        os << ',' << a;
    }
    os << ",mu_p,sigma_p,cost,stop_reason,seed\n";
    for (const auto& p : points) {
        os << p.lambda << ',' << p.theta;
        for (Eigen::Index i = 0; i < p.portfolio.weights.size(); ++i) {
            os << ',' << p.portfolio.weights(i);
        }
        os << ',' << p.mu_p << ',' << p.sigma_p << ',' << p.cost << ',' << to_string(p.stop_reason) << ',' << p.seed
           << '\n';
    }
    return os.str();
}

std::string curve_csv(std::span<const FrontierPoint> points)
{
    std::ostringstream os;
    os.precision(17);
    os << "sigma_p,mu_p\n";
    for (const auto& p : points) {
        os << p.sigma_p << ',' << p.mu_p << '\n';
    }
    return os.str();
}

} // namespace predport
