#include "predport/error.hpp"
#include "predport/eval_metrics.hpp"
#include "predport/frontier.hpp"
#include "predport/ga_solver.hpp"
#include "predport/objective.hpp"
#include "predport/pipeline.hpp"
#include "predport/risk_model.hpp"
#include "predport/taguchi.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace predport;

namespace {

RiskModel make_model(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma, const Eigen::VectorXd& skew)
{
    RiskModel m;
    for (Eigen::Index i = 0; i < mu.size(); ++i)
        m.assets.push_back("A" + std::to_string(i + 1));
    m.mu = mu;
    m.sigma = sigma;
    m.skew = skew;
    m.validate();
    return m;
}

py::dict report_dict(const MetricReport& r)
{
    py::dict d;
    d["me"] = r.me;
    d["signed_me"] = r.signed_me;
    d["rmse"] = r.rmse;
    d["mape"] = r.mape;
    d["mape_skipped"] = r.mape_skipped;
    d["hr"] = r.hr;
    d["hr_plus"] = r.hr_plus;
    d["hr_minus"] = r.hr_minus;
    d["n"] = r.n;
    return d;
}

RunConfig make_config(const std::map<std::string, std::string>& values)
{
    RunConfig c;
    for (const auto& [k, v] : values)
        c.set(k, v);
    return c;
}

} // namespace

PYBIND11_MODULE(_predport, m)
{
    m.doc() = "Prediction-based portfolio optimization";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

    m.def(
        "evaluate",
        [](const std::vector<double>& real, const std::vector<double>& predicted, double mape_floor) {
            return report_dict(evaluate(real, predicted, mape_floor));
        },
        py::arg("real"), py::arg("predicted"), py::arg("mape_floor") = 1e-12);

    m.def(
        "ks_normality_test",
        [](const std::vector<double>& samples, double alpha, const std::string& threshold) {
            const auto kind = threshold == "asymptotic" ? KsThreshold::asymptotic : KsThreshold::lilliefors;
            const auto r = ks_normality_test(samples, alpha, kind);
            py::dict d;
            d["d_statistic"] = r.d_statistic;
            d["threshold"] = r.threshold;
            d["accepted"] = r.accepted;
            d["n"] = r.n;
            return d;
        },
        py::arg("samples"), py::arg("alpha") = 0.05, py::arg("threshold") = "lilliefors");

    m.def(
        "decode_weights",
        [](const std::vector<std::size_t>& selection, const std::vector<double>& raw, std::size_t assets,
           double epsilon, double delta) {
            return decode_weights(selection, raw, Bounds::uniform(assets, epsilon, delta, selection.size()));
        },
        py::arg("selection"), py::arg("raw"), py::arg("assets"), py::arg("epsilon") = 0.1, py::arg("delta") = 0.3);

    m.def(
        "mvs_cost",
        [](const Eigen::VectorXd& weights, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
           const Eigen::VectorXd& skew, double lambda, double theta) {
            const auto model = make_model(mu, sigma, skew);
            std::vector<std::size_t> selection;
            std::vector<double> held;
            for (Eigen::Index i = 0; i < weights.size(); ++i) {
                if (weights[i] != 0.0) {
                    selection.push_back(static_cast<std::size_t>(i));
                    held.push_back(weights[i]);
                }
            }
            const auto p = make_portfolio(selection, held, model);
            return mvs_cost(p, model, {lambda, theta, SkewMode::weighted});
        },
        py::arg("weights"), py::arg("mu"), py::arg("sigma"), py::arg("skew"), py::arg("lambda_") = 0.8,
        py::arg("theta") = 0.2);

    m.def(
        "optimize",
        [](const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma, const Eigen::VectorXd& skew, double lambda,
           double theta, std::size_t k, double epsilon, double delta, std::uint64_t seed, std::size_t population,
           std::size_t max_generations) {
            const auto model = make_model(mu, sigma, skew);
            GAConfig ga;
            ga.seed = seed;
            ga.population_size = population;
            ga.max_generations = max_generations;
            const auto r = [&] {
                py::gil_scoped_release release;
                return evolve(model, {lambda, theta, SkewMode::weighted},
                              Bounds::uniform(model.size(), epsilon, delta, k), ga);
            }();
            py::dict d;
            d["weights"] = r.best.weights;
            d["selection"] = r.best.selection;
            d["mu_p"] = r.best.mu_p;
            d["sigma_p"] = r.best.sigma_p;
            d["cost"] = r.best_cost;
            d["generations"] = r.generations;
            d["stop_reason"] = std::string(to_string(r.stop_reason));
            d["cost_history"] = r.cost_history;
            return d;
        },
        py::arg("mu"), py::arg("sigma"), py::arg("skew"), py::arg("lambda_") = 0.8, py::arg("theta") = 0.2,
        py::arg("k") = 5, py::arg("epsilon") = 0.1, py::arg("delta") = 0.3, py::arg("seed") = 1,
        py::arg("population") = 200, py::arg("max_generations") = 500);

    m.def(
        "frontier",
        [](const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma, const Eigen::VectorXd& skew,
           const std::vector<double>& lambdas, const std::vector<double>& thetas, std::size_t k, std::uint64_t seed,
           std::size_t repeats) {
            const auto model = make_model(mu, sigma, skew);
            SweepConfig sc;
            sc.lambdas = lambdas;
            sc.thetas = thetas;
            sc.repeats = repeats;
            GAConfig ga;
            ga.seed = seed;
            const auto r = [&] {
                py::gil_scoped_release release;
                return sweep(model, sc, Bounds::uniform(model.size(), 0.1, 0.3, k), ga);
            }();
            py::list points;
            for (const auto& p : r.points) {
                py::dict d;
                d["lambda"] = p.lambda;
                d["theta"] = p.theta;
                d["weights"] = p.portfolio.weights;
                d["mu_p"] = p.mu_p;
                d["sigma_p"] = p.sigma_p;
                d["cost"] = p.cost;
                points.append(d);
            }
            py::list efficient;
            for (const auto& p : efficient_filter(r.points))
                efficient.append(py::make_tuple(p.sigma_p, p.mu_p));
            py::dict out;
            out["points"] = points;
            out["efficient"] = efficient;
            out["failures"] = r.failures.size();
            return out;
        },
        py::arg("mu"), py::arg("sigma"), py::arg("skew"), py::arg("lambdas") = std::vector<double>{1.0, 0.8, 0.2, 0.0},
        py::arg("thetas") = std::vector<double>{0.0, 0.2, 0.8}, py::arg("k") = 5, py::arg("seed") = 1,
        py::arg("repeats") = 3);

    m.def("l27", &l27);

    m.def("config_keys", [] {
        std::vector<std::pair<std::string, std::string>> keys;
        for (const auto& k : config_keys())
            keys.emplace_back(k.name, k.default_value);
        return keys;
    });

    m.def(
        "run_stage",
        [](const std::string& stage, const std::map<std::string, std::string>& config) {
            const auto c = make_config(config);
            std::ostringstream out;
            int rc = 0;
            {
                py::gil_scoped_release release;
                rc = run_stage(stage, c, out);
            }
            return py::make_tuple(rc, out.str());
        },
        py::arg("stage"), py::arg("config") = std::map<std::string, std::string>{});
}
