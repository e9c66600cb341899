#include "predport/io.hpp"

#include "predport/error.hpp"

#include <fstream>
#include <sstream>

namespace predport {

namespace {

json optional_json(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

std::vector<double> to_vector(const Eigen::VectorXd& v)
{
    return {v.data(), v.data() + v.size()};
}

Eigen::VectorXd to_eigen(const std::vector<double>& v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace

json to_json(const TrainedPredictor& p)
{
    return {
        {"format", "predport.predictor"},
        {"version", predictor_format_version},
        {"asset", p.asset},
        {"layout", {{"inputs", p.shape.inputs}, {"hidden", p.shape.hidden},
                    {"blocks", json::array({
                                   {{"name", "input_weights"}, {"shape", {p.shape.hidden, p.shape.inputs}}},
                                   {{"name", "hidden_bias"}, {"shape", {p.shape.hidden}}},
                                   {{"name", "output_weights"}, {"shape", {p.shape.hidden}}},
                                   {{"name", "output_bias"}, {"shape", {1}}},
                               })}}},
        {"params", to_vector(p.params)},
        {"split", {{"train", p.split.train}, {"validation", p.split.validation}, {"test", p.split.test}}},
        {"best_val_loss", p.best_val_loss},
        {"epochs_run", p.epochs_run},
        {"train_loss_history", p.train_loss_history},
        {"val_loss_history", p.val_loss_history},
    };
}

TrainedPredictor predictor_from_json(const json& j)
{
    try {
        if (j.at("format") != "predport.predictor") {
            throw Error("not a predictor dump");
        }
        if (j.at("version").get<int>() != predictor_format_version) {
            throw Error("unsupported predictor dump version " + j.at("version").dump());
        }
        TrainedPredictor p;
        p.asset = j.at("asset").get<std::string>();
        p.shape.inputs = j.at("layout").at("inputs").get<int>();
        p.shape.hidden = j.at("layout").at("hidden").get<int>();
        p.params = to_eigen(j.at("params").get<std::vector<double>>());
        if (p.params.size() != p.shape.parameter_count()) {
            throw DimensionError("predictor dump has " + std::to_string(p.params.size()) + " parameters, layout needs " +
                                 std::to_string(p.shape.parameter_count()));
        }
        p.split.train = j.at("split").at("train").get<double>();
        p.split.validation = j.at("split").at("validation").get<double>();
        p.split.test = j.at("split").at("test").get<double>();
        p.best_val_loss = j.at("best_val_loss").get<double>();
        p.epochs_run = j.at("epochs_run").get<int>();
        p.train_loss_history = j.value("train_loss_history", std::vector<double>{});
        p.val_loss_history = j.value("val_loss_history", std::vector<double>{});
        return p;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed predictor dump: ") + e.what());
    }
}

json to_json(const RiskModel& m)
{
    json sigma = json::array();
    for (Eigen::Index i = 0; i < m.sigma.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(m.sigma.cols()));
        for (Eigen::Index j = 0; j < m.sigma.cols(); ++j) {
            row[static_cast<std::size_t>(j)] = m.sigma(i, j);
        }
        sigma.push_back(row);
    }
    return {
        {"format", "predport.risk_model"},
        {"version", 1},
        {"assets", m.assets},
        {"mu", to_vector(m.mu)},
        {"sigma", sigma},
        {"skew", to_vector(m.skew)},
        {"window", m.estimation_window},
        {"diagonal_shift", m.diagonal_shift},
    };
}

RiskModel risk_model_from_json(const json& j)
{
    try {
        RiskModel m;
        m.assets = j.at("assets").get<std::vector<std::string>>();
        m.mu = to_eigen(j.at("mu").get<std::vector<double>>());
        m.skew = to_eigen(j.at("skew").get<std::vector<double>>());
        const auto rows = j.at("sigma").get<std::vector<std::vector<double>>>();
        const auto n = static_cast<Eigen::Index>(rows.size());
        m.sigma.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != n) {
                throw DimensionError("sigma must be square");
            }
            for (Eigen::Index k = 0; k < n; ++k) {
                m.sigma(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
            }
        }
        m.estimation_window = j.value("window", std::size_t{0});
        m.diagonal_shift = j.value("diagonal_shift", 0.0);
        m.validate();
        return m;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed risk model: ") + e.what());
    }
}

json to_json(const MetricReport& r)
{
    return {
        {"me", r.me},
        {"signed_me", r.signed_me},
        {"rmse", r.rmse},
        {"mape", optional_json(r.mape)},
        {"mape_skipped", r.mape_skipped},
        {"hr", optional_json(r.hr)},
        {"hr_plus", optional_json(r.hr_plus)},
        {"hr_minus", optional_json(r.hr_minus)},
        {"n", r.n},
    };
}

json to_json(const KsResult& r)
{
    return {
        {"d_statistic", r.d_statistic},
        {"threshold", r.threshold},
        {"accepted", r.accepted},
        {"alpha", r.alpha},
        {"n", r.n},
    };
}

json to_json(const GAConfig& c)
{
    return {
        {"population_size", c.population_size},
        {"crossover_fraction", c.crossover_fraction},
        {"crossover_kind", to_string(c.crossover_kind)},
        {"selection_kind", to_string(c.selection_kind)},
        {"tournament_size", c.tournament_size},
        {"penalty_factor", c.penalty_factor},
        {"stall_generations", c.stall_generations},
        {"function_tolerance", c.function_tolerance},
        {"time_limit_seconds", c.time_limit_seconds},
        {"max_generations", c.max_generations},
        {"mutation_swap_rate", c.mutation_swap_rate},
        {"initial_step", c.initial_step},
        {"min_step", c.min_step},
        {"max_step", c.max_step},
        {"seed", c.seed},
    };
}

GAConfig ga_config_from_json(const json& j)
{
    GAConfig c;
    c.population_size = j.value("population_size", c.population_size);
    c.crossover_fraction = j.value("crossover_fraction", c.crossover_fraction);
    c.crossover_kind = parse_crossover_kind(j.value("crossover_kind", std::string(to_string(c.crossover_kind))));
    c.selection_kind = parse_selection_kind(j.value("selection_kind", std::string(to_string(c.selection_kind))));
    c.tournament_size = j.value("tournament_size", c.tournament_size);
    c.penalty_factor = j.value("penalty_factor", c.penalty_factor);
    c.stall_generations = j.value("stall_generations", c.stall_generations);
    c.function_tolerance = j.value("function_tolerance", c.function_tolerance);
    c.time_limit_seconds = j.value("time_limit_seconds", c.time_limit_seconds);
    c.max_generations = j.value("max_generations", c.max_generations);
    c.mutation_swap_rate = j.value("mutation_swap_rate", c.mutation_swap_rate);
    c.initial_step = j.value("initial_step", c.initial_step);
    c.min_step = j.value("min_step", c.min_step);
    c.max_step = j.value("max_step", c.max_step);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

json portfolio_json(const Portfolio& p, const RiskModel& model, const ObjectiveParams& params, double cost)
{
    json weights = json::object();
    for (std::size_t i = 0; i < model.assets.size(); ++i) {
        weights[model.assets[i]] = p.weights(static_cast<Eigen::Index>(i));
    }
    std::vector<std::string> held;
    for (std::size_t i : p.selection) {
        held.push_back(model.assets[i]);
    }
    return {
        {"assets", model.assets},
        {"selection", held},
        {"weights", weights},
        {"mu_p", p.mu_p},
        {"sigma_p", p.sigma_p},
        {"sigma_p_scale", "variance"},
        {"lambda", params.lambda},
        {"theta", params.theta},
        {"skew_mode", to_string(params.skew_mode)},
        {"cost", cost},
    };
}

json to_json(const GAResult& r, const RiskModel& model)
{
    return {
        {"portfolio", portfolio_json(r.best, model, r.params, r.best_cost)},
        {"best_cost", r.best_cost},
        {"generations", r.generations},
        {"evaluations", r.evaluations},
        {"stop_reason", to_string(r.stop_reason)},
        {"seed", r.config.seed},
        {"config", to_json(r.config)},
        {"cost_history", r.cost_history},
        {"mean_cost_history", r.mean_cost_history},
    };
}

json to_json(const TuneResult& r, const FactorGrid& grid)
{
    json factors = json::array();
    for (std::size_t f = 0; f < r.best_levels.size(); ++f) {
        const auto& factor = grid.factors[f];
        factors.push_back({
            {"name", factor.name},
            {"levels", factor.levels},
            {"response", r.response_table[f]},
            {"best_level", r.best_levels[f]},
            {"best_value", factor.levels[static_cast<std::size_t>(r.best_levels[f])]},
            {"tie", static_cast<bool>(r.tie[f])},
        });
    }
    json runs = json::array();
    for (const auto& run : r.runs) {
        runs.push_back({{"levels", run.levels}, {"costs", run.costs}});
    }
    return {
        {"response", r.response == TuneResponse::mean_cost ? "mean_cost" : "sn_smaller_better"},
        // zero-based level index per factor
        {"best_levels", r.best_levels},
        {"factors", factors},
        {"runs", runs},
    };
}

json to_json(const SweepResult& r, const RiskModel& model, const SweepConfig& config, const GAConfig& ga)
{
    json points = json::array();
    for (const auto& p : r.points) {
        json entry = portfolio_json(p.portfolio, model, {p.lambda, p.theta, config.skew_mode}, p.cost);
        entry["cost_spread"] = p.cost_spread;
        entry["seed"] = p.seed;
        entry["stop_reason"] = to_string(p.stop_reason);
        entry["generations"] = p.generations;
        points.push_back(entry);
    }
    json failures = json::array();
    for (const auto& f : r.failures) {
        failures.push_back({{"lambda", f.lambda}, {"theta", f.theta}, {"error", f.message}});
    }
    return {
        {"lambdas", config.lambdas},
        {"thetas", config.thetas},
        {"repeats", config.repeats},
        {"skew_mode", to_string(config.skew_mode)},
        {"crossover_kind", to_string(ga.crossover_kind)},
        {"ga_config", to_json(ga)},
        {"points", points},
        {"failures", failures},
    };
}

const char* to_string(SkewMode m) noexcept
{
    return m == SkewMode::weighted ? "weighted" : "literal";
}

SkewMode parse_skew_mode(const std::string& text)
{
    if (text == "weighted") {
        return SkewMode::weighted;
    }
    if (text == "literal") {
        return SkewMode::literal;
    }
    throw ConfigError("unknown skew mode '" + text + "'");
}

const char* to_string(MuMode m) noexcept
{
    return m == MuMode::one_step ? "one_step" : "mean";
}

MuMode parse_mu_mode(const std::string& text)
{
    if (text == "one_step" || text == "one-step") {
        return MuMode::one_step;
    }
    if (text == "mean" || text == "mean_of_predictions") {
        return MuMode::mean_of_predictions;
    }
    throw ConfigError("unknown mu mode '" + text + "'");
}

json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error("cannot parse " + path + ": " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path);
    }
    out << text;
}

void write_json_file(const std::string& path, const json& j)
{
    write_text_file(path, j.dump(2) + "\n");
}

} // namespace predport
