#include "predport/predictor.hpp"

#include "predport/error.hpp"
#include "predport/parallel.hpp"
#include "predport/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace predport {

namespace {

constexpr double max_damping = 1e10;
constexpr double min_damping = 1e-20;

double mse(const Eigen::VectorXd& r)
{
    return r.size() == 0 ? 0.0 : r.squaredNorm() / static_cast<double>(r.size());
}

struct Layout {
    Eigen::Index d, h;
    Eigen::Index w1() const { return 0; }
    Eigen::Index b1() const { return h * d; }
    Eigen::Index w2() const { return h * d + h; }
    Eigen::Index b2() const { return h * d + 2 * h; }
};

Layout layout_of(const NetworkShape& s)
{
    return {s.inputs, s.hidden};
}

void check_shape(const TrainedPredictor& p)
{
    if (p.shape.inputs < 1 || p.shape.hidden < 1 || p.params.size() != p.shape.parameter_count()) {
        throw DimensionError("predictor parameter vector does not match its shape");
    }
}

} // namespace

void PredictorConfig::validate() const
{
    if (delay < 1) {
        throw ConfigError("predictor delay must be >= 1");
    }
    if (hidden_units < 1) {
        throw ConfigError("predictor hidden_units must be >= 1");
    }
    if (max_epochs < 1) {
        throw ConfigError("predictor max_epochs must be >= 1");
    }
    for (double f : {split.train, split.validation, split.test}) {
        if (!(f > 0.0 && f < 1.0)) {
            throw ConfigError("split fractions must lie in (0, 1)");
        }
    }
    if (std::abs(split.train + split.validation + split.test - 1.0) > 1e-9) {
        throw ConfigError("split fractions must sum to 1");
    }
    if (!(lm_initial_damping > 0.0)) {
        throw ConfigError("lm_initial_damping must be positive");
    }
    if (!(lm_damping_factor > 1.0)) {
        throw ConfigError("lm_damping_factor must exceed 1");
    }
    if (validation_patience < 0) {
        throw ConfigError("validation_patience must be >= 0");
    }
}

const char* to_string(Split s) noexcept
{
    switch (s) {
    case Split::train:
        return "train";
    case Split::validation:
        return "validation";
    case Split::test:
        return "test";
    }
    return "?";
}

std::vector<Split> split_labels(std::size_t n, const SplitFractions& fractions)
{
    if (n < 3) {
        throw InsufficientDataError("need at least 3 samples to form train/validation/test splits, got " +
                                    std::to_string(n));
    }
    const auto nd = static_cast<double>(n);
    auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fractions.validation * nd)));
    auto n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fractions.test * nd)));
    while (n_val + n_test > n - 1) {
        // Shrink the larger of the two so training keeps one sample.
        if (n_val >= n_test && n_val > 1) {
            --n_val;
        } else {
            --n_test;
        }
    }
    const std::size_t n_train = n - n_val - n_test;
    std::vector<Split> labels(n, Split::train);
    std::fill(labels.begin() + static_cast<std::ptrdiff_t>(n_train),
              labels.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), Split::validation);
    std::fill(labels.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), labels.end(), Split::test);
    return labels;
}

std::size_t SupervisedSet::count(Split s) const
{
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), s));
}

SupervisedSet SupervisedSet::subset(Split s) const
{
    const auto n = static_cast<Eigen::Index>(count(s));
    SupervisedSet out;
    out.inputs.resize(n, inputs.cols());
    out.targets.resize(n);
    out.labels.assign(static_cast<std::size_t>(n), s);
    Eigen::Index row = 0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (labels[k] == s) {
            const auto ki = static_cast<Eigen::Index>(k);
            out.inputs.row(row) = inputs.row(ki);
            out.targets(row) = targets(ki);
            ++row;
        }
    }
    return out;
}

SupervisedSet split_series(std::span<const double> returns, const PredictorConfig& config)
{
    config.validate();
    const auto d = static_cast<std::size_t>(config.delay);
    if (returns.size() < d + 3) {
        throw InsufficientDataError("series of length " + std::to_string(returns.size()) + " is too short for delay " +
                                    std::to_string(d) + " (need at least delay + 3)");
    }
    const std::size_t n = returns.size() - d;
    SupervisedSet set;
    set.inputs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    set.targets.resize(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < d; ++j) {
            set.inputs(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = returns[k + j];
        }
        set.targets(static_cast<Eigen::Index>(k)) = returns[k + d];
    }
    set.labels = split_labels(n, config.split);
    return set;
}

TrainedPredictor make_predictor(NetworkShape shape, std::uint64_t seed)
{
    if (shape.inputs < 1 || shape.hidden < 1) {
        throw ConfigError("network needs at least one input and one hidden unit");
    }
    TrainedPredictor p;
    p.shape = shape;
    p.params.resize(shape.parameter_count());
    const auto L = layout_of(shape);
    Rng rng(seed);
    const double in_scale = 1.0 / std::sqrt(static_cast<double>(shape.inputs));
    const double out_scale = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
    for (Eigen::Index i = 0; i < L.w2(); ++i) {
        p.params(i) = (uniform01(rng) - 0.5) * in_scale;
    }
    for (Eigen::Index i = L.w2(); i < p.params.size(); ++i) {
        p.params(i) = (uniform01(rng) - 0.5) * out_scale;
    }
    return p;
}

double forward(const TrainedPredictor& predictor, std::span<const double> lags)
{
    check_shape(predictor);
    if (lags.size() != static_cast<std::size_t>(predictor.shape.inputs)) {
        throw DimensionError("expected " + std::to_string(predictor.shape.inputs) + " lags, got " +
                             std::to_string(lags.size()));
    }
    const auto L = layout_of(predictor.shape);
    const auto& w = predictor.params;
    double y = w(L.b2());
    for (Eigen::Index k = 0; k < L.h; ++k) {
        double a = w(L.b1() + k);
        for (Eigen::Index j = 0; j < L.d; ++j) {
            a += w(L.w1() + k * L.d + j) * lags[static_cast<std::size_t>(j)];
        }
        y += w(L.w2() + k) * std::tanh(a);
    }
    return y;
}

Eigen::VectorXd forward(const TrainedPredictor& predictor, const Eigen::MatrixXd& inputs)
{
    check_shape(predictor);
    if (inputs.cols() != predictor.shape.inputs) {
        throw DimensionError("input matrix has " + std::to_string(inputs.cols()) + " columns, network expects " +
                             std::to_string(predictor.shape.inputs));
    }
    const auto L = layout_of(predictor.shape);
    const auto& w = predictor.params;
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w1(
        w.data() + L.w1(), L.h, L.d);
    Eigen::MatrixXd hidden = (inputs * w1.transpose()).rowwise() + w.segment(L.b1(), L.h).transpose();
    hidden = hidden.array().tanh();
    return (hidden * w.segment(L.w2(), L.h)).array() + w(L.b2());
}

Eigen::MatrixXd jacobian(const TrainedPredictor& predictor, const SupervisedSet& samples)
{
    check_shape(predictor);
    if (samples.inputs.cols() != predictor.shape.inputs) {
        throw DimensionError("sample width does not match network inputs");
    }
    const auto L = layout_of(predictor.shape);
    const auto& w = predictor.params;
    const Eigen::Index n = samples.inputs.rows();
    Eigen::MatrixXd J(n, w.size());
    for (Eigen::Index s = 0; s < n; ++s) {
        const auto x = samples.inputs.row(s);
        for (Eigen::Index k = 0; k < L.h; ++k) {
            double a = w(L.b1() + k);
            for (Eigen::Index j = 0; j < L.d; ++j) {
                a += w(L.w1() + k * L.d + j) * x(j);
            }
            const double h = std::tanh(a);
            const double back = w(L.w2() + k) * (1.0 - h * h);
            for (Eigen::Index j = 0; j < L.d; ++j) {
                J(s, L.w1() + k * L.d + j) = back * x(j);
            }
            J(s, L.b1() + k) = back;
            J(s, L.w2() + k) = h;
        }
        J(s, L.b2()) = 1.0;
    }
    return J;
}

TrainedPredictor train_arnn(const SupervisedSet& samples, const PredictorConfig& config, std::string asset)
{
    config.validate();
    if (samples.inputs.cols() != config.delay) {
        throw DimensionError("samples were built for delay " + std::to_string(samples.inputs.cols()) +
                             ", config says " + std::to_string(config.delay));
    }
    const SupervisedSet train = samples.subset(Split::train);
    const SupervisedSet val = samples.subset(Split::validation);
    if (train.size() == 0 || val.size() == 0) {
        throw InsufficientDataError("training needs at least one training and one validation sample");
    }

    TrainedPredictor p = make_predictor({config.delay, config.hidden_units}, config.seed);
    p.asset = std::move(asset);
    p.split = config.split;

    Eigen::VectorXd residual = forward(p, train.inputs) - train.targets;
    double loss = mse(residual);
    double val_loss = mse(forward(p, val.inputs) - val.targets);
    if (!std::isfinite(loss) || !std::isfinite(val_loss)) {
        throw TrainingError(0, "non-finite loss at initialization");
    }
    p.train_loss_history.push_back(loss);
    p.val_loss_history.push_back(val_loss);
    p.best_val_loss = val_loss;
    Eigen::VectorXd best_params = p.params;
    int since_best = 0;

    double damping = config.lm_initial_damping;
    TrainedPredictor trial = p;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const Eigen::MatrixXd J = jacobian(p, train);
        const Eigen::VectorXd gradient = J.transpose() * residual;
        if (!(gradient.lpNorm<Eigen::Infinity>() > 0.0)) {
            break;
        }
        const Eigen::MatrixXd normal = J.transpose() * J;

        bool accepted = false;
        Eigen::VectorXd trial_residual;
        double trial_loss = 0.0;
        while (damping <= max_damping) {
            Eigen::MatrixXd lhs = normal;
            lhs.diagonal().array() += damping;
            const Eigen::LLT<Eigen::MatrixXd> llt(lhs);
            if (llt.info() == Eigen::Success) {
                const Eigen::VectorXd step = llt.solve(-gradient);
                trial.params = p.params + step;
                trial_residual = forward(trial, train.inputs) - train.targets;
                trial_loss = mse(trial_residual);
                if (std::isfinite(trial_loss) && trial_loss < loss) {
                    accepted = true;
                    damping = std::max(damping / config.lm_damping_factor, min_damping);
                    break;
                }
            }
            damping *= config.lm_damping_factor;
        }
        if (!accepted) {
            break;
        }

        p.params.swap(trial.params);
        residual.swap(trial_residual);
        loss = trial_loss;
        p.epochs_run = epoch;

        val_loss = mse(forward(p, val.inputs) - val.targets);
        if (!std::isfinite(val_loss) || !p.params.allFinite()) {
            throw TrainingError(epoch, "non-finite validation loss");
        }
        p.train_loss_history.push_back(loss);
        p.val_loss_history.push_back(val_loss);
        if (val_loss < p.best_val_loss) {
            p.best_val_loss = val_loss;
            best_params = p.params;
            since_best = 0;
        } else if (config.validation_patience > 0 && ++since_best >= config.validation_patience) {
            break;
        }
    }
    p.params = std::move(best_params);
    return p;
}

PredictionRecord PredictionRecord::subset(Split s) const
{
    PredictionRecord out;
    out.asset = asset;
    out.first_index = first_index;
    for (std::size_t t = 0; t < real.size(); ++t) {
        if (split_labels[t] == s) {
            out.real.push_back(real[t]);
            out.predicted.push_back(predicted[t]);
            out.errors.push_back(errors[t]);
            out.split_labels.push_back(s);
        }
    }
    return out;
}

PredictionRecord rolling_predict(const TrainedPredictor& predictor, std::span<const double> returns, int delay)
{
    check_shape(predictor);
    if (delay != predictor.shape.inputs) {
        throw DimensionError("predictor expects delay " + std::to_string(predictor.shape.inputs) + ", got " +
                             std::to_string(delay));
    }
    const auto d = static_cast<std::size_t>(delay);
    if (returns.size() <= d) {
        throw InsufficientDataError("series of length " + std::to_string(returns.size()) +
                                    " has no samples after a delay of " + std::to_string(d));
    }
    PredictionRecord rec;
    rec.asset = predictor.asset;
    rec.first_index = d;
    const std::size_t n = returns.size() - d;
    rec.real.reserve(n);
    rec.predicted.reserve(n);
    rec.errors.reserve(n);
    for (std::size_t t = d; t < returns.size(); ++t) {
        const double y = forward(predictor, returns.subspan(t - d, d));
        rec.real.push_back(returns[t]);
        rec.predicted.push_back(y);
        rec.errors.push_back(returns[t] - y);
    }
    rec.split_labels = n >= 3 ? split_labels(n, predictor.split) : std::vector<Split>(n, Split::test);
    return rec;
}

std::vector<TrainedPredictor> train_universe(const AssetUniverse& universe, const PredictorConfig& config,
                                             unsigned threads)
{
    config.validate();
    std::vector<TrainedPredictor> out(universe.size());
    parallel_for(
        universe.size(),
        [&](std::size_t i) {
            PredictorConfig local = config;
            local.seed = derive_seed(config.seed, i);
            const auto samples = split_series(universe.series[i].returns, local);
            out[i] = train_arnn(samples, local, universe.assets[i]);
        },
        threads);
    return out;
}

} // namespace predport
