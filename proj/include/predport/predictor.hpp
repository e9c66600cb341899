#pragma once

#include "predport/market_data.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace predport {

struct SplitFractions {
    double train = 0.70;
    double validation = 0.15;
    double test = 0.15;
};

struct PredictorConfig {
    int delay = 41;
    int hidden_units = 5;
    int max_epochs = 1000;
    SplitFractions split;
    double lm_initial_damping = 1e-3;
    double lm_damping_factor = 10.0;
    // Stop after this many consecutive epochs without a new best validation
    // loss; 0 disables the check and always runs to max_epochs.
    int validation_patience = 0;
    std::uint64_t seed = 1;

    void validate() const;
};

enum class Split : std::uint8_t { train, validation, test };

const char* to_string(Split s) noexcept;

/// Chronological labels for n samples: train first, test last. Every split
/// receives at least one sample.
std::vector<Split> split_labels(std::size_t n, const SplitFractions& fractions);

/// Lag windows and next-step targets. Row k of `inputs` holds
/// (R[k], ..., R[k+d-1]) oldest first and targets[k] = R[k+d].
struct SupervisedSet {
    Eigen::MatrixXd inputs;
    Eigen::VectorXd targets;
    std::vector<Split> labels;

    std::size_t size() const noexcept { return static_cast<std::size_t>(targets.size()); }
    std::size_t count(Split s) const;
    SupervisedSet subset(Split s) const;
};

SupervisedSet split_series(std::span<const double> returns, const PredictorConfig& config);

struct NetworkShape {
    int inputs = 1;
    int hidden = 5;

    Eigen::Index parameter_count() const noexcept { return static_cast<Eigen::Index>(hidden) * (inputs + 2) + 1; }
};

/// Tapped-delay-line network: `inputs` lags -> tanh hidden layer -> linear
/// output. Parameters are packed as [input weights (hidden x inputs,
/// row-major) | hidden biases | output weights | output bias].
struct TrainedPredictor {
    std::string asset;
    NetworkShape shape;
    Eigen::VectorXd params;
    SplitFractions split;
    double best_val_loss = 0.0;
    int epochs_run = 0;
    // Training MSE at initialization and after every accepted step.
    std::vector<double> train_loss_history;
    // Validation MSE recorded alongside train_loss_history.
    std::vector<double> val_loss_history;
};

TrainedPredictor make_predictor(NetworkShape shape, std::uint64_t seed);

double forward(const TrainedPredictor& predictor, std::span<const double> lags);
Eigen::VectorXd forward(const TrainedPredictor& predictor, const Eigen::MatrixXd& inputs);

/// d(prediction - target)/d(params) for each row of `samples.inputs`.
Eigen::MatrixXd jacobian(const TrainedPredictor& predictor, const SupervisedSet& samples);

TrainedPredictor train_arnn(const SupervisedSet& samples, const PredictorConfig& config, std::string asset = {});

struct PredictionRecord {
    std::string asset;
    std::vector<double> real;
    std::vector<double> predicted;
    std::vector<double> errors;
    std::vector<Split> split_labels;
    // Index into the source return series of real[0].
    std::size_t first_index = 0;

    std::size_t size() const noexcept { return real.size(); }
    PredictionRecord subset(Split s) const;
};

/// One-step-ahead predictions from the true preceding `delay` returns.
PredictionRecord rolling_predict(const TrainedPredictor& predictor, std::span<const double> returns, int delay);

/// Trains one network per asset, seeding asset i with derive_seed(config.seed, i).
std::vector<TrainedPredictor> train_universe(const AssetUniverse& universe, const PredictorConfig& config,
                                             unsigned threads = 0);

} // namespace predport
