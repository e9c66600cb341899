#pragma once

#include "predport/error.hpp"
#include "predport/frontier.hpp"
#include "predport/ga_solver.hpp"
#include "predport/market_data.hpp"
#include "predport/objective.hpp"
#include "predport/predictor.hpp"
#include "predport/risk_model.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace predport {

struct ConfigKey {
    std::string name;
    std::string default_value;
    std::string help;
};

/// Every recognised configuration key with its default.
const std::vector<ConfigKey>& config_keys();

/// Flat `key = value` configuration. Lines starting with '#' are comments.
class RunConfig {
public:
    RunConfig();

    static RunConfig from_file(const std::string& path);
    static RunConfig from_string(const std::string& text);

    void set(const std::string& key, const std::string& value);
    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    long long get_int(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_list(const std::string& key) const;

    /// Sorted `key=value` lines of every setting that can change results
    /// (output directory and thread count excluded).
    std::string canonical() const;
    /// 16 hex digits of FNV-1a over canonical().
    std::string hash() const;

    std::uint64_t seed() const;
    std::string out_dir() const { return get("out"); }
    unsigned threads() const;

    PredictorConfig predictor() const;
    RiskModelOptions risk() const;
    GAConfig ga() const;
    Bounds bounds(std::size_t assets) const;
    ObjectiveParams objective() const;
    SweepConfig sweep() const;

private:
    std::map<std::string, std::string> values_;
};

/// Raised when a stage runs before the stage that produces its inputs.
class MissingStageError : public Error {
public:
    MissingStageError(const std::string& stage, const std::string& missing)
        : Error("missing " + missing + "; run `" + stage + "` first"), stage_(stage) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

const std::vector<std::string>& stage_names();

/// Runs one stage, writing artifacts under config.out_dir() and a short
/// summary to `out`. Returns 0 on success and 3 when a frontier sweep
/// finished with failed points (partial outputs are still written). Module
/// errors propagate as exceptions.
int run_stage(const std::string& stage, const RunConfig& config, std::ostream& out);

/// Writes a synthetic weekly price file (one Monday close per asset and
/// week, occasionally replaced by the preceding Friday close).
void write_synthetic_prices(const std::string& path, std::size_t assets, std::size_t weeks, const Date& start,
                            double missing_rate, std::uint64_t seed);

/// Aligned returns as written by the ingest stage.
AssetUniverse read_returns_csv(const std::string& path);
std::string returns_csv(const AssetUniverse& universe);

} // namespace predport
