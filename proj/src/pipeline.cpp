#include "predport/pipeline.hpp"

#include "predport/eval_metrics.hpp"
#include "predport/io.hpp"
#include "predport/random.hpp"
#include "predport/taguchi.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace predport {

namespace fs = std::filesystem;

namespace {

// Independent random streams per stage, all derived from the master seed.
constexpr std::uint64_t predict_stream = 1;
constexpr std::uint64_t optimize_stream = 2;
constexpr std::uint64_t tune_stream = 3;
constexpr std::uint64_t frontier_stream = 4;
constexpr std::uint64_t synth_stream = 5;

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

double to_double(const std::string& text, const std::string& what)
{
    const std::string t = trim(text);
    if (t.empty())
        throw ConfigError(what + ": expected a number");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno == ERANGE)
        throw ConfigError(what + ": '" + t + "' is not a number");
    return v;
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, sep))
        out.push_back(trim(field));
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

std::chrono::weekday parse_weekday(const std::string& text)
{
    static const char* names[] = {"sunday", "monday", "tuesday", "wednesday", "thursday", "friday", "saturday"};
    std::string lower = text;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (unsigned i = 0; i < 7; ++i)
        if (lower == names[i])
            return std::chrono::weekday{i};
    throw ConfigError("sampling_weekday: unknown day '" + text + "'");
}

KsThreshold parse_ks_threshold(const std::string& text)
{
    if (text == "lilliefors")
        return KsThreshold::lilliefors;
    if (text == "asymptotic")
        return KsThreshold::asymptotic;
    throw ConfigError("metrics.ks_threshold: expected lilliefors or asymptotic, got '" + text + "'");
}

TuneResponse parse_tune_response(const std::string& text)
{
    if (text == "mean_cost")
        return TuneResponse::mean_cost;
    if (text == "sn_smaller_better")
        return TuneResponse::sn_smaller_better;
    throw ConfigError("tune.response: expected mean_cost or sn_smaller_better, got '" + text + "'");
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

const std::vector<ConfigKey>& config_keys()
{
    static const std::vector<ConfigKey> keys = {
        {"prices", "", "price file (date,asset,close[,index])"},
        {"out", "out", "output directory"},
        {"seed", "42", "master seed"},
        {"threads", "1", "worker threads (0 = hardware concurrency)"},
        {"sampling_weekday", "monday", "weekday sampled from daily closes"},
        {"min_length", "0", "drop return series shorter than this (0 keeps all)"},
        {"predictor.delay", "41", "autoregressive lags"},
        {"predictor.hidden", "5", "hidden units"},
        {"predictor.max_epochs", "1000", "Levenberg-Marquardt epochs"},
        {"predictor.train", "0.70", "training fraction"},
        {"predictor.validation", "0.15", "validation fraction"},
        {"predictor.test", "0.15", "test fraction"},
        {"predictor.damping", "0.001", "initial LM damping"},
        {"predictor.damping_factor", "10", "LM damping multiplier"},
        {"predictor.patience", "0", "epochs without validation improvement before stopping (0 = off)"},
        {"risk.mu_mode", "one_step", "one_step or mean_of_predictions"},
        {"risk.centered", "false", "center prediction errors before covariance"},
        {"metrics.mape_floor", "1e-12", "skip MAPE terms with |real| below this"},
        {"metrics.ks_alpha", "0.05", "KS significance level"},
        {"metrics.ks_threshold", "lilliefors", "lilliefors or asymptotic"},
        {"k", "5", "assets held"},
        {"bounds.epsilon", "0.1", "lower weight bound of a held asset"},
        {"bounds.delta", "0.3", "upper weight bound of a held asset"},
        {"lambda", "0.8", "risk weight"},
        {"theta", "0.2", "skewness weight"},
        {"skew_mode", "weighted", "weighted or literal"},
        {"frontier.lambdas", "1,0.8,0.2,0", "lambda grid"},
        {"frontier.thetas", "0,0.2,0.8", "theta grid"},
        {"frontier.repeats", "3", "GA runs per grid point"},
        {"ga.population", "200", "population size"},
        {"ga.crossover_fraction", "0.8", "share of children made by crossover"},
        {"ga.crossover", "single_point", "scattered, single_point or two_point"},
        {"ga.selection", "roulette", "uniform, roulette or tournament"},
        {"ga.tournament_size", "4", "tournament size"},
        {"ga.penalty", "10", "penalty factor"},
        {"ga.stall", "50", "stall generations"},
        {"ga.tolerance", "1e-6", "stall tolerance on average improvement"},
        {"ga.time_limit", "1000", "seconds"},
        {"ga.max_generations", "500", "generation limit"},
        {"ga.swap_rate", "0.1", "probability a mutation swaps one held asset"},
        {"tune.replicates", "3", "runs per orthogonal-array row"},
        {"tune.response", "mean_cost", "mean_cost or sn_smaller_better"},
        {"tune.apply", "false", "optimize and frontier use the tuned GA levels"},
        {"synth.assets", "5", "synthetic asset count"},
        {"synth.weeks", "221", "synthetic weekly returns"},
        {"synth.start", "2012-03-05", "first Monday"},
        {"synth.missing", "0.02", "probability a Monday close is missing"},
    };
    return keys;
}

const std::vector<std::string>& stage_names()
{
    static const std::vector<std::string> names = {"ingest", "predict", "risk",     "metrics",
                                                   "tune",   "optimize", "frontier", "report"};
    return names;
}

RunConfig::RunConfig()
{
    for (const auto& k : config_keys())
        values_[k.name] = k.default_value;
}

RunConfig RunConfig::from_string(const std::string& text)
{
    RunConfig config;
    std::istringstream in(text);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError(number, "expected key = value");
        try {
            config.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ParseError(number, e.what());
        }
    }
    return config;
}

RunConfig RunConfig::from_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return from_string(ss.str());
    } catch (const ParseError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void RunConfig::set(const std::string& key, const std::string& value)
{
    auto it = values_.find(key);
    if (it == values_.end())
        throw ConfigError("unknown config key '" + key + "'");
    it->second = value;
}

const std::string& RunConfig::get(const std::string& key) const
{
    auto it = values_.find(key);
    if (it == values_.end())
        throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

double RunConfig::get_double(const std::string& key) const
{
    return to_double(get(key), key);
}

long long RunConfig::get_int(const std::string& key) const
{
    const double v = get_double(key);
    if (v != std::floor(v) || std::abs(v) > 9.0e15)
        throw ConfigError(key + ": expected an integer");
    return static_cast<long long>(v);
}

bool RunConfig::get_bool(const std::string& key) const
{
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on")
        return true;
    if (v == "false" || v == "0" || v == "no" || v == "off")
        return false;
    throw ConfigError(key + ": expected true or false");
}

std::vector<double> RunConfig::get_list(const std::string& key) const
{
    std::vector<double> out;
    for (const auto& f : split(get(key), ','))
        out.push_back(to_double(f, key));
    return out;
}

std::string RunConfig::canonical() const
{
    std::string s;
    for (const auto& [k, v] : values_) {
        if (k == "out" || k == "threads")
            continue;
        s += k;
        s += '=';
        s += v;
        s += '\n';
    }
    return s;
}

std::string RunConfig::hash() const
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : canonical()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::uint64_t RunConfig::seed() const
{
    const long long s = get_int("seed");
    if (s < 0)
        throw ConfigError("seed: must be nonnegative");
    return static_cast<std::uint64_t>(s);
}

unsigned RunConfig::threads() const
{
    const long long t = get_int("threads");
    if (t < 0)
        throw ConfigError("threads: must be nonnegative");
    return static_cast<unsigned>(t);
}

PredictorConfig RunConfig::predictor() const
{
    PredictorConfig c;
    c.delay = static_cast<int>(get_int("predictor.delay"));
    c.hidden_units = static_cast<int>(get_int("predictor.hidden"));
    c.max_epochs = static_cast<int>(get_int("predictor.max_epochs"));
    c.split = {get_double("predictor.train"), get_double("predictor.validation"), get_double("predictor.test")};
    c.lm_initial_damping = get_double("predictor.damping");
    c.lm_damping_factor = get_double("predictor.damping_factor");
    c.validation_patience = static_cast<int>(get_int("predictor.patience"));
    c.seed = derive_seed(seed(), predict_stream);
    c.validate();
    return c;
}

RiskModelOptions RunConfig::risk() const
{
    RiskModelOptions o;
    o.mu_mode = parse_mu_mode(get("risk.mu_mode"));
    o.centered = get_bool("risk.centered");
    return o;
}

GAConfig RunConfig::ga() const
{
    auto count = [this](const std::string& key) {
        const long long v = get_int(key);
        if (v < 0)
            throw ConfigError(key + ": must be nonnegative");
        return static_cast<std::size_t>(v);
    };
    GAConfig c;
    c.population_size = count("ga.population");
    c.crossover_fraction = get_double("ga.crossover_fraction");
    c.crossover_kind = parse_crossover_kind(get("ga.crossover"));
    c.selection_kind = parse_selection_kind(get("ga.selection"));
    c.tournament_size = count("ga.tournament_size");
    c.penalty_factor = get_double("ga.penalty");
    c.stall_generations = count("ga.stall");
    c.function_tolerance = get_double("ga.tolerance");
    c.time_limit_seconds = get_double("ga.time_limit");
    c.max_generations = count("ga.max_generations");
    c.mutation_swap_rate = get_double("ga.swap_rate");
    c.threads = threads();
    c.seed = derive_seed(seed(), optimize_stream);
    c.validate();
    return c;
}

Bounds RunConfig::bounds(std::size_t assets) const
{
    const long long k = get_int("k");
    if (k <= 0)
        throw ConfigError("k: must be positive");
    Bounds b = Bounds::uniform(assets, get_double("bounds.epsilon"), get_double("bounds.delta"),
                               static_cast<std::size_t>(k));
    b.validate(assets);
    return b;
}

ObjectiveParams RunConfig::objective() const
{
    ObjectiveParams p;
    p.lambda = get_double("lambda");
    p.theta = get_double("theta");
    p.skew_mode = parse_skew_mode(get("skew_mode"));
    p.validate();
    return p;
}

SweepConfig RunConfig::sweep() const
{
    SweepConfig s;
    s.lambdas = get_list("frontier.lambdas");
    s.thetas = get_list("frontier.thetas");
    const long long r = get_int("frontier.repeats");
    if (r <= 0)
        throw ConfigError("frontier.repeats: must be positive");
    s.repeats = static_cast<std::size_t>(r);
    s.skew_mode = parse_skew_mode(get("skew_mode"));
    s.threads = threads();
    return s;
}

// ---------------------------------------------------------------------------
// Returns file

std::string returns_csv(const AssetUniverse& universe)
{
    std::ostringstream os;
    os.precision(17);
    os << "date";
    for (const auto& a : universe.assets)
        os << ',' << a;
    os << '\n';
    for (std::size_t t = 0; t < universe.length(); ++t) {
        os << format_date(universe.series.front().dates[t]);
        for (const auto& s : universe.series)
            os << ',' << s.returns[t];
        os << '\n';
    }
    return os.str();
}

AssetUniverse read_returns_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw ParseError(1, path + ": empty returns file");
    const auto header = split(trim(line), ',');
    if (header.size() < 2 || header.front() != "date")
        throw ParseError(1, path + ": expected header date,<assets>");
    AssetUniverse u;
    u.assets.assign(header.begin() + 1, header.end());
    for (const auto& a : u.assets)
        u.series.push_back(ReturnSeries{a, {}, {}});
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty())
            continue;
        const auto fields = split(trim(line), ',');
        if (fields.size() != header.size())
            throw ParseError(number, path + ": wrong field count");
        const auto date = parse_date(fields[0]);
        if (!date)
            throw ParseError(number, path + ": invalid date '" + fields[0] + "'");
        for (std::size_t i = 0; i < u.assets.size(); ++i) {
            char* end = nullptr;
            const double v = std::strtod(fields[i + 1].c_str(), &end);
            if (fields[i + 1].empty() || *end != '\0')
                throw ParseError(number, path + ": non-numeric return '" + fields[i + 1] + "'");
            u.series[i].returns.push_back(v);
            u.series[i].dates.push_back(*date);
        }
    }
    if (u.length() < 2)
        throw InsufficientDataError(path + ": fewer than 2 returns");
    return u;
}

// ---------------------------------------------------------------------------
// Synthetic data

void write_synthetic_prices(const std::string& path, std::size_t assets, std::size_t weeks, const Date& start,
                            double missing_rate, std::uint64_t seed)
{
    using namespace std::chrono;
    if (assets == 0 || weeks < 2)
        throw ConfigError("synthetic data needs at least one asset and two weeks");
    if (!start.ok() || weekday{sys_days{start}} != Monday)
        throw ConfigError("synth.start must be a Monday");
    if (!(missing_rate >= 0.0 && missing_rate < 1.0))
        throw ConfigError("synth.missing must lie in [0, 1)");

    static const char* indices[] = {"Banking", "Chemicals", "Metals", "Automotive", "Insurance", "Pharma"};
    Rng rng(derive_seed(seed, synth_stream));

    // Market factor plus persistent idiosyncratic drift so the series carry
    // some predictable structure.
    std::vector<double> market(weeks);
    double m_prev = 0.0;
    for (auto& m : market) {
        m = 0.3 * m_prev + 0.015 * standard_normal(rng);
        m_prev = m;
    }

    std::ostringstream os;
    os.precision(10);
    os << "date,asset,close,index\n";
    for (std::size_t a = 0; a < assets; ++a) {
        char name[32];
        std::snprintf(name, sizeof name, "A%03zu", a + 1);
        const char* index = indices[a % std::size(indices)];
        const double beta = 0.5 + uniform01(rng);
        const double phi = 0.2 + 0.6 * uniform01(rng);
        const double drift = 0.001 + 0.004 * uniform01(rng);
        const double vol = 0.01 + 0.03 * uniform01(rng);
        double price = 50.0 + 100.0 * uniform01(rng);
        double e_prev = 0.0;
        for (std::size_t w = 0; w <= weeks; ++w) {
            const sys_days monday = sys_days{start} + days{7 * static_cast<long>(w)};
            if (w > 0) {
                const double e = phi * e_prev + vol * standard_normal(rng);
                e_prev = e;
                price *= std::max(0.05, 1.0 + drift + beta * market[w - 1] + e);
                // Friday before this Monday: close slightly off the Monday level.
                const double friday = price * (1.0 + 0.002 * standard_normal(rng));
                os << format_date(year_month_day{monday - days{3}}) << ',' << name << ',' << friday << ',' << index
                   << '\n';
            }
            const bool missing = w > 0 && w < weeks && uniform01(rng) < missing_rate;
            if (!missing)
                os << format_date(year_month_day{monday}) << ',' << name << ',' << price << ',' << index << '\n';
        }
    }
    write_text_file(path, os.str());
}

// ---------------------------------------------------------------------------
// Stages

namespace {

class Stage {
public:
    Stage(std::string name, const RunConfig& config, std::ostream& out)
        : name_(std::move(name)), config_(config), out_(out), dir_(config.out_dir())
    {
        fs::create_directories(dir_);
    }

    fs::path path(const std::string& artifact) const { return dir_ / artifact; }

    fs::path require(const std::string& artifact, const std::string& stage) const
    {
        const fs::path p = path(artifact);
        if (!fs::exists(p))
            throw MissingStageError(stage, p.string());
        return p;
    }

    json provenance(std::uint64_t seed) const
    {
        return {{"stage", name_}, {"config_hash", config_.hash()}, {"seed", seed}};
    }

    void write_text(const std::string& artifact, const std::string& text, std::uint64_t seed)
    {
        fs::create_directories(path(artifact).parent_path());
        write_text_file(path(artifact).string(), text);
        record(artifact, seed);
    }

    void write_json(const std::string& artifact, json j, std::uint64_t seed)
    {
        if (j.is_object())
            j["provenance"] = provenance(seed);
        fs::create_directories(path(artifact).parent_path());
        write_json_file(path(artifact).string(), j);
        record(artifact, seed);
    }

    /// Stores the manifest; call once after the stage's artifacts are written.
    void commit()
    {
        const fs::path p = path("manifest.json");
        json manifest = fs::exists(p) ? read_json_file(p.string()) : json::object();
        for (auto& [k, v] : pending_.items())
            manifest["artifacts"][k] = v;
        manifest["config_hash"] = config_.hash();
        manifest["seed"] = config_.seed();
        write_json_file(p.string(), manifest);
    }

    const RunConfig& config() const { return config_; }
    std::ostream& out() { return out_; }

private:
    void record(const std::string& artifact, std::uint64_t seed)
    {
        pending_[artifact] = {{"stage", name_}, {"config_hash", config_.hash()}, {"seed", seed}};
    }

    std::string name_;
    const RunConfig& config_;
    std::ostream& out_;
    fs::path dir_;
    json pending_ = json::object();
};

std::string predictions_csv(const std::vector<PredictionRecord>& records, const AssetUniverse& universe)
{
    std::ostringstream os;
    os.precision(17);
    os << "asset,index,date,real,predicted,error,split\n";
    for (std::size_t a = 0; a < records.size(); ++a) {
        const auto& r = records[a];
        for (std::size_t t = 0; t < r.size(); ++t) {
            const std::size_t idx = r.first_index + t;
            os << r.asset << ',' << idx << ',' << format_date(universe.series[a].dates[idx]) << ',' << r.real[t]
               << ',' << r.predicted[t] << ',' << r.errors[t] << ',' << to_string(r.split_labels[t]) << '\n';
        }
    }
    return os.str();
}

Split parse_split(const std::string& s, std::size_t line)
{
    for (Split v : {Split::train, Split::validation, Split::test})
        if (s == to_string(v))
            return v;
    throw ParseError(line, "unknown split '" + s + "'");
}

std::vector<PredictionRecord> read_predictions(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open " + path.string());
    std::vector<PredictionRecord> records;
    std::string line;
    std::getline(in, line);
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty())
            continue;
        const auto f = split(trim(line), ',');
        if (f.size() != 7)
            throw ParseError(number, path.string() + ": wrong field count");
        if (records.empty() || records.back().asset != f[0]) {
            PredictionRecord r;
            r.asset = f[0];
            r.first_index = static_cast<std::size_t>(std::stoull(f[1]));
            records.push_back(std::move(r));
        }
        auto& r = records.back();
        r.real.push_back(std::strtod(f[3].c_str(), nullptr));
        r.predicted.push_back(std::strtod(f[4].c_str(), nullptr));
        r.errors.push_back(std::strtod(f[5].c_str(), nullptr));
        r.split_labels.push_back(parse_split(f[6], number));
    }
    return records;
}

RiskModel load_risk_model(Stage& stage)
{
    return risk_model_from_json(read_json_file(stage.require("risk_model.json", "risk").string()));
}

/// GA settings for optimize and frontier, with tuned levels when requested.
GAConfig effective_ga(Stage& stage, std::uint64_t seed)
{
    GAConfig ga = stage.config().ga();
    ga.seed = seed;
    if (stage.config().get_bool("tune.apply")) {
        const json tuned = read_json_file(stage.require("tune_result.json", "tune").string());
        const auto levels = tuned.at("best_levels").get<std::vector<int>>();
        ga = apply_levels(ga, FactorGrid::ga_default(), levels);
    }
    return ga;
}

int run_ingest(Stage& s)
{
    const RunConfig& c = s.config();
    const std::string prices = c.get("prices");
    if (prices.empty())
        throw ConfigError("prices is not set");
    if (!fs::exists(prices))
        throw ConfigError("price file not found: " + prices);
    const PriceTable table = load_prices_file(prices, parse_weekday(c.get("sampling_weekday")));

    std::vector<ReturnSeries> series;
    std::vector<std::string> short_assets;
    for (const auto& a : table.assets) {
        const auto& points = table.prices.at(a);
        if (points.size() < 2) {
            short_assets.push_back(a);
            continue;
        }
        series.push_back(compute_returns(points));
    }
    if (series.empty())
        throw InsufficientDataError("no asset has two sampled prices");
    const long long min_length = c.get_int("min_length");
    if (min_length < 0)
        throw ConfigError("min_length: must be nonnegative");
    AlignmentResult aligned = align_universe(series, static_cast<std::size_t>(min_length));
    for (const auto& a : aligned.universe.assets)
        if (auto it = table.index_membership.find(a); it != table.index_membership.end())
            aligned.universe.index_membership[a] = it->second;

    const auto& u = aligned.universe;
    std::string report = format_alignment_report(aligned);
    for (const auto& a : table.excluded)
        report += "excluded (no sampled prices): " + a + "\n";
    for (const auto& a : short_assets)
        report += "excluded (single sampled price): " + a + "\n";

    const std::uint64_t seed = c.seed();
    s.write_text("returns.csv", returns_csv(u), seed);
    s.write_text("alignment_report.txt", report, seed);
    s.write_json("universe.json",
                 {{"assets", u.assets},
                  {"index_membership", u.index_membership},
                  {"weeks", u.length()},
                  {"first_date", format_date(u.series.front().dates.front())},
                  {"last_date", format_date(u.series.front().dates.back())},
                  {"dropped", aligned.dropped},
                  {"excluded", table.excluded},
                  {"single_price", short_assets}},
                 seed);
    s.commit();
    s.out() << u.size() << " assets, " << u.length() << " weeks (" << format_date(u.series.front().dates.front())
            << " to " << format_date(u.series.front().dates.back()) << ")\n";
    for (const auto& a : aligned.dropped)
        s.out() << "dropped " << a << '\n';
    return 0;
}

int run_predict(Stage& s)
{
    const AssetUniverse u = read_returns_csv(s.require("returns.csv", "ingest").string());
    const PredictorConfig pc = s.config().predictor();
    const auto predictors = train_universe(u, pc, s.config().threads());

    std::vector<PredictionRecord> records;
    for (std::size_t i = 0; i < predictors.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "predictors/predictor_%03zu.json", i);
        s.write_json(name, to_json(predictors[i]), pc.seed);
        records.push_back(rolling_predict(predictors[i], u.series[i].returns, pc.delay));
    }
    s.write_text("predictions.csv", predictions_csv(records, u), pc.seed);
    s.commit();
    for (const auto& p : predictors)
        s.out() << p.asset << ": " << p.epochs_run << " epochs, validation mse " << fmt(p.best_val_loss) << '\n';
    return 0;
}

int run_risk(Stage& s)
{
    const auto records = read_predictions(s.require("predictions.csv", "predict"));
    const AssetUniverse u = read_returns_csv(s.require("returns.csv", "ingest").string());
    if (records.size() != u.size())
        throw DimensionError("predictions cover " + std::to_string(records.size()) + " assets, returns " +
                             std::to_string(u.size()));
    const RiskModel model = build_risk_model(records, u.series, s.config().risk());
    s.write_json("risk_model.json", to_json(model), s.config().seed());
    s.commit();
    s.out() << "risk model: " << model.size() << " assets, window " << model.estimation_window;
    if (model.diagonal_shift > 0.0)
        s.out() << ", diagonal shift " << fmt(model.diagonal_shift);
    s.out() << '\n';
    return 0;
}

int run_metrics(Stage& s)
{
    const RunConfig& c = s.config();
    const auto records = read_predictions(s.require("predictions.csv", "predict"));
    const double floor = c.get_double("metrics.mape_floor");
    const double alpha = c.get_double("metrics.ks_alpha");
    const KsThreshold kind = parse_ks_threshold(c.get("metrics.ks_threshold"));

    std::vector<MetricReport> all, test;
    json assets = json::array();
    std::size_t ks_tested = 0, ks_accepted = 0;
    for (const auto& r : records) {
        const PredictionRecord t = r.subset(Split::test);
        all.push_back(evaluate(r.real, r.predicted, floor));
        test.push_back(evaluate(t.real, t.predicted, floor));
        json entry = {{"asset", r.asset}, {"all", to_json(all.back())}, {"test", to_json(test.back())}};
        try {
            const KsResult ks = ks_normality_test(r.errors, alpha, kind);
            entry["ks"] = to_json(ks);
            ++ks_tested;
            ks_accepted += ks.accepted ? 1 : 0;
        } catch (const Error& e) {
            entry["ks"] = {{"error", e.what()}};
        }
        assets.push_back(std::move(entry));
    }
    const std::uint64_t seed = c.seed();
    s.write_json("metrics.json",
                 {{"assets", assets},
                  {"ks_threshold", kind == KsThreshold::lilliefors ? "lilliefors" : "asymptotic"},
                  {"ks_tested", ks_tested},
                  {"ks_accepted", ks_accepted}},
                 seed);
    s.write_text("metrics_summary.csv", summary_csv(summarize(all)), seed);
    s.write_text("metrics_test_summary.csv", summary_csv(summarize(test)), seed);
    s.commit();
    s.out() << "metrics: " << records.size() << " assets, normality accepted for " << ks_accepted << " of "
            << ks_tested << '\n';
    return 0;
}

int run_tune(Stage& s)
{
    const RunConfig& c = s.config();
    const RiskModel model = load_risk_model(s);
    const Bounds bounds = c.bounds(model.size());
    const ObjectiveParams params = c.objective();
    const long long reps = c.get_int("tune.replicates");
    if (reps <= 0)
        throw ConfigError("tune.replicates: must be positive");
    const std::uint64_t seed = derive_seed(c.seed(), tune_stream);

    const FactorGrid grid = FactorGrid::ga_default();
    GAConfig base = c.ga();
    base.seed = seed;
    const auto runs = run_experiments(build_array(grid), grid, model, params, bounds, base,
                                      static_cast<std::size_t>(reps), seed);
    const TuneResult result = analyze_means(runs, grid.factors.size(), parse_tune_response(c.get("tune.response")));

    std::string tuned;
    const char* keys[] = {"ga.population", "ga.selection", "ga.crossover_fraction", "ga.crossover", "ga.penalty"};
    for (std::size_t f = 0; f < grid.factors.size(); ++f)
        tuned += std::string(keys[f]) + " = " + grid.factors[f].levels[result.best_levels[f]] + "\n";

    s.write_text("tune_runs.csv", runs_csv(result, grid), seed);
    s.write_text("tune_response.csv", response_csv(result, grid), seed);
    s.write_json("tune_result.json", to_json(result, grid), seed);
    s.write_text("ga_tuned.cfg", tuned, seed);
    s.commit();
    s.out() << tuned;
    return 0;
}

int run_optimize(Stage& s)
{
    const RunConfig& c = s.config();
    const RiskModel model = load_risk_model(s);
    const Bounds bounds = c.bounds(model.size());
    const ObjectiveParams params = c.objective();
    const GAConfig ga = effective_ga(s, derive_seed(c.seed(), optimize_stream));
    const GAResult result = evolve(model, params, bounds, ga);

    s.write_json("portfolio.json", portfolio_json(result.best, model, params, result.best_cost), ga.seed);
    s.write_json("ga_result.json", to_json(result, model), ga.seed);
    s.write_text("ga_trace.csv", trace_csv(result), ga.seed);
    s.commit();
    s.out() << "cost " << fmt(result.best_cost) << ", mu_p " << fmt(result.best.mu_p) << ", risk (variance) "
            << fmt(result.best.sigma_p) << ", stop " << to_string(result.stop_reason) << " after "
            << result.generations << " generations\n";
    for (std::size_t i : result.best.selection)
        s.out() << "  " << model.assets[i] << ' ' << fmt(result.best.weights(static_cast<Eigen::Index>(i)))
                << '\n';
    return 0;
}

int run_frontier(Stage& s)
{
    const RunConfig& c = s.config();
    const RiskModel model = load_risk_model(s);
    const Bounds bounds = c.bounds(model.size());
    const SweepConfig sc = c.sweep();
    const GAConfig ga = effective_ga(s, derive_seed(c.seed(), frontier_stream));
    const SweepResult result = sweep(model, sc, bounds, ga);
    const auto curve = efficient_filter(result.points);

    s.write_text("frontier.csv", frontier_csv(result.points, model.assets), ga.seed);
    s.write_text("frontier_curve.csv", curve_csv(curve), ga.seed);
    s.write_json("frontier.json", to_json(result, model, sc, ga), ga.seed);
    s.commit();
    s.out() << "frontier: " << result.points.size() << " points, " << curve.size() << " efficient\n";
    for (const auto& f : result.failures)
        s.out() << "failed at lambda " << fmt(f.lambda) << ", theta " << fmt(f.theta) << ": " << f.message << '\n';
    return result.ok() ? 0 : 3;
}

int run_report(Stage& s)
{
    json report = json::object();
    const fs::path manifest = s.path("manifest.json");
    if (!fs::exists(manifest))
        throw MissingStageError("ingest", manifest.string());
    report["manifest"] = read_json_file(manifest.string());
    auto include = [&](const std::string& key, const std::string& artifact) {
        const fs::path p = s.path(artifact);
        if (fs::exists(p))
            report[key] = read_json_file(p.string());
    };
    include("universe", "universe.json");
    include("risk_model", "risk_model.json");
    include("metrics", "metrics.json");
    include("tune", "tune_result.json");
    include("portfolio", "portfolio.json");
    include("frontier", "frontier.json");
    write_json_file(s.path("report.json").string(), report);
    s.out() << report.dump(2) << '\n';
    return 0;
}

int run_synth(Stage& s)
{
    const RunConfig& c = s.config();
    const std::string prices = c.get("prices");
    if (prices.empty())
        throw ConfigError("prices is not set; synth writes its output there");
    const auto start = parse_date(c.get("synth.start"));
    if (!start)
        throw ConfigError("synth.start: invalid date");
    const long long assets = c.get_int("synth.assets");
    const long long weeks = c.get_int("synth.weeks");
    if (assets <= 0 || weeks <= 1)
        throw ConfigError("synth.assets must be positive and synth.weeks at least 2");
    if (auto parent = fs::path(prices).parent_path(); !parent.empty())
        fs::create_directories(parent);
    write_synthetic_prices(prices, static_cast<std::size_t>(assets), static_cast<std::size_t>(weeks), *start,
                           c.get_double("synth.missing"), c.seed());
    s.out() << "wrote " << assets << " assets x " << weeks << " weeks to " << prices << '\n';
    return 0;
}

} // namespace

int run_stage(const std::string& stage, const RunConfig& config, std::ostream& out)
{
    Stage s(stage, config, out);
    // synth writes to `prices` and leaves no manifest entry.
    if (stage == "synth")
        return run_synth(s);
    if (stage == "ingest")
        return run_ingest(s);
    if (stage == "predict")
        return run_predict(s);
    if (stage == "risk")
        return run_risk(s);
    if (stage == "metrics")
        return run_metrics(s);
    if (stage == "tune")
        return run_tune(s);
    if (stage == "optimize")
        return run_optimize(s);
    if (stage == "frontier")
        return run_frontier(s);
    if (stage == "report")
        return run_report(s);
    throw ConfigError("unknown stage '" + stage + "'");
}

} // namespace predport
