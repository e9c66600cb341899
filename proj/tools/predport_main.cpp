#include "predport/error.hpp"
#include "predport/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>

int main(int argc, char** argv)
{
    CLI::App app{"Prediction-based portfolio pipeline"};
    app.require_subcommand(1, 1);

    std::string config_path;
    app.add_option("--config", config_path, "flat key = value config file");

    // One flag per config key; the long names mirror the keys.
    std::map<std::string, std::optional<std::string>> overrides;
    for (const auto& key : predport::config_keys()) {
        std::string names = "--" + key.name;
        if (key.name == "ga.time_limit")
            names += ",--time-limit";
        app.add_option(names, overrides[key.name], key.help)->default_str(key.default_value);
    }
    std::vector<std::string> sets;
    app.add_option("--set", sets, "key=value override (repeatable)");

    std::map<CLI::App*, std::string> commands;
    for (const auto& name : predport::stage_names())
        commands[app.add_subcommand(name, "run the " + name + " stage")->fallthrough()] = name;
    commands[app.add_subcommand("synth", "write a synthetic price file to `prices`")->fallthrough()] = "synth";

    CLI11_PARSE(app, argc, argv);

    try {
        predport::RunConfig config =
            config_path.empty() ? predport::RunConfig{} : predport::RunConfig::from_file(config_path);
        for (const auto& [key, value] : overrides)
            if (value)
                config.set(key, *value);
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw predport::ConfigError("--set expects key=value, got '" + s + "'");
            config.set(s.substr(0, eq), s.substr(eq + 1));
        }
        std::string stage;
        for (const auto& [sub, name] : commands)
            if (sub->parsed())
                stage = name;
        return predport::run_stage(stage, config, std::cout);
    } catch (const predport::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
