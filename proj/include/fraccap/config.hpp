#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace fraccap {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& key, const std::string& message)
        : std::runtime_error(key.empty() ? message : "'" + key + "': " + message), key(key)
    {
    }
    std::string key;
};

/// Thrown by parse_config for --help; carries the help text.
class HelpRequested : public std::runtime_error {
public:
    explicit HelpRequested(const std::string& text) : std::runtime_error(text) {}
};

/// Resolved run configuration. Lengths are in body units; `ladder` holds
/// absolute cell sizes, `ladder_factors` multiples of `cell_size`.
struct RunConfig {
    std::string command;
    std::string config_file;
    std::string body, body1, body2;
    double cell_size = 0.04;
    std::vector<double> ladder;
    std::vector<double> ladder_factors = {2.0, 1.0, 0.5};
    std::string boundary = "conforming";
    std::vector<double> lambdas = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<double> levels = {0.2, 0.3, 0.5};
    double r = 0.25, s = 0.5;
    double lambda = 0.5;
    double beta_lo = -8.0, beta_hi = 1.0;
    double bracket_tol = 1e-3;
    int segments = 2000;
    double shell_lo = 1.2, shell_hi = 6.0;
    std::vector<double> radii;  // empty: command default
    double ext_spacing = 0.1;
    double box_factor = 4.0;
    std::vector<double> ext_levels = {0.3, 0.5, 0.7};
    std::uint64_t seed = 0;
    std::string output = ".";
    bool timestamp = true;
    bool print_config = false;

    /// Resolved configuration as `key = value` lines, in the config-file syntax.
    std::string to_text() const;
    std::map<std::string, std::string> to_map() const;
};

/// Every accepted key with its value syntax and documented range.
struct KeyInfo {
    std::string name;
    std::string syntax;
    std::string help;
};
const std::vector<KeyInfo>& config_keys();
const std::vector<std::string>& config_commands();

/// Parse `key = value` text. Lists are `a,b,c`, ranges `start:stop:step`
/// (stop included within half a step). Unknown keys are errors.
std::map<std::string, std::string> parse_config_text(const std::string& text, const std::string& source);

/// Values from the file first, then `overrides` (from flags). Checks ranges
/// and that input files exist.
RunConfig resolve_config(const std::string& command, const std::map<std::string, std::string>& file_values,
                         const std::map<std::string, std::string>& overrides);

/// argv form: `fraccap <command> [--key value ...] [--config file]
/// [--print-config] [--no-timestamp]`.
RunConfig parse_config(int argc, const char* const* argv);

/// CSV files and columns written by each command, for --help.
std::string command_outputs(const std::string& command);

std::vector<double> parse_list(const std::string& key, const std::string& text);

/// Runs the command and writes its artifacts. Returns 0, or 2 when the
/// experiment classifies a result as TENSION or VIOLATED.
int run(const RunConfig& config, std::ostream& log);

/// parse_config + run; operational errors print to `err` and return 1.
int cli_main(int argc, const char* const* argv, std::ostream& log, std::ostream& err);

}  // namespace fraccap
