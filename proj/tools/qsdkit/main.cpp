#include "report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

namespace {

using qsd::cli::RunConfig;

// Catalog parameters arrive as leftover "--name value" or "--name=value" pairs.
qsd::Bindings parse_params(const std::vector<std::string>& extras) {
    qsd::Bindings p;
    for (std::size_t i = 0; i < extras.size(); ++i) {
        std::string key = extras[i];
        if (key.rfind("--", 0) != 0)
            throw qsd::Error(qsd::Errc::ConfigError, "unexpected argument '" + key + "'");
        key = key.substr(2);
        std::string value;
        if (auto eq = key.find('='); eq != std::string::npos) {
            value = key.substr(eq + 1);
            key = key.substr(0, eq);
        } else if (i + 1 < extras.size()) {
            value = extras[++i];
        } else {
            throw qsd::Error(qsd::Errc::ConfigError, "parameter '" + key + "' has no value");
        }
        try {
            std::size_t used = 0;
            p[key] = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::exception&) {
            throw qsd::Error(qsd::Errc::ConfigError, "parameter '" + key + "' needs a number, got '" + value + "'");
        }
    }
    return p;
}

qsd::Bindings read_params_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw qsd::Error(qsd::Errc::ConfigError, "cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw qsd::Error(qsd::Errc::ConfigError, path + ": " + e.what());
    }
    if (!j.is_object()) throw qsd::Error(qsd::Errc::ConfigError, path + ": expected an object of numbers");
    qsd::Bindings p;
    for (const auto& [k, v] : j.items()) {
        if (!v.is_number()) throw qsd::Error(qsd::Errc::ConfigError, path + ": '" + k + "' is not a number");
        p[k] = v.get<double>();
    }
    return p;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"qsdkit: quasistationary distributions and extinction times of density-dependent "
                 "population processes.\nModels are JSON files or catalog names (sis1d, sis_hetero, "
                 "linear_birth_quadratic_death, bc23_bd, competition, nonrev2d); catalog parameters are "
                 "passed as --name value.\nExit codes: 0 ok, 1 usage or configuration error, 2 condition "
                 "failure, 3 numerical error."};
    app.require_subcommand(1);
    app.allow_extras();

    RunConfig c;
    std::string format = "auto";
    std::uint64_t seed = 0;
    std::string params_file;
    std::vector<long> truncation;

    app.add_option("--tol", c.tol, "Tolerance for condition residuals and theta consistency")->capture_default_str();
    app.add_option("--samples", c.samples, "Halton sample points for condition checks")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "RNG seed (required when simulating)");
    app.add_option("--out", c.out, "Output directory (default: write to stdout)");
    app.add_option("--format", format, "Output format: auto, json, csv or table (auto: table for check, csv for "
                                       "potential, json otherwise)")
        ->check(CLI::IsMember({"auto", "json", "csv", "table"}))
        ->capture_default_str();
    app.add_option("--params-file", params_file, "JSON object of catalog parameter overrides");

    struct Sub {
        const char* name;
        const char* help;
    };
    const Sub subs[] = {
        {"check", "Structural assumptions and reversibility conditions"},
        {"equilibria", "Interior stable equilibrium and Jacobians of the fluid limit"},
        {"potential", "V, V0 and the WKB approximation on a grid (CSV)"},
        {"qsd-approx", "WKB approximation of the QSD at one state"},
        {"tau", "Asymptotic mean extinction time"},
        {"oracle", "Exact QSD and extinction time of the truncated chain"},
        {"simulate", "Gillespie simulation of extinction times"},
        {"compare", "Asymptotic vs exact vs simulated extinction times over several N"},
    };
    for (const auto& s : subs) {
        CLI::App* sub = app.add_subcommand(s.name, s.help);
        sub->fallthrough();
        sub->allow_extras();
        sub->add_option("model", c.model, "Model JSON file or catalog name")->required();
        const std::string cmd = s.name;
        sub->callback([&c, cmd] { c.command = cmd; });
        if (cmd != "check" && cmd != "equilibria")
            sub->add_option("--N", c.N, "System size(s), comma separated")->delimiter(',')->required();
        if (cmd == "potential") {
            sub->add_option("--grid", c.grid, "lo:hi:n, or one triple per axis joined by ',' (default "
                                              "0.05..0.95 of each axis, 10 points)");
        }
        if (cmd == "potential" || cmd == "qsd-approx" || cmd == "tau" || cmd == "compare")
            sub->add_option("--delta", c.delta, "Minimum scaled distance to the boundary for the WKB body")
                ->capture_default_str();
        if (cmd == "qsd-approx")
            sub->add_option("--x", c.x, "State, comma separated (default: nearest to N y*)")->delimiter(',');
        if (cmd == "tau" || cmd == "compare")
            sub->add_option("--order", c.order, "Coordinate ordering for the nested partial equilibria, 1-based")
                ->delimiter(',');
        if (cmd == "oracle" || cmd == "simulate" || cmd == "compare")
            sub->add_option("--truncate", truncation, "Per-axis truncation bound, comma separated")->delimiter(',');
        if (cmd == "simulate" || cmd == "compare") {
            sub->add_option("--reps", c.reps, "Simulation replicates")->capture_default_str();
            sub->add_option("--threads", c.threads, "Worker threads (0: all cores)")->capture_default_str();
        }
        if (cmd == "simulate") {
            sub->add_option("--init", c.init, "Initial distribution: qsd (exact QSD) or point")
                ->check(CLI::IsMember({"qsd", "point"}))
                ->capture_default_str();
            sub->add_option("--start", c.start, "Start state for --init point, comma separated")->delimiter(',');
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : qsd::cli::kExitUsage;
    }

    try {
        if (!params_file.empty()) c.params = read_params_file(params_file);
        for (const auto& [k, v] : parse_params(app.remaining(true))) c.params[k] = v;
    } catch (const qsd::Error& e) {
        std::cerr << "qsdkit: " << e.what() << "\n";
        return qsd::cli::kExitUsage;
    }
    if (*seed_opt) c.seed = seed;
    if (!truncation.empty()) c.truncation = truncation;
    c.format = format == "json"    ? qsd::cli::Format::Json
               : format == "csv"   ? qsd::cli::Format::Csv
               : format == "table" ? qsd::cli::Format::Table
                                   : qsd::cli::Format::Auto;
    return qsd::cli::run(c, std::cout, std::cerr);
}
