#include "carate/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>

namespace carate {

namespace {

std::string trim(const std::string& text) {
    const auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

double parse_number(const std::string& text, const std::string& key) {
    try {
        std::size_t used = 0;
        const double value = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw ValidationError("invalid numeric value '" + text + "' for key '" + key + "'");
    }
}

long parse_integer(const std::string& text, const std::string& key) {
    const double value = parse_number(text, key);
    if (value != std::floor(value)) {
        throw ValidationError("key '" + key + "' needs an integer, got '" + text + "'");
    }
    return static_cast<long>(value);
}

std::string format_ratio(double ratio) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%g", ratio);
    return buffer;
}

const std::set<std::string> kKnownKeys = {
    "name",    "model",     "n",          "p",        "r",          "p0",
    "scale",   "rho",       "nu",         "stratum_probs", "noise_sd", "coef_seed",
    "scheme",  "block_size", "lambda",    "pi",       "alpha",      "estimators",
    "replicates", "seed"};

} // namespace

std::vector<ScenarioRun> parse_scenarios(std::istream& in, const std::string& name_hint) {
    std::map<std::string, std::string> values;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("line " + std::to_string(line_number) +
                                  ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!kKnownKeys.count(key)) {
            throw ValidationError("unknown config key '" + key + "'");
        }
        values[key] = value;
    }

    auto get = [&](const std::string& key, const std::string& fallback) {
        const auto it = values.find(key);
        return it == values.end() ? fallback : it->second;
    };

    ScenarioRun base;
    base.name = get("name", name_hint);

    const long model = parse_integer(get("model", "1"), "model");
    if (model != 1 && model != 2) throw ValidationError("model must be 1 or 2");
    base.config.model = model == 1 ? Model::One : Model::Two;

    base.config.p0 = static_cast<int>(parse_integer(get("p0", "30"), "p0"));
    const std::string scale = get("scale", "ar1");
    if (scale == "ar1") base.config.scale = ScaleKind::Ar1;
    else if (scale == "identity") base.config.scale = ScaleKind::Identity;
    else throw ValidationError("scale must be 'ar1' or 'identity'");
    base.config.ar_rho = parse_number(get("rho", "0.1"), "rho");
    base.config.t_dof = static_cast<int>(parse_integer(get("nu", "5"), "nu"));
    base.config.noise_sd = parse_number(get("noise_sd", "0.1"), "noise_sd");
    base.config.coef_seed =
        static_cast<std::uint64_t>(parse_integer(get("coef_seed", "1"), "coef_seed"));
    base.config.alpha = parse_number(get("alpha", "0.05"), "alpha");

    if (values.count("stratum_probs")) {
        base.config.stratum_probs.clear();
        for (const auto& item : split_list(values["stratum_probs"])) {
            base.config.stratum_probs.push_back(parse_number(item, "stratum_probs"));
        }
    }

    base.config.scheme.kind = scheme_kind_from_string(get("scheme", "permuted-block"));
    base.config.scheme.block_size =
        static_cast<int>(parse_integer(get("block_size", "6"), "block_size"));
    base.config.scheme.lambda = parse_number(get("lambda", "0.666666666666666667"), "lambda");
    if (values.count("pi")) {
        base.config.scheme.target_pi.clear();
        for (const auto& item : split_list(values["pi"])) {
            base.config.scheme.target_pi.push_back(parse_number(item, "pi"));
        }
    }

    for (const auto& item : split_list(get("estimators", "unadjusted, ols, oracle, feasible"))) {
        base.kinds.push_back(estimator_kind_from_string(item));
    }
    base.replicates = static_cast<int>(parse_integer(get("replicates", "2"), "replicates"));
    base.seed = static_cast<std::uint64_t>(parse_integer(get("seed", "1"), "seed"));

    if (values.count("p") && values.count("r")) {
        throw ValidationError("give either 'p' or 'r', not both");
    }

    std::vector<long> n_grid;
    for (const auto& item : split_list(get("n", "1000"))) {
        n_grid.push_back(parse_integer(item, "n"));
    }
    std::vector<long> p_grid;
    std::vector<double> r_grid;
    if (values.count("r")) {
        for (const auto& item : split_list(values["r"])) {
            r_grid.push_back(parse_number(item, "r"));
        }
    } else {
        for (const auto& item : split_list(get("p", "30"))) {
            p_grid.push_back(parse_integer(item, "p"));
        }
    }

    const bool n_gridded = n_grid.size() > 1;
    const bool dim_gridded = p_grid.size() > 1 || r_grid.size() > 1;

    std::vector<ScenarioRun> runs;
    for (const long n : n_grid) {
        const std::size_t dims = r_grid.empty() ? p_grid.size() : r_grid.size();
        for (std::size_t d = 0; d < dims; ++d) {
            ScenarioRun run = base;
            run.config.n = static_cast<int>(n);
            if (!r_grid.empty()) {
                run.ratio = r_grid[d];
                run.config.p = static_cast<int>(std::ceil(r_grid[d] * n));
            } else {
                run.config.p = static_cast<int>(p_grid[d]);
            }
            std::string name = base.name;
            if (n_gridded) name += "_n" + std::to_string(n);
            if (dim_gridded) {
                name += r_grid.empty() ? "_p" + std::to_string(run.config.p)
                                       : "_r" + format_ratio(run.ratio);
            }
            run.name = name;
            run.config.validate();
            runs.push_back(std::move(run));
        }
    }
    return runs;
}

std::vector<ScenarioRun> load_scenarios(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open scenario file: " + path);
    }
    std::string name = path;
    const auto slash = name.find_last_of('/');
    if (slash != std::string::npos) name = name.substr(slash + 1);
    const auto dot = name.find_last_of('.');
    if (dot != std::string::npos && dot > 0) name = name.substr(0, dot);
    return parse_scenarios(in, name);
}

} // namespace carate
