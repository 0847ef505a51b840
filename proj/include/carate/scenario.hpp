#ifndef CARATE_SCENARIO_HPP
#define CARATE_SCENARIO_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "carate/dgp.hpp"
#include "carate/estimators.hpp"

namespace carate {

// One grid point of a simulation scenario file.
struct ScenarioRun {
    std::string name;
    DGPConfig config;
    std::vector<EstimatorKind> kinds;
    int replicates = 2;
    std::uint64_t seed = 1;
    double ratio = -1.0; // p/n ratio when the grid was given via `r`, else -1
};

// Parses the key = value scenario format (see configs/example.cfg). The keys
// n, p and r accept comma lists and expand into a cartesian grid, one
// ScenarioRun per point. Unknown keys raise ValidationError naming the key.
std::vector<ScenarioRun> parse_scenarios(std::istream& in, const std::string& name_hint);
std::vector<ScenarioRun> load_scenarios(const std::string& path);

} // namespace carate

#endif
