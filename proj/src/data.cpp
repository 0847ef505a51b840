#include "carate/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace carate {

void TrialDataset::validate() const {
    const Eigen::Index count = outcomes.size();
    if (count < 2) {
        throw ValidationError("dataset needs at least 2 units, got " + std::to_string(count));
    }
    if (assignments.size() != count || static_cast<Eigen::Index>(strata.size()) != count ||
        covariates.rows() != count) {
        throw ValidationError("dataset fields disagree on n");
    }
    if (!covariate_names.empty() &&
        static_cast<Eigen::Index>(covariate_names.size()) != covariates.cols()) {
        throw ValidationError("covariate name count does not match covariate columns");
    }
    for (Eigen::Index i = 0; i < count; ++i) {
        if (assignments[i] != 0 && assignments[i] != 1) {
            throw ValidationError("invalid assignment at row " + std::to_string(i) +
                                  ": values must be 0 or 1");
        }
        if (!std::isfinite(outcomes[i])) {
            throw ValidationError("non-finite outcome at row " + std::to_string(i));
        }
        if (strata[i].empty()) {
            throw ValidationError("empty stratum label at row " + std::to_string(i));
        }
    }
    if (!covariates.allFinite()) {
        throw ValidationError("non-finite covariate value");
    }
}

std::vector<StratumSummary> build_strata(const TrialDataset& data) {
    data.validate();

    std::map<std::string, int> index_of; // sorted by label
    for (const auto& label : data.strata) index_of.emplace(label, 0);
    int next = 0;
    for (auto& [label, idx] : index_of) idx = next++;

    const int n_strata = next;
    std::vector<StratumSummary> out(n_strata);
    for (const auto& [label, idx] : index_of) {
        out[idx].label = label;
        out[idx].index = idx;
    }

    const Eigen::Index count = data.n();
    std::vector<double> sum_treated(n_strata, 0.0), sum_control(n_strata, 0.0);
    for (Eigen::Index i = 0; i < count; ++i) {
        auto& s = out[index_of.at(data.strata[i])];
        s.unit_rows.push_back(static_cast<int>(i));
        ++s.n_units;
        if (data.assignments[i] == 1) {
            ++s.n_treated;
            sum_treated[s.index] += data.outcomes[i];
        } else {
            ++s.n_control;
            sum_control[s.index] += data.outcomes[i];
        }
    }
    for (auto& s : out) {
        s.share = static_cast<double>(s.n_units) / static_cast<double>(count);
        s.treated_fraction = static_cast<double>(s.n_treated) / static_cast<double>(s.n_units);
        if (s.n_treated > 0) s.mean_treated = sum_treated[s.index] / s.n_treated;
        if (s.n_control > 0) s.mean_control = sum_control[s.index] / s.n_control;
    }
    return out;
}

std::vector<StratumData> split_by_stratum(const TrialDataset& data,
                                          const std::vector<StratumSummary>& summaries) {
    std::vector<StratumData> out;
    out.reserve(summaries.size());
    for (const auto& summary : summaries) {
        StratumData sd;
        sd.summary = summary;
        const int nk = summary.n_units;
        sd.x.resize(nk, data.p());
        sd.y.resize(nk);
        sd.a.resize(nk);
        for (int r = 0; r < nk; ++r) {
            const int row = summary.unit_rows[r];
            sd.x.row(r) = data.covariates.row(row);
            sd.y[r] = data.outcomes[row];
            sd.a[r] = data.assignments[row];
        }
        out.push_back(std::move(sd));
    }
    return out;
}

std::vector<StratumData> split_by_stratum(const TrialDataset& data) {
    return split_by_stratum(data, build_strata(data));
}

} // namespace carate
