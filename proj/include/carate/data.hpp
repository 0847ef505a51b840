#ifndef CARATE_DATA_HPP
#define CARATE_DATA_HPP

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "carate/common.hpp"

namespace carate {

// One observed trial: outcomes, binary assignments, stratum labels and the
// covariates adjusted in the analysis. Immutable after validation; all
// analysis code treats it as read-only.
struct TrialDataset {
    Eigen::VectorXd outcomes;              // length n
    Eigen::VectorXi assignments;           // length n, each 0 or 1
    std::vector<std::string> strata;       // length n, arbitrary labels
    Eigen::MatrixXd covariates;            // n x p (p may be 0)
    std::vector<std::string> covariate_names; // length p, defaults x1..xp

    Eigen::Index n() const { return outcomes.size(); }
    Eigen::Index p() const { return covariates.cols(); }

    // Throws ValidationError on shape mismatch, non-binary assignment or a
    // non-finite value anywhere.
    void validate() const;
};

struct StratumSummary {
    std::string label;
    int index = 0;             // dense 0..K-1, sorted-label order
    int n_units = 0;           // n_k
    int n_treated = 0;         // n_k1
    int n_control = 0;         // n_k0
    double share = 0.0;        // p_nk = n_k / n
    double treated_fraction = 0.0; // pi_nk = n_k1 / n_k
    std::optional<double> mean_treated;  // Ybar_{k,1}, absent when arm empty
    std::optional<double> mean_control;  // Ybar_{k,0}
    std::vector<int> unit_rows;          // row indices, dataset order
};

// One summary per distinct label, sorted by label. Labels map to dense
// indices in sorted order so downstream output is deterministic.
std::vector<StratumSummary> build_strata(const TrialDataset& data);

// Per-stratum slice of a dataset, used by every estimator.
struct StratumData {
    StratumSummary summary;
    Eigen::MatrixXd x;   // n_k x p
    Eigen::VectorXd y;   // n_k
    Eigen::VectorXi a;   // n_k
};

std::vector<StratumData> split_by_stratum(const TrialDataset& data);
std::vector<StratumData> split_by_stratum(const TrialDataset& data,
                                          const std::vector<StratumSummary>& summaries);

} // namespace carate

#endif
