#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "carate/csv.hpp"
#include "carate/data.hpp"
#include "carate/dgp.hpp"
#include "carate/randomize.hpp"

using namespace carate;

namespace {

TrialDataset tiny_dataset() {
    TrialDataset data;
    data.outcomes.resize(3);
    data.outcomes << 1.0, 2.0, 3.0;
    data.assignments.resize(3);
    data.assignments << 1, 0, 1;
    data.strata = {"A", "A", "B"};
    data.covariates.resize(3, 0);
    return data;
}

} // namespace

TEST_CASE("build_strata counts per label") {
    const auto summaries = build_strata(tiny_dataset());
    REQUIRE(summaries.size() == 2);
    CHECK(summaries[0].label == "A");
    CHECK(summaries[0].n_units == 2);
    CHECK(summaries[0].n_treated == 1);
    CHECK(summaries[0].treated_fraction == doctest::Approx(0.5));
    CHECK(summaries[1].label == "B");
    CHECK(summaries[1].n_units == 1);
    CHECK(summaries[1].treated_fraction == doctest::Approx(1.0));

    double share_total = 0.0;
    for (const auto& s : summaries) share_total += s.share;
    CHECK(share_total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single stratum, all treated flags the undefined control mean") {
    TrialDataset data;
    data.outcomes.resize(2);
    data.outcomes << 5.0, 6.0;
    data.assignments.resize(2);
    data.assignments << 1, 1;
    data.strata = {"only", "only"};
    data.covariates.resize(2, 0);
    const auto summaries = build_strata(data);
    REQUIRE(summaries.size() == 1);
    CHECK(summaries[0].treated_fraction == doctest::Approx(1.0));
    CHECK(summaries[0].mean_treated.has_value());
    CHECK_FALSE(summaries[0].mean_control.has_value());
}

TEST_CASE("every unit lands in exactly one stratum") {
    std::mt19937_64 gen(5);
    std::uniform_int_distribution<int> label(0, 4);
    TrialDataset data;
    const int n = 200;
    data.outcomes = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
    data.assignments.resize(n);
    data.strata.resize(n);
    for (int i = 0; i < n; ++i) {
        data.assignments[i] = i % 2;
        data.strata[i] = std::to_string(label(gen));
    }
    data.covariates.resize(n, 0);

    const auto summaries = build_strata(data);
    std::set<int> seen;
    int total = 0;
    for (const auto& s : summaries) {
        for (const int row : s.unit_rows) {
            CHECK(seen.insert(row).second); // no duplicates
            ++total;
        }
    }
    CHECK(total == n);
}

TEST_CASE("summaries are invariant to row permutation") {
    std::mt19937_64 gen(9);
    TrialDataset data = tiny_dataset();
    data.outcomes.resize(6);
    data.outcomes << 1, 2, 3, 4, 5, 6;
    data.assignments.resize(6);
    data.assignments << 1, 0, 1, 0, 1, 0;
    data.strata = {"A", "B", "A", "B", "A", "B"};
    data.covariates.resize(6, 0);

    const auto before = build_strata(data);

    std::vector<int> order = {0, 1, 2, 3, 4, 5};
    std::shuffle(order.begin(), order.end(), gen);
    TrialDataset shuffled = data;
    for (int i = 0; i < 6; ++i) {
        shuffled.outcomes[i] = data.outcomes[order[i]];
        shuffled.assignments[i] = data.assignments[order[i]];
        shuffled.strata[i] = data.strata[order[i]];
    }
    const auto after = build_strata(shuffled);

    REQUIRE(before.size() == after.size());
    for (std::size_t k = 0; k < before.size(); ++k) {
        CHECK(before[k].label == after[k].label);
        CHECK(before[k].n_units == after[k].n_units);
        CHECK(before[k].n_treated == after[k].n_treated);
        CHECK(*before[k].mean_treated == doctest::Approx(*after[k].mean_treated).epsilon(1e-15));
        CHECK(*before[k].mean_control == doctest::Approx(*after[k].mean_control).epsilon(1e-15));
    }
}

TEST_CASE("stratum shares concentrate at the target probabilities") {
    const std::vector<double> probs = {0.2, 0.2, 0.3, 0.3};
    const int n = 10000;
    const auto labels = draw_strata(probs, n, 20240101);
    TrialDataset data;
    data.outcomes = Eigen::VectorXd::Zero(n);
    data.assignments.resize(n);
    data.strata.resize(n);
    for (int i = 0; i < n; ++i) {
        data.assignments[i] = i % 2;
        data.strata[i] = std::to_string(labels[i] + 1);
    }
    data.covariates.resize(n, 0);
    const auto summaries = build_strata(data);
    REQUIRE(summaries.size() == 4);
    for (int k = 0; k < 4; ++k) {
        const double target = probs[k];
        const double envelope = 4.0 * std::sqrt(target * (1.0 - target) / n);
        CHECK(std::abs(summaries[k].share - target) <= envelope);
    }
}

TEST_CASE("dataset validation rejects bad inputs") {
    TrialDataset data = tiny_dataset();
    data.assignments[1] = 2;
    CHECK_THROWS_AS(data.validate(), ValidationError);

    data = tiny_dataset();
    data.outcomes[0] = std::nan("");
    CHECK_THROWS_AS(data.validate(), ValidationError);

    data = tiny_dataset();
    data.strata.pop_back();
    CHECK_THROWS_AS(data.validate(), ValidationError);
}

TEST_CASE("csv parse of a small file") {
    std::istringstream in("y,arm,stratum,x1\n1.5,1,A,0.25\n2.5,0,A,-1\n0,1,B,3\n4,0,B,0.125\n");
    const auto data = dataset_from_table(read_csv(in), CsvSchema{});
    CHECK(data.n() == 4);
    CHECK(data.p() == 1);
    CHECK(build_strata(data).size() == 2);
    CHECK(data.outcomes[0] == 1.5);
    CHECK(data.covariates(2, 0) == 3.0);
}

TEST_CASE("csv parse rejects bad arm values and missing columns") {
    std::istringstream bad_arm("y,arm,stratum\n1,2,A\n2,0,A\n");
    CHECK_THROWS_WITH_AS(dataset_from_table(read_csv(bad_arm), CsvSchema{}),
                         doctest::Contains("invalid assignment"), ValidationError);

    std::istringstream missing("y,stratum\n1,A\n");
    CHECK_THROWS_WITH_AS(dataset_from_table(read_csv(missing), CsvSchema{}),
                         doctest::Contains("missing column"), ValidationError);

    std::istringstream empty("");
    CHECK_THROWS_WITH_AS(read_csv(empty), doctest::Contains("empty file"), ValidationError);

    std::istringstream non_numeric("y,arm,stratum\nfoo,1,A\n");
    CHECK_THROWS_WITH_AS(dataset_from_table(read_csv(non_numeric), CsvSchema{}),
                         doctest::Contains("non-numeric"), ValidationError);
}

TEST_CASE("save/load round-trips a generated trial bit-exactly") {
    DGPConfig config;
    config.n = 1000;
    config.p = 30;
    const auto trial = generate_trial(config, 77, 0);

    std::ostringstream out;
    save_csv(out, trial.data);
    std::istringstream in(out.str());
    const auto loaded = dataset_from_table(read_csv(in), CsvSchema{});

    REQUIRE(loaded.n() == trial.data.n());
    REQUIRE(loaded.p() == trial.data.p());
    CHECK(loaded.outcomes == trial.data.outcomes);
    CHECK(loaded.assignments == trial.data.assignments);
    CHECK(loaded.strata == trial.data.strata);
    CHECK(loaded.covariates == trial.data.covariates);
}
