#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace parrep {

struct ValidateOptions {
    bool quick = false;        // smaller samples, looser thresholds
    bool fault = false;        // perturbs the oracle's sigma_1 by 10%; the suite must then fail
    std::uint64_t seed = 2024;
    std::size_t workers = 1;
};

/// One statistical check: `statistic` is compared against `threshold` as
/// described by `rule`.
struct CheckResult {
    std::string name;
    double statistic = 0;
    double threshold = 0;
    std::string rule;
    bool passed = false;
};

/// QSD eigenvalues of the two 4x4 generators and the metastability verdicts.
std::vector<CheckResult> check_eigen_fixtures(const ValidateOptions& opt);
/// Exit time and exit step laws from the QSDs, exit-state independence, R T* vs T.
std::vector<CheckResult> check_exit_laws(const ValidateOptions& opt);
/// R (N* - 1) + K law, exit-state law across R, exit state vs stage time.
std::vector<CheckResult> check_parallel_identities(const ValidateOptions& opt);
/// Mean parallel-stage contributions against the oracle, R in {1, 4}.
std::vector<CheckResult> check_unbiasedness(const ValidateOptions& opt);
/// One-cycle error against the serial expectation as the decorrelation threshold grows.
std::vector<CheckResult> check_error_decay(const ValidateOptions& opt);

/// All of the above.
std::vector<CheckResult> run_validation(const ValidateOptions& opt);

void print_checks(std::ostream& out, const std::vector<CheckResult>& checks);
bool all_passed(const std::vector<CheckResult>& checks);

}  // namespace parrep
