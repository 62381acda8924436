#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kinlab/config.hpp"

namespace kinlab {

/// Ordinary least squares on (x,y) or (log x, log y).
struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    bool log_log = false;
    int points = 0;
};

RateFit fit_rate(const std::vector<std::pair<double, double>>& pts, bool log_log);

/// One line of summary.csv. A check passes iff lhs <= rhs; margin = rhs - lhs.
struct SummaryRow {
    std::string experiment;
    std::string check;
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

SummaryRow make_check(const std::string& experiment, const std::string& check, double lhs, double rhs);

struct ExperimentContext {
    std::string out_dir;
    int threads = 1;
    std::vector<SummaryRow> summary;

    void check(const std::string& experiment, const std::string& name, double lhs, double rhs);
    std::string path(const std::string& filename) const;
};

struct ExperimentInfo {
    std::string id;
    std::string description;
    std::function<void(const ConfigSection&, ExperimentContext&)> run;
};

const std::vector<ExperimentInfo>& experiment_registry();

/// Runs every experiment that has a section in the config, writes one CSV
/// per experiment plus summary.csv into out_dir, prints one pass/fail line
/// per check, and returns the number of failed checks.
int run_experiments(const Config& cfg, const std::string& out_dir, int threads, bool quiet = false);

/// Re-evaluates the pass/fail column of a stored summary.csv from its
/// lhs/rhs columns. Returns 0 when consistent and all rows pass.
int verify_summary(const std::string& csv_path, bool quiet = false);

}  // namespace kinlab
