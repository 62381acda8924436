#include "kinlab/harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "kinlab/csv.hpp"

namespace kinlab {

RateFit fit_rate(const std::vector<std::pair<double, double>>& pts, bool log_log) {
    if (pts.size() < 3) throw std::invalid_argument("fit_rate: need at least 3 points");
    std::vector<double> xs, ys;
    for (auto [x, y] : pts) {
        if (log_log) {
            if (!(x > 0.0 && y > 0.0))
                throw std::invalid_argument("fit_rate: log-log fit needs positive data");
            xs.push_back(std::log(x));
            ys.push_back(std::log(y));
        } else {
            xs.push_back(x);
            ys.push_back(y);
        }
    }
    const std::size_t n = xs.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("fit_rate: degenerate abscissae");
    RateFit fit;
    fit.log_log = log_log;
    fit.points = static_cast<int>(n);
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy > 0.0) {
        double ss_res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
            ss_res += r * r;
        }
        fit.r2 = 1.0 - ss_res / syy;
    } else {
        fit.r2 = 1.0;  // constant data, perfectly fit by the constant line
    }
    return fit;
}

SummaryRow make_check(const std::string& experiment, const std::string& check, double lhs, double rhs) {
    SummaryRow row;
    row.experiment = experiment;
    row.check = check;
    row.lhs = lhs;
    row.rhs = rhs;
    row.pass = lhs <= rhs;
    return row;
}

void ExperimentContext::check(const std::string& experiment, const std::string& name, double lhs,
                              double rhs) {
    summary.push_back(make_check(experiment, name, lhs, rhs));
}

std::string ExperimentContext::path(const std::string& filename) const {
    return out_dir + "/" + filename;
}

int run_experiments(const Config& cfg_in, const std::string& out_dir, int threads, bool quiet) {
    Config cfg = cfg_in;
    std::filesystem::create_directories(out_dir);
    ExperimentContext ctx;
    ctx.out_dir = out_dir;
    ctx.threads = threads;

    for (const auto& info : experiment_registry()) {
        ConfigSection* sec = cfg.find(info.id);
        if (!sec) continue;
        info.run(*sec, ctx);
        sec->finish();
    }

    CsvWriter summary(out_dir + "/summary.csv");
    summary.row({"experiment", "check_name", "lhs", "rhs", "margin", "pass"});
    int failures = 0;
    for (const auto& row : ctx.summary) {
        summary.row({row.experiment, row.check, CsvWriter::num(row.lhs), CsvWriter::num(row.rhs),
                     CsvWriter::num(row.rhs - row.lhs), row.pass ? "1" : "0"});
        if (!row.pass) ++failures;
        if (!quiet)
            std::printf("[%s] %s :: %s (lhs=%.6g rhs=%.6g)\n", row.pass ? "PASS" : "FAIL",
                        row.experiment.c_str(), row.check.c_str(), row.lhs, row.rhs);
    }
    if (!quiet)
        std::printf("%zu checks, %d failure(s); results in %s\n", ctx.summary.size(), failures,
                    out_dir.c_str());
    return failures;
}

int verify_summary(const std::string& csv_path, bool quiet) {
    auto rows = read_csv(csv_path);
    if (rows.empty() || rows[0].size() < 6)
        throw std::runtime_error("verify: not a summary csv: " + csv_path);
    int bad = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        double lhs = std::stod(r[2]);
        double rhs = std::stod(r[3]);
        bool stored_pass = r[5] == "1";
        bool recomputed = lhs <= rhs;
        bool consistent = stored_pass == recomputed;
        if (!consistent || !recomputed) {
            ++bad;
            if (!quiet)
                std::printf("[%s] %s :: %s (stored=%s recomputed=%s)\n",
                            consistent ? "FAIL" : "INCONSISTENT", r[0].c_str(), r[1].c_str(),
                            stored_pass ? "pass" : "fail", recomputed ? "pass" : "fail");
        }
    }
    if (!quiet) std::printf("verify: %zu rows, %d problem(s)\n", rows.size() - 1, bad);
    return bad;
}

}  // namespace kinlab
