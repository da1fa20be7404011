#ifndef CWR_HARNESS_HPP
#define CWR_HARNESS_HPP

#include "cwr/accounting.hpp"
#include "cwr/dual.hpp"
#include "cwr/instance.hpp"
#include "cwr/opt.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace cwr {

struct NamedInstance {
    std::string name;
    Instance instance;
};

struct ExperimentOptions {
    bool rounding = false;
    int rounding_max_k = 4;          // rounding runs only when k <= this
    std::uint64_t rounding_seed = 0;  // instance id is added per instance
    long n_override = 0;
    bool oracle = false;
    OptLimits oracle_limits;
    unsigned threads = 0;  // 0 = hardware concurrency
};

struct RoundingSummary {
    long N = 0;
    long follow_index = 0;
    Rational expected_cost;
    Rational integral_cost;
    Rational discretized_cost;
    std::size_t violations = 0;
    std::size_t warnings = 0;
};

struct OracleSummary {
    long opt_cost = 0;
    bool lower_ok = true;  // dual / 5 <= opt
    bool upper_ok = true;  // cost <= 2 ln(1+k) (mk + 5 opt)
};

struct TraceResult {
    std::size_t id = 0;
    std::string name;
    int m = 0;
    int k = 0;
    std::size_t universe = 0;
    std::size_t length = 0;
    Rational cost;
    std::size_t invariant_violations = 0;
    std::size_t step_lemma_violations = 0;
    std::size_t phase_drop_violations = 0;
    CostBoundReport cost_bound;
    Certificate certificate;
    std::optional<RoundingSummary> rounding;
    std::optional<OracleSummary> oracle;
    std::vector<std::string> failures;

    bool ok() const { return failures.empty(); }
};

/// Engine with invariant monitor and potential tracker, accounting checks,
/// certificate, then optional rounding and oracle. Errors become failures.
TraceResult evaluate(const NamedInstance& instance, std::size_t id, const ExperimentOptions& options);

struct ExperimentReport {
    std::vector<TraceResult> traces;  // ordered by id

    std::size_t failing_traces() const;
    std::size_t check_failures() const;
};

/// Evaluates every instance on a worker pool; results come back in input order.
ExperimentReport run_experiment(const std::vector<NamedInstance>& instances, const ExperimentOptions& options);

void write_trace_csv(std::ostream& out, const ExperimentReport& report);
/// {traces, failures, check_failures, max_slack, max_slack_f64, worst_ratio_bound};
/// the worst ratio skips traces whose lower bound is 0.
std::string summary_json(const ExperimentReport& report);

// Acceptance battery.

struct SuiteOptions {
    std::uint64_t seed = 0;
    std::size_t traces = 1000;
    std::size_t tiny = 200;
    std::size_t paging = 200;
    std::size_t rm_seeds = 10000;
    long n_override = 0;
    int oracle_max_universe = 8;
    unsigned threads = 0;
};

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::vector<std::pair<std::string, bool>> parts;  // sub-checks
    std::string detail;
    double seconds = 0;     // wall time, kept out of the written files
    double time_limit = 0;  // 0 = none
};

struct SuiteResult {
    std::vector<CriterionResult> criteria;
    std::map<std::string, std::string> files;  // file name -> bytes

    std::size_t failed() const;
};

/// Criteria 1 to 6; the files hold every CSV/JSON output of the run.
SuiteResult run_suite(const SuiteOptions& options);

/// Runs the battery twice and appends the byte-identity criterion to the
/// first run.
SuiteResult run_suite_with_determinism(const SuiteOptions& options);

std::string format_criterion(const CriterionResult& c);
void write_suite_files(const SuiteResult& result, const std::filesystem::path& dir);

} // namespace cwr

#endif
