#include "cwr/accounting.hpp"
#include "cwr/dual.hpp"
#include "cwr/engine.hpp"
#include "cwr/harness.hpp"
#include "cwr/invariants.hpp"
#include "cwr/opt.hpp"
#include "cwr/paging.hpp"
#include "cwr/rounding.hpp"
#include "cwr/workloads.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace cwr;
using json = nlohmann::ordered_json;

namespace {

// Writes to the file when a path is given, stdout otherwise.
void emit(const std::string& path, const std::string& bytes)
{
    if (path.empty() || path == "-") {
        std::cout << bytes;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    out << bytes;
    if (!out)
        throw std::runtime_error("cannot write " + path);
}

Problem load_problem(const std::string& path)
{
    if (path.empty())
        throw std::runtime_error("--trace is required");
    return Problem(load_instance(path));
}

std::vector<std::string> page_names(const Problem& problem, const std::vector<PageId>& ids)
{
    std::vector<std::string> out;
    for (PageId p : ids)
        out.push_back(format_page_ref(problem.universe.page(p)));
    return out;
}

int cmd_gen(const WorkloadSpec& base, const std::string& model, bool random, const std::string& out)
{
    WorkloadSpec spec = base;
    if (random) {
        spec = random_spec(base.seed, WorkloadLimits{});
    } else {
        const auto parsed = parse_workload_model(model);
        if (!parsed)
            throw std::runtime_error("unknown model " + model);
        spec.model = *parsed;
    }
    const auto problems = check_spec(spec);
    if (!problems.empty()) {
        for (const auto& p : problems)
            std::cerr << "spec: " << p << '\n';
        return 2;
    }
    emit(out, serialize_instance(generate(spec)) + "\n");
    return 0;
}

int cmd_run_trace(const std::string& trace, const std::string& out, const std::string& phases)
{
    const Problem problem = load_problem(trace);
    const CheckedRun checked = run_checked(problem);
    const AccountedRun acc = run_accounted(problem);
    const auto lemma = check_step_lemma(acc.run.log, acc.potentials, problem);
    const auto drops = check_phase_drops(acc.run.log, acc.potentials, problem);
    const CostBoundReport bound = check_cost_bound(acc.run.log, problem);

    std::ostringstream csv;
    write_event_csv(csv, checked.run.log, problem);
    if (!out.empty())
        emit(out, csv.str());
    if (!phases.empty())
        emit(phases, phase_records_json(checked.run.log, problem));

    json j;
    j["cost"] = to_fraction_string(checked.run.total_cost);
    j["cost_f64"] = to_double(checked.run.total_cost);
    j["phases"] = checked.run.log.phases.size();
    j["invariant_violations"] = checked.violations.size();
    j["step_lemma_violations"] = lemma.size();
    j["phase_drop_violations"] = drops.size();
    j["cost_bound"] = json::parse(to_json(bound));
    for (const auto& v : checked.violations)
        std::cerr << "invariant at t=" << v.t << ": " << v.what << '\n';
    for (const auto& v : lemma)
        std::cerr << "step lemma at t=" << v.t << ": " << v.what << '\n';
    for (const auto& v : drops)
        std::cerr << "phase drop at t=" << v.t << ": " << v.what << '\n';
    std::cout << j.dump(2) << '\n';
    return checked.violations.empty() && lemma.empty() && drops.empty() && bound.holds ? 0 : 1;
}

int cmd_run_batch(std::size_t batch, std::uint64_t seed, const ExperimentOptions& options, const std::string& out)
{
    std::vector<NamedInstance> instances;
    for (std::size_t i = 0; i < batch; ++i) {
        const WorkloadSpec spec = random_spec(seed + i, WorkloadLimits{});
        instances.push_back({"t" + std::to_string(seed + i) + "-" + to_string(spec.model), generate(spec)});
    }
    const ExperimentReport report = run_experiment(instances, options);
    std::ostringstream csv;
    write_trace_csv(csv, report);
    const std::string summary = summary_json(report);
    if (out.empty()) {
        std::cout << csv.str();
    } else {
        std::filesystem::create_directories(out);
        emit((std::filesystem::path(out) / "traces.csv").string(), csv.str());
        emit((std::filesystem::path(out) / "summary.json").string(), summary);
    }
    std::cerr << summary;
    return report.failing_traces() == 0 ? 0 : 1;
}

int cmd_certify(const std::string& trace, const std::string& out)
{
    const Problem problem = load_problem(trace);
    const RunResult run = run_trace(problem);
    const Certificate cert = certify(run.log, run.total_cost, problem);
    emit(out, to_json(cert) + "\n");
    for (const auto& f : cert.failures)
        std::cerr << f << '\n';
    if (cert.closed_form_mismatches > 0)
        std::cerr << "closed form differs from |C| in " << cert.closed_form_mismatches << " phase(s)\n";
    return cert.valid() && cert.closed_form_mismatches == 0 ? 0 : 1;
}

int cmd_round(const std::string& trace, std::uint64_t seed, long n_override, const std::string& out)
{
    const Problem problem = load_problem(trace);
    const RoundingRun run = run_randomized(problem, seed, n_override);
    std::ostringstream csv;
    write_rounding_csv(csv, run);
    if (!out.empty())
        emit(out, csv.str());
    json j;
    j["N"] = run.N;
    j["follow_index"] = run.follow_index;
    j["fractional_cost"] = to_fraction_string(run.fractional_cost);
    j["discretized_cost"] = to_fraction_string(run.discretized_cost);
    j["expected_cost"] = to_fraction_string(run.expected_cost);
    j["expected_cost_f64"] = to_double(run.expected_cost);
    j["integral_cost"] = to_fraction_string(run.integral_cost);
    j["violations"] = run.violations;
    j["warnings"] = run.warnings;
    std::cout << j.dump(2) << '\n';
    return run.violations.empty() ? 0 : 1;
}

int cmd_opt(const std::string& trace, std::size_t max_universe, const std::string& out)
{
    const Problem problem = load_problem(trace);
    OptLimits limits;
    limits.max_universe = max_universe;
    const OptResult res = brute_opt(problem, limits);
    json j;
    j["opt_cost"] = res.opt_cost;
    json schedule = json::array();
    for (const auto& cache : res.schedule)
        schedule.push_back(page_names(problem, cache));
    j["schedule"] = schedule;
    emit(out, j.dump(2) + "\n");
    return 0;
}

int cmd_paging(const std::string& trace, std::uint64_t seed, const std::string& out)
{
    const Problem problem = load_problem(trace);
    const FmRun fm = run_fm(problem);
    const FmBoundReport rep = check_fm_bound(fm, problem.k());
    if (!out.empty()) {
        std::ostringstream csv;
        csv << "t,cost,phase,psi_before,psi_after,phase_ended,ended_ell\n";
        for (const auto& s : fm.steps)
            csv << s.t << ',' << to_fraction_string(s.cost) << ',' << s.phase << ',' << s.psi_before << ','
                << s.psi_after << ',' << (s.phase_ended ? 1 : 0) << ',' << s.ended_ell << '\n';
        emit(out, csv.str());
    }
    json j;
    j["fm_cost"] = to_fraction_string(fm.cost);
    j["fm_cost_f64"] = to_double(fm.cost);
    j["sum_ell"] = rep.sum_ell;
    j["bound"] = rep.rhs;
    j["bound_holds"] = rep.holds();
    j["rm_cost"] = rm_cost(problem, seed);
    if (problem.horizon() <= 10 && problem.k() <= 3)
        j["rm_expected_cost"] = to_fraction_string(rm_expected_cost_exact(problem));
    for (const auto& v : rep.violations)
        std::cerr << v << '\n';
    std::cout << j.dump(2) << '\n';
    return rep.holds() ? 0 : 1;
}

int cmd_suite(const SuiteOptions& options, const std::string& out)
{
    const SuiteResult result = run_suite_with_determinism(options);
    for (const auto& c : result.criteria)
        std::cout << format_criterion(c) << '\n';
    if (!out.empty())
        write_suite_files(result, out);
    return result.failed() == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Fractional marking with reserves: engine, certificates, rounding and checks"};
    app.require_subcommand(1);

    std::string trace, out, phases, model = "uniform";
    std::uint64_t seed = 0;
    long n_override = 0;
    std::size_t oracle_max_universe = 12;

    auto* gen = app.add_subcommand("gen", "generate a workload trace");
    WorkloadSpec spec;
    bool random = false;
    gen->add_option("--model", model, "zipf, cycle-adversary, isolation-adversary or uniform");
    gen->add_option("--m", spec.m, "number of agents");
    gen->add_option("--k", spec.k, "cache size");
    gen->add_option("--reserves", spec.reserves, "reserve per agent");
    gen->add_option("--pages", spec.pages_per_agent, "pages per agent");
    gen->add_option("--length", spec.length, "number of requests");
    gen->add_option("--zipf-exponent", spec.zipf_exponent, "zipf exponent");
    gen->add_option("--seed", spec.seed, "generator seed");
    gen->add_flag("--random", random, "draw every parameter from the seed");
    gen->add_option("--out", out, "output file (stdout if omitted)");

    auto* run = app.add_subcommand("run", "run the engine with invariant and potential checks");
    std::size_t batch = 0;
    ExperimentOptions exp;
    run->add_option("--trace", trace, "instance file");
    run->add_option("--out", out, "event CSV (single trace) or report directory (batch)");
    run->add_option("--phases", phases, "phase record JSON file");
    run->add_option("--batch", batch, "evaluate this many generated traces instead of --trace");
    run->add_option("--seed", seed, "first generator seed and rounding seed for --batch");
    run->add_flag("--rounding", exp.rounding, "include the rounding run (k <= 4) in --batch");
    run->add_flag("--oracle", exp.oracle, "include the exact optimum in --batch");
    run->add_option("--n-override", n_override, "ensemble size for --batch rounding");
    run->add_option("--oracle-max-universe", oracle_max_universe, "oracle size guard");

    auto* cert = app.add_subcommand("certify", "build and check the dual certificate");
    cert->add_option("--trace", trace, "instance file")->required();
    cert->add_option("--out", out, "certificate JSON (stdout if omitted)");

    auto* round = app.add_subcommand("round", "run the randomized rounding");
    round->add_option("--trace", trace, "instance file")->required();
    round->add_option("--seed", seed, "selects the followed cache state");
    round->add_option("--n-override", n_override, "ensemble size instead of k^3");
    round->add_option("--out", out, "per-step audit CSV");

    auto* opt = app.add_subcommand("opt", "exact offline optimum for small instances");
    opt->add_option("--trace", trace, "instance file")->required();
    opt->add_option("--oracle-max-universe", oracle_max_universe, "largest universe the oracle accepts");
    opt->add_option("--out", out, "result JSON (stdout if omitted)");

    auto* paging = app.add_subcommand("paging", "fractional and randomized marking on plain paging");
    paging->add_option("--trace", trace, "instance file with one agent and no reserve")->required();
    paging->add_option("--seed", seed, "seed for one randomized marking run");
    paging->add_option("--out", out, "per-step CSV");

    auto* suite = app.add_subcommand("suite", "full acceptance battery");
    SuiteOptions suite_opts;
    suite->add_option("--seed", suite_opts.seed, "base seed");
    suite->add_option("--out", out, "directory for the CSV/JSON outputs");
    suite->add_option("--n-override", suite_opts.n_override, "ensemble size instead of k^3");
    suite->add_option("--oracle-max-universe", suite_opts.oracle_max_universe, "oracle size guard");
    suite->add_option("--threads", suite_opts.threads, "worker threads (0 = all cores)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_gen(spec, model, random, out);
        if (run->parsed()) {
            if (batch > 0) {
                exp.rounding_seed = seed;
                exp.n_override = n_override;
                exp.oracle_limits.max_universe = oracle_max_universe;
                return cmd_run_batch(batch, seed, exp, out);
            }
            return cmd_run_trace(trace, out, phases);
        }
        if (cert->parsed())
            return cmd_certify(trace, out);
        if (round->parsed())
            return cmd_round(trace, seed, n_override, out);
        if (opt->parsed())
            return cmd_opt(trace, oracle_max_universe, out);
        if (paging->parsed())
            return cmd_paging(trace, seed, out);
        if (suite->parsed())
            return cmd_suite(suite_opts, out);
    } catch (const ValidationError& e) {
        for (const auto& v : e.violations())
            std::cerr << "invalid instance: " << v << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
