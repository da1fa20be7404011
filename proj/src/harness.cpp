#include "cwr/harness.hpp"

#include "cwr/engine.hpp"
#include "cwr/invariants.hpp"
#include "cwr/paging.hpp"
#include "cwr/rounding.hpp"
#include "cwr/workloads.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

namespace cwr {

namespace {

using json = nlohmann::ordered_json;

constexpr double kCostEps = 1e-9;  // slack for the log-based bounds
constexpr double kStandardErrors = 4.0;
constexpr double kC1TimeLimit = 60.0;
constexpr double kC4TimeLimit = 120.0;

std::string fmt_double(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json fraction_json(const Rational& r)
{
    return json(to_fraction_string(r));
}

json double_json(double v)
{
    if (!std::isfinite(v))
        return json(nullptr);
    return json(v);
}

template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& body)
{
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++)
            body(i);
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < threads; ++w)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
}

double cost_rhs_with_opt(const Problem& problem, long opt)
{
    return 2.0 * std::log1p(problem.k()) * (static_cast<double>(problem.m()) * problem.k() + 5.0 * opt);
}

} // namespace

TraceResult evaluate(const NamedInstance& named, std::size_t id, const ExperimentOptions& options)
{
    TraceResult r;
    r.id = id;
    r.name = named.name;
    r.m = named.instance.m;
    r.k = named.instance.k;
    r.length = named.instance.requests.size();
    try {
        Problem problem(named.instance);
        r.universe = problem.universe.size();

        Engine engine(problem);
        InvariantMonitor monitor(problem);
        PotentialTracker tracker(problem);
        engine.set_phase_observer([&](const EngineState& s, PhaseEventPoint point) {
            monitor.on_phase_event(s, point);
            tracker.on_phase_event(s, point);
        });
        r.cost = 0;
        for (PageId p : problem.requests) {
            monitor.before_step(engine.state());
            tracker.before_step(engine.state());
            const StepReport report = engine.serve(p);
            monitor.after_step(engine.state(), report);
            tracker.after_step(engine.state(), report);
            r.cost += report.fetch_cost;
        }
        const EventLog& log = engine.log();

        r.invariant_violations = monitor.violations().size();
        for (const auto& v : monitor.violations())
            r.failures.push_back("invariant at t=" + std::to_string(v.t) + ": " + v.what);

        const auto lemma = check_step_lemma(log, tracker.steps(), problem);
        r.step_lemma_violations = lemma.size();
        for (const auto& v : lemma)
            r.failures.push_back("step lemma at t=" + std::to_string(v.t) + ": " + v.what);
        const auto drops = check_phase_drops(log, tracker.steps(), problem);
        r.phase_drop_violations = drops.size();
        for (const auto& v : drops)
            r.failures.push_back("phase drop at t=" + std::to_string(v.t) + ": " + v.what);
        r.cost_bound = check_cost_bound(log, problem);
        if (!r.cost_bound.holds)
            r.failures.push_back("cost bound fails by " + fmt_double(-r.cost_bound.margin));

        r.certificate = certify(log, r.cost, problem);
        for (const auto& f : r.certificate.failures)
            r.failures.push_back("certificate: " + f);
        if (r.certificate.closed_form_mismatches > 0)
            r.failures.push_back("certificate: closed form differs from |C| in " +
                                 std::to_string(r.certificate.closed_form_mismatches) + " phase(s)");

        if (options.rounding && problem.k() <= options.rounding_max_k) {
            const RoundingRun run = run_randomized(problem, options.rounding_seed + id, options.n_override);
            RoundingSummary s;
            s.N = run.N;
            s.follow_index = run.follow_index;
            s.expected_cost = run.expected_cost;
            s.integral_cost = run.integral_cost;
            s.discretized_cost = run.discretized_cost;
            s.violations = run.violations.size();
            s.warnings = run.warnings.size();
            for (const auto& v : run.violations)
                r.failures.push_back("rounding: " + v);
            r.rounding = s;
        }

        if (options.oracle && within_limits(problem, options.oracle_limits)) {
            OracleSummary o;
            o.opt_cost = brute_opt(problem, options.oracle_limits).opt_cost;
            o.lower_ok = r.certificate.lp_lower_bound <= o.opt_cost;
            o.upper_ok = to_double(r.cost) <= cost_rhs_with_opt(problem, o.opt_cost) + kCostEps;
            if (!o.lower_ok)
                r.failures.push_back("oracle: dual/5 = " + to_fraction_string(r.certificate.lp_lower_bound) +
                                     " exceeds opt " + std::to_string(o.opt_cost));
            if (!o.upper_ok)
                r.failures.push_back("oracle: cost exceeds the bound from opt " + std::to_string(o.opt_cost));
            r.oracle = o;
        }
    } catch (const std::exception& e) {
        r.failures.push_back(std::string("error: ") + e.what());
    }
    return r;
}

std::size_t ExperimentReport::failing_traces() const
{
    return static_cast<std::size_t>(std::count_if(traces.begin(), traces.end(), [](const auto& t) { return !t.ok(); }));
}

std::size_t ExperimentReport::check_failures() const
{
    std::size_t n = 0;
    for (const auto& t : traces)
        n += t.failures.size();
    return n;
}

ExperimentReport run_experiment(const std::vector<NamedInstance>& instances, const ExperimentOptions& options)
{
    ExperimentReport report;
    report.traces.resize(instances.size());
    parallel_for(instances.size(), options.threads,
                 [&](std::size_t i) { report.traces[i] = evaluate(instances[i], i, options); });
    return report;
}

void write_trace_csv(std::ostream& out, const ExperimentReport& report)
{
    out << "id,name,m,k,universe,T,cost,cost_f64,invariant_violations,step_lemma_violations,"
           "phase_drop_violations,cost_bound_margin,horizon,dual,dual_f64,lp_lower_bound,max_slack,"
           "max_slack_f64,ratio_bound,closed_form_mismatches,skipped_phases,rounding_N,expected_cost,"
           "expected_cost_f64,integral_cost,rounding_violations,opt_cost,failures\n";
    for (const auto& t : report.traces) {
        const Certificate& c = t.certificate;
        out << t.id << ',' << t.name << ',' << t.m << ',' << t.k << ',' << t.universe << ',' << t.length << ','
            << to_fraction_string(t.cost) << ',' << fmt_double(to_double(t.cost)) << ',' << t.invariant_violations
            << ',' << t.step_lemma_violations << ',' << t.phase_drop_violations << ','
            << fmt_double(t.cost_bound.margin) << ',' << c.horizon << ',' << to_fraction_string(c.dual_value) << ','
            << fmt_double(to_double(c.dual_value)) << ',' << to_fraction_string(c.lp_lower_bound) << ','
            << to_fraction_string(c.max_slack) << ',' << fmt_double(to_double(c.max_slack)) << ','
            << fmt_double(c.ratio_bound) << ',' << c.closed_form_mismatches << ',' << c.skipped_phases << ',';
        if (t.rounding)
            out << t.rounding->N << ',' << to_fraction_string(t.rounding->expected_cost) << ','
                << fmt_double(to_double(t.rounding->expected_cost)) << ','
                << to_fraction_string(t.rounding->integral_cost) << ',' << t.rounding->violations << ',';
        else
            out << ",,,,,";
        if (t.oracle)
            out << t.oracle->opt_cost;
        out << ',' << t.failures.size() << '\n';
    }
}

std::string summary_json(const ExperimentReport& report)
{
    Rational max_slack = 0;
    double worst = 0;
    for (const auto& t : report.traces) {
        if (t.certificate.max_slack > max_slack)
            max_slack = t.certificate.max_slack;
        if (std::isfinite(t.certificate.ratio_bound))
            worst = std::max(worst, t.certificate.ratio_bound);
    }
    json j;
    j["traces"] = report.traces.size();
    j["failures"] = report.failing_traces();
    j["check_failures"] = report.check_failures();
    j["max_slack"] = fraction_json(max_slack);
    j["max_slack_f64"] = to_double(max_slack);
    j["worst_ratio_bound"] = double_json(worst);
    return j.dump(2) + "\n";
}

// Acceptance battery.

std::size_t SuiteResult::failed() const
{
    return static_cast<std::size_t>(std::count_if(criteria.begin(), criteria.end(), [](const auto& c) {
        return !c.pass || (c.time_limit > 0 && c.seconds >= c.time_limit);
    }));
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string experiment_csv(const ExperimentReport& report)
{
    std::ostringstream out;
    write_trace_csv(out, report);
    return out.str();
}

std::string count_note(std::size_t bad, std::size_t total, const std::string& what)
{
    return std::to_string(bad) + "/" + std::to_string(total) + " " + what;
}

CriterionResult finish(CriterionResult c)
{
    c.pass = std::all_of(c.parts.begin(), c.parts.end(), [](const auto& p) { return p.second; });
    return c;
}

std::vector<NamedInstance> make_batch(std::uint64_t base, std::size_t count, const WorkloadLimits& limits,
                                      const std::string& prefix)
{
    std::vector<NamedInstance> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const WorkloadSpec spec = random_spec(base + i, limits);
        out.push_back({prefix + std::to_string(base + i) + "-" + to_string(spec.model), generate(spec)});
    }
    return out;
}

std::vector<Problem> paging_batch(std::uint64_t base, std::size_t count, int max_k, int max_pages, int max_length)
{
    std::vector<Problem> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        out.emplace_back(generate(random_paging_spec(base + i, max_k, max_pages, max_length)));
    return out;
}

} // namespace

SuiteResult run_suite(const SuiteOptions& options)
{
    SuiteResult result;

    // Criteria 1, 2, 3 and 5 share one batch.
    const auto c1_start = Clock::now();
    ExperimentOptions main_opts;
    main_opts.rounding = true;
    main_opts.rounding_max_k = 4;
    main_opts.rounding_seed = options.seed;
    main_opts.n_override = options.n_override;
    main_opts.threads = options.threads;
    const auto batch = make_batch(options.seed, options.traces, WorkloadLimits{4, 6, 20, 200, 1}, "t");
    const ExperimentReport main = run_experiment(batch, main_opts);
    const double c1_seconds = seconds_since(c1_start);
    result.files["traces.csv"] = experiment_csv(main);
    result.files["traces_summary.json"] = summary_json(main);
    const std::size_t n = main.traces.size();

    {
        CriterionResult c;
        c.id = 1;
        c.name = "engine invariants";
        std::size_t bad = 0, total = 0, errors = 0;
        for (const auto& t : main.traces) {
            bad += t.invariant_violations > 0;
            total += t.invariant_violations;
            errors += std::any_of(t.failures.begin(), t.failures.end(),
                                  [](const std::string& f) { return f.rfind("error: ", 0) == 0; });
        }
        c.parts = {{"invariants", bad == 0 && errors == 0}};
        c.detail = std::to_string(n) + " traces, " + std::to_string(total) + " violations, " +
                   std::to_string(errors) + " errors";
        c.seconds = c1_seconds;
        c.time_limit = kC1TimeLimit;
        result.criteria.push_back(finish(c));
    }
    {
        CriterionResult c;
        c.id = 2;
        c.name = "potential bounds";
        std::size_t lemma = 0, drops = 0, bound = 0;
        for (const auto& t : main.traces) {
            lemma += t.step_lemma_violations > 0;
            drops += t.phase_drop_violations > 0;
            bound += !t.cost_bound.holds;
        }
        c.parts = {{"step lemma", lemma == 0}, {"phase drops", drops == 0}, {"cost bound", bound == 0}};
        c.detail = count_note(lemma, n, "step lemma") + ", " + count_note(drops, n, "phase drop") + ", " +
                   count_note(bound, n, "cost bound");
        result.criteria.push_back(finish(c));
    }
    {
        CriterionResult c;
        c.id = 3;
        c.name = "dual certificate";
        std::size_t slack = 0, sums = 0, deltas = 0, closed = 0, cost = 0;
        Rational max_slack = 0;
        for (const auto& t : main.traces) {
            const Certificate& cert = t.certificate;
            slack += !cert.slack_ok;
            sums += !(cert.phase_sums_ok && cert.c_set_ok);
            deltas += !(cert.stage_deltas_ok && cert.objective_ok);
            closed += cert.closed_form_mismatches > 0;
            cost += !(cert.cost_ok && cert.pseudo_clean_ok);
            if (cert.max_slack > max_slack)
                max_slack = cert.max_slack;
        }
        c.parts = {{"a", slack == 0}, {"b", sums == 0}, {"c", deltas == 0}, {"d", closed == 0}, {"e", cost == 0}};
        c.detail = "a: " + count_note(slack, n, "slack > 5") + " (max " + to_fraction_string(max_slack) + "), b: " +
                   count_note(sums, n, "phase sums") + ", c: " + count_note(deltas, n, "stage deltas") +
                   ", d: " + count_note(closed, n, "closed form") + ", e: " + count_note(cost, n, "cost bound");
        result.criteria.push_back(finish(c));
    }

    // Criterion 4: tiny instances against the exact optimum.
    {
        const auto start = Clock::now();
        ExperimentOptions tiny_opts;
        tiny_opts.oracle = true;
        tiny_opts.oracle_limits = OptLimits{static_cast<std::size_t>(options.oracle_max_universe), 3, 12};
        tiny_opts.threads = options.threads;
        const auto tiny = make_batch(options.seed + 1000000, options.tiny, WorkloadLimits{3, 3, 8, 12, 1}, "u");
        const ExperimentReport rep = run_experiment(tiny, tiny_opts);
        result.files["tiny.csv"] = experiment_csv(rep);
        result.files["tiny_summary.json"] = summary_json(rep);

        CriterionResult c;
        c.id = 4;
        c.name = "ground-truth sandwich";
        std::size_t skipped = 0, lower = 0, upper = 0;
        for (const auto& t : rep.traces) {
            if (!t.oracle) {
                ++skipped;
                continue;
            }
            lower += !t.oracle->lower_ok;
            upper += !t.oracle->upper_ok;
        }
        const std::size_t m = rep.traces.size();
        c.parts = {{"oracle ran", skipped == 0}, {"dual/5 <= opt", lower == 0}, {"cost <= bound", upper == 0}};
        c.detail = std::to_string(m) + " instances, " + std::to_string(skipped) + " beyond oracle limits, " +
                   count_note(lower, m, "lower") + ", " + count_note(upper, m, "upper");
        c.seconds = seconds_since(start);
        c.time_limit = kC4TimeLimit;
        result.criteria.push_back(finish(c));
    }

    {
        CriterionResult c;
        c.id = 5;
        c.name = "rounding";
        std::size_t ran = 0, bad = 0, warned = 0;
        for (const auto& t : main.traces) {
            if (!t.rounding)
                continue;
            ++ran;
            bad += t.rounding->violations > 0;
            warned += t.rounding->warnings > 0;
        }
        c.parts = {{"checks", bad == 0}, {"bounds", warned == 0}};
        c.detail = std::to_string(ran) + " traces with k <= 4, " + std::to_string(bad) + " with violations, " +
                   std::to_string(warned) + " with bound warnings";
        result.criteria.push_back(finish(c));
    }

    // Criterion 6: plain paging.
    {
        CriterionResult c;
        c.id = 6;
        c.name = "paging equivalences";
        const std::uint64_t base = options.seed + 2000000;

        // (a) and (d)
        const auto random = paging_batch(base, options.paging, 6, 14, 150);
        std::vector<char> equal(random.size()), bound(random.size());
        std::vector<std::string> rows(random.size());
        parallel_for(random.size(), options.threads, [&](std::size_t i) {
            const Problem& p = random[i];
            const FmRun fm = run_fm(p);
            const RunResult eng = run_trace(p);
            bool same = fm.steps.size() == eng.log.steps.size();
            for (std::size_t t = 0; same && t < fm.steps.size(); ++t)
                same = fm.steps[t].cost == eng.log.steps[t].fetch_cost;
            const FmBoundReport rep = check_fm_bound(fm, p.k());
            equal[i] = same;
            bound[i] = rep.holds();
            rows[i] = std::to_string(i) + ',' + std::to_string(p.k()) + ',' + std::to_string(p.universe.size()) +
                      ',' + std::to_string(p.horizon()) + ',' + to_fraction_string(eng.total_cost) + ',' +
                      to_fraction_string(fm.cost) + ',' + std::to_string(rep.sum_ell) + ',' + fmt_double(rep.rhs) +
                      ',' + (same ? "1" : "0") + ',' + (rep.holds() ? "1" : "0") + '\n';
        });
        std::string csv = "id,k,universe,T,engine_cost,fm_cost,sum_ell,fm_bound,equal,bound_holds\n";
        for (const auto& r : rows)
            csv += r;
        result.files["paging.csv"] = csv;
        const std::size_t not_equal = static_cast<std::size_t>(std::count(equal.begin(), equal.end(), 0));
        const std::size_t not_bound = static_cast<std::size_t>(std::count(bound.begin(), bound.end(), 0));

        // (b)
        const auto small = paging_batch(base + 100000, options.paging, 3, 7, 10);
        std::vector<char> marg_ok(small.size());
        rows.assign(small.size(), {});
        parallel_for(small.size(), options.threads, [&](std::size_t i) {
            const Problem& p = small[i];
            const FmRun fm = run_fm(p);
            const Rational exact = rm_expected_cost_exact(p);
            marg_ok[i] = rm_eviction_marginals(p) == fm.y_after && exact == fm.cost;
            rows[i] = std::to_string(i) + ',' + std::to_string(p.k()) + ',' + std::to_string(p.horizon()) + ',' +
                      to_fraction_string(exact) + ',' + to_fraction_string(fm.cost) + ',' +
                      (marg_ok[i] ? "1" : "0") + '\n';
        });
        csv = "id,k,T,rm_expected_cost,fm_cost,marginals_equal\n";
        for (const auto& r : rows)
            csv += r;
        result.files["exhaustive.csv"] = csv;
        const std::size_t marg_bad = static_cast<std::size_t>(std::count(marg_ok.begin(), marg_ok.end(), 0));

        // (c) three fixed traces
        const auto fixed = paging_batch(base + 200000, 3, 4, 9, 60);
        csv = "trace,seeds,mean,standard_error,fm_cost,within\n";
        std::size_t outside = 0;
        for (std::size_t i = 0; i < fixed.size(); ++i) {
            const Problem& p = fixed[i];
            std::vector<long> costs(options.rm_seeds);
            parallel_for(costs.size(), options.threads,
                         [&](std::size_t s) { costs[s] = rm_cost(p, options.seed + s); });
            double sum = 0, sq = 0;
            for (long x : costs) {
                sum += static_cast<double>(x);
                sq += static_cast<double>(x) * static_cast<double>(x);
            }
            const double runs = static_cast<double>(costs.size());
            const double mean = sum / runs;
            const double var = runs > 1 ? std::max(0.0, (sq - runs * mean * mean) / (runs - 1)) : 0.0;
            const double se = std::sqrt(var / runs);
            const double target = to_double(run_fm(p).cost);
            const bool within = std::abs(mean - target) <= kStandardErrors * se + kCostEps;
            outside += !within;
            csv += std::to_string(i) + ',' + std::to_string(costs.size()) + ',' + fmt_double(mean) + ',' +
                   fmt_double(se) + ',' + fmt_double(target) + ',' + (within ? "1" : "0") + '\n';
        }
        result.files["rm_sampling.csv"] = csv;

        // (e)
        const auto tiny = paging_batch(base + 300000, options.paging, 3, 8, 12);
        const OptLimits limits{static_cast<std::size_t>(options.oracle_max_universe), 3, 12};
        std::vector<int> ell_ok(tiny.size());  // 1 ok, 0 violated, -1 beyond the oracle
        rows.assign(tiny.size(), {});
        parallel_for(tiny.size(), options.threads, [&](std::size_t i) {
            const Problem& p = tiny[i];
            const long sum_ell = run_fm(p).sum_ell();
            if (!within_limits(p, limits)) {
                ell_ok[i] = -1;
                rows[i] = std::to_string(i) + ',' + std::to_string(sum_ell) + ",,\n";
                return;
            }
            const long opt = brute_opt(p, limits).opt_cost;
            ell_ok[i] = sum_ell <= 2 * opt;
            rows[i] = std::to_string(i) + ',' + std::to_string(sum_ell) + ',' + std::to_string(opt) + ',' +
                      (ell_ok[i] ? "1" : "0") + '\n';
        });
        csv = "id,sum_ell,opt_cost,holds\n";
        for (const auto& r : rows)
            csv += r;
        result.files["ell_vs_opt.csv"] = csv;
        const std::size_t ell_bad = static_cast<std::size_t>(std::count(ell_ok.begin(), ell_ok.end(), 0));
        const std::size_t ell_skip = static_cast<std::size_t>(std::count(ell_ok.begin(), ell_ok.end(), -1));

        c.parts = {{"a", not_equal == 0},
                   {"b", marg_bad == 0},
                   {"c", outside == 0},
                   {"d", not_bound == 0},
                   {"e", ell_bad == 0 && ell_skip == 0}};
        c.detail = "a: " + count_note(not_equal, random.size(), "differ") + ", b: " +
                   count_note(marg_bad, small.size(), "differ") + ", c: " +
                   count_note(outside, fixed.size(), "outside 4 SE") + " over " + std::to_string(options.rm_seeds) +
                   " seeds, d: " + count_note(not_bound, random.size(), "bound") + ", e: " +
                   count_note(ell_bad, tiny.size(), "violated") + ", " + std::to_string(ell_skip) + " skipped";
        result.criteria.push_back(finish(c));
    }

    json s = json::array();
    for (const auto& c : result.criteria) {
        json parts = json::object();
        for (const auto& [name, ok] : c.parts)
            parts[name] = ok;
        s.push_back({{"criterion", c.id}, {"name", c.name}, {"checks_pass", c.pass}, {"parts", parts},
                     {"detail", c.detail}});
    }
    result.files["suite.json"] = s.dump(2) + "\n";
    return result;
}

SuiteResult run_suite_with_determinism(const SuiteOptions& options)
{
    const auto start = Clock::now();
    SuiteResult first = run_suite(options);
    const SuiteResult second = run_suite(options);
    CriterionResult c;
    c.id = 7;
    c.name = "determinism";
    std::vector<std::string> differing;
    for (const auto& [name, bytes] : first.files) {
        const auto it = second.files.find(name);
        if (it == second.files.end() || it->second != bytes)
            differing.push_back(name);
    }
    const bool same_set = first.files.size() == second.files.size();
    c.parts = {{"byte-identical", differing.empty() && same_set}};
    c.detail = std::to_string(first.files.size()) + " files compared";
    for (const auto& d : differing)
        c.detail += ", differs: " + d;
    c.seconds = seconds_since(start);
    first.criteria.push_back(finish(c));
    return first;
}

std::string format_criterion(const CriterionResult& c)
{
    const bool timed_out = c.time_limit > 0 && c.seconds >= c.time_limit;
    std::string line = std::string(c.pass && !timed_out ? "PASS" : "FAIL") + " criterion " + std::to_string(c.id) +
                       " (" + c.name + ")";
    if (c.parts.size() > 1) {
        line += " [";
        for (std::size_t i = 0; i < c.parts.size(); ++i)
            line += (i ? " " : "") + c.parts[i].first + ":" + (c.parts[i].second ? "ok" : "FAIL");
        line += "]";
    }
    line += ": " + c.detail;
    char buf[96];
    if (c.time_limit > 0)
        std::snprintf(buf, sizeof buf, "; %.2f s (limit %.0f s)", c.seconds, c.time_limit);
    else if (c.seconds > 0)
        std::snprintf(buf, sizeof buf, "; %.2f s", c.seconds);
    else
        buf[0] = '\0';
    return line + buf;
}

void write_suite_files(const SuiteResult& result, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    for (const auto& [name, bytes] : result.files) {
        std::ofstream out(dir / name, std::ios::binary);
        out << bytes;
        if (!out)
            throw std::runtime_error("cannot write " + (dir / name).string());
    }
}

} // namespace cwr
