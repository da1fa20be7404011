#include "cwr/invariants.hpp"

#include <algorithm>

namespace cwr {

namespace {

std::string page_name(const Problem& problem, PageId p)
{
    return format_page_ref(problem.universe.page(p));
}

} // namespace

std::vector<std::string> check_state(const EngineState& state, const Problem& problem)
{
    std::vector<std::string> out;
    const Rational one_over_k(1, problem.k());

    if (total_mass(state) != problem.k())
        out.push_back("cache not exactly full: Σx = " + to_fraction_string(total_mass(state)));

    for (AgentId i = 0; i < problem.m(); ++i) {
        const Rational mass = agent_mass(state, problem, i);
        if (cmp(mass, problem.reserve(i)) < 0)
            out.push_back("reserve of agent " + std::to_string(i) + " violated");
        if (state.is_isolated(i) && cmp(mass, problem.reserve(i)) != 0)
            out.push_back("isolated agent " + std::to_string(i) + " not tight");

        const Rational* common = nullptr;
        for (PageId p : problem.universe.pages_of(i)) {
            if (!state.is_stale(p) || state.is_marked(p))
                continue;
            const Rational& y = state.y[static_cast<std::size_t>(p)];
            if (common == nullptr)
                common = &y;
            else if (*common != y)
                out.push_back("unmarked stale pages of agent " + std::to_string(i) + " differ in y");
        }
    }

    for (PageId p = 0; p < static_cast<PageId>(problem.universe.size()); ++p) {
        const Rational& y = state.y[static_cast<std::size_t>(p)];
        if (sgn(y) < 0 || cmp(y, 1) > 0)
            out.push_back("y out of [0,1] for " + page_name(problem, p));
        if (state.is_marked(p) && !is_zero(y))
            out.push_back("marked page " + page_name(problem, p) + " not integral");
        if (!is_zero(y) && y < one_over_k)
            out.push_back("y in (0, 1/k) for " + page_name(problem, p));
        if (!state.is_stale(p) && !state.is_marked(p) && !is_one(y))
            out.push_back("non-stale unmarked page " + page_name(problem, p) + " partly cached");
    }
    return out;
}

InvariantMonitor::InvariantMonitor(const Problem& problem)
    : problem_(problem)
{
}

void InvariantMonitor::fail(std::string what)
{
    violations_.push_back({t_, std::move(what)});
}

void InvariantMonitor::before_step(const EngineState& state)
{
    t_ = state.t + 1;
    y_before_ = state.y;
    isolated_before_ = state.isolated;
}

void InvariantMonitor::on_phase_event(const EngineState& state, PhaseEventPoint point)
{
    if (point != PhaseEventPoint::AfterReset)
        return;
    // After a reset every remaining mark belongs to an isolated agent.
    for (PageId p = 0; p < static_cast<PageId>(problem_.universe.size()); ++p)
        if (state.is_marked(p) && !state.is_isolated(problem_.universe.owner(p)))
            fail("marked page " + page_name(problem_, p) + " of non-isolated agent survives phase reset");
    has_frontier_ = false;
}

void InvariantMonitor::check_frontier(const EngineState& state)
{
    if (frontier_phase_ != state.global_phase) {
        frontier_phase_ = state.global_phase;
        has_frontier_ = false;
    }
    std::vector<Rational> nontight_values;
    Rational max_unmarked = 0;
    bool any_unmarked = false;
    for (AgentId i = 0; i < problem_.m(); ++i) {
        if (state.isolated_at_phase_start[static_cast<std::size_t>(i)])
            continue;
        const bool tight = is_tight(state, problem_, i);
        for (PageId p : problem_.universe.pages_of(i)) {
            if (!state.is_stale(p) || state.is_marked(p))
                continue;
            const Rational& y = state.y[static_cast<std::size_t>(p)];
            if (!any_unmarked || y > max_unmarked)
                max_unmarked = y;
            any_unmarked = true;
            if (!tight)
                nontight_values.push_back(y);
        }
    }
    Rational h;
    if (!nontight_values.empty()) {
        h = nontight_values.front();
        for (const auto& v : nontight_values)
            if (v != h)
                fail("frontier: non-tight unmarked pages do not share one y value");
    } else if (any_unmarked) {
        h = has_frontier_ ? std::max(frontier_, max_unmarked) : max_unmarked;
    } else {
        return;
    }
    if (max_unmarked > h)
        fail("frontier: unmarked page above h*");
    if (has_frontier_ && h < frontier_)
        fail("frontier: h* decreased within a phase");
    frontier_ = h;
    has_frontier_ = true;
}

void InvariantMonitor::check_dichotomy(const EngineState& state)
{
    for (AgentId i = 0; i < problem_.m(); ++i) {
        if (!state.isolated_at_phase_start[static_cast<std::size_t>(i)])
            continue;
        const bool still = state.is_isolated(i);
        for (PageId p : problem_.universe.pages_of(i)) {
            if (!state.is_stale(p) || state.is_marked(p))
                continue;
            const bool partly_cached = cmp(state.y[static_cast<std::size_t>(p)], 1) < 0;
            if (partly_cached != still)
                fail("isolation dichotomy broken for " + page_name(problem_, p));
        }
    }
}

void InvariantMonitor::after_step(const EngineState& state, const StepReport& report)
{
    for (auto& v : check_state(state, problem_))
        fail(std::move(v));

    Rational evicted = 0;
    for (const auto& [p, d] : report.evictions)
        evicted += d;
    if (evicted != report.fetch_cost)
        fail("Σ evictions ≠ fetch cost");
    if ((report.classification == Classification::Hit) != is_zero(report.fetch_cost))
        fail("Hit classification inconsistent with fetch cost");

    // Pages of an agent isolated at step start move only on that agent's requests.
    for (PageId p = 0; p < static_cast<PageId>(problem_.universe.size()); ++p) {
        const AgentId a = problem_.universe.owner(p);
        if (!isolated_before_[static_cast<std::size_t>(a)] || a == report.agent)
            continue;
        if (state.y[static_cast<std::size_t>(p)] != y_before_[static_cast<std::size_t>(p)])
            fail("page " + page_name(problem_, p) + " of isolated agent moved on a foreign request");
    }

    check_frontier(state);
    check_dichotomy(state);
}

CheckedRun run_checked(const Problem& problem)
{
    Engine engine(problem);
    InvariantMonitor monitor(problem);
    engine.set_phase_observer(
        [&](const EngineState& s, PhaseEventPoint point) { monitor.on_phase_event(s, point); });
    CheckedRun out;
    out.run.total_cost = 0;
    for (auto& v : check_state(engine.state(), problem))
        out.violations.push_back({0, std::move(v)});
    for (PageId p : problem.requests) {
        monitor.before_step(engine.state());
        const StepReport report = engine.serve(p);
        monitor.after_step(engine.state(), report);
        out.run.total_cost += report.fetch_cost;
    }
    out.run.log = engine.release_log();
    const auto& v = monitor.violations();
    out.violations.insert(out.violations.end(), v.begin(), v.end());
    return out;
}

} // namespace cwr
