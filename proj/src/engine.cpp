#include "cwr/engine.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <ostream>

namespace cwr {

const char* to_string(Classification c)
{
    switch (c) {
    case Classification::Hit: return "Hit";
    case Classification::StaleFetch: return "StaleFetch";
    case Classification::Clean: return "Clean";
    case Classification::PseudoClean: return "PseudoClean";
    }
    return "?";
}

Rational agent_mass(const EngineState& state, const Problem& problem, AgentId agent)
{
    Rational sum = 0;
    for (PageId p : problem.universe.pages_of(agent))
        sum += state.x(p);
    return sum;
}

bool is_tight(const EngineState& state, const Problem& problem, AgentId agent)
{
    return cmp(agent_mass(state, problem, agent), problem.reserve(agent)) == 0;
}

int marked_count(const EngineState& state, const Problem& problem, AgentId agent)
{
    int n = 0;
    for (PageId p : problem.universe.pages_of(agent))
        n += state.is_marked(p) ? 1 : 0;
    return n;
}

Rational total_mass(const EngineState& state)
{
    Rational sum = 0;
    for (const auto& y : state.y)
        sum += 1 - y;
    return sum;
}

const AgentSnapshot* PhaseRecord::snapshot_of(AgentId agent) const
{
    for (const auto& s : resets)
        if (s.agent == agent)
            return &s;
    return nullptr;
}

std::size_t EventLog::sealed_phase_count() const
{
    return static_cast<std::size_t>(std::count_if(phases.begin(), phases.end(),
                                                  [](const PhaseRecord& r) { return r.sealed; }));
}

std::size_t EventLog::sealed_horizon() const
{
    std::size_t horizon = 0;
    for (const auto& r : phases)
        if (r.sealed)
            horizon = r.last_t;
    return horizon;
}

EngineState init_state(const Problem& problem)
{
    const auto n = problem.universe.size();
    const auto m = static_cast<std::size_t>(problem.m());
    EngineState s;
    s.y.assign(n, Rational(1));
    s.marked.assign(n, 0);
    s.stale.assign(n, 0);
    s.isolated.assign(m, 0);
    s.isolated_at_phase_start.assign(m, 0);
    s.local_phase.assign(m, 1);
    s.stale_sets.assign(m, {});
    for (PageId p : problem.initial) {
        s.y[static_cast<std::size_t>(p)] = 0;
        s.stale[static_cast<std::size_t>(p)] = 1;
        s.stale_sets[static_cast<std::size_t>(problem.universe.owner(p))].push_back(p);
    }
    for (auto& set : s.stale_sets)
        std::sort(set.begin(), set.end());
    return s;
}

WaterfillResult waterfill(const EngineState& state, const Problem& problem, PageId fetched,
                          const Rational& deficit, EvictionRule rule)
{
    WaterfillResult result;
    result.residual = deficit;
    if (sgn(deficit) <= 0)
        return result;

    const AgentId requester = problem.universe.owner(fetched);
    const auto m = static_cast<std::size_t>(problem.m());

    std::vector<Rational> mass(m);
    for (std::size_t a = 0; a < m; ++a)
        mass[a] = agent_mass(state, problem, static_cast<AgentId>(a));
    mass[static_cast<std::size_t>(requester)] += deficit;  // fetched page counted as fully in

    struct Candidate {
        PageId page;
        AgentId agent;
        Rational y;
        Rational raised;
    };
    std::vector<Candidate> pool;
    for (PageId p = 0; p < static_cast<PageId>(problem.universe.size()); ++p) {
        if (p == fetched || state.is_marked(p))
            continue;
        const AgentId a = problem.universe.owner(p);
        if (rule == EvictionRule::IsolatedRequester ? a != requester : state.is_isolated(a))
            continue;
        if (cmp(state.y[static_cast<std::size_t>(p)], 1) >= 0)
            continue;
        pool.push_back({p, a, state.y[static_cast<std::size_t>(p)], Rational(0)});
    }

    auto eligible = [&](const Candidate& c) {
        return cmp(c.y, 1) < 0 && cmp(mass[static_cast<std::size_t>(c.agent)], problem.reserve(c.agent)) > 0;
    };

    Rational& remaining = result.residual;
    while (sgn(remaining) > 0) {
        std::vector<Candidate*> active;
        for (auto& c : pool)
            if (eligible(c))
                active.push_back(&c);
        if (active.empty())
            break;

        Rational level = active.front()->y;
        for (auto* c : active)
            if (c->y < level)
                level = c->y;
        Rational next_level = 1;
        std::vector<Candidate*> group;
        std::map<AgentId, int> per_agent;
        for (auto* c : active) {
            if (c->y == level) {
                group.push_back(c);
                ++per_agent[c->agent];
            } else if (c->y < next_level) {
                next_level = c->y;
            }
        }

        const Rational group_size(static_cast<long>(group.size()));
        Rational step = remaining / group_size;               // deficit exhausted
        step = std::min(step, Rational(next_level - level));  // merge with next level or saturate
        for (const auto& [agent, count] : per_agent) {         // an agent turns tight
            Rational slack = mass[static_cast<std::size_t>(agent)] - problem.reserve(agent);
            step = std::min(step, Rational(slack / count));
        }

        for (auto* c : group) {
            c->y += step;
            c->raised += step;
        }
        for (const auto& [agent, count] : per_agent)
            mass[static_cast<std::size_t>(agent)] -= step * count;
        remaining -= step * group_size;
    }

    for (const auto& c : pool)
        if (sgn(c.raised) > 0)
            result.evictions.emplace_back(c.page, c.raised);
    return result;
}

PhaseEnd end_phase(EngineState& state, const Problem& problem)
{
    PhaseEnd out;
    out.reset.ended_phase = state.global_phase;
    for (AgentId i = 0; i < problem.m(); ++i) {
        const auto ui = static_cast<std::size_t>(i);
        if (marked_count(state, problem, i) < problem.reserve(i)) {
            if (!state.isolated[ui])
                out.reset.newly_isolated.push_back(i);
            state.isolated[ui] = 1;
            out.isolated_at_end.push_back(i);
            continue;
        }
        AgentSnapshot snap;
        snap.agent = i;
        snap.local_phase = state.local_phase[ui];
        snap.previous = state.stale_sets[ui];
        for (PageId p : problem.universe.pages_of(i))
            if (state.is_marked(p))
                snap.current.push_back(p);
        for (PageId p : snap.previous) {
            if (!state.is_marked(p) && !is_one(state.y[static_cast<std::size_t>(p)]))
                throw EngineStuck("phase end: unmarked stale page " + format_page_ref(problem.universe.page(p)) +
                                  " of resetting agent is not fully evicted");
            state.stale[static_cast<std::size_t>(p)] = 0;
        }
        for (PageId p : snap.current) {
            state.stale[static_cast<std::size_t>(p)] = 1;
            state.marked[static_cast<std::size_t>(p)] = 0;
        }
        state.stale_sets[ui] = snap.current;
        state.local_phase[ui] += 1;
        state.isolated[ui] = 0;
        out.reset.reset_agents.push_back(i);
        out.snapshots.push_back(std::move(snap));
    }
    state.global_phase += 1;
    state.isolated_at_phase_start = state.isolated;
    return out;
}

void mark_and_deisolate(EngineState& state, const Problem& problem, PageId page)
{
    state.marked[static_cast<std::size_t>(page)] = 1;
    const AgentId a = problem.universe.owner(page);
    if (!state.is_isolated(a) || marked_count(state, problem, a) < problem.reserve(a))
        return;
    for (PageId p : problem.universe.pages_of(a))
        if (!state.is_marked(p) && !is_one(state.y[static_cast<std::size_t>(p)]))
            throw EngineStuck("de-isolation of agent " + std::to_string(a) +
                              " with an unmarked page still partly cached");
    state.isolated[static_cast<std::size_t>(a)] = 0;
}

Engine::Engine(const Problem& problem)
    : problem_(problem)
    , state_(init_state(problem))
{
    PhaseRecord first;
    first.index = 1;
    log_.phases.push_back(first);
}

void Engine::apply(PageId page, const WaterfillResult& wf)
{
    state_.y[static_cast<std::size_t>(page)] = 0;
    for (const auto& [q, delta] : wf.evictions)
        state_.y[static_cast<std::size_t>(q)] += delta;
}

StepReport Engine::serve(PageId page)
{
    if (page < 0 || static_cast<std::size_t>(page) >= problem_.universe.size())
        throw std::out_of_range("request outside the universe");

    StepReport report;
    report.t = ++state_.t;
    report.page = page;
    report.agent = problem_.universe.owner(page);
    const AgentId agent = report.agent;
    const auto up = static_cast<std::size_t>(page);

    bool served = false;
    for (int transitions = 0; transitions <= 1 && !served; ++transitions) {
        const Rational y = state_.y[up];
        if (is_zero(y)) {
            report.fetch_cost = 0;
            report.requester_isolated = state_.is_isolated(agent);
            served = true;
            break;
        }
        if (state_.is_isolated(agent)) {
            auto wf = waterfill(state_, problem_, page, y, EvictionRule::IsolatedRequester);
            if (sgn(wf.residual) != 0)
                throw EngineStuck("isolated agent " + std::to_string(agent) +
                                  " cannot fetch from its own reserved space");
            report.fetch_cost = y;
            report.requester_isolated = true;
            report.evictions = std::move(wf.evictions);
            served = true;
            break;
        }
        auto wf = waterfill(state_, problem_, page, y, EvictionRule::NonIsolated);
        if (sgn(wf.residual) == 0) {
            report.fetch_cost = y;
            report.requester_isolated = false;
            report.evictions = std::move(wf.evictions);
            served = true;
            break;
        }
        if (wf.residual != y)
            throw EngineStuck("request " + format_page_ref(problem_.universe.page(page)) +
                              " got stuck after partial eviction");

        // End of phase: seal the current record and reprocess in the next one.
        if (observer_)
            observer_(state_, PhaseEventPoint::BeforeReset);
        PhaseEnd end = end_phase(state_, problem_);
        if (observer_)
            observer_(state_, PhaseEventPoint::AfterReset);

        PhaseRecord& current = log_.phases.back();
        current.last_t = report.t - 1;
        current.isolated_at_end = end.isolated_at_end;
        current.resets = std::move(end.snapshots);
        current.sealed = true;

        PhaseRecord next;
        next.index = state_.global_phase;
        next.first_t = report.t;
        next.last_t = report.t - 1;
        next.isolated_at_start = current.isolated_at_end;
        log_.phases.push_back(std::move(next));
        report.phase_resets.push_back(std::move(end.reset));
    }
    if (!served)
        throw EngineStuck("request " + format_page_ref(problem_.universe.page(page)) +
                          " not served after a phase transition");

    const Rational& cost = report.fetch_cost;
    if (is_zero(cost))
        report.classification = Classification::Hit;
    else if (is_one(cost))
        report.classification = state_.is_stale(page) ? Classification::PseudoClean : Classification::Clean;
    else
        report.classification = Classification::StaleFetch;

    if (!report.evictions.empty() || !is_zero(cost)) {
        WaterfillResult wf;
        wf.evictions = report.evictions;
        apply(page, wf);
    }
    mark_and_deisolate(state_, problem_, page);

    report.phase = state_.global_phase;
    PhaseRecord& phase = log_.phases.back();
    phase.last_t = report.t;
    if (is_one(cost) && !report.requester_isolated)
        phase.full_misses.push_back(report.t);

    log_.steps.push_back(report);
    return report;
}

RunResult run_trace(const Problem& problem)
{
    Engine engine(problem);
    RunResult out;
    out.total_cost = 0;
    for (PageId p : problem.requests)
        out.total_cost += engine.serve(p).fetch_cost;
    out.log = engine.release_log();
    return out;
}

void write_event_csv(std::ostream& out, const EventLog& log, const Problem& problem)
{
    out << "t,agent,page,fetch_cost,classification,r0\n";
    for (const auto& s : log.steps) {
        out << s.t << ',' << s.agent << ',' << problem.universe.page(s.page).page << ','
            << to_fraction_string(s.fetch_cost) << ',' << to_string(s.classification) << ',' << s.phase << '\n';
    }
}

namespace {

nlohmann::ordered_json page_list(const std::vector<PageId>& pages, const Problem& problem)
{
    auto arr = nlohmann::ordered_json::array();
    for (PageId p : pages)
        arr.push_back(format_page_ref(problem.universe.page(p)));
    return arr;
}

} // namespace

std::string phase_records_json(const EventLog& log, const Problem& problem)
{
    auto phases = nlohmann::ordered_json::array();
    for (const auto& r : log.phases) {
        nlohmann::ordered_json j;
        j["r0"] = r.index;
        j["first_t"] = r.first_t;
        j["last_t"] = r.last_t;
        j["sealed"] = r.sealed;
        j["C"] = r.full_misses;
        j["ell"] = r.ell();
        j["isolated_at_start"] = r.isolated_at_start;
        j["isolated_at_end"] = r.sealed ? nlohmann::ordered_json(r.isolated_at_end) : nlohmann::ordered_json();
        auto snaps = nlohmann::ordered_json::array();
        for (const auto& s : r.resets) {
            nlohmann::ordered_json sj;
            sj["agent"] = s.agent;
            sj["local_phase"] = s.local_phase;
            sj["previous"] = page_list(s.previous, problem);
            sj["current"] = page_list(s.current, problem);
            snaps.push_back(std::move(sj));
        }
        j["snapshots"] = std::move(snaps);
        phases.push_back(std::move(j));
    }
    return phases.dump();
}

} // namespace cwr
