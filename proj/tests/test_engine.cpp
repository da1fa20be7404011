#include "cwr/engine.hpp"
#include "cwr/invariants.hpp"
#include "cwr/workloads.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <sstream>

using namespace cwr;
using cwr::test::e1;
using cwr::test::e2;
using cwr::test::make_instance;

namespace {

Rational y_of(const Engine& engine, const std::string& ref)
{
    return engine.state().y[static_cast<std::size_t>(engine.problem().universe.id_of(parse_page_ref(ref)))];
}

PageId id(const Problem& problem, const std::string& ref)
{
    return problem.universe.id_of(parse_page_ref(ref));
}

} // namespace

TEST_CASE("init_state on E1")
{
    Problem problem(e1({"1/b2", "0/a1"}));
    EngineState s = init_state(problem);
    CHECK(s.global_phase == 1);
    CHECK(s.stale_sets[0] == std::vector<PageId>{id(problem, "0/a1"), id(problem, "0/a2")});
    CHECK(s.stale_sets[1] == std::vector<PageId>{id(problem, "1/b1")});
    CHECK(total_mass(s) == 3);
    CHECK(check_state(s, problem).empty());
    for (PageId p : problem.initial)
        CHECK(is_zero(s.y[static_cast<std::size_t>(p)]));
}

TEST_CASE("tight agent is not isolated at init")
{
    Problem problem(e2({}));
    EngineState s = init_state(problem);
    CHECK(is_tight(s, problem, 0));
    CHECK(!s.is_isolated(0));
}

TEST_CASE("E1 clean request then stale fetch")
{
    Problem problem(e1({"1/b2", "0/a1"}));
    Engine engine(problem);

    auto r1 = engine.serve(id(problem, "1/b2"));
    CHECK(r1.fetch_cost == 1);
    CHECK(r1.classification == Classification::Clean);
    for (auto ref : {"0/a1", "0/a2", "1/b1"})
        CHECK(y_of(engine, ref) == Rational(1, 3));

    auto r2 = engine.serve(id(problem, "0/a1"));
    CHECK(r2.fetch_cost == Rational(1, 3));
    CHECK(r2.classification == Classification::StaleFetch);
    CHECK(engine.state().is_marked(id(problem, "0/a1")));
    CHECK(y_of(engine, "0/a2") == Rational(1, 2));
    CHECK(y_of(engine, "1/b1") == Rational(1, 2));

    auto r3 = engine.serve(id(problem, "0/a1"));
    CHECK(r3.classification == Classification::Hit);
    CHECK(is_zero(r3.fetch_cost));
    CHECK(r3.evictions.empty());
}

TEST_CASE("run_trace totals")
{
    CHECK(run_trace(Problem(e1({"1/b2", "0/a1"}))).total_cost == Rational(4, 3));
    CHECK(is_zero(run_trace(Problem(e1({"0/a1", "1/b1", "0/a2", "0/a1"}))).total_cost));
}

TEST_CASE("E2 phase transition, isolation and de-isolation")
{
    Problem problem(e2({"1/b2", "1/b3", "0/a2", "0/a1"}));
    Engine engine(problem);

    auto r1 = engine.serve(id(problem, "1/b2"));
    CHECK(r1.classification == Classification::Clean);
    CHECK(y_of(engine, "1/b1") == 1);
    CHECK(is_zero(y_of(engine, "0/a1")));

    auto r2 = engine.serve(id(problem, "1/b3"));
    REQUIRE(r2.phase_resets.size() == 1);
    CHECK(r2.phase_resets[0].ended_phase == 1);
    CHECK(r2.phase_resets[0].newly_isolated == std::vector<AgentId>{0});
    CHECK(r2.phase_resets[0].reset_agents == std::vector<AgentId>{1});
    CHECK(r2.phase == 2);
    CHECK(r2.classification == Classification::Clean);
    CHECK(y_of(engine, "1/b2") == 1);
    CHECK(engine.state().is_isolated(0));
    CHECK(engine.state().stale_sets[1] == std::vector<PageId>{id(problem, "1/b2")});

    const auto& phase1 = engine.log().phases.front();
    CHECK(phase1.sealed);
    CHECK(phase1.first_t == 1);
    CHECK(phase1.last_t == 1);
    CHECK(phase1.full_misses == std::vector<std::size_t>{1});
    REQUIRE(phase1.resets.size() == 1);
    CHECK(phase1.resets[0].current == std::vector<PageId>{id(problem, "1/b2")});

    // Isolated requester evicts only its own unmarked pages, then de-isolates.
    auto r3 = engine.serve(id(problem, "0/a2"));
    CHECK(r3.requester_isolated);
    CHECK(r3.fetch_cost == 1);
    CHECK(y_of(engine, "0/a1") == 1);
    CHECK(!engine.state().is_isolated(0));

    // a1 is stale and fully evicted, but nothing is evictable: the phase ends
    // and a1 is served clean in phase 3 (its agent reset to P(0,1) = {a2}).
    auto r4 = engine.serve(id(problem, "0/a1"));
    REQUIRE(r4.phase_resets.size() == 1);
    CHECK(r4.phase == 3);
    CHECK(r4.classification == Classification::Clean);
    CHECK(engine.log().phases[1].full_misses == std::vector<std::size_t>{2});
}

TEST_CASE("waterfill breakpoints")
{
    SUBCASE("uniform split over an equal-level group")
    {
        Problem problem(e1({"1/b2", "0/a1"}));
        Engine engine(problem);
        engine.serve(id(problem, "1/b2"));
        auto wf = waterfill(engine.state(), problem, id(problem, "0/a1"), Rational(1, 3), EvictionRule::NonIsolated);
        CHECK(is_zero(wf.residual));
        REQUIRE(wf.evictions.size() == 2);
        for (const auto& [p, d] : wf.evictions)
            CHECK(d == Rational(1, 6));
    }
    SUBCASE("zero deficit evicts nothing")
    {
        Problem problem(e1({}));
        EngineState s = init_state(problem);
        auto wf = waterfill(s, problem, id(problem, "0/a1"), Rational(0), EvictionRule::NonIsolated);
        CHECK(wf.evictions.empty());
        CHECK(is_zero(wf.residual));
    }
    SUBCASE("agent turning tight leaves the candidate set")
    {
        // Agent 0 holds a (y=0) and reserves 3/4 of a slot worth... use
        // k = 2, reserves [0,1]: b1 tight agent, fetching a2 evicts a1 only.
        Problem problem(make_instance(2, 2, {0, 1}, {"0/a1", "1/b1"}, {"0/a2"}));
        EngineState s = init_state(problem);
        auto wf = waterfill(s, problem, id(problem, "0/a2"), Rational(1), EvictionRule::NonIsolated);
        CHECK(is_zero(wf.residual));
        REQUIRE(wf.evictions.size() == 1);
        CHECK(wf.evictions[0].first == id(problem, "0/a1"));
        CHECK(wf.evictions[0].second == 1);
    }
    SUBCASE("no candidate leaves the full residual")
    {
        Problem problem(e2({"1/b2", "1/b3"}));
        Engine engine(problem);
        engine.serve(id(problem, "1/b2"));
        auto wf =
            waterfill(engine.state(), problem, id(problem, "1/b3"), Rational(1), EvictionRule::NonIsolated);
        CHECK(wf.residual == 1);
        CHECK(wf.evictions.empty());
    }
    SUBCASE("tightening mid-fill hands the rest to other candidates")
    {
        // a1 is alone at the lowest level; agent 0 has 1/4 of slack, so a1
        // stops at 1/4 and the rest of the deficit goes to c1 at level 1/2.
        Problem problem(make_instance(3, 4, {1, 0, 0}, {"0/a1", "0/a2", "1/b1", "2/c1"}, {"1/b2"}));
        EngineState s = init_state(problem);
        s.y[static_cast<std::size_t>(id(problem, "0/a2"))] = Rational(3, 4);
        s.y[static_cast<std::size_t>(id(problem, "2/c1"))] = Rational(1, 2);
        s.y[static_cast<std::size_t>(id(problem, "1/b2"))] = Rational(1, 2);
        s.marked[static_cast<std::size_t>(id(problem, "1/b1"))] = 1;
        auto wf = waterfill(s, problem, id(problem, "1/b2"), Rational(1, 2), EvictionRule::NonIsolated);
        CHECK(is_zero(wf.residual));
        REQUIRE(wf.evictions.size() == 2);
        CHECK(wf.evictions[0] == std::pair<PageId, Rational>{id(problem, "0/a1"), Rational(1, 4)});
        CHECK(wf.evictions[1] == std::pair<PageId, Rational>{id(problem, "2/c1"), Rational(1, 4)});

        // Without c1 the residual 1/4 is left over.
        s.marked[static_cast<std::size_t>(id(problem, "2/c1"))] = 1;
        auto stuck = waterfill(s, problem, id(problem, "1/b2"), Rational(1, 2), EvictionRule::NonIsolated);
        CHECK(stuck.residual == Rational(1, 4));
    }
}

TEST_CASE("end_phase isolation boundary")
{
    // Agent 0 reserves 1 and has exactly one marked page at phase end.
    Problem problem(make_instance(2, 2, {1, 0}, {"0/a1", "1/b1"}, {"0/a1", "1/b2", "1/b3"}));
    Engine engine(problem);
    for (PageId p : problem.requests)
        engine.serve(p);
    const auto& first = engine.log().phases.front();
    REQUIRE(first.sealed);
    CHECK(first.isolated_at_end.empty());
    CHECK(!engine.state().is_isolated(0));
}

TEST_CASE("mark_and_deisolate keeps agents with missing marks isolated")
{
    Problem problem(make_instance(2, 3, {2, 0}, {"0/a1", "0/a2", "1/b1"}, {}));
    EngineState s = init_state(problem);
    s.isolated[0] = 1;
    mark_and_deisolate(s, problem, problem.universe.id_of(parse_page_ref("0/a1")));
    CHECK(s.is_isolated(0));
    mark_and_deisolate(s, problem, problem.universe.id_of(parse_page_ref("1/b1")));
    CHECK(!s.is_isolated(1));
}

TEST_CASE("engine invariants hold on random traces")
{
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        Problem problem(generate(random_spec(seed, WorkloadLimits{})));
        CheckedRun checked = run_checked(problem);
        INFO("seed " << seed);
        if (!checked.violations.empty())
            INFO("first violation at t=" << checked.violations.front().t << ": " << checked.violations.front().what);
        CHECK(checked.violations.empty());
    }
}

TEST_CASE("isolation-adversary isolates the victim")
{
    WorkloadSpec spec;
    spec.model = WorkloadModel::IsolationAdversary;
    spec.m = 2;
    spec.k = 4;
    spec.reserves = {2, 0};
    spec.pages_per_agent = {6, 6};
    spec.length = 60;
    Problem problem(generate(spec));
    auto run = run_trace(problem);
    bool isolated = false;
    for (const auto& r : run.log.phases)
        for (AgentId a : r.isolated_at_end)
            isolated |= (a == 0);
    CHECK(isolated);
}

TEST_CASE("event log export is deterministic")
{
    Problem problem(generate(random_spec(7, WorkloadLimits{})));
    auto render = [&] {
        auto run = run_trace(problem);
        std::ostringstream out;
        write_event_csv(out, run.log, problem);
        return out.str() + phase_records_json(run.log, problem);
    };
    const std::string first = render();
    CHECK(first == render());
    CHECK(first.rfind("t,agent,page,fetch_cost,classification,r0\n", 0) == 0);
}
