#include "cwr/rounding.hpp"
#include "cwr/workloads.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <sstream>

using namespace cwr;
using cwr::test::e1;
using cwr::test::make_instance;

namespace {

PageId id(const Problem& p, const std::string& ref) { return p.universe.id_of(parse_page_ref(ref)); }

std::vector<PageId> ids(const Problem& p, const std::vector<std::string>& refs)
{
    std::vector<PageId> out;
    for (const auto& r : refs)
        out.push_back(id(p, r));
    return out;
}

DiscreteVector counts(long N, std::vector<long> c)
{
    DiscreteVector d;
    d.N = N;
    d.counts = std::move(c);
    return d;
}

} // namespace

TEST_CASE("discretize keeps multiples of 1/N")
{
    Problem p(make_instance(1, 2, {0}, {"0/a", "0/b"}, {"0/c"}));
    const std::vector<Rational> x{1, make_rational(1, 2), make_rational(1, 2)};
    const auto d = discretize(x, default_order(p), p, 8);
    CHECK(d.counts == std::vector<long>{8, 4, 4});
    CHECK(check_discretization(x, d, p).empty());
}

TEST_CASE("discretize floors prefix sums")
{
    Problem p(make_instance(1, 1, {0}, {"0/a"}, {"0/b"}));
    const std::vector<Rational> x{make_rational(3, 10), make_rational(7, 10)};
    const auto d = discretize(x, default_order(p), p, 4);
    CHECK(d.value(0) == make_rational(1, 4));
    CHECK(d.value(1) == make_rational(3, 4));
    CHECK(check_discretization(x, d, p).empty());
}

TEST_CASE("discretize leaves integral vectors alone")
{
    Problem p(make_instance(2, 3, {1, 0}, {"0/a1", "0/a2", "1/b1"}, {"1/b2"}));
    const std::vector<Rational> x{1, 1, 1, 0};
    CHECK(discretize(x, default_order(p), p, 27).counts == std::vector<long>{27, 27, 27, 0});
}

TEST_CASE("discretize rejects interleaved orders")
{
    Problem p(make_instance(2, 3, {1, 0}, {"0/a1", "0/a2", "1/b1"}, {"1/b2"}));
    const std::vector<Rational> x{1, 1, 1, 0};
    CHECK_THROWS_AS(discretize(x, {0, 2, 1, 3}, p, 8), RoundingError);
    CHECK_NOTHROW(discretize(x, {2, 3, 1, 0}, p, 8));
}

TEST_CASE("diff_matching")
{
    Problem p(make_instance(2, 3, {0, 1}, {"0/a1", "1/b1", "1/b2"}, {"0/a2", "0/a3"}));
    // pages in id order: a1 a2 a3 b1 b2
    const auto before = counts(4, {4, 0, 0, 4, 4});
    SUBCASE("no change")
    {
        CHECK(diff_matching(before, before, p).empty());
    }
    SUBCASE("same agent")
    {
        const auto after = counts(4, {3, 1, 0, 4, 4});
        CHECK(diff_matching(before, after, p) == std::vector<PagePair>{{1, 0}});
    }
    SUBCASE("cross agent")
    {
        const auto after = counts(4, {4, 0, 2, 2, 4});
        CHECK(diff_matching(before, after, p) == std::vector<PagePair>{{2, 3}, {2, 3}});
    }
    SUBCASE("same-agent pairs come first")
    {
        const auto after = counts(4, {2, 1, 2, 3, 4});
        const auto pairs = diff_matching(before, after, p);
        REQUIRE(pairs.size() == 3);
        CHECK(p.universe.owner(pairs[0].p) == p.universe.owner(pairs[0].q));
        CHECK(p.universe.owner(pairs[1].p) == p.universe.owner(pairs[1].q));
        CHECK(pairs[2] == PagePair{2, 3});
    }
    SUBCASE("unbalanced")
    {
        CHECK_THROWS_AS(diff_matching(before, counts(4, {4, 1, 0, 4, 4}), p), RoundingError);
    }
}

TEST_CASE("apply_pair swap case")
{
    Problem p(make_instance(1, 2, {0}, {"0/a", "0/b"}, {"0/c"}));
    Ensemble e(p, 2, p.initial);
    CHECK(apply_pair(e, p, id(p, "0/c"), id(p, "0/b")) == 1);
    CHECK(e.pages(0) == ids(p, {"0/a", "0/c"}));
    CHECK(e.check(counts(2, {2, 1, 1})).empty());
}

TEST_CASE("apply_pair moves a third page when p sits with every q")
{
    Problem p(make_instance(1, 2, {0}, {"0/a", "0/b"}, {"0/c", "0/d"}));
    Ensemble e(p, {ids(p, {"0/a", "0/b"}), ids(p, {"0/a", "0/b"}), ids(p, {"0/c", "0/d"})});
    CHECK(apply_pair(e, p, id(p, "0/a"), id(p, "0/b")) == 2);
    CHECK(e.pages(0) == ids(p, {"0/a", "0/c"}));
    CHECK(e.pages(2) == ids(p, {"0/a", "0/d"}));
    CHECK(e.check(counts(3, {3, 1, 1, 1})).empty());
}

TEST_CASE("apply_pair repairs a reserve")
{
    Problem p(make_instance(2, 2, {1, 0}, {"0/a1", "1/b1"}, {"0/a2", "1/b2"}));
    Ensemble e(p, {ids(p, {"0/a1", "1/b1"}), ids(p, {"0/a1", "0/a2"})});
    // state 0 loses a1 for b2 and is left without an agent-0 page
    CHECK(apply_pair(e, p, id(p, "1/b2"), id(p, "0/a1")) == 3);
    CHECK(e.pages(0) == ids(p, {"0/a1", "1/b2"}));
    CHECK(e.pages(1) == ids(p, {"0/a2", "1/b1"}));
    CHECK(e.check(counts(2, {1, 1, 1, 1})).empty());
    CHECK(e.fetches() == std::vector<long>{2, 1});
}

TEST_CASE("sync")
{
    Problem p(make_instance(1, 2, {0}, {"0/a", "0/b"}, {"0/c"}));
    const auto before = counts(8, {8, 8, 0});
    Ensemble e(p, 8, p.initial);
    CHECK(sync(e, p, before, before) == 0);
    const auto after = counts(8, {8, 7, 1});
    CHECK(sync(e, p, before, after) == 1);
    CHECK(step_cost(before, after) == make_rational(1, 8));
    CHECK(e.check(after).empty());
}

TEST_CASE("run_randomized on a zero-miss trace")
{
    const auto run = run_randomized(Problem(e1({"0/a1", "1/b1"})), 7);
    CHECK(run.N == 27);
    CHECK(run.expected_cost == 0);
    CHECK(run.integral_cost == 0);
    CHECK(run.violations.empty());
}

TEST_CASE("run_randomized on E1")
{
    Problem p(e1({"1/b2", "0/a1", "0/a2", "1/b1"}));
    const auto run = run_randomized(p, 3);
    CHECK(run.violations.empty());
    CHECK(run.warnings.empty());
    CHECK(run.expected_cost >= run.fractional_cost);
    CHECK(run.expected_cost <= 12 * run.fractional_cost);
    CHECK(run.fractional_cost == run_trace(p).total_cost);
    long all = 0;
    for (long c : run.state_costs)
        all += c;
    CHECK(make_rational(all, run.N) == run.expected_cost);
    CHECK(run.integral_cost == run.state_costs[static_cast<std::size_t>(run.follow_index)]);
}

TEST_CASE("run_randomized is deterministic per seed")
{
    Problem p(generate(random_spec(11, WorkloadLimits{4, 4, 20, 120, 1})));
    std::ostringstream a, b;
    write_rounding_csv(a, run_randomized(p, 99));
    write_rounding_csv(b, run_randomized(p, 99));
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("t,removals,discretized_cost,fractional_cost,followed_state_miss\n", 0) == 0);
}

TEST_CASE("small N downgrades bound checks to warnings")
{
    Problem p(generate(random_spec(5, WorkloadLimits{4, 4, 20, 120, 2})));
    const auto run = run_randomized(p, 1, 2);
    CHECK(run.N == 2);
    for (const auto& v : run.violations)
        CHECK_MESSAGE(v.find("twice") == std::string::npos, v);
}

TEST_CASE("rounding invariants on random traces")
{
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
        const auto spec = random_spec(seed, WorkloadLimits{4, 4, 16, 80, 1});
        const auto run = run_randomized(Problem(generate(spec)), seed);
        CHECK_MESSAGE(run.violations.empty(), "seed " << seed << ": " << run.violations.front());
        CHECK(run.warnings.empty());
    }
}
