#include "cwr/opt.hpp"
#include "cwr/workloads.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <set>

using namespace cwr;
using cwr::test::make_instance;

namespace {

// Farthest-in-future eviction, optimal for plain paging.
long belady(const Problem& p)
{
    std::set<PageId> cache(p.initial.begin(), p.initial.end());
    long misses = 0;
    for (std::size_t t = 0; t < p.requests.size(); ++t) {
        const PageId r = p.requests[t];
        if (cache.count(r))
            continue;
        ++misses;
        PageId victim = -1;
        std::size_t far = 0;
        for (PageId c : cache) {
            std::size_t next = p.requests.size() + static_cast<std::size_t>(c) + 1;
            for (std::size_t u = t + 1; u < p.requests.size(); ++u)
                if (p.requests[u] == c) {
                    next = u;
                    break;
                }
            if (victim < 0 || next > far) {
                victim = c;
                far = next;
            }
        }
        cache.erase(victim);
        cache.insert(r);
    }
    return misses;
}

Instance drop_request(Instance inst, std::size_t at)
{
    inst.requests.erase(inst.requests.begin() + static_cast<long>(at));
    return inst;
}

void check_schedule(const Problem& p, const OptResult& r)
{
    REQUIRE(r.schedule.size() == p.horizon());
    std::set<PageId> prev(p.initial.begin(), p.initial.end());
    long cost = 0;
    for (std::size_t t = 0; t < r.schedule.size(); ++t) {
        const std::set<PageId> cur(r.schedule[t].begin(), r.schedule[t].end());
        CHECK(static_cast<int>(cur.size()) == p.k());
        CHECK(cur.count(p.requests[t]) == 1);
        for (AgentId a = 0; a < p.m(); ++a) {
            int held = 0;
            for (PageId q : cur)
                held += p.universe.owner(q) == a ? 1 : 0;
            CHECK(held >= p.reserve(a));
        }
        for (PageId q : cur)
            cost += prev.count(q) ? 0 : 1;
        prev = cur;
    }
    CHECK(cost == r.opt_cost);
}

} // namespace

TEST_CASE("all requests cached")
{
    Problem p(make_instance(1, 2, {0}, {"0/a", "0/b"}, {"0/a", "0/b", "0/b"}));
    CHECK(brute_opt(p).opt_cost == 0);
}

TEST_CASE("cycling three pages with k = 2 for six requests")
{
    Problem p(make_instance(1, 2, {0}, {"0/a", "0/b"}, {"0/a", "0/b", "0/c", "0/a", "0/b", "0/c"}));
    const auto r = brute_opt(p);
    CHECK(r.opt_cost == 2);
    check_schedule(p, r);
}

TEST_CASE("a reserve forces misses that plain paging avoids")
{
    const std::vector<std::string> reqs{"1/b2", "1/b1", "1/b2", "1/b1"};
    Problem reserved(make_instance(2, 2, {1, 0}, {"0/a1", "1/b1"}, reqs));
    Problem relaxed(make_instance(2, 2, {0, 0}, {"0/a1", "1/b1"}, reqs));
    CHECK(brute_opt(reserved).opt_cost == 4);
    CHECK(brute_opt(relaxed).opt_cost == 1);
    check_schedule(reserved, brute_opt(reserved));
}

TEST_CASE("size guards")
{
    Problem p(make_instance(1, 5, {0}, {"0/a", "0/b", "0/c", "0/d", "0/e"}, {"0/f"}));
    CHECK_THROWS_AS(brute_opt(p), OracleTooLarge);
    CHECK_NOTHROW(brute_opt(p, OptLimits{12, 5, 14}));
}

TEST_CASE("matches farthest-in-future on plain paging")
{
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
        Problem p(generate(random_paging_spec(seed, 4, 9, 14)));
        CHECK_MESSAGE(brute_opt(p).opt_cost == belady(p), "seed " << seed);
    }
}

TEST_CASE("monotone in requests and reserves")
{
    const WorkloadLimits tiny{3, 3, 8, 12, 1};
    for (std::uint64_t seed = 0; seed < 120; ++seed) {
        const Instance inst = generate(random_spec(seed, tiny));
        Problem p(inst);
        const auto r = brute_opt(p);
        check_schedule(p, r);
        if (!inst.requests.empty()) {
            const std::size_t at = seed % inst.requests.size();
            CHECK(brute_opt(Problem(drop_request(inst, at))).opt_cost <= r.opt_cost);
        }
        Instance relaxed = inst;
        std::fill(relaxed.reserves.begin(), relaxed.reserves.end(), 0);
        CHECK(brute_opt(Problem(relaxed)).opt_cost <= r.opt_cost);
    }
}
