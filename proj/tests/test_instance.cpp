#include "cwr/instance.hpp"
#include "cwr/workloads.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace cwr;
using cwr::test::make_instance;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& body)
{
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << body;
    return path;
}

} // namespace

TEST_CASE("load minimal single-agent trace")
{
    auto path = write_temp("cwr_min.json",
                           R"({"m":1,"k":2,"reserves":[0],"initial_cache":["0/a","0/b"],"requests":["0/c"]})");
    Problem problem(load_instance(path));
    CHECK(problem.universe.size() == 3);
    CHECK(problem.universe.agent_size(0) == 3);
}

TEST_CASE("reserve sum must leave one unreserved slot")
{
    auto path = write_temp("cwr_full.json",
                           R"({"m":2,"k":2,"reserves":[1,1],"initial_cache":["0/a","1/b"],"requests":[]})");
    try {
        load_instance(path);
        FAIL("expected validation error");
    } catch (const ValidationError& e) {
        REQUIRE(!e.violations().empty());
        CHECK(e.violations().front() == "Σ kᵢ < k violated");
    }
}

TEST_CASE("realized universe counts per agent")
{
    auto inst = make_instance(2, 3, {1, 0}, {"0/a1", "0/a2", "1/b1"}, {"1/b2", "0/a1"});
    Problem problem(inst);
    CHECK(problem.universe.agent_size(0) == 2);
    CHECK(problem.universe.agent_size(1) == 2);
    CHECK(problem.universe.size() == 4);
}

TEST_CASE("validate reports named violations")
{
    CHECK(validate(make_instance(2, 3, {1, 0}, {"0/a1", "0/a2", "1/b1"}, {})).empty());

    auto short_cache = validate(make_instance(1, 3, {0}, {"0/a", "0/b"}, {}));
    REQUIRE(short_cache.size() == 1);
    CHECK(short_cache[0] == "initial cache size ≠ k");

    auto unmet = validate(make_instance(2, 3, {2, 0}, {"0/a", "1/b", "1/c"}, {}));
    REQUIRE(unmet.size() == 1);
    CHECK(unmet[0] == "reserve of agent 0 unmet initially");

    auto bad_agent = validate(make_instance(1, 2, {0}, {"0/a", "0/b"}, {"3/z"}));
    CHECK(bad_agent.size() == 1);
}

TEST_CASE("parse errors")
{
    CHECK_THROWS_AS(parse_instance("not json"), ParseError);
    CHECK_THROWS_AS(parse_instance(R"({"m":1})"), ParseError);
    CHECK_THROWS_AS(parse_instance(R"({"m":1,"k":1,"reserves":[0],"initial_cache":["a"],"requests":[]})"),
                    ParseError);
    CHECK_THROWS_AS(load_instance("/nonexistent/trace.json"), ParseError);
}

TEST_CASE("canonical serialization round-trips byte for byte")
{
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Instance inst = generate(random_spec(seed, WorkloadLimits{}));
        const std::string text = serialize_instance(inst);
        Instance back = parse_instance(text);
        CHECK(serialize_instance(back) == text);
        CHECK(back.requests == inst.requests);
        CHECK(back.initial_cache == inst.initial_cache);
    }
    CHECK(serialize_instance(make_instance(1, 2, {0}, {"0/a", "0/b"}, {"0/c"})) ==
          R"({"m":1,"k":2,"reserves":[0],"initial_cache":["0/a","0/b"],"requests":["0/c"]})");
}

TEST_CASE("universe does not depend on request order")
{
    auto a = make_instance(2, 2, {0, 0}, {"0/x", "1/y"}, {"0/z", "1/w", "0/z", "1/y"});
    auto b = make_instance(2, 2, {0, 0}, {"0/x", "1/y"}, {"1/y", "0/z", "1/w"});
    Universe ua(a), ub(b);
    REQUIRE(ua.size() == ub.size());
    for (PageId p = 0; p < static_cast<PageId>(ua.size()); ++p)
        CHECK(ua.page(p) == ub.page(p));
}
