#include "cwr/accounting.hpp"
#include "cwr/workloads.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace cwr;
using cwr::test::e1;
using cwr::test::e2;

TEST_CASE("phi values")
{
    CHECK(phi(Rational(0), 5) == 0.0);
    CHECK(phi(Rational(1), 4) == doctest::Approx(2.0 * std::log(5.0)).epsilon(1e-12));
    CHECK(phi(make_rational(1, 2), 2) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(phi(make_rational(3, 2), 2), std::domain_error);
    CHECK_THROWS_AS(phi(make_rational(-1, 5), 2), std::domain_error);
}

TEST_CASE("phi' closed form agrees with a central difference")
{
    for (int k : {1, 3, 6})
        for (double h : {0.2, 0.5, 0.9}) {
            const double d = 1e-6;
            const double numeric = (phi(h + d, k) - phi(h - d, k)) / (2 * d);
            CHECK(phi_prime(h, k) == doctest::Approx(numeric).epsilon(1e-6));
        }
}

TEST_CASE("phi facts on [1/k, 1]")
{
    for (int k = 1; k <= 8; ++k)
        CHECK(check_phi_facts(k).empty());
}

TEST_CASE("potential of simple states")
{
    Problem p(e1({"1/b2", "0/a1"}));
    Engine engine(p);
    CHECK(potential(engine.state(), p).psi == 0.0);
    engine.serve(p.universe.id_of(parse_page_ref("1/b2")));
    const auto snap = potential(engine.state(), p);
    CHECK(snap.terms.size() == 3);
    CHECK(snap.psi == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("E1 stale fetch is covered by the potential increase")
{
    const auto ar = run_accounted(Problem(e1({"1/b2", "0/a1"})));
    REQUIRE(ar.potentials.size() == 2);
    // a1 leaves the potential at 1/3; a2 and b1 move from 1/3 to 1/2.
    const double expected = 2.0 * std::log(2.5) - 2.0 * std::log(2.0);
    CHECK(ar.potentials[1].step_delta() == doctest::Approx(expected).epsilon(1e-12));
    CHECK(ar.run.log.steps[1].fetch_cost == make_rational(1, 3));
    CHECK(check_step_lemma(ar.run.log, ar.potentials, Problem(e1({"1/b2", "0/a1"}))).empty());
}

TEST_CASE("E2 phase drops and cost bound")
{
    Problem p(e2({"1/b2", "1/b3", "0/a2", "0/a1"}));
    const auto ar = run_accounted(p);
    const double two_ln3 = 2.0 * std::log(3.0);
    // first phase ends at t=2 dropping b1; second at t=4 dropping a1 and b2
    CHECK(ar.potentials[1].phase_drop() == doctest::Approx(-two_ln3));
    CHECK(ar.potentials[3].phase_drop() == doctest::Approx(-2 * two_ln3));
    CHECK(ar.potentials[0].step_delta() == doctest::Approx(two_ln3));
    CHECK(check_phase_drops(ar.run.log, ar.potentials, p).empty());
    CHECK(check_step_lemma(ar.run.log, ar.potentials, p).empty());

    const auto rep = check_cost_bound(ar.run.log, p);
    CHECK(rep.horizon == 3);
    CHECK(rep.lhs == 3);
    CHECK(rep.tail_cost == 1);
    CHECK(rep.pseudo_clean_count == 0);
    CHECK(rep.stale_eviction_sum == 3);
    CHECK(rep.rhs == doctest::Approx(two_ln3 * 7));
    CHECK(rep.holds);
}

TEST_CASE("zero-miss trace")
{
    Problem p(e2({"0/a1", "1/b1", "0/a1"}));
    const auto ar = run_accounted(p);
    const auto rep = check_cost_bound(ar.run.log, p);
    CHECK(rep.lhs == 0);
    CHECK(rep.holds);
    CHECK(rep.rhs == doctest::Approx(2.0 * std::log(3.0) * 4));
}

TEST_CASE("potential lemmas on random traces")
{
    long steps = 0;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        Problem p(generate(random_spec(seed, WorkloadLimits{})));
        const auto ar = run_accounted(p);
        steps += static_cast<long>(ar.potentials.size());
        const auto a = check_step_lemma(ar.run.log, ar.potentials, p);
        const auto b = check_phase_drops(ar.run.log, ar.potentials, p);
        CHECK_MESSAGE(a.empty(), "seed " << seed << ": " << (a.empty() ? "" : a.front().what));
        CHECK_MESSAGE(b.empty(), "seed " << seed << ": " << (b.empty() ? "" : b.front().what));
        CHECK(check_cost_bound(ar.run.log, p).holds);
    }
    CHECK(steps > 1000);
}
