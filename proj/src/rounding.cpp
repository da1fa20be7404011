#include "cwr/rounding.hpp"

#include <algorithm>
#include <ostream>
#include <random>
#include <sstream>

namespace cwr {

namespace {

std::string page_name(const Problem& problem, PageId p) { return format_page_ref(problem.universe.page(p)); }

// floor(N * r) for r >= 0
long floor_scaled(const Rational& r, long N)
{
    mpz_class num = r.get_num() * N;
    mpz_class q;
    mpz_fdiv_q(q.get_mpz_t(), num.get_mpz_t(), r.get_den().get_mpz_t());
    return q.get_si();
}

} // namespace

std::vector<PageId> default_order(const Problem& problem)
{
    std::vector<PageId> order(problem.universe.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = static_cast<PageId>(i);
    return order;
}

DiscreteVector discretize(const std::vector<Rational>& x, const std::vector<PageId>& order, const Problem& problem,
                          long N)
{
    const std::size_t n = problem.universe.size();
    if (order.size() != n || x.size() != n)
        throw RoundingError("discretize: order and vector must cover the universe");
    std::vector<char> seen(n, 0);
    std::vector<char> agent_done(static_cast<std::size_t>(problem.m()), 0);
    for (std::size_t i = 0; i < n; ++i) {
        const PageId p = order[i];
        if (p < 0 || static_cast<std::size_t>(p) >= n || seen[static_cast<std::size_t>(p)])
            throw RoundingError("discretize: order is not a permutation");
        seen[static_cast<std::size_t>(p)] = 1;
        const AgentId a = problem.universe.owner(p);
        if (i > 0 && problem.universe.owner(order[i - 1]) != a) {
            agent_done[static_cast<std::size_t>(problem.universe.owner(order[i - 1]))] = 1;
            if (agent_done[static_cast<std::size_t>(a)])
                throw RoundingError("discretize: order interleaves agents");
        }
    }
    DiscreteVector d;
    d.N = N;
    d.counts.assign(n, 0);
    Rational prefix = 0;
    long prev = 0;
    for (PageId p : order) {
        prefix += x[static_cast<std::size_t>(p)];
        const long cur = floor_scaled(prefix, N);
        d.counts[static_cast<std::size_t>(p)] = cur - prev;
        prev = cur;
    }
    return d;
}

std::vector<std::string> check_discretization(const std::vector<Rational>& x, const DiscreteVector& d,
                                              const Problem& problem)
{
    std::vector<std::string> out;
    const Rational unit(1, d.N);
    Rational l1 = 0, total = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const PageId p = static_cast<PageId>(i);
        const long c = d.counts[i];
        if (c < 0 || c > d.N)
            out.push_back("count out of range at " + page_name(problem, p));
        const Rational diff = abs(d.value(p) - x[i]);
        l1 += diff;
        total += d.value(p);
        if (diff >= unit)
            out.push_back("page error >= 1/N at " + page_name(problem, p));
        if ((is_zero(x[i]) || is_one(x[i])) && d.value(p) != x[i])
            out.push_back("integral value moved at " + page_name(problem, p));
    }
    for (AgentId a = 0; a < problem.m(); ++a) {
        Rational sx = 0, sd = 0;
        for (PageId p : problem.universe.pages_of(a)) {
            sx += x[static_cast<std::size_t>(p)];
            sd += d.value(p);
        }
        if (abs(sx - sd) >= unit)
            out.push_back("agent " + std::to_string(a) + " mass error >= 1/N");
        if (sd < problem.reserve(a))
            out.push_back("agent " + std::to_string(a) + " reserve broken after discretizing");
    }
    if (total != problem.k())
        out.push_back("discretized total " + to_fraction_string(total) + " ≠ k");
    const long k = problem.k();
    if (l1 > make_rational(k * k, d.N))
        out.push_back("Σ|x̃ - x| = " + to_fraction_string(l1) + " exceeds k²/N");
    return out;
}

std::vector<Rational> cache_vector(const EngineState& state)
{
    std::vector<Rational> x(state.y.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = 1 - state.y[i];
    return x;
}

std::vector<PagePair> diff_matching(const DiscreteVector& before, const DiscreteVector& after, const Problem& problem)
{
    const std::size_t n = before.counts.size();
    std::vector<std::vector<PageId>> inc(static_cast<std::size_t>(problem.m())), dec(inc.size());
    long np = 0, nq = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const long d = after.counts[i] - before.counts[i];
        auto& bucket = d > 0 ? inc : dec;
        const AgentId a = problem.universe.owner(static_cast<PageId>(i));
        for (long j = 0; j < std::abs(d); ++j)
            bucket[static_cast<std::size_t>(a)].push_back(static_cast<PageId>(i));
        (d > 0 ? np : nq) += std::abs(d);
    }
    if (np != nq)
        throw RoundingError("diff_matching: |P| ≠ |Q|");

    std::vector<PagePair> pairs;
    std::vector<PageId> rest_p, rest_q;
    for (std::size_t a = 0; a < inc.size(); ++a) {
        const std::size_t same = std::min(inc[a].size(), dec[a].size());
        for (std::size_t j = 0; j < same; ++j)
            pairs.push_back({inc[a][j], dec[a][j]});
        rest_p.insert(rest_p.end(), inc[a].begin() + static_cast<long>(same), inc[a].end());
        rest_q.insert(rest_q.end(), dec[a].begin() + static_cast<long>(same), dec[a].end());
    }
    for (std::size_t j = 0; j < rest_p.size(); ++j)
        pairs.push_back({rest_p[j], rest_q[j]});

    // every prefix keeps the reserves
    std::vector<long> mass(inc.size(), 0);
    for (std::size_t i = 0; i < n; ++i)
        mass[static_cast<std::size_t>(problem.universe.owner(static_cast<PageId>(i)))] += before.counts[i];
    for (const auto& pr : pairs) {
        ++mass[static_cast<std::size_t>(problem.universe.owner(pr.p))];
        --mass[static_cast<std::size_t>(problem.universe.owner(pr.q))];
        for (AgentId a = 0; a < problem.m(); ++a)
            if (mass[static_cast<std::size_t>(a)] < before.N * problem.reserve(a))
                throw RoundingError("diff_matching: prefix breaks the reserve of agent " + std::to_string(a));
    }
    return pairs;
}

Ensemble::Ensemble(const Problem& problem, long N, const std::vector<PageId>& initial)
    : problem_(problem),
      states_(static_cast<std::size_t>(N), std::vector<char>(problem.universe.size(), 0)),
      fetches_(static_cast<std::size_t>(N), 0)
{
    for (auto& s : states_)
        for (PageId p : initial)
            s[static_cast<std::size_t>(p)] = 1;
}

Ensemble::Ensemble(const Problem& problem, const std::vector<std::vector<PageId>>& states)
    : problem_(problem),
      states_(states.size(), std::vector<char>(problem.universe.size(), 0)),
      fetches_(states.size(), 0)
{
    for (std::size_t s = 0; s < states.size(); ++s)
        for (PageId p : states[s])
            states_[s][static_cast<std::size_t>(p)] = 1;
}

long Ensemble::count(PageId p) const
{
    long c = 0;
    for (const auto& s : states_)
        c += s[static_cast<std::size_t>(p)];
    return c;
}

int Ensemble::agent_count(long s, AgentId a) const
{
    int c = 0;
    for (PageId p : problem_.universe.pages_of(a))
        c += contains(s, p) ? 1 : 0;
    return c;
}

std::vector<PageId> Ensemble::pages(long s) const
{
    std::vector<PageId> out;
    for (std::size_t p = 0; p < problem_.universe.size(); ++p)
        if (states_[static_cast<std::size_t>(s)][p])
            out.push_back(static_cast<PageId>(p));
    return out;
}

void Ensemble::add(long s, PageId p)
{
    auto& cell = states_[static_cast<std::size_t>(s)][static_cast<std::size_t>(p)];
    if (cell)
        throw RoundingError("add: page already in state\n" + dump());
    cell = 1;
    ++fetches_[static_cast<std::size_t>(s)];
}

void Ensemble::remove(long s, PageId p)
{
    auto& cell = states_[static_cast<std::size_t>(s)][static_cast<std::size_t>(p)];
    if (!cell)
        throw RoundingError("remove: page not in state\n" + dump());
    cell = 0;
}

void Ensemble::reset_fetches() { std::fill(fetches_.begin(), fetches_.end(), 0); }

std::vector<std::string> Ensemble::check(const DiscreteVector& target) const
{
    std::vector<std::string> out;
    for (long s = 0; s < size(); ++s) {
        if (static_cast<int>(pages(s).size()) != problem_.k())
            out.push_back("state " + std::to_string(s) + " does not hold k pages");
        for (AgentId a = 0; a < problem_.m(); ++a)
            if (agent_count(s, a) < problem_.reserve(a))
                out.push_back("state " + std::to_string(s) + " breaks the reserve of agent " + std::to_string(a));
    }
    for (std::size_t p = 0; p < problem_.universe.size(); ++p)
        if (count(static_cast<PageId>(p)) != target.counts[p])
            out.push_back("marginal of " + page_name(problem_, static_cast<PageId>(p)) + " is " +
                          std::to_string(count(static_cast<PageId>(p))) + ", expected " +
                          std::to_string(target.counts[p]));
    return out;
}

std::string Ensemble::dump() const
{
    std::ostringstream os;
    for (long s = 0; s < size(); ++s) {
        os << "state " << s << ":";
        for (PageId p : pages(s))
            os << ' ' << page_name(problem_, p);
        os << '\n';
    }
    return os.str();
}

namespace {

// Restores agent a's reserve in state v by trading with a state w that has
// surplus. Returns removals (2) or 0 if nothing was needed.
int repair(Ensemble& e, const Problem& problem, long v, AgentId a)
{
    if (e.agent_count(v, a) >= problem.reserve(a))
        return 0;
    long w = -1;
    for (long s = 0; s < e.size() && w < 0; ++s)
        if (e.agent_count(s, a) > problem.reserve(a))
            w = s;
    if (w < 0)
        throw RoundingError("repair: no state with surplus for agent " + std::to_string(a) + "\n" + e.dump());
    PageId moved = -1;
    for (PageId p : problem.universe.pages_of(a))
        if (e.contains(w, p) && !e.contains(v, p)) {
            moved = p;
            break;
        }
    if (moved < 0)
        throw RoundingError("repair: no movable page of agent " + std::to_string(a) + "\n" + e.dump());
    e.remove(w, moved);
    e.add(v, moved);
    for (AgentId j = 0; j < problem.m(); ++j) {
        if (e.agent_count(v, j) <= problem.reserve(j))
            continue;
        for (PageId p : problem.universe.pages_of(j))
            if (e.contains(v, p) && !e.contains(w, p)) {
                e.remove(v, p);
                e.add(w, p);
                return 2;
            }
    }
    throw RoundingError("repair: no agent with a surplus page to hand back\n" + e.dump());
}

} // namespace

int apply_pair(Ensemble& e, const Problem& problem, PageId p, PageId q)
{
    int removals = 0;
    std::vector<long> touched;
    long swap = -1;
    for (long s = 0; s < e.size() && swap < 0; ++s)
        if (!e.contains(s, p) && e.contains(s, q))
            swap = s;
    if (swap >= 0) {
        e.remove(swap, q);
        e.add(swap, p);
        removals = 1;
        touched.push_back(swap);
    } else {
        long S = -1, T = -1;
        for (long s = 0; s < e.size(); ++s) {
            if (S < 0 && !e.contains(s, p))
                S = s;
            if (T < 0 && e.contains(s, q))
                T = s;
        }
        if (S < 0 || T < 0)
            throw RoundingError("apply_pair: no state can take " + page_name(problem, p) + " or give up " +
                                page_name(problem, q) + "\n" + e.dump());
        e.add(S, p);
        e.remove(T, q);
        PageId r = -1;
        for (std::size_t c = 0; c < problem.universe.size() && r < 0; ++c)
            if (e.contains(S, static_cast<PageId>(c)) && !e.contains(T, static_cast<PageId>(c)))
                r = static_cast<PageId>(c);
        if (r < 0)
            throw RoundingError("apply_pair: S \\ T is empty\n" + e.dump());
        e.remove(S, r);
        e.add(T, r);
        removals = 2;
        touched.push_back(S);
        touched.push_back(T);
    }
    for (long v : touched)
        for (AgentId a = 0; a < problem.m(); ++a)
            removals += repair(e, problem, v, a);
    if (removals > 6)
        throw RoundingError("apply_pair: " + std::to_string(removals) + " removals for one pair");
    return removals;
}

long sync(Ensemble& ensemble, const Problem& problem, const DiscreteVector& before, const DiscreteVector& after)
{
    long removals = 0;
    for (const auto& pr : diff_matching(before, after, problem))
        removals += apply_pair(ensemble, problem, pr.p, pr.q);
    return removals;
}

Rational step_cost(const DiscreteVector& a, const DiscreteVector& b)
{
    long l1 = 0;
    for (std::size_t i = 0; i < a.counts.size(); ++i)
        l1 += std::abs(a.counts[i] - b.counts[i]);
    return make_rational(l1, 2 * a.N);
}

Rational step_cost(const std::vector<Rational>& a, const std::vector<Rational>& b)
{
    Rational l1 = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        l1 += abs(a[i] - b[i]);
    return l1 / 2;
}

RoundingRun run_randomized(const Problem& problem, std::uint64_t seed, long n_override)
{
    RoundingRun run;
    const long k = problem.k();
    run.N = n_override > 0 ? n_override : k * k * k;
    const bool bounds_apply = run.N >= k * k * k;
    std::mt19937_64 rng(seed);
    run.follow_index = std::uniform_int_distribution<long>(0, run.N - 1)(rng);

    const auto order = default_order(problem);
    Engine engine(problem);
    Ensemble ensemble(problem, run.N, problem.initial);
    std::vector<Rational> x = cache_vector(engine.state());
    DiscreteVector xt = discretize(x, order, problem, run.N);
    run.state_costs.assign(static_cast<std::size_t>(run.N), 0);
    run.integral_cost = run.expected_cost = run.fractional_cost = run.discretized_cost = 0;
    long total_removals = 0;

    auto note = [&](std::size_t t, const std::string& what, bool hard) {
        (hard ? run.violations : run.warnings).push_back("t=" + std::to_string(t) + ": " + what);
    };
    for (const auto& v : check_discretization(x, xt, problem))
        note(0, v, true);

    for (PageId page : problem.requests) {
        const StepReport report = engine.serve(page);
        std::vector<Rational> x2 = cache_vector(engine.state());
        DiscreteVector xt2 = discretize(x2, order, problem, run.N);
        for (const auto& v : check_discretization(x2, xt2, problem))
            note(report.t, v, true);

        RoundingStep step;
        step.t = report.t;
        step.fractional_cost = step_cost(x, x2);
        step.discretized_cost = step_cost(xt, xt2);
        if (step.fractional_cost != report.fetch_cost)
            note(report.t, "fractional movement differs from the fetch cost", true);

        ensemble.reset_fetches();
        step.removals = sync(ensemble, problem, xt, xt2);
        for (const auto& v : ensemble.check(xt2))
            note(report.t, v, true);
        long fetched = 0;
        for (long s = 0; s < run.N; ++s) {
            const long f = ensemble.fetches()[static_cast<std::size_t>(s)];
            run.state_costs[static_cast<std::size_t>(s)] += f;
            fetched += f;
        }
        if (fetched != step.removals)
            note(report.t, "fetches and removals disagree", true);
        step.followed_fetches = ensemble.fetches()[static_cast<std::size_t>(run.follow_index)];

        if (step.discretized_cost > 2 * step.fractional_cost)
            note(report.t, "discretized cost " + to_fraction_string(step.discretized_cost) + " above twice " +
                               to_fraction_string(step.fractional_cost), bounds_apply);
        if (make_rational(step.removals, run.N) > 6 * step.discretized_cost)
            note(report.t, "ensemble cost above six times the discretized cost", true);

        total_removals += step.removals;
        run.fractional_cost += step.fractional_cost;
        run.discretized_cost += step.discretized_cost;
        run.integral_cost += step.followed_fetches;
        run.steps.push_back(std::move(step));
        x = std::move(x2);
        xt = std::move(xt2);
    }
    run.expected_cost = make_rational(total_removals, run.N);
    if (run.expected_cost > 12 * run.fractional_cost)
        note(problem.horizon(), "expected cost above twelve times the fractional cost", bounds_apply);
    long all = 0;
    for (long c : run.state_costs)
        all += c;
    if (make_rational(all, run.N) != run.expected_cost)
        note(problem.horizon(), "mean state cost differs from the expected cost", true);
    return run;
}

void write_rounding_csv(std::ostream& out, const RoundingRun& run)
{
    out << "t,removals,discretized_cost,fractional_cost,followed_state_miss\n";
    for (const auto& s : run.steps)
        out << s.t << ',' << s.removals << ',' << to_fraction_string(s.discretized_cost) << ','
            << to_fraction_string(s.fractional_cost) << ',' << s.followed_fetches << '\n';
}

} // namespace cwr
