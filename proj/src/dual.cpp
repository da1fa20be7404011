#include "cwr/dual.hpp"

#include "cwr/accounting.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace cwr {

namespace {

bool has(const std::vector<AgentId>& v, AgentId a) { return std::find(v.begin(), v.end(), a) != v.end(); }

bool in_sorted(const std::vector<PageId>& v, PageId p) { return std::binary_search(v.begin(), v.end(), p); }

std::size_t minus_size(const std::vector<PageId>& a, const std::vector<PageId>& b)
{
    std::size_t n = 0;
    for (PageId p : a)
        n += in_sorted(b, p) ? 0 : 1;
    return n;
}

std::size_t union_size(const std::vector<PageId>& a, const std::vector<PageId>& b)
{
    return a.size() + minus_size(b, a);
}

const AgentSnapshot& require_snapshot(const PhaseRecord& phase, AgentId i)
{
    const AgentSnapshot* s = phase.snapshot_of(i);
    if (!s)
        throw DualInconsistency(DualCheck::Snapshot, "phase " + std::to_string(phase.index) + ": no reset snapshot for agent " +
                                std::to_string(i));
    return *s;
}

// Pages of agent i outside P(i, r_i - 1) ∪ P(i, r_i).
std::vector<PageId> untouched_pages(const Problem& problem, const AgentSnapshot& s)
{
    std::vector<PageId> out;
    for (PageId q : problem.universe.pages_of(s.agent))
        if (!in_sorted(s.previous, q) && !in_sorted(s.current, q))
            out.push_back(q);
    return out;
}

Rational n_minus_k(const Problem& problem)
{
    return Rational(static_cast<long>(problem.universe.size()) - problem.k());
}

Rational ni_minus_ki(const Problem& problem, AgentId i)
{
    return Rational(problem.universe.agent_size(i) - problem.reserve(i));
}

} // namespace

RequestIndex::RequestIndex(const Problem& problem) : times_(problem.universe.size())
{
    for (std::size_t t = 1; t <= problem.requests.size(); ++t)
        times_[static_cast<std::size_t>(problem.requests[t - 1])].push_back(t);
}

int RequestIndex::ordinal(PageId q, std::size_t t) const
{
    const auto& v = times(q);
    return static_cast<int>(std::upper_bound(v.begin(), v.end(), t) - v.begin());
}

Rational DualSolution::beta_at(std::size_t t, AgentId i) const
{
    auto it = beta.find({t, i});
    return it == beta.end() ? Rational(0) : it->second;
}

Rational DualSolution::gamma_at(PageId q, int a) const
{
    auto it = gamma.find({q, a});
    return it == gamma.end() ? Rational(0) : it->second;
}

CSet compute_C(const PhaseRecord& phase, const EventLog& log, const Problem& problem)
{
    if (!phase.sealed)
        throw DualInconsistency(DualCheck::CSet, "compute_C on an open phase");
    CSet out;
    std::vector<long> clean_by_agent(static_cast<std::size_t>(problem.m()), 0);
    for (std::size_t t = phase.first_t; t <= phase.last_t; ++t) {
        const StepReport& s = log.steps.at(t - 1);
        if (is_one(s.fetch_cost) && !s.requester_isolated)
            out.C.push_back(t);
        if (s.classification == Classification::Clean)
            ++clean_by_agent[static_cast<std::size_t>(s.agent)];
    }
    if (out.C != phase.full_misses)
        throw DualInconsistency(DualCheck::CSet, "phase " + std::to_string(phase.index) + ": recorded C differs from the step log");
    out.ell = out.C.size();

    long extra = 0;
    for (AgentId i = 0; i < problem.m(); ++i) {
        const bool at_start = has(phase.isolated_at_start, i);
        const bool at_end = has(phase.isolated_at_end, i);
        if (!at_start && !at_end) {
            const auto& s = require_snapshot(phase, i);
            out.closed_form += static_cast<long>(minus_size(s.current, s.previous));
        } else if (at_start && !at_end) {
            const auto& s = require_snapshot(phase, i);
            out.closed_form += static_cast<long>(s.current.size()) - problem.reserve(i);
        } else if (!at_start && at_end) {
            extra += clean_by_agent[static_cast<std::size_t>(i)];
        }
    }
    out.closed_form_with_newly_isolated = out.closed_form + extra;
    if (out.closed_form_with_newly_isolated != static_cast<long>(out.ell))
        throw DualInconsistency(DualCheck::CSet, "phase " + std::to_string(phase.index) + ": |C| = " + std::to_string(out.ell) +
                                " but per-agent count is " + std::to_string(out.closed_form_with_newly_isolated));
    return out;
}

Rational update_stage1(DualSolution& dual, const PhaseRecord& phase, const Problem& problem,
                       const RequestIndex& index)
{
    const std::size_t ell = phase.ell();
    if (ell == 0)
        throw DualInconsistency(DualCheck::Stage1Delta, "update_stage1 with an empty C");
    const Rational inc(1, static_cast<unsigned long>(ell));

    Rational d_alpha = 0, d_beta_weighted = 0, d_gamma = 0;
    std::vector<std::pair<AgentId, std::vector<PageId>>> gamma_targets;
    long expected = 0;
    for (AgentId i = 0; i < problem.m(); ++i) {
        if (has(phase.isolated_at_end, i))
            continue;
        const auto& s = require_snapshot(phase, i);
        gamma_targets.emplace_back(i, untouched_pages(problem, s));
        expected += static_cast<long>(minus_size(s.previous, s.current));
    }
    for (std::size_t t : phase.full_misses) {
        dual.alpha.at(t) += inc;
        d_alpha += inc;
        for (AgentId i : phase.isolated_at_end) {
            dual.beta[{t, i}] += inc;
            d_beta_weighted += ni_minus_ki(problem, i) * inc;
        }
        for (const auto& [i, pages] : gamma_targets) {
            for (PageId q : pages) {
                dual.gamma[{q, index.ordinal(q, t)}] += inc;
                d_gamma += inc;
            }
        }
    }

    Rational alpha_sum = 0;
    for (std::size_t t = phase.first_t; t <= phase.last_t; ++t)
        alpha_sum += dual.alpha.at(t);
    if (!is_one(alpha_sum))
        throw DualInconsistency(DualCheck::PhaseSums, "phase " + std::to_string(phase.index) + ": α sums to " + to_fraction_string(alpha_sum));
    for (AgentId i : phase.isolated_at_end) {
        Rational beta_sum = 0;
        for (std::size_t t = phase.first_t; t <= phase.last_t; ++t)
            beta_sum += dual.beta_at(t, i);
        if (!is_one(beta_sum))
            throw DualInconsistency(DualCheck::PhaseSums, "phase " + std::to_string(phase.index) + ": β of agent " + std::to_string(i) +
                                    " sums to " + to_fraction_string(beta_sum));
    }

    const Rational delta = n_minus_k(problem) * d_alpha - d_beta_weighted - d_gamma;
    if (delta != expected)
        throw DualInconsistency(DualCheck::Stage1Delta, "phase " + std::to_string(phase.index) + ": stage-1 change " + to_fraction_string(delta) +
                                " ≠ stale drops " + std::to_string(expected));
    return delta;
}

Rational update_stage2(DualSolution& dual, const PhaseRecord& phase, const PhaseRecord* previous,
                       const Problem& problem, const RequestIndex& index)
{
    Rational delta = 0;
    Rational expected = 0;
    for (AgentId i = 0; i < problem.m(); ++i) {
        if (!has(phase.isolated_at_start, i) || has(phase.isolated_at_end, i))
            continue;
        if (!previous)
            throw DualInconsistency(DualCheck::Snapshot, "agent isolated before the first phase");
        const auto& s = require_snapshot(phase, i);
        const auto pages = untouched_pages(problem, s);
        Rational moved = 0;
        for (std::size_t t : previous->full_misses) {
            auto it = dual.beta.find({t, i});
            if (it == dual.beta.end() || sgn(it->second) <= 0)
                continue;
            const Rational b = it->second;
            for (PageId q : pages)
                dual.gamma[{q, index.ordinal(q, t)}] += b;
            delta += ni_minus_ki(problem, i) * b - b * static_cast<long>(pages.size());
            moved += b;
            it->second = 0;
        }
        // β of the previous phase sums to 1 unless that phase had no updates.
        if (!previous->full_misses.empty())
            expected += static_cast<long>(union_size(s.previous, s.current)) - problem.reserve(i);
        if (!previous->full_misses.empty() && !is_one(moved))
            throw DualInconsistency(DualCheck::Stage2Delta, "phase " + std::to_string(phase.index) + ": reset β mass of agent " +
                                    std::to_string(i) + " is " + to_fraction_string(moved));
    }
    if (delta != expected)
        throw DualInconsistency(DualCheck::Stage2Delta, "phase " + std::to_string(phase.index) + ": stage-2 change " + to_fraction_string(delta) +
                                " ≠ " + to_fraction_string(expected));
    return delta;
}

Rational dual_objective(const DualSolution& dual, const Problem& problem)
{
    Rational obj = 0;
    for (const auto& a : dual.alpha)
        obj += a;
    obj *= n_minus_k(problem);
    for (const auto& [key, b] : dual.beta)
        obj -= ni_minus_ki(problem, key.second) * b;
    for (const auto& [key, g] : dual.gamma)
        obj -= g;
    return obj;
}

Rational dual_closed_form(const EventLog& log, const Problem& problem, bool skip_empty_phases)
{
    Rational total = 0;
    const PhaseRecord* previous = nullptr;
    for (const auto& rec : log.phases) {
        if (!rec.sealed)
            break;
        for (const auto& s : rec.resets) {
            if (!skip_empty_phases || rec.ell() > 0)
                total += static_cast<long>(minus_size(s.previous, s.current));
            if (has(rec.isolated_at_start, s.agent) &&
                (!skip_empty_phases || (previous && previous->ell() > 0)))
                total += static_cast<long>(union_size(s.previous, s.current)) - problem.reserve(s.agent);
        }
        previous = &rec;
    }
    return total;
}

FeasibilityReport check_feasibility(const DualSolution& dual, const Problem& problem, const RequestIndex& index,
                                    std::size_t horizon)
{
    FeasibilityReport rep;
    // prefix[i][t] = Σ_{s <= t} (α(s) - β(s, i))
    std::vector<std::vector<Rational>> prefix(static_cast<std::size_t>(problem.m()),
                                              std::vector<Rational>(horizon + 1));
    for (AgentId i = 0; i < problem.m(); ++i) {
        auto& pre = prefix[static_cast<std::size_t>(i)];
        for (std::size_t t = 1; t <= horizon; ++t)
            pre[t] = pre[t - 1] + dual.alpha.at(t) - dual.beta_at(t, i);
    }
    bool first = true, first_pos = true;
    for (PageId q = 0; q < static_cast<PageId>(problem.universe.size()); ++q) {
        const auto& pre = prefix[static_cast<std::size_t>(problem.universe.owner(q))];
        const auto& times = index.times(q);
        const int last = index.ordinal(q, horizon);
        for (int a = 0; a <= last; ++a) {
            const std::size_t lo = a == 0 ? 0 : times[static_cast<std::size_t>(a - 1)];
            const std::size_t hi = a < last ? times[static_cast<std::size_t>(a)] : horizon + 1;
            // interval is (lo, hi); empty when hi = lo + 1
            Rational slack = hi > lo + 1 ? pre[hi - 1] - pre[lo] : Rational(0);
            slack -= dual.gamma_at(q, a);
            ++rep.constraints;
            if (first || slack > rep.max_slack)
                rep.max_slack = slack;
            first = false;
            if (a >= 1 && (first_pos || slack > rep.max_slack_positive)) {
                rep.max_slack_positive = slack;
                first_pos = false;
            }
            if (slack > kSlackBound)
                rep.violations.push_back({q, a, slack});
        }
    }
    return rep;
}

Certificate certify(const EventLog& log, const Rational& total_cost, const Problem& problem)
{
    DualSolution dual;
    return certify(log, total_cost, problem, dual);
}

Certificate certify(const EventLog& log, const Rational& total_cost, const Problem& problem, DualSolution& dual)
{
    Certificate cert;
    cert.horizon = log.sealed_horizon();
    cert.total_cost = total_cost;
    cert.alg_cost = 0;
    for (const auto& s : log.steps)
        if (s.t <= cert.horizon)
            cert.alg_cost += s.fetch_cost;

    dual = DualSolution(problem.horizon());
    const RequestIndex index(problem);
    Rational running = 0;
    try {
        const PhaseRecord* previous = nullptr;
        for (const auto& rec : log.phases) {
            if (!rec.sealed)
                break;
            PhaseDelta pd;
            pd.phase = rec.index;
            const CSet c = compute_C(rec, log, problem);
            pd.ell = c.ell;
            pd.closed_form = c.closed_form;
            pd.closed_form_with_newly_isolated = c.closed_form_with_newly_isolated;
            if (c.closed_form != static_cast<long>(c.ell))
                ++cert.closed_form_mismatches;
            pd.stage1 = 0;
            pd.stage2 = 0;
            if (c.ell == 0) {
                pd.skipped = true;
                ++cert.skipped_phases;
            } else {
                pd.stage1 = update_stage1(dual, rec, problem, index);
            }
            pd.stage2 = update_stage2(dual, rec, previous, problem, index);
            if (sgn(pd.stage1) < 0 || sgn(pd.stage2) < 0)
                cert.failures.push_back("dual objective decreased in phase " + std::to_string(rec.index)), cert.objective_ok = false;
            running += pd.stage1 + pd.stage2;
            cert.phases.push_back(pd);
            previous = &rec;
        }
    } catch (const DualInconsistency& e) {
        cert.failures.push_back(e.what());
        switch (e.check()) {
        case DualCheck::CSet:
        case DualCheck::Snapshot:
            cert.c_set_ok = false;
            break;
        case DualCheck::PhaseSums:
            cert.phase_sums_ok = false;
            break;
        case DualCheck::Stage1Delta:
        case DualCheck::Stage2Delta:
            cert.stage_deltas_ok = false;
            break;
        }
    }

    cert.dual_value = dual_objective(dual, problem);
    cert.closed_form = dual_closed_form(log, problem, false);
    cert.closed_form_effective = dual_closed_form(log, problem, true);
    if (cert.failures.empty()) {
        if (cert.dual_value != running)
            cert.objective_ok = false, cert.failures.push_back("objective " + to_fraction_string(cert.dual_value) + " ≠ accumulated deltas " +
                                    to_fraction_string(running));
        if (cert.dual_value != cert.closed_form_effective)
            cert.objective_ok = false, cert.failures.push_back("objective " + to_fraction_string(cert.dual_value) + " ≠ closed form " +
                                    to_fraction_string(cert.closed_form_effective));
    }

    const FeasibilityReport feas = check_feasibility(dual, problem, index, cert.horizon);
    cert.max_slack = feas.max_slack;
    cert.max_slack_positive = feas.max_slack_positive;
    cert.slack_ok = feas.violations.empty();
    for (const auto& v : feas.violations)
        cert.failures.push_back("slack " + to_fraction_string(v.slack) + " > 5 at page " +
                                format_page_ref(problem.universe.page(v.page)) + " a=" + std::to_string(v.a));

    // Pseudo-clean requests are paid for by the de-isolation terms.
    long pseudo_clean = 0, stale_drops = 0;
    for (const auto& rec : log.phases) {
        if (!rec.sealed)
            break;
        std::vector<long> pc(static_cast<std::size_t>(problem.m()), 0);
        for (std::size_t t = rec.first_t; t <= rec.last_t; ++t) {
            const auto& s = log.steps.at(t - 1);
            if (s.classification != Classification::PseudoClean)
                continue;
            ++pc[static_cast<std::size_t>(s.agent)];
            ++pseudo_clean;
            if (!has(rec.isolated_at_start, s.agent) || has(rec.isolated_at_end, s.agent))
                cert.pseudo_clean_ok = false, cert.failures.push_back("pseudo-clean request at t=" + std::to_string(t) +
                                        " from an agent that did not leave isolation");
        }
        for (const auto& s : rec.resets) {
            stale_drops += static_cast<long>(minus_size(s.previous, s.current));
            if (!has(rec.isolated_at_start, s.agent))
                continue;
            if (static_cast<long>(s.current.size()) - problem.reserve(s.agent) < pc[static_cast<std::size_t>(s.agent)])
                cert.pseudo_clean_ok = false, cert.failures.push_back("phase " + std::to_string(rec.index) + ": agent " + std::to_string(s.agent) +
                                        " has more pseudo-clean requests than |P(i,r_i)| - k_i");
        }
    }
    if (Rational(pseudo_clean + stale_drops) > cert.dual_value)
        cert.pseudo_clean_ok = false, cert.failures.push_back("pseudo-clean plus stale drops exceed the dual value");

    const double two_ln = 2.0 * std::log1p(static_cast<double>(problem.k()));
    cert.cost_rhs = two_ln * (static_cast<double>(problem.m()) * problem.k() + to_double(cert.dual_value));
    if (to_double(cert.alg_cost) > cert.cost_rhs + kPotentialEps)
        cert.cost_ok = false, cert.failures.push_back("cost exceeds 2ln(1+k)(mk + dual)");

    cert.lp_lower_bound = cert.dual_value / kSlackBound;
    cert.ratio_bound = sgn(cert.lp_lower_bound) > 0 ? to_double(cert.alg_cost / cert.lp_lower_bound)
                                                    : std::numeric_limits<double>::infinity();
    return cert;
}

std::string to_json(const Certificate& cert)
{
    nlohmann::ordered_json j;
    j["horizon"] = cert.horizon;
    j["alg_cost"] = to_fraction_string(cert.alg_cost);
    j["total_cost"] = to_fraction_string(cert.total_cost);
    j["dual_value"] = to_fraction_string(cert.dual_value);
    j["closed_form"] = to_fraction_string(cert.closed_form);
    j["lp_lower_bound"] = to_fraction_string(cert.lp_lower_bound);
    j["max_slack"] = to_fraction_string(cert.max_slack);
    j["max_slack_positive"] = to_fraction_string(cert.max_slack_positive);
    if (std::isfinite(cert.ratio_bound))
        j["ratio_bound"] = cert.ratio_bound;
    else
        j["ratio_bound"] = nullptr;
    j["cost_rhs"] = cert.cost_rhs;
    j["closed_form_mismatches"] = cert.closed_form_mismatches;
    j["skipped_phases"] = cert.skipped_phases;
    auto phases = nlohmann::ordered_json::array();
    for (const auto& p : cert.phases) {
        nlohmann::ordered_json e;
        e["r0"] = p.phase;
        e["ell"] = p.ell;
        e["closed_form"] = p.closed_form;
        e["closed_form_with_newly_isolated"] = p.closed_form_with_newly_isolated;
        e["stage1"] = to_fraction_string(p.stage1);
        e["stage2"] = to_fraction_string(p.stage2);
        e["skipped"] = p.skipped;
        phases.push_back(e);
    }
    j["phases"] = phases;
    j["failures"] = cert.failures;
    j["valid"] = cert.valid();
    return j.dump();
}

} // namespace cwr
