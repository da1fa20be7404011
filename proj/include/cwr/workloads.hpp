#ifndef CWR_WORKLOADS_HPP
#define CWR_WORKLOADS_HPP

#include "cwr/instance.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cwr {

enum class WorkloadModel { Zipf, CycleAdversary, IsolationAdversary, Uniform };

const char* to_string(WorkloadModel model);
std::optional<WorkloadModel> parse_workload_model(const std::string& name);

struct WorkloadSpec {
    WorkloadModel model = WorkloadModel::Uniform;
    int m = 1;
    int k = 2;
    std::vector<int> reserves{0};
    std::vector<int> pages_per_agent{3};
    int length = 10;  // T
    double zipf_exponent = 1.0;
    std::uint64_t seed = 0;
};

/// Problems with the spec itself (empty means consistent).
std::vector<std::string> check_spec(const WorkloadSpec& spec);

/// Deterministic for a given spec (including the seed). Page identifiers are
/// "pNN", zero padded so identifier order matches creation order.
Instance generate(const WorkloadSpec& spec);

struct WorkloadLimits {
    int max_agents = 4;
    int max_k = 6;
    int max_universe = 20;
    int max_length = 200;
    int min_k = 1;
};

/// Draws a random consistent spec within the limits; used by property tests
/// and the acceptance battery.
WorkloadSpec random_spec(std::uint64_t seed, const WorkloadLimits& limits);

/// Single agent without reserve: plain paging.
WorkloadSpec random_paging_spec(std::uint64_t seed, int max_k, int max_pages, int max_length);

} // namespace cwr

#endif
