// Acceptance battery: one PASS/FAIL line per criterion. Exits 0 once the
// battery has run to completion; pass --strict to exit 1 on any FAIL.
// The lines are also written to acceptance.txt in the working directory.
#include "cwr/harness.hpp"

#include <cstring>
#include <fstream>
#include <iostream>

int main(int argc, char** argv)
{
    bool strict = false;
    for (int i = 1; i < argc; ++i)
        strict |= std::strcmp(argv[i], "--strict") == 0;

    cwr::SuiteOptions options;  // 1000 traces, 200 tiny, 200 paging, 10^4 RM seeds
    const cwr::SuiteResult result = cwr::run_suite_with_determinism(options);
    std::ofstream copy("acceptance.txt");
    for (const auto& c : result.criteria) {
        std::cout << cwr::format_criterion(c) << '\n';
        copy << cwr::format_criterion(c) << '\n';
    }
    std::cout << result.criteria.size() - result.failed() << "/" << result.criteria.size() << " criteria pass\n";
    return strict && result.failed() > 0 ? 1 : 0;
}
