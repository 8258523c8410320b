// SPDX-License-Identifier: Apache-2.0
#pragma once

// Seeded single-defect mutants of the creature fixtures, one class per validator
// error code. Each mutant must be reported with exactly its class's code.

#include <string>
#include <vector>

namespace morphoforge::fixtures
{

struct MutationClassResult
{
    std::string name;
    int mutants = 0;
    int detected = 0;
    std::string first_failure;
};

struct MutationSuiteResult
{
    std::vector<MutationClassResult> classes;
    /// Errors reported on unmutated fixtures.
    int false_positives = 0;
};

auto run_mutation_suite() -> MutationSuiteResult;

} // namespace morphoforge::fixtures
