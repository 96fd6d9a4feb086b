#pragma once

#include <string>
#include <vector>

#include "wavetts/tensor.h"

namespace wavetts::verify {

struct PropertyResult {
    std::string suite;
    std::string name;
    bool pass = false;
    double tolerance = 0.0;
    double measured = 0.0;
};

struct VerifyOptions {
    uint64_t seed = 1;
    // Test fixture: perturbs the named op's analytic gradient before
    // comparison so the harness's failure path can itself be verified.
    std::string corrupt_backward_op;
};

// Property suites runnable standalone: "gradcheck", "normalization",
// "causality", or "all".
std::vector<PropertyResult> run_suite(const std::string& suite, const VerifyOptions& opts);

// One line per property: <suite>.<name>  PASS|FAIL  tol=<t> measured=<m>.
std::string format_report(const std::vector<PropertyResult>& results);

bool all_passed(const std::vector<PropertyResult>& results);

}  // namespace wavetts::verify
