#pragma once

#include <iosfwd>

namespace qnet::selftest {

/// Fault hooks for exercising the failure path of the self-test harness.
enum class FaultInject { none, sift_mismatch };

/// Runs the built-in oracle suite (brute-force correlation, exhaustive
/// sifting, TDEV white-noise level, synthetic peak fit, two-way algebra) and
/// prints one timed pass/fail line per suite. Returns true when all pass.
bool run_selftest(std::ostream& out, FaultInject fault = FaultInject::none);

}  // namespace qnet::selftest
