#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace drpets {

struct SelftestRow {
    std::string suite;
    bool pass = false;
    std::string detail;
};

/// Oracle agreement, score finite differences, dual optimality and epsilon = 0 equivalence.
std::vector<SelftestRow> run_selftest(std::uint64_t seed = 0);

/// Fixed-width table, one row per suite.
std::string format_selftest(const std::vector<SelftestRow>& rows);

}  // namespace drpets
