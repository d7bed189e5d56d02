#pragma once

#include <cstdint>
#include <iosfwd>
#include <json.hpp>
#include <string>
#include <vector>

#include "sr/comparators.hpp"
#include "sr/inversion.hpp"
#include "sr/montecarlo.hpp"
#include "sr/sr_test.hpp"
#include "sr/strata.hpp"

namespace sr {

// JSON views of the result types. Non-finite numbers become null, except
// interval bounds which serialize as "inf"/"-inf" strings.
nlohmann::json json_of(const StrataDiagnostics& d);
nlohmann::json json_of(const TestResult& r, bool include_permuted = false);
nlohmann::json json_of(const ComparatorResult& r);
nlohmann::json json_of(const ConfidenceInterval& ci, bool include_grid = false);
nlohmann::json json_of(const PowerPoint& p);
nlohmann::json json_of(const std::vector<PowerPoint>& pts);
nlohmann::json json_of(const StrataMoments& m);

// Output envelope shared by every CLI subcommand.
nlohmann::json envelope(const std::string& command, std::uint64_t seed, nlohmann::json config,
                        nlohmann::json result, const std::vector<std::string>& warnings);

// Power results as CSV, preceded by '#' comment lines recording how they
// were produced.
void write_power_csv(std::ostream& os, const std::vector<PowerPoint>& pts,
                     const std::vector<std::string>& comments);

}  // namespace sr
