#pragma once

#include "ecommit/coalition.hpp"
#include "ecommit/protocol.hpp"
#include "ecommit/scenario.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ecommit {

/// How a run was set up, as recorded next to its results.
struct RunInfo {
    std::string anmMode;
    CoalitionSet coalitions;
    std::uint64_t seed = 0;
};

/// Long form "ssp,kind,row,column,value": every nonzero cm cell of every
/// SSP (kind cm), then every flexibility factor (kind fx, empty column).
void writeCommitmentsCsv(const std::vector<SspOutcome>& ssps, std::ostream& out);

std::string summaryJson(const Scenario& scenario, const MatchingResult& result, const RunInfo& info);

/// Creates `dir` if needed and writes commitments.csv, convergence.csv,
/// messages.csv and summary.json. Nothing time- or host-dependent is written.
void writeResultsDirectory(const std::filesystem::path& dir, const Scenario& scenario, const MatchingResult& result,
                           const RunInfo& info);

struct SspResultRow {
    std::string id;
    double energyStatus = 0.0;
    /// Recomputed from commitments.csv: Utility row plus Utility column.
    double utilityInteraction = 0.0;
};

/// What the report needs from a results directory.
struct RunRecord {
    std::filesystem::path dir;
    std::string fingerprint;
    std::string anmMode;
    std::size_t coalitionCount = 0;
    std::size_t iterations = 0;
    double initialAbsStatus = 0.0;
    double finalUtility = 0.0;
    std::vector<SspResultRow> ssps;
};

/// Throws StructuralError when a file is missing or malformed.
RunRecord readResultsDirectory(const std::filesystem::path& dir);

}  // namespace ecommit
