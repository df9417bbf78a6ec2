#pragma once

#include "ecommit/commitment.hpp"
#include "ecommit/lp.hpp"
#include "ecommit/model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ecommit {

/// What this SSP currently knows about one neighbouring SSP. `held` has
/// already been claimed and is fixed; `offered` is the latest surplus offer
/// not yet answered (0 when none).
struct PartnerCapacity {
    std::string id;
    double held = 0.0;
    double offered = 0.0;
    double offeredBound = 0.0;

    bool operator==(const PartnerCapacity&) const = default;
};

/// Energy this SSP has promised to a buying partner.
struct ExportCommitment {
    std::string buyer;
    double amount = 0.0;

    bool operator==(const ExportCommitment&) const = default;
};

/// Everything one SSP's matching LP is built from.
struct SspView {
    std::string id;
    std::vector<Subscriber> consumers;
    std::vector<Subscriber> producers;
    PreferenceTable preferences;
    /// Subscriber-level N; rows are this SSP's consumers.
    ConnectivityMatrix connectivity;
    std::vector<PartnerCapacity> partners;
    std::vector<ExportCommitment> exports;
    /// Subscriber id -> original SSP id. Only filled for the merged view of
    /// the centralized baseline; empty means every subscriber belongs to `id`.
    std::map<std::string, std::string> owner;

    PartnerCapacity* findPartner(const std::string& partnerId);
    const PartnerCapacity* findPartner(const std::string& partnerId) const;
    std::string ownerOf(const std::string& subscriberId) const;
};

/// View of one SSP with the given partners, all at zero capacity.
SspView makeView(const Scenario& scenario, const std::string& sspId,
                 const std::vector<std::string>& partnerIds = {});

/// Maps LP variables back onto commitment cells and flexibility factors.
struct MatchingLayout {
    struct Cell {
        std::size_t row = 0;
        std::size_t col = 0;
        std::size_t var = 0;
    };
    std::vector<Party> rows;
    std::vector<Party> cols;
    std::vector<Cell> cells;
    std::vector<std::pair<std::string, std::size_t>> flex;
};

struct MatchingProgram {
    lp::LinearProgram program;
    MatchingLayout layout;
};

/// Thrown when a matching LP has no feasible point, which only line limits
/// can cause.
class InfeasibleMatching : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

MatchingProgram buildMatchingProgram(const SspView& view, const MatchingWeights& weights,
                                     const std::optional<LineConstraintSet>& lines = std::nullopt);

lp::LinearProgram buildMatchingLP(const SspView& view, const MatchingWeights& weights,
                                  const std::optional<LineConstraintSet>& lines = std::nullopt);

struct MatchingSolution {
    CommitmentMatrix cm;
    FlexibilityAssignment fx;
    double objective = 0.0;
};

MatchingSolution solveDistMatching(const SspView& view, const MatchingWeights& weights,
                                   const std::optional<LineConstraintSet>& lines = std::nullopt);

/// Largest violation of the supply, demand, flexibility and connectivity
/// rules by (cm, fx), computed from the view alone.
double commitmentResidual(const SspView& view, const CommitmentMatrix& cm, const FlexibilityAssignment& fx);

/// Total demand actually committed: Σ fx(i)·Dc(i) over consumers.
double servedDemand(const SspView& view, const FlexibilityAssignment& fx);

struct Surplus {
    double exEnergy = 0.0;
    double totalEnergy = 0.0;
};

/// Producers with residual Ep(l) - cm(.,l) above tolerance are the ones
/// that can still supply; cm(.,l) counts consumers and exports, not sell-back.
Surplus aggregateSurplus(const SspConfig& ssp, const CommitmentMatrix& cm);
double aggregateBound(const SspConfig& ssp, const CommitmentMatrix& cm);
/// Bound broadcast with a surplus offer.
double offerBound(const Surplus& surplus);

/// All subscribers of all SSPs matched as one SSP. Cross-SSP pairs are
/// connected when both N(i, B) and N(A, B) hold and ranked by pt(i, B).
SspView mergedView(const Scenario& scenario);
MatchingSolution solveCentralized(const Scenario& scenario);

using CalibrationMetric = std::function<double(const Scenario&)>;

/// Coordinate hill climb over (w14, w2, w35) with x2 / /2 steps; a zero
/// weight steps up to its default instead. At most one accepted move per
/// coordinate per iteration; stops early once an iteration accepts nothing.
MatchingWeights calibrateWeights(const Scenario& scenario, const CalibrationMetric& metric, int iterations);

}  // namespace ecommit
