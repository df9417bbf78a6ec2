#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace ecommit {

/// Unordered SSP pair stored with the smaller id first.
using SspPair = std::pair<std::string, std::string>;
SspPair makePair(const std::string& a, const std::string& b);

/// p(a,b): belief that a and b end up in the same coalition.
class BeliefNeighborhoodMap {
public:
    BeliefNeighborhoodMap() = default;
    /// Every pair of `ids` at probability `prior`.
    BeliefNeighborhoodMap(const std::vector<std::string>& ids, double prior);

    double get(const std::string& a, const std::string& b) const;
    void set(const std::string& a, const std::string& b, double p);

    const std::vector<std::string>& ids() const { return ids_; }
    const std::map<SspPair, double>& pairs() const { return p_; }

    bool operator==(const BeliefNeighborhoodMap&) const = default;

private:
    std::vector<std::string> ids_;
    std::map<SspPair, double> p_;
};

/// Binary, symmetric, loop-free adjacency over SSP ids.
class ActualNeighborhoodMap {
public:
    ActualNeighborhoodMap() = default;
    explicit ActualNeighborhoodMap(std::vector<std::string> ids) : ids_(std::move(ids)) {}

    static ActualNeighborhoodMap meshed(const std::vector<std::string>& ids);

    void connect(const std::string& a, const std::string& b);
    bool connected(const std::string& a, const std::string& b) const;

    const std::vector<std::string>& ids() const { return ids_; }
    const std::set<SspPair>& edges() const { return edges_; }

    bool operator==(const ActualNeighborhoodMap&) const = default;

private:
    std::vector<std::string> ids_;
    std::set<SspPair> edges_;
};

struct SspStatus {
    std::string id;
    double status = 0.0;
};

/// Disjoint groups of SSP ids covering every SSP once.
struct CoalitionSet {
    std::vector<std::vector<std::string>> groups;

    bool operator==(const CoalitionSet&) const = default;
};

using CoalitionAlgorithm =
    std::function<CoalitionSet(const std::vector<SspStatus>&, int maxGroupSize, std::uint64_t seed)>;

/// Repeatedly merges the surplus group and the deficit group whose merge
/// cancels the most energy, among merges that respect maxGroupSize. Ties
/// prefer the merged group with the smaller |status|, then the pair that
/// comes first in input order. Deterministic; the seed is unused.
CoalitionSet greedyComplementary(const std::vector<SspStatus>& statuses, int maxGroupSize, std::uint64_t seed);

CoalitionSet formCoalitions(const std::vector<SspStatus>& statuses, int maxGroupSize, std::uint64_t seed,
                            const CoalitionAlgorithm& algorithm = greedyComplementary);

/// p' = (1 - eta) p + eta [a and b share a coalition].
BeliefNeighborhoodMap updateBNM(const BeliefNeighborhoodMap& bnm, const CoalitionSet& coalitions, double eta);

struct SnapshotMode {
    enum class Kind { Threshold, Sample } kind = Kind::Threshold;
    double tau = 0.5;
    std::uint64_t seed = 0;

    static SnapshotMode threshold(double tau = 0.5) { return {Kind::Threshold, tau, 0}; }
    static SnapshotMode sample(std::uint64_t seed) { return {Kind::Sample, 0.5, seed}; }
};

ActualNeighborhoodMap snapshotANM(const BeliefNeighborhoodMap& bnm, const SnapshotMode& mode);

/// True when some pair moved by at least delta.
bool shouldDelegate(const BeliefNeighborhoodMap& before, const BeliefNeighborhoodMap& after, double delta = 0.2);

/// Edges between members of the same group.
ActualNeighborhoodMap anmFromCoalitions(const std::vector<std::string>& ids, const CoalitionSet& coalitions);

/// CSV edge lists: "ssp_a,ssp_b,p" and "ssp_a,ssp_b,present".
void writeBnmCsv(const BeliefNeighborhoodMap& bnm, std::ostream& out);
void writeAnmCsv(const ActualNeighborhoodMap& anm, std::ostream& out);
BeliefNeighborhoodMap readBnmCsv(std::istream& in, const std::vector<std::string>& ids);
/// Pairs not listed are absent. Ids outside `ids` or self-edges are errors.
ActualNeighborhoodMap readAnmCsv(std::istream& in, const std::vector<std::string>& ids);

}  // namespace ecommit
