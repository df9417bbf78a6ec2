#pragma once

#include "ecommit/coalition.hpp"
#include "ecommit/matching.hpp"
#include "ecommit/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ecommit {

inline const std::string kSendExcess = "SEND_EXCESS";

/// Aggregate surplus advertised by `src`. No per-subscriber field exists.
struct SurplusOffer {
    std::string dst;
    std::string src;
    double exEnergy = 0.0;
    double bound = 0.0;
    std::string token = kSendExcess;
};

/// Reply to an offer: how much of it `src` takes from `dst`.
struct Claim {
    std::string dst;
    std::string src;
    double amount = 0.0;
};

/// A message as it travelled over the bus. The payload is kept as text
/// fields so the audit inspects exactly what was sent.
struct WireRecord {
    std::size_t round = 0;
    std::string kind;
    std::string src;
    std::string dst;
    std::vector<std::pair<std::string, std::string>> payload;
    std::string token;

    bool operator==(const WireRecord&) const = default;
};

WireRecord toWire(std::size_t round, const SurplusOffer& offer);
WireRecord toWire(std::size_t round, const Claim& claim);

struct MessageLog {
    std::vector<WireRecord> records;

    bool operator==(const MessageLog&) const = default;
};

/// A message that breaks the exchange rules: a claim above its offer, or
/// traffic between SSPs that are not linked.
class ProtocolViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An internal guarantee failed (e.g. a seller's objective rose).
class InvariantBreach : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TracePoint {
    std::size_t iteration = 0;
    std::string ssp;
    double accumulatedUtility = 0.0;

    bool operator==(const TracePoint&) const = default;
};

class NonConvergence : public std::runtime_error {
public:
    NonConvergence(const std::string& what, std::vector<TracePoint> trace)
        : std::runtime_error(what), trace(std::move(trace))
    {
    }
    std::vector<TracePoint> trace;
};

struct AgentState {
    SspView view;
    double bestSolution = std::numeric_limits<double>::infinity();
    CommitmentMatrix cm;
    FlexibilityAssignment fx;
    bool solved = false;
    bool statusChanged = true;
    /// Accepted a new solution that has not been advertised yet.
    bool broadcastPending = false;
    /// Bumped on every change to `view`.
    std::uint64_t version = 0;
};

/// The sender's commitment when it started advertising, and the log range
/// its offers (and the claims answering them) occupy.
struct EmissionRecord {
    std::string sender;
    std::size_t begin = 0;
    std::size_t end = 0;
    CommitmentMatrix cm;

    bool operator==(const EmissionRecord&) const = default;
};

struct SspOutcome {
    std::string id;
    CommitmentMatrix cm;
    FlexibilityAssignment fx;
    double objective = 0.0;
    double energyStatus = 0.0;
    double utilityInteraction = 0.0;

    bool operator==(const SspOutcome&) const = default;
};

struct MatchingResult {
    std::vector<SspOutcome> ssps;
    std::vector<TracePoint> trace;
    MessageLog log;
    std::vector<EmissionRecord> emissions;
    std::size_t iterations = 0;
    std::size_t sweeps = 0;

    /// Σ over SSPs of Utility interaction at quiescence.
    double finalUtility() const;
    bool operator==(const MatchingResult&) const = default;
};

struct EngineOptions {
    std::size_t iterationCap = 10000;
    /// Solve agents' LPs on worker threads ahead of their turn. Results are
    /// only used when the agent's view has not changed since, so output is
    /// identical to the sequential engine.
    bool concurrent = false;
    unsigned threads = 0;
};

/// Deterministic permutation keyed by (seed, ssp id, round).
std::vector<std::string> shufflePartners(std::vector<std::string> partners, std::uint64_t seed,
                                         const std::string& sspId, std::size_t round);

/// Round-robin synchronous engine. Agents take turns in scenario order; a
/// turn solves the agent's LP, accepts strict improvements and advertises
/// surplus to linked partners one at a time, each offer answered by a claim
/// before the next goes out.
class Engine {
public:
    Engine(const Scenario& scenario, const ActualNeighborhoodMap& anm, const MatchingWeights& weights,
           std::uint64_t seed, EngineOptions options = {});

    /// One agent turn. Returns true if the agent accepted a new solution.
    bool agentStep(std::size_t agent);
    /// Hands an offer to its receiver, which solves with it and answers.
    Claim deliver(const SurplusOffer& offer);
    /// Runs every agent whose status changed. False once quiescent.
    bool sweep();
    MatchingResult run();

    std::size_t agentCount() const { return agents_.size(); }
    std::size_t agentIndex(const std::string& sspId) const;
    const AgentState& agent(std::size_t i) const { return agents_.at(i); }
    const MessageLog& log() const { return log_; }
    /// Partners an agent may exchange with: physically linked and in the ANM.
    const std::vector<std::string>& partnersOf(std::size_t i) const { return partners_.at(i); }

private:
    MatchingSolution solve(std::size_t agent);
    void broadcast(std::size_t agent);
    void grant(std::size_t seller, const std::string& buyer, double amount);
    void recordIteration(std::size_t agent);
    double accumulatedUtility() const;
    void precompute();

    const Scenario& scenario_;
    MatchingWeights weights_;
    std::uint64_t seed_;
    EngineOptions options_;
    std::vector<AgentState> agents_;
    std::vector<std::vector<std::string>> partners_;
    std::vector<std::optional<std::pair<std::uint64_t, MatchingSolution>>> cache_;
    MessageLog log_;
    std::vector<EmissionRecord> emissions_;
    std::vector<TracePoint> trace_;
    std::size_t iterations_ = 0;
    std::size_t round_ = 0;
};

MatchingResult runEngine(const Scenario& scenario, const ActualNeighborhoodMap& anm, const MatchingWeights& weights,
                         std::uint64_t seed, const EngineOptions& options = {});

struct AuditFinding {
    std::size_t record = 0;
    std::string message;
};

struct AuditReport {
    bool passed = true;
    std::vector<AuditFinding> findings;
};

/// Checks that every message is an offer or a claim carrying only its
/// aggregate numbers, and that each offer's energy and bound are what the
/// sender's commitment at emission time yields.
AuditReport auditPrivacy(const MessageLog& log, const std::vector<EmissionRecord>& emissions,
                         const Scenario& scenario);
AuditReport auditPrivacy(const MatchingResult& result, const Scenario& scenario);

/// round,kind,src,dst,energy_kwh,bound,token
void writeMessagesCsv(const MessageLog& log, std::ostream& out);
/// iteration,accumulated_utility_kwh
void writeConvergenceCsv(const std::vector<TracePoint>& trace, std::ostream& out);

/// Calibrates against the final Utility interaction of a fully meshed run.
MatchingWeights calibrateAgainstUtility(const Scenario& scenario, int iterations, std::uint64_t seed);

}  // namespace ecommit
