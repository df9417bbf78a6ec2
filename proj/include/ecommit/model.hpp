#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ecommit {

/// Absolute tolerance for every kWh comparison.
inline constexpr double kEnergyTolerance = 1e-6;

/// Reserved identifier of the external energy supplier.
inline const std::string kUtilityId = "U";

/// Thrown when an input is malformed: a dangling id, a missing preference
/// rank, an invalid generator spec. The message names the offending entity.
class StructuralError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SubscriberKind { ActiveProducer, PassiveProducer, ActiveConsumer, PassiveConsumer };

bool isProducer(SubscriberKind kind);
bool isPassive(SubscriberKind kind);
/// "AP", "PP", "AC", "PC".
std::string kindCode(SubscriberKind kind);
SubscriberKind subscriberKindFromString(const std::string& text);

/// One subscriber of an SSP. `energy` is the committed production for
/// producers and the requested demand for consumers.
struct Subscriber {
    std::string id;
    SubscriberKind kind = SubscriberKind::ActiveConsumer;
    double energy = 0.0;
    double bound = 0.0;
    double priority = 0.0;

    bool operator==(const Subscriber&) const = default;
};

/// Consumer-to-source preference ranks; lower is more preferred. A pair
/// without an explicit entry falls back to `defaultRank` when that is set.
class PreferenceTable {
public:
    void set(const std::string& consumer, const std::string& target, int rank);
    std::optional<int> rank(const std::string& consumer, const std::string& target) const;
    /// Explicit entries plus the fallback, whichever is larger.
    int maxRank() const;

    const std::map<std::pair<std::string, std::string>, int>& entries() const { return entries_; }
    std::optional<int> defaultRank;

    bool operator==(const PreferenceTable&) const = default;

private:
    std::map<std::pair<std::string, std::string>, int> entries_;
};

/// Binary connectivity N(i,j) between consumers/SSPs (rows) and
/// producers/SSPs/Utility (columns). Stored sparsely: explicit entries
/// override `defaultValue`.
class ConnectivityMatrix {
public:
    bool defaultValue = true;

    void set(const std::string& from, const std::string& to, bool value);
    bool connected(const std::string& from, const std::string& to) const;
    const std::map<std::pair<std::string, std::string>, bool>& entries() const { return entries_; }

    bool operator==(const ConnectivityMatrix&) const = default;

private:
    std::map<std::pair<std::string, std::string>, bool> entries_;
};

/// Bounds on a commitment cm(from,to). Subscriber-level pairs bound a single
/// LP variable; pairs naming SSP ids (or the Utility against an SSP id)
/// bound the aggregate flow between those parties. Losses are identity.
struct LineLimit {
    std::string from;
    std::string to;
    double gammaMin = 0.0;
    double gammaMax = 0.0;

    bool operator==(const LineLimit&) const = default;
};

struct LineConstraintSet {
    std::vector<LineLimit> limits;

    const LineLimit* find(const std::string& from, const std::string& to) const;
    bool operator==(const LineConstraintSet&) const = default;
};

/// How the preference term of the matching objective is applied.
enum class PreferenceForm {
    /// cm(i,j) * (1 + alpha * (beta - pt(i,j))): steers allocation by rank.
    Multiplicative,
    /// cm(i,j) + alpha * (beta - pt(i,j)): the rank part is a constant.
    Additive,
};

std::string preferenceFormName(PreferenceForm form);
PreferenceForm preferenceFormFromString(const std::string& text);

struct MatchingWeights {
    double w14 = 1.0;
    double w2 = 10.0;
    double w35 = 0.5;
    double alpha = 0.1;
    /// Unset means (largest rank in the view) + 1.
    std::optional<double> beta;
    /// Cost per kWh of demand a passive consumer is asked to shed.
    double curtailCost = 1.0;
    /// Cost per kWh of production raised above a producer's commitment.
    double flexCost = 5.0;
    PreferenceForm preferenceForm = PreferenceForm::Multiplicative;

    bool operator==(const MatchingWeights&) const = default;
};

struct SspConfig {
    std::string id;
    std::vector<Subscriber> consumers;
    std::vector<Subscriber> producers;
    PreferenceTable preferences;

    bool operator==(const SspConfig&) const = default;
};

struct Scenario {
    std::vector<SspConfig> ssps;
    ConnectivityMatrix connectivity;
    MatchingWeights weights;
    std::optional<LineConstraintSet> lineConstraints;
    std::uint64_t seed = 0;
    /// Identity of the random generator that produced the file, if any.
    std::string generator;

    const SspConfig* findSsp(const std::string& id) const;
    std::optional<std::size_t> sspIndex(const std::string& id) const;
    std::vector<std::string> sspIds() const;

    bool operator==(const Scenario&) const = default;
};

struct Violation {
    std::string entity;
    std::string rule;

    bool operator==(const Violation&) const = default;
};

/// Checks every type invariant of a scenario. An empty result means valid.
std::vector<Violation> validateScenario(const Scenario& scenario);

/// Total production minus total demand, before any matching.
double energyStatus(const SspConfig& ssp);

double totalDemand(const SspConfig& ssp);
double totalSupply(const SspConfig& ssp);

}  // namespace ecommit
