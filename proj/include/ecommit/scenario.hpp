#pragma once

#include "ecommit/model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace ecommit {

inline constexpr int kScenarioSchemaVersion = 1;

struct GeneratorSpec {
    int nSsps = 20;
    int consumersPerSsp = 10;
    int producersPerSsp = 5;
    /// The first `passiveConsumers` consumers of each SSP are passive.
    int passiveConsumers = 0;
    double consumerBound = 0.0;
    int passiveProducers = 0;
    double producerBound = 0.0;
    double baseDemand = 12.0;
    double baseSupply = 24.0;
    double noiseStdDev = 3.0;
    std::uint64_t seed = 1;

    bool operator==(const GeneratorSpec&) const = default;
};

/// 20 SSPs of 10 active consumers and 5 active producers.
GeneratorSpec study1Spec(std::uint64_t seed);
/// 20 SSPs of 35 consumers and 10 producers. Pattern 1 makes 10 consumers
/// passive at 15% and 5 producers at 10%; pattern 2 raises that to 20 and 7;
/// pattern 3 makes everyone passive. Energies do not depend on the pattern.
GeneratorSpec study2Spec(std::uint64_t seed, int pattern);

/// Throws StructuralError naming the first bad field.
void validateSpec(const GeneratorSpec& spec);

/// Energies are max(0, Normal(mean, sd)) rounded to 0.1 kWh, drawn before
/// anything else so they do not depend on the passive counts. Every
/// consumer gets priority 1/C and its own shuffled ranking of the local
/// producers; partner SSPs rank after all of them.
Scenario generateScenario(const GeneratorSpec& spec);

/// Malformed scenario text. The message names the byte offset or the field path.
class ScenarioFormatError : public StructuralError {
public:
    using StructuralError::StructuralError;
};

/// Canonical JSON text; equal scenarios give identical bytes.
std::string scenarioToJson(const Scenario& scenario);
Scenario scenarioFromJson(const std::string& text);

void saveScenario(const Scenario& scenario, const std::filesystem::path& path);
Scenario loadScenario(const std::filesystem::path& path);

/// 16 hex digits identifying the canonical text of a scenario.
std::string scenarioFingerprint(const Scenario& scenario);

}  // namespace ecommit
