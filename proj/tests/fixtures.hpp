#pragma once

#include "ecommit/model.hpp"

#include <string>

namespace fixtures {

inline ecommit::Subscriber consumer(const std::string& id, double demand, double priority, double bound = 0.0)
{
    using ecommit::SubscriberKind;
    return {id, bound > 0.0 ? SubscriberKind::PassiveConsumer : SubscriberKind::ActiveConsumer, demand, bound,
            priority};
}

inline ecommit::Subscriber producer(const std::string& id, double supply, double bound = 0.0)
{
    using ecommit::SubscriberKind;
    return {id, bound > 0.0 ? SubscriberKind::PassiveProducer : SubscriberKind::ActiveProducer, supply, bound, 0.0};
}

/// The worked single-SSP example: three ACs and a PC (12 kWh, may shed
/// 20%) against two APs and a PP (10 kWh, may add 30%). AC#1 and AC#3
/// share 27 kWh; the split is a parameter.
inline ecommit::Scenario fig3(double ac1 = 13.5, double ac3 = 13.5)
{
    ecommit::SspConfig ssp;
    ssp.id = "SSP1";
    ssp.consumers = {consumer("AC1", ac1, 0.3), consumer("AC2", 18.0, 0.3), consumer("AC3", ac3, 0.3),
                     consumer("PC1", 12.0, 0.1, 0.2)};
    ssp.producers = {producer("AP1", 30.0), producer("AP2", 12.0), producer("PP1", 10.0, 0.3)};
    for (const auto& c : ssp.consumers) {
        ssp.preferences.set(c.id, "AP1", 1);
        ssp.preferences.set(c.id, "AP2", 2);
        ssp.preferences.set(c.id, "PP1", 3);
    }
    ecommit::Scenario s;
    s.ssps = {ssp};
    s.seed = 1;
    return s;
}

/// One SSP per entry; SSP k has a single AC and a single AP, so its status
/// is supply - demand.
inline ecommit::Scenario pairs(const std::vector<std::pair<double, double>>& supplyDemand)
{
    ecommit::Scenario s;
    int k = 0;
    for (const auto& [supply, demand] : supplyDemand) {
        ++k;
        ecommit::SspConfig ssp;
        ssp.id = "S" + std::to_string(k);
        ssp.consumers = {consumer(ssp.id + ".c1", demand, 1.0)};
        ssp.producers = {producer(ssp.id + ".p1", supply)};
        ssp.preferences.set(ssp.id + ".c1", ssp.id + ".p1", 1);
        ssp.preferences.defaultRank = 2;
        s.ssps.push_back(ssp);
    }
    s.seed = 11;
    return s;
}

/// Statuses +5 and -5.
inline ecommit::Scenario complementaryPair()
{
    return pairs({{10.0, 5.0}, {5.0, 10.0}});
}

}  // namespace fixtures
