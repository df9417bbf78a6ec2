#include "ecommit/protocol.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

using namespace ecommit;
using fixtures::consumer;
using fixtures::producer;

namespace {

/// n SSPs with a handful of random subscribers each; some SSP links cut.
Scenario randomScenario(std::uint64_t seed, int n)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> energy(2.0, 20.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Scenario s;
    for (int k = 1; k <= n; ++k) {
        SspConfig ssp;
        ssp.id = "S" + std::to_string(k);
        const int consumers = 1 + static_cast<int>(rng() % 3);
        const int producers = 1 + static_cast<int>(rng() % 2);
        for (int j = 1; j <= producers; ++j) {
            const double bound = unit(rng) < 0.3 ? 0.2 : 0.0;
            ssp.producers.push_back(producer(ssp.id + ".p" + std::to_string(j), std::round(energy(rng)), bound));
        }
        for (int i = 1; i <= consumers; ++i) {
            const double bound = unit(rng) < 0.3 ? 0.1 : 0.0;
            ssp.consumers.push_back(
                consumer(ssp.id + ".c" + std::to_string(i), std::round(energy(rng)), 1.0 / consumers, bound));
            for (int j = 1; j <= producers; ++j) {
                ssp.preferences.set(ssp.consumers.back().id, ssp.id + ".p" + std::to_string(j), j);
            }
        }
        ssp.preferences.defaultRank = producers + 1;
        s.ssps.push_back(ssp);
    }
    for (int a = 1; a <= n; ++a) {
        for (int b = a + 1; b <= n; ++b) {
            if (unit(rng) < 0.2) {
                s.connectivity.set("S" + std::to_string(a), "S" + std::to_string(b), false);
                s.connectivity.set("S" + std::to_string(b), "S" + std::to_string(a), false);
            }
        }
    }
    s.seed = seed;
    return s;
}

ActualNeighborhoodMap meshed(const Scenario& s)
{
    return ActualNeighborhoodMap::meshed(s.sspIds());
}

double claimedBetween(const MessageLog& log, const std::string& buyer, const std::string& seller)
{
    double total = 0.0;
    for (const auto& r : log.records) {
        if (r.kind == "Claim" && r.src == buyer && r.dst == seller) {
            total += std::stod(r.payload.at(0).second);
        }
    }
    return total;
}

/// One seller with `supply`, and a consumer-only SSP per entry of `demands`.
Scenario oneSeller(double supply, const std::vector<std::vector<double>>& demands)
{
    Scenario s;
    SspConfig seller;
    seller.id = "S1";
    seller.producers = {producer("S1.p1", supply)};
    s.ssps.push_back(seller);
    int k = 1;
    for (const auto& group : demands) {
        SspConfig buyer;
        buyer.id = "S" + std::to_string(++k);
        int i = 0;
        for (double d : group) {
            buyer.consumers.push_back(consumer(buyer.id + ".c" + std::to_string(++i), d, 1.0 / group.size()));
        }
        buyer.preferences.defaultRank = 1;
        s.ssps.push_back(buyer);
    }
    s.seed = 3;
    return s;
}

}  // namespace

TEST_CASE("a lone SSP converges in one iteration to its local optimum")
{
    const auto s = fixtures::fig3();
    const auto result = runEngine(s, meshed(s), s.weights, s.seed);
    CHECK(result.iterations == 1);
    CHECK(result.log.records.empty());
    const auto local = solveDistMatching(makeView(s, "SSP1"), s.weights);
    CHECK(result.ssps.at(0).cm == local.cm);
    CHECK(result.ssps.at(0).fx == local.fx);
}

TEST_CASE("complementary pair settles with no Utility exchange")
{
    const auto s = fixtures::complementaryPair();
    const auto result = runEngine(s, meshed(s), s.weights, s.seed);
    CHECK(std::abs(result.finalUtility()) <= 1e-6);
    CHECK(result.iterations >= 2);
    CHECK(utilityInteraction(solveCentralized(s).cm) <= 1e-6);
}

TEST_CASE("complementary pair without a link both face the Utility")
{
    const auto s = fixtures::complementaryPair();
    const auto result = runEngine(s, ActualNeighborhoodMap(s.sspIds()), s.weights, s.seed);
    CHECK(std::abs(result.finalUtility() - 10.0) <= 1e-6);
    CHECK(result.log.records.empty());

    auto cut = fixtures::complementaryPair();
    cut.connectivity.set("S1", "S2", false);
    const auto physical = runEngine(cut, meshed(cut), cut.weights, cut.seed);
    CHECK(std::abs(physical.finalUtility() - 10.0) <= 1e-6);
}

TEST_CASE("agent step at a fixed point changes nothing")
{
    const auto s = fixtures::complementaryPair();
    Engine engine(s, meshed(s), s.weights, s.seed);
    engine.run();
    for (std::size_t i = 0; i < engine.agentCount(); ++i) {
        const auto before = engine.agent(i);
        const auto logSize = engine.log().records.size();
        CHECK_FALSE(engine.agentStep(i));
        CHECK(engine.log().records.size() == logSize);
        CHECK(engine.agent(i).cm == before.cm);
        CHECK(engine.agent(i).bestSolution == before.bestSolution);
    }
}

TEST_CASE("an offer covering a deficit is claimed in full")
{
    const auto s = oneSeller(51.0, {{25.0, 26.0}});
    Engine engine(s, meshed(s), s.weights, s.seed);
    const Claim claim = engine.deliver({"S2", "S1", 51.0, 0.0});
    CHECK(claim.src == "S2");
    CHECK(claim.dst == "S1");
    CHECK(std::abs(claim.amount - 51.0) <= 1e-6);

    const auto& buyer = engine.agent(1);
    CHECK(std::abs(buyer.cm.committedFrom("S1") - 51.0) <= 1e-6);
    CHECK(buyer.cm.utilityPurchases() <= 1e-6);
    CHECK(std::abs(buyer.view.findPartner("S1")->held - claim.amount) == 0.0);
    // Supply and demand balance on both sides of the exchange.
    CHECK(std::abs(buyer.cm.suppliedTo("S2.c1") + buyer.cm.suppliedTo("S2.c2") - 51.0) <= 1e-6);
    const auto& seller = engine.agent(0);
    CHECK(std::abs(seller.cm.suppliedTo("S2") - 51.0) <= 1e-6);
    CHECK(seller.cm.utilitySellBack() <= 1e-6);
}

TEST_CASE("later partners are offered only what earlier claims left")
{
    const auto s = oneSeller(18.0, {{10.0}, {8.0}});

    // A seed under which S2 is asked first.
    std::uint64_t seed = 0;
    while (shufflePartners({"S2", "S3"}, seed, "S1", 0).front() != "S2") {
        ++seed;
    }
    const auto result = runEngine(s, meshed(s), s.weights, seed);
    const auto& r = result.log.records;
    REQUIRE(r.size() >= 4);
    CHECK(r[0].kind == "SurplusOffer");
    CHECK(r[0].dst == "S2");
    CHECK(r[0].payload[0].second == "18");
    CHECK(r[1].payload[0].second == "10");
    CHECK(r[2].dst == "S3");
    CHECK(r[2].payload[0].second == "8");
    CHECK(r[3].payload[0].second == "8");
    CHECK(std::abs(result.finalUtility()) <= 1e-6);
    CHECK(auditPrivacy(result, s).passed);

    // Whatever the order, the second offer is the first's residual.
    for (std::uint64_t other = 0; other < 8; ++other) {
        const auto rerun = runEngine(s, meshed(s), s.weights, other);
        const auto& x = rerun.log.records;
        REQUIRE(x.size() >= 4);
        CHECK(std::stod(x[2].payload[0].second) == 18.0 - std::stod(x[1].payload[0].second));
    }
}

TEST_CASE("offers travel only over links")
{
    auto s = fixtures::complementaryPair();
    s.connectivity.set("S1", "S2", false);
    Engine engine(s, meshed(s), s.weights, s.seed);
    CHECK(engine.partnersOf(0).empty());
    CHECK_THROWS_AS(engine.deliver({"S2", "S1", 5.0, 0.0}), ProtocolViolation);
    CHECK_THROWS_WITH(engine.deliver({"S2", "S1", 5.0, 0.0}), doctest::Contains("S1"));
    CHECK_THROWS_AS(engine.deliver({"S9", "S1", 5.0, 0.0}), ProtocolViolation);
}

TEST_CASE("iteration cap reports the trace")
{
    const auto s = fixtures::complementaryPair();
    EngineOptions options;
    options.iterationCap = 1;
    try {
        runEngine(s, meshed(s), s.weights, s.seed, options);
        FAIL("expected non-convergence");
    }
    catch (const NonConvergence& e) {
        CHECK(e.trace.size() == 2);
    }
}

TEST_CASE("partner shuffle")
{
    CHECK(shufflePartners({"S2"}, 7, "S1", 3) == std::vector<std::string>{"S2"});
    const std::vector<std::string> four{"S2", "S3", "S4", "S5"};
    CHECK(shufflePartners(four, 7, "S1", 3) == shufflePartners(four, 7, "S1", 3));
    auto sorted = shufflePartners(four, 7, "S1", 3);
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == four);

    bool differs = false;
    for (std::size_t round = 0; round < 100; ++round) {
        differs = differs || shufflePartners(four, 7, "S1", round) != shufflePartners(four, 8, "S1", round);
    }
    CHECK(differs);
}

TEST_CASE("privacy audit")
{
    const auto s = oneSeller(18.0, {{10.0}, {8.0}});
    const auto result = runEngine(s, meshed(s), s.weights, 1);
    REQUIRE(auditPrivacy(result, s).passed);

    SUBCASE("subscriber id in a payload")
    {
        auto forged = result.log;
        forged.records[0].payload.push_back({"consumer", "S2.c1"});
        const auto report = auditPrivacy(forged, result.emissions, s);
        CHECK_FALSE(report.passed);
        bool named = false;
        for (const auto& f : report.findings) {
            named = named || f.message.find("S2.c1") != std::string::npos;
        }
        CHECK(named);
    }
    SUBCASE("subscriber as endpoint")
    {
        auto forged = result.log;
        forged.records[0].dst = "S2.c1";
        CHECK_FALSE(auditPrivacy(forged, result.emissions, s).passed);
    }
    SUBCASE("offer energy that the sender's state does not yield")
    {
        auto forged = result.log;
        forged.records[0].payload[0].second = formatNumber(std::stod(forged.records[0].payload[0].second) + 1.0);
        CHECK_FALSE(auditPrivacy(forged, result.emissions, s).passed);
    }
    SUBCASE("offer bound that the sender's state does not yield")
    {
        auto forged = result.log;
        forged.records[0].payload[1].second = "0.5";
        CHECK_FALSE(auditPrivacy(forged, result.emissions, s).passed);
    }
    SUBCASE("claim above its offer")
    {
        auto forged = result.log;
        forged.records[1].payload[0].second = "19";
        CHECK_FALSE(auditPrivacy(forged, result.emissions, s).passed);
    }
    SUBCASE("offer with no sender snapshot")
    {
        CHECK_FALSE(auditPrivacy(result.log, {}, s).passed);
    }
    SUBCASE("unknown message kind")
    {
        auto forged = result.log;
        forged.records[1].kind = "Profile";
        CHECK_FALSE(auditPrivacy(forged, result.emissions, s).passed);
    }
}

TEST_CASE("engine properties on random scenarios")
{
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        CAPTURE(seed);
        const auto s = randomScenario(seed, 3 + static_cast<int>(seed % 4));
        const auto anm = meshed(s);
        const auto result = runEngine(s, anm, s.weights, seed);

        // Accumulated Utility interaction never rises.
        for (std::size_t k = 1; k < result.trace.size(); ++k) {
            CHECK(result.trace[k].accumulatedUtility <= result.trace[k - 1].accumulatedUtility + 1e-6);
        }
        REQUIRE_FALSE(result.trace.empty());
        CHECK(std::abs(result.trace.back().accumulatedUtility - result.finalUtility()) <= 1e-6);

        CHECK(auditPrivacy(result, s).passed);

        std::set<std::string> partnerships;
        for (const auto& r : result.log.records) {
            CHECK(s.connectivity.connected(r.src, r.dst));
            CHECK(s.connectivity.connected(r.dst, r.src));
            if (r.kind == "Claim") {
                partnerships.insert(r.src + ">" + r.dst);
            }
        }

        // Every claimed flow appears once on each side.
        for (const auto& seller : result.ssps) {
            for (const auto& buyer : result.ssps) {
                if (seller.id == buyer.id) {
                    continue;
                }
                const double claimed = claimedBetween(result.log, buyer.id, seller.id);
                CHECK(std::abs(seller.cm.suppliedTo(buyer.id) - claimed) <= 1e-6);
                CHECK(std::abs(buyer.cm.committedFrom(seller.id) - claimed) <= 1e-6);
            }
        }

        // No SSP trades worse than its isolated optimum.
        const auto isolated = runEngine(s, ActualNeighborhoodMap(s.sspIds()), s.weights, seed);
        CHECK(result.finalUtility() <= isolated.finalUtility() + 1e-6);

        CHECK(runEngine(s, anm, s.weights, seed) == result);
        EngineOptions concurrent;
        concurrent.concurrent = true;
        concurrent.threads = 3;
        CHECK(runEngine(s, anm, s.weights, seed, concurrent) == result);
    }
}

TEST_CASE("surplus-free agents send nothing")
{
    const auto s = fixtures::pairs({{5.0, 10.0}, {4.0, 9.0}});
    const auto result = runEngine(s, meshed(s), s.weights, s.seed);
    CHECK(result.log.records.empty());
    CHECK(std::abs(result.finalUtility() - 10.0) <= 1e-6);
}

TEST_CASE("coalition-restricted runs do no better than the meshed run")
{
    for (std::uint64_t seed = 20; seed < 30; ++seed) {
        CAPTURE(seed);
        const auto s = randomScenario(seed, 6);
        std::vector<SspStatus> statuses;
        for (const auto& ssp : s.ssps) {
            statuses.push_back({ssp.id, energyStatus(ssp)});
        }
        const auto groups = formCoalitions(statuses, 2, seed);
        const auto restricted = runEngine(s, anmFromCoalitions(s.sspIds(), groups), s.weights, seed);
        const auto full = runEngine(s, meshed(s), s.weights, seed);
        CHECK(full.finalUtility() <= restricted.finalUtility() + 1e-6);
    }
}

TEST_CASE("csv exports")
{
    const auto s = oneSeller(18.0, {{10.0}, {8.0}});
    const auto result = runEngine(s, meshed(s), s.weights, 1);
    std::stringstream messages;
    writeMessagesCsv(result.log, messages);
    std::string line;
    std::getline(messages, line);
    CHECK(line == "round,kind,src,dst,energy_kwh,bound,token");
    std::getline(messages, line);
    CHECK(line.rfind("0,SurplusOffer,S1,", 0) == 0);
    CHECK(line.find(",18,") != std::string::npos);
    CHECK(line.size() > 12);
    CHECK(line.substr(line.size() - 12) == ",SEND_EXCESS");

    std::stringstream trace;
    writeConvergenceCsv(result.trace, trace);
    std::getline(trace, line);
    CHECK(line == "iteration,accumulated_utility_kwh");
    std::getline(trace, line);
    CHECK(line.rfind("1,", 0) == 0);
}

TEST_CASE("calibration against the meshed engine keeps sensible weights")
{
    const auto s = fixtures::complementaryPair();
    const auto w = calibrateAgainstUtility(s, 2, s.seed);
    const auto calibrated = [&] {
        auto copy = s;
        copy.weights = w;
        return runEngine(copy, meshed(copy), w, s.seed).finalUtility();
    }();
    CHECK(calibrated <= runEngine(s, meshed(s), s.weights, s.seed).finalUtility() + 1e-9);
}
