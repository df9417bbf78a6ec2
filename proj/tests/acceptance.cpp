// Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any FAIL.

#include "cli.hpp"

#include "ecommit/coalition.hpp"
#include "ecommit/matching.hpp"
#include "ecommit/protocol.hpp"
#include "ecommit/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

using namespace ecommit;

namespace {

const std::filesystem::path kData = ECOMMIT_DATA_DIR;
constexpr double kTol = 1e-6;
constexpr std::uint64_t kStudySeed = 7;

int failures = 0;

void verdict(int id, bool ok, const std::string& detail)
{
    std::cout << (ok ? "PASS" : "FAIL") << " AC" << id << " " << detail << std::endl;
    if (!ok) {
        ++failures;
    }
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double seconds(std::chrono::steady_clock::time_point since)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

ActualNeighborhoodMap meshed(const Scenario& s)
{
    return ActualNeighborhoodMap::meshed(s.sspIds());
}

// Every engine run of the suite, kept for the audit and centralized checks.
struct SuiteRun {
    std::string label;
    Scenario scenario;
    MatchingResult result;
    bool meshed = false;
};
std::deque<SuiteRun> suite;  // stable references across appends

const MatchingResult& record(const std::string& label, const Scenario& s, const ActualNeighborhoodMap& anm)
{
    const bool full = anm == meshed(s);
    suite.push_back({label, s, runEngine(s, anm, s.weights, s.seed), full});
    return suite.back().result;
}

double absStatus(const Scenario& s)
{
    double total = 0.0;
    for (const auto& ssp : s.ssps) {
        total += std::abs(energyStatus(ssp));
    }
    return total;
}

void workedExample()
{
    const auto s = loadScenario(kData / "fig3.json");
    const auto t0 = std::chrono::steady_clock::now();
    const auto& r = record("worked example", s, meshed(s));
    const double elapsed = seconds(t0);

    const auto view = makeView(s, s.ssps[0].id);
    const auto& fx = r.ssps[0].fx;
    const double ui = r.finalUtility();
    const double served = servedDemand(view, fx);
    bool windows = true;
    for (const auto& c : view.consumers) {
        const double f = fx.get(c.id).value_or(-1.0);
        windows = windows && f >= 1.0 - c.bound - 1e-9 && f <= 1.0 + 1e-9;
    }
    for (const auto& p : view.producers) {
        const double f = fx.get(p.id).value_or(-1.0);
        windows = windows && f >= 1.0 - 1e-9 && f <= 1.0 + p.bound + 1e-9;
    }
    verdict(1, std::abs(ui) <= kTol && std::abs(served - 54.6) <= kTol && windows && elapsed < 1.0,
            "worked example: utility " + fmt(ui) + " kWh, served " + fmt(served) + " kWh, fx windows " +
                (windows ? "ok" : "violated") + ", " + fmt(elapsed) + " s");
}

// One-SSP matching programs small enough for the 0.5 kWh grid.
Scenario smallInstance(std::mt19937_64& rng, int nc, int np)
{
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> rank(1, 3);
    SspConfig ssp;
    ssp.id = "S";
    for (int i = 0; i < nc; ++i) {
        const bool passive = coin(rng) == 1;
        ssp.consumers.push_back({"c" + std::to_string(i),
                                 passive ? SubscriberKind::PassiveConsumer : SubscriberKind::ActiveConsumer,
                                 coin(rng) ? 1.0 : 0.5, passive ? 0.5 : 0.0, 1.0 / nc});
    }
    for (int j = 0; j < np; ++j) {
        const bool passive = coin(rng) == 1;
        ssp.producers.push_back({"p" + std::to_string(j),
                                 passive ? SubscriberKind::PassiveProducer : SubscriberKind::ActiveProducer,
                                 coin(rng) ? 1.0 : 0.5, passive ? 0.5 : 0.0, 0.0});
    }
    for (const auto& c : ssp.consumers) {
        for (const auto& p : ssp.producers) {
            ssp.preferences.set(c.id, p.id, rank(rng));
        }
    }
    Scenario s;
    s.ssps = {ssp};
    return s;
}

// Cells are unbounded above in the LP; the oracle needs a box. A consumer
// row never exceeds its demand and a sell-back cell never exceeds the
// producer's flexed output, so these caps cut off no feasible point.
lp::LinearProgram boxed(const MatchingProgram& mp, const SspView& view)
{
    auto program = mp.program;
    auto energyOf = [&](const std::string& id, bool producer) {
        for (const auto& sub : producer ? view.producers : view.consumers) {
            if (sub.id == id) {
                return producer ? sub.energy * (1.0 + sub.bound) : sub.energy;
            }
        }
        return 0.0;
    };
    for (const auto& cell : mp.layout.cells) {
        const auto& row = mp.layout.rows[cell.row];
        const double cap = row.kind == PartyKind::Utility ? energyOf(mp.layout.cols[cell.col].id, true)
                                                          : energyOf(row.id, false);
        program.setBounds(cell.var, 0.0, cap);
    }
    return program;
}

void lpOracle()
{
    // 2x3 and larger exceed the oracle grid cap once sell-back and fx are counted.
    const std::pair<int, int> shapes[] = {{1, 1}, {1, 2}, {2, 1}, {1, 3}, {3, 1}, {2, 2}};
    std::mt19937_64 rng(2024);
    const auto t0 = std::chrono::steady_clock::now();
    int compared = 0;
    int lost = 0;
    double worstViolation = 0.0;
    for (int trial = 0; trial < 60; ++trial) {
        const auto [nc, np] = shapes[trial % std::size(shapes)];
        const auto s = smallInstance(rng, nc, np);
        const auto view = makeView(s, "S");
        const auto mp = buildMatchingProgram(view, s.weights);
        const auto solved = lp::solveLp(mp.program);
        const auto oracle = lp::bruteForceVerify(boxed(mp, view), 0.5);
        if (solved.status != lp::Status::Optimal || !oracle) {
            ++lost;
            continue;
        }
        worstViolation = std::max(worstViolation, lp::maxViolation(mp.program, solved.values));
        if (solved.objective > *oracle + kTol) {
            ++lost;
        }
        ++compared;
    }
    const double elapsed = seconds(t0);
    verdict(2, compared >= 50 && lost == 0 && worstViolation <= kTol && elapsed < 30.0,
            std::to_string(compared) + " instances, " + std::to_string(lost) + " worse than grid, max violation " +
                fmt(worstViolation) + ", " + fmt(elapsed) + " s");
}

void studyOne()
{
    const auto s = generateScenario(study1Spec(kStudySeed));
    const auto& full = record("study-1 meshed", s, meshed(s));
    bool monotone = true;
    for (std::size_t k = 1; k < full.trace.size(); ++k) {
        monotone = monotone && full.trace[k].accumulatedUtility <= full.trace[k - 1].accumulatedUtility + 1e-9;
    }
    const double initial = absStatus(s);
    verdict(3, monotone && full.finalUtility() <= initial + kTol,
            "study-1 seed " + std::to_string(kStudySeed) + ": trace " + (monotone ? "non-increasing" : "rises") +
                " over " + std::to_string(full.trace.size()) + " points, " + fmt(initial) + " -> " +
                fmt(full.finalUtility()) + " kWh");

    std::vector<SspStatus> statuses;
    for (const auto& ssp : s.ssps) {
        statuses.push_back({ssp.id, energyStatus(ssp)});
    }
    const auto coalitions = formCoalitions(statuses, 3, s.seed);
    const double grouped = record("study-1 coalitions", s, anmFromCoalitions(s.sspIds(), coalitions)).finalUtility();
    const double alone = record("study-1 no exchange", s, ActualNeighborhoodMap(s.sspIds())).finalUtility();
    const double mesh = full.finalUtility();
    verdict(4, grouped - mesh >= -kTol && alone - grouped >= -kTol,
            "meshed " + fmt(mesh) + " <= " + std::to_string(coalitions.groups.size()) + " coalitions " +
                fmt(grouped) + " <= no exchange " + fmt(alone) + " kWh");
}

void studyTwo()
{
    int ordered = 0;
    std::string finals;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        double f[3];
        for (int pattern = 1; pattern <= 3; ++pattern) {
            const auto s = generateScenario(study2Spec(seed, pattern));
            f[pattern - 1] = record("study-2 seed " + std::to_string(seed) + " pattern " + std::to_string(pattern),
                                    s, meshed(s))
                                 .finalUtility();
        }
        if (f[1] <= f[0] + kTol && f[2] <= f[1] + kTol) {
            ++ordered;
        }
        finals += " " + fmt(f[0]) + "/" + fmt(f[1]) + "/" + fmt(f[2]);
    }
    verdict(5, ordered >= 9, std::to_string(ordered) + " of 10 seeds ordered; finals" + finals);
}

void audit()
{
    int failed = 0;
    std::size_t messages = 0;
    const MatchingResult* busiest = nullptr;
    const Scenario* busiestScenario = nullptr;
    for (const auto& run : suite) {
        if (!auditPrivacy(run.result, run.scenario).passed) {
            ++failed;
            std::cout << "  audit failed: " << run.label << "\n";
        }
        messages += run.result.log.records.size();
        if (!busiest || run.result.log.records.size() > busiest->log.records.size()) {
            busiest = &run.result;
            busiestScenario = &run.scenario;
        }
    }
    bool controlCaught = false;
    if (busiest && !busiest->log.records.empty()) {
        auto forged = busiest->log;
        const auto& victim = busiestScenario->ssps.front();
        forged.records[0].payload.push_back({"consumer", victim.consumers.front().id});
        controlCaught = !auditPrivacy(forged, busiest->emissions, *busiestScenario).passed;
    }
    verdict(6, failed == 0 && controlCaught,
            std::to_string(suite.size()) + " runs, " + std::to_string(messages) + " messages, " +
                std::to_string(failed) + " failed; forged log " + (controlCaught ? "rejected" : "accepted"));
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void determinism()
{
    const auto root = std::filesystem::temp_directory_path() / "ecommit_acceptance";
    std::filesystem::remove_all(root);
    std::filesystem::create_directories(root);
    const auto scenario = (root / "study1.json").string();
    saveScenario(generateScenario(study1Spec(kStudySeed)), scenario);

    std::ostringstream sink;
    int codes = 0;
    for (const char* dir : {"a", "b"}) {
        codes += cli::runCli({"run", "-s", scenario, "-o", (root / dir).string(), "--anm", "coalition",
                              "--max-group", "3"},
                             sink, sink);
    }
    std::size_t files = 0;
    bool identical = codes == 0;
    for (const auto& entry : std::filesystem::directory_iterator(root / "a")) {
        ++files;
        identical = identical && slurp(entry.path()) == slurp(root / "b" / entry.path().filename());
    }
    const auto other = std::distance(std::filesystem::directory_iterator(root / "b"),
                                     std::filesystem::directory_iterator());
    identical = identical && files > 0 && static_cast<std::size_t>(other) == files;
    verdict(7, identical, std::to_string(files) + " files compared, " + (identical ? "byte-identical" : "differ"));
}

CommitmentMatrix twoProducerMatrix(double fromFirst, double fromSecond)
{
    CommitmentMatrix cm({{"c", PartyKind::Subscriber}, {kUtilityId, PartyKind::Utility}},
                        {{"p1", PartyKind::Subscriber}, {"p2", PartyKind::Subscriber}, {kUtilityId, PartyKind::Utility}});
    cm.at(0, 0) = fromFirst;
    cm.at(0, 1) = fromSecond;
    return cm;
}

SspConfig twoProducers(double bound1, double bound2)
{
    auto kind = [](double b) { return b > 0.0 ? SubscriberKind::PassiveProducer : SubscriberKind::ActiveProducer; };
    SspConfig s;
    s.id = "S";
    s.producers = {{"p1", kind(bound1), 10.0, bound1, 0.0}, {"p2", kind(bound2), 10.0, bound2, 0.0}};
    return s;
}

void flexibilityAggregate()
{
    const double partly = aggregateBound(twoProducers(0.3, 0.0), twoProducerMatrix(0.0, 5.0));
    const double none = aggregateBound(twoProducers(0.0, 0.0), twoProducerMatrix(3.0, 1.0));
    const double single = aggregateBound(twoProducers(0.3, 0.0), twoProducerMatrix(0.0, 10.0));
    verdict(8, partly == 0.2 && none == 0.0 && single == 0.3,
            "aggregate bounds " + fmt(partly) + ", " + fmt(none) + ", " + fmt(single));
}

void beliefUpdate()
{
    const std::vector<std::string> ids{"S1", "S2", "S3"};
    const BeliefNeighborhoodMap prior(ids, 0.5);
    const auto after = updateBNM(prior, CoalitionSet{{{"S1", "S2"}, {"S3"}}}, 0.6);
    const double p = after.get("S1", "S2");
    verdict(9, p == 0.8 && shouldDelegate(prior, after, 0.2),
            "p 0.5 -> " + fmt(p) + ", delegate " + (shouldDelegate(prior, after, 0.2) ? "yes" : "no"));
}

void centralized()
{
    int worse = 0;
    double worstGap = -1e300;
    for (const auto& run : suite) {
        if (!run.meshed) {
            continue;
        }
        const double central = utilityInteraction(solveCentralized(run.scenario).cm);
        const double gap = central - run.result.finalUtility();
        worstGap = std::max(worstGap, gap);
        if (gap > kTol) {
            ++worse;
            std::cout << "  centralized worse: " << run.label << "\n";
        }
    }

    std::cout << "  timing ssps x consumers x producers: distributed s / centralized s\n";
    bool completed = true;
    for (int n : {1, 2, 4, 6, 8, 10}) {
        auto spec = study2Spec(1, 1);
        spec.nSsps = n;
        const auto s = generateScenario(spec);
        const auto t0 = std::chrono::steady_clock::now();
        const auto dist = runEngine(s, meshed(s), s.weights, s.seed);
        const double td = seconds(t0);
        const auto t1 = std::chrono::steady_clock::now();
        const auto central = solveCentralized(s);
        const double tc = seconds(t1);
        completed = completed && utilityInteraction(central.cm) <= dist.finalUtility() + kTol;
        std::cout << "  " << n << "x35x10: " << fmt(td) << " / " << fmt(tc) << "\n";
    }
    verdict(10, worse == 0 && completed,
            "centralized never worse on the meshed runs (max gap " + fmt(worstGap) + " kWh); timing sweep done");
}

}  // namespace

int main()
{
    try {
        workedExample();
        lpOracle();
        studyOne();
        studyTwo();
        audit();
        determinism();
        flexibilityAggregate();
        beliefUpdate();
        centralized();
    }
    catch (const std::exception& e) {
        std::cout << "FAIL aborted: " << e.what() << std::endl;
        return 1;
    }
    return failures == 0 ? 0 : 1;
}
