#include "cli.hpp"

#include "ecommit/coalition.hpp"
#include "ecommit/protocol.hpp"
#include "ecommit/results.hpp"
#include "ecommit/scenario.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>

namespace ecommit::cli {

namespace {

using Json = nlohmann::ordered_json;

struct WeightOverrides {
    std::optional<double> w14, w2, w35, alpha, beta, curtailCost, flexCost;
    std::optional<std::string> preferenceForm;

    void attach(CLI::App& app)
    {
        app.add_option("--w14", w14, "Weight of the priority and local-match terms");
        app.add_option("--w2", w2, "Weight of Utility purchases");
        app.add_option("--w35", w35, "Weight of the preference term");
        app.add_option("--alpha", alpha, "Preference scale");
        app.add_option("--beta", beta, "Preference offset (default: largest rank + 1)");
        app.add_option("--curtail-cost", curtailCost, "Cost per kWh of demand shed by a passive consumer");
        app.add_option("--flex-cost", flexCost, "Cost per kWh of production raised by a passive producer");
        app.add_option("--preference-form", preferenceForm, "multiplicative or additive")
            ->check(CLI::IsMember({"multiplicative", "additive"}));
    }

    void apply(MatchingWeights& w) const
    {
        if (w14) w.w14 = *w14;
        if (w2) w.w2 = *w2;
        if (w35) w.w35 = *w35;
        if (alpha) w.alpha = *alpha;
        if (beta) w.beta = *beta;
        if (curtailCost) w.curtailCost = *curtailCost;
        if (flexCost) w.flexCost = *flexCost;
        if (preferenceForm) w.preferenceForm = preferenceFormFromString(*preferenceForm);
    }
};

struct GenOptions {
    GeneratorSpec spec;
    std::string out;
};

struct RunOptions {
    std::string scenario;
    std::string anm = "meshed";
    int maxGroup = 0;
    std::string anmFile;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::size_t iterationCap = 10000;
    bool concurrent = false;
    unsigned threads = 0;
    WeightOverrides weights;
};

struct CalibrateOptions {
    std::string scenario;
    int iterations = 5;
    std::optional<std::uint64_t> seed;
    std::string out;
    WeightOverrides weights;
};

struct ReportOptions {
    std::vector<std::string> dirs;
};

Scenario loadValid(const std::string& path, std::ostream& err, bool& ok)
{
    Scenario s = loadScenario(path);
    const auto violations = validateScenario(s);
    ok = violations.empty();
    for (const auto& v : violations) {
        err << "invalid scenario: " << v.entity << ": " << v.rule << '\n';
    }
    return s;
}

/// Groups of SSPs reachable from each other over the ANM.
CoalitionSet components(const ActualNeighborhoodMap& anm)
{
    const auto& ids = anm.ids();
    std::vector<int> group(ids.size(), -1);
    CoalitionSet out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (group[i] >= 0) {
            continue;
        }
        group[i] = static_cast<int>(out.groups.size());
        std::vector<std::size_t> members{i};
        for (std::size_t k = 0; k < members.size(); ++k) {
            for (std::size_t j = 0; j < ids.size(); ++j) {
                if (group[j] < 0 && anm.connected(ids[members[k]], ids[j])) {
                    group[j] = group[i];
                    members.push_back(j);
                }
            }
        }
        std::sort(members.begin(), members.end());
        std::vector<std::string> names;
        for (auto m : members) {
            names.push_back(ids[m]);
        }
        out.groups.push_back(std::move(names));
    }
    return out;
}

int cmdGen(const GenOptions& o, std::ostream& out, std::ostream& err)
{
    try {
        const auto scenario = generateScenario(o.spec);
        if (o.out.empty() || o.out == "-") {
            out << scenarioToJson(scenario);
        }
        else {
            saveScenario(scenario, o.out);
            out << "wrote " << o.out << " (" << scenario.ssps.size() << " SSPs, fingerprint "
                << scenarioFingerprint(scenario) << ")\n";
        }
    }
    catch (const StructuralError& e) {
        err << "gen: " << e.what() << '\n';
        return kUsage;
    }
    return kOk;
}

int cmdRun(const RunOptions& o, bool json, std::ostream& out, std::ostream& err)
{
    Scenario scenario;
    ActualNeighborhoodMap anm;
    RunInfo info;
    try {
        bool ok = false;
        scenario = loadValid(o.scenario, err, ok);
        if (!ok) {
            return kUsage;
        }
        o.weights.apply(scenario.weights);
        info.seed = o.seed.value_or(scenario.seed);
        info.anmMode = o.anm;
        const auto ids = scenario.sspIds();

        if (o.anm == "meshed") {
            if (o.maxGroup != 0 || !o.anmFile.empty()) {
                err << "run: --anm meshed takes neither --max-group nor --anm-file\n";
                return kUsage;
            }
            anm = ActualNeighborhoodMap::meshed(ids);
            info.coalitions.groups = {ids};
        }
        else if (o.anm == "coalition") {
            if (o.maxGroup < 1 || !o.anmFile.empty()) {
                err << "run: --anm coalition needs --max-group >= 1 and no --anm-file\n";
                return kUsage;
            }
            std::vector<SspStatus> statuses;
            for (const auto& ssp : scenario.ssps) {
                statuses.push_back({ssp.id, energyStatus(ssp)});
            }
            info.coalitions = formCoalitions(statuses, o.maxGroup, info.seed);
            const auto bnm = updateBNM(BeliefNeighborhoodMap(ids, 0.5), info.coalitions, 0.6);
            anm = snapshotANM(bnm, SnapshotMode::threshold(0.5));
        }
        else {
            if (o.anmFile.empty() || o.maxGroup != 0) {
                err << "run: --anm file needs --anm-file and no --max-group\n";
                return kUsage;
            }
            std::ifstream in(o.anmFile);
            if (!in) {
                err << "run: cannot read " << o.anmFile << '\n';
                return kUsage;
            }
            anm = readAnmCsv(in, ids);
            info.coalitions = components(anm);
        }
    }
    catch (const StructuralError& e) {
        err << "run: " << e.what() << '\n';
        return kUsage;
    }

    std::string outDir = o.out;
    if (outDir.empty()) {
        const char* env = std::getenv(kOutputEnv);
        outDir = env && *env ? env : "results";
    }

    EngineOptions options;
    options.iterationCap = o.iterationCap;
    options.concurrent = o.concurrent;
    options.threads = o.threads;
    MatchingResult result;
    try {
        result = runEngine(scenario, anm, scenario.weights, info.seed, options);
    }
    catch (const NonConvergence& e) {
        err << "run: " << e.what() << '\n';
        std::filesystem::create_directories(outDir);
        std::ofstream trace(std::filesystem::path(outDir) / "convergence.csv", std::ios::binary);
        writeConvergenceCsv(e.trace, trace);
        err << "partial trace written to " << (std::filesystem::path(outDir) / "convergence.csv").string() << '\n';
        return kNonConvergence;
    }
    catch (const InfeasibleMatching& e) {
        err << "run: " << e.what() << '\n';
        return kUsage;
    }
    catch (const StructuralError& e) {
        err << "run: " << e.what() << '\n';
        return kUsage;
    }
    catch (const std::exception& e) {
        err << "run: internal error: " << e.what() << '\n';
        return kBreach;
    }

    const auto audit = auditPrivacy(result, scenario);
    if (!audit.passed) {
        for (const auto& f : audit.findings) {
            err << "audit: message " << f.record << ": " << f.message << '\n';
        }
        return kBreach;
    }

    try {
        writeResultsDirectory(outDir, scenario, result, info);
        std::ofstream anmOut(std::filesystem::path(outDir) / "anm.csv", std::ios::binary);
        writeAnmCsv(anm, anmOut);
    }
    catch (const StructuralError& e) {
        err << "run: " << e.what() << '\n';
        return kUsage;
    }

    if (json) {
        out << summaryJson(scenario, result, info);
    }
    else {
        double initial = 0.0;
        for (const auto& ssp : scenario.ssps) {
            initial += std::abs(energyStatus(ssp));
        }
        // Text output rounds away summation noise; summary.json keeps full precision.
        auto kwh = [](double x) { return formatNumber(std::round(x * 1e6) / 1e6); };
        out << "scenario        " << o.scenario << " (" << scenarioFingerprint(scenario) << ")\n"
            << "anm             " << info.anmMode << ", " << info.coalitions.groups.size() << " coalition(s)\n"
            << "iterations      " << result.iterations << '\n'
            << "messages        " << result.log.records.size() << '\n'
            << "initial |status| " << kwh(initial) << " kWh\n"
            << "final utility   " << kwh(result.finalUtility()) << " kWh\n"
            << "results         " << outDir << '\n';
    }
    return kOk;
}

int cmdCalibrate(const CalibrateOptions& o, bool json, std::ostream& out, std::ostream& err)
{
    try {
        bool ok = false;
        Scenario scenario = loadValid(o.scenario, err, ok);
        if (!ok) {
            return kUsage;
        }
        o.weights.apply(scenario.weights);
        const auto seed = o.seed.value_or(scenario.seed);
        const auto anm = ActualNeighborhoodMap::meshed(scenario.sspIds());
        const double before = runEngine(scenario, anm, scenario.weights, seed).finalUtility();
        const auto weights = calibrateAgainstUtility(scenario, o.iterations, seed);
        Scenario tuned = scenario;
        tuned.weights = weights;
        const double after = runEngine(tuned, anm, weights, seed).finalUtility();
        if (!o.out.empty()) {
            saveScenario(tuned, o.out);
        }
        if (json) {
            Json j;
            j["w14"] = weights.w14;
            j["w2"] = weights.w2;
            j["w35"] = weights.w35;
            j["final_utility_before_kwh"] = before;
            j["final_utility_after_kwh"] = after;
            out << j.dump(2) << '\n';
        }
        else {
            out << "w14 " << formatNumber(weights.w14) << "\nw2  " << formatNumber(weights.w2) << "\nw35 "
                << formatNumber(weights.w35) << "\nfinal utility " << formatNumber(before) << " -> "
                << formatNumber(after) << " kWh\n";
            if (!o.out.empty()) {
                out << "wrote " << o.out << '\n';
            }
        }
    }
    catch (const NonConvergence& e) {
        err << "calibrate: " << e.what() << '\n';
        return kNonConvergence;
    }
    catch (const StructuralError& e) {
        err << "calibrate: " << e.what() << '\n';
        return kUsage;
    }
    catch (const std::exception& e) {
        err << "calibrate: internal error: " << e.what() << '\n';
        return kBreach;
    }
    return kOk;
}

bool isExchangeRestricted(const RunRecord& r)
{
    return r.anmMode != "meshed";
}

int cmdReport(const ReportOptions& o, bool json, std::ostream& out, std::ostream& err)
{
    std::vector<RunRecord> runs;
    try {
        for (const auto& d : o.dirs) {
            runs.push_back(readResultsDirectory(d));
        }
    }
    catch (const StructuralError& e) {
        err << "report: " << e.what() << '\n';
        return kUsage;
    }

    // Meshed runs set the floor for restricted runs on the same scenario.
    struct Check {
        const RunRecord* meshed;
        const RunRecord* other;
        bool holds;
    };
    std::vector<Check> checks;
    for (const auto& m : runs) {
        for (const auto& r : runs) {
            if (!isExchangeRestricted(m) && isExchangeRestricted(r) && m.fingerprint == r.fingerprint) {
                checks.push_back({&m, &r, m.finalUtility <= r.finalUtility + kEnergyTolerance});
            }
        }
    }

    if (json) {
        Json root;
        root["runs"] = Json::array();
        for (const auto& r : runs) {
            Json run;
            run["dir"] = r.dir.string();
            run["anm"] = r.anmMode;
            run["coalition_count"] = r.coalitionCount;
            run["scenario_fingerprint"] = r.fingerprint;
            run["initial_abs_status_kwh"] = r.initialAbsStatus;
            run["final_utility_kwh"] = r.finalUtility;
            run["ssps"] = Json::array();
            for (const auto& s : r.ssps) {
                run["ssps"].push_back({{"id", s.id},
                                       {"abs_status_before_kwh", std::abs(s.energyStatus)},
                                       {"utility_after_kwh", s.utilityInteraction}});
            }
            root["runs"].push_back(run);
        }
        root["comparisons"] = Json::array();
        for (const auto& c : checks) {
            root["comparisons"].push_back({{"meshed", c.meshed->dir.string()},
                                           {"restricted", c.other->dir.string()},
                                           {"meshed_final_kwh", c.meshed->finalUtility},
                                           {"restricted_final_kwh", c.other->finalUtility},
                                           {"meshed_not_worse", c.holds}});
        }
        out << root.dump(2) << '\n';
    }
    else {
        for (const auto& r : runs) {
            out << "# " << r.dir.string() << " anm=" << r.anmMode << " coalitions=" << r.coalitionCount
                << " scenario=" << r.fingerprint << '\n';
            out << "ssp,abs_status_before_kwh,utility_after_kwh\n";
            for (const auto& s : r.ssps) {
                out << s.id << ',' << formatNumber(std::abs(s.energyStatus)) << ','
                    << formatNumber(s.utilityInteraction) << '\n';
            }
            out << "total," << formatNumber(r.initialAbsStatus) << ',' << formatNumber(r.finalUtility) << "\n\n";
        }
        out << "run,anm,coalitions,scenario,initial_abs_status_kwh,final_utility_kwh\n";
        for (const auto& r : runs) {
            out << r.dir.string() << ',' << r.anmMode << ',' << r.coalitionCount << ',' << r.fingerprint << ','
                << formatNumber(r.initialAbsStatus) << ',' << formatNumber(r.finalUtility) << '\n';
        }
        if (!checks.empty()) {
            out << "\nmeshed,restricted,meshed_final_kwh,restricted_final_kwh,meshed_not_worse\n";
            for (const auto& c : checks) {
                out << c.meshed->dir.string() << ',' << c.other->dir.string() << ','
                    << formatNumber(c.meshed->finalUtility) << ',' << formatNumber(c.other->finalUtility) << ','
                    << (c.holds ? "yes" : "NO") << '\n';
            }
        }
    }
    return kOk;
}

}  // namespace

int runCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Distributed energy commitment among SSPs", "ecommit"};
    app.require_subcommand(1);
    bool json = false;
    app.add_flag("--json", json, "Machine-readable output");

    GenOptions gen;
    auto* genCmd = app.add_subcommand("gen", "Generate a seeded synthetic scenario");
    genCmd->add_option("--ssps", gen.spec.nSsps, "Number of SSPs")->required();
    genCmd->add_option("--consumers", gen.spec.consumersPerSsp, "Consumers per SSP")->required();
    genCmd->add_option("--producers", gen.spec.producersPerSsp, "Producers per SSP")->required();
    genCmd->add_option("--passive-consumers", gen.spec.passiveConsumers, "Passive consumers per SSP");
    genCmd->add_option("--consumer-bound", gen.spec.consumerBound, "Flexibility of passive consumers");
    genCmd->add_option("--passive-producers", gen.spec.passiveProducers, "Passive producers per SSP");
    genCmd->add_option("--producer-bound", gen.spec.producerBound, "Flexibility of passive producers");
    genCmd->add_option("--demand", gen.spec.baseDemand, "Mean consumer demand, kWh")->capture_default_str();
    genCmd->add_option("--supply", gen.spec.baseSupply, "Mean producer supply, kWh")->capture_default_str();
    genCmd->add_option("--noise", gen.spec.noiseStdDev, "Standard deviation of energies, kWh")
        ->capture_default_str();
    genCmd->add_option("--seed", gen.spec.seed, "Generator seed")->capture_default_str();
    genCmd->add_option("-o,--out", gen.out, "Scenario file to write (default: stdout)");

    RunOptions run;
    auto* runCmd = app.add_subcommand("run", "Run the distributed matching engine");
    runCmd->add_option("-s,--scenario", run.scenario, "Scenario file")->required();
    runCmd->add_option("--anm", run.anm, "Neighborhood map source")
        ->check(CLI::IsMember({"meshed", "coalition", "file"}))
        ->capture_default_str();
    runCmd->add_option("--max-group", run.maxGroup, "Largest coalition (with --anm coalition)");
    runCmd->add_option("--anm-file", run.anmFile, "ANM edge list CSV (with --anm file)");
    runCmd->add_option("--seed", run.seed, "Engine seed (default: the scenario's)");
    runCmd->add_option("-o,--out", run.out, std::string("Results directory (default: $") + kOutputEnv +
                                                " or ./results)");
    runCmd->add_option("--iteration-cap", run.iterationCap, "Give up after this many iterations")
        ->capture_default_str();
    runCmd->add_flag("--concurrent", run.concurrent, "Solve agents on worker threads (same output)");
    runCmd->add_option("--threads", run.threads, "Worker threads for --concurrent (default: all cores)");
    run.weights.attach(*runCmd);

    CalibrateOptions cal;
    auto* calCmd = app.add_subcommand("calibrate", "Tune w14, w2 and w35 against a meshed run");
    calCmd->add_option("-s,--scenario", cal.scenario, "Scenario file")->required();
    calCmd->add_option("--iterations", cal.iterations, "Coordinate sweeps")->capture_default_str();
    calCmd->add_option("--seed", cal.seed, "Engine seed (default: the scenario's)");
    calCmd->add_option("-o,--out", cal.out, "Write the scenario with tuned weights here");
    cal.weights.attach(*calCmd);

    ReportOptions report;
    auto* reportCmd = app.add_subcommand("report", "Compare results directories");
    reportCmd->add_option("dirs", report.dirs, "Results directories")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        if (code == 0) {
            return kOk;
        }
        const auto parsed = app.get_subcommands();
        err << '\n' << (parsed.empty() ? app.help() : parsed.front()->help());
        return kUsage;
    }

    try {
        if (genCmd->parsed()) {
            return cmdGen(gen, out, err);
        }
        if (runCmd->parsed()) {
            return cmdRun(run, json, out, err);
        }
        if (calCmd->parsed()) {
            return cmdCalibrate(cal, json, out, err);
        }
        return cmdReport(report, json, out, err);
    }
    catch (const StructuralError& e) {
        err << e.what() << '\n';
        return kUsage;
    }
}

}  // namespace ecommit::cli
