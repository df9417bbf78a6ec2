#include "ecommit/results.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace ecommit {

using Json = nlohmann::ordered_json;

void writeCommitmentsCsv(const std::vector<SspOutcome>& ssps, std::ostream& out)
{
    out << "ssp,kind,row,column,value\n";
    for (const auto& s : ssps) {
        const auto& cm = s.cm;
        for (std::size_t r = 0; r < cm.rows().size(); ++r) {
            for (std::size_t c = 0; c < cm.cols().size(); ++c) {
                if (cm.at(r, c) != 0.0) {
                    out << s.id << ",cm," << cm.rows()[r].id << ',' << cm.cols()[c].id << ','
                        << formatNumber(cm.at(r, c)) << '\n';
                }
            }
        }
    }
    for (const auto& s : ssps) {
        for (const auto& [id, value] : s.fx.values) {
            out << s.id << ",fx," << id << ",," << formatNumber(value) << '\n';
        }
    }
}

std::string summaryJson(const Scenario& scenario, const MatchingResult& result, const RunInfo& info)
{
    double initial = 0.0;
    for (const auto& ssp : scenario.ssps) {
        initial += std::abs(energyStatus(ssp));
    }
    Json root;
    root["scenario_fingerprint"] = scenarioFingerprint(scenario);
    root["seed"] = info.seed;
    root["anm"] = info.anmMode;
    root["initial_abs_status_kwh"] = initial;
    root["final_utility_kwh"] = result.finalUtility();
    root["iterations"] = result.iterations;
    root["sweeps"] = result.sweeps;
    root["messages"] = result.log.records.size();
    root["coalition_count"] = info.coalitions.groups.size();
    root["coalitions"] = info.coalitions.groups;
    Json ssps = Json::array();
    for (const auto& s : result.ssps) {
        ssps.push_back({{"id", s.id},
                        {"energy_status_kwh", s.energyStatus},
                        {"utility_interaction_kwh", s.utilityInteraction}});
    }
    root["ssps"] = ssps;
    return root.dump(2) + "\n";
}

namespace {

void writeFile(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        throw StructuralError("cannot write " + path.string());
    }
}

std::string readFile(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StructuralError("missing " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

void writeResultsDirectory(const std::filesystem::path& dir, const Scenario& scenario, const MatchingResult& result,
                           const RunInfo& info)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw StructuralError("cannot create " + dir.string() + ": " + ec.message());
    }
    std::ostringstream commitments;
    writeCommitmentsCsv(result.ssps, commitments);
    writeFile(dir / "commitments.csv", commitments.str());
    std::ostringstream convergence;
    writeConvergenceCsv(result.trace, convergence);
    writeFile(dir / "convergence.csv", convergence.str());
    std::ostringstream messages;
    writeMessagesCsv(result.log, messages);
    writeFile(dir / "messages.csv", messages.str());
    writeFile(dir / "summary.json", summaryJson(scenario, result, info));
}

RunRecord readResultsDirectory(const std::filesystem::path& dir)
{
    RunRecord run;
    run.dir = dir;
    const auto summaryPath = dir / "summary.json";
    Json summary;
    try {
        summary = Json::parse(readFile(summaryPath));
        run.fingerprint = summary.at("scenario_fingerprint").get<std::string>();
        run.anmMode = summary.at("anm").get<std::string>();
        run.coalitionCount = summary.at("coalition_count").get<std::size_t>();
        run.iterations = summary.at("iterations").get<std::size_t>();
        run.initialAbsStatus = summary.at("initial_abs_status_kwh").get<double>();
        for (const auto& s : summary.at("ssps")) {
            run.ssps.push_back({s.at("id").get<std::string>(), s.at("energy_status_kwh").get<double>(), 0.0});
        }
    }
    catch (const Json::exception& e) {
        throw StructuralError(summaryPath.string() + ": " + e.what());
    }

    std::map<std::string, double> utility;
    std::istringstream csv(readFile(dir / "commitments.csv"));
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(csv, line)) {
        if (++lineNo == 1 || line.empty()) {
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            f.push_back(cell);
        }
        if (f.size() != 5) {
            throw StructuralError((dir / "commitments.csv").string() + ": line " + std::to_string(lineNo) +
                                  " does not have 5 fields");
        }
        if (f[1] == "cm" && (f[2] == kUtilityId || f[3] == kUtilityId)) {
            utility[f[0]] += std::stod(f[4]);
        }
    }
    run.finalUtility = 0.0;
    for (auto& s : run.ssps) {
        s.utilityInteraction = utility[s.id];
        run.finalUtility += s.utilityInteraction;
    }
    return run;
}

}  // namespace ecommit
