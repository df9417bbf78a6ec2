#include "ecommit/protocol.hpp"

#include "ecommit/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <set>
#include <thread>

namespace ecommit {

namespace {

constexpr double kImprovement = 1e-7;

std::string field(const WireRecord& r, const std::string& key)
{
    for (const auto& [k, v] : r.payload) {
        if (k == key) {
            return v;
        }
    }
    return {};
}

std::optional<double> parseExact(const std::string& text)
{
    if (text.empty()) {
        return std::nullopt;
    }
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    }
    catch (const std::exception&) {
        return std::nullopt;
    }
    if (used != text.size() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

double grossEnergy(const SspConfig& ssp)
{
    return totalDemand(ssp) + totalSupply(ssp);
}

}  // namespace

WireRecord toWire(std::size_t round, const SurplusOffer& offer)
{
    return {round,
            "SurplusOffer",
            offer.src,
            offer.dst,
            {{"exEnergy", formatNumber(offer.exEnergy)}, {"bound", formatNumber(offer.bound)}},
            offer.token};
}

WireRecord toWire(std::size_t round, const Claim& claim)
{
    return {round, "Claim", claim.src, claim.dst, {{"amount", formatNumber(claim.amount)}}, ""};
}

double MatchingResult::finalUtility() const
{
    double total = 0.0;
    for (const auto& s : ssps) {
        total += s.utilityInteraction;
    }
    return total;
}

std::vector<std::string> shufflePartners(std::vector<std::string> partners, std::uint64_t seed,
                                         const std::string& sspId, std::size_t round)
{
    std::uint64_t key = splitmix64(seed);
    key = splitmix64(key ^ fnv1a(sspId));
    key = splitmix64(key ^ static_cast<std::uint64_t>(round));
    Rng rng(key);
    rng.shuffle(partners);
    return partners;
}

Engine::Engine(const Scenario& scenario, const ActualNeighborhoodMap& anm, const MatchingWeights& weights,
               std::uint64_t seed, EngineOptions options)
    : scenario_(scenario), weights_(weights), seed_(seed), options_(options)
{
    const auto& n = scenario.connectivity;
    for (const auto& ssp : scenario.ssps) {
        std::vector<std::string> linked;
        for (const auto& other : scenario.ssps) {
            if (other.id != ssp.id && n.connected(ssp.id, other.id) && n.connected(other.id, ssp.id) &&
                anm.connected(ssp.id, other.id)) {
                linked.push_back(other.id);
            }
        }
        AgentState state;
        state.view = makeView(scenario, ssp.id, linked);
        agents_.push_back(std::move(state));
        partners_.push_back(std::move(linked));
    }
    cache_.resize(agents_.size());
}

std::size_t Engine::agentIndex(const std::string& sspId) const
{
    if (const auto i = scenario_.sspIndex(sspId)) {
        return *i;
    }
    throw ProtocolViolation("message names unknown SSP '" + sspId + "'");
}

MatchingSolution Engine::solve(std::size_t agent)
{
    auto& slot = cache_[agent];
    if (slot && slot->first == agents_[agent].version) {
        auto solution = std::move(slot->second);
        slot.reset();
        return solution;
    }
    slot.reset();
    return solveDistMatching(agents_[agent].view, weights_, scenario_.lineConstraints);
}

double Engine::accumulatedUtility() const
{
    double total = 0.0;
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        total += agents_[i].solved ? utilityInteraction(agents_[i].cm) : grossEnergy(scenario_.ssps[i]);
    }
    return total;
}

void Engine::recordIteration(std::size_t agent)
{
    ++iterations_;
    trace_.push_back({iterations_, agents_[agent].view.id, accumulatedUtility()});
    if (iterations_ > options_.iterationCap) {
        throw NonConvergence("no quiescence within " + std::to_string(options_.iterationCap) + " iterations", trace_);
    }
}

bool Engine::agentStep(std::size_t agent)
{
    auto& state = agents_.at(agent);
    auto solution = solve(agent);
    bool accepted = false;
    if (solution.objective < state.bestSolution - kImprovement) {
        state.bestSolution = solution.objective;
        state.cm = std::move(solution.cm);
        state.fx = std::move(solution.fx);
        state.solved = true;
        state.broadcastPending = true;
        accepted = true;
        recordIteration(agent);
    }
    if (state.broadcastPending) {
        state.broadcastPending = false;
        broadcast(agent);
    }
    return accepted;
}

void Engine::broadcast(std::size_t agent)
{
    const auto& config = scenario_.ssps[agent];
    const std::string self = config.id;
    const auto surplus = aggregateSurplus(config, agents_[agent].cm);
    if (surplus.exEnergy <= kEnergyTolerance) {
        return;
    }
    const double bound = offerBound(surplus);
    EmissionRecord emission{self, log_.records.size(), 0, agents_[agent].cm};
    double remaining = surplus.exEnergy;
    for (const auto& partner : shufflePartners(partners_[agent], seed_, self, round_)) {
        if (remaining <= kEnergyTolerance) {
            break;
        }
        const Claim claim = deliver({partner, self, remaining, bound, kSendExcess});
        remaining -= claim.amount;
    }
    emission.end = log_.records.size();
    emissions_.push_back(std::move(emission));
}

Claim Engine::deliver(const SurplusOffer& offer)
{
    const std::size_t seller = agentIndex(offer.src);
    const std::size_t buyer = agentIndex(offer.dst);
    const auto& links = partners_[seller];
    if (std::find(links.begin(), links.end(), offer.dst) == links.end()) {
        throw ProtocolViolation("no link between " + offer.src + " and " + offer.dst);
    }
    log_.records.push_back(toWire(round_, offer));

    Claim claim{offer.src, offer.dst, 0.0};
    bool accepted = false;
    auto& state = agents_[buyer];
    if (offer.exEnergy > 0.0 && offer.token == kSendExcess) {
        state.statusChanged = true;
        auto* partner = state.view.findPartner(offer.src);
        partner->offered = offer.exEnergy;
        partner->offeredBound = offer.bound;
        ++state.version;

        auto solution = solve(buyer);
        if (solution.objective < state.bestSolution - kImprovement) {
            const double taken = solution.cm.committedFrom(offer.src) - partner->held;
            claim.amount = std::max(0.0, taken);
            state.bestSolution = solution.objective;
            state.cm = std::move(solution.cm);
            state.fx = std::move(solution.fx);
            state.solved = true;
            state.broadcastPending = true;
            accepted = true;
        }
        partner->held += claim.amount;
        partner->offered = 0.0;
        partner->offeredBound = 0.0;
        ++state.version;
    }
    log_.records.push_back(toWire(round_, claim));

    if (claim.amount > offer.exEnergy + 1e-9) {
        throw ProtocolViolation(offer.dst + " claimed " + formatNumber(claim.amount) + " kWh from " + offer.src +
                                " against an offer of " + formatNumber(offer.exEnergy));
    }
    if (claim.amount > 0.0) {
        grant(seller, offer.dst, claim.amount);
    }
    if (accepted) {
        recordIteration(buyer);
    }
    return claim;
}

void Engine::grant(std::size_t seller, const std::string& buyer, double amount)
{
    auto& state = agents_[seller];
    auto& exports = state.view.exports;
    auto it = std::find_if(exports.begin(), exports.end(), [&](const auto& e) { return e.buyer == buyer; });
    if (it == exports.end()) {
        exports.push_back({buyer, amount});
    }
    else {
        it->amount += amount;
    }
    ++state.version;

    MatchingSolution solution;
    try {
        solution = solve(seller);
    }
    catch (const InfeasibleMatching& e) {
        throw InvariantBreach(state.view.id + " cannot deliver what it offered: " + e.what());
    }
    if (state.solved && solution.objective > state.bestSolution + 1e-6 * std::max(1.0, std::abs(state.bestSolution))) {
        throw InvariantBreach("objective of " + state.view.id + " rose after granting " + buyer + " a claim");
    }
    state.bestSolution = solution.objective;
    state.cm = std::move(solution.cm);
    state.fx = std::move(solution.fx);
    state.solved = true;
}

void Engine::precompute()
{
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        if (agents_[i].statusChanged) {
            todo.push_back(i);
        }
    }
    unsigned workers = options_.threads ? options_.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(todo.size()));
    if (workers <= 1) {
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < todo.size(); k = next++) {
                const std::size_t i = todo[k];
                try {
                    cache_[i].emplace(agents_[i].version,
                                      solveDistMatching(agents_[i].view, weights_, scenario_.lineConstraints));
                }
                catch (...) {
                    // the sequential pass re-solves and reports the error
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
}

bool Engine::sweep()
{
    if (options_.concurrent) {
        precompute();
    }
    bool ran = false;
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        if (!agents_[i].statusChanged) {
            continue;
        }
        agents_[i].statusChanged = false;
        ran = true;
        agentStep(i);
    }
    for (auto& slot : cache_) {
        slot.reset();
    }
    return ran;
}

MatchingResult Engine::run()
{
    std::size_t sweeps = 0;
    while (sweep()) {
        ++sweeps;
        ++round_;
    }
    MatchingResult result;
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        const auto& state = agents_[i];
        SspOutcome out;
        out.id = state.view.id;
        out.cm = state.cm;
        out.fx = state.fx;
        out.objective = state.bestSolution;
        out.energyStatus = energyStatus(scenario_.ssps[i]);
        out.utilityInteraction = utilityInteraction(state.cm);
        result.ssps.push_back(std::move(out));
    }
    result.trace = trace_;
    result.log = log_;
    result.emissions = emissions_;
    result.iterations = iterations_;
    result.sweeps = sweeps;
    return result;
}

MatchingResult runEngine(const Scenario& scenario, const ActualNeighborhoodMap& anm, const MatchingWeights& weights,
                         std::uint64_t seed, const EngineOptions& options)
{
    Engine engine(scenario, anm, weights, seed, options);
    return engine.run();
}

AuditReport auditPrivacy(const MessageLog& log, const std::vector<EmissionRecord>& emissions, const Scenario& scenario)
{
    AuditReport report;
    auto finding = [&](std::size_t record, std::string message) {
        report.passed = false;
        report.findings.push_back({record, std::move(message)});
    };

    std::set<std::string> sspIds;
    std::vector<std::string> subscriberIds;
    for (const auto& ssp : scenario.ssps) {
        sspIds.insert(ssp.id);
        for (const auto& c : ssp.consumers) {
            subscriberIds.push_back(c.id);
        }
        for (const auto& p : ssp.producers) {
            subscriberIds.push_back(p.id);
        }
    }
    auto mentionsSubscriber = [&](const std::string& text) -> std::optional<std::string> {
        for (const auto& id : subscriberIds) {
            if (!id.empty() && text.find(id) != std::string::npos) {
                return id;
            }
        }
        return std::nullopt;
    };

    std::vector<bool> covered(log.records.size(), false);
    for (std::size_t i = 0; i < log.records.size(); ++i) {
        const auto& r = log.records[i];
        const bool offer = r.kind == "SurplusOffer";
        const bool claim = r.kind == "Claim";
        if (!offer && !claim) {
            finding(i, "unknown message kind '" + r.kind + "'");
            continue;
        }
        for (const auto* endpoint : {&r.src, &r.dst}) {
            if (!sspIds.count(*endpoint)) {
                finding(i, "endpoint '" + *endpoint + "' is not an SSP");
            }
        }
        std::vector<std::string> keys;
        for (const auto& [key, value] : r.payload) {
            keys.push_back(key);
            if (const auto id = mentionsSubscriber(key + "=" + value)) {
                finding(i, "payload carries subscriber id " + *id);
            }
            if (!parseExact(value)) {
                finding(i, "payload field " + key + " is not a single number");
            }
        }
        const std::vector<std::string> expected =
            offer ? std::vector<std::string>{"exEnergy", "bound"} : std::vector<std::string>{"amount"};
        if (keys != expected) {
            finding(i, r.kind + " payload must be exactly the aggregate fields");
        }
        if (offer && r.token != kSendExcess) {
            finding(i, "offer token must be " + kSendExcess);
        }
        if (claim && !r.token.empty()) {
            finding(i, "claims carry no token");
        }
        if (claim) {
            const bool answers = i > 0 && log.records[i - 1].kind == "SurplusOffer" &&
                                 log.records[i - 1].src == r.dst && log.records[i - 1].dst == r.src;
            if (!answers) {
                finding(i, "claim does not answer the offer before it");
            }
            else {
                const auto amount = parseExact(field(r, "amount"));
                const auto offered = parseExact(field(log.records[i - 1], "exEnergy"));
                if (amount && offered && (*amount < 0.0 || *amount > *offered + 1e-9)) {
                    finding(i, "claim exceeds the offer it answers");
                }
            }
        }
    }

    for (const auto& e : emissions) {
        const auto* sender = scenario.findSsp(e.sender);
        if (!sender || e.begin > e.end || e.end > log.records.size()) {
            finding(e.begin, "sender snapshot does not match the log");
            continue;
        }
        const auto surplus = aggregateSurplus(*sender, e.cm);
        const double bound = offerBound(surplus);
        double remaining = surplus.exEnergy;
        for (std::size_t i = e.begin; i < e.end; ++i) {
            const auto& r = log.records[i];
            if (r.kind == "SurplusOffer" && r.src == e.sender) {
                covered[i] = true;
                const auto ex = parseExact(field(r, "exEnergy"));
                const auto b = parseExact(field(r, "bound"));
                if (!ex || *ex != remaining) {
                    finding(i, "offered energy differs from the sender's recomputed surplus " +
                                   formatNumber(remaining));
                }
                if (!b || *b != bound) {
                    finding(i, "offered bound differs from the sender's recomputed bound " + formatNumber(bound));
                }
            }
            else if (r.kind == "Claim" && r.dst == e.sender) {
                if (const auto amount = parseExact(field(r, "amount"))) {
                    remaining -= *amount;
                }
            }
        }
    }
    for (std::size_t i = 0; i < log.records.size(); ++i) {
        if (log.records[i].kind == "SurplusOffer" && !covered[i]) {
            finding(i, "offer has no sender snapshot to check it against");
        }
    }
    return report;
}

AuditReport auditPrivacy(const MatchingResult& result, const Scenario& scenario)
{
    return auditPrivacy(result.log, result.emissions, scenario);
}

void writeMessagesCsv(const MessageLog& log, std::ostream& out)
{
    out << "round,kind,src,dst,energy_kwh,bound,token\n";
    for (const auto& r : log.records) {
        const bool offer = r.kind == "SurplusOffer";
        out << r.round << ',' << r.kind << ',' << r.src << ',' << r.dst << ','
            << field(r, offer ? "exEnergy" : "amount") << ',' << (offer ? field(r, "bound") : "") << ','
            << r.token << '\n';
    }
}

void writeConvergenceCsv(const std::vector<TracePoint>& trace, std::ostream& out)
{
    out << "iteration,accumulated_utility_kwh\n";
    for (const auto& t : trace) {
        out << t.iteration << ',' << formatNumber(t.accumulatedUtility) << '\n';
    }
}

MatchingWeights calibrateAgainstUtility(const Scenario& scenario, int iterations, std::uint64_t seed)
{
    const auto anm = ActualNeighborhoodMap::meshed(scenario.sspIds());
    return calibrateWeights(
        scenario,
        [&](const Scenario& s) { return runEngine(s, anm, s.weights, seed).finalUtility(); },
        iterations);
}

}  // namespace ecommit
