#include "ecommit/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace ecommit {

bool isProducer(SubscriberKind kind)
{
    return kind == SubscriberKind::ActiveProducer || kind == SubscriberKind::PassiveProducer;
}

bool isPassive(SubscriberKind kind)
{
    return kind == SubscriberKind::PassiveProducer || kind == SubscriberKind::PassiveConsumer;
}

std::string kindCode(SubscriberKind kind)
{
    switch (kind) {
    case SubscriberKind::ActiveProducer: return "AP";
    case SubscriberKind::PassiveProducer: return "PP";
    case SubscriberKind::ActiveConsumer: return "AC";
    case SubscriberKind::PassiveConsumer: return "PC";
    }
    return "?";
}

SubscriberKind subscriberKindFromString(const std::string& text)
{
    if (text == "AP") return SubscriberKind::ActiveProducer;
    if (text == "PP") return SubscriberKind::PassiveProducer;
    if (text == "AC") return SubscriberKind::ActiveConsumer;
    if (text == "PC") return SubscriberKind::PassiveConsumer;
    throw StructuralError("unknown subscriber kind '" + text + "' (expected AP, PP, AC or PC)");
}

std::string preferenceFormName(PreferenceForm form)
{
    return form == PreferenceForm::Multiplicative ? "multiplicative" : "additive";
}

PreferenceForm preferenceFormFromString(const std::string& text)
{
    if (text == "multiplicative") return PreferenceForm::Multiplicative;
    if (text == "additive") return PreferenceForm::Additive;
    throw StructuralError("unknown preference form '" + text + "'");
}

void PreferenceTable::set(const std::string& consumer, const std::string& target, int rank)
{
    entries_[{consumer, target}] = rank;
}

std::optional<int> PreferenceTable::rank(const std::string& consumer, const std::string& target) const
{
    if (auto it = entries_.find({consumer, target}); it != entries_.end()) {
        return it->second;
    }
    return defaultRank;
}

int PreferenceTable::maxRank() const
{
    int best = defaultRank.value_or(0);
    for (const auto& [key, rank] : entries_) {
        best = std::max(best, rank);
    }
    return best;
}

void ConnectivityMatrix::set(const std::string& from, const std::string& to, bool value)
{
    entries_[{from, to}] = value;
}

bool ConnectivityMatrix::connected(const std::string& from, const std::string& to) const
{
    if (auto it = entries_.find({from, to}); it != entries_.end()) {
        return it->second;
    }
    return defaultValue;
}

const LineLimit* LineConstraintSet::find(const std::string& from, const std::string& to) const
{
    for (const auto& limit : limits) {
        if (limit.from == from && limit.to == to) {
            return &limit;
        }
    }
    return nullptr;
}

const SspConfig* Scenario::findSsp(const std::string& id) const
{
    for (const auto& ssp : ssps) {
        if (ssp.id == id) {
            return &ssp;
        }
    }
    return nullptr;
}

std::optional<std::size_t> Scenario::sspIndex(const std::string& id) const
{
    for (std::size_t i = 0; i < ssps.size(); ++i) {
        if (ssps[i].id == id) {
            return i;
        }
    }
    return std::nullopt;
}

std::vector<std::string> Scenario::sspIds() const
{
    std::vector<std::string> ids;
    ids.reserve(ssps.size());
    for (const auto& ssp : ssps) {
        ids.push_back(ssp.id);
    }
    return ids;
}

double totalDemand(const SspConfig& ssp)
{
    double total = 0.0;
    for (const auto& c : ssp.consumers) {
        total += c.energy;
    }
    return total;
}

double totalSupply(const SspConfig& ssp)
{
    double total = 0.0;
    for (const auto& p : ssp.producers) {
        total += p.energy;
    }
    return total;
}

double energyStatus(const SspConfig& ssp)
{
    return totalSupply(ssp) - totalDemand(ssp);
}

namespace {

enum class IdRole { Ssp, Consumer, Producer };

struct IdIndex {
    std::map<std::string, IdRole> role;
    std::map<std::string, std::string> owner;  // subscriber id -> ssp id
};

bool inUnit(double x)
{
    return std::isfinite(x) && x >= 0.0 && x <= 1.0;
}

void checkSubscriber(const Subscriber& s, bool asProducer, const std::string& sspId,
                     std::vector<Violation>& out)
{
    const std::string entity = "subscriber " + s.id + " of " + sspId;
    if (isProducer(s.kind) != asProducer) {
        out.push_back({entity, asProducer ? "listed as producer but kind is " + kindCode(s.kind)
                                          : "listed as consumer but kind is " + kindCode(s.kind)});
    }
    if (!std::isfinite(s.energy) || s.energy < 0.0) {
        out.push_back({entity, "energy must be a finite kWh value >= 0"});
    }
    if (!inUnit(s.bound)) {
        out.push_back({entity, "bound must lie in [0,1]"});
    }
    else if (!isPassive(s.kind) && s.bound != 0.0) {
        out.push_back({entity, "active subscribers must have bound 0"});
    }
    if (!inUnit(s.priority)) {
        out.push_back({entity, "priority must lie in [0,1]"});
    }
    else if (asProducer && s.priority != 0.0) {
        out.push_back({entity, "priority applies to consumers only"});
    }
}

}  // namespace

std::vector<Violation> validateScenario(const Scenario& scenario)
{
    std::vector<Violation> out;
    IdIndex index;

    auto claimId = [&](const std::string& id, IdRole role, const std::string& owner) {
        if (id.empty()) {
            out.push_back({"id in " + owner, "ids must be non-empty"});
            return;
        }
        if (id == kUtilityId) {
            out.push_back({id, "id is reserved for the Utility"});
            return;
        }
        if (!index.role.emplace(id, role).second) {
            out.push_back({id, "duplicate id"});
            return;
        }
        if (role != IdRole::Ssp) {
            index.owner[id] = owner;
        }
    };

    for (const auto& ssp : scenario.ssps) {
        claimId(ssp.id, IdRole::Ssp, ssp.id);
    }
    for (const auto& ssp : scenario.ssps) {
        for (const auto& c : ssp.consumers) {
            claimId(c.id, IdRole::Consumer, ssp.id);
            checkSubscriber(c, false, ssp.id, out);
        }
        for (const auto& p : ssp.producers) {
            claimId(p.id, IdRole::Producer, ssp.id);
            checkSubscriber(p, true, ssp.id, out);
        }
        if (!ssp.consumers.empty()) {
            double sum = 0.0;
            for (const auto& c : ssp.consumers) {
                sum += c.priority;
            }
            if (std::abs(sum - 1.0) > kEnergyTolerance) {
                out.push_back({"ssp " + ssp.id,
                               "consumer priorities must sum to 1 (got " + std::to_string(sum) + ")"});
            }
        }
    }

    auto roleOf = [&](const std::string& id) -> std::optional<IdRole> {
        if (auto it = index.role.find(id); it != index.role.end()) {
            return it->second;
        }
        return std::nullopt;
    };

    const auto& n = scenario.connectivity;
    for (const auto& [key, value] : n.entries()) {
        const auto& [from, to] = key;
        const std::string entity = "N(" + from + "," + to + ")";
        const auto fromRole = roleOf(from);
        const bool toUtility = to == kUtilityId;
        const auto toRole = roleOf(to);
        if (!fromRole || *fromRole == IdRole::Producer) {
            out.push_back({entity, "row must name a consumer or an SSP"});
            continue;
        }
        if (!toUtility && (!toRole || *toRole == IdRole::Consumer)) {
            out.push_back({entity, "column must name a producer, an SSP or the Utility"});
            continue;
        }
        if (*fromRole == IdRole::Ssp && toRole && *toRole == IdRole::Ssp) {
            if (from == to && value) {
                out.push_back({entity, "inter-SSP diagonal must be 0"});
            }
            else if (from != to && n.connected(to, from) != value) {
                if (from < to || n.entries().count({to, from}) == 0) {
                    out.push_back({entity, "inter-SSP connectivity must be symmetric"});
                }
            }
        }
        if (*fromRole == IdRole::Consumer && toRole && *toRole == IdRole::Producer &&
            index.owner[from] != index.owner[to]) {
            out.push_back({entity, "consumer and producer belong to different SSPs"});
        }
    }

    for (const auto& ssp : scenario.ssps) {
        for (const auto& c : ssp.consumers) {
            if (!n.connected(c.id, kUtilityId)) {
                out.push_back({"N(" + c.id + ",U)", "every consumer must reach the Utility"});
            }
        }
    }

    for (const auto& ssp : scenario.ssps) {
        const auto& pt = ssp.preferences;
        for (const auto& [key, rank] : pt.entries()) {
            const auto& [consumer, target] = key;
            const std::string entity = "pt(" + consumer + "," + target + ") in " + ssp.id;
            const auto consumerRole = roleOf(consumer);
            if (!consumerRole || *consumerRole != IdRole::Consumer || index.owner[consumer] != ssp.id) {
                out.push_back({entity, "row must name a consumer of this SSP"});
            }
            const auto targetRole = roleOf(target);
            const bool localProducer = targetRole && *targetRole == IdRole::Producer &&
                                       index.owner[target] == ssp.id;
            const bool partner = targetRole && *targetRole == IdRole::Ssp && target != ssp.id;
            if (!localProducer && !partner) {
                out.push_back({entity, "column must name a local producer or another SSP"});
            }
            if (rank < 1) {
                out.push_back({entity, "ranks must be >= 1"});
            }
        }
        if (pt.defaultRank && *pt.defaultRank < 1) {
            out.push_back({"default rank of " + ssp.id, "ranks must be >= 1"});
        }
        for (const auto& c : ssp.consumers) {
            for (const auto& p : ssp.producers) {
                if (n.connected(c.id, p.id) && !pt.rank(c.id, p.id)) {
                    out.push_back({"pt(" + c.id + "," + p.id + ")", "missing rank for connected pair"});
                }
            }
            for (const auto& other : scenario.ssps) {
                if (other.id == ssp.id) {
                    continue;
                }
                if (n.connected(ssp.id, other.id) && n.connected(c.id, other.id) &&
                    !pt.rank(c.id, other.id)) {
                    out.push_back({"pt(" + c.id + "," + other.id + ")", "missing rank for connected pair"});
                }
            }
        }
    }

    const auto& w = scenario.weights;
    for (const auto& [name, value] : {std::pair{"w14", w.w14}, std::pair{"w2", w.w2},
                                      std::pair{"w35", w.w35}, std::pair{"alpha", w.alpha},
                                      std::pair{"curtailCost", w.curtailCost},
                                      std::pair{"flexCost", w.flexCost}}) {
        if (!std::isfinite(value) || value < 0.0) {
            out.push_back({std::string("weights.") + name, "must be a finite value >= 0"});
        }
    }
    if (!(w.w2 > 0.0)) {
        out.push_back({"weights.w2", "must be > 0 so Utility purchases are penalized"});
    }
    if (w.beta && !std::isfinite(*w.beta)) {
        out.push_back({"weights.beta", "must be finite"});
    }

    if (scenario.lineConstraints) {
        for (const auto& limit : scenario.lineConstraints->limits) {
            const std::string entity = "line(" + limit.from + "," + limit.to + ")";
            if (!(limit.gammaMin <= limit.gammaMax)) {
                out.push_back({entity, "gammaMin must not exceed gammaMax"});
            }
            const bool fromKnown = limit.from == kUtilityId || roleOf(limit.from).has_value();
            const bool toKnown = limit.to == kUtilityId || roleOf(limit.to).has_value();
            if (!fromKnown || !toKnown || limit.from == limit.to) {
                out.push_back({entity, "endpoints must name distinct known parties"});
            }
        }
    }

    return out;
}

}  // namespace ecommit
