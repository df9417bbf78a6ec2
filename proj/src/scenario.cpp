#include "ecommit/scenario.hpp"

#include "ecommit/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace ecommit {

using Json = nlohmann::ordered_json;

GeneratorSpec study1Spec(std::uint64_t seed)
{
    GeneratorSpec spec;
    spec.seed = seed;
    return spec;
}

GeneratorSpec study2Spec(std::uint64_t seed, int pattern)
{
    GeneratorSpec spec;
    spec.consumersPerSsp = 35;
    spec.producersPerSsp = 10;
    // Net deficit of about 30% per SSP: large enough that even the all-passive
    // pattern still buys from the Utility, so each added flexibility shows.
    spec.baseSupply = 30.0;
    spec.consumerBound = 0.15;
    spec.producerBound = 0.10;
    spec.seed = seed;
    switch (pattern) {
    case 1:
        spec.passiveConsumers = 10;
        spec.passiveProducers = 5;
        break;
    case 2:
        spec.passiveConsumers = 20;
        spec.passiveProducers = 7;
        break;
    case 3:
        spec.passiveConsumers = 35;
        spec.passiveProducers = 10;
        break;
    default:
        throw StructuralError("study 2 pattern must be 1, 2 or 3");
    }
    return spec;
}

void validateSpec(const GeneratorSpec& spec)
{
    auto fail = [](const std::string& what) { throw StructuralError("generator spec: " + what); };
    auto unit = [](double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; };
    auto kwh = [](double x) { return std::isfinite(x) && x >= 0.0; };
    if (spec.nSsps < 1) fail("nSsps must be >= 1");
    if (spec.consumersPerSsp < 0) fail("consumersPerSsp must be >= 0");
    if (spec.producersPerSsp < 0) fail("producersPerSsp must be >= 0");
    if (spec.passiveConsumers < 0 || spec.passiveConsumers > spec.consumersPerSsp)
        fail("passiveConsumers must lie in [0, consumersPerSsp]");
    if (spec.passiveProducers < 0 || spec.passiveProducers > spec.producersPerSsp)
        fail("passiveProducers must lie in [0, producersPerSsp]");
    if (!unit(spec.consumerBound)) fail("consumerBound must lie in [0,1]");
    if (!unit(spec.producerBound)) fail("producerBound must lie in [0,1]");
    if (!kwh(spec.baseDemand)) fail("baseDemand must be a finite kWh value >= 0");
    if (!kwh(spec.baseSupply)) fail("baseSupply must be a finite kWh value >= 0");
    if (!kwh(spec.noiseStdDev)) fail("noiseStdDev must be finite and >= 0");
}

Scenario generateScenario(const GeneratorSpec& spec)
{
    validateSpec(spec);
    Rng rng(spec.seed);
    auto draw = [&](double mean) {
        const double x = std::max(0.0, mean + spec.noiseStdDev * rng.normal());
        return std::round(x * 10.0) / 10.0;
    };

    Scenario scenario;
    scenario.seed = spec.seed;
    scenario.generator = kRngIdentity;
    const int nc = spec.consumersPerSsp;
    const int np = spec.producersPerSsp;
    for (int k = 1; k <= spec.nSsps; ++k) {
        SspConfig ssp;
        ssp.id = "S" + std::to_string(k);
        for (int i = 1; i <= nc; ++i) {
            const bool passive = i <= spec.passiveConsumers;
            ssp.consumers.push_back({ssp.id + ".c" + std::to_string(i),
                                     passive ? SubscriberKind::PassiveConsumer : SubscriberKind::ActiveConsumer,
                                     draw(spec.baseDemand), passive ? spec.consumerBound : 0.0, 1.0 / nc});
        }
        for (int j = 1; j <= np; ++j) {
            const bool passive = j <= spec.passiveProducers;
            ssp.producers.push_back({ssp.id + ".p" + std::to_string(j),
                                     passive ? SubscriberKind::PassiveProducer : SubscriberKind::ActiveProducer,
                                     draw(spec.baseSupply), passive ? spec.producerBound : 0.0, 0.0});
        }
        std::vector<int> ranks(static_cast<std::size_t>(np));
        for (const auto& c : ssp.consumers) {
            std::iota(ranks.begin(), ranks.end(), 1);
            rng.shuffle(ranks);
            for (int j = 0; j < np; ++j) {
                ssp.preferences.set(c.id, ssp.producers[static_cast<std::size_t>(j)].id,
                                    ranks[static_cast<std::size_t>(j)]);
            }
        }
        ssp.preferences.defaultRank = np + 1;
        scenario.ssps.push_back(std::move(ssp));
    }
    return scenario;
}

// ---- JSON ----------------------------------------------------------------

namespace {

Json subscriberJson(const Subscriber& s)
{
    Json j;
    j["id"] = s.id;
    j["kind"] = kindCode(s.kind);
    j["energy"] = s.energy;
    j["bound"] = s.bound;
    j["priority"] = s.priority;
    return j;
}

/// Walks a parsed document, naming the path of anything unexpected.
class Node {
public:
    Node(const Json& json, std::string path) : json_(json), path_(std::move(path)) {}

    [[noreturn]] void fail(const std::string& what) const
    {
        throw ScenarioFormatError((path_.empty() ? std::string("document") : path_) + ": " + what);
    }

    /// Requires an object whose keys all come from `allowed`.
    void object(std::initializer_list<const char*> allowed) const
    {
        if (!json_.is_object()) {
            fail("expected an object");
        }
        for (const auto& item : json_.items()) {
            if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; })) {
                Node(item.value(), join(item.key())).fail("unknown field");
            }
        }
    }

    bool has(const char* key) const { return json_.contains(key); }

    Node operator[](const char* key) const
    {
        if (!json_.contains(key)) {
            Node(json_, join(key)).fail("missing required field");
        }
        return Node(json_.at(key), join(key));
    }

    std::vector<Node> array() const
    {
        if (!json_.is_array()) {
            fail("expected an array");
        }
        std::vector<Node> out;
        for (std::size_t i = 0; i < json_.size(); ++i) {
            out.emplace_back(json_.at(i), path_ + "[" + std::to_string(i) + "]");
        }
        return out;
    }

    double number() const
    {
        if (!json_.is_number()) {
            fail("expected a number");
        }
        return json_.get<double>();
    }

    int integer() const
    {
        if (!json_.is_number_integer()) {
            fail("expected an integer");
        }
        return json_.get<int>();
    }

    std::uint64_t unsignedInteger() const
    {
        if (!json_.is_number_unsigned()) {
            fail("expected a non-negative integer");
        }
        return json_.get<std::uint64_t>();
    }

    std::string string() const
    {
        if (!json_.is_string()) {
            fail("expected a string");
        }
        return json_.get<std::string>();
    }

    bool boolean() const
    {
        if (!json_.is_boolean()) {
            fail("expected true or false");
        }
        return json_.get<bool>();
    }

    /// Runs `convert` and reports its StructuralError against this node.
    template <class Fn>
    auto convert(Fn&& fn) const
    {
        try {
            return fn(string());
        }
        catch (const ScenarioFormatError&) {
            throw;
        }
        catch (const StructuralError& e) {
            fail(e.what());
        }
    }

private:
    std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const Json& json_;
    std::string path_;
};

Subscriber readSubscriber(const Node& n)
{
    n.object({"id", "kind", "energy", "bound", "priority"});
    Subscriber s;
    s.id = n["id"].string();
    s.kind = n["kind"].convert(subscriberKindFromString);
    s.energy = n["energy"].number();
    s.bound = n["bound"].number();
    s.priority = n["priority"].number();
    return s;
}

MatchingWeights readWeights(const Node& n)
{
    n.object({"w14", "w2", "w35", "alpha", "beta", "curtailCost", "flexCost", "preferenceForm"});
    MatchingWeights w;
    w.w14 = n["w14"].number();
    w.w2 = n["w2"].number();
    w.w35 = n["w35"].number();
    w.alpha = n["alpha"].number();
    if (n.has("beta")) {
        w.beta = n["beta"].number();
    }
    w.curtailCost = n["curtailCost"].number();
    w.flexCost = n["flexCost"].number();
    w.preferenceForm = n["preferenceForm"].convert(preferenceFormFromString);
    return w;
}

std::size_t lineOf(const std::string& text, std::size_t offset)
{
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

}  // namespace

std::string scenarioToJson(const Scenario& scenario)
{
    Json root;
    root["schemaVersion"] = kScenarioSchemaVersion;
    root["seed"] = scenario.seed;
    root["generator"] = scenario.generator;

    const auto& w = scenario.weights;
    Json weights;
    weights["w14"] = w.w14;
    weights["w2"] = w.w2;
    weights["w35"] = w.w35;
    weights["alpha"] = w.alpha;
    if (w.beta) {
        weights["beta"] = *w.beta;
    }
    weights["curtailCost"] = w.curtailCost;
    weights["flexCost"] = w.flexCost;
    weights["preferenceForm"] = preferenceFormName(w.preferenceForm);
    root["weights"] = weights;

    Json connectivity;
    connectivity["default"] = scenario.connectivity.defaultValue;
    connectivity["entries"] = Json::array();
    for (const auto& [key, value] : scenario.connectivity.entries()) {
        connectivity["entries"].push_back({{"from", key.first}, {"to", key.second}, {"connected", value}});
    }
    root["connectivity"] = connectivity;

    if (scenario.lineConstraints) {
        Json limits = Json::array();
        for (const auto& l : scenario.lineConstraints->limits) {
            limits.push_back({{"from", l.from}, {"to", l.to}, {"gammaMin", l.gammaMin}, {"gammaMax", l.gammaMax}});
        }
        root["lineConstraints"] = limits;
    }

    Json ssps = Json::array();
    for (const auto& ssp : scenario.ssps) {
        Json s;
        s["id"] = ssp.id;
        s["consumers"] = Json::array();
        for (const auto& c : ssp.consumers) {
            s["consumers"].push_back(subscriberJson(c));
        }
        s["producers"] = Json::array();
        for (const auto& p : ssp.producers) {
            s["producers"].push_back(subscriberJson(p));
        }
        Json prefs;
        if (ssp.preferences.defaultRank) {
            prefs["defaultRank"] = *ssp.preferences.defaultRank;
        }
        prefs["ranks"] = Json::array();
        for (const auto& [key, rank] : ssp.preferences.entries()) {
            prefs["ranks"].push_back({{"consumer", key.first}, {"target", key.second}, {"rank", rank}});
        }
        s["preferences"] = prefs;
        ssps.push_back(s);
    }
    root["ssps"] = ssps;
    return root.dump(2) + "\n";
}

Scenario scenarioFromJson(const std::string& text)
{
    Json doc;
    try {
        doc = Json::parse(text);
    }
    catch (const Json::parse_error& e) {
        throw ScenarioFormatError("malformed scenario JSON at byte " + std::to_string(e.byte) + " (line " +
                                  std::to_string(lineOf(text, e.byte)) + "): " + e.what());
    }

    const Node root(doc, "");
    root.object({"schemaVersion", "seed", "generator", "weights", "connectivity", "lineConstraints", "ssps"});
    if (const int version = root["schemaVersion"].integer(); version != kScenarioSchemaVersion) {
        root["schemaVersion"].fail("unsupported schema version " + std::to_string(version));
    }

    Scenario s;
    s.seed = root["seed"].unsignedInteger();
    s.generator = root["generator"].string();
    s.weights = readWeights(root["weights"]);

    const auto conn = root["connectivity"];
    conn.object({"default", "entries"});
    s.connectivity.defaultValue = conn["default"].boolean();
    for (const auto& e : conn["entries"].array()) {
        e.object({"from", "to", "connected"});
        s.connectivity.set(e["from"].string(), e["to"].string(), e["connected"].boolean());
    }

    if (root.has("lineConstraints")) {
        LineConstraintSet lines;
        for (const auto& l : root["lineConstraints"].array()) {
            l.object({"from", "to", "gammaMin", "gammaMax"});
            lines.limits.push_back({l["from"].string(), l["to"].string(), l["gammaMin"].number(),
                                    l["gammaMax"].number()});
        }
        s.lineConstraints = lines;
    }

    for (const auto& n : root["ssps"].array()) {
        n.object({"id", "consumers", "producers", "preferences"});
        SspConfig ssp;
        ssp.id = n["id"].string();
        for (const auto& c : n["consumers"].array()) {
            ssp.consumers.push_back(readSubscriber(c));
        }
        for (const auto& p : n["producers"].array()) {
            ssp.producers.push_back(readSubscriber(p));
        }
        const auto prefs = n["preferences"];
        prefs.object({"defaultRank", "ranks"});
        if (prefs.has("defaultRank")) {
            ssp.preferences.defaultRank = prefs["defaultRank"].integer();
        }
        for (const auto& r : prefs["ranks"].array()) {
            r.object({"consumer", "target", "rank"});
            ssp.preferences.set(r["consumer"].string(), r["target"].string(), r["rank"].integer());
        }
        s.ssps.push_back(std::move(ssp));
    }
    return s;
}

void saveScenario(const Scenario& scenario, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw StructuralError("cannot write " + path.string());
    }
    out << scenarioToJson(scenario);
    if (!out) {
        throw StructuralError("failed writing " + path.string());
    }
}

Scenario loadScenario(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StructuralError("cannot read " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return scenarioFromJson(buffer.str());
    }
    catch (const ScenarioFormatError& e) {
        throw ScenarioFormatError(path.string() + ": " + e.what());
    }
}

std::string scenarioFingerprint(const Scenario& scenario)
{
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(fnv1a(scenarioToJson(scenario))));
    return hex;
}

}  // namespace ecommit
