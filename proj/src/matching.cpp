#include "ecommit/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ecommit {

PartnerCapacity* SspView::findPartner(const std::string& partnerId)
{
    for (auto& p : partners) {
        if (p.id == partnerId) {
            return &p;
        }
    }
    return nullptr;
}

const PartnerCapacity* SspView::findPartner(const std::string& partnerId) const
{
    return const_cast<SspView*>(this)->findPartner(partnerId);
}

std::string SspView::ownerOf(const std::string& subscriberId) const
{
    if (auto it = owner.find(subscriberId); it != owner.end()) {
        return it->second;
    }
    return id;
}

SspView makeView(const Scenario& scenario, const std::string& sspId, const std::vector<std::string>& partnerIds)
{
    const SspConfig* ssp = scenario.findSsp(sspId);
    if (!ssp) {
        throw StructuralError("unknown SSP '" + sspId + "'");
    }
    SspView view;
    view.id = ssp->id;
    view.consumers = ssp->consumers;
    view.producers = ssp->producers;
    view.preferences = ssp->preferences;
    view.connectivity = scenario.connectivity;
    for (const auto& partner : partnerIds) {
        if (partner == sspId || !scenario.findSsp(partner)) {
            throw StructuralError("SSP '" + sspId + "' cannot partner with '" + partner + "'");
        }
        view.partners.push_back({partner, 0.0, 0.0, 0.0});
    }
    return view;
}

namespace {

double firmPart(const PartnerCapacity& p)
{
    return p.offered / (1.0 + std::max(0.0, p.offeredBound));
}

bool partnerActive(const PartnerCapacity& p)
{
    return p.held > 0.0 || p.offered > 0.0;
}

int requireRank(const SspView& view, const std::string& consumer, const std::string& target)
{
    const auto rank = view.preferences.rank(consumer, target);
    if (!rank) {
        throw StructuralError("missing preference rank pt(" + consumer + "," + target + ") in SSP " + view.id);
    }
    return *rank;
}

}  // namespace

MatchingProgram buildMatchingProgram(const SspView& view, const MatchingWeights& weights,
                                     const std::optional<LineConstraintSet>& lines)
{
    MatchingProgram out;
    auto& lp = out.program;
    auto& layout = out.layout;
    using lp::Relation;
    using lp::Term;
    constexpr double inf = lp::kInfinity;

    const double beta = weights.beta.value_or(view.preferences.maxRank() + 1.0);
    const bool additive = weights.preferenceForm == PreferenceForm::Additive;
    auto localCost = [&](const Subscriber& consumer, int rank) {
        const double pref = weights.alpha * (beta - rank);
        if (additive) {
            lp.objectiveOffset -= weights.w35 * pref;
            return -weights.w14 * consumer.priority - weights.w35;
        }
        return -weights.w14 * consumer.priority - weights.w35 * (1.0 + pref);
    };

    for (const auto& c : view.consumers) {
        layout.rows.push_back({c.id, PartyKind::Subscriber});
    }
    for (const auto& e : view.exports) {
        layout.rows.push_back({e.buyer, PartyKind::Partner});
    }
    layout.rows.push_back({kUtilityId, PartyKind::Utility});
    for (const auto& p : view.producers) {
        layout.cols.push_back({p.id, PartyKind::Subscriber});
    }
    for (const auto& k : view.partners) {
        layout.cols.push_back({k.id, PartyKind::Partner});
    }
    layout.cols.push_back({kUtilityId, PartyKind::Utility});

    const std::size_t nCons = view.consumers.size();
    const std::size_t nProd = view.producers.size();
    const std::size_t nPart = view.partners.size();
    const std::size_t utilityRow = layout.rows.size() - 1;
    const std::size_t utilityCol = layout.cols.size() - 1;

    std::vector<std::vector<Term>> producerTerms(nProd);
    std::vector<std::vector<Term>> partnerTerms(nPart);

    auto addCell = [&](std::size_t row, std::size_t col, double cost) {
        const auto var = lp.addVariable("cm(" + layout.rows[row].id + "," + layout.cols[col].id + ")", 0.0,
                                        inf, cost);
        layout.cells.push_back({row, col, var});
        return var;
    };

    for (std::size_t r = 0; r < nCons; ++r) {
        const auto& c = view.consumers[r];
        std::vector<Term> demand;
        for (std::size_t j = 0; j < nProd; ++j) {
            const auto& p = view.producers[j];
            if (!view.connectivity.connected(c.id, p.id)) {
                continue;
            }
            const auto var = addCell(r, j, localCost(c, requireRank(view, c.id, p.id)));
            demand.push_back({var, 1.0});
            producerTerms[j].push_back({var, 1.0});
        }
        for (std::size_t k = 0; k < nPart; ++k) {
            const auto& partner = view.partners[k];
            if (!partnerActive(partner) || !view.connectivity.connected(c.id, partner.id)) {
                continue;
            }
            const auto var = addCell(r, nProd + k, localCost(c, requireRank(view, c.id, partner.id)));
            demand.push_back({var, 1.0});
            partnerTerms[k].push_back({var, 1.0});
        }
        demand.push_back({addCell(r, utilityCol, weights.w2), 1.0});

        const auto fx = lp.addVariable("fx(" + c.id + ")", 1.0 - c.bound, 1.0, -weights.curtailCost * c.energy);
        lp.objectiveOffset += weights.curtailCost * c.energy;
        layout.flex.emplace_back(c.id, fx);
        demand.push_back({fx, -c.energy});
        lp.addConstraint("demand(" + c.id + ")", std::move(demand), Relation::Equal, 0.0);
    }

    // Exports are fixed in total, so their reward is a constant; it makes
    // granting a claim lower the seller's objective.
    const double exportReward = weights.w2 + weights.flexCost;
    for (std::size_t e = 0; e < view.exports.size(); ++e) {
        std::vector<Term> row;
        for (std::size_t j = 0; j < nProd; ++j) {
            const auto var = addCell(nCons + e, j, -exportReward);
            row.push_back({var, 1.0});
            producerTerms[j].push_back({var, 1.0});
        }
        lp.addConstraint("export(" + view.exports[e].buyer + ")", std::move(row), Relation::Equal,
                         view.exports[e].amount);
    }

    for (std::size_t j = 0; j < nProd; ++j) {
        const auto& p = view.producers[j];
        producerTerms[j].push_back({addCell(utilityRow, j, 0.0), 1.0});
        const auto fx = lp.addVariable("fx(" + p.id + ")", 1.0, 1.0 + p.bound, weights.flexCost * p.energy);
        lp.objectiveOffset -= weights.flexCost * p.energy;
        layout.flex.emplace_back(p.id, fx);
        producerTerms[j].push_back({fx, -p.energy});
        lp.addConstraint("supply(" + p.id + ")", std::move(producerTerms[j]), Relation::Equal, 0.0);
    }

    for (std::size_t k = 0; k < nPart; ++k) {
        const auto& partner = view.partners[k];
        auto terms = std::move(partnerTerms[k]);
        if (terms.empty()) {
            continue;
        }
        if (partner.offered > 0.0) {
            const double firm = firmPart(partner);
            const auto fx = lp.addVariable("fx(" + partner.id + ")", 1.0, 1.0 + std::max(0.0, partner.offeredBound),
                                           weights.flexCost * firm);
            lp.objectiveOffset -= weights.flexCost * firm;
            layout.flex.emplace_back(partner.id, fx);
            if (partner.held > 0.0) {
                lp.addConstraint("held(" + partner.id + ")", terms, Relation::GreaterEqual, partner.held);
            }
            terms.push_back({fx, -firm});
            lp.addConstraint("partner(" + partner.id + ")", std::move(terms), Relation::LessEqual, partner.held);
        }
        else {
            lp.addConstraint("partner(" + partner.id + ")", std::move(terms), Relation::Equal, partner.held);
        }
    }

    if (lines) {
        auto rowOwner = [&](std::size_t r) {
            return layout.rows[r].kind == PartyKind::Subscriber ? view.ownerOf(layout.rows[r].id)
                                                                 : layout.rows[r].id;
        };
        auto colOwner = [&](std::size_t c) {
            return layout.cols[c].kind == PartyKind::Subscriber ? view.ownerOf(layout.cols[c].id)
                                                                 : layout.cols[c].id;
        };
        for (const auto& limit : lines->limits) {
            const std::string label = "line(" + limit.from + "," + limit.to + ")";
            bool single = false;
            for (const auto& cell : layout.cells) {
                if (layout.rows[cell.row].id == limit.from && layout.cols[cell.col].id == limit.to) {
                    const auto& v = lp.variables()[cell.var];
                    const double lo = std::max(v.lower, limit.gammaMin);
                    const double hi = std::min(v.upper, limit.gammaMax);
                    if (lo > hi) {
                        throw InfeasibleMatching(label + " leaves no room for " + v.name);
                    }
                    lp.setBounds(cell.var, lo, hi);
                    single = true;
                    break;
                }
            }
            if (single) {
                continue;
            }
            std::vector<Term> flow;
            for (const auto& cell : layout.cells) {
                if (rowOwner(cell.row) == limit.from && colOwner(cell.col) == limit.to) {
                    flow.push_back({cell.var, 1.0});
                }
            }
            if (flow.empty()) {
                continue;
            }
            if (limit.gammaMin > 0.0) {
                lp.addConstraint(label + ".min", flow, Relation::GreaterEqual, limit.gammaMin);
            }
            if (std::isfinite(limit.gammaMax)) {
                lp.addConstraint(label + ".max", std::move(flow), Relation::LessEqual, limit.gammaMax);
            }
        }
    }
    return out;
}

lp::LinearProgram buildMatchingLP(const SspView& view, const MatchingWeights& weights,
                                  const std::optional<LineConstraintSet>& lines)
{
    return buildMatchingProgram(view, weights, lines).program;
}

MatchingSolution solveDistMatching(const SspView& view, const MatchingWeights& weights,
                                   const std::optional<LineConstraintSet>& lines)
{
    const auto built = buildMatchingProgram(view, weights, lines);
    const auto solution = lp::solveLp(built.program);
    if (solution.status == lp::Status::Infeasible) {
        throw InfeasibleMatching("matching LP of " + view.id + " is infeasible under its line limits");
    }
    if (solution.status == lp::Status::Unbounded) {
        throw std::logic_error("matching LP of " + view.id + " is unbounded");
    }
    MatchingSolution out;
    out.cm = CommitmentMatrix(built.layout.rows, built.layout.cols);
    for (const auto& cell : built.layout.cells) {
        out.cm.at(cell.row, cell.col) = solution.values[cell.var];
    }
    for (const auto& [id, var] : built.layout.flex) {
        out.fx.values.emplace_back(id, solution.values[var]);
    }
    out.objective = solution.objective;
    return out;
}

double commitmentResidual(const SspView& view, const CommitmentMatrix& cm, const FlexibilityAssignment& fx)
{
    double worst = 0.0;
    auto over = [&](double amount) { worst = std::max(worst, amount); };
    auto flexOf = [&](const std::string& id) { return fx.get(id).value_or(1.0); };

    for (std::size_t r = 0; r < cm.rows().size(); ++r) {
        for (std::size_t c = 0; c < cm.cols().size(); ++c) {
            over(-cm.at(r, c));
        }
    }
    for (const auto& c : view.consumers) {
        const double f = flexOf(c.id);
        over((1.0 - c.bound) - f);
        over(f - 1.0);
        const double got = cm.suppliedTo(c.id) + cm.get(c.id, kUtilityId);
        over(f * c.energy - got);
        over(got - c.energy);
        for (const auto& p : view.producers) {
            if (!view.connectivity.connected(c.id, p.id)) {
                over(cm.get(c.id, p.id));
            }
        }
        for (const auto& k : view.partners) {
            if (!view.connectivity.connected(c.id, k.id)) {
                over(cm.get(c.id, k.id));
            }
        }
    }
    for (const auto& p : view.producers) {
        const double f = flexOf(p.id);
        over(1.0 - f);
        over(f - (1.0 + p.bound));
        over(cm.committedFrom(p.id) + cm.get(kUtilityId, p.id) - f * p.energy);
    }
    for (const auto& k : view.partners) {
        const double f = flexOf(k.id);
        over(1.0 - f);
        over(f - (1.0 + std::max(0.0, k.offeredBound)));
        over(cm.committedFrom(k.id) - (k.held + firmPart(k) * f));
        over(k.held - cm.committedFrom(k.id));
    }
    for (const auto& e : view.exports) {
        over(std::abs(cm.suppliedTo(e.buyer) - e.amount));
    }
    return worst;
}

double servedDemand(const SspView& view, const FlexibilityAssignment& fx)
{
    double total = 0.0;
    for (const auto& c : view.consumers) {
        total += fx.get(c.id).value_or(1.0) * c.energy;
    }
    return total;
}

Surplus aggregateSurplus(const SspConfig& ssp, const CommitmentMatrix& cm)
{
    Surplus s;
    double flex = 0.0;
    for (const auto& p : ssp.producers) {
        const double residual = p.energy - cm.committedFrom(p.id);
        if (residual > kEnergyTolerance) {
            s.totalEnergy += residual;
            flex += p.bound * p.energy;
        }
    }
    s.exEnergy = s.totalEnergy + flex;
    return s;
}

double aggregateBound(const SspConfig& ssp, const CommitmentMatrix& cm)
{
    double total = 0.0;
    double flex = 0.0;
    for (const auto& p : ssp.producers) {
        const double residual = p.energy - cm.committedFrom(p.id);
        if (residual > kEnergyTolerance) {
            total += residual;
            flex += p.bound * p.energy;
        }
    }
    return total > 0.0 ? flex / total : 0.0;
}

double offerBound(const Surplus& surplus)
{
    return surplus.exEnergy / (surplus.totalEnergy + 1e-7) - 1.0;
}

SspView mergedView(const Scenario& scenario)
{
    SspView view;
    view.id = "centralized";
    const auto& n = scenario.connectivity;
    for (const auto& a : scenario.ssps) {
        for (const auto& c : a.consumers) {
            view.consumers.push_back(c);
            view.owner[c.id] = a.id;
        }
        for (const auto& p : a.producers) {
            view.producers.push_back(p);
            view.owner[p.id] = a.id;
        }
    }
    for (const auto& a : scenario.ssps) {
        for (const auto& c : a.consumers) {
            view.connectivity.set(c.id, kUtilityId, n.connected(c.id, kUtilityId));
            for (const auto& b : scenario.ssps) {
                const bool local = a.id == b.id;
                const bool reach = local || (n.connected(c.id, b.id) && n.connected(a.id, b.id));
                for (const auto& p : b.producers) {
                    const bool on = local ? n.connected(c.id, p.id) : reach;
                    if (!on) {
                        view.connectivity.set(c.id, p.id, false);
                        continue;
                    }
                    const auto rank = a.preferences.rank(c.id, local ? p.id : b.id);
                    if (rank) {
                        view.preferences.set(c.id, p.id, *rank);
                    }
                }
            }
        }
    }
    return view;
}

MatchingSolution solveCentralized(const Scenario& scenario)
{
    return solveDistMatching(mergedView(scenario), scenario.weights, scenario.lineConstraints);
}

MatchingWeights calibrateWeights(const Scenario& scenario, const CalibrationMetric& metric, int iterations)
{
    const MatchingWeights defaults;
    Scenario trial = scenario;
    MatchingWeights best = scenario.weights;
    double bestMetric = metric(trial);

    using Field = double MatchingWeights::*;
    const Field fields[] = {&MatchingWeights::w14, &MatchingWeights::w2, &MatchingWeights::w35};

    for (int it = 0; it < iterations; ++it) {
        bool moved = false;
        for (const Field field : fields) {
            for (const double factor : {2.0, 0.5}) {
                MatchingWeights candidate = best;
                double& value = candidate.*field;
                if (value == 0.0) {
                    if (factor < 1.0) {
                        continue;
                    }
                    value = defaults.*field;
                }
                else {
                    value *= factor;
                }
                trial.weights = candidate;
                double m = std::numeric_limits<double>::infinity();
                try {
                    m = metric(trial);
                }
                catch (const std::runtime_error&) {
                    // a candidate that breaks the run is simply not taken
                }
                if (m < bestMetric - 1e-9) {
                    best = candidate;
                    bestMetric = m;
                    moved = true;
                    break;
                }
            }
        }
        if (!moved) {
            break;
        }
    }
    return best;
}

}  // namespace ecommit
