# encoding: utf-8
'''
OnlineLearning -- Between-mission learning from pooled swarm data

After a mission, every aggregation of agents retrains a variant of the base
SA table on its members' recorded transitions. Each agent then weighs the
variants by Bayesian optimization over the simplex, and the mean weight of a
variant across agents becomes its usefulness, which drives retraining
priority on the edge cluster. Finally the HA visit threshold is re-fit to
the goals by flying the new ensembles at every threshold a state group
admits.

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

import itertools
import logging

import numpy as np

from FleetCore.FleetError import ContractViolation
from FleetCore.Models.Ensemble import ModelEnsemble, check_simplex, project_to_simplex
from FleetCore.Models.QTable import q_update
from FleetCore.Models.RewardSpec import RewardSpec, reward
from FleetCore.Parallel import derive_seed, map_ordered
from FleetCore.Shaping.BayesOpt import DEFAULT_CANDIDATES, SimplexSpace, bayes_optimize
from FleetCore.Shaping.RewardShaping import mission_loss

logger = logging.getLogger("fleetsim.online")

POWERSET = "powerset"
PER_AGENT = "per_agent"
AGGREGATION_MODES = (POWERSET, PER_AGENT)
MAX_POWERSET_AGENTS = 8


class AggregationSet(object):
    '''Agent subsets, one per SA variant. The empty subset comes first.'''
    def __init__(self, subsets):
        subsets = [tuple(sorted(s)) for s in subsets]
        if len(set(subsets)) != len(subsets):
            raise ContractViolation("Aggregation subsets must be unique")
        if not subsets or subsets[0] != ():
            raise ContractViolation("The empty aggregation must come first")
        self.subsets = subsets

    def __len__(self):
        return len(self.subsets)

    def __iter__(self):
        return iter(self.subsets)

    def __getitem__(self, idx):
        return self.subsets[idx]

    def agents(self):
        return sorted(set(a for s in self.subsets for a in s))


def enumerate_aggregations(nAgents, mode=POWERSET):
    '''
    @type nAgents: int
    @param nAgents: Swarm size

    @type mode: string
    @param mode: "powerset" for every subset (at most 8 agents), "per_agent"
                 for the empty subset plus one singleton per agent

    @rtype: AggregationSet
    '''
    if nAgents < 1:
        raise ContractViolation("Need at least one agent, got %d" % nAgents)
    if mode not in AGGREGATION_MODES:
        raise ContractViolation("Unknown aggregation mode %r" % mode)

    if mode == PER_AGENT:
        return AggregationSet([()] + [(a,) for a in range(nAgents)])

    if nAgents > MAX_POWERSET_AGENTS:
        raise ContractViolation("Powerset aggregation supports at most %d agents, got %d; use per_agent instead" %
                                (MAX_POWERSET_AGENTS, nAgents))
    subsets = []
    for size in range(nAgents + 1):
        subsets.extend(itertools.combinations(range(nAgents), size))
    return AggregationSet(subsets)


def _replay_variant(base, transitions, spec, params):
    table = base.copy()
    for t in transitions:
        q_update(table, t.state, t.action, t.nextState, reward(t.features, spec), params, t.validNext)
    return table


def retrain_variants(base, traces, aggs, spec, params, threads=1):
    '''
    Retrain one SA variant per aggregation by replaying the pooled
    transitions of its agents, in agent order, on a copy of the base table.

    @type traces: dict
    @param traces: agent -> recorded transitions of the last mission

    @rtype: list
    @return: One QTable per subset, in aggregation order
    '''
    for agent in aggs.agents():
        if agent not in traces:
            raise ContractViolation("No mission trace for agent %d" % agent)

    argsList = []
    for subset in aggs:
        pooled = []
        for agent in subset:
            pooled.extend(traces[agent])
        argsList.append((base, pooled, spec, params))

    variants = map_ordered(_replay_variant, argsList, threads)
    logger.debug("Retrained %d SA variants", len(variants))
    return variants


def variant_work(traces, subset):
    '''Work units of a retraining task: the number of transitions replayed.'''
    return sum(len(traces.get(a, ())) for a in subset)


def optimize_weights(agent, saS, evalContexts, fleetspec, goals, boEpochs, seed, spec, others=None, pool=None,
                     nCandidates=DEFAULT_CANDIDATES, missionIndex=0):
    '''
    Weigh the SA variants for one agent. Candidates are scored by flying the
    evaluation contexts with this agent on the weighted ensemble while the
    other agents keep their own policies (the base table by default).

    @type saS: list
    @param saS: SA variants, index 0 is the base table

    @type others: list
    @param others: Optional policy per agent for everyone but this agent

    @type pool: list
    @param pool: Optional finite list of candidate weight vectors

    @rtype: numpy.ndarray
    @return: Weight vector on the simplex
    '''
    from FleetCore.Mission.MissionSim import run_mission

    if not saS:
        raise ContractViolation("Need at least one SA variant")
    if boEpochs < 1:
        raise ContractViolation("Weight optimization needs at least one epoch, got %d" % boEpochs)
    if len(saS) == 1:
        return np.array([1.0])
    if not evalContexts:
        raise ContractViolation("Weight optimization needs at least one evaluation context")

    def objective(weights):
        models = []
        for i in range(fleetspec.nAgents):
            if i == agent:
                models.append(ModelEnsemble(saS, weights))
            elif others is not None:
                models.append(others[i])
            else:
                models.append(saS[0])

        total = 0.0
        met = True
        for idx, ctx in enumerate(evalContexts):
            report, _ = run_mission(fleetspec, models, spec, seed=derive_seed(seed, idx), context=ctx,
                                    missionIndex=missionIndex)
            total += mission_loss(fleetspec, report, ctx, goals)
            met = met and goals.allMet(report)
        return total, met

    result = bayes_optimize(objective, SimplexSpace(len(saS)), boEpochs, seed, nCandidates, pool=pool,
                            label="weights agent %d" % agent)
    return check_simplex(project_to_simplex(result.candidate))


class UsefulnessReport(object):
    def __init__(self, subsets, usefulness, provenance):
        self.subsets = list(subsets)
        self.usefulness = np.asarray(usefulness, dtype=float)
        self.provenance = provenance

    def items(self):
        return zip(self.subsets, (float(u) for u in self.usefulness))

    def __getitem__(self, idx):
        return float(self.usefulness[idx])

    def __len__(self):
        return len(self.subsets)

    def toJSONObject(self):
        return {"models": [{"subset": list(s), "usefulness": u} for s, u in self.items()]}


def aggregate_usefulness(weights, aggs=None):
    '''
    Usefulness of each variant: the unweighted mean of the agents' weights.

    @type weights: list
    @param weights: One simplex vector per agent, in agent order

    @type aggs: AggregationSet
    @param aggs: Subsets labelling the variants, defaults to model indices

    @rtype: UsefulnessReport
    '''
    if not weights:
        raise ContractViolation("Need at least one weight vector")
    lengths = set(len(w) for w in weights)
    if len(lengths) != 1:
        raise ContractViolation("Weight vectors differ in length: %s" % sorted(lengths))
    matrix = np.array([check_simplex(w) for w in weights])
    if aggs is not None and len(aggs) != matrix.shape[1]:
        raise ContractViolation("Got %d weights per agent for %d aggregations" % (matrix.shape[1], len(aggs)))

    usefulness = np.clip(matrix.mean(axis=0), 0.0, 1.0)
    subsets = list(aggs) if aggs is not None else [(k,) for k in range(matrix.shape[1])]
    return UsefulnessReport(subsets, usefulness, matrix)


def base_only_usefulness(nAgents):
    '''
    Weights and usefulness of a swarm flying the base table alone.

    @rtype: tuple
    @return: (one weight vector per agent, UsefulnessReport)
    '''
    if nAgents < 1:
        raise ContractViolation("Need at least one agent, got %d" % nAgents)
    weights = [np.array([1.0]) for _ in range(nAgents)]
    return weights, aggregate_usefulness(weights, AggregationSet([()]))


def retune_gate(models, evalContexts, fleetspec, goals, spec, seed, missionIndex=0):
    '''
    Re-fit the HA visit threshold T_v to recent execution data. The
    evaluation contexts are flown with the given policies at every threshold
    a state group admits, smallest first, and the lowest goal loss wins.
    Ties keep the smaller threshold. Weights and T_u are unchanged.

    @type models: QTable, ModelEnsemble or list
    @param models: Policies the next mission will fly

    @rtype: RewardSpec
    '''
    from FleetCore.Mission.MissionSim import run_mission

    if not evalContexts:
        raise ContractViolation("Gate re-tuning needs at least one evaluation context")

    best = None
    for visits in range(fleetspec.tileWidth * fleetspec.tileHeight):
        candidate = RewardSpec(spec.weights, spec.utilityThreshold, visits)
        total = 0.0
        for idx, ctx in enumerate(evalContexts):
            report, _ = run_mission(fleetspec, models, candidate, seed=derive_seed(seed, idx), context=ctx,
                                    missionIndex=missionIndex)
            total += mission_loss(fleetspec, report, ctx, goals)
        logger.debug("[Gate T_v %d] loss %.6f", visits, total)

        if best is None or total < best[0]:
            best = (total, candidate)
        if total == 0.0:
            # Nothing beats a zero loss
            break
    return best[1]
