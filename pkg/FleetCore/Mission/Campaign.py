# encoding: utf-8
'''
Campaign -- Successive missions with online learning, and the comparison bench

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

import csv
import json
import logging
import os

import numpy as np

from FleetCore.FleetError import ContractViolation
from FleetCore.FleetSpec import FeatureSpace, StateSpaceVector
from FleetCore.Mission.Baselines import automated_sweep, baseline_automated, baseline_classic_rl
from FleetCore.Mission.MissionSim import run_mission
from FleetCore.Models.Ensemble import ModelEnsemble
from FleetCore.Models.QTable import QTable
from FleetCore.Online.OnlineLearning import (POWERSET, AggregationSet, aggregate_usefulness, base_only_usefulness,
                                             enumerate_aggregations, optimize_weights, retrain_variants, retune_gate)
from FleetCore.Parallel import derive_seed, map_ordered
from FleetCore.Shaping.BayesOpt import DEFAULT_CANDIDATES
from FleetCore.Shaping.RewardShaping import mission_loss

logger = logging.getLogger("fleetsim.mission")

DEFAULT_BO_EPOCHS = 5


class CampaignResult(object):
    def __init__(self):
        self.reports = []
        self.losses = []
        self.usefulness = []
        self.weights = []
        self.traces = []
        self.retraining = []
        self.specs = []

    def summaryRows(self):
        rows = []
        for idx, (report, lossValue) in enumerate(zip(self.reports, self.losses)):
            m = report.metrics
            rows.append([idx, repr(float(m.get("accuracy", 0.0))), repr(float(m.get("steps", 0.0))),
                         repr(float(m.get("agent_energy", 0.0))), repr(float(m.get("edge_energy", 0.0))),
                         repr(float(lossValue))])
        return rows

    def usefulnessHistory(self):
        return [{"mission": idx, "usefulness": u.toJSONObject(), "weights": [list(map(float, w)) for w in ws],
                 "reward": spec.toJSONObject()}
                for idx, (u, ws, spec) in enumerate(zip(self.usefulness, self.weights, self.specs))]


def run_campaign(fleetspec, nMissions, online, seed, spec, baseTable=None, cluster=None, aggregation=POWERSET,
                 boEpochs=DEFAULT_BO_EPOCHS, nCandidates=DEFAULT_CANDIDATES, threads=1, retuneGate=True):
    '''
    Fly nMissions missions over the runtime contexts in turn. With online
    learning, after each mission every aggregation retrains an SA variant,
    every agent weighs the variants, and the variants' usefulness is
    submitted to the cluster as retraining tasks. The next mission flies the
    weighted ensembles under a re-tuned HA visit threshold, and the base
    table absorbs all of the mission's transitions. Without online learning
    every mission flies the base table at full usefulness.

    @type cluster: EdgeRuntime
    @param cluster: Optional edge cluster running sensor and retraining tasks

    @type aggregation: string
    @param aggregation: "powerset" or "per_agent"

    @type retuneGate: bool
    @param retuneGate: Re-fit T_v to the goals after each online mission

    @rtype: CampaignResult
    '''
    if nMissions < 1:
        raise ContractViolation("A campaign needs at least one mission, got %d" % nMissions)
    runtime = fleetspec.contexts.get("runtime") or []
    if not runtime:
        raise ContractViolation("A campaign needs runtime contexts")

    base = baseTable.copy() if baseTable is not None else QTable()
    models = base
    params = fleetspec.learning
    result = CampaignResult()

    for mission in range(nMissions):
        context = runtime[mission % len(runtime)]
        missionSeed = derive_seed(seed, mission)
        report, trace = run_mission(fleetspec, models, spec, cluster=cluster, seed=missionSeed, context=context,
                                    missionIndex=mission)
        lossValue = mission_loss(fleetspec, report, context)
        result.reports.append(report)
        result.losses.append(lossValue)
        result.traces.append(trace)
        result.specs.append(spec)
        logger.info("[Mission %d] loss %.6f accuracy %.4f steps %d", mission, lossValue,
                    report.metrics.get("accuracy", float("nan")), report.metrics.get("steps", 0))

        if not online:
            weights, usefulness = base_only_usefulness(fleetspec.nAgents)
            result.usefulness.append(usefulness)
            result.weights.append(weights)
            continue

        traces = dict((a, trace.forAgent(a)) for a in range(fleetspec.nAgents))
        aggs = enumerate_aggregations(fleetspec.nAgents, aggregation)
        variants = retrain_variants(base, traces, aggs, spec, params, threads)

        evalContexts = fleetspec.contexts.get("retrain") or [context]
        argsList = [(agent, variants, evalContexts, fleetspec, fleetspec.goals, boEpochs,
                     derive_seed(seed, mission, agent), spec, None, None, nCandidates, mission + 1)
                    for agent in range(fleetspec.nAgents)]
        weights = map_ordered(optimize_weights, argsList, threads)
        usefulness = aggregate_usefulness(weights, aggs)
        result.usefulness.append(usefulness)
        result.weights.append(weights)

        if cluster is not None:
            cluster.submitRetraining(usefulness, traces)
            result.retraining.append(cluster.runRetraining())

        models = [ModelEnsemble(variants, w) for w in weights]
        if retuneGate:
            retuned = retune_gate(models, evalContexts, fleetspec, fleetspec.goals, spec,
                                  derive_seed(seed, mission, fleetspec.nAgents), mission + 1)
            if retuned.visitThreshold != spec.visitThreshold:
                logger.info("[Mission %d] visit threshold %s -> %s", mission, spec.visitThreshold,
                            retuned.visitThreshold)
            spec = retuned
        everyone = AggregationSet([(), tuple(range(fleetspec.nAgents))])
        base = retrain_variants(base, traces, everyone, spec, params)[1]

    return result


def write_campaign(result, outdir):
    for idx, report in enumerate(result.reports):
        with open(os.path.join(outdir, "eval_report_%d.json" % idx), 'w') as f:
            json.dump(report.toJSONObject(), f, indent=2, sort_keys=True)

    with open(os.path.join(outdir, "usefulness_history.json"), 'w') as f:
        json.dump(result.usefulnessHistory(), f, indent=2, sort_keys=True)

    with open(os.path.join(outdir, "campaign_summary.csv"), 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(["mission", "accuracy", "steps", "agent_energy", "edge_energy", "loss"])
        writer.writerows(result.summaryRows())


def automated_to_goals(fleetspec, context, nAgents):
    '''
    Automated sweep extended one visit at a time until every ">=" goal of the
    FleetSpec is met (or the field is exhausted).

    @rtype: EvalReport
    '''
    goals = [g for g in fleetspec.goals if g.comparator == ">="]
    schedule = automated_sweep(context, 1.0, nAgents, fleetspec.tilingFor(context))
    featureSpace = FeatureSpace()
    for count, (tick, agent, state, _) in enumerate(schedule, 1):
        featureSpace.append(StateSpaceVector(fleetspec.mapPlug.map(context.record(state)), state, agent))
        report = fleetspec.evalPlug.evaluate(featureSpace, {"steps": float(tick + 1)}, context, True)
        if all(g.metric in report.metrics and g.isMet(report.metrics[g.metric]) for g in goals):
            return baseline_automated(context, count / float(context.stateCount), nAgents, fleetspec)
    return baseline_automated(context, 1.0, nAgents, fleetspec)


def ratio(numerator, denominator):
    if denominator <= 0:
        return 0.0
    return float(numerator) / float(denominator)


BENCH_COLUMNS = ["seed", "fleet_steps", "single_steps", "speedup", "fleet_coverage", "classic_coverage",
                 "automated_coverage", "classic_vs_fleet_coverage", "automated_vs_fleet_coverage",
                 "fleet_energy", "classic_energy", "automated_energy", "edge_always_on", "edge_autoscaled",
                 "edge_energy_ratio"]


def _bench_seed(fleetspec, spec, table, context, seed, clusterFactory):
    fleet, _ = run_mission(fleetspec, table, spec, seed=seed, context=context)
    single, _ = run_mission(fleetspec.withAgents(1), table, spec, seed=seed, context=context)
    classic, _ = baseline_classic_rl(fleetspec, seed, table, context)
    automated = automated_to_goals(fleetspec, context, fleetspec.nAgents)

    edge = [0.0, 0.0]
    if clusterFactory is not None:
        for idx, autoscale in enumerate((False, True)):
            report, _ = run_mission(fleetspec, table, spec, cluster=clusterFactory(autoscale), seed=seed,
                                    context=context)
            edge[idx] = report.metrics["edge_energy"]

    f, s, c, a = fleet.metrics, single.metrics, classic.metrics, automated.metrics
    return [f["steps"], s["steps"], ratio(s["steps"], f["steps"]),
            f["coverage"], c["coverage"], a["coverage"],
            ratio(c["coverage"], f["coverage"]), ratio(a["coverage"], f["coverage"]),
            f["agent_energy"], c["agent_energy"], a["agent_energy"],
            edge[0], edge[1], ratio(edge[0], edge[1])]


def run_bench(fleetspec, spec, seeds, seed, table=None, contexts=None, clusterFactory=None, threads=1):
    '''
    Matched-seed comparison of Fleet against a single agent, classic RL and
    the automated sweep, plus always-on against autoscaled edge energy.

    @type clusterFactory: callable
    @param clusterFactory: autoscale flag -> fresh EdgeRuntime, None skips the edge comparison

    @rtype: list
    @return: One row per seed followed by the mean row
    '''
    if seeds < 1:
        raise ContractViolation("The bench needs at least one seed")
    contexts = contexts or fleetspec.contexts.get("runtime") or []
    if not contexts:
        raise ContractViolation("The bench needs runtime contexts")
    table = table if table is not None else QTable()

    argsList = [(fleetspec, spec, table, contexts[idx % len(contexts)], derive_seed(seed, idx), clusterFactory)
                for idx in range(seeds)]
    values = map_ordered(_bench_seed, argsList, threads)
    rows = [[idx] + [repr(float(v)) for v in vals] for idx, vals in enumerate(values)]
    mean = np.mean(np.array(values, dtype=float), axis=0)
    rows.append(["mean"] + [repr(float(v)) for v in mean])
    return rows


def write_bench(rows, path, columns=None):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(columns or BENCH_COLUMNS)
        writer.writerows(rows)
