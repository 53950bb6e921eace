# encoding: utf-8
'''
RewardShaping -- Offline construction of reward weights and gate thresholds

Candidates are scored by flying one mission per training context and
summing a goal loss over the resulting reports. The loss is zero exactly
when every goal is met and no cost terms are weighted.

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

import numpy as np

from FleetCore import JSONHelper
from FleetCore.FleetError import ContractViolation
from FleetCore.FleetSpec import StateSpaceVector, apply_action, valid_actions
from FleetCore.Models.QTable import QTable, q_update, select_action
from FleetCore.Models.RewardSpec import RewardSpec, reward
from FleetCore.Parallel import derive_seed, map_ordered
from FleetCore.Shaping.BayesOpt import DEFAULT_CANDIDATES, RewardSpace, bayes_optimize

logger = logging.getLogger("fleetsim.shaping")

COST_TERMS = ("steps", "energy")


def hinge(goal, value):
    if goal.comparator == ">=":
        excess = goal.target - value
    else:
        excess = value - goal.target
    if goal.target != 0:
        return max(0.0, excess / abs(goal.target))
    return max(0.0, excess)


def loss(goals, report, costWeights=None, stateCount=None, energyBudget=None):
    '''
    Goal loss of one mission report.

    @type goals: Goals
    @param goals: Mission goals, every metric must be in the report

    @type costWeights: dict
    @param costWeights: Optional weights for the "steps" and "energy" cost terms

    @type stateCount: int
    @param stateCount: |S| of the context, normalizes the steps term

    @type energyBudget: float
    @param energyBudget: Normalizes the agent energy term

    @rtype: float
    '''
    missing = [m for m in goals.metrics() if m not in report.metrics]
    if missing:
        raise ContractViolation("Report lacks goal metrics: %s" % ", ".join(missing))

    total = 0.0
    for goal in goals:
        total += hinge(goal, float(report.metrics[goal.metric]))

    costWeights = costWeights or {}
    unknown = [k for k in costWeights if k not in COST_TERMS]
    if unknown:
        raise ContractViolation("Unknown cost terms: %s" % ", ".join(unknown))

    if costWeights.get("steps"):
        if not stateCount:
            raise ContractViolation("The steps cost term needs the state count")
        total += costWeights["steps"] * report.metrics["steps"] / float(stateCount)
    if costWeights.get("energy"):
        if not energyBudget:
            raise ContractViolation("The energy cost term needs an energy budget")
        total += costWeights["energy"] * report.metrics["agent_energy"] / float(energyBudget)
    return total


def mission_loss(fleetspec, report, context, goals=None):
    goals = goals if goals is not None else fleetspec.goals
    return loss(goals, report, fleetspec.costWeights, context.stateCount, fleetspec.energyBudget)


def _shape_mission(fleetspec, table, spec, context, seed, goals):
    # Imported here so worker processes do not pull the mission driver at import time
    from FleetCore.Mission.MissionSim import run_mission

    report, _ = run_mission(fleetspec, table, spec, seed=seed, context=context)
    return mission_loss(fleetspec, report, context, goals), goals.allMet(report)


class ShapingResult(object):
    def __init__(self, spec, bestLoss, goalsMet, history):
        self.spec = spec
        self.bestLoss = bestLoss
        self.goalsMet = goalsMet
        self.history = history

    def bestSoFar(self):
        return [entry["best"] for entry in self.history]

    def toJSONObject(self):
        obj = self.spec.toJSONObject()
        obj["best_loss"] = self.bestLoss
        obj["goals_met"] = self.goalsMet
        obj["history"] = [{"epoch": h["epoch"], "loss": h["loss"]} for h in self.history]
        return obj

    @staticmethod
    def fromJSONObject(obj):
        spec = RewardSpec.fromJSONObject(obj)
        history = JSONHelper.getArrayChecked(obj, "history") or []
        return ShapingResult(spec,
                             JSONHelper.getNumberChecked(obj, "best_loss", True),
                             JSONHelper.getBooleanChecked(obj, "goals_met", True),
                             [{"epoch": h["epoch"], "loss": h["loss"], "best": None} for h in history])


def write_result(result, path):
    with open(path, 'w') as f:
        json.dump(result.toJSONObject(), f, indent=2, sort_keys=True)


def write_loss_history(result, path):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(["epoch", "loss", "goals_met", "best_loss"])
        for h in result.history:
            writer.writerow([h["epoch"], repr(h["loss"]), int(h["met"]),
                             "" if h["best"] is None else repr(h["best"])])


def write_manifest(result, path, tablePath=None):
    '''
    Deployment manifest: the shaped gate hyperparameters plus a reference to
    the SA table that goes with them.
    '''
    manifest = {
        "reward": result.spec.toJSONObject(),
        "goals_met": result.goalsMet,
        "best_loss": result.bestLoss,
        "sa_table": tablePath,
    }
    with open(path, 'w') as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return manifest


def build_reward(contexts, fleetspec, epochs, goals, seed, nCandidates=DEFAULT_CANDIDATES, baseTable=None,
                 pool=None, threads=1):
    '''
    Search reward weights and gate thresholds by Bayesian optimization.

    @type contexts: list
    @param contexts: Training contexts, one mission each per epoch

    @type baseTable: QTable
    @param baseTable: SA policy flown during shaping, defaults to an empty table

    @type pool: list
    @param pool: Optional finite list of RewardSpec candidates

    @type threads: int
    @param threads: Worker processes for the per-context missions

    @rtype: ShapingResult
    '''
    if not contexts:
        raise ContractViolation("Reward shaping needs at least one training context")

    table = baseTable if baseTable is not None else QTable()
    space = RewardSpace(fleetspec.mapPlug.featureCount, fleetspec.tileWidth * fleetspec.tileHeight)

    def objective(spec):
        argsList = [(fleetspec, table, spec, ctx, derive_seed(seed, idx), goals) for idx, ctx in enumerate(contexts)]
        results = map_ordered(_shape_mission, argsList, threads)
        total = 0.0
        for lossValue, _ in results:
            total += lossValue
        return total, all(met for _, met in results)

    result = bayes_optimize(objective, space, epochs, seed, nCandidates, pool=pool, label="shaping")
    return ShapingResult(result.candidate, result.bestLoss, result.goalsMet, result.history)


def _evaluation_loss(table, contexts, spec, seed, fleetspec):
    total = 0.0
    for idx, ctx in enumerate(contexts):
        lossValue, _ = _shape_mission(fleetspec, table, spec, ctx, derive_seed(seed, idx), fleetspec.goals)
        total += lossValue
    return total


def retrain_sa(base, contexts, spec, episodes, seed, fleetspec):
    '''
    Retrain the SA table on the retrain split with epsilon-greedy walks of
    |S| steps from random starts, then keep whichever of the new and the
    old table flies the retrain contexts with the lower loss.

    @type base: QTable
    @param base: Table before retraining, not modified

    @rtype: QTable
    '''
    if episodes < 1:
        raise ContractViolation("Retraining needs at least one episode, got %d" % episodes)
    if not contexts:
        return base.copy()

    table = base.copy()
    params = fleetspec.learning
    rng = np.random.default_rng(seed)

    for episode in range(episodes):
        ctx = contexts[episode % len(contexts)]
        epsilon = params.epsilonFor(episode)
        states = ctx.states()
        state = states[int(rng.integers(len(states)))]
        for _ in range(ctx.stateCount):
            valid = valid_actions(state, ctx)
            action = select_action(table, state, valid, epsilon, rng)
            nextState = apply_action(state, action)
            ssv = StateSpaceVector(fleetspec.mapPlug.map(ctx.record(nextState)), nextState, 0)
            q_update(table, state, action, nextState, reward(ssv, spec), params, valid_actions(nextState, ctx))
            state = nextState

    newLoss = _evaluation_loss(table, contexts, spec, seed, fleetspec)
    baseLoss = _evaluation_loss(base, contexts, spec, seed, fleetspec)
    logger.info("Retrained SA over %d episodes: loss %.6f (was %.6f)", episodes, newLoss, baseLoss)
    if newLoss <= baseLoss:
        return table
    return base.copy()
