# encoding: utf-8
'''
Baselines -- Reference missions without Fleet's gating and shaped rewards

The automated baseline sweeps each agent's band row by row until the swarm
reaches a coverage goal. The classic RL baseline flies the same Q-learning
driver with uniform reward weights and no gating, stopping as soon as the
coverage and accuracy goals are met.

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

import math

from FleetCore.FleetError import ContractViolation
from FleetCore.FleetSpec import FeatureSpace, StateSpaceVector
from FleetCore.Mission.MissionSim import manhattan, partition_states, run_mission
from FleetCore.Models.QTable import QTable
from FleetCore.Models.RewardSpec import RewardSpec


def serpentine(states):
    '''Boustrophedon order: even rows left to right, odd rows right to left.'''
    rows = {}
    for r, c in states:
        rows.setdefault(r, []).append(c)
    order = []
    for r in sorted(rows):
        cols = sorted(rows[r], reverse=(r % 2 == 1))
        order.extend((r, c) for c in cols)
    return order


def automated_sweep(context, coverageGoal, nAgents, tiling):
    '''
    Visit schedule of the automated sweep.

    @rtype: list
    @return: (tick, agent, state, distance moved) in visiting order
    '''
    if not 0.0 < coverageGoal <= 1.0:
        raise ContractViolation("Coverage goal must be in (0,1], got %r" % coverageGoal)

    bands = partition_states(context, nAgents, tiling)
    visits = []
    for agent, groups in enumerate(bands):
        states = []
        for g in groups:
            states.extend(tiling.statesOf(g))
        tick = 0
        previous = None
        for state in serpentine(states):
            distance = 0 if previous is None else manhattan(previous, state)
            tick += distance
            visits.append((tick, agent, state, distance))
            previous = state

    visits.sort(key=lambda v: (v[0], v[1]))
    needed = int(math.ceil(coverageGoal * context.stateCount - 1e-9))
    return visits[:needed]


def baseline_automated(context, coverageGoal, nAgents, fleetspec):
    '''
    Pre-programmed sweep to a coverage goal. No learning, no gating.

    @rtype: EvalReport
    '''
    tiling = fleetspec.tilingFor(context)
    visits = automated_sweep(context, coverageGoal, nAgents, tiling)

    costs = fleetspec.energy
    steps = visits[-1][0] + 1 if visits else 0
    energy = 0.0
    lastTick = [None] * nAgents
    featureSpace = FeatureSpace()
    for tick, agent, state, distance in visits:
        energy += distance * costs.move + costs.sense
        lastTick[agent] = tick
        features = fleetspec.mapPlug.map(context.record(state))
        featureSpace.append(StateSpaceVector(features, state, agent))
    for last in lastTick:
        # Agents done early idle until the sweep ends
        energy += (steps - 1 - (last if last is not None else -1)) * costs.idle

    perf = {"steps": float(steps), "agent_energy": energy, "edge_energy": 0.0,
            "moves": float(sum(v[3] for v in visits)), "extrapolated": 0.0}
    return fleetspec.evalPlug.evaluate(featureSpace, perf, context, True)


def classic_stop(fleetspec, context):
    '''
    Stop condition checking every ">=" goal (coverage, accuracy) against a
    fresh evaluation after each tick.
    '''
    goals = [g for g in fleetspec.goals if g.comparator == ">="]

    def stopWhen(featureSpace, perf):
        if not goals or not len(featureSpace):
            return False
        report = fleetspec.evalPlug.evaluate(featureSpace, perf, context, False)
        for g in goals:
            if g.metric not in report.metrics or not g.isMet(report.metrics[g.metric]):
                return False
        return True
    return stopWhen


def baseline_classic_rl(fleetspec, seed, models=None, context=None, missionIndex=0):
    '''
    Q-learning SA only: uniform reward weights, groups always fully
    explored, Eval checked every tick for goal termination.

    @rtype: tuple
    @return: (EvalReport, MissionTrace)
    '''
    if context is None:
        runtime = fleetspec.contexts.get("runtime") or []
        if not runtime:
            raise ContractViolation("No context given and the FleetSpec has no runtime contexts")
        context = runtime[0]
    spec = RewardSpec.fullExploration(fleetspec.mapPlug.featureCount)
    return run_mission(fleetspec, models if models is not None else QTable(), spec, seed=seed, context=context,
                       missionIndex=missionIndex, stopWhen=classic_stop(fleetspec, context))
