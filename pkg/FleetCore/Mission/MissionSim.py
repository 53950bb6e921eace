# encoding: utf-8
'''
MissionSim -- Discrete-time driver for swarm missions over an execution context

Agents step round-robin in a global tick loop. On each arrival an agent
senses the cell, maps the record to a state space vector, computes the
reward, applies the Bellman update to its learning copy of the Q-table and
asks the state group gate whether to keep exploring. Policies are frozen for
the whole mission; learning happens on copies and is carried into the next
mission by the campaign driver.

Travel between cells that are not adjacent (switching groups, or reaching an
unvisited in-group cell with no unvisited neighbour) walks a Manhattan path,
rows first, one cell per tick at move cost. Such a walk is recorded as a
single transition from the penultimate cell.

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

import csv
import logging

import numpy as np

from FleetCore.FleetError import ContractViolation, InvariantViolation
from FleetCore.FleetSpec import (ACTION_CODE, EAST, NORTH, SENSE_HOLD, SOUTH, WEST, FeatureSpace, StateSpaceVector,
                                 apply_action, group_of)
from FleetCore.Models.Ensemble import ModelEnsemble, ensemble_select
from FleetCore.Models.QTable import QTable, q_update, select_action
from FleetCore.Models.RewardSpec import GATE_CODE, LEAVE, ha_gate, reward
from FleetCore.Parallel import derive_seed

logger = logging.getLogger("fleetsim.mission")


def manhattan(a, b):
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def manhattan_path(start, target):
    '''
    @rtype: list
    @return: (action, cell) steps from start to target, rows first
    '''
    path = []
    cur = start
    while cur[0] != target[0]:
        action = SOUTH if target[0] > cur[0] else NORTH
        cur = apply_action(cur, action)
        path.append((action, cur))
    while cur[1] != target[1]:
        action = EAST if target[1] > cur[1] else WEST
        cur = apply_action(cur, action)
        path.append((action, cur))
    return path


def nearest(position, states):
    return min(states, key=lambda s: (manhattan(position, s), s[0], s[1]))


def partition_states(context, nAgents, tiling):
    '''
    Split the state groups into contiguous row-major bands, one per agent.
    Band sizes differ by at most one group, larger bands first. Within a band
    groups are ordered serpentine by tile row.

    @type tiling: StateTiling
    @param tiling: Group parameters for this context

    @rtype: list
    @return: One list of group ids per agent
    '''
    groupCount = tiling.groupCount
    if nAgents < 1:
        raise ContractViolation("Need at least one agent, got %d" % nAgents)
    if nAgents > groupCount:
        raise ContractViolation("%d agents cannot share %d state groups" % (nAgents, groupCount))

    bands = []
    for band in np.array_split(np.arange(groupCount), nAgents):
        groups = [int(g) for g in band]

        def order(g):
            tileRow, tileCol = tiling.tileOf(g)
            return (tileRow, tileCol if tileRow % 2 == 0 else -tileCol)
        bands.append(sorted(groups, key=order))
    return bands


class Transition(object):
    __slots__ = ("agent", "tick", "state", "action", "nextState", "features", "reward", "group", "gate",
                 "validNext")

    def __init__(self, agent, tick, state, action, nextState, features, reward, group, gate, validNext):
        self.agent = agent
        self.tick = tick
        self.state = state
        self.action = action
        self.nextState = nextState
        self.features = features
        self.reward = reward
        self.group = group
        self.gate = gate
        self.validNext = validNext


class MissionTrace(object):
    def __init__(self, transitions, report, initialTables, finalTables):
        self.transitions = transitions
        self.report = report
        self.initialTables = initialTables
        self.finalTables = finalTables

    def forAgent(self, agent):
        return [t for t in self.transitions if t.agent == agent]

    def visited(self, agent=None):
        return set(t.nextState for t in self.transitions if agent is None or t.agent == agent)

    def replay(self, params):
        '''
        Reapply every recorded Bellman update to copies of the initial tables.

        @rtype: list
        @return: One QTable per agent
        '''
        tables = [t.copy() for t in self.initialTables]
        for t in self.transitions:
            q_update(tables[t.agent], t.state, t.action, t.nextState, t.reward, params, t.validNext)
        return tables


class AgentRuntime(object):
    def __init__(self, index, groups, policy, epsilon, context, tiling, fleetspec):
        if not groups:
            raise ContractViolation("Agent %d has no assigned state groups" % index)
        self.index = index
        self.groups = list(groups)
        self.policy = policy
        if isinstance(policy, ModelEnsemble):
            self.learnTable = policy.base.copy()
        else:
            self.learnTable = policy.copy()
        self.initialTable = self.learnTable.copy()
        self.epsilon = epsilon
        self.context = context
        self.tiling = tiling
        self.fleetspec = fleetspec

        self.visited = set()
        self.groupFs = dict((g, FeatureSpace()) for g in self.groups)
        self.groupRewards = dict((g, []) for g in self.groups)
        self.closed = set()
        self.gated = set()
        self.skipped = set()
        self.path = []
        self.energy = 0.0
        self.steps = 0
        self.idleTicks = 0
        self.finished = False

        start = self.tiling.statesOf(self.groups[0])[0]
        self.position = start
        self.arrival = (start, SENSE_HOLD)

    @property
    def allowedStates(self):
        states = set()
        for g in self.groups:
            states.update(self.tiling.statesOf(g))
        return states

    def unvisitedIn(self, group):
        return [s for s in self.tiling.statesOf(group) if s not in self.visited]

    def choose(self, valid, rng):
        if isinstance(self.policy, ModelEnsemble):
            return ensemble_select(self.policy, self.position, valid, self.epsilon, rng)
        return select_action(self.policy, self.position, valid, self.epsilon, rng)

    def closeGroup(self, group, gated):
        self.closed.add(group)
        if gated:
            self.gated.add(group)
            self.skipped.update(self.unvisitedIn(group))

    def planNext(self, rng):
        current = group_of(self.position, self.tiling)
        if current in self.groupFs and current not in self.closed:
            unvisited = self.unvisitedIn(current)
            if not unvisited:
                self.closeGroup(current, False)
            else:
                targets = set(unvisited)
                valid = self.fleetspec.agentActions(self.index, self.position, self.context)
                moves = frozenset(a for a in valid if a != SENSE_HOLD and apply_action(self.position, a) in targets)
                if moves:
                    action = self.choose(moves, rng)
                    self.path = [(action, apply_action(self.position, action))]
                else:
                    self.path = manhattan_path(self.position, nearest(self.position, unvisited))
                return

        for group in self.groups:
            if group in self.closed:
                continue
            unvisited = self.unvisitedIn(group)
            if not unvisited:
                self.closeGroup(group, False)
                continue
            self.path = manhattan_path(self.position, nearest(self.position, unvisited))
            return

        self.finished = True


def step_agent(agent, context, spec, params, rng, tick=0):
    '''
    Advance one agent by one tick.

    @type agent: AgentRuntime
    @param agent: Agent state, updated in place

    @type spec: RewardSpec
    @param spec: Reward weights and gate thresholds

    @type params: LearningParams
    @param params: Bellman update parameters

    @rtype: Transition
    @return: The transition produced by sensing a new state, or None while
             travelling or once finished
    '''
    costs = agent.fleetspec.energy

    if agent.finished:
        agent.energy += costs.idle
        agent.idleTicks += 1
        return None

    if agent.path:
        action, cell = agent.path.pop(0)
        previous = agent.position
        agent.position = cell
        agent.energy += costs.move
        agent.steps += 1
        if agent.path:
            return None
        agent.arrival = (previous, action)

    state = agent.position
    group = group_of(state, agent.tiling)
    if group not in agent.groupFs or state in agent.visited:
        raise InvariantViolation("Agent %d sensed %s outside its unvisited partition" % (agent.index, state))

    ssv = StateSpaceVector(agent.fleetspec.mapPlug.map(context.record(state)), state, agent.index)
    agent.groupFs[group].append(ssv)
    agent.visited.add(state)
    agent.energy += costs.sense

    r = reward(ssv, spec)
    validNext = agent.fleetspec.agentActions(agent.index, state, context)
    prevState, prevAction = agent.arrival
    q_update(agent.learnTable, prevState, prevAction, state, r, params, validNext)
    agent.groupRewards[group].append(r)

    gate = ha_gate(agent.groupFs[group], agent.groupRewards[group], spec)
    if gate == LEAVE:
        agent.closeGroup(group, True)

    agent.planNext(rng)

    return Transition(agent.index, tick, prevState, prevAction, state, ssv.features, r, group, gate, validNext)


def policies_for(models, nAgents):
    if isinstance(models, (QTable, ModelEnsemble)):
        return [models] * nAgents
    models = list(models)
    if len(models) != nAgents:
        raise ContractViolation("Got %d models for %d agents" % (len(models), nAgents))
    return models


def run_mission(fleetspec, models, spec, cluster=None, seed=0, context=None, missionIndex=0, stopWhen=None):
    '''
    Fly one mission.

    @type fleetspec: FleetSpec
    @param fleetspec: Application description

    @type models: QTable, ModelEnsemble or list
    @param models: One policy shared by all agents, or one per agent

    @type spec: RewardSpec
    @param spec: Reward weights and gate thresholds

    @type cluster: EdgeRuntime
    @param cluster: Optional edge cluster ticking alongside the agents

    @type context: ExecutionContext
    @param context: Context to fly, defaults to the first runtime context

    @type missionIndex: int
    @param missionIndex: Position in a campaign, drives the exploration decay

    @type stopWhen: callable
    @param stopWhen: Optional (featureSpace, perf) -> bool checked after every tick

    @rtype: tuple
    @return: (EvalReport, MissionTrace)
    '''
    if context is None:
        runtime = fleetspec.contexts.get("runtime") or []
        if not runtime:
            raise ContractViolation("No context given and the FleetSpec has no runtime contexts")
        context = runtime[0]

    if spec.featureCount != fleetspec.mapPlug.featureCount:
        raise ContractViolation("Reward spec has %d weights but Map produces %d features" %
                                (spec.featureCount, fleetspec.mapPlug.featureCount))

    tiling = fleetspec.tilingFor(context)
    policies = policies_for(models, fleetspec.nAgents)
    bands = partition_states(context, fleetspec.nAgents, tiling)
    params = fleetspec.learning
    epsilon = params.epsilonFor(missionIndex)

    agents = [AgentRuntime(i, bands[i], policies[i], epsilon, context, tiling, fleetspec)
              for i in range(fleetspec.nAgents)]
    rngs = [np.random.default_rng(derive_seed(seed, i)) for i in range(fleetspec.nAgents)]

    swarmFs = FeatureSpace()
    transitions = []
    maxTicks = 4 * context.stateCount * (context.width + context.height) + 16

    if cluster is not None:
        cluster.beginMission(fleetspec.nAgents)
        energyBefore = cluster.edgeEnergy()

    tick = 0
    stopped = False
    while not all(a.finished for a in agents):
        for agent, rng in zip(agents, rngs):
            t = step_agent(agent, context, spec, params, rng, tick)
            if t is not None:
                transitions.append(t)
                swarmFs.append(StateSpaceVector(t.features, t.nextState, t.agent))
        if cluster is not None:
            cluster.tick()
        tick += 1

        if stopWhen is not None and stopWhen(swarmFs, _perf(agents, tick, 0.0)):
            stopped = True
            break
        if tick > maxTicks:
            raise InvariantViolation("Mission on %s did not terminate within %d ticks" % (context.contextId, maxTicks))

    edgeEnergy = 0.0
    if cluster is not None:
        cluster.endMission()
        edgeEnergy = cluster.edgeEnergy() - energyBefore

    perf = _perf(agents, tick, edgeEnergy)
    finished = stopped or all(a.finished for a in agents)
    report = fleetspec.evalPlug.evaluate(swarmFs, perf, context, finished)
    missing = [m for m in fleetspec.goals.metrics() if m not in report.metrics]
    if missing:
        raise ContractViolation("Eval did not produce goal metrics: %s" % ", ".join(missing))

    logger.debug("Mission on %s: %d ticks, %d transitions, coverage %.3f", context.contextId, tick,
                 len(transitions), report.metrics.get("coverage", float("nan")))

    trace = MissionTrace(transitions, report, [a.initialTable for a in agents], [a.learnTable for a in agents])
    return report, trace


def _perf(agents, ticks, edgeEnergy):
    return {
        "steps": float(ticks),
        "agent_energy": float(sum(a.energy for a in agents)),
        "edge_energy": float(edgeEnergy),
        "moves": float(sum(a.steps for a in agents)),
        "extrapolated": float(sum(len(a.skipped) for a in agents)),
    }


def write_trace_csv(trace, path, featureCount):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(["agent", "tick", "s_r", "s_c", "action"] +  # noqa: W504
                        ["ssv_%d" % i for i in range(featureCount)] + ["reward", "group", "gate"])
        for t in sorted(trace.transitions, key=lambda t: (t.agent, t.tick)):
            writer.writerow([t.agent, t.tick, t.nextState[0], t.nextState[1], ACTION_CODE[t.action]] +  # noqa: W504
                            [repr(float(v)) for v in t.features] +  # noqa: W504
                            [repr(float(t.reward)), t.group, GATE_CODE[t.gate]])
