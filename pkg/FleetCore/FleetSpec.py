# encoding: utf-8
'''
FleetSpec -- Domain types and the swarm application contract

A FleetSpec is the minimal description an application hands to the runtime:
how many agents fly, which contexts they train and run on, which actions each
agent may take, the Map plug turning raw sensor records into normalized state
space vectors, the Eval plug judging a mission, the state group tiling, the
learning parameters and the goals.

Grid orientation: row 0 is the north edge, column 0 the west edge.

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

from abc import ABCMeta, abstractmethod
import math

import numpy as np
import six

from FleetCore.FleetError import ContractViolation

# Ordinals double as the tie-break order for greedy selection
ACTION_CODE = {
    0: "North",
    1: "South",
    2: "East",
    3: "West",
    4: "SenseHold",
}
ACTION = dict((val, key) for key, val in ACTION_CODE.items())

NORTH, SOUTH, EAST, WEST, SENSE_HOLD = range(0, 5)
ALL_ACTIONS = frozenset(ACTION_CODE)

ACTION_DELTA = {
    NORTH: (-1, 0),
    SOUTH: (1, 0),
    EAST: (0, 1),
    WEST: (0, -1),
    SENSE_HOLD: (0, 0),
}

GOAL_COMPARATORS = (">=", "<=")


def apply_action(state, action):
    dr, dc = ACTION_DELTA[action]
    return (state[0] + dr, state[1] + dc)


def in_bounds(state, width, height):
    return 0 <= state[0] < height and 0 <= state[1] < width


def normalize_features(raw, norms):
    '''
    Min-max normalize a raw feature vector, clamping to [0,1]. Features whose
    min equals their max are constant and map to 0.

    @type raw: sequence of float
    @param raw: Raw extractor outputs

    @type norms: sequence of (float, float)
    @param norms: Per-feature (min, max) taken from the training contexts

    @rtype: numpy.ndarray
    @return: Normalized features
    '''
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 1 or len(raw) != len(norms):
        raise ContractViolation("Feature vector has %d entries but %d norms were given" % (raw.size, len(norms)))

    out = np.zeros(len(raw))
    for idx, (lo, hi) in enumerate(norms):
        if hi > lo:
            out[idx] = min(max((raw[idx] - lo) / (hi - lo), 0.0), 1.0)
    return out


class StateTiling(object):
    '''
    Row-major partition of a grid into rectangular state groups anchored at
    (0,0). Tiles on the south and east edges may be smaller than the nominal
    tile size.
    '''
    def __init__(self, width, height, tileWidth=3, tileHeight=3):
        if width < 1 or height < 1:
            raise ContractViolation("Grid must be at least 1x1, got %dx%d" % (width, height))
        if tileWidth < 1 or tileHeight < 1:
            raise ContractViolation("Tiles must be at least 1x1, got %dx%d" % (tileWidth, tileHeight))
        self.width = width
        self.height = height
        self.tileWidth = tileWidth
        self.tileHeight = tileHeight
        self.tileCols = int(math.ceil(width / float(tileWidth)))
        self.tileRows = int(math.ceil(height / float(tileHeight)))

    @property
    def groupCount(self):
        return self.tileRows * self.tileCols

    def tileOf(self, group):
        return divmod(group, self.tileCols)

    def statesOf(self, group):
        '''
        @rtype: list
        @return: States of the given group in row-major order
        '''
        if not 0 <= group < self.groupCount:
            raise ContractViolation("Unknown state group %d" % group)
        tileRow, tileCol = self.tileOf(group)
        rows = range(tileRow * self.tileHeight, min((tileRow + 1) * self.tileHeight, self.height))
        cols = range(tileCol * self.tileWidth, min((tileCol + 1) * self.tileWidth, self.width))
        return [(r, c) for r in rows for c in cols]


def group_of(state, tiling):
    '''
    Map a state to its state group index.

    @type state: tuple
    @param state: (row, col)

    @type tiling: StateTiling
    @param tiling: Group parameters

    @rtype: int
    @return: Row-major tile index
    '''
    if not in_bounds(state, tiling.width, tiling.height):
        raise ContractViolation("State %s is outside the %dx%d grid" % (state, tiling.width, tiling.height))
    return (state[0] // tiling.tileHeight) * tiling.tileCols + (state[1] // tiling.tileWidth)


def valid_actions(state, context):
    '''
    Actions that keep the agent on the grid. SenseHold is always valid.

    @rtype: frozenset
    @return: Action ordinals
    '''
    return frozenset(a for a in ALL_ACTIONS
                     if in_bounds(apply_action(state, a), context.width, context.height))


class StateSpaceVector(object):
    def __init__(self, features, originState, originAgent):
        features = np.asarray(features, dtype=float)
        if features.size and (features.min() < 0.0 or features.max() > 1.0):
            raise ContractViolation("State space vector entries must lie in [0,1]: %s" % features)
        self.features = features
        self.originState = tuple(originState)
        self.originAgent = originAgent

    def __len__(self):
        return len(self.features)


class FeatureSpace(object):
    '''
    Append-only collection of state space vectors, one per visited state.
    '''
    def __init__(self):
        self.vectors = []
        self.visitedStates = set()

    def append(self, ssv):
        if ssv.originState in self.visitedStates:
            raise ContractViolation("State %s already has a state space vector" % (ssv.originState,))
        self.vectors.append(ssv)
        self.visitedStates.add(ssv.originState)

    def __len__(self):
        return len(self.vectors)

    def __iter__(self):
        return iter(self.vectors)


class Goal(object):
    def __init__(self, metric, comparator, target):
        if comparator not in GOAL_COMPARATORS:
            raise ContractViolation("Goal comparator must be one of %s, got %r" % (GOAL_COMPARATORS, comparator))
        if not math.isfinite(target):
            raise ContractViolation("Goal target for %s must be finite" % metric)
        self.metric = metric
        self.comparator = comparator
        self.target = float(target)

    def isMet(self, value):
        if self.comparator == ">=":
            return value >= self.target
        return value <= self.target

    def toJSONObject(self):
        return {"metric": self.metric, "comparator": self.comparator, "target": self.target}

    def __repr__(self):
        return "Goal(%s %s %r)" % (self.metric, self.comparator, self.target)


class Goals(object):
    def __init__(self, goals=None):
        self.goals = list(goals or [])

    @staticmethod
    def fromJSONObject(obj):
        '''
        @type obj: list
        @param obj: List of {metric, comparator, target} objects
        '''
        from FleetCore import JSONHelper

        if not isinstance(obj, list):
            raise ContractViolation("Goals must be a list of objects")
        goals = []
        for entry in obj:
            metric = JSONHelper.getStringChecked(entry, "metric", True)
            comparator = JSONHelper.getStringChecked(entry, "comparator", True)
            target = JSONHelper.getNumberChecked(entry, "target", True)
            goals.append(Goal(metric, comparator, target))
        return Goals(goals)

    def toJSONObject(self):
        return [g.toJSONObject() for g in self.goals]

    def metrics(self):
        return [g.metric for g in self.goals]

    def validate(self, available):
        missing = [m for m in self.metrics() if m not in available]
        if missing:
            raise ContractViolation("Goals reference metrics not produced by Eval: %s" % ", ".join(missing))

    def allMet(self, report):
        self.validate(report.metrics)
        return all(g.isMet(report.metrics[g.metric]) for g in self.goals)

    def tightened(self, metric, margin, limit=None):
        '''
        Copy with every goal on metric moved margin further into its
        comparator's direction, but never past limit.

        @rtype: Goals
        '''
        if margin < 0:
            raise ContractViolation("Goal margin must be non-negative, got %r" % margin)
        goals = []
        for g in self.goals:
            if g.metric != metric:
                goals.append(g)
                continue
            if g.comparator == ">=":
                target = g.target + margin
                if limit is not None:
                    target = min(target, max(limit, g.target))
            else:
                target = g.target - margin
                if limit is not None:
                    target = max(target, min(limit, g.target))
            goals.append(Goal(g.metric, g.comparator, target))
        return Goals(goals)

    def __iter__(self):
        return iter(self.goals)

    def __len__(self):
        return len(self.goals)


class EvalReport(object):
    def __init__(self, finished, metrics, artifact=None):
        coverage = metrics.get("coverage")
        if coverage is not None and not 0.0 <= coverage <= 1.0:
            raise ContractViolation("Coverage fraction %r outside [0,1]" % coverage)
        self.finished = bool(finished)
        self.metrics = dict(metrics)
        self.artifact = artifact

    def toJSONObject(self, withArtifact=True):
        obj = {
            "finished": self.finished,
            "metrics": dict((k, float(v)) for k, v in sorted(self.metrics.items())),
        }
        if withArtifact and self.artifact is not None:
            obj["artifact"] = np.asarray(self.artifact).tolist()
        return obj


class LearningParams(object):
    '''
    Q-learning rate, discount and the epsilon-greedy exploration schedule.
    Epsilon decays multiplicatively once per mission.
    '''
    def __init__(self, alpha=0.5, gamma=0.9, epsilon=0.1, epsilonDecay=0.95):
        if not 0.0 < alpha <= 1.0:
            raise ContractViolation("Learning rate must be in (0,1], got %r" % alpha)
        if not 0.0 <= gamma < 1.0:
            raise ContractViolation("Discount must be in [0,1), got %r" % gamma)
        if not 0.0 <= epsilon <= 1.0:
            raise ContractViolation("Exploration rate must be in [0,1], got %r" % epsilon)
        if not 0.0 < epsilonDecay <= 1.0:
            raise ContractViolation("Exploration decay must be in (0,1], got %r" % epsilonDecay)
        self.alpha = alpha
        self.gamma = gamma
        self.epsilon = epsilon
        self.epsilonDecay = epsilonDecay

    def epsilonFor(self, mission):
        return self.epsilon * (self.epsilonDecay ** mission)

    def withEpsilon(self, epsilon):
        return LearningParams(self.alpha, self.gamma, epsilon, self.epsilonDecay)


class EnergyCosts(object):
    '''Per-action agent energy in joules.'''
    def __init__(self, move=55.0, sense=10.0, idle=5.0):
        for name, val in (("move", move), ("sense", sense), ("idle", idle)):
            if val < 0:
                raise ContractViolation("Energy cost %s must be non-negative" % name)
        self.move = move
        self.sense = sense
        self.idle = idle


@six.add_metaclass(ABCMeta)
class MapPlug():
    '''
    Application plug turning one raw sensor record into a normalized feature
    vector of fixed length featureCount.
    '''
    featureCount = None

    @abstractmethod
    def map(self, record):
        return


@six.add_metaclass(ABCMeta)
class EvalPlug():
    '''
    Application plug judging a mission from the gathered feature spaces.
    '''
    metricNames = ()

    @abstractmethod
    def evaluate(self, featureSpace, perf, context, finished):
        '''
        @type featureSpace: FeatureSpace
        @param featureSpace: All state space vectors gathered by the swarm

        @type perf: dict
        @param perf: Driver metrics (steps, agent_energy, edge_energy, ...)

        @type context: ExecutionContext
        @param context: The flown context (ground truth readable here only)

        @type finished: bool
        @param finished: Whether every assigned group was gated or exhausted

        @rtype: EvalReport
        '''
        return


class FleetSpec(object):
    def __init__(self, nAgents, mapPlug, evalPlug, goals, contexts=None, actionSets=None,
                 tileWidth=3, tileHeight=3, learning=None, energy=None,
                 costWeights=None, energyBudget=None):
        '''
        @type nAgents: int
        @param nAgents: Swarm size N

        @type contexts: dict
        @param contexts: Context lists under "training", "retrain" and "runtime"

        @type actionSets: list
        @param actionSets: Per-agent allowed actions, None allows all five

        @type costWeights: dict
        @param costWeights: Loss weights for the "steps" and "energy" cost terms
        '''
        if nAgents < 1:
            raise ContractViolation("A fleet needs at least one agent, got %d" % nAgents)
        if tileWidth < 1 or tileHeight < 1:
            raise ContractViolation("State groups must be nonempty")
        if actionSets is not None and len(actionSets) != nAgents:
            raise ContractViolation("Expected %d action sets, got %d" % (nAgents, len(actionSets)))

        self.nAgents = nAgents
        self.mapPlug = mapPlug
        self.evalPlug = evalPlug
        self.goals = goals
        self.contexts = {"training": [], "retrain": [], "runtime": []}
        self.contexts.update(contexts or {})
        self.actionSets = [frozenset(s) | {SENSE_HOLD} for s in actionSets] if actionSets else None
        self.tileWidth = tileWidth
        self.tileHeight = tileHeight
        self.learning = learning or LearningParams()
        self.energy = energy or EnergyCosts()
        self.costWeights = dict(costWeights or {})
        self.energyBudget = energyBudget

        goals.validate(evalPlug.metricNames)

    def tilingFor(self, context):
        return StateTiling(context.width, context.height, self.tileWidth, self.tileHeight)

    def agentActions(self, agent, state, context):
        valid = valid_actions(state, context)
        if self.actionSets is not None:
            valid = valid & self.actionSets[agent]
        return valid

    def withAgents(self, nAgents):
        return FleetSpec(nAgents, self.mapPlug, self.evalPlug, self.goals, self.contexts,
                         None, self.tileWidth, self.tileHeight, self.learning, self.energy,
                         self.costWeights, self.energyBudget)

    def withGoals(self, goals):
        return FleetSpec(self.nAgents, self.mapPlug, self.evalPlug, goals, self.contexts,
                         self.actionSets, self.tileWidth, self.tileHeight, self.learning, self.energy,
                         self.costWeights, self.energyBudget)
