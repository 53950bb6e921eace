# encoding: utf-8
'''
RewardSpec -- Parametric reward and the History-to-Action state group gate

The reward of a sensed state is the weighted sum of its normalized features.
The gate accumulates utility U (sum of rewards) and visit count V within a
state group and tells the agent to leave once either crosses its threshold.

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

import math

import numpy as np

from FleetCore import JSONHelper
from FleetCore.FleetError import ContractViolation

GATE_CODE = {
    0: "Stay",
    1: "Leave",
}
STAY, LEAVE = range(0, 2)


def _threshold(value):
    if isinstance(value, (str, bytes)):
        if value.lower() in ("inf", "infinity"):
            return float("inf")
        raise ContractViolation("Invalid threshold %r" % value)
    return value


def _jsonThreshold(value):
    return "inf" if math.isinf(value) else value


class RewardSpec(object):
    def __init__(self, weights, utilityThreshold, visitThreshold):
        '''
        @type weights: sequence of float
        @param weights: Feature weights, each in [0,1]

        @type utilityThreshold: float
        @param utilityThreshold: T_u in [0, m], or +inf for no utility gating

        @type visitThreshold: int
        @param visitThreshold: T_v, a non-negative integer or +inf
        '''
        weights = np.asarray(weights, dtype=float)
        if weights.ndim != 1 or not len(weights):
            raise ContractViolation("Reward weights must be a nonempty vector")
        if weights.min() < 0.0 or weights.max() > 1.0:
            raise ContractViolation("Reward weights must lie in [0,1]: %s" % weights)
        if math.isnan(utilityThreshold) or utilityThreshold < 0:
            raise ContractViolation("Utility threshold must be >= 0, got %r" % utilityThreshold)
        if not math.isinf(utilityThreshold) and utilityThreshold > len(weights):
            raise ContractViolation("Utility threshold %r exceeds feature count %d" % (utilityThreshold, len(weights)))
        if not math.isinf(visitThreshold):
            if visitThreshold < 0 or int(visitThreshold) != visitThreshold:
                raise ContractViolation("Visit threshold must be a non-negative integer, got %r" % visitThreshold)
            visitThreshold = int(visitThreshold)

        self.weights = weights
        self.utilityThreshold = float(utilityThreshold)
        self.visitThreshold = visitThreshold

    @property
    def featureCount(self):
        return len(self.weights)

    @staticmethod
    def fullExploration(featureCount):
        '''Uniform weights and no gating; groups are always fully explored.'''
        return RewardSpec([1.0 / featureCount] * featureCount, float("inf"), float("inf"))

    def toJSONObject(self):
        return {
            "weights": [float(w) for w in self.weights],
            "t_u": _jsonThreshold(self.utilityThreshold),
            "t_v": _jsonThreshold(self.visitThreshold),
        }

    @staticmethod
    def fromJSONObject(obj):
        weights = JSONHelper.getArrayChecked(obj, "weights", True)
        tu = _threshold(JSONHelper.getNumberOrStringChecked(obj, "t_u", True))
        tv = _threshold(JSONHelper.getNumberOrStringChecked(obj, "t_v", True))
        return RewardSpec(weights, tu, tv)


def reward(ssvNext, spec):
    '''
    Weighted feature sum of the state just sensed.

    @type ssvNext: StateSpaceVector or sequence
    @param ssvNext: Normalized features

    @rtype: float
    @return: Reward in [0, m]
    '''
    features = getattr(ssvNext, "features", ssvNext)
    features = np.asarray(features, dtype=float)
    if len(features) != spec.featureCount:
        raise ContractViolation("Feature vector has %d entries, reward expects %d" % (len(features), spec.featureCount))
    return float(np.dot(features, spec.weights))


def ha_gate(groupFs, groupRewards, spec):
    '''
    Decide whether to keep exploring a state group.

    @type groupFs: FeatureSpace or sequence
    @param groupFs: Vectors gathered in this group

    @type groupRewards: sequence of float
    @param groupRewards: Matching rewards

    @rtype: int
    @return: STAY or LEAVE
    '''
    if len(groupRewards) != len(groupFs):
        raise ContractViolation("Gate got %d rewards for %d vectors" % (len(groupRewards), len(groupFs)))
    utility = sum(groupRewards)
    visits = len(groupFs)
    if utility > spec.utilityThreshold or visits > spec.visitThreshold:
        return LEAVE
    return STAY
