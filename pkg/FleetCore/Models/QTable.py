# encoding: utf-8
'''
QTable -- Tabular State-to-Action model

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

import json
import math

from FleetCore import JSONHelper
from FleetCore.FleetError import ContractViolation
from FleetCore.FleetSpec import ACTION, ACTION_CODE


class QTable(object):
    '''
    Sparse table of Q-values keyed by ((row, col), action). Unseen pairs are 0.
    '''
    def __init__(self, values=None):
        self.values = dict(values or {})

    def get(self, state, action):
        return self.values.get((tuple(state), action), 0.0)

    def set(self, state, action, value):
        if not math.isfinite(value):
            raise ContractViolation("Q-value for %s/%s must be finite" % (state, ACTION_CODE[action]))
        self.values[(tuple(state), action)] = value

    def copy(self):
        return QTable(self.values)

    def keys(self):
        return set(self.values)

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, QTable):
            return NotImplemented
        keys = set(self.values) | set(other.values)
        return all(self.get(*k) == other.get(*k) for k in keys)

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    def toJSONObject(self):
        entries = sorted(self.values.items(), key=lambda kv: (kv[0][0][0], kv[0][0][1], kv[0][1]))
        return [{"state": [s[0], s[1]], "action": ACTION_CODE[a], "q": q} for (s, a), q in entries]

    def toJSON(self):
        return json.dumps(self.toJSONObject(), indent=1)

    @staticmethod
    def fromJSONObject(obj):
        if not isinstance(obj, list):
            raise ContractViolation("Q-table must be a JSON array of entries")
        table = QTable()
        for entry in obj:
            state = JSONHelper.getArrayChecked(entry, "state", True)
            action = JSONHelper.getStringChecked(entry, "action", True)
            q = JSONHelper.getNumberChecked(entry, "q", True)
            if len(state) != 2 or action not in ACTION:
                raise ContractViolation("Invalid Q-table entry %s" % entry)
            table.set((int(state[0]), int(state[1])), ACTION[action], float(q))
        return table

    @staticmethod
    def fromJSON(data):
        return QTable.fromJSONObject(json.loads(data))


def q_update(table, s, a, sNext, r, params, validNext):
    '''
    Additive Bellman update, in place.

    @type table: QTable
    @param table: Table to update

    @type params: LearningParams
    @param params: Learning rate and discount

    @type validNext: set
    @param validNext: Actions available in sNext

    @rtype: float
    @return: The new Q(s,a)
    '''
    if not validNext:
        raise ContractViolation("Bellman update needs at least one action in the next state")
    if not math.isfinite(r):
        raise ContractViolation("Reward must be finite, got %r" % r)

    best = max(table.get(sNext, b) for b in validNext)
    value = (1.0 - params.alpha) * table.get(s, a) + params.alpha * (r + params.gamma * best)
    table.set(s, a, value)
    return value


def greedy_choice(score, valid):
    '''
    Argmax of score over valid actions, ties going to the smallest ordinal.
    '''
    best = None
    bestScore = None
    for action in sorted(valid):
        val = score(action)
        if bestScore is None or val > bestScore:
            best, bestScore = action, val
    return best


def epsilon_greedy(score, valid, epsilon, rng):
    if not valid:
        raise ContractViolation("Cannot select an action from an empty action set")
    if not 0.0 <= epsilon <= 1.0:
        raise ContractViolation("Exploration rate must be in [0,1], got %r" % epsilon)

    # Always consume one draw so the stream does not depend on epsilon
    if rng.random() < epsilon:
        ordered = sorted(valid)
        return ordered[int(rng.integers(len(ordered)))]
    return greedy_choice(score, valid)


def select_action(table, s, valid, epsilon, rng):
    '''
    Epsilon-greedy action selection on a single Q-table.

    @type rng: numpy.random.Generator
    @param rng: Seeded generator owned by the caller

    @rtype: int
    @return: Action ordinal
    '''
    return epsilon_greedy(lambda a: table.get(s, a), valid, epsilon, rng)
