# encoding: utf-8
'''
Ensemble -- Usefulness-weighted mixture of State-to-Action models

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

import numpy as np

from FleetCore.FleetError import ContractViolation
from FleetCore.Models.QTable import epsilon_greedy

SIMPLEX_TOLERANCE = 1e-9


def check_simplex(weights):
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 1 or not len(weights):
        raise ContractViolation("Weight vector must be nonempty")
    if weights.min() < 0.0 or abs(weights.sum() - 1.0) > SIMPLEX_TOLERANCE:
        raise ContractViolation("Weights %s are not on the simplex" % weights)
    return weights


class ModelEnsemble(object):
    '''
    Ordered list of Q-tables (index 0 is the base model) with one agent's
    weight vector over them. Immutable between missions.
    '''
    def __init__(self, models, weights=None):
        if not models:
            raise ContractViolation("An ensemble needs at least one model")
        if weights is None:
            weights = [1.0] + [0.0] * (len(models) - 1)
        weights = check_simplex(weights)
        if len(weights) != len(models):
            raise ContractViolation("Got %d weights for %d models" % (len(weights), len(models)))
        self.models = list(models)
        self.weights = weights

    def score(self, state, action):
        return sum(x * m.get(state, action) for x, m in zip(self.weights, self.models))

    @property
    def base(self):
        return self.models[0]


def ensemble_select(ens, s, valid, epsilon, rng):
    '''
    Epsilon-greedy selection on the weighted sum of Q-values.

    @type ens: ModelEnsemble
    @param ens: Models and simplex weights

    @rtype: int
    @return: Action ordinal
    '''
    if not ens.models:
        raise ContractViolation("An ensemble needs at least one model")
    return epsilon_greedy(lambda a: ens.score(s, a), valid, epsilon, rng)


def project_to_simplex(raw):
    '''
    Normalize a non-negative vector onto the probability simplex. The
    all-zero vector maps to uniform weights.

    @type raw: sequence of float
    @param raw: Non-negative candidate weights

    @rtype: numpy.ndarray
    @return: Weights summing to 1
    '''
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 1 or not len(raw):
        raise ContractViolation("Cannot project an empty vector onto the simplex")
    if not np.all(np.isfinite(raw)) or raw.min() < 0.0:
        raise ContractViolation("Simplex projection needs finite non-negative entries: %s" % raw)
    total = raw.sum()
    if total <= 0.0:
        return np.full(len(raw), 1.0 / len(raw))
    return raw / total
