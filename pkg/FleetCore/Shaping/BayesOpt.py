# encoding: utf-8
'''
BayesOpt -- Expected-improvement Bayesian optimization over bounded spaces

One loop serves every tuning problem in FleetSim: reward weights and gate
thresholds, ensemble weights on the simplex, and camera pruning thresholds.
Each problem supplies a search space that maps unit-cube vectors to
candidates, and an objective returning (loss, goalsMet).

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

import logging
import math

import numpy as np
from scipy.stats import norm

from FleetCore.FleetError import ContractViolation
from FleetCore.Models.Ensemble import project_to_simplex
from FleetCore.Models.RewardSpec import RewardSpec
from FleetCore.Shaping.GaussianProcess import gp_fit

logger = logging.getLogger("fleetsim.shaping")

DEFAULT_CANDIDATES = 256


def round_half_up(x):
    return int(math.floor(x + 0.5))


def expected_improvement_moments(mean, sigma, best, margin=0.0):
    '''
    Expected improvement of a Gaussian belief over the incumbent loss for a
    minimization problem. Zero wherever sigma is zero.
    '''
    scalar = np.ndim(mean) == 0 and np.ndim(sigma) == 0
    mean, sigma = np.broadcast_arrays(np.atleast_1d(np.asarray(mean, dtype=float)),
                                      np.atleast_1d(np.asarray(sigma, dtype=float)))
    improvement = best - mean - margin
    ei = np.zeros(mean.shape)
    positive = sigma > 0.0
    z = improvement[positive] / sigma[positive]
    ei[positive] = improvement[positive] * norm.cdf(z) + sigma[positive] * norm.pdf(z)
    ei = np.clip(ei, 0.0, None)
    if scalar:
        return float(ei[0])
    return ei


def expected_improvement(surrogate, x, bestLoss, margin=0.0):
    '''
    @type surrogate: Surrogate
    @param surrogate: Fitted loss model

    @type x: numpy.ndarray
    @param x: Candidate vector or (q, d) batch in the unit cube

    @type bestLoss: float
    @param bestLoss: Incumbent loss

    @type margin: float
    @param margin: Exploration margin subtracted from the improvement

    @rtype: float or numpy.ndarray
    '''
    mean, var = surrogate.posterior_mean_var(x)
    return expected_improvement_moments(mean, np.sqrt(var), bestLoss, margin)


class SearchSpace(object):
    '''Maps points of [0,1]^dimension onto candidates and back.'''
    dimension = 0

    def sample(self, rng):
        return rng.random(self.dimension)

    def decode(self, vector):
        return vector

    def encode(self, candidate):
        return np.asarray(candidate, dtype=float)

    def initial(self):
        return self.decode(np.full(self.dimension, 0.5))

    def canonical(self, vector):
        '''Vector of the candidate actually evaluated (after rounding/projection).'''
        return self.encode(self.decode(vector))


class RewardSpace(SearchSpace):
    '''
    Reward weights in [0,1]^m, utility threshold in [0,m] and an integer
    visit threshold in {1..groupSize}.
    '''
    def __init__(self, featureCount, groupSize):
        if featureCount < 1 or groupSize < 1:
            raise ContractViolation("Reward space needs at least one feature and a nonempty group")
        self.featureCount = featureCount
        self.groupSize = groupSize
        self.dimension = featureCount + 2

    def decode(self, vector):
        m = self.featureCount
        vector = np.clip(np.asarray(vector, dtype=float), 0.0, 1.0)
        visits = 1 + round_half_up(vector[m + 1] * (self.groupSize - 1))
        return RewardSpec(vector[:m], float(vector[m] * m), visits)

    def encode(self, spec):
        m = self.featureCount
        span = float(self.groupSize - 1) if self.groupSize > 1 else 1.0
        visits = min(max(spec.visitThreshold, 1), self.groupSize)
        utility = min(spec.utilityThreshold, m)
        return np.concatenate([spec.weights, [utility / m, (visits - 1) / span]])

    def initial(self):
        # All features count, utility gate wide open, visit gate at group size
        m = self.featureCount
        return RewardSpec([1.0] * m, float(m), self.groupSize)


class SimplexSpace(SearchSpace):
    '''Raw vectors in [0,1]^k projected onto the simplex.'''
    def __init__(self, k):
        if k < 1:
            raise ContractViolation("Simplex space needs at least one model")
        self.dimension = k

    def decode(self, vector):
        return project_to_simplex(np.clip(np.asarray(vector, dtype=float), 0.0, 1.0))

    def encode(self, weights):
        return np.asarray(weights, dtype=float)

    def initial(self):
        weights = np.zeros(self.dimension)
        weights[0] = 1.0
        return weights


class BoxSpace(SearchSpace):
    '''Independent real parameters, each within its own [low, high].'''
    def __init__(self, bounds, start=None):
        self.bounds = np.asarray(bounds, dtype=float)
        if self.bounds.ndim != 2 or self.bounds.shape[1] != 2 or np.any(self.bounds[:, 1] <= self.bounds[:, 0]):
            raise ContractViolation("Box bounds must be (low, high) pairs with low < high")
        self.dimension = len(self.bounds)
        self.start = start

    def decode(self, vector):
        vector = np.clip(np.asarray(vector, dtype=float), 0.0, 1.0)
        return self.bounds[:, 0] + vector * (self.bounds[:, 1] - self.bounds[:, 0])

    def encode(self, candidate):
        candidate = np.asarray(candidate, dtype=float)
        return (candidate - self.bounds[:, 0]) / (self.bounds[:, 1] - self.bounds[:, 0])

    def initial(self):
        if self.start is not None:
            return np.asarray(self.start, dtype=float)
        return self.bounds[:, 0].copy()


def propose_next(surrogate, rng, nCandidates, space, bestLoss=None, margin=0.0, pool=None):
    '''
    Pick the next candidate by maximizing expected improvement over random
    draws from the space, or over an explicit finite pool.

    @type nCandidates: int
    @param nCandidates: Number of uniform random draws

    @type pool: list
    @param pool: Optional finite candidate list replacing the random draws

    @rtype: tuple
    @return: (candidate, index into the pool or None)
    '''
    if bestLoss is None:
        bestLoss = surrogate.bestLoss

    if pool is not None:
        if not pool:
            raise ContractViolation("Cannot propose from an empty candidate pool")
        vectors = np.array([space.encode(c) for c in pool])
        scores = expected_improvement(surrogate, vectors, bestLoss, margin)
        idx = int(np.argmax(np.atleast_1d(scores)))
        return pool[idx], idx

    if nCandidates < 1:
        raise ContractViolation("Need at least one candidate draw, got %d" % nCandidates)
    draws = np.array([space.canonical(space.sample(rng)) for _ in range(nCandidates)])
    scores = expected_improvement(surrogate, draws, bestLoss, margin)
    idx = int(np.argmax(np.atleast_1d(scores)))
    return space.decode(draws[idx]), None


class OptimizationResult(object):
    def __init__(self, candidate, bestLoss, goalsMet, history):
        self.candidate = candidate
        self.bestLoss = bestLoss
        self.goalsMet = goalsMet
        self.history = history

    def bestSoFar(self):
        '''Best goal-meeting loss after each epoch, None before the first one.'''
        return [entry["best"] for entry in self.history]


def bayes_optimize(objective, space, epochs, seed, nCandidates=DEFAULT_CANDIDATES, pool=None, margin=0.0,
                   label="bo"):
    '''
    Minimize objective over space. The first epoch evaluates the space's
    initial candidate (or the first pool entry). The result is the lowest
    loss candidate that met every goal; if none did, the lowest loss
    candidate overall, flagged as not meeting the goals.

    @type objective: callable
    @param objective: candidate -> (loss, goalsMet)

    @type epochs: int
    @param epochs: Number of objective evaluations

    @type pool: list
    @param pool: Optional finite candidate list; entries are evaluated at most once

    @rtype: OptimizationResult
    '''
    if epochs < 1:
        raise ContractViolation("Optimization needs at least one epoch, got %d" % epochs)

    rng = np.random.default_rng(seed)
    remaining = list(pool) if pool is not None else None
    if remaining is not None:
        candidate = remaining.pop(0)
    else:
        candidate = space.initial()

    observations = []
    history = []
    best = None
    fallback = None

    for epoch in range(epochs):
        lossValue, met = objective(candidate)
        lossValue = float(lossValue)
        observations.append((space.encode(candidate), lossValue))

        if met and (best is None or lossValue < best[1]):
            best = (candidate, lossValue)
        if fallback is None or lossValue < fallback[1]:
            fallback = (candidate, lossValue)

        history.append({"epoch": epoch, "loss": lossValue, "met": bool(met),
                        "best": best[1] if best is not None else None})
        logger.debug("[%s] [Epoch %d] loss %.6f goals %s", label, epoch, lossValue, "met" if met else "unmet")

        if epoch == epochs - 1:
            break
        if remaining is not None and not remaining:
            break

        surrogate = gp_fit(observations)
        if remaining is not None:
            candidate, idx = propose_next(surrogate, rng, nCandidates, space, margin=margin, pool=remaining)
            remaining.pop(idx)
        else:
            candidate, _ = propose_next(surrogate, rng, nCandidates, space, margin=margin)

    if best is not None:
        logger.info("[%s] best loss %.6f after %d epochs", label, best[1], len(history))
        return OptimizationResult(best[0], best[1], True, history)

    logger.warning("[%s] no candidate met all goals, returning min-loss candidate (loss %.6f)", label, fallback[1])
    return OptimizationResult(fallback[0], fallback[1], False, history)
