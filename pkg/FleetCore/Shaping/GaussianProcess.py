# encoding: utf-8
'''
GaussianProcess -- Squared-exponential GP surrogate for loss landscapes

Inputs are expected to be pre-scaled to [0,1] per dimension. The prior mean
is the mean of the observed losses, so a single observation is reproduced
exactly at its input.

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.spatial.distance import cdist

from FleetCore.FleetError import ContractViolation

DEFAULT_LENGTH_SCALE = 0.2
DEFAULT_SIGNAL_VARIANCE = 1.0
DEFAULT_JITTER = 1e-6


class Surrogate(object):
    def __init__(self, inputs, losses, lengthScale=DEFAULT_LENGTH_SCALE,
                 signalVariance=DEFAULT_SIGNAL_VARIANCE, jitter=DEFAULT_JITTER):
        inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
        losses = np.asarray(losses, dtype=float).ravel()

        if not len(losses):
            raise ContractViolation("A surrogate needs at least one observation")
        if inputs.shape[0] != len(losses):
            raise ContractViolation("Got %d inputs for %d losses" % (inputs.shape[0], len(losses)))
        if not np.all(np.isfinite(losses)):
            raise ContractViolation("Surrogate observations must have finite losses")
        if jitter <= 0:
            raise ContractViolation("Jitter must be positive")

        self.inputs = inputs
        self.losses = losses
        self.lengthScale = np.broadcast_to(np.asarray(lengthScale, dtype=float), (inputs.shape[1],))
        self.signalVariance = float(signalVariance)
        self.jitter = float(jitter)
        self.priorMean = float(losses.mean())

        gram = self.kernel(inputs, inputs) + self.jitter * np.eye(len(losses))
        self._factor = cho_factor(gram, lower=True)
        self._alpha = cho_solve(self._factor, losses - self.priorMean)

    @property
    def dimension(self):
        return self.inputs.shape[1]

    @property
    def bestLoss(self):
        return float(self.losses.min())

    def kernel(self, a, b):
        dist = cdist(a / self.lengthScale, b / self.lengthScale, 'sqeuclidean')
        return self.signalVariance * np.exp(-0.5 * dist)

    def posterior_mean_var(self, x):
        '''
        Posterior mean and variance of the latent loss.

        @type x: numpy.ndarray
        @param x: One input vector or a (q, d) batch

        @rtype: tuple
        @return: (mean, variance), scalars for a single input, arrays otherwise
        '''
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.dimension:
            raise ContractViolation("Query has dimension %d, surrogate expects %d" % (x.shape[1], self.dimension))

        cross = self.kernel(x, self.inputs)
        mean = self.priorMean + cross.dot(self._alpha)
        solved = cho_solve(self._factor, cross.T)
        var = np.clip(self.signalVariance - np.sum(cross * solved.T, axis=1), 0.0, None)

        if single:
            return float(mean[0]), float(var[0])
        return mean, var


def gp_fit(observations, lengthScale=DEFAULT_LENGTH_SCALE, signalVariance=DEFAULT_SIGNAL_VARIANCE,
           jitter=DEFAULT_JITTER):
    '''
    Fit a surrogate to (input vector, loss) pairs.

    @type observations: list
    @param observations: Sequence of (vector, loss)

    @rtype: Surrogate
    '''
    if not observations:
        raise ContractViolation("A surrogate needs at least one observation")
    dims = set(len(vec) for vec, _ in observations)
    if len(dims) != 1:
        raise ContractViolation("Observation vectors differ in dimension: %s" % sorted(dims))
    inputs = np.array([vec for vec, _ in observations], dtype=float)
    losses = np.array([val for _, val in observations], dtype=float)
    return Surrogate(inputs, losses, lengthScale, signalVariance, jitter)
