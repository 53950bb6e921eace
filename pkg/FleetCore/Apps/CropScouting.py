# encoding: utf-8
'''
CropScouting -- Synthetic crop-yield scouting application

Fields carry three raw channels per cell: an excess-green analog tracking
the latent yield, a leaf-area analog correlated with it, and an
uncorrelated noise channel. Agents scout a subset of the cells; Eval
extrapolates a full yield map by inverse-distance weighting and scores it
against the hidden ground truth.

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

import numpy as np
from scipy.ndimage import map_coordinates, uniform_filter
from scipy.spatial import cKDTree

from FleetCore.ExecutionContext import ExecutionContext
from FleetCore.FleetError import ContractViolation
from FleetCore.FleetSpec import EvalPlug, EvalReport, FleetSpec, MapPlug, normalize_features

CROP_CHANNELS = 3
CROP_METRICS = ("accuracy", "coverage", "steps", "agent_energy", "edge_energy")
IDW_POWER = 2
IDW_NEIGHBOURS = 8

# Management zones: lattice spacings (in rows) of the value noise octaves,
# how much longer zones run along a row than across it, and the steepness
# of the logistic pulling the yield towards two levels.
ZONE_SPACINGS = (2.0, 4.0)
ZONE_STRETCH = 3.0
ZONE_CONTRAST = 20.0


def _minmax(values):
    lo, hi = values.min(), values.max()
    if hi <= lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def _smooth(values, passes):
    for _ in range(passes):
        values = uniform_filter(values, size=3, mode='nearest')
    return values


def _value_noise(rng, height, width, spacing, stretch):
    rowStep, colStep = spacing, spacing * stretch
    lattice = rng.random((int((height - 1) / rowStep) + 2, int((width - 1) / colStep) + 2))
    rows, cols = np.meshgrid(np.arange(height) / rowStep, np.arange(width) / colStep, indexing='ij')
    return map_coordinates(lattice, [rows, cols], order=1)


def zone_truth(rng, height, width, smoothness, spacings=ZONE_SPACINGS, stretch=ZONE_STRETCH,
               contrast=ZONE_CONTRAST):
    '''
    Latent yield in [0,1]: bilinear value noise summed over octaves of
    halving amplitude, blurred, then sharpened around its median into
    high and low yield zones.

    @type contrast: float
    @param contrast: Logistic slope in standard deviations, 0 keeps the blurred noise
    '''
    values = np.zeros((height, width))
    amplitude = 1.0
    for spacing in spacings:
        values += amplitude * _value_noise(rng, height, width, spacing, stretch)
        amplitude *= 0.5
    values = _smooth(values, smoothness)

    spread = values.std()
    if contrast > 0 and spread > 0:
        values = 1.0 / (1.0 + np.exp(-contrast * (values - np.median(values)) / spread))
    return _minmax(values)


def gen_field(width, height, smoothness, seed, noise=0.02):
    '''
    Generate a yield field.

    @type smoothness: int
    @param smoothness: Number of 3x3 box blur passes applied to the zone noise

    @type noise: float
    @param noise: Standard deviation of the sensor noise added to channel 0

    @rtype: ExecutionContext
    '''
    if width < 1 or height < 1:
        raise ContractViolation("Field must be at least 1x1, got %dx%d" % (width, height))
    if smoothness < 0:
        raise ContractViolation("Smoothness must be >= 0, got %d" % smoothness)

    rng = np.random.default_rng(seed)
    truth = zone_truth(rng, height, width, smoothness)
    return _field_from_truth(truth, smoothness, rng, noise, "field-%d" % seed)


def _field_from_truth(truth, smoothness, rng, noise, contextId):
    height, width = truth.shape
    exg = np.clip(truth + noise * rng.standard_normal((height, width)), 0.0, 1.0)
    leaf = _minmax(_smooth(rng.random((height, width)), smoothness))
    lai = np.clip(0.7 * truth + 0.3 * leaf + noise * rng.standard_normal((height, width)), 0.0, 1.0)
    clutter = rng.random((height, width))
    cells = np.stack([exg, lai, clutter], axis=-1)
    return ExecutionContext(contextId, cells, truth)


def field_family(width, height, smoothness, seed, count, drift=0.1, noise=0.02):
    '''
    Successive fields of a slowly changing crop: each field blends the
    previous latent yield with a fresh zone pattern by the drift fraction.

    @rtype: list
    @return: count contexts
    '''
    rng = np.random.default_rng(seed)
    truth = zone_truth(rng, height, width, smoothness)
    fields = []
    for idx in range(count):
        if idx:
            fresh = zone_truth(rng, height, width, smoothness)
            truth = _minmax((1.0 - drift) * truth + drift * fresh)
        fields.append(_field_from_truth(truth, smoothness, rng, noise, "field-%d-%d" % (seed, idx)))
    return fields


def lag1_autocorrelation(values):
    '''Pearson correlation between horizontally and vertically adjacent cells.'''
    values = np.asarray(values, dtype=float)
    first = np.concatenate([values[:, :-1].ravel(), values[:-1, :].ravel()])
    second = np.concatenate([values[:, 1:].ravel(), values[1:, :].ravel()])
    if first.std() == 0 or second.std() == 0:
        return 0.0
    return float(np.corrcoef(first, second)[0, 1])


class CropMap(MapPlug):
    '''Extractors in fixed order: excess green, leaf area, clutter.'''
    def __init__(self, norms=None, channels=CROP_CHANNELS):
        self.featureCount = channels
        self.norms = list(norms) if norms is not None else [(0.0, 1.0)] * channels
        if len(self.norms) != channels:
            raise ContractViolation("Expected %d norms, got %d" % (channels, len(self.norms)))

    def map(self, record):
        if len(record) != self.featureCount:
            raise ContractViolation("Cell record has %d channels, expected %d" % (len(record), self.featureCount))
        return normalize_features(record, self.norms)


def crop_map(record, norms=None):
    return CropMap(norms, len(record) if norms is None else len(norms)).map(record)


def extrapolate(visited, shape, neighbours=IDW_NEIGHBOURS):
    '''
    Inverse-distance-weighted (power 2) interpolation of visited values onto
    the full grid from each cell's nearest visited cells. Visited cells keep
    their value exactly.

    @type visited: dict
    @param visited: (row, col) -> predicted value

    @type shape: tuple
    @param shape: (height, width)

    @type neighbours: int
    @param neighbours: Visited cells consulted per grid cell

    @rtype: numpy.ndarray
    '''
    if not visited:
        raise ContractViolation("Cannot extrapolate a map from zero visited states")
    if neighbours < 1:
        raise ContractViolation("IDW needs at least one neighbour, got %d" % neighbours)

    height, width = shape
    states = sorted(visited)
    values = np.array([visited[s] for s in states], dtype=float)
    tree = cKDTree(np.array(states, dtype=float))

    grid = np.array([(r, c) for r in range(height) for c in range(width)], dtype=float)
    dist, idx = tree.query(grid, k=min(neighbours, len(states)))
    if dist.ndim == 1:
        dist, idx = dist[:, np.newaxis], idx[:, np.newaxis]

    result = np.empty(len(grid))
    hit = dist[:, 0] == 0.0
    result[hit] = values[idx[hit, 0]]

    weights = 1.0 / dist[~hit] ** IDW_POWER
    result[~hit] = (weights * values[idx[~hit]]).sum(axis=1) / weights.sum(axis=1)
    return result.reshape(height, width)


def crop_eval(featureSpace, perf, context, finished, yieldFeature=0):
    '''
    Score a scouting mission.

    @rtype: EvalReport
    '''
    metrics = {
        "coverage": len(featureSpace) / float(context.stateCount),
        "steps": float(perf.get("steps", 0.0)),
        "agent_energy": float(perf.get("agent_energy", 0.0)),
        "edge_energy": float(perf.get("edge_energy", 0.0)),
    }
    if not len(featureSpace):
        return EvalReport(False, metrics)

    visited = dict((ssv.originState, float(ssv.features[yieldFeature])) for ssv in featureSpace)
    predicted = extrapolate(visited, context.groundTruth.shape)

    mae = float(np.mean(np.abs(predicted - context.groundTruth)))
    span = float(context.groundTruth.max() - context.groundTruth.min())
    if span > 0:
        accuracy = 1.0 - mae / span
    else:
        accuracy = 1.0 - mae
    metrics["accuracy"] = min(max(accuracy, 0.0), 1.0)
    return EvalReport(finished, metrics, predicted)


class CropEval(EvalPlug):
    metricNames = CROP_METRICS

    def __init__(self, yieldFeature=0):
        self.yieldFeature = yieldFeature

    def evaluate(self, featureSpace, perf, context, finished):
        return crop_eval(featureSpace, perf, context, finished, self.yieldFeature)


def crop_fleetspec(nAgents, goals, contexts=None, channels=CROP_CHANNELS, **kwargs):
    '''
    FleetSpec of the scouting application with identity feature norms.
    '''
    return FleetSpec(nAgents, CropMap(channels=channels), CropEval(), goals, contexts=contexts, **kwargs)
