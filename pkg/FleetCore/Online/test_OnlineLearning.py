'''
Tests

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''
import unittest

import numpy as np
import pytest

from FleetCore.Apps.CropScouting import crop_fleetspec, gen_field
from FleetCore.FleetError import ContractViolation
from FleetCore.FleetSpec import Goal, Goals, LearningParams
from FleetCore.Mission.MissionSim import run_mission
from FleetCore.Models.Ensemble import ModelEnsemble
from FleetCore.Models.QTable import QTable
from FleetCore.Models.RewardSpec import RewardSpec
from FleetCore.Online.OnlineLearning import (PER_AGENT, aggregate_usefulness, base_only_usefulness,
                                             enumerate_aggregations, optimize_weights, project_to_simplex,
                                             retrain_variants, retune_gate, variant_work)
from FleetCore.Parallel import derive_seed
from FleetCore.Shaping.BayesOpt import SimplexSpace
from FleetCore.Shaping.RewardShaping import mission_loss


class EnumerateAggregationsTest(unittest.TestCase):
    def runTest(self):
        self.assertEqual(list(enumerate_aggregations(2)), [(), (0,), (1,), (0, 1)])
        self.assertEqual(len(enumerate_aggregations(3)), 8)
        self.assertEqual(len(enumerate_aggregations(8)), 256)
        self.assertEqual(len(enumerate_aggregations(9, PER_AGENT)), 10)
        self.assertEqual(enumerate_aggregations(9, PER_AGENT)[0], ())

        with self.assertRaises(ContractViolation):
            enumerate_aggregations(9)
        with self.assertRaises(ContractViolation):
            enumerate_aggregations(0)


def two_agent_mission(seed=3):
    goals = Goals([Goal("accuracy", ">=", 0.5)])
    field = gen_field(6, 3, 2, seed)
    fleetspec = crop_fleetspec(2, goals, contexts={"runtime": [field]})
    spec = RewardSpec([1.0, 0.5, 0.0], 3.0, 9)
    _, trace = run_mission(fleetspec, QTable(), spec, seed=seed)
    return fleetspec, spec, trace


def test_retrain_variants_replay():
    fleetspec, spec, trace = two_agent_mission()
    traces = dict((a, trace.forAgent(a)) for a in range(2))
    aggs = enumerate_aggregations(2)
    base = QTable()
    base.set((2, 5), 4, 0.125)

    variants = retrain_variants(base, traces, aggs, spec, fleetspec.learning)
    assert len(variants) == 4
    assert variants[0] == base
    assert variants[0] is not base

    for idx, agent in ((1, 0), (2, 1)):
        touched = set((t.state, t.action) for t in traces[agent])
        changed = set(k for k in variants[idx].keys() | base.keys() if variants[idx].get(*k) != base.get(*k))
        assert changed
        assert changed <= touched

    # Pooled replay equals sequential replay of both agents
    both = retrain_variants(base, {0: traces[0] + traces[1], 1: []}, enumerate_aggregations(1), spec,
                            fleetspec.learning)[1]
    assert variants[3] == both

    assert variant_work(traces, (0, 1)) == len(trace.transitions)


def test_retrain_variants_empty_and_missing_traces():
    base = QTable()
    base.set((0, 0), 2, 1.0)
    variants = retrain_variants(base, {0: []}, enumerate_aggregations(1), RewardSpec([1.0], 1.0, 9),
                                LearningParams())
    assert variants[1] == base

    with pytest.raises(ContractViolation, match="agent 1"):
        retrain_variants(base, {0: []}, enumerate_aggregations(2), RewardSpec([1.0], 1.0, 9), LearningParams())


def test_one_hot_ensemble_matches_variant():
    fleetspec, spec, trace = two_agent_mission()
    traces = dict((a, trace.forAgent(a)) for a in range(2))
    variants = retrain_variants(QTable(), traces, enumerate_aggregations(2), spec, fleetspec.learning)

    _, alone = run_mission(fleetspec, variants[3], spec, seed=17)
    _, mixed = run_mission(fleetspec, ModelEnsemble(variants, [0.0, 0.0, 0.0, 1.0]), spec, seed=17)
    assert [(t.agent, t.state, t.action, t.nextState) for t in alone.transitions] == \
        [(t.agent, t.state, t.action, t.nextState) for t in mixed.transitions]


def test_optimize_weights_singleton():
    goals = Goals([Goal("accuracy", ">=", 0.5)])
    fleetspec = crop_fleetspec(1, goals)
    weights = optimize_weights(0, [QTable()], [], fleetspec, goals, 3, 0, RewardSpec([1, 1, 1], 3.0, 9))
    assert list(weights) == [1.0]


def test_optimize_weights_matches_grid_search():
    goals = Goals([Goal("accuracy", ">=", 0.95)])
    field = gen_field(4, 4, 1, 9)
    learning = LearningParams(epsilon=0.0)
    fleetspec = crop_fleetspec(1, goals, tileWidth=2, tileHeight=2, learning=learning, costWeights={"steps": 0.1})
    spec = RewardSpec([1.0, 0.0, 0.0], 3.0, 2)

    biased = QTable()
    for state in field.states():
        biased.set(state, 1, 1.0)
    variants = [QTable(), biased]
    pool = [np.array([1.0 - i / 10.0, i / 10.0]) for i in range(11)]

    brute = []
    for weights in pool:
        report, _ = run_mission(fleetspec, [ModelEnsemble(variants, weights)], spec, seed=derive_seed(4, 0),
                                context=field)
        brute.append((mission_loss(fleetspec, report, field, goals), goals.allMet(report)))

    result = optimize_weights(0, variants, [field], fleetspec, goals, len(pool), 4, spec, pool=pool)
    assert abs(result.sum() - 1.0) <= 1e-9
    assert result.min() >= 0.0

    idx = [i for i, w in enumerate(pool) if np.allclose(w, result)][0]
    met = [value for value, ok in brute if ok]
    expected = min(met) if met else min(value for value, _ in brute)
    assert brute[idx][0] == pytest.approx(expected)


class AggregateUsefulnessTest(unittest.TestCase):
    def runTest(self):
        report = aggregate_usefulness([[0.2, 0.8]])
        self.assertEqual(list(report.usefulness), [0.2, 0.8])

        report = aggregate_usefulness([[1.0, 0.0], [0.0, 1.0]], enumerate_aggregations(1))
        self.assertEqual(list(report.usefulness), [0.5, 0.5])
        self.assertEqual(report.toJSONObject(),
                         {"models": [{"subset": [], "usefulness": 0.5}, {"subset": [0], "usefulness": 0.5}]})

        report = aggregate_usefulness([[0.0, 0.0, 1.0]] * 3)
        self.assertEqual(list(report.usefulness), [0.0, 0.0, 1.0])

        with self.assertRaises(ContractViolation):
            aggregate_usefulness([[1.0, 0.0], [1.0]])
        with self.assertRaises(ContractViolation):
            aggregate_usefulness([[0.7, 0.7]])


def test_usefulness_on_simplex():
    rng = np.random.default_rng(2)
    weights = [project_to_simplex(rng.random(5)) for _ in range(7)]
    report = aggregate_usefulness(weights)
    assert abs(report.usefulness.sum() - 1.0) <= 1e-9
    assert np.all((report.usefulness >= 0.0) & (report.usefulness <= 1.0))


def test_weights_stay_on_simplex():
    rng = np.random.default_rng(23)
    for _ in range(10000):
        space = SimplexSpace(int(rng.integers(1, 65)))
        weights = []
        for _ in range(int(rng.integers(1, 9))):
            raw = rng.uniform(-0.5, 1.5, space.dimension)
            raw[rng.random(space.dimension) < 0.3] = 0.0
            w = space.decode(raw)
            assert abs(w.sum() - 1.0) <= 1e-9
            assert w.min() >= 0.0
            weights.append(w)
        assert abs(aggregate_usefulness(weights).usefulness.sum() - 1.0) <= 1e-9


def test_project_to_simplex_examples():
    assert list(project_to_simplex([2.0, 2.0])) == [0.5, 0.5]
    assert list(project_to_simplex([1.0, 0.0, 0.0])) == [1.0, 0.0, 0.0]
    assert list(project_to_simplex([0.0, 0.0])) == [0.5, 0.5]


def test_base_only_usefulness():
    weights, usefulness = base_only_usefulness(3)
    assert [w.tolist() for w in weights] == [[1.0]] * 3
    assert list(usefulness.items()) == [((), 1.0)]
    assert usefulness.toJSONObject() == {"models": [{"subset": [], "usefulness": 1.0}]}

    with pytest.raises(ContractViolation):
        base_only_usefulness(0)


def test_retune_gate_matches_threshold_scan():
    goals = Goals([Goal("accuracy", ">=", 0.8)])
    field = gen_field(12, 12, 0, 6)
    fleetspec = crop_fleetspec(2, goals, contexts={"runtime": [field]})
    spec = RewardSpec([1.0, 0.5, 0.0], float("inf"), 0)

    scan = []
    for visits in range(9):
        report, _ = run_mission(fleetspec, QTable(), RewardSpec(spec.weights, spec.utilityThreshold, visits),
                                seed=derive_seed(5, 0), context=field, missionIndex=1)
        scan.append(mission_loss(fleetspec, report, field, goals))

    retuned = retune_gate(QTable(), [field], fleetspec, goals, spec, 5, 1)
    assert retuned.visitThreshold == scan.index(min(scan))
    assert retuned.weights.tolist() == [1.0, 0.5, 0.0]
    assert retuned.utilityThreshold == float("inf")

    with pytest.raises(ContractViolation):
        retune_gate(QTable(), [], fleetspec, goals, spec, 5)
