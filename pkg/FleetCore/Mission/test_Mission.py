'''
Tests

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''
import csv
import functools
import json
import os
import unittest

import numpy as np
import pytest

from FleetCore.Apps.CropScouting import crop_fleetspec, gen_field
from FleetCore.Cluster.EdgeRuntime import make_edge_runtime
from FleetCore.ExecutionContext import ExecutionContext
from FleetCore.FleetError import ContractViolation
from FleetCore.FleetSpec import SENSE_HOLD, Goal, Goals, LearningParams, StateTiling
from FleetCore.Mission.Baselines import automated_sweep, baseline_automated, baseline_classic_rl, serpentine
from FleetCore.Mission.Campaign import (BENCH_COLUMNS, automated_to_goals, ratio, run_bench, run_campaign, write_bench,
                                        write_campaign)
from FleetCore.Mission.MissionSim import partition_states, run_mission, write_trace_csv
from FleetCore.Models.QTable import QTable
from FleetCore.Models.RewardSpec import RewardSpec
from FleetCore.Online.OnlineLearning import PER_AGENT
from FleetCore.Parallel import derive_seed

SPEC = RewardSpec([1.0, 0.5, 0.0], 3.0, 9)
# One sample per state group
SPARSE = RewardSpec([1.0, 0.5, 0.0], float("inf"), 0)


def fleet(nAgents, field, goal=0.6, **kwargs):
    goals = Goals([Goal("accuracy", ">=", goal)])
    return crop_fleetspec(nAgents, goals, contexts={"runtime": [field]}, **kwargs)


def fingerprint(trace):
    return [(t.agent, t.tick, t.state, t.action, t.nextState, t.reward, t.gate) for t in trace.transitions]


class PartitionTest(unittest.TestCase):
    def runTest(self):
        field = gen_field(9, 9, 1, 0)
        tiling = StateTiling(9, 9)
        self.assertEqual(sorted(partition_states(field, 1, tiling)[0]), list(range(9)))

        bands = partition_states(field, 4, tiling)
        self.assertEqual([len(b) for b in bands], [3, 2, 2, 2])
        self.assertEqual(sorted(g for b in bands for g in b), list(range(9)))

        small = gen_field(6, 6, 1, 0)
        self.assertEqual([len(b) for b in partition_states(small, 4, StateTiling(6, 6))], [1, 1, 1, 1])

        with self.assertRaises(ContractViolation):
            partition_states(small, 5, StateTiling(6, 6))
        with self.assertRaises(ContractViolation):
            partition_states(small, 0, StateTiling(6, 6))


def test_single_cell_mission():
    field = gen_field(1, 1, 0, 3)
    report, trace = run_mission(fleet(1, field, 0.0), QTable(), SPEC, seed=1)
    assert len(trace.transitions) == 1
    t = trace.transitions[0]
    assert (t.state, t.action, t.nextState) == ((0, 0), SENSE_HOLD, (0, 0))
    assert report.finished
    assert report.metrics["coverage"] == 1.0


def test_constant_field_is_reconstructed_exactly():
    cells = np.full((4, 4, 3), 0.5)
    flat = ExecutionContext("flat", cells, np.full((4, 4), 0.5))
    report, _ = run_mission(fleet(1, flat, 0.0), QTable(), SPEC, seed=2)
    assert report.metrics["accuracy"] == pytest.approx(1.0)


def test_mission_invariants():
    field = gen_field(12, 12, 2, 4)
    fleetspec = fleet(4, field)
    report, trace = run_mission(fleetspec, QTable(), SPEC, seed=6)

    tiling = fleetspec.tilingFor(field)
    bands = partition_states(field, 4, tiling)
    visited = [trace.visited(a) for a in range(4)]
    for a in range(4):
        allowed = set(s for g in bands[a] for s in tiling.statesOf(g))
        assert visited[a] <= allowed
        for b in range(a + 1, 4):
            assert not visited[a] & visited[b]

    assert len(trace.transitions) <= field.stateCount + tiling.groupCount
    assert len(trace.transitions) == len(trace.visited())
    assert report.metrics["agent_energy"] >= fleetspec.energy.sense * len(trace.transitions)

    replayed = trace.replay(fleetspec.learning)
    for a in range(4):
        assert replayed[a] == trace.finalTables[a]


def test_agents_stay_in_their_partition():
    rng = np.random.default_rng(17)
    sensed = 0
    while sensed < 10000:
        width, height = (int(v) for v in rng.integers(3, 16, size=2))
        field = gen_field(width, height, 0, int(rng.integers(1 << 16)))
        tiling = StateTiling(width, height)
        nAgents = int(rng.integers(1, min(8, tiling.groupCount) + 1))
        spec = RewardSpec(rng.random(3).tolist(), float(rng.uniform(0.5, 4.0)), int(rng.integers(10)))
        fleetspec = fleet(nAgents, field, learning=LearningParams(epsilon=float(rng.random())))
        _, trace = run_mission(fleetspec, QTable(), spec, seed=int(rng.integers(1 << 16)))

        bands = partition_states(field, nAgents, tiling)
        for a in range(nAgents):
            assert trace.visited(a) <= set(s for g in bands[a] for s in tiling.statesOf(g))
        assert len(trace.visited()) == len(trace.transitions)
        sensed += len(trace.transitions)


def test_mission_determinism():
    field = gen_field(9, 9, 2, 5)
    fleetspec = fleet(2, field)
    first = run_mission(fleetspec, QTable(), SPEC, seed=11)
    second = run_mission(fleetspec, QTable(), SPEC, seed=11)
    assert fingerprint(first[1]) == fingerprint(second[1])
    assert first[0].metrics == second[0].metrics


def test_zero_visit_threshold_senses_one_state_per_group():
    field = gen_field(9, 9, 2, 5)
    fleetspec = fleet(1, field, 0.0)
    _, trace = run_mission(fleetspec, QTable(), RewardSpec([1.0, 0.5, 0.0], 3.0, 0), seed=3)
    groups = [t.group for t in trace.transitions]
    assert sorted(groups) == list(range(9))


def test_full_exploration_covers_every_state():
    field = gen_field(6, 6, 2, 5)
    report, trace = run_mission(fleet(2, field), QTable(), RewardSpec.fullExploration(3), seed=3)
    assert report.metrics["coverage"] == 1.0
    assert trace.visited() == set(field.states())


def test_model_count_must_match_agents():
    field = gen_field(6, 6, 2, 5)
    with pytest.raises(ContractViolation):
        run_mission(fleet(2, field), [QTable()], SPEC, seed=0)
    with pytest.raises(ContractViolation):
        run_mission(fleet(1, field), QTable(), RewardSpec([1.0], 1.0, 9), seed=0)


def test_write_trace_csv(tmpdir):
    field = gen_field(6, 6, 2, 8)
    _, trace = run_mission(fleet(2, field), QTable(), SPEC, seed=0)
    path = os.path.join(str(tmpdir), "mission_trace.csv")
    write_trace_csv(trace, path, 3)
    with open(path) as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["agent", "tick", "s_r", "s_c", "action", "ssv_0", "ssv_1", "ssv_2", "reward", "group", "gate"]
    keys = [(int(r[0]), int(r[1])) for r in rows[1:]]
    assert keys == sorted(keys)
    assert len(keys) == len(trace.transitions)


def serpentine_6x6():
    return [(r, c) for r in range(6) for c in (range(6) if r % 2 == 0 else reversed(range(6)))]


class AutomatedSweepTest(unittest.TestCase):
    def runTest(self):
        field = gen_field(6, 6, 1, 0)
        tiling = StateTiling(6, 6)

        visits = automated_sweep(field, 1.0, 1, tiling)
        self.assertEqual([v[2] for v in visits], serpentine_6x6())
        self.assertEqual(len(automated_sweep(field, 0.5, 1, tiling)), 18)

        visits = automated_sweep(field, 1.0, 2, tiling)
        bands = partition_states(field, 2, tiling)
        for agent in range(2):
            band = set(s for g in bands[agent] for s in tiling.statesOf(g))
            self.assertEqual(set(v[2] for v in visits if v[1] == agent), band)

        with self.assertRaises(ContractViolation):
            automated_sweep(field, 0.0, 1, tiling)
        with self.assertRaises(ContractViolation):
            automated_sweep(field, 1.5, 1, tiling)

        self.assertEqual(serpentine([(1, 0), (0, 1), (1, 1), (0, 0)]), [(0, 0), (0, 1), (1, 1), (1, 0)])


def test_baseline_automated_energy():
    field = gen_field(6, 6, 1, 0)
    report = baseline_automated(field, 1.0, 1, fleet(1, field))
    assert report.metrics["coverage"] == 1.0
    assert report.metrics["steps"] == 36.0
    assert report.metrics["agent_energy"] == 35 * 55.0 + 36 * 10.0
    assert report.finished


def test_classic_rl_single_cell_matches_fleet():
    field = gen_field(1, 1, 0, 3)
    fleetspec = fleet(1, field, 0.0)
    _, fleetTrace = run_mission(fleetspec, QTable(), SPEC, seed=4)
    _, classicTrace = baseline_classic_rl(fleetspec, 4)
    assert [(t.state, t.action, t.nextState) for t in fleetTrace.transitions] == \
        [(t.state, t.action, t.nextState) for t in classicTrace.transitions]


def test_classic_rl_stops_at_goal():
    field = gen_field(6, 6, 2, 3)
    report, trace = baseline_classic_rl(fleet(1, field, 0.0), 4)
    assert len(trace.transitions) == 1
    assert report.finished


def test_campaign_single_mission_equals_run_mission():
    field = gen_field(9, 9, 2, 2)
    fleetspec = fleet(2, field)
    result = run_campaign(fleetspec, 1, False, 21, SPEC)
    report, trace = run_mission(fleetspec, QTable(), SPEC, seed=derive_seed(21, 0), context=field)
    assert result.reports[0].metrics == report.metrics
    assert fingerprint(result.traces[0]) == fingerprint(trace)
    assert len(result.usefulness) == 1
    assert list(result.usefulness[0].items()) == [((), 1.0)]
    assert [w.tolist() for w in result.weights[0]] == [[1.0], [1.0]]

    with pytest.raises(ContractViolation):
        run_campaign(fleetspec, 0, False, 21, SPEC)


def test_online_campaign(tmpdir):
    field = gen_field(6, 6, 2, 2)
    fleetspec = fleet(2, field)

    def campaign():
        return run_campaign(fleetspec, 2, True, 3, SPEC, cluster=make_edge_runtime(True), boEpochs=2,
                            nCandidates=8)

    result = campaign()
    assert len(result.reports) == 2
    assert len(result.usefulness) == 2
    for usefulness, weights in zip(result.usefulness, result.weights):
        assert len(usefulness) == 4
        assert abs(usefulness.usefulness.sum() - 1.0) <= 1e-9
        for w in weights:
            assert abs(np.sum(w) - 1.0) <= 1e-9
    assert len(result.retraining) == 2

    again = campaign()
    assert result.summaryRows() == again.summaryRows()

    outdir = str(tmpdir)
    write_campaign(result, outdir)
    for name in ("eval_report_0.json", "eval_report_1.json", "usefulness_history.json", "campaign_summary.csv"):
        assert os.path.exists(os.path.join(outdir, name))
    with open(os.path.join(outdir, "usefulness_history.json")) as f:
        history = json.load(f)
    assert [h["mission"] for h in history] == [0, 1]


def test_bench(tmpdir):
    field = gen_field(6, 6, 2, 1)
    fleetspec = fleet(2, field)
    rows = run_bench(fleetspec, SPEC, 2, 5, clusterFactory=functools.partial(make_edge_runtime))
    assert len(rows) == 3
    assert rows[-1][0] == "mean"
    assert all(len(r) == len(BENCH_COLUMNS) for r in rows)

    path = os.path.join(str(tmpdir), "bench.csv")
    write_bench(rows, path)
    with open(path) as f:
        assert f.readline().strip().split(",") == BENCH_COLUMNS

    assert ratio(1.0, 0.0) == 0.0
    assert ratio(3.0, 2.0) == 1.5


def test_four_agents_finish_three_times_faster():
    fleetSteps, singleSteps = [], []
    for seed in range(10):
        fleetspec = fleet(4, gen_field(24, 24, 0, seed), 0.7)
        fleetSteps.append(run_mission(fleetspec, QTable(), SPARSE, seed=seed)[0].metrics["steps"])
        singleSteps.append(run_mission(fleetspec.withAgents(1), QTable(), SPARSE, seed=seed)[0].metrics["steps"])
    assert np.mean(fleetSteps) <= np.mean(singleSteps) / 3.0


def test_gated_fleet_needs_less_coverage_than_baselines():
    fleetCoverage, fleetAccuracy, classicCoverage, automatedCoverage = [], [], [], []
    for seed in range(10):
        field = gen_field(24, 24, 0, seed)
        fleetspec = fleet(4, field, 0.7)

        report, _ = run_mission(fleetspec, QTable(), SPARSE, seed=seed)
        fleetCoverage.append(report.metrics["coverage"])
        fleetAccuracy.append(report.metrics["accuracy"])

        classic, _ = baseline_classic_rl(fleetspec, seed)
        assert classic.metrics["accuracy"] >= 0.7
        classicCoverage.append(classic.metrics["coverage"])

        automated = automated_to_goals(fleetspec, field, 4)
        assert automated.metrics["accuracy"] >= 0.7
        automatedCoverage.append(automated.metrics["coverage"])

    assert np.mean(fleetAccuracy) >= 0.7
    assert np.mean(fleetCoverage) <= 0.75 * np.mean(classicCoverage)
    assert np.mean(fleetCoverage) <= 0.60 * np.mean(automatedCoverage)


def test_online_campaign_closes_in_on_accuracy_target():
    target = 0.85
    first, later = [], []
    for seed in range(10):
        fleetspec = fleet(4, gen_field(24, 24, 0, seed), target)
        result = run_campaign(fleetspec, 10, True, seed, SPARSE, aggregation=PER_AGENT, boEpochs=1, nCandidates=4)
        errors = [abs(r.metrics["accuracy"] - target) / target for r in result.reports]
        first.append(errors[0])
        later.append(np.mean(errors[1:]))
        assert result.specs[0].visitThreshold == 0
    assert np.mean(later) <= 0.95 * np.mean(first)
