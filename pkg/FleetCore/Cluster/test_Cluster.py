'''
Tests

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''
import math
import os
import unittest

import numpy as np
import pytest

from FleetCore.Apps.CropScouting import crop_fleetspec, gen_field
from FleetCore.Cluster import Scheduler
from FleetCore.Cluster.Autoscaler import (DRAIN, WAKE, Autoscaler, EnergyLedger, ReplicaStore, Watermarks,
                                          account_energy, scale_decision)
from FleetCore.Cluster.ClusterState import (DONE, DRAINING, DROPPED, OFF, ON, PENDING, RUNNING, WAKING, ClusterState,
                                            Node, RetrainTask)
from FleetCore.Cluster.EdgeRuntime import EdgeRuntime, build_cluster, make_edge_runtime
from FleetCore.FleetError import ContractViolation, PlacementError
from FleetCore.FleetSpec import Goal, Goals
from FleetCore.Mission.MissionSim import run_mission
from FleetCore.Models.QTable import QTable
from FleetCore.Models.RewardSpec import RewardSpec
from FleetCore.Online.OnlineLearning import aggregate_usefulness, enumerate_aggregations


class PriorityTest(unittest.TestCase):
    def runTest(self):
        self.assertEqual(Scheduler.priority(0.0), 0)
        self.assertEqual(Scheduler.priority(0.04), 0)
        self.assertEqual(Scheduler.priority(0.05), 100000000)
        self.assertEqual(Scheduler.priority(0.5), 500000000)
        self.assertEqual(Scheduler.priority(0.95), 900000000)
        self.assertEqual(Scheduler.priority(1.0), 900000000)

        with self.assertRaises(ContractViolation):
            Scheduler.priority(1.5)
        with self.assertRaises(ContractViolation):
            Scheduler.priority(-0.1)


def test_priority_oracle():
    rng = np.random.default_rng(1)
    for u in rng.random(1000):
        assert Scheduler.priority(u) == min(math.floor(10 * u + 0.5), 9) * 100000000


def task(taskId, usefulness, fragments=(), work=10.0, arrival=0):
    return RetrainTask(taskId, (0,), usefulness, fragments, work, arrival)


class ApportionTest(unittest.TestCase):
    def runTest(self):
        caps = Scheduler.apportion([task("a", 0.9), task("b", 0.1)], 10.0, 20.0)
        self.assertAlmostEqual(caps["a"][0], 9.0, places=12)
        self.assertAlmostEqual(caps["b"][0], 1.0, places=12)
        self.assertAlmostEqual(caps["a"][1], 18.0, places=12)

        caps = Scheduler.apportion([task("a", 0.0), task("b", 0.02)], 10.0, 20.0)
        self.assertEqual(caps["a"], (0.0, 0.0))
        self.assertEqual(caps["b"], (0.0, 0.0))


def test_apportion_oracle():
    rng = np.random.default_rng(2)
    for trial in range(1000):
        tasks = [task("t%d" % i, u) for i, u in enumerate(rng.random(int(rng.integers(1, 8))))]
        cpu = float(rng.uniform(1.0, 64.0))
        caps = Scheduler.apportion(tasks, cpu, 2 * cpu)
        total = sum(t.priority for t in tasks)
        for t in tasks:
            expected = cpu * (t.priority // 100000000) / (total // 100000000) if total else 0.0
            assert caps[t.taskId][0] == pytest.approx(expected, abs=1e-12)
        assert sum(c[0] for c in caps.values()) <= cpu + 1e-9


def small_cluster(nodes, fragments=None):
    replicas = ReplicaStore(2)
    for name, holders in (fragments or {}).items():
        replicas.addFragment(name, holders)
    return ClusterState(nodes, replicas)


class PlaceTest(unittest.TestCase):
    def runTest(self):
        cluster = small_cluster([Node(0), Node(1), Node(2), Node(3, isHub=True)],
                                {"f1": [0, 1], "f2": [1, 2], "f3": [2]})
        self.assertEqual(Scheduler.place(task("a", 0.5, ("f1", "f2")), cluster), 1)
        # Equal overlap: more free cpu wins, then the lower id
        self.assertEqual(Scheduler.place(task("b", 0.5, ("f1",)), cluster, {0: 1.0, 1: 2.0, 2: 4.0, 3: 4.0}), 1)
        self.assertEqual(Scheduler.place(task("c", 0.5, ("f1",)), cluster), 0)
        # No fragment holder: only the hub qualifies
        self.assertEqual(Scheduler.place(task("d", 0.5, ("missing",)), cluster), 3)

        cluster.nodes[3].powerState = OFF
        with self.assertRaises(PlacementError):
            Scheduler.place(task("e", 0.5, ("missing",)), cluster)


def test_single_task_finishes_in_one_tick():
    cluster = small_cluster([Node(0, cpuCapacity=10.0, isHub=True)])
    t = cluster.submit(task("a", 1.0, work=10.0))
    events = Scheduler.tick(cluster)
    assert t.state == DONE
    assert t.lifetime == 1
    assert t.wait == 0
    assert ("task-done" in [e[1] for e in events])


def test_no_powered_nodes_tasks_wait():
    cluster = small_cluster([Node(0, powerState=OFF, isHub=True), Node(1, powerState=OFF)])
    tasks = [cluster.submit(task("t%d" % i, 0.5 + 0.1 * i)) for i in range(3)]
    for _ in range(4):
        Scheduler.tick(cluster)
    assert all(t.state == PENDING and t.wait == 4 for t in tasks)


def test_zero_priority_never_runs_and_is_dropped():
    cluster = small_cluster([Node(0, isHub=True)])
    low = cluster.submit(task("low", 0.01))
    for _ in range(5):
        Scheduler.tick(cluster)
    assert low.state == PENDING
    assert Scheduler.drop_unschedulable(cluster) == ["low"]
    assert low.state == DROPPED


def test_running_tasks_are_not_preempted():
    cluster = small_cluster([Node(0, cpuCapacity=1.0, isHub=True)])
    low = cluster.submit(task("low", 0.3, work=100.0))
    Scheduler.tick(cluster)
    assert low.state == RUNNING

    cluster.submit(task("high", 0.9, work=100.0, arrival=1))
    for _ in range(3):
        Scheduler.tick(cluster)
        assert low.state == RUNNING
        assert cluster.allocatedCpu(0) <= 1.0 + 1e-12


def test_overload_favours_high_priority():
    cluster = build_cluster()
    runtime = EdgeRuntime(cluster)
    rng = np.random.default_rng(5)
    tasks = []
    for i in range(60):
        level = i % 10
        usefulness = level / 10.0
        fragments = ["base-%d" % int(rng.integers(5))]
        tasks.append(cluster.submit(RetrainTask("t%02d" % i, (i % 4,), usefulness, fragments, 30.0, 0)))

    runtime.runRetraining()

    def meanWait(levels):
        return np.mean([t.wait for t in tasks if t.level in levels])

    assert all(t.state in (DONE, DROPPED) for t in tasks)
    assert all(t.state == DROPPED for t in tasks if t.level == 0)
    assert meanWait((0, 1, 2)) >= 2.0 * meanWait((8, 9))
    assert meanWait((1,)) >= meanWait((9,))


@pytest.mark.parametrize("offset", [0, 5])
def test_double_load_wait_follows_priority(offset):
    cluster = build_cluster()
    runtime = EdgeRuntime(cluster)
    # Two tasks per tick, each as large as one tick of the whole cluster
    tasks = []
    for i in range(100):
        level = (i + offset) % 10
        tasks.append(cluster.submit(RetrainTask("t%03d" % i, (0,), level / 10.0, ["base-%d" % (i % 5)],
                                                cluster.cpuTotal, cluster.tick)))
        if i % 2:
            runtime.tick()
    runtime.runRetraining()

    waits = [np.mean([t.wait for t in tasks if t.level == level]) for level in range(10)]
    assert all(a >= b for a, b in zip(waits, waits[1:]))
    assert np.mean(waits[:3]) >= 2.0 * np.mean(waits[8:])
    assert np.mean(waits[:3]) > 0


def test_placement_skips_full_data_holders():
    cluster = small_cluster([Node(0), Node(1, isHub=True)], {"f": [0]})
    free = {0: 0.1, 1: 4.0}
    assert Scheduler.place(task("a", 0.5, ("f",)), cluster, free) == 0
    assert Scheduler.place(task("a", 0.5, ("f",)), cluster, free, 0.25) == 1
    with pytest.raises(PlacementError):
        Scheduler.place(task("a", 0.5, ("f",)), cluster, {0: 0.1, 1: 0.2}, 0.25)


def test_claimant_changes_are_reported_once():
    cluster = small_cluster([Node(0, isHub=True)])
    assert cluster.lastClaimants == frozenset()
    cluster.submit(task("a", 0.5, work=100.0))
    assert "reapportion" in [e[1] for e in Scheduler.tick(cluster)]
    assert cluster.lastClaimants == frozenset(["a"])
    assert "reapportion" not in [e[1] for e in Scheduler.tick(cluster)]


def test_mission_data_needs_a_live_node():
    cluster = small_cluster([Node(0, isHub=True), Node(1)])
    runtime = EdgeRuntime(cluster)
    runtime.beginMission(2)
    for node in cluster.nodes.values():
        node.powerState = OFF
    with pytest.raises(PlacementError):
        runtime.endMission()
    assert not cluster.replicas.holders


def test_allocation_never_exceeds_capacity():
    cluster = build_cluster()
    rng = np.random.default_rng(9)
    for i in range(40):
        cluster.submit(RetrainTask("t%d" % i, (0,), float(rng.random()), ["base-%d" % (i % 5)],
                                   float(rng.uniform(1, 20)), 0))
    for _ in range(50):
        Scheduler.tick(cluster)
        for nodeId in cluster.nodes:
            assert cluster.allocatedCpu(nodeId) <= cluster.nodes[nodeId].cpuCapacity + 1e-9
        assert sum(t.cpu for t in cluster.retrainTasks(RUNNING)) <= cluster.cpuTotal + 1e-9


class ScaleDecisionTest(unittest.TestCase):
    def runTest(self):
        marks = Watermarks()
        cluster = small_cluster([Node(0), Node(1), Node(2, isHub=True), Node(3, powerState=OFF)])
        self.assertEqual(scale_decision(cluster, 5.0, marks), (WAKE, 3))
        self.assertEqual(scale_decision(cluster, 0.0, marks, lowStreak=4), None)
        self.assertEqual(scale_decision(cluster, 0.0, marks, lowStreak=5), (DRAIN, 0))

        # Nodes hosting sensor tasks stay up
        sensor = cluster.submit(RetrainTask("s", (0,), 1.0, (), 1.0, 0, isSensor=True, sensorCpu=0.5))
        sensor.state = RUNNING
        sensor.node = 0
        sensor.cpu = 0.5
        self.assertEqual(scale_decision(cluster, 0.0, marks, lowStreak=5), (DRAIN, 1))

        # Hub and last node are never drained
        lonely = small_cluster([Node(0, isHub=True), Node(1, powerState=OFF)])
        self.assertEqual(scale_decision(lonely, 0.0, marks, lowStreak=50), None)

        with self.assertRaises(ContractViolation):
            Watermarks(0.9, 0.5)


def test_drain_then_rereplicate():
    cluster = build_cluster(nodeCount=3)
    scaler = Autoscaler()
    for _ in range(5):
        scaler.step(cluster)
    assert cluster.nodes[0].powerState == DRAINING

    scaler.step(cluster)
    assert cluster.nodes[0].powerState == OFF
    assert len(cluster.replicas.inFlight) == 2

    scaler.step(cluster)
    scaler.step(cluster)
    assert not cluster.replicas.inFlight
    for fragment in cluster.replicas.holders:
        assert len(cluster.replicas.liveHolders(fragment, cluster)) == 2

    for _ in range(10):
        scaler.step(cluster)
    assert cluster.nodesIn(ON) == [cluster.nodes[2]]


def test_draining_node_copies_unique_fragments_first():
    cluster = small_cluster([Node(0), Node(1), Node(2, isHub=True)], {"only-0": [0]})
    scaler = Autoscaler()
    cluster.nodes[0].powerState = DRAINING
    scaler.step(cluster)
    assert cluster.nodes[0].powerState == DRAINING
    scaler.step(cluster)
    assert cluster.nodes[0].powerState == DRAINING
    scaler.step(cluster)
    assert cluster.nodes[0].powerState == OFF
    assert cluster.replicas.liveHolders("only-0", cluster)


def test_drain_aborts_without_destination():
    cluster = small_cluster([Node(0), Node(1, powerState=OFF)], {"only-0": [0]})
    cluster.nodes[0].powerState = DRAINING
    events = Autoscaler().step(cluster)
    assert cluster.nodes[0].powerState == ON
    assert "drain-aborted" in [e[1] for e in events]


def test_wake_latency():
    cluster = small_cluster([Node(0, isHub=True), Node(1, powerState=OFF)])
    scaler = Autoscaler()
    scaler.apply((WAKE, 1), cluster)
    assert cluster.nodes[1].powerState == WAKING
    scaler.step(cluster)
    scaler.step(cluster)
    assert cluster.nodes[1].powerState == WAKING
    scaler.step(cluster)
    assert cluster.nodes[1].powerState == ON


def test_replica_availability_random_schedule():
    rng = np.random.default_rng(13)
    cluster = build_cluster()
    scaler = Autoscaler()
    for step in range(10000):
        roll = rng.random()
        if roll < 0.05:
            off = cluster.nodesIn(OFF)
            if off:
                scaler.apply((WAKE, off[int(rng.integers(len(off)))].nodeId), cluster)
        elif roll < 0.10:
            on = cluster.nodesIn(ON)
            if on:
                scaler.apply((DRAIN, on[int(rng.integers(len(on)))].nodeId), cluster)
        if step % 500 == 0:
            nodeId = int(rng.integers(len(cluster.nodes)))
            if cluster.nodes[nodeId].live:
                cluster.replicas.addFragment("extra-%d" % step, [nodeId])
        scaler.step(cluster)
        for fragment in cluster.replicas.holders:
            assert cluster.replicas.liveHolders(fragment, cluster)


class EnergyTest(unittest.TestCase):
    def runTest(self):
        cluster = small_cluster([Node(0, isHub=True), Node(1), Node(2, powerState=OFF), Node(3)])
        cluster.nodes[3].powerState = DRAINING
        busy = cluster.submit(task("a", 0.5))
        busy.state = RUNNING
        busy.node = 1
        busy.cpu = 1.0

        ledger = account_energy(cluster, EnergyLedger())
        self.assertEqual(ledger.perNode[0], 20.0)
        self.assertEqual(ledger.perNode[1], 50.0)
        self.assertEqual(ledger.perNode[2], 0.0)
        self.assertEqual(ledger.perNode[3], 50.0)
        self.assertEqual(ledger.total, 120.0)


def test_autoscaled_mission_saves_energy():
    goals = Goals([Goal("accuracy", ">=", 0.6)])
    fleetspec = crop_fleetspec(4, goals, contexts={"runtime": [gen_field(24, 24, 0, 4)]})
    spec = RewardSpec([1.0, 0.5, 0.0], 3.0, 9)

    plainReport, plain = run_mission(fleetspec, QTable(), spec, seed=8)
    onReport, alwaysOn = run_mission(fleetspec, QTable(), spec, cluster=make_edge_runtime(False), seed=8)
    scaledReport, scaled = run_mission(fleetspec, QTable(), spec, cluster=make_edge_runtime(True), seed=8)

    assert [(t.agent, t.nextState) for t in plain.transitions] == [(t.agent, t.nextState) for t in scaled.transitions]
    assert scaledReport.metrics["steps"] == plainReport.metrics["steps"]
    assert plainReport.metrics["edge_energy"] == 0.0
    assert scaledReport.metrics["steps"] <= 1.05 * onReport.metrics["steps"]
    assert 0.0 < 1.4 * scaledReport.metrics["edge_energy"] <= onReport.metrics["edge_energy"]


def test_retraining_drain_phase(tmpdir):
    goals = Goals([Goal("accuracy", ">=", 0.6)])
    fleetspec = crop_fleetspec(2, goals, contexts={"runtime": [gen_field(6, 6, 2, 1)]})
    spec = RewardSpec([1.0, 0.5, 0.0], 3.0, 9)
    runtime = make_edge_runtime(True)
    _, trace = run_mission(fleetspec, QTable(), spec, cluster=runtime, seed=2)

    aggs = enumerate_aggregations(2)
    usefulness = aggregate_usefulness([[0.0, 0.7, 0.0, 0.3], [0.0, 0.0, 0.99, 0.01]], aggs)
    traces = dict((a, trace.forAgent(a)) for a in range(2))
    submitted = runtime.submitRetraining(usefulness, traces)
    assert [t.taskId for t in submitted] == ["r0-0", "r0-1", "r0-0+1"]
    assert submitted[2].work == len(trace.transitions)
    assert submitted[0].requiredFragments == frozenset(["m0-a0"])

    done, dropped = runtime.runRetraining()
    assert sorted(done) == ["r0-0", "r0-0+1", "r0-1"]
    assert dropped == []

    runtime.writeTraces(str(tmpdir))
    assert os.path.exists(os.path.join(str(tmpdir), "scheduler_trace.csv"))
    with open(os.path.join(str(tmpdir), "energy_trace.csv")) as f:
        assert f.readline().strip() == "tick,node_id,power_state,running_tasks,watt_ticks_cum"
