# encoding: utf-8
'''
EdgeRuntime -- The edge cluster as seen by missions and campaigns

Ticks the scheduler, the autoscaler and the energy ledger together, keeps
sensor tasks alive while a mission is flying, stores each agent's mission
data as a replicated fragment and drains retraining tasks between
missions.

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

import logging
import os

from FleetCore.Cluster import Scheduler
from FleetCore.Cluster.Autoscaler import (DEFAULT_REPLICATION, DEFAULT_WAKE_LATENCY, Autoscaler, EnergyLedger,
                                          ReplicaStore, account_energy, write_energy_trace)
from FleetCore.Cluster.ClusterState import DONE, DROPPED, OFF, ON, PENDING, RUNNING, ClusterState, Node, RetrainTask
from FleetCore.FleetError import ContractViolation, PlacementError

logger = logging.getLogger("fleetsim.scheduler")

DEFAULT_SENSOR_CPU = 0.5
DEFAULT_RETRAIN_TICKS = 10000


def build_cluster(nodeCount=6, hubCount=1, cpuCapacity=4.0, memCapacity=8.0, activeWatts=50.0, idleWatts=20.0,
                  replication=DEFAULT_REPLICATION, offNodes=()):
    '''
    Gateways get the lowest ids, hubs the highest. Every gateway starts with
    one base data fragment replicated onto its successor.

    @rtype: ClusterState
    '''
    if nodeCount < 1 or not 0 <= hubCount <= nodeCount:
        raise ContractViolation("Cluster needs at least one node and at most nodeCount hubs")

    nodes = []
    for nodeId in range(nodeCount):
        isHub = nodeId >= nodeCount - hubCount
        state = OFF if nodeId in offNodes else ON
        nodes.append(Node(nodeId, cpuCapacity, memCapacity, isHub, activeWatts, idleWatts, state))

    replicas = ReplicaStore(replication)
    gateways = [n.nodeId for n in nodes if not n.isHub and n.powerState == ON]
    for i, nodeId in enumerate(gateways):
        holders = [nodeId]
        if len(gateways) > 1 and replication > 1:
            holders.append(gateways[(i + 1) % len(gateways)])
        replicas.addFragment("base-%d" % nodeId, holders)
    return ClusterState(nodes, replicas)


class EdgeRuntime(object):
    '''Without an autoscaler every node stays in its initial power state.'''
    def __init__(self, cluster=None, autoscaler=None, sensorCpu=DEFAULT_SENSOR_CPU,
                 minShare=Scheduler.DEFAULT_MIN_SHARE):
        self.cluster = cluster if cluster is not None else build_cluster()
        self.autoscaler = autoscaler
        self.sensorCpu = sensorCpu
        self.minShare = minShare
        self.ledger = EnergyLedger()
        self.events = []
        self.schedulerRows = []
        self.missionCount = 0
        self.nAgents = 0

    def tick(self):
        now = self.cluster.tick
        self.events.extend(Scheduler.tick(self.cluster, self.minShare))
        if self.autoscaler is not None:
            self.events.extend(self.autoscaler.step(self.cluster))
        account_energy(self.cluster, self.ledger, now)
        self.schedulerRows.extend(Scheduler.trace_rows(self.cluster, now))

    def edgeEnergy(self):
        return self.ledger.total

    def beginMission(self, nAgents):
        self.nAgents = nAgents
        Scheduler.start_sensor_tasks(self.cluster, nAgents, self.sensorCpu)

    def endMission(self):
        Scheduler.stop_sensor_tasks(self.cluster)
        live = [n.nodeId for n in self.cluster.nodes.values() if n.live]
        if not live:
            raise PlacementError("No live node can store mission %d data" % self.missionCount)
        for agent in range(self.nAgents):
            primary = live[agent % len(live)]
            holders = [primary]
            if len(live) > 1 and self.cluster.replicas.target > 1:
                holders.append(live[(agent + 1) % len(live)])
            self.cluster.replicas.addFragment(self.missionFragment(self.missionCount, agent), holders)
        self.missionCount += 1

    @staticmethod
    def missionFragment(mission, agent):
        return "m%d-a%d" % (mission, agent)

    def submitRetraining(self, usefulness, traces, mission=None):
        '''
        Queue one retraining task per nonempty aggregation.

        @type usefulness: UsefulnessReport
        @param usefulness: Aggregate usefulness per subset

        @type traces: dict
        @param traces: agent -> recorded transitions; work is the number replayed

        @rtype: list
        @return: The submitted tasks
        '''
        if mission is None:
            mission = self.missionCount - 1
        tasks = []
        for subset, value in usefulness.items():
            if not subset:
                continue
            work = sum(len(traces.get(a, ())) for a in subset)
            if work <= 0:
                continue
            fragments = [self.missionFragment(mission, a) for a in subset]
            taskId = "r%d-%s" % (mission, "+".join(str(a) for a in subset))
            tasks.append(self.cluster.submit(RetrainTask(taskId, subset, value, fragments, work, self.cluster.tick)))
        logger.info("Submitted %d retraining tasks for mission %d", len(tasks), mission)
        return tasks

    def runRetraining(self, maxTicks=DEFAULT_RETRAIN_TICKS):
        '''
        Tick until every schedulable retraining task finished. Zero-priority
        tasks, and anything still pending after maxTicks, are dropped.

        @rtype: tuple
        @return: (done task ids, dropped task ids)
        '''
        ticks = 0
        while any(t.level > 0 for t in self.cluster.retrainTasks(PENDING, RUNNING)):
            if ticks >= maxTicks:
                logger.warning("Retraining did not drain within %d ticks", maxTicks)
                break
            self.tick()
            ticks += 1

        dropped = Scheduler.drop_unschedulable(self.cluster)
        for task in self.cluster.retrainTasks(PENDING):
            task.state = DROPPED
            dropped.append(task.taskId)
        done = [t.taskId for t in self.cluster.retrainTasks(DONE)]
        if dropped:
            logger.info("Dropped retraining tasks: %s", ", ".join(dropped))
        return done, dropped

    def runningCount(self):
        return len(self.cluster.tasksIn(RUNNING))

    def writeTraces(self, outdir):
        Scheduler.write_scheduler_trace(self.schedulerRows, os.path.join(outdir, "scheduler_trace.csv"))
        write_energy_trace(self.ledger, os.path.join(outdir, "energy_trace.csv"))

    def poweredOn(self):
        return [n.nodeId for n in self.cluster.nodesIn(ON)]


def make_edge_runtime(autoscale=True, sensorCpu=DEFAULT_SENSOR_CPU, minShare=Scheduler.DEFAULT_MIN_SHARE,
                      watermarks=None, wakeLatency=None, **clusterArgs):
    '''Fresh default cluster with or without power management.'''
    autoscaler = None
    if autoscale:
        autoscaler = Autoscaler(watermarks, DEFAULT_WAKE_LATENCY if wakeLatency is None else wakeLatency)
    return EdgeRuntime(build_cluster(**clusterArgs), autoscaler, sensorCpu, minShare)
