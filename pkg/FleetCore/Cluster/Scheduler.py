# encoding: utf-8
'''
Scheduler -- Usefulness-driven retraining scheduler

Usefulness maps to one of ten priority levels. CPU and memory are split
among competing tasks in proportion to their level, tasks are placed next to
the data they retrain on (or on an edge hub) and run without preemption.
Level 0 tasks are never scheduled.

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

import csv
import logging
import math

from FleetCore.Cluster.ClusterState import (DONE, DROPPED, ON, PENDING, RUNNING, TASK_STATE_CODE, RetrainTask)
from FleetCore.FleetError import ContractViolation, PlacementError

logger = logging.getLogger("fleetsim.scheduler")

PRIORITY_STEP = 100000000
MAX_RETRAIN_LEVEL = 9
DEFAULT_MIN_SHARE = 0.25
WORK_EPSILON = 1e-9


def priority(usefulness):
    '''
    @type usefulness: float
    @param usefulness: Aggregate usefulness in [0,1]

    @rtype: int
    @return: Priority in {0, 1e8, ..., 9e8}
    '''
    if not 0.0 <= usefulness <= 1.0:
        raise ContractViolation("Usefulness %r outside [0,1]" % usefulness)
    return min(int(math.floor(10.0 * usefulness + 0.5)), MAX_RETRAIN_LEVEL) * PRIORITY_STEP


def apportion(tasks, cpuTotal, memTotal):
    '''
    Split CPU and memory among tasks proportionally to their priority level.

    @type tasks: list
    @param tasks: Pending and running retraining tasks

    @rtype: dict
    @return: taskId -> (cpu cap, mem cap)
    '''
    levels = dict((t.taskId, t.priority // PRIORITY_STEP) for t in tasks)
    total = sum(levels.values())
    caps = {}
    for t in tasks:
        if total == 0 or cpuTotal <= 0:
            caps[t.taskId] = (0.0, 0.0)
        else:
            p = levels[t.taskId]
            caps[t.taskId] = (cpuTotal * p / total, memTotal * p / total)
    return caps


def place(task, cluster, free=None, minShare=0.0):
    '''
    Choose the node to run a task on: powered-on nodes holding at least one
    required fragment, plus powered-on hubs, that have minShare cpu to spare.
    Prefer the largest fragment overlap, then the most free cpu, then the
    lowest node id.

    @type free: dict
    @param free: Optional nodeId -> free cpu override for this tick

    @type minShare: float
    @param minShare: Nodes with less free cpu are not candidates

    @rtype: node id
    '''
    candidates = []
    for node in cluster.nodesIn(ON):
        overlap = len(task.requiredFragments & cluster.fragmentsOf(node.nodeId))
        if overlap or node.isHub:
            avail = free[node.nodeId] if free is not None else cluster.freeCpu(node.nodeId)
            if avail < minShare:
                continue
            candidates.append((-overlap, -avail, node.nodeId))

    if not candidates:
        raise PlacementError("No powered-on node with room holds data for task %s and no hub has room" % task.taskId)
    return min(candidates)[2]


def _order(task):
    return (-task.priority, task.arrival, task.taskId)


def tick(cluster, minShare=DEFAULT_MIN_SHARE):
    '''
    Advance the cluster by one time step.

    @type cluster: ClusterState
    @param cluster: Updated in place

    @type minShare: float
    @param minShare: Smallest cpu share a task may be started with

    @rtype: list
    @return: Events as (tick, kind, subject, detail) tuples
    '''
    events = []
    now = cluster.tick

    free = {}
    for node in cluster.nodes.values():
        reserved = sum(t.cpu for t in cluster.runningOn(node.nodeId) if t.isSensor)
        free[node.nodeId] = max(node.cpuCapacity - reserved, 0.0)
    memFree = dict((n.nodeId, n.memCapacity) for n in cluster.nodes.values())

    sensorCpu = sum(t.cpu for t in cluster.tasksIn(RUNNING) if t.isSensor and cluster.nodes[t.node].powerState == ON)
    cpuTotal = max(cluster.cpuTotal - sensorCpu, 0.0)
    claimants = sorted(cluster.retrainTasks(PENDING, RUNNING), key=_order)
    caps = apportion(claimants, cpuTotal, cluster.memTotal)

    ids = frozenset(t.taskId for t in claimants)
    if ids != cluster.lastClaimants:
        events.append((now, "reapportion", None, len(ids)))
        cluster.lastClaimants = ids

    for task in [t for t in claimants if t.state == RUNNING]:
        cpuCap, memCap = caps[task.taskId]
        task.cpu = min(cpuCap, free[task.node])
        task.mem = min(memCap, memFree[task.node])
        free[task.node] -= task.cpu
        memFree[task.node] -= task.mem

    for task in [t for t in claimants if t.state == PENDING]:
        cpuCap, memCap = caps[task.taskId]
        if task.level == 0 or cpuCap < minShare:
            continue
        try:
            nodeId = place(task, cluster, free, minShare)
        except PlacementError as e:
            logger.debug("[Task %s] %s", task.taskId, e)
            continue
        task.state = RUNNING
        task.node = nodeId
        task.cpu = min(cpuCap, free[nodeId])
        task.mem = min(memCap, memFree[nodeId])
        free[nodeId] -= task.cpu
        memFree[nodeId] -= task.mem
        events.append((now, "task-started", task.taskId, nodeId))
        logger.debug("[Task %s] started on node %s with %.3f cpu", task.taskId, nodeId, task.cpu)

    for task in claimants:
        task.lifetime += 1
        if task.state == RUNNING:
            task.remaining -= task.cpu
            if task.remaining <= WORK_EPSILON:
                task.remaining = 0.0
                task.state = DONE
                task.cpu = 0.0
                task.mem = 0.0
                events.append((now, "task-done", task.taskId, task.node))
                logger.debug("[Task %s] done after %d ticks", task.taskId, task.lifetime)
        else:
            task.wait += 1

    cluster.tick += 1
    return events


def start_sensor_tasks(cluster, nAgents, sensorCpu=0.5):
    '''
    Start one sensor task per agent, on the first powered-on hub or else the
    node with the most free cpu.
    '''
    tasks = []
    for agent in range(nAgents):
        task = cluster.submit(RetrainTask("sensor-%d-%d" % (cluster.tick, agent), (agent,), 1.0, (), 1.0,
                                          cluster.tick, isSensor=True, sensorCpu=sensorCpu))
        hubs = [n for n in cluster.nodesIn(ON) if n.isHub]
        if hubs:
            node = hubs[0]
        else:
            onNodes = cluster.nodesIn(ON)
            if not onNodes:
                tasks.append(task)
                continue
            node = min(onNodes, key=lambda n: (-cluster.freeCpu(n.nodeId), n.nodeId))
        task.state = RUNNING
        task.node = node.nodeId
        task.cpu = min(sensorCpu, cluster.freeCpu(node.nodeId))
        tasks.append(task)
    return tasks


def stop_sensor_tasks(cluster):
    for task in cluster.tasks:
        if task.isSensor and task.active:
            task.state = DONE
            task.cpu = 0.0


def drop_unschedulable(cluster):
    '''Zero-priority tasks still pending at the end of a phase are dropped.'''
    dropped = []
    for task in cluster.retrainTasks(PENDING):
        if task.level == 0:
            task.state = DROPPED
            dropped.append(task.taskId)
    return dropped


SCHEDULER_TRACE_COLUMNS = ["tick", "task_id", "subset", "priority", "node", "state", "cpu_cap", "wait", "lifetime"]


def trace_rows(cluster, tickLabel):
    rows = []
    for task in cluster.tasks:
        if task.isSensor and not task.active:
            continue
        rows.append([tickLabel, task.taskId, task.subsetLabel(), task.priority,
                     "" if task.node is None else task.node, TASK_STATE_CODE[task.state],
                     repr(float(task.cpu)), task.wait, task.lifetime])
    return rows


def write_scheduler_trace(rows, path):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(SCHEDULER_TRACE_COLUMNS)
        writer.writerows(rows)
