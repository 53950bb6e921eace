# encoding: utf-8
'''
Autoscaler -- Watermark-driven power management with replica-aware draining

Nodes are woken when utilization runs hot or tasks cannot be placed, and
drained one at a time after a sustained low-utilization streak. A draining
node only powers off once every fragment it holds has another live
replica.

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

import csv
import logging
from collections import OrderedDict

from FleetCore.Cluster.ClusterState import DRAINING, OFF, ON, PENDING, POWER_STATE_CODE, WAKING
from FleetCore.FleetError import ContractViolation, InvariantViolation

logger = logging.getLogger("fleetsim.autoscaler")

DEFAULT_REPLICATION = 2
DEFAULT_LOW_WATERMARK = 0.25
DEFAULT_HIGH_WATERMARK = 0.85
DEFAULT_LOW_TICKS = 5
DEFAULT_WAKE_LATENCY = 3
DEFAULT_REPLICATION_TICKS = 2

WAKE = "wake"
DRAIN = "drain"


class ReplicaStore(object):
    '''Fragment placement plus replications currently in flight.'''
    def __init__(self, target=DEFAULT_REPLICATION):
        if target < 1:
            raise ContractViolation("Replication factor must be >= 1, got %d" % target)
        self.target = target
        self.holders = OrderedDict()
        self.inFlight = []

    def addFragment(self, fragment, nodeIds):
        if not nodeIds:
            raise ContractViolation("Fragment %s needs at least one holder" % fragment)
        holders = self.holders.setdefault(fragment, [])
        for nodeId in nodeIds:
            if nodeId not in holders:
                holders.append(nodeId)

    def fragmentsOf(self, nodeId):
        return frozenset(f for f, holders in self.holders.items() if nodeId in holders)

    def liveHolders(self, fragment, cluster):
        return [n for n in self.holders[fragment] if cluster.nodes[n].live]

    def inFlightFor(self, fragment):
        return [r for r in self.inFlight if r["fragment"] == fragment]

    def schedule(self, fragment, source, destination, ticks):
        self.inFlight.append({"fragment": fragment, "source": source, "destination": destination,
                              "remaining": ticks})
        logger.debug("Replicating %s from node %s to node %s", fragment, source, destination)

    def advance(self):
        completed = []
        for r in self.inFlight:
            r["remaining"] -= 1
            if r["remaining"] <= 0:
                self.addFragment(r["fragment"], [r["destination"]])
                completed.append(r)
        self.inFlight = [r for r in self.inFlight if r["remaining"] > 0]
        return completed


class Watermarks(object):
    def __init__(self, low=DEFAULT_LOW_WATERMARK, high=DEFAULT_HIGH_WATERMARK, lowTicks=DEFAULT_LOW_TICKS):
        if not 0.0 <= low < high <= 1.0:
            raise ContractViolation("Watermarks must satisfy 0 <= low < high <= 1, got %r/%r" % (low, high))
        if lowTicks < 1:
            raise ContractViolation("Low-utilization streak must be >= 1 tick")
        self.low = low
        self.high = high
        self.lowTicks = lowTicks


def utilization(cluster):
    cpuTotal = cluster.cpuTotal
    if cpuTotal <= 0:
        return 0.0
    return cluster.allocatedCpu() / cpuTotal


def scale_decision(cluster, load, watermarks, lowStreak=0):
    '''
    Decide whether to wake or drain a node.

    @type load: float
    @param load: Outstanding work of tasks that could not start

    @type lowStreak: int
    @param lowStreak: Consecutive ticks observed below the low watermark

    @rtype: tuple or None
    @return: (WAKE, nodeId), (DRAIN, nodeId) or None
    '''
    util = utilization(cluster)
    offNodes = cluster.nodesIn(OFF)
    if util > watermarks.high or load > 0:
        if offNodes and not cluster.nodesIn(WAKING):
            return (WAKE, offNodes[0].nodeId)
        return None

    if lowStreak < watermarks.lowTicks or util >= watermarks.low:
        return None
    if cluster.nodesIn(DRAINING) or cluster.replicas.inFlight:
        return None
    if len(cluster.nodesIn(ON)) < 2:
        return None

    candidates = []
    for node in cluster.nodesIn(ON):
        running = cluster.runningOn(node.nodeId)
        if node.isHub or any(t.isSensor for t in running):
            continue
        candidates.append((len(running), node.nodeId))
    if not candidates:
        return None
    return (DRAIN, min(candidates)[1])


def _destination(cluster, fragment, exclude=()):
    holders = cluster.replicas.holders[fragment]
    candidates = [(len(cluster.fragmentsOf(n.nodeId)), n.nodeId) for n in cluster.nodesIn(ON)
                  if n.nodeId not in holders and n.nodeId not in exclude]
    if not candidates:
        return None
    return min(candidates)[1]


class EnergyLedger(object):
    '''Watt-ticks per node, accumulated one tick at a time.'''
    def __init__(self):
        self.perNode = OrderedDict()
        self.rows = []

    @property
    def total(self):
        return float(sum(self.perNode.values()))


def account_energy(cluster, ledger, tickLabel=None):
    '''
    Charge one tick of power draw: active watts for nodes running tasks (and
    for draining or waking nodes), idle watts for idle powered-on nodes,
    nothing for powered-off nodes.

    @rtype: EnergyLedger
    '''
    for node in cluster.nodes.values():
        running = len(cluster.runningOn(node.nodeId))
        if node.powerState == OFF:
            draw = 0.0
        elif node.powerState in (DRAINING, WAKING) or running:
            draw = node.activeWatts
        else:
            draw = node.idleWatts
        ledger.perNode[node.nodeId] = ledger.perNode.get(node.nodeId, 0.0) + draw
        ledger.rows.append([cluster.tick if tickLabel is None else tickLabel, node.nodeId,
                            POWER_STATE_CODE[node.powerState], running, repr(ledger.perNode[node.nodeId])])
    return ledger


class Autoscaler(object):
    def __init__(self, watermarks=None, wakeLatency=DEFAULT_WAKE_LATENCY,
                 replicationTicks=DEFAULT_REPLICATION_TICKS):
        self.watermarks = watermarks or Watermarks()
        self.wakeLatency = wakeLatency
        self.replicationTicks = replicationTicks
        self.lowStreak = 0

    def scale_decision(self, cluster, load):
        if utilization(cluster) < self.watermarks.low and load <= 0:
            self.lowStreak += 1
        else:
            self.lowStreak = 0
        decision = scale_decision(cluster, load, self.watermarks, self.lowStreak)
        if decision is not None and decision[0] == DRAIN:
            self.lowStreak = 0
        return decision

    def apply(self, decision, cluster):
        events = []
        if decision is None:
            return events
        kind, nodeId = decision
        node = cluster.nodes[nodeId]
        if kind == WAKE:
            node.powerState = WAKING
            node.wakeRemaining = self.wakeLatency
            logger.info("[Node %s] waking", nodeId)
        else:
            node.powerState = DRAINING
            logger.info("[Node %s] draining", nodeId)
        events.append((cluster.tick, kind, nodeId, None))
        return events

    def _advanceWaking(self, cluster):
        events = []
        for node in cluster.nodesIn(WAKING):
            node.wakeRemaining -= 1
            if node.wakeRemaining <= 0:
                node.powerState = ON
                events.append((cluster.tick, "node-on", node.nodeId, None))
                logger.info("[Node %s] on", node.nodeId)
        return events

    def _advanceDrains(self, cluster):
        events = []
        replicas = cluster.replicas
        for node in cluster.nodesIn(DRAINING):
            pendingCopies = False
            for fragment in sorted(replicas.fragmentsOf(node.nodeId)):
                others = [h for h in replicas.liveHolders(fragment, cluster) if h != node.nodeId]
                if others:
                    continue
                pendingCopies = True
                if replicas.inFlightFor(fragment):
                    continue
                dest = _destination(cluster, fragment, exclude=(node.nodeId,))
                if dest is None:
                    node.powerState = ON
                    events.append((cluster.tick, "drain-aborted", node.nodeId, fragment))
                    logger.warning("[Node %s] drain aborted, no destination for fragment %s", node.nodeId, fragment)
                    break
                replicas.schedule(fragment, node.nodeId, dest, self.replicationTicks)
            if node.powerState != DRAINING:
                continue
            busy = any(r["source"] == node.nodeId or r["destination"] == node.nodeId for r in replicas.inFlight)
            if not pendingCopies and not busy and not cluster.runningOn(node.nodeId):
                node.powerState = OFF
                events.append((cluster.tick, "node-off", node.nodeId, None))
                logger.info("[Node %s] off", node.nodeId)
        return events

    def _reReplicate(self, cluster):
        replicas = cluster.replicas
        for fragment in replicas.holders:
            live = replicas.liveHolders(fragment, cluster)
            if len(live) >= replicas.target or not live or replicas.inFlightFor(fragment):
                continue
            dest = _destination(cluster, fragment)
            if dest is not None:
                replicas.schedule(fragment, live[0], dest, self.replicationTicks)

    def check_availability(self, cluster):
        for fragment in cluster.replicas.holders:
            if not cluster.replicas.liveHolders(fragment, cluster):
                raise InvariantViolation("Fragment %s has no replica on a powered-on node" % fragment)

    def step(self, cluster):
        '''
        One tick of power management.

        @rtype: list
        @return: Events as (tick, kind, subject, detail) tuples
        '''
        events = self._advanceWaking(cluster)
        for r in cluster.replicas.advance():
            events.append((cluster.tick, "replicated", r["fragment"], r["destination"]))
        events.extend(self._advanceDrains(cluster))
        self._reReplicate(cluster)

        load = sum(t.remaining for t in cluster.retrainTasks(PENDING) if t.level > 0 and t.wait > 0)
        events.extend(self.apply(self.scale_decision(cluster, load), cluster))
        self.check_availability(cluster)
        return events


ENERGY_TRACE_COLUMNS = ["tick", "node_id", "power_state", "running_tasks", "watt_ticks_cum"]


def write_energy_trace(ledger, path):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(ENERGY_TRACE_COLUMNS)
        writer.writerows(ledger.rows)
