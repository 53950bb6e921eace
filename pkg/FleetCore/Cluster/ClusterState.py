# encoding: utf-8
'''
ClusterState -- Nodes, retraining tasks and data placement of the simulated edge cluster

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

from collections import OrderedDict

from FleetCore.FleetError import ContractViolation

POWER_STATE_CODE = {
    0: "On",
    1: "Off",
    2: "Draining",
    3: "Waking",
}
POWER_STATE = dict((val, key) for key, val in POWER_STATE_CODE.items())
ON, OFF, DRAINING, WAKING = range(0, 4)

TASK_STATE_CODE = {
    0: "Pending",
    1: "Running",
    2: "Done",
    3: "Dropped",
}
TASK_STATE = dict((val, key) for key, val in TASK_STATE_CODE.items())
PENDING, RUNNING, DONE, DROPPED = range(0, 4)

SENSOR_PRIORITY = 1000000000


class Node(object):
    def __init__(self, nodeId, cpuCapacity=4.0, memCapacity=8.0, isHub=False, activeWatts=50.0, idleWatts=20.0,
                 powerState=ON):
        if cpuCapacity <= 0 or memCapacity <= 0:
            raise ContractViolation("Node %s needs positive capacities" % nodeId)
        if activeWatts < 0 or idleWatts < 0:
            raise ContractViolation("Node %s needs non-negative power draw" % nodeId)
        self.nodeId = nodeId
        self.cpuCapacity = float(cpuCapacity)
        self.memCapacity = float(memCapacity)
        self.isHub = isHub
        self.activeWatts = float(activeWatts)
        self.idleWatts = float(idleWatts)
        self.powerState = powerState
        self.wakeRemaining = 0

    @property
    def live(self):
        '''Powered on and able to serve data.'''
        return self.powerState in (ON, DRAINING)


class RetrainTask(object):
    def __init__(self, taskId, subset, usefulness, requiredFragments, work, arrival, isSensor=False, sensorCpu=0.0):
        if not 0.0 <= usefulness <= 1.0:
            raise ContractViolation("Task %s usefulness %r outside [0,1]" % (taskId, usefulness))
        if work <= 0:
            raise ContractViolation("Task %s needs positive work, got %r" % (taskId, work))
        self.taskId = taskId
        self.subset = tuple(subset)
        self.usefulness = float(usefulness)
        self.requiredFragments = frozenset(requiredFragments)
        self.work = float(work)
        self.remaining = float(work)
        self.arrival = arrival
        self.state = PENDING
        self.node = None
        self.cpu = 0.0
        self.mem = 0.0
        self.wait = 0
        self.lifetime = 0
        self.isSensor = isSensor
        self.sensorCpu = float(sensorCpu)

        if isSensor:
            self.priority = SENSOR_PRIORITY
        else:
            from FleetCore.Cluster.Scheduler import priority
            self.priority = priority(self.usefulness)

    @property
    def level(self):
        return self.priority // 100000000

    @property
    def active(self):
        return self.state in (PENDING, RUNNING)

    def subsetLabel(self):
        if self.isSensor:
            return "sensor"
        if not self.subset:
            return "-"
        return "+".join(str(a) for a in self.subset)


class ClusterState(object):
    def __init__(self, nodes, replicas):
        '''
        @type nodes: list
        @param nodes: Node objects, unique ids

        @type replicas: ReplicaStore
        @param replicas: Fragment placement
        '''
        ids = [n.nodeId for n in nodes]
        if len(set(ids)) != len(ids):
            raise ContractViolation("Node ids must be unique")
        self.nodes = OrderedDict((n.nodeId, n) for n in sorted(nodes, key=lambda n: n.nodeId))
        self.replicas = replicas
        self.tasks = []
        self.tick = 0
        self.lastClaimants = frozenset()

    def nodesIn(self, *states):
        return [n for n in self.nodes.values() if n.powerState in states]

    @property
    def cpuTotal(self):
        return sum(n.cpuCapacity for n in self.nodesIn(ON))

    @property
    def memTotal(self):
        return sum(n.memCapacity for n in self.nodesIn(ON))

    def tasksIn(self, *states):
        return [t for t in self.tasks if t.state in states]

    def retrainTasks(self, *states):
        return [t for t in self.tasksIn(*states) if not t.isSensor]

    def runningOn(self, nodeId):
        return [t for t in self.tasks if t.state == RUNNING and t.node == nodeId]

    def allocatedCpu(self, nodeId=None):
        if nodeId is not None:
            return sum(t.cpu for t in self.runningOn(nodeId))
        return sum(t.cpu for t in self.tasksIn(RUNNING) if self.nodes[t.node].powerState == ON)

    def freeCpu(self, nodeId):
        return self.nodes[nodeId].cpuCapacity - self.allocatedCpu(nodeId)

    def fragmentsOf(self, nodeId):
        return self.replicas.fragmentsOf(nodeId)

    def submit(self, task):
        if any(t.taskId == task.taskId for t in self.tasks):
            raise ContractViolation("Duplicate task id %s" % task.taskId)
        self.tasks.append(task)
        return task
