# encoding: utf-8
'''
MissionConfig -- JSON mission configuration of the FleetSim command line

One JSON file describes an experiment bundle: the application, goals,
contexts (or the parameters to generate them), learning and energy
settings, the edge cluster and the seeds. Relative file references are
resolved against the directory of the configuration file.

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

import functools
import json
import os

from FleetCore import JSONHelper
from FleetCore.Apps.CameraTracking import CAMERA_METRICS, CameraGrid, gen_trajectories, load_porto_csv
from FleetCore.Apps.CropScouting import crop_fleetspec, field_family
from FleetCore.Cluster.EdgeRuntime import make_edge_runtime
from FleetCore.ExecutionContext import load_context
from FleetCore.FleetError import ConfigError, ContractViolation
from FleetCore.FleetSpec import EnergyCosts, Goals, LearningParams
from FleetCore.Models.QTable import QTable
from FleetCore.Models.RewardSpec import RewardSpec
from FleetCore.Online.OnlineLearning import AGGREGATION_MODES, POWERSET
from FleetCore.Parallel import derive_seed

APPS = ("crop", "camera")
CONTEXT_SPLITS = ("training", "retrain", "runtime")

FIELD_DEFAULTS = {"width": 24, "height": 24, "smoothness": 0, "noise": 0.02, "count": 3, "drift": 0.1, "seed": 0}
SHAPING_DEFAULTS = {"epochs": 40, "candidates": 256, "retrain_episodes": 50}
ONLINE_DEFAULTS = {"bo_epochs": 5, "candidates": 256}
CAMERA_DEFAULTS = {"cameras": 16, "targets": 60, "days": 14, "drift": 0.1, "window_minutes": 1, "epochs": 8,
                   "candidates": 64, "frame_weight": 0.1, "seed": 0, "spatial_threshold": 0.0,
                   "temporal_threshold": 0.0, "history_days": 3, "recall_margin": 0.15}

# JSON key -> make_edge_runtime keyword
EDGE_KEYS = {
    "nodes": "nodeCount",
    "hubs": "hubCount",
    "cpu": "cpuCapacity",
    "memory": "memCapacity",
    "active_watts": "activeWatts",
    "idle_watts": "idleWatts",
    "replication": "replication",
    "min_share": "minShare",
    "sensor_cpu": "sensorCpu",
    "wake_latency": "wakeLatency",
}
EDGE_INTEGER_KEYS = ("nodes", "hubs", "replication", "wake_latency")


def _section(obj, key, defaults):
    '''Numeric section merged over its defaults; unknown keys are rejected.'''
    section = JSONHelper.getObjectChecked(obj, key, False, ConfigError) or {}
    unknown = sorted(k for k in section if k not in defaults)
    if unknown:
        raise ConfigError('Unknown keys in "%s": %s' % (key, ", ".join(unknown)))
    merged = dict(defaults)
    for name, default in defaults.items():
        if isinstance(default, int) and not isinstance(default, bool):
            val = JSONHelper.getIntegerChecked(section, name, False, ConfigError)
        else:
            val = JSONHelper.getNumberChecked(section, name, False, ConfigError)
        if val is not None:
            merged[name] = val
    return merged


class MissionConfig(object):
    def __init__(self, obj, baseDir="."):
        '''
        Validate a decoded configuration object field by field.

        @type obj: dict
        @param obj: Decoded JSON configuration

        @type baseDir: string
        @param baseDir: Directory relative file references are resolved against
        '''
        if not isinstance(obj, dict):
            raise ConfigError("Mission configuration must be a JSON object")
        self.baseDir = baseDir

        self.app = JSONHelper.getStringChecked(obj, "app", False, ConfigError) or "crop"
        if self.app not in APPS:
            raise ConfigError('Unknown app "%s", expected one of %s' % (self.app, ", ".join(APPS)))

        self.agents = self._positive(obj, "agents", 1)
        self.seed = JSONHelper.getIntegerChecked(obj, "seed", False, ConfigError) or 0
        self.seeds = self._positive(obj, "seeds", 10)
        self.missions = self._positive(obj, "missions", 10)
        online = JSONHelper.getBooleanChecked(obj, "online", False, ConfigError)
        self.online = True if online is None else online
        cluster = JSONHelper.getBooleanChecked(obj, "cluster", False, ConfigError)
        self.cluster = False if cluster is None else cluster
        self.out = self._path(JSONHelper.getStringChecked(obj, "out", False, ConfigError), mustExist=False)

        goals = JSONHelper.getArrayChecked(obj, "goals", True, ConfigError)
        try:
            self.goals = Goals.fromJSONObject(goals)
        except ContractViolation as e:
            raise ConfigError("Invalid goals: %s" % e.message)
        if not len(self.goals):
            raise ConfigError("At least one goal is required")

        contexts = JSONHelper.getObjectChecked(obj, "contexts", False, ConfigError) or {}
        self.contextFiles = {}
        for split in CONTEXT_SPLITS:
            paths = JSONHelper.getArrayChecked(contexts, split, False, ConfigError) or []
            self.contextFiles[split] = [self._path(p, "contexts.%s" % split) for p in paths]
        unknown = sorted(k for k in contexts if k not in CONTEXT_SPLITS)
        if unknown:
            raise ConfigError('Unknown context splits: %s' % ", ".join(unknown))

        self.field = _section(obj, "field", FIELD_DEFAULTS)
        self.tile = _section(obj, "tile", {"width": 3, "height": 3})
        self.shaping = _section(obj, "shaping", SHAPING_DEFAULTS)
        self.onlineLearning = _section(obj, "online_learning", ONLINE_DEFAULTS)
        self.camera = _section(obj, "camera", CAMERA_DEFAULTS)
        self.aggregation = JSONHelper.getStringChecked(obj, "aggregation", False, ConfigError) or POWERSET
        if self.aggregation not in AGGREGATION_MODES:
            raise ConfigError('Unknown aggregation "%s"' % self.aggregation)

        learning = _section(obj, "learning", {"alpha": 0.5, "gamma": 0.9, "epsilon": 0.1, "epsilon_decay": 0.95})
        energy = _section(obj, "energy", {"move": 55.0, "sense": 10.0, "idle": 5.0})
        try:
            self.learning = LearningParams(learning["alpha"], learning["gamma"], learning["epsilon"],
                                           learning["epsilon_decay"])
            self.energy = EnergyCosts(energy["move"], energy["sense"], energy["idle"])
        except ContractViolation as e:
            raise ConfigError(e.message)

        self.costWeights = _section(obj, "cost_weights", {"steps": 0.0, "energy": 0.0})
        self.energyBudget = JSONHelper.getNumberChecked(obj, "energy_budget", False, ConfigError)
        if self.costWeights["energy"] and not self.energyBudget:
            raise ConfigError("The energy cost weight needs an energy_budget")

        edge = JSONHelper.getObjectChecked(obj, "edge", False, ConfigError) or {}
        self.edge = {}
        for key, val in edge.items():
            if key not in EDGE_KEYS:
                raise ConfigError('Unknown key in "edge": %s' % key)
            if key in EDGE_INTEGER_KEYS:
                val = JSONHelper.getIntegerChecked(edge, key, True, ConfigError)
            else:
                val = JSONHelper.getNumberChecked(edge, key, True, ConfigError)
            self.edge[EDGE_KEYS[key]] = val

        self.reward = JSONHelper.getObjectChecked(obj, "reward", False, ConfigError)
        self.rewardFile = self._path(JSONHelper.getStringChecked(obj, "reward_file", False, ConfigError), "reward_file")
        if self.reward is not None and self.rewardFile is not None:
            raise ConfigError('Specify either "reward" or "reward_file", not both')

        self.trajectoryFile = self._path(JSONHelper.getStringChecked(obj, "trajectory_file", False, ConfigError),
                                         "trajectory_file")

    @staticmethod
    def fromFile(path):
        try:
            with open(path) as f:
                obj = json.load(f)
        except (IOError, OSError) as e:
            raise ConfigError("Unable to read configuration file %s: %s" % (path, e))
        except ValueError as e:
            raise ConfigError("Invalid JSON in configuration file %s: %s" % (path, e))
        return MissionConfig(obj, os.path.dirname(os.path.abspath(path)))

    @staticmethod
    def _positive(obj, key, default):
        val = JSONHelper.getIntegerChecked(obj, key, False, ConfigError)
        if val is None:
            return default
        if val < 1:
            raise ConfigError('"%s" must be >= 1, got %d' % (key, val))
        return val

    def _path(self, path, field=None, mustExist=True):
        if path is None:
            return None
        path = os.path.join(self.baseDir, path)
        if mustExist and not os.path.exists(path):
            raise ConfigError('File referenced by "%s" does not exist: %s' % (field, path))
        return path

    def override(self, opts):
        '''Flags win over file values. Unset flags are None.'''
        for name in ("agents", "seeds", "missions"):
            val = getattr(opts, name, None)
            if val is not None:
                if val < 1:
                    raise ConfigError("--%s must be >= 1, got %d" % (name, val))
                setattr(self, name, val)
        for name in ("seed", "online", "cluster", "app", "out"):
            val = getattr(opts, name, None)
            if val is not None:
                setattr(self, name, val)
        return self

    def contexts(self):
        '''
        Load the context splits, generating a drifting crop field family for
        every split that has no files.

        @rtype: dict
        '''
        result = {}
        f = self.field
        for idx, split in enumerate(CONTEXT_SPLITS):
            if self.contextFiles[split]:
                result[split] = [load_context(p) for p in self.contextFiles[split]]
            else:
                result[split] = field_family(f["width"], f["height"], f["smoothness"], derive_seed(f["seed"], idx),
                                             f["count"], f["drift"], f["noise"])
        return result

    def fleetspec(self, contexts=None):
        if self.app != "crop":
            raise ConfigError("The %s app has no mission FleetSpec" % self.app)
        costWeights = dict((k, v) for k, v in self.costWeights.items() if v)
        try:
            return crop_fleetspec(self.agents, self.goals, contexts if contexts is not None else self.contexts(),
                                  tileWidth=self.tile["width"], tileHeight=self.tile["height"],
                                  learning=self.learning, energy=self.energy, costWeights=costWeights,
                                  energyBudget=self.energyBudget)
        except ContractViolation as e:
            raise ConfigError(e.message)

    def rewardSpec(self):
        '''
        @rtype: tuple
        @return: (RewardSpec, SA table), or (None, empty table) without a reward
        '''
        table = QTable()
        if self.reward is not None:
            obj = self.reward
        elif self.rewardFile is not None:
            try:
                with open(self.rewardFile) as f:
                    obj = json.load(f)
            except ValueError as e:
                raise ConfigError("Invalid JSON in reward file %s: %s" % (self.rewardFile, e))
            # Deployment manifests wrap the reward and reference the SA table
            if "reward" in obj:
                tablePath = JSONHelper.getStringChecked(obj, "sa_table", False, ConfigError)
                obj = JSONHelper.getObjectChecked(obj, "reward", True, ConfigError)
                if tablePath:
                    tablePath = os.path.join(os.path.dirname(self.rewardFile), tablePath)
                    if not os.path.exists(tablePath):
                        raise ConfigError("SA table referenced by %s does not exist: %s" % (self.rewardFile, tablePath))
                    with open(tablePath) as f:
                        table = QTable.fromJSON(f.read())
        else:
            return None, table

        try:
            return RewardSpec.fromJSONObject(obj), table
        except ContractViolation as e:
            raise ConfigError("Invalid reward: %s" % e.message)

    def clusterFactory(self):
        '''autoscale flag -> fresh EdgeRuntime, or None with the cluster disabled'''
        if not self.cluster:
            return None
        return functools.partial(make_edge_runtime, **self.edge)

    def cameraGoals(self):
        try:
            self.goals.validate(CAMERA_METRICS)
        except ContractViolation as e:
            raise ConfigError(e.message)
        return self.goals

    def trajectories(self):
        c = self.camera
        if self.trajectoryFile is not None:
            return load_porto_csv(self.trajectoryFile, CameraGrid(c["cameras"]))
        return gen_trajectories(c["cameras"], c["targets"], c["days"], c["drift"], c["seed"])
