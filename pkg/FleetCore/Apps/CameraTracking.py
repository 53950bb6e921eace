# encoding: utf-8
'''
CameraTracking -- Synthetic cross-camera target tracking application

Targets wander over a grid of cameras. Spatial and temporal correlations
between cameras are learned from one day of sightings; a query for a target
seen at one camera then searches only the cameras and time windows that
are correlated strongly enough with each match. The two pruning thresholds
play the part of the gate, the correlation matrices the part of the policy.

Time is sliced into half-minute slots; a search window spans two slots, so
consecutive windows overlap by half.

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

import bisect
import csv
import logging
import math
from collections import defaultdict

import numpy as np

from FleetCore.FleetError import ContextLoadError, ContractViolation
from FleetCore.FleetSpec import EvalPlug, EvalReport
from FleetCore.Parallel import derive_seed, map_ordered
from FleetCore.Shaping.BayesOpt import BoxSpace, bayes_optimize
from FleetCore.Shaping.RewardShaping import loss

logger = logging.getLogger("fleetsim.camera")

DAY_SECONDS = 86400
DEFAULT_WINDOW_MINUTES = 1
DEFAULT_HORIZON_WINDOWS = 10
DEFAULT_HOPS_PER_DAY = 12
DEFAULT_FRAME_WEIGHT = 0.1
DEFAULT_THRESHOLD_CANDIDATES = 64
DEFAULT_HISTORY_DAYS = 3
DEFAULT_RECALL_MARGIN = 0.15
FRAME_PERIOD = 5
FRAMES_PER_VISIT = 3
MIN_TRAVEL = 20
MAX_TRAVEL = 50
HEADING_CONCENTRATION = 2.0
HEADING_SPREAD = math.pi / 6

CAMERA_METRICS = ("accuracy", "precision", "frames_searched", "throughput", "parallel_frames", "speedup")
PORTO_COLUMNS = ("target_id", "timestamp", "lon", "lat")

# Grid moves as ((drow, dcol), heading), east first, counter-clockwise
HEADINGS = [((0, 1), 0.0), ((-1, 0), math.pi / 2), ((0, -1), math.pi), ((1, 0), 3 * math.pi / 2)]


class CameraGrid(object):
    '''Cameras pinned row-major on an evenly spaced, nearly square grid.'''
    def __init__(self, nCameras):
        if nCameras < 1:
            raise ContractViolation("Need at least one camera, got %d" % nCameras)
        self.nCameras = nCameras
        self.cols = int(math.ceil(math.sqrt(nCameras)))
        self.rows = int(math.ceil(nCameras / float(self.cols)))

    def check(self, camera):
        if not 0 <= camera < self.nCameras:
            raise ContractViolation("Unknown camera %r" % (camera,))

    def position(self, camera):
        self.check(camera)
        return divmod(camera, self.cols)

    def cameraAt(self, row, col):
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            return None
        camera = row * self.cols + col
        return camera if camera < self.nCameras else None

    def moves(self, camera):
        '''
        @rtype: list
        @return: (neighbor camera, heading) for every grid neighbor
        '''
        row, col = self.position(camera)
        result = []
        for (dr, dc), heading in HEADINGS:
            other = self.cameraAt(row + dr, col + dc)
            if other is not None:
                result.append((other, heading))
        return result


class DayData(object):
    '''
    One simulated day of sightings, indexed as frames. A frame is a
    (camera, timestamp) pair showing one or more targets.
    '''
    def __init__(self, grid, sightings, day=0):
        self.grid = grid
        self.day = day
        self.sightings = sorted(sightings)

        frames = defaultdict(set)
        targetFrames = defaultdict(list)
        for timestamp, camera, target in self.sightings:
            frames[(camera, timestamp)].add(target)
            targetFrames[target].append((timestamp, camera))
        self.frameTargets = dict((frame, frozenset(targets)) for frame, targets in frames.items())
        self.targetFrames = dict(targetFrames)

        times = defaultdict(list)
        for camera, timestamp in sorted(self.frameTargets):
            times[camera].append(timestamp)
        self.times = dict(times)

    def __len__(self):
        return len(self.frameTargets)

    def framesBetween(self, camera, lo, hi):
        '''Timestamps of the camera's frames in [lo, hi).'''
        times = self.times.get(camera, [])
        return times[bisect.bisect_left(times, lo):bisect.bisect_left(times, hi)]

    def frameCount(self, since):
        return sum(len(times) - bisect.bisect_left(times, since) for times in self.times.values())


class TrajectoryDataset(object):
    def __init__(self, grid, sightings, days, drift=0.0):
        '''
        @type grid: CameraGrid
        @param grid: Camera layout

        @type sightings: list
        @param sightings: (timestamp in seconds, camera, target) tuples

        @type days: int
        @param days: Number of simulated days; day d covers [d, d+1) * 86400 s
        '''
        if days < 1:
            raise ContractViolation("A trajectory dataset needs at least one day")
        self.grid = grid
        self.days = days
        self.drift = drift
        self.sightings = sorted(sightings)

        last = {}
        for timestamp, camera, target in self.sightings:
            grid.check(camera)
            if not 0 <= timestamp < days * DAY_SECONDS:
                raise ContractViolation("Sighting of target %s at %r lies outside %d days" % (target, timestamp, days))
            if target in last and timestamp <= last[target]:
                raise ContractViolation("Timestamps of target %s are not strictly increasing" % (target,))
            last[target] = timestamp

    @property
    def targets(self):
        return sorted(set(s[2] for s in self.sightings))

    def day(self, day):
        if not 0 <= day < self.days:
            raise ContractViolation("Day %d outside the dataset's %d days" % (day, self.days))
        lo, hi = day * DAY_SECONDS, (day + 1) * DAY_SECONDS
        return DayData(self.grid, [s for s in self.sightings if lo <= s[0] < hi], day)


def gen_trajectories(nCameras, nTargets, days, drift, seed, hopsPerDay=DEFAULT_HOPS_PER_DAY):
    '''
    Targets make one trip per day, a biased random walk over the camera grid.
    Every target's preferred heading scatters around a city-wide flow
    direction; the flow turns by drift quarter turns per day.

    @type drift: float
    @param drift: Daily rotation of the flow, in [0,1] quarter turns

    @rtype: TrajectoryDataset
    '''
    if nCameras < 1 or nTargets < 1 or days < 1 or hopsPerDay < 1:
        raise ContractViolation("Cameras, targets, days and hops must all be >= 1")
    if not 0.0 <= drift <= 1.0:
        raise ContractViolation("Drift must be in [0,1], got %r" % drift)

    grid = CameraGrid(nCameras)
    rng = np.random.default_rng(seed)
    flow = rng.uniform(0.0, 2 * math.pi)
    preferred = rng.normal(0.0, HEADING_SPREAD, nTargets)

    sightings = []
    for day in range(days):
        dayFlow = flow + drift * day * math.pi / 2
        for target in range(nTargets):
            heading = dayFlow + preferred[target]
            timestamp = day * DAY_SECONDS + int(rng.integers(0, DAY_SECONDS // 2))
            camera = int(rng.integers(nCameras))
            for _ in range(hopsPerDay):
                for k in range(FRAMES_PER_VISIT):
                    sightings.append((timestamp + k * FRAME_PERIOD, camera, target))
                timestamp += (FRAMES_PER_VISIT - 1) * FRAME_PERIOD + int(rng.integers(MIN_TRAVEL, MAX_TRAVEL + 1))

                moves = grid.moves(camera)
                if not moves:
                    continue
                bias = np.exp(HEADING_CONCENTRATION * np.cos(heading - np.array([h for _, h in moves])))
                camera = moves[int(rng.choice(len(moves), p=bias / bias.sum()))][0]

    return TrajectoryDataset(grid, sightings, days, drift)


def load_porto_csv(path, grid, bbox=None):
    '''
    Read a Porto-style trajectory CSV (target_id,timestamp,lon,lat) and snap
    every position onto the camera grid. Timestamps are seconds; the day
    containing the earliest one becomes day 0.

    @type bbox: tuple
    @param bbox: (min lon, min lat, max lon, max lat), defaults to the data extent

    @rtype: TrajectoryDataset
    '''
    rows = []
    with open(path, newline='') as f:
        reader = csv.DictReader(f)
        missing = [c for c in PORTO_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ContextLoadError("Trajectory file %s lacks columns: %s" % (path, ", ".join(missing)))
        for lineno, row in enumerate(reader, 2):
            try:
                rows.append((row["target_id"], float(row["timestamp"]), float(row["lon"]), float(row["lat"])))
            except (TypeError, ValueError):
                raise ContextLoadError("Line %d of %s has a non-numeric timestamp or position" % (lineno, path))
    if not rows:
        raise ContextLoadError("Trajectory file %s has no rows" % path)

    if bbox is None:
        bbox = (min(r[2] for r in rows), min(r[3] for r in rows), max(r[2] for r in rows), max(r[3] for r in rows))
    minLon, minLat, maxLon, maxLat = bbox
    spanLon = maxLon - minLon
    spanLat = maxLat - minLat

    def snap(lon, lat):
        col = int((lon - minLon) / spanLon * grid.cols) if spanLon > 0 else 0
        row = int((maxLat - lat) / spanLat * grid.rows) if spanLat > 0 else 0
        col = min(max(col, 0), grid.cols - 1)
        row = min(max(row, 0), grid.rows - 1)
        return min(row * grid.cols + col, grid.nCameras - 1)

    targetIds = dict((t, idx) for idx, t in enumerate(sorted(set(r[0] for r in rows))))
    dayStart = math.floor(min(r[1] for r in rows) / DAY_SECONDS) * DAY_SECONDS

    sightings = []
    last = {}
    duplicates = 0
    for targetId, timestamp, lon, lat in sorted(rows, key=lambda r: (targetIds[r[0]], r[1])):
        target = targetIds[targetId]
        second = int(round(timestamp - dayStart))
        if target in last and second <= last[target]:
            duplicates += 1
            continue
        last[target] = second
        sightings.append((second, snap(lon, lat), target))

    if duplicates:
        logger.warning("Dropped %d trajectory points with repeated timestamps from %s", duplicates, path)
    days = max(s[0] for s in sightings) // DAY_SECONDS + 1
    return TrajectoryDataset(grid, sightings, days)


class CorrelationModel(object):
    def __init__(self, spatial, temporal, stride, spatialThreshold=0.0, temporalThreshold=0.0):
        '''
        @type spatial: numpy.ndarray
        @param spatial: Handoff probability from camera i to camera j, unit diagonal

        @type temporal: dict
        @param temporal: (i, j) -> handoff offset mass per slot

        @type stride: float
        @param stride: Slot length in seconds, half a search window

        @type spatialThreshold: float
        @param spatialThreshold: Cameras below this correlation are not searched

        @type temporalThreshold: float
        @param temporalThreshold: Offset slots below this mass are not searched; 0 searches to the end of day
        '''
        spatial = np.asarray(spatial, dtype=float)
        if spatial.ndim != 2 or spatial.shape[0] != spatial.shape[1]:
            raise ContractViolation("Spatial correlations must be a square matrix")
        if spatial.min() < 0.0 or spatial.max() > 1.0 or not np.all(np.diag(spatial) == 1.0):
            raise ContractViolation("Spatial correlations must lie in [0,1] with a unit diagonal")
        if spatialThreshold < 0 or temporalThreshold < 0:
            raise ContractViolation("Tracking thresholds must be non-negative")
        if stride <= 0:
            raise ContractViolation("Slot length must be positive")
        self.spatial = spatial
        self.temporal = temporal
        self.stride = float(stride)
        self.spatialThreshold = float(spatialThreshold)
        self.temporalThreshold = float(temporalThreshold)

    @property
    def nCameras(self):
        return len(self.spatial)

    def withThresholds(self, spatialThreshold, temporalThreshold):
        return CorrelationModel(self.spatial, self.temporal, self.stride, spatialThreshold, temporalThreshold)

    def slotOf(self, timestamp):
        return int(math.floor(timestamp / self.stride))

    def searchPlan(self, camera, timestamp):
        '''
        Where to look after the target was seen at camera at timestamp.

        @rtype: list
        @return: (camera, first slot, last slot) ranges; a last slot of None
                 means up to the end of the day
        '''
        k0 = self.slotOf(timestamp)
        plan = [(camera, k0, k0 + 1)]
        toEndOfDay = self.temporalThreshold <= 0.0
        if toEndOfDay:
            plan.append((camera, k0, None))

        for other in range(self.nCameras):
            if other == camera or self.spatial[camera, other] < self.spatialThreshold:
                continue
            if toEndOfDay:
                plan.append((other, k0, None))
                continue
            mass = self.temporal.get((camera, other))
            if mass is None:
                continue
            for b in np.flatnonzero(mass >= self.temporalThreshold):
                plan.append((other, k0 + int(b), k0 + int(b) + 1))
        return plan

    def toJSONObject(self):
        return {
            "spatial": self.spatial.tolist(),
            "temporal": [{"from": i, "to": j, "mass": [float(v) for v in mass]}
                         for (i, j), mass in sorted(self.temporal.items())],
            "stride": self.stride,
            "thresholds": {"spatial": self.spatialThreshold, "temporal": self.temporalThreshold},
        }


def build_correlations(dayData, windowMinutes=DEFAULT_WINDOW_MINUTES, cameras=None,
                       horizonWindows=DEFAULT_HORIZON_WINDOWS):
    '''
    Learn camera correlations from one or more days of sightings. A handoff
    is a target's move from camera i to a different camera j between two
    consecutive sightings on the same day. C[i][j] is the share of handoffs
    leaving i that reach j within the horizon; the offsets of those handoffs
    are binned into half-window slots.

    @type dayData: DayData or list
    @param dayData: A day, or several days pooled into one model

    @type cameras: set
    @param cameras: Only learn the rows of these cameras (one aggregator's share)

    @rtype: CorrelationModel
    '''
    days = [dayData] if isinstance(dayData, DayData) else list(dayData)
    if not sum(len(d) for d in days):
        raise ContractViolation("Cannot build correlations from days without sightings")
    if windowMinutes <= 0 or horizonWindows < 1:
        raise ContractViolation("Window length and horizon must be positive")

    stride = windowMinutes * 60.0 / 2.0
    bins = 2 * horizonWindows
    n = days[0].grid.nCameras
    departures = np.zeros(n)
    handoffs = np.zeros((n, n))
    offsets = defaultdict(lambda: np.zeros(bins))

    for day in days:
        for target in sorted(day.targetFrames):
            frames = day.targetFrames[target]
            for (t1, i), (t2, j) in zip(frames, frames[1:]):
                if i == j or (cameras is not None and i not in cameras):
                    continue
                departures[i] += 1
                b = int((t2 - t1) // stride)
                if b < bins:
                    handoffs[i, j] += 1
                    offsets[(i, j)][b] += 1

    spatial = np.zeros((n, n))
    seen = departures > 0
    spatial[seen] = handoffs[seen] / departures[seen][:, None]
    np.fill_diagonal(spatial, 1.0)
    temporal = dict((pair, mass / mass.sum()) for pair, mass in sorted(offsets.items()))
    return CorrelationModel(spatial, temporal, stride)


def partition_cameras(nCameras, nAgents):
    '''Contiguous blocks of camera ids, one per agent.'''
    if not 1 <= nAgents <= nCameras:
        raise ContractViolation("%d agents cannot share %d cameras" % (nAgents, nCameras))
    return [frozenset(int(c) for c in block) for block in np.array_split(np.arange(nCameras), nAgents)]


def combine_correlations(parts, owners):
    '''Assemble one model from aggregators that each learned the rows of their own cameras.'''
    n = parts[0].nCameras
    spatial = np.eye(n)
    temporal = {}
    for part, cameras in zip(parts, owners):
        for i in cameras:
            spatial[i] = part.spatial[i]
        temporal.update((pair, mass) for pair, mass in part.temporal.items() if pair[0] in cameras)
    return CorrelationModel(spatial, dict(sorted(temporal.items())), parts[0].stride)


def build_aggregated(dayData, nAgents, windowMinutes=DEFAULT_WINDOW_MINUTES, threads=1):
    days = [dayData] if isinstance(dayData, DayData) else list(dayData)
    if not days:
        raise ContractViolation("Correlations need at least one day")
    owners = partition_cameras(days[0].grid.nCameras, nAgents)
    parts = map_ordered(build_correlations, [(days, windowMinutes, cameras) for cameras in owners], threads)
    return combine_correlations(parts, owners)


class QueryResult(object):
    def __init__(self, camera, timestamp, target, returned, framesSearched, horizonFrames, truthCount, agent=0):
        self.camera = camera
        self.timestamp = timestamp
        self.target = target
        self.returned = returned
        self.framesSearched = framesSearched
        self.horizonFrames = horizonFrames
        self.truthCount = truthCount
        self.agent = agent

    @property
    def recall(self):
        return len(self.returned) / float(self.truthCount)

    @property
    def precision(self):
        return len(self.returned) / float(self.framesSearched)


def track_query(camera, timestamp, target, model, dayData, agent=0):
    '''
    Find every frame of a target after a sighting, following each match
    recursively through the correlated cameras and windows. Each frame is
    inspected at most once, which also bounds the recursion.

    @rtype: QueryResult
    '''
    dayData.grid.check(camera)
    if model.nCameras != dayData.grid.nCameras:
        raise ContractViolation("Model covers %d cameras, the day %d" % (model.nCameras, dayData.grid.nCameras))
    if target not in dayData.frameTargets.get((camera, timestamp), ()):
        raise ContractViolation("Target %s is not in frame (%d, %r)" % (target, camera, timestamp))

    stride = model.stride
    start = model.slotOf(timestamp)
    seen = set()
    tails = {}
    found = set([(camera, timestamp)])
    frontier = [(camera, timestamp)]

    while frontier:
        matchCamera, matchTime = frontier.pop()
        for other, first, last in model.searchPlan(matchCamera, matchTime):
            lo = first * stride
            if last is None:
                done = tails.get(other)
                if done is not None and done <= lo:
                    continue
                hi = done if done is not None else float("inf")
                tails[other] = lo
            else:
                hi = (last + 1) * stride
            for ts in dayData.framesBetween(other, lo, hi):
                frame = (other, ts)
                if frame in seen:
                    continue
                seen.add(frame)
                if target in dayData.frameTargets[frame] and frame not in found:
                    found.add(frame)
                    frontier.append(frame)

    truth = [f for f in dayData.targetFrames[target] if model.slotOf(f[0]) >= start]
    returned = sorted(found)
    return QueryResult(camera, timestamp, target, returned, len(seen), dayData.frameCount(start * stride),
                       len(truth), agent)


def make_queries(dayData):
    '''One query per target, at its first sighting of the day.'''
    queries = []
    for target in sorted(dayData.targetFrames):
        timestamp, camera = dayData.targetFrames[target][0]
        queries.append((camera, timestamp, target))
    return queries


def evaluate_queries(queries, model, dayData, nAgents=1):
    owner = {}
    for agent, cameras in enumerate(partition_cameras(dayData.grid.nCameras, nAgents)):
        owner.update((c, agent) for c in cameras)
    return [track_query(camera, timestamp, target, model, dayData, owner[camera])
            for camera, timestamp, target in queries]


def camera_eval(results):
    '''
    Score one day of queries. Accuracy is the mean recall. Throughput
    compares the frames an exhaustive search would inspect with the frames
    actually inspected. Agents answer their cameras' queries in parallel, so
    the busiest agent bounds the day.

    @rtype: EvalReport
    '''
    if not results:
        raise ContractViolation("Camera Eval needs at least one query")
    searched = sum(r.framesSearched for r in results)
    horizon = sum(r.horizonFrames for r in results)
    perAgent = defaultdict(int)
    for r in results:
        perAgent[r.agent] += r.framesSearched
    busiest = max(perAgent.values())

    metrics = {
        "accuracy": float(np.mean([r.recall for r in results])),
        "precision": float(np.mean([r.precision for r in results])),
        "frames_searched": searched / float(len(results)),
        "throughput": horizon / float(searched),
        "parallel_frames": float(busiest),
        "speedup": searched / float(busiest),
    }
    return EvalReport(True, metrics)


class CameraEval(EvalPlug):
    '''The query results of a day stand in for the feature space.'''
    metricNames = CAMERA_METRICS

    def evaluate(self, featureSpace, perf, context, finished):
        return camera_eval(featureSpace)


def camera_loss(goals, report, frameWeight=DEFAULT_FRAME_WEIGHT):
    '''Goal hinge plus a small charge for every inspected frame relative to exhaustive search.'''
    return loss(goals, report) + frameWeight / report.metrics["throughput"]


def tune_thresholds(dayData, model, goals, epochs, seed, nAgents=1, nCandidates=DEFAULT_THRESHOLD_CANDIDATES,
                    frameWeight=DEFAULT_FRAME_WEIGHT, start=None, pool=None):
    '''
    Search the (spatial, temporal) threshold box with the shared Bayesian
    optimization loop, starting from exhaustive search unless told otherwise.

    @rtype: tuple
    @return: (tuned CorrelationModel, OptimizationResult)
    '''
    goals.validate(CAMERA_METRICS)
    queries = make_queries(dayData)
    space = BoxSpace([[0.0, 1.0], [0.0, 1.0]], start=start if start is not None else [0.0, 0.0])

    def objective(candidate):
        tuned = model.withThresholds(float(candidate[0]), float(candidate[1]))
        report = camera_eval(evaluate_queries(queries, tuned, dayData, nAgents))
        return camera_loss(goals, report, frameWeight), goals.allMet(report)

    result = bayes_optimize(objective, space, epochs, seed, nCandidates, pool=pool, label="thresholds")
    best = result.candidate
    logger.info("[Day %d] thresholds spatial %.3f temporal %.3f (loss %.6f)", dayData.day, best[0], best[1],
                result.bestLoss)
    return model.withThresholds(float(best[0]), float(best[1])), result


CAMERA_CAMPAIGN_COLUMNS = ["day", "retrained_accuracy", "frozen_accuracy", "retrained_frames", "frozen_frames",
                           "retrained_speedup", "spatial_threshold", "temporal_threshold"]


class CameraCampaignResult(object):
    def __init__(self, tunedReport, rows):
        self.tunedReport = tunedReport
        self.rows = rows

    @property
    def tunedRecall(self):
        return self.tunedReport.metrics["accuracy"]

    def column(self, name):
        idx = CAMERA_CAMPAIGN_COLUMNS.index(name)
        return [float(row[idx]) for row in self.rows]


def camera_campaign(dataset, goals, nAgents=1, epochs=8, seed=0, windowMinutes=DEFAULT_WINDOW_MINUTES,
                    nCandidates=DEFAULT_THRESHOLD_CANDIDATES, frameWeight=DEFAULT_FRAME_WEIGHT, threads=1,
                    historyDays=DEFAULT_HISTORY_DAYS, recallMargin=DEFAULT_RECALL_MARGIN, pool=None):
    '''
    Learn from the first historyDays days (fewer if the dataset is short)
    and tune on the last of them, then fly every following day twice: with
    that model frozen, and with a model that nAgents aggregators rebuild
    after every day from the last historyDays days. The retrained thresholds
    aim recallMargin above the recall goal, since the history rarely shows
    every handoff the next day needs.

    @type historyDays: int
    @param historyDays: Days of sightings behind every rebuilt model

    @type recallMargin: float
    @param recallMargin: Extra recall asked of the retrained thresholds, capped at 1

    @type pool: list
    @param pool: Optional finite list of (spatial, temporal) threshold candidates

    @rtype: CameraCampaignResult
    '''
    if dataset.days < 2:
        raise ContractViolation("A camera campaign needs at least two days")
    if historyDays < 1:
        raise ContractViolation("Rebuilt models need at least one day of history, got %d" % historyDays)

    history = [dataset.day(day) for day in range(min(historyDays, dataset.days - 1))]
    tuneDay = history[-1]
    model0 = build_aggregated(history, nAgents, windowMinutes, threads)
    frozen, _ = tune_thresholds(tuneDay, model0, goals, epochs, derive_seed(seed, 0), nAgents, nCandidates,
                                frameWeight, pool=pool)
    tunedReport = camera_eval(evaluate_queries(make_queries(tuneDay), frozen, tuneDay, nAgents))

    retrainGoals = goals.tightened("accuracy", recallMargin, 1.0)
    current = frozen
    if recallMargin > 0:
        current, _ = tune_thresholds(tuneDay, model0, retrainGoals, epochs, derive_seed(seed, 0, 1), nAgents,
                                     nCandidates, frameWeight, start=[frozen.spatialThreshold,
                                                                      frozen.temporalThreshold], pool=pool)

    rows = []
    for day in range(len(history), dataset.days):
        today = dataset.day(day)
        queries = make_queries(today)
        if not queries:
            logger.warning("[Day %d] no sightings, skipped", day)
            continue

        frozenReport = camera_eval(evaluate_queries(queries, frozen, today, nAgents))
        retrainedReport = camera_eval(evaluate_queries(queries, current, today, nAgents))
        r, f = retrainedReport.metrics, frozenReport.metrics
        rows.append([day, repr(r["accuracy"]), repr(f["accuracy"]), repr(r["frames_searched"]),
                     repr(f["frames_searched"]), repr(r["speedup"]), repr(current.spatialThreshold),
                     repr(current.temporalThreshold)])
        logger.info("[Day %d] recall retrained %.4f frozen %.4f", day, r["accuracy"], f["accuracy"])

        history = (history + [today])[-historyDays:]
        rebuilt = build_aggregated(history, nAgents, windowMinutes, threads)
        current, _ = tune_thresholds(today, rebuilt, retrainGoals, epochs, derive_seed(seed, day), nAgents,
                                     nCandidates, frameWeight, start=[current.spatialThreshold,
                                                                      current.temporalThreshold], pool=pool)
        logger.debug("[Day %d] rebuilt from days %d-%d", day, history[0].day, today.day)

    return CameraCampaignResult(tunedReport, rows)


def write_camera_campaign(result, path):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(CAMERA_CAMPAIGN_COLUMNS)
        writer.writerows(result.rows)
