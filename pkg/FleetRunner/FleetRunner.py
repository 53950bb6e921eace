#!/usr/bin/env python
# encoding: utf-8
'''
FleetRunner -- FleetSim command line

Shapes rewards, flies single missions, runs online-learning campaigns and
the matched-seed comparison bench for the crop scouting and camera
tracking applications. Every command writes one result bundle into the
output directory.

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

# Ensure print() compatibility with Python 3
from __future__ import print_function

import argparse
import functools
import logging
import sys

import numpy as np

from FleetCore.Apps.CameraTracking import CAMERA_CAMPAIGN_COLUMNS, build_aggregated, camera_campaign, camera_eval, \
    evaluate_queries, make_queries, tune_thresholds, write_camera_campaign
from FleetCore.Cluster.Autoscaler import write_energy_trace
from FleetCore.Cluster.Scheduler import write_scheduler_trace
from FleetCore.FleetError import ConfigError, ContextLoadError, ContractViolation, InvariantViolation
from FleetCore.Mission.Baselines import baseline_classic_rl
from FleetCore.Mission.Campaign import automated_to_goals, run_bench, run_campaign, write_bench
from FleetCore.Mission.MissionSim import run_mission, write_trace_csv
from FleetCore.Models.QTable import QTable
from FleetCore.Parallel import derive_seed, thread_cap
from FleetCore.Shaping.RewardShaping import build_reward, retrain_sa, write_loss_history, write_manifest, \
    write_result
from FleetRunner.MissionConfig import MissionConfig
from Reporter.Reporter import Reporter, write_csv, write_json

__all__ = []
__version__ = 0.1
__date__ = '2026-03-02'
__updated__ = '2026-03-02'

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GOALS_UNMET = 3
EXIT_INVARIANT = 4

CAMPAIGN_SUMMARY_COLUMNS = ["mission", "accuracy", "steps", "agent_energy", "edge_energy", "loss"]
QUERY_COLUMNS = ["camera", "timestamp", "target", "agent", "frames_searched", "horizon_frames", "recall",
                 "precision"]


class BundleReporter(Reporter):
    '''
    A bundle is a list of (file name, writer) pairs; each writer takes the
    full path of its file.
    '''
    def emit(self, result):
        for name, write in result:
            write(self.path(name))
        return [name for name, _ in result]


def _exit_for(goals, report):
    return EXIT_OK if goals.allMet(report) else EXIT_GOALS_UNMET


def _cluster_bundle(cluster):
    if cluster is None:
        return []
    return [("scheduler_trace.csv", functools.partial(write_scheduler_trace, cluster.schedulerRows)),
            ("energy_trace.csv", functools.partial(write_energy_trace, cluster.ledger))]


def _table_writer(table):
    def write(path):
        with open(path, 'w') as f:
            f.write(table.toJSON())
    return write


def _require_reward(config):
    spec, table = config.rewardSpec()
    if spec is None:
        raise ConfigError('This command needs a reward: set "reward" or "reward_file" (e.g. a shaping manifest)')
    return spec, table


def cmd_shape(config, reporter, opts):
    threads = thread_cap(reporter.threads)

    if config.app == "camera":
        c = config.camera
        goals = config.cameraGoals()
        day = config.trajectories().day(0)
        model = build_aggregated(day, config.agents, c["window_minutes"], threads)
        tuned, result = tune_thresholds(day, model, goals, c["epochs"], config.seed, config.agents, c["candidates"],
                                        c["frame_weight"])
        obj = tuned.toJSONObject()
        obj["best_loss"] = result.bestLoss
        obj["goals_met"] = result.goalsMet
        reporter.publish([("camera_model.json", functools.partial(write_json, obj)),
                          ("loss_history.csv", functools.partial(write_loss_history, result))])
        return EXIT_OK if result.goalsMet else EXIT_GOALS_UNMET

    contexts = config.contexts()
    fleetspec = config.fleetspec(contexts)
    s = config.shaping
    result = build_reward(contexts["training"], fleetspec, s["epochs"], config.goals, config.seed, s["candidates"],
                          threads=threads)

    table = QTable()
    if s["retrain_episodes"] > 0:
        table = retrain_sa(table, contexts["retrain"], result.spec, s["retrain_episodes"], config.seed, fleetspec)

    reporter.publish([("shaping_result.json", functools.partial(write_result, result)),
                      ("loss_history.csv", functools.partial(write_loss_history, result)),
                      ("sa_table.json", _table_writer(table)),
                      ("manifest.json", lambda path: write_manifest(result, path, "sa_table.json"))])
    return EXIT_OK if result.goalsMet else EXIT_GOALS_UNMET


def cmd_run(config, reporter, opts):
    if config.app == "camera":
        c = config.camera
        goals = config.cameraGoals()
        day = config.trajectories().day(0)
        model = build_aggregated(day, config.agents, c["window_minutes"], thread_cap(reporter.threads))
        model = model.withThresholds(c["spatial_threshold"], c["temporal_threshold"])
        results = evaluate_queries(make_queries(day), model, day, config.agents)
        report = camera_eval(results)
        rows = [[r.camera, r.timestamp, r.target, r.agent, r.framesSearched, r.horizonFrames, repr(r.recall),
                 repr(r.precision)] for r in results]
        reporter.publish([("eval_report.json", functools.partial(write_json, report.toJSONObject())),
                          ("camera_queries.csv", functools.partial(write_csv, QUERY_COLUMNS, rows))])
        return _exit_for(goals, report)

    contexts = config.contexts()
    fleetspec = config.fleetspec(contexts)
    context = contexts["runtime"][0]
    featureCount = fleetspec.mapPlug.featureCount
    trace = None
    cluster = None

    if opts.baseline == "automated":
        report = automated_to_goals(fleetspec, context, fleetspec.nAgents)
    elif opts.baseline == "classic":
        _, table = config.rewardSpec()
        report, trace = baseline_classic_rl(fleetspec, config.seed, table, context)
    else:
        spec, table = _require_reward(config)
        factory = config.clusterFactory()
        cluster = factory(True) if factory is not None else None
        report, trace = run_mission(fleetspec, table, spec, cluster=cluster, seed=config.seed, context=context)

    bundle = [("eval_report.json", functools.partial(write_json, report.toJSONObject()))]
    if trace is not None:
        bundle.append(("mission_trace.csv", lambda path: write_trace_csv(trace, path, featureCount)))
    reporter.publish(bundle + _cluster_bundle(cluster))
    return _exit_for(config.goals, report)


def cmd_campaign(config, reporter, opts):
    threads = thread_cap(reporter.threads)

    if config.app == "camera":
        c = config.camera
        goals = config.cameraGoals()
        result = camera_campaign(config.trajectories(), goals, config.agents, c["epochs"], config.seed,
                                 c["window_minutes"], c["candidates"], c["frame_weight"], threads,
                                 historyDays=c["history_days"], recallMargin=c["recall_margin"])
        reporter.publish([("camera_campaign.csv", functools.partial(write_camera_campaign, result))])
        return _exit_for(goals, result.tunedReport)

    contexts = config.contexts()
    fleetspec = config.fleetspec(contexts)
    spec, table = _require_reward(config)
    factory = config.clusterFactory()
    cluster = factory(True) if factory is not None else None
    ol = config.onlineLearning
    result = run_campaign(fleetspec, config.missions, config.online, config.seed, spec, table, cluster,
                          config.aggregation, ol["bo_epochs"], ol["candidates"], threads)

    bundle = [("eval_report_%d.json" % idx, functools.partial(write_json, report.toJSONObject()))
              for idx, report in enumerate(result.reports)]
    bundle.append(("usefulness_history.json", functools.partial(write_json, result.usefulnessHistory())))
    bundle.append(("campaign_summary.csv",
                   functools.partial(write_csv, CAMPAIGN_SUMMARY_COLUMNS, result.summaryRows())))
    reporter.publish(bundle + _cluster_bundle(cluster))
    return _exit_for(config.goals, result.reports[-1])


def camera_bench_rows(config, threads):
    '''
    One camera campaign per seed, followed by the per-day means over all
    seeds.
    '''
    c = config.camera
    goals = config.cameraGoals()
    dataset = config.trajectories()
    rows = []
    perDay = {}
    for idx in range(config.seeds):
        result = camera_campaign(dataset, goals, config.agents, c["epochs"], derive_seed(config.seed, idx),
                                 c["window_minutes"], c["candidates"], c["frame_weight"], threads,
                                 historyDays=c["history_days"], recallMargin=c["recall_margin"])
        for row in result.rows:
            rows.append([idx] + row)
            perDay.setdefault(row[0], []).append([float(v) for v in row[1:]])
    for day in sorted(perDay):
        mean = np.mean(np.array(perDay[day]), axis=0)
        rows.append(["mean", day] + [repr(float(v)) for v in mean])
    return rows


def cmd_bench(config, reporter, opts):
    threads = thread_cap(reporter.threads)

    if config.app == "camera":
        rows = camera_bench_rows(config, threads)
        reporter.publish([("camera_bench.csv", functools.partial(write_csv, ["seed"] + CAMERA_CAMPAIGN_COLUMNS,
                                                                 rows))])
        return EXIT_OK

    contexts = config.contexts()
    fleetspec = config.fleetspec(contexts)
    spec, table = _require_reward(config)
    rows = run_bench(fleetspec, spec, config.seeds, config.seed, table, contexts["runtime"], config.clusterFactory(),
                     threads)
    reporter.publish([("bench.csv", lambda path: write_bench(rows, path))])
    return EXIT_OK


COMMANDS = {
    "shape": cmd_shape,
    "run": cmd_run,
    "campaign": cmd_campaign,
    "bench": cmd_bench,
}


def main(argv=None):
    '''Command line options.'''

    # setup argparser
    parser = argparse.ArgumentParser()

    parser.add_argument('--version', action='version', version='%s v%s (%s)' % (__file__, __version__, __updated__))

    # Actions
    action_group = parser.add_argument_group("Actions", "A single action must be selected.")
    actions = action_group.add_mutually_exclusive_group(required=True)
    actions.add_argument("--shape", dest="action", action="store_const", const="shape",
                         help="Search reward weights and gate thresholds on the training contexts")
    actions.add_argument("--run", dest="action", action="store_const", const="run",
                         help="Fly a single mission on the first runtime context")
    actions.add_argument("--campaign", dest="action", action="store_const", const="campaign",
                         help="Fly successive missions, optionally learning online between them")
    actions.add_argument("--bench", dest="action", action="store_const", const="bench",
                         help="Compare against the baselines over matched seeds")

    # Settings
    parser.add_argument("--config", help="Mission configuration file (JSON)", metavar="FILE", required=True)
    parser.add_argument("--seed", type=int, help="Root seed", metavar="N")
    parser.add_argument("--seeds", type=int, help="Number of bench seeds", metavar="N")
    parser.add_argument("--agents", type=int, help="Swarm size", metavar="N")
    parser.add_argument("--missions", type=int, help="Number of campaign missions", metavar="N")
    parser.add_argument("--online", dest="online", action="store_true", default=None,
                        help="Retrain and reweight models between campaign missions")
    parser.add_argument("--no-online", dest="online", action="store_false", help="Fly the base model only")
    parser.add_argument("--baseline", choices=["automated", "classic"], help="Fly a baseline instead (with --run)")
    parser.add_argument("--app", choices=["crop", "camera"], help="Application to run")
    parser.add_argument("--cluster", dest="cluster", action="store_true", default=None,
                        help="Simulate the edge cluster alongside missions")
    parser.add_argument("--no-cluster", dest="cluster", action="store_false", help="Disable the edge cluster")
    parser.add_argument("--out", help="Output directory", metavar="DIR")
    parser.add_argument("--verbose", action="store_true", help="Log debug messages")

    # process options
    opts = parser.parse_args(args=argv)

    if opts.baseline and opts.action != "run":
        parser.error("--baseline can only be used with --run")

    try:
        config = MissionConfig.fromFile(opts.config).override(opts)
        reporter = BundleReporter(config.out, verbose=True if opts.verbose else None)
        logging.basicConfig(format="%(levelname)s %(name)s: %(message)s",
                            level=logging.DEBUG if reporter.verbose else logging.INFO)
        if not reporter.outdir:
            raise ConfigError("Must specify an output directory (--out, \"out\" or outdir in ~/.fleetsimconf)")
        return COMMANDS[opts.action](config, reporter, opts)
    except (ConfigError, ContextLoadError, ContractViolation) as e:
        print("Error: %s" % e.message, file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as e:
        print("Error: %s" % e.message, file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
