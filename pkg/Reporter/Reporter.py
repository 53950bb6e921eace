# encoding: utf-8
'''
Reporter -- Abstract base class for all writers of FleetSim result bundles

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

from abc import ABCMeta, abstractmethod
import csv
import functools
import json
import logging
import os

from fasteners import InterProcessLock
import six

from FleetCore.ConfigurationFiles import ConfigurationFiles, globalConfigPath
from FleetCore.FleetError import ConfigError

logger = logging.getLogger("fleetsim.reporter")

LOCK_NAME = ".fleetsim.lock"


def output_checks(wrapped):
    '''Decorator to perform error checks before writing to the output directory'''
    @functools.wraps(wrapped)
    def decorator(self, *args, **kwargs):
        if not self.outdir:
            raise ConfigError("Must specify an output directory (configuration property: outdir) to write reports.")
        return wrapped(self, *args, **kwargs)
    return decorator


@six.add_metaclass(ABCMeta)
class Reporter():
    def __init__(self, outdir=None, threads=None, verbose=None, configFile=None):
        '''
        Initialize the Reporter. This constructor will also attempt to read
        the machine configuration file to populate any missing properties
        that have not been passed to this constructor.

        @type outdir: string
        @param outdir: Directory receiving the result bundle
        @type threads: int
        @param threads: Worker processes for parallel sections
        @type verbose: bool
        @param verbose: Log at debug level
        @type configFile: string
        @param configFile: Machine configuration file, defaults to ~/.fleetsimconf
        '''
        self.outdir = outdir
        self.threads = threads
        self.verbose = verbose

        configFile = configFile or globalConfigPath()
        if os.path.exists(configFile):
            configInstance = ConfigurationFiles([configFile])
            globalConfig = configInstance.mainConfig

            if self.outdir is None and "outdir" in globalConfig:
                self.outdir = globalConfig["outdir"]

            if self.threads is None:
                self.threads = configInstance.getInt("threads")

            if self.verbose is None and "verbose" in globalConfig:
                self.verbose = globalConfig["verbose"].strip().lower() in ("1", "yes", "true", "on")

        if self.threads is None:
            self.threads = 1
        if self.verbose is None:
            self.verbose = False

    @output_checks
    def path(self, name):
        return os.path.join(self.outdir, name)

    @output_checks
    def publish(self, result):
        '''
        Write the whole bundle for a result while holding the output
        directory lock, so concurrent runs never interleave their files.

        @rtype: list
        @return: Names of the written files
        '''
        if not os.path.isdir(self.outdir):
            os.makedirs(self.outdir)

        lock = InterProcessLock(os.path.join(self.outdir, LOCK_NAME))
        with lock:
            written = self.emit(result)
        logger.info("Wrote %s to %s", ", ".join(written), self.outdir)
        return written

    @abstractmethod
    def emit(self, result):
        '''
        Write the files of one result into the output directory. Called with
        the output directory lock held.

        @rtype: list
        @return: Names of the written files
        '''
        return


def write_json(obj, path):
    with open(path, 'w') as f:
        json.dump(obj, f, indent=2, sort_keys=True)


def write_csv(header, rows, path):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)
