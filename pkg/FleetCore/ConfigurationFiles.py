#!/usr/bin/env python
# encoding: utf-8
'''
ConfigurationFiles -- Reads machine-level FleetSim defaults from INI files

The [Main] section holds runtime defaults (output directory, worker count,
verbosity). Mission semantics never live here, those come from the JSON
mission configuration.

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

# Ensure print() compatibility with Python 3
from __future__ import print_function
import os
import sys

from six.moves import configparser

from FleetCore.FleetError import ConfigError

KNOWN_SECTIONS = ["Main"]


class ConfigurationFiles():
    def __init__(self, configFiles):
        self.mainConfig = {}

        if configFiles:
            self.parser = configparser.ConfigParser()

            # Make sure keys are kept case-sensitive
            self.parser.optionxform = str

            try:
                self.parser.read(configFiles)
            except configparser.Error as e:
                raise ConfigError("Unable to parse configuration file: %s" % e)

            self.mainConfig = self.getSectionMap("Main")

            # Main vs. main is easy to get wrong, so complain loudly
            sections = [s for s in self.parser.sections() if s not in KNOWN_SECTIONS]
            if sections:
                print("Warning: Ignoring the following config file sections: %s" % " ".join(sections), file=sys.stderr)

    def getSectionMap(self, section):
        ret = {}
        try:
            options = self.parser.options(section)
        except configparser.NoSectionError:
            return {}
        for o in options:
            ret[o] = self.parser.get(section, o)
        return ret

    def getInt(self, key, default=None):
        '''
        Fetch an integer from the [Main] section.

        @type key: string
        @param key: Option name

        @type default: int
        @param default: Value returned if the option is absent

        @rtype: int
        @return: The parsed value
        '''
        if key not in self.mainConfig:
            return default
        try:
            return int(self.mainConfig[key])
        except ValueError:
            raise ConfigError('Option "%s" must be an integer, got "%s"' % (key, self.mainConfig[key]))


def globalConfigPath():
    return os.path.join(os.path.expanduser("~"), ".fleetsimconf")
