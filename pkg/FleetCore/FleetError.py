# encoding: utf-8
'''
FleetError -- Exception hierarchy shared by all FleetSim components

Every error carries a TYPE tag so that command line drivers can map failures
to exit codes without string matching.

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''


class FleetError(Exception):
    TYPE = 'unclassified'

    def __init__(self, message):
        super(FleetError, self).__init__(message)
        self.message = message

    def __str__(self):
        return '%s: %s (%s)' % (type(self).__name__, self.message, self.TYPE)


class ContractViolation(FleetError):
    TYPE = 'contract-violation'


class ContextLoadError(FleetError):
    TYPE = 'context-load-error'


class ConfigError(FleetError):
    TYPE = 'config-error'


class PlacementError(FleetError):
    TYPE = 'placement-error'


class InvariantViolation(FleetError):
    TYPE = 'invariant-violation'
