# encoding: utf-8
'''
ExecutionContext -- A fully explored, replayable grid world

Each cell carries k raw sensor channels and a hidden ground truth value that
only Eval and the test harness may look at. Contexts are stored as JSON:

    {"context_id": ..., "width": w, "height": h, "channels": k,
     "cells": [[ch0, ..., chk-1], ...],      # row-major, w*h entries
     "ground_truth": [[...], ...]}           # h rows of w values

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

import json
import math
import numbers

import numpy as np

from FleetCore import JSONHelper
from FleetCore.FleetError import ContextLoadError, ContractViolation


class ExecutionContext(object):
    def __init__(self, contextId, cells, groundTruth):
        '''
        @type contextId: string
        @param contextId: Identifier

        @type cells: numpy.ndarray
        @param cells: Raw channels, shape (height, width, k)

        @type groundTruth: numpy.ndarray
        @param groundTruth: Hidden per-cell value, shape (height, width)
        '''
        cells = np.asarray(cells, dtype=float)
        groundTruth = np.asarray(groundTruth, dtype=float)
        if cells.ndim != 3:
            raise ContractViolation("Context cells must have shape (height, width, channels)")
        if groundTruth.shape != cells.shape[:2]:
            raise ContractViolation("Ground truth shape %s does not match grid %s" %
                                    (groundTruth.shape, cells.shape[:2]))
        if cells.shape[0] < 1 or cells.shape[1] < 1:
            raise ContractViolation("Context grid must be at least 1x1")

        self.contextId = contextId
        self.cells = cells
        self.groundTruth = groundTruth

    @property
    def height(self):
        return self.cells.shape[0]

    @property
    def width(self):
        return self.cells.shape[1]

    @property
    def channels(self):
        return self.cells.shape[2]

    @property
    def stateCount(self):
        return self.width * self.height

    def record(self, state):
        return self.cells[state[0], state[1]]

    def states(self):
        return [(r, c) for r in range(self.height) for c in range(self.width)]

    def toJSONObject(self):
        return {
            "context_id": self.contextId,
            "width": self.width,
            "height": self.height,
            "channels": self.channels,
            "cells": self.cells.reshape(-1, self.channels).tolist(),
            "ground_truth": self.groundTruth.tolist(),
        }

    @staticmethod
    def fromJSONObject(obj):
        '''
        Validate and decode a context object. Every failure is reported as a
        ContextLoadError naming the offending field or cell.
        '''
        contextId = JSONHelper.getStringChecked(obj, "context_id", True, ContextLoadError)
        width = JSONHelper.getIntegerChecked(obj, "width", True, ContextLoadError)
        height = JSONHelper.getIntegerChecked(obj, "height", True, ContextLoadError)
        channels = JSONHelper.getIntegerChecked(obj, "channels", True, ContextLoadError)
        cells = JSONHelper.getArrayChecked(obj, "cells", True, ContextLoadError)
        truth = JSONHelper.getArrayChecked(obj, "ground_truth", True, ContextLoadError)

        if width < 1 or height < 1:
            raise ContextLoadError("Field width/height must be >= 1, got %dx%d" % (width, height))
        if channels < 1:
            raise ContextLoadError("Field channels must be >= 1, got %d" % channels)
        if len(cells) != width * height:
            raise ContextLoadError("Field cells has %d entries, expected %d" % (len(cells), width * height))
        if len(truth) != height:
            raise ContextLoadError("Field ground_truth has %d rows, expected %d" % (len(truth), height))

        for idx, cell in enumerate(cells):
            row, col = divmod(idx, width)
            if not isinstance(cell, list) or len(cell) != channels:
                raise ContextLoadError("Cell (%d,%d) must have %d channels" % (row, col, channels))
            for ch, val in enumerate(cell):
                if not _isFiniteNumber(val):
                    raise ContextLoadError("Cell (%d,%d) channel %d is not a finite number" % (row, col, ch))

        for row, values in enumerate(truth):
            if not isinstance(values, list) or len(values) != width:
                raise ContextLoadError("Field ground_truth row %d must have %d values" % (row, width))
            for col, val in enumerate(values):
                if not _isFiniteNumber(val):
                    raise ContextLoadError("Field ground_truth at (%d,%d) is not a finite number" % (row, col))

        cellArray = np.array(cells, dtype=float).reshape(height, width, channels)
        return ExecutionContext(contextId, cellArray, np.array(truth, dtype=float))


def _isFiniteNumber(val):
    return isinstance(val, numbers.Real) and not isinstance(val, bool) and math.isfinite(val)


def load_context(path):
    '''
    Load a context from a JSON file.

    @type path: string
    @param path: File to read

    @rtype: ExecutionContext
    '''
    try:
        with open(path) as f:
            obj = json.load(f)
    except (IOError, OSError) as e:
        raise ContextLoadError("Unable to read context file %s: %s" % (path, e))
    except ValueError as e:
        raise ContextLoadError("Invalid JSON in context file %s: %s" % (path, e))
    return ExecutionContext.fromJSONObject(obj)


def save_context(context, path):
    with open(path, 'w') as f:
        json.dump(context.toJSONObject(), f)
