# encoding: utf-8
'''
Parallel -- Ordered fan-out of independent simulations over worker processes

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

import multiprocessing
import os

import numpy as np

THREADS_ENV = "FLEETSIM_THREADS"


def thread_cap(configured=None):
    '''
    Number of worker processes to use. The environment variable wins over
    the configured value; anything below 1 means inline execution.
    '''
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    if configured:
        return max(1, int(configured))
    return 1


def map_ordered(func, argsList, threads=1):
    '''
    Apply func to every argument tuple and return the results in submission
    order, regardless of which worker finished first.

    @type func: callable
    @param func: Module-level (picklable) function

    @type argsList: list
    @param argsList: One argument tuple per call

    @type threads: int
    @param threads: Maximum number of worker processes

    @rtype: list
    @return: Results in the order of argsList
    '''
    if threads <= 1 or len(argsList) <= 1:
        return [func(*args) for args in argsList]

    pool = multiprocessing.Pool(min(threads, len(argsList)))
    try:
        pending = [pool.apply_async(func, args) for args in argsList]
        results = [p.get() for p in pending]
    finally:
        pool.close()
        pool.join()
    return results


def derive_seed(seed, *keys):
    '''
    Derive an independent, reproducible child seed from a root seed and a
    sequence of integer keys (mission index, context index, agent, ...).
    '''
    entropy = [int(seed)] + [int(k) for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])
