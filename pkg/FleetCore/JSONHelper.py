'''
JSONHelper

Type checked accessors for decoded JSON objects (contexts, configurations,
shaping results). Failures name the offending key.

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''

import math
import numbers

import six

from FleetCore.FleetError import ContractViolation


def getArrayChecked(obj, key, mandatory=False, errorClass=ContractViolation):
    '''
        Retrieve a list from the given object using the given key

        @type obj: map
        @param obj: Source object

        @type key: string
        @param key: Key to retrieve from obj

        @type mandatory: bool
        @param mandatory: If True, throws an exception if the key is not found

        @type errorClass: class
        @param errorClass: FleetError subclass raised on failure

        @rtype: list
        @return: List retrieved from object
    '''
    return __getTypeChecked(obj, key, [list], mandatory, errorClass)


def getStringChecked(obj, key, mandatory=False, errorClass=ContractViolation):
    '''
        Retrieve a string from the given object using the given key

        @rtype: string
        @return: String retrieved from object
    '''
    return __getTypeChecked(obj, key, [six.text_type, bytes], mandatory, errorClass)


def getIntegerChecked(obj, key, mandatory=False, errorClass=ContractViolation):
    '''
        Retrieve an integer from the given object using the given key.
        Booleans are rejected even though they are integral.

        @rtype: int
        @return: Integer retrieved from object
    '''
    val = __getTypeChecked(obj, key, [numbers.Integral], mandatory, errorClass)
    if isinstance(val, bool):
        raise errorClass('Expected integer for key "%s" but got a boolean' % key)
    return val


def getNumberChecked(obj, key, mandatory=False, errorClass=ContractViolation):
    '''
        Retrieve a finite real number from the given object using the given key

        @rtype: float
        @return: Number retrieved from object
    '''
    val = __getTypeChecked(obj, key, [numbers.Real], mandatory, errorClass)
    if val is None:
        return None
    if isinstance(val, bool):
        raise errorClass('Expected number for key "%s" but got a boolean' % key)
    if not math.isfinite(val):
        raise errorClass('Expected finite number for key "%s" but got %r' % (key, val))
    return val


def getBooleanChecked(obj, key, mandatory=False, errorClass=ContractViolation):
    '''
        Retrieve a boolean from the given object using the given key

        @rtype: bool
        @return: Boolean retrieved from object
    '''
    return __getTypeChecked(obj, key, [bool], mandatory, errorClass)


def getObjectChecked(obj, key, mandatory=False, errorClass=ContractViolation):
    '''
        Retrieve a nested object from the given object using the given key

        @rtype: dict
        @return: Object retrieved from object
    '''
    return __getTypeChecked(obj, key, [dict], mandatory, errorClass)


def getNumberOrStringChecked(obj, key, mandatory=False, errorClass=ContractViolation):
    '''
        Retrieve a number or string from the given object using the given key.
        Used for thresholds that accept "inf".

        @rtype: string or number
        @return: String/Number object retrieved from object
    '''
    return __getTypeChecked(obj, key, [six.text_type, bytes, numbers.Real], mandatory, errorClass)


def __getTypeChecked(obj, key, valTypes, mandatory, errorClass):
    if not isinstance(obj, dict):
        raise errorClass('Expected an object while looking up key "%s" but got type %s' % (key, type(obj)))

    if key not in obj:
        if mandatory:
            raise errorClass('Expected key "%s" in object' % key)
        return None

    val = obj[key]

    if isinstance(val, tuple(valTypes)):
        return val

    raise errorClass('Expected any of types "%s" for key "%s" but got type %s' %
                     (", ".join([str(i) for i in valTypes]), key, type(val)))
