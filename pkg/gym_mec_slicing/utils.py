"""
Auxiliary functions for building environments and experiments: config reading, the error types
shared by the environment and the learning code, seed stream splitting and logging setup.
"""
import hashlib
import json
import logging
import os
import warnings

import numpy as np


def read_config(config_path, config_dict=None):
    """
    Returns the parsed information from the config file and specific info can be passed or
    overwritten with the config_dict. Nested dictionaries (e.g. "topology", "schedule") are merged
    one level deep so that a single field can be overridden. Example of an override dict:

    {
        "num_slices": 5,
        "topology": {"snr": 20.0},
        "occupancy": {"mode": "one_slot"}
    }

    :param config_path: (str)  Path to a JSON file. Used as given if it exists, otherwise it is
                               taken relative to the root of this package.
    :param config_dict: (dict) Overrides specific fields from the input configuration file.
    """
    if not os.path.isfile(config_path):
        config_path = os.path.join(os.path.dirname(__file__), config_path)
    if os.path.isfile(config_path):
        with open(config_path) as f:
            config = json.load(f)
    else:
        raise ConfigError('No config file found at: {}. Exiting'.format(config_path))

    if config_dict:
        merge_config(config, config_dict)
    return config


def merge_config(config, config_dict):
    """ Overwrites config in place with config_dict, warning for every key that already existed """
    for key, value in config_dict.items():
        if isinstance(value, dict) and isinstance(config.get(key), dict):
            for inner_key, inner_value in value.items():
                if inner_key in config[key] and config[key][inner_key] != inner_value:
                    warnings.warn('Key: [\'{}\'][\'{}\'] already in config file with value {}. '
                                  'Overwriting with value: {}'.format(key, inner_key,
                                                                      config[key][inner_key],
                                                                      inner_value))
                config[key][inner_key] = inner_value
        elif key in config:
            if config[key] != value:
                warnings.warn('Key: {} already in config file with value {}. '
                              'Overwriting with value: {}'.format(key, config[key], value))
            config[key] = value
        # key is not in config file so therefore we add it
        else:
            config[key] = value
    return config


def config_hash(config):
    """ Short SHA-256 digest of the canonical JSON form of a config dict """
    canonical = json.dumps(config, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:16]


STREAM_NAMES = ('requests', 'init', 'noise', 'replay', 'eval')


def seed_streams(seed):
    """
    Splits one root seed into the independent named streams used by a session: request
    generation, network initialisation, exploration noise, replay sampling and the requests of
    evaluation runs. Each value is a
    np.random.SeedSequence, so the same root seed always reproduces every stream.
    """
    children = np.random.SeedSequence(seed).spawn(len(STREAM_NAMES))
    return dict(zip(STREAM_NAMES, children))


def stream_seed(seed_sequence):
    """ Integer seed derived from a SeedSequence, for APIs such as gym's reset(seed=...) """
    return int(seed_sequence.generate_state(1, dtype=np.uint32)[0])


def setup_logging(level='INFO'):
    """ ISO 8601 timestamped logger for command line runs """
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter('[%(asctime)s] %(name)s %(levelname)s: %(message)s',
                                           datefmt='%Y-%m-%dT%H:%M:%S'))
    root = logging.getLogger()
    root.handlers = [handler]
    root.setLevel(level)


class SlicingError(Exception):
    """
    Base error of this project. category and exit_code are what the command line reports.
    """
    category = 'ERROR'
    exit_code = 1


class ConfigError(SlicingError):
    """ Raised when a configuration is invalid or cannot be found """
    category = 'CONFIG'
    exit_code = 2


class OutputError(SlicingError):
    """ Raised when results cannot be written """
    category = 'IO'
    exit_code = 3


class CountError(SlicingError):
    """ Raised for an illegal change in the number of agents/slices """
    category = 'COUNT'
    exit_code = 4


class CheckpointMismatchError(SlicingError):
    """ Raised when stored agents do not fit the configured scenario """
    category = 'CHECKPOINT_MISMATCH'
    exit_code = 5


class ScenarioMismatchError(SlicingError):
    """ Raised when summaries from different scenarios are compared """
    category = 'MISMATCHED_SCENARIO'
    exit_code = 6


class DimensionMismatchError(SlicingError, ValueError):
    """ Raised when vector or parameter shapes do not line up """
    category = 'DIMENSION_MISMATCH'
    exit_code = 7


class UnknownSliceError(SlicingError, KeyError):
    """ Raised when asking for a slice that is not active """
    category = 'UNKNOWN_SLICE'
    exit_code = 8


class DomainError(SlicingError, ValueError):
    """ Raised when a model function is evaluated outside of its domain """
    category = 'DOMAIN'
    exit_code = 9


class UnservableError(SlicingError):
    """
    Raised when a request cannot be served with the given allocation. The environment catches it
    and turns it into a failed slice for that slot.
    """
    category = 'UNSERVABLE'
    exit_code = 10
