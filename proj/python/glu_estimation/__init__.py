"""Python bindings for the distributed mixed time-scale estimation core."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import run_experiment_json as _run_experiment_json
from ._core import validate_config_json as _validate_config_json


def validate_config(config, base_dir=""):
    """Return a list of (condition, detail) violations for a config dict."""
    return _validate_config_json(_json.dumps(config), base_dir)


def run_experiment(config, base_dir="", write_files=False, threads=0):
    """Run a config dict and return the summary as a dict."""
    text = _run_experiment_json(_json.dumps(config), base_dir, write_files, threads)
    return _json.loads(text)
