"""Python front end for the nematic Poiseuille-flow solver."""

import json

from ._nlc import (
    BlowupFamily,
    LeslieParams,
    blowup_S00,
    is_unit_gh,
    k2_constant,
    kernel,
    kernel_dx,
    predicted_time,
    validate,
    wave_speed,
)
from ._nlc import default_config as _default_config
from ._nlc import run_json as _run_json

__all__ = [
    "BlowupFamily",
    "LeslieParams",
    "blowup_S00",
    "default_config",
    "is_unit_gh",
    "k2_constant",
    "kernel",
    "kernel_dx",
    "predicted_time",
    "run",
    "validate",
    "wave_speed",
]


def default_config():
    """Full configuration with every default filled in."""
    return json.loads(_default_config())


def run(config):
    """Run a scenario. Returns (status, summary) with status 0 on success."""
    status, summary = _run_json(json.dumps(config))
    return status, json.loads(summary)
