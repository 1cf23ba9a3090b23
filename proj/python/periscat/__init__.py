"""Python access to the periscat solver and imaging pipeline."""

import json as _json

from . import _core
from ._core import (
    Config,
    ConfigError,
    DataFormatError,
    Error,
    ModeMismatchError,
    WaveParameters,
    beta,
    green_tensor,
    image,
    mode_indices,
    phi,
    read_data,
    sampling_axes,
)


def run_forward(config, data_path=""):
    return _json.loads(_core.run_forward(config, data_path))


def run_noise(config, data_path, out_path=""):
    return _json.loads(_core.run_noise(config, data_path, out_path))


def run_image(config, data_path):
    return _json.loads(_core.run_image(config, data_path))


def run_compare(config, data_path):
    return _json.loads(_core.run_compare(config, data_path))


__all__ = [
    "Config",
    "ConfigError",
    "DataFormatError",
    "Error",
    "ModeMismatchError",
    "WaveParameters",
    "beta",
    "green_tensor",
    "image",
    "mode_indices",
    "phi",
    "read_data",
    "run_compare",
    "run_forward",
    "run_image",
    "run_noise",
    "sampling_axes",
]
