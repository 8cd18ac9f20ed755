"""SMC sampler with approximately optimal L-kernels.

Configs are plain dicts in the same schema as the CLI's ``config.json``.
"""

import json

from smc_optl._core import (
    ConfigError,
    DegenerateWeightsError,
    InsufficientSamplesError,
    InvalidArgumentError,
    IoError,
    RunAbortedError,
    SingularCovarianceError,
    SmcError,
    builtin_names,
    ess,
    fit_gaussian,
    fit_gmm,
    gaussian_conditional,
    normalized_weights,
)
from smc_optl import _core

__all__ = [
    "ConfigError",
    "DegenerateWeightsError",
    "InsufficientSamplesError",
    "InvalidArgumentError",
    "IoError",
    "RunAbortedError",
    "SingularCovarianceError",
    "SmcError",
    "builtin_config",
    "builtin_names",
    "ess",
    "fit_gaussian",
    "fit_gmm",
    "gaussian_conditional",
    "normalized_weights",
    "run",
    "run_study",
]


def _config_json(config, overrides):
    base = builtin_config(config) if isinstance(config, str) else dict(config)
    base.update({k: v for k, v in overrides.items() if v is not None})
    return json.dumps(base)


def builtin_config(name):
    """Built-in experiment config ("2d_toy" or "bimodal") as a dict."""
    return json.loads(_core.builtin_config(name))


def run(config, *, strategy=None, N=None, K=None, seed=None, trace_path=None):
    """Run one sampler. ``config`` is a built-in name or a config dict.

    Returns a dict of numpy arrays: iteration, ess, resampled, mean, cov,
    recycled_mean, recycled_cov, recycling_constants, and resample_count.
    """
    text = _config_json(config, {"strategy": strategy, "N": N, "K": K, "seed": seed})
    return _core.run(text, None if trace_path is None else str(trace_path))


def run_study(config, strategies, *, N=None, K=None, seed=None, replicates=None, final_iteration=False,
              same_seed=False, threads=0, csv_path=None):
    """Compare strategies across replicates; replicate r uses seed + r."""
    text = _config_json(config, {"N": N, "K": K, "seed": seed, "replicates": replicates})
    return _core.run_study(text, list(strategies), final_iteration, same_seed, threads,
                           None if csv_path is None else str(csv_path))
