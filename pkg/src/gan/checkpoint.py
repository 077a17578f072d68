"""Checkpoint persistence.

Checkpoints are JSON documents with sorted keys. Weights are stored as
row-major nested lists of floats; Python's shortest round-trip float repr
makes save followed by load reproduce every weight bit for bit.
"""

import json
import logging
import os
from typing import Union

import numpy as np

from .exceptions import CheckpointError, CheckpointVersionError, ConfigurationError
from .models import FORMAT_VERSION, LossTrace, MLPSpec, ModelCheckpoint, NetworkState, TrainConfig

logger = logging.getLogger(__name__)

SUPPORTED_VERSIONS = (FORMAT_VERSION,)

PathLike = Union[str, os.PathLike]


def _network_to_dict(state: NetworkState) -> dict:
    return {
        "spec": state.spec.to_dict(),
        "weights": {name: value.tolist() for name, value in state.params.items()},
    }


def checkpoint_to_dict(checkpoint: ModelCheckpoint) -> dict:
    """Return the JSON-ready form of ``checkpoint``."""
    return {
        "format_version": checkpoint.format_version,
        "data_dim": checkpoint.data_dim,
        "generator": _network_to_dict(checkpoint.generator),
        "critic": _network_to_dict(checkpoint.critic),
        "config": checkpoint.config.to_dict(),
        "loss_trace": {
            "iteration": list(checkpoint.loss_trace.iteration),
            "generator": list(checkpoint.loss_trace.generator),
            "critic": list(checkpoint.loss_trace.critic),
        },
        "metadata": dict(checkpoint.metadata),
    }


def _network_from_dict(doc: dict, which: str) -> NetworkState:
    spec = MLPSpec(tuple(doc["spec"]["layer_widths"]), doc["spec"]["hidden_activation"],
                   doc["spec"]["final_activation"])
    params = {name: np.asarray(value, dtype=np.float64) for name, value in doc["weights"].items()}
    for i, (fan_in, fan_out) in enumerate(zip(spec.layer_widths[:-1], spec.layer_widths[1:])):
        for name, shape in ((f"W{i}", (fan_in, fan_out)), (f"b{i}", (1, fan_out))):
            if name not in params:
                raise CheckpointError(f"{which} weights are missing {name}")
            if params[name].shape != shape:
                raise CheckpointError(
                    f"{which} weight {name} has shape {params[name].shape}, its layout needs {shape}")
    if len(params) != 2 * spec.n_layers:
        raise CheckpointError(f"{which} weights hold entries the layout does not describe")
    return NetworkState(spec, params)


def checkpoint_from_dict(doc: dict) -> ModelCheckpoint:
    """Rebuild a checkpoint from its JSON form.

    Raises:
        CheckpointVersionError: If ``format_version`` is not supported.
        CheckpointError: If fields are missing or weight shapes disagree with
            the stored specs.
    """
    if not isinstance(doc, dict):
        raise CheckpointError("checkpoint document must be a JSON object")
    version = doc.get("format_version")
    if version not in SUPPORTED_VERSIONS:
        raise CheckpointVersionError(version, SUPPORTED_VERSIONS)
    try:
        config_doc = dict(doc["config"])
        config = TrainConfig(**config_doc)
        generator = _network_from_dict(doc["generator"], "generator")
        critic = _network_from_dict(doc["critic"], "critic")
        trace = LossTrace(iteration=[int(i) for i in doc["loss_trace"]["iteration"]],
                          generator=[float(v) for v in doc["loss_trace"]["generator"]],
                          critic=[float(v) for v in doc["loss_trace"]["critic"]])
        data_dim = int(doc["data_dim"])
        metadata = {str(k): str(v) for k, v in doc.get("metadata", {}).items()}
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"malformed checkpoint: {e!r}") from e
    except ConfigurationError as e:
        raise CheckpointError(f"checkpoint holds an invalid configuration: {e.message}") from e
    if generator.spec.output_width != data_dim or critic.spec.input_width != data_dim + config.condition_width:
        raise CheckpointError("checkpoint network widths do not match data_dim and the condition vocabulary")
    if generator.spec.input_width != config.noise_dim + config.condition_width:
        raise CheckpointError(f"generator input width {generator.spec.input_width} does not match noise_dim "
                              f"{config.noise_dim} plus {config.condition_width} condition columns")
    return ModelCheckpoint(generator=generator, critic=critic, config=config, loss_trace=trace,
                           data_dim=data_dim, metadata=metadata, format_version=version)


def save_checkpoint(checkpoint: ModelCheckpoint, path: PathLike) -> None:
    """Write ``checkpoint`` to ``path`` as JSON."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(checkpoint_to_dict(checkpoint), f, sort_keys=True, allow_nan=False)
        f.write("\n")
    logger.info("saved checkpoint to %s", path)


def load_checkpoint(path: PathLike) -> ModelCheckpoint:
    """Read a checkpoint written by :func:`save_checkpoint`.

    Raises:
        CheckpointError: If the file is missing, truncated or malformed.
        CheckpointVersionError: If the format version is not supported.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise CheckpointError(f"checkpoint {path} is not valid JSON (truncated?): {e.msg} at {e.pos}") from e
    return checkpoint_from_dict(doc)
