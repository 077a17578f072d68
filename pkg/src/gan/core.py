"""Core generative-model functionality.

This module implements the two training objectives (the naive GAN minimax
loss and the conditional WGAN-gp loss), the training loop, sampling from a
trained generator, and the named training presets.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple, Union

import numpy as np

from autodiff import Graph, Node, backward, input_gradient_node

from . import network
from .exceptions import ActivationRangeError, ConfigurationError, DivergenceError
from .models import (
    LossTrace,
    MLPSpec,
    ModelCheckpoint,
    NetworkState,
    Objective,
    TrainConfig,
    encode_condition,
    validate_condition,
)
from .optim import init_state, rmsprop_step

logger = logging.getLogger(__name__)

# Critic outputs within this distance outside [0, 1] are clamped, beyond it they are rejected.
PROBABILITY_TOLERANCE = 1e-9
PROBABILITY_FLOOR = 1e-12

ConditionLike = Union[None, str, Iterable[str], np.ndarray]


@dataclass
class CriticLoss:
    """A critic objective evaluated on one batch.

    Attributes:
        graph: The graph the objective was built in.
        loss: The 1x1 loss node; differentiate it with ``autodiff.backward``.
        value: The loss value.
        wasserstein: E[1 - D(G(z|y))] - E[D(x|y)].
        penalty: E[(||grad D(x_hat|y)||_2 - 1)^2] before scaling by lambda.
    """
    graph: Graph
    loss: Node
    value: float
    wasserstein: float
    penalty: float


def _as_column(values) -> np.ndarray:
    return np.asarray(values, dtype=np.float64).reshape(-1, 1)


def _check_probabilities(values: np.ndarray, which: str) -> None:
    if (not np.all(np.isfinite(values)) or np.any(values < -PROBABILITY_TOLERANCE)
            or np.any(values > 1.0 + PROBABILITY_TOLERANCE)):
        raise ActivationRangeError(
            f"{which} critic outputs must lie in (0, 1); check that the critic ends in a sigmoid")


def _log_probability(graph: Graph, node: Node) -> Node:
    return graph.log(graph.clip(node, PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR))


def _one_minus(graph: Graph, node: Node) -> Node:
    return graph.shift(graph.scale(node, -1.0), 1.0)


def _naive_critic_objective(graph: Graph, d_real: Node, d_fake: Node) -> Node:
    _check_probabilities(d_real.value, "real")
    _check_probabilities(d_fake.value, "fake")
    real_term = graph.mean_all(_log_probability(graph, d_real))
    fake_term = graph.mean_all(graph.log(graph.clip(_one_minus(graph, d_fake),
                                                    PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR)))
    return graph.scale(graph.add(real_term, fake_term), -1.0)


def _naive_generator_objective(graph: Graph, d_fake: Node) -> Node:
    # Non-saturating form -E[log D(G(z))].
    _check_probabilities(d_fake.value, "fake")
    return graph.scale(graph.mean_all(_log_probability(graph, d_fake)), -1.0)


def naive_gan_losses(critic_out_real, critic_out_fake) -> Tuple[float, float]:
    """Evaluate the naive GAN losses on critic outputs.

    Args:
        critic_out_real: Critic probabilities D(x) on real rows.
        critic_out_fake: Critic probabilities D(G(z)) on generated rows.

    Returns:
        ``(critic_loss, generator_loss)`` with
        critic_loss = -mean(log D(x)) - mean(log(1 - D(G(z)))) and
        generator_loss = -mean(log D(G(z))).

    Raises:
        ActivationRangeError: If an output lies outside (0, 1) beyond the
            clamping tolerance.
    """
    graph = Graph()
    d_real = graph.constant(_as_column(critic_out_real))
    d_fake = graph.constant(_as_column(critic_out_fake))
    critic_loss = _naive_critic_objective(graph, d_real, d_fake)
    generator_loss = _naive_generator_objective(graph, d_fake)
    return critic_loss.item(), generator_loss.item()


def interpolate(real_batch: np.ndarray, fake_batch: np.ndarray, eps) -> np.ndarray:
    """Return the rows eps_i * real_i + (1 - eps_i) * fake_i.

    Raises:
        ConfigurationError: If the batches differ in shape or ``eps`` has the
            wrong length.
    """
    real_batch = np.asarray(real_batch, dtype=np.float64)
    fake_batch = np.asarray(fake_batch, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64).reshape(-1)
    if real_batch.shape != fake_batch.shape:
        raise ConfigurationError(f"interpolate: batch shapes differ, {real_batch.shape} vs {fake_batch.shape}")
    if eps.shape[0] != real_batch.shape[0]:
        raise ConfigurationError(f"interpolate: need {real_batch.shape[0]} eps draws, got {eps.shape[0]}")
    eps = eps[:, None]
    return eps * real_batch + (1.0 - eps) * fake_batch


def _condition_matrix(condition, rows: int, width: int) -> Optional[np.ndarray]:
    if condition is None:
        if width:
            raise ConfigurationError("this model is conditional; a condition is required")
        return None
    if not width:
        raise ConfigurationError("this model is unconditional; no condition may be given")
    condition = np.asarray(condition, dtype=np.float64)
    if condition.ndim == 1:
        condition = np.tile(condition, (rows, 1))
    if condition.shape != (rows, width):
        raise ConfigurationError(f"condition must have shape ({rows}, {width}), got {condition.shape}")
    return condition


def _generate(generator: NetworkState, noise: np.ndarray, condition: Optional[np.ndarray]) -> np.ndarray:
    graph = Graph()
    nodes = network.bind(graph, generator, "G", trainable=False)
    cond = graph.constant(condition) if condition is not None else None
    return network.forward(graph, generator.spec, nodes, graph.constant(noise), cond).value


def _noise_dim(generator: NetworkState, condition_width: int) -> int:
    return generator.spec.input_width - condition_width


def _critic_on(graph: Graph, critic: NetworkState, nodes, rows: Node, condition: Optional[np.ndarray]) -> Node:
    cond = graph.constant(condition) if condition is not None else None
    return network.forward(graph, critic.spec, nodes, rows, cond)


def wgan_gp_critic_loss(critic: NetworkState, generator: NetworkState, real_batch: np.ndarray,
                        condition, lambda_gp: float, rng: np.random.Generator,
                        penalty: bool = True) -> CriticLoss:
    """Build the conditional WGAN-gp critic objective on one batch.

    L = E[1 - D(G(z|y))] - E[D(x|y)] + lambda * E[(||grad_x_hat D(x_hat|y)||_2 - 1)^2]
    with x_hat = eps * x + (1 - eps) * G(z|y) and one eps ~ U(0, 1) per row.
    The penalty's input gradient is a graph node, so differentiating the loss
    reaches the critic parameters through it.

    Args:
        critic: Critic network with a linear final activation.
        generator: Generator network, held fixed.
        real_batch: Real rows.
        condition: None for unconditional models; otherwise one condition
            vector for the whole batch or one row per batch row.
        lambda_gp: Gradient penalty coefficient.
        rng: Random stream; noise is drawn first, then eps.
        penalty: Build the penalty term at all. Random draws are identical
            either way.

    Returns:
        The CriticLoss; critic parameters are named ``D.W0``, ``D.b0``, ...

    Raises:
        ConfigurationError: If ``lambda_gp`` is negative or the critic does
            not end in a linear activation.
    """
    if lambda_gp < 0:
        raise ConfigurationError(f"lambda_gp must be nonnegative, got {lambda_gp}")
    if critic.spec.final_activation == "sigmoid":
        raise ConfigurationError("the WGAN-gp critic needs a linear final activation")
    real_batch = np.asarray(real_batch, dtype=np.float64)
    rows = real_batch.shape[0]
    width = critic.spec.input_width - real_batch.shape[1]
    cond = _condition_matrix(condition, rows, width)

    noise = rng.standard_normal((rows, _noise_dim(generator, width)))
    eps = rng.uniform(0.0, 1.0, size=rows)
    fake = _generate(generator, noise, cond)

    graph = Graph()
    nodes = network.bind(graph, critic, "D", trainable=True)
    d_real = _critic_on(graph, critic, nodes, graph.constant(real_batch), cond)
    d_fake = _critic_on(graph, critic, nodes, graph.constant(fake), cond)
    wasserstein = graph.add(graph.mean_all(_one_minus(graph, d_fake)),
                            graph.scale(graph.mean_all(d_real), -1.0))
    loss, penalty_value = wasserstein, 0.0
    if penalty:
        x_hat = graph.constant(interpolate(real_batch, fake, eps))
        d_hat = _critic_on(graph, critic, nodes, x_hat, cond)
        grad = input_gradient_node(graph, graph.sum_all(d_hat), x_hat)
        gp = graph.mean_all(graph.square(graph.shift(graph.row_norm(grad), -1.0)))
        penalty_value = gp.item()
        loss = graph.add(wasserstein, graph.scale(gp, lambda_gp))
    return CriticLoss(graph, loss, loss.item(), wasserstein.item(), penalty_value)


def _naive_critic_loss(critic: NetworkState, generator: NetworkState, real_batch: np.ndarray,
                       condition: Optional[np.ndarray], rng: np.random.Generator) -> CriticLoss:
    rows = real_batch.shape[0]
    width = critic.spec.input_width - real_batch.shape[1]
    noise = rng.standard_normal((rows, _noise_dim(generator, width)))
    fake = _generate(generator, noise, condition)
    graph = Graph()
    nodes = network.bind(graph, critic, "D", trainable=True)
    d_real = _critic_on(graph, critic, nodes, graph.constant(real_batch), condition)
    d_fake = _critic_on(graph, critic, nodes, graph.constant(fake), condition)
    loss = _naive_critic_objective(graph, d_real, d_fake)
    return CriticLoss(graph, loss, loss.item(), float("nan"), 0.0)


def _generator_loss(objective: Objective, generator: NetworkState, critic: NetworkState, rows: int,
                    condition: Optional[np.ndarray], rng: np.random.Generator) -> Tuple[Graph, Node]:
    width = 0 if condition is None else condition.shape[1]
    noise = rng.standard_normal((rows, _noise_dim(generator, width)))
    graph = Graph()
    g_nodes = network.bind(graph, generator, "G", trainable=True)
    d_nodes = network.bind(graph, critic, "D", trainable=False)
    cond = graph.constant(condition) if condition is not None else None
    fake = network.forward(graph, generator.spec, g_nodes, graph.constant(noise), cond)
    d_fake = network.forward(graph, critic.spec, d_nodes, fake, cond)
    if objective is Objective.NAIVE_GAN:
        return graph, _naive_generator_objective(graph, d_fake)
    # -E[D(G(z|y))]; the constant 1 of the critic objective does not change gradients.
    return graph, graph.scale(graph.mean_all(d_fake), -1.0)


def _validate_training_inputs(data: np.ndarray, conditions: Optional[np.ndarray], spec_g: MLPSpec,
                              spec_d: MLPSpec, config: TrainConfig) -> Optional[np.ndarray]:
    if data.ndim != 2 or data.shape[0] == 0:
        raise ConfigurationError(f"training data must be a nonempty 2-D matrix, got shape {data.shape}")
    rows, d = data.shape
    width = config.condition_width
    if spec_g.output_width != d:
        raise ConfigurationError(f"generator output width {spec_g.output_width} does not match data width {d}")
    if spec_g.input_width != config.noise_dim + width:
        raise ConfigurationError(
            f"generator input width must be noise_dim + condition width = {config.noise_dim + width}")
    if spec_d.input_width != d + width or spec_d.output_width != 1:
        raise ConfigurationError(f"critic must map {d + width} inputs to a single output")
    if config.objective is Objective.NAIVE_GAN and spec_d.final_activation != "sigmoid":
        raise ConfigurationError("the naive GAN objective needs a sigmoid critic output")
    if config.objective is Objective.WGAN_GP and spec_d.final_activation == "sigmoid":
        raise ConfigurationError("the WGAN-gp critic needs a linear final activation")
    if config.batch_size > rows and not config.sample_with_replacement:
        raise ConfigurationError(
            f"batch_size {config.batch_size} exceeds the {rows} data rows; "
            "set sample_with_replacement to draw with replacement")
    if config.conditional:
        if conditions is None:
            raise ConfigurationError("a conditional model needs one condition vector per data row")
        conditions = np.asarray(conditions, dtype=np.float64)
        if conditions.shape != (rows, width):
            raise ConfigurationError(f"conditions must have shape ({rows}, {width}), got {conditions.shape}")
        for row in conditions:
            validate_condition(row, config.condition_vocab)
    elif conditions is not None:
        raise ConfigurationError("conditions were given but condition_vocab is not set")
    return conditions


def _batch(rng: np.random.Generator, rows: int, size: int, replace: bool) -> np.ndarray:
    return rng.choice(rows, size=size, replace=replace)


def train(data: np.ndarray, spec_g: MLPSpec, spec_d: MLPSpec, config: TrainConfig,
          conditions: Optional[np.ndarray] = None) -> ModelCheckpoint:
    """Train a generator/critic pair.

    Args:
        data: Training rows, one observation per row.
        spec_g: Generator specification; input width is noise_dim plus the
            condition width, output width is the data width.
        spec_d: Critic specification; input width is the data width plus the
            condition width, one output.
        config: Training configuration.
        conditions: One condition vector per data row for conditional models.

    Returns:
        The trained ModelCheckpoint. Identical inputs give bit-identical
        checkpoints.

    Raises:
        ConfigurationError: On inconsistent shapes or a batch larger than the
            data without ``sample_with_replacement``.
        DivergenceError: If a loss becomes non-finite.
    """
    data = np.asarray(data, dtype=np.float64)
    conditions = _validate_training_inputs(data, conditions, spec_g, spec_d, config)
    rows = data.shape[0]
    rng = np.random.default_rng(config.seed)
    generator = NetworkState(spec_g, network.init_params(spec_g, rng))
    critic = NetworkState(spec_d, network.init_params(spec_d, rng))
    g_state, d_state = init_state(generator.params), init_state(critic.params)
    trace = LossTrace()
    logger.info("training %s for %d iterations on %d rows", config.objective.value, config.iterations, rows)

    for iteration in range(config.iterations):
        for _ in range(config.critic_steps_per_generator_step):
            idx = _batch(rng, rows, config.batch_size, config.sample_with_replacement)
            cond = conditions[idx] if conditions is not None else None
            if config.objective is Objective.WGAN_GP:
                terms = wgan_gp_critic_loss(critic, generator, data[idx], cond, config.lambda_gp, rng)
            else:
                terms = _naive_critic_loss(critic, generator, data[idx], cond, rng)
            if not np.isfinite(terms.value):
                raise DivergenceError(iteration, "critic")
            grads = backward(terms.graph, terms.loss)
            params, d_state = rmsprop_step(critic.params, grads, d_state, config.learning_rate,
                                           config.rmsprop_decay, config.rmsprop_epsilon, prefix="D.")
            critic = NetworkState(spec_d, params)

        idx = _batch(rng, rows, config.batch_size, config.sample_with_replacement)
        cond = conditions[idx] if conditions is not None else None
        graph, g_loss = _generator_loss(config.objective, generator, critic, config.batch_size, cond, rng)
        if not np.isfinite(g_loss.item()):
            raise DivergenceError(iteration, "generator")
        grads = backward(graph, g_loss)
        params, g_state = rmsprop_step(generator.params, grads, g_state, config.learning_rate,
                                       config.rmsprop_decay, config.rmsprop_epsilon, prefix="G.")
        generator = NetworkState(spec_g, params)

        if iteration % config.trace_stride == 0:
            trace.iteration.append(iteration)
            trace.generator.append(g_loss.item())
            trace.critic.append(terms.value)
            logger.debug("iteration %d: critic %.6f generator %.6f", iteration, terms.value, g_loss.item())

    metadata = {
        "generator_loss_form": ("non-saturating -E[log D(G(z))]" if config.objective is Objective.NAIVE_GAN
                                else "-E[D(G(z|y))]"),
        "conditioning": "condition columns appended after noise (generator) and after data (critic)",
        "training_rows": str(rows),
    }
    return ModelCheckpoint(generator=generator, critic=critic, config=config, loss_trace=trace,
                           data_dim=data.shape[1], metadata=metadata)


def _resolve_condition(checkpoint: ModelCheckpoint, condition: ConditionLike) -> Optional[np.ndarray]:
    if not checkpoint.conditional:
        if condition is not None:
            raise ConfigurationError("this model is unconditional; no condition may be given")
        return None
    if condition is None:
        raise ConfigurationError(
            f"this model is conditional; give labels from {checkpoint.condition_vocab} or a condition vector")
    if isinstance(condition, str):
        return encode_condition(condition, checkpoint.condition_vocab)
    if isinstance(condition, np.ndarray):
        return validate_condition(condition, checkpoint.condition_vocab)
    labels = list(condition)
    if labels and not all(isinstance(label, str) for label in labels):
        return validate_condition(np.asarray(labels, dtype=np.float64), checkpoint.condition_vocab)
    return encode_condition(labels, checkpoint.condition_vocab)


def sample(checkpoint: ModelCheckpoint, n: int, condition: ConditionLike = None, seed: int = 0) -> np.ndarray:
    """Draw ``n`` rows from a trained generator.

    Args:
        checkpoint: The trained model.
        n: Number of rows.
        condition: Required iff the model is conditional: a label, a list of
            labels (multi-hot; an empty list means no label), or a {0,1}
            vector over the vocabulary.
        seed: Seed of the noise stream; z ~ N(0, I).

    Returns:
        An (n, data_dim) matrix.

    Raises:
        UnknownConditionError: If a label is not in the vocabulary.
    """
    if n < 0:
        raise ConfigurationError(f"sample size must be nonnegative, got {n}")
    vector = _resolve_condition(checkpoint, condition)
    width = 0 if vector is None else vector.shape[0]
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((n, _noise_dim(checkpoint.generator, width)))
    cond = _condition_matrix(vector, n, width) if vector is not None else None
    return _generate(checkpoint.generator, noise, cond)


def preset(name: str, data_dim: int, condition_vocab: Optional[Iterable[str]] = None,
           seed: int = 0, hidden: int = 64) -> Tuple[MLPSpec, MLPSpec, TrainConfig]:
    """Return generator spec, critic spec and TrainConfig for a named preset.

    ``naive``: three-layer MLPs, naive GAN loss, 3000 iterations, batch 300,
    learning rate 1e-3. ``icw``: four-layer MLPs, WGAN-gp with lambda 1,
    15000 iterations, batch 50, noise length 128, learning rate 1e-3. Both
    update generator and critic once per step.
    """
    vocab = list(condition_vocab) if condition_vocab is not None else None
    width = len(vocab) if vocab else 0
    if name == "naive":
        noise_dim = data_dim
        spec_g = MLPSpec((noise_dim + width, hidden, hidden, data_dim), final_activation="linear")
        spec_d = MLPSpec((data_dim + width, hidden, hidden, 1), final_activation="sigmoid")
        config = TrainConfig(objective=Objective.NAIVE_GAN, iterations=3000, batch_size=300,
                             noise_dim=noise_dim, lambda_gp=None, learning_rate=1e-3,
                             seed=seed, condition_vocab=vocab)
    elif name == "icw":
        noise_dim = 128
        spec_g = MLPSpec((noise_dim + width, hidden, hidden, hidden, data_dim), final_activation="linear")
        spec_d = MLPSpec((data_dim + width, hidden, hidden, hidden, 1), final_activation="linear")
        config = TrainConfig(objective=Objective.WGAN_GP, iterations=15000, batch_size=50,
                             noise_dim=noise_dim, lambda_gp=1.0, learning_rate=1e-3,
                             seed=seed, condition_vocab=vocab)
    else:
        raise ConfigurationError(f"unknown preset {name!r}; choose 'naive' or 'icw'")
    return spec_g, spec_d, config
