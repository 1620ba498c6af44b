"""Single-layer LSTM with a linear readout, trained by full-sequence BPTT and plain gradient descent."""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from app.utils.constants import (
    LSTM_EPOCHS,
    LSTM_FORGET_BIAS,
    LSTM_GRAD_CLIP,
    LSTM_HIDDEN,
    LSTM_INIT_SCALE,
    LSTM_LEARNING_RATE,
)
from app.utils.exceptions import DegenerateError, InsufficientDataError, ModelStateError, NumericError, ShapeError, TrainingError

GATES = ("f", "i", "c", "o")
PARAM_GROUPS = ("W_f", "W_i", "W_c", "W_o", "b_f", "b_i", "b_c", "b_o", "W_y", "b_y")


@dataclass
class LstmParams:
    input_dim: int
    hidden_dim: int
    output_dim: int
    W_f: np.ndarray
    W_i: np.ndarray
    W_c: np.ndarray
    W_o: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray
    W_y: np.ndarray
    b_y: np.ndarray
    trained: bool = False
    # input offset whose next output_dim values are added to the readout
    skip_start: Optional[int] = None

    @classmethod
    def initialize(cls, input_dim: int, hidden_dim: int, output_dim: int, rng: np.random.Generator,
                   init_scale: float = LSTM_INIT_SCALE, forget_bias: float = LSTM_FORGET_BIAS,
                   skip_start: Optional[int] = None) -> "LstmParams":
        if skip_start is not None and not 0 <= skip_start <= input_dim - output_dim:
            raise ShapeError(f"skip slice at {skip_start} does not fit {output_dim} outputs in {input_dim} inputs")
        width = hidden_dim + input_dim

        def uniform(*shape):
            return rng.uniform(-init_scale, init_scale, size=shape)

        return cls(
            input_dim=input_dim,
            hidden_dim=hidden_dim,
            output_dim=output_dim,
            W_f=uniform(hidden_dim, width),
            W_i=uniform(hidden_dim, width),
            W_c=uniform(hidden_dim, width),
            W_o=uniform(hidden_dim, width),
            b_f=np.full(hidden_dim, float(forget_bias)),
            b_i=np.zeros(hidden_dim),
            b_c=np.zeros(hidden_dim),
            b_o=np.zeros(hidden_dim),
            W_y=uniform(output_dim, hidden_dim),
            b_y=np.zeros(output_dim),
            skip_start=skip_start,
        )

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int, output_dim: int) -> "LstmParams":
        return cls.initialize(input_dim, hidden_dim, output_dim, np.random.default_rng(0), init_scale=0.0, forget_bias=0.0)

    def groups(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_GROUPS}

    def copy(self) -> "LstmParams":
        copied = {name: value.copy() for name, value in self.groups().items()}
        return LstmParams(self.input_dim, self.hidden_dim, self.output_dim, trained=self.trained,
                          skip_start=self.skip_start, **copied)

    def to_json(self) -> dict:
        document = {name: value.tolist() for name, value in self.groups().items()}
        document.update(input_dim=self.input_dim, hidden_dim=self.hidden_dim, output_dim=self.output_dim, trained=self.trained,
                        skip_start=self.skip_start)
        return document

    @classmethod
    def from_json(cls, document: dict) -> "LstmParams":
        arrays = {name: np.array(document[name], dtype=float) for name in PARAM_GROUPS}
        return cls(document["input_dim"], document["hidden_dim"], document["output_dim"], trained=document["trained"],
                   skip_start=document.get("skip_start"), **arrays)


@dataclass
class LstmState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden_dim: int) -> "LstmState":
        return cls(np.zeros(hidden_dim), np.zeros(hidden_dim))


@dataclass
class StepCache:
    z: np.ndarray
    c_prev: np.ndarray
    f: np.ndarray
    i: np.ndarray
    c_tilde: np.ndarray
    o: np.ndarray
    c: np.ndarray
    h: np.ndarray


def _step(params: LstmParams, state: LstmState, x) -> Tuple[LstmState, np.ndarray, StepCache]:
    x = np.asarray(x, dtype=float)
    if x.shape != (params.input_dim,) or state.h.shape != (params.hidden_dim,):
        raise ShapeError(f"LSTM expects input ({params.input_dim},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NumericError("LSTM input contains non-finite values")
    z = np.concatenate([state.h, x])
    f = expit(params.W_f @ z + params.b_f)
    i = expit(params.W_i @ z + params.b_i)
    c_tilde = np.tanh(params.W_c @ z + params.b_c)
    o = expit(params.W_o @ z + params.b_o)
    c = f * state.c + i * c_tilde
    h = o * np.tanh(c)
    y = params.W_y @ h + params.b_y
    if params.skip_start is not None:
        y = y + x[params.skip_start:params.skip_start + params.output_dim]
    return LstmState(h, c), y, StepCache(z, state.c, f, i, c_tilde, o, c, h)


def forward_step(params: LstmParams, state: LstmState, x) -> Tuple[LstmState, np.ndarray]:
    new_state, y, _ = _step(params, state, x)
    return new_state, y


def _run(params: LstmParams, inputs: Sequence) -> Tuple[List[np.ndarray], List[StepCache]]:
    if len(inputs) == 0:
        raise InsufficientDataError("LSTM needs a non-empty input sequence")
    state = LstmState.zeros(params.hidden_dim)
    outputs, caches = [], []
    for x in inputs:
        state, y, cache = _step(params, state, x)
        outputs.append(y)
        caches.append(cache)
    return outputs, caches


def forward_sequence(params: LstmParams, inputs: Sequence) -> List[np.ndarray]:
    return _run(params, inputs)[0]


def _pair(a, b) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.size == 0:
        raise DegenerateError("metrics are undefined on empty matrices")
    return a, b


def loss_mae(a, a_hat) -> float:
    a, a_hat = _pair(a, a_hat)
    return float(np.mean(np.abs(a - a_hat)))


def loss_mse(a, a_hat) -> float:
    a, a_hat = _pair(a, a_hat)
    return float(np.mean((a - a_hat) ** 2))


def loss_rmse(a, a_hat) -> float:
    return float(np.sqrt(loss_mse(a, a_hat)))


def backward(params: LstmParams, inputs: Sequence, targets: Sequence, loss_scale: float = 1.0) -> Tuple[float, Dict[str, np.ndarray]]:
    """Loss (scaled MSE over every step and output) and its exact gradient for each parameter group."""
    outputs, caches = _run(params, inputs)
    targets = np.asarray(targets, dtype=float)
    outputs = np.asarray(outputs)
    if targets.shape != outputs.shape:
        raise ShapeError(f"targets {targets.shape} do not align with outputs {outputs.shape}")
    loss = loss_scale * loss_mse(targets, outputs)
    if not np.isfinite(loss):
        raise NumericError("LSTM loss is not finite")

    grads = {name: np.zeros_like(value) for name, value in params.groups().items()}
    hidden = params.hidden_dim
    d_outputs = loss_scale * 2.0 * (outputs - targets) / outputs.size
    dh_next = np.zeros(hidden)
    dc_next = np.zeros(hidden)
    for t in reversed(range(len(caches))):
        cache = caches[t]
        dy = d_outputs[t]
        grads["W_y"] += np.outer(dy, cache.h)
        grads["b_y"] += dy
        dh = params.W_y.T @ dy + dh_next
        tanh_c = np.tanh(cache.c)
        dc = dh * cache.o * (1.0 - tanh_c ** 2) + dc_next
        pre = {
            "f": dc * cache.c_prev * cache.f * (1.0 - cache.f),
            "i": dc * cache.c_tilde * cache.i * (1.0 - cache.i),
            "c": dc * cache.i * (1.0 - cache.c_tilde ** 2),
            "o": dh * tanh_c * cache.o * (1.0 - cache.o),
        }
        dz = np.zeros_like(cache.z)
        for gate in GATES:
            grads[f"W_{gate}"] += np.outer(pre[gate], cache.z)
            grads[f"b_{gate}"] += pre[gate]
            dz += getattr(params, f"W_{gate}").T @ pre[gate]
        dh_next = dz[:hidden]
        dc_next = dc * cache.f
    return loss, grads


@dataclass
class TrainConfig:
    epochs: int = LSTM_EPOCHS
    learning_rate: float = LSTM_LEARNING_RATE
    grad_clip: float = LSTM_GRAD_CLIP
    seed: int = 42
    init_scale: float = LSTM_INIT_SCALE
    forget_bias: float = LSTM_FORGET_BIAS
    hidden_dim: int = LSTM_HIDDEN
    skip_start: Optional[int] = None


@dataclass
class TrainResult:
    params: LstmParams
    losses: List[float] = field(default_factory=list)


def clip_gradients(grads: Dict[str, np.ndarray], max_norm: float) -> float:
    norm = float(np.sqrt(sum(np.sum(g ** 2) for g in grads.values())))
    if norm > max_norm:
        for g in grads.values():
            g *= max_norm / norm
    return norm


def train(dataset: Sequence[Tuple[np.ndarray, np.ndarray]], cfg: TrainConfig, rng: np.random.Generator,
          params: Optional[LstmParams] = None) -> TrainResult:
    """Each epoch is one gradient step on the loss averaged over every sequence, in dataset order."""
    if not dataset:
        raise InsufficientDataError("LSTM training needs at least one sequence")
    input_dim = len(dataset[0][0][0])
    output_dim = len(dataset[0][1][0])
    if params is None:
        params = LstmParams.initialize(input_dim, cfg.hidden_dim, output_dim, rng, cfg.init_scale, cfg.forget_bias, cfg.skip_start)
    else:
        params = params.copy()

    losses = []
    for epoch in range(cfg.epochs):
        total = {name: np.zeros_like(value) for name, value in params.groups().items()}
        epoch_loss = 0.0
        for inputs, targets in dataset:
            try:
                loss, grads = backward(params, inputs, targets)
            except NumericError as e:
                raise TrainingError(f"training diverged at epoch {epoch}: {e}", epoch) from e
            epoch_loss += loss
            for name, g in grads.items():
                total[name] += g
        epoch_loss /= len(dataset)
        for g in total.values():
            g /= len(dataset)
        clip_gradients(total, cfg.grad_clip)
        for name, g in total.items():
            getattr(params, name)[...] -= cfg.learning_rate * g
        losses.append(epoch_loss)
        if epoch % 100 == 0:
            logging.info(f"LSTM epoch {epoch}: mse={epoch_loss:.6f}")

    params.trained = True
    return TrainResult(params=params, losses=losses)


def predict_next(params: LstmParams, history: Sequence[np.ndarray]) -> np.ndarray:
    if not params.trained:
        raise ModelStateError("LSTM parameters have not been trained")
    inputs = [np.asarray(state, dtype=float).reshape(-1) for state in history]
    return forward_sequence(params, inputs)[-1]
