"""Small LSTM classifier over precomputed embedding sequences, from scratch.

One LSTM layer (gate order i, f, g, o), a rectified dense layer, then a
two-unit softmax head; binary cross-entropy on the positive-class output,
full backpropagation through time, Adam with bias correction. Everything is
plain numpy in double precision so the analytic gradients can be checked
against central finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataValidationError, ParseError, TrainingError

MODEL_FORMAT = "memetriage-lstm"
MODEL_VERSION = 1

_WEIGHT_ORDER = ("Wx", "Wh", "b", "W1", "b1", "W2", "b2")
_INIT_SCALE = 0.08
_PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class LstmParams:
    input_dim: int = 768
    hidden_units: int = 9
    dense1_units: int = 8
    dense2_units: int = 2
    epochs: int = 45
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    batch_size: int = 32
    max_seq_len: int = 128

    def __post_init__(self):
        for name in ("input_dim", "hidden_units", "dense1_units", "dense2_units"):
            if getattr(self, name) < 1:
                raise DataValidationError(f"{name} must be >= 1")
        if self.epochs < 1:
            raise DataValidationError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise DataValidationError("learning_rate must be > 0")
        for name in ("adam_beta1", "adam_beta2"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise DataValidationError(f"{name} must be in (0, 1)")
        if self.batch_size < 1 or self.max_seq_len < 1:
            raise DataValidationError("batch_size and max_seq_len must be >= 1")


@dataclass
class LstmModel:
    params: LstmParams
    weights: dict[str, np.ndarray]
    history: list[float] = field(default_factory=list)

    def predict_proba(self, sequence) -> float:
        """Positive-class probability for one sequence."""
        return float(forward(self, sequence)[1])


def init_model(params: LstmParams) -> LstmModel:
    """Uniform [-0.08, 0.08] initialization, fully determined by the seed."""
    rng = np.random.default_rng(params.seed)
    d, h, u1, u2 = params.input_dim, params.hidden_units, params.dense1_units, params.dense2_units
    shapes = {
        "Wx": (d, 4 * h),
        "Wh": (h, 4 * h),
        "b": (4 * h,),
        "W1": (h, u1),
        "b1": (u1,),
        "W2": (u1, u2),
        "b2": (u2,),
    }
    weights = {
        name: rng.uniform(-_INIT_SCALE, _INIT_SCALE, size=shapes[name])
        for name in _WEIGHT_ORDER
    }
    return LstmModel(params=params, weights=weights)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _forward_batch(weights: dict[str, np.ndarray], x: np.ndarray, mask: np.ndarray):
    """Run the recurrence over a padded batch; returns probs and caches.

    x is (B, T, D), mask is (B, T) with 1 for real steps. Masked steps leave
    hidden and cell state untouched (and contribute no gradient).
    """
    b_sz, t_len, _ = x.shape
    h_units = weights["Wh"].shape[0]
    h = np.zeros((b_sz, h_units))
    c = np.zeros((b_sz, h_units))
    caches = []
    for t in range(t_len):
        x_t = x[:, t, :]
        m = mask[:, t][:, None]
        z = x_t @ weights["Wx"] + h @ weights["Wh"] + weights["b"]
        gi = _sigmoid(z[:, :h_units])
        gf = _sigmoid(z[:, h_units : 2 * h_units])
        gg = np.tanh(z[:, 2 * h_units : 3 * h_units])
        go = _sigmoid(z[:, 3 * h_units :])
        c_new = gf * c + gi * gg
        tanh_c = np.tanh(c_new)
        h_new = go * tanh_c
        caches.append((x_t, h, c, gi, gf, gg, go, tanh_c, m))
        c = m * c_new + (1.0 - m) * c
        h = m * h_new + (1.0 - m) * h
    a1 = h @ weights["W1"] + weights["b1"]
    r1 = np.maximum(a1, 0.0)
    z2 = r1 @ weights["W2"] + weights["b2"]
    probs = _softmax(z2)
    head_cache = (h, a1, r1)
    return probs, caches, head_cache


def _bce(probs: np.ndarray, y: np.ndarray) -> float:
    p1 = np.clip(probs[:, 1], _PROB_FLOOR, 1.0 - _PROB_FLOOR)
    return float(-(y * np.log(p1) + (1.0 - y) * np.log(1.0 - p1)).mean())


def _loss(weights: dict[str, np.ndarray], x: np.ndarray, mask: np.ndarray, y: np.ndarray) -> float:
    probs, _, _ = _forward_batch(weights, x, mask)
    return _bce(probs, y)


def _loss_and_grads(weights: dict[str, np.ndarray], x: np.ndarray, mask: np.ndarray, y: np.ndarray):
    """Mean BCE over the batch plus analytic gradients for every tensor."""
    if weights["W2"].shape[1] != 2:
        raise DataValidationError("the softmax head must have exactly 2 units for training")
    probs, caches, (h_final, a1, r1) = _forward_batch(weights, x, mask)
    loss = _bce(probs, y)
    b_sz = x.shape[0]
    h_units = weights["Wh"].shape[0]

    p1 = probs[:, 1]
    dz2 = np.empty_like(probs)
    dz2[:, 1] = (p1 - y) / b_sz
    dz2[:, 0] = -(p1 - y) / b_sz

    grads = {name: np.zeros_like(tensor) for name, tensor in weights.items()}
    grads["W2"] = r1.T @ dz2
    grads["b2"] = dz2.sum(axis=0)
    dr1 = dz2 @ weights["W2"].T
    da1 = dr1 * (a1 > 0.0)
    grads["W1"] = h_final.T @ da1
    grads["b1"] = da1.sum(axis=0)

    dh = da1 @ weights["W1"].T
    dc = np.zeros((b_sz, h_units))
    for t in range(x.shape[1] - 1, -1, -1):
        x_t, h_prev, c_prev, gi, gf, gg, go, tanh_c, m = caches[t]
        dh_new = m * dh
        dh_prev = (1.0 - m) * dh
        dc_new = m * dc
        dc_prev = (1.0 - m) * dc

        dgo = dh_new * tanh_c
        dc_new = dc_new + dh_new * go * (1.0 - tanh_c * tanh_c)
        dgf = dc_new * c_prev
        dc_prev = dc_prev + dc_new * gf
        dgi = dc_new * gg
        dgg = dc_new * gi

        dz = np.concatenate(
            [
                dgi * gi * (1.0 - gi),
                dgf * gf * (1.0 - gf),
                dgg * (1.0 - gg * gg),
                dgo * go * (1.0 - go),
            ],
            axis=1,
        )
        grads["Wx"] += x_t.T @ dz
        grads["Wh"] += h_prev.T @ dz
        grads["b"] += dz.sum(axis=0)
        dh = dh_prev + dz @ weights["Wh"].T
        dc = dc_prev
    return loss, grads


def forward(model: LstmModel, sequence) -> np.ndarray:
    """Class probability 2-vector for a single sequence of input vectors."""
    seq = np.asarray(sequence, dtype=np.float64)
    if seq.ndim != 2 or seq.shape[0] < 1:
        raise DataValidationError("sequence must be a (T >= 1, input_dim) array")
    if seq.shape[1] != model.params.input_dim:
        raise DataValidationError(
            f"sequence width {seq.shape[1]} != model input_dim {model.params.input_dim}"
        )
    probs, _, _ = _forward_batch(model.weights, seq[None, :, :], np.ones((1, seq.shape[0])))
    return probs[0]


def _pad_batch(sequences: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    t_max = max(s.shape[0] for s in sequences)
    d = sequences[0].shape[1]
    x = np.zeros((len(sequences), t_max, d))
    mask = np.zeros((len(sequences), t_max))
    for i, seq in enumerate(sequences):
        x[i, : seq.shape[0], :] = seq
        mask[i, : seq.shape[0]] = 1.0
    return x, mask


def train_lstm(sequences: list, labels: list[int], params: LstmParams) -> LstmModel:
    """Adam on BCE with shuffled mini-batches; deterministic in the seed."""
    if not sequences:
        raise DataValidationError("training requires at least one sequence")
    if len(sequences) != len(labels):
        raise DataValidationError(f"{len(sequences)} sequences but {len(labels)} labels")
    if set(labels) != {0, 1}:
        raise TrainingError("training labels must contain both classes")
    prepared = []
    for seq in sequences:
        arr = np.asarray(seq, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != params.input_dim:
            raise DataValidationError(
                f"every sequence must be (T, {params.input_dim}); got shape {arr.shape}"
            )
        prepared.append(arr[: params.max_seq_len])
    y_all = np.asarray(labels, dtype=np.float64)

    model = init_model(params)
    rng = np.random.default_rng(params.seed + 1)  # init consumed params.seed
    adam_m = {k: np.zeros_like(v) for k, v in model.weights.items()}
    adam_v = {k: np.zeros_like(v) for k, v in model.weights.items()}
    step = 0
    n = len(prepared)
    for epoch in range(params.epochs):
        perm = rng.permutation(n)
        total_loss = 0.0
        for start in range(0, n, params.batch_size):
            batch = perm[start : start + params.batch_size]
            x, mask = _pad_batch([prepared[i] for i in batch])
            loss, grads = _loss_and_grads(model.weights, x, mask, y_all[batch])
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss in epoch {epoch + 1}")
            total_loss += loss * len(batch)
            step += 1
            for name in _WEIGHT_ORDER:
                g = grads[name]
                adam_m[name] = params.adam_beta1 * adam_m[name] + (1 - params.adam_beta1) * g
                adam_v[name] = params.adam_beta2 * adam_v[name] + (1 - params.adam_beta2) * g * g
                m_hat = adam_m[name] / (1 - params.adam_beta1**step)
                v_hat = adam_v[name] / (1 - params.adam_beta2**step)
                model.weights[name] -= params.learning_rate * m_hat / (np.sqrt(v_hat) + params.adam_eps)
                if not np.all(np.isfinite(model.weights[name])):
                    raise TrainingError(f"non-finite parameters after update in epoch {epoch + 1}")
        model.history.append(total_loss / n)
    return model


def gradient_check(model: LstmModel, sequence, label: int, epsilon: float = 1e-5) -> float:
    """Max discrepancy between analytic and central finite-difference gradients.

    Per coordinate the error is relative (|a - n| / max(|a|, |n|)) unless both
    gradients sit below what central differences can resolve (~1e-6 at
    epsilon 1e-5 in double precision), in which case the absolute difference
    is used.
    """
    if not 0.0 < epsilon <= 1e-2:
        raise DataValidationError("epsilon must be in (0, 1e-2]")
    seq = np.asarray(sequence, dtype=np.float64)
    x = seq[None, :, :]
    mask = np.ones((1, seq.shape[0]))
    y = np.asarray([label], dtype=np.float64)
    weights = {k: v.copy() for k, v in model.weights.items()}
    _, grads = _loss_and_grads(weights, x, mask, y)
    worst = 0.0
    for name in _WEIGHT_ORDER:
        tensor = weights[name]
        flat = tensor.reshape(-1)
        analytic = grads[name].reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + epsilon
            up = _loss(weights, x, mask, y)
            flat[i] = original - epsilon
            down = _loss(weights, x, mask, y)
            flat[i] = original
            numeric = (up - down) / (2 * epsilon)
            denom = max(abs(analytic[i]), abs(numeric))
            err = abs(analytic[i] - numeric) / denom if denom > 1e-6 else abs(analytic[i] - numeric)
            worst = max(worst, err)
    return worst


def save_lstm(model: LstmModel, path, split_seed: int | None = None) -> None:
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "params": {
            "input_dim": model.params.input_dim,
            "hidden_units": model.params.hidden_units,
            "dense1_units": model.params.dense1_units,
            "dense2_units": model.params.dense2_units,
            "epochs": model.params.epochs,
            "learning_rate": model.params.learning_rate,
            "adam_beta1": model.params.adam_beta1,
            "adam_beta2": model.params.adam_beta2,
            "adam_eps": model.params.adam_eps,
            "seed": model.params.seed,
            "batch_size": model.params.batch_size,
            "max_seq_len": model.params.max_seq_len,
        },
        "history": model.history,
        "split_seed": split_seed,
        "weights": {name: model.weights[name].tolist() for name in _WEIGHT_ORDER},
    }
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8"
    )


def load_lstm(path) -> tuple[LstmModel, int | None]:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not a valid model file: {exc.msg}") from exc
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
        raise ParseError(f"{path}: not a {MODEL_FORMAT} file")
    if payload.get("version") != MODEL_VERSION:
        raise ParseError(f"{path}: unsupported model version {payload.get('version')!r}")
    params = LstmParams(**payload["params"])
    weights = {name: np.asarray(payload["weights"][name], dtype=np.float64) for name in _WEIGHT_ORDER}
    model = LstmModel(params=params, weights=weights, history=[float(x) for x in payload["history"]])
    seed = payload.get("split_seed")
    return model, (int(seed) if seed is not None else None)
