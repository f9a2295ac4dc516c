"""Single-layer LSTM regressor with calendar embeddings, written against numpy.

Network, for a batch of ``B`` windows of ``L`` scaled temperatures::

    h_L = LSTM(x_1 .. x_L)                 zero initial state, input size 1
    z   = [h_L, E_hour[h], E_dow[d], E_month[m], E_year[y]]
    z   = dropout(z)                       training mode only, inverted scaling
    out = W2 . relu(W1 z + b1) + b2

Gate order inside the stacked ``4H`` LSTM weight columns is input, forget,
output, cell candidate (the three sigmoid gates are contiguous).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, LengthMismatch, StaleCache

GATES = ("input", "forget", "output", "cell")
EMBEDDINGS = ("emb_hour", "emb_dow", "emb_month", "emb_year")
CATEGORY_SIZES = {"emb_hour": 24, "emb_dow": 7, "emb_month": 12}


@dataclass
class LstmParams:
    """Parameter tensors plus dropout rate.

    ``version`` is bumped by every optimiser step so that a forward cache
    taken before an update cannot be fed to ``backward`` afterwards.
    """

    tensors: dict[str, np.ndarray]
    dropout_rate: float = 0.2
    version: int = 0

    def __post_init__(self):
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")

    @property
    def hidden_size(self) -> int:
        return self.tensors["lstm_Wh"].shape[0]

    @property
    def embed_dims(self) -> dict[str, int]:
        return {k: self.tensors[k].shape[1] for k in EMBEDDINGS}

    def copy(self) -> LstmParams:
        return LstmParams({k: v.copy() for k, v in self.tensors.items()}, self.dropout_rate, self.version)

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.tensors.items()}

    def all_finite(self) -> bool:
        return all(np.isfinite(v).all() for v in self.tensors.values())


def init_params(
    *,
    hidden_size: int,
    n_years: int,
    embed_hour: int,
    embed_dow: int,
    embed_month: int,
    embed_year: int,
    dense_units: int,
    dropout_rate: float,
    seed,
    dtype=np.float64,
) -> LstmParams:
    """Seeded initialisation.

    ``n_years`` counts the training years; one extra out-of-vocabulary row is
    appended to the year table.
    """
    rng = np.random.default_rng(seed)
    H = hidden_size
    g = 1.0 / np.sqrt(H)
    d_in = H + embed_hour + embed_dow + embed_month + embed_year

    def unif(bound, *shape):
        return rng.uniform(-bound, bound, size=shape).astype(dtype)

    b = np.zeros(4 * H, dtype=dtype)
    b[H : 2 * H] = 1.0  # forget gate
    tensors = {
        "emb_hour": unif(0.05, 24, embed_hour),
        "emb_dow": unif(0.05, 7, embed_dow),
        "emb_month": unif(0.05, 12, embed_month),
        "emb_year": unif(0.05, n_years + 1, embed_year),
        "lstm_Wx": unif(g, 1, 4 * H),
        "lstm_Wh": unif(g, H, 4 * H),
        "lstm_b": b,
        "dense1_W": unif(1.0 / np.sqrt(d_in), d_in, dense_units),
        "dense1_b": np.zeros(dense_units, dtype=dtype),
        "dense2_W": unif(1.0 / np.sqrt(dense_units), dense_units, 1),
        "dense2_b": np.zeros(1, dtype=dtype),
    }
    return LstmParams(tensors, dropout_rate)


def _sigmoid_(x):
    """In-place logistic function."""
    with np.errstate(over="ignore"):
        np.negative(x, out=x)
        np.exp(x, out=x)
    x += 1.0
    np.reciprocal(x, out=x)
    return x


def lstm_step(x_t, h_prev, c_prev, Wx, Wh, b):
    """One LSTM timestep. ``x_t`` has shape (B,); returns ``h, c, (i, f, o, g)``."""
    H = Wh.shape[0]
    z = x_t[:, None] * Wx + h_prev @ Wh + b
    sig = _sigmoid_(z[:, : 3 * H])
    i, f, o = sig[:, :H], sig[:, H : 2 * H], sig[:, 2 * H :]
    g = np.tanh(z[:, 3 * H :])
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c, (i, f, o, g)


def dropout_mask(shape, rate: float, rng: np.random.Generator, dtype=np.float64) -> np.ndarray:
    """Inverted-dropout mask: zeros with probability ``rate``, else ``1/(1-rate)``."""
    if rate == 0.0:
        return np.ones(shape, dtype=dtype)
    keep = rng.random(shape) >= rate
    return keep.astype(dtype) / (1.0 - rate)


@dataclass
class ForwardCache:
    version: int
    windows: np.ndarray
    cats: dict[str, np.ndarray]
    hs: np.ndarray  # (L+1, B, H), hs[0] is the zero initial state
    cs: np.ndarray
    gates: np.ndarray  # (L, 4, B, H) post-activation, order i f o g
    tanh_c: np.ndarray  # (L, B, H)
    mask: np.ndarray | None
    feat_dropped: np.ndarray
    pre1: np.ndarray
    act1: np.ndarray


def _check_inputs(params: LstmParams, windows: np.ndarray, cats: dict[str, np.ndarray]):
    if windows.ndim != 2:
        raise DimensionMismatch(f"windows must be 2-D (batch, length), got {windows.shape}")
    B = windows.shape[0]
    for name in ("hour", "dow", "month", "year"):
        idx = cats[name]
        if idx.shape != (B,):
            raise DimensionMismatch(f"category {name!r} has shape {idx.shape}, expected ({B},)")
        table = params.tensors[f"emb_{name}"]
        if B and (idx.min() < 0 or idx.max() >= table.shape[0]):
            raise DimensionMismatch(f"category {name!r} index outside table of {table.shape[0]} rows")


def _gate_major(W: np.ndarray, H: int) -> np.ndarray:
    """(rows, 4H) -> (4, rows, H)."""
    return np.ascontiguousarray(W.reshape(W.shape[0], 4, H).transpose(1, 0, 2))


def forward(
    params: LstmParams,
    windows: np.ndarray,
    cats: dict[str, np.ndarray],
    training: bool = False,
    rng: np.random.Generator | None = None,
    seq_len: int | None = None,
) -> tuple[np.ndarray, ForwardCache]:
    """Predict scaled demand for a batch.

    ``cats`` holds zero-based row indices into the four embedding tables
    (keys ``hour``, ``dow``, ``month``, ``year``). Dropout is applied only
    when ``training`` is true, drawing its mask from ``rng``.
    """
    p = params.tensors
    dt = p["lstm_Wh"].dtype
    windows = np.asarray(windows, dtype=dt)
    _check_inputs(params, windows, cats)
    if seq_len is not None and windows.shape[1] != seq_len:
        raise DimensionMismatch(f"window length {windows.shape[1]} != configured {seq_len}")
    B, L = windows.shape
    H = params.hidden_size

    hs = np.zeros((L + 1, B, H), dtype=dt)
    cs = np.zeros((L + 1, B, H), dtype=dt)
    gates = np.empty((L, 4, B, H), dtype=dt)
    tanh_c = np.empty((L, B, H), dtype=dt)
    Wh4 = _gate_major(p["lstm_Wh"], H)
    # input projection for every timestep at once; input size is 1
    wx4 = p["lstm_Wx"].reshape(4, 1, H)
    b4 = p["lstm_b"].reshape(4, 1, H)
    xproj = windows.T[:, None, :, None] * wx4 + b4  # (L, 4, B, H)
    for t in range(L):
        z = gates[t]
        np.matmul(hs[t], Wh4, out=z)
        z += xproj[t]
        _sigmoid_(z[:3])
        np.tanh(z[3], out=z[3])
        c = cs[t + 1]
        np.multiply(z[1], cs[t], out=c)
        c += z[0] * z[3]
        np.tanh(c, out=tanh_c[t])
        np.multiply(z[2], tanh_c[t], out=hs[t + 1])

    feat = np.concatenate(
        [hs[L]] + [p[f"emb_{k}"][cats[k]] for k in ("hour", "dow", "month", "year")], axis=1
    )
    mask = None
    if training and params.dropout_rate > 0.0:
        if rng is None:
            raise ValueError("training-mode forward with dropout needs an rng")
        mask = dropout_mask(feat.shape, params.dropout_rate, rng, dt)
        feat = feat * mask
    pre1 = feat @ p["dense1_W"] + p["dense1_b"]
    act1 = np.maximum(pre1, 0.0)
    out = (act1 @ p["dense2_W"])[:, 0] + p["dense2_b"][0]
    cache = ForwardCache(params.version, windows, cats, hs, cs, gates, tanh_c, mask, feat, pre1, act1)
    return out, cache


def mse_loss(predictions, targets) -> float:
    y = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    if y.shape != t.shape or y.ndim != 1 or len(y) == 0:
        raise LengthMismatch(f"predictions {y.shape} vs targets {t.shape}")
    return float(np.mean((y - t) ** 2))


def mse_grad(predictions, targets) -> np.ndarray:
    return 2.0 * (np.asarray(predictions) - np.asarray(targets)) / len(predictions)


def backward(params: LstmParams, cache: ForwardCache, dout: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss w.r.t. every tensor, given ``dL/d(output)``."""
    if cache.version != params.version:
        raise StaleCache("parameters changed since this forward pass")
    p = params.tensors
    dt = p["lstm_Wh"].dtype
    dout = np.asarray(dout, dtype=dt)
    L, _, B, H = cache.gates.shape
    grads = {}

    grads["dense2_W"] = cache.act1.T @ dout[:, None]
    grads["dense2_b"] = np.array([dout.sum()], dtype=dt)
    dpre1 = (dout[:, None] * p["dense2_W"][:, 0]) * (cache.pre1 > 0)
    grads["dense1_W"] = cache.feat_dropped.T @ dpre1
    grads["dense1_b"] = dpre1.sum(axis=0)
    dfeat = dpre1 @ p["dense1_W"].T
    if cache.mask is not None:
        dfeat *= cache.mask

    col = H
    for k in ("hour", "dow", "month", "year"):
        name = f"emb_{k}"
        d = p[name].shape[1]
        grads[name] = np.zeros_like(p[name])
        np.add.at(grads[name], cache.cats[k], dfeat[:, col : col + d])
        col += d

    # gate-local derivative factors for every timestep up front; the loop
    # below only carries dh/dc back through time
    i, f, o, g = (cache.gates[:, k] for k in range(4))
    tc = cache.tanh_c
    fac = np.empty((L, 3, B, H), dtype=dt)  # dc -> dz_i, dz_f, dz_g
    fac[:, 0] = g * i * (1.0 - i)
    fac[:, 1] = cache.cs[:L] * f * (1.0 - f)
    fac[:, 2] = i * (1.0 - g * g)
    fac_o = tc * o * (1.0 - o)
    fac_c = o * (1.0 - tc * tc)

    dh = np.ascontiguousarray(dfeat[:, :H])
    dc = np.zeros((B, H), dtype=dt)
    dz_all = np.empty((L, 4, B, H), dtype=dt)
    WhT4 = np.ascontiguousarray(_gate_major(p["lstm_Wh"], H).transpose(0, 2, 1))
    for t in range(L - 1, -1, -1):
        dc += dh * fac_c[t]
        dz = dz_all[t]
        np.multiply(dc, fac[t, :2], out=dz[:2])
        np.multiply(dh, fac_o[t], out=dz[2])
        np.multiply(dc, fac[t, 2], out=dz[3])
        dc *= f[t]
        if t:
            dh = np.matmul(dz, WhT4).sum(axis=0)

    h_prev = cache.hs[:L].reshape(L * B, H)
    x_flat = cache.windows.T.reshape(L * B)
    dz_g = dz_all.transpose(1, 0, 2, 3).reshape(4, L * B, H)
    grads["lstm_Wh"] = np.matmul(h_prev.T, dz_g).transpose(1, 0, 2).reshape(H, 4 * H)
    grads["lstm_Wx"] = (x_flat @ dz_g).reshape(1, 4 * H)
    grads["lstm_b"] = dz_g.sum(axis=1).reshape(4 * H)
    return {k: grads[k] for k in p}
