"""Central finite-difference check of the analytic LSTM gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lstm import GATES, LstmParams, backward, forward, init_params, mse_grad, mse_loss


@dataclass
class GradCheckReport:
    seed: int
    tolerance: float
    group_errors: dict[str, float]

    @property
    def max_rel_error(self) -> float:
        return max(self.group_errors.values())

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def summary(self) -> str:
        lines = [f"{k:<22s} {v:.3e}" for k, v in self.group_errors.items()]
        status = "PASS" if self.passed else "FAIL"
        lines.append(f"max relative error {self.max_rel_error:.3e} (tolerance {self.tolerance:g}) {status}")
        return "\n".join(lines)


def _groups(name: str, shape: tuple[int, ...], hidden: int) -> dict[str, tuple]:
    """Split the stacked gate tensors into one group per gate."""
    if name in ("lstm_Wx", "lstm_Wh"):
        return {f"{name}[{g}]": (slice(None), slice(k * hidden, (k + 1) * hidden)) for k, g in enumerate(GATES)}
    if name == "lstm_b":
        return {f"{name}[{g}]": (slice(k * hidden, (k + 1) * hidden),) for k, g in enumerate(GATES)}
    return {name: tuple(slice(None) for _ in shape)}


def grad_check(
    seed: int = 0,
    tolerance: float = 1e-4,
    *,
    hidden_size: int = 4,
    seq_len: int = 3,
    embed_dim: int = 2,
    dense_units: int = 5,
    batch: int = 6,
    n_years: int = 2,
    dropout_rate: float = 0.2,
    step: float = 1e-5,
) -> GradCheckReport:
    """Compare backprop against central differences on a tiny float64 network.

    The relative error of each parameter group is
    ``||analytic - numeric|| / (||analytic|| + ||numeric||)``. Dropout stays
    on, with the same mask replayed for every loss evaluation.
    """
    rng = np.random.default_rng(seed)
    params = init_params(
        hidden_size=hidden_size,
        n_years=n_years,
        embed_hour=embed_dim,
        embed_dow=embed_dim,
        embed_month=embed_dim,
        embed_year=embed_dim,
        dense_units=dense_units,
        dropout_rate=dropout_rate,
        seed=seed,
        dtype=np.float64,
    )
    # perturb biases away from their structured init so every path carries gradient
    for k in ("lstm_b", "dense1_b", "dense2_b"):
        params.tensors[k] += rng.normal(scale=0.1, size=params.tensors[k].shape)
    # keep half the ReLU units live so a tiny batch cannot zero every gradient
    b1 = params.tensors["dense1_b"]
    b1[::2] = np.abs(b1[::2]) + 0.1
    windows = rng.normal(size=(batch, seq_len))
    cats = {
        "hour": rng.integers(0, 24, batch),
        "dow": rng.integers(0, 7, batch),
        "month": rng.integers(0, 12, batch),
        "year": rng.integers(0, n_years + 1, batch),
    }
    targets = rng.normal(size=batch)
    mask_seed = int(rng.integers(2**31))

    def loss() -> float:
        pred, _ = forward(params, windows, cats, True, np.random.default_rng(mask_seed))
        return mse_loss(pred, targets)

    pred, cache = forward(params, windows, cats, True, np.random.default_rng(mask_seed))
    analytic = backward(params, cache, mse_grad(pred, targets))

    errors: dict[str, float] = {}
    for name, tensor in params.tensors.items():
        numeric = np.zeros_like(tensor)
        for idx in np.ndindex(tensor.shape):
            orig = tensor[idx]
            tensor[idx] = orig + step
            up = loss()
            tensor[idx] = orig - step
            down = loss()
            tensor[idx] = orig
            numeric[idx] = (up - down) / (2 * step)
        for group, sl in _groups(name, tensor.shape, hidden_size).items():
            a, n = analytic[name][sl], numeric[sl]
            denom = np.linalg.norm(a) + np.linalg.norm(n)
            errors[group] = 0.0 if denom == 0 else float(np.linalg.norm(a - n) / denom)
    return GradCheckReport(seed, tolerance, errors)
