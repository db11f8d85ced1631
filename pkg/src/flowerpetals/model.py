"""HiGCN: learnable per-petal polynomial filters with exact gradients.

The forward pass realizes, per petal order p, a filtered sum
sum_k gamma[p,k] * (A_p^k X) pushed through a per-petal linear (or
linear-rectifier-linear) transform; petal outputs are concatenated and
mapped by one output matrix. Gradients are hand-derived reverse-mode
through a short tape; no autodiff framework is involved.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .operators import PropagatedFeatures

__all__ = [
    "HigcnParams",
    "ForwardTape",
    "AdamState",
    "init_params",
    "forward",
    "forward_embedding",
    "loss_and_grad",
    "l1_loss_and_grad",
    "predict_signal",
    "readout_embedding",
    "readout_loss_and_grad",
    "predict_graph_labels",
    "adam_step",
    "strength",
    "save_checkpoint",
    "load_checkpoint",
]

CHECKPOINT_MAGIC = "flowerpetals-checkpoint-v1"


@dataclass(frozen=True)
class HigcnParams:
    """Trainable parameter set (also used as the gradient container).

    ``gamma`` is P x (K+1); ``theta`` holds per-petal transforms, each a
    tuple of one (d x h) or two (d x h, h x h) matrices; ``w`` maps the
    concatenated petal outputs (P*h) to C outputs.
    """

    p_max: int
    k_max: int
    alpha: float
    gamma: np.ndarray
    theta: tuple[tuple[np.ndarray, ...], ...]
    w: np.ndarray
    seed: int = 0

    def __post_init__(self):
        gamma = np.ascontiguousarray(self.gamma, dtype=np.float64)
        if gamma.shape != (self.p_max, self.k_max + 1):
            raise ValueError(f"gamma must be P x (K+1), got {gamma.shape}")
        if len(self.theta) != self.p_max:
            raise ValueError("one theta transform required per petal")
        depth = len(self.theta[0])
        if depth not in (1, 2) or any(len(t) != depth for t in self.theta):
            raise ValueError("theta transforms must all have depth 1 or 2")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(
            self,
            "theta",
            tuple(
                tuple(np.ascontiguousarray(m, dtype=np.float64) for m in t)
                for t in self.theta
            ),
        )
        object.__setattr__(self, "w", np.ascontiguousarray(self.w, dtype=np.float64))

    @property
    def depth(self) -> int:
        return len(self.theta[0])

    @property
    def dims(self) -> tuple[int, int, int]:
        """(input width d, petal output width h, output count C)."""
        d = self.theta[0][0].shape[0]
        h = self.theta[0][-1].shape[1]
        return d, h, self.w.shape[1]

    def named_arrays(self):
        """Yield (name, array) pairs in a fixed serialization order."""
        yield "gamma", self.gamma
        for p, mats in enumerate(self.theta, start=1):
            for i, m in enumerate(mats, start=1):
                yield f"theta{i}_p{p}", m
        yield "w", self.w

    def map_arrays(self, fn) -> "HigcnParams":
        """Structure-preserving map over every parameter array."""
        return replace(
            self,
            gamma=fn("gamma", self.gamma),
            theta=tuple(
                tuple(
                    fn(f"theta{i}_p{p}", m)
                    for i, m in enumerate(mats, start=1)
                )
                for p, mats in enumerate(self.theta, start=1)
            ),
            w=fn("w", self.w),
        )


@dataclass(frozen=True)
class ForwardTape:
    """Intermediates of one forward pass, kept for reverse mode."""

    filtered: tuple[np.ndarray, ...]  # per petal: sum_k gamma[p,k] blocks[p][k]
    pre: tuple[np.ndarray, ...] | None  # pre-rectifier (depth-2 only)
    act: tuple[np.ndarray, ...] | None  # post-rectifier (depth-2 only)
    z: np.ndarray  # concatenated petal outputs
    logits: np.ndarray
    log_probs: np.ndarray | None


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    s = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=(fan_in, fan_out))


def init_params(
    p_max: int,
    k_max: int,
    d: int,
    h: int,
    c: int,
    alpha: float,
    seed: int,
    depth: int = 2,
) -> HigcnParams:
    """Seeded initialization.

    Filter rows start at the decayed profile alpha*(1-alpha)^k with the
    tail mass (1-alpha)^K on the last hop, so every row sums to exactly 1;
    transforms and the output map are Glorot-uniform.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must be in (0, 1]")
    if min(p_max, k_max + 1, d, h, c) < 1:
        raise ValueError("all dimensions must be >= 1")
    if depth not in (1, 2):
        raise ValueError("depth must be 1 or 2")
    row = np.empty(k_max + 1)
    decay = 1.0
    for k in range(k_max):
        row[k] = alpha * decay
        decay *= 1.0 - alpha
    # remaining geometric mass; equals (1-alpha)^K and keeps the row sum exact
    row[k_max] = 1.0 - row[:k_max].sum()
    gamma = np.tile(row, (p_max, 1))

    rng = np.random.default_rng(seed)
    theta = []
    for _ in range(p_max):
        if depth == 1:
            theta.append((_glorot(rng, d, h),))
        else:
            theta.append((_glorot(rng, d, h), _glorot(rng, h, h)))
    w = _glorot(rng, p_max * h, c)
    return HigcnParams(p_max, k_max, alpha, gamma, tuple(theta), w, seed)


def _filtered_sums(params: HigcnParams, feats: PropagatedFeatures) -> list[np.ndarray]:
    sums = []
    for p in range(1, params.p_max + 1):
        petal = feats.blocks[p]
        acc = params.gamma[p - 1, 0] * petal[0]
        for k in range(1, params.k_max + 1):
            acc = acc + params.gamma[p - 1, k] * petal[k]
        sums.append(acc)
    return sums


def _check_compat(params: HigcnParams, feats: PropagatedFeatures) -> None:
    if feats.p_max < params.p_max:
        raise ValueError(
            f"features cover petals up to {feats.p_max}, params need {params.p_max}"
        )
    if feats.k_max < params.k_max:
        raise ValueError(
            f"features cover hops up to {feats.k_max}, params need {params.k_max}"
        )
    if feats.d != params.dims[0]:
        raise ValueError(
            f"feature width {feats.d} != transform input width {params.dims[0]}"
        )


def forward_embedding(
    params: HigcnParams, feats: PropagatedFeatures
) -> tuple[ForwardTape, np.ndarray]:
    """Run the petal filters and transforms; stop at the concatenation Z."""
    _check_compat(params, feats)
    filtered = _filtered_sums(params, feats)
    if params.depth == 2:
        pre = [s @ t[0] for s, t in zip(filtered, params.theta)]
        act = [np.maximum(a, 0.0) for a in pre]
        outs = [a @ t[1] for a, t in zip(act, params.theta)]
    else:
        pre = act = None
        outs = [s @ t[0] for s, t in zip(filtered, params.theta)]
    z = np.hstack(outs)
    tape = ForwardTape(
        filtered=tuple(filtered),
        pre=None if pre is None else tuple(pre),
        act=None if act is None else tuple(act),
        z=z,
        logits=z @ params.w,
        log_probs=None,
    )
    return tape, z


def forward(
    params: HigcnParams, feats: PropagatedFeatures
) -> tuple[ForwardTape, np.ndarray]:
    """Full forward pass to row-wise log-probabilities (max-shifted softmax)."""
    tape, _ = forward_embedding(params, feats)
    logits = tape.logits
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    tape = replace(tape, log_probs=log_probs)
    return tape, log_probs


def _backprop_from_dz(
    params: HigcnParams,
    feats: PropagatedFeatures,
    tape: ForwardTape,
    dz: np.ndarray,
    dw: np.ndarray,
    weight_decay: float,
    decay_gamma: bool = False,
) -> HigcnParams:
    """Shared reverse pass below the concatenation point.

    ``dz`` is the loss gradient at Z; ``dw`` at the output map (already
    including the data term). Weight decay is applied to theta and w only
    unless ``decay_gamma`` is set: filter magnitudes carry the interaction
    strength reading and are not shrunk by default.
    """
    _, h, _ = params.dims
    dgamma = np.zeros_like(params.gamma)
    dtheta = []
    for p in range(1, params.p_max + 1):
        dy = dz[:, (p - 1) * h : p * h]
        mats = params.theta[p - 1]
        if params.depth == 2:
            act = tape.act[p - 1]
            dt2 = act.T @ dy + weight_decay * mats[1]
            dact = dy @ mats[1].T
            dpre = np.where(tape.pre[p - 1] > 0.0, dact, 0.0)
            dt1 = tape.filtered[p - 1].T @ dpre + weight_decay * mats[0]
            dfiltered = dpre @ mats[0].T
            dtheta.append((dt1, dt2))
        else:
            dt1 = tape.filtered[p - 1].T @ dy + weight_decay * mats[0]
            dfiltered = dy @ mats[0].T
            dtheta.append((dt1,))
        petal = feats.blocks[p]
        for k in range(params.k_max + 1):
            dgamma[p - 1, k] = np.sum(petal[k] * dfiltered)
    if decay_gamma:
        dgamma += weight_decay * params.gamma
    return replace(params, gamma=dgamma, theta=tuple(dtheta), w=dw)


def _decay_term(params: HigcnParams, weight_decay: float, decay_gamma: bool) -> float:
    reg = sum(float(np.sum(m * m)) for t in params.theta for m in t)
    reg += float(np.sum(params.w * params.w))
    if decay_gamma:
        reg += float(np.sum(params.gamma * params.gamma))
    return 0.5 * weight_decay * reg


def loss_and_grad(
    params: HigcnParams,
    feats: PropagatedFeatures,
    labels: np.ndarray,
    mask: np.ndarray,
    weight_decay: float = 0.0,
    decay_gamma: bool = False,
) -> tuple[float, HigcnParams]:
    """Masked mean negative log-likelihood plus L2 decay, with exact grads."""
    mask = np.asarray(mask, dtype=np.int64)
    if mask.size == 0:
        raise ValueError("mask must select at least one node")
    labels = np.asarray(labels, dtype=np.int64)
    c = params.dims[2]
    if labels[mask].min() < 0 or labels[mask].max() >= c:
        raise ValueError(f"labels on the mask must lie in [0, {c})")

    tape, log_probs = forward(params, feats)
    m = len(mask)
    loss = -float(log_probs[mask, labels[mask]].mean())
    loss += _decay_term(params, weight_decay, decay_gamma)

    dlogits = np.zeros_like(tape.logits)
    softmax = np.exp(log_probs[mask])
    softmax[np.arange(m), labels[mask]] -= 1.0
    dlogits[mask] = softmax / m
    dw = tape.z.T @ dlogits + weight_decay * params.w
    dz = dlogits @ params.w.T
    grads = _backprop_from_dz(
        params, feats, tape, dz, dw, weight_decay, decay_gamma
    )
    return loss, grads


def l1_loss_and_grad(
    params: HigcnParams,
    feats: PropagatedFeatures,
    targets: np.ndarray,
    mask: np.ndarray,
    weight_decay: float = 0.0,
) -> tuple[float, HigcnParams]:
    """Mean absolute error of the identity-head output on masked entries.

    Regression variant used for signal imputation: C = 1 and no softmax.
    """
    mask = np.asarray(mask, dtype=np.int64)
    if mask.size == 0:
        raise ValueError("mask must select at least one node")
    targets = np.asarray(targets, dtype=np.float64)
    tape, _ = forward_embedding(params, feats)
    pred = tape.logits[:, 0]
    resid = pred[mask] - targets[mask]
    loss = float(np.abs(resid).mean()) + _decay_term(params, weight_decay, False)

    dlogits = np.zeros_like(tape.logits)
    dlogits[mask, 0] = np.sign(resid) / len(mask)
    dw = tape.z.T @ dlogits + weight_decay * params.w
    dz = dlogits @ params.w.T
    grads = _backprop_from_dz(params, feats, tape, dz, dw, weight_decay)
    return loss, grads


def predict_signal(params: HigcnParams, feats: PropagatedFeatures) -> np.ndarray:
    """Identity-head predictions (one scalar per node)."""
    tape, _ = forward_embedding(params, feats)
    return tape.logits[:, 0].copy()


def readout_embedding(
    params: HigcnParams, feats: PropagatedFeatures, readout: str
) -> tuple[ForwardTape, np.ndarray]:
    """Graph-level embedding: mean or sum of Z rows."""
    if readout not in ("mean", "sum"):
        raise ValueError("readout must be 'mean' or 'sum'")
    tape, z = forward_embedding(params, feats)
    vec = z.mean(axis=0) if readout == "mean" else z.sum(axis=0)
    return tape, vec


def readout_loss_and_grad(
    params: HigcnParams,
    graph_feats: list[PropagatedFeatures],
    labels: np.ndarray,
    mask: np.ndarray,
    readout: str,
    weight_decay: float = 0.0,
) -> tuple[float, HigcnParams]:
    """Graph classification: readout over Z, shared output map, mean NLL."""
    mask = np.asarray(mask, dtype=np.int64)
    if mask.size == 0:
        raise ValueError("mask must select at least one graph")
    labels = np.asarray(labels, dtype=np.int64)
    c = params.dims[2]
    if labels[mask].min() < 0 or labels[mask].max() >= c:
        raise ValueError(f"labels on the mask must lie in [0, {c})")
    m = len(mask)
    loss = _decay_term(params, weight_decay, False)
    dw_total = weight_decay * params.w
    # decay gradients enter once, up front; per-graph passes add data terms only
    decayed = params.map_arrays(
        lambda name, a: weight_decay * a if name.startswith("theta") else np.zeros_like(a)
    )
    acc = {name: arr for name, arr in decayed.named_arrays()}
    for gi in mask:
        tape, vec = readout_embedding(params, graph_feats[gi], readout)
        logits = vec @ params.w
        shifted = logits - logits.max()
        log_probs = shifted - np.log(np.exp(shifted).sum())
        loss += -float(log_probs[labels[gi]]) / m

        dlogit = np.exp(log_probs)
        dlogit[labels[gi]] -= 1.0
        dlogit /= m
        dw_total = dw_total + np.outer(vec, dlogit)
        dvec = params.w @ dlogit
        n_g = tape.z.shape[0]
        dz = np.tile(dvec / n_g if readout == "mean" else dvec, (n_g, 1))
        g = _backprop_from_dz(
            params, graph_feats[gi], tape, dz, np.zeros_like(params.w), 0.0
        )
        for name, arr in g.named_arrays():
            acc[name] = acc[name] + arr
    acc["w"] = dw_total

    def pick(name, a):
        return acc[name]

    return loss, params.map_arrays(pick)


def predict_graph_labels(
    params: HigcnParams, graph_feats: list[PropagatedFeatures], readout: str
) -> np.ndarray:
    out = []
    for feats in graph_feats:
        _, vec = readout_embedding(params, feats, readout)
        out.append(int(np.argmax(vec @ params.w)))
    return np.asarray(out, dtype=np.int64)


@dataclass
class AdamState:
    """First/second moment accumulators plus the step counter."""

    t: int
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def zeros_like(cls, params: HigcnParams) -> "AdamState":
        return cls(
            0,
            {name: np.zeros_like(a) for name, a in params.named_arrays()},
            {name: np.zeros_like(a) for name, a in params.named_arrays()},
        )


def adam_step(
    params: HigcnParams,
    grads: HigcnParams,
    state: AdamState,
    lr: float,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> tuple[HigcnParams, AdamState]:
    """One bias-corrected Adam update; returns fresh params and state."""
    b1, b2 = betas
    t = state.t + 1
    grad_by_name = dict(grads.named_arrays())
    new_m, new_v = {}, {}

    def update(name, a):
        g = grad_by_name[name]
        m = b1 * state.m[name] + (1.0 - b1) * g
        v = b2 * state.v[name] + (1.0 - b2) * g * g
        new_m[name] = m
        new_v[name] = v
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        return a - lr * m_hat / (np.sqrt(v_hat) + eps)

    return params.map_arrays(update), AdamState(t, new_m, new_v)


def strength(params: HigcnParams) -> np.ndarray:
    """Per-order interaction strength: row-wise absolute sum of the filters."""
    return np.abs(params.gamma).sum(axis=1)


def save_checkpoint(params: HigcnParams, path) -> None:
    """JSON header line plus a flat little-endian float64 parameter block."""
    d, h, c = params.dims
    header = {
        "magic": CHECKPOINT_MAGIC,
        "p_max": params.p_max,
        "k_max": params.k_max,
        "alpha": params.alpha,
        "depth": params.depth,
        "d": d,
        "h": h,
        "c": c,
        "seed": params.seed,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for _, arr in params.named_arrays():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> HigcnParams:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("magic") != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a model checkpoint")
        blob = fh.read()
    skeleton = init_params(
        header["p_max"],
        header["k_max"],
        header["d"],
        header["h"],
        header["c"],
        header["alpha"],
        header["seed"],
        header["depth"],
    )
    offset = 0

    def fill(name, a):
        nonlocal offset
        flat = np.frombuffer(blob, dtype="<f8", count=a.size, offset=offset)
        offset += a.size * 8
        return flat.reshape(a.shape).astype(np.float64)

    params = skeleton.map_arrays(fill)
    if offset != len(blob):
        raise ValueError(f"{path}: parameter block size mismatch")
    return params
