"""Numeric kernels: rotary positional transform, mean and attention pooling,
pair combination, analytic head gradients and a finite-difference checker.

The attention pooling head is fixed as: depthwise width-5 convolution (same
padding) over the sequence axis, a per-position scalar score from a learned
vector, masked softmax over valid positions, weighted sum of the convolved
features.  Kernel width and output size are configuration knobs.  Padding is
handled by validity masks everywhere; padded rows never influence results.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from prottok.errors import KernelError

ROTARY_BASE = 10000.0
TENSORS_MAGIC = "prottok-tensors"
TENSORS_VERSION = "v1"


def rotary_apply(x: np.ndarray, position: int, base: float = ROTARY_BASE) -> np.ndarray:
    """Rotate each 2-subspace (x[2i], x[2i+1]) by position * base**(-2i/d).

    An isometry for every position; inner products of rotated query/key pairs
    depend only on the relative position.
    """
    x = np.asarray(x, np.float64)
    d = x.shape[-1]
    if d % 2 != 0:
        raise KernelError(f"rotary transform needs an even dimension, got {d}")
    theta = base ** (-2.0 * np.arange(d // 2) / d)
    angle = position * theta
    cos, sin = np.cos(angle), np.sin(angle)
    even, odd = x[..., ::2], x[..., 1::2]
    out = np.empty_like(x)
    out[..., ::2] = even * cos - odd * sin
    out[..., 1::2] = even * sin + odd * cos
    return out


def mean_pool(hidden: np.ndarray, valid_mask: np.ndarray) -> np.ndarray:
    """Arithmetic mean over valid rows only."""
    hidden = np.asarray(hidden, np.float64)
    valid = np.asarray(valid_mask, bool)
    if valid.shape != (hidden.shape[0],):
        raise KernelError("valid_mask must have one entry per row")
    n = int(valid.sum())
    if n == 0:
        raise KernelError("mean_pool needs at least one valid row")
    return hidden[valid].sum(axis=0) / n


def pair_combine(e1: np.ndarray, e2: np.ndarray) -> np.ndarray:
    """Elementwise sum; symmetric in its arguments."""
    e1 = np.asarray(e1, np.float64)
    e2 = np.asarray(e2, np.float64)
    if e1.shape != e2.shape:
        raise KernelError(f"embedding shapes differ: {e1.shape} vs {e2.shape}")
    return e1 + e2


@dataclass(frozen=True)
class Attention1dHead:
    """Parameters of the attention pooling head and its output probe."""

    conv_kernel: np.ndarray  # (width, d) depthwise filters
    conv_bias: np.ndarray  # (d,)
    attention_vector: np.ndarray  # (d,)
    output_map: np.ndarray  # (d, o)
    output_bias: np.ndarray  # (o,)

    # No bias on the attention score: softmax is shift-invariant, so such a
    # parameter would be unidentifiable (its gradient is identically zero).

    def __post_init__(self):
        for name in ("conv_kernel", "conv_bias", "attention_vector", "output_map", "output_bias"):
            arr = np.asarray(getattr(self, name), np.float64)
            object.__setattr__(self, name, arr)
            if not np.all(np.isfinite(arr)):
                raise KernelError(f"non-finite values in {name}")
        if self.conv_kernel.shape[0] % 2 != 1:
            raise KernelError("convolution width must be odd for same-length padding")
        if self.conv_kernel.shape[1] != self.conv_bias.shape[0]:
            raise KernelError("conv kernel and bias disagree on the channel count")

    @property
    def width(self) -> int:
        return self.conv_kernel.shape[0]

    @property
    def dim(self) -> int:
        return self.conv_kernel.shape[1]


def random_attention1d_head(
    dim: int, out_dim: int = 1, width: int = 5, seed: int = 0
) -> Attention1dHead:
    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(dim)
    return Attention1dHead(
        conv_kernel=rng.normal(0, scale, (width, dim)),
        conv_bias=rng.normal(0, scale, dim),
        attention_vector=rng.normal(0, scale, dim),
        output_map=rng.normal(0, scale, (dim, out_dim)),
        output_bias=rng.normal(0, scale, out_dim),
    )


def _convolved(head: Attention1dHead, hidden: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Depthwise same-padding convolution over masked rows."""
    L, d = hidden.shape
    masked = hidden * valid[:, None]
    half = head.width // 2
    padded = np.zeros((L + 2 * half, d))
    padded[half : half + L] = masked
    conv = np.tile(head.conv_bias, (L, 1))
    for j in range(head.width):
        conv += head.conv_kernel[j] * padded[j : j + L]
    return conv


def _attention_weights(head: Attention1dHead, conv: np.ndarray, valid: np.ndarray) -> np.ndarray:
    scores = conv @ head.attention_vector
    shifted = scores[valid] - scores[valid].max()
    exp = np.exp(shifted)
    weights = np.zeros(conv.shape[0])
    weights[valid] = exp / exp.sum()
    return weights


def attention1d_pool(
    hidden: np.ndarray, head: Attention1dHead, valid_mask: np.ndarray
) -> np.ndarray:
    """Softmax-weighted sum of the convolved features over valid positions."""
    hidden = np.asarray(hidden, np.float64)
    valid = np.asarray(valid_mask, bool)
    if hidden.ndim != 2 or hidden.shape[1] != head.dim:
        raise KernelError(f"hidden states must be (L, {head.dim})")
    if valid.shape != (hidden.shape[0],):
        raise KernelError("valid_mask must have one entry per row")
    if not valid.any():
        raise KernelError("attention1d_pool needs at least one valid row")
    conv = _convolved(head, hidden, valid)
    weights = _attention_weights(head, conv, valid)
    return weights @ conv


def head_predict(head: Attention1dHead, hidden: np.ndarray, valid_mask: np.ndarray) -> np.ndarray:
    """Full probe output: linear map of the pooled vector."""
    pooled = attention1d_pool(hidden, head, valid_mask)
    return pooled @ head.output_map + head.output_bias


def head_gradients(
    head: Attention1dHead,
    hidden: np.ndarray,
    valid_mask: np.ndarray,
    upstream: np.ndarray,
) -> dict[str, np.ndarray]:
    """Analytic gradients of upstream . attention1d_pool(hidden) with respect
    to every head parameter.

    The pooled vector does not involve the output map, so `output_map` and
    `output_bias` receive exact zeros.
    """
    hidden = np.asarray(hidden, np.float64)
    valid = np.asarray(valid_mask, bool)
    upstream = np.asarray(upstream, np.float64)
    if upstream.shape != (head.dim,):
        raise KernelError(f"upstream must be a vector of dimension {head.dim}")
    if hidden.ndim != 2 or hidden.shape[1] != head.dim:
        raise KernelError(f"hidden states must be (L, {head.dim})")
    if valid.shape != (hidden.shape[0],):
        raise KernelError("valid_mask must have one entry per row")
    if not valid.any():
        raise KernelError("head_gradients needs at least one valid row")

    L = hidden.shape[0]
    conv = _convolved(head, hidden, valid)
    weights = _attention_weights(head, conv, valid)
    pooled = weights @ conv

    u_dot_c = conv @ upstream
    # d loss / d score_t, via the softmax Jacobian (zero at padded rows).
    g = weights * (u_dot_c - upstream @ pooled)
    # d loss / d conv_t: direct pooling term plus the score path.
    d_conv = weights[:, None] * upstream[None, :] + g[:, None] * head.attention_vector[None, :]
    d_conv[~valid] = 0.0

    half = head.width // 2
    masked = hidden * valid[:, None]
    padded = np.zeros((L + 2 * half, head.dim))
    padded[half : half + L] = masked
    d_kernel = np.empty_like(head.conv_kernel)
    for j in range(head.width):
        d_kernel[j] = (d_conv * padded[j : j + L]).sum(axis=0)

    return {
        "conv_kernel": d_kernel,
        "conv_bias": d_conv.sum(axis=0),
        "attention_vector": conv.T @ g,
        "output_map": np.zeros_like(head.output_map),
        "output_bias": np.zeros_like(head.output_bias),
    }


def finite_diff_check(f, params: dict[str, np.ndarray], analytic: dict[str, np.ndarray],
                      step: float = 1e-5) -> float:
    """Worst relative error between central differences of ``f(params)`` and
    the supplied analytic gradients.

    The error denominator is max(|analytic|, |numeric|, 1e-8) per parameter.
    """
    worst = 0.0
    for name, value in params.items():
        value = np.asarray(value, np.float64)
        grad = np.asarray(analytic[name], np.float64)
        flat = value.reshape(-1).copy()
        for i in range(flat.size):
            perturbed = flat.copy()
            perturbed[i] = flat[i] + step
            f_plus = f({**params, name: perturbed.reshape(value.shape)})
            perturbed[i] = flat[i] - step
            f_minus = f({**params, name: perturbed.reshape(value.shape)})
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise KernelError(f"non-finite objective while perturbing {name}")
            numeric = (f_plus - f_minus) / (2 * step)
            a = float(grad.reshape(-1)[i])
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst


def save_head(head: Attention1dHead) -> bytes:
    """Versioned tensor table (name, shape, values at 17 significant digits)."""
    out = io.StringIO()
    out.write(f"{TENSORS_MAGIC} {TENSORS_VERSION}\n")
    tensors = {
        "conv_kernel": head.conv_kernel,
        "conv_bias": head.conv_bias,
        "attention_vector": head.attention_vector,
        "output_map": head.output_map,
        "output_bias": head.output_bias,
    }
    for name, arr in tensors.items():
        shape = " ".join(str(s) for s in arr.shape)
        out.write(f"{name} {shape}\n")
        out.write(" ".join(f"{v:.17g}" for v in arr.reshape(-1)) + "\n")
    return out.getvalue().encode("utf-8")


def load_head(data: bytes) -> Attention1dHead:
    lines = data.decode("utf-8").splitlines()
    if not lines or lines[0].split() != [TENSORS_MAGIC, TENSORS_VERSION]:
        raise KernelError("bad tensor table header")
    tensors: dict[str, np.ndarray] = {}
    i = 1
    while i < len(lines):
        if not lines[i]:
            i += 1
            continue
        parts = lines[i].split()
        name, shape = parts[0], tuple(int(s) for s in parts[1:])
        if i + 1 >= len(lines):
            raise KernelError(f"tensor {name!r} is missing its values")
        values = np.array([float(v) for v in lines[i + 1].split()], np.float64)
        tensors[name] = values.reshape(shape)
        i += 2
    try:
        return Attention1dHead(
            conv_kernel=tensors["conv_kernel"],
            conv_bias=tensors["conv_bias"],
            attention_vector=tensors["attention_vector"],
            output_map=tensors["output_map"],
            output_bias=tensors["output_bias"],
        )
    except KeyError as missing:
        raise KernelError(f"tensor table missing {missing}") from None
