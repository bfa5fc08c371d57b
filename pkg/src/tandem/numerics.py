"""Small dense-math substrate: affine maps, sigmoid, distances and RNG streams.

Everything is float64. Random streams come from numpy's PCG64 bit generator
seeded through ``SeedSequence``, which is portable across platforms and lets
each trial index own an independent stream.
"""
import numpy as np

from .errors import ContractError

MAX_SEED = 2**64 - 1


def as_vector(x, name="x"):
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ContractError(f"{name} must be one-dimensional, got shape {v.shape}")
    return v


def affine(w, x, b):
    """Return ``w @ x + b`` after checking shapes."""
    w = np.asarray(w, dtype=np.float64)
    x = as_vector(x)
    b = as_vector(b, "b")
    if w.ndim != 2 or w.shape[1] != x.shape[0] or w.shape[0] != b.shape[0]:
        raise ContractError(
            f"affine shape mismatch: w {w.shape}, x {x.shape}, b {b.shape}"
        )
    return w @ x + b


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def euclidean_distance(a, b):
    a = as_vector(a, "a")
    b = as_vector(b, "b")
    if a.shape != b.shape:
        raise ContractError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    d = a - b
    return float(np.sqrt(d @ d))


def make_rng(seed):
    """Generator for a 64-bit unsigned seed."""
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ContractError(f"seed must fit in 64 unsigned bits, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def stream_rng(base_seed, index):
    """Independent stream ``index`` under ``base_seed``.

    Trial ``t`` can be reproduced without running trials ``0..t-1``.
    """
    base_seed, index = int(base_seed), int(index)
    if not 0 <= base_seed <= MAX_SEED or index < 0:
        raise ContractError(f"bad stream key ({base_seed}, {index})")
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([base_seed, index]))
    )


def uniform_draw(rng, lo, hi):
    if not lo < hi:
        raise ContractError(f"uniform_draw needs lo < hi, got [{lo}, {hi})")
    return float(rng.uniform(lo, hi))
