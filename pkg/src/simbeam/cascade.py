"""Discrete phase stack and the wave-domain beamforming cascade.

The cascade is G = Phi^L W^L ... Phi^2 W^2 Phi^1, so layer 1 is applied
first.  ``linearize_layer`` extracts, for a chosen layer l and user i, the
matrix C_i^l with C_i^l phi^l = G w_i^1 p_i, which lets the phase optimizer
treat one layer at a time as a quadratic problem.

Layer indices are 1-based in all public functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelModel


class PhaseStack:
    """L x N grid of meta-atom phases at bit depth b.

    In discrete mode (``b`` a positive int) the canonical representation is
    the integer index grid t with theta = 2 pi t / 2^b.  Continuous mode
    (``b=None``) stores raw angles.  Single-writer: mutate via
    :meth:`set_layer` only.
    """

    def __init__(self, b, L: int, N: int, indices=None, theta=None):
        if b is not None and (not isinstance(b, (int, np.integer)) or b < 1):
            raise ValueError(f"bit depth must be a positive int or None, got {b!r}")
        self.b = None if b is None else int(b)
        self.L = int(L)
        self.N = int(N)
        if self.b is None:
            self.indices = None
            self.theta = np.zeros((L, N)) if theta is None else np.array(theta, dtype=float)
        else:
            if indices is None:
                indices = np.zeros((L, N), dtype=np.int64)
            self.indices = None
            self.theta = np.zeros((L, N))
            for layer in range(1, L + 1):
                self.set_layer(layer, np.asarray(indices)[layer - 1])
        if self.theta.shape != (L, N):
            raise ValueError(f"phase grid must be {(L, N)}, got {self.theta.shape}")

    @classmethod
    def random(cls, b, L: int, N: int, rng: np.random.Generator) -> "PhaseStack":
        """Uniform draw on the b-bit grid, or on [0, 2 pi) when continuous."""
        if b is None:
            return cls(None, L, N, theta=rng.uniform(0.0, 2.0 * np.pi, size=(L, N)))
        return cls(b, L, N, indices=rng.integers(0, 2**b, size=(L, N)))

    def set_layer(self, layer: int, values) -> None:
        """Replace layer ``layer`` (1-based) with new indices or raw angles."""
        if not 1 <= layer <= self.L:
            raise ValueError(f"layer {layer} out of range 1..{self.L}")
        values = np.asarray(values)
        if values.shape != (self.N,):
            raise ValueError(f"layer values must have shape ({self.N},)")
        if self.b is None:
            self.theta[layer - 1] = values.astype(float)
            return
        idx = values.astype(np.int64)
        if not np.array_equal(idx, values):
            raise ValueError("discrete stacks take integer indices")
        if idx.min() < 0 or idx.max() >= 2**self.b:
            raise ValueError(f"indices must lie in [0, {2**self.b})")
        if self.indices is None:
            self.indices = np.zeros((self.L, self.N), dtype=np.int64)
        self.indices[layer - 1] = idx
        self.theta[layer - 1] = idx * (2.0 * np.pi / 2**self.b)

    def phases(self) -> np.ndarray:
        """Unit-modulus phase factors e^{j theta}, shape (L, N)."""
        return np.exp(1j * self.theta)

    def phi(self, layer: int) -> np.ndarray:
        if not 1 <= layer <= self.L:
            raise ValueError(f"layer {layer} out of range 1..{self.L}")
        return np.exp(1j * self.theta[layer - 1])

    def copy(self) -> "PhaseStack":
        if self.b is None:
            return PhaseStack(None, self.L, self.N, theta=self.theta.copy())
        return PhaseStack(self.b, self.L, self.N, indices=self.indices.copy())

    def to_text(self) -> str:
        """Plain-text matrix, L rows by N columns (indices, or angles when continuous)."""
        if self.b is None:
            rows = (" ".join(repr(float(v)) for v in row) for row in self.theta)
        else:
            rows = (" ".join(str(int(v)) for v in row) for row in self.indices)
        return "\n".join(rows) + "\n"

    @classmethod
    def from_text(cls, text: str, b) -> "PhaseStack":
        rows = [line.split() for line in text.strip().splitlines()]
        L, N = len(rows), len(rows[0])
        if b is None:
            return cls(None, L, N, theta=np.array(rows, dtype=float))
        return cls(b, L, N, indices=np.array(rows, dtype=np.int64))


@dataclass
class CascadeOperator:
    """Snapshot of the cascade G and the per-user effective vectors G w_k^1."""

    G: np.ndarray          # (N, N)
    effective: np.ndarray  # (N, K), column k is g_k = G w_k^1


def _check_dims(stack: PhaseStack, model: ChannelModel) -> None:
    if stack.L != model.L or stack.N != model.N:
        raise ValueError(
            f"stack is {stack.L}x{stack.N} but model expects {model.L}x{model.N}")


def materialize_G(stack: PhaseStack, model: ChannelModel) -> CascadeOperator:
    """Compute G = Phi^L W^L ... Phi^2 W^2 Phi^1 and the per-user g_k."""
    _check_dims(stack, model)
    phases = stack.phases()
    G = np.diag(phases[0])
    for layer in range(2, stack.L + 1):
        G = phases[layer - 1, :, None] * (model.W_for_layer(layer) @ G)
    return CascadeOperator(G=G, effective=G @ model.w1)


def suffix_operators(stack: PhaseStack, model: ChannelModel) -> list:
    """Suffix products T_l = Phi^L W^L ... Phi^{l+1} W^{l+1} for l = 1..L.

    ``T[l-1]`` completes the cascade above layer l; T_L is the identity.
    Used to cache the per-sweep work that makes linearization cheap.
    """
    _check_dims(stack, model)
    N = model.N
    phases = stack.phases()
    T = [None] * stack.L
    T[stack.L - 1] = np.eye(N, dtype=complex)
    for layer in range(stack.L, 1, -1):
        # T_{l-1} = T_l Phi^l W^l
        T[layer - 2] = T[layer - 1] @ (phases[layer - 1, :, None] * model.W_for_layer(layer))
    return T


def prefix_vector(stack: PhaseStack, model: ChannelModel, layer: int,
                  user: int, p_user: float) -> np.ndarray:
    """Signal v_i^l = W^l Phi^{l-1} ... Phi^1 w_i^1 p_i arriving at layer ``layer``.

    For layer 1 this is simply w_i^1 p_i (the antenna feed).
    """
    _check_dims(stack, model)
    if not 1 <= user <= model.K:
        raise ValueError(f"user {user} out of range 1..{model.K}")
    v = model.w1[:, user - 1] * p_user
    for l in range(2, layer + 1):
        v = model.W_for_layer(l) @ (stack.phi(l - 1) * v)
    return v


def linearize_layer(stack: PhaseStack, model: ChannelModel, layer: int,
                    user: int, p_user: float, *, suffix=None, prefix=None) -> np.ndarray:
    """Matrix C_i^l with C_i^l phi^l = G w_i^1 p_i.

    C_i^l = T_l diag(v_i^l), which reduces to diag(w_i^1 p_i) completed by
    the upper cascade at layer 1 and to a bare diagonal at layer L.
    ``suffix`` / ``prefix`` accept precomputed T_l and v_i^l for the hot path.
    """
    if not 1 <= layer <= stack.L:
        raise ValueError(f"layer {layer} out of range 1..{stack.L}")
    if suffix is None:
        suffix = suffix_operators(stack, model)[layer - 1]
    if prefix is None:
        prefix = prefix_vector(stack, model, layer, user, p_user)
    return suffix * prefix[None, :]
