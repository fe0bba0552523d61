"""Faithful states on full matrix algebras, in a fixed diagonal eigenbasis.

A state is a strictly positive probability vector p defining the density
matrix rho = diag(p).  The commutant copy of the algebra is identified with
the matrix algebra itself through c <-> 1 (x) c on the GNS space, so the
modular identification j becomes plain transposition in the fixed basis and
the GNS cyclic vector is sum_i sqrt(p_i) e_i (x) e_i.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .kernel import DEFAULT_TOL, as_matrix, deterministic_eigh, frob_norm, vec


@dataclass(frozen=True, eq=False)
class FaithfulState:
    """Strictly positive spectrum summing to one; rho = diag(spectrum)."""

    spectrum: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.spectrum.shape[0])

    @cached_property
    def rho(self) -> np.ndarray:
        return np.diag(self.spectrum).astype(complex)

    @cached_property
    def sqrt_spectrum(self) -> np.ndarray:
        return np.sqrt(self.spectrum)

    @cached_property
    def inv_sqrt_spectrum(self) -> np.ndarray:
        return 1.0 / np.sqrt(self.spectrum)

    @cached_property
    def kms_weights(self) -> np.ndarray:
        """Diagonal of the superoperator X -> rho^1/2 X rho^1/2 (column stacking)."""
        return np.kron(self.sqrt_spectrum, self.sqrt_spectrum)

    def expectation(self, a) -> complex:
        a = as_matrix(a)
        return complex(np.sum(self.spectrum * np.diag(a)))

    def same_state(self, other: "FaithfulState", tol: float = DEFAULT_TOL) -> bool:
        return self.dim == other.dim and bool(
            np.max(np.abs(self.spectrum - other.spectrum)) <= tol
        )

    def to_json(self) -> dict:
        return {"dim": self.dim, "spectrum": [float(p) for p in self.spectrum]}


def new_faithful_state(p) -> FaithfulState:
    """Validate a probability vector and wrap it as a state."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise ValueError("spectrum must be a non-empty vector")
    if np.min(p) <= 0.0:
        raise ValueError("state not faithful: spectrum has a non-positive entry")
    if abs(p.sum() - 1.0) > 1e-12:
        raise ValueError(f"not normalized: spectrum sums to {p.sum()!r}")
    return FaithfulState(spectrum=p.copy())


def state_from_json(obj) -> FaithfulState:
    try:
        dim, spectrum = int(obj["dim"]), obj["spectrum"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed state object: {exc}") from exc
    if len(spectrum) != dim:
        raise ValueError("malformed state object: dim does not match spectrum length")
    return new_faithful_state(spectrum)


def canonicalize_density_matrix(rho, tol: float = DEFAULT_TOL):
    """Diagonalize a general density matrix into a FaithfulState.

    Returns (state, unitary) with rho = U diag(p) U*.  A matrix that is
    already diagonal keeps its supplied order (degenerate blocks included) and
    gets unitary None; otherwise eigenvalues are sorted descending with fixed
    eigenvector phases, so the frame change is deterministic.
    """
    rho = as_matrix(rho)
    n = rho.shape[0]
    if rho.shape != (n, n):
        raise ValueError("density matrix must be square")
    herm_defect = frob_norm(rho - rho.conj().T)
    if herm_defect > tol * max(1.0, frob_norm(rho)):
        raise ValueError("density matrix is not Hermitian")
    off = rho - np.diag(np.diag(rho))
    if frob_norm(off) <= tol * max(1.0, frob_norm(rho)):
        return new_faithful_state(np.real(np.diag(rho))), None
    evals, evecs = deterministic_eigh((rho + rho.conj().T) / 2.0)
    if np.min(evals) <= tol:
        raise ValueError(
            f"state not faithful: smallest eigenvalue {np.min(evals):.3e}"
        )
    return new_faithful_state(evals), evecs


def gns_vector(s: FaithfulState) -> np.ndarray:
    """The unit vector sum_i sqrt(p_i) e_i (x) e_i in C^(n*n)."""
    n = s.dim
    v = np.zeros(n * n, dtype=complex)
    v[np.arange(n) * n + np.arange(n)] = s.sqrt_spectrum
    return v


def kms_pairing(s: FaithfulState, a, b) -> complex:
    """Tr(rho^1/2 a rho^1/2 b^T), the bilinear pairing implemented by the GNS vector."""
    a, b = as_matrix(a), as_matrix(b)
    n = s.dim
    if a.shape != (n, n) or b.shape != (n, n):
        raise ValueError("kms_pairing operands must match the state dimension")
    r = s.sqrt_spectrum
    return complex(np.sum((r[:, None] * a * r[None, :]) * b))


def modular_transpose(a) -> np.ndarray:
    """Transpose in the fixed basis; identifies the algebra with its commutant copy."""
    return as_matrix(a).T.copy()


@dataclass(frozen=True, eq=False)
class System:
    """A faithful state together with dynamics preserving it.

    ``dynamics`` is either a QuantumChannel (kind "channel") or a
    LindbladGenerator (kind "generator"); both expose an endomorphic
    superoperator in the same vectorization convention.
    """

    state: FaithfulState
    dynamics: object

    def __post_init__(self):
        d = self.dynamics
        if getattr(d, "dim_in", None) != self.state.dim or getattr(
            d, "dim_out", None
        ) != self.state.dim:
            raise ValueError("system dynamics must be endomorphic on the state's algebra")
        res = state_preservation_residual(self)
        if res > 1e-6 * max(1.0, frob_norm(d.superoperator)):
            raise ValueError(
                f"dynamics does not preserve the state (residual {res:.3e})"
            )

    @property
    def kind(self) -> str:
        return self.dynamics.kind

    @property
    def dim(self) -> int:
        return self.state.dim


def state_preservation_residual(sys: System) -> float:
    """How far mu o alpha is from mu (channel) or mu o L from 0 (generator)."""
    rho_vec = vec(sys.state.rho)
    image = sys.dynamics.superoperator.conj().T @ rho_vec
    if sys.kind == "generator":
        return float(np.linalg.norm(image))
    return float(np.linalg.norm(image - rho_vec))


def system(state: FaithfulState, dynamics) -> System:
    return System(state=state, dynamics=dynamics)
