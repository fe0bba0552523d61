"""Completely positive maps as superoperators, with dual constructions.

A channel eta: M_n -> M_m is stored as its m^2 x n^2 superoperator in the
column-stacking convention, vec(eta(X)) = S vec(X).  The Choi matrix is
sum_ij E_ij (x) eta(E_ij) and is positive semidefinite exactly when eta is
completely positive.  Kraus input describes the Heisenberg-picture map
a -> sum_j V_j* a V_j.

Three duals are provided for state-preserving maps, all exact closed forms
for diagonal states:

* ``dual``: the adjoint with respect to the bilinear pairing
  Tr(rho^1/2 a rho^1/2 b^T); superoperator W_in^-1 S^T W_out with
  W = rho^1/2 (x) rho^1/2.
* ``kms_dual``: transpose-conjugated dual, the adjoint for the KMS pairing
  Tr(rho^1/2 a rho^1/2 b).
* ``theta_kms_dual``: Theta o kms_dual o Theta for a reversing operation Theta.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .kernel import (
    DEFAULT_TOL,
    PSD_EIG_FLOOR,
    as_matrix,
    close,
    frob_norm,
    matrix_from_json,
    matrix_to_json,
    matrix_unit,
    nullspace,
    unvec,
    vec,
)
from .states import FaithfulState


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """Linear map between matrix algebras in superoperator form."""

    dim_in: int
    dim_out: int
    superoperator: np.ndarray

    def __post_init__(self):
        s = as_matrix(self.superoperator)
        expected = (self.dim_out**2, self.dim_in**2)
        if s.shape != expected:
            raise ValueError(f"superoperator shape {s.shape} != {expected}")
        object.__setattr__(self, "superoperator", s)

    @property
    def kind(self) -> str:
        return "channel"

    @cached_property
    def choi(self) -> np.ndarray:
        n, m = self.dim_in, self.dim_out
        s4 = self.superoperator.reshape(m, m, n, n)
        return s4.transpose(3, 1, 2, 0).reshape(n * m, n * m)

    def to_json(self) -> dict:
        return {
            "dim_in": self.dim_in,
            "dim_out": self.dim_out,
            "superoperator": matrix_to_json(self.superoperator),
        }


def channel_from_function(f, dim_in: int, dim_out: int) -> QuantumChannel:
    s = np.zeros((dim_out**2, dim_in**2), dtype=complex)
    for j in range(dim_in):
        for i in range(dim_in):
            s[:, i + dim_in * j] = vec(f(matrix_unit(dim_in, i, j)))
    return QuantumChannel(dim_in=dim_in, dim_out=dim_out, superoperator=s)


def channel_from_superoperator(s, dim_in: int, dim_out: int) -> QuantumChannel:
    return QuantumChannel(dim_in=dim_in, dim_out=dim_out, superoperator=as_matrix(s))


def channel_from_kraus(kraus) -> QuantumChannel:
    """Heisenberg-picture Kraus form a -> sum_j V_j* a V_j."""
    ops = [as_matrix(v) for v in kraus]
    if not ops:
        raise ValueError("kraus list must be non-empty")
    n, m = ops[0].shape
    s = np.zeros((m * m, n * n), dtype=complex)
    for v in ops:
        if v.shape != (n, m):
            raise ValueError("kraus operators must share one shape")
        s += np.kron(v.T, v.conj().T)
    return QuantumChannel(dim_in=n, dim_out=m, superoperator=s)


def identity_channel(n: int) -> QuantumChannel:
    return QuantumChannel(dim_in=n, dim_out=n, superoperator=np.eye(n * n, dtype=complex))


def constant_channel(s_in: FaithfulState, dim_out: int | None = None) -> QuantumChannel:
    """a -> Tr(rho a) 1."""
    m = s_in.dim if dim_out is None else dim_out
    rho_vec = vec(s_in.rho).conj()
    one_vec = vec(np.eye(m, dtype=complex))
    return QuantumChannel(
        dim_in=s_in.dim, dim_out=m, superoperator=np.outer(one_vec, rho_vec)
    )


def apply(ch: QuantumChannel, a) -> np.ndarray:
    a = as_matrix(a)
    if a.shape != (ch.dim_in, ch.dim_in):
        raise ValueError(f"operand shape {a.shape} != ({ch.dim_in}, {ch.dim_in})")
    return unvec(ch.superoperator @ vec(a), ch.dim_out)


def compose_channels(f: QuantumChannel, g: QuantumChannel) -> QuantumChannel:
    """f o g (apply g first)."""
    if g.dim_out != f.dim_in:
        raise ValueError("channel dimensions do not chain")
    return QuantumChannel(
        dim_in=g.dim_in, dim_out=f.dim_out, superoperator=f.superoperator @ g.superoperator
    )


def transpose_superop(n: int) -> np.ndarray:
    """Superoperator of X -> X^T (the commutation matrix)."""
    t = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            t[i + n * j, j + n * i] = 1.0
    return t


@dataclass(frozen=True, eq=False)
class UcpReport:
    cp: bool
    unital: bool
    schwarz_witness: bool
    choi_min_eig: float
    unital_residual: float

    @property
    def ucp(self) -> bool:
        return self.cp and self.unital and self.schwarz_witness

    def to_json(self) -> dict:
        return {
            "cp": self.cp,
            "unital": self.unital,
            "schwarz_witness": self.schwarz_witness,
            "ucp": self.ucp,
            "choi_min_eig": self.choi_min_eig,
            "unital_residual": self.unital_residual,
        }


def validate_ucp(
    ch: QuantumChannel, tol: float = DEFAULT_TOL, seed: int = 0, samples: int = 20
) -> UcpReport:
    """Complete positivity via the Choi matrix, unitality, and a sampled Schwarz check."""
    choi = (ch.choi + ch.choi.conj().T) / 2.0
    herm_defect = frob_norm(ch.choi - ch.choi.conj().T)
    evals = np.linalg.eigvalsh(choi)
    min_eig = float(evals[0]) if herm_defect <= tol * max(1.0, frob_norm(choi)) else -np.inf
    cp = min_eig >= -PSD_EIG_FLOOR * max(1.0, float(evals[-1]) if evals.size else 1.0)

    image_one = apply(ch, np.eye(ch.dim_in))
    unital_res = frob_norm(image_one - np.eye(ch.dim_out))
    unital = unital_res <= tol * max(1.0, float(ch.dim_out))

    rng = np.random.default_rng(seed)
    schwarz = True
    for _ in range(samples):
        a = rng.normal(size=(ch.dim_in, ch.dim_in)) + 1j * rng.normal(
            size=(ch.dim_in, ch.dim_in)
        )
        gap = apply(ch, a.conj().T @ a) - apply(ch, a).conj().T @ apply(ch, a)
        gap = (gap + gap.conj().T) / 2.0
        lo = float(np.linalg.eigvalsh(gap)[0])
        if lo < -tol * max(1.0, frob_norm(gap)):
            schwarz = False
            break
    return UcpReport(
        cp=bool(cp),
        unital=bool(unital),
        schwarz_witness=bool(schwarz),
        choi_min_eig=float(min_eig),
        unital_residual=float(unital_res),
    )


def state_preservation_residual(
    ch: QuantumChannel, s_in: FaithfulState, s_out: FaithfulState
) -> float:
    """|| Tr(rho_out eta(.)) - Tr(rho_in .) || over the whole algebra."""
    if (ch.dim_in, ch.dim_out) != (s_in.dim, s_out.dim):
        raise ValueError("states do not match channel dimensions")
    lhs = ch.superoperator.conj().T @ vec(s_out.rho)
    return float(np.linalg.norm(lhs - vec(s_in.rho)))


def _require_state_preserving(ch, s_in, s_out, tol):
    res = state_preservation_residual(ch, s_in, s_out)
    if res > tol * max(1.0, frob_norm(ch.superoperator)):
        raise ValueError(
            f"dual undefined for non-state-preserving map (residual {res:.3e})"
        )


def dual(
    ch: QuantumChannel,
    s_in: FaithfulState,
    s_out: FaithfulState,
    tol: float = DEFAULT_TOL,
) -> QuantumChannel:
    """The unique map eta' with Tr(r_in a r_in eta'(c)^T) = Tr(r_out eta(a) r_out c^T).

    Here r = rho^1/2, the commutant is identified with the matrix algebra via
    c <-> 1 (x) c, and invertibility of rho makes the defining linear system
    nonsingular: the solution is W_in^-1 S^T W_out on diagonal weights.
    """
    _require_state_preserving(ch, s_in, s_out, tol)
    w_in = s_in.kms_weights
    w_out = s_out.kms_weights
    s_dual = (ch.superoperator.T * w_out[None, :]) / w_in[:, None]
    return QuantumChannel(dim_in=ch.dim_out, dim_out=ch.dim_in, superoperator=s_dual)


def kms_dual(
    ch: QuantumChannel,
    s_in: FaithfulState,
    s_out: FaithfulState,
    tol: float = DEFAULT_TOL,
) -> QuantumChannel:
    """modular_transpose o dual o modular_transpose; the KMS-pairing adjoint."""
    d = dual(ch, s_in, s_out, tol=tol)
    t_in, t_out = transpose_superop(ch.dim_in), transpose_superop(ch.dim_out)
    return QuantumChannel(
        dim_in=ch.dim_out,
        dim_out=ch.dim_in,
        superoperator=t_in @ d.superoperator @ t_out,
    )


@dataclass(frozen=True, eq=False)
class ReversingOperation:
    """A linear *-antihomomorphism with square one: a -> u a^T u*.

    ``unitary=None`` means plain transposition in the fixed basis.
    """

    dim: int
    unitary: np.ndarray | None = None

    def __post_init__(self):
        if self.unitary is not None:
            u = as_matrix(self.unitary)
            if u.shape != (self.dim, self.dim):
                raise ValueError("reversing unitary has wrong shape")
            if not close(u @ u.conj().T, np.eye(self.dim)):
                raise ValueError("reversing operation requires a unitary")
            if not close(u @ u.conj(), np.eye(self.dim)):
                raise ValueError("reversing operation must square to the identity")
            object.__setattr__(self, "unitary", u)

    def apply(self, a) -> np.ndarray:
        a = as_matrix(a)
        if self.unitary is None:
            return a.T.copy()
        return self.unitary @ a.T @ self.unitary.conj().T

    @cached_property
    def superoperator(self) -> np.ndarray:
        t = transpose_superop(self.dim)
        if self.unitary is None:
            return t
        return np.kron(self.unitary.conj(), self.unitary) @ t

    def compatible_with(self, s: FaithfulState, tol: float = DEFAULT_TOL) -> bool:
        if s.dim != self.dim:
            return False
        return close(self.apply(s.rho), s.rho, tol)

    def validate(self, tol: float = DEFAULT_TOL) -> bool:
        """Antihomomorphism and involution on matrix units."""
        n = self.dim
        for i in range(n):
            for j in range(n):
                a = matrix_unit(n, i, j)
                if not close(self.apply(self.apply(a)), a, tol):
                    return False
                for k in range(n):
                    b = matrix_unit(n, j, k)
                    if not close(self.apply(a @ b), self.apply(b) @ self.apply(a), tol):
                        return False
                if not close(self.apply(a.conj().T), self.apply(a).conj().T, tol):
                    return False
        return True


def theta_kms_dual(
    ch: QuantumChannel,
    s: FaithfulState,
    th: ReversingOperation,
    tol: float = DEFAULT_TOL,
) -> QuantumChannel:
    """Theta o kms_dual o Theta for an endomorphic state-preserving channel."""
    if ch.dim_in != ch.dim_out:
        raise ValueError("theta_kms_dual requires an endomorphic channel")
    if not th.compatible_with(s, tol):
        raise ValueError("reversing operation incompatible with state")
    sig = kms_dual(ch, s, s, tol=tol)
    s_th = th.superoperator
    return QuantumChannel(
        dim_in=ch.dim_in,
        dim_out=ch.dim_in,
        superoperator=s_th @ sig.superoperator @ s_th,
    )


def fixed_point_space(dyn, tol: float = DEFAULT_TOL) -> list[np.ndarray]:
    """Orthonormal (Hilbert-Schmidt) basis of {b : beta(b) = b} resp. ker L."""
    if dyn.dim_in != dyn.dim_out:
        raise ValueError("fixed points require an endomorphic map")
    n = dyn.dim_in
    s = dyn.superoperator
    if dyn.kind == "channel":
        s = s - np.eye(n * n)
    return [unvec(v, n) for v in nullspace(s, tol)]


def channel_from_json(obj) -> QuantumChannel:
    if "superoperator" in obj:
        s = matrix_from_json(obj["superoperator"])
        try:
            dim_in, dim_out = int(obj["dim_in"]), int(obj["dim_out"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed channel object: {exc}") from exc
        return channel_from_superoperator(s, dim_in, dim_out)
    if "kraus" in obj:
        return channel_from_kraus([matrix_from_json(k) for k in obj["kraus"]])
    raise ValueError("malformed channel object: need 'superoperator' or 'kraus'")
