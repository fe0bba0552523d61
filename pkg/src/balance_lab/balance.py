"""Balance between two state-preserving systems, and its consequences.

Two systems (A, alpha, mu) and (B, beta, nu) are in balance with respect to a
coupling omega when omega(alpha(a) (x) c) = omega(a (x) beta'(c)) for all a
and all commutant observables c, equivalently when the extracted channel
intertwines the dynamics: E_omega o alpha = beta o E_omega.  Both
formulations are evaluated here and must agree; for semigroups the check runs
at generator level, which is equivalent to checking every time by the power
series of e^{tK}.

Also provided: KMS-symmetry, standard detailed balance with respect to a
reversing operation (as a direct comparison and via balance with the
Theta-KMS-dual system), order-reversal under duals, ergodicity as
one-dimensionality of the fixed-point space, the constructive disjointness
witness from the fixed-point algebra, and a spectral convergence-transfer
probe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import (
    QuantumChannel,
    ReversingOperation,
    apply,
    dual,
    fixed_point_space,
    kms_dual,
    theta_kms_dual,
)
from .couplings import (
    Coupling,
    coupling_from_channel,
    diagonal_coupling,
    extract_channel,
    kms_flip,
    flip_coupling,
)
from .kernel import DEFAULT_TOL, frob_norm, matrix_unit, vec
from .lindblad import (
    dual_generator,
    kms_dual_generator,
    semigroup,
    theta_kms_dual_generator,
)
from .states import FaithfulState, System, kms_pairing


def dual_dynamics(dyn, state: FaithfulState, tol: float = DEFAULT_TOL):
    if dyn.kind == "generator":
        return dual_generator(dyn, state, tol=tol)
    return dual(dyn, state, state, tol=tol)


def kms_dual_dynamics(dyn, state: FaithfulState, tol: float = DEFAULT_TOL):
    if dyn.kind == "generator":
        return kms_dual_generator(dyn, state, tol=tol)
    return kms_dual(dyn, state, state, tol=tol)


def theta_kms_dual_dynamics(
    dyn, state: FaithfulState, th: ReversingOperation, tol: float = DEFAULT_TOL
):
    if dyn.kind == "generator":
        return theta_kms_dual_generator(dyn, state, th, tol=tol)
    return theta_kms_dual(dyn, state, th, tol=tol)


def dual_system(sys: System, tol: float = DEFAULT_TOL) -> System:
    return System(state=sys.state, dynamics=dual_dynamics(sys.dynamics, sys.state, tol))


def kms_dual_system(sys: System, tol: float = DEFAULT_TOL) -> System:
    return System(
        state=sys.state, dynamics=kms_dual_dynamics(sys.dynamics, sys.state, tol)
    )


def theta_kms_dual_system(
    sys: System, th: ReversingOperation, tol: float = DEFAULT_TOL
) -> System:
    return System(
        state=sys.state,
        dynamics=theta_kms_dual_dynamics(sys.dynamics, sys.state, th, tol),
    )


@dataclass(frozen=True, eq=False)
class BalanceReport:
    balanced: bool
    residual: float
    definition_residual: float
    method_agreement: bool
    tol: float

    def to_json(self) -> dict:
        return {
            "balanced": self.balanced,
            "residual": self.residual,
            "definition_residual": self.definition_residual,
            "method_agreement": self.method_agreement,
            "tol": self.tol,
        }


def _check_triple(sys_a: System, sys_b: System, w: Coupling):
    if not (
        w.state_a.same_state(sys_a.state) and w.state_b.same_state(sys_b.state)
    ):
        raise ValueError("state mismatch between systems and coupling")
    if sys_a.kind != sys_b.kind:
        raise ValueError("systems must share a dynamics kind (channel or generator)")


def is_balanced(
    sys_a: System, sys_b: System, w: Coupling, tol: float = DEFAULT_TOL
) -> BalanceReport:
    """Channel-level intertwining check plus the direct pairing check.

    The intertwining residual is ||S_E S_alpha - S_beta S_E||_F normalized by
    (1 + ||S_alpha||_F + ||S_beta||_F); the definition residual is the largest
    defect of omega(alpha(a) (x) c) = omega(a (x) beta'(c)) over matrix-unit
    pairs, with the dual dynamics computed for the second system.  For
    generator dynamics both checks run on the generators, which is equivalent
    to all times at once.
    """
    _check_triple(sys_a, sys_b, w)
    n, m = w.dims
    s_alpha = sys_a.dynamics.superoperator
    s_beta = sys_b.dynamics.superoperator
    e = extract_channel(w)
    scale = 1.0 + frob_norm(s_alpha) + frob_norm(s_beta)
    residual = frob_norm(e.superoperator @ s_alpha - s_beta @ e.superoperator) / scale

    beta_dual = dual_dynamics(sys_b.dynamics, sys_b.state, tol)
    k4 = w.kappa4()
    a4 = s_alpha.reshape(n, n, n, n)
    b4 = beta_dual.superoperator.reshape(m, m, m, m)
    lhs = np.einsum("plrk,prji->ijkl", k4, a4)
    rhs = np.einsum("jqis,qslk->ijkl", k4, b4)
    def_residual = float(np.max(np.abs(lhs - rhs))) / scale

    balanced = residual <= tol
    agree = balanced == (def_residual <= tol)
    return BalanceReport(
        balanced=bool(balanced),
        residual=float(residual),
        definition_residual=def_residual,
        method_agreement=bool(agree),
        tol=tol,
    )


def sampled_balance(
    sys_a: System, sys_b: System, w: Coupling, ts=(0.1, 1.0, 5.0), tol: float = DEFAULT_TOL
) -> list[tuple[float, BalanceReport]]:
    """Balance of the exponentials e^{tK}, e^{tL} at sampled times."""
    if sys_a.kind != "generator" or sys_b.kind != "generator":
        raise ValueError("sampled balance requires generator dynamics")
    out = []
    for t in ts:
        a_t = System(state=sys_a.state, dynamics=semigroup(sys_a.dynamics, t))
        b_t = System(state=sys_b.state, dynamics=semigroup(sys_b.dynamics, t))
        out.append((float(t), is_balanced(a_t, b_t, w, tol)))
    return out


def is_kms_symmetric(sys: System, tol: float = DEFAULT_TOL) -> bool:
    """Whether the dynamics equals its KMS-dual."""
    s = sys.dynamics.superoperator
    sig = kms_dual_dynamics(sys.dynamics, sys.state, tol).superoperator
    return frob_norm(sig - s) <= tol * (1.0 + frob_norm(s))


@dataclass(frozen=True, eq=False)
class SqdbReport:
    sqdb: bool
    residual: float
    via_balance: bool
    methods_agree: bool
    tol: float

    def to_json(self) -> dict:
        return {
            "sqdb": self.sqdb,
            "residual": self.residual,
            "via_balance": self.via_balance,
            "methods_agree": self.methods_agree,
            "tol": self.tol,
        }


def check_theta_sqdb(
    sys: System, th: ReversingOperation, tol: float = DEFAULT_TOL
) -> SqdbReport:
    """Standard quantum detailed balance with respect to a reversing operation.

    Direct test: the Theta-KMS-dual dynamics equals the dynamics.  Independent
    test: the system and its Theta-KMS-dual system are in balance with respect
    to the diagonal coupling.  The two must agree.
    """
    s = sys.dynamics.superoperator
    th_dual = theta_kms_dual_dynamics(sys.dynamics, sys.state, th, tol)
    residual = frob_norm(th_dual.superoperator - s) / (1.0 + frob_norm(s))
    sqdb = residual <= tol

    dual_sys = System(state=sys.state, dynamics=th_dual)
    via = is_balanced(sys, dual_sys, diagonal_coupling(sys.state), tol).balanced
    return SqdbReport(
        sqdb=bool(sqdb),
        residual=float(residual),
        via_balance=bool(via),
        methods_agree=bool(sqdb == via),
        tol=tol,
    )


@dataclass(frozen=True, eq=False)
class FlipSymmetryReport:
    hypothesis_met: bool
    forward_balanced: bool | None
    backward_balanced: bool | None
    equivalent: bool | None
    theta_forward: bool | None
    theta_backward: bool | None
    theta_equivalent: bool | None
    message: str

    def to_json(self) -> dict:
        return {
            "hypothesis_met": self.hypothesis_met,
            "forward_balanced": self.forward_balanced,
            "backward_balanced": self.backward_balanced,
            "equivalent": self.equivalent,
            "theta_forward": self.theta_forward,
            "theta_backward": self.theta_backward,
            "theta_equivalent": self.theta_equivalent,
            "message": self.message,
        }


def kms_symmetry_flip_check(
    sys_a: System,
    sys_b: System,
    w: Coupling,
    tol: float = DEFAULT_TOL,
    th: ReversingOperation | None = None,
) -> FlipSymmetryReport:
    """Symmetry of balance under KMS-symmetric dynamics.

    When both dynamics are KMS-symmetric, balance of (A, B, omega) must be
    equivalent to balance of (B, A, kms_flip(omega)).  With a reversing
    operation supplied (and A KMS-symmetric), additionally checks that A is in
    balance with its Theta-KMS-dual with respect to omega exactly when the
    dual is in balance with A with respect to the coupling of
    Theta o E_omega o Theta.
    """
    if not (is_kms_symmetric(sys_a, tol) and is_kms_symmetric(sys_b, tol)):
        return FlipSymmetryReport(
            hypothesis_met=False,
            forward_balanced=None,
            backward_balanced=None,
            equivalent=None,
            theta_forward=None,
            theta_backward=None,
            theta_equivalent=None,
            message="hypothesis not met: dynamics are not KMS-symmetric",
        )
    forward = is_balanced(sys_a, sys_b, w, tol).balanced
    backward = is_balanced(sys_b, sys_a, kms_flip(w, tol), tol).balanced

    theta_fwd = theta_bwd = theta_eq = None
    message = "kms-symmetric flip equivalence evaluated"
    if th is not None:
        if not sys_a.state.same_state(sys_b.state):
            raise ValueError("theta variant requires both systems on one state")
        a_theta = theta_kms_dual_system(sys_a, th, tol)
        theta_fwd = is_balanced(sys_a, a_theta, w, tol).balanced
        e = extract_channel(w)
        s_th = th.superoperator
        e_conj = QuantumChannel(
            dim_in=e.dim_in, dim_out=e.dim_out, superoperator=s_th @ e.superoperator @ s_th
        )
        w_e = coupling_from_channel(e_conj, sys_a.state, sys_a.state, tol)
        theta_bwd = is_balanced(a_theta, sys_a, w_e, tol).balanced
        theta_eq = theta_fwd == theta_bwd
        message += "; theta variant evaluated"
    return FlipSymmetryReport(
        hypothesis_met=True,
        forward_balanced=bool(forward),
        backward_balanced=bool(backward),
        equivalent=bool(forward == backward),
        theta_forward=theta_fwd,
        theta_backward=theta_bwd,
        theta_equivalent=theta_eq,
        message=message,
    )


@dataclass(frozen=True, eq=False)
class DualOrderReport:
    primal: bool
    dual_pair: bool
    kms_pair: bool
    consistent: bool

    def to_json(self) -> dict:
        return {
            "primal": self.primal,
            "dual_pair": self.dual_pair,
            "kms_pair": self.kms_pair,
            "consistent": self.consistent,
        }


def dual_order_check(
    sys_a: System, sys_b: System, w: Coupling, tol: float = DEFAULT_TOL
) -> DualOrderReport:
    """Balance is equivalent to balance of the duals and of the KMS-duals in
    reversed order, with the flipped and KMS-flipped couplings."""
    primal = is_balanced(sys_a, sys_b, w, tol).balanced
    d_b = dual_system(sys_b, tol)
    d_a = dual_system(sys_a, tol)
    dual_pair = is_balanced(d_b, d_a, flip_coupling(w), tol).balanced
    k_b = kms_dual_system(sys_b, tol)
    k_a = kms_dual_system(sys_a, tol)
    kms_pair = is_balanced(k_b, k_a, kms_flip(w, tol), tol).balanced
    return DualOrderReport(
        primal=bool(primal),
        dual_pair=bool(dual_pair),
        kms_pair=bool(kms_pair),
        consistent=bool(primal == dual_pair == kms_pair),
    )


def is_ergodic(sys: System, tol: float = DEFAULT_TOL) -> bool:
    """Fixed-point space of the dynamics is one-dimensional (the scalars)."""
    return len(fixed_point_space(sys.dynamics, tol)) == 1


@dataclass(frozen=True, eq=False)
class DisjointnessReport:
    ergodic: bool
    fixed_space_dim: int
    witness_found: bool
    balance_residual: float | None
    nontriviality_gap: float | None
    witness_basis: list | None
    message: str

    def to_json(self) -> dict:
        return {
            "ergodic": self.ergodic,
            "fixed_space_dim": self.fixed_space_dim,
            "witness_found": self.witness_found,
            "balance_residual": self.balance_residual,
            "nontriviality_gap": self.nontriviality_gap,
            "message": self.message,
        }


def disjointness_probe(sys: System, tol: float = DEFAULT_TOL) -> DisjointnessReport:
    """Constructive side of "ergodic iff disjoint from identity systems".

    For a non-ergodic system, the fixed-point space is checked to close as a
    *-algebra, an identity system is placed on it with the restricted state,
    and the restriction of the diagonal coupling is verified to give a
    non-trivial balanced coupling.  For an ergodic system no witness exists.
    """
    basis = fixed_point_space(sys.dynamics, tol)
    dim = len(basis)
    if dim <= 1:
        return DisjointnessReport(
            ergodic=True,
            fixed_space_dim=dim,
            witness_found=False,
            balance_residual=None,
            nontriviality_gap=None,
            witness_basis=None,
            message="no non-trivial identity-system balance found (consistent with disjointness)",
        )

    flat = np.stack([vec(b) for b in basis])
    def closure_defect(x):
        coeffs = flat.conj() @ vec(x)
        return float(np.linalg.norm(vec(x) - flat.T @ coeffs))

    worst = 0.0
    for x in basis:
        worst = max(worst, closure_defect(x.conj().T))
        for y in basis:
            worst = max(worst, closure_defect(x @ y))
    if worst > max(tol, 1e-8):
        raise ValueError(f"fixed-point set not an algebra numerically (defect {worst:.3e})")

    state = sys.state
    n = state.dim
    beta_dual = dual_dynamics(sys.dynamics, state, tol)
    units = [matrix_unit(n, i, j) for i in range(n) for j in range(n)]
    balance_res = 0.0
    gap = 0.0
    for f in basis:
        mu_f = state.expectation(f)
        for c in units:
            img = (
                beta_dual.superoperator @ vec(c)
            ).reshape((n, n), order="F")
            if sys.kind == "generator":
                defect = abs(kms_pairing(state, f, img))
            else:
                defect = abs(kms_pairing(state, f, img) - kms_pairing(state, f, c))
            balance_res = max(balance_res, float(defect))
            gap = max(
                gap,
                abs(kms_pairing(state, f, c) - mu_f * state.expectation(c)),
            )
    found = balance_res <= tol and gap > tol
    return DisjointnessReport(
        ergodic=False,
        fixed_space_dim=dim,
        witness_found=bool(found),
        balance_residual=float(balance_res),
        nontriviality_gap=float(gap),
        witness_basis=basis,
        message="identity system on the fixed-point algebra balances the dynamics "
        "through the restricted diagonal coupling",
    )


def _spanning_density_matrices(m: int) -> list[np.ndarray]:
    """Rank-one density matrices spanning the full matrix algebra."""
    vecs = []
    eye = np.eye(m, dtype=complex)
    for i in range(m):
        vecs.append(eye[:, i])
    for i in range(m):
        for j in range(i + 1, m):
            vecs.append((eye[:, i] + eye[:, j]) / np.sqrt(2))
            vecs.append((eye[:, i] + 1j * eye[:, j]) / np.sqrt(2))
    return [np.outer(v, v.conj()) for v in vecs]


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    certified: bool
    gap: float | None
    vacuous: bool
    deviations: list
    threshold_time: float | None
    passed: bool | None
    message: str

    def to_json(self) -> dict:
        return {
            "certified": self.certified,
            "gap": self.gap,
            "vacuous": self.vacuous,
            "deviations": [[t, d] for t, d in self.deviations],
            "threshold_time": self.threshold_time,
            "passed": self.passed,
            "message": self.message,
        }


def convergence_probe(
    sys_a: System,
    sys_b: System,
    w: Coupling,
    t_grid,
    tol: float = DEFAULT_TOL,
    deviation_tol: float = 1e-6,
) -> ConvergenceReport:
    """Transfer of convergence to the steady state through a balanced coupling.

    The hypothesis (every normal state of the first system converges under its
    semigroup to the invariant state) is certified spectrally: the generator's
    kernel must be spanned by the identity alone and every other eigenvalue
    must have a strictly negative real part.  When certified, the image of the
    extracted channel must equilibrate at the same rate: the supremum of
    |lambda(beta_t(b)) - nu(b)| over a spanning set of states lambda and over
    b in E_omega(matrix units) is reported per grid time and must drop below
    ``deviation_tol`` once t exceeds 50 / gap.
    """
    if sys_a.kind != "generator" or sys_b.kind != "generator":
        raise ValueError("convergence probe requires generator dynamics")
    rep = is_balanced(sys_a, sys_b, w, tol)
    if not rep.balanced:
        raise ValueError("convergence probe requires a balanced triple")

    n, m = w.dims
    s_k = sys_a.dynamics.superoperator
    evals = np.linalg.eigvals(s_k)
    scale = max(1.0, float(np.max(np.abs(evals))) if evals.size else 1.0)
    zero_cut = max(tol, 1e-12) * scale * 100
    zero_mask = np.abs(evals) <= zero_cut
    nonzero = evals[~zero_mask]
    kernel = fixed_point_space(sys_a.dynamics, tol)
    kernel_is_scalars = len(kernel) == 1
    gap = float(-np.max(nonzero.real)) if nonzero.size else None
    certified = (
        kernel_is_scalars
        and int(np.sum(zero_mask)) == 1
        and nonzero.size > 0
        and gap is not None
        and gap > zero_cut
    )

    e = extract_channel(w)
    images = [apply(e, matrix_unit(n, i, j)) for i in range(n) for j in range(n)]
    stacked = np.stack([vec(b) for b in images])
    span_dim = int(np.linalg.matrix_rank(stacked, tol=1e-10))
    vacuous = span_dim <= 1

    states = _spanning_density_matrices(m)
    targets = [sys_b.state.expectation(b) for b in images]
    deviations = []
    for t in sorted(float(t) for t in t_grid):
        ch = semigroup(sys_b.dynamics, t)
        sup = 0.0
        for b, nb in zip(images, targets):
            evolved = apply(ch, b)
            for lam in states:
                sup = max(sup, abs(complex(np.trace(lam @ evolved)) - nb))
        deviations.append((t, float(sup)))

    if not certified:
        return ConvergenceReport(
            certified=False,
            gap=gap,
            vacuous=vacuous,
            deviations=deviations,
            threshold_time=None,
            passed=None,
            message="spectral condition fails; convergence transfer inapplicable",
        )
    threshold = 50.0 / gap
    late = [d for t, d in deviations if t >= threshold]
    passed = bool(late and max(late) <= deviation_tol)
    message = "hypothesis certified spectrally"
    if vacuous:
        message += "; extracted channel has scalar range, statement vacuous"
    if not late:
        message += f"; grid does not reach threshold time {threshold:.3g}"
        passed = None
    return ConvergenceReport(
        certified=True,
        gap=gap,
        vacuous=vacuous,
        deviations=deviations,
        threshold_time=threshold,
        passed=passed,
        message=message,
    )
