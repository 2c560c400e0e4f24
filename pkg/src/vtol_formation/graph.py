"""
Directed leader-follower topology and the matrices derived from it.

Node 0 is the leader; followers are 1..n.  ``d[i-1, j-1]`` is the weight
with which follower i listens to follower j, ``d0[i-1]`` the weight with
which follower i listens to the leader.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, fields

import numpy as np


class GraphError(ValueError):
    pass


class SingularGraphError(GraphError):
    """M is numerically singular: some follower cannot hear the leader."""


class JacobiConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class CommGraph:
    d: np.ndarray
    d0: np.ndarray

    def __post_init__(self):
        d = np.array(self.d, dtype=float)
        d0 = np.array(self.d0, dtype=float).reshape(-1)
        n = d0.size
        if d.shape != (n, n):
            raise GraphError(f"adjacency must be {n}x{n}, got {d.shape}")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(d0))):
            raise GraphError("graph weights must be finite")
        if np.any(d < 0) or np.any(d0 < 0):
            raise GraphError("graph weights must be non-negative")
        if np.any(np.diag(d) != 0):
            raise GraphError("self-loops are not allowed (d_ii must be 0)")
        d.setflags(write=False)
        d0.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "d0", d0)

    @property
    def n(self) -> int:
        return self.d0.size

    @classmethod
    def from_edges(cls, n: int, edges) -> "CommGraph":
        """Build from ``[[from, to, weight], ...]``; node 0 is the leader."""
        d = np.zeros((n, n))
        d0 = np.zeros(n)
        for edge in edges:
            if len(edge) != 3:
                raise GraphError(f"edge {edge!r} must be [from, to, weight]")
            src, dst, w = edge
            if int(src) != src or int(dst) != dst:
                raise GraphError(f"edge {edge!r}: node ids must be integers")
            src, dst = int(src), int(dst)
            if not (0 <= src <= n and 1 <= dst <= n):
                raise GraphError(f"edge {edge!r}: nodes must be in 0..{n}, target >= 1")
            if src == dst:
                raise GraphError(f"edge {edge!r} is a self-loop")
            if src == 0:
                d0[dst - 1] = w
            else:
                d[dst - 1, src - 1] = w
        return cls(d, d0)

    @classmethod
    def chain(cls, n: int) -> "CommGraph":
        """0 -> 1 -> 2 -> ... -> n with unit weights."""
        return cls.from_edges(n, [[k, k + 1, 1.0] for k in range(n)])

    def edges(self) -> list[list]:
        out = []
        for i in range(self.n):
            if self.d0[i] > 0:
                out.append([0, i + 1, float(self.d0[i])])
        for i in range(self.n):
            for j in range(self.n):
                if self.d[i, j] > 0:
                    out.append([j + 1, i + 1, float(self.d[i, j])])
        return sorted(out)

    def weights_with_leader(self) -> np.ndarray:
        """n x (n+1) matrix whose row i is ``[d_i0, d_i1, ..., d_in]``."""
        return np.hstack([self.d0[:, None], self.d])


def laplacian(graph: CommGraph) -> np.ndarray:
    L = -graph.d.copy()
    L[np.diag_indices(graph.n)] = graph.d.sum(axis=1)
    return L


def m_matrix(graph: CommGraph) -> np.ndarray:
    return laplacian(graph) + np.diag(graph.d0)


def has_directed_spanning_tree(graph: CommGraph) -> bool:
    """True iff every follower is reachable from the leader."""
    n = graph.n
    seen = np.zeros(n + 1, dtype=bool)
    seen[0] = True
    queue = deque([0])
    W = graph.weights_with_leader()  # W[i, j]: j -> i+1
    while queue:
        src = queue.popleft()
        for dst in range(1, n + 1):
            if not seen[dst] and W[dst - 1, src] > 0:
                seen[dst] = True
                queue.append(dst)
    return bool(seen.all())


def lu_solve(A: np.ndarray, b: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Solve ``A x = b`` by LU with partial pivoting.

    Raises SingularGraphError when a pivot falls below ``rtol * max|A|``.
    """
    A = np.array(A, dtype=float)
    x = np.array(b, dtype=float)
    n = A.shape[0]
    scale = np.abs(A).max() if A.size else 0.0
    if scale == 0.0:
        raise SingularGraphError("matrix is zero")
    for k in range(n):
        p = k + int(np.argmax(np.abs(A[k:, k])))
        if abs(A[p, k]) <= rtol * scale:
            raise SingularGraphError(f"pivot {k} below tolerance ({abs(A[p, k]):.3e})")
        if p != k:
            A[[k, p]] = A[[p, k]]
            x[[k, p]] = x[[p, k]]
        for r in range(k + 1, n):
            f = A[r, k] / A[k, k]
            A[r, k:] -= f * A[k, k:]
            x[r] -= f * x[k]
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - A[k, k + 1:] @ x[k + 1:]) / A[k, k]
    return x


def theta_weights(M: np.ndarray) -> np.ndarray:
    """theta_i = 1/x_i with ``M x = 1``."""
    x = lu_solve(M, np.ones(M.shape[0]))
    if np.any(x <= 0):
        raise SingularGraphError("M^{-1} 1 has non-positive entries; M is not a non-singular M-matrix")
    return 1.0 / x


def xi_matrix(M: np.ndarray, theta: np.ndarray) -> np.ndarray:
    Theta = np.diag(theta)
    Xi = M.T @ Theta + Theta @ M
    return 0.5 * (Xi + Xi.T)


def jacobi_eigenvalues(A: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations (ascending)."""
    A = np.array(A, dtype=float)
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum((A - np.diag(np.diag(A))) ** 2))
        if off <= tol:
            return np.sort(np.diag(A))
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                diff = A[q, q] - A[p, p]
                if abs(apq) < 1e-18 * abs(diff):
                    # rotation angle below rounding; equivalent to t = apq / diff
                    A[p, q] = A[q, p] = 0.0
                    continue
                tau = diff / (2.0 * apq)
                t = np.copysign(1.0, tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                A = rot.T @ A @ rot
                A[p, q] = A[q, p] = 0.0
    raise JacobiConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def lambda_min_symmetric(A: np.ndarray) -> float:
    return float(jacobi_eigenvalues(A)[0])


@dataclass(frozen=True)
class GraphCertificate:
    M: np.ndarray
    theta: np.ndarray
    Xi: np.ndarray
    lambda_min_Xi: float
    lambda_min_MtThetaM: float
    norm_Theta: float
    norm_ThetaM: float

    @property
    def n(self) -> int:
        return self.theta.size


def certify(graph: CommGraph) -> GraphCertificate:
    """M-matrix certificate: Theta, Xi and the norms used by the gain bounds."""
    M = m_matrix(graph)
    theta = theta_weights(M)
    Theta = np.diag(theta)
    Xi = xi_matrix(M, theta)
    MtThetaM = M.T @ Theta @ M
    return GraphCertificate(
        M=M,
        theta=theta,
        Xi=Xi,
        lambda_min_Xi=lambda_min_symmetric(Xi),
        lambda_min_MtThetaM=lambda_min_symmetric(0.5 * (MtThetaM + MtThetaM.T)),
        norm_Theta=float(np.linalg.norm(Theta)),
        norm_ThetaM=float(np.linalg.norm(Theta @ M)),
    )


def strictly_diagonally_dominant(A: np.ndarray) -> bool:
    diag = np.abs(np.diag(A))
    off = np.abs(A).sum(axis=1) - diag
    return bool(np.all(diag > off))


@dataclass(frozen=True)
class GainSet:
    k_p: float = 8.0
    k_v: float = 8.0
    k_a: float = 4.0
    l_a: float = 12.0
    k_gamma: float = 0.5
    k_eta: float = 4.0
    l_p: float = 4.0
    l_v: float = 4.0
    l_q: float = 16.0
    k_q: float = 16.0
    g: float = 9.81

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"gain {f.name} must be finite and > 0, got {value!r}")

    def as_array(self) -> np.ndarray:
        """Packed order used by the compiled kernels (see ``GAIN_INDEX``)."""
        return np.array([getattr(self, name) for name in GAIN_INDEX])


GAIN_INDEX = ("k_p", "k_v", "k_a", "l_a", "k_gamma", "k_eta", "l_p", "l_v", "l_q", "k_q", "g")


@dataclass
class Condition:
    name: str
    passed: bool
    margin: float
    detail: str


@dataclass
class ValidationReport:
    conditions: list[Condition] = field(default_factory=list)
    accel_bound_inf: float = float("nan")
    accel_bound_2: float = float("nan")

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def __getitem__(self, name: str) -> Condition:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self) -> list[str]:
        out = []
        for c in self.conditions:
            status = "PASS" if c.passed else "FAIL"
            out.append(f"{status} {c.name:<10} margin={c.margin:+.6g}  {c.detail}")
        return out


def validate_gains(
    gains: GainSet,
    cert: GraphCertificate,
    N_p_bar: float,
    accel_bound: float,
    accel_bound_2: float | None = None,
) -> ValidationReport:
    """Check the estimator/controller gain conditions; failures are reported, not raised.

    ``accel_bound`` is the componentwise (infinity-norm) sup of the leader
    acceleration; ``accel_bound_2`` the Euclidean sup, reported only.
    """
    lam = cert.lambda_min_Xi
    nT2 = cert.norm_Theta ** 2
    report = ValidationReport(accel_bound_inf=accel_bound,
                              accel_bound_2=accel_bound if accel_bound_2 is None else accel_bound_2)

    if lam <= 0:
        # the three graph-dependent bounds assume Xi > 0; for this graph they are undefined
        detail = f"undefined: lambda_min(Xi)={lam:.6g} <= 0 for this graph"
        for name in ("kp_kv", "l_a", "k_a"):
            report.conditions.append(Condition(name, False, float("-inf"), detail))
        _append_local_conditions(report, gains, accel_bound)
        return report

    rhs9 = nT2 / lam ** 2
    lhs9 = gains.k_p * gains.k_v
    report.conditions.append(Condition("kp_kv", lhs9 > rhs9, lhs9 - rhs9,
                                       f"k_p*k_v={lhs9:.6g} > |Theta|^2/lmin(Xi)^2={rhs9:.6g}"))

    denom = cert.lambda_min_MtThetaM * (gains.k_p * gains.k_v * lam ** 2 - nT2)
    if denom > 0:
        rhs10 = gains.k_p * lam * nT2 / denom
        ok10 = gains.l_a > rhs10
        detail10 = f"l_a={gains.l_a:.6g} > {rhs10:.6g}"
    else:
        rhs10 = float("inf")
        ok10 = False
        detail10 = "bound undefined because k_p*k_v condition fails"
    report.conditions.append(Condition("l_a", ok10, gains.l_a - rhs10, detail10))

    rhs11 = 2.0 * np.sqrt(cert.n) * cert.norm_ThetaM * N_p_bar / lam
    report.conditions.append(Condition("k_a", gains.k_a > rhs11, gains.k_a - rhs11,
                                       f"k_a={gains.k_a:.6g} > 2 sqrt(n)|Theta M| Np/lmin(Xi)={rhs11:.6g}"))

    _append_local_conditions(report, gains, accel_bound)
    return report


def _append_local_conditions(report: ValidationReport, gains: GainSet, accel_bound: float) -> None:
    rhs22 = 0.5 * (gains.g - gains.k_gamma)
    report.conditions.append(Condition("k_eta", gains.k_eta < rhs22, rhs22 - gains.k_eta,
                                       f"k_eta={gains.k_eta:.6g} < (g-k_gamma)/2={rhs22:.6g}"))
    report.conditions.append(Condition("k_gamma", gains.k_gamma >= accel_bound, gains.k_gamma - accel_bound,
                                       f"k_gamma={gains.k_gamma:.6g} >= sup|a_r|_inf={accel_bound:.6g} "
                                       f"(sup|a_r|_2={report.accel_bound_2:.6g})"))
