"""Gauss-Hermite machinery and the winner-take-all reward integral.

The quantity of interest is

    U(Sigma) = E[ |x1| * 1(|x2| < |x3|) ],   (x1, x2, x3) ~ N(0, Sigma),

with Sigma normalized so var(x1) = 1.  Two evaluators are provided.

``tensor_reward_sum`` is the literal sigma-point rule: factor Sigma = L L^T,
map the tensor product of a 1-D Gauss-Hermite rule through L and sum
W * |T1| * indicator.  Because the indicator is discontinuous, this converges
slowly (the tensor grid keeps placing O(1/sqrt(m)) weight mass exactly on the
measure-zero tie boundary), so it is kept as a diagnostic cross-check.

``expect_reward_integrand`` is the production evaluator.  Conditional on
x1 = s, the win event |x2| < |x3| is the quadrant event u*v > 0 for
u = x3 - x2, v = x3 + x2, whose probability is a bivariate-normal orthant
probability with means linear in s -- available in closed form through
Owen's T function.  Only the x1 axis is left to quadrature, and the exact
Gauss-Hermite error of the remaining |s| kink term is subtracted (the rule's
error on E|s| is known exactly), leaving a smooth high-order residual.  The
tie rule (ties pay B) is preserved exactly: degenerate covariances where
|x2| = |x3| almost surely return 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Literal

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import ndtr, owens_t

from .errors import InvalidConfigError, NotPositiveSemidefiniteError, NumericalFailureError
from .model import GameCovariance

__all__ = [
    "HermiteRule",
    "CubatureGrid",
    "hermite_rule",
    "psd_sqrt",
    "expect_reward_integrand",
    "expect_reward_batch",
    "tensor_reward_sum",
    "SQRT_2_OVER_PI",
]

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

MAX_ORDER = 512
# Pivot below which a Cholesky column is treated as exactly zero.
_PIVOT_TOL = 1e-12
# Residual above which a zero-pivot column forces the eigen fallback.
_RESID_TOL = 1e-9
# Eigenvalues below -NEG_EIG_TOL mean the matrix is not a covariance.
_NEG_EIG_TOL = 1e-8
# var(x2 -+ x3) at or below this (relative) scale counts as an almost-sure tie.
_DEGENERATE_TOL = 1e-12
# Conditional variances below this collapse to the deterministic branches.
_COND_TOL = 1e-13
# Relative half-weight window for tie atoms in the tensor rule.
_TIE_REL_TOL = 1e-9

Which = Literal["r1", "r2", "none"]


@dataclass(frozen=True)
class HermiteRule:
    """Gauss-Hermite rule for expectations against the standard normal.

    Nodes are the roots of the degree-``order`` probabilists' Hermite
    polynomial; weights sum to 1 and are positive wherever they are
    representable in double precision (extreme tail weights underflow to 0
    past order ~55).  The rule integrates polynomials of degree
    <= 2*order - 1 exactly.
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def __iter__(self):
        return iter((self.nodes, self.weights))


@lru_cache(maxsize=64)
def hermite_rule(m: int) -> HermiteRule:
    """Build the m-point rule via the symmetric tridiagonal Jacobi matrix.

    Off-diagonal entries are sqrt(k), k = 1..m-1; eigenvalues give the nodes
    and squared first eigenvector components the weights.  Nodes/weights are
    symmetrized exactly so that mirrored nodes are bitwise negations.
    """
    if not isinstance(m, int) or isinstance(m, bool):
        raise InvalidConfigError(f"order must be an integer, got {m!r}")
    if not 1 <= m <= MAX_ORDER:
        raise InvalidConfigError(f"order must be in 1..{MAX_ORDER}, got {m}")
    if m == 1:
        nodes = np.zeros(1)
        weights = np.ones(1)
    else:
        try:
            vals, vecs = eigh_tridiagonal(np.zeros(m), np.sqrt(np.arange(1.0, m)))
        except np.linalg.LinAlgError as exc:  # pragma: no cover - scipy is robust here
            raise NumericalFailureError(f"Jacobi eigensolver failed for m={m}") from exc
        nodes = vals
        weights = vecs[0, :] ** 2
        weights = weights / weights.sum()
        nodes = 0.5 * (nodes - nodes[::-1])
        weights = 0.5 * (weights + weights[::-1])
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return HermiteRule(order=m, nodes=nodes, weights=weights)


def _as_matrix(sigma: GameCovariance | np.ndarray) -> np.ndarray:
    if isinstance(sigma, GameCovariance):
        return sigma.matrix
    mat = np.asarray(sigma, dtype=float)
    if mat.shape != (3, 3):
        raise InvalidConfigError(f"covariance must be 3x3, got shape {mat.shape}")
    return mat


def psd_sqrt(sigma: GameCovariance | np.ndarray) -> np.ndarray:
    """Lower-triangular L with L @ L.T == Sigma, valid for singular Sigma.

    Tries a Cholesky factorization that tolerates zero pivots; if a zero
    pivot leaves a non-negligible residual column (or a pivot goes negative),
    falls back to the symmetric eigen square root with eigenvalues in
    (-1e-8, 0] clamped to zero, re-triangularized by an LQ decomposition.
    """
    a = _as_matrix(sigma)
    L = np.zeros((3, 3))
    ok = True
    for j in range(3):
        d = a[j, j] - float(L[j, :j] @ L[j, :j])
        if d > _PIVOT_TOL:
            L[j, j] = math.sqrt(d)
            for i in range(j + 1, 3):
                L[i, j] = (a[i, j] - float(L[i, :j] @ L[j, :j])) / L[j, j]
        elif d >= -_PIVOT_TOL:
            for i in range(j + 1, 3):
                if abs(a[i, j] - float(L[i, :j] @ L[j, :j])) > _RESID_TOL:
                    ok = False
                    break
        else:
            ok = False
        if not ok:
            break
    if ok:
        return L
    try:
        eigvals, eigvecs = np.linalg.eigh(0.5 * (a + a.T))
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError("eigendecomposition failed") from exc
    if eigvals.min() < -_NEG_EIG_TOL:
        raise NotPositiveSemidefiniteError(
            f"eigenvalue {eigvals.min():.3e} below -{_NEG_EIG_TOL}"
        )
    b = eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))
    _, r = np.linalg.qr(b.T)
    L = r.T
    signs = np.sign(np.diag(L))
    signs[signs == 0.0] = 1.0
    return L * signs


@dataclass(frozen=True)
class CubatureGrid:
    """Tensor-product sigma points T = L Z over the 3-fold Hermite rule.

    Points are streamed one outer-node slice at a time; the full m^3 grid is
    never materialized.
    """

    rule: HermiteRule
    sqrt_sigma: np.ndarray

    @classmethod
    def from_covariance(cls, sigma: GameCovariance | np.ndarray, m: int) -> "CubatureGrid":
        return cls(rule=hermite_rule(m), sqrt_sigma=psd_sqrt(sigma))

    def blocks(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        """Yield (points, weights) per outer node: shapes (m*m, 3), (m*m,)."""
        z, w = self.rule.nodes, self.rule.weights
        m = self.rule.order
        L = self.sqrt_sigma
        zj = np.repeat(z, m)
        zk = np.tile(z, m)
        wjk = np.repeat(w, m) * np.tile(w, m)
        for i in range(m):
            pts = np.empty((m * m, 3))
            pts[:, 0] = L[0, 0] * z[i] + L[0, 1] * zj + L[0, 2] * zk
            pts[:, 1] = L[1, 0] * z[i] + L[1, 1] * zj + L[1, 2] * zk
            pts[:, 2] = L[2, 0] * z[i] + L[2, 1] * zj + L[2, 2] * zk
            yield pts, w[i] * wjk

    def total_mass(self) -> float:
        """Sum of all tensor weights; equals 1 up to rounding."""
        return math.fsum(float(wts.sum()) for _, wts in self.blocks())


def _structural_tie(mat: np.ndarray) -> bool:
    """True when |x2| == |x3| almost surely (x2 = x3 or x2 = -x3 a.s.)."""
    v11, v22, v12 = mat[1, 1], mat[2, 2], mat[1, 2]
    scale = max(1.0, v11, v22)
    return (v11 + v22 - 2.0 * v12) <= _DEGENERATE_TOL * scale or (
        v11 + v22 + 2.0 * v12
    ) <= _DEGENERATE_TOL * scale


def _win_probability(mats: np.ndarray, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """P(|x2| < |x3| | x1 = s) for a stack of covariances.

    Returns (q, q0) with q of shape (B, len(s)) and q0 of shape (B,), where
    q0 is the continuity limit of q at s = 0 (used by the kink correction;
    it differs from the atom value only on degenerate branches).
    """
    v01 = mats[:, 0, 1]
    v02 = mats[:, 0, 2]
    v11 = mats[:, 1, 1]
    v22 = mats[:, 2, 2]
    v12 = mats[:, 1, 2]
    scale = np.maximum(1.0, np.maximum(v11, v22))
    struct = ((v11 + v22 - 2.0 * v12) <= _DEGENERATE_TOL * scale) | (
        (v11 + v22 + 2.0 * v12) <= _DEGENERATE_TOL * scale
    )

    # conditional covariance of (x2, x3) given x1, then of (u, v) = (x3-x2, x3+x2)
    c00 = v11 - v01**2
    c11 = v22 - v02**2
    c01 = v12 - v01 * v02
    cuu = np.maximum(c00 + c11 - 2.0 * c01, 0.0)
    cvv = np.maximum(c00 + c11 + 2.0 * c01, 0.0)
    cuv = c11 - c00
    du = v02 - v01  # conditional mean of u given x1 = s is s * du
    dv = v02 + v01

    u_deg = cuu <= _COND_TOL * scale
    v_deg = cvv <= _COND_TOL * scale
    su = np.sqrt(np.where(u_deg, 1.0, cuu))
    sv = np.sqrt(np.where(v_deg, 1.0, cvv))
    rho = np.where(u_deg | v_deg, 0.0, cuv / (su * sv))
    rho = np.clip(rho, -1.0, 1.0)
    one_m_r2 = 1.0 - rho**2
    rank1 = ~(u_deg | v_deg) & (one_m_r2 <= 1e-14)
    generic = ~(u_deg | v_deg | rank1)

    B = mats.shape[0]
    n_s = s.shape[0]
    hs = (du / su)[:, None] * s[None, :]
    ks = (dv / sv)[:, None] * s[None, :]

    m_full = generic & (du != 0.0) & (dv != 0.0)
    q = np.zeros((B, n_s))
    all_full = bool(np.all(m_full))

    def _rows(mask: np.ndarray, arr: np.ndarray) -> np.ndarray:
        return arr if all_full else arr[mask]

    if np.any(m_full):
        rho_m = _rows(m_full, rho)
        denom = np.sqrt(_rows(m_full, one_m_r2))
        du_m, dv_m = _rows(m_full, du), _rows(m_full, dv)
        su_m, sv_m = _rows(m_full, su), _rows(m_full, sv)
        ratio = (dv_m * su_m) / (du_m * sv_m)  # k/h, constant across nodes
        ah = ((ratio - rho_m) / denom)[:, None]
        ak = ((1.0 / ratio - rho_m) / denom)[:, None]
        q_full = (
            1.0
            - 2.0 * owens_t(_rows(m_full, hs), ah)
            - 2.0 * owens_t(_rows(m_full, ks), ak)
            - (du_m * dv_m < 0.0)[:, None]
        )
        if all_full:
            q = q_full
        else:
            q[m_full] = q_full
    if not all_full:
        m_du0 = generic & (du == 0.0) & (dv != 0.0)
        m_dv0 = generic & (dv == 0.0) & (du != 0.0)
        m_00 = generic & (du == 0.0) & (dv == 0.0)
        if np.any(m_du0):
            a0 = (-rho[m_du0] / np.sqrt(one_m_r2[m_du0]))[:, None]
            q[m_du0] = 0.5 - 2.0 * owens_t(ks[m_du0], a0)
        if np.any(m_dv0):
            a0 = (-rho[m_dv0] / np.sqrt(one_m_r2[m_dv0]))[:, None]
            q[m_dv0] = 0.5 - 2.0 * owens_t(hs[m_dv0], a0)
        if np.any(m_00):
            q[m_00] = (0.5 + np.arcsin(rho[m_00]) / math.pi)[:, None]
        if np.any(rank1):
            # (u, v) perfectly correlated given x1
            h_r, k_r = hs[rank1], ks[rank1]
            q_pos = ndtr(np.minimum(h_r, k_r)) + (1.0 - ndtr(np.maximum(h_r, k_r)))
            q_neg = np.abs(ndtr(k_r) - ndtr(-h_r))
            q[rank1] = np.where(rho[rank1][:, None] > 0.0, q_pos, q_neg)
        both_deg = u_deg & v_deg
        if np.any(both_deg):
            mu_u = du[both_deg][:, None] * s[None, :]
            mu_v = dv[both_deg][:, None] * s[None, :]
            q[both_deg] = (mu_u * mu_v > 0.0).astype(float)
        only_u = u_deg & ~v_deg
        if np.any(only_u):
            # u is deterministic given x1: mu_u > 0 needs v > 0, etc.
            mu_u = du[only_u][:, None] * s[None, :]
            kk = ndtr(ks[only_u])
            q[only_u] = np.where(mu_u > 0.0, kk, np.where(mu_u < 0.0, 1.0 - kk, 0.0))
        only_v = v_deg & ~u_deg
        if np.any(only_v):
            mu_v = dv[only_v][:, None] * s[None, :]
            hh = ndtr(hs[only_v])
            q[only_v] = np.where(mu_v > 0.0, hh, np.where(mu_v < 0.0, 1.0 - hh, 0.0))

    if np.any(struct):
        q = np.where(struct[:, None], 0.0, q)
    q = np.clip(q, 0.0, 1.0)

    # continuity limit of q at s = 0 (the kink-correction constant)
    q0 = 0.5 + np.arcsin(rho) / math.pi  # exact for generic, du0/dv0 and rank-1 rows
    q0 = np.where(
        u_deg & v_deg,
        (du * dv > 0.0).astype(float),
        np.where(u_deg | v_deg, 0.5, q0),
    )
    q0 = np.where(struct, 0.0, q0)
    return q, q0


def _validate_psd_stack(mats: np.ndarray) -> None:
    eigvals = np.linalg.eigvalsh(mats)
    worst = float(eigvals.min())
    if worst < -_NEG_EIG_TOL:
        raise NotPositiveSemidefiniteError(f"eigenvalue {worst:.3e} below -{_NEG_EIG_TOL}")


def expect_reward_batch(
    mats: np.ndarray, m: int, which: Which = "r1", validate: bool = True
) -> np.ndarray:
    """Vectorized reward integral over a stack of covariances.

    ``mats`` has shape (B, 3, 3) with unit (0, 0) entries.  Returns the
    (B,) array of U values.  ``which`` selects the winner restriction:
    "r1" integrates |x1| * 1(|x2| < |x3|), "r2" the complementary event
    (ties included, per the reward split), "none" drops the indicator.
    """
    mats = np.asarray(mats, dtype=float)
    if mats.ndim != 3 or mats.shape[1:] != (3, 3):
        raise InvalidConfigError(f"expected (B, 3, 3) covariances, got {mats.shape}")
    if validate:
        _validate_psd_stack(mats)
    rule = hermite_rule(m)
    z, w = rule.nodes, rule.weights
    a1 = np.abs(z) * w
    e_abs = float(a1.sum())
    kappa = e_abs - SQRT_2_OVER_PI  # exact rule error on the E|x1| kink term
    if which == "none":
        return np.full(mats.shape[0], e_abs - kappa)
    if which not in ("r1", "r2"):
        raise InvalidConfigError(f"which must be 'r1', 'r2' or 'none', got {which!r}")
    q, q0 = _win_probability(mats, z)
    if which == "r2":
        q = 1.0 - q
        q0 = 1.0 - q0
    values = q @ a1 - kappa * q0
    return np.clip(values, 0.0, None)


def expect_reward_integrand(
    sigma: GameCovariance | np.ndarray, m: int, which: Which = "r1"
) -> float:
    """U(Sigma) = E[|x1| 1(|x2| < |x3|)] under N(0, Sigma), at rule order m.

    Deterministic for fixed inputs.  Degenerate covariances (identical
    errors, a perfect player) are exact; ties pay B.
    """
    mat = _as_matrix(sigma)
    return float(expect_reward_batch(mat[None, :, :], m, which=which)[0])


def tensor_reward_sum(
    sigma: GameCovariance | np.ndarray,
    m: int,
    which: Which = "r1",
    factor: np.ndarray | None = None,
) -> float:
    """Literal sigma-point triple sum over CubatureGrid (diagnostic).

    Streams one outer-node slice at a time.  Tie atoms -- grid points whose
    |T2| and |T3| agree to within a 1e-9 relative window -- get half weight:
    the tie boundary has measure zero for non-degenerate Sigma, and the
    symmetric tensor grid otherwise parks O(1/sqrt(m)) of its mass exactly on
    it, which would swamp the estimate.  Almost-sure ties (degenerate Sigma)
    are returned exactly per the reward rule instead.
    """
    mat = _as_matrix(sigma)
    L = psd_sqrt(mat) if factor is None else np.asarray(factor, dtype=float)
    rule = hermite_rule(m)
    z, w = rule.nodes, rule.weights
    struct = _structural_tie(mat)
    if struct and which == "r1":
        return 0.0
    parts = []
    wjk = w[:, None] * w[None, :]
    for i in range(m):
        t1 = abs(L[0, 0] * z[i])
        block = (w[i] * t1) * wjk
        if which == "none" or struct:
            parts.append(float(block.sum()))
            continue
        t2 = np.abs(L[1, 0] * z[i] + L[1, 1] * z)[:, None]
        t3 = np.abs((L[2, 0] * z[i] + L[2, 1] * z)[:, None] + L[2, 2] * z[None, :])
        tie = np.abs(t2 - t3) <= _TIE_REL_TOL * (t2 + t3)
        ind = np.where(tie, 0.5, (t2 < t3).astype(float))
        if which == "r2":
            ind = 1.0 - ind
        parts.append(float((block * ind).sum()))
    return math.fsum(parts)
