"""Rotation-angle schedules for phase-shift/rotation sequences.

A schedule of M rounds alternates the fixed phase shift
Z_Phi = diag(exp(i Phi), 1) with tunable rotations.  Two rotation
conventions are supported:

* ``gqsp`` -- general rotations
  R(theta, phi, lam) = [[e^{i(lam+phi)} cos t, e^{i phi} sin t],
                        [e^{i lam} sin t,      -cos t]],
  realising an arbitrary complex pair (P, Q) as the first column.
* ``oqsp`` -- single-axis rotations X(theta) = exp(i theta sigma_x),
  realising pairs (F, G) with real f_m and purely imaginary i g_m
  coefficients.

Angle extraction peels the leading coefficients one degree at a time;
reconstruction rebuilds the 2x2 product for verification.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .poly import EPS_NORM, EPS_REAL, PolynomialPair, SynthesisError

_ZERO_LEAD = 1e-12
_STALL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class AngleSet:
    """A compiled schedule: per-round rotation angles and the phase step."""

    convention: str
    phase_step: float
    thetas: np.ndarray
    phis: np.ndarray
    lambdas: np.ndarray

    def __post_init__(self):
        if self.convention not in ("oqsp", "gqsp"):
            raise ValueError(f"unknown convention {self.convention!r}")
        for name in ("thetas", "phis", "lambdas"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (len(self.thetas) == len(self.phis) == len(self.lambdas)):
            raise ValueError("angle arrays must share a length of rounds + 1")
        if self.convention == "oqsp" and (
            np.any(self.phis != 0.0) or np.any(self.lambdas != 0.0)
        ):
            raise ValueError("oqsp schedules carry thetas only")

    @property
    def rounds(self) -> int:
        return len(self.thetas) - 1

    def as_dict(self) -> dict:
        return {
            "convention": self.convention,
            "phase_step_rad": float(self.phase_step),
            "rounds": self.rounds,
            "angles": [
                {"theta": float(t), "phi": float(p), "lambda": float(l)}
                for t, p, l in zip(self.thetas, self.phis, self.lambdas)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AngleSet":
        ang = d["angles"]
        return cls(
            convention=d["convention"],
            phase_step=float(d["phase_step_rad"]),
            thetas=np.array([a["theta"] for a in ang], dtype=float),
            phis=np.array([a["phi"] for a in ang], dtype=float),
            lambdas=np.array([a["lambda"] for a in ang], dtype=float),
        )


def rotation_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    """General rotation in the (down, up) basis; det = -exp(i(lam+phi))."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array(
        [
            [np.exp(1j * (lam + phi)) * c, np.exp(1j * phi) * s],
            [np.exp(1j * lam) * s, -c],
        ]
    )


def x_rotation(theta: float) -> np.ndarray:
    """exp(i theta sigma_x); the single-axis rotation of oqsp schedules."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, 1j * s], [1j * s, c]])


def _round_matrix(angles: AngleSet, m: int) -> np.ndarray:
    if angles.convention == "gqsp":
        return rotation_matrix(angles.thetas[m], angles.phis[m], angles.lambdas[m])
    return x_rotation(angles.thetas[m])


def reconstruct_sequence(angles: AngleSet, phi: float) -> np.ndarray:
    """The 2x2 product R_M Z ... R_1 Z R_0 at phase-shift angle ``phi``."""
    z = np.exp(1j * phi)
    u = _round_matrix(angles, 0).copy()
    for m in range(1, angles.rounds + 1):
        u[0, :] *= z  # left-multiply by Z = diag(z, 1)
        u = _round_matrix(angles, m) @ u
    return u


def reconstruct_on_grid(angles: AngleSet, phis: np.ndarray) -> np.ndarray:
    """Vectorised reconstruction: stack of 2x2 products, shape (len(phis), 2, 2)."""
    phis = np.asarray(phis, dtype=float)
    z = np.exp(1j * phis)
    u = np.broadcast_to(_round_matrix(angles, 0), (len(phis), 2, 2)).copy()
    for m in range(1, angles.rounds + 1):
        u[:, 0, :] *= z[:, None]
        u = np.einsum("ab,nbc->nac", _round_matrix(angles, m), u)
    return u


def _pad(coeffs: np.ndarray, length: int) -> np.ndarray:
    out = np.zeros(length, dtype=complex)
    out[: len(coeffs)] = coeffs
    return out


def _resolve_rounds(pair: PolynomialPair, rounds: int | None) -> int:
    m = pair.p.degree if rounds is None else int(rounds)
    if m < max(pair.p.degree, pair.q.degree if not pair.q.is_zero else 0):
        raise ValueError("declared rounds below the pair degree")
    return m


def gqsp_angles(pair: PolynomialPair, phase_step: float, rounds: int | None = None) -> AngleSet:
    """Angles realising (P, Q) as the first column of the gqsp product.

    Iterates from the top degree down; each step chooses (theta_d, phi_d)
    from the leading coefficients so that the inverse rotation and inverse
    phase shift lower both degrees by one.  lambda is nonzero only at m = 0.
    """
    if pair.defect > EPS_NORM:
        raise ValueError(f"pair defect {pair.defect:.3e} exceeds {EPS_NORM:.1e}")
    m_rounds = _resolve_rounds(pair, rounds)
    p = _pad(pair.p.coeffs, m_rounds + 1)
    q = _pad(pair.q.coeffs, m_rounds + 1)

    thetas = np.zeros(m_rounds + 1)
    phis = np.zeros(m_rounds + 1)
    lambdas = np.zeros(m_rounds + 1)

    for d in range(m_rounds, 0, -1):
        scale = max(np.abs(p[: d + 1]).max(), np.abs(q[: d + 1]).max())
        if scale == 0.0:
            raise SynthesisError(f"angle extraction diverged at round {d}")
        p[: d + 1] /= scale
        q[: d + 1] /= scale
        pl, ql = p[d], q[d]
        if abs(ql) < _ZERO_LEAD:
            th, ph = 0.0, 0.0
        elif abs(pl) < _ZERO_LEAD:
            th, ph = np.pi / 2, 0.0
        else:
            th = np.arctan2(abs(ql), abs(pl))
            ph = float(np.angle(pl) - np.angle(ql))
        c, s = np.cos(th), np.sin(th)
        w = np.exp(-1j * ph)
        new_p = w * c * p[: d + 1] + s * q[: d + 1]
        new_q = w * s * p[: d + 1] - c * q[: d + 1]
        if abs(new_p[0]) > _STALL_TOL or abs(new_q[d]) > _STALL_TOL:
            raise SynthesisError(f"angle extraction diverged at round {d}")
        p[:d] = new_p[1:]
        p[d] = 0.0
        q[: d + 1] = new_q
        q[d] = 0.0
        thetas[d], phis[d] = th, ph

    p0, q0 = p[0], q[0]
    norm = np.hypot(abs(p0), abs(q0))
    if norm == 0.0:
        raise SynthesisError("angle extraction diverged at round 0")
    p0, q0 = p0 / norm, q0 / norm
    thetas[0] = np.arctan2(abs(q0), abs(p0))
    lambdas[0] = float(np.angle(q0)) if abs(q0) > _ZERO_LEAD else 0.0
    phis[0] = float(np.angle(p0)) - lambdas[0] if abs(p0) > _ZERO_LEAD else 0.0
    return AngleSet("gqsp", float(phase_step), thetas, phis, lambdas)


def oqsp_angles(pair: PolynomialPair, phase_step: float, rounds: int | None = None) -> AngleSet:
    """Single-axis angles realising (F, G) with F real and G = i*(real)."""
    if pair.defect > EPS_NORM:
        raise ValueError(f"pair defect {pair.defect:.3e} exceeds {EPS_NORM:.1e}")
    scale = max(1.0, np.abs(pair.p.coeffs).max(), np.abs(pair.q.coeffs).max())
    if np.abs(pair.p.coeffs.imag).max() > EPS_REAL * scale:
        raise ValueError("oqsp pair requires real F coefficients")
    if np.abs(pair.q.coeffs.real).max() > EPS_REAL * scale:
        raise ValueError("oqsp pair requires purely imaginary G coefficients")

    m_rounds = _resolve_rounds(pair, rounds)
    f = _pad(pair.p.coeffs, m_rounds + 1).real.copy()
    g = _pad(pair.q.coeffs, m_rounds + 1).imag.copy()

    thetas = np.zeros(m_rounds + 1)
    for d in range(m_rounds, 0, -1):
        scale = max(np.abs(f[: d + 1]).max(), np.abs(g[: d + 1]).max())
        if scale == 0.0:
            raise SynthesisError(f"angle extraction diverged at round {d}")
        f[: d + 1] /= scale
        g[: d + 1] /= scale
        fl, gl = f[d], g[d]
        if abs(gl) < _ZERO_LEAD:
            th = 0.0
        elif abs(fl) < _ZERO_LEAD:
            th = np.pi / 2
        else:
            th = np.arctan2(gl, fl)
        c, s = np.cos(th), np.sin(th)
        new_f = c * f[: d + 1] + s * g[: d + 1]
        new_g = c * g[: d + 1] - s * f[: d + 1]
        if abs(new_f[0]) > _STALL_TOL or abs(new_g[d]) > _STALL_TOL:
            raise SynthesisError(f"angle extraction diverged at round {d}")
        f[:d] = new_f[1:]
        f[d] = 0.0
        g[: d + 1] = new_g
        g[d] = 0.0
        thetas[d] = th

    norm = np.hypot(f[0], g[0])
    if norm == 0.0:
        raise SynthesisError("angle extraction diverged at round 0")
    thetas[0] = np.arctan2(g[0] / norm, f[0] / norm)
    zeros = np.zeros(m_rounds + 1)
    return AngleSet("oqsp", float(phase_step), thetas, zeros, zeros)
