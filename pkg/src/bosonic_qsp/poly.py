"""Complex polynomials on the unit circle.

Everything downstream manipulates pairs (P, Q) normalised as
|P(z)|^2 + |Q(z)|^2 = 1 for |z| = 1.  This module owns the coefficient
arithmetic, a companion-matrix root finder, and the completion step that
produces Q from P by spectral (Fejer-Riesz) factorisation of
1 - P(z) conj(P)(1/z).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TRIM_EPS = 1e-13
EPS_NORM = 1e-9
EPS_ROOT = 1e-9
EPS_REAL = 1e-10
GRID_SAMPLES = 4096

# Roots within this band of the unit circle are treated as on-circle
# double roots (they occur at interpolation nodes where |P| touches 1).
_ON_CIRCLE_BAND = 1e-6
_PAIRING_TOL = 1e-3
_CLUSTER_WIDTH = 0.05


class SynthesisError(RuntimeError):
    """A numeric synthesis step could not meet its contract."""


def _as_coeff_array(coeffs) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(coeffs, dtype=complex)).ravel()
    if arr.size == 0:
        raise ValueError("coefficients must be a non-empty sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError("coefficients must be finite")
    return arr


def _trim(arr: np.ndarray, rel: float = TRIM_EPS) -> np.ndarray:
    scale = np.abs(arr).max()
    if scale == 0.0:
        return np.zeros(1, dtype=complex)
    keep = np.nonzero(np.abs(arr) > rel * scale)[0]
    if keep.size == 0:
        return np.zeros(1, dtype=complex)
    return np.array(arr[: keep[-1] + 1])


@dataclass(frozen=True, eq=False)
class ComplexPolynomial:
    """Finite coefficient sequence; ``coeffs[m]`` multiplies ``z**m``."""

    coeffs: np.ndarray

    def __post_init__(self):
        arr = _trim(_as_coeff_array(self.coeffs))
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(z, self.coeffs)

    def padded(self, length: int) -> np.ndarray:
        """Coefficients padded with zeros up to ``length`` entries."""
        if length < len(self.coeffs):
            raise ValueError("pad length shorter than coefficient array")
        out = np.zeros(length, dtype=complex)
        out[: len(self.coeffs)] = self.coeffs
        return out


def eval_on_circle(poly: ComplexPolynomial, phi: float) -> complex:
    """Evaluate the polynomial at z = exp(i phi)."""
    if not np.isfinite(phi):
        raise ValueError("phi must be finite")
    return complex(poly(np.exp(1j * phi)))


def multiply(a: ComplexPolynomial, b: ComplexPolynomial) -> ComplexPolynomial:
    return ComplexPolynomial(np.convolve(a.coeffs, b.coeffs))


def roots(poly: ComplexPolynomial) -> np.ndarray:
    """All complex roots with multiplicity, via the companion matrix."""
    if poly.degree < 1:
        raise ValueError("no roots of a constant")
    r = np.roots(poly.coeffs[::-1])
    scale = np.abs(poly.coeffs).max()
    resid = np.abs(poly(r)).max()
    if resid > EPS_ROOT * scale:
        raise SynthesisError(
            f"root residual {resid:.3e} exceeds {EPS_ROOT:.1e} * max coefficient"
        )
    return r


def circle_values(coeffs, samples: int) -> np.ndarray:
    """Values of the polynomial at exp(2 pi i j / samples), j = 0..samples-1.

    Uses the inverse FFT; powers >= samples alias exactly on the grid.
    """
    base = np.asarray(coeffs, dtype=complex)
    c = np.zeros(samples, dtype=complex)
    if len(base) > samples:
        for m in range(len(base)):
            c[m % samples] += base[m]
    else:
        c[: len(base)] = base
    return np.fft.ifft(c) * samples


def sup_on_circle(coeffs, samples: int = GRID_SAMPLES) -> float:
    return float(np.abs(circle_values(coeffs, samples)).max())


@dataclass(frozen=True, eq=False)
class PolynomialPair:
    """A completed pair with its measured normalisation defect."""

    p: ComplexPolynomial
    q: ComplexPolynomial
    defect: float


def normalization_defect(pair: PolynomialPair, samples: int) -> float:
    """max_j | |P|^2 + |Q|^2 - 1 | on the uniform grid of ``samples`` angles."""
    need = 2 * (pair.p.degree + pair.q.degree) + 1
    if samples < need:
        raise ValueError(f"samples={samples} below Nyquist requirement {need}")
    vp = np.abs(circle_values(pair.p.coeffs, samples)) ** 2
    vq = np.abs(circle_values(pair.q.coeffs, samples)) ** 2
    return float(np.abs(vp + vq - 1.0).max())


def make_pair(
    p: ComplexPolynomial, q: ComplexPolynomial, samples: int = GRID_SAMPLES
) -> PolynomialPair:
    if q.degree > p.degree and not q.is_zero:
        raise ValueError("deg(q) must not exceed deg(p)")
    pair = PolynomialPair(p, q, 0.0)
    d = normalization_defect(pair, samples)
    return PolynomialPair(p, q, d)


def _halve_circle_roots(circ: np.ndarray) -> list[complex]:
    """Keep one representative per on-circle double root.

    Sorted by angle starting after the widest gap; adjacent entries are
    paired and replaced by the mid-angle point projected onto the circle.
    """
    if len(circ) == 0:
        return []
    if len(circ) % 2:
        raise SynthesisError(
            f"factorization unstable: odd on-circle root count at {circ[0]!r}"
        )
    ang = np.sort(np.angle(circ))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
    start = (int(np.argmax(gaps)) + 1) % len(ang)
    rolled = np.concatenate([ang[start:], ang[:start] + 2 * np.pi])
    kept = []
    for i in range(0, len(rolled), 2):
        a, b = rolled[i], rolled[i + 1]
        if b - a > _CLUSTER_WIDTH:
            raise SynthesisError(
                f"factorization unstable: unpaired on-circle root at angle {a:.6f}"
            )
        kept.append(np.exp(1j * (a + b) / 2))
    return kept


def _match_reciprocal(inside: np.ndarray, outside: np.ndarray) -> None:
    """Check each inside root has a conjugate-reciprocal partner outside."""
    if len(inside) != len(outside):
        raise SynthesisError(
            "factorization unstable: unbalanced inside/outside root counts "
            f"({len(inside)} vs {len(outside)})"
        )
    if len(inside) == 0:
        return
    used = np.zeros(len(outside), dtype=bool)
    for rr in inside:
        # distance of r*conj(s) from 1 in the log metric; 0 when s = 1/conj(r)
        d = np.abs(np.log(rr * np.conj(outside)))
        d[used] = np.inf
        j = int(np.argmin(d))
        if d[j] > _PAIRING_TOL:
            raise SynthesisError(f"factorization unstable: root {rr!r} unpaired")
        used[j] = True


def complementary_polynomial(
    p: ComplexPolynomial, mode: str = "gqsp", grid: int = GRID_SAMPLES
) -> ComplexPolynomial:
    """Complete P to Q with |P|^2 + |Q|^2 = 1 on the unit circle.

    The Laurent polynomial 1 - P(z) conj(P)(1/z) is lifted to an ordinary
    polynomial, its roots are split into conjugate-reciprocal pairs (inside
    roots kept), on-circle double roots are split evenly, and the product is
    rescaled to match the mean of 1 - |P|^2.  In ``oqsp`` mode the input must
    have real coefficients and the result carries purely imaginary ones.
    """
    if mode not in ("gqsp", "oqsp"):
        raise ValueError(f"unknown completion mode {mode!r}")
    c = np.array(p.coeffs)
    scale = max(1.0, np.abs(c).max())
    if mode == "oqsp":
        if np.abs(c.imag).max() > EPS_REAL * scale:
            raise ValueError("oqsp completion expects real coefficients")
        c = c.real.astype(complex)

    sup = sup_on_circle(c, max(grid, 4 * len(c)))
    if sup > 1.0 + EPS_NORM:
        raise SynthesisError(
            f"polynomial not completable: sup |P| = {sup:.12g} exceeds 1"
        )

    m_deg = len(c) - 1
    lau = -np.convolve(c, np.conj(c[::-1]))
    lau[m_deg] += 1.0
    lau = (lau + np.conj(lau[::-1])) / 2  # enforce Hermitian Laurent symmetry

    amax = np.abs(lau).max()
    if amax <= 1e-13:
        return ComplexPolynomial([0.0])  # |P| is 1 everywhere: Q = 0

    nz = np.nonzero(np.abs(lau) > TRIM_EPS * amax)[0]
    J = int(nz.max()) - m_deg
    if J <= 0:
        # only the constant Laurent coefficient survives: |Q| is constant
        q0 = np.sqrt(max(lau[m_deg].real, 0.0))
        out = np.array([1j * q0 if mode == "oqsp" else q0 + 0j])
        return ComplexPolynomial(out)

    lifted = ComplexPolynomial(lau[m_deg - J : m_deg + J + 1])
    r = np.roots(lifted.coeffs[::-1])

    on = np.abs(np.abs(r) - 1.0) < _ON_CIRCLE_BAND
    circ, rest = r[on], r[~on]
    inside = rest[np.abs(rest) < 1.0]
    outside = rest[np.abs(rest) >= 1.0]
    _match_reciprocal(inside, outside)
    sel = np.concatenate([inside, np.array(_halve_circle_roots(circ), dtype=complex)])

    b = np.polynomial.polynomial.polyfromroots(sel) if len(sel) else np.array([1.0 + 0j])
    if mode == "oqsp":
        bscale = np.abs(b).max()
        if np.abs(b.imag).max() > 1e-8 * bscale:
            raise SynthesisError(
                "factorization unstable: asymmetric root selection in oqsp mode"
            )
        b = b.real.astype(complex)

    a0 = lau[m_deg].real
    if a0 <= 0:
        return ComplexPolynomial([0.0])
    cmag = np.sqrt(a0 / np.sum(np.abs(b) ** 2))
    q = (1j * cmag * b) if mode == "oqsp" else (cmag * b)

    q = _newton_refine_completion(c, q, mode, grid)

    qv = np.abs(circle_values(q, grid)) ** 2
    pv = np.abs(circle_values(c, grid)) ** 2
    defect = np.abs(pv + qv - 1.0).max()
    if defect > EPS_NORM:
        raise SynthesisError(
            f"factorization unstable: completion defect {defect:.3e}"
        )
    return ComplexPolynomial(q)


def _newton_refine_completion(
    p: np.ndarray, q: np.ndarray, mode: str, grid: int
) -> np.ndarray:
    """Newton steps on |P|^2 + |Q|^2 = 1 over the circle grid.

    Solves the linearisation 2 Re(conj(Q) dQ) = 1 - |P|^2 - |Q|^2 in least
    squares for the coefficient update; recovers the precision lost by the
    high-degree root finding.  Preserves the oqsp i*(real) structure and the
    gqsp leading-phase convention.
    """
    z = np.exp(2j * np.pi * np.arange(grid) / grid)
    pv2 = np.abs(circle_values(p, grid)) ** 2
    n_q = len(q)
    powers = z[:, None] ** np.arange(n_q)[None, :]

    def defect_of(qc):
        return np.abs(pv2 + np.abs(circle_values(qc, grid)) ** 2 - 1.0).max()

    cur = defect_of(q)
    for _ in range(4):
        if cur < 1e-13:
            break
        qv = circle_values(q, grid)
        err = 1.0 - pv2 - np.abs(qv) ** 2
        base = np.conj(qv)[:, None] * powers
        if mode == "oqsp":
            design = 2.0 * np.real(base * 1j)
        else:
            design = np.hstack([2.0 * np.real(base), 2.0 * np.real(base * 1j)])
        # rank cutoff suppresses phase-like null directions of the linearisation
        d, *_ = np.linalg.lstsq(design, err, rcond=1e-6)
        dq = 1j * d if mode == "oqsp" else d[:n_q] + 1j * d[n_q:]
        step = 1.0
        improved = False
        for _half in range(6):
            cand = q + step * dq
            cd = defect_of(cand)
            if cd < cur:
                q, cur, improved = cand, cd, True
                break
            step /= 2.0
        if not improved:
            break
    if mode == "gqsp":
        lead = q[np.nonzero(np.abs(q) > TRIM_EPS * np.abs(q).max())[0][-1]]
        q = q * np.exp(-1j * np.angle(lead))
    return q


def completed_pair(p: ComplexPolynomial, mode: str = "gqsp") -> PolynomialPair:
    """Convenience: complete P and package the measured pair."""
    q = complementary_polynomial(p, mode)
    return make_pair(p, q)
