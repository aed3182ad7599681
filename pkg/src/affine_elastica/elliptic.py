"""Weierstrass elliptic kernel for real invariants (g2, g3).

Strategy: pick a half-period frame (W1, W3) for the period lattice such that
the nome q = exp(i*pi*W3/W1) satisfies |q| <= exp(-pi/2), reduce arguments to
the fundamental cell, and evaluate wp, wp', zeta and sigma through the first
Jacobi theta function and its first three derivatives.  Half-periods come
from the cubic roots of 4t^3 - g2 t - g3 and AGM-based complete elliptic
integrals.  Everything is double precision; lattices with vanishing
discriminant are rejected.

All functions are pure and accept scalars or ndarrays for the argument z;
they are safe for concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._numerics import ellip_K
from .errors import DegenerateDiscriminant, NearPole

__all__ = [
    "Invariants",
    "LatticeData",
    "half_periods",
    "wp",
    "wp_prime",
    "zeta_w",
    "sigma_w",
    "log_sigma_w",
    "invariants_from_qQ",
    "invariants_from_Ptau",
    "cubic_roots",
]

#: relative discriminant threshold below which a lattice is refused
DEGENERACY_RTOL = 1e-12

#: distance from a lattice point (relative to w1) that counts as "at a pole"
POLE_RTOL = 1e-6

_THETA_TERMS = 20  # enough for |q| <= exp(-pi/2) at double precision


@dataclass(frozen=True)
class Invariants:
    """Weierstrass invariants of the quartic (wp')^2 = 4 wp^3 - g2 wp - g3.

    In equi-affine arc-length units g2 has dimension length^-4 and g3
    length^-6.
    """

    g2: float
    g3: float

    @property
    def discriminant(self) -> float:
        return self.g2**3 - 27.0 * self.g3**2

    @property
    def is_degenerate(self) -> bool:
        scale = max(abs(self.g2) ** 3, 27.0 * self.g3**2)
        return abs(self.discriminant) <= DEGENERACY_RTOL * scale or scale == 0.0


@dataclass(frozen=True)
class LatticeData:
    """Half-period data of the (rectangular or rhombic) period lattice.

    ``w1`` is the real half-period: wp restricted to the real line has
    period 2*w1.  ``w2_im`` is the imaginary part of the purely imaginary
    half-period w2 = i*w2_im, the half-period of the restriction to the
    imaginary line.  ``roots`` holds the cubic roots, descending and real
    for a positive discriminant, else (a+ib, r, a-ib) with the single real
    root in the middle.  ``eta1`` is zeta(w1).
    """

    w1: float
    w2_im: float
    roots: tuple[complex, complex, complex]
    eta1: float

    @property
    def w2(self) -> complex:
        return 1j * self.w2_im


def cubic_roots(g2: float, g3: float) -> np.ndarray:
    """Roots of 4 t^3 - g2 t - g3 = 0, Newton-polished."""
    r = np.roots([4.0, 0.0, -g2, -g3])
    for _ in range(2):
        f = 4.0 * r**3 - g2 * r - g3
        fp = 12.0 * r**2 - g2
        step = np.where(np.abs(fp) > 0, f / np.where(fp == 0, 1.0, fp), 0.0)
        r = r - step
    return r


def invariants_from_qQ(q: float, Q: float) -> Invariants:
    """Invariants whose phase-plane cubic meets kappa' = 0 at kappa = q and Q.

    The third intersection sits at -(q + Q); requires q < Q.
    """
    if not q < Q:
        raise ValueError("need q < Q")
    g2 = (q * q + Q * Q + q * Q) / 9.0
    g3 = (q * q * Q + q * Q * Q) / 54.0
    return Invariants(g2, g3)


def invariants_from_Ptau(P: float, tau: float) -> Invariants:
    """Invariants with one real curvature intersection P and complex pair -P/2 +- i*tau.

    Requires tau > 0; the resulting discriminant is negative.
    """
    if not tau > 0:
        raise ValueError("need tau > 0")
    g2 = (3.0 * P * P - 4.0 * tau * tau) / 36.0
    g3 = -P * (P * P + 4.0 * tau * tau) / 216.0
    return Invariants(g2, g3)


# ---------------------------------------------------------------------------
# internal evaluation frame


@dataclass(frozen=True)
class _Frame:
    w1: float
    w2_im: float
    roots: tuple[complex, complex, complex]
    W1: complex  # theta-frame half periods (2*W1, 2*W3 generate the lattice)
    W3: complex
    tau: complex
    th1p0: complex  # theta1'(0)
    th1ppp0: complex  # theta1'''(0)
    eta1f: complex  # zeta(W1)
    eta3f: complex  # zeta(W3)
    basis_inv: tuple[float, float, float, float]  # inverse of [2W1 | 2W3] as reals
    pole_tol: float


def _theta1_bundle(u: np.ndarray, tau: complex):
    """theta1 and first three u-derivatives, by q-series; u complex ndarray."""
    t0 = np.zeros_like(u, dtype=complex)
    t1 = np.zeros_like(t0)
    t2 = np.zeros_like(t0)
    t3 = np.zeros_like(t0)
    for n in range(_THETA_TERMS):
        w = 2 * n + 1
        coef = (-1.0) ** n * np.exp(1j * np.pi * tau * (n + 0.5) ** 2)
        s = np.sin(w * u)
        c = np.cos(w * u)
        t0 += coef * s
        t1 += coef * w * c
        t2 -= coef * w * w * s
        t3 -= coef * w * w * w * c
    return 2.0 * t0, 2.0 * t1, 2.0 * t2, 2.0 * t3


@lru_cache(maxsize=256)
def _frame_cached(g2: float, g3: float) -> _Frame:
    inv = Invariants(g2, g3)
    if inv.is_degenerate:
        raise DegenerateDiscriminant(
            f"discriminant {inv.discriminant:.3e} is degenerate relative to g2^3"
        )
    r = cubic_roots(g2, g3)
    delta = inv.discriminant
    if delta > 0.0:
        er = np.sort(r.real)[::-1]
        e1, e2, e3 = er
        m = (e2 - e3) / (e1 - e3)
        scale = np.sqrt(e1 - e3)
        w1 = ellip_K(m) / scale
        w2_im = ellip_K(1.0 - m) / scale
        roots = (complex(e1), complex(e2), complex(e3))
        rhombic = False
    else:
        i_real = int(np.argmin(np.abs(r.imag)))
        rr = float(r[i_real].real)
        pair = np.delete(r, i_real)
        b = abs(float(pair[0].imag))
        H = np.sqrt(2.25 * rr * rr + b * b)
        m = 0.5 - 0.75 * rr / H
        scale = np.sqrt(H)
        w1 = ellip_K(m) / scale
        w2_im = ellip_K(1.0 - m) / scale
        a = -0.5 * rr
        roots = (complex(a, b), complex(rr), complex(a, -b))
        rhombic = True

    # theta frame with Im(tau) >= 1/2 so the nome stays small
    if not rhombic:
        if w2_im >= w1:
            W1, W3 = complex(w1), 1j * w2_im
        else:
            W1, W3 = 1j * w2_im, complex(-w1)
    else:
        if w2_im >= w1:
            W1, W3 = complex(w1), 0.5 * (w1 + 1j * w2_im)
        else:
            W1, W3 = 1j * w2_im, 0.5 * (-w1 + 1j * w2_im)
    tau = W3 / W1
    _, th1p0, _, th1ppp0 = _theta1_bundle(np.zeros(1, dtype=complex), tau)
    th1p0 = complex(th1p0[0])
    th1ppp0 = complex(th1ppp0[0])
    eta1f = -np.pi**2 * th1ppp0 / (12.0 * W1 * th1p0)
    eta3f = (eta1f * W3 - 0.5j * np.pi) / W1
    p1, p2 = 2.0 * W1, 2.0 * W3
    det = p1.real * p2.imag - p1.imag * p2.real
    basis_inv = (p2.imag / det, -p2.real / det, -p1.imag / det, p1.real / det)
    return _Frame(
        w1=float(w1),
        w2_im=float(w2_im),
        roots=roots,
        W1=W1,
        W3=W3,
        tau=tau,
        th1p0=th1p0,
        th1ppp0=th1ppp0,
        eta1f=eta1f,
        eta3f=eta3f,
        basis_inv=basis_inv,
        pole_tol=POLE_RTOL * float(w1),
    )


def _frame(inv: Invariants) -> _Frame:
    return _frame_cached(float(inv.g2), float(inv.g3))


def _reduce(z: np.ndarray, fr: _Frame):
    """Reduce z modulo the lattice to the centered cell; return multiples."""
    a, b, c, d = fr.basis_inv
    x = z.real
    y = z.imag
    ca = a * x + b * y
    cb = c * x + d * y
    M = np.rint(ca)
    N = np.rint(cb)
    zr = z - (2.0 * fr.W1 * M + 2.0 * fr.W3 * N)
    return zr, M, N


_NEIGHBORS = [(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)]


def _lattice_distance(zr: np.ndarray, fr: _Frame) -> np.ndarray:
    d = np.full(np.shape(zr), np.inf)
    for i, j in _NEIGHBORS:
        d = np.minimum(d, np.abs(zr - (2.0 * fr.W1 * i + 2.0 * fr.W3 * j)))
    return d


def _check_pole(zr: np.ndarray, fr: _Frame, what: str) -> None:
    d = _lattice_distance(zr, fr)
    if np.any(d < fr.pole_tol):
        raise NearPole(f"{what}: argument within {fr.pole_tol:.2e} of a lattice point")


def _as_complex_array(z):
    arr = np.asarray(z, dtype=complex)
    return arr, arr.ndim == 0


def wp(z, inv: Invariants):
    """Weierstrass wp(z; g2, g3).  Scalar or ndarray argument."""
    fr = _frame(inv)
    arr, scalar = _as_complex_array(z)
    zr, _, _ = _reduce(arr, fr)
    _check_pole(zr, fr, "wp")
    u = np.pi * zr / (2.0 * fr.W1)
    t0, t1, t2, _ = _theta1_bundle(u, fr.tau)
    dlog2 = (t2 * t0 - t1 * t1) / (t0 * t0)
    val = -fr.eta1f / fr.W1 - (np.pi / (2.0 * fr.W1)) ** 2 * dlog2
    return complex(val) if scalar else val


def wp_prime(z, inv: Invariants):
    """Derivative wp'(z; g2, g3)."""
    fr = _frame(inv)
    arr, scalar = _as_complex_array(z)
    zr, _, _ = _reduce(arr, fr)
    _check_pole(zr, fr, "wp_prime")
    u = np.pi * zr / (2.0 * fr.W1)
    t0, t1, t2, t3 = _theta1_bundle(u, fr.tau)
    dlog3 = (t3 * t0 * t0 - 3.0 * t2 * t1 * t0 + 2.0 * t1**3) / t0**3
    val = -((np.pi / (2.0 * fr.W1)) ** 3) * dlog3
    return complex(val) if scalar else val


def zeta_w(z, inv: Invariants):
    """Weierstrass zeta(z; g2, g3) with the quasi-period of this lattice."""
    fr = _frame(inv)
    arr, scalar = _as_complex_array(z)
    zr, M, N = _reduce(arr, fr)
    _check_pole(zr, fr, "zeta_w")
    u = np.pi * zr / (2.0 * fr.W1)
    t0, t1, _, _ = _theta1_bundle(u, fr.tau)
    val = (
        2.0 * (M * fr.eta1f + N * fr.eta3f)
        + fr.eta1f * zr / fr.W1
        + (np.pi / (2.0 * fr.W1)) * t1 / t0
    )
    return complex(val) if scalar else val


def log_sigma_w(z, inv: Invariants):
    """A logarithm of sigma(z); exp of differences of this is branch-safe.

    Useful because sigma itself overflows for moderately large |z| while
    ratios of sigmas stay bounded.
    """
    fr = _frame(inv)
    arr, scalar = _as_complex_array(z)
    zr, M, N = _reduce(arr, fr)
    u = np.pi * zr / (2.0 * fr.W1)
    t0, _, _, _ = _theta1_bundle(u, fr.tau)
    with np.errstate(divide="ignore"):  # sigma vanishes at lattice points
        log_t0 = np.log(t0 / fr.th1p0)
    eta_L = 2.0 * (M * fr.eta1f + N * fr.eta3f)
    L = 2.0 * fr.W1 * M + 2.0 * fr.W3 * N
    val = (
        np.log(2.0 * fr.W1 / np.pi)
        + fr.eta1f * zr * zr / (2.0 * fr.W1)
        + log_t0
        + eta_L * (zr + 0.5 * L)
        + 1j * np.pi * (M + N + M * N)
    )
    return complex(val) if scalar else val


def sigma_w(z, inv: Invariants):
    """Weierstrass sigma(z; g2, g3).  Entire; may overflow for large |z|."""
    val = np.exp(log_sigma_w(z, inv))
    return complex(val) if np.ndim(z) == 0 else val


def half_periods(inv: Invariants) -> LatticeData:
    """Half-period data for non-degenerate invariants.

    wp restricted to the real line has period 2*w1 and to the imaginary
    line period 2*w2.  Raises DegenerateDiscriminant when the cubic has a
    repeated root to tolerance.
    """
    fr = _frame(inv)
    eta1 = zeta_w(fr.w1, inv)
    if abs(eta1.imag) > 1e-9 * max(1.0, abs(eta1.real)):
        raise AssertionError("zeta(w1) should be real for real invariants")
    # consistency: wp at the real half-period equals the largest real root
    e_half = wp(fr.w1, inv)
    e_ref = max((r.real for r in fr.roots if abs(r.imag) < 1e-9), default=None)
    if e_ref is None or abs(e_half.real - e_ref) > 1e-8 * max(1.0, abs(e_ref)):
        raise AssertionError("wp(w1) does not match the largest real root")
    return LatticeData(w1=fr.w1, w2_im=fr.w2_im, roots=fr.roots, eta1=float(eta1.real))
