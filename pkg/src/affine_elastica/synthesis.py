"""Curve synthesis for every case of the area-constrained taxonomy.

Generic families ride on the Lame equation F'' = 6 wp F: the first solution
phi1 is the logarithmic-derivative expression built from sigma and zeta, the
second comes either from the mirrored parameter -c (the reciprocal Floquet
solution, closed form) or from the reduction-of-order integral.  Coordinate
functions are antiderivatives of the phi's; a final constant linear map
enforces |gamma', gamma''| = 1.

Degenerate families (D, E, F, G, ellipses) use their explicit closed forms.
The closure condition for the bounded-oscillation family with positive
minimum curvature is solved by bracketed root finding in the maximum
curvature Q.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ._numerics import gl_cumulative
from .classifier import Branch, Case, CaseLabel, classify
from .curvature import CurveSamples, frame_and_curvature
from .elliptic import (
    Invariants,
    LatticeData,
    half_periods,
    invariants_from_qQ,
    log_sigma_w,
    wp,
    wp_prime,
    zeta_w,
)
from .errors import (
    EllipseFitFailed,
    GridHitsPole,
    NoSuchC,
    NotBracketed,
    PathThroughZero,
    UnimodularizationFailed,
)

__all__ = [
    "LameSolutionParams",
    "ClosureSolution",
    "lame_parameter_c",
    "lame_params",
    "lame_phi1",
    "lame_phi1_prime",
    "lame_phi2",
    "synthesize",
    "synthesize_arcs",
    "synthesize_closed",
    "synthesize_length_constrained",
    "length_constrained_kappa",
    "closure_lhs",
    "closure_lhs_with_d",
    "solve_closure",
    "a3_nonperiodicity",
    "euclidean_display_transform",
    "analytic_kappa",
    "default_grid",
]

#: admissible window of winding ratios n/m for closed curves (observed)
CLOSURE_WINDOW = (1.0, np.sqrt(2.0))

_POLE_MARGIN = 1e-6  # relative grid-to-pole distance that raises GridHitsPole
_DEPENDENCE_RTOL = 1e-8  # below this, Re phi1 and Im phi1 count as dependent


@dataclass(frozen=True)
class LameSolutionParams:
    """Data needed to evaluate the Lame solutions for one curve family.

    ``c`` satisfies wp(c) = -g3/g2; ``c0`` is the branch shift of the
    curvature (0 or the imaginary half-period).
    """

    inv: Invariants
    c: complex
    c0: complex
    s_grid: np.ndarray

    def __post_init__(self):
        g2, g3 = self.inv.g2, self.inv.g3
        target = -g3 / g2
        val = wp(self.c, self.inv)
        if abs(val - target) > 1e-8 * max(1.0, abs(target)):
            raise ValueError("c does not satisfy wp(c) = -g3/g2")


@dataclass
class ClosureSolution:
    """A closed curve of the positive-minimum-curvature family (q = 1)."""

    m: int
    n: int
    Q: float
    inv: Invariants
    lattice: LatticeData
    d: float  # c = w1 + d*i with the negative-imaginary representative
    lhs: float

    @property
    def c(self) -> complex:
        return self.lattice.w1 + 1j * self.d

    @property
    def period(self) -> float:
        return 4.0 * self.m * self.lattice.w1

    def to_json_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "Q": self.Q,
            "g2": self.inv.g2,
            "g3": self.inv.g3,
            "w1": self.lattice.w1,
            "w2_im": self.lattice.w2_im,
            "d": self.d,
            "lhs": self.lhs,
            "period": self.period,
        }


def lame_parameter_c(inv: Invariants, prefer_negative_imag: bool = False) -> complex:
    """The parameter c with wp(c) = -g3/g2 on its canonical lattice segment.

    The level -g3/g2 is real, so c lies on one of the four segments where wp
    is real: the real axis (wp >= e1), the vertical line through w1
    (e2..e1), the horizontal line through w2 (e3..e2) or the imaginary axis
    (<= e3); for a rhombic lattice only the first and last occur.  Either
    representative of the pair +-c works; ``prefer_negative_imag`` picks the
    one with Im(c) <= 0 for reproducibility.
    """
    lat = half_periods(inv)
    g2, g3 = inv.g2, inv.g3
    v = -g3 / g2
    w1, w2i = lat.w1, lat.w2_im
    rhombic = inv.discriminant < 0
    if rhombic:
        e_top = float(lat.roots[1].real)  # single real root
        bands = [
            ("real", e_top, None),
            ("imag", None, e_top),
        ]
    else:
        e1, e2, e3 = (float(r.real) for r in lat.roots)
        bands = [
            ("real", e1, None),
            ("vert", e2, e1),
            ("horiz", e3, e2),
            ("imag", None, e3),
        ]

    def _root(fn, lo, hi):
        flo, fhi = fn(lo), fn(hi)
        if flo * fhi > 0:
            raise NoSuchC("wp level not bracketed on the canonical segment")
        return brentq(fn, lo, hi, xtol=1e-14, rtol=4e-15)

    eps_r = 3e-6 * w1  # outside the kernel's pole guard
    eps_i = 3e-6 * w1
    for kind, lo_val, hi_val in bands:
        if kind == "real" and v >= lo_val:
            d = _root(lambda t: wp(complex(t, 0.0), inv).real - v, eps_r, w1)
            return complex(d, 0.0)
        if kind == "vert" and lo_val <= v <= hi_val:
            y = _root(lambda t: wp(complex(w1, t), inv).real - v, 0.0, w2i)
            return complex(w1, -y) if prefer_negative_imag else complex(w1, y)
        if kind == "horiz" and lo_val <= v <= hi_val:
            d = _root(lambda t: wp(complex(t, w2i), inv).real - v, 0.0, w1)
            return complex(d, -w2i) if prefer_negative_imag else complex(d, w2i)
        if kind == "imag" and v <= hi_val:
            y = _root(lambda t: wp(complex(0.0, t), inv).real - v, eps_i, w2i)
            return complex(0.0, -y) if prefer_negative_imag else complex(0.0, y)
    raise NoSuchC(f"level {v:.6g} not matched by any canonical segment")


def lame_params(inv: Invariants, c0: complex, s_grid) -> LameSolutionParams:
    """Build LameSolutionParams with the canonical c for these invariants."""
    prefer = abs(complex(c0).imag) > 0  # bounded-oscillation branch convention
    c = lame_parameter_c(inv, prefer_negative_imag=prefer)
    return LameSolutionParams(inv=inv, c=c, c0=complex(c0), s_grid=np.asarray(s_grid, float))


def _mu(inv: Invariants, c: complex) -> complex:
    pc = wp(c, inv)
    return -wp_prime(c, inv) / (2.0 * pc) - zeta_w(c, inv)


def _lame_system(inv: Invariants, c: complex):
    """Callables (h, phi1, phi1_prime) of the Lame variable z for parameter c.

    h(z) = sigma(z + c)/sigma(z) * exp(mu z) is the antiderivative of phi1;
    evaluation goes through log-sigma differences so the exponential
    quasi-period factors cancel before exponentiation.
    """
    mu = _mu(inv, c)

    def h(z):
        z = np.asarray(z, dtype=complex)
        return np.exp(log_sigma_w(z + c, inv) - log_sigma_w(z, inv) + mu * z)

    def g(z):
        z = np.asarray(z, dtype=complex)
        return zeta_w(z + c, inv) - zeta_w(z, inv) + mu

    def phi1(z):
        return h(z) * g(z)

    def phi1p(z):
        z = np.asarray(z, dtype=complex)
        return h(z) * (g(z) ** 2 + wp(z, inv) - wp(z + c, inv))

    return h, phi1, phi1p


def lame_phi1(z, p: LameSolutionParams):
    """First Lame solution phi1(z); satisfies phi1'' = 6 wp phi1."""
    _, phi1, _ = _lame_system(p.inv, p.c)
    return phi1(z)


def lame_phi1_prime(z, p: LameSolutionParams):
    """Derivative of the first Lame solution."""
    _, _, phi1p = _lame_system(p.inv, p.c)
    return phi1p(z)


def lame_phi2(z, p: LameSolutionParams, panels_per_unit: int = 160):
    """Second Lame solution by reduction of order, Wronskian 1.

    phi2(z) = phi1(z) * integral of phi1(v)^-2 from z0 to z, with z0 the
    first grid point shifted by -c0 and a straight integration path.  Raises
    PathThroughZero if phi1 nearly vanishes on the path.
    """
    _, phi1, _ = _lame_system(p.inv, p.c)
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    zs = np.atleast_1d(z)
    z0 = complex(p.s_grid[0]) - p.c0

    # straight path per requested point; reject paths crossing a phi1 zero
    out = np.empty_like(zs)
    for i, zt in enumerate(zs):
        npan = max(8, int(abs(zt - z0) * panels_per_unit))
        nodes = z0 + (zt - z0) * np.linspace(0.0, 1.0, npan + 1)
        vals = phi1(nodes)
        a, b = vals[:-1], vals[1:]
        d = b - a
        t = np.clip(-np.real(np.conj(d) * a) / np.maximum(np.abs(d) ** 2, 1e-300), 0.0, 1.0)
        dmin = np.abs(a + t * d)  # closest approach of each linear segment to 0
        if np.min(dmin) < 1e-5 * np.median(np.abs(vals)):
            raise PathThroughZero("phi1 vanishes on the integration path")
        I = gl_cumulative(lambda v: 1.0 / phi1(v) ** 2, nodes)[-1]
        out[i] = phi1(zt) * I
    return complex(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# closure condition


def _closure_quantity(inv: Invariants, lat: LatticeData, c: complex) -> complex:
    A = (wp_prime(c, inv) / (2.0 * wp(c, inv)) + zeta_w(c, inv)) * lat.w1 - lat.eta1 * c
    return A * 2j / np.pi


def closure_lhs_with_d(Q: float) -> tuple[float, float]:
    """Closure quantity and the parameter d (c = w1 + d i) for q = 1.

    The two representatives +-Im(c) give opposite signs of the (purely
    real) quantity; the positive-imaginary one matches the positive winding
    ratios n/m, while d is reported for the negative-imaginary
    representative used to draw the curve.
    """
    if not Q > 1.0:
        raise ValueError("normalization requires Q > 1")
    inv = invariants_from_qQ(1.0, Q)
    lat = half_periods(inv)
    c = lame_parameter_c(inv, prefer_negative_imag=False)
    if abs(c.real - lat.w1) > 1e-9 * lat.w1:
        raise NoSuchC("expected c on the vertical segment through w1")
    val = _closure_quantity(inv, lat, c)
    if abs(val.imag) > 1e-8 * max(1.0, abs(val.real)):
        raise AssertionError("closure quantity should be real")
    return float(val.real), -float(c.imag)


def closure_lhs(Q: float) -> float:
    """Closure quantity as a function of the maximum curvature Q (q = 1)."""
    return closure_lhs_with_d(Q)[0]


def solve_closure(
    m: int, n: int, q_scan=(1.0 + 1e-3, 1.0e3), scan_points: int = 120
) -> ClosureSolution:
    """Root-find the Q > 1 whose closure quantity equals n/m.

    Observed data put solvable ratios inside ]1, sqrt(2)[; other targets are
    attempted anyway and raise NotBracketed when no sign change appears on
    the log-spaced scan grid.
    """
    target = n / m
    qs = np.geomspace(q_scan[0], q_scan[1], scan_points)
    prev_q = None
    prev_f = None
    bracket = None
    for qv in qs:
        f = closure_lhs(float(qv)) - target
        if prev_f is not None and np.sign(f) != np.sign(prev_f):
            bracket = (prev_q, float(qv))
            break
        prev_q, prev_f = float(qv), f
    if bracket is None:
        raise NotBracketed(
            f"no Q in [{q_scan[0]:g}, {q_scan[1]:g}] with closure quantity {target:g}"
        )
    Q = brentq(lambda qv: closure_lhs(qv) - target, *bracket, xtol=1e-13, rtol=4e-15)
    lhs, d = closure_lhs_with_d(Q)
    inv = invariants_from_qQ(1.0, Q)
    lat = half_periods(inv)
    return ClosureSolution(m=m, n=n, Q=float(Q), inv=inv, lattice=lat, d=d, lhs=lhs)


def a3_nonperiodicity(Q: float) -> float:
    """Non-periodicity bracket for the negative-minimum family (q = -1).

    Evaluates w1 sqrt(-g3/g2) - zeta(w1) d + w1 zeta(w2 + d) - w1 zeta(w2)
    with wp(w2 + d) = -g3/g2.  This quantity is real; a nonzero value rules
    out closed curves in this family because after multiplication by 2i/pi
    it is the imaginary part the closure quantity acquires (the coordinate
    multiplier leaves the unit circle).  The square root takes the
    principal branch; only non-vanishing is meaningful.
    """
    if not Q > 2.0:
        raise ValueError("the q = -1 normalization requires Q > 2")
    inv = invariants_from_qQ(-1.0, Q)
    lat = half_periods(inv)
    v = -inv.g3 / inv.g2
    c = lame_parameter_c(inv)
    if abs(c.imag - lat.w2_im) > 1e-9 * lat.w2_im:
        raise NoSuchC("expected c on the horizontal segment through w2")
    d = c.real
    w2 = 1j * lat.w2_im
    val = (
        lat.w1 * np.sqrt(v)
        - lat.eta1 * d
        + lat.w1 * zeta_w(w2 + d, inv)
        - lat.w1 * zeta_w(w2, inv)
    )
    if abs(val.imag) > 1e-8 * max(1.0, abs(val.real)):
        raise AssertionError("non-periodicity bracket should be real")
    return float(val.real)


# ---------------------------------------------------------------------------
# synthesis


def analytic_kappa(label: CaseLabel, s: np.ndarray) -> np.ndarray:
    """Closed-form curvature of the case family on the given grid."""
    s = np.asarray(s, dtype=float)
    tag = label.tag
    inv = Invariants(label.g2, label.g3)
    if tag in (Case.A1, Case.A2, Case.A3):
        lat = half_periods(inv)
        return -6.0 * wp(s - 1j * lat.w2_im, inv).real
    if tag in (Case.B1, Case.B2, Case.B3, Case.C1, Case.C2, Case.C3, Case.C4, Case.C5, Case.F):
        return -6.0 * wp(np.asarray(s, dtype=complex), inv).real
    if tag in (Case.Da, Case.Dc):
        E = label.params["E"]
        b = np.sqrt(-1.5 * E)
        t = 1.0 / np.tanh(b * s) if tag is Case.Da else np.tanh(b * s)
        return 9.0 * E * t**2 - 6.0 * E
    if tag is Case.E_case:
        E = label.params["E"]
        b = np.sqrt(1.5 * E)
        return -9.0 * E * np.tan(b * s) ** 2 - 6.0 * E
    if tag is Case.G:
        return -6.0 / s**2
    if tag is Case.Ellipse:
        return np.full_like(s, 3.0 * label.params["E"])
    raise ValueError(f"no closed-form curvature for {tag}")


def default_grid(label: CaseLabel, n: int | None = None) -> np.ndarray:
    """A sample grid that stays clear of curvature poles for this case."""
    tag = label.tag
    inv = Invariants(label.g2, label.g3)
    if tag is Case.Ellipse:
        kappa0 = 3.0 * label.params["E"]
        period = 2.0 * np.pi / np.sqrt(kappa0)
        return np.linspace(0.0, period, n or 4096, endpoint=False)
    if tag is Case.G:
        return np.linspace(0.7, 3.5, n or 4000)
    if tag in (Case.Da, Case.Dc):
        b = np.sqrt(-1.5 * label.params["E"])
        if tag is Case.Da:
            return np.linspace(1.2 / b, 5.0 / b, n or 4000)
        return np.linspace(-2.5 / b, 2.5 / b, n or 4000)
    if tag is Case.E_case:
        b = np.sqrt(1.5 * label.params["E"])
        lim = 0.5 * (np.pi / 2.0) / b
        return np.linspace(-lim, lim, n or 4000)
    lat = half_periods(inv)
    w1 = lat.w1
    if tag in (Case.A1, Case.A3):
        return np.linspace(0.0, 6.0 * w1, n or 6000)
    if tag is Case.A2:
        return np.linspace(-0.9 * w1, 0.9 * w1, n or 4000)
    if tag is Case.C3:
        # curvature vanishes at odd multiples of w1: stay on one smooth arc
        return np.linspace(0.3 * w1, 0.8 * w1, n or 5000)
    # branch through the curvature pole: stay inside one period of it
    return np.linspace(0.5 * w1, 1.5 * w1, n or 4000)


def _grid_from(label: CaseLabel, grid, n) -> np.ndarray:
    if grid is None:
        return default_grid(label, n)
    if isinstance(grid, tuple) and len(grid) in (2, 3):
        lo, hi = grid[0], grid[1]
        npts = grid[2] if len(grid) == 3 else (n or 4000)
        return np.linspace(lo, hi, npts)
    return np.asarray(grid, dtype=float)


def _check_poles(s: np.ndarray, poles: np.ndarray, scale: float, what: str):
    if len(poles) == 0:
        return
    d = np.min(np.abs(s[:, None] - poles[None, :]), axis=1)
    if np.any(d < _POLE_MARGIN * scale):
        raise GridHitsPole(f"grid touches a {what} pole")


def _pole_set(tag: Case, label: CaseLabel, s: np.ndarray) -> tuple[np.ndarray, float]:
    inv = Invariants(label.g2, label.g3)
    lo, hi = float(np.min(s)), float(np.max(s))
    if tag is Case.C3:
        # curvature poles at even multiples of w1 and square-root flips at odd ones
        w1 = half_periods(inv).w1
        k = np.arange(np.floor(lo / w1) - 1, np.ceil(hi / w1) + 2)
        return w1 * k, w1
    if tag in (Case.B1, Case.B2, Case.B3, Case.C1, Case.C2, Case.C4, Case.C5, Case.F):
        w1 = half_periods(inv).w1
        k = np.arange(np.floor(lo / (2 * w1)) - 1, np.ceil(hi / (2 * w1)) + 2)
        return 2.0 * w1 * k, w1
    if tag is Case.A2:
        w1 = half_periods(inv).w1
        k = np.arange(np.floor(lo / (2 * w1)) - 1, np.ceil(hi / (2 * w1)) + 2)
        return w1 * (2.0 * k + 1.0), w1
    if tag is Case.Da:
        return np.array([0.0]), 1.0 / np.sqrt(-1.5 * label.params["E"])
    if tag is Case.E_case:
        b = np.sqrt(1.5 * label.params["E"])
        half = (np.pi / 2.0) / b
        k = np.arange(np.floor(lo / (2 * half)) - 1, np.ceil(hi / (2 * half)) + 2)
        return half * (2.0 * k + 1.0), 1.0 / b
    if tag is Case.G:
        return np.array([0.0]), 1.0
    return np.array([]), 1.0


def _unimodular_scale(x: np.ndarray, y: np.ndarray, det0: float):
    """Diagonal map making |gamma', gamma''| = 1 from a constant det0."""
    if not np.isfinite(det0) or det0 == 0.0:
        raise UnimodularizationFailed("constant determinant vanished")
    a = 1.0 / np.sqrt(abs(det0))
    b = np.sign(det0) * a
    return x * a, y * b


def _wronskian_stats(u1p, u1pp, u2p, u2pp):
    w = u1p * u2pp - u2p * u1pp
    med = float(np.median(w))
    spread = float(np.median(np.abs(w - med)))
    return med, spread


def _lame_route(label: CaseLabel, s: np.ndarray, force_general: bool = False):
    """Coordinates for the generic families via the Lame solutions."""
    inv = Invariants(label.g2, label.g3)
    lat = half_periods(inv)
    c0 = 1j * lat.w2_im if label.c0_is_w2 else 0.0 + 0.0j
    c = lame_parameter_c(inv, prefer_negative_imag=label.c0_is_w2)
    z = s.astype(complex) - c0

    h, phi1, phi1p = _lame_system(inv, c)
    H = h(z)
    P1 = phi1(z)
    P1p = phi1p(z)

    wri = np.imag(np.conj(P1) * P1p)
    scale = np.median(np.abs(P1) * np.abs(P1p)) + 1e-300
    independent = np.median(np.abs(wri)) > _DEPENDENCE_RTOL * scale

    if independent and not force_general:
        # Wronskian of the (Re phi1, Im phi1) pair is Im(conj(phi1) phi1')
        det0 = float(np.median(wri))
        spread = float(np.median(np.abs(wri - det0)))
        if spread > 1e-6 * abs(det0):
            raise UnimodularizationFailed("Wronskian of Re/Im pair is not constant")
        x, y = _unimodular_scale(H.real, H.imag, det0)
        return x, y, "explicit"

    # general route: mirrored Floquet partner supplies the missing solution
    hm, phi1m, phi1pm = _lame_system(inv, -c)
    Hm = hm(z)
    P1m = phi1m(z)
    P1pm = phi1pm(z)

    funcs = np.array([H.real - H.real.mean(), H.imag - H.imag.mean(),
                      Hm.real - Hm.real.mean(), Hm.imag - Hm.imag.mean()])
    d1 = np.array([P1.real, P1.imag, P1m.real, P1m.imag])
    d2 = np.array([P1p.real, P1p.imag, P1pm.real, P1pm.imag])
    u, up, upp = _solution_pair(funcs, d1, d2)
    det0, spread = _wronskian_stats(up[0], upp[0], up[1], upp[1])
    if abs(det0) < 1e-12 * float(np.median(np.abs(up[0] * upp[1]))) or spread > 1e-6 * abs(det0):
        raise UnimodularizationFailed("Wronskian of the combined pair is not constant")
    x, y = _unimodular_scale(u[0], u[1], det0)
    return x, y, "general"


def _solution_pair(funcs: np.ndarray, d1: np.ndarray, d2: np.ndarray):
    """Two independent real combinations out of candidate solution rows.

    Rows of d1 are candidate first derivatives; rows whose norm is
    negligible (numerically zero functions) are dropped before the SVD so
    normalization cannot amplify rounding noise into fake directions.
    """
    norms = np.sqrt(np.mean(d1**2, axis=1))
    keep = norms > 1e-12 * norms.max()
    if np.count_nonzero(keep) < 2:
        raise UnimodularizationFailed("fewer than two usable solution candidates")
    funcs, d1, d2, norms = funcs[keep], d1[keep], d2[keep], norms[keep]
    U, svals, _ = np.linalg.svd(d1 / norms[:, None], full_matrices=False)
    if svals[1] < 1e-10 * svals[0]:
        raise UnimodularizationFailed("could not find two independent real solutions")
    combo = U[:, :2].T / norms[None, :]
    return combo @ funcs, combo @ d1, combo @ d2


def _sqrt_line_route(label: CaseLabel, s: np.ndarray):
    """Families whose position is +-sqrt(|kappa|) (1, s) up to a linear map."""
    kappa = analytic_kappa(label, s)
    positive = label.tag is Case.A2
    w = np.sqrt(kappa) if positive else np.sqrt(-kappa)
    det0 = 3.0 * label.g2 if positive else -3.0 * label.g2
    x, y = _unimodular_scale(w, w * s, det0)
    return x, y, "sqrt-line"


def _de_route(label: CaseLabel, s: np.ndarray):
    """Explicit solution pairs for the degenerate-discriminant families."""
    E = label.params["E"]
    tag = label.tag
    if tag in (Case.Da, Case.Dc):
        a = np.sqrt(-3.0 * E)
        b = np.sqrt(-1.5 * E)

        def tfun(z):
            return 1.0 / np.tanh(b * z) if tag is Case.Da else np.tanh(b * z)

        def f1(z):
            t = tfun(z)
            return np.exp(a * z) * (1.0 - 3.0 * np.sqrt(2.0) * t + 3.0 * t * t)

        def f2(z):
            t = tfun(z)
            return np.exp(-a * z) * (1.0 + 3.0 * np.sqrt(2.0) * t + 3.0 * t * t)

        z0 = float(np.median(s))
        t0 = tfun(z0)
        dt0 = b * (1.0 - t0 * t0)
        f1p = a * f1(z0) + np.exp(a * z0) * (-3.0 * np.sqrt(2.0) + 6.0 * t0) * dt0
        f2p = -a * f2(z0) + np.exp(-a * z0) * (3.0 * np.sqrt(2.0) + 6.0 * t0) * dt0
        W = f1(z0) * f2p - f2(z0) * f1p
    else:  # Case.E_case
        al = np.sqrt(3.0 * E)
        b = np.sqrt(1.5 * E)

        def f1(z):
            t = np.tan(b * z)
            return np.cos(al * z) * (1.0 - 3.0 * t * t) + 3.0 * np.sqrt(2.0) * np.sin(al * z) * t

        def f2(z):
            t = np.tan(b * z)
            return np.sin(al * z) * (3.0 * t * t - 1.0) + 3.0 * np.sqrt(2.0) * np.cos(al * z) * t

        z0 = float(s[len(s) // 3])
        t0 = np.tan(b * z0)
        dt0 = b * (1.0 + t0 * t0)
        f1p = (
            -al * np.sin(al * z0) * (1.0 - 3.0 * t0 * t0)
            - 6.0 * np.cos(al * z0) * t0 * dt0
            + 3.0 * np.sqrt(2.0) * (al * np.cos(al * z0) * t0 + np.sin(al * z0) * dt0)
        )
        f2p = (
            al * np.cos(al * z0) * (3.0 * t0 * t0 - 1.0)
            + 6.0 * np.sin(al * z0) * t0 * dt0
            + 3.0 * np.sqrt(2.0) * (-al * np.sin(al * z0) * t0 + np.cos(al * z0) * dt0)
        )
        W = f1(z0) * f2p - f2(z0) * f1p

    sc = 1.0 / np.sqrt(abs(W))
    sgn = np.sign(W)
    x = gl_cumulative(lambda z: f1(np.asarray(z).real) * sc, s).real
    y = gl_cumulative(lambda z: sgn * f2(np.asarray(z).real) * sc, s).real
    return x, y, "closed-form"


def _f_route(label: CaseLabel, s: np.ndarray):
    """g2 = 0 family: affine image of (zeta(s), wp(s) - zeta(s)^2)."""
    inv = Invariants(label.g2, label.g3)
    z = s.astype(complex)
    zv = zeta_w(z, inv)
    pv = wp(z, inv)
    x0 = zv.real
    y0 = (pv - zv * zv).real
    det0 = -label.g3
    x, y = _unimodular_scale(x0, y0, det0)
    return x, y, "closed-form"


def _g_route(s: np.ndarray):
    al = 20.0 ** -0.5
    return al * s**4, al / s, "closed-form"


def _ellipse_route(label: CaseLabel, s: np.ndarray):
    kappa0 = 3.0 * label.params["E"]
    R = kappa0 ** -0.75
    om = np.sqrt(kappa0)
    return R * np.cos(om * s), R * np.sin(om * s), "closed-form"


def synthesize(
    label: CaseLabel,
    grid=None,
    n: int | None = None,
    closed: bool = False,
    period: float | None = None,
    force_general: bool = False,
) -> CurveSamples:
    """Equi-affine samples of the critical curve described by ``label``.

    ``grid`` is an (lo, hi) tuple, an (lo, hi, n) tuple or an explicit
    uniform array; omitted, a case-appropriate pole-avoiding default is
    used.  The output satisfies |gamma', gamma''| = 1 and its recomputed
    curvature matches the closed form for the case.
    """
    tag = label.tag
    s = _grid_from(label, grid, n)
    poles, scale = _pole_set(tag, label, s)
    _check_poles(s, poles, scale, tag.value)

    if tag is Case.Ellipse:
        x, y, route = _ellipse_route(label, s)
        closed = closed or grid is None
        period = period or (2.0 * np.pi / np.sqrt(3.0 * label.params["E"]))
    elif tag is Case.G:
        x, y, route = _g_route(s)
    elif tag in (Case.Da, Case.Dc, Case.E_case):
        x, y, route = _de_route(label, s)
    elif tag is Case.F:
        x, y, route = _f_route(label, s)
    elif tag in (Case.A2, Case.B2, Case.C3):
        x, y, route = _sqrt_line_route(label, s)
    else:
        x, y, route = _lame_route(label, s, force_general=force_general)

    meta = {
        "case": tag.value,
        "g2": label.g2,
        "g3": label.g3,
        "route": route,
        "params": {k: float(v) for k, v in label.params.items()},
    }
    if tag is Case.A2:
        meta["sign_flip_at_poles"] = True  # smooth arcs alternate sign between poles
    win = _verification_window(tag, label, s, poles, scale)
    if win is not None:
        meta["fd_window"] = win
    out = CurveSamples(s, x, y, closed=closed, period=period, meta=meta)
    return out


def _verification_window(tag: Case, label: CaseLabel, s, poles, scale) -> int | None:
    """Derivative-filter window sized by the nearest curvature singularity.

    The smoothing filter's truncation bias grows like (window / pole
    distance)^(degree+1), so the window span is capped at a fraction of the
    distance from the grid to the closest real or complex singularity.
    """
    h = float(s[1] - s[0])
    rho = np.inf
    if len(poles):
        rho = float(np.min(np.abs(s[:, None] - poles[None, :])))
    inv = Invariants(label.g2, label.g3)
    if tag in (Case.A1, Case.A2, Case.A3, Case.B1, Case.B2, Case.B3,
               Case.C1, Case.C2, Case.C3, Case.C4, Case.C5, Case.F):
        rho = min(rho, half_periods(inv).w2_im)
    elif tag in (Case.Da, Case.Dc):
        rho = min(rho, 0.5 * np.pi / np.sqrt(-1.5 * label.params["E"]))
    elif tag is Case.E_case:
        rho = min(rho, 0.5 * np.pi / np.sqrt(1.5 * label.params["E"]))
    elif tag is Case.G:
        rho = min(rho, float(np.min(np.abs(s))))
    else:
        return None
    if not np.isfinite(rho):
        return None
    win = int(np.clip(0.2 * rho / h, 101, 401))
    return win if win % 2 else win + 1


def synthesize_arcs(
    label: CaseLabel, n_arcs: int = 3, n_per_arc: int = 2000, margin: float = 0.08
) -> list[CurveSamples]:
    """Consecutive smooth arcs of a square-root-line family curve.

    The curvature of these families (minimum curvature zero, bounded
    oscillation) vanishes at odd multiples of the real half-period; the
    position formula flips sign there, so each smooth arc is emitted
    separately with alternating sign, matching the ``sign_flip_at_poles``
    convention recorded in the metadata.
    """
    if label.tag is not Case.A2:
        raise ValueError("multi-arc synthesis applies to the zero-minimum family")
    inv = Invariants(label.g2, label.g3)
    w1 = half_periods(inv).w1
    arcs = []
    for ell in range(n_arcs):
        lo = (2 * ell - 1) * w1 + margin * w1
        hi = (2 * ell + 1) * w1 - margin * w1
        s = np.linspace(lo, hi, n_per_arc)
        kappa = analytic_kappa(label, s)
        w = np.sqrt(np.abs(kappa))
        sign = -1.0 if ell % 2 else 1.0
        x, y = _unimodular_scale(sign * w, sign * w * s, 3.0 * label.g2)
        arc = CurveSamples(s, x, y, closed=False, meta={
            "case": label.tag.value,
            "g2": label.g2,
            "g3": label.g3,
            "route": "sqrt-line",
            "arc_index": ell,
            "sign_flip_at_poles": True,
        })
        poles, scale = _pole_set(label.tag, label, s)
        win = _verification_window(label.tag, label, s, poles, scale)
        if win is not None:
            arc.meta["fd_window"] = win
        arcs.append(arc)
    return arcs


def synthesize_closed(sol: ClosureSolution, samples_per_period: int = 2000) -> CurveSamples:
    """One full closed curve of a closure solution, grid excluding the wrap."""
    label = classify(sol.inv, Branch.closed_branch)
    T = sol.period
    npts = samples_per_period * 2 * sol.m
    s = np.linspace(0.0, T, npts, endpoint=False)
    out = synthesize(label, grid=s, closed=True, period=T)
    out.meta.update(sol.to_json_dict())
    return out


def synthesize_length_constrained(
    A: float, g3: float, c0="w2", grid=None, n: int | None = None
) -> CurveSamples:
    """Critical curves of total curvature under arc-length constraint.

    The curvature is -6 wp(s - c0) + A/2 with g2 = A^2 / 12 and free g3;
    coordinates come from the zeta-based closed form, reduced to two
    independent real solutions and unimodularized.  ``c0`` is "0" or "w2".
    """
    inv = Invariants(A * A / 12.0, g3)
    if inv.is_degenerate:
        raise ValueError("choose g3 with a non-degenerate discriminant")
    lat = half_periods(inv)
    rhombic = inv.discriminant < 0
    use_w2 = str(c0) in ("w2", "W2") or (isinstance(c0, complex) and c0.imag != 0)
    c0c = 1j * lat.w2_im if use_w2 else 0.0 + 0.0j

    if grid is None:
        w1 = lat.w1
        if use_w2 and not rhombic:
            s = np.linspace(0.0, 4.0 * w1, n or 4000)
        elif use_w2 and rhombic:
            s = np.linspace(-0.6 * w1, 0.6 * w1, n or 4000)
        else:
            s = np.linspace(0.4 * w1, 1.6 * w1, n or 4000)
    else:
        s = _grid_from(CaseLabel(Case.F, {}, inv.g2, inv.g3), grid, n)

    # pole check: wp(s - c0) poles on the real s line
    w1 = lat.w1
    if use_w2 and rhombic:
        poles = w1 * (2.0 * np.arange(np.floor(s.min() / w1) - 2, np.ceil(s.max() / w1) + 2) + 1.0)
    elif use_w2:
        poles = np.array([])
    else:
        poles = 2.0 * w1 * np.arange(np.floor(s.min() / (2 * w1)) - 1, np.ceil(s.max() / (2 * w1)) + 2)
    _check_poles(s, poles, w1, "curvature")

    z = s.astype(complex) - c0c
    zv = zeta_w(z, inv)
    pv = wp(z, inv)
    ppv = wp_prime(z, inv)
    xf = -zv + (A / 12.0) * s
    yf = (A / 6.0) * zv * z + pv - zv * zv - (A / 12.0) ** 2 * z * z
    xfp = pv + A / 12.0
    yfp = (A / 6.0) * (zv - pv * z) + ppv + 2.0 * zv * pv - (A * A / 72.0) * z
    ppp = 6.0 * pv * pv - inv.g2 / 2.0
    xfpp = ppv
    yfpp = (
        (A / 6.0) * (-2.0 * pv - ppv * z)
        + ppp
        - 2.0 * pv * pv
        + 2.0 * zv * ppv
        - A * A / 72.0
    )

    funcs = np.array([xf.real, xf.imag, yf.real, yf.imag])
    funcs = funcs - funcs.mean(axis=1, keepdims=True)
    d1 = np.array([xfp.real, xfp.imag, yfp.real, yfp.imag])
    d2 = np.array([xfpp.real, xfpp.imag, yfpp.real, yfpp.imag])
    u, up, upp = _solution_pair(funcs, d1, d2)
    det0, spread = _wronskian_stats(up[0], upp[0], up[1], upp[1])
    if spread > 1e-6 * abs(det0):
        raise UnimodularizationFailed("Wronskian is not constant")
    x, y = _unimodular_scale(u[0], u[1], det0)
    meta = {
        "case": "length-constrained",
        "A": A,
        "g2": inv.g2,
        "g3": g3,
        "c0": "w2" if use_w2 else "0",
        "route": "general",
    }
    return CurveSamples(s, x, y, closed=False, meta=meta)


def length_constrained_kappa(A: float, g3: float, c0, s) -> np.ndarray:
    """Closed-form curvature -6 wp(s - c0) + A/2 of the constrained family."""
    inv = Invariants(A * A / 12.0, g3)
    lat = half_periods(inv)
    use_w2 = str(c0) in ("w2", "W2")
    c0c = 1j * lat.w2_im if use_w2 else 0.0 + 0.0j
    return -6.0 * wp(np.asarray(s, float).astype(complex) - c0c, inv).real + A / 2.0


# ---------------------------------------------------------------------------
# display transform


def _conic_through(points: np.ndarray) -> np.ndarray:
    """Least-squares conic coefficients (A, B, C, D, E, F) through points."""
    x, y = points[:, 0], points[:, 1]
    M = np.column_stack([x * x, x * y, y * y, x, y, np.ones_like(x)])
    _, _, Vt = np.linalg.svd(M)
    return Vt[-1]


def euclidean_display_transform(c: CurveSamples, sol: ClosureSolution | None = None) -> CurveSamples:
    """Linear display map sending the curvature-maximum ellipse to a circle.

    The output is display-normalized only (no longer equi-affine normalized)
    and flagged as such in the metadata.  Constant-curvature inputs return
    unchanged.
    """
    fr = frame_and_curvature(c)
    kappa = fr.kappa
    kscale = float(np.mean(np.abs(kappa)))
    if float(np.std(kappa)) < 1e-8 * max(kscale, 1e-300):
        out = c.transformed(np.eye(2))
        out.meta["display_normalized"] = True
        return out
    if not c.closed:
        raise EllipseFitFailed("display normalization needs a closed curve")

    # locate curvature maxima with sub-grid parabolic refinement
    n = c.n
    idx = np.nonzero((kappa > np.roll(kappa, 1)) & (kappa >= np.roll(kappa, -1)))[0]
    if len(idx) < 5:
        raise EllipseFitFailed("need at least 5 curvature maxima to fit the ellipse")
    pts = []
    xs, ys = c.x, c.y
    h = c.h
    for i in idx:
        km, k0, kp = kappa[(i - 1) % n], kappa[i], kappa[(i + 1) % n]
        denom = km - 2 * k0 + kp
        delta = 0.5 * (km - kp) / denom if denom != 0 else 0.0
        f = np.clip(delta, -1.0, 1.0)
        # quadratic position interpolation through three neighbouring samples
        xm, x0v, xp = xs[(i - 1) % n], xs[i], xs[(i + 1) % n]
        ym, y0v, yp = ys[(i - 1) % n], ys[i], ys[(i + 1) % n]
        px = x0v + 0.5 * f * (xp - xm) + 0.5 * f * f * (xp - 2 * x0v + xm)
        py = y0v + 0.5 * f * (yp - ym) + 0.5 * f * f * (yp - 2 * y0v + ym)
        pts.append((px, py))
    pts = np.asarray(pts)

    coef = _conic_through(pts)
    A2 = np.array([[coef[0], coef[1] / 2.0], [coef[1] / 2.0, coef[2]]])
    if np.linalg.det(A2) <= 0:
        raise EllipseFitFailed("fitted conic is not an ellipse")
    center = np.linalg.solve(2.0 * A2, -coef[3:5])
    val0 = (
        coef[0] * center[0] ** 2
        + coef[1] * center[0] * center[1]
        + coef[2] * center[1] ** 2
        + coef[3] * center[0]
        + coef[4] * center[1]
        + coef[5]
    )
    S = A2 / (-val0)
    evals, evecs = np.linalg.eigh(S)
    if np.any(evals <= 0):
        raise EllipseFitFailed("fitted conic is not an ellipse")
    L = evecs @ np.diag(np.sqrt(evals)) @ evecs.T
    out = c.transformed(L, -L @ center)
    out.meta["display_normalized"] = True
    return out
