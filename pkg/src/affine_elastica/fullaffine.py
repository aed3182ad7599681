"""Full-affine invariants of positively curved curves and SL(2) machinery.

The full-affine arc-length element is sqrt(kappa) ds and the full-affine
curvature is kappa' / (2 kappa^(3/2)); both are invariant under all
invertible linear maps plus translations.  A curve's pointed osculating
parabolas trace a path in the equi-affine group whose SL(2) part carries
the bi-invariant metric g(v, v) = -det(v) of Lorentzian signature; the
pseudo-arc-length of that path reproduces the full-affine arc-length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from ._numerics import diff_samples, integrate_samples
from .curvature import CurveSamples, frame_and_curvature, _kappa_derivs
from .errors import BlowUp, NonConvex

__all__ = [
    "FullAffineData",
    "SL2Point",
    "PointedParabolaPath",
    "LinearPositionCertificate",
    "ConstrainedSqrtResiduals",
    "full_affine_invariants",
    "el_residual_sqrt",
    "linear_position_certificate",
    "el_residual_full_affine_form",
    "curve_from_full_affine_curvature",
    "constrained_sqrt_residuals",
    "sl2_geodesic",
    "osculating_parabola",
    "congruence_path",
    "congruence_arclength",
    "osculating_conic",
]


@dataclass
class FullAffineData:
    """Full-affine arc-length grid and curvature along a convex curve."""

    s_F: np.ndarray
    kappa_F: np.ndarray
    closed: bool = False


@dataclass(frozen=True)
class SL2Point:
    """Element of SL(2): [[a, b], [c, d]] with unit determinant."""

    a: float
    b: float
    c: float
    d: float

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])


@dataclass
class PointedParabolaPath:
    """Osculating parabolic congruence: SL(2) parts plus special points."""

    mats: np.ndarray  # (n, 2, 2)
    translations: np.ndarray  # (n, 2)
    t: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "t": [float(v) for v in self.t],
            "mats": [[[float(x) for x in row] for row in m] for m in self.mats],
            "translations": [[float(x) for x in p] for p in self.translations],
        }


@dataclass
class LinearPositionCertificate:
    """Least-squares certificate kappa_F ~ A x + B y + C."""

    is_w_curve: bool
    A: float
    B: float
    C: float
    fit_residual: float


@dataclass
class ConstrainedSqrtResiduals:
    area_Q: float
    area_residual: float
    length_Q: float
    length_residual: float
    total_curv_Q: float
    total_curv_residual: float


def _require_convex(kappa: np.ndarray, sel) -> None:
    if np.min(kappa[sel]) <= 0.0:
        raise NonConvex("operation requires strictly positive curvature")


def full_affine_invariants(c: CurveSamples) -> FullAffineData:
    """Cumulative full-affine arc-length and pointwise full-affine curvature."""
    kappa, k1, _ = _kappa_derivs(c)
    _require_convex(kappa, slice(None))
    from ._numerics import cumulative_uniform

    s_F = cumulative_uniform(np.sqrt(kappa), c.h)
    kappa_F = k1 / (2.0 * kappa**1.5)
    return FullAffineData(s_F=s_F, kappa_F=kappa_F, closed=c.closed)


def el_residual_sqrt(c: CurveSamples) -> float:
    """RMS of (kappa_F)''' + kappa (kappa_F)'; zero iff critical for full-affine length."""
    kappa, k1, _ = _kappa_derivs(c)
    sel = c.interior()
    _require_convex(kappa, sel)
    win = c.meta.get("fd_window")
    kF = k1 / (2.0 * kappa**1.5)
    kF1 = diff_samples(kF, c.h, 1, periodic=c.closed, window=win)
    kF3 = diff_samples(kF, c.h, 3, periodic=c.closed, window=win)
    res = kF3 + kappa * kF1
    return float(np.sqrt(np.mean(res[sel] ** 2)))


def linear_position_certificate(c: CurveSamples, w_rtol: float = 1e-4) -> LinearPositionCertificate:
    """Fit kappa_F against an affine function of position.

    A critical curve of the full-affine length either has constant
    full-affine curvature (W-curve branch) or kappa_F is a non-zero linear
    function of position for a suitable origin.
    """
    kappa, k1, _ = _kappa_derivs(c)
    sel = c.interior()
    _require_convex(kappa, sel)
    kF = k1 / (2.0 * kappa**1.5)
    spread = float(np.std(kF[sel]))
    scale = max(float(np.max(np.abs(kF[sel]))), 1e-300)
    if spread < w_rtol * max(scale, 1.0):
        return LinearPositionCertificate(True, 0.0, 0.0, float(np.mean(kF[sel])), spread)
    M = np.column_stack([c.x[sel], c.y[sel], np.ones(len(c.x[sel]))])
    coef, *_ = np.linalg.lstsq(M, kF[sel], rcond=None)
    resid = M @ coef - kF[sel]
    rms = float(np.sqrt(np.mean(resid**2)))
    A, B, C = (float(v) for v in coef)
    is_w = abs(A) < w_rtol * scale and abs(B) < w_rtol * scale
    return LinearPositionCertificate(is_w, A, B, C, rms)


def el_residual_full_affine_form(fd: FullAffineData, window: int | None = None) -> float:
    """RMS residual of the criticality equation written in full-affine data.

    The equation is d3k/dsF3 + 3 k d2k/dsF2 + (dk/dsF)^2 + (2 k^2 + 1)
    dk/dsF = 0 with k = kappa_F and derivatives taken with respect to the
    full-affine arc-length.  Non-uniform s_F grids are resampled through a
    cubic spline first.
    """
    sF = np.asarray(fd.s_F, float)
    kF = np.asarray(fd.kappa_F, float)
    hs = np.diff(sF)
    h = float(hs[0])
    if not np.allclose(hs, h, rtol=1e-9, atol=1e-12 * max(abs(h), 1e-300)):
        n = len(sF)
        spl = CubicSpline(sF, kF)
        sFu = np.linspace(sF[0], sF[-1], n)
        kF = spl(sFu)
        h = float(sFu[1] - sFu[0])
    d1 = diff_samples(kF, h, 1, periodic=fd.closed, window=window)
    d2 = diff_samples(kF, h, 2, periodic=fd.closed, window=window)
    d3 = diff_samples(kF, h, 3, periodic=fd.closed, window=window)
    res = d3 + 3.0 * kF * d2 + d1**2 + (2.0 * kF**2 + 1.0) * d1
    n = len(kF)
    if fd.closed:
        sel = slice(None)
    else:
        from ._numerics import effective_window

        skip = max(3, effective_window(n, window) // 2)
        sel = slice(skip, n - skip)
    return float(np.sqrt(np.mean(res[sel] ** 2)))


def curve_from_full_affine_curvature(
    kF, s_range=(-3.0, 3.0), n: int = 4001, kappa_cap: float = 1.0e6
) -> CurveSamples:
    """Reconstruct a curve whose full-affine curvature is the given function.

    ``kF`` maps full-affine arc-length to curvature.  Integrates the
    coupled system kappa' = 2 kappa^(3/2) kF(s_F), s_F' = sqrt(kappa) and
    the frame equations with the gauge kappa(0) = 1, gamma(0) = 0 and the
    standard frame at s = 0.  Raises BlowUp (reporting the reached s) if
    kappa leaves [1/cap, cap] inside the range.
    """

    def rhs(s, u):
        kappa, sF, x, y, tx, ty, nx, ny = u
        rk = np.sqrt(kappa)
        return [
            2.0 * kappa * rk * kF(sF),
            rk,
            tx,
            ty,
            nx,
            ny,
            -kappa * tx,
            -kappa * ty,
        ]

    def blow(s, u):
        return np.log(max(u[0], 1e-300) / 1.0) ** 2 - np.log(kappa_cap) ** 2

    blow.terminal = True

    s_lo, s_hi = float(s_range[0]), float(s_range[1])
    if not s_lo <= 0.0 <= s_hi:
        raise ValueError("the range must contain the gauge point s = 0")
    s = np.linspace(s_lo, s_hi, n)
    u0 = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0]
    out = np.empty((8, n))
    span = s_hi - s_lo
    for side in (-1, 1):
        mask = s < 0 if side < 0 else s >= 0
        if not np.any(mask):
            continue
        t_eval = s[mask][::-1] if side < 0 else s[mask]
        t_end = s_lo if side < 0 else s_hi
        sol = solve_ivp(
            rhs,
            (0.0, t_end),
            u0,
            t_eval=t_eval,
            rtol=1e-13,
            atol=1e-15,
            # small steps keep the dense-output seams below the rounding
            # floor; downstream derivative filters see smooth samples
            max_step=max(span / 1000.0, 1e-3),
            method="DOP853",
            events=blow,
        )
        if sol.status == 1:
            raise BlowUp(f"curvature left the admissible range near s = {sol.t[-1]:.6g}")
        out[:, mask] = sol.y[:, ::-1] if side < 0 else sol.y
    cs = CurveSamples(s, out[2], out[3], closed=False)
    cs.meta["kappa0"] = 1.0
    # verification window sized by the distance to the curvature blow-up,
    # estimated from the endpoint data: kappa ~ (kF_inf (s* - s))^-2
    kmax = float(np.max(out[0]))
    kf_end = max(abs(float(kF(out[1, 0]))), abs(float(kF(out[1, -1]))), 1e-9)
    rho = min(1.0 / (kf_end * np.sqrt(kmax)), span / 3.0)
    h = float(s[1] - s[0])
    win = int(np.clip(0.2 * rho / h, 101, 401))
    cs.meta["fd_window"] = win if win % 2 else win + 1
    return cs


def constrained_sqrt_residuals(c: CurveSamples) -> ConstrainedSqrtResiduals:
    """Fit the constrained criticality forms of the full-affine length.

    (kappa_F)''' + kappa (kappa_F)' equals a constant Q under area
    constraint, Q kappa under arc-length constraint and Q (kappa'' +
    kappa^2) under total-curvature constraint.  Each form is fitted in its
    exactly integrated shape kappa_F = A x + B y + C + Q R, where R is a
    primitive of the support function, of 1, or of kappa respectively
    (R''' + kappa R' reproduces the right-hand side); this needs only one
    derivative level and so stays well conditioned on sampled curves.  The
    residual is the rms misfit of kappa_F, and Q keeps the meaning it has
    in the differential form.
    """
    from ._numerics import cumulative_uniform
    from .curvature import support_function

    kappa, k1, _ = _kappa_derivs(c)
    sel = c.interior()
    _require_convex(kappa, sel)
    kF = k1 / (2.0 * kappa**1.5)
    rho = support_function(c).rho
    R_area = cumulative_uniform(rho, c.h)
    R_len = c.s - c.s[0]
    R_tot = cumulative_uniform(kappa, c.h)
    base = [c.x, c.y, np.ones_like(c.x)]

    def _fit(Rcol):
        M = np.column_stack([col[sel] for col in base] + [Rcol[sel]])
        coef, *_ = np.linalg.lstsq(M, kF[sel], rcond=None)
        resid = M @ coef - kF[sel]
        return float(coef[-1]), float(np.sqrt(np.mean(resid**2)))

    qa, ra = _fit(R_area)
    ql, rl = _fit(R_len)
    qt, rt = _fit(R_tot)
    return ConstrainedSqrtResiduals(qa, ra, ql, rl, qt, rt)


_SL2_DIRS = {
    "e1": np.array([[1.0, 0.0], [0.0, -1.0]]),
    "e2": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "e3": np.array([[0.0, 1.0], [-1.0, 0.0]]),
}


def sl2_geodesic(v, t: float) -> SL2Point:
    """Geodesic exp(t v) of the -det metric from the identity.

    ``v`` is "e1", "e2", "e3" or any traceless 2x2 array.  The closed-form
    exponential is hyperbolic for det v < 0, trigonometric for det v > 0
    and linear for det v = 0; the speed g(v, v) = -det v is constant along
    the geodesic.
    """
    if isinstance(v, str):
        v = _SL2_DIRS[v]
    v = np.asarray(v, dtype=float)
    if abs(v[0, 0] + v[1, 1]) > 1e-12 * max(1.0, float(np.max(np.abs(v)))):
        raise ValueError("direction must be traceless")
    D = float(np.linalg.det(v))
    if D < 0:
        th = np.sqrt(-D)
        M = np.cosh(th * t) * np.eye(2) + np.sinh(th * t) / th * v
    elif D > 0:
        th = np.sqrt(D)
        M = np.cos(th * t) * np.eye(2) + (np.sin(th * t) / th if th else t) * v
    else:
        M = np.eye(2) + t * v
    return SL2Point(M[0, 0], M[0, 1], M[1, 0], M[1, 1])


def osculating_parabola(c: CurveSamples, i: int) -> tuple[SL2Point, np.ndarray]:
    """Equi-affine map sending the standard pointed parabola to the osculating one.

    The standard pointed parabola is t -> (t, t^2 / 2) with special point
    at the origin; the map's linear part is [T | N] at sample i (unit
    determinant), the translation is gamma(s_i).
    """
    fr = frame_and_curvature(c)
    L = np.column_stack([fr.T[i], fr.N[i]])
    return SL2Point(L[0, 0], L[0, 1], L[1, 0], L[1, 1]), np.array([c.x[i], c.y[i]])


def congruence_path(c: CurveSamples) -> PointedParabolaPath:
    """The curve of pointed osculating parabolas as equi-affine group elements."""
    fr = frame_and_curvature(c)
    n = c.n
    mats = np.empty((n, 2, 2))
    mats[:, :, 0] = fr.T
    mats[:, :, 1] = fr.N
    return PointedParabolaPath(mats=mats, translations=c.points(), t=c.s.copy())


def congruence_arclength(c: CurveSamples) -> float:
    """Pseudo-Riemannian length of the SL(2) part of the parabola congruence.

    Differentiates the congruence entries numerically, integrates
    sqrt(|-det(dP/ds)|) over the trusted nodes and raises NonConvex if the
    causal character of the velocity changes along the way (the velocity is
    time-like where kappa > 0 and space-like where kappa < 0).
    """
    path = congruence_path(c)
    win = c.meta.get("fd_window")
    dmats = np.empty_like(path.mats)
    for r in range(2):
        for cc in range(2):
            dmats[:, r, cc] = diff_samples(
                path.mats[:, r, cc], c.h, 1, periodic=c.closed, window=win
            )
    minus_det = -(dmats[:, 0, 0] * dmats[:, 1, 1] - dmats[:, 0, 1] * dmats[:, 1, 0])
    sel = c.interior()
    vals = minus_det[sel]
    scale = float(np.max(np.abs(vals)))
    signs = np.sign(vals[np.abs(vals) > 1e-9 * scale])
    if len(signs) and np.any(signs != signs[0]):
        raise NonConvex("congruence velocity changes causal character")
    speed = np.sqrt(np.abs(vals))
    if c.closed:
        return integrate_samples(speed, c.h, periodic=True)
    return integrate_samples(speed, c.h)


def osculating_conic(c: CurveSamples, i: int) -> np.ndarray:
    """Coefficients (a, b, c, d, e, f) of the five-point-contact conic at node i.

    The conic a x^2 + b xy + c y^2 + d x + e y + f = 0 osculates to fourth
    order; the null space of the jet-condition matrix determines it up to
    scale.
    """
    from .curvature import _derivs

    d = _derivs(c, orders=(1, 2, 3, 4))
    g0 = np.array([c.x[i], c.y[i]])
    g1, g2, g3, g4 = (d[k][i] for k in (1, 2, 3, 4))

    def grad_rows(p):
        # gradient of F as a linear map of (a, b, c, d, e, f)
        return np.array(
            [
                [2.0 * p[0], p[1], 0.0, 1.0, 0.0, 0.0],
                [0.0, p[0], 2.0 * p[1], 0.0, 1.0, 0.0],
            ]
        )

    def hess_quad(u, v):
        # u^T H v as a linear functional of the coefficients
        return np.array([2.0 * u[0] * v[0], u[0] * v[1] + u[1] * v[0], 2.0 * u[1] * v[1], 0, 0, 0])

    G = grad_rows(g0)
    rows = [
        np.array([g0[0] ** 2, g0[0] * g0[1], g0[1] ** 2, g0[0], g0[1], 1.0]),
        g1 @ G,
        hess_quad(g1, g1) + g2 @ G,
        3.0 * hess_quad(g1, g2) + g3 @ G,
        3.0 * hess_quad(g2, g2) + 4.0 * hess_quad(g1, g3) + g4 @ G,
    ]
    M = np.vstack(rows)
    _, _, Vt = np.linalg.svd(M)
    return Vt[-1]
