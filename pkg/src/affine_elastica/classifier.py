"""Case taxonomy of the phase-plane cubic (kappa')^2 = -2/3 kappa^3 + 6 g2 kappa - 36 g3.

Every area-constrained critical curve traces part of this cubic in the
(kappa, kappa') plane.  The taxonomy splits on the signs of g2, g3 and the
cubic discriminant, and for the generic families on which branch of the
cubic is travelled (the closed oval exists only for positive discriminant).

Curvature-space intersections with the axis kappa' = 0 relate to the roots
e of 4t^3 - g2 t - g3 by kappa = -6 e.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .elliptic import Invariants, cubic_roots
from .errors import BranchUnavailable, DegenerateDiscriminant

__all__ = ["Case", "Branch", "CaseLabel", "classify", "rescale_to_normal_form"]

#: |Delta| below this times max(|g2|^3, 1) counts as a degenerate cubic
DELTA_ZERO_RTOL = 1e-12

#: |q| below this counts as the q = 0 boundary (sub-cases A2 / B2)
Q_ZERO_ATOL = 1e-10

#: |g2| below this times (1 + |g3|^(2/3)) counts as g2 = 0 (cases F / G)
G2_ZERO_RTOL = 1e-10


class Case(str, enum.Enum):
    A1 = "A1"
    A2 = "A2"
    A3 = "A3"
    B1 = "B1"
    B2 = "B2"
    B3 = "B3"
    C1 = "C1"
    C2 = "C2"
    C3 = "C3"
    C4 = "C4"
    C5 = "C5"
    Da = "Da"
    Dc = "Dc"
    E_case = "E"
    F = "F"
    G = "G"
    Ellipse = "ellipse"


class Branch(str, enum.Enum):
    closed_branch = "closed"
    open_branch = "open"


# families whose curvature follows the bounded oval of the cubic
_CLOSED_FAMILIES = {Case.A1, Case.A2, Case.A3, Case.Ellipse, Case.Dc}


@dataclass
class CaseLabel:
    """Classification tag with its defining case parameters.

    ``params`` holds the raw (unrescaled) parameters: q, Q for A-cases,
    P, q, Q for B-cases, P, tau for C-cases, E for D/E/ellipse, g3 for F.
    """

    tag: Case
    params: dict = field(default_factory=dict)
    g2: float = 0.0
    g3: float = 0.0

    @property
    def c0_is_w2(self) -> bool:
        """Whether the curvature branch shift c0 equals the imaginary half-period."""
        return self.tag in (Case.A1, Case.A2, Case.A3)

    def to_json(self) -> str:
        payload = {
            "tag": self.tag.value,
            "params": {k: float(v) for k, v in self.params.items()},
            "g2": self.g2,
            "g3": self.g3,
            "discriminant": Invariants(self.g2, self.g3).discriminant,
        }
        return json.dumps(payload, indent=1)


def _kappa_roots_real(g2: float, g3: float) -> np.ndarray:
    """Real curvature-axis intersections, ascending."""
    e = cubic_roots(g2, g3)
    e = np.sort(e.real[np.abs(e.imag) < 1e-9 * (1.0 + np.max(np.abs(e)))])
    return -6.0 * e[::-1]  # kappa = -6 e, ascending in kappa


def classify(inv: Invariants, branch: Branch = Branch.open_branch) -> CaseLabel:
    """Assign the case tag for invariants (g2, g3) and a branch choice.

    The closed branch exists only for positive discriminant (and collapses
    to the isolated point, an ellipse, on the degenerate boundary with
    g3 > 0); requesting it otherwise raises BranchUnavailable.
    """
    if isinstance(branch, str):
        branch = Branch(branch)
    g2, g3 = float(inv.g2), float(inv.g3)
    delta = inv.discriminant

    g2_zero = abs(g2) < G2_ZERO_RTOL * (1.0 + abs(g3) ** (2.0 / 3.0))
    if g2_zero:
        if abs(g3) < 1e-14:
            return CaseLabel(Case.G, {}, g2, g3)
        return CaseLabel(Case.F, {"g3": g3}, g2, g3)

    if abs(delta) < DELTA_ZERO_RTOL * max(abs(g2) ** 3, 1.0):
        E = np.cbrt(g3)
        if g3 < 0.0:
            tag = Case.Dc if branch is Branch.closed_branch else Case.Da
            return CaseLabel(tag, {"E": E}, g2, g3)
        tag = Case.Ellipse if branch is Branch.closed_branch else Case.E_case
        return CaseLabel(tag, {"E": E}, g2, g3)

    if delta > 0.0:
        kr = _kappa_roots_real(g2, g3)  # ascending: P < q < Q
        P, q, Q = kr
        if branch is Branch.closed_branch:
            if abs(q) < Q_ZERO_ATOL * max(1.0, abs(Q)):
                return CaseLabel(Case.A2, {"q": 0.0, "Q": Q}, g2, g3)
            tag = Case.A1 if q > 0 else Case.A3
            return CaseLabel(tag, {"q": q, "Q": Q}, g2, g3)
        if abs(q) < Q_ZERO_ATOL * max(1.0, abs(Q)):
            return CaseLabel(Case.B2, {"P": P, "q": 0.0, "Q": Q}, g2, g3)
        tag = Case.B1 if q > 0 else Case.B3
        return CaseLabel(tag, {"P": P, "q": q, "Q": Q}, g2, g3)

    # negative discriminant: one real intersection P, complex pair -P/2 +- i tau
    if branch is Branch.closed_branch:
        raise BranchUnavailable("the cubic has no closed branch for negative discriminant")
    e = cubic_roots(g2, g3)
    i_real = int(np.argmin(np.abs(e.imag)))
    P = -6.0 * float(e[i_real].real)
    pair = np.delete(e, i_real)
    tau = 6.0 * abs(float(pair[0].imag))
    if abs(P) < Q_ZERO_ATOL * max(1.0, tau):
        return CaseLabel(Case.C3, {"P": 0.0, "tau": tau}, g2, g3)
    if P > 0:
        tag = Case.C1 if g2 < 0 else Case.C2
    else:
        tag = Case.C4 if g2 < 0 else Case.C5
    return CaseLabel(tag, {"P": P, "tau": tau}, g2, g3)


def _scaled_invariants(g2: float, g3: float, lam: float) -> tuple[float, float]:
    return g2 * lam**4, g3 * lam**6


def rescale_to_normal_form(inv: Invariants, label: CaseLabel) -> tuple[float, CaseLabel]:
    """Equi-affine rescaling factor lam and the normalized label.

    The rescaling acts as kappa -> lam^2 kappa, s -> s / lam, so
    g2 -> lam^4 g2 and g3 -> lam^6 g3.  Normal forms: q = 1 (A1), Q = 1
    (A2), q = -1 (A3), P = -1 (B), P in {1, 0, -1} with tau = 1 when P = 0
    (C), E = +-1 (D/E), g3 = +-1 (F), kappa = 1 (ellipse); G is scale
    invariant.
    """
    tag = label.tag
    p = label.params
    if tag is Case.G:
        lam2 = 1.0
    elif tag is Case.A1:
        lam2 = 1.0 / p["q"]
    elif tag is Case.A2:
        lam2 = 1.0 / p["Q"]
    elif tag is Case.A3:
        lam2 = -1.0 / p["q"]
    elif tag in (Case.B1, Case.B2, Case.B3):
        lam2 = -1.0 / p["P"]
    elif tag in (Case.C1, Case.C2, Case.C4, Case.C5):
        lam2 = 1.0 / abs(p["P"])
    elif tag is Case.C3:
        lam2 = 1.0 / p["tau"]
    elif tag in (Case.Da, Case.Dc, Case.E_case):
        lam2 = 1.0 / abs(p["E"])
    elif tag is Case.Ellipse:
        lam2 = 1.0 / (3.0 * p["E"])
    elif tag is Case.F:
        lam2 = abs(p["g3"]) ** (-1.0 / 3.0)
    else:  # pragma: no cover
        raise ValueError(f"unknown tag {tag}")
    if lam2 <= 0:
        raise DegenerateDiscriminant("cannot normalize a vanishing case parameter")
    lam = float(np.sqrt(lam2))
    g2n, g3n = _scaled_invariants(label.g2, label.g3, lam)
    branch = Branch.closed_branch if tag in _CLOSED_FAMILIES else Branch.open_branch
    normalized = classify(Invariants(g2n, g3n), branch)
    return lam, normalized
