"""Reflection extension across an arc and the associated test function.

Geometry, all centered at angle 0: the inner arc I = (-theta, theta) is
extended to J = (-2 theta/(1+gamma), 2 theta/(1+gamma)) by pulling f
back through the contracting reflections

    t in L = (theta, 2 theta/(1+gamma))    ->  (3 theta - t) / 2
    t in R = (-2 theta/(1+gamma), -theta)  ->  -(3 theta + t) / 2,

both of which land inside I and fix the shared endpoint of I. The
extension costs a bounded factor in fractional Dirichlet energy; the
six pairwise block energies of J = I + L + R give the exact breakdown.

theta_gamma is the midpoint of (theta, 2 theta/(1+gamma)) and
I_gamma = (-theta_gamma, theta_gamma) is the support of the trapezoid
bump phi (1 on I, linear to 0 at the edges of I_gamma). The Poincare
test function is F = phi * |1 - |f_tilde| / m| with m the mean of
|f_tilde| over J.

Arbitrary arc positions are handled by rotating inputs so the arc is
centered at 0, applying these maps, and rotating back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .circle import Arc, CircleGrid
from .energy import BoundarySamples, dirichlet_energy_local
from .errors import DegenerateInputError, ResolutionError, SetupError

# Sum of the per-block energy bounds in the extension estimate:
# 1 (I with itself) + 4 + 4 (each reflected block with itself)
# + 2*2 + 2*2 (cross terms against I) + 2*4 (cross term L against R).
RATIO_CEILING = 21.0


@dataclass(frozen=True)
class ExtensionSetup:
    """Geometry of the reflection extension, centered at angle 0."""

    theta: float
    gamma: float

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise SetupError(f"gamma must be in (0, 1), got {self.gamma}")
        if not 0.0 < self.theta < self.gamma * math.pi / 2.0:
            raise SetupError(
                f"theta must be in (0, gamma*pi/2) = (0, {self.gamma * math.pi / 2.0:.6g}), "
                f"got {self.theta}"
            )

    @cached_property
    def outer_half_width(self) -> float:
        return 2.0 * self.theta / (1.0 + self.gamma)

    @cached_property
    def theta_gamma(self) -> float:
        return (3.0 + self.gamma) * self.theta / (2.0 * (1.0 + self.gamma))

    @property
    def arc_i(self) -> Arc:
        return Arc(-self.theta, self.theta)

    @property
    def arc_j(self) -> Arc:
        return Arc(-self.outer_half_width, self.outer_half_width)

    @property
    def arc_l(self) -> Arc:
        return Arc(self.theta, self.outer_half_width)

    @property
    def arc_r(self) -> Arc:
        return Arc(-self.outer_half_width, -self.theta)

    @property
    def arc_i_gamma(self) -> Arc:
        return Arc(-self.theta_gamma, self.theta_gamma)

    def preimage(self, t: np.ndarray) -> np.ndarray:
        """Reflection preimages for angles in L (t > 0 branch) and R."""
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0.0, (3.0 * self.theta - t) / 2.0, -(3.0 * self.theta + t) / 2.0)


def _samples_in(f: BoundarySamples, arc: Arc) -> tuple[np.ndarray, np.ndarray]:
    """Grid angles inside the arc (which must not cross the cut) and the
    sample values there, in increasing angle order."""
    grid = f.grid
    mask = grid._arc_center_mask(arc)
    angles = grid.angles[mask]
    order = np.argsort(angles)
    return angles[order], f.values[mask][order]


def extend(f: BoundarySamples, setup: ExtensionSetup) -> BoundarySamples:
    """Extend f from I to J by the reflection pullbacks.

    Values at grid cells of I are copied verbatim; values on L and R are
    linear interpolations of f at the (generally off-grid) preimage
    angles, clamped at the outermost samples of I. Cells outside J are
    set to zero.
    """
    grid = f.grid
    mask_i = grid._arc_center_mask(setup.arc_i)
    mask_l = grid._arc_center_mask(setup.arc_l)
    mask_r = grid._arc_center_mask(setup.arc_r)
    for name, mask in (("L", mask_l), ("R", mask_r)):
        count = int(mask.sum())
        if count < 8:
            raise ResolutionError(
                f"reflected arc {name} is resolved by only {count} cells (need >= 8)"
            )
    xp, fp = _samples_in(f, setup.arc_i)
    out = np.zeros(grid.n_points, dtype=np.complex128)
    out[mask_i] = f.values[mask_i]
    for mask in (mask_l, mask_r):
        pre = setup.preimage(grid.angles[mask])
        out[mask] = np.interp(pre, xp, fp.real) + 1j * np.interp(pre, xp, fp.imag)
    return BoundarySamples(grid, out)


@dataclass(frozen=True)
class ExtensionRatio:
    d_i: float
    d_j: float
    ratio: float

    def to_json(self) -> dict:
        return {"d_I": self.d_i, "d_J": self.d_j, "ratio": self.ratio}


def extension_ratio(f: BoundarySamples, setup: ExtensionSetup, alpha: float) -> ExtensionRatio:
    """Energy cost of the extension: D_{J,alpha}(f~) / D_{I,alpha}(f).

    Bounded by RATIO_CEILING for every admissible input; a larger value
    indicates a quadrature or operator bug, not a sharper example.
    """
    d_i = dirichlet_energy_local(f, setup.arc_i, setup.arc_i, alpha)
    if d_i == 0.0:
        raise DegenerateInputError("f is constant on I (zero seminorm)")
    f_tilde = extend(f, setup)
    d_j = dirichlet_energy_local(f_tilde, setup.arc_j, setup.arc_j, alpha)
    return ExtensionRatio(d_i=d_i, d_j=d_j, ratio=d_j / d_i)


def six_term_decomposition(
    f_tilde: BoundarySamples, setup: ExtensionSetup, alpha: float
) -> dict[str, float]:
    """Block decomposition of D_{J,alpha}(f~) over the I/L/R partition.

    Returns the three diagonal and three cross energies plus their
    weighted total D_I + D_L + D_R + 2(D_IL + D_IR + D_LR), which equals
    the direct D_J whenever the arc endpoints fall strictly between grid
    cell centers (the cells of J are then partitioned exactly).
    """
    i_arc, l_arc, r_arc = setup.arc_i, setup.arc_l, setup.arc_r
    parts = {
        "d_ii": dirichlet_energy_local(f_tilde, i_arc, i_arc, alpha),
        "d_ll": dirichlet_energy_local(f_tilde, l_arc, l_arc, alpha),
        "d_rr": dirichlet_energy_local(f_tilde, r_arc, r_arc, alpha),
        "d_il": dirichlet_energy_local(f_tilde, i_arc, l_arc, alpha),
        "d_ir": dirichlet_energy_local(f_tilde, i_arc, r_arc, alpha),
        "d_lr": dirichlet_energy_local(f_tilde, l_arc, r_arc, alpha),
    }
    parts["total"] = (
        parts["d_ii"]
        + parts["d_ll"]
        + parts["d_rr"]
        + 2.0 * (parts["d_il"] + parts["d_ir"] + parts["d_lr"])
    )
    return parts


def bump_phi(grid: CircleGrid, setup: ExtensionSetup) -> BoundarySamples:
    """Trapezoid bump: 1 on I, linear down to 0 at the edges of I_gamma,
    0 outside. Realized Lipschitz constant is 1/(theta_gamma - theta),
    i.e. c_gamma/|J| with c_gamma = |J|/(theta_gamma - theta)."""
    t = np.abs(grid.angles)
    ramp = (setup.theta_gamma - t) / (setup.theta_gamma - setup.theta)
    vals = np.clip(ramp, 0.0, 1.0)
    return BoundarySamples(grid, vals.astype(np.complex128))


def bump_slope_constant(setup: ExtensionSetup) -> float:
    """c_gamma = |J| / (theta_gamma - theta); the bump satisfies
    |phi(z) - phi(w)| <= (c_gamma/|J|) |z - w| by construction."""
    return setup.arc_j.length / (setup.theta_gamma - setup.theta)


@dataclass(frozen=True)
class TestFunction:
    samples: BoundarySamples
    m: float


def test_function_F(
    f_tilde: BoundarySamples, phi: BoundarySamples, setup: ExtensionSetup
) -> TestFunction:
    """F = phi * |1 - |f~|/m| with m the mean of |f~| over the cells of
    J; nonnegative, supported in I_gamma, and equal to 1 wherever f~
    vanishes inside I."""
    grid = f_tilde.grid
    mask_j = grid._arc_center_mask(setup.arc_j)
    if not mask_j.any():
        raise ResolutionError("J contains no grid cells")
    m = float(np.mean(np.abs(f_tilde.values[mask_j])))
    if m == 0.0:
        raise DegenerateInputError("f~ vanishes identically on J; the mean m is zero")
    vals = phi.values.real * np.abs(1.0 - np.abs(f_tilde.values) / m)
    return TestFunction(BoundarySamples(grid, vals.astype(np.complex128)), m)
