"""Verifiable quantities: energy ledger, weak-form and stationarity
residuals, saturation deviation, mollified time averages, and the
curl-free field attached to a candidate long-time state.

All time integrals use the same trapezoid/midpoint quadrature as the
stepper's sampling cadence so residuals measure model error rather than
quadrature mismatch.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import maxwell
from .energetics import EnergyBreakdown, MaterialParams, apply_k
from .errors import WindowOutOfRange
from .geometry import DomainGeometry, extract_traces
from .summation import esum

CSV_COLUMNS = (
    "t", "exchange", "anisotropy", "maxwell_h", "maxwell_e", "surf_anis",
    "superexch_q", "superexch_biq", "penalty", "total",
    "dissipation_integral", "ohmic_integral", "source_integral",
    "saturation_dev", "divergence_drift",
)


@dataclass
class LedgerRow:
    t: float
    breakdown: EnergyBreakdown
    dissipation: float
    ohmic: float
    source: float
    saturation_dev: float
    divergence_drift: float

    def csv_values(self) -> tuple:
        return ((self.t,) + self.breakdown.as_tuple()
                + (self.dissipation, self.ohmic, self.source,
                   self.saturation_dev, self.divergence_drift))


@dataclass
class EnergyLedger:
    """Time series of energies and the accumulated dissipation integrals.

    dissipation: (alpha/(1+alpha^2)) * int |dm/dt|^2
    ohmic:       (sigma/mu0) * int |e|^2 over the body
    source:      (sigma/mu0) * int e.f over the body
    """

    rows: List[LedgerRow] = field(default_factory=list)

    def append(self, t, breakdown, dissipation, ohmic, source,
               saturation_dev, divergence_drift) -> LedgerRow:
        row = LedgerRow(t, breakdown, dissipation, ohmic, source,
                        saturation_dev, divergence_drift)
        self.rows.append(row)
        return row

    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.rows])

    def totals(self) -> np.ndarray:
        return np.array([r.breakdown.total for r in self.rows])

    def row_at(self, T: float) -> LedgerRow:
        ts = self.times()
        i = int(np.argmin(np.abs(ts - T)))
        if abs(ts[i] - T) > 1e-9 * max(1.0, abs(T)) + 1e-12:
            raise ValueError(f"no ledger row at t={T:g} (nearest {ts[i]:g})")
        return self.rows[i]


def energy_inequality_residual(ledger: EnergyLedger, T: float) -> float:
    """LHS - RHS of the dissipation inequality at time T.

    Nonpositive (or below tolerance) means the inequality holds:
    E(T) + dissipation + Ohmic + source <= E(0).
    """
    row = ledger.row_at(T)
    e0 = ledger.rows[0].breakdown.total
    return (row.breakdown.total + row.dissipation + row.ohmic + row.source) - e0


def saturation_deviation(m: np.ndarray) -> float:
    """max over cells of | |m| - 1 |."""
    norms = np.sqrt(np.sum(m * m, axis=-1))
    return float(np.max(np.abs(norms - 1.0)))


# ---------------------------------------------------------------------------
# mollified time averaging


def _smoothstep(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 at t<=0, 1 at t>=1, max slope about 1.92."""
    def f(u):
        out = np.zeros_like(u)
        pos = u > 0
        out[pos] = np.exp(-1.0 / u[pos])
        return out
    t = np.clip(t, 0.0, 1.0)
    a = f(t)
    b = f(1.0 - t)
    return a / (a + b)


@dataclass(frozen=True)
class AveragingWindow:
    """Cutoff rho on [-a, a]: 1 on [-a+1, a-1], 0 <= rho <= 1, |rho'| <= 2.

    The default is the piecewise-linear trapezoid with unit-width ramps
    (slopes +-1); kind="smooth" substitutes a C-infinity ramp whose slope
    stays below 2.
    """

    a: float
    kind: str = "trapezoid"

    def __post_init__(self):
        if self.a < 1.0:
            raise ValueError("window half-width must be at least 1")
        if self.kind not in ("trapezoid", "smooth"):
            raise ValueError(f"unknown window kind {self.kind!r}")

    def rho(self, s) -> np.ndarray:
        s = np.abs(np.asarray(s, dtype=float))
        ramp = np.clip(self.a - s, 0.0, 1.0)
        if self.kind == "trapezoid":
            return ramp
        return _smoothstep(ramp)


def window_quadrature(window: AveragingWindow, sample_times: Sequence[float],
                      t_n: float) -> Tuple[np.ndarray, np.ndarray]:
    """Sample indices inside the window and trapezoid weights times rho/(2a).

    Raises WindowOutOfRange when the stored samples do not cover
    [t_n - a, t_n + a].
    """
    ts = np.asarray(sample_times, dtype=float)
    lo, hi = t_n - window.a, t_n + window.a
    if len(ts) < 2:
        raise WindowOutOfRange("need at least two stored samples")
    step = np.max(np.diff(ts))
    if ts[0] > lo + step * (1 + 1e-9) or ts[-1] < hi - step * (1 + 1e-9):
        raise WindowOutOfRange(
            f"samples cover [{ts[0]:g}, {ts[-1]:g}] but the window needs "
            f"[{lo:g}, {hi:g}]")
    idx = np.where((ts >= lo - 1e-12) & (ts <= hi + 1e-12))[0]
    tw = ts[idx]
    w = np.zeros(len(tw))
    if len(tw) >= 2:
        d = np.diff(tw)
        w[:-1] += 0.5 * d
        w[1:] += 0.5 * d
    weights = w * window.rho(tw - t_n) / (2.0 * window.a)
    return idx, weights


def time_average_fields(trajectory, t_n: float, window: AveragingWindow):
    """Windowed averages of the raw electromagnetic fields around t_n.

    Returns (h_avg, e_avg) as face/edge component triples, computed with
    the trapezoid rule over the stored samples.
    """
    if not trajectory.em_samples:
        raise ValueError("trajectory holds no electromagnetic samples")
    idx, weights = window_quadrature(window, trajectory.sample_times, t_n)
    h0, e0 = trajectory.em_samples[idx[0]]
    h_avg = tuple(np.zeros_like(c) for c in h0)
    e_avg = tuple(np.zeros_like(c) for c in e0)
    for j, wgt in zip(idx, weights):
        hj, ej = trajectory.em_samples[j]
        for c in range(3):
            h_avg[c][...] += wgt * hj[c]
            e_avg[c][...] += wgt * ej[c]
    return h_avg, e_avg


# ---------------------------------------------------------------------------
# test-function library


@dataclass(frozen=True)
class TestFunction:
    """Vector test field: scalar shape times a constant direction."""

    __test__ = False  # not a pytest class, despite the name

    name: str
    shape: Callable          # (x, y, z) -> scalar array
    shape_grad: Callable     # (x, y, z) -> (..., 3) array
    direction: int           # 0, 1, 2

    def __call__(self, x, y, z) -> np.ndarray:
        s = self.shape(x, y, z)
        out = np.zeros(np.shape(s) + (3,))
        out[..., self.direction] = s
        return out

    def partials(self, x, y, z) -> np.ndarray:
        """partial_i of the vector field: (..., 3 axes, 3 components)."""
        g = self.shape_grad(x, y, z)
        out = np.zeros(g.shape[:-1] + (3, 3))
        out[..., :, self.direction] = g
        return out


def _stack_grad(gx, gy, gz):
    return np.stack(np.broadcast_arrays(gx, gy, gz), axis=-1)


def test_function_library(geom: DomainGeometry) -> List[TestFunction]:
    """Nine low-order scalar shapes times the three axis directions."""
    lx, ly = geom.base_lx, geom.base_ly
    lz = geom.l_minus + geom.l_plus
    z0 = -geom.l_minus
    kx, ky, kz = np.pi / lx, np.pi / ly, np.pi / lz

    shapes = [
        ("one", lambda x, y, z: np.ones(np.broadcast(x, y, z).shape),
         lambda x, y, z: _stack_grad(np.zeros(np.broadcast(x, y, z).shape), 0.0, 0.0)),
        ("x", lambda x, y, z: x + 0 * y + 0 * z,
         lambda x, y, z: _stack_grad(np.ones(np.broadcast(x, y, z).shape), 0.0, 0.0)),
        ("y", lambda x, y, z: y + 0 * x + 0 * z,
         lambda x, y, z: _stack_grad(0.0, np.ones(np.broadcast(x, y, z).shape), 0.0)),
        ("z", lambda x, y, z: z + 0 * x + 0 * y,
         lambda x, y, z: _stack_grad(0.0, 0.0, np.ones(np.broadcast(x, y, z).shape))),
        ("sin_x", lambda x, y, z: np.sin(kx * x) + 0 * y + 0 * z,
         lambda x, y, z: _stack_grad(kx * np.cos(kx * x) + 0 * y + 0 * z, 0.0, 0.0)),
        ("sin_y", lambda x, y, z: np.sin(ky * y) + 0 * x + 0 * z,
         lambda x, y, z: _stack_grad(0.0, ky * np.cos(ky * y) + 0 * x + 0 * z, 0.0)),
        ("sin_z", lambda x, y, z: np.sin(kz * (z - z0)) + 0 * x + 0 * y,
         lambda x, y, z: _stack_grad(0.0, 0.0, kz * np.cos(kz * (z - z0)) + 0 * x + 0 * y)),
        ("cos_xy", lambda x, y, z: np.cos(kx * x) * np.cos(ky * y) + 0 * z,
         lambda x, y, z: _stack_grad(-kx * np.sin(kx * x) * np.cos(ky * y) + 0 * z,
                                     -ky * np.cos(kx * x) * np.sin(ky * y) + 0 * z, 0.0)),
        ("xyz", lambda x, y, z: x * y * z,
         lambda x, y, z: _stack_grad(y * z, x * z, x * y)),
    ]
    lib = []
    for sname, s, gs in shapes:
        for d, dname in enumerate("xyz"):
            lib.append(TestFunction(f"{sname}.e{dname}", s, gs, d))
    return lib


# ---------------------------------------------------------------------------
# quadrature geometry helpers


def _cell_coords(geom: DomainGeometry):
    x = (np.arange(geom.nx) + 0.5) * geom.dx
    y = (np.arange(geom.ny) + 0.5) * geom.dy
    z = geom.z_centers()
    return np.meshgrid(x, y, z, indexing="ij")


def eval_on_cells(test_fn: TestFunction, geom: DomainGeometry) -> np.ndarray:
    return test_fn(*_cell_coords(geom))


def _face_quadrature_terms(m: np.ndarray, phi_cells: np.ndarray,
                           geom: DomainGeometry) -> float:
    """sum over interior faces of (m x D_i m) . D_i phi times dV.

    The test-function gradient enters as the difference quotient of its
    cell samples, which makes this sum the exact summation-by-parts dual
    of the homogeneous-Neumann 7-point Laplacian: residuals then measure
    model error rather than quadrature mismatch.
    """
    dV = geom.cell_volume
    s = geom.spacer_index
    total = 0.0
    for axis, h in ((0, geom.dx), (1, geom.dy)):
        sl_hi = [slice(None)] * 4
        sl_lo = [slice(None)] * 4
        sl_hi[axis] = slice(1, None)
        sl_lo[axis] = slice(None, -1)
        dmi = (m[tuple(sl_hi)] - m[tuple(sl_lo)]) / h
        mf = 0.5 * (m[tuple(sl_hi)] + m[tuple(sl_lo)])
        dphi = (phi_cells[tuple(sl_hi)] - phi_cells[tuple(sl_lo)]) / h
        total += esum(np.cross(mf, dmi) * dphi) * dV
    for sl in (slice(0, s), slice(s, geom.nz_total)):
        ms = m[:, :, sl]
        ps = phi_cells[:, :, sl]
        if ms.shape[2] < 2:
            continue
        dmi = (ms[:, :, 1:] - ms[:, :, :-1]) / geom.dz
        mf = 0.5 * (ms[:, :, 1:] + ms[:, :, :-1])
        dphi = (ps[:, :, 1:] - ps[:, :, :-1]) / geom.dz
        total += esum(np.cross(mf, dmi) * dphi) * dV
    return total


def _surface_terms(m: np.ndarray, phi_cells: np.ndarray, geom: DomainGeometry,
                   params: MaterialParams) -> float:
    """Spacer integrals of the stationarity/weak forms (both faces).

    The test function is traced the same way as the magnetization
    (adjacent cell sample per side).
    """
    traces = extract_traces(m, geom, order=1)
    s = geom.spacer_index
    phi_plus = phi_cells[:, :, s, :]
    phi_minus = phi_cells[:, :, s - 1, :]
    dA = geom.face_area
    total = 0.0
    for gamma, gamma_star, nu_z, phi_gamma in (
            (traces.gamma_plus, traces.gamma_minus, -1.0, phi_plus),
            (traces.gamma_minus, traces.gamma_plus, +1.0, phi_minus)):
        if params.ks != 0.0:
            nu = np.zeros_like(gamma)
            nu[..., 2] = nu_z
            nu_dot = nu_z * gamma[..., 2]
            total -= params.ks * dA * esum(
                nu_dot[..., None] * np.cross(gamma, nu) * phi_gamma)
        wedge = np.cross(gamma, gamma_star)
        if params.j1 != 0.0:
            total -= params.j1 * dA * esum(wedge * phi_gamma)
        if params.j2 != 0.0:
            dot = np.sum(gamma * gamma_star, axis=-1)
            total -= 2.0 * params.j2 * dA * esum(dot[..., None] * wedge * phi_gamma)
    return total


# ---------------------------------------------------------------------------
# weak-formulation residual


def weak_residual_m(trajectory, test_fn: TestFunction, geom: DomainGeometry,
                    params: MaterialParams, signed: bool = False) -> float:
    """Discrete mismatch of the magnetization weak form over the stored run.

    Requires field samples at every step (sample cadence 1).  Midpoint
    quadrature in time: rates from consecutive samples, states averaged
    to the interval midpoint.  Smallness is evidence, not proof, since
    the test-function library is finite.
    """
    ms = trajectory.m_samples
    hs = trajectory.h_cell_samples
    ts = trajectory.sample_times
    if len(ms) < 2:
        raise ValueError("need at least two stored samples")
    dV = geom.cell_volume
    alpha = params.alpha
    one_a2 = 1.0 + alpha**2
    phi_cells = eval_on_cells(test_fn, geom)

    lhs = 0.0
    rhs = 0.0
    for n in range(len(ms) - 1):
        dt = ts[n + 1] - ts[n]
        m_dot = (ms[n + 1] - ms[n]) / dt
        m_mid = 0.5 * (ms[n + 1] + ms[n])
        h_mid = 0.5 * (hs[n + 1] + hs[n])
        lhs += dt * dV * (esum(m_dot * phi_cells)
                          - alpha * esum(np.cross(m_mid, m_dot) * phi_cells))
        term = _face_quadrature_terms(m_mid, phi_cells, geom) * params.a_exch
        if params.k_matrix is not None:
            term += dV * esum(np.cross(m_mid, apply_k(params, m_mid)) * phi_cells)
        term -= dV * esum(np.cross(m_mid, h_mid) * phi_cells)
        term += _surface_terms(m_mid, phi_cells, geom, params)
        rhs += dt * one_a2 * term
    resid = lhs - rhs
    return resid if signed else abs(resid)


# ---------------------------------------------------------------------------
# stationarity of candidate long-time states


def stationarity_form(u: np.ndarray, H_cells: np.ndarray, params: MaterialParams,
                      geom: DomainGeometry, test_fn: TestFunction) -> float:
    """Signed value of the six-term stationary weak form for one test field."""
    dV = geom.cell_volume
    phi_cells = eval_on_cells(test_fn, geom)
    total = params.a_exch * _face_quadrature_terms(u, phi_cells, geom)
    if params.k_matrix is not None:
        total += dV * esum(np.cross(u, apply_k(params, u)) * phi_cells)
    total -= dV * esum(np.cross(u, H_cells) * phi_cells)
    total += _surface_terms(u, phi_cells, geom, params)
    return total


def stationarity_report(u, H_cells, params, geom,
                        test_fns: Optional[Sequence[TestFunction]] = None):
    if test_fns is None:
        test_fns = test_function_library(geom)
    return [(fn.name, abs(stationarity_form(u, H_cells, params, geom, fn)))
            for fn in test_fns]


def stationarity_residual(u, H_cells, params, geom,
                          test_fns: Optional[Sequence[TestFunction]] = None) -> float:
    """Max of |stationary weak form| over the test-function library."""
    report = stationarity_report(u, H_cells, params, geom, test_fns)
    return max(r for _, r in report)


def omega_limit_field(u: np.ndarray, box: maxwell.BoxGeometry,
                      tol: float = maxwell.POISSON_TOL):
    """Field H with div(H + u_bar) = 0 and curl H = 0 on the box.

    H = -grad(phi) with Lap(phi) = div(u_bar); gradients of cell scalars
    are exactly curl-free on the staggered grid.  Returns face components.
    """
    u_box = maxwell.embed_cell_field(u, box)
    return maxwell.init_divfree(u_box, "magnetostatic", box, tol=tol)


def omega_limit_field_cells(u: np.ndarray, box: maxwell.BoxGeometry,
                            geom: DomainGeometry,
                            tol: float = maxwell.POISSON_TOL) -> np.ndarray:
    """omega_limit_field averaged to body cells, for the stationarity form."""
    hx, hy, hz = omega_limit_field(u, box, tol)
    return maxwell.faces_to_cells(hx, hy, hz)[box.body_slices()]
