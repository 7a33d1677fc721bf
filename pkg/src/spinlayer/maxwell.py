"""Maxwell solver on a truncated box around the magnetic body.

Staggered placement: e on cell edges, h on cell faces, so the two
discrete curls are exact adjoints and div(curl e) vanishes identically at
cell centers.  The h update carries the magnetization rate (zero outside
the body), which makes div(h + m_bar) a conserved quantity of the
coupled step up to roundoff.

The conduction term sigma (e + f) 1_Omega is integrated semi-implicitly,
which is unconditionally stable in sigma and keeps the Ohmic dissipation
sign-definite.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .errors import CFLViolation, SolverDiverged
from .geometry import DomainGeometry
from .energetics import MaterialParams
from .summation import esum

PEC = "pec"
MUR1 = "mur1"

POISSON_TOL = 1e-10


@dataclass(frozen=True)
class BoxGeometry:
    """Computational box; the body occupies cells [o:o+n] along each axis."""

    nx: int
    ny: int
    nz: int
    dx: float
    dy: float
    dz: float
    ox: int
    oy: int
    oz: int
    mx: int   # body cell counts
    my: int
    mz: int

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy * self.dz

    def body_slices(self) -> tuple:
        return (slice(self.ox, self.ox + self.mx),
                slice(self.oy, self.oy + self.my),
                slice(self.oz, self.oz + self.mz))


def make_box(geom: DomainGeometry, padding: int = 8) -> BoxGeometry:
    if padding < 1:
        raise ValueError("box padding must be at least 1 cell")
    return BoxGeometry(
        nx=geom.nx + 2 * padding,
        ny=geom.ny + 2 * padding,
        nz=geom.nz_total + 2 * padding,
        dx=geom.dx, dy=geom.dy, dz=geom.dz,
        ox=padding, oy=padding, oz=padding,
        mx=geom.nx, my=geom.ny, mz=geom.nz_total,
    )


def edge_shapes(box: BoxGeometry) -> tuple:
    n = (box.nx, box.ny, box.nz)
    return ((n[0], n[1] + 1, n[2] + 1),
            (n[0] + 1, n[1], n[2] + 1),
            (n[0] + 1, n[1] + 1, n[2]))


def face_shapes(box: BoxGeometry) -> tuple:
    n = (box.nx, box.ny, box.nz)
    return ((n[0] + 1, n[1], n[2]),
            (n[0], n[1] + 1, n[2]),
            (n[0], n[1], n[2] + 1))


def _body_edge_masks(box: BoxGeometry) -> tuple:
    """Boolean masks of edges whose midpoint lies strictly inside the body."""
    def inside_half(o, m, n_samples):
        idx = np.arange(n_samples)
        return (idx >= o) & (idx < o + m)

    def inside_node(o, m, n_samples):
        idx = np.arange(n_samples)
        return (idx > o) & (idx < o + m)

    sx, sy, sz = edge_shapes(box)
    mx = (inside_half(box.ox, box.mx, sx[0])[:, None, None]
          & inside_node(box.oy, box.my, sx[1])[None, :, None]
          & inside_node(box.oz, box.mz, sx[2])[None, None, :])
    my = (inside_node(box.ox, box.mx, sy[0])[:, None, None]
          & inside_half(box.oy, box.my, sy[1])[None, :, None]
          & inside_node(box.oz, box.mz, sy[2])[None, None, :])
    mz = (inside_node(box.ox, box.mx, sz[0])[:, None, None]
          & inside_node(box.oy, box.my, sz[1])[None, :, None]
          & inside_half(box.oz, box.mz, sz[2])[None, None, :])
    return mx, my, mz


@dataclass
class EMState:
    box: BoxGeometry
    ex: np.ndarray
    ey: np.ndarray
    ez: np.ndarray
    hx: np.ndarray
    hy: np.ndarray
    hz: np.ndarray
    bc: str = PEC
    div0: Optional[np.ndarray] = None
    omega_masks: tuple = field(default=None, repr=False)

    def copy(self) -> "EMState":
        return EMState(self.box, self.ex.copy(), self.ey.copy(), self.ez.copy(),
                       self.hx.copy(), self.hy.copy(), self.hz.copy(),
                       self.bc, None if self.div0 is None else self.div0.copy(),
                       self.omega_masks)

    def assert_finite(self):
        for a in (self.ex, self.ey, self.ez, self.hx, self.hy, self.hz):
            if not np.isfinite(a).all():
                from .errors import NonFinite
                raise NonFinite("electromagnetic field is not finite")


def empty_em_state(box: BoxGeometry, bc: str = PEC) -> EMState:
    es = edge_shapes(box)
    fs = face_shapes(box)
    state = EMState(box, np.zeros(es[0]), np.zeros(es[1]), np.zeros(es[2]),
                    np.zeros(fs[0]), np.zeros(fs[1]), np.zeros(fs[2]), bc=bc)
    state.omega_masks = _body_edge_masks(box)
    return state


class AppliedCurrent:
    """Spatially uniform forcing current inside the body.

    Presets: zero, or a Gaussian pulse amp * exp(-((t-t0)/width)^2 / 2).
    """

    def __init__(self, amplitude=(0.0, 0.0, 0.0), t0: float = 0.0,
                 width: float = 1.0, kind: str = "zero"):
        self.amplitude = np.asarray(amplitude, dtype=float)
        self.t0 = float(t0)
        self.width = float(width)
        self.kind = kind
        if kind not in ("zero", "pulse"):
            raise ValueError(f"unknown current preset {kind!r}")
        if kind == "pulse" and self.width <= 0:
            raise ValueError("pulse width must be positive")

    @staticmethod
    def zero() -> "AppliedCurrent":
        return AppliedCurrent()

    def value(self, t: float) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros(3)
        return self.amplitude * np.exp(-0.5 * ((t - self.t0) / self.width) ** 2)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or not np.any(self.amplitude)


# ---------------------------------------------------------------------------
# staggered-grid operators


def curl_e(ex, ey, ez, box: BoxGeometry) -> tuple:
    """Edge field -> curl on faces."""
    dx, dy, dz = box.dx, box.dy, box.dz
    chx = (ez[:, 1:, :] - ez[:, :-1, :]) / dy - (ey[:, :, 1:] - ey[:, :, :-1]) / dz
    chy = (ex[:, :, 1:] - ex[:, :, :-1]) / dz - (ez[1:, :, :] - ez[:-1, :, :]) / dx
    chz = (ey[1:, :, :] - ey[:-1, :, :]) / dx - (ex[:, 1:, :] - ex[:, :-1, :]) / dy
    return chx, chy, chz


def curl_h(hx, hy, hz, box: BoxGeometry) -> tuple:
    """Face field -> curl on interior edges; boundary edges stay zero."""
    dx, dy, dz = box.dx, box.dy, box.dz
    es = edge_shapes(box)
    cex = np.zeros(es[0])
    cey = np.zeros(es[1])
    cez = np.zeros(es[2])
    cex[:, 1:-1, 1:-1] = ((hz[:, 1:, 1:-1] - hz[:, :-1, 1:-1]) / dy
                          - (hy[:, 1:-1, 1:] - hy[:, 1:-1, :-1]) / dz)
    cey[1:-1, :, 1:-1] = ((hx[1:-1, :, 1:] - hx[1:-1, :, :-1]) / dz
                          - (hz[1:, :, 1:-1] - hz[:-1, :, 1:-1]) / dx)
    cez[1:-1, 1:-1, :] = ((hy[1:, 1:-1, :] - hy[:-1, 1:-1, :]) / dx
                          - (hx[1:-1, 1:, :] - hx[1:-1, :-1, :]) / dy)
    return cex, cey, cez


def div_faces(fx, fy, fz, box: BoxGeometry) -> np.ndarray:
    """Face field -> divergence at cell centers."""
    return ((fx[1:, :, :] - fx[:-1, :, :]) / box.dx
            + (fy[:, 1:, :] - fy[:, :-1, :]) / box.dy
            + (fz[:, :, 1:] - fz[:, :, :-1]) / box.dz)


def grad_cells(phi: np.ndarray, box: BoxGeometry) -> tuple:
    """Cell scalar -> gradient on faces, zero-Dirichlet ghosts outside."""
    p = np.pad(phi, 1)
    gx = (p[1:, 1:-1, 1:-1] - p[:-1, 1:-1, 1:-1]) / box.dx
    gy = (p[1:-1, 1:, 1:-1] - p[1:-1, :-1, 1:-1]) / box.dy
    gz = (p[1:-1, 1:-1, 1:] - p[1:-1, 1:-1, :-1]) / box.dz
    return gx, gy, gz


def cells_to_faces(c: np.ndarray, box: BoxGeometry) -> tuple:
    """Cell 3-vector field -> face samples (adjoint of faces_to_cells)."""
    px = np.pad(c[..., 0], ((1, 1), (0, 0), (0, 0)))
    py = np.pad(c[..., 1], ((0, 0), (1, 1), (0, 0)))
    pz = np.pad(c[..., 2], ((0, 0), (0, 0), (1, 1)))
    fx = 0.5 * (px[1:, :, :] + px[:-1, :, :])
    fy = 0.5 * (py[:, 1:, :] + py[:, :-1, :])
    fz = 0.5 * (pz[:, :, 1:] + pz[:, :, :-1])
    return fx, fy, fz


def faces_to_cells(fx, fy, fz) -> np.ndarray:
    """Face field -> cell-centered 3-vector by adjacent averaging."""
    cx = 0.5 * (fx[1:, :, :] + fx[:-1, :, :])
    cy = 0.5 * (fy[:, 1:, :] + fy[:, :-1, :])
    cz = 0.5 * (fz[:, :, 1:] + fz[:, :, :-1])
    return np.stack([cx, cy, cz], axis=-1)


def embed_cell_field(m: np.ndarray, box: BoxGeometry) -> np.ndarray:
    """Zero-extend a body cell field to the full box."""
    out = np.zeros((box.nx, box.ny, box.nz, 3))
    out[box.body_slices()] = m
    return out


def interp_h_to_cells(em: EMState, geom: DomainGeometry) -> np.ndarray:
    """Magnetic excitation averaged to body cell centers."""
    cells = faces_to_cells(em.hx, em.hy, em.hz)
    return cells[em.box.body_slices()]


# ---------------------------------------------------------------------------
# Poisson projection


def _poisson_matrix(box: BoxGeometry) -> scipy.sparse.csc_matrix:
    def lap1d(n, h):
        main = -2.0 * np.ones(n)
        off = np.ones(n - 1)
        return scipy.sparse.diags([off, main, off], [-1, 0, 1]) / h**2

    ix = scipy.sparse.identity(box.nx)
    iy = scipy.sparse.identity(box.ny)
    iz = scipy.sparse.identity(box.nz)
    lap = (scipy.sparse.kron(scipy.sparse.kron(lap1d(box.nx, box.dx), iy), iz)
           + scipy.sparse.kron(scipy.sparse.kron(ix, lap1d(box.ny, box.dy)), iz)
           + scipy.sparse.kron(scipy.sparse.kron(ix, iy), lap1d(box.nz, box.dz)))
    return lap.tocsc()


_poisson_cache = {}


def poisson_solve(rhs: np.ndarray, box: BoxGeometry) -> np.ndarray:
    """Solve Lap(phi) = rhs at cell centers with zero-Dirichlet ghosts."""
    key = (box.nx, box.ny, box.nz, box.dx, box.dy, box.dz)
    lu = _poisson_cache.get(key)
    if lu is None:
        lu = scipy.sparse.linalg.splu(_poisson_matrix(box))
        _poisson_cache[key] = lu
    phi = lu.solve(rhs.ravel()).reshape(rhs.shape)
    return phi


def init_divfree(m0_cells: np.ndarray, h0_spec, box: BoxGeometry,
                 tol: float = POISSON_TOL) -> tuple:
    """Magnetic excitation with div(h + m_bar) = 0 at every cell center.

    h0_spec: "magnetostatic" (h = -grad phi with Lap phi = div m_bar),
    "zero", a length-3 uniform vector, or an explicit (hx, hy, hz) face
    triple; explicit data is corrected by a gradient.  m0_cells is the
    body magnetization already zero-extended to the box.
    """
    mf = cells_to_faces(m0_cells, box)
    if isinstance(h0_spec, str) and h0_spec in ("magnetostatic", "zero"):
        fs = face_shapes(box)
        h_raw = (np.zeros(fs[0]), np.zeros(fs[1]), np.zeros(fs[2]))
    elif isinstance(h0_spec, tuple) and len(h0_spec) == 3 and np.ndim(h0_spec[0]) == 3:
        h_raw = h0_spec
    else:
        vec = np.asarray(h0_spec, dtype=float).reshape(3)
        fs = face_shapes(box)
        h_raw = (np.full(fs[0], vec[0]), np.full(fs[1], vec[1]), np.full(fs[2], vec[2]))

    if isinstance(h0_spec, str) and h0_spec == "zero" and not np.any(m0_cells):
        return h_raw

    rhs = div_faces(h_raw[0] + mf[0], h_raw[1] + mf[1], h_raw[2] + mf[2], box)
    phi = poisson_solve(rhs, box)
    gx, gy, gz = grad_cells(phi, box)
    h = (h_raw[0] - gx, h_raw[1] - gy, h_raw[2] - gz)

    resid = np.max(np.abs(div_faces(h[0] + mf[0], h[1] + mf[1], h[2] + mf[2], box)))
    if not np.isfinite(resid) or resid > tol * (1.0 + np.max(np.abs(rhs))):
        raise SolverDiverged(f"divergence projection residual {resid:g} above tolerance")
    return h


def divergence_field(em: EMState, m_cells_box: np.ndarray) -> np.ndarray:
    mf = cells_to_faces(m_cells_box, em.box)
    return div_faces(em.hx + mf[0], em.hy + mf[1], em.hz + mf[2], em.box)


def divergence_drift(em: EMState, m: np.ndarray, geom: DomainGeometry) -> float:
    """Max deviation of div(h + m_bar) from its recorded initial values."""
    current = divergence_field(em, embed_cell_field(m, em.box))
    if em.div0 is None:
        return float(np.max(np.abs(current)))
    return float(np.max(np.abs(current - em.div0)))


def record_div0(em: EMState, m: np.ndarray, geom: DomainGeometry):
    em.div0 = divergence_field(em, embed_cell_field(m, em.box))


# ---------------------------------------------------------------------------
# time stepping


def cfl_limit(box: BoxGeometry, params: MaterialParams) -> float:
    c = params.speed_of_light
    return 1.0 / (c * np.sqrt(1.0 / box.dx**2 + 1.0 / box.dy**2 + 1.0 / box.dz**2))


def _mur_coef(params: MaterialParams, dt: float, h: float) -> float:
    c = params.speed_of_light
    return (c * dt - h) / (c * dt + h)


def _apply_mur(em: EMState, old: dict, params: MaterialParams, dt: float):
    """First-order absorbing update of tangential e on the six box faces."""
    cx = _mur_coef(params, dt, em.box.dx)
    cy = _mur_coef(params, dt, em.box.dy)
    cz = _mur_coef(params, dt, em.box.dz)
    for name, comp, axis, coef in (
            ("ey", em.ey, 0, cx), ("ez", em.ez, 0, cx),
            ("ex", em.ex, 1, cy), ("ez", em.ez, 1, cy),
            ("ex", em.ex, 2, cz), ("ey", em.ey, 2, cz)):
        lo_old, lo_in_old, hi_old, hi_in_old = old[(name, axis)]
        sl0 = [slice(None)] * 3
        sl1 = [slice(None)] * 3
        sl0[axis] = 0
        sl1[axis] = 1
        comp[tuple(sl0)] = lo_in_old + coef * (comp[tuple(sl1)] - lo_old)
        sl0[axis] = -1
        sl1[axis] = -2
        comp[tuple(sl0)] = hi_in_old + coef * (comp[tuple(sl1)] - hi_old)


def _capture_mur_old(em: EMState) -> dict:
    old = {}
    for name, comp, axis in (("ey", em.ey, 0), ("ez", em.ez, 0),
                             ("ex", em.ex, 1), ("ez", em.ez, 1),
                             ("ex", em.ex, 2), ("ey", em.ey, 2)):
        sl0 = [slice(None)] * 3
        sl1 = [slice(None)] * 3
        sl0[axis] = 0
        sl1[axis] = 1
        lo, lo_in = comp[tuple(sl0)].copy(), comp[tuple(sl1)].copy()
        sl0[axis] = -1
        sl1[axis] = -2
        hi, hi_in = comp[tuple(sl0)].copy(), comp[tuple(sl1)].copy()
        old[(name, axis)] = (lo, lo_in, hi, hi_in)
    return old


def fdtd_step(em: EMState, m_dot_cells: Optional[np.ndarray], f_value: np.ndarray,
              params: MaterialParams, dt: float, accum: Optional[dict] = None) -> EMState:
    """One leapfrog step: e update (semi-implicit conduction), then h.

    m_dot_cells is the body magnetization rate (body shape) or None; its
    zero extension is transferred to faces by the adjoint of the
    face-to-cell average.  When `accum` is given, the Ohmic and source
    work of this step is added under keys "ohmic" and "source" using the
    midpoint e, which matches the semi-implicit update identity exactly.
    """
    box = em.box
    limit = cfl_limit(box, params)
    if dt > limit * (1.0 + 1e-12):
        raise CFLViolation(f"dt={dt:g} exceeds the Yee bound {limit:g}")

    cex, cey, cez = curl_h(em.hx, em.hy, em.hz, box)
    mur_old = _capture_mur_old(em) if em.bc == MUR1 else None

    sigma, eps0, mu0 = params.sigma, params.eps0, params.mu0
    dV = box.cell_volume
    for comp, ce, mask, fc in ((0, cex, em.omega_masks[0], f_value[0]),
                               (1, cey, em.omega_masks[1], f_value[1]),
                               (2, cez, em.omega_masks[2], f_value[2])):
        e = (em.ex, em.ey, em.ez)[comp]
        if sigma == 0.0:
            e_new = e + (dt / eps0) * ce
        else:
            beta = (sigma * dt / (2.0 * eps0)) * mask
            rhs = (1.0 - beta) * e + (dt / eps0) * (ce - (sigma * fc) * mask)
            e_new = rhs / (1.0 + beta)
        if accum is not None and sigma != 0.0:
            e_mid = 0.5 * (e + e_new)
            accum["ohmic"] += dt * (sigma / mu0) * dV * esum((e_mid * e_mid)[mask])
            if fc != 0.0:
                accum["source"] += dt * (sigma / mu0) * dV * esum(fc * e_mid[mask])
        if comp == 0:
            em.ex = e_new
        elif comp == 1:
            em.ey = e_new
        else:
            em.ez = e_new

    if em.bc == MUR1:
        _apply_mur(em, mur_old, params, dt)

    chx, chy, chz = curl_e(em.ex, em.ey, em.ez, box)
    em.hx -= (dt / mu0) * chx
    em.hy -= (dt / mu0) * chy
    em.hz -= (dt / mu0) * chz
    if m_dot_cells is not None and np.any(m_dot_cells):
        mdx, mdy, mdz = cells_to_faces(embed_cell_field(m_dot_cells, box), box)
        em.hx -= dt * mdx
        em.hy -= dt * mdy
        em.hz -= dt * mdz
    return em


def zero_boundary_tangential_e(em: EMState):
    """Enforce the perfectly conducting wall on tangential e."""
    em.ex[:, 0, :] = 0.0
    em.ex[:, -1, :] = 0.0
    em.ex[:, :, 0] = 0.0
    em.ex[:, :, -1] = 0.0
    em.ey[0, :, :] = 0.0
    em.ey[-1, :, :] = 0.0
    em.ey[:, :, 0] = 0.0
    em.ey[:, :, -1] = 0.0
    em.ez[0, :, :] = 0.0
    em.ez[-1, :, :] = 0.0
    em.ez[:, 0, :] = 0.0
    em.ez[:, -1, :] = 0.0
