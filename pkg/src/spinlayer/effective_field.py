"""Effective-field assembly.

h_tot = h - K m + A*Lap(m) plus, depending on the run mode, the
volumized thin-layer field or the saturation penalty field.  In sharp
mode the spacer surface physics enters through nonlinear ghost values in
the Laplacian stencil instead.

The exchange contribution carries a plus sign on the Laplacian: with the
energy (A/2) int |grad m|^2, minus the energy gradient is +A Lap m, and
that is the sign under which the assembled field drives a dissipative
flow.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ThinLayerInactive, ZeroExchange
from .geometry import (DomainGeometry, SpacerTraces, extract_traces,
                       mirror_layer, normal_z)
from .energetics import MaterialParams, apply_k

SHARP = "sharp"
THIN_LAYER = "thin_layer"
PROJECTED = "projected"
PENALIZED = "penalized"


@dataclass
class FieldAssembly:
    """Mode flags plus the Maxwell h already interpolated to m cells."""

    mode: str = SHARP                   # SHARP or THIN_LAYER
    constraint: str = PROJECTED         # PROJECTED or PENALIZED
    h_field: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.mode not in (SHARP, THIN_LAYER):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.constraint not in (PROJECTED, PENALIZED):
            raise ValueError(f"unknown constraint {self.constraint!r}")


@dataclass
class GhostValues:
    """Spacer ghost planes and the prescribed normal-derivative vectors.

    ghost_plus feeds the upper slab's stencil below the face, ghost_minus
    the lower slab's above it; deriv_plus/minus are the corresponding
    normal-derivative prescriptions, kept for testing.
    """

    ghost_plus: np.ndarray
    ghost_minus: np.ndarray
    deriv_plus: np.ndarray
    deriv_minus: np.ndarray


def _lap_axis_edge(m: np.ndarray, axis: int, h2: float) -> np.ndarray:
    """Second difference along one axis with mirror (edge) ghosts."""
    pad = [(0, 0)] * m.ndim
    pad[axis] = (1, 1)
    pm = np.pad(m, pad, mode="edge")
    sl_hi = [slice(None)] * m.ndim
    sl_lo = [slice(None)] * m.ndim
    sl_hi[axis] = slice(2, None)
    sl_lo[axis] = slice(None, -2)
    return (pm[tuple(sl_hi)] - 2.0 * m + pm[tuple(sl_lo)]) / h2


def _bc_derivative(gamma: np.ndarray, gamma_star: np.ndarray, nu_z: float,
                   params: MaterialParams) -> np.ndarray:
    """Prescribed normal derivative on one spacer face.

    Tangential form of the stationarity condition: every term lies in the
    orthogonal complement of the trace when the trace has unit norm.
    """
    A = params.a_exch
    nu_dot = nu_z * gamma[..., 2]                      # nu . gamma
    dot = np.sum(gamma * gamma_star, axis=-1)          # gamma . gamma*
    g = np.zeros_like(gamma)
    if params.ks != 0.0:
        nu_vec = np.zeros_like(gamma)
        nu_vec[..., 2] = nu_z
        g += (params.ks / A) * nu_dot[..., None] * (nu_vec - nu_dot[..., None] * gamma)
    tang = gamma_star - dot[..., None] * gamma
    if params.j1 != 0.0:
        g += (params.j1 / A) * tang
    if params.j2 != 0.0:
        g += (2.0 * params.j2 / A) * dot[..., None] * tang
    return g


def nonlinear_bc_ghost(traces: SpacerTraces, params: MaterialParams,
                       geom: DomainGeometry, m: np.ndarray) -> GhostValues:
    """Ghost planes realizing the nonlinear spacer boundary condition.

    The ghost g satisfies (g - interior)/dz = prescribed normal
    derivative, with the face normal -e_z above the spacer and +e_z
    below.  Raises ZeroExchange when surface constants are active but the
    exchange constant vanishes.
    """
    surface_active = params.ks > 0 or params.j1 > 0 or params.j2 > 0
    if params.a_exch == 0.0:
        if surface_active:
            raise ZeroExchange("nonlinear spacer condition needs a_exch > 0")
        zero2d = np.zeros((geom.nx, geom.ny, 3))
        s = geom.spacer_index
        return GhostValues(m[:, :, s, :].copy(), m[:, :, s - 1, :].copy(),
                           zero2d, zero2d.copy())

    deriv_plus = _bc_derivative(traces.gamma_plus, traces.gamma_minus, -1.0, params)
    deriv_minus = _bc_derivative(traces.gamma_minus, traces.gamma_plus, +1.0, params)
    s = geom.spacer_index
    ghost_plus = m[:, :, s, :] + geom.dz * deriv_plus
    ghost_minus = m[:, :, s - 1, :] + geom.dz * deriv_minus
    return GhostValues(ghost_plus, ghost_minus, deriv_plus, deriv_minus)


def laplacian_neumann(m: np.ndarray, geom: DomainGeometry,
                      spacer_ghosts: Optional[GhostValues] = None) -> np.ndarray:
    """7-point Laplacian with mirror ghosts on the outer boundary.

    At the spacer faces the ghost is the adjacent interior value
    (homogeneous Neumann) unless explicit ghost planes are supplied.
    """
    lap = _lap_axis_edge(m, 0, geom.dx**2)
    lap += _lap_axis_edge(m, 1, geom.dy**2)

    s = geom.spacer_index
    lower = m[:, :, :s, :]
    upper = m[:, :, s:, :]
    if spacer_ghosts is None:
        lap[:, :, :s, :] += _lap_axis_edge(lower, 2, geom.dz**2)
        lap[:, :, s:, :] += _lap_axis_edge(upper, 2, geom.dz**2)
    else:
        dz2 = geom.dz**2
        lap[:, :, :s, :] += _lap_z_with_ghosts(
            lower, bottom=lower[:, :, 0, :], top=spacer_ghosts.ghost_minus, dz2=dz2)
        lap[:, :, s:, :] += _lap_z_with_ghosts(
            upper, bottom=spacer_ghosts.ghost_plus, top=upper[:, :, -1, :], dz2=dz2)
    return lap


def _lap_z_with_ghosts(slab: np.ndarray, bottom: np.ndarray, top: np.ndarray,
                       dz2: float) -> np.ndarray:
    padded = np.concatenate([bottom[:, :, None, :], slab, top[:, :, None, :]], axis=2)
    return (padded[:, :, 2:, :] - 2.0 * slab + padded[:, :, :-2, :]) / dz2


def thin_layer_field(m: np.ndarray, geom: DomainGeometry,
                     params: MaterialParams) -> np.ndarray:
    """Volumized surface field, supported exactly on the flagged layers."""
    if not geom.thin_layer_active:
        raise ThinLayerInactive("thin_layer_field needs eta_cells >= 1")
    sl = geom.layer_slice()
    ml = m[:, :, sl, :]
    ms = mirror_layer(m, geom)
    w = 1.0 / (2.0 * geom.eta)

    out = np.zeros_like(m)
    layer = np.zeros_like(ml)
    if params.ks != 0.0:
        nz_sign = normal_z(geom)[sl]
        m_dot_nu = ml[..., 2] * nz_sign
        proj = np.zeros_like(ml)
        proj[..., 2] = m_dot_nu * nz_sign
        layer += 2.0 * params.ks * (proj - ml)
    if params.j1 != 0.0:
        layer += 2.0 * params.j1 * (ms - ml)
    if params.j2 != 0.0:
        mdotms = np.sum(ml * ms, axis=-1)[..., None]
        msms = np.sum(ms * ms, axis=-1)[..., None]
        layer += 4.0 * params.j2 * (mdotms * ms - msms * ml)
    out[:, :, sl, :] = w * layer
    return out


def penalty_field(m: np.ndarray, params: MaterialParams) -> np.ndarray:
    """-k (|m|^2 - 1) m per cell."""
    dev = np.sum(m * m, axis=-1) - 1.0
    return -params.penalty_k * dev[..., None] * m


def assemble_h_tot(m: np.ndarray, geom: DomainGeometry, params: MaterialParams,
                   assembly: FieldAssembly) -> np.ndarray:
    """Volume effective field for the active mode, h frozen.

    With the constraint handled variationally (thin layer, penalty) this
    equals minus the per-cell energy gradient over the cell volume; in
    sharp mode the spacer contribution is the tangential ghost-condition
    realization.
    """
    if assembly.h_field is not None:
        h_tot = assembly.h_field.copy()
    else:
        h_tot = np.zeros_like(m)
    if params.k_matrix is not None:
        h_tot -= apply_k(params, m)
    if params.a_exch != 0.0:
        if assembly.mode == SHARP:
            traces = extract_traces(m, geom)
            ghosts = nonlinear_bc_ghost(traces, params, geom, m)
            h_tot += params.a_exch * laplacian_neumann(m, geom, ghosts)
        else:
            h_tot += params.a_exch * laplacian_neumann(m, geom)
    elif assembly.mode == SHARP:
        # A = 0: validate the configuration even though the stencil is skipped
        nonlinear_bc_ghost(extract_traces(m, geom), params, geom, m)
    if assembly.mode == THIN_LAYER:
        h_tot += thin_layer_field(m, geom, params)
    if assembly.constraint == PENALIZED and params.penalty_k != 0.0:
        h_tot += penalty_field(m, params)
    return h_tot
