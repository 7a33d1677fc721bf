"""Every energy functional of the model.

Volume terms (exchange, anisotropy, Maxwell field energy), the two spacer
surface energies (quadratic + biquadratic super-exchange, surface
anisotropy), their thin-layer volumization, the saturation penalty, and
the assembled total.

Discretization notes:

* The exchange sum runs over interior cell faces only, one face one term,
  with no face across the spacer plane and none across the outer
  boundary.  Its exact per-cell gradient is then the homogeneous-Neumann
  7-point Laplacian used by the effective-field module.
* Spacer integrals use the cell footprint dx*dy per column (midpoint
  rule), matching the cell-centered traces.
* The quadratic super-exchange and biquadratic terms integrate once over
  the spacer; surface anisotropy integrates over both faces.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ThinLayerInactive
from .geometry import DomainGeometry, SpacerTraces, extract_traces, normal_z
from .summation import esum, fsum

_PSD_TOL = 1e-10


@dataclass(frozen=True)
class MaterialParams:
    """Material and model constants.

    k_matrix is the full 3x3 symmetric positive-semidefinite anisotropy
    matrix per cell, shape (nx, ny, nz, 3, 3); it stays a full field even
    when spatially uniform.  penalty_k is the saturation penalty
    coefficient; sigma the conductivity inside the body.
    """

    a_exch: float
    k_matrix: Optional[np.ndarray]
    ks: float
    j1: float
    j2: float
    alpha: float
    mu0: float = 1.0
    eps0: float = 1.0
    sigma: float = 0.0
    penalty_k: float = 0.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.mu0 <= 0 or self.eps0 <= 0:
            raise ValueError("mu0 and eps0 must be positive")
        for name in ("a_exch", "ks", "j1", "j2", "sigma", "penalty_k"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.k_matrix is not None:
            k = self.k_matrix
            if k.shape[-2:] != (3, 3):
                raise ValueError("k_matrix must have trailing shape (3, 3)")
            asym = np.max(np.abs(k - np.swapaxes(k, -1, -2)))
            if asym > _PSD_TOL:
                raise ValueError(f"k_matrix not symmetric (max |K-K^T| = {asym:g})")
            eigmin = np.min(np.linalg.eigvalsh(k))
            if eigmin < -_PSD_TOL:
                raise ValueError(f"k_matrix not positive semidefinite (min eig = {eigmin:g})")

    @property
    def speed_of_light(self) -> float:
        return 1.0 / np.sqrt(self.mu0 * self.eps0)


def uniform_k_matrix(k: np.ndarray, geom: DomainGeometry) -> np.ndarray:
    """Tile one 3x3 anisotropy matrix over every cell."""
    k = np.asarray(k, dtype=float)
    out = np.empty(geom.field_shape()[:3] + (3, 3))
    out[...] = k
    return out


@dataclass(frozen=True)
class EnergyBreakdown:
    exchange: float
    anisotropy: float
    maxwell_h: float
    maxwell_e: float
    surf_anis: float
    superexch_q: float
    superexch_biq: float
    penalty: float
    total: float

    COLUMNS = (
        "exchange", "anisotropy", "maxwell_h", "maxwell_e", "surf_anis",
        "superexch_q", "superexch_biq", "penalty", "total",
    )

    @staticmethod
    def assemble(exchange=0.0, anisotropy=0.0, maxwell_h=0.0, maxwell_e=0.0,
                 surf_anis=0.0, superexch_q=0.0, superexch_biq=0.0,
                 penalty=0.0) -> "EnergyBreakdown":
        total = fsum([exchange, anisotropy, maxwell_h, maxwell_e,
                      surf_anis, superexch_q, superexch_biq, penalty])
        return EnergyBreakdown(exchange, anisotropy, maxwell_h, maxwell_e,
                               surf_anis, superexch_q, superexch_biq,
                               penalty, total)

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, c) for c in self.COLUMNS)


def exchange_energy(m: np.ndarray, geom: DomainGeometry, params: MaterialParams) -> float:
    """(A/2) * sum over interior faces of |difference quotient|^2 * dV."""
    if params.a_exch == 0.0:
        return 0.0
    dV = geom.cell_volume
    s = geom.spacer_index
    acc = 0.0
    dmx = m[1:, :, :, :] - m[:-1, :, :, :]
    acc += esum(dmx * dmx) / geom.dx**2
    dmy = m[:, 1:, :, :] - m[:, :-1, :, :]
    acc += esum(dmy * dmy) / geom.dy**2
    # z faces per slab; the spacer face carries no exchange coupling
    dml = m[:, :, 1:s, :] - m[:, :, : s - 1, :]
    dmu = m[:, :, s + 1:, :] - m[:, :, s:-1, :]
    acc += (esum(dml * dml) + esum(dmu * dmu)) / geom.dz**2
    return 0.5 * params.a_exch * dV * acc


def apply_k(params: MaterialParams, m: np.ndarray) -> np.ndarray:
    """K(x) m per cell; zeros when no anisotropy is configured."""
    if params.k_matrix is None:
        return np.zeros_like(m)
    return np.einsum("...ij,...j->...i", params.k_matrix, m)


def anisotropy_energy(m: np.ndarray, geom: DomainGeometry, params: MaterialParams) -> float:
    if params.k_matrix is None:
        return 0.0
    km = apply_k(params, m)
    return 0.5 * geom.cell_volume * esum(km * m)


def superexchange_energy(traces: SpacerTraces, params: MaterialParams,
                         geom: DomainGeometry) -> Tuple[float, float]:
    """Quadratic and biquadratic spacer terms, integrated once over the spacer."""
    dA = geom.face_area
    jump = traces.gamma_plus - traces.gamma_minus
    e_q = 0.5 * params.j1 * dA * esum(jump * jump)
    wedge = np.cross(traces.gamma_plus, traces.gamma_minus)
    e_biq = params.j2 * dA * esum(wedge * wedge)
    return e_q, e_biq


def surface_anisotropy_energy(traces: SpacerTraces, params: MaterialParams,
                              geom: DomainGeometry) -> float:
    """(Ks/2) * integral over both spacer faces of |trace wedge normal|^2.

    The normal is +-e_z on each face, so the integrand reduces to
    |gamma|^2 - gamma_z^2 on either side.
    """
    dA = geom.face_area
    acc = 0.0
    for g in (traces.gamma_plus, traces.gamma_minus):
        acc += esum(g * g) - esum(g[..., 2] * g[..., 2])
    return 0.5 * params.ks * dA * acc


def thin_layer_energy(m: np.ndarray, geom: DomainGeometry, params: MaterialParams,
                      split: bool = False):
    """Volumized surface energy over the eta layers on both spacer sides.

    With split=True returns (surface-anisotropy part, quadratic part,
    biquadratic part) so the breakdown can report the same columns in
    both boundary modes.
    """
    if not geom.thin_layer_active:
        raise ThinLayerInactive("thin_layer_energy needs eta_cells >= 1")
    sl = geom.layer_slice()
    ml = m[:, :, sl, :]
    ms = ml[:, :, ::-1, :]          # reflection within the layer
    w = geom.cell_volume / (2.0 * geom.eta)

    nz_sign = normal_z(geom)[sl]
    m_dot_nu = ml[..., 2] * nz_sign  # (m . nu) since nu = -+ e_z
    mm = np.sum(ml * ml, axis=-1)
    e_ks = params.ks * w * esum(mm - m_dot_nu**2)

    msms = np.sum(ms * ms, axis=-1)
    mdotms = np.sum(ml * ms, axis=-1)
    e_q = params.j1 * w * esum(0.5 * (mm + msms) - mdotms)
    e_biq = params.j2 * w * esum(msms * mm - mdotms**2)
    if split:
        return e_ks, e_q, e_biq
    return fsum([e_ks, e_q, e_biq])


def penalty_energy(m: np.ndarray, geom: DomainGeometry, params: MaterialParams) -> float:
    """(k/4) * integral of (|m|^2 - 1)^2."""
    if params.penalty_k == 0.0:
        return 0.0
    dev = np.sum(m * m, axis=-1) - 1.0
    return 0.25 * params.penalty_k * geom.cell_volume * esum(dev * dev)


def maxwell_energy(em, params: MaterialParams) -> Tuple[float, float]:
    """(field energy of h, field energy of e) over the computational box."""
    dV = em.box.cell_volume
    e_h = 0.5 * dV * fsum([esum(em.hx * em.hx), esum(em.hy * em.hy), esum(em.hz * em.hz)])
    e_e = (0.5 * params.eps0 / params.mu0) * dV * fsum(
        [esum(em.ex * em.ex), esum(em.ey * em.ey), esum(em.ez * em.ez)])
    return e_h, e_e


def total_energy(m: np.ndarray, em, geom: DomainGeometry, params: MaterialParams,
                 bc_mode: str = "sharp", constraint: str = "projected") -> EnergyBreakdown:
    """Assemble the full energy for the active mode.

    bc_mode "sharp" uses the spacer surface integrals, "thin_layer" the
    volumized replacement; the penalty term enters only under the
    penalized constraint.
    """
    e_h = e_e = 0.0
    if em is not None:
        e_h, e_e = maxwell_energy(em, params)
    if bc_mode == "sharp":
        traces = extract_traces(m, geom)
        sq, sb = superexchange_energy(traces, params, geom)
        sa = surface_anisotropy_energy(traces, params, geom)
    elif bc_mode == "thin_layer":
        sa, sq, sb = thin_layer_energy(m, geom, params, split=True)
    else:
        raise ValueError(f"unknown bc_mode {bc_mode!r}")
    pen = penalty_energy(m, geom, params) if constraint == "penalized" else 0.0
    return EnergyBreakdown.assemble(
        exchange=exchange_energy(m, geom, params),
        anisotropy=anisotropy_energy(m, geom, params),
        maxwell_h=e_h,
        maxwell_e=e_e,
        surf_anis=sa,
        superexch_q=sq,
        superexch_biq=sb,
        penalty=pen,
    )
