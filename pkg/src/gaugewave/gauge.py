"""Gauge transformations, Coulomb fixing, Gauss residuals, and admissible data.

Temporal gauge is preserved by every transform here: the gauge function is
time-independent, so the velocities pick up only the pointwise phase and the
vector potential shifts by a banded gradient.  The phase factor ``e^{i chi}``
is not band-limited; it is evaluated pointwise on the dealiasing lattice and
then truncated back to the band, which keeps the (exponentially small)
aliasing error of smooth gauge functions explicit.

Random admissible data uses a fixed draw order per system so states are
bit-reproducible from the seed alone.  All drawn fields share one spectrum:
independent unit-normal complex coefficients shaped by the envelope
``exp(-|xi|^2 / xi0^2)``, Hermitian-symmetrized for real fields, restricted
to mode indices small enough that triple products stay inside the retained
band, and rescaled to a prescribed L2 amplitude.  The velocity of the scalar
is then shifted by ``i lambda phi`` with ``lambda = int Im(phi conj(dphi)) /
int |phi|^2``: the gradient construction of the curl-free velocity can cancel
every nonzero mode of the Gauss residual but not its mean, and the shift
removes exactly that mean without touching |phi| or the other fields.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mcsh import McshState, PhysParams, cf_velocity_mcsh, field_strength_12
from .mkg import MkgState, cf_velocity_mkg
from .spectral import (
    Grid,
    SpectralField,
    VectorField,
    _band,
    _div,
    _pad_phys,
    gradient,
    helmholtz_split,
    integral,
    inv_laplacian,
    l2_norm,
)

__all__ = [
    "PhysParams",
    "GaugeFunction",
    "SpectrumProfile",
    "gauge_transform_mkg",
    "gauge_transform_mcsh",
    "coulomb_fix",
    "gauss_residual_mkg",
    "gauss_residual_mcsh",
    "make_admissible_mkg",
    "make_admissible_mcsh",
    "random_gauge_function",
]


@dataclass(frozen=True)
class GaugeFunction:
    """Real, time-independent gauge function chi."""

    chi: SpectralField
    time_independent: bool = True

    def __post_init__(self):
        if not self.chi.real:
            raise ValueError("gauge functions must be real-valued")
        if not self.time_independent:
            raise ValueError("only time-independent gauge functions are supported")

    @property
    def grid(self) -> Grid:
        return self.chi.grid


def _phase_apply(f: SpectralField, chi: SpectralField, scale: float) -> SpectralField:
    """``e^{i scale chi} f`` evaluated on the padded lattice, then banded."""
    g = f.grid
    phase = np.exp(1j * scale * chi.values(pad=True))
    return SpectralField(g, _band(g, phase * f.values(pad=True)), False)


def gauge_transform_mkg(state: MkgState, chi: GaugeFunction) -> MkgState:
    """``A -> A + grad chi``, ``phi -> e^{i chi} phi`` (unit charge)."""
    return MkgState(
        state.A + gradient(chi.chi),
        state.dA.copy(),
        _phase_apply(state.phi, chi.chi, 1.0),
        _phase_apply(state.dphi, chi.chi, 1.0),
        state.time,
    )


def gauge_transform_mcsh(state: McshState, chi: GaugeFunction, p: PhysParams) -> McshState:
    """``A -> A + grad chi``, ``phi -> e^{i e chi} phi``; the neutral field is untouched."""
    return McshState(
        state.A + gradient(chi.chi),
        state.dA.copy(),
        _phase_apply(state.phi, chi.chi, p.e),
        _phase_apply(state.dphi, chi.chi, p.e),
        state.n_tilde.copy(),
        state.dn_tilde.copy(),
        state.time,
    )


def coulomb_fix(A0: VectorField) -> tuple:
    """Gauge function removing the curl-free part of ``A0`` (zero mode kept).

    Returns ``(A0 + grad chi, chi)`` with ``chi = -invlap(div A0)``.
    """
    g = A0.grid
    div = SpectralField(g, _div(g, [c.coeffs for c in A0]), True)
    chi = inv_laplacian(div) * (-1.0)
    return A0 + gradient(chi), GaugeFunction(chi)


def _charge(phi: SpectralField, dphi: SpectralField) -> SpectralField:
    """Band-truncated ``Im(phi conj(dphi))`` (any dimension)."""
    g = phi.grid
    pv = _pad_phys(g, phi.coeffs, False)
    dv = _pad_phys(g, dphi.coeffs, False)
    return SpectralField(g, _band(g, np.imag(pv * np.conj(dv))), True)


def gauss_residual_mkg(state: MkgState) -> SpectralField:
    """``div(-d_t A) - Im(phi conj(d_t phi))``, identically zero on admissible states."""
    g = state.grid
    c = -_div(g, [comp.coeffs for comp in state.dA]) - _charge(state.phi, state.dphi).coeffs
    return SpectralField(g, c, True)


def gauss_residual_mcsh(state: McshState, p: PhysParams) -> SpectralField:
    """``div(d_t A) + kappa F_12 + 2e Im(phi conj(d_t phi))``."""
    g = state.grid
    c = _div(g, [comp.coeffs for comp in state.dA])
    c = c + p.kappa * field_strength_12(state.A).coeffs
    c = c + 2.0 * p.e * _charge(state.phi, state.dphi).coeffs
    return SpectralField(g, c, True)


# ---------------------------------------------------------------------------
# random admissible data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectrumProfile:
    """Spectrum of random data: envelope peak ``xi0`` and integer mode cutoff.

    ``xi0`` is a physical wavenumber (default: one quarter of the Nyquist
    wavenumber).  ``cutoff`` bounds every integer mode index componentwise
    (default: the largest band whose triple products still fall inside the
    retained band, ``(n/2 - 1) // 3``).
    """

    xi0: float | None = None
    cutoff: int | None = None

    def resolve(self, grid: Grid) -> tuple:
        xi0 = self.xi0
        if xi0 is None:
            xi0 = (2.0 * np.pi / grid.box_length) * (grid.n / 8.0)
        cutoff = self.cutoff
        if cutoff is None:
            cutoff = (grid.n // 2 - 1) // 3
        if not 1 <= cutoff <= grid.n // 2 - 1:
            raise ValueError(f"cutoff {cutoff} outside the retained band")
        return float(xi0), int(cutoff)


def _draw_field(grid: Grid, rng: np.random.Generator, xi0: float, cutoff: int,
                real: bool, amplitude: float) -> SpectralField:
    """One spectrally shaped random field, L2-normalized to ``amplitude``."""
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    idx = np.fft.fftfreq(grid.n, d=1.0 / grid.n)
    mask = np.ones(grid.shape, dtype=bool)
    for ax in range(grid.dim):
        shape = [1] * grid.dim
        shape[ax] = grid.n
        mask &= np.abs(idx.reshape(shape)) <= cutoff
    c *= mask * np.exp(-grid.k2 / xi0 ** 2)
    if real:
        c = 0.5 * (c + np.conj(c[grid._reflect_index]))
    f = SpectralField(grid, c, real)
    norm = l2_norm(f)
    return f * (amplitude / norm if norm > 0 else 0.0)


def _draw_vector(grid: Grid, rng: np.random.Generator, xi0: float, cutoff: int,
                 amplitude: float) -> VectorField:
    return VectorField(tuple(
        _draw_field(grid, rng, xi0, cutoff, True, amplitude) for _ in range(grid.dim)
    ))


def _balance_charge(phi: SpectralField, dphi: SpectralField) -> SpectralField:
    """Shift ``dphi`` by ``i lambda phi`` so the total charge vanishes."""
    denom = l2_norm(phi) ** 2
    if denom == 0.0:
        return dphi.copy()
    lam = float(np.real(integral(_charge(phi, dphi)))) / denom
    return dphi + phi * (1j * lam)


def random_gauge_function(grid: Grid, rng: np.random.Generator,
                          amplitude: float = 0.1, cutoff: int = 2) -> GaugeFunction:
    """Smooth random gauge function supported on very low modes."""
    xi0 = (2.0 * np.pi / grid.box_length) * cutoff
    return GaugeFunction(_draw_field(grid, rng, xi0, cutoff, True, amplitude))


def make_admissible_mkg(grid: Grid, seed: int, amplitude: float = 1.0,
                        profile: SpectrumProfile | None = None) -> MkgState:
    """Random band-limited state satisfying the Gauss constraint exactly.

    Draw order: phi, dphi, A, W (divergence-free velocity part).  The
    curl-free velocity part is solved from the constraint after the charge
    balance shift of ``dphi``.
    """
    if grid.dim != 3:
        raise ValueError("the 3D system needs a 3D grid")
    xi0, cutoff = (profile or SpectrumProfile()).resolve(grid)
    rng = np.random.default_rng(seed)
    phi = _draw_field(grid, rng, xi0, cutoff, False, amplitude)
    dphi = _draw_field(grid, rng, xi0, cutoff, False, amplitude)
    A = _draw_vector(grid, rng, xi0, cutoff, amplitude)
    W, _ = helmholtz_split(_draw_vector(grid, rng, xi0, cutoff, amplitude))
    dphi = _balance_charge(phi, dphi)
    dA = W + cf_velocity_mkg(phi, dphi)
    return MkgState(A, dA, phi, dphi)


def make_admissible_mcsh(grid: Grid, seed: int, p: PhysParams, amplitude: float = 1.0,
                         profile: SpectrumProfile | None = None) -> McshState:
    """Random admissible 2D state; draw order phi, dphi, A, W, Ntilde, dNtilde."""
    if grid.dim != 2:
        raise ValueError("the 2D system needs a 2D grid")
    xi0, cutoff = (profile or SpectrumProfile()).resolve(grid)
    rng = np.random.default_rng(seed)
    phi = _draw_field(grid, rng, xi0, cutoff, False, amplitude)
    dphi = _draw_field(grid, rng, xi0, cutoff, False, amplitude)
    A = _draw_vector(grid, rng, xi0, cutoff, amplitude)
    W, _ = helmholtz_split(_draw_vector(grid, rng, xi0, cutoff, amplitude))
    n_tilde = _draw_field(grid, rng, xi0, cutoff, True, amplitude)
    dn_tilde = _draw_field(grid, rng, xi0, cutoff, True, amplitude)
    dphi = _balance_charge(phi, dphi)
    dA = W + cf_velocity_mcsh(A, phi, dphi, p)
    return McshState(A, dA, phi, dphi, n_tilde, dn_tilde)
