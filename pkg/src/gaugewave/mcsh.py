"""Maxwell-Chern-Simons-Higgs fields in temporal gauge on a 2D periodic box.

Continuum system
----------------
Charge ``e``, Chern-Simons constant ``kappa > 0``, vacuum constant ``v``.
The neutral field is stored as the shifted variable ``Ntilde = N - e v^2 /
kappa`` so the vacuum is the zero state; ``N`` itself is never stored.  With
``D_mu = d_mu - i e A_mu`` and the potential

    U = 1/2 (e|phi|^2 + kappa*Ntilde)^2 + e^2 N^2 |phi|^2

the implemented equations are::

    d_tt A_1 = lap A_1 - d_1(div A) - kappa d_t A_2 - 2e Im(phi conj(d_1 phi)) - 2e^2 A_1 |phi|^2
    d_tt A_2 = lap A_2 - d_2(div A) + kappa d_t A_1 - 2e Im(phi conj(d_2 phi)) - 2e^2 A_2 |phi|^2
    d_tt phi = lap phi - ie(div A) phi - 2ie A.grad(phi) - e^2 |A|^2 phi - U_phibar
    d_tt Ntilde = lap Ntilde - U_N

with the formal derivatives (literal differentiation of U)

    U_phibar = e (e|phi|^2 + kappa*Ntilde) phi + e^2 N^2 phi
    U_N      = kappa (e|phi|^2 + kappa*Ntilde) + 2 e^2 N |phi|^2.

The Gauss constraint ``div(d_t A) + kappa F_12 + 2e Im(phi conj(d_t phi)) = 0``
propagates exactly, and the conserved energy is

    E = int [ 1/2 |d_t A|^2 + 1/2 F_12^2 + |d_t phi|^2 + sum_i |D_i phi|^2
              + 1/2 (d_t Ntilde)^2 + 1/2 |grad Ntilde|^2 + U ] dx.

The Ntilde kinetic terms carry the coefficient 1/2: that is the unique
normalization conserved alongside ``d_tt Ntilde = lap Ntilde - U_N``, as the
test suite verifies by direct differentiation along the flow.

Discretization
--------------
As in the companion 3D system, bilinears are padded-lattice products and the
higher products are nested quadratics, so the forces are exact gradients of
the discrete energy (``energy_mcsh``).  ``potential_U`` and
``potential_grad`` instead evaluate their formulas pointwise on the sample
lattice: they are the quadrature-exact objects their finite-difference and
pointwise oracles compare against, and the pointwise ``U`` is nonnegative by
construction.  The decomposed formulation advances
``d_t A_cf = -grad invlap [kappa curl A + 2e Im(phi conj(d_t phi))]`` as a
first-order equation and projects the ``A_df`` wave equation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import (
    Grid,
    SpectralField,
    VectorField,
    _band,
    _deriv,
    _div,
    _pad_phys,
    h1dot_norm,
    l2_norm,
    helmholtz_split,
    partial_deriv,
)

_SPLIT_RTOL = 1e-10


@dataclass(frozen=True)
class PhysParams:
    """Physical constants of the 2D system: charge, Chern-Simons constant, vacuum value."""

    e: float
    kappa: float
    v: float

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.v == 0:
            raise ValueError("v must be nonzero")

    @property
    def n_shift(self) -> float:
        """Vacuum value of N: ``N = Ntilde + e v^2 / kappa``."""
        return self.e * self.v ** 2 / self.kappa


@dataclass
class McshState:
    """Temporal-gauge state ``(A, dA, phi, dphi, Ntilde, dNtilde)`` on one 2D grid."""

    A: VectorField
    dA: VectorField
    phi: SpectralField
    dphi: SpectralField
    n_tilde: SpectralField
    dn_tilde: SpectralField
    time: float = 0.0

    def __post_init__(self):
        g = self.A.grid
        if g.dim != 2:
            raise ValueError("McshState requires a 2D grid")
        for comp in list(self.A) + list(self.dA) + [self.n_tilde, self.dn_tilde]:
            if comp.grid != g:
                raise ValueError("state fields live on different grids")
            if not comp.real:
                raise ValueError("A, dA, and the neutral fields must be real")
        if self.phi.grid != g or self.dphi.grid != g:
            raise ValueError("state fields live on different grids")

    @property
    def grid(self) -> Grid:
        return self.A.grid

    def copy(self) -> "McshState":
        return McshState(
            self.A.copy(), self.dA.copy(), self.phi.copy(), self.dphi.copy(),
            self.n_tilde.copy(), self.dn_tilde.copy(), self.time,
        )

    @classmethod
    def zero(cls, grid: Grid) -> "McshState":
        z = lambda: SpectralField.zero(grid, real=True)
        return cls(
            VectorField.zero(grid), VectorField.zero(grid),
            SpectralField.zero(grid, real=False), SpectralField.zero(grid, real=False),
            z(), z(),
        )


def field_strength_12(A: VectorField) -> SpectralField:
    """``F_12 = d_1 A_2 - d_2 A_1`` (scalar curl in 2D)."""
    return partial_deriv(A[1], 0) - partial_deriv(A[0], 1)


def charge_density(phi: SpectralField, dphi: SpectralField) -> SpectralField:
    """Band-truncated ``Im(phi conj(d_t phi))``."""
    g = phi.grid
    phiv = _pad_phys(g, phi.coeffs, False)
    dphiv = _pad_phys(g, dphi.coeffs, False)
    return SpectralField(g, _band(g, np.imag(phiv * np.conj(dphiv))), True)


def potential_U(phi: SpectralField, n_tilde: SpectralField, p: PhysParams) -> SpectralField:
    """Pointwise potential on the sample lattice (nonnegative by construction).

    The samples of the returned field reproduce the formula exactly whenever
    quartic products of the inputs stay inside the retained band; otherwise
    the Nyquist content of the sample transform is dropped.  Its mean (hence
    the integral of U) is exact in every case.
    """
    phiv = phi.values()
    ntv = n_tilde.values()
    nv = ntv + p.n_shift
    h = np.abs(phiv) ** 2
    u = 0.5 * (p.e * h + p.kappa * ntv) ** 2 + p.e ** 2 * nv ** 2 * h
    return SpectralField.from_values(phi.grid, u, real=True)


def potential_grad(phi: SpectralField, n_tilde: SpectralField, p: PhysParams) -> tuple:
    """Formal derivatives ``(U_phibar, U_N)``, evaluated pointwise like ``potential_U``."""
    g = phi.grid
    phiv = phi.values()
    ntv = n_tilde.values()
    nv = ntv + p.n_shift
    h = np.abs(phiv) ** 2
    w = p.e * h + p.kappa * ntv
    u_phibar = (p.e * w + p.e ** 2 * nv ** 2) * phiv
    u_n = p.kappa * w + 2.0 * p.e ** 2 * nv * h
    return (
        SpectralField.from_values(g, u_phibar, real=False),
        SpectralField.from_values(g, u_n, real=True),
    )


def energy_mcsh(state: McshState, p: PhysParams) -> float:
    """Conserved energy, evaluated as the discrete Hamiltonian of the flow."""
    g = state.grid
    vol = g.volume
    w = g.pad_cell_volume
    e = 0.0
    for ax in range(2):
        e += 0.5 * vol * float(np.sum(np.abs(state.dA[ax].coeffs) ** 2))
    f12 = field_strength_12(state.A)
    e += 0.5 * vol * float(np.sum(np.abs(f12.coeffs) ** 2))
    e += vol * float(np.sum(np.abs(state.dphi.coeffs) ** 2))
    e += vol * float(np.sum(g.k2 * np.abs(state.phi.coeffs) ** 2))
    e += 0.5 * vol * float(np.sum(np.abs(state.dn_tilde.coeffs) ** 2))
    e += 0.5 * vol * float(np.sum(g.k2 * np.abs(state.n_tilde.coeffs) ** 2))

    phiv = _pad_phys(g, state.phi.coeffs, False)
    habs = np.abs(phiv) ** 2
    hb = _band(g, habs)
    q = np.zeros(g.pad_shape)
    for ax in range(2):
        av = _pad_phys(g, state.A[ax].coeffs, True)
        dphv = _pad_phys(g, _deriv(g, state.phi.coeffs, ax), False)
        e += 2.0 * p.e * w * float(np.sum(av * np.imag(phiv * np.conj(dphv))))
        q += av * av
    qv = _pad_phys(g, _band(g, q), True)
    e += p.e ** 2 * w * float(np.sum(qv * habs))

    # potential terms: 1/2 ||e |phi|^2_b + kappa Ntilde||^2 + e^2 <band(N^2), |phi|^2>
    wb = p.e * hb + p.kappa * state.n_tilde.coeffs
    e += 0.5 * vol * float(np.sum(np.abs(wb) ** 2))
    cn = state.n_tilde.coeffs.copy()
    cn[0, 0] += p.n_shift
    nv = _pad_phys(g, cn, True)
    n2v = _pad_phys(g, _band(g, nv * nv), True)
    e += p.e ** 2 * w * float(np.sum(n2v * habs))
    return e


def _forces(g: Grid, cA: list, cphi: np.ndarray, cnt: np.ndarray, p: PhysParams, divA: np.ndarray) -> tuple:
    """Shared nonlinear sources: (A-sources, phi-acceleration, Ntilde-acceleration)."""
    phiv = _pad_phys(g, cphi, False)
    dphiv = [_pad_phys(g, _deriv(g, cphi, ax), False) for ax in range(2)]
    Av = [_pad_phys(g, cA[ax], True) for ax in range(2)]
    divAv = _pad_phys(g, divA, True)

    hb = _band(g, np.abs(phiv) ** 2)
    hv = _pad_phys(g, hb, True)
    qb = _band(g, Av[0] ** 2 + Av[1] ** 2)
    qv = _pad_phys(g, qb, True)

    cn = cnt.copy()
    cn[0, 0] += p.n_shift
    nv = _pad_phys(g, cn, True)
    n2b = _band(g, nv * nv)
    n2v = _pad_phys(g, n2b, True)

    src_A = [
        _band(g, 2.0 * p.e * np.imag(phiv * np.conj(dphiv[ax])) + 2.0 * p.e ** 2 * Av[ax] * hv)
        for ax in range(2)
    ]

    wb = p.e * hb + p.kappa * cnt  # e |phi|^2_b + kappa Ntilde, banded
    wv = _pad_phys(g, wb, True)
    x = (-1j * p.e) * divAv * phiv - (2j * p.e) * (Av[0] * dphiv[0] + Av[1] * dphiv[1])
    x -= (p.e ** 2) * qv * phiv
    x -= (p.e * wv + p.e ** 2 * n2v) * phiv
    ddphi = -g.k2 * cphi + _band(g, x)

    ddnt = -g.k2 * cnt - p.kappa * wb - 2.0 * p.e ** 2 * _band(g, nv * hv)
    return src_A, ddphi, ddnt


def rhs_raw_mcsh(state: McshState, p: PhysParams) -> tuple:
    """Accelerations ``(ddA, ddphi, ddNtilde)`` of the unsplit formulation."""
    g = state.grid
    cA = [c.coeffs for c in state.A]
    divA = _div(g, cA)
    src_A, ddphi, ddnt = _forces(g, cA, state.phi.coeffs, state.n_tilde.coeffs, p, divA)
    kap = [-p.kappa * state.dA[1].coeffs, p.kappa * state.dA[0].coeffs]
    ddA = []
    for ax in range(2):
        c = -g.k2 * cA[ax] - _deriv(g, divA, ax) + kap[ax] - src_A[ax]
        ddA.append(SpectralField(g, c, True))
    return (
        VectorField(tuple(ddA)),
        SpectralField(g, ddphi, False),
        SpectralField(g, ddnt, True),
    )


# ---------------------------------------------------------------------------
# decomposed formulation
# ---------------------------------------------------------------------------


@dataclass
class DecomposedMcshState:
    """Split state: first-order ``A_cf``, second-order ``(A_df, phi, Ntilde)``."""

    A_df: VectorField
    A_cf: VectorField
    dA_df: VectorField
    phi: SpectralField
    dphi: SpectralField
    n_tilde: SpectralField
    dn_tilde: SpectralField
    time: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.A_df.grid

    def copy(self) -> "DecomposedMcshState":
        return DecomposedMcshState(
            self.A_df.copy(), self.A_cf.copy(), self.dA_df.copy(),
            self.phi.copy(), self.dphi.copy(),
            self.n_tilde.copy(), self.dn_tilde.copy(), self.time,
        )


def _check_split(A_df: VectorField, A_cf: VectorField) -> None:
    g = A_df.grid
    scale = max(h1dot_norm(A_df) + h1dot_norm(A_cf), 1.0)
    div_res = l2_norm(SpectralField(g, _div(g, [c.coeffs for c in A_df]), True))
    if div_res > _SPLIT_RTOL * scale:
        raise ValueError(f"A_df is not divergence-free (residual {div_res:.2e})")
    curl_res = l2_norm(field_strength_12(A_cf))
    if curl_res > _SPLIT_RTOL * scale:
        raise ValueError(f"A_cf is not curl-free (residual {curl_res:.2e})")


def cf_velocity_mcsh(A: VectorField, phi: SpectralField, dphi: SpectralField, p: PhysParams) -> VectorField:
    """Constraint-determined curl-free velocity.

    ``d_t A_cf = -grad invlap [kappa curl A + 2e Im(phi conj(d_t phi))]``.
    """
    g = A.grid
    rho = p.kappa * field_strength_12(A).coeffs + 2.0 * p.e * charge_density(phi, dphi).coeffs
    pot = g.inv_lap * rho
    return VectorField(tuple(SpectralField(g, -_deriv(g, pot, ax), True) for ax in range(2)))


def decompose_mcsh(state: McshState) -> DecomposedMcshState:
    """Split an admissible state; ``dA_cf`` is dropped (constraint-determined)."""
    A_df, A_cf = helmholtz_split(state.A)
    dA_df, _ = helmholtz_split(state.dA)
    return DecomposedMcshState(
        A_df, A_cf, dA_df, state.phi.copy(), state.dphi.copy(),
        state.n_tilde.copy(), state.dn_tilde.copy(), state.time,
    )


def recompose_mcsh(d: DecomposedMcshState, p: PhysParams) -> McshState:
    """Rebuild the unsplit state, reconstructing ``dA_cf`` from the constraint."""
    A = d.A_df + d.A_cf
    dA = d.dA_df + cf_velocity_mcsh(A, d.phi, d.dphi, p)
    return McshState(
        A, dA, d.phi.copy(), d.dphi.copy(), d.n_tilde.copy(), d.dn_tilde.copy(), d.time,
    )


def rhs_decomposed_mcsh(d: DecomposedMcshState, p: PhysParams, check: bool = True) -> tuple:
    """Time derivatives ``(dA_cf, ddA_df, ddphi, ddNtilde)`` of the split formulation."""
    g = d.grid
    if check:
        _check_split(d.A_df, d.A_cf)
    cA = [d.A_df[ax].coeffs + d.A_cf[ax].coeffs for ax in range(2)]
    divA = _div(g, [c.coeffs for c in d.A_cf])  # df part is divergence-free
    src_A, ddphi, ddnt = _forces(g, cA, d.phi.coeffs, d.n_tilde.coeffs, p, divA)

    A_total = VectorField(tuple(SpectralField(g, c, True) for c in cA))
    dA_cf = cf_velocity_mcsh(A_total, d.phi, d.dphi, p)
    dA = [d.dA_df[ax].coeffs + dA_cf[ax].coeffs for ax in range(2)]

    # kappa J dA + nonlinear source, then the divergence-free projection
    raw = [-p.kappa * dA[1] - src_A[0], p.kappa * dA[0] - src_A[1]]
    div_raw = _div(g, raw)
    ddA_df = []
    for ax in range(2):
        proj = raw[ax] - _deriv(g, g.inv_lap * div_raw, ax)
        ddA_df.append(SpectralField(g, -g.k2 * d.A_df[ax].coeffs + proj, True))

    return (
        dA_cf,
        VectorField(tuple(ddA_df)),
        SpectralField(g, ddphi, False),
        SpectralField(g, ddnt, True),
    )
