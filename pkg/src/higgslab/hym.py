"""Hermitian-Yang-Mills residuals, the metric flow and exact witnesses.

The HYM condition in the local form used throughout is

    g^{b-bar a} ( R_{a b-bar} + [phi_a, phi_b-bar^*] ) = lambda id_E .

lambda is fixed by taking the trace: the commutator is traceless, so

    lambda = (1 / (rank Vol)) int g^{b-bar a} tr R_{a b-bar}  g dV,

a topological quantity, constant along holomorphic families.  The solver
evolves h <- h exp(-dt K) where K is the residual, optionally with the
stiff linear part damped by a flat spectral preconditioner so that the
slow Fourier modes converge at an O(1) rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import FormField, l2_norm, lambda_contract, wedge_bracket
from .gauge import GaugeConfig
from .geometry import TorusGeometry


@dataclass
class HymReport:
    lam: float
    residual_sup: float
    residual_l2: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)  # rows (step, sup, l2, dt)

    def as_dict(self):
        return {
            "lambda": self.lam,
            "residual_sup": self.residual_sup,
            "residual_l2": self.residual_l2,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def determine_lambda(cfg: GaugeConfig) -> float:
    """lambda from the integrated trace of the HYM equation."""
    geom = cfg.geom
    R = cfg.curvature()
    total = 0.0 + 0.0j
    for ih, (a,) in enumerate(geom.combos[1]):
        for ia, (b,) in enumerate(geom.combos[1]):
            tr = np.trace(R.data[ih, ia], axis1=-2, axis2=-1)
            total += geom.g_inv[b, a] * geom.integrate(tr)
    return float((total / (cfg.rank * geom.volume)).real)


def hym_operator(cfg: GaugeConfig) -> FormField:
    """g^{b-bar a}(R_{a b-bar} + [phi_a, phi_b-bar^*]) as a (0,0) field."""
    R = cfg.curvature()
    phistar = cfg.star(cfg.phi)
    comm = wedge_bracket(cfg.phi, phistar, dealias=False)
    return lambda_contract(R + comm)


def hym_residual(cfg: GaugeConfig):
    """Residual field g^{b-bar a}(R + [phi, phi^*]) - lambda id and lambda."""
    lam = determine_lambda(cfg)
    op = hym_operator(cfg)
    res = op._like()
    res.data = op.data - lam * np.eye(cfg.rank)
    return res, lam


def _expm(M):
    """Batched matrix exponential by scaling and squaring with a Taylor core."""
    norm = np.max(np.sum(np.abs(M), axis=-1)) if M.size else 0.0
    s = max(0, int(np.ceil(np.log2(max(norm, 1e-300) / 0.25)))) if norm > 0.25 else 0
    T = M / (2 ** s)
    out = np.broadcast_to(np.eye(M.shape[-1], dtype=complex), M.shape).copy()
    term = out.copy()
    for k in range(1, 13):
        term = term @ T / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def _normalize_det(h, rank):
    """Rescale so the mean of log det h vanishes (fixes the dilation)."""
    sign, logdet = np.linalg.slogdet(h)
    mean = np.mean(logdet.real)
    return h * np.exp(-mean / rank)


def _hermitize(h):
    return 0.5 * (h + np.conj(np.swapaxes(h, -1, -2)))


def hym_flow(cfg: GaugeConfig, tol=1e-10, max_steps=2000, precondition=True):
    """Evolve the fibre metric to a Hermitian-Yang-Mills one.

    Returns (solved config, HymReport).  The holomorphic data (A, phi) is
    fixed; h is updated multiplicatively, hermitised, and det-normalised
    every step.  The L2 residual is required to be non-increasing: a step
    that raises it is rejected and the step size halved.
    """
    geom = cfg.geom
    cfg = cfg.with_h(_normalize_det(_hermitize(cfg.h), cfg.rank))
    res, lam = hym_residual(cfg)
    sup = res.sup_norm()
    l2 = l2_norm(res, cfg.h, cfg.h_inv)
    history = [(0, sup, l2, 0.0)]
    if sup <= tol:
        return cfg, HymReport(lam, sup, l2, 0, True, history)

    scale = 1.0 + abs(lam)
    gmax = float(np.max(np.abs(geom.g_inv)))
    scale += 2.0 * gmax * cfg.phi.sup_norm() ** 2
    sym = geom.flat_symbol()
    damp = scale / (scale + sym) if precondition else None
    dt = 0.5 / scale
    dt_max = 1.8 / scale

    best = (cfg, res, lam, sup, l2)
    steps = 0
    for step in range(1, max_steps + 1):
        K = res.data[0, 0]
        if damp is not None:
            spec = geom.fft(K)
            K = geom.ifft(spec * damp[..., None, None])
        h_new = cfg.h @ _expm(-dt * K)
        h_new = _normalize_det(_hermitize(h_new), cfg.rank)
        cfg_new = cfg.with_h(h_new)
        res_new, lam = hym_residual(cfg_new)
        l2_new = l2_norm(res_new, cfg_new.h, cfg_new.h_inv)
        steps = step
        if l2_new > l2 and dt > 1e-8 / scale:
            dt *= 0.5
            history.append((step, sup, l2, -dt))
            continue
        cfg, res, l2 = cfg_new, res_new, l2_new
        sup = res.sup_norm()
        history.append((step, sup, l2, dt))
        dt = min(dt * 1.1, dt_max)
        if sup <= tol:
            return cfg, HymReport(lam, sup, l2, steps, True, history)
        if l2 < best[4]:
            best = (cfg, res, lam, sup, l2)
    cfg, res, lam, sup, l2 = best
    return cfg, HymReport(lam, sup, l2, steps, False, history)


def solve_direct_abelian(cfg: GaugeConfig):
    """Direct spectral solve of the abelian (rank 1) HYM equation.

    Writes h = exp(u); the equation is a Poisson problem for u,
    Lap_g u = source, solved exactly in Fourier space.  Serves as an
    independent oracle for the flow.
    """
    if cfg.rank != 1:
        raise ValueError("direct solve only for rank 1")
    geom = cfg.geom
    flat = cfg.with_h(np.ones(geom.spatial_shape + (1, 1), dtype=complex))
    res, _lam = hym_residual(flat)
    source = res.data[0, 0, ..., 0, 0]
    spec = np.fft.fftn(source)
    sym = geom.flat_symbol()
    safe = np.where(sym > 1e-14, sym, 1.0)
    u_spec = np.where(sym > 1e-14, -spec / safe, 0.0)
    u = np.fft.ifftn(u_spec).real
    h = np.exp(u)[..., None, None].astype(complex)
    return cfg.with_h(_normalize_det(h, 1))


def make_flat_abelian(geom: TorusGeometry, phi_coeffs, A_coeffs=None,
                      scalar_curvature=None) -> GaugeConfig:
    """Rank-1 configuration with constant phi (and optionally constant A):
    an exact HYM witness with vanishing residual."""
    phi = FormField.zeros(geom, 1, 1, 0)
    for a, c in enumerate(np.atleast_1d(phi_coeffs)):
        phi.data[a, 0, ..., 0, 0] = c
    A = FormField.zeros(geom, 1, 0, 1)
    if A_coeffs is not None:
        for b, c in enumerate(np.atleast_1d(A_coeffs)):
            A.data[0, b, ..., 0, 0] = c
    return GaugeConfig(geom, 1, A, phi, scalar_curvature=scalar_curvature)


def make_normal_config(geom: TorusGeometry, rank, phi_diag, twist=None,
                       scalar_curvature=None) -> GaugeConfig:
    """Higher-rank diagonal (normal) configuration: [phi, phi^*] = 0 with
    h = id, so the residual vanishes identically.

    phi_diag maps each holomorphic direction to a length-`rank` diagonal;
    an optional unitary twist is a (rank, 2n) array of phases per real
    period (constant factors of automorphy)."""
    phi_diag = np.atleast_2d(np.asarray(phi_diag, dtype=complex))
    if phi_diag.shape != (geom.n, rank):
        raise ValueError("phi_diag must be (n, rank) of diagonal entries")
    phi = FormField.zeros(geom, rank, 1, 0, twist=twist)
    for a in range(geom.n):
        phi.data[a, 0] = np.diag(phi_diag[a])
    A = FormField.zeros(geom, rank, 0, 1, twist=twist)
    return GaugeConfig(geom, rank, A, phi, twist=twist,
                       scalar_curvature=scalar_curvature)
