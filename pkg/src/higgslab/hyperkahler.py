"""Involution, quaternionic structure and hyper-Kaehler forms.

The involution on degree-1 elements is iota(a, b) = (-b*, a*); it is
conjugate linear, squares to -id, preserves the L2 norm, and under the
projective-flatness assumption maps harmonic elements to harmonic ones.
The obstruction field

    xi = ( phi_{a;c} dz^a dz^c,
           (R_{a b-bar} + [phi_a, phi*_b-bar]) dz^a dz-bar^b,
           - phi*_{b-bar;d-bar} dz-bar^b dz-bar^d )

is closed and coclosed when the configuration is projectively flat (or the
Higgs field is symmetric-closed), and its harmonic part lies on the
canonical line: with our component conventions the proportionality
constant against (0, omega_X id, 0) is -sqrt(-1) lambda.
"""

from __future__ import annotations

import numpy as np

from .complexes import (
    ComplexElement,
    HodgeSolver,
    canonical_h2_class,
    complex_inner,
    complex_norm,
    d_star,
    d_total,
    traceless_matrix_basis,
)
from .fields import FormField, wedge_bracket
from .gauge import GaugeConfig
from .hym import determine_lambda


def iota(x: ComplexElement, cfg: GaugeConfig) -> ComplexElement:
    """(a, b) -> (-b*, a*) on degree-1 elements."""
    if x.degree != 1:
        raise ValueError("iota acts on degree-1 elements")
    a = x.part(1, 0)
    b = x.part(0, 1)
    return ComplexElement.from_parts(1, [-1.0 * cfg.star(b), cfg.star(a)])


def higgs_sym_derivative(cfg: GaugeConfig):
    """phi_{a;c} for all (a, c): the full covariant z-derivative of phi."""
    geom = cfg.geom
    out = np.empty((geom.n, geom.n), dtype=object)
    for c in range(geom.n):
        dphi = cfg.cov_hol(cfg.phi, c)
        for a in range(geom.n):
            out[a, c] = dphi.data[a, 0]
    return out


def check_assumptions(cfg: GaugeConfig, kmax=None, tau_factor=1e-8):
    """Residuals of assumptions A, A' and kernel estimates for B, B'."""
    geom = cfg.geom
    lam = determine_lambda(cfg)
    R = cfg.curvature()
    comm = wedge_bracket(cfg.phi, cfg.star(cfg.phi), dealias=False)
    proj_flat = 0.0
    eye = np.eye(cfg.rank)
    for ih, (a,) in enumerate(geom.combos[1]):
        for ia, (b,) in enumerate(geom.combos[1]):
            dev = (R.data[ih, ia] + comm.data[ih, ia]
                   - lam * geom.g[a, b] * eye)
            proj_flat = max(proj_flat, float(np.max(np.abs(dev))))
    sym = 0.0
    if geom.n >= 2:
        ds = higgs_sym_derivative(cfg)
        for a in range(geom.n):
            for c in range(a + 1, geom.n):
                sym = max(sym, float(np.max(np.abs(ds[a, c] - ds[c, a]))))
    solver_full = HodgeSolver(cfg, 2, kmax=kmax, tau_factor=tau_factor)
    solver_tf = HodgeSolver(cfg, 2, kmax=kmax, tau_factor=tau_factor,
                            matrix_basis=traceless_matrix_basis(cfg.rank)) \
        if cfg.rank > 1 else None
    report = {
        "lambda": lam,
        "proj_flat_residual": proj_flat,
        "dbar_theta_sym_residual": sym,
        "h2_dim_estimate": solver_full.kernel_dim,
        "h2_spectral_gap": solver_full.spectral_gap,
        "h2_tracefree_dim": solver_tf.kernel_dim if solver_tf else 0,
        "h2_tracefree_gap": solver_tf.spectral_gap if solver_tf
        else float("inf"),
    }
    return report, solver_full


def xi_field(cfg: GaugeConfig) -> ComplexElement:
    """The degree-2 obstruction field of the involution computation."""
    geom = cfg.geom
    parts = {}
    mid = cfg.curvature() + wedge_bracket(cfg.phi, cfg.star(cfg.phi),
                                          dealias=False)
    parts[(1, 1)] = mid
    if geom.n >= 2:
        ds = higgs_sym_derivative(cfg)
        u = FormField.zeros(geom, cfg.rank, 2, 0, twist=cfg.twist)
        u.data[0, 0] = ds[0, 1] - ds[1, 0]     # component on dz^0 ^ dz^1
        parts[(2, 0)] = u
        w = FormField.zeros(geom, cfg.rank, 0, 2, twist=cfg.twist)
        # phi*_{b-bar;d-bar} = (phi_{b;d})^*; component on dz-bar^0 ^ dz-bar^1
        s01 = _star_of(cfg, ds[0, 1])
        s10 = _star_of(cfg, ds[1, 0])
        w.data[0, 0] = -(s01 - s10)
        parts[(0, 2)] = w
    return ComplexElement(geom, cfg.rank, 2, parts, twist=cfg.twist)


def _star_of(cfg, data):
    mH = np.conj(np.swapaxes(data, -1, -2))
    return cfg.h_inv @ mH @ cfg.h


def xi_report(cfg: GaugeConfig, solver2: HodgeSolver = None):
    """Closedness, coclosedness and the harmonic coefficient of xi."""
    xi = xi_field(cfg)
    eps = canonical_h2_class(cfg)
    lam = determine_lambda(cfg)
    norm_eps2 = complex_inner(eps, eps, cfg).real
    coeff = complex_inner(xi, eps, cfg) / norm_eps2
    out = {
        "d_xi": d_total(xi, cfg).sup_norm(),
        "dstar_xi": d_star(xi, cfg).sup_norm(),
        "harmonic_coefficient": coeff,
        "coefficient_vs_lambda": abs(coeff - (-1j * lam)),
        "lambda": lam,
    }
    if solver2 is not None:
        h = solver2.harmonic_project(xi)
        out["offline_component"] = complex_norm(h - eps * coeff, cfg)
    return out, xi


def iota_harmonic_report(chart):
    """Residuals of harmonicity of iota(eta_i) and of the xi identity.

    Claim 1: d(iota eta_i) equals the antiholomorphic derivative of xi
    along the family; claim 2: d*(iota eta_i) = 0 unconditionally.
    """
    cfg = chart.config()
    rows = []
    for i in range(chart.m):
        e = chart.eta(i)
        ie = iota(e, cfg)
        nrm = max(complex_norm(ie, cfg), 1e-30)
        d_ie = d_total(ie, cfg)
        def xi_parts(off, pq):
            c = chart.config(off)
            return xi_field(c).parts[pq].data
        claim1 = 0.0
        for pq in d_ie.parts:
            fd = chart.fd_anti(lambda off, pq=pq: xi_parts(off, pq), i,
                               scale=2)
            claim1 = max(claim1, float(np.max(np.abs(
                d_ie.parts[pq].data - fd))))
        rows.append({
            "direction": i,
            "norm": complex_norm(ie, cfg),
            "claim1_residual": claim1,
            "claim2_residual": complex_norm(d_star(ie, cfg), cfg) / nrm,
            "d_residual": complex_norm(d_ie, cfg) / nrm,
        })
    return rows


def quaternion_suite(chart, pi_matrix=None):
    """Quaternionic action on the harmonic deformation space.

    Expresses iota in the eta-basis (conjugate-linearly), forms the real
    2m x 2m matrices of I, J, K and checks the quaternion relations, the
    pairing identity pi_{ik} = <eta_k, iota(eta_i)>, and non-degeneracy.
    """
    cfg = chart.config()
    m = chart.m
    etas = [chart.eta(i) for i in range(m)]
    G = chart.pw_metric()
    pairings = np.zeros((m, m), dtype=complex)   # P[j, i] = <iota eta_i, eta_j>
    for i in range(m):
        ie = iota(etas[i], cfg)
        for j in range(m):
            pairings[j, i] = complex_inner(ie, etas[j], cfg)
    # iota eta_i = sum_j C[j, i] eta_j ; <., eta_j> gives sum_k C[k,i] G[k,j]
    # least squares: degenerate charts have singular Gram matrices
    C = np.linalg.lstsq(G.T, pairings, rcond=None)[0]
    closure = 0.0
    for i in range(m):
        ie = iota(etas[i], cfg)
        for j in range(m):
            ie = ie - etas[j] * C[j, i]
        closure = max(closure, complex_norm(ie, cfg))
    alpha = C.real
    beta = C.imag
    Zm = np.zeros((m, m))
    Im_ = np.eye(m)
    I_mat = np.block([[Zm, -Im_], [Im_, Zm]])
    J_mat = np.block([[alpha, beta], [beta, -alpha]])
    K_mat = I_mat @ J_mat
    eye2m = np.eye(2 * m)
    rel = {
        "I2": float(np.max(np.abs(I_mat @ I_mat + eye2m))),
        "J2": float(np.max(np.abs(J_mat @ J_mat + eye2m))),
        "K2": float(np.max(np.abs(K_mat @ K_mat + eye2m))),
        "IJ_K": float(np.max(np.abs(I_mat @ J_mat - K_mat))),
        "JI_K": float(np.max(np.abs(J_mat @ I_mat + K_mat))),
    }
    # pairing identity: pi_{ik} = <eta_k, iota(eta_i)>
    pi_iota = np.zeros((m, m), dtype=complex)
    for i in range(m):
        ie = iota(etas[i], cfg)
        for k in range(m):
            pi_iota[i, k] = complex_inner(etas[k], ie, cfg)
    if pi_matrix is None:
        pi_matrix, _ = chart.sigma_forms()
    sv = np.linalg.svd(pi_iota, compute_uv=False)
    return {
        "closure_residual": closure,
        "relations": rel,
        "pi_from_iota": pi_iota,
        "pi_match": float(np.max(np.abs(pi_iota - pi_matrix))),
        "pi_smallest_singular_value": float(sv[-1]) if sv.size else 0.0,
        "even_dimension": (m % 2 == 0),
        "J_matrix": J_mat,
    }


def hyperkahler_forms(chart, sigma=None, scale=2):
    """Coefficient matrices of the three 2-forms and their closedness.

    omega_I is the metric form (coefficients G); the other two are the
    real and imaginary parts of the conjugate of the holomorphic
    symplectic pairing.  Closedness is measured by finite differences in
    the parameter."""
    G = chart.pw_metric()
    if sigma is None:
        pi0, _nu = chart.sigma_forms()
    else:
        pi0 = sigma
    m = chart.m
    def Gf(off):
        return chart.pw_metric(off)
    dG = np.zeros((m, m, m), dtype=complex)
    for k in range(m):
        dG[:, :, k] = chart.fd_hol(Gf, k, scale=scale)
    closed_I = 0.0
    for i in range(m):
        for j in range(m):
            for k in range(m):
                closed_I = max(closed_I, abs(dG[i, j, k] - dG[k, j, i]))
    def pif(off):
        return chart.sigma_forms(off)[0]
    dpi = np.zeros((m, m, m), dtype=complex)
    dpibar = np.zeros((m, m, m), dtype=complex)
    for l in range(m):
        dpi[:, :, l] = chart.fd_hol(pif, l, scale=scale)
        dpibar[:, :, l] = chart.fd_anti(pif, l, scale=scale)
    closed_pi = float(np.max(np.abs(dpibar))) if m else 0.0
    cyc = 0.0
    for i in range(m):
        for k in range(m):
            for l in range(m):
                cyc = max(cyc, abs(dpi[i, k, l] + dpi[k, l, i]
                                   + dpi[l, i, k]))
    return {
        "omega_I": G,
        "omega_J": np.conj(pi0).real,
        "omega_K": np.conj(pi0).imag,
        "closedness_I": closed_I,
        "closedness_pi_antiholomorphic": closed_pi,
        "closedness_pi_cyclic": cyc,
    }
