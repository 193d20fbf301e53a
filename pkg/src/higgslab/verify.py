"""The verification table: every checked identity carries an anchor tag.

Each row records (name, anchor, residual, tolerance, passed).  The anchor
tags form a fixed registry; the union of tags emitted by the bundled
scenarios must equal the registry exactly (coverage is itself a test).
"""

from __future__ import annotations

import numpy as np

from .complexes import (
    ComplexElement,
    canonical_h2_class,
    check_parallel_endomorphism,
    complex_inner,
    complex_norm,
    d_bar_star_field,
    d_star,
    d_total,
    trace_free_split,
)
from .family import FamilyChart, c1_slope_integral
from .fields import (
    FormField,
    identity_section,
    lambda_contract,
    random_band_limited,
    tilde_lambda_bracket,
    wedge_bracket,
)
from .gauge import GaugeConfig
from .geometry import TorusGeometry
from .hym import determine_lambda, hym_residual
from .hyperkahler import (
    check_assumptions,
    iota,
    iota_harmonic_report,
    hyperkahler_forms,
    quaternion_suite,
    xi_report,
)

ANCHORS = (
    "eq:integrability", "eq:hermein",
    "eq:de-cr", "lem:parallel", "eq:dstar0", "eq:dstar1", "eq:defetai",
    "lem:decomp", "lem:lale",
    "eq:etasymm", "eq:deta_ik", "eq:formetastarik", "eq:dRij", "eq:boxR",
    "eq:dstaretaij",
    "eq:gpw", "prop:ka", "cor:normalcoord",
    "eq:111", "eq:112", "cor:co1",
    "eq:pwfib", "eq:lambda-const", "eq:ch", "eq:chi",
    "eq:pi", "eq:dnu-pi", "prop:fiber-vanish",
    "eq:projflat", "eq:aprime", "eq:h2", "eq:iota",
    "claim:1", "claim:2", "claim:3", "claim:4",
    "cor:pi-nondegen", "eq:quaternion", "thm:tf", "prop:bprime",
)

# the tolerance floor below which a family identity counts as exactly
# satisfied (no measurable truncation signal to fit an order to)
EXACT_FLOOR = 1e-7


def row(name, anchor, residual, tolerance, note=None, passed=None):
    if passed is None:
        passed = bool(residual <= tolerance)
    out = {"name": name, "anchor": anchor, "residual": float(residual),
           "tolerance": float(tolerance), "passed": bool(passed)}
    if note is not None:
        out["note"] = note
    return out


def random_config(geom, rank, rng, scale=0.3, constant_h=True):
    """Band-limited random configuration for operator-level trials."""
    A = random_band_limited(geom, rng, rank, 0, 1, 1, scale=scale)
    phi = random_band_limited(geom, rng, rank, 1, 0, 1, scale=scale)
    if constant_h:
        hp = (rng.standard_normal((rank, rank))
              + 1j * rng.standard_normal((rank, rank))) * 0.2
        h0 = np.eye(rank) + 0.5 * (hp + hp.conj().T)
        vals = np.linalg.eigvalsh(h0)
        if vals.min() < 0.2:
            h0 = h0 + (0.25 - vals.min()) * np.eye(rank)
        h = np.broadcast_to(h0, geom.spatial_shape + (rank, rank)).copy()
    else:
        hp = random_band_limited(geom, rng, rank, 0, 0, 1, scale=0.1)
        pert = 0.5 * (hp.data[0, 0]
                      + np.conj(np.swapaxes(hp.data[0, 0], -1, -2)))
        h = np.broadcast_to(np.eye(rank, dtype=complex),
                            geom.spatial_shape + (rank, rank)) + pert
    return GaugeConfig(geom, rank, A, phi, h)


def random_element(geom, rank, degree, rng, kmax=None):
    if kmax is None:
        kmax = 2 if geom.n == 1 else 1
    x = ComplexElement(geom, rank, degree)
    for (p, q) in x.parts:
        x.parts[(p, q)] = random_band_limited(geom, rng, rank, p, q, kmax)
    return x


def adjointness_trial(geom, rank, rng, faults=()):
    """One adjointness residual pair for (d0, d0*) and (d1, d1*)."""
    cfg = random_config(geom, rank, rng)
    out = []
    for degree in (0, 1):
        x = random_element(geom, rank, degree, rng)
        y = random_element(geom, rank, degree + 1, rng)
        lhs = complex_inner(d_total(x, cfg), y, cfg)
        ds = d_star(y, cfg)
        if degree == 0 and "dstar0-sign" in faults:
            ds = -1.0 * ds
        rhs = complex_inner(x, ds, cfg)
        out.append(abs(lhs - rhs) / (abs(lhs) + abs(rhs) + 1e-30))
    return out


def displayed_adjoint_residual(geom, rank, rng):
    """Literal adjoint displays against the assembled adjoint operators."""
    cfg = random_config(geom, rank, rng)
    a = random_band_limited(geom, rng, rank, 1, 0, 1)
    b = random_band_limited(geom, rng, rank, 0, 1, 1)
    el = ComplexElement.from_parts(1, [a, b])
    mine = d_star(el, cfg).parts[(0, 0)]
    phistar = cfg.star(cfg.phi)
    disp = -1.0 * lambda_contract(wedge_bracket(a, phistar, dealias=False)) \
        + d_bar_star_field(b, cfg)
    r0 = (mine - disp).sup_norm() / max(mine.sup_norm(), 1e-30)
    v = random_band_limited(geom, rng, rank, 1, 1, 1)
    el2 = ComplexElement(geom, rank, 2, {(1, 1): v})
    mine2 = d_star(el2, cfg)
    disp01 = tilde_lambda_bracket(v, phistar)
    r1 = (mine2.parts[(0, 1)] - disp01).sup_norm() \
        / max(disp01.sup_norm(), 1e-30)
    return r0, r1


def verify_scenario(scn, chart: FamilyChart, faults=(), trials=8):
    """Assemble the verification rows for one scenario."""
    rows = []
    geom = chart.geom
    rank = chart.rank
    cfg = chart.config()
    rng = np.random.default_rng(np.random.Philox(scn["seed"]))
    tol_harm = scn["solver"]["tol_harm"]
    tol_hym = scn["solver"]["tol_hym"]

    # configuration-level identities
    rows.append(row("Higgs field integrability", "eq:integrability",
                    cfg.integrability_residual(), 1e-12))
    res, lam = hym_residual(cfg)
    rows.append(row("HYM equation residual at centre", "eq:hermein",
                    res.sup_norm(), 10 * tol_hym))

    # operator-level randomised identities
    worst_d0 = worst_d1 = worst_dd = 0.0
    for _ in range(trials):
        r0, r1 = adjointness_trial(geom, rank, rng, faults)
        worst_d0 = max(worst_d0, r0)
        worst_d1 = max(worst_d1, r1)
    for _ in range(max(2, trials // 2)):
        f = random_band_limited(geom, rng, rank, 0, 0,
                                2 if geom.n == 1 else 1)
        dd = d_total(d_total(ComplexElement.from_parts(0, [f]), cfg), cfg)
        worst_dd = max(worst_dd, dd.sup_norm() / max(f.sup_norm(), 1e-30))
    disp0, disp1 = displayed_adjoint_residual(geom, rank, rng)
    rows.append(row("double complex d o d = 0", "eq:de-cr", worst_dd, 1e-10))
    rows.append(row("degree-0 adjoint identity", "eq:dstar0",
                    max(worst_d0, disp0), 1e-10))
    rows.append(row("degree-1 adjoint identity", "eq:dstar1",
                    max(worst_d1, disp1), 1e-10))

    # parallel holomorphic endomorphisms
    par = check_parallel_endomorphism(identity_section(geom, rank,
                                                       cfg.twist), cfg)
    worst_par = par["parallel_residual"]
    if rank == 2 and chart._diag_hint:
        sigma = FormField.constant(geom, rank, 0, 0, np.diag([1.0, -1.0]),
                                   twist=cfg.twist)
        par2 = check_parallel_endomorphism(sigma, cfg)
        if max(par2["dbar_residual"], par2["phi_commutator_residual"]) < 1e-8:
            worst_par = max(worst_par, par2["parallel_residual"])
    rows.append(row("holomorphic endomorphisms parallel", "lem:parallel",
                    worst_par, 1e-10))

    # trace decomposition
    x1 = random_element(geom, rank, 1, rng)
    tf, sc = trace_free_split(x1)
    orth = abs(complex_inner(tf, sc, cfg))
    equiv = (trace_free_split(d_total(x1, cfg))[0]
             - d_total(tf, cfg)).sup_norm()
    rows.append(row("trace-free decomposition orthogonal, d-equivariant",
                    "lem:decomp", max(orth, equiv), 1e-10))

    # canonical degree-2 class
    eps = canonical_h2_class(cfg)
    lale = d_total(eps, cfg).sup_norm() + d_star(eps, cfg).sup_norm()
    norm2 = complex_inner(eps, eps, cfg).real
    expected = geom.n * rank * geom.volume
    lale = max(lale, abs(norm2 - expected) / expected)
    rows.append(row("canonical class closed and coclosed", "lem:lale",
                    lale, 1e-12))

    # harmonic deformation representatives
    harm = max(max(r["d_residual"], r["dstar_residual"])
               for r in chart.harmonicity_report())
    rows.append(row("deformation representatives harmonic", "eq:defetai",
                    harm, tol_harm))

    # metric positivity / hermiticity
    G = chart.pw_metric()
    gh = float(np.max(np.abs(G - G.conj().T)))
    gmin = float(np.min(np.linalg.eigvalsh(0.5 * (G + G.conj().T))))
    rows.append(row("deformation metric hermitian positive", "eq:gpw",
                    max(gh, -min(gmin, 0.0)), 1e-10,
                    note=f"smallest eigenvalue {gmin:.3e}"))

    # lambda constant along the family
    lams = chart.lambda_values()
    rows.append(row("slope constant across the stencil", "eq:lambda-const",
                    max(lams) - min(lams), 1e-10))

    # identity suite with measured orders (chart rebuilt at half step)
    idrep = chart.identity_orders()
    names = {
        "etasymm": "symmetry of covariant derivatives",
        "deta_ik": "Maurer-Cartan identity for covariant derivatives",
        "formetastarik": "covariant derivatives coclosed",
        "dRij": "mixed curvature potential identity",
        "boxR": "Laplace equation of the mixed curvature",
        "dstaretaij": "bracket formula for the curvature Laplacian",
    }
    floor = idrep["floor"]
    for key, label in names.items():
        coarse = idrep["coarse"][key]
        fine = idrep["fine"][key]
        order = idrep["orders"][key]
        if fine <= floor and coarse <= floor:
            passed = True
            note = "exact below floor"
        else:
            passed = (order >= 1.9) and coarse <= 1e-2
            note = f"order {order:.2f}"
        rows.append(row(label, "eq:" + key, fine,
                        max(floor, coarse), note=note, passed=passed))

    # Kaehler property (same two-chart order measurement)
    kc = chart.kahler_check(scale=4)
    kcf = chart.refined().kahler_check(scale=4)
    ka_res = max(kcf["fd_vs_pairing"], kcf["kahler_symmetry"])
    ka_coarse = max(kc["fd_vs_pairing"], kc["kahler_symmetry"])
    if ka_res <= floor and ka_coarse <= floor:
        ka_pass, ka_note = True, "exact below floor"
    else:
        order = float(np.log2(ka_coarse / max(ka_res, 1e-300)))
        ka_pass, ka_note = order >= 1.9, f"order {order:.2f}"
    rows.append(row("metric derivative pairing (Kaehler property)", "prop:ka",
                    ka_res, max(floor, ka_coarse), note=ka_note,
                    passed=ka_pass))
    rows.append(row("harmonic projections vanish in normal coordinates",
                    "cor:normalcoord", chart.normal_coordinate_check(),
                    max(EXACT_FLOOR, 100 * chart.step ** 2)))
    orth = kc["orthogonality"]
    rows.append(row("first-derivative orthogonality", "prop:ka",
                    orth, max(EXACT_FLOOR, 10 * chart.step ** 2)))

    # curvature
    if "pw-curvature" in scn["tasks"]:
        R112 = chart.curvature_eq112()
        R111 = chart.curvature_eq111()
        oracle = chart.curvature_fd_oracle()
        scale_G = float(np.max(np.abs(G)))
        floor = 1e-2 * scale_G ** 2
        agree = float(np.max(np.abs(R111 - R112)))
        rel = float(np.max(np.abs(R112 - oracle))
                    / max(np.max(np.abs(R112)), np.max(np.abs(oracle)),
                          floor))
        rows.append(row("curvature: operator form vs explicit form",
                        "eq:111", agree / max(scale_G ** 2, 1e-30), 1e-6))
        rows.append(row("curvature vs finite-difference oracle", "eq:112",
                        rel, 1e-3))
        rows.append(row("curvature symmetries", "eq:112",
                        chart.curvature_symmetry_residual(R112)
                        / max(scale_G ** 2, 1e-30), 1e-6))
        blocks = chart.curvature_sign_blocks()
        rows.append(row("curvature sign blocks semidefinite", "eq:112",
                        max(-blocks["box_block_min_eig"],
                            -blocks["green_block_min_eig"], 0.0), 1e-9))
        if geom.n == 1:
            worst = 0.0
            worst_diff = 0.0
            count = 0
            for _ in range(24):
                v = rng.standard_normal(chart.m) \
                    + 1j * rng.standard_normal(chart.m)
                try:
                    sec = chart.holomorphic_sectional(v, R=R112)
                except ValueError:
                    continue
                count += 1
                worst = min(worst, sec["sectional"])
                worst_diff = max(worst_diff, sec["difference"])
            rows.append(row("holomorphic sectional curvature non-negative",
                            "cor:co1", max(-worst, worst_diff), 1e-6,
                            note=f"{count} directions"))
    else:
        rows.append(row("curvature: operator form vs explicit form",
                        "eq:111", 0.0, 1.0, note="task disabled",
                        passed=True))
        rows.append(row("curvature vs finite-difference oracle", "eq:112",
                        0.0, 1.0, note="task disabled", passed=True))
        if geom.n == 1:
            rows.append(row("holomorphic sectional curvature non-negative",
                            "cor:co1", 0.0, 1.0, note="task disabled",
                            passed=True))

    # fibre integral and Chern data
    if "fiber-integral" in scn["tasks"]:
        fib = chart.fiber_integral_form()
        scale_G = float(np.max(np.abs(G)))
        rows.append(row("fibre integral reproduces the metric", "eq:pwfib",
                        float(np.max(np.abs(fib["total"] - G))) / scale_G,
                        1e-3))
    else:
        rows.append(row("fibre integral reproduces the metric", "eq:pwfib",
                        0.0, 1.0, note="task disabled", passed=True))
    slope = c1_slope_integral(cfg)
    lam_check = abs(2 * np.pi * slope - lam * rank * geom.volume)
    rows.append(row("first Chern form consistent with the slope", "eq:ch",
                    lam_check / max(1.0, abs(lam) * rank * geom.volume),
                    1e-9))
    chi0 = chart.chi_value()
    rows.append(row("Higgs norm functional non-negative", "eq:chi",
                    max(-chi0, 0.0), 1e-12,
                    note=f"chi = {chi0:.6e}"))

    # sigma forms
    sg = chart.sigma_report()
    rows.append(row("pairing form antisymmetric and holomorphic", "eq:pi",
                    max(sg["antisymmetry"], sg["pi_antiholomorphic"],
                        sg["nu_antiholomorphic"]),
                    max(EXACT_FLOOR, 100 * chart.step ** 2)))
    rows.append(row("potential equation d nu = c pi", "eq:dnu-pi",
                    sg["dnu_residual"], max(EXACT_FLOOR,
                                            100 * chart.step ** 2),
                    note=f"c = {sg['dnu_constant'].real:.6f}"))
    if not any(t["kind"] == "A" for t in scn["family"]["terms"]):
        fib_res = max(float(np.max(np.abs(sg["pi"]))),
                      float(np.max(np.abs(sg["nu"]))))
        rows.append(row("forms vanish on pure Higgs families",
                        "prop:fiber-vanish", fib_res, 1e-9))

    # hyper-Kaehler block
    if "hyperkahler" in scn["tasks"]:
        assum, solver2 = check_assumptions(cfg, kmax=chart.kmax_kernel)
        rows.append(row("projective flatness residual", "eq:projflat",
                        assum["proj_flat_residual"], 1e-8))
        rows.append(row("Higgs field symmetric derivative", "eq:aprime",
                        assum["dbar_theta_sym_residual"], 1e-8))
        gap_ok = assum["h2_spectral_gap"] >= 100.0
        rows.append(row("degree-2 kernel contains the canonical line",
                        "eq:h2", 0.0 if (assum["h2_dim_estimate"] >= 1
                                         and gap_ok) else 1.0, 0.5,
                        note=f"dim {assum['h2_dim_estimate']}, gap "
                             f"{assum['h2_spectral_gap']:.2e}"))
        tf_applicable = assum["h2_dim_estimate"] == 1
        rows.append(row("trace-free degree-2 kernel estimate", "prop:bprime",
                        0.0 if (assum["h2_tracefree_gap"] >= 100.0
                                or assum["h2_tracefree_dim"] == 0) else 1.0,
                        0.5,
                        note=f"dim {assum['h2_tracefree_dim']}"))
        e0 = chart.eta(0)
        i2 = iota(iota(e0, cfg), cfg) + e0
        iso = abs(complex_norm(iota(e0, cfg), cfg) - complex_norm(e0, cfg)) \
            / max(complex_norm(e0, cfg), 1e-30)
        rows.append(row("involution squares to minus one, isometric",
                        "eq:iota", max(i2.sup_norm(), iso), 1e-12))
        xr, _ = xi_report(cfg, solver2)
        claim_tol = 1e-7 + 10.0 * assum["proj_flat_residual"] \
            + 100 * chart.step ** 2
        ih = iota_harmonic_report(chart)
        rows.append(row("derivative of the involution image", "claim:1",
                        max(r["claim1_residual"] for r in ih), claim_tol))
        rows.append(row("involution image coclosed", "claim:2",
                        max(r["claim2_residual"] for r in ih), claim_tol))
        rows.append(row("obstruction field closed", "claim:3",
                        xr["d_xi"], claim_tol))
        rows.append(row("obstruction field coclosed", "claim:4",
                        xr["dstar_xi"], claim_tol))
        qs = quaternion_suite(chart, pi_matrix=sg["pi"])
        eta_scale = max(complex_norm(chart.eta(i), cfg)
                        for i in range(chart.m))
        closed_chart = qs["closure_residual"] <= 1e-6 * max(eta_scale, 1e-30)
        if closed_chart and qs["even_dimension"]:
            rows.append(row("quaternion relations on the harmonic basis",
                            "eq:quaternion", max(qs["relations"].values()),
                            1e-9))
            nondeg = 0.0 if qs["pi_smallest_singular_value"] > 1e-8 else 1.0
            rows.append(row("symplectic pairing non-degenerate, matches"
                            " sigma", "cor:pi-nondegen",
                            max(qs["pi_match"], nondeg), 1e-9,
                            note=f"smallest singular value "
                                 f"{qs['pi_smallest_singular_value']:.3e}"))
        else:
            note = "not applicable: chart not closed under the involution" \
                if not closed_chart else "not applicable: odd chart dimension"
            rows.append(row("quaternion relations on the harmonic basis",
                            "eq:quaternion", 0.0, 1.0, note=note,
                            passed=True))
            rows.append(row("symplectic pairing non-degenerate, matches"
                            " sigma", "cor:pi-nondegen", qs["pi_match"],
                            1e-9, note=note))
        hk = hyperkahler_forms(chart, sigma=sg["pi"])
        hk_res = max(hk["closedness_I"], hk["closedness_pi_cyclic"],
                     hk["closedness_pi_antiholomorphic"])
        if tf_applicable:
            rows.append(row("hyper-Kaehler 2-forms closed", "thm:tf",
                            hk_res, max(EXACT_FLOOR, 100 * chart.step ** 2)))
        else:
            rows.append(row("hyper-Kaehler 2-forms closed", "thm:tf",
                            0.0, 1.0, passed=True,
                            note="not applicable: degree-2 kernel not 1"))
    return rows
