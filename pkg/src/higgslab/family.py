"""Finite-difference families of HYM configurations and moduli geometry.

A FamilyChart samples a polynomial family s -> (A(s), phi(s)) of Higgs
pairs on a lattice of parameter points around a centre, solves the HYM
equation at each sample, and differentiates the solved metrics to build

  * harmonic deformation representatives eta_i = (phi_{a;i} dz^a,
    R_{i b-bar} dz-bar^b),
  * the metric G_{i j-bar} = <eta_i, eta_j> and its derivatives,
  * the curvature tensor, by its two analytic formulas and by a
    finite-difference oracle from the metric alone,
  * the antisymmetric pairing pi, the 1-form nu, and the fibre integral
    identities.

Derivatives of the generator in s are analytic (it is polynomial); only
the solved metric h(s) is differentiated numerically.  Parameter samples
live on a lattice of quarter steps so that plain and Richardson stencils
at both epsilon and epsilon/2 share solves; the inner derivative of h is
always Richardson-refined so outer convergence orders stay clean.
"""

from __future__ import annotations

import numpy as np

from .complexes import (
    ComplexElement,
    HodgeSolver,
    c1_square,
    complex_inner,
    complex_norm,
    d_star,
    d_total,
    laplacian,
)
from .fields import FormField, l2_inner_product, wedge_product_trace
from .gauge import GaugeConfig
from .geometry import TorusGeometry
from .hym import determine_lambda, hym_flow, hym_residual, solve_direct_abelian


# -- family generators -----------------------------------------------------------


class FamilyGenerator:
    """Polynomial map s -> (A(s), phi(s)) built from a list of terms.

    Each term is a dict with keys: kind ('A' or 'phi'), direction (form
    index), powers (tuple of exponents in s^1..s^m), matrix (r x r), and
    optionally fourier, a list of (k-vector, coefficient) pairs giving an
    x-dependent scalar profile (constant 1 when absent).  Holomorphy in s
    is automatic.
    """

    def __init__(self, geom: TorusGeometry, rank: int, base_dim: int, terms):
        self.geom = geom
        self.rank = rank
        self.m = int(base_dim)
        self.terms = []
        for t in terms:
            kind = t["kind"]
            if kind not in ("A", "phi"):
                raise ValueError("term kind must be 'A' or 'phi'")
            direction = int(t["direction"])
            if not (0 <= direction < geom.n):
                raise ValueError("term direction out of range")
            powers = tuple(int(p) for p in t["powers"])
            if len(powers) != self.m or any(p < 0 for p in powers):
                raise ValueError("term powers must be m nonnegative ints")
            M = np.asarray(t["matrix"], dtype=complex)
            if M.shape != (rank, rank):
                raise ValueError("term matrix must be rank x rank")
            profile = self._profile(t.get("fourier"))
            self.terms.append((kind, direction, powers, M, profile))

    def _profile(self, fourier):
        if not fourier:
            return None
        geom = self.geom
        spec = np.zeros(geom.spatial_shape, dtype=complex)
        for kvec, coeff in fourier:
            kvec = tuple(int(k) % geom.N for k in kvec)
            spec[kvec] = complex(coeff)
        return np.fft.ifftn(spec) * geom.N ** (2 * geom.n)

    @staticmethod
    def _monomial(powers, s):
        out = 1.0 + 0.0j
        for p, si in zip(powers, s):
            out *= si ** p
        return out

    @staticmethod
    def _monomial_deriv(powers, s, i):
        if powers[i] == 0:
            return 0.0 + 0.0j
        out = powers[i] * s[i] ** (powers[i] - 1)
        for j, p in enumerate(powers):
            if j != i:
                out *= s[j] ** p
        return out

    def _assemble(self, s, kind, weight_fn, twist):
        geom = self.geom
        p, q = ((1, 0) if kind == "phi" else (0, 1))
        f = FormField.zeros(geom, self.rank, p, q, twist=twist)
        for (k, direction, powers, M, profile) in self.terms:
            if k != kind:
                continue
            w = weight_fn(powers, s)
            if w == 0:
                continue
            block = w * M
            idx = (direction, 0) if kind == "phi" else (0, direction)
            if profile is None:
                f.data[idx] += block
            else:
                f.data[idx] += profile[..., None, None] * block
        return f

    def A_at(self, s, twist=None):
        return self._assemble(s, "A", self._monomial, twist)

    def phi_at(self, s, twist=None):
        return self._assemble(s, "phi", self._monomial, twist)

    def dA_ds(self, s, i, twist=None):
        return self._assemble(s, "A",
                              lambda p, ss: self._monomial_deriv(p, ss, i),
                              twist)

    def dphi_ds(self, s, i, twist=None):
        return self._assemble(s, "phi",
                              lambda p, ss: self._monomial_deriv(p, ss, i),
                              twist)

    def is_diagonal(self):
        return all(np.max(np.abs(M - np.diag(np.diag(M)))) == 0
                   for (_, _, _, M, _) in self.terms)


# -- HYM solving at family points ----------------------------------------------------


def solve_hym(cfg: GaugeConfig, tol=1e-10, max_steps=2000, diagonal_hint=False):
    """Solve the HYM equation; exact per-entry spectral solve for diagonal
    configurations, metric flow otherwise.  Returns (config, method)."""
    res, _ = hym_residual(cfg)
    if res.sup_norm() <= tol:
        return cfg, "exact"
    if diagonal_hint and cfg.rank >= 1:
        solved = _solve_diagonal(cfg)
        if solved is not None:
            res, _ = hym_residual(solved)
            if res.sup_norm() <= tol:
                return solved, "direct-diagonal"
    solved, report = hym_flow(cfg, tol=tol, max_steps=max_steps)
    if not report.converged:
        raise RuntimeError(
            f"HYM flow failed: sup residual {report.residual_sup:.3e} "
            f"after {report.iterations} steps")
    return solved, "flow"


def _solve_diagonal(cfg):
    """Entrywise abelian solve for diagonal (A, phi); None if not diagonal."""
    geom = cfg.geom
    r = cfg.rank
    for f in (cfg.A, cfg.phi):
        offdiag = f.data * (1.0 - np.eye(r))
        if np.max(np.abs(offdiag)) > 0:
            return None
    h = np.zeros(geom.spatial_shape + (r, r), dtype=complex)
    for a in range(r):
        A1 = FormField.zeros(geom, 1, 0, 1)
        for ib in range(geom.n):
            A1.data[0, ib, ..., 0, 0] = cfg.A.data[0, ib, ..., a, a]
        phi1 = FormField.zeros(geom, 1, 1, 0)
        for ih in range(geom.n):
            phi1.data[ih, 0, ..., 0, 0] = cfg.phi.data[ih, 0, ..., a, a]
        sub = GaugeConfig(geom, 1, A1, phi1)
        solved = solve_direct_abelian(sub)
        h[..., a, a] = solved.h[..., 0, 0]
    sign, logdet = np.linalg.slogdet(h)
    h = h * np.exp(-np.mean(logdet.real) / r)
    return cfg.with_h(h)


# -- charts -----------------------------------------------------------------------------


class FamilyChart:
    """Solved finite-difference stencil of a holomorphic family.

    Parameter offsets are integer tuples of length 2m in units of step/4
    (real and imaginary parts per direction); all derived quantities are
    evaluated at the centre unless an offset is given.
    """

    def __init__(self, geom, rank, generator: FamilyGenerator, center=None,
                 step=1e-2, tol_hym=1e-11, max_steps=4000, twist=None,
                 scalar_curvature=None, kmax_kernel=None, cg_tol=1e-11):
        self.geom = geom
        self.rank = rank
        self.gen = generator
        self.m = generator.m
        self.center = np.zeros(self.m, dtype=complex) if center is None \
            else np.asarray(center, dtype=complex)
        self.step = float(step)
        self.unit = self.step / 4.0
        self.tol_hym = tol_hym
        self.max_steps = max_steps
        self.twist = twist
        self.scalar_curvature = scalar_curvature
        self.kmax_kernel = kmax_kernel
        self.cg_tol = cg_tol
        self._configs = {}
        self._thetas = {}
        self._etas = {}
        self._G = {}
        self._solvers = {}
        self.solve_count = 0
        self._diag_hint = generator.is_diagonal()

    # -- sampling ------------------------------------------------------------

    def point(self, off):
        s = self.center.copy()
        for u in range(self.m):
            s[u] += self.unit * (off[2 * u] + 1j * off[2 * u + 1])
        return s

    def _zero_off(self):
        return (0,) * (2 * self.m)

    def config(self, off=None) -> GaugeConfig:
        off = self._zero_off() if off is None else tuple(off)
        if off in self._configs:
            return self._configs[off]
        s = self.point(off)
        A = self.gen.A_at(s, self.twist)
        phi = self.gen.phi_at(s, self.twist)
        cfg = GaugeConfig(self.geom, self.rank, A, phi, twist=self.twist,
                          scalar_curvature=self.scalar_curvature)
        solved, _method = solve_hym(cfg, tol=self.tol_hym,
                                    max_steps=self.max_steps,
                                    diagonal_hint=self._diag_hint)
        self.solve_count += 1
        self._configs[off] = solved
        return solved

    def solve_all_first_order(self):
        """Solve centre and first-order stencil (the minimal chart)."""
        self.config()
        for u in range(self.m):
            for ax in (2 * u, 2 * u + 1):
                for sgn in (1, -1, 2, -2):
                    off = list(self._zero_off())
                    off[ax] = sgn
                    self.config(tuple(off))
        return self

    # -- finite differences over the lattice ------------------------------------

    def _shift(self, off, axis, amount):
        off2 = list(off)
        off2[axis] += amount
        return tuple(off2)

    def _fd_axis(self, F, axis, off, scale):
        plus = F(self._shift(off, axis, scale))
        minus = F(self._shift(off, axis, -scale))
        return (plus - minus) / (2.0 * scale * self.unit)

    def fd_hol(self, F, u, off=None, scale=2, richardson=False):
        off = self._zero_off() if off is None else tuple(off)
        def D(sc):
            dre = self._fd_axis(F, 2 * u, off, sc)
            dim = self._fd_axis(F, 2 * u + 1, off, sc)
            return 0.5 * (dre - 1j * dim)
        if richardson:
            return (4.0 * D(max(scale // 2, 1)) - D(scale)) / 3.0
        return D(scale)

    def fd_anti(self, F, u, off=None, scale=2, richardson=False):
        off = self._zero_off() if off is None else tuple(off)
        def D(sc):
            dre = self._fd_axis(F, 2 * u, off, sc)
            dim = self._fd_axis(F, 2 * u + 1, off, sc)
            return 0.5 * (dre + 1j * dim)
        if richardson:
            return (4.0 * D(max(scale // 2, 1)) - D(scale)) / 3.0
        return D(scale)

    # -- first-order family data ---------------------------------------------------

    def theta_base(self, i, off=None, scale=2, richardson=True):
        """Base-direction connection theta_i = -h^{-1} d_i h at a point."""
        off = self._zero_off() if off is None else tuple(off)
        key = (i, off, scale, richardson)
        if key in self._thetas:
            return self._thetas[key]
        h_of = lambda o: self.config(o).h
        dh = self.fd_hol(h_of, i, off, scale=scale, richardson=richardson)
        cfg = self.config(off)
        th = FormField.zeros(self.geom, self.rank, 0, 0, twist=self.twist)
        th.data[0, 0] = -(cfg.h_inv @ dh)
        self._thetas[key] = th
        return th

    def eta(self, i, off=None, scale=2, richardson=True) -> ComplexElement:
        """Harmonic Kodaira-Spencer representative at a stencil point."""
        off = self._zero_off() if off is None else tuple(off)
        key = (i, off, scale, richardson)
        if key in self._etas:
            return self._etas[key]
        geom = self.geom
        cfg = self.config(off)
        s = self.point(off)
        th = self.theta_base(i, off, scale, richardson)
        dphi = self.gen.dphi_ds(s, i, self.twist)
        a = FormField.zeros(geom, self.rank, 1, 0, twist=self.twist)
        for ih in range(geom.n):
            a.data[ih, 0] = dphi.data[ih, 0] + geom.commutator(
                cfg.phi.data[ih, 0], th.data[0, 0])
        dA = self.gen.dA_ds(s, i, self.twist)
        b = FormField.zeros(geom, self.rank, 0, 1, twist=self.twist)
        for ib in range(geom.n):
            b.data[0, ib] = (th.deriv_component(0, 0, ib, anti=True)
                             - dA.data[0, ib]
                             + geom.commutator(th.data[0, 0],
                                               cfg.A.data[0, ib]))
        el = ComplexElement.from_parts(1, [a, b])
        self._etas[key] = el
        return el

    def eta_cov(self, i, k, scale=2):
        """Covariant derivative eta_{i;k} at the centre (FD plus bracket)."""
        def part(pq):
            def F(off):
                return self.eta(i, off).parts[pq].data
            return F
        th_k = self.theta_base(k).data[0, 0]
        parts = {}
        for pq in ((1, 0), (0, 1)):
            data = self.fd_hol(part(pq), k, scale=scale)
            f = FormField.zeros(self.geom, self.rank, *pq, twist=self.twist)
            f.data = data + self.geom.commutator(
                self.eta(i).parts[pq].data, th_k[None, None])
            parts[pq] = f
        return ComplexElement(self.geom, self.rank, 1, parts, self.twist)

    def eta_cov_anti(self, i, j, scale=2):
        """Antiholomorphic derivative eta_{i;j-bar} at the centre."""
        parts = {}
        for pq in ((1, 0), (0, 1)):
            def F(off, pq=pq):
                return self.eta(i, off).parts[pq].data
            data = self.fd_anti(F, j, scale=scale)
            f = FormField.zeros(self.geom, self.rank, *pq, twist=self.twist)
            f.data = data
            parts[pq] = f
        return ComplexElement(self.geom, self.rank, 1, parts, self.twist)

    def base_curvature(self, i, j, scale=2, richardson=True):
        """R_{i j-bar} = d_j-bar theta_i at the centre, as a (0,0) field."""
        def F(off):
            return self.theta_base(i, off).data[0, 0]
        data = self.fd_anti(F, j, scale=scale, richardson=richardson)
        f = FormField.zeros(self.geom, self.rank, 0, 0, twist=self.twist)
        f.data[0, 0] = data
        return f

    # -- Hodge solvers at the centre ----------------------------------------------

    def solver(self, degree) -> HodgeSolver:
        if degree not in self._solvers:
            self._solvers[degree] = HodgeSolver(
                self.config(), degree, kmax=self.kmax_kernel,
                cg_tol=self.cg_tol)
        return self._solvers[degree]

    # -- metric ----------------------------------------------------------------------

    def pw_metric(self, off=None, scale=2):
        """G_{i j-bar} = <eta_i, eta_j> at a stencil point."""
        off = self._zero_off() if off is None else tuple(off)
        key = (off, scale)
        if key in self._G:
            return self._G[key]
        cfg = self.config(off)
        G = np.zeros((self.m, self.m), dtype=complex)
        etas = [self.eta(i, off, scale=scale) for i in range(self.m)]
        for i in range(self.m):
            for j in range(self.m):
                G[i, j] = complex_inner(etas[i], etas[j], cfg)
        G = 0.5 * (G + G.conj().T)
        self._G[key] = G
        return G

    def lambda_values(self):
        """determine_lambda across the first-order stencil."""
        vals = [determine_lambda(self.config())]
        for u in range(self.m):
            for ax in (2 * u, 2 * u + 1):
                for sgn in (2, -2):
                    off = list(self._zero_off())
                    off[ax] = sgn
                    vals.append(determine_lambda(self.config(tuple(off))))
        return vals

    def harmonicity_report(self):
        """||d eta_i|| and ||d* eta_i|| relative to ||eta_i||."""
        cfg = self.config()
        rows = []
        for i in range(self.m):
            e = self.eta(i)
            nrm = complex_norm(e, cfg)
            rows.append({
                "direction": i,
                "norm": nrm,
                "d_residual": complex_norm(d_total(e, cfg), cfg) / max(nrm, 1e-30),
                "dstar_residual": complex_norm(d_star(e, cfg), cfg) / max(nrm, 1e-30),
            })
        return rows

    # -- identity suite -----------------------------------------------------------------

    def box_source(self, i, j):
        """g^{b-bar a}([phi_{a;i}, phi*_{b;j}] + [R_{i b-bar}, R_{a j-bar}]).

        This is the bracket formula for the Laplacian of R_{i j-bar} (and
        for the metric contraction of eta_i wedge eta_j*)."""
        geom = self.geom
        cfg = self.config()
        ei = self.eta(i)
        ej = self.eta(j)
        out = FormField.zeros(geom, self.rank, 0, 0, twist=self.twist)
        for a in range(geom.n):
            for b in range(geom.n):
                w = geom.g_inv[b, a]
                if w == 0:
                    continue
                aj_star = cfg.star(ej.parts[(1, 0)])  # components (phi_{b;j})^*
                bj_star = cfg.star(ej.parts[(0, 1)])  # components (R_{j a-bar})^*
                out.data[0, 0] += w * (
                    geom.commutator(ei.parts[(1, 0)].data[a, 0],
                                    aj_star.data[0, b])
                    + geom.commutator(ei.parts[(0, 1)].data[0, b],
                                      bj_star.data[a, 0]))
        return out

    def identity_suite(self, scale=2):
        """Residual sups of the six first-order family identities."""
        geom = self.geom
        cfg = self.config()
        out = {}
        worst = {k: 0.0 for k in ("etasymm", "deta_ik", "formetastarik",
                                  "dRij", "boxR", "dstaretaij")}
        for i in range(self.m):
            for k in range(self.m):
                eik = self.eta_cov(i, k, scale=scale)
                if k >= i:
                    eki = self.eta_cov(k, i, scale=scale)
                    worst["etasymm"] = max(worst["etasymm"],
                                           (eik - eki).sup_norm())
                mc = d_total(eik, cfg) + c1_square(self.eta(i), self.eta(k))
                worst["deta_ik"] = max(worst["deta_ik"], mc.sup_norm())
                worst["formetastarik"] = max(worst["formetastarik"],
                                             d_star(eik, cfg).sup_norm())
        for i in range(self.m):
            for j in range(self.m):
                eij = self.eta_cov_anti(i, j, scale=scale)
                Rij = self.base_curvature(i, j, scale=scale, richardson=False)
                el0 = ComplexElement.from_parts(0, [Rij])
                worst["dRij"] = max(worst["dRij"],
                                    (eij - d_total(el0, cfg)).sup_norm())
                box = laplacian(el0, cfg)
                dse = d_star(eij, cfg)
                worst["boxR"] = max(worst["boxR"], (box - dse).sup_norm())
                src = self.box_source(i, j)
                worst["dstaretaij"] = max(
                    worst["dstaretaij"],
                    (dse.parts[(0, 0)] - src).sup_norm())
        return worst

    def refined(self):
        """A fresh chart at half the parameter step (its own solve cache).

        Halving the step halves the whole stencil, so every finite
        difference error, inner and outer, scales with its true order."""
        if getattr(self, "_refined", None) is None:
            self._refined = FamilyChart(
                self.geom, self.rank, self.gen, center=self.center,
                step=self.step / 2.0, tol_hym=self.tol_hym,
                max_steps=self.max_steps, twist=self.twist,
                scalar_curvature=self.scalar_curvature,
                kmax_kernel=self.kmax_kernel, cg_tol=self.cg_tol)
        return self._refined

    def identity_orders(self, floor=1e-8):
        """Residuals at step and step/2 with measured convergence orders.

        The refined residuals come from a chart rebuilt at half the step;
        identities satisfied exactly (below `floor` at both steps) report
        order nan and count as exact."""
        coarse = self.identity_suite(scale=4)
        fine = self.refined().identity_suite(scale=4)
        orders = {}
        for k in coarse:
            c, f = coarse[k], fine[k]
            if f > floor and c > floor:
                orders[k] = float(np.log2(c / f))
            else:
                orders[k] = float("nan")
        return {"coarse": coarse, "fine": fine, "orders": orders,
                "floor": floor}

    # -- Kaehler property ------------------------------------------------------------------

    def kahler_check(self, scale=2):
        cfg = self.config()
        def Gf(off):
            return self.pw_metric(off)
        dG = np.zeros((self.m, self.m, self.m), dtype=complex)
        for k in range(self.m):
            dG[:, :, k] = self.fd_hol(Gf, k, scale=scale)
        pairing = np.zeros_like(dG)
        for i in range(self.m):
            for k in range(self.m):
                eik = self.eta_cov(i, k, scale=scale)
                for j in range(self.m):
                    pairing[i, j, k] = complex_inner(eik, self.eta(j), cfg)
        fd_vs_pairing = float(np.max(np.abs(dG - pairing)))
        sym = 0.0
        for i in range(self.m):
            for j in range(self.m):
                for k in range(self.m):
                    sym = max(sym, abs(dG[i, j, k] - dG[k, j, i]))
        orth = 0.0
        for i in range(self.m):
            for j in range(self.m):
                for k in range(self.m):
                    Rjk = self.base_curvature(j, k, scale=scale)
                    el0 = ComplexElement.from_parts(0, [Rjk])
                    orth = max(orth, abs(complex_inner(
                        self.eta(i), d_total(el0, cfg), cfg)))
        return {"dG": dG, "fd_vs_pairing": fd_vs_pairing,
                "kahler_symmetry": sym, "orthogonality": orth}

    def normal_coordinate_check(self, scale=2):
        """Harmonic part of eta_{i;k} minus its Christoffel projection."""
        cfg = self.config()
        G = self.pw_metric()
        Ginv = np.linalg.inv(G)
        def Gf(off):
            return self.pw_metric(off)
        dG = np.zeros((self.m, self.m, self.m), dtype=complex)
        for k in range(self.m):
            dG[:, :, k] = self.fd_hol(Gf, k, scale=scale)
        hs = self.solver(1)
        worst = 0.0
        for i in range(self.m):
            for k in range(self.m):
                # Gamma^p_{ik} = G^{q-bar p} dG[i, q, k]
                gamma = np.array([
                    sum(Ginv[q, p] * dG[i, q, k] for q in range(self.m))
                    for p in range(self.m)])
                proj = hs.harmonic_project(self.eta_cov(i, k, scale=scale))
                for p in range(self.m):
                    proj = proj - self.eta(p) * gamma[p]
                worst = max(worst, complex_norm(proj, cfg))
        return worst

    # -- curvature ------------------------------------------------------------------------

    def _btr(self, x: FormField, y: FormField):
        """Bilinear integral of tr(x y) of two (0,0) fields (no conjugation)."""
        geom = self.geom
        prod = np.trace(x.data[0, 0] @ y.data[0, 0], axis1=-2, axis2=-1)
        return geom.integrate(prod)

    def curvature_eq112(self):
        cfg = self.config()
        m = self.m
        hs2 = self.solver(2)
        R = np.zeros((m, m, m, m), dtype=complex)
        Rb = [[self.base_curvature(i, j) for j in range(m)] for i in range(m)]
        box = [[laplacian(ComplexElement.from_parts(0, [Rb[k][l]]), cfg)
                .parts[(0, 0)] for l in range(m)] for k in range(m)]
        squares = [[c1_square(self.eta(i), self.eta(k)) for k in range(m)]
                   for i in range(m)]
        greens = [[hs2.green_apply(squares[j][l])[0] for l in range(m)]
                  for j in range(m)]
        for i in range(m):
            for j in range(m):
                for k in range(m):
                    for l in range(m):
                        term1 = self._btr(Rb[i][j], box[k][l]) \
                            + self._btr(Rb[i][l], box[k][j])
                        term3 = complex_inner(squares[i][k], greens[j][l], cfg)
                        R[i, j, k, l] = term1 - term3
        return R

    def curvature_eq111(self):
        cfg = self.config()
        m = self.m
        hs0 = self.solver(0)
        hs2 = self.solver(2)
        M = [[self.box_source(i, j) for j in range(m)] for i in range(m)]
        GM = [[hs0.green_apply(ComplexElement.from_parts(0, [M[i][j]]))[0]
               .parts[(0, 0)] for j in range(m)] for i in range(m)]
        squares = [[c1_square(self.eta(i), self.eta(k)) for k in range(m)]
                   for i in range(m)]
        greens = [[hs2.green_apply(squares[j][l])[0] for l in range(m)]
                  for j in range(m)]
        R = np.zeros((m, m, m, m), dtype=complex)
        for i in range(m):
            for j in range(m):
                for k in range(m):
                    for l in range(m):
                        term = self._btr(GM[i][j], M[k][l]) \
                            + self._btr(GM[i][l], M[k][j])
                        term3 = complex_inner(squares[i][k], greens[j][l], cfg)
                        R[i, j, k, l] = term - term3
        return R

    def curvature_fd_oracle(self, richardson=True):
        """Riemann tensor from G alone:
        R_{i j-bar k l-bar} = -d_k d_l-bar G_{i j-bar}
                              + G^{q-bar p} (d_k G_{i q-bar})(d_l-bar G_{p j-bar}).
        """
        m = self.m
        def Gf(off):
            return self.pw_metric(off)
        def dG_hol(off, k, sc):
            return self.fd_hol(Gf, k, off, scale=sc)
        def assemble(sc):
            G0 = Gf(self._zero_off())
            Ginv = np.linalg.inv(G0)
            dG = np.stack([self.fd_hol(Gf, k, scale=sc) for k in range(m)],
                          axis=-1)
            dGbar = np.stack([self.fd_anti(Gf, l, scale=sc) for l in range(m)],
                             axis=-1)
            d2 = np.zeros((m, m, m, m), dtype=complex)
            for k in range(m):
                for l in range(m):
                    d2[:, :, k, l] = self.fd_anti(
                        lambda off: dG_hol(off, k, sc), l, scale=sc)
            R = np.zeros((m, m, m, m), dtype=complex)
            for i in range(m):
                for j in range(m):
                    for k in range(m):
                        for l in range(m):
                            corr = 0.0 + 0.0j
                            for p in range(m):
                                for q in range(m):
                                    corr += Ginv[q, p] * dG[i, q, k] \
                                        * dGbar[p, j, l]
                            R[i, j, k, l] = -d2[i, j, k, l] + corr
            return R
        if richardson:
            return (4.0 * assemble(2) - assemble(4)) / 3.0
        return assemble(2)

    @staticmethod
    def curvature_symmetry_residual(R):
        m = R.shape[0]
        worst = 0.0
        for i in range(m):
            for j in range(m):
                for k in range(m):
                    for l in range(m):
                        worst = max(worst, abs(R[i, j, k, l] - R[k, j, i, l]))
                        worst = max(worst, abs(R[i, j, k, l] - R[i, l, k, j]))
                        worst = max(worst, abs(np.conj(R[i, j, k, l])
                                               - R[j, i, l, k]))
        return worst

    def curvature_sign_blocks(self):
        """Eigenvalues of the two Gram blocks in the curvature formula.

        The box-block <d R_{i j-bar}, d R_{k l-bar}> is positive
        semidefinite, the Green block <[eta_i ^ eta_k], G [eta_j ^ eta_l]>
        likewise (it enters the curvature with a minus sign)."""
        cfg = self.config()
        m = self.m
        hs2 = self.solver(2)
        rows = []
        boxblock = np.zeros((m * m, m * m), dtype=complex)
        for i in range(m):
            for j in range(m):
                dRij = d_total(ComplexElement.from_parts(
                    0, [self.base_curvature(i, j)]), cfg)
                for k in range(m):
                    for l in range(m):
                        dRkl = d_total(ComplexElement.from_parts(
                            0, [self.base_curvature(k, l)]), cfg)
                        boxblock[i * m + j, k * m + l] = complex_inner(
                            dRij, dRkl, cfg)
        greenblock = np.zeros((m * m, m * m), dtype=complex)
        for i in range(m):
            for k in range(m):
                sq = c1_square(self.eta(i), self.eta(k))
                gq = hs2.green_apply(sq)[0]
                for j in range(m):
                    for l in range(m):
                        sq2 = c1_square(self.eta(j), self.eta(l))
                        greenblock[i * m + k, j * m + l] = complex_inner(
                            sq2, gq, cfg)
        def mineig(B):
            B = 0.5 * (B + B.conj().T)
            return float(np.min(np.linalg.eigvalsh(B)))
        return {"box_block_min_eig": mineig(boxblock),
                "green_block_min_eig": mineig(greenblock)}

    def holomorphic_sectional(self, v, R=None):
        """R(v, v-bar, v, v-bar)/G(v, v-bar)^2 and the direct dR-formula."""
        if self.geom.n != 1:
            raise ValueError("holomorphic sectional check implemented for n=1")
        cfg = self.config()
        v = np.asarray(v, dtype=complex)
        G = self.pw_metric()
        gvv = 0.0 + 0.0j
        for i in range(self.m):
            for j in range(self.m):
                gvv += v[i] * np.conj(v[j]) * G[i, j]
        if abs(gvv) < 1e-12:
            raise ValueError("direction is ineffective")
        if R is None:
            R = self.curvature_eq112()
        rv = 0.0 + 0.0j
        for i in range(self.m):
            for j in range(self.m):
                for k in range(self.m):
                    for l in range(self.m):
                        rv += (v[i] * np.conj(v[j]) * v[k] * np.conj(v[l])
                               * R[i, j, k, l])
        # direct route: R_vv = sum v_i conj(v_j) R_{i j-bar}; value 2 ||d R_vv||^2
        Rvv = FormField.zeros(self.geom, self.rank, 0, 0, twist=self.twist)
        for i in range(self.m):
            for j in range(self.m):
                Rvv.data[0, 0] += (v[i] * np.conj(v[j])
                                   * self.base_curvature(i, j).data[0, 0])
        dRvv = d_total(ComplexElement.from_parts(0, [Rvv]), cfg)
        direct = 2.0 * complex_inner(dRvv, dRvv, cfg).real
        denom = gvv.real ** 2
        return {"sectional": rv.real / denom,
                "direct": direct / denom,
                "difference": abs(rv.real - direct) / max(denom, 1e-30)}

    # -- sigma forms ----------------------------------------------------------------------

    def sigma_forms(self, off=None):
        """The pairing matrix pi_{ik} and the 1-form nu_i at a point."""
        geom = self.geom
        cfg = self.config(off)
        m = self.m
        etas = [self.eta(i, off) for i in range(m)]
        pi = np.zeros((m, m), dtype=complex)
        for i in range(m):
            for k in range(m):
                if i == k:
                    continue
                total = 0.0 + 0.0j
                for a in range(geom.n):
                    for b in range(geom.n):
                        w = geom.g_inv[b, a]
                        if w == 0:
                            continue
                        ai = etas[i].parts[(1, 0)].data[a, 0]
                        bk = etas[k].parts[(0, 1)].data[0, b]
                        ak = etas[k].parts[(1, 0)].data[a, 0]
                        bi = etas[i].parts[(0, 1)].data[0, b]
                        tr = np.trace(ai @ bk - ak @ bi, axis1=-2, axis2=-1)
                        total += w * geom.integrate(tr)
                pi[i, k] = total
        nu = np.zeros(m, dtype=complex)
        for i in range(m):
            total = 0.0 + 0.0j
            for a in range(geom.n):
                for b in range(geom.n):
                    w = geom.g_inv[b, a]
                    if w == 0:
                        continue
                    tr = np.trace(cfg.phi.data[a, 0]
                                  @ etas[i].parts[(0, 1)].data[0, b],
                                  axis1=-2, axis2=-1)
                    total += w * geom.integrate(tr)
            nu[i] = 2.0 * total
        return pi, nu

    def sigma_report(self, scale=2):
        """pi/nu with the d nu = c pi constant and holomorphy residuals."""
        pi0, nu0 = self.sigma_forms()
        m = self.m
        def nu_f(off):
            return self.sigma_forms(off)[1]
        def pi_f(off):
            return self.sigma_forms(off)[0]
        dnu = np.zeros((m, m), dtype=complex)   # dnu[i, k] = d_i nu_k
        for i in range(m):
            dnu[i, :] = self.fd_hol(nu_f, i, scale=scale)
        curl = dnu - dnu.T                       # d_i nu_k - d_k nu_i
        # curl[i,k] should equal c * pi_{ik}; least squares for c
        num = complex(np.sum(curl * np.conj(pi0)))
        den = float(np.sum(np.abs(pi0) ** 2))
        c = num / den if den > 1e-20 else 0.0 + 0.0j
        resid = float(np.max(np.abs(curl - (c * pi0 if den > 1e-20 else 0))))
        anti_hol_nu = 0.0
        anti_hol_pi = 0.0
        for l in range(m):
            anti_hol_nu = max(anti_hol_nu, float(np.max(np.abs(
                self.fd_anti(nu_f, l, scale=scale)))))
            anti_hol_pi = max(anti_hol_pi, float(np.max(np.abs(
                self.fd_anti(pi_f, l, scale=scale)))))
        return {
            "pi": pi0, "nu": nu0,
            "antisymmetry": float(np.max(np.abs(pi0 + pi0.T))),
            "dnu_constant": c,
            "dnu_residual": resid,
            "nu_antiholomorphic": anti_hol_nu,
            "pi_antiholomorphic": anti_hol_pi,
        }

    # -- fibre integral ----------------------------------------------------------------------

    def chi_value(self, off=None):
        geom = self.geom
        cfg = self.config(off)
        total = 0.0 + 0.0j
        phistar = cfg.star(cfg.phi)
        for a in range(geom.n):
            for b in range(geom.n):
                w = geom.g_inv[b, a]
                if w == 0:
                    continue
                tr = np.trace(cfg.phi.data[a, 0] @ phistar.data[0, b],
                              axis1=-2, axis2=-1)
                total += w * geom.integrate(tr)
        return float(total.real)

    def fiber_integral_form(self, scale=2):
        """The three fibre integrals assembled as a candidate for G.

        Term 1 contracts the curvature square of the total family metric,
        term 2 is the lambda correction, term 3 is the complex Hessian of
        chi (the displayed 1/2 together with the two orderings inside
        tr(phi ^ phi*) makes its effective coefficient 1).
        """
        geom = self.geom
        cfg = self.config()
        m = self.m
        lam = determine_lambda(cfg)
        Rfib = cfg.curvature()
        G1 = np.zeros((m, m), dtype=complex)
        G2 = np.zeros((m, m), dtype=complex)
        for i in range(m):
            ei = self.eta(i)
            for j in range(m):
                ej = self.eta(j)
                Rij = self.base_curvature(i, j)
                # -i g^{b-bar a} [tr(R_{a b-bar} R_{i j-bar})
                #                 - tr(R_{i b-bar} R_{a j-bar})], then / i
                acc = 0.0 + 0.0j
                for a in range(geom.n):
                    for b in range(geom.n):
                        w = geom.g_inv[b, a]
                        if w == 0:
                            continue
                        t1 = np.trace(Rfib.data[a, b] @ Rij.data[0, 0],
                                      axis1=-2, axis2=-1)
                        Raj = cfg.star(ej.parts[(0, 1)])  # (R_{j a-bar})^*
                        t2 = np.trace(ei.parts[(0, 1)].data[0, b]
                                      @ Raj.data[a, 0], axis1=-2, axis2=-1)
                        acc += w * geom.integrate(t1 - t2)
                G1[i, j] = -acc
                trRij = np.trace(Rij.data[0, 0], axis1=-2, axis2=-1)
                G2[i, j] = lam * geom.integrate(trRij)
        def chi_f(off):
            return np.array(self.chi_value(off))
        G3 = np.zeros((m, m), dtype=complex)
        for i in range(m):
            def dchi(off, i=i):
                return self.fd_hol(chi_f, i, off, scale=scale)
            for j in range(m):
                G3[i, j] = complex(self.fd_anti(dchi, j, scale=scale))
        total = G1 + G2 + G3
        return {"curvature_term": G1, "lambda_term": G2, "hessian_term": G3,
                "total": total}


# -- Chern character forms ------------------------------------------------------------------


def chern_forms(cfg: GaugeConfig):
    """First Chern form and the degree-4 Chern character form.

    c1 = (i/2pi) tr Omega as a scalar (1,1)-form; ch2 = (1/2) tr((i/2pi
    Omega)^2), nonzero only for n = 2."""
    geom = cfg.geom
    R = cfg.curvature()
    c1 = FormField.zeros(geom, 1, 1, 1)
    for ih in range(geom.n):
        for ia in range(geom.n):
            c1.data[ih, ia, ..., 0, 0] = (1j / (2 * np.pi)) * np.trace(
                R.data[ih, ia], axis1=-2, axis2=-1)
    ch2 = None
    if geom.n == 2:
        scaled = R._like(data=(1j / (2 * np.pi)) * R.data)
        ch2 = wedge_product_trace(scaled, scaled, dealias=False)
        ch2 = ch2 * 0.5
    return c1, ch2


def c1_slope_integral(cfg: GaugeConfig):
    """int c1 wedge omega^{n-1}/(n-1)!; equals lambda rank Vol / (2 pi)."""
    geom = cfg.geom
    c1, _ = chern_forms(cfg)
    total = 0.0 + 0.0j
    for ih, (a,) in enumerate(geom.combos[1]):
        for ia, (b,) in enumerate(geom.combos[1]):
            # (1,1)-form against omega^{n-1}/(n-1)!: -i g^{b-bar a} u_{a b-bar}
            total += -1j * geom.g_inv[b, a] * geom.integrate(
                c1.data[ih, ia, ..., 0, 0])
    return float(total.real)
