"""The single complex of the Higgs double complex, its Hodge theory.

Elements of degree r collect the (p, q)-parts with p + q = r.  The
differential is

    d = d''  +  (-1)^{q+1} d'

with d'' the twisted Dolbeault operator and d'(chi) = [chi, phi].  In the
increasing-multi-index component convention both pieces reduce to one sign
rule each:

    (d_hol f)_{sort(aI), J}  +=  - s_end(a, I) [f_{IJ}, phi_a]
    (d_bar f)_{I, sort(bJ)}  +=  (-1)^p t_front(b, J) f_{IJ; b-bar}

where s_end(a, I) sorts (I..., a) and t_front(b, J) sorts (b, J...).  The
(-1)^{q+1} twist of d' cancels against the reordering sign, which is why no
q appears in the first rule.  Adjoints are assembled blockwise as the exact
grid adjoints of these operators, using the compound Gram matrices of
g^{-1} for the form indices and the conjugated-derivative trick for the
fibre metric, so that adjointness holds at machine precision even for
fibre metrics that are not band limited.

Degree-1 elements x = (a, b), y = (c, d) carry the bracket square

    x ^ y := ( -[a ^ c],  [a ^ d] + [b ^ c],  [b ^ d] )

whose signs are fixed by the Maurer-Cartan identity for covariant
derivatives of harmonic deformation representatives:
d eta_{i;k} + eta_i ^ eta_k = 0.
"""

from __future__ import annotations

import numpy as np

from .fields import (
    FormField,
    kahler_form_field,
    l2_inner_product,
    trace_free,
    trace_part,
    wedge_bracket,
)
from .gauge import GaugeConfig
from .geometry import insertion_sign_end, insertion_sign_front


def valid_bidegrees(degree, n):
    return [(p, degree - p) for p in range(degree, -1, -1)
            if p <= n and degree - p <= n]


class ComplexElement:
    """Element of C^r = direct sum of C^{p,q} with p + q = r (r <= 2n)."""

    def __init__(self, geom, rank, degree, parts=None, twist=None):
        # degree 2n+1 is allowed as the empty target of the top differential
        if not (0 <= degree <= 2 * geom.n + 1):
            raise ValueError("unsupported degree")
        self.geom = geom
        self.rank = rank
        self.degree = degree
        self.twist = twist
        self.parts = {}
        for (p, q) in valid_bidegrees(degree, geom.n):
            if parts and (p, q) in parts:
                f = parts[(p, q)]
                if (f.p, f.q) != (p, q) or f.rank != rank:
                    raise ValueError("part bidegree/rank mismatch")
                self.parts[(p, q)] = f
            else:
                self.parts[(p, q)] = FormField.zeros(geom, rank, p, q,
                                                     twist=twist)

    @classmethod
    def from_parts(cls, degree, fields):
        fields = list(fields)
        if not fields:
            raise ValueError("need at least one part")
        f0 = fields[0]
        parts = {(f.p, f.q): f for f in fields}
        return cls(f0.geom, f0.rank, degree, parts, twist=f0.twist)

    def part(self, p, q):
        return self.parts.get((p, q))

    def copy(self):
        return ComplexElement(self.geom, self.rank, self.degree,
                              {k: f.copy() for k, f in self.parts.items()},
                              self.twist)

    def __add__(self, other):
        return ComplexElement(self.geom, self.rank, self.degree,
                              {k: self.parts[k] + other.parts[k]
                               for k in self.parts}, self.twist)

    def __sub__(self, other):
        return ComplexElement(self.geom, self.rank, self.degree,
                              {k: self.parts[k] - other.parts[k]
                               for k in self.parts}, self.twist)

    def __mul__(self, scalar):
        return ComplexElement(self.geom, self.rank, self.degree,
                              {k: self.parts[k] * scalar for k in self.parts},
                              self.twist)

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def sup_norm(self):
        return max((f.sup_norm() for f in self.parts.values()), default=0.0)


def complex_inner(x: ComplexElement, y: ComplexElement, cfg: GaugeConfig):
    if x.degree != y.degree:
        raise ValueError("degree mismatch")
    total = 0.0 + 0.0j
    for k in x.parts:
        total += l2_inner_product(x.parts[k], y.parts[k], cfg.h, cfg.h_inv)
    return total


def _flatten(x: ComplexElement):
    return np.concatenate([x.parts[k].data.ravel() for k in sorted(x.parts)])


def _weighted_flatten(y: ComplexElement, cfg: GaugeConfig):
    """Vector y-hat with <x, y> = flat(x) . conj(y-hat) * cell volume.

    Applies the form-index Gram matrices and the fibre conjugation
    y |-> h y h^{-1} so that batched Gram matrices reduce to one matmul.
    """
    geom = y.geom
    pieces = []
    for key in sorted(y.parts):
        p, q = key
        f = y.parts[key]
        conj_w = cfg.h @ f.data @ cfg.h_inv
        Ph = np.conj(geom.pairing(p))
        Pa = np.conj(geom.pairing_anti(q))
        out = np.einsum("ik,jl,kl...->ij...", Ph, Pa, conj_w)
        pieces.append(out.ravel())
    return np.concatenate(pieces)


def complex_norm(x, cfg):
    return float(np.sqrt(max(complex_inner(x, x, cfg).real, 0.0)))


# -- differentials --------------------------------------------------------------


def d_hol_field(f: FormField, cfg: GaugeConfig) -> FormField:
    """Higgs-field part of d on one (p,q)-component, mapping to (p+1, q)."""
    geom = f.geom
    out = FormField.zeros(geom, f.rank, f.p + 1, f.q, twist=f.twist)
    hol_index = {c: i for i, c in enumerate(geom.combos[f.p + 1])}
    for ih, I in enumerate(geom.combos[f.p]):
        for alpha in range(geom.n):
            if alpha in I:
                continue
            sign = -insertion_sign_end(alpha, I)
            tgt = hol_index[tuple(sorted(I + (alpha,)))]
            for ia in range(f.data.shape[1]):
                out.data[tgt, ia] += sign * geom.commutator(
                    f.data[ih, ia], cfg.phi.data[alpha, 0])
    return out


def d_bar_field(f: FormField, cfg: GaugeConfig) -> FormField:
    """Twisted Dolbeault part of d on one component, mapping to (p, q+1)."""
    geom = f.geom
    out = FormField.zeros(geom, f.rank, f.p, f.q + 1, twist=f.twist)
    anti_index = {c: i for i, c in enumerate(geom.combos[f.q + 1])}
    psign = (-1) ** f.p
    for ia, J in enumerate(geom.combos[f.q]):
        for beta in range(geom.n):
            if beta in J:
                continue
            sign = psign * insertion_sign_front(beta, J)
            tgt = anti_index[tuple(sorted(J + (beta,)))]
            for ih in range(f.data.shape[0]):
                cov = (f.deriv_component(ih, ia, beta, anti=True)
                       + geom.commutator(f.data[ih, ia],
                                         cfg.A.data[0, beta]))
                out.data[ih, tgt] += sign * cov
    return out


def d_hol_star_field(psi: FormField, cfg: GaugeConfig) -> FormField:
    """Exact adjoint of d_hol_field, mapping (p+1, q) to (p, q)."""
    geom = psi.geom
    p = psi.p - 1
    out = FormField.zeros(geom, psi.rank, p, psi.q, twist=psi.twist)
    combos = geom.combos[p]
    combos1 = geom.combos[psi.p]
    P1 = geom.pairing(psi.p)
    Pinv = geom.pairing_inv(p)
    idx1 = {c: i for i, c in enumerate(combos1)}
    phistar = cfg.star(cfg.phi)  # (0,1)-form, component a is (phi_a)^*
    # pairing weights enter inside the fibre adjoint, hence conjugated;
    # hermiticity of the pairings turns that into an index swap
    rhs = np.zeros_like(out.data)
    for iI, I in enumerate(combos):
        for alpha in range(geom.n):
            if alpha in I:
                continue
            sign = -insertion_sign_end(alpha, I)
            row = idx1[tuple(sorted(I + (alpha,)))]
            for iK in range(len(combos1)):
                w = sign * P1[iK, row]
                if w == 0:
                    continue
                for ia in range(psi.data.shape[1]):
                    rhs[iI, ia] += w * geom.commutator(
                        psi.data[iK, ia], phistar.data[0, alpha])
    for iI in range(len(combos)):
        for iIt in range(len(combos)):
            if Pinv[iIt, iI] != 0:
                out.data[iI] += Pinv[iIt, iI] * rhs[iIt]
    return out


def d_bar_star_field(psi: FormField, cfg: GaugeConfig) -> FormField:
    """Exact adjoint of d_bar_field, mapping (p, q+1) to (p, q)."""
    geom = psi.geom
    q = psi.q - 1
    out = FormField.zeros(geom, psi.rank, psi.p, q, twist=psi.twist)
    combos = geom.combos[q]
    combos1 = geom.combos[psi.q]
    P1 = geom.pairing_anti(psi.q)
    Pinv = geom.pairing_anti_inv(q)
    idx1 = {c: i for i, c in enumerate(combos1)}
    psign = (-1) ** psi.p
    rhs = np.zeros_like(out.data)
    for iJ, J in enumerate(combos):
        for beta in range(geom.n):
            if beta in J:
                continue
            sign = psign * insertion_sign_front(beta, J)
            row = idx1[tuple(sorted(J + (beta,)))]
            for iL in range(len(combos1)):
                w = sign * P1[iL, row]
                if w == 0:
                    continue
                for ih in range(psi.data.shape[0]):
                    rhs[ih, iJ] += w * cfg.adj_cov_anti_component(
                        psi.data[ih, iL], psi.twist, beta)
    for iJ in range(len(combos)):
        for iJt in range(len(combos)):
            if Pinv[iJt, iJ] != 0:
                out.data[:, iJ] += Pinv[iJt, iJ] * rhs[:, iJt]
    return out


def d_total(x: ComplexElement, cfg: GaugeConfig) -> ComplexElement:
    """d = d'' + (-1)^{q+1} d' on a complex element."""
    geom = x.geom
    out = ComplexElement(geom, x.rank, x.degree + 1, twist=x.twist)
    for (p, q), f in x.parts.items():
        if p + 1 <= geom.n:
            out.parts[(p + 1, q)] = out.parts[(p + 1, q)] + d_hol_field(f, cfg)
        if q + 1 <= geom.n:
            out.parts[(p, q + 1)] = out.parts[(p, q + 1)] + d_bar_field(f, cfg)
    return out


def d_star(y: ComplexElement, cfg: GaugeConfig) -> ComplexElement:
    """Adjoint of d, mapping degree r to r - 1."""
    geom = y.geom
    out = ComplexElement(geom, y.rank, y.degree - 1, twist=y.twist)
    for (p, q), f in y.parts.items():
        if p >= 1 and (p - 1, q) in out.parts:
            out.parts[(p - 1, q)] = out.parts[(p - 1, q)] + d_hol_star_field(f, cfg)
        if q >= 1 and (p, q - 1) in out.parts:
            out.parts[(p, q - 1)] = out.parts[(p, q - 1)] + d_bar_star_field(f, cfg)
    return out


def laplacian(x: ComplexElement, cfg: GaugeConfig) -> ComplexElement:
    """Hodge Laplacian d*d + dd* on the truncated complex."""
    out = d_star(d_total(x, cfg), cfg)
    if x.degree > 0:
        out = out + d_total(d_star(x, cfg), cfg)
    return out


# -- degree-1 bracket square -------------------------------------------------------


def c1_square(x: ComplexElement, y: ComplexElement, dealias=None) -> ComplexElement:
    """Bracket square of two degree-1 elements; see the module docstring."""
    if x.degree != 1 or y.degree != 1:
        raise ValueError("c1_square expects degree-1 elements")
    geom = x.geom
    a, b = x.part(1, 0), x.part(0, 1)
    c, d = y.part(1, 0), y.part(0, 1)
    parts = {}
    if geom.n >= 2:
        parts[(2, 0)] = -1.0 * wedge_bracket(a, c, dealias=dealias)
        parts[(0, 2)] = wedge_bracket(b, d, dealias=dealias)
    parts[(1, 1)] = (wedge_bracket(a, d, dealias=dealias)
                     + wedge_bracket(b, c, dealias=dealias))
    return ComplexElement(geom, x.rank, 2, parts, twist=x.twist)


# -- trace decomposition --------------------------------------------------------------


def trace_free_split(x: ComplexElement):
    """Orthogonal split x = x_0 + x_s into trace-free and scalar parts."""
    tf = ComplexElement(x.geom, x.rank, x.degree,
                        {k: trace_free(f) for k, f in x.parts.items()},
                        x.twist)
    sc = ComplexElement(x.geom, x.rank, x.degree,
                        {k: trace_part(f) for k, f in x.parts.items()},
                        x.twist)
    return tf, sc


# -- canonical degree-2 class ------------------------------------------------------------


def canonical_h2_class(cfg: GaugeConfig) -> ComplexElement:
    """The element (0, omega_X id_E, 0): closed and coclosed for every
    configuration, spanning the canonical line in degree-2 cohomology."""
    eps = ComplexElement(cfg.geom, cfg.rank, 2, twist=cfg.twist)
    eps.parts[(1, 1)] = kahler_form_field(cfg.geom, cfg.rank, twist=cfg.twist)
    return eps


# -- parallel sections -------------------------------------------------------------------


def check_parallel_endomorphism(sigma: FormField, cfg: GaugeConfig):
    """Residual report for the parallelism of a holomorphic phi-commuting
    endomorphism of an HYM configuration."""
    geom = cfg.geom
    dbar_res = max(cfg.cov_anti(sigma, b).sup_norm() for b in range(geom.n))
    if geom.n >= 2 or True:
        comm_res = wedge_bracket(sigma, cfg.phi, dealias=False).sup_norm()
    par = max(cfg.cov_hol(sigma, a).sup_norm() for a in range(geom.n))
    return {
        "dbar_residual": dbar_res,
        "phi_commutator_residual": comm_res,
        "parallel_residual": par,
    }


# -- Hodge solver ------------------------------------------------------------------------


def _trial_modes(geom, kmax):
    """Low Fourier modes for the trial space: a full box for n = 1, an
    L1 ball for n = 2 (keeps the space small on the 4d grid)."""
    N = geom.N
    modes = []
    for kvec in np.ndindex(*([2 * kmax + 1] * 2 * geom.n)):
        ks = [k - kmax for k in kvec]
        if geom.n == 2 and sum(abs(k) for k in ks) > kmax:
            continue
        modes.append(tuple(k % N for k in ks))
    return modes


def _mode_field(geom, mode):
    spec = np.zeros(geom.spatial_shape, dtype=complex)
    spec[mode] = 1.0
    return np.fft.ifftn(spec) * geom.N ** (2 * geom.n)


def build_trial_space(cfg, degree, kmax, matrix_basis=None):
    """Band-limited trial elements for Rayleigh-Ritz kernel detection."""
    geom = cfg.geom
    r = cfg.rank
    if matrix_basis is None:
        matrix_basis = []
        for a in range(r):
            for b in range(r):
                E = np.zeros((r, r), dtype=complex)
                E[a, b] = 1.0
                matrix_basis.append(E)
    trials = []
    modes = _trial_modes(geom, kmax)
    waves = [_mode_field(geom, m) for m in modes]
    for (p, q) in valid_bidegrees(degree, geom.n):
        nh = len(geom.combos[p])
        na = len(geom.combos[q])
        for ih in range(nh):
            for ia in range(na):
                for B in matrix_basis:
                    for w in waves:
                        x = ComplexElement(geom, r, degree, twist=cfg.twist)
                        x.parts[(p, q)].data[ih, ia] = w[..., None, None] * B
                        trials.append(x)
    return trials


def traceless_matrix_basis(r):
    basis = []
    for a in range(r):
        for b in range(r):
            if a != b:
                E = np.zeros((r, r), dtype=complex)
                E[a, b] = 1.0
                basis.append(E)
    for a in range(r - 1):
        E = np.zeros((r, r), dtype=complex)
        E[a, a] = 1.0
        E[a + 1, a + 1] = -1.0
        basis.append(E)
    return basis


class HodgeSolver:
    """Harmonic projection and Green operator for one degree of the complex.

    The kernel is detected by Rayleigh-Ritz on a band-limited trial space:
    Ritz values below tau are declared harmonic and the spectral gap to the
    first retained value is reported.  The Green operator inverts the
    Laplacian on the orthogonal complement with a deflated, flat-symbol
    preconditioned conjugate gradient iteration (fixed order,
    deterministic).
    """

    def __init__(self, cfg, degree, kmax=None, tau_factor=1e-8,
                 matrix_basis=None, cg_tol=1e-11, cg_maxiter=4000):
        self.cfg = cfg
        self.degree = degree
        geom = cfg.geom
        if kmax is None:
            kmax = 2 if geom.n == 1 else 1
        self.kmax = kmax
        self.cg_tol = cg_tol
        self.cg_maxiter = cg_maxiter
        sym = geom.flat_symbol()
        gmax = float(np.max(np.abs(geom.g_inv)))
        self.mass_scale = 1.0 + 4.0 * gmax * cfg.phi.sup_norm() ** 2
        self.op_scale = float(np.max(sym)) + self.mass_scale
        self.tau = tau_factor * self.op_scale
        self._precond_sym = sym + self.mass_scale
        self._build_kernel(matrix_basis)

    def _build_kernel(self, matrix_basis):
        cfg = self.cfg
        trials = build_trial_space(cfg, self.degree, self.kmax, matrix_basis)
        m = len(trials)
        cell = cfg.geom.volume / cfg.geom.N ** (2 * cfg.geom.n)
        X = np.stack([_flatten(t) for t in trials])
        G = np.zeros((m, m), dtype=complex)
        M = np.zeros((m, m), dtype=complex)
        for j in range(m):
            wg = np.conj(_weighted_flatten(trials[j], cfg))
            G[:, j] = (X @ wg) * cell
            wm = np.conj(_weighted_flatten(laplacian(trials[j], cfg), cfg))
            M[:, j] = (X @ wm) * cell
        G = 0.5 * (G + G.conj().T)
        M = 0.5 * (M + M.conj().T)
        gvals, gvecs = np.linalg.eigh(G)
        keep = gvals > 1e-10 * max(gvals.max(), 1.0)
        W = gvecs[:, keep] / np.sqrt(gvals[keep])
        S = W.conj().T @ M @ W
        S = 0.5 * (S + S.conj().T)
        vals, vecs = np.linalg.eigh(S)
        self.ritz_values = vals
        nker = int(np.sum(vals < self.tau))
        self.kernel_dim = nker
        if nker < len(vals):
            first = vals[nker]
            last = vals[nker - 1] if nker > 0 else 0.0
            self.spectral_gap = float(first / max(last, self.tau * 1e-8)) \
                if nker > 0 else float("inf")
            self.first_nonzero = float(first)
        else:
            self.spectral_gap = 0.0
            self.first_nonzero = self.tau
        coeff = W @ vecs[:, :nker]
        basis = []
        for j in range(nker):
            v = None
            for i in range(m):
                c = coeff[i, j]
                if abs(c) < 1e-14:
                    continue
                term = trials[i] * c
                v = term if v is None else v + term
            if v is None:
                continue
            # re-orthonormalise against what we already accepted
            for u in basis:
                v = v - u * complex_inner(v, u, cfg)
            nv = complex_norm(v, cfg)
            if nv > 1e-10:
                basis.append(v * (1.0 / nv))
        self.kernel_basis = basis

    def harmonic_project(self, x: ComplexElement) -> ComplexElement:
        out = ComplexElement(x.geom, x.rank, x.degree, twist=x.twist)
        for u in self.kernel_basis:
            out = out + u * complex_inner(x, u, self.cfg)
        return out

    def _project_out(self, x):
        for u in self.kernel_basis:
            x = x - u * complex_inner(x, u, self.cfg)
        return x

    def _precond(self, x):
        geom = self.cfg.geom
        out = x.copy()
        for k, f in out.parts.items():
            for ih in range(f.data.shape[0]):
                for ia in range(f.data.shape[1]):
                    spec = geom.fft(f.data[ih, ia])
                    f.data[ih, ia] = geom.ifft(
                        spec / self._precond_sym[..., None, None])
        return out

    def green_apply(self, x: ComplexElement):
        """Solve box u = x - H(x) with u orthogonal to the kernel.

        Returns (u, info) where info carries iterations and the relative
        residual; raises no exception on non-convergence, the caller reads
        the report.
        """
        cfg = self.cfg
        b = self._project_out(x)
        bnorm = complex_norm(b, cfg)
        if bnorm == 0.0:
            zero = ComplexElement(x.geom, x.rank, x.degree, twist=x.twist)
            return zero, {"iterations": 0, "relative_residual": 0.0,
                          "converged": True}
        u = ComplexElement(x.geom, x.rank, x.degree, twist=x.twist)
        r = b.copy()
        z = self._project_out(self._precond(r))
        p = z.copy()
        rz = complex_inner(r, z, cfg).real
        info = {}
        best = float("inf")
        since_best = 0
        for it in range(1, self.cg_maxiter + 1):
            Ap = self._project_out(laplacian(p, cfg))
            pAp = complex_inner(p, Ap, cfg).real
            if pAp <= 0:
                info = {"iterations": it, "relative_residual":
                        complex_norm(r, cfg) / bnorm, "converged": False}
                break
            alpha = rz / pAp
            u = u + p * alpha
            r = r - Ap * alpha
            rnorm = complex_norm(r, cfg)
            if rnorm <= self.cg_tol * bnorm:
                info = {"iterations": it, "relative_residual": rnorm / bnorm,
                        "converged": True}
                break
            # roundoff floor: residual no longer improves
            if rnorm < 0.9 * best:
                best = rnorm
                since_best = 0
            else:
                since_best += 1
                if since_best >= 30:
                    info = {"iterations": it,
                            "relative_residual": rnorm / bnorm,
                            "converged": False, "stalled": True}
                    break
            z = self._project_out(self._precond(r))
            rz_new = complex_inner(r, z, cfg).real
            beta = rz_new / rz
            rz = rz_new
            p = z + p * beta
        else:
            info = {"iterations": self.cg_maxiter,
                    "relative_residual": complex_norm(r, cfg) / bnorm,
                    "converged": False}
        if not info:
            info = {"iterations": 0, "relative_residual": 1.0,
                    "converged": False}
        return self._project_out(u), info

    def report(self):
        return {
            "degree": self.degree,
            "kernel_dim": self.kernel_dim,
            "tau": self.tau,
            "spectral_gap": self.spectral_gap,
            "ritz_head": [float(v) for v in self.ritz_values[:8]],
        }
