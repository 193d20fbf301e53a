"""Higgs pairs in a fixed smooth trivialisation and their covariant calculus.

A GaugeConfig bundles the raw data (A, phi, h) of a Higgs pair: the (0,1)
connection form A deforming the del-bar operator, the Higgs field phi, and
the fibre metric h.  Derived quantities follow the convention

    sigma_{;a}      = d_a sigma + [sigma, theta_a],
    sigma_{;b-bar}  = d_b-bar sigma + [sigma, A_b-bar],
    theta_a         = -h^{-1} d_a h - (A_a-bar)^*,
    R_{a b-bar}     = d_b-bar theta_a - d_a A_b-bar + [theta_a, A_b-bar],

under which the adjoint operation intertwines covariant derivatives,
(sigma^*)_{;a} = (sigma_{;a-bar})^*, and sigma_{;a b-bar} - sigma_{;b-bar a}
= [sigma, R_{a b-bar}].  An optional constant scalar curvature twist K adds
K_{a b-bar} id to the curvature: it models tensoring with a line bundle of
nonzero degree, which leaves all End(E) operators untouched.
"""

from __future__ import annotations

import numpy as np

from .fields import FormField, adjoint_star, wedge_bracket, _star_matrix
from .geometry import TorusGeometry, insertion_sign_end, insertion_sign_front


class GaugeConfig:
    """A Higgs pair (A, phi) with hermitian metric h on the trivial bundle."""

    def __init__(self, geom: TorusGeometry, rank: int, A: FormField,
                 phi: FormField, h=None, twist=None, scalar_curvature=None):
        self.geom = geom
        self.rank = int(rank)
        if (A.p, A.q) != (0, 1) or (phi.p, phi.q) != (1, 0):
            raise ValueError("A must be a (0,1)-form and phi a (1,0)-form")
        self.A = A
        self.phi = phi
        if h is None:
            h = np.broadcast_to(np.eye(rank, dtype=complex),
                                geom.spatial_shape + (rank, rank)).copy()
        else:
            h = np.asarray(h, dtype=complex)
            if h.shape != geom.spatial_shape + (rank, rank):
                h = np.broadcast_to(h, geom.spatial_shape + (rank, rank)).copy()
        self.h = h
        self.twist = twist
        if scalar_curvature is not None:
            scalar_curvature = np.asarray(scalar_curvature, dtype=complex)
            if scalar_curvature.shape != (geom.n, geom.n):
                raise ValueError("scalar_curvature must be an n x n matrix")
        self.scalar_curvature = scalar_curvature
        self._h_inv = None
        self._theta = None
        self._curv = None

    # -- derived data ---------------------------------------------------------

    @property
    def h_inv(self):
        if self._h_inv is None:
            self._h_inv = np.linalg.inv(self.h)
        return self._h_inv

    def star(self, f: FormField) -> FormField:
        """Fibre adjoint with respect to this configuration's metric."""
        return adjoint_star(f, self.h, self.h_inv)

    def with_h(self, h):
        return GaugeConfig(self.geom, self.rank, self.A, self.phi, h,
                           self.twist, self.scalar_curvature)

    def theta(self) -> FormField:
        """Connection (1,0)-forms theta_a = -h^{-1} d_a h - (A_a-bar)^*."""
        if self._theta is not None:
            return self._theta
        geom = self.geom
        th = FormField.zeros(geom, self.rank, 1, 0, twist=self.twist)
        Astar = self.star(self.A)  # (1,0)-form with components (A_a-bar)^*
        for ih, (a,) in enumerate(geom.combos[1]):
            dh = geom.deriv_hol(self.h, a)
            th.data[ih, 0] = -(self.h_inv @ dh) - Astar.data[ih, 0]
        self._theta = th
        return th

    def curvature(self) -> FormField:
        """Curvature (1,1)-form with components R_{a b-bar} (+ K twist)."""
        if self._curv is not None:
            return self._curv
        geom = self.geom
        th = self.theta()
        R = FormField.zeros(geom, self.rank, 1, 1, twist=self.twist)
        eye = np.eye(self.rank)
        for ih, (a,) in enumerate(geom.combos[1]):
            for ia, (b,) in enumerate(geom.combos[1]):
                term = th.deriv_component(ih, 0, b, anti=True)
                term = term - self.A.deriv_component(0, ia, a, anti=False)
                term = term + geom.commutator(th.data[ih, 0], self.A.data[0, ia])
                if self.scalar_curvature is not None:
                    term = term + self.scalar_curvature[a, b] * eye
                R.data[ih, ia] = term
        self._curv = R
        return R

    # -- covariant derivatives --------------------------------------------------

    def cov_anti(self, f: FormField, beta: int) -> FormField:
        """Component-wise covariant derivative in the z-bar^beta direction."""
        out = f._like()
        for ih in range(f.data.shape[0]):
            for ia in range(f.data.shape[1]):
                d = f.deriv_component(ih, ia, beta, anti=True)
                out.data[ih, ia] = d + self.geom.commutator(
                    f.data[ih, ia], self.A.data[0, beta])
        return out

    def cov_hol(self, f: FormField, alpha: int) -> FormField:
        """Component-wise covariant derivative in the z^alpha direction."""
        th = self.theta()
        out = f._like()
        for ih in range(f.data.shape[0]):
            for ia in range(f.data.shape[1]):
                d = f.deriv_component(ih, ia, alpha, anti=False)
                out.data[ih, ia] = d + self.geom.commutator(
                    f.data[ih, ia], th.data[alpha, 0])
        return out

    def adj_cov_anti_component(self, data, twist, beta):
        """Exact grid adjoint of the covariant z-bar^beta derivative on one
        component: v -> -h^{-1} D_beta(h v h^{-1}) h + [v, (A_beta-bar)^*].

        The conjugation form keeps adjointness exact even when h is not
        band-limited.
        """
        geom = self.geom
        w = self.h @ data @ self.h_inv
        if twist is None:
            sx = sy = None
        else:
            t = twist[:, 2 * beta]
            sx = t[:, None] - t[None, :]
            t = twist[:, 2 * beta + 1]
            sy = t[:, None] - t[None, :]
        dw = geom.deriv_hol(w, beta, sx, sy)
        out = -(self.h_inv @ dw @ self.h)
        Astar_b = _star_matrix(self.A.data[0, beta], self.h, self.h_inv)
        out = out + geom.commutator(data, Astar_b)
        return out

    # -- residual diagnostics ------------------------------------------------------

    def integrability_residual(self):
        """Sup norm of phi wedge phi ([phi_a, phi_c] for all pairs)."""
        if 2 > self.geom.n:
            return 0.0
        return wedge_bracket(self.phi, self.phi, dealias=False).sup_norm() / 2.0

    def holomorphy_residual(self):
        """Sup norm of the covariant del-bar of phi."""
        worst = 0.0
        for b in range(self.geom.n):
            worst = max(worst, self.cov_anti(self.phi, b).sup_norm())
        return worst

    def dbar_A_integrability_residual(self):
        """Sup norm of the (0,2) curvature of the deformed del-bar operator."""
        if self.geom.n < 2:
            return 0.0
        geom = self.geom
        worst = 0.0
        f02 = (self.A.deriv_component(0, 1, 0, anti=True)
               - self.A.deriv_component(0, 0, 1, anti=True)
               + geom.commutator(self.A.data[0, 0], self.A.data[0, 1]))
        worst = max(worst, float(np.max(np.abs(f02))))
        return worst

    def h_positivity_margin(self):
        eigs = np.linalg.eigvalsh(0.5 * (self.h + np.conj(np.swapaxes(self.h, -1, -2))))
        return float(np.min(eigs))

    def gauge_transform(self, U):
        """Conjugate the whole configuration by a constant unitary U."""
        U = np.asarray(U, dtype=complex)
        Uh = U.conj().T
        A = self.A._like(data=U @ self.A.data @ Uh)
        phi = self.phi._like(data=U @ self.phi.data @ Uh)
        h = U @ self.h @ Uh
        return GaugeConfig(self.geom, self.rank, A, phi, h, self.twist,
                           self.scalar_curvature)
