"""Matrix-valued differential forms on a flat torus and their algebra.

A FormField of bidegree (p, q) stores, for every strictly increasing
holomorphic index tuple I (|I| = p) and antiholomorphic tuple J (|J| = q),
an r x r complex matrix per grid point, representing

    f = sum_{I, J} f_{I J}  dz^I wedge dz-bar^J

with all holomorphic differentials written first.  Bundles with constant
unitary factors of automorphy are supported by storing the periodic part of
each entry together with per-fibre fractional mode shifts ("twist"); only
derivative multipliers see the shifts, all pointwise algebra is unchanged.
"""

from __future__ import annotations

import numpy as np

from .geometry import (
    TorusGeometry,
    insertion_sign_end,
    insertion_sign_front,
    shuffle_sign,
)


class FormField:
    """End(E)-valued smooth (p, q)-form sampled on the grid."""

    def __init__(self, geom: TorusGeometry, rank: int, p: int, q: int,
                 data=None, twist=None):
        if not (0 <= p <= geom.n and 0 <= q <= geom.n):
            raise ValueError("bidegree out of range for complex dimension")
        self.geom = geom
        self.rank = int(rank)
        self.p = int(p)
        self.q = int(q)
        nh = len(geom.combos[p])
        na = len(geom.combos[q])
        shape = (nh, na) + geom.spatial_shape + (rank, rank)
        if data is None:
            self.data = np.zeros(shape, dtype=complex)
        else:
            data = np.asarray(data, dtype=complex)
            if data.shape != shape:
                raise ValueError(f"data shape {data.shape} != {shape}")
            self.data = data
        if twist is not None:
            twist = np.asarray(twist, dtype=float)
            if twist.shape != (rank, 2 * geom.n):
                raise ValueError("twist must have shape (rank, 2n)")
            if np.all(twist == 0.0):
                twist = None
        self.twist = twist

    # -- construction helpers ------------------------------------------------

    @classmethod
    def zeros(cls, geom, rank, p, q, twist=None):
        return cls(geom, rank, p, q, twist=twist)

    @classmethod
    def constant(cls, geom, rank, p, q, matrices, twist=None):
        """Constant field; `matrices` maps (I, J) combo indices to r x r arrays,
        or is a single matrix for scalar bidegrees with one component."""
        f = cls.zeros(geom, rank, p, q, twist=twist)
        if isinstance(matrices, dict):
            for (ih, ia), m in matrices.items():
                f.data[ih, ia] = np.asarray(m, dtype=complex)
        else:
            if f.data.shape[0] != 1 or f.data.shape[1] != 1:
                raise ValueError("ambiguous constant for multi-component bidegree")
            f.data[0, 0] = np.asarray(matrices, dtype=complex)
        return f

    def copy(self):
        return FormField(self.geom, self.rank, self.p, self.q,
                         self.data.copy(), self.twist)

    def _like(self, p=None, q=None, data=None, twist="keep"):
        if twist == "keep":
            twist = self.twist
        out = FormField(self.geom, self.rank,
                        self.p if p is None else p,
                        self.q if q is None else q, twist=twist)
        if data is not None:
            out.data = data
        return out

    # -- arithmetic ------------------------------------------------------------

    def _check_compatible(self, other):
        if self.geom is not other.geom or self.rank != other.rank \
                or self.p != other.p or self.q != other.q:
            raise ValueError("bidegree/rank/geometry mismatch")
        if not _twists_equal(self.twist, other.twist):
            raise ValueError("twist mismatch")

    def __add__(self, other):
        self._check_compatible(other)
        return self._like(data=self.data + other.data)

    def __sub__(self, other):
        self._check_compatible(other)
        return self._like(data=self.data - other.data)

    def __mul__(self, scalar):
        return self._like(data=self.data * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self._like(data=-self.data)

    # -- norms -------------------------------------------------------------------

    def sup_norm(self):
        return float(np.max(np.abs(self.data))) if self.data.size else 0.0

    # -- twisted derivative plumbing -----------------------------------------------

    def shift_matrix(self, axis):
        if self.twist is None:
            return None
        t = self.twist[:, axis]
        return t[:, None] - t[None, :]

    def deriv_component(self, ih, ia, alpha, anti):
        geom = self.geom
        sx = self.shift_matrix(2 * alpha)
        sy = self.shift_matrix(2 * alpha + 1)
        if anti:
            return geom.deriv_anti(self.data[ih, ia], alpha, sx, sy)
        return geom.deriv_hol(self.data[ih, ia], alpha, sx, sy)


def _twists_equal(a, b):
    if a is None and b is None:
        return True
    if (a is None) != (b is None):
        return False
    return np.array_equal(a, b)


# -- basic fields ------------------------------------------------------------------


def identity_section(geom, rank, twist=None):
    f = FormField.zeros(geom, rank, 0, 0, twist=twist)
    f.data[0, 0] = np.broadcast_to(np.eye(rank, dtype=complex),
                                   f.data[0, 0].shape).copy()
    return f


def kahler_form_field(geom, rank, twist=None):
    """omega_X times the identity endomorphism, as a (1,1) FormField."""
    f = FormField.zeros(geom, rank, 1, 1, twist=twist)
    w = geom.kahler_form_components()
    for ih, (a,) in enumerate(geom.combos[1]):
        for ia, (b,) in enumerate(geom.combos[1]):
            f.data[ih, ia] = w[a, b] * np.eye(rank)
    return f


def random_band_limited(geom, rng, rank, p, q, kmax, scale=1.0, twist=None):
    """Random field with Fourier modes bounded by kmax in every axis."""
    f = FormField.zeros(geom, rank, p, q, twist=twist)
    N = geom.N
    spec = np.zeros(f.data.shape, dtype=complex)
    ks = [k for k in range(-kmax, kmax + 1)]
    spatial_axes = tuple(range(2, 2 + 2 * geom.n))
    for idx in np.ndindex(spec.shape[0], spec.shape[1]):
        for kvec in np.ndindex(*([len(ks)] * 2 * geom.n)):
            pos = tuple(idx) + tuple(ks[i] % N for i in kvec)
            block = (rng.standard_normal((rank, rank))
                     + 1j * rng.standard_normal((rank, rank)))
            spec[pos] = block
    f.data = np.fft.ifftn(spec, axes=spatial_axes) * scale
    return f


# -- derivatives -------------------------------------------------------------------


def spectral_derivative(f: FormField, index: int, anti: bool = False) -> FormField:
    """Component-wise partial derivative d/dz^index or d/dz-bar^index.

    Exact for band-limited fields; raises if the direction index is out of
    range for the complex dimension.
    """
    if not (0 <= index < f.geom.n):
        raise ValueError("direction index out of range")
    out = f._like()
    for ih in range(f.data.shape[0]):
        for ia in range(f.data.shape[1]):
            out.data[ih, ia] = f.deriv_component(ih, ia, index, anti)
    return out


# -- inner products ------------------------------------------------------------------


def _star_matrix(m, h, h_inv):
    """Pointwise adjoint with respect to the fibre metric: h^{-1} m^H h."""
    mH = np.conj(np.swapaxes(m, -1, -2))
    if h is None:
        return mH
    return h_inv @ mH @ h


def l2_inner_product(x: FormField, y: FormField, h=None, h_inv=None):
    """Hermitian L2 pairing  <x, y> = int tr(x y*) with metric contractions.

    All form-index contractions use the compound matrices of g^{-1}; the
    fibre pairing uses the hermitian metric h (identity when omitted).
    """
    x._check_compatible(y)
    geom = x.geom
    if h is not None and h_inv is None:
        h_inv = np.linalg.inv(h)
    Ph = geom.pairing(x.p)
    Pa = geom.pairing_anti(x.q)
    total = 0.0 + 0.0j
    for i in range(Ph.shape[0]):
        for k in range(Ph.shape[1]):
            if Ph[i, k] == 0:
                continue
            for j in range(Pa.shape[0]):
                for l in range(Pa.shape[1]):
                    if Pa[j, l] == 0:
                        continue
                    ystar = _star_matrix(y.data[k, l], h, h_inv)
                    block = np.trace(x.data[i, j] @ ystar,
                                     axis1=-2, axis2=-1)
                    total += Ph[i, k] * Pa[j, l] * geom.integrate(block)
    return total


def l2_norm(x, h=None, h_inv=None):
    val = l2_inner_product(x, x, h, h_inv).real
    return float(np.sqrt(max(val, 0.0)))


# -- wedge / bracket ----------------------------------------------------------------


def _wedge_terms(x: FormField, y: FormField):
    """Iterate (target_hol, target_anti, sign, ix, iy) for the wedge x ^ y."""
    geom = x.geom
    for ih_x, Ix in enumerate(geom.combos[x.p]):
        for ia_x, Jx in enumerate(geom.combos[x.q]):
            for ih_y, Iy in enumerate(geom.combos[y.p]):
                if set(Ix) & set(Iy):
                    continue
                for ia_y, Jy in enumerate(geom.combos[y.q]):
                    if set(Jx) & set(Jy):
                        continue
                    s_h, I = shuffle_sign(Ix, Iy)
                    s_a, J = shuffle_sign(Jx, Jy)
                    # move y's holomorphic block past x's antiholomorphic one
                    sign = s_h * s_a * ((-1) ** (x.q * y.p))
                    yield I, J, sign, (ih_x, ia_x), (ih_y, ia_y)


def wedge_bracket(x: FormField, y: FormField, dealias=None) -> FormField:
    """Graded commutator combined with the wedge product.

    [x ^ y] = sum [x_I, y_J] e^I wedge e^J; satisfies
    [x ^ y] = -(-1)^{deg x deg y} [y ^ x].
    """
    geom = x.geom
    if x.p + y.p > geom.n or x.q + y.q > geom.n:
        raise ValueError("wedge degree overflow")
    if dealias is None:
        dealias = geom.dealias
    out_twist = _combine_twists(x.twist, y.twist)
    out = FormField.zeros(geom, x.rank, x.p + y.p, x.q + y.q, twist=out_twist)
    hol_index = {c: i for i, c in enumerate(geom.combos[out.p])}
    anti_index = {c: i for i, c in enumerate(geom.combos[out.q])}
    for I, J, sign, (ih_x, ia_x), (ih_y, ia_y) in _wedge_terms(x, y):
        comm = geom.commutator(x.data[ih_x, ia_x], y.data[ih_y, ia_y],
                               dealias=dealias)
        out.data[hol_index[I], anti_index[J]] += sign * comm
    return out


def wedge_product_trace(x: FormField, y: FormField, dealias=None) -> FormField:
    """tr(x wedge y) with the plain matrix product: a scalar-valued form."""
    geom = x.geom
    if x.p + y.p > geom.n or x.q + y.q > geom.n:
        raise ValueError("wedge degree overflow")
    if dealias is None:
        dealias = geom.dealias
    out = FormField.zeros(geom, 1, x.p + y.p, x.q + y.q)
    hol_index = {c: i for i, c in enumerate(geom.combos[out.p])}
    anti_index = {c: i for i, c in enumerate(geom.combos[out.q])}
    for I, J, sign, (ih_x, ia_x), (ih_y, ia_y) in _wedge_terms(x, y):
        prod = geom.matmul(x.data[ih_x, ia_x], y.data[ih_y, ia_y],
                           dealias=dealias)
        tr = np.trace(prod, axis1=-2, axis2=-1)
        out.data[hol_index[I], anti_index[J], ..., 0, 0] += sign * tr
    return out


def _combine_twists(a, b):
    if a is None:
        return b
    if b is None:
        return a
    if not np.array_equal(a, b):
        raise ValueError("incompatible twists in product")
    return a


# -- contractions ----------------------------------------------------------------------


def lambda_contract(v: FormField) -> FormField:
    """Trace of a (1,1)-form against the metric:  Lambda v = g^{b-bar a} v_{a b-bar}.

    With this (literal) convention Lambda(omega_X id) = sqrt(-1) n id; the
    normalisation anchor is tested against the Kaehler form itself.
    """
    if (v.p, v.q) != (1, 1):
        raise ValueError("lambda_contract expects bidegree (1,1)")
    geom = v.geom
    out = FormField.zeros(geom, v.rank, 0, 0, twist=v.twist)
    for ih, (a,) in enumerate(geom.combos[1]):
        for ia, (b,) in enumerate(geom.combos[1]):
            out.data[0, 0] += geom.g_inv[b, a] * v.data[ih, ia]
    return out


def tilde_lambda_bracket(v: FormField, w: FormField, h=None, h_inv=None,
                         dealias=None) -> FormField:
    """Contraction  -g^{d-bar a} [v_{a b-bar}, w_d-bar] dz-bar^b  of a (1,1)-form
    with a (0,1)-form; contracts only the stated index pair."""
    if (v.p, v.q) != (1, 1) or (w.p, w.q) != (0, 1):
        raise ValueError("tilde_lambda_bracket expects (1,1) and (0,1) inputs")
    geom = v.geom
    if dealias is None:
        dealias = False
    out = FormField.zeros(geom, v.rank, 0, 1,
                          twist=_combine_twists(v.twist, w.twist))
    for ih, (a,) in enumerate(geom.combos[1]):
        for ia, (b,) in enumerate(geom.combos[1]):
            for iw, (d,) in enumerate(geom.combos[1]):
                coeff = geom.g_inv[d, a]
                if coeff == 0:
                    continue
                comm = geom.commutator(v.data[ih, ia], w.data[0, iw],
                                       dealias=dealias)
                out.data[0, b] += -coeff * comm
    return out


# -- fibre adjoint ------------------------------------------------------------------------


def adjoint_star(f: FormField, h=None, h_inv=None) -> FormField:
    """Pointwise adjoint with respect to the fibre metric h.

    The matrix part becomes h^{-1} f^H h, the form part is conjugated, so a
    (p, q)-form becomes a (q, p)-form; (f*)* = f and [a,b]* = -[a*, b*].
    """
    geom = f.geom
    if h is not None and h_inv is None:
        h_inv = np.linalg.inv(h)
    out = FormField.zeros(geom, f.rank, f.q, f.p, twist=f.twist)
    sign = (-1) ** (f.p * f.q)
    for ih in range(f.data.shape[0]):
        for ia in range(f.data.shape[1]):
            out.data[ia, ih] = sign * _star_matrix(f.data[ih, ia], h, h_inv)
    return out


# -- trace decomposition -----------------------------------------------------------------


def trace_part(f: FormField) -> FormField:
    """Scalar part (tr f / rank) id of every component."""
    out = f._like(data=np.zeros_like(f.data))
    eye = np.eye(f.rank)
    tr = np.trace(f.data, axis1=-2, axis2=-1) / f.rank
    out.data = tr[..., None, None] * eye
    return out


def trace_free(f: FormField) -> FormField:
    return f - trace_part(f)
