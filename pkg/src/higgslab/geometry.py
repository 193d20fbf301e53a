"""Flat complex torus geometry and the pseudospectral calculus on it.

The base manifold is X = C^n / (Z L_a + i Z M_a), n in {1, 2}, with a
constant positive hermitian metric g_{a b-bar} and Kaehler form

    omega = sqrt(-1) g_{a b-bar} dz^a wedge dz^b-bar.

Fields are sampled on a uniform grid with N points per real dimension and
manipulated spectrally: derivatives act as Fourier multipliers (exact on
band-limited data, Nyquist mode zeroed so that summation by parts is exact
on the grid), integrals are plain trapezoid sums (exact for band-limited
integrands), and quadratic products may be de-aliased with the 3/2 rule.

Volume normalisation follows the complex convention: the volume element is
omega^n / n!, which in real coordinates is 2^n det(g) dx dy.
"""

from __future__ import annotations

import itertools

import numpy as np


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


class TorusGeometry:
    """Flat torus with constant hermitian metric and a uniform spectral grid.

    Parameters
    ----------
    complex_dim : int
        Number of complex dimensions n, 1 or 2.
    periods : sequence of (L, M) pairs
        Real lattice generators per complex direction: z^a is periodic under
        z^a -> z^a + L_a and z^a -> z^a + i M_a.
    metric : (n, n) array_like
        Constant hermitian positive definite matrix g_{a b-bar}.
    grid : int
        Grid points N per real dimension; even power of two.
    dealias : bool
        Use 3/2-rule zero padding for quadratic form products.
    """

    def __init__(self, complex_dim, periods, metric, grid, dealias=True):
        if complex_dim not in (1, 2):
            raise ValueError("complex_dim must be 1 or 2")
        self.n = int(complex_dim)
        periods = [(float(L), float(M)) for (L, M) in periods]
        if len(periods) != self.n:
            raise ValueError("need one (L, M) period pair per complex direction")
        if any(L <= 0 or M <= 0 for (L, M) in periods):
            raise ValueError("periods must be positive")
        self.periods = periods
        g = np.asarray(metric, dtype=complex)
        if g.shape != (self.n, self.n):
            raise ValueError("metric must be n x n")
        if np.max(np.abs(g - g.conj().T)) > 1e-13 * max(1.0, np.max(np.abs(g))):
            raise ValueError("metric must be hermitian")
        if np.any(np.linalg.eigvalsh(g) <= 0):
            raise ValueError("metric must be positive definite")
        self.g = g
        self.g_inv = np.linalg.inv(g)
        if not _is_power_of_two(int(grid)) or int(grid) % 2:
            raise ValueError("grid must be an even power of two")
        self.N = int(grid)
        self.dealias = bool(dealias)

        # Real axes ordered (x^1, y^1, x^2, y^2, ...).
        self.spatial_shape = (self.N,) * (2 * self.n)
        self.axis_length = []
        for (L, M) in self.periods:
            self.axis_length.extend([L, M])

        # Volume element omega^n/n! = 2^n det(g) dx dy.
        self.volume_density = float((2.0 ** self.n) * np.linalg.det(g).real)
        cell = 1.0
        for L in self.axis_length:
            cell *= L / self.N
        self.cell_volume = self.volume_density * cell
        self.volume = self.volume_density * float(np.prod(self.axis_length))

        # Integer frequencies and plain derivative multipliers per axis,
        # Nyquist zeroed (keeps the multiplier odd, so discrete summation
        # by parts holds exactly for every grid function).
        k = np.fft.fftfreq(self.N, d=1.0 / self.N)
        k[self.N // 2] = 0.0
        self._k_int = k
        self._mult = []
        for d in range(2 * self.n):
            m = 2j * np.pi * k / self.axis_length[d]
            shape = [1] * (2 * self.n)
            shape[d] = self.N
            self._mult.append(m.reshape(shape))

        # Strictly increasing index combinations per form degree.
        self.combos = {
            0: [()],
            1: [(a,) for a in range(self.n)],
            2: [(0, 1)] if self.n == 2 else [],
        }
        self._pair = {p: self._pairing_matrix(p) for p in (0, 1, 2)}
        self._pair_inv = {
            p: (np.linalg.inv(self._pair[p]) if self._pair[p].size else self._pair[p])
            for p in (0, 1, 2)
        }
        # antiholomorphic indices contract with the transposed weights
        self._pair_anti = {p: self._pair[p].T.copy() for p in (0, 1, 2)}
        self._pair_anti_inv = {
            p: (np.linalg.inv(self._pair_anti[p]) if self._pair_anti[p].size
                else self._pair_anti[p])
            for p in (0, 1, 2)
        }

    # -- metric pairings ---------------------------------------------------

    def _pairing_matrix(self, p):
        """Gram matrix of increasing p-index combinations under g^{-1}.

        Entry [I, K] is det(g^{K_b-bar I_a}); it weighs the pairing of a
        component with hol indices I against one with hol indices K.  The
        same matrix serves the antiholomorphic block.
        """
        combos = self.combos[p]
        P = np.zeros((len(combos), len(combos)), dtype=complex)
        for i, I in enumerate(combos):
            for k, K in enumerate(combos):
                if p == 0:
                    P[i, k] = 1.0
                else:
                    M = np.array([[self.g_inv[K[b], I[a]] for b in range(p)]
                                  for a in range(p)])
                    P[i, k] = np.linalg.det(M)
        return P

    def pairing(self, p):
        return self._pair[p]

    def pairing_inv(self, p):
        return self._pair_inv[p]

    def pairing_anti(self, q):
        return self._pair_anti[q]

    def pairing_anti_inv(self, q):
        return self._pair_anti_inv[q]

    # -- spectral machinery --------------------------------------------------

    @property
    def spatial_axes(self):
        return tuple(range(2 * self.n))

    def fft(self, arr):
        return np.fft.fftn(arr, axes=self.spatial_axes)

    def ifft(self, arr):
        return np.fft.ifftn(arr, axes=self.spatial_axes)

    def deriv_axis(self, arr, d, shift=None):
        """Spectral derivative of (*spatial, r, r) data along real axis d.

        `shift` is an optional constant (r, r) matrix of fractional mode
        offsets; entry (a, b) of a quasi-periodic field stored by its
        periodic part picks up the extra pointwise term
        2 pi i shift_ab / P_d times the field.
        """
        spec = np.fft.fft(arr, axis=d)
        mult = self._mult[d].reshape(self._mult[d].shape + (1, 1))
        out = np.fft.ifft(mult * spec, axis=d)
        if shift is not None:
            out = out + (2j * np.pi / self.axis_length[d]) * shift * arr
        return out

    def deriv_hol(self, arr, alpha, shift_x=None, shift_y=None):
        """d/dz^alpha = (d/dx - i d/dy)/2 on component data."""
        dx = self.deriv_axis(arr, 2 * alpha, shift_x)
        dy = self.deriv_axis(arr, 2 * alpha + 1, shift_y)
        return 0.5 * (dx - 1j * dy)

    def deriv_anti(self, arr, alpha, shift_x=None, shift_y=None):
        """d/dz^alpha-bar = (d/dx + i d/dy)/2 on component data."""
        dx = self.deriv_axis(arr, 2 * alpha, shift_x)
        dy = self.deriv_axis(arr, 2 * alpha + 1, shift_y)
        return 0.5 * (dx + 1j * dy)

    def integrate(self, scalar):
        """Integral against the volume element g dV of pointwise scalar data."""
        return complex(np.mean(scalar) * self.volume)

    def mean(self, arr):
        return np.mean(arr, axis=self.spatial_axes)

    # -- products ------------------------------------------------------------

    def matmul(self, a, b, dealias=None):
        """Pointwise matrix product of (*spatial, r, r) fields.

        With dealias=True both factors are zero padded to a 3/2 finer grid
        before multiplying, which removes aliasing of quadratic products.
        """
        if dealias is None:
            dealias = False
        if not dealias:
            return a @ b
        fine_a = self._pad(a)
        fine_b = self._pad(b)
        return self._truncate(fine_a @ fine_b)

    def commutator(self, a, b, dealias=None):
        if dealias is None:
            dealias = False
        if not dealias:
            return a @ b - b @ a
        fine_a = self._pad(a)
        fine_b = self._pad(b)
        return self._truncate(fine_a @ fine_b - fine_b @ fine_a)

    def _pad(self, arr):
        """Trig interpolation onto the 3/2 finer grid (per spatial axis)."""
        spec = self.fft(arr)
        M = 3 * self.N // 2
        for d in self.spatial_axes:
            spec = np.fft.fftshift(spec, axes=d)
            pad = [(0, 0)] * spec.ndim
            lo = (M - self.N) // 2
            pad[d] = (lo, M - self.N - lo)
            spec = np.pad(spec, pad)
            spec = np.fft.ifftshift(spec, axes=d)
        scale = (M / self.N) ** (2 * self.n)
        return np.fft.ifftn(spec, axes=self.spatial_axes) * scale

    def _truncate(self, arr):
        """Spectral truncation from the 3/2 finer grid back to the base grid."""
        M = 3 * self.N // 2
        spec = np.fft.fftn(arr, axes=self.spatial_axes)
        for d in self.spatial_axes:
            spec = np.fft.fftshift(spec, axes=d)
            lo = (M - self.N) // 2
            sl = [slice(None)] * spec.ndim
            sl[d] = slice(lo, lo + self.N)
            spec = spec[tuple(sl)]
            spec = np.fft.ifftshift(spec, axes=d)
        scale = (self.N / M) ** (2 * self.n)
        return np.fft.ifftn(spec, axes=self.spatial_axes) * scale

    # -- helpers -------------------------------------------------------------

    def kahler_form_components(self):
        """Components of omega in the increasing-combination layout: i g_{a b-bar}."""
        return 1j * self.g

    def flat_symbol(self):
        """Fourier symbol of the flat Dolbeault Laplacian g^{b-bar a} zeta_a zeta_b-bar.

        Returns a real (*spatial,) array; used for preconditioning only.
        """
        zetas = []
        for a in range(self.n):
            mx = self._mult[2 * a]
            my = self._mult[2 * a + 1]
            zetas.append(0.5 * (mx - 1j * my) + np.zeros(self.spatial_shape, complex))
        sym = np.zeros(self.spatial_shape, dtype=complex)
        for a in range(self.n):
            for b in range(self.n):
                sym += self.g_inv[b, a] * zetas[a] * np.conj(zetas[b])
        return sym.real

    def describe(self):
        return {
            "complex_dim": self.n,
            "periods": [list(p) for p in self.periods],
            "metric": [[[self.g[i, j].real, self.g[i, j].imag]
                        for j in range(self.n)] for i in range(self.n)],
            "grid": self.N,
            "volume": self.volume,
        }


def shuffle_sign(left, right):
    """Sign of sorting the concatenation of two disjoint increasing tuples."""
    merged = list(left) + list(right)
    sign = 1
    # insertion sort, counting swaps
    for i in range(1, len(merged)):
        j = i
        while j > 0 and merged[j - 1] > merged[j]:
            merged[j - 1], merged[j] = merged[j], merged[j - 1]
            sign = -sign
            j -= 1
    return sign, tuple(merged)


def insertion_sign_end(alpha, I):
    """Sign of sorting (I..., alpha) into increasing order."""
    return (-1) ** sum(1 for i in I if i > alpha)


def insertion_sign_front(beta, J):
    """Sign of sorting (beta, J...) into increasing order."""
    return (-1) ** sum(1 for j in J if j < beta)


def index_combinations(n, p):
    return list(itertools.combinations(range(n), p))
