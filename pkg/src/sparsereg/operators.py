"""Forward operators mapping coefficient vectors to data vectors.

Each operator exposes its action, the action of its derivative at a point,
and the adjoint of that derivative, which is all the solvers need.  Linear
instances simply ignore the linearization point.
"""

import warnings
from abc import ABC, abstractmethod

import numpy as np

__all__ = [
    "ForwardOperator",
    "make_dense_linear",
    "make_diagonal_linear",
    "make_convolution_linear",
    "make_toy_nonlinear",
    "operator_norm_sq",
    "load_matrix_csv",
]


def _as_vector(x, size: int, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != size:
        raise ValueError(f"expected {what} of length {size}, got shape {x.shape}")
    return x


class ForwardOperator(ABC):
    """Map F from length-n coefficient vectors to length-m data vectors."""

    _n: int
    _m: int
    _linear: bool

    @property
    def n(self) -> int:
        """Input (coefficient) dimension."""
        return self._n

    @property
    def m(self) -> int:
        """Output (data) dimension."""
        return self._m

    @property
    def is_linear(self) -> bool:
        return self._linear

    @abstractmethod
    def apply(self, u) -> np.ndarray:
        """Evaluate F(u)."""

    @abstractmethod
    def derivative_apply(self, u, h) -> np.ndarray:
        """Evaluate the derivative of F at u in direction h."""

    @abstractmethod
    def derivative_adjoint_apply(self, u, y) -> np.ndarray:
        """Evaluate the adjoint of the derivative of F at u on y."""


class _DenseLinear(ForwardOperator):
    def __init__(self, matrix):
        a = np.asarray(matrix, dtype=np.float64)
        if a.ndim != 2 or a.size == 0:
            raise ValueError(f"matrix must be 2-d and nonempty, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        self.matrix = a
        self._m, self._n = a.shape
        self._linear = True

    def apply(self, u):
        return self.matrix @ _as_vector(u, self._n, "coefficient vector")

    def derivative_apply(self, u, h):
        return self.matrix @ _as_vector(h, self._n, "direction")

    def derivative_adjoint_apply(self, u, y):
        return self.matrix.T @ _as_vector(y, self._m, "data vector")


class _DiagonalLinear(ForwardOperator):
    def __init__(self, singular_values):
        s = np.asarray(singular_values, dtype=np.float64)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("singular values must form a nonempty 1-d sequence")
        if not np.all(np.isfinite(s)) or np.any(s <= 0.0):
            raise ValueError("singular values must be positive and finite")
        self.singular_values = s
        self._n = self._m = s.size
        self._linear = True

    def apply(self, u):
        return self.singular_values * _as_vector(u, self._n, "coefficient vector")

    def derivative_apply(self, u, h):
        return self.singular_values * _as_vector(h, self._n, "direction")

    def derivative_adjoint_apply(self, u, y):
        return self.singular_values * _as_vector(y, self._m, "data vector")


class _CircularConvolution(ForwardOperator):
    def __init__(self, kernel, n: int):
        k = np.asarray(kernel, dtype=np.float64)
        if k.ndim != 1 or k.size == 0:
            raise ValueError("kernel must be a nonempty 1-d sequence")
        if k.size > n:
            raise ValueError(f"kernel length {k.size} exceeds signal length {n}")
        if not np.all(np.isfinite(k)):
            raise ValueError("kernel entries must be finite")
        self.kernel = k
        padded = np.zeros(n)
        padded[: k.size] = k
        # frequency response; multiplying by its conjugate applies the
        # transpose (correlation with the kernel)
        self._khat = np.fft.rfft(padded)
        self._n = self._m = n
        self._linear = True

    def apply(self, u):
        u = _as_vector(u, self._n, "coefficient vector")
        return np.fft.irfft(np.fft.rfft(u) * self._khat, self._n)

    def derivative_apply(self, u, h):
        return self.apply(h)

    def derivative_adjoint_apply(self, u, y):
        y = _as_vector(y, self._m, "data vector")
        return np.fft.irfft(np.fft.rfft(y) * np.conj(self._khat), self._n)


class _ToyNonlinear(ForwardOperator):
    """F(u) = A u + eps * B (u * u), with closed-form derivative."""

    def __init__(self, a, b, eps: float):
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.ndim != 2 or b.ndim != 2 or a.shape != b.shape:
            raise ValueError(
                f"matrices must be 2-d with equal shapes, got {a.shape} and {b.shape}"
            )
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.isfinite(eps)):
            raise ValueError("matrix entries and eps must be finite")
        self.a_matrix = a
        self.b_matrix = b
        self.eps = float(eps)
        self._m, self._n = a.shape
        self._linear = False

    def apply(self, u):
        u = _as_vector(u, self._n, "coefficient vector")
        return self.a_matrix @ u + self.eps * (self.b_matrix @ (u * u))

    def derivative_apply(self, u, h):
        u = _as_vector(u, self._n, "linearization point")
        h = _as_vector(h, self._n, "direction")
        return self.a_matrix @ h + 2.0 * self.eps * (self.b_matrix @ (u * h))

    def derivative_adjoint_apply(self, u, y):
        u = _as_vector(u, self._n, "linearization point")
        y = _as_vector(y, self._m, "data vector")
        return self.a_matrix.T @ y + 2.0 * self.eps * u * (self.b_matrix.T @ y)


def make_dense_linear(matrix) -> ForwardOperator:
    """Linear operator given by an explicit m-by-n matrix."""
    return _DenseLinear(matrix)


def make_diagonal_linear(singular_values) -> ForwardOperator:
    """Square linear operator that scales coefficient i by the i-th value.

    Decaying values model increasingly ill-posed problems; the values are
    required positive so the operator stays injective.
    """
    return _DiagonalLinear(singular_values)


def make_convolution_linear(kernel, n: int) -> ForwardOperator:
    """Circular convolution with the given kernel on length-n vectors.

    The adjoint is correlation, implemented as convolution with the
    reversed kernel via the conjugate frequency response.
    """
    return _CircularConvolution(kernel, n)


def make_toy_nonlinear(a, b, eps: float) -> ForwardOperator:
    """Differentiable nonlinear operator F(u) = A u + eps * B (u*u).

    eps = 0 degenerates to the dense linear operator A, which makes the
    nonlinear solver path directly comparable with the linear one.
    """
    return _ToyNonlinear(a, b, eps)


def operator_norm_sq(op: ForwardOperator, at=None) -> float:
    """Largest eigenvalue of F'(u)* F'(u), the squared derivative norm at u.

    Power iteration from a fixed seeded start vector, 200 iterations or
    relative Rayleigh-quotient change below 1e-10; works for matrix-free
    operators.  `at` defaults to the zero vector.
    """
    if at is None:
        at = np.zeros(op.n)
    at = _as_vector(at, op.n, "linearization point")
    rng = np.random.default_rng(0)
    x = rng.standard_normal(op.n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(200):
        z = op.derivative_adjoint_apply(at, op.derivative_apply(at, x))
        lam_new = float(x @ z)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return 0.0
        converged = abs(lam_new - lam) <= 1e-10 * max(abs(lam_new), 1.0)
        lam = lam_new
        if converged:
            break
        x = z / nz
    return lam


def load_matrix_csv(path) -> np.ndarray:
    """Read a row-major, header-free CSV file as a dense matrix."""
    with warnings.catch_warnings():
        # empty input is reported as a ValueError below, not a warning
        warnings.simplefilter("ignore", UserWarning)
        a = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    if a.size == 0:
        raise ValueError(f"matrix file {path} is empty")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"matrix file {path} contains non-finite entries")
    return a
