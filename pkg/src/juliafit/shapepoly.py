"""Shape polynomials: root sampling on an inflated image of the unit circle,
and overflow-safe evaluation of the node product and its companion map.

For a shape with n roots r_k and leading map coefficient c, the node product
is omega(z) = c**(-n) * prod(z - r_k) and the dynamic map is
P(z) = z * (omega(z) + 1). Every root is a fixed point of P and the origin is
attracting once omega is uniformly close to -1 inside the shape. Degrees run
to several hundred, so all products are carried as mantissa * 2**exponent
pairs; renormalization by powers of two is exact in binary floating point,
which keeps the scalar and vectorized paths in agreement.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .conformal import ExteriorMap, evaluate_map
from .curves import AnnulusSpec
from .errors import DuplicateRoots, MapDiverged, NoEpsilon

#: exponent saturation; reaching it means the value is astronomically large
#: (or small) and its magnitude class can never change back
EXP_CAP = 2 ** 30
#: |exponent| below which values are materialized as ordinary complex numbers
#: (any cutoff >= 54 yields bit-identical results; 128 leaves headroom)
_MID = 128


# ---------------------------------------------------------------------------
# scaled complex scalars


@dataclass(frozen=True)
class ScaledComplex:
    """Complex number as mantissa * 2**exponent with |mantissa| near 1.

    Precision is relative to the magnitude: a component more than ~300 orders
    of magnitude below |z| falls out of the mantissa's double range and is
    flushed, which never matters for products and sums anchored at |z|.
    """

    mantissa: complex
    exponent: int

    @staticmethod
    def from_value(z) -> "ScaledComplex":
        z = complex(z)
        if z == 0:
            return ScaledComplex(0j, 0)
        _, e = math.frexp(abs(z))
        return ScaledComplex(complex(math.ldexp(z.real, -e), math.ldexp(z.imag, -e)), e)

    @staticmethod
    def one() -> "ScaledComplex":
        return ScaledComplex(0.5 + 0j, 1)

    def _norm(self, m: complex, e: int) -> "ScaledComplex":
        if m == 0:
            return ScaledComplex(0j, 0)
        _, sh = math.frexp(abs(m))
        e = e + sh
        if e >= EXP_CAP:
            e = EXP_CAP
        elif e <= -EXP_CAP:
            e = -EXP_CAP
        return ScaledComplex(complex(math.ldexp(m.real, -sh), math.ldexp(m.imag, -sh)), e)

    @property
    def is_zero(self) -> bool:
        return self.mantissa == 0

    @property
    def log2_abs(self) -> float:
        if self.is_zero:
            return -math.inf
        return math.log2(abs(self.mantissa)) + self.exponent

    def mul(self, other: "ScaledComplex") -> "ScaledComplex":
        return self._norm(self.mantissa * other.mantissa,
                          self.exponent + other.exponent)

    def mul_complex(self, z: complex) -> "ScaledComplex":
        return self._norm(self.mantissa * z, self.exponent)

    def reciprocal(self) -> "ScaledComplex":
        if self.is_zero:
            raise ZeroDivisionError("reciprocal of scaled zero")
        return self._norm(1.0 / self.mantissa, -self.exponent)

    def add(self, other: "ScaledComplex") -> "ScaledComplex":
        if other.is_zero:
            return self
        if self.is_zero:
            return other
        hi, lo = (self, other) if self.exponent >= other.exponent else (other, self)
        d = hi.exponent - lo.exponent
        if d > 64:
            return hi
        m = hi.mantissa + complex(math.ldexp(lo.mantissa.real, -d),
                                  math.ldexp(lo.mantissa.imag, -d))
        return self._norm(m, hi.exponent)

    def add_complex(self, z: complex) -> "ScaledComplex":
        return self.add(ScaledComplex.from_value(z))

    def sub_complex(self, z: complex) -> "ScaledComplex":
        return self.add(ScaledComplex.from_value(-z))

    def to_complex(self) -> complex:
        """Materialize; only valid when the exponent is in double range."""
        if self.is_zero:
            return 0j
        if not -1020 <= self.exponent <= 1020:
            raise OverflowError(f"exponent {self.exponent} outside double range")
        return complex(math.ldexp(self.mantissa.real, self.exponent),
                       math.ldexp(self.mantissa.imag, self.exponent))


@dataclass(frozen=True)
class EscapedLarge:
    """Symbolic stand-in for a value too large to materialize."""

    log2_magnitude: float

    def __abs__(self):
        return math.inf


def scaled_power(base: complex, k: int) -> ScaledComplex:
    """base**k for integer k (binary exponentiation, exact renormalization)."""
    neg = k < 0
    k = abs(k)
    acc = ScaledComplex.one()
    b = ScaledComplex.from_value(base)
    while k:
        if k & 1:
            acc = acc.mul(b)
        b = b.mul(b)
        k >>= 1
    return acc.reciprocal() if neg else acc


# ---------------------------------------------------------------------------
# shape polynomials


@dataclass(frozen=True)
class ShapePolynomial:
    """n roots, inflation epsilon, frame shift t, leading coefficient.

    Roots live in the shifted frame (source curve minus t); the map has degree
    n + 1 there. Original-frame evaluation conjugates by the shift.
    """

    n: int
    epsilon: float
    t: complex
    capacity: complex
    roots: np.ndarray

    def __post_init__(self):
        self.roots.setflags(write=False)
        if self.n != len(self.roots):
            raise DuplicateRoots(f"n={self.n} but {len(self.roots)} roots")
        if self.epsilon <= 0:
            raise NoEpsilon("inflation must be positive")
        if not abs(self.capacity) > 0:
            raise MapDiverged("capacity must be nonzero")
        _check_distinct(self.roots)
        object.__setattr__(self, "_cap_pow", scaled_power(self.capacity, -self.n))

    @property
    def degree(self) -> int:
        return self.n + 1

    @property
    def cap_pow(self) -> ScaledComplex:
        return self._cap_pow


def _check_distinct(roots: np.ndarray) -> None:
    d = np.abs(roots[:, None] - roots[None, :])
    np.fill_diagonal(d, np.inf)
    scale = float(np.abs(roots).max())
    if d.min() <= 1e-12 * scale:
        i, j = np.unravel_index(int(d.argmin()), d.shape)
        raise DuplicateRoots(f"roots {i} and {j} coincide (map degeneracy)")


def select_epsilon(m: ExteriorMap, annulus: AnnulusSpec, *,
                   max_halvings: int = 20, samples: int = 4096) -> float:
    """Largest inflation from the halving schedule 1/2, 1/4, ... whose image
    circle stays strictly inside the annulus band. The annulus must be given
    in the map's output frame (source curve minus t)."""
    th = 2.0 * np.pi * np.arange(samples) / samples
    ring = np.exp(1j * th)
    for k in range(1, max_halvings + 1):
        eps = 2.0 ** -k
        pts = evaluate_map(m, (1.0 + eps) * ring)
        if np.all(annulus.strictly_in_band(pts)):
            return eps
    raise NoEpsilon(
        f"no inflation down to 2**-{max_halvings} stays inside the annulus "
        "(map quality or annulus width insufficient)")


def sample_roots(m: ExteriorMap, epsilon: float, n: int,
                 t: complex | None = None,
                 frame_offset: complex = 0j) -> ShapePolynomial:
    """Roots r_k = map((1+eps) * e^(2 pi i k / n)), k = 1..n, and the rescaled
    leading coefficient (1+eps) * capacity.

    frame_offset shifts the sampled roots out of the map's own frame (source
    curve minus basepoint) into the caller's working frame; the leading
    coefficient is translation invariant.
    """
    if n < 8:
        raise DuplicateRoots(f"need at least 8 roots, got {n}")
    k = np.arange(1, n + 1)
    w = (1.0 + epsilon) * np.exp(2j * np.pi * k / n)
    roots = evaluate_map(m, w) + frame_offset
    return ShapePolynomial(n=n, epsilon=float(epsilon),
                           t=complex(m.t if t is None else t),
                           capacity=(1.0 + epsilon) * m.capacity,
                           roots=roots)


def make_circle_shape(radius: float = 1.0, epsilon: float = 0.0625,
                      n: int = 64, t: complex = 0j) -> ShapePolynomial:
    """Closed-form shape for a circle of given radius centered at the frame
    origin: roots are exactly equally spaced on the inflated circle."""
    c = (1.0 + epsilon) * radius
    k = np.arange(1, n + 1)
    return ShapePolynomial(n=n, epsilon=float(epsilon), t=complex(t),
                           capacity=complex(c),
                           roots=c * np.exp(2j * np.pi * k / n))


# ---------------------------------------------------------------------------
# scalar evaluation


def _omega_scaled(shape: ShapePolynomial, z) -> ScaledComplex:
    if isinstance(z, ScaledComplex):
        acc = ScaledComplex.one()
        for r in shape.roots:
            acc = acc.mul(z.sub_complex(complex(r)))
    else:
        z = complex(z)
        acc = ScaledComplex.one()
        for r in shape.roots:
            acc = acc.mul_complex(z - complex(r))
    return acc.mul(shape.cap_pow)


def eval_omega(shape: ShapePolynomial, z, frame: str = "translated") -> ScaledComplex:
    """Node product at z, as a scaled complex (never overflows). In the
    original frame the argument is shifted by -t first."""
    if frame == "original":
        z = z.sub_complex(shape.t) if isinstance(z, ScaledComplex) else complex(z) - shape.t
    elif frame != "translated":
        raise ValueError(f"unknown frame {frame!r}")
    return _omega_scaled(shape, z)


def _p_from_omega(omega: ScaledComplex, z) -> ScaledComplex:
    zsc = z if isinstance(z, ScaledComplex) else ScaledComplex.from_value(z)
    return omega.add_complex(1.0).mul(zsc)


def eval_P_scaled(shape: ShapePolynomial, z, frame: str = "translated") -> ScaledComplex:
    if frame == "original":
        zt = z.sub_complex(shape.t) if isinstance(z, ScaledComplex) else complex(z) - shape.t
        res = _p_from_omega(_omega_scaled(shape, zt), zt)
        return res.add_complex(shape.t)
    return _p_from_omega(_omega_scaled(shape, z), z)


def eval_P(shape: ShapePolynomial, z, frame: str = "translated"):
    """The dynamic map z * (omega(z) + 1), conjugated by the frame shift when
    frame="original". Returns a complex number, or EscapedLarge when the
    result exceeds double range."""
    res = eval_P_scaled(shape, z, frame)
    try:
        return res.to_complex()
    except OverflowError:
        return EscapedLarge(res.log2_abs)


# ---------------------------------------------------------------------------
# vectorized evaluation (the per-pixel kernels)


def _renorm(w: np.ndarray, e: np.ndarray) -> None:
    _, sh = np.frexp(np.abs(w))
    w.real = np.ldexp(w.real, -sh)
    w.imag = np.ldexp(w.imag, -sh)
    e += sh


def omega_scaled_array(shape: ShapePolynomial, z: np.ndarray):
    """Vectorized node product over plain complex points (shifted frame).
    Returns (mantissa, exponent) arrays."""
    w = np.ones(z.shape, dtype=np.complex128)
    e = np.zeros(z.shape, dtype=np.int64)
    tmp = np.empty_like(w)
    for j, r in enumerate(shape.roots):
        np.subtract(z, r, out=tmp)
        w *= tmp
        if j % 8 == 7:
            _renorm(w, e)
    _renorm(w, e)
    cp = shape.cap_pow
    w *= cp.mantissa
    _renorm(w, e)
    e += cp.exponent
    return w, e


def omega_plus_one_scaled_array(w: np.ndarray, e: np.ndarray):
    """(omega + 1) from scaled omega, same materialization rule as the scalar
    path: the smaller of the two terms is dropped beyond the cutoff."""
    ow = w.copy()
    oe = e.copy()
    mid = np.abs(e) <= _MID
    if mid.any():
        sc = e[mid].astype(np.int32)
        val = np.ldexp(w.real[mid], sc) + 1j * np.ldexp(w.imag[mid], sc) + 1.0
        _, sh = np.frexp(np.abs(val))
        ow[mid] = np.ldexp(val.real, -sh) + 1j * np.ldexp(val.imag, -sh)
        oe[mid] = sh
    tiny = e < -_MID
    if tiny.any():
        ow[tiny] = 0.5
        oe[tiny] = 1
    return ow, oe


def p_step_array(shape: ShapePolynomial, z: np.ndarray):
    """One application of the dynamic map to an array of shifted-frame points.
    Returns (values, log2 magnitudes); values are materialized only where the
    exponent permits, with +/-inf placeholders elsewhere."""
    w, e = omega_scaled_array(shape, z)
    w, e = omega_plus_one_scaled_array(w, e)
    w *= z
    _renorm(w, e)
    return materialize(w, e)


def materialize(w: np.ndarray, e: np.ndarray):
    """Turn scaled pairs into (values, log2 magnitudes)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        log2m = np.log2(np.abs(w)) + e
    vals = np.full(w.shape, np.inf + 0j, dtype=np.complex128)
    ok = np.abs(e) <= 970
    sc = e[ok].astype(np.int32)
    vals[ok] = np.ldexp(w.real[ok], sc) + 1j * np.ldexp(w.imag[ok], sc)
    vals[e < -970] = 0j
    return vals, log2m


class PolynomialKernel:
    """Per-pixel iteration kernel for the shifted-frame polynomial."""

    def __init__(self, shape: ShapePolynomial):
        self.shape = shape

    def step(self, z: np.ndarray):
        return p_step_array(self.shape, z)


# ---------------------------------------------------------------------------
# persistence


def shape_to_obj(shape: ShapePolynomial) -> dict:
    return {
        "kind": "shape_polynomial",
        "n": shape.n,
        "epsilon": shape.epsilon,
        "t": [shape.t.real, shape.t.imag],
        "capacity": [shape.capacity.real, shape.capacity.imag],
        "roots": [[float(r.real), float(r.imag)] for r in shape.roots],
    }


def load_shape_obj(obj: dict) -> ShapePolynomial:
    """Rebuild a shape from its dump; the constructor re-verifies the root
    and capacity invariants."""
    if obj.get("kind") != "shape_polynomial":
        raise DuplicateRoots("not a shape polynomial dump")
    return ShapePolynomial(
        n=int(obj["n"]), epsilon=float(obj["epsilon"]),
        t=complex(*obj["t"]), capacity=complex(*obj["capacity"]),
        roots=np.array([complex(a, b) for a, b in obj["roots"]]))


def save_shape(shape: ShapePolynomial, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(shape_to_obj(shape), fh, indent=1)
        fh.write("\n")


def load_shape(path) -> ShapePolynomial:
    with open(path, "r", encoding="utf-8") as fh:
        return load_shape_obj(json.load(fh))
