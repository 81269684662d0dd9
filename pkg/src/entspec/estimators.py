"""Post-processing of measured shots into Renyi estimates and spectra.

Each shot of the Bell-basis circuits yields a sign ``(-1)**(sum of
control*target over the measured pairs)``; each shot of the controlled
permutation yields ``+1`` for ancilla 0 and ``-1`` for ancilla 1.  The mean
sign estimates ``Tr(rho_A^n)**2`` (two-copy), ``Tr(rho_A^2)`` (Bell purity) or
``Tr(rho_A^n)`` (controlled permutation).

Two standard deviations are reported.  ``sigma`` is the conventional formula
quoted for these protocols; it treats a sign with mean ``R`` as a Bernoulli
variable of parameter ``R`` and so understates the spread.  ``sigma_pm1`` is
the standard deviation of a mean of ``M`` signs, ``sqrt(1 - mean**2)/sqrt(M)``,
propagated to ``R_n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, EmptyEstimateError


@dataclass
class ShotSet:
    """Measured bitstrings plus post-selection flags.

    ``bits`` is a ``(M, N)`` uint8 array in logical qubit order.  When
    ``weights`` is given the rows are distinct outcomes weighted by their exact
    probabilities and estimates carry no sampling error.
    """

    bits: np.ndarray
    accepted: np.ndarray | None = None
    pairing: tuple = ()
    ancilla: int | None = None
    n: int | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint8)
        if self.bits.ndim != 2:
            raise ValueError("bits must be a (shots, qubits) array")
        if self.accepted is None:
            self.accepted = np.ones(len(self.bits), dtype=bool)
        self.accepted = np.asarray(self.accepted, dtype=bool)
        if self.accepted.shape != (len(self.bits),):
            raise ValueError("accepted needs one flag per shot")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != (len(self.bits),):
                raise ValueError("weights needs one entry per shot")
        self.pairing = tuple(tuple(p) for p in self.pairing)

    @classmethod
    def from_bitstrings(cls, bitstrings, **kwargs) -> "ShotSet":
        lengths = {len(b) for b in bitstrings}
        if len(lengths) > 1:
            raise ValueError("bitstrings differ in length")
        width = lengths.pop() if lengths else kwargs.pop("num_qubits", 0)
        kwargs.pop("num_qubits", None)
        bits = np.array([[c == "1" for c in b] for b in bitstrings], dtype=np.uint8).reshape(-1, width)
        return cls(bits, **kwargs)

    @property
    def bitstrings(self) -> list[str]:
        return ["".join("1" if b else "0" for b in row) for row in self.bits]

    @property
    def total(self) -> int:
        return len(self.bits)

    @property
    def num_accepted(self) -> int:
        return int(self.accepted.sum())

    @property
    def exact(self) -> bool:
        return self.weights is not None

    def accepted_fraction(self) -> float:
        if self.weights is not None:
            total = self.weights.sum()
            return float(self.weights[self.accepted].sum() / total) if total else 0.0
        return self.num_accepted / self.total if self.total else 0.0

    def with_accepted(self, accepted) -> "ShotSet":
        return ShotSet(self.bits, accepted, self.pairing, self.ancilla, self.n, self.weights)


@dataclass
class RenyiEstimate:
    n: int
    R_n: float
    sigma: float
    M: int
    S_n: float | None
    raw_mean: float
    sigma_pm1: float
    accepted_fraction: float = 1.0
    clamped: bool = False
    algorithm: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm, "n": self.n, "R_n": self.R_n, "sigma": self.sigma,
            "sigma_pm1": self.sigma_pm1, "S_n": self.S_n, "M": self.M, "raw_mean": self.raw_mean,
            "accepted_fraction": self.accepted_fraction, "clamped": self.clamped,
            "M_Rn2": self.M * self.R_n ** 2,
        }


@dataclass
class Spectrum:
    """Reconstructed eigenvalues, largest first."""

    eigenvalues: list[float]
    n_max: int
    roots: list[complex] = field(default_factory=list)
    flagged: list[complex] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n_max": self.n_max, "eigenvalues": list(self.eigenvalues),
            "flagged": [[z.real, z.imag] for z in self.flagged],
        }


# --- signs -----------------------------------------------------------------

def parity_sign(bits, pairing) -> int:
    """(-1)**(sum over pairs of bit[control]*bit[target])."""
    n = len(bits)
    total = 0
    for c, t in pairing:
        if not (0 <= c < n and 0 <= t < n):
            raise ValueError(f"pair ({c}, {t}) outside a {n}-bit outcome")
        total += int(bits[c] in (1, "1")) & int(bits[t] in (1, "1"))
    return -1 if total & 1 else 1


def parity_signs(bits: np.ndarray, pairing) -> np.ndarray:
    """Vectorized :func:`parity_sign` over the rows of a uint8 array."""
    bits = np.asarray(bits, dtype=np.uint8)
    if not pairing:
        return np.ones(len(bits), dtype=np.int8)
    c = np.array([p[0] for p in pairing])
    t = np.array([p[1] for p in pairing])
    if bits.ndim != 2 or max(c.max(), t.max()) >= bits.shape[1]:
        raise ValueError("pairing indices outside the outcomes")
    par = np.bitwise_xor.reduce(bits[:, c] & bits[:, t], axis=1)
    return (1 - 2 * par.astype(np.int8)).astype(np.int8)


def ancilla_signs(bits: np.ndarray, ancilla: int) -> np.ndarray:
    return (1 - 2 * np.asarray(bits, dtype=np.int8)[:, ancilla]).astype(np.int8)


def _mean(signs: np.ndarray, shots: ShotSet) -> tuple[float, int]:
    mask = shots.accepted
    if shots.weights is not None:
        w = shots.weights[mask]
        if not mask.any() or w.sum() <= 0:
            raise EmptyEstimateError("no accepted outcomes carry probability")
        return float(np.dot(signs[mask], w) / w.sum()), int(mask.sum())
    m = int(mask.sum())
    if m == 0:
        raise EmptyEstimateError("post-selection discarded every shot")
    return float(signs[mask].mean()), m


def renyi_entropy(R_n: float, n: int) -> float:
    """S_n = log(R_n) / (1 - n), natural log."""
    if int(n) != n or n < 2:
        raise ValueError("n must be an integer >= 2")
    if not R_n > 0:
        raise ValueError(f"Renyi entropy undefined for R_n = {R_n}")
    return math.log(R_n) / (1 - n)


def _entropy_or_none(R: float, n: int | None):
    if n is None or n < 2 or R <= 0:
        return None
    return renyi_entropy(R, n)


def two_copy_from_mean(raw: float, M: int, n: int | None, exact: bool = False,
                       accepted_fraction: float = 1.0) -> RenyiEstimate:
    """Two-copy estimate from the mean parity sign ``raw`` (estimates R_n**2)."""
    clamped = raw < 0
    R = math.sqrt(min(max(raw, 0.0), 1.0))
    if exact:
        sigma = sigma_pm1 = 0.0
    else:
        sigma = math.sqrt(max(1 - R * R, 0.0)) / (2 * math.sqrt(M))
        sd_raw = math.sqrt(max(1 - raw * raw, 0.0) / M)
        sigma_pm1 = sd_raw / (2 * R) if R > 0 else math.inf
    return RenyiEstimate(n, R, sigma, M, _entropy_or_none(R, n), raw, sigma_pm1,
                         accepted_fraction, clamped, "two_copy")


def jst_from_mean(R: float, M: int, n: int | None, exact: bool = False,
                  accepted_fraction: float = 1.0) -> RenyiEstimate:
    if exact:
        sigma = sigma_pm1 = 0.0
    else:
        sigma = math.sqrt(max(R * (1 - R), 0.0)) / math.sqrt(M)
        sigma_pm1 = math.sqrt(max(1 - R * R, 0.0) / M)
    return RenyiEstimate(n, R, sigma, M, _entropy_or_none(R, n), R, sigma_pm1,
                         accepted_fraction, False, "jst")


def bell_purity_from_mean(R: float, M: int, exact: bool = False,
                          accepted_fraction: float = 1.0) -> RenyiEstimate:
    sigma = 0.0 if exact else math.sqrt(max(1 - R * R, 0.0) / M)
    return RenyiEstimate(2, R, sigma, M, _entropy_or_none(R, 2), R, sigma,
                         accepted_fraction, False, "bell_purity")


def estimate_two_copy(shots: ShotSet, n: int | None = None) -> RenyiEstimate:
    """R_n from two-copy parity signs: the mean estimates R_n squared."""
    raw, M = _mean(parity_signs(shots.bits, shots.pairing), shots)
    return two_copy_from_mean(raw, M, n if n is not None else shots.n, shots.exact,
                              shots.accepted_fraction())


def estimate_jst(shots: ShotSet, n: int | None = None) -> RenyiEstimate:
    """R_n as the mean ancilla sign of the controlled-permutation circuit."""
    if shots.ancilla is None:
        raise ValueError("JST shots need an ancilla index")
    R, M = _mean(ancilla_signs(shots.bits, shots.ancilla), shots)
    return jst_from_mean(R, M, n if n is not None else shots.n, shots.exact,
                         shots.accepted_fraction())


def estimate_bell_purity(shots: ShotSet) -> RenyiEstimate:
    """Tr(rho_A^2) as the mean parity sign of the Bell-basis circuit."""
    R, M = _mean(parity_signs(shots.bits, shots.pairing), shots)
    return bell_purity_from_mean(R, M, shots.exact, shots.accepted_fraction())


ESTIMATORS = {"two_copy": estimate_two_copy, "jst": estimate_jst,
              "bell_purity": lambda shots, n=None: estimate_bell_purity(shots)}


def estimate(algorithm: str, shots: ShotSet, n: int | None = None) -> RenyiEstimate:
    if algorithm not in ESTIMATORS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return ESTIMATORS[algorithm](shots, n)


def estimate_from_mean(algorithm: str, mean: float, n: int, M: int = 0, exact: bool = True,
                       accepted_fraction: float = 1.0) -> RenyiEstimate:
    """Estimate built from an already computed mean sign."""
    if algorithm == "two_copy":
        return two_copy_from_mean(mean, M, n, exact, accepted_fraction)
    if algorithm == "jst":
        return jst_from_mean(mean, M, n, exact, accepted_fraction)
    if algorithm == "bell_purity":
        return bell_purity_from_mean(mean, M, exact, accepted_fraction)
    raise ValueError(f"unknown algorithm {algorithm!r}")


# --- spectrum reconstruction ------------------------------------------------

def newton_girard_coeffs(R) -> list[float]:
    """Elementary symmetric polynomials e_0..e_m from power sums R_1..R_m."""
    R = [float(r) for r in R]
    if not R:
        raise ValueError("need at least one power sum")
    e = [1.0]
    for j in range(1, len(R) + 1):
        s = sum((-1) ** (i - 1) * e[j - i] * R[i - 1] for i in range(1, j + 1))
        e.append(s / j)
    return e


def durand_kerner(coeffs, tol: float = 1e-12, max_iter: int = 1000, radius: float = 0.4,
                  center: complex | None = None) -> np.ndarray:
    """All roots of a polynomial (coefficients highest degree first).

    Simultaneous Weierstrass iteration from points on a circle.  Stops when
    every update falls below ``tol`` or every residual is within the rounding
    error of evaluating it; multiple roots converge only linearly and usually
    stop on the second test.
    """
    a = np.asarray(coeffs, dtype=complex)
    if a.size < 2 or a[0] == 0:
        raise ValueError("need a polynomial of degree >= 1 with non-zero leading coefficient")
    a = a / a[0]
    deg = a.size - 1
    if center is None:
        center = -a[1] / deg
    z = center + radius * np.exp(1j * (2 * np.pi * np.arange(deg) / deg + 0.4))
    step = np.inf
    for it in range(1, max_iter + 1):
        resid = np.polyval(a, z)
        noise = 8 * deg * np.finfo(float).eps * np.polyval(np.abs(a), np.abs(z))
        if np.all(np.abs(resid) <= np.maximum(noise, tol * tol)):
            return z
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        denom = diff.prod(axis=1)
        if np.any(denom == 0):
            z = z + 1e-9 * np.exp(1j * np.arange(deg))
            continue
        delta = resid / denom
        z = z - delta
        step = np.max(np.abs(delta))
        if step < tol:
            return z
    raise ConvergenceError("Durand-Kerner did not converge", iterations=max_iter,
                           last_step=float(step), roots=z.tolist())


def merge_clusters(roots, coeffs=None, imag_tol: float = 1e-6,
                   cluster_tol: float = 1e-3) -> np.ndarray:
    """Replace each tight cluster that contains a non-real root by one point.

    An ``m``-fold root comes back as a small ``m``-gon of radius about
    ``eps**(1/m)``.  The cluster is replaced by its centroid, which is then
    polished by Newton steps on the ``(m-1)``-th derivative of the polynomial
    (where the root is simple) when ``coeffs`` are given.  Clusters of real
    roots are left alone so that close, distinct eigenvalues are not merged.
    """
    z = np.asarray(roots, dtype=complex)
    label = np.arange(z.size)
    for i in range(z.size):
        for j in range(i + 1, z.size):
            if abs(z[i] - z[j]) < cluster_tol:
                label[label == label[j]] = label[i]
    out = z.copy()
    for lab in np.unique(label):
        idx = np.flatnonzero(label == lab)
        if idx.size < 2 or np.all(np.abs(z[idx].imag) < imag_tol):
            continue
        x = z[idx].mean()
        if coeffs is not None:
            d = np.polyder(np.asarray(coeffs, dtype=complex), idx.size - 1)
            dd = np.polyder(d)
            for _ in range(20):
                slope = np.polyval(dd, x)
                if slope == 0:
                    break
                step = np.polyval(d, x) / slope
                x -= step
                if abs(step) < 1e-15:
                    break
        out[idx] = x
    return out


def spectrum_from_renyi(R, n_max: int, imag_tol: float = 1e-6,
                        window: tuple[float, float] = (-0.05, 1.05)) -> Spectrum:
    """Largest ``n_max`` eigenvalues from power sums ``R = [R_1, R_2, ...]``.

    Roots of ``x^N - e_1 x^(N-1) + e_2 x^(N-2) - ...`` with ``N = n_max``.  Roots
    with a non-negligible imaginary part or outside ``window`` are flagged
    rather than returned.  Repeated roots are resolved by :func:`merge_clusters`.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if len(R) < n_max:
        raise ValueError(f"need {n_max} power sums, got {len(R)}")
    e = newton_girard_coeffs(list(R)[:n_max])
    coeffs = [(-1) ** j * e[j] for j in range(n_max + 1)]
    roots = merge_clusters(durand_kerner(coeffs), coeffs, imag_tol)
    roots = sorted(roots, key=lambda z: -z.real)
    kept = [z for z in roots if abs(z.imag) < imag_tol and window[0] <= z.real <= window[1]]
    flagged = [complex(z) for z in roots if z not in kept]
    return Spectrum([float(z.real) for z in kept], n_max, [complex(z) for z in roots], flagged)
