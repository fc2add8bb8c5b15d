"""Haar-distributed row-orthonormal matrices and Monte Carlo ensemble averages.

Every Monte Carlo routine splits the ``S`` draws into fixed-size blocks.  Block
``b`` draws from its own counter-based stream, so the result depends only on
``(seed, stream_id, S)`` and never on how many worker threads were used.
Per-entry means and squared deviations are merged with the pairwise
(Chan et al.) update in block order.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import EnsembleError, EvaluationError, InputError, SizeError
from .spectral import Spectrum, as_hermitian, complex_gaussian, zero_tolerance

__all__ = [
    "RngStream",
    "McEstimate",
    "sample_haar",
    "sample_haar_batch",
    "mc_invcov",
    "mc_cov",
    "mc_fcov",
    "mc_zero_block",
    "mc_invcov_diagonal",
    "mc_expectation",
    "permutation_invcov_exact",
    "permutation_invcov_enumerate",
    "mc_wishart_inv_trace",
    "default_threads",
]

BLOCK = 1000
MAX_ENUMERATE_N = 8

Reduce = Literal["full", "diag", "trace"]


def default_threads() -> int:
    raw = os.environ.get("SINGCOV_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream identified by ``(seed, stream_id)``."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise InputError("seed must fit in 64 unsigned bits")
        if int(self.stream_id) < 0:
            raise InputError("stream_id must be non-negative")

    def generator(self, *sub: int) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id), *map(int, sub)))
        return np.random.Generator(np.random.Philox(seq))

    def child(self, index: int) -> RngStream:
        """Derived stream for nested use (e.g. one per benchmark trial)."""
        seq = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id), 1 << 30, int(index)))
        return RngStream(int(seq.generate_state(1, np.uint64)[0]), 0)


@dataclass(frozen=True)
class McEstimate:
    """Empirical mean over ``samples`` draws with per-entry standard errors."""

    mean: NDArray
    stderr: NDArray
    samples: int

    def zscore(self, reference: ArrayLike) -> NDArray[np.float64]:
        """``|mean - reference| / stderr`` entrywise (inf where stderr is zero and they differ)."""
        diff = np.abs(self.mean - np.asarray(reference))
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(self.stderr > 0, diff / np.where(self.stderr > 0, self.stderr, 1), np.where(diff > 0, np.inf, 0.0))
        return z


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise InputError("rng must be an RngStream or numpy Generator")


def sample_haar_batch(L: int, M: int, count: int, gen: np.random.Generator) -> NDArray[np.complex128]:
    """``count`` independent L x M Haar matrices with orthonormal rows, shape ``(count, L, M)``."""
    if not 1 <= L <= M:
        raise InputError(f"need 1 <= L <= M, got L={L}, M={M}")
    z = complex_gaussian(gen, (count, M, L))
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    phase = diag / np.abs(diag)
    q = q * phase[:, None, :]
    return np.conj(np.swapaxes(q, -1, -2))


def sample_haar(L: int, M: int, rng) -> NDArray[np.complex128]:
    """One L x M matrix with ``Phi Phi* = I_L``, Haar distributed."""
    return sample_haar_batch(L, M, 1, _generator(rng))[0]


def _merge(a, b):
    """Combine (count, mean, m2) summaries; |.|^2 deviations so complex entries work."""
    na, ma, sa = a
    nb, mb, sb = b
    n = na + nb
    delta = mb - ma
    mean = ma + delta * (nb / n)
    m2 = sa + sb + np.abs(delta) ** 2 * (na * nb / n)
    return n, mean, m2


def mc_expectation(
    draw: Callable[[np.random.Generator, int, int], NDArray],
    S: int,
    rng: RngStream,
    *,
    threads: int | None = None,
) -> McEstimate:
    """Average ``draw(gen, count, offset)`` samples over ``S`` draws in deterministic blocks.

    ``draw`` returns an array of shape ``(count, ...)``; ``offset`` is the index
    of the first draw in the block (used only for error messages).
    """
    if S < 2:
        raise InputError("need at least 2 samples")
    if not isinstance(rng, RngStream):
        raise InputError("Monte Carlo routines need an RngStream for reproducibility")
    blocks = [(b, min(BLOCK, S - b * BLOCK)) for b in range(math.ceil(S / BLOCK))]

    def run(block):
        b, count = block
        vals = np.asarray(draw(rng.generator(b), count, b * BLOCK))
        mean = vals.mean(axis=0)
        m2 = (np.abs(vals - mean) ** 2).sum(axis=0)
        return count, mean, m2

    workers = threads if threads is not None else default_threads()
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    acc = parts[0]
    for part in parts[1:]:
        acc = _merge(acc, part)
    n, mean, m2 = acc
    stderr = np.sqrt(m2 / (n - 1) / n)
    return McEstimate(mean=mean, stderr=stderr, samples=n)


def _operator(D) -> tuple[NDArray, bool]:
    """Return ``(data, is_diagonal)`` for a Spectrum, diagonal vector or Hermitian matrix."""
    if isinstance(D, Spectrum):
        return D.clean_eigvals(), True
    arr = np.asarray(D)
    if arr.ndim == 1:
        if not np.all(np.isfinite(arr)) or np.iscomplexobj(arr) and np.any(arr.imag != 0):
            raise InputError("diagonal must be finite and real")
        return arr.real.astype(np.float64), True
    k = as_hermitian(arr)
    off = k - np.diag(np.diagonal(k))
    if not np.any(off):
        return np.diagonal(k).real.copy(), True
    return np.array(k), False


def _rank(data: NDArray, diagonal: bool) -> int:
    w = np.abs(data) if diagonal else np.abs(np.linalg.eigvalsh(data))
    return int(np.sum(w > zero_tolerance(w)))


def _reduce(phi: NDArray, middle: NDArray, reduce: Reduce) -> NDArray:
    """``Phi* middle Phi`` for a batch, reduced as requested."""
    if reduce == "full":
        return np.conj(np.swapaxes(phi, -1, -2)) @ middle @ phi
    right = middle @ phi
    diag = np.einsum("bli,bli->bi", np.conj(phi), right)
    if reduce == "diag":
        return diag.real
    if reduce == "trace":
        return diag.real.sum(axis=1)
    raise InputError(f"unknown reduce mode {reduce!r}")


def _project(phi: NDArray, data: NDArray, diagonal: bool) -> NDArray:
    if diagonal:
        a = (phi * data[None, None, :]) @ np.conj(np.swapaxes(phi, -1, -2))
    else:
        a = phi @ data @ np.conj(np.swapaxes(phi, -1, -2))
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def _check_L(L: int, m: int):
    if not 1 <= L <= m:
        raise InputError(f"need 1 <= L <= M, got L={L}, M={m}")


def mc_invcov(D, L: int, S: int, rng: RngStream, *, reduce: Reduce = "full", threads: int | None = None) -> McEstimate:
    """Monte Carlo ``E[Phi* (Phi D Phi*)^{-1} Phi]``."""
    data, diagonal = _operator(D)
    m = data.shape[0]
    _check_L(L, m)
    rank = _rank(data, diagonal)
    if rank < L:
        raise EnsembleError(f"every draw is singular: rank(D)={rank} < L={L}")

    def draw(gen, count, offset):
        phi = sample_haar_batch(L, m, count, gen)
        a = _project(phi, data, diagonal)
        try:
            inv = np.linalg.inv(a)
        except np.linalg.LinAlgError:
            for i in range(count):
                try:
                    np.linalg.inv(a[i])
                except np.linalg.LinAlgError:
                    raise EnsembleError(f"draw {offset + i}: Phi D Phi* is singular") from None
            raise
        return _reduce(phi, inv, reduce)

    return mc_expectation(draw, S, rng, threads=threads)


def mc_cov(D, L: int, S: int, rng: RngStream, *, reduce: Reduce = "full", threads: int | None = None) -> McEstimate:
    """Monte Carlo ``E[Phi* (Phi D Phi*) Phi]``."""
    data, diagonal = _operator(D)
    m = data.shape[0]
    _check_L(L, m)

    def draw(gen, count, offset):
        phi = sample_haar_batch(L, m, count, gen)
        return _reduce(phi, _project(phi, data, diagonal), reduce)

    return mc_expectation(draw, S, rng, threads=threads)


def mc_fcov(
    D,
    f: Callable[[NDArray], NDArray],
    L: int,
    S: int,
    rng: RngStream,
    *,
    reduce: Reduce = "full",
    threads: int | None = None,
) -> McEstimate:
    """Monte Carlo ``E[Phi* f(Phi D Phi*) Phi]`` with ``f`` applied through the eigendecomposition."""
    data, diagonal = _operator(D)
    m = data.shape[0]
    _check_L(L, m)

    def draw(gen, count, offset):
        phi = sample_haar_batch(L, m, count, gen)
        w, v = np.linalg.eigh(_project(phi, data, diagonal))
        with np.errstate(all="ignore"):
            fw = np.asarray(f(w), dtype=np.float64)
        bad = ~np.isfinite(fw)
        if np.any(bad):
            i = int(np.argwhere(bad)[0][0])
            raise EvaluationError(f"draw {offset + i}: f is undefined at reduced eigenvalue {w[i].min():.6g}")
        middle = (v * fw[:, None, :]) @ np.conj(np.swapaxes(v, -1, -2))
        return _reduce(phi, middle, reduce)

    return mc_expectation(draw, S, rng, threads=threads)


def mc_invcov_diagonal(
    d: ArrayLike, L: int, S: int, rng: RngStream, *, threads: int | None = None
) -> McEstimate:
    """Diagonal of ``mc_invcov(diag(d))`` with all zero slots averaged within each draw.

    The zero slots share one expectation, so pooling them per draw gives that
    common value a proper standard error.
    """
    data = np.asarray(d, dtype=np.float64)
    if data.ndim != 1:
        raise InputError("d must be a vector")
    m = data.size
    _check_L(L, m)
    zero = ~(data > zero_tolerance(data))
    if int(np.sum(~zero)) < L:
        raise EnsembleError(f"every draw is singular: rank(D)={int(np.sum(~zero))} < L={L}")

    def draw(gen, count, offset):
        phi = sample_haar_batch(L, m, count, gen)
        a = _project(phi, data, True)
        try:
            inv = np.linalg.inv(a)
        except np.linalg.LinAlgError:
            raise EnsembleError(f"singular Phi D Phi* in draws {offset}..{offset + count - 1}") from None
        diag = _reduce(phi, inv, "diag")
        if np.any(zero):
            diag[:, zero] = diag[:, zero].mean(axis=1, keepdims=True)
        return diag

    return mc_expectation(draw, S, rng, threads=threads)


def mc_zero_block(d: ArrayLike, L: int, S: int, rng: RngStream, *, threads: int | None = None) -> McEstimate:
    """Monte Carlo value of the common zero-block entry for a positive spectrum ``d``.

    Embeds ``diag(d, 0)`` with one extra zero slot and returns that slot's entry.
    """
    pos = np.asarray(d, dtype=np.float64)
    if pos.ndim != 1 or np.any(pos <= 0):
        raise InputError("d must be a positive vector")
    if not 1 <= L < pos.size:
        raise InputError(f"need 1 <= L < N, got L={L}, N={pos.size}")
    est = mc_invcov(np.append(pos, 0.0), L, S, rng, reduce="diag", threads=threads)
    return McEstimate(mean=np.float64(est.mean[-1]), stderr=np.float64(est.stderr[-1]), samples=est.samples)


def _positive_diagonal(D) -> NDArray[np.float64]:
    arr = np.asarray(D)
    if arr.ndim == 2:
        if arr.shape[0] != arr.shape[1] or np.any(arr - np.diag(np.diagonal(arr))):
            raise InputError("expected a diagonal matrix")
        arr = np.diagonal(arr)
    arr = np.asarray(arr.real if np.iscomplexobj(arr) else arr, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InputError("expected a non-empty diagonal")
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise InputError("diagonal entries must be finite and positive")
    return arr


def permutation_invcov_exact(D, L: int) -> NDArray[np.float64]:
    """Average of ``Phi* (Phi D Phi*)^{-1} Phi`` over partial permutation matrices: ``(L/N) D^{-1}``."""
    d = _positive_diagonal(D)
    n = d.size
    if not 1 <= L <= n:
        raise InputError(f"need 1 <= L <= N, got L={L}, N={n}")
    return np.diag((L / n) / d)


def permutation_invcov_enumerate(D, L: int) -> NDArray[np.float64]:
    """Same average, by explicit enumeration of all ``N!/(N-L)!`` L x N partial permutations."""
    d = _positive_diagonal(D)
    n = d.size
    if n > MAX_ENUMERATE_N:
        raise SizeError(f"enumeration is limited to N <= {MAX_ENUMERATE_N}, got N={n}")
    if not 1 <= L <= n:
        raise InputError(f"need 1 <= L <= N, got L={L}, N={n}")
    perms = np.array(list(itertools.permutations(range(n), L)), dtype=np.intp)
    count = perms.shape[0]
    phi = np.zeros((count, L, n))
    phi[np.arange(count)[:, None], np.arange(L)[None, :], perms] = 1.0
    a = (phi * d[None, None, :]) @ np.swapaxes(phi, -1, -2)
    vals = np.swapaxes(phi, -1, -2) @ np.linalg.inv(a) @ phi
    # exactly rounded sums keep the average within a few ulps of the closed form
    total = np.array([[math.fsum(vals[:, i, j]) for j in range(n)] for i in range(n)])
    return total / count


def mc_wishart_inv_trace(
    N: int, L: int, S: int, rng: RngStream, *, threads: int | None = None
) -> tuple[McEstimate, McEstimate]:
    """Monte Carlo ``(1/L) Tr((V*V)^{-1})`` and ``Tr((V*V)^{-1})`` for N x L standard complex Gaussian V.

    Returns ``(normalized, unnormalized)``.  The unnormalized mean is exactly
    ``L/(N-L)``; the normalized one is ``1/(N-L)``.
    """
    if not 1 <= L < N:
        raise InputError(f"need 1 <= L < N (the expectation diverges otherwise), got L={L}, N={N}")

    def draw(gen, count, offset):
        v = complex_gaussian(gen, (count, N, L))
        gram = np.conj(np.swapaxes(v, -1, -2)) @ v
        w = np.linalg.eigvalsh(gram)
        return (1.0 / w).sum(axis=1)

    raw = mc_expectation(draw, S, rng, threads=threads)
    normalized = McEstimate(mean=raw.mean / L, stderr=raw.stderr / L, samples=raw.samples)
    return normalized, raw
