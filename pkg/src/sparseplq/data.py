"""Synthetic-instance generation for the sparse corrupted observation model
b = A x_true + noise, plus restricted-eigenvalue diagnostics and instance
serialization.

All randomness flows from a single 64-bit seed through NumPy's PCG64
generator (``numpy.random.default_rng``); make_instance derives independent
child streams for the design matrix, the signal and the noise with
``SeedSequence(seed).spawn(3)``, so instances are reproducible bit-for-bit
across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problem import ProblemInstance

FIXED16 = np.array(
    [2.0, 0.0, 1.5, 0.0, 0.8, 0.0, 0.0, 1.0, 0.0, 1.75, 0.0, 0.0, 0.75, 0.0, 0.0, 0.3]
)

NOISE_KINDS = ("gauss", "scaled_t", "mixture", "laplace", "cauchy", "cauchy_signal")

_MAGIC = b"SPLQINST"
_VERSION = 1


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one random instance.

    cov is "ar" (entries cov_param^|i-j|) or "cs" (cov_param off-diagonal,
    unit diagonal); signal is "fixed16" (a fixed 16-entry head, zero padded)
    or "gauss_nz" (s_star uniformly placed N(0, signal_var) entries); noise
    picks one of NOISE_KINDS for the corrupt_count corrupted observations.
    """

    n: int
    p: int
    cov: str = "ar"
    cov_param: float = 0.8
    signal: str = "fixed16"
    s_star: int = 0
    signal_var: float = 4.0
    noise: str = "gauss"
    noise_var: float = 2.0
    t_scale: float = math.sqrt(2.0)
    t_dof: float = 4.0
    corrupt_count: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if self.cov not in ("ar", "cs"):
            raise ValueError(f"unknown covariance kind {self.cov!r}")
        if not 0.0 < self.cov_param < 1.0:
            raise ValueError("cov_param must lie in (0, 1)")
        if self.signal == "fixed16":
            if self.p < 16:
                raise ValueError("fixed16 signal needs p >= 16")
        elif self.signal == "gauss_nz":
            if not 1 <= self.s_star <= self.p:
                raise ValueError("s_star must lie in [1, p]")
        else:
            raise ValueError(f"unknown signal kind {self.signal!r}")
        if self.noise not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.noise!r}")
        if not 0 <= self.corrupt_count <= self.n:
            raise ValueError("corrupt_count must lie in [0, n]")


@dataclass(frozen=True)
class SyntheticInstance:
    inst: ProblemInstance
    x_true: np.ndarray
    support: np.ndarray
    noise: np.ndarray
    corrupt_set: np.ndarray


def table_sizing(p: int):
    """Benchmark sizing rule: s_star = floor(sqrt(p)/2), n = floor(2 s_star ln p)."""
    s_star = int(math.floor(math.sqrt(p) / 2.0))
    n = int(math.floor(2.0 * s_star * math.log(p)))
    return n, s_star


def gen_covariance(cov: str, cov_param: float, p: int) -> np.ndarray:
    """Dense lower-triangular factor L with L L^T equal to the covariance.

    Closed forms are used for both families, so no factorization can fail.
    """
    r = cov_param
    if cov == "ar":
        diff = np.subtract.outer(np.arange(p), np.arange(p))
        with np.errstate(under="ignore"):
            L = np.where(diff >= 0, r ** np.maximum(diff, 0), 0.0)
        L[:, 1:] *= math.sqrt(1.0 - r * r)
        return L
    if cov == "cs":
        d, e = _cs_chol_vectors(r, p)
        L = np.tril(np.broadcast_to(e, (p, p)), k=-1).copy()
        np.fill_diagonal(L, d)
        return L
    raise ValueError(f"unknown covariance kind {cov!r}")


def _cs_chol_vectors(alpha: float, p: int):
    # Cholesky of (1-alpha) I + alpha 1 1^T: column j is e_j below a diagonal
    # d_j, computable by a scalar recursion on s_j = sum_{i<j} e_i^2.
    d = np.empty(p)
    e = np.empty(p)
    s = 0.0
    for j in range(p):
        d[j] = math.sqrt(1.0 - s)
        e[j] = (alpha - s) / d[j]
        s += e[j] * e[j]
    return d, e


def _sample_rows(cov: str, cov_param: float, G: np.ndarray) -> np.ndarray:
    # Apply the closed-form factor to each row of G without materializing it:
    # equals (L @ g) per row in exact arithmetic.
    r = cov_param
    n, p = G.shape
    if cov == "ar":
        out = np.empty_like(G)
        out[:, 0] = G[:, 0]
        s = math.sqrt(1.0 - r * r)
        for j in range(1, p):
            out[:, j] = r * out[:, j - 1] + s * G[:, j]
        return out
    d, e = _cs_chol_vectors(r, p)
    csum = np.cumsum(G * e, axis=1)
    out = d * G
    out[:, 1:] += csum[:, :-1]
    return out


def gen_true_x(signal: str, p: int, seed, s_star: int = 0, variance: float = 4.0):
    """Ground-truth coefficient vector for the given signal kind."""
    if signal == "fixed16":
        if p < 16:
            raise ValueError("fixed16 signal needs p >= 16")
        x = np.zeros(p)
        x[:16] = FIXED16
        return x
    if signal == "gauss_nz":
        rng = np.random.default_rng(seed)
        idx = rng.choice(p, size=s_star, replace=False)
        x = np.zeros(p)
        x[idx] = math.sqrt(variance) * rng.standard_normal(s_star)
        return x
    raise ValueError(f"unknown signal kind {signal!r}")


def sample_noise(
    noise: str,
    corrupt_count: int,
    n: int,
    Ax_true,
    seed,
    noise_var: float = 2.0,
    t_scale: float = math.sqrt(2.0),
    t_dof: float = 4.0,
):
    """Noise vector with corrupt_count nonzero entries at uniformly random
    positions; returns (noise, corrupt_indices)."""
    rng = np.random.default_rng(seed)
    w = np.zeros(n)
    idx = np.sort(rng.choice(n, size=corrupt_count, replace=False))
    m = corrupt_count
    if m == 0:
        return w, idx
    if noise == "gauss":
        vals = math.sqrt(noise_var) * rng.standard_normal(m)
    elif noise == "scaled_t":
        vals = t_scale * rng.standard_t(t_dof, size=m)
    elif noise == "mixture":
        # One sigma ~ Unif(1, 5) per corrupted entry.
        sig = rng.uniform(1.0, 5.0, size=m)
        vals = sig * rng.standard_normal(m)
    elif noise == "laplace":
        vals = rng.laplace(0.0, 1.0, size=m)
    elif noise == "cauchy":
        vals = np.tan(np.pi * (rng.uniform(size=m) - 0.5))
    elif noise == "cauchy_signal":
        xi = np.tan(np.pi * (rng.uniform(size=m) - 0.5))
        scale = float(np.linalg.norm(np.asarray(Ax_true, float))) / (
            3.0 * float(np.linalg.norm(xi))
        )
        vals = scale * xi
    else:
        raise ValueError(f"unknown noise kind {noise!r}")
    w[idx] = vals
    return w, idx


def make_instance(spec: SyntheticSpec, mu: float = 1e-8) -> SyntheticInstance:
    """Draw one instance: i.i.d. rows of A with the requested covariance,
    the ground-truth signal, and sparse noise; b = A x_true + noise exactly."""
    seed_mat, seed_sig, seed_noise = np.random.SeedSequence(spec.seed).spawn(3)
    G = np.random.default_rng(seed_mat).standard_normal((spec.n, spec.p))
    A = _sample_rows(spec.cov, spec.cov_param, G)
    x_true = gen_true_x(spec.signal, spec.p, seed_sig, spec.s_star, spec.signal_var)
    ax = A @ x_true
    noise, corrupt = sample_noise(
        spec.noise,
        spec.corrupt_count,
        spec.n,
        ax,
        seed_noise,
        noise_var=spec.noise_var,
        t_scale=spec.t_scale,
        t_dof=spec.t_dof,
    )
    inst = ProblemInstance(A, ax + noise, mu=mu)
    return SyntheticInstance(
        inst=inst,
        x_true=x_true,
        support=np.flatnonzero(x_true),
        noise=noise,
        corrupt_set=corrupt,
    )


def re_condition_estimate(
    inst: ProblemInstance, support, samples: int, seed
) -> float:
    """Sampled upper bound on the restricted-eigenvalue constant: minimum of
    ||A x||^2 / (2 n ||x||^2) over random vectors in the cone where mass off
    a random superset S of the support is l1-dominated by the mass on S.

    Diagnostic only; the exact constant is not computable."""
    rng = np.random.default_rng(seed)
    support = np.asarray(support, dtype=int)
    p = inst.p
    s_star = support.size
    cap = int(math.floor(1.5 * s_star))
    comp = np.setdiff1d(np.arange(p), support)
    best = math.inf
    for _ in range(samples):
        n_extra = int(rng.integers(0, max(cap - s_star, 0) + 1))
        extra = (
            rng.choice(comp, size=min(n_extra, comp.size), replace=False)
            if comp.size
            else np.empty(0, dtype=int)
        )
        S = np.union1d(support, extra)
        if S.size == 0:
            S = np.arange(p)
        x = np.zeros(p)
        x[S] = rng.standard_normal(S.size)
        rest = np.setdiff1d(np.arange(p), S)
        if rest.size:
            y = rng.standard_normal(rest.size)
            budget = 3.0 * float(np.abs(x[S]).sum()) * float(rng.uniform())
            l1 = float(np.abs(y).sum())
            if l1 > 0:
                x[rest] = y * (budget / l1)
        ratio = float(np.sum((inst.A @ x) ** 2)) / (2.0 * inst.n * float(x @ x))
        best = min(best, ratio)
    return best


def save_instance(path, syn: SyntheticInstance, text: bool = False) -> None:
    """Write an instance container; binary by default, or the text-header
    variant for small cases.  Same content, byte-deterministic either way."""
    if text:
        _save_text(path, syn)
        return
    inst = syn.inst
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(np.asarray([_VERSION], dtype="<u4").tobytes())
        fh.write(np.asarray([inst.n, inst.p], dtype="<u8").tobytes())
        fh.write(np.asarray([inst.mu], dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(inst.A, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(inst.b, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(syn.x_true, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(syn.noise, dtype="<f8").tobytes())
        fh.write(np.asarray([syn.corrupt_set.size], dtype="<u8").tobytes())
        fh.write(np.ascontiguousarray(syn.corrupt_set, dtype="<u8").tobytes())


def _fmt_row(values) -> str:
    return " ".join(format(v, ".17g") for v in values)


def _save_text(path, syn: SyntheticInstance) -> None:
    inst = syn.inst
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"{_MAGIC.decode()} {_VERSION} text\n")
        fh.write(f"n {inst.n}\np {inst.p}\nmu {format(inst.mu, '.17g')}\n")
        fh.write("A\n")
        for row in inst.A:
            fh.write(_fmt_row(row) + "\n")
        fh.write("b\n" + _fmt_row(inst.b) + "\n")
        fh.write("x_true\n" + _fmt_row(syn.x_true) + "\n")
        fh.write("noise\n" + _fmt_row(syn.noise) + "\n")
        fh.write("corrupt\n")
        fh.write(" ".join(str(int(i)) for i in syn.corrupt_set) + "\n")


def load_instance(path) -> SyntheticInstance:
    """Read back a container written by save_instance (either variant)."""
    with open(path, "rb") as fh:
        head = fh.read(9)
        if head[:8] == _MAGIC and head[8:9] != b" ":
            fh.seek(8)
            return _load_binary(fh)
    return _load_text(path)


def _load_binary(fh) -> SyntheticInstance:
    version = int(np.frombuffer(fh.read(4), dtype="<u4")[0])
    if version != _VERSION:
        raise ValueError(f"unsupported container version {version}")
    n, p = (int(v) for v in np.frombuffer(fh.read(16), dtype="<u8"))
    mu = float(np.frombuffer(fh.read(8), dtype="<f8")[0])
    A = np.frombuffer(fh.read(8 * n * p), dtype="<f8").reshape(n, p)
    b = np.frombuffer(fh.read(8 * n), dtype="<f8")
    x_true = np.frombuffer(fh.read(8 * p), dtype="<f8")
    noise = np.frombuffer(fh.read(8 * n), dtype="<f8")
    m = int(np.frombuffer(fh.read(8), dtype="<u8")[0])
    corrupt = np.frombuffer(fh.read(8 * m), dtype="<u8").astype(int)
    inst = ProblemInstance(A.copy(), b.copy(), mu=mu)
    return SyntheticInstance(
        inst=inst,
        x_true=x_true.copy(),
        support=np.flatnonzero(x_true),
        noise=noise.copy(),
        corrupt_set=corrupt,
    )


def _load_text(path) -> SyntheticInstance:
    def expect(fh, tag):
        line = fh.readline().strip()
        if line != tag:
            raise ValueError(f"{path}: expected section {tag!r}, got {line!r}")

    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if header[:1] != [_MAGIC.decode()] or header[1:] != [str(_VERSION), "text"]:
            raise ValueError(f"{path}: not an instance container")
        n = int(fh.readline().split()[1])
        p = int(fh.readline().split()[1])
        mu = float(fh.readline().split()[1])
        expect(fh, "A")
        A = np.array([[float(v) for v in fh.readline().split()] for _ in range(n)])
        if A.shape != (n, p):
            raise ValueError(f"{path}: matrix block has shape {A.shape}, expected {(n, p)}")
        expect(fh, "b")
        b = np.array([float(v) for v in fh.readline().split()])
        expect(fh, "x_true")
        x_true = np.array([float(v) for v in fh.readline().split()])
        expect(fh, "noise")
        noise = np.array([float(v) for v in fh.readline().split()])
        expect(fh, "corrupt")
        tokens = fh.readline().split()
        corrupt = np.array([int(t) for t in tokens], dtype=int)
    inst = ProblemInstance(A, b, mu=mu)
    return SyntheticInstance(
        inst=inst,
        x_true=x_true,
        support=np.flatnonzero(x_true),
        noise=noise,
        corrupt_set=corrupt,
    )
