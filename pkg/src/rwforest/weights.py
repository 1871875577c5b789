"""Per-tree observation weight schemes.

Random-weight schemes (exp1, lognorm, sqrtgamma) draw i.i.d. nonnegative
unit-mean weights for every observation; they are the randomization that
replaces bootstrap resampling.  The bootstrap and moving-block bootstrap
baselines are expressed in the same interface as integer multiplicity
weights, so a single weighted tree grower serves every method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidBlockLen

# Underlying-normal parameters giving a lognormal with mean 1 and variance 1.
_LOGNORM_MU = -math.log(2.0) / 2.0
_LOGNORM_SIGMA = math.sqrt(math.log(2.0))

# Gamma(shape, scale) whose square root has mean ~1.0021 and variance ~1.0026,
# i.e. matched to Exp(1)'s first two moments.
_SQRTGAMMA_SHAPE = 0.295
_SQRTGAMMA_SCALE = 6.803


@dataclass(frozen=True)
class WeightScheme:
    """Tagged weight-generation scheme.

    kind is one of ``exp1``, ``lognorm``, ``sqrtgamma``, ``ones``,
    ``bootstrap``, ``mbb``.  ``block_len`` applies to ``mbb`` only.
    """

    kind: str
    block_len: int | None = None

    KINDS = ("exp1", "lognorm", "sqrtgamma", "ones", "bootstrap", "mbb")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown weight scheme {self.kind!r}")
        if self.kind == "mbb":
            if self.block_len is None or self.block_len < 1:
                raise InvalidBlockLen(f"mbb block_len must be >= 1, got {self.block_len}")
        elif self.block_len is not None:
            raise ValueError(f"block_len only applies to mbb, not {self.kind!r}")

    @property
    def is_integer_valued(self) -> bool:
        return self.kind in ("bootstrap", "mbb")

    @property
    def tag(self) -> str:
        if self.kind == "mbb":
            return f"mbb:{self.block_len}"
        return self.kind

    @classmethod
    def parse(cls, token: str) -> "WeightScheme":
        """Parse a CLI token: exp1|lognorm|sqrtgamma|ones|bootstrap|mbb:<len>."""
        if token.startswith("mbb:"):
            try:
                blen = int(token.split(":", 1)[1])
            except ValueError:
                raise InvalidBlockLen(f"bad mbb block length in {token!r}")
            return cls("mbb", blen)
        return cls(token)


@dataclass
class WeightVector:
    """One realized weight vector: the per-observation weights of a tree."""

    values: np.ndarray
    scheme_tag: str
    substream_id: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size == 0:
            raise ValueError("weight vector must be a nonempty 1-D array")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("weights must be finite")
        if np.any(self.values < 0):
            raise ValueError("weights must be nonnegative")
        if not np.any(self.values > 0):
            raise ValueError("at least one weight must be positive")


def draw_weights(scheme: WeightScheme, T: int, rng: np.random.Generator,
                 substream_id: str = "") -> WeightVector:
    """Draw one weight vector of length T under the given scheme."""
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    kind = scheme.kind
    if kind == "exp1":
        values = rng.exponential(1.0, size=T)
    elif kind == "lognorm":
        values = rng.lognormal(mean=_LOGNORM_MU, sigma=_LOGNORM_SIGMA, size=T)
    elif kind == "sqrtgamma":
        values = np.sqrt(rng.gamma(shape=_SQRTGAMMA_SHAPE, scale=_SQRTGAMMA_SCALE, size=T))
    elif kind == "ones":
        values = np.ones(T)
    elif kind == "bootstrap":
        picks = rng.integers(0, T, size=T)
        values = np.bincount(picks, minlength=T).astype(np.float64)
    elif kind == "mbb":
        blen = scheme.block_len
        if blen > T:
            raise InvalidBlockLen(f"mbb block_len {blen} exceeds series length {T}")
        n_blocks = -(-T // blen)  # ceil
        starts = rng.integers(0, T - blen + 1, size=n_blocks)
        picks = (starts[:, None] + np.arange(blen)[None, :]).ravel()[:T]
        values = np.bincount(picks, minlength=T).astype(np.float64)
    else:  # pragma: no cover - guarded by WeightScheme
        raise ValueError(kind)
    return WeightVector(values, scheme.tag, substream_id)


@dataclass(frozen=True)
class MeanCheck:
    mean: float
    stderr: float


def scheme_mean_check(scheme: WeightScheme, n: int, rng: np.random.Generator) -> MeanCheck:
    """Empirical mean and standard error of n draws; unit-mean diagnostic."""
    if n < 1000:
        raise ValueError(f"n must be >= 1000, got {n}")
    wv = draw_weights(scheme, n, rng)
    mean = float(wv.values.mean())
    if scheme.kind == "ones":
        return MeanCheck(mean, 0.0)
    stderr = float(wv.values.std(ddof=1) / math.sqrt(n))
    return MeanCheck(mean, stderr)
