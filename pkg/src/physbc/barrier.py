"""Barrier function templates, fitted certificates, and scenario constraints.

A certificate ``B(x)`` is a linear combination of monomials.  Safety is
encoded by three families of affine constraints on the stacked decision
vector ``[unsafe_level, coefficients...]``:

* initial rows:  ``B(x) - initial_level          <= slack``  on the initial set,
* unsafe rows:   ``unsafe_level - B(x)           <= slack``  on the unsafe set,
* flow rows:     ``B(successor) - decay * B(x)   <= slack``  on recorded pairs.

``initial_level`` is a fixed small positive constant rather than a decision
entry.  Left free, it only ever adds a translation degree of freedom: the
optimiser shifts the whole barrier downward, parking both levels far below
zero where the decay chain makes the certificate vacuous (see
:class:`BarrierCertificate`).  Pinning it removes that freedom and, together
with the level-gap row, keeps every negative-slack solution valid by
construction.

Every row is an affine function of the decision vector that must stay below
the shared slack variable; minimising the slack over all rows is the job of
:mod:`physbc.solver`.  Besides the sample rows, an assembled system carries
auxiliary rows: symmetric bound rows that keep the polytope bounded, and one
level-gap row ``initial_level - unsafe_level <= slack`` so that a negative
optimal slack certifies ``unsafe_level > initial_level`` instead of letting
the optimiser collapse the separation.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import RegionViolationError
from .models import RegionBox
from .sampling import Dataset

TAG_INITIAL = "initial"
TAG_UNSAFE = "unsafe"
TAG_FLOW = "flow"
TAG_BOUND = "bound"
TAG_GAP = "gap"

DEFAULT_COEFF_BOUND = 100.0
DEFAULT_INITIAL_LEVEL = 1e-4


@dataclass(frozen=True, eq=False)
class BarrierTemplate:
    """Monomial basis given as one exponent tuple per basis function."""

    exponents: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        exps = tuple(tuple(int(e) for e in row) for row in self.exponents)
        if not exps:
            raise ValueError("template needs at least one monomial")
        width = len(exps[0])
        if width == 0 or any(len(row) != width for row in exps):
            raise ValueError("every exponent tuple must have the same positive length")
        if any(e < 0 for row in exps for e in row):
            raise ValueError("exponents must be non-negative")
        if len(set(exps)) != len(exps):
            raise ValueError("duplicate monomials in template")
        object.__setattr__(self, "exponents", exps)

    @classmethod
    def from_degree(cls, degree: int, dimension: int = 1) -> "BarrierTemplate":
        """All monomials of total degree <= ``degree``, highest degree first.

        In one dimension with ``degree=2`` this is the quadratic basis
        (x^2, x, 1).
        """
        if degree < 0 or dimension < 1:
            raise ValueError("degree must be >= 0 and dimension >= 1")
        rows = []
        for total in range(degree, -1, -1):
            level = [
                exp
                for exp in itertools.product(range(total, -1, -1), repeat=dimension)
                if sum(exp) == total
            ]
            rows.extend(level)
        return cls(tuple(rows))

    @classmethod
    def quadratic(cls, dimension: int = 1) -> "BarrierTemplate":
        return cls.from_degree(2, dimension)

    @property
    def dimension(self) -> int:
        return len(self.exponents[0])

    @property
    def size(self) -> int:
        return len(self.exponents)

    def basis_matrix(self, states: np.ndarray) -> np.ndarray:
        """Evaluate all monomials at a batch of states: ``(N, n) -> (N, z)``."""
        x = np.atleast_2d(np.asarray(states, dtype=float))
        if x.shape[1] != self.dimension:
            raise ValueError(
                f"template is {self.dimension}-dimensional, states are {x.shape[1]}-dimensional"
            )
        powers = np.asarray(self.exponents, dtype=float)  # (z, n)
        return np.prod(x[:, None, :] ** powers[None, :, :], axis=2)

    def to_dict(self) -> dict:
        return {"exponents": [list(row) for row in self.exponents]}

    @classmethod
    def from_dict(cls, data: dict) -> "BarrierTemplate":
        return cls(tuple(tuple(row) for row in data["exponents"]))


@dataclass(frozen=True, eq=False)
class BarrierCertificate:
    """A fitted barrier: coefficients over a template plus its level structure.

    ``decay`` is the multiplicative decrease factor required along the flow,
    in (0, 1].  A certificate is only meaningful when ``unsafe_level``
    strictly exceeds ``initial_level`` and, for ``decay < 1``, is itself
    non-negative: starting below a negative ``initial_level``, the chain
    ``B(x_k) <= decay^k * B(x_0)`` climbs towards zero and would cross any
    negative ``unsafe_level``.  Validity is not enforced at construction
    because solver output is recorded verbatim; check ``definition_ok``.
    """

    template: BarrierTemplate
    coefficients: np.ndarray
    decay: float
    initial_level: float
    unsafe_level: float

    def __post_init__(self):
        q = np.asarray(self.coefficients, dtype=float)
        if q.shape != (self.template.size,):
            raise ValueError(
                f"expected {self.template.size} coefficients, got shape {q.shape}"
            )
        if not (0.0 < self.decay <= 1.0):
            raise ValueError("decay must lie in (0, 1]")
        q.flags.writeable = False
        object.__setattr__(self, "coefficients", q)

    @property
    def definition_ok(self) -> bool:
        separated = self.unsafe_level > self.initial_level
        return separated and (self.decay == 1.0 or self.unsafe_level >= 0.0)

    def evaluate(self, states: np.ndarray) -> np.ndarray:
        """Barrier values; a single state yields a scalar."""
        single = np.asarray(states).ndim <= 1
        values = self.template.basis_matrix(states) @ self.coefficients
        return float(values[0]) if single else values

    def to_dict(self) -> dict:
        return {
            "template": self.template.to_dict(),
            "coefficients": self.coefficients.tolist(),
            "decay": self.decay,
            "initial_level": self.initial_level,
            "unsafe_level": self.unsafe_level,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BarrierCertificate":
        return cls(
            template=BarrierTemplate.from_dict(data["template"]),
            coefficients=np.asarray(data["coefficients"], dtype=float),
            decay=float(data["decay"]),
            initial_level=float(data["initial_level"]),
            unsafe_level=float(data["unsafe_level"]),
        )


@dataclass(frozen=True, eq=False)
class ConstraintSystem:
    """Affine rows ``matrix @ d + offsets <= slack`` over the decision vector.

    The pinned ``initial_level`` is folded into the offsets, so the decision
    vector is ``[unsafe_level, coefficients...]``.  ``rows``/``offsets``/
    ``tags`` hold exactly one row per constraint sample (initial, unsafe,
    flow, in that order).  Auxiliary rows (bounds, level gap) are kept
    separate so sample bookkeeping stays exact; solvers should consume
    :meth:`full_rows`.
    """

    template: BarrierTemplate
    decay: float
    initial_level: float
    rows: np.ndarray
    offsets: np.ndarray
    tags: np.ndarray
    aux_rows: np.ndarray
    aux_offsets: np.ndarray
    aux_tags: np.ndarray

    def __post_init__(self):
        for name in ("rows", "offsets", "tags", "aux_rows", "aux_offsets", "aux_tags"):
            arr = getattr(self, name)
            arr.flags.writeable = False

    @property
    def decision_size(self) -> int:
        """Width of the decision vector: the unsafe level plus the coefficients."""
        return 1 + self.template.size

    @property
    def counts(self) -> dict:
        return {tag: int(np.sum(self.tags == tag)) for tag in (TAG_INITIAL, TAG_UNSAFE, TAG_FLOW)}

    def full_rows(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (
            np.vstack([self.rows, self.aux_rows]),
            np.concatenate([self.offsets, self.aux_offsets]),
            np.concatenate([self.tags, self.aux_tags]),
        )

    def row_values(self, decision: np.ndarray, include_aux: bool = False) -> np.ndarray:
        d = np.asarray(decision, dtype=float)
        if d.shape != (self.decision_size,):
            raise ValueError(f"decision vector must have shape ({self.decision_size},)")
        if include_aux:
            matrix, offsets, _ = self.full_rows()
        else:
            matrix, offsets = self.rows, self.offsets
        return matrix @ d + offsets

    def certificate_from_decision(self, decision: np.ndarray) -> BarrierCertificate:
        d = np.asarray(decision, dtype=float)
        return BarrierCertificate(
            template=self.template,
            coefficients=d[1:],
            decay=self.decay,
            initial_level=self.initial_level,
            unsafe_level=float(d[0]),
        )


def _require_inside(
    samples: np.ndarray, region: Optional[RegionBox], label: str
) -> None:
    if region is None or samples.size == 0:
        return
    ok = region.contains(samples, rtol=1e-12)
    if not np.all(ok):
        first = int(np.nonzero(~ok)[0][0])
        raise RegionViolationError(
            f"{label} sample row {first} lies outside its declared region: {samples[first]}"
        )


def assemble(
    template: BarrierTemplate,
    decay: float,
    data: Dataset,
    initial_samples: np.ndarray,
    unsafe_samples: np.ndarray,
    domain: Optional[RegionBox] = None,
    initial_region: Optional[RegionBox] = None,
    unsafe_region: Optional[RegionBox] = None,
    coeff_bound: Optional[float] = DEFAULT_COEFF_BOUND,
    level_gap_row: bool = True,
    initial_level: float = DEFAULT_INITIAL_LEVEL,
) -> ConstraintSystem:
    """Build the scenario constraint system for one dataset.

    ``initial_samples`` and ``unsafe_samples`` are deterministic covers of
    their regions; the recorded pairs in ``data`` feed the flow rows only.
    When regions are passed, every sample is validated against them.
    ``coeff_bound`` adds symmetric bound rows on every decision entry
    (pass ``None`` to omit them, leaving an unbounded program).
    ``initial_level`` is the pinned barrier level on the initial set; it
    must be positive so that ``definition_ok`` holds for any solution with
    negative slack.
    """
    if not (0.0 < decay <= 1.0):
        raise ValueError("decay must lie in (0, 1]")
    if not initial_level > 0:
        raise ValueError("initial_level must be positive")
    if template.dimension != data.dimension:
        raise ValueError("template and dataset dimensions differ")

    x0 = np.atleast_2d(np.asarray(initial_samples, dtype=float))
    xu = np.atleast_2d(np.asarray(unsafe_samples, dtype=float))
    if x0.size == 0:
        x0 = x0.reshape(0, template.dimension)
    if xu.size == 0:
        xu = xu.reshape(0, template.dimension)
        warnings.warn("assembling with zero unsafe samples", stacklevel=2)
    if x0.size == 0:
        warnings.warn("assembling with zero initial samples", stacklevel=2)

    _require_inside(data.states, domain, "flow")
    _require_inside(x0, initial_region, "initial")
    _require_inside(xu, unsafe_region, "unsafe")

    z = template.size
    width = 1 + z

    def block(count: int) -> np.ndarray:
        return np.zeros((count, width))

    initial_block = block(len(x0))
    if len(x0):
        initial_block[:, 1:] = template.basis_matrix(x0)

    unsafe_block = block(len(xu))
    unsafe_block[:, 0] = 1.0
    if len(xu):
        unsafe_block[:, 1:] = -template.basis_matrix(xu)

    flow_block = block(data.count)
    if data.count:
        flow_block[:, 1:] = template.basis_matrix(data.successors) - decay * template.basis_matrix(
            data.states
        )

    rows = np.vstack([initial_block, unsafe_block, flow_block])
    offsets = np.zeros(len(rows))
    offsets[: len(x0)] = -initial_level
    tags = np.concatenate(
        [
            np.full(len(x0), TAG_INITIAL),
            np.full(len(xu), TAG_UNSAFE),
            np.full(data.count, TAG_FLOW),
        ]
    )

    aux_rows, aux_offsets, aux_tags = [], [], []
    if coeff_bound is not None:
        if not coeff_bound > 0:
            raise ValueError("coeff_bound must be positive")
        eye = np.eye(width)
        for j in range(width):
            aux_rows.extend([eye[j], -eye[j]])
            aux_offsets.extend([-coeff_bound, -coeff_bound])
            aux_tags.extend([TAG_BOUND, TAG_BOUND])
    if level_gap_row:
        gap = np.zeros(width)
        gap[0] = -1.0
        aux_rows.append(gap)
        aux_offsets.append(float(initial_level))
        aux_tags.append(TAG_GAP)

    return ConstraintSystem(
        template=template,
        decay=decay,
        initial_level=float(initial_level),
        rows=rows,
        offsets=offsets,
        tags=tags,
        aux_rows=np.asarray(aux_rows, dtype=float).reshape(-1, width),
        aux_offsets=np.asarray(aux_offsets, dtype=float),
        aux_tags=np.asarray(aux_tags, dtype=str),
    )


@dataclass(frozen=True)
class ResidualReport:
    """Worst-case constraint residuals of a certificate against data.

    Each entry is the maximum row value of its family (``-inf`` when the
    family is empty); the certificate passes at slack level ``s`` when every
    residual is at most ``s`` within the stored tolerance.
    """

    initial_max: float
    unsafe_max: float
    flow_max: float
    definition_ok: bool
    tolerance: float

    @property
    def worst(self) -> float:
        return max(self.initial_max, self.unsafe_max, self.flow_max)

    def passes_at(self, slack: float) -> bool:
        return self.worst <= slack + self.tolerance

    def to_dict(self) -> dict:
        return {
            "initial_max": self.initial_max,
            "unsafe_max": self.unsafe_max,
            "flow_max": self.flow_max,
            "definition_ok": self.definition_ok,
            "tolerance": self.tolerance,
        }


def check_certificate(
    certificate: BarrierCertificate,
    tolerance: float,
    data: Dataset,
    initial_samples: np.ndarray,
    unsafe_samples: np.ndarray,
) -> ResidualReport:
    """Evaluate all three residual families for a fitted certificate."""
    x0 = np.atleast_2d(np.asarray(initial_samples, dtype=float))
    xu = np.atleast_2d(np.asarray(unsafe_samples, dtype=float))

    def group_max(values: np.ndarray) -> float:
        return float(values.max()) if values.size else float("-inf")

    initial_max = group_max(
        certificate.evaluate(x0) - certificate.initial_level if x0.size else np.empty(0)
    )
    unsafe_max = group_max(
        certificate.unsafe_level - certificate.evaluate(xu) if xu.size else np.empty(0)
    )
    if data.count:
        flow = certificate.evaluate(data.successors) - certificate.decay * certificate.evaluate(
            data.states
        )
    else:
        flow = np.empty(0)
    return ResidualReport(
        initial_max=initial_max,
        unsafe_max=unsafe_max,
        flow_max=group_max(flow),
        definition_ok=certificate.definition_ok,
        tolerance=tolerance,
    )
