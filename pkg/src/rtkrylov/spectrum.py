"""Dense eigenvalue/singular-value inspection and clustering diagnostics.

Eigenvalues come from LAPACK's nonsymmetric solver (balancing, Hessenberg
reduction, shifted QR) on the materialized operator. Two cluster counts are
reported: the symmetric modulus interval [0.999, 1.001], and the literal
one-sided [0.999, 1] interval guarded by a few ulps so that eigenvalues that
are exactly one in exact arithmetic are not lost to rounding. Complex pairs
with tiny imaginary parts have modulus marginally above one, so the
one-sided count systematically undercounts; the symmetric count is the one
comparable with the reference tables.
"""

from __future__ import annotations

import tempfile
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from rtkrylov.errors import DENSE_CAP_DEFAULT
from rtkrylov.operator import RTProblem, materialize_A

DEFAULT_EPS_VALUES = (0.01, 0.05, 0.1, 0.15)
_ONE_SIDED_GUARD = 1e-12


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    cluster_fraction: float        # symmetric: |lambda| in [0.999, 1.001]
    cluster_fraction_one_sided: float  # one-sided: |lambda| in [0.999, 1] (+ ulp guard)
    min_modulus: float
    outlier_counts: dict           # eps -> #{|lambda - 1| > eps}
    descriptor: dict = field(default_factory=dict)
    singular_values: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.eigenvalues.size


def compute_spectrum(problem: RTProblem, dense_cap: int = DENSE_CAP_DEFAULT,
                     eps_values: Sequence[float] = DEFAULT_EPS_VALUES,
                     compute_singular: bool = False) -> SpectrumReport:
    """Full spectrum of the materialized global operator plus diagnostics."""
    dense = materialize_A(problem, dense_cap=dense_cap)
    try:
        eigenvalues = np.linalg.eigvals(dense)
    except np.linalg.LinAlgError as exc:
        path = tempfile.mktemp(prefix="rtkrylov_eig_fail_", suffix=".npy")
        np.save(path, dense)
        raise RuntimeError(f"eigensolver did not converge; matrix dumped to {path}") from exc
    singular = np.linalg.svd(dense, compute_uv=False) if compute_singular else None

    modulus = np.abs(eigenvalues)
    distance = np.abs(eigenvalues - 1.0)
    n = eigenvalues.size
    descriptor = dict(problem.descriptor)
    descriptor.update({"n_total": n})
    return SpectrumReport(
        eigenvalues=eigenvalues,
        cluster_fraction=float(np.mean((modulus >= 0.999) & (modulus <= 1.001))),
        cluster_fraction_one_sided=float(
            np.mean((modulus >= 0.999) & (modulus <= 1.0 + _ONE_SIDED_GUARD))
        ),
        min_modulus=float(modulus.min()),
        outlier_counts={float(e): int(np.sum(distance > e)) for e in eps_values},
        descriptor=descriptor,
        singular_values=singular,
    )


@dataclass
class TrendSummary:
    eps_values: tuple
    outlier_counts: dict           # eps -> list of counts along the sequence
    cluster_fractions: list
    strong_cluster_consistent: bool


def clustering_trend(reports: Sequence[SpectrumReport],
                     fluctuation: int = 2) -> TrendSummary:
    """Outlier-count trend along a refinement sequence.

    The sequence is called consistent with a strong cluster when no count
    rises more than `fluctuation` above any earlier value at the same eps.
    """
    if len(reports) < 2:
        raise ValueError("need at least two reports to assess a trend")
    eps_values = tuple(sorted(reports[0].outlier_counts))
    for rep in reports[1:]:
        if tuple(sorted(rep.outlier_counts)) != eps_values:
            raise ValueError("reports carry different eps grids")
    counts = {e: [rep.outlier_counts[e] for rep in reports] for e in eps_values}
    consistent = True
    for series in counts.values():
        running_min = series[0]
        for c in series[1:]:
            if c > running_min + fluctuation:
                consistent = False
            running_min = min(running_min, c)
    return TrendSummary(
        eps_values=eps_values,
        outlier_counts=counts,
        cluster_fractions=[rep.cluster_fraction for rep in reports],
        strong_cluster_consistent=consistent,
    )
