"""k-means over basic block vectors and selection of representative intervals."""

import warnings
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
import structlog
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning

from ..validation import ConfigurationError
from .bbv import Bbv, bbv_matrix

logger = structlog.get_logger(__name__)


@dataclass
class ClusterResult:
    """Cluster assignment of every vector and one representative per non-empty cluster."""

    labels: List[int]
    centroids: np.ndarray
    representatives: List[int]
    weights: List[float]
    inertia: float

    @property
    def k(self) -> int:
        return len(self.centroids)

    def members(self, cluster: int) -> List[int]:
        return [i for i, label in enumerate(self.labels) if label == cluster]

    def __str__(self) -> str:
        return f"ClusterResult(k={self.k}, representatives={self.representatives})"


def cluster_bbvs(bbvs: Sequence[Bbv], k: int, random_state: int = 0) -> ClusterResult:
    """Cluster normalized vectors with k-means and pick the member nearest each centroid.

    Args:
        bbvs: Vectors, possibly from several programs
        k: Number of clusters
        random_state: Seed of the k-means initialization

    Returns:
        Representatives as indices into ``bbvs``, in cluster order, with weights equal to
        cluster size over the number of vectors. Ties go to the earliest vector.

    Raises:
        ConfigurationError: If ``k`` is not in ``1..len(bbvs)``
    """
    if not 1 <= k <= len(bbvs):
        raise ConfigurationError(
            f"k={k} needs between 1 and {len(bbvs)} clusters", config_key="hybrid.k"
        )
    matrix, _ = bbv_matrix(bbvs)
    with warnings.catch_warnings():
        # Identical intervals leave fewer distinct clusters than k.
        warnings.simplefilter("ignore", ConvergenceWarning)
        kmeans = KMeans(n_clusters=k, n_init=10, random_state=random_state).fit(matrix)

    labels = [int(label) for label in kmeans.labels_]
    representatives: List[int] = []
    weights: List[float] = []
    for cluster in range(k):
        members = np.flatnonzero(kmeans.labels_ == cluster)
        if members.size == 0:
            continue
        distances = np.linalg.norm(matrix[members] - kmeans.cluster_centers_[cluster], axis=1)
        representatives.append(int(members[int(np.argmin(distances))]))
        weights.append(members.size / len(bbvs))

    logger.debug(
        "bbvs_clustered",
        vectors=len(bbvs),
        k=k,
        representatives=representatives,
        inertia=round(float(kmeans.inertia_), 6),
    )
    return ClusterResult(
        labels, kmeans.cluster_centers_, representatives, weights, float(kmeans.inertia_)
    )
