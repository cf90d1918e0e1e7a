"""Local and global occurrence features of <app, key> pairs."""

import logging
import math

import numpy as np
from pydantic import BaseModel

from service.aggregate.pair_table import PairKey, PairStats, PairTable, ValueUsage
from service.errors import FeatureDomainError
from service.features.feature_vector import FeatureVector
from service.util import safe_ratio

logger = logging.getLogger(__name__)


class LocalFeatures(BaseModel):
    """Features computed from the traffic of the pair's own app."""

    max_distinct_per_user: float
    min_distinct_per_user: float
    avg_distinct_per_user: float
    var_distinct_per_user: float
    max_entropy_per_user: float
    min_entropy_per_user: float
    avg_entropy_per_user: float
    var_entropy_per_user: float
    lvrd: float
    key_frequency: float
    num_users: int


class ValueDistributionFeatures(BaseModel):
    """Weighted reuse of a pair's values in the traffic of other apps."""

    weighted_gvrd: float = 0.0
    weighted_ard: float = 0.0
    weighted_urd: float = 0.0
    weighted_nurd: float = 0.0


def value_entropy(counts: dict[str, int]) -> float:
    """Return the base-2 Shannon entropy of an empirical value distribution.

    Raises:
        FeatureDomainError: If counts is empty.

    """
    if not counts:
        raise FeatureDomainError("Entropy of an empty value distribution is undefined")
    frequencies = np.array(sorted(counts.values()), dtype=float)
    probabilities = frequencies / frequencies.sum()
    return float(-(probabilities * np.log2(probabilities)).sum()) + 0.0


class FeatureExtractor:
    """Compute pair features against one immutable pair table.

    Inverted indexes (key to apps, domain to apps, value to per-app usage) are built
    once so global features cost time proportional to a pair's own values.
    """

    def __init__(self, table: PairTable) -> None:
        """Index the table's app statistics."""
        self.table = table
        self.key_apps: dict[str, set[str]] = {}
        self.domain_apps: dict[str, set[str]] = {}
        self.value_apps: dict[str, list[tuple[str, ValueUsage]]] = {}
        for app_id, app in sorted(table.apps.items()):
            for key in app.keys:
                self.key_apps.setdefault(key, set()).add(app_id)
            for domain in app.domains:
                self.domain_apps.setdefault(domain, set()).add(app_id)
            for value, usage in app.value_index.items():
                self.value_apps.setdefault(value, []).append((app_id, usage))

    def local_features(self, pair: PairKey) -> LocalFeatures:
        """Compute key-value statistics, L-VRD, key frequency and number of users."""
        stats = self.table.get_pair(pair)
        if not stats.per_user_values:
            raise FeatureDomainError(f"Pair {pair} has no valid values")
        per_user = [stats.per_user_values[user] for user in sorted(stats.per_user_values)]
        distinct = np.array([len(values) for values in per_user], dtype=float)
        entropy = np.array([value_entropy(values) for values in per_user])

        holders = stats.value_users()
        shared = sum(1 for users in holders.values() if len(users) > 1)
        app = self.table.apps[pair.app_id]
        return LocalFeatures(
            max_distinct_per_user=float(distinct.max()),
            min_distinct_per_user=float(distinct.min()),
            avg_distinct_per_user=float(distinct.mean()),
            var_distinct_per_user=float(distinct.var()),
            max_entropy_per_user=float(entropy.max()),
            min_entropy_per_user=float(entropy.min()),
            avg_entropy_per_user=float(entropy.mean()),
            var_entropy_per_user=float(entropy.var()),
            lvrd=safe_ratio(shared, len(holders)),
            key_frequency=safe_ratio(stats.requests_with_key, app.total_requests),
            num_users=len(app.users),
        )

    def krd(self, pair: PairKey) -> int:
        """Count the other apps that use the pair's key."""
        return len(self.key_apps.get(pair.key, set()) - {pair.app_id})

    def drd(self, pair: PairKey) -> int:
        """Count the other apps visiting at least one domain the pair was sent to."""
        stats = self.table.get_pair(pair)
        apps: set[str] = set()
        for domain in stats.domains:
            apps |= self.domain_apps.get(domain, set())
        apps.discard(pair.app_id)
        return len(apps)

    def weighted_vdm_features(self, pair: PairKey) -> ValueDistributionFeatures:
        """Compute weighted G-VRD, ARD, URD and NURD over the value distribution matrix.

        Each value weighs its share of the pair's value occurrences. Occurrences in other
        apps are counted under any key of those apps.
        """
        stats: PairStats = self.table.get_pair(pair)
        counts = stats.value_counts()
        total = sum(counts.values())
        if total == 0:
            raise FeatureDomainError(f"Pair {pair} has an empty value set")
        pair_users = stats.users()

        gvrd_terms: list[float] = []
        ard_terms: list[float] = []
        urd_terms: list[float] = []
        nurd_terms: list[float] = []
        for value, count in sorted(counts.items()):
            others = [
                usage
                for app_id, usage in self.value_apps.get(value, [])
                if app_id != pair.app_id
            ]
            if not others:
                continue
            weight = count / total
            users: set[str] = set().union(*(usage.users for usage in others))
            gvrd_terms.append(weight * sum(usage.count for usage in others))
            ard_terms.append(weight * len(others))
            urd_terms.append(weight * len(users))
            nurd_terms.append(weight * len(users - pair_users))

        return ValueDistributionFeatures(
            weighted_gvrd=math.fsum(gvrd_terms),
            weighted_ard=math.fsum(ard_terms),
            weighted_urd=math.fsum(urd_terms),
            weighted_nurd=math.fsum(nurd_terms),
        )

    def extract(self, pair: PairKey) -> FeatureVector:
        """Compute all 17 features of a pair."""
        return FeatureVector(
            **self.local_features(pair).model_dump(),
            krd=self.krd(pair),
            drd=self.drd(pair),
            **self.weighted_vdm_features(pair).model_dump(),
        )

    def feature_matrix(self) -> dict[PairKey, FeatureVector]:
        """Compute the features of every pair, ordered by app then key."""
        matrix = {pair: self.extract(pair) for pair in self.table.sorted_pairs()}
        logger.info("✓ Extracted features for %d pairs", len(matrix))
        return matrix


def local_features(table: PairTable, pair: PairKey) -> LocalFeatures:
    """Compute the 11 local features of a pair."""
    return FeatureExtractor(table).local_features(pair)


def krd(table: PairTable, pair: PairKey) -> int:
    """Compute the key reuse degree of a pair."""
    return FeatureExtractor(table).krd(pair)


def drd(table: PairTable, pair: PairKey) -> int:
    """Compute the domain reuse degree of a pair."""
    return FeatureExtractor(table).drd(pair)


def weighted_vdm_features(table: PairTable, pair: PairKey) -> ValueDistributionFeatures:
    """Compute the four weighted value distribution features of a pair."""
    return FeatureExtractor(table).weighted_vdm_features(pair)


def feature_matrix(table: PairTable) -> dict[PairKey, FeatureVector]:
    """Compute the 17 features of every pair in a (pruned) table."""
    return FeatureExtractor(table).feature_matrix()
