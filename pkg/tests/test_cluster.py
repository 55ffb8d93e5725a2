import numpy as np
import pytest

from cluster import LINKAGES, Dendrogram, DistanceMatrix, adjusted_rand_index, agglomerate, assignments_to_json, cut
from copula_util import DataError
from dependence import distance_matrix
from synth import MtsClass, generate_mts_dataset


@pytest.fixture
def blocks():
    """Two well separated blocks {0, 1, 2} and {3, 4}."""
    entries = np.array([
        [0.0, 0.1, 0.2, 5.0, 5.2],
        [0.1, 0.0, 0.15, 5.1, 5.0],
        [0.2, 0.15, 0.0, 4.9, 5.3],
        [5.0, 5.1, 4.9, 0.0, 0.3],
        [5.2, 5.0, 5.3, 0.3, 0.0],
    ])
    return DistanceMatrix(entries, labels=('a', 'b', 'c', 'd', 'e'))


def random_matrix(rng, n):
    points = rng.random((n, 3))
    return DistanceMatrix(np.linalg.norm(points[:, None] - points[None, :], axis=2))


class TestDistanceMatrix:

    def test_default_labels(self):
        assert DistanceMatrix(np.zeros((3, 3))).labels == ('0', '1', '2')

    @pytest.mark.parametrize('entries', [
        [[0.0, 1.0], [2.0, 0.0]],
        [[1.0, 1.0], [1.0, 0.0]],
        [[0.0, -1.0], [-1.0, 0.0]],
        [[0.0, np.inf], [np.inf, 0.0]],
        [[0.0, 1.0, 2.0]],
    ])
    def test_rejects_invalid_entries(self, entries):
        with pytest.raises(DataError):
            DistanceMatrix(np.array(entries))

    def test_rejects_label_count_mismatch(self):
        with pytest.raises(DataError):
            DistanceMatrix(np.zeros((2, 2)), labels=('a',))


class TestAgglomerate:

    def test_two_items(self):
        dendrogram = agglomerate(DistanceMatrix(np.array([[0.0, 0.7], [0.7, 0.0]])))
        assert len(dendrogram.merges) == 1
        merge = dendrogram.merges[0]
        assert (merge.left, merge.right, merge.height, merge.size) == (0, 1, 0.7, 2)

    @pytest.mark.parametrize('linkage', LINKAGES)
    def test_recovers_blocks(self, blocks, linkage):
        assert cut(agglomerate(blocks, linkage), 2).tolist() == [0, 0, 0, 1, 1]

    @pytest.mark.parametrize('linkage', LINKAGES)
    def test_heights_are_nondecreasing(self, rng, linkage):
        for _ in range(10):
            dendrogram = agglomerate(random_matrix(rng, 12), linkage)
            heights = [merge.height for merge in dendrogram.merges]
            assert np.all(np.diff(heights) >= -1e-12)
            assert dendrogram.merges[-1].size == 12

    def test_average_linkage_heights(self):
        entries = np.array([[0.0, 1.0, 4.0], [1.0, 0.0, 6.0], [4.0, 6.0, 0.0]])
        heights = [merge.height for merge in agglomerate(DistanceMatrix(entries), 'average').merges]
        assert heights == [1.0, 5.0]

    def test_ties_merge_smallest_indices_first(self):
        dendrogram = agglomerate(DistanceMatrix(np.ones((4, 4)) - np.eye(4)), 'single')
        assert (dendrogram.merges[0].left, dendrogram.merges[0].right) == (0, 1)

    def test_permutation_gives_the_same_partition(self, rng):
        dm = random_matrix(rng, 10)
        order = rng.permutation(10)
        permuted = DistanceMatrix(dm.entries[np.ix_(order, order)])
        original = cut(agglomerate(dm), 3)
        assert adjusted_rand_index(original[order], cut(agglomerate(permuted), 3)) == 1.0

    def test_invariant_to_scaling(self, rng):
        dm = random_matrix(rng, 15)
        for k in (2, 4, 7):
            assert np.array_equal(cut(agglomerate(dm), k), cut(agglomerate(dm.scaled(3.5)), k))

    def test_rejects_single_item(self):
        with pytest.raises(DataError):
            agglomerate(DistanceMatrix(np.zeros((1, 1))))

    def test_rejects_unknown_linkage(self, blocks):
        with pytest.raises(DataError):
            agglomerate(blocks, 'ward')


class TestCut:

    def test_extremes(self, blocks):
        dendrogram = agglomerate(blocks)
        assert cut(dendrogram, 5).tolist() == [0, 1, 2, 3, 4]
        assert cut(dendrogram, 1).tolist() == [0] * 5

    @pytest.mark.parametrize('k', [0, 6])
    def test_rejects_k_out_of_range(self, blocks, k):
        with pytest.raises(DataError):
            cut(agglomerate(blocks), k)

    def test_json(self, blocks):
        dendrogram = agglomerate(blocks)
        assert Dendrogram.from_json(dendrogram.to_json()) == dendrogram
        document = assignments_to_json(dendrogram, cut(dendrogram, 2))
        assert document == {'k': 2, 'assignments': {'a': 0, 'b': 0, 'c': 0, 'd': 1, 'e': 1}}


class TestAdjustedRandIndex:

    def test_identical_partitions(self):
        assert adjusted_rand_index([0, 0, 1, 1, 2], [5, 5, 3, 3, 1]) == 1.0

    def test_one_cluster_against_singletons(self):
        assert adjusted_rand_index([0, 0, 0, 0], [0, 1, 2, 3]) == 0.0

    def test_hand_instance(self):
        # one agreeing pair out of six, exactly the count expected by chance
        assert adjusted_rand_index([0, 0, 1, 1], [0, 0, 0, 1]) == pytest.approx(0.0, abs=1e-12)

    def test_symmetric(self, rng):
        a, b = rng.integers(0, 3, 30), rng.integers(0, 4, 30)
        assert adjusted_rand_index(a, b) == pytest.approx(adjusted_rand_index(b, a))

    def test_rejects_length_mismatch(self):
        with pytest.raises(DataError):
            adjusted_rand_index([0, 1], [0, 1, 1])


def test_clusters_comonotone_and_countermonotone_series():
    classes = [MtsClass(2, 'linear', 0.2), MtsClass(2, 'linear', 0.2, sign=-1)]
    dataset = generate_mts_dataset(5, classes, length=500, seed=12)
    dm = distance_matrix([panel for panel, _ in dataset], resolution=16)
    assignments = cut(agglomerate(dm, 'average'), 2)
    assert adjusted_rand_index(assignments, [label for _, label in dataset]) == 1.0
