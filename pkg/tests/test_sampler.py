import collections

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aztec2p.kasteleyn_exact import KasteleynSystem, enumerate_matchings
from aztec2p.lattice import DiamondSpec, enumerate_edges
from aztec2p.sampler import (
    POSITIONS, EmptyRegionError, Tiling, black_from_type, edge_frequencies, edge_probabilities, edge_statistics,
    edge_to_face, face_edge, sample_tiling, sample_tilings,
)


@given(st.integers(0, 15), st.integers(0, 15), st.sampled_from(POSITIONS))
def test_face_edge_round_trip(i, j, pos):
    assert edge_to_face(*face_edge(i, j, pos)) == (i, j, pos)


@settings(max_examples=10)
@given(st.integers(1, 3), st.floats(0.3, 1.0), st.integers(0, 2**32))
def test_samples_are_perfect_matchings(m, a, seed):
    for t in sample_tilings(DiamondSpec(m, a), seed, 3):
        assert t.is_perfect_matching()


def test_deterministic_by_seed_and_index():
    spec = DiamondSpec(2, 0.6)
    batch = sample_tilings(spec, 42, 5)
    assert batch[3].key() == sample_tiling(spec, 42, 3).key()
    assert batch[3].key() == sample_tilings(spec, 42, 2, start=2)[1].key()
    assert sample_tiling(spec, 43, 3).key() != batch[3].key()


def test_csv_round_trip():
    spec = DiamondSpec(2, 0.6)
    t = sample_tiling(spec, 5)
    text = t.to_csv()
    assert text.splitlines()[0] == "x1,x2,type"
    back = Tiling.from_csv(spec, "# comment\n" + text)
    assert back.key() == t.key()
    assert back.edges() == t.edges()


def test_bad_domino_type():
    with pytest.raises(ValueError):
        black_from_type((1, 0), "q00")
    with pytest.raises(ValueError):
        black_from_type((1, 0), "a11")


def test_probabilities_match_direct_solve():
    spec = DiamondSpec(2, 0.45)
    probs = edge_probabilities(spec)
    sysm = KasteleynSystem(spec)
    for e, _ in enumerate_edges(spec):
        i, j, pos = edge_to_face(e.white, e.black)
        assert abs(probs[pos][i, j] - sysm.rho(e.white, e.black)) < 1e-12


def test_weighted_n4_total_variation():
    # exact law over all matchings of the order-4 diamond at a = 0.5
    spec = DiamondSpec(1, 0.5)
    edges, matchings = enumerate_matchings(spec)
    w = np.array([wt for _, wt in edges])
    weights = np.array([np.prod(w[list(mt)]) for mt in matchings])
    law = weights / weights.sum()
    index = {frozenset((edges[k][0].white, edges[k][0].black) for k in mt): i for i, mt in enumerate(matchings)}
    N = 20000
    counts = np.zeros(len(law))
    for t in sample_tilings(spec, 9, N):
        counts[index[frozenset(t.edges())]] += 1
    tv = 0.5 * np.abs(counts / N - law).sum()
    # exact multinomial draws of this size give TV 0.073 on average, 0.080 at the 99.9% quantile
    assert tv < 0.09


def test_frequencies_and_statistics():
    spec = DiamondSpec(2, 0.7)
    samples = sample_tilings(spec, 3, 400)
    stats = edge_statistics(samples, [(9, 8)])
    assert len(stats) == 4
    assert abs(sum(s.mean for s in stats) - 1) < 1e-12
    hits = edge_frequencies(spec, 3, 400, [(s.white, s.black) for s in stats])
    assert [h / 400 for h in hits] == pytest.approx([s.mean for s in stats])
    with pytest.raises(EmptyRegionError):
        edge_statistics(samples, [(99, 98)])
