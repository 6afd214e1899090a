import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levyerg.rng import PathStream, _words, mix64, path_key, word_at, words_to_uniform


def test_mix64_reference_values():
    # SplitMix64 outputs for state 0 stepped by the golden gamma
    g = 0x9E3779B97F4A7C15
    assert mix64(g) == 0xE220A8397B1DCDAF
    assert mix64(2 * g) == 0x6E789E6AA1B965F4


@given(st.integers(0, 2 ** 64 - 1), st.integers(0, 10 ** 6), st.integers(0, 10 ** 9))
@settings(max_examples=200, deadline=None)
def test_compiled_words_match_reference(seed, path, n):
    key, gamma = path_key(seed, path)
    got = _words(np.uint64(key), np.uint64(gamma), n, 3)
    want = [word_at(key, gamma, n + i) for i in range(3)]
    assert [int(w) for w in got] == want


def test_stream_is_sequential():
    a = PathStream(7, 3)
    first = a.words(5)
    rest = a.words(5)
    b = PathStream(7, 3)
    assert np.array_equal(np.concatenate([first, rest]), b.words(10))


def test_paths_and_seeds_differ():
    w = [tuple(PathStream(s, p).words(4)) for s in (0, 1) for p in (0, 1, 2)]
    assert len(set(w)) == len(w)
    keys = {path_key(0, p) for p in range(1000)}
    assert len(keys) == 1000


def test_gamma_is_odd():
    for p in range(100):
        assert path_key(123, p)[1] % 2 == 1


def test_uniforms_in_open_interval():
    w = np.array([0, 2 ** 64 - 1, 2 ** 11 - 1, 2 ** 63], dtype=np.uint64)
    u = words_to_uniform(w)
    assert np.all((u > 0.0) & (u < 1.0))
    assert u[0] == 2.0 ** -53 and u[1] == 1.0 - 2.0 ** -53
    s = PathStream(0, 0).uniforms(10 ** 5)
    assert np.all((s > 0.0) & (s < 1.0))
    assert abs(s.mean() - 0.5) < 4 * (1 / 12 / s.size) ** 0.5


def test_invalid_keys():
    with pytest.raises(ValueError):
        path_key(-1, 0)
    with pytest.raises(ValueError):
        path_key(0, -1)
    with pytest.raises(ValueError):
        path_key(2 ** 64, 0)
