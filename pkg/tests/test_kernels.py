import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from utcsolve import _kernels
from utcsolve.core import parse_system
from utcsolve.reach import Entailment, build_pushdown, saturate

from conftest import CLOSING, random_tree_system


def random_pds(rng, n, k, density):
    plain = rng.random((n, n)) < density
    push = rng.random((k, n, n)) < density
    pop = rng.random((k, n, n)) < density
    return plain, push, pop


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.integers(1, 3))
def test_numba_matches_numpy(seed, n, k):
    rng = np.random.default_rng(seed)
    plain, push, pop = random_pds(rng, n, k, 0.08)
    a = _kernels.saturate_numpy(plain, push, pop)
    b = _kernels.saturate_numba(plain, push, pop)
    assert (a == b).all()


def test_relation_is_closed():
    rng = np.random.default_rng(7)
    plain, push, pop = random_pds(rng, 30, 2, 0.05)
    q = _kernels.saturate_numpy(plain, push, pop)
    assert q.diagonal().all()
    assert (q | ((q.astype(int) @ q.astype(int)) > 0) == q).all()
    assert (q | plain == q).all()
    for a in range(2):
        step = (push[a].astype(int) @ q.astype(int) @ pop[a].astype(int)) > 0
        assert (q | step == q).all()


def test_threshold_selects_path(monkeypatch):
    calls = []
    monkeypatch.setattr(_kernels, "USE_NUMBA", True)
    monkeypatch.setattr(_kernels, "saturate_numba", lambda *a: calls.append("numba") or _kernels.saturate_numpy(*a))
    small = np.zeros((3, 3), dtype=bool)
    _kernels.saturate_matrix(small, np.zeros((1, 3, 3), bool), np.zeros((1, 3, 3), bool))
    assert calls == []
    n = _kernels.NUMBA_MIN_STATES
    _kernels.saturate_matrix(np.zeros((n, n), bool), np.zeros((1, n, n), bool), np.zeros((1, n, n), bool))
    assert calls == ["numba"]


@pytest.mark.parametrize("flag, expected", [("1", "False"), ("0", "True")])
def test_env_switch(flag, expected):
    env = dict(os.environ, UTC_DISABLE_NUMBA=flag)
    r = subprocess.run(
        [sys.executable, "-c", "from utcsolve import _kernels; print(_kernels.USE_NUMBA)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert r.stdout.strip() == expected


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_entailment_independent_of_kernel(seed):
    import random

    s = random_tree_system(random.Random(seed), max_word=3, max_constraints=3)
    pds = build_pushdown(s.tree, s.alphabet, s.variables)
    assert (saturate(pds, use_numba=True) == saturate(pds, use_numba=False)).all()


def test_entailment_object_both_paths():
    s = parse_system(CLOSING)
    a = Entailment(s.tree, s.alphabet, s.variables, use_numba=True)
    b = Entailment(s.tree, s.alphabet, s.variables, use_numba=False)
    assert a.pairs() == b.pairs()
