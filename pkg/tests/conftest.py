"""Shared fixtures: memoized exact counts so the many bound checks in this
suite do not re-integrate the same channels over and over."""

from __future__ import annotations

import pytest

from nbound import Tolerances, count_partial_wave, make_builtin


@pytest.fixture(scope="session")
def tol() -> Tolerances:
    return Tolerances()


@pytest.fixture(scope="session")
def exact_count():
    """Memoized ``(kind, g, ell, **params) -> N_ell`` on builtin families."""
    cache: dict = {}

    def count(kind: str, g: float, ell: int, **params) -> int:
        key = (kind, g, ell, tuple(sorted(params.items())))
        if key not in cache:
            pot = make_builtin(kind, g=g, **params)
            cache[key] = count_partial_wave(pot, ell).count
        return cache[key]

    return count
