"""Randomized beam search: zero-noise equivalence and perturbation effects."""

from __future__ import annotations

import random

import pytest

from draftkit.noising import BeamNoiseConfig, BeamSearchError, noisy_beam_search
from oracles import reference_beam_search


def build_lattice(rng: random.Random):
    """Random scored tree: nodes are index tuples, leaves at `depth`."""
    depth = rng.randint(1, 4)
    scores: dict[tuple[int, ...], float] = {}
    children: dict[tuple[int, ...], list[tuple[int, ...]]] = {}

    def grow(node: tuple[int, ...]) -> None:
        scores[node] = rng.uniform(-5.0, 5.0)
        kids = []
        if len(node) < depth:
            kids = [node + (j,) for j in range(rng.randint(0, 3))]
        children[node] = kids
        for kid in kids:
            grow(kid)

    roots = [(j,) for j in range(rng.randint(1, 3))]
    for root in roots:
        grow(root)

    def is_final(node: tuple[int, ...]) -> bool:
        return len(node) == depth

    return roots, scores.__getitem__, children.__getitem__, is_final


class TestZeroBetaEquivalence:
    def test_matches_reference_on_random_lattices(self):
        mismatches = 0
        for case in range(1000):
            rng = random.Random(case)
            roots, scorer, expand, is_final = build_lattice(rng)
            beam_width = rng.randint(1, 4)
            max_steps = rng.choice([None, None, None, 0, 1, 2, 5])
            try:
                expected = reference_beam_search(
                    scorer,
                    expand,
                    initial=roots,
                    is_final=is_final,
                    beam_width=beam_width,
                    max_steps=max_steps,
                )
            except ValueError:
                expected = "died"
            cfg = BeamNoiseConfig(beam_width=beam_width, beta=0.0, seed=case)
            try:
                got = noisy_beam_search(
                    scorer,
                    expand,
                    cfg,
                    initial=roots,
                    is_final=is_final,
                    max_steps=max_steps,
                )
            except BeamSearchError:
                got = "died"
            mismatches += got != expected
        assert mismatches == 0

    def test_greedy_decoding(self):
        scores = {"a": 1.0, "b": 0.0, "aa": 0.1, "ab": 0.9, "ba": 2.0}
        kids = {"a": ["aa", "ab"], "b": ["ba"], "aa": [], "ab": [], "ba": []}
        cfg = BeamNoiseConfig(beam_width=1, beta=0.0, seed=0)
        got = noisy_beam_search(
            scores.__getitem__,
            kids.__getitem__,
            cfg,
            initial=["a", "b"],
            is_final=lambda h: len(h) == 2,
        )
        # Width 1 never explores "b", so the better leaf "ba" is unreachable.
        assert got == ["ab"]

    def test_ties_keep_enumeration_order(self):
        cfg = BeamNoiseConfig(beam_width=2, beta=0.0, seed=0)
        kwargs = dict(is_final=lambda h: True)
        assert noisy_beam_search(
            lambda h: 1.0, lambda h: [], cfg, initial=["A", "B"], **kwargs
        ) == ["A", "B"]
        assert noisy_beam_search(
            lambda h: 1.0, lambda h: [], cfg, initial=["B", "A"], **kwargs
        ) == ["B", "A"]


class TestStoppingAndErrors:
    def test_dead_expansion_raises(self):
        cfg = BeamNoiseConfig(beam_width=2, beta=0.0, seed=0)
        with pytest.raises(BeamSearchError):
            noisy_beam_search(
                lambda h: 0.0,
                lambda h: [],
                cfg,
                initial=["x"],
                is_final=lambda h: False,
            )

    def test_empty_initial_raises(self):
        cfg = BeamNoiseConfig(beam_width=2, beta=0.0, seed=0)
        with pytest.raises(BeamSearchError):
            noisy_beam_search(
                lambda h: 0.0, lambda h: [], cfg, initial=[], is_final=lambda h: True
            )

    def test_max_steps_returns_what_finished(self):
        scores = {"f": 0.3, "n": 0.9}
        cfg = BeamNoiseConfig(beam_width=2, beta=0.0, seed=0)
        got = noisy_beam_search(
            scores.__getitem__,
            lambda h: ["n"],
            cfg,
            initial=["f", "n"],
            is_final=lambda h: h == "f",
            max_steps=0,
        )
        assert got == ["f"]


class TestPerturbation:
    def test_final_ranking_uses_unperturbed_scores(self):
        scores = {"A": 0.9, "B": 1.0, "C": 0.5}
        for seed in range(20):
            cfg = BeamNoiseConfig(beam_width=3, beta=5.0, seed=seed)
            got = noisy_beam_search(
                scores.__getitem__,
                lambda h: [],
                cfg,
                initial=["A", "B", "C"],
                is_final=lambda h: True,
            )
            assert got == ["B", "A", "C"]

    def test_margin_one_upsets(self):
        # Width-1 race between A (score 1) and B (score 0) with beta = 5:
        # B wins when 5 r_B > 1 + 5 r_A, i.e. r_B - r_A > 0.2, which has
        # probability (1 - 0.2)^2 / 2 = 0.32.  Expect ~64 upsets in 200.
        scores = {"A": 1.0, "B": 0.0}
        upsets = 0
        for seed in range(200):
            cfg = BeamNoiseConfig(beam_width=1, beta=5.0, seed=seed)
            got = noisy_beam_search(
                scores.__getitem__,
                lambda h: [],
                cfg,
                initial=["A", "B"],
                is_final=lambda h: True,
            )
            upsets += got == ["B"]
        assert 10 <= upsets < 150

    def test_beta_zero_never_upsets(self):
        scores = {"A": 1.0, "B": 0.0}
        for seed in range(50):
            cfg = BeamNoiseConfig(beam_width=1, beta=0.0, seed=seed)
            got = noisy_beam_search(
                scores.__getitem__,
                lambda h: [],
                cfg,
                initial=["A", "B"],
                is_final=lambda h: True,
            )
            assert got == ["A"]


class TestBeamNoiseConfig:
    def test_defaults(self):
        cfg = BeamNoiseConfig()
        assert cfg.beam_width == 5
        assert cfg.beta == 5.0

    @pytest.mark.parametrize("kwargs", [{"beam_width": 0}, {"beta": -1.0}])
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            BeamNoiseConfig(**kwargs)
