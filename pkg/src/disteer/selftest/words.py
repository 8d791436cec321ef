"""Operator words and noncommutative polynomials for Bob (party B) and Charlie (party C).

Letters are dichotomic observables O with O**2 = I, indexed per party from 0.
Bob's letters commute with Charlie's, so a word is stored as the pair
``(bob_letters, charlie_letters)``; adjacent equal letters cancel.
"""

from __future__ import annotations

from typing import Mapping, NamedTuple

import numpy as np


def _cancel(seq) -> tuple[int, ...]:
    out: list[int] = []
    for s in seq:
        if out and out[-1] == s:
            out.pop()
        else:
            out.append(s)
    return tuple(out)


class Word(NamedTuple):
    bob: tuple[int, ...] = ()
    charlie: tuple[int, ...] = ()

    @classmethod
    def make(cls, bob=(), charlie=()) -> "Word":
        return cls(_cancel(bob), _cancel(charlie))

    def __mul__(self, other: "Word") -> "Word":  # type: ignore[override]
        return Word(_cancel(self.bob + other.bob), _cancel(self.charlie + other.charlie))

    def adjoint(self) -> "Word":
        return Word(self.bob[::-1], self.charlie[::-1])

    def canonical(self) -> "Word":
        """Representative shared by w and its adjoint (moments are real)."""
        return min(self, self.adjoint())

    @property
    def degree(self) -> int:
        return len(self.bob) + len(self.charlie)

    def __str__(self) -> str:
        if not self.bob and not self.charlie:
            return "1"
        parts = [f"B{i + 1}" for i in self.bob] + [f"C{i + 1}" for i in self.charlie]
        return "".join(parts)

    @classmethod
    def parse(cls, text: str) -> "Word":
        if text == "1":
            return cls()
        bob, charlie = [], []
        for tok in text.replace("B", " B").replace("C", " C").split():
            (bob if tok[0] == "B" else charlie).append(int(tok[1:]) - 1)
        return cls.make(bob, charlie)


IDENTITY = Word()

Poly = dict  # Word -> complex coefficient


def letter(party: str, index: int) -> Poly:
    if party == "B":
        return {Word((index,), ()): 1.0}
    if party == "C":
        return {Word((), (index,)): 1.0}
    raise ValueError(f"party must be 'B' or 'C', got {party!r}")


def const(c: complex = 1.0) -> Poly:
    return {IDENTITY: c}


def padd(*terms: tuple[complex, Mapping]) -> Poly:
    out: Poly = {}
    for coef, p in terms:
        for w, v in p.items():
            out[w] = out.get(w, 0) + coef * v
    return out


def pmul(*ps: Mapping) -> Poly:
    out: Poly = dict(ps[0])
    for p in ps[1:]:
        nxt: Poly = {}
        for a, ca in out.items():
            for b, cb in p.items():
                w = a * b
                nxt[w] = nxt.get(w, 0) + ca * cb
        out = nxt
    return out


def padjoint(p: Mapping) -> Poly:
    return {w.adjoint(): np.conj(v) for w, v in p.items()}


def canonicalize(p: Mapping, tol: float = 1e-14) -> dict[Word, float]:
    """Fold adjoint pairs together and keep the real part.

    Valid for expectation values that are real for every realization, which is
    the case for every objective and constraint built here.
    """
    out: dict[Word, complex] = {}
    for w, v in p.items():
        c = w.canonical()
        out[c] = out.get(c, 0) + v
    return {w: float(np.real(v)) for w, v in out.items() if abs(v) > tol}


def evaluate(p: Mapping, moment) -> complex:
    return sum(v * moment(w) for w, v in p.items())
