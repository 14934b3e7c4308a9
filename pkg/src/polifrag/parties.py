"""Effective number of parties from seat counts, with bundled lower-chamber fixtures."""

from __future__ import annotations

import json
from importlib import resources
from typing import Mapping

from .fragmentation import enc_from_counts

COUNTRIES = ("brazil", "spain", "us")


def load_seat_counts() -> dict[str, dict[str, int]]:
    text = resources.files("polifrag").joinpath("data/seats.json").read_text(encoding="utf-8")
    data = json.loads(text)
    return {c: {party: int(n) for party, n in data[c].items()} for c in COUNTRIES}


def effective_number_of_parties(seats: Mapping[str, int]) -> float:
    """Laakso-Taagepera index of a seat distribution."""
    return enc_from_counts(list(seats.values()))
