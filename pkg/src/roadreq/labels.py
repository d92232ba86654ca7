"""The 41-label ROAD vocabulary: agents, actions, then locations."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator


class Group(str, enum.Enum):
    AGENT = "Agent"
    ACTION = "Action"
    LOCATION = "Location"


@dataclass(frozen=True)
class Label:
    index: int
    name: str
    abbrev: str
    group: Group


_AGENTS = [
    ("Pedestrian", "Ped"),
    ("Car", "Car"),
    ("Cyclist", "Cyc"),
    ("Motorbike", "Mobike"),
    ("Medium vehicle", "MedVeh"),
    ("Large vehicle", "LarVeh"),
    ("Bus", "Bus"),
    ("Emergency vehicle", "EmVeh"),
    ("AV traffic light", "TL"),
    ("Other traffic light", "OthTL"),
]

_ACTIONS = [
    ("Move away", "MovAway"),
    ("Move towards", "MovTow"),
    ("Move", "Mov"),
    ("Brake", "Brake"),
    ("Stop", "Stop"),
    ("Indicating left", "IncatLeft"),
    ("Indicating right", "IncatRht"),
    ("Hazard lights on", "HazLit"),
    ("Turn left", "TurLft"),
    ("Turn right", "TurRht"),
    ("Overtake", "Ovtak"),
    ("Wait to cross", "Wait2X"),
    ("Cross road from left", "XingFmLft"),
    ("Cross road from right", "XingFmRht"),
    ("Crossing", "Xing"),
    ("Push object", "PushObj"),
    ("Red traffic light", "Red"),
    ("Amber traffic light", "Amber"),
    ("Green traffic light", "Green"),
]

_LOCATIONS = [
    ("AV lane", "VehLane"),
    ("Outgoing lane", "OutgoLane"),
    ("Outgoing cycle lane", "OutgoCycLane"),
    ("Incoming lane", "IncomLane"),
    ("Incoming cycle lane", "IncomCycLane"),
    ("Pavement", "Pav"),
    ("Left pavement", "LftPav"),
    ("Right pavement", "RhtPav"),
    ("Junction", "Jun"),
    ("Crossing location", "XingLoc"),
    ("Bus stop", "BusStop"),
    ("Parking", "Parking"),
]


class LabelTable:
    """Ordered label vocabulary with case-sensitive abbreviation lookup."""

    def __init__(self, labels: list[Label]):
        self.labels = tuple(labels)
        for i, lab in enumerate(self.labels):
            if lab.index != i:
                raise ValueError(f"label {lab.abbrev!r} has index {lab.index}, expected {i}")
        self._by_abbrev = {lab.abbrev: lab for lab in self.labels}
        if len(self._by_abbrev) != len(self.labels):
            raise ValueError("duplicate abbreviations in label table")

    @classmethod
    def generic(cls, n: int, prefix: str = "L") -> "LabelTable":
        """A synthetic table of ``n`` labels named L0, L1, ... (used for small instances)."""
        return cls([Label(i, f"{prefix}{i}", f"{prefix}{i}", Group.AGENT) for i in range(n)])

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self) -> Iterator[Label]:
        return iter(self.labels)

    def __getitem__(self, index: int) -> Label:
        return self.labels[index]

    def __contains__(self, abbrev: object) -> bool:
        return abbrev in self._by_abbrev

    def __eq__(self, other: object) -> bool:
        return isinstance(other, LabelTable) and self.labels == other.labels

    def __hash__(self) -> int:
        return hash(self.labels)

    def index_of(self, abbrev: str) -> int:
        return self._by_abbrev[abbrev].index

    def abbrevs(self) -> list[str]:
        return [lab.abbrev for lab in self.labels]

    def group_indices(self, group: Group) -> list[int]:
        return [lab.index for lab in self.labels if lab.group is group]


def _build_road() -> LabelTable:
    labels = []
    for group, rows in ((Group.AGENT, _AGENTS), (Group.ACTION, _ACTIONS), (Group.LOCATION, _LOCATIONS)):
        for name, abbrev in rows:
            labels.append(Label(len(labels), name, abbrev, group))
    return LabelTable(labels)


ROAD_LABELS = _build_road()
N_LABELS = len(ROAD_LABELS)
