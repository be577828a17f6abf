"""Directory enumeration for the four-scenario challenge layout.

Expected tree::

    root/
      scenario_1/fold_0/{train,test}/{physiology,annotations}/sub_S_vid_V.csv
      scenario_2/fold_0..4/...
      scenario_3/fold_0..3/...
      scenario_4/fold_0..1/...

Physiology and annotation files pair by identical filename. Train-split
files must pair exactly; test annotations are optional (held-out labels).
"""

import re
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import CorpusError, MalformedNameError, OrphanFileError
from .io import parse_entry_name

SCENARIOS = ("across_time", "across_subject", "across_elicitor",
             "across_version")

SCENARIO_DIRS = {
    "across_time": "scenario_1",
    "across_subject": "scenario_2",
    "across_elicitor": "scenario_3",
    "across_version": "scenario_4",
}
DIR_SCENARIOS = {v: k for k, v in SCENARIO_DIRS.items()}

_FOLD_RE = re.compile(r"^fold_(\d+)$")


@dataclass(frozen=True)
class IndexEntry:
    scenario: str
    fold: int
    split: str
    subject_id: int
    video_id: int
    physiology_path: Path
    annotation_path: Path | None

    @property
    def key(self):
        return (self.scenario, self.fold, self.split,
                self.subject_id, self.video_id)

    @property
    def name(self) -> str:
        return f"sub_{self.subject_id}_vid_{self.video_id}"


@dataclass(frozen=True)
class DatasetIndex:
    entries: tuple = field(default=())

    def __post_init__(self):
        entries = tuple(self.entries)
        seen = set()
        for e in entries:
            if e.key in seen:
                raise CorpusError(f"duplicate index entry {e.key}")
            seen.add(e.key)
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)

    def scenarios(self):
        return tuple(s for s in SCENARIOS
                     if any(e.scenario == s for e in self.entries))

    def folds(self, scenario: str):
        return sorted({e.fold for e in self.entries
                       if e.scenario == scenario})

    def select(self, scenario=None, fold=None, split=None):
        out = []
        for e in self.entries:
            if scenario is not None and e.scenario != scenario:
                continue
            if fold is not None and e.fold != fold:
                continue
            if split is not None and e.split != split:
                continue
            out.append(e)
        return out


def _entries_for_split(scenario, fold, split, split_dir):
    phys_dir = split_dir / "physiology"
    ann_dir = split_dir / "annotations"
    entries = []
    phys_files = sorted(phys_dir.glob("*.csv")) if phys_dir.is_dir() else []
    ann_names = ({p.name for p in ann_dir.glob("*.csv")}
                 if ann_dir.is_dir() else set())
    for phys in phys_files:
        subject, video = parse_entry_name(phys.name)
        ann_path = ann_dir / phys.name
        if phys.name in ann_names:
            ann_names.discard(phys.name)
        elif split == "train":
            raise OrphanFileError(
                f"{phys} has no annotation counterpart")
        else:
            ann_path = None
        entries.append(IndexEntry(scenario, fold, split, subject, video,
                                  phys, ann_path))
    if split == "train" and ann_names:
        raise OrphanFileError(
            f"{ann_dir / sorted(ann_names)[0]} has no physiology counterpart")
    return entries


def enumerate_dataset(root) -> DatasetIndex:
    """Walk the challenge layout and index every (physiology, annotation)
    pair.

    Raises
    ------
    OrphanFileError
        A train-split file lacks its counterpart.
    MalformedNameError
        A CSV filename does not follow ``sub_S_vid_V.csv``.
    """
    root = Path(root)
    if not root.is_dir():
        raise CorpusError(f"dataset root {root} is not a directory")
    entries = []
    for scen_dir in sorted(root.iterdir()):
        if not scen_dir.is_dir() or scen_dir.name not in DIR_SCENARIOS:
            continue
        scenario = DIR_SCENARIOS[scen_dir.name]
        fold_dirs = []
        for child in scen_dir.iterdir():
            m = _FOLD_RE.match(child.name)
            if child.is_dir() and m:
                fold_dirs.append((int(m.group(1)), child))
        for fold, fold_dir in sorted(fold_dirs):
            for split in ("train", "test"):
                split_dir = fold_dir / split
                if not split_dir.is_dir():
                    continue
                entries.extend(
                    _entries_for_split(scenario, fold, split, split_dir))
    entries.sort(key=lambda e: (SCENARIOS.index(e.scenario), e.fold,
                                e.split, e.subject_id, e.video_id))
    return DatasetIndex(tuple(entries))
