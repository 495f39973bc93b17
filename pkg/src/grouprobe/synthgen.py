"""Synthetic two-block Gaussian data with a majority/minority group structure.

Every example carries a label y in {-1,+1} and a spurious attribute s in
{-1,+1}.  The first d_c feature columns ("core") are drawn i.i.d. from
N(y, sigma2_core); the remaining d_s columns ("spurious") from
N(s, sigma2_spur).  Majority groups have s == y, minority groups s == -y,
so s predicts y on most of the training distribution but not off it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, InvalidSpecError, ShapeError

# Group numbering: majority groups first, positive label first within each pair.
GROUP_OF_YS = {(1, 1): 0, (-1, -1): 1, (1, -1): 2, (-1, 1): 3}
YS_OF_GROUP = {g: ys for ys, g in GROUP_OF_YS.items()}
N_GROUPS = 4


def group_id(y: int, s: int) -> int:
    """Map a (label, spurious attribute) pair to its group index."""
    try:
        return GROUP_OF_YS[(int(y), int(s))]
    except KeyError:
        raise InvalidInputError(f"y and s must be in {{-1,+1}}, got ({y}, {s})") from None


@dataclass(frozen=True)
class GroupDataSpec:
    """Sampling parameters for one synthetic dataset.

    n_maj is the total count over both majority groups (split evenly between
    them), n_min likewise for the minority groups; both must be even.
    """

    d_c: int
    d_s: int
    sigma2_core: float
    sigma2_spur: float
    n_maj: int
    n_min: int
    sigma2_noise: float = 0.0

    def __post_init__(self):
        if self.d_c < 1 or self.d_s < 1:
            raise InvalidSpecError("d_c and d_s must each be >= 1")
        for name in ("sigma2_core", "sigma2_spur", "sigma2_noise"):
            if getattr(self, name) < 0:
                raise InvalidSpecError(f"{name} must be >= 0")
        if self.n_maj < 0 or self.n_min < 0:
            raise InvalidSpecError("n_maj and n_min must be >= 0")
        if self.n_maj % 2 or self.n_min % 2:
            raise InvalidSpecError("n_maj and n_min must be even (split across two groups)")
        if self.n_maj + self.n_min < 1:
            raise InvalidSpecError("need at least one sample in total")

    @property
    def d(self) -> int:
        return self.d_c + self.d_s


def _check_pm_one(arr: np.ndarray, name: str) -> None:
    if not np.isin(arr, (-1, 1)).all():
        raise InvalidInputError(f"{name} entries must be -1 or +1")


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix plus labels, spurious attributes, and derived group ids.

    Columns are laid out [core | spurious]; arrays are locked read-only on
    construction so downstream code cannot mutate shared data.
    """

    features: np.ndarray
    labels: np.ndarray
    spurious_attrs: np.ndarray
    group_ids: np.ndarray

    def __post_init__(self):
        f = np.array(self.features, dtype=np.float64)
        y = np.array(self.labels, dtype=np.int64)
        s = np.array(self.spurious_attrs, dtype=np.int64)
        g = np.array(self.group_ids, dtype=np.int64)
        if f.ndim != 2:
            raise ShapeError("features must be a 2-D array")
        n = f.shape[0]
        if not (y.shape == s.shape == g.shape == (n,)):
            raise ShapeError("labels, spurious_attrs and group_ids must be 1-D of matching length")
        _check_pm_one(y, "labels")
        _check_pm_one(s, "spurious_attrs")
        expect = np.fromiter((GROUP_OF_YS[(yy, ss)] for yy, ss in zip(y, s)), dtype=np.int64, count=n)
        if not np.array_equal(g, expect):
            raise InvalidInputError("group_ids do not match the (y, s) -> group mapping")
        for arr in (f, y, s, g):
            arr.setflags(write=False)
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "spurious_attrs", s)
        object.__setattr__(self, "group_ids", g)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def group_counts(self) -> np.ndarray:
        return np.bincount(self.group_ids, minlength=N_GROUPS)

    def take(self, idx: np.ndarray) -> "LabeledDataset":
        """Row subset as a new dataset (used for minibatching)."""
        return LabeledDataset(
            self.features[idx], self.labels[idx], self.spurious_attrs[idx], self.group_ids[idx]
        )

    # -- serialization ----------------------------------------------------

    def to_csv(self, path: str | Path) -> None:
        """Write `y,s,group,x0..x{d-1}` rows; floats use shortest round-trip repr."""
        path = Path(path)
        header = ["y", "s", "group"] + [f"x{i}" for i in range(self.d)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for i in range(len(self)):
                row = [int(self.labels[i]), int(self.spurious_attrs[i]), int(self.group_ids[i])]
                row += [repr(float(v)) for v in self.features[i]]
                w.writerow(row)

    @classmethod
    def from_csv(cls, path: str | Path) -> "LabeledDataset":
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            if header[:3] != ["y", "s", "group"] or any(
                h != f"x{i}" for i, h in enumerate(header[3:])
            ):
                raise InvalidInputError(f"unrecognized dataset CSV header: {header!r}")
            ys, ss, gs, xs = [], [], [], []
            for row in r:
                ys.append(int(row[0]))
                ss.append(int(row[1]))
                gs.append(int(row[2]))
                xs.append([float(v) for v in row[3:]])
        return cls(np.array(xs, dtype=np.float64).reshape(len(ys), len(header) - 3),
                   np.array(ys), np.array(ss), np.array(gs))

    def to_npz(self, path: str | Path) -> None:
        """Compact binary cache of the same four arrays (uncompressed .npz)."""
        # write through a handle: np.savez appends ".npz" to bare filenames,
        # which breaks temp-and-rename writers
        with open(path, "wb") as fh:
            np.savez(fh, features=self.features, labels=self.labels,
                     spurious_attrs=self.spurious_attrs, group_ids=self.group_ids)

    @classmethod
    def from_npz(cls, path: str | Path) -> "LabeledDataset":
        with np.load(path) as z:
            return cls(z["features"], z["labels"], z["spurious_attrs"], z["group_ids"])


@dataclass(frozen=True)
class AuxDataset:
    """Input/target pairs for the reconstruction task.

    `noised` feeds the featurizer; `targets` is what the reconstruction head
    is scored against.  Shapes must agree.
    """

    noised: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        a = np.array(self.noised, dtype=np.float64)
        b = np.array(self.targets, dtype=np.float64)
        if a.ndim != 2 or a.shape != b.shape:
            raise ShapeError("noised and targets must be 2-D arrays of identical shape")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "noised", a)
        object.__setattr__(self, "targets", b)

    def __len__(self) -> int:
        return self.noised.shape[0]

    @property
    def d(self) -> int:
        return self.noised.shape[1]

    def take(self, idx: np.ndarray) -> "AuxDataset":
        return AuxDataset(self.noised[idx], self.targets[idx])


def _sample_groups(spec: GroupDataSpec, counts: list[int], seed) -> LabeledDataset:
    # One child PRNG stream per group, so each group's draw is independent of
    # the other groups' counts.
    children = np.random.SeedSequence(seed).spawn(N_GROUPS)
    feats, ys, ss, gs = [], [], [], []
    for g in range(N_GROUPS):
        y, s = YS_OF_GROUP[g]
        n_g = counts[g]
        rng = np.random.default_rng(children[g])
        core = rng.normal(float(y), np.sqrt(spec.sigma2_core), size=(n_g, spec.d_c))
        spur = rng.normal(float(s), np.sqrt(spec.sigma2_spur), size=(n_g, spec.d_s))
        feats.append(np.hstack([core, spur]))
        ys.append(np.full(n_g, y, dtype=np.int64))
        ss.append(np.full(n_g, s, dtype=np.int64))
        gs.append(np.full(n_g, g, dtype=np.int64))
    return LabeledDataset(np.vstack(feats), np.concatenate(ys),
                          np.concatenate(ss), np.concatenate(gs))


def sample_group_dataset(spec: GroupDataSpec, seed) -> LabeledDataset:
    """Draw a dataset with n_maj/2 points in each majority group and n_min/2
    in each minority group.  Deterministic for a given (spec, seed)."""
    counts = [spec.n_maj // 2, spec.n_maj // 2, spec.n_min // 2, spec.n_min // 2]
    return _sample_groups(spec, counts, seed)


def make_balanced_test(spec: GroupDataSpec, n_per_group: int, seed) -> LabeledDataset:
    """Draw a group-balanced evaluation set: n_per_group points in all four groups."""
    if n_per_group < 1:
        raise InvalidSpecError("n_per_group must be >= 1")
    return _sample_groups(spec, [n_per_group] * N_GROUPS, seed)


def noise_dataset(data: LabeledDataset, sigma2_noise: float, seed) -> AuxDataset:
    """Make a reconstruction task from `data`: targets are the clean features,
    inputs are the same features plus i.i.d. N(0, sigma2_noise) corruption."""
    if sigma2_noise < 0:
        raise InvalidSpecError("sigma2_noise must be >= 0")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    eps = rng.normal(0.0, np.sqrt(sigma2_noise), size=data.features.shape)
    return AuxDataset(data.features + eps, data.features)
