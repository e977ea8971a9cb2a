"""Per-step simulation record with a fixed, documented column schema."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_STATE = ("px", "py", "pz", "vx", "vy", "vz")
_XYZ = ("x", "y", "z")

# (group name, component suffixes); scalar columns have no suffixes
SCHEMA: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("k", ()),
    ("zone", ()),
    ("radius", ()),
    ("radius_next", ()),
    ("g", ()),
    ("captured", ()),
    ("guardian1", _STATE),
    ("guardian2", _STATE),
    ("protected", _STATE),
    ("hostile", _STATE),
    ("estimate", _STATE),
    ("cov_diag", _STATE),
    ("cov_min_eig", ()),
    ("cov_max_eig", ()),
    ("obs_y", ()),
    ("innovation", ()),
    ("innovation_var", ()),
    ("u1", _XYZ),
    ("u2", _XYZ),
    ("zeta", _XYZ),
    ("zeta_next", _XYZ),
    ("reference", _XYZ),
    ("d12_hat", ()),
    ("d1_hat", ()),
    ("d2_hat", ()),
    ("est_pos_err", ()),
    ("est_vel_err", ()),
)

COLUMNS: tuple[str, ...] = tuple(
    name if not parts else f"{name}_{p}" for name, parts in SCHEMA for p in (parts or (None,))
)
GROUPS = {name: len(parts) for name, parts in SCHEMA}
INT_COLUMNS = ("k", "captured")
STR_COLUMNS = ("zone",)


@dataclass
class SimLog:
    """Append-only episode log; one record per step.

    Records are flat dicts keyed by :data:`COLUMNS`. Group accessors return
    stacked arrays, e.g. ``log["guardian1"]`` has shape (n, 6).
    """

    seed: int | None = None
    config_hash: str = ""
    records: list[dict] = field(default_factory=list)

    def append(self, **groups) -> None:
        if set(groups) != set(GROUPS):
            missing = set(GROUPS) - set(groups)
            extra = set(groups) - set(GROUPS)
            raise KeyError(f"record mismatch: missing {sorted(missing)}, unexpected {sorted(extra)}")
        rec = {}
        for name, parts in SCHEMA:
            value = groups[name]
            if not parts:
                rec[name] = value
            else:
                arr = np.asarray(value, dtype=float)
                for p, v in zip(parts, arr):
                    rec[f"{name}_{p}"] = float(v)
        self.records.append(rec)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        if name in STR_COLUMNS:
            return np.array([r[name] for r in self.records], dtype=object)
        dtype = int if name in INT_COLUMNS else float
        return np.array([r[name] for r in self.records], dtype=dtype)

    def __getitem__(self, group: str) -> np.ndarray:
        parts = dict(SCHEMA)[group]
        if not parts:
            return self.column(group)
        if not self.records:
            return np.zeros((0, len(parts)))
        return np.array([[r[f"{group}_{p}"] for p in parts] for r in self.records])

    @property
    def zones(self) -> list[str]:
        return [r["zone"] for r in self.records]

    @property
    def captured(self) -> bool:
        return bool(self.records) and bool(self.records[-1]["captured"])

    def same_as(self, other: "SimLog") -> bool:
        """Bit-level equality of all records (NaN placeholders compare equal)."""
        if len(self) != len(other):
            return False
        for a, b in zip(self.records, other.records):
            for c in COLUMNS:
                x, y = a[c], b[c]
                if isinstance(x, float) and isinstance(y, float) and np.isnan(x) and np.isnan(y):
                    continue
                if x != y or type(x) is not type(y):
                    return False
        return True
