"""FCIDUMP ingestion, run configuration and result-table serialization."""
from __future__ import annotations

import csv
import itertools
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import (
    ConflictingDuplicate,
    IndexOutOfRange,
    IoFailure,
    MalformedLine,
    MissingHeaderField,
    ValidationFailed,
)

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

DUPLICATE_TOL = 1e-10
INF_SHOTS = math.inf


def _two_body_images(p, q, r, s):
    """The 8 index tuples equivalent to (pq|rs) for real orbitals."""
    return {
        (p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
        (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p),
    }


@dataclass(frozen=True)
class MolecularIntegrals:
    """Active-space integrals as stored in an FCIDUMP file.

    Indices are 0-based.  ``two_body`` holds chemists' notation (pq|rs).
    Both maps are symmetry-completed.
    """

    n_spatial_orbitals: int
    n_electrons: int
    spin_2s: int
    core_energy: float
    one_body: Mapping[tuple[int, int], float]
    two_body: Mapping[tuple[int, int, int, int], float]

    def __post_init__(self):
        n = self.n_spatial_orbitals
        if self.n_electrons < 0 or self.n_electrons > 2 * n:
            raise ValidationFailed("NELEC", f"{self.n_electrons} electrons do not fit in {n} orbitals")
        for idx in itertools.chain(self.one_body, self.two_body):
            if any(i < 0 or i >= n for i in idx):
                raise IndexOutOfRange(f"orbital index {tuple(i + 1 for i in idx)} exceeds NORB={n}")

    def one_body_array(self) -> np.ndarray:
        n = self.n_spatial_orbitals
        h = np.zeros((n, n))
        for (p, q), v in self.one_body.items():
            h[p, q] = v
        return h

    def two_body_array(self) -> np.ndarray:
        n = self.n_spatial_orbitals
        g = np.zeros((n, n, n, n))
        for idx, v in self.two_body.items():
            g[idx] = v
        return g

    def symmetrized(self) -> "MolecularIntegrals":
        return MolecularIntegrals(
            self.n_spatial_orbitals, self.n_electrons, self.spin_2s, self.core_energy,
            *_complete(self.one_body, self.two_body),
        )


def _complete(one_body, two_body):
    h1 = {}
    for (p, q), v in one_body.items():
        for key in ((p, q), (q, p)):
            _store(h1, key, v)
    h2 = {}
    for (p, q, r, s), v in two_body.items():
        for key in _two_body_images(p, q, r, s):
            _store(h2, key, v)
    return h1, h2


def _store(table, key, value):
    old = table.get(key)
    if old is not None and abs(old - value) > DUPLICATE_TOL:
        raise ConflictingDuplicate(
            f"index {tuple(i + 1 for i in key)} given as both {old!r} and {value!r}"
        )
    table[key] = value


_HEADER_RE = re.compile(r"&FCI(.*?)(?:&END|/)", re.IGNORECASE | re.DOTALL)


def _header_fields(header: str) -> dict[str, str]:
    fields = {}
    # NAME=value list, values possibly spanning commas (ORBSYM=1,1,2,)
    for m in re.finditer(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([^=]*?)(?=,?\s*[A-Za-z_][A-Za-z0-9_]*\s*=|$)", header):
        fields[m.group(1).upper()] = m.group(2).strip().rstrip(",")
    return fields


def parse_fcidump(text: str) -> MolecularIntegrals:
    m = _HEADER_RE.search(text)
    if m is None:
        raise MissingHeaderField("no &FCI ... &END namelist found")
    fields = _header_fields(m.group(1))
    for key in ("NORB", "NELEC"):
        if key not in fields:
            raise MissingHeaderField(f"{key} missing from FCIDUMP header")
    try:
        norb = int(fields["NORB"])
        nelec = int(fields["NELEC"])
        ms2 = int(fields.get("MS2", "0") or 0)
    except ValueError as exc:
        raise MalformedLine(f"non-integer header value: {exc}") from None
    # ORBSYM / ISYM are accepted and ignored

    core = 0.0
    core_seen = False
    one_body: dict = {}
    two_body: dict = {}
    body = text[m.end():]
    for lineno, line in enumerate(body.splitlines(), 1):
        tokens = line.replace(",", " ").split()
        if not tokens:
            continue
        if len(tokens) != 5:
            raise MalformedLine(f"line {lineno!r}: expected 'value i j k l', got {line.strip()!r}")
        try:
            value = float(tokens[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(t) for t in tokens[1:])
        except ValueError:
            raise MalformedLine(f"non-numeric token in {line.strip()!r}") from None
        if any(t < 0 or t > norb for t in (i, j, k, l)):
            raise IndexOutOfRange(f"index in {line.strip()!r} outside 1..{norb}")
        if i == j == k == l == 0:
            if core_seen and abs(core - value) > DUPLICATE_TOL:
                raise ConflictingDuplicate(f"core energy given as both {core} and {value}")
            core, core_seen = value, True
        elif k == 0 and l == 0:
            if i == 0 or j == 0:
                # orbital energies (i 0 0 0) are optional extras; not used
                continue
            _store(one_body, (i - 1, j - 1), value)
        else:
            if 0 in (i, j, k, l):
                raise MalformedLine(f"partially zero index set in {line.strip()!r}")
            _store(two_body, (i - 1, j - 1, k - 1, l - 1), value)
    h1, h2 = _complete(one_body, two_body)
    return MolecularIntegrals(norb, nelec, ms2, core, h1, h2)


def read_fcidump(path) -> MolecularIntegrals:
    return parse_fcidump(Path(path).read_text())


def format_fcidump(ints: MolecularIntegrals) -> str:
    """Serialize with one entry per symmetry-unique index set."""
    lines = [
        f" &FCI NORB={ints.n_spatial_orbitals},NELEC={ints.n_electrons},MS2={ints.spin_2s},",
        " &END",
    ]
    seen = set()
    for idx in sorted(ints.two_body):
        canon = min(_two_body_images(*idx))
        if canon in seen:
            continue
        seen.add(canon)
        p, q, r, s = (i + 1 for i in canon)
        lines.append(f" {ints.two_body[idx]!r} {p} {q} {r} {s}")
    for (p, q) in sorted(ints.one_body):
        if p <= q:
            lines.append(f" {ints.one_body[(p, q)]!r} {p + 1} {q + 1} 0 0")
    lines.append(f" {ints.core_energy!r} 0 0 0 0")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# run configuration

DEFAULT_BETA_GRID = tuple(float(b) for b in np.geomspace(0.1, 100.0, 13))


@dataclass(frozen=True)
class RunConfig:
    integrals_path: Path
    beta_grid: tuple[float, ...] = DEFAULT_BETA_GRID
    shot_counts: tuple[float, ...] = (INF_SHOTS,)
    repetitions: int = 100
    rng_seed: int = 0
    ground_state_mode: str = "exact"
    spread_percentile: float = 0.997
    output_path: Path | None = None
    eta: float = 1e-7
    symmetrize: bool = False
    shared_record: bool = True
    vqe_restarts: int = 3
    vqe_cache_dir: Path | None = None
    extra: dict = field(default_factory=dict)


_KNOWN_KEYS = {
    "integrals_path", "beta_grid", "shot_counts", "shots", "repetitions", "rng_seed", "seed",
    "ground_state_mode", "spread_percentile", "output_path", "eta", "symmetrize",
    "shared_record", "vqe_restarts", "vqe_cache_dir",
}


def _parse_shots(values, key="shot_counts") -> tuple[float, ...]:
    out = []
    for v in values:
        if isinstance(v, str):
            if v.strip().lower() in ("inf", "infinite", "infinity"):
                out.append(INF_SHOTS)
                continue
            try:
                v = float(v)
            except ValueError:
                raise ValidationFailed(key, f"unrecognized value {v!r}") from None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValidationFailed(key, f"unrecognized value {v!r}")
        if math.isinf(v):
            out.append(INF_SHOTS)
            continue
        if v < 1 or int(v) != v:
            raise ValidationFailed(key, f"shot count {v!r} must be an integer >= 1")
        out.append(int(v))
    return tuple(out)


def validate_run_config(raw: Mapping, base_dir: Path | None = None) -> RunConfig:
    """Build a RunConfig from a flat mapping, applying defaults."""
    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ValidationFailed(sorted(unknown)[0], "unknown configuration key")
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()

    if "integrals_path" not in raw:
        raise ValidationFailed("integrals_path", "required")
    ipath = Path(raw["integrals_path"])
    if not ipath.is_absolute():
        ipath = base_dir / ipath

    beta = raw.get("beta_grid", DEFAULT_BETA_GRID)
    try:
        beta = tuple(float(b) for b in beta)
    except (TypeError, ValueError):
        raise ValidationFailed("beta_grid", "must be a list of numbers") from None
    if not beta:
        raise ValidationFailed("beta_grid", "must not be empty")
    if any(not b > 0 or math.isinf(b) for b in beta):
        raise ValidationFailed("beta_grid", "values must be finite and strictly positive")
    if any(b2 <= b1 for b1, b2 in zip(beta, beta[1:])):
        raise ValidationFailed("beta_grid", "must be sorted strictly ascending")

    shots_key = "shot_counts" if "shot_counts" in raw else "shots"
    shots = raw.get(shots_key, ["inf"])
    if not isinstance(shots, (list, tuple)):
        shots = [shots]
    shots = _parse_shots(shots, shots_key)
    if not shots:
        raise ValidationFailed(shots_key, "must not be empty")

    reps = raw.get("repetitions", 100)
    if isinstance(reps, bool) or not isinstance(reps, int) or reps < 1:
        raise ValidationFailed("repetitions", f"must be an integer >= 1, got {reps!r}")

    seed_key = "rng_seed" if "rng_seed" in raw else "seed"
    seed = raw.get(seed_key, 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ValidationFailed(seed_key, f"must be a non-negative integer, got {seed!r}")

    mode = str(raw.get("ground_state_mode", "exact")).lower()
    if mode not in ("exact", "vqe"):
        raise ValidationFailed("ground_state_mode", f"expected 'exact' or 'vqe', got {mode!r}")

    pct = raw.get("spread_percentile", 0.997)
    if isinstance(pct, bool) or not isinstance(pct, (int, float)) or not 0 < pct <= 1:
        raise ValidationFailed("spread_percentile", f"must lie in (0, 1], got {pct!r}")

    eta = raw.get("eta", 1e-7)
    if isinstance(eta, bool) or not isinstance(eta, (int, float)) or not eta > 0:
        raise ValidationFailed("eta", f"must be positive, got {eta!r}")

    restarts = raw.get("vqe_restarts", 3)
    if isinstance(restarts, bool) or not isinstance(restarts, int) or restarts < 1:
        raise ValidationFailed("vqe_restarts", f"must be an integer >= 1, got {restarts!r}")

    for key in ("symmetrize", "shared_record"):
        if key in raw and not isinstance(raw[key], bool):
            raise ValidationFailed(key, "must be true or false")

    def _opt_path(key):
        v = raw.get(key)
        if v is None:
            return None
        p = Path(v)
        return p if p.is_absolute() else base_dir / p

    return RunConfig(
        integrals_path=ipath,
        beta_grid=beta,
        shot_counts=shots,
        repetitions=reps,
        rng_seed=seed,
        ground_state_mode=mode,
        spread_percentile=float(pct),
        output_path=_opt_path("output_path"),
        eta=float(eta),
        symmetrize=raw.get("symmetrize", False),
        shared_record=raw.get("shared_record", True),
        vqe_restarts=restarts,
        vqe_cache_dir=_opt_path("vqe_cache_dir"),
    )


def load_run_config(path) -> RunConfig:
    """Read a flat TOML key-value file (``key = value`` per line)."""
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except OSError as exc:
        raise ValidationFailed("path", f"cannot read {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ValidationFailed("syntax", str(exc)) from None
    nested = [k for k, v in raw.items() if isinstance(v, dict)]
    if nested:
        raise ValidationFailed(nested[0], "configuration must be flat (no tables)")
    return validate_run_config(raw, base_dir=path.parent)


# ---------------------------------------------------------------------------
# results

CSV_COLUMNS = (
    "beta", "shots",
    "trace_distance_median", "trace_distance_lo", "trace_distance_hi",
    "delta_E_median", "delta_E_lo", "delta_E_hi",
)


def format_shots(shots) -> str:
    return "inf" if math.isinf(shots) else str(int(shots))


def summarize(values, spread_percentile: float):
    """Median and central-percentile interval; NaNs (failed runs) are skipped."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return math.nan, math.nan, math.nan
    tail = (1.0 - spread_percentile) / 2.0
    lo, med, hi = np.quantile(v, [tail, 0.5, 1.0 - tail])
    return float(med), float(lo), float(hi)


def write_results(table, path, spread_percentile: float | None = None) -> None:
    """Write the aggregated CSV at ``path`` and raw values to ``path.json``."""
    path = Path(path)
    pct = table.spread_percentile if spread_percentile is None else spread_percentile
    summary = table.summary(pct)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_COLUMNS)
            for row in summary:
                writer.writerow([
                    repr(row["beta"]), format_shots(row["shots"]),
                    *(repr(row[c]) for c in CSV_COLUMNS[2:]),
                ])
        sidecar = path.with_name(path.name + ".json")
        with open(sidecar, "w") as f:
            json.dump(table.to_json_dict(pct), f, indent=1, allow_nan=True)
    except OSError as exc:
        raise IoFailure(f"cannot write results to {path}: {exc}") from exc
