"""Persistence: the ffo-v1 far field format, operator banks, CSV and PGM export.

The ffo-v1 file is a JSON document carrying the wave number, the direction
count, the generating contrast descriptor, the unweighted kernel as row-major
[re, im] pairs, and an explicit convention block::

    {"farfield": "volume-kernel", "gamma_sq": "1/(8*pi*k)", "weight": "2*pi/N"}

Readers reject any other convention outright instead of reinterpreting the
numbers.  Floats are serialized with shortest round-trip precision, so
write-then-read reproduces kernels bit for bit.

A bank is a directory of ffo files plus a manifest.json with SHA-256
checksums, keyed by the synthesis parameters (descriptor, k, n, grid, tol);
missing members can be synthesized on demand, optionally in parallel worker
processes.
"""

from __future__ import annotations

import hashlib
import json
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .errors import DataFormatError, PreconditionError
from .model import ComputationalGrid, DirectionSet, WaveContext, contrast_from_dict
from .operators import FarFieldMatrix

__all__ = [
    "FFO_FORMAT",
    "CONVENTION",
    "ffo_write",
    "ffo_read",
    "FarFieldBank",
    "resolve_workers",
    "write_indicator_csv",
    "write_indicator_pgm",
    "write_bounds_csv",
    "write_trace_csv",
]

FFO_FORMAT = "ffo-v1"
CONVENTION = {"farfield": "volume-kernel", "gamma_sq": "1/(8*pi*k)", "weight": "2*pi/N"}

THREADS_ENV_VAR = "SCATTERBOUND_THREADS"


def resolve_workers(requested: int | None = None) -> int:
    """Worker count from an explicit request, the environment, or the CPU count."""
    if requested is not None:
        if requested < 1:
            raise PreconditionError("worker count must be at least 1")
        return requested
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise PreconditionError(f"{THREADS_ENV_VAR} must be an integer, got {env!r}")
        if value < 1:
            raise PreconditionError(f"{THREADS_ENV_VAR} must be at least 1")
        return value
    return os.cpu_count() or 1


def ffo_write(path, F: FarFieldMatrix) -> None:
    """Write one far field data set as an ffo-v1 JSON file."""
    n = F.dirs.n
    pairs = [[float(v.real), float(v.imag)] for v in F.kernel.ravel()]
    doc = {
        "format": FFO_FORMAT,
        "k": float(F.ctx.k),
        "n_directions": n,
        "convention": dict(CONVENTION),
        "contrast": F.contrast_tag,
        "kernel": pairs,
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def _require(doc: dict, key: str, path):
    if key not in doc:
        raise DataFormatError(f"{path}: missing field {key!r}")
    return doc[key]


def ffo_read(path) -> FarFieldMatrix:
    """Read an ffo-v1 file back into a FarFieldMatrix.

    Malformed JSON reports the line and column; a convention block that does
    not match this toolkit's exactly is a hard "convention mismatch" error.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataFormatError(
            f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise DataFormatError(f"{path}: top level must be an object")
    if _require(doc, "format", path) != FFO_FORMAT:
        raise DataFormatError(f"{path}: unknown format tag {doc['format']!r}")
    convention = _require(doc, "convention", path)
    if convention != CONVENTION:
        raise DataFormatError(
            f"{path}: convention mismatch: file declares {convention!r}, "
            f"this toolkit requires {CONVENTION!r}"
        )
    k = _require(doc, "k", path)
    n = _require(doc, "n_directions", path)
    pairs = _require(doc, "kernel", path)
    if not isinstance(n, int) or n < 2:
        raise DataFormatError(f"{path}: n_directions must be a positive integer")
    if len(pairs) != n * n:
        raise DataFormatError(
            f"{path}: kernel holds {len(pairs)} entries, expected n_directions^2 = {n * n}"
        )
    try:
        flat = np.array([complex(re, im) for re, im in pairs])
    except (TypeError, ValueError) as exc:
        raise DataFormatError(f"{path}: kernel entries must be [re, im] pairs: {exc}") from exc
    ctx = WaveContext(k)
    dirs = DirectionSet.uniform(n)
    return FarFieldMatrix(
        ctx=ctx, dirs=dirs, kernel=flat.reshape(n, n), contrast_tag=doc.get("contrast")
    )


# ---------------------------------------------------------------------------
# Banks
# ---------------------------------------------------------------------------


def _entry_key(descriptor: dict, k: float, n: int, m: int, box_radius: float, tol: float) -> str:
    blob = json.dumps(
        {"contrast": descriptor, "k": k, "n": n, "m": m, "box_radius": box_radius, "tol": tol},
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()[:20]


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class FarFieldBank:
    """Directory of precomputed far field operators with a checksum manifest.

    Entries are keyed by the full synthesis parameters; loading verifies the
    stored SHA-256 of each file.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._manifest_path = self.directory / "manifest.json"
        if self._manifest_path.exists():
            try:
                self._entries = json.loads(self._manifest_path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{self._manifest_path}: malformed manifest: {exc}") from exc
        else:
            self._entries = {}

    def _save_manifest(self):
        self._manifest_path.write_text(json.dumps(self._entries, indent=1), encoding="utf-8")

    def get(self, descriptor, ctx, dirs, grid, tol) -> FarFieldMatrix | None:
        key = _entry_key(descriptor, ctx.k, dirs.n, grid.m, grid.box_radius, tol)
        entry = self._entries.get(key)
        if entry is None:
            return None
        path = self.directory / entry["file"]
        if not path.exists():
            return None
        if _sha256_file(path) != entry["sha256"]:
            raise DataFormatError(f"{path}: checksum mismatch against bank manifest")
        return ffo_read(path)

    def put(self, descriptor, ctx, dirs, grid, tol, F: FarFieldMatrix) -> None:
        key = _entry_key(descriptor, ctx.k, dirs.n, grid.m, grid.box_radius, tol)
        fname = f"{key}.ffo"
        ffo_write(self.directory / fname, F)
        self._entries[key] = {
            "file": fname,
            "sha256": _sha256_file(self.directory / fname),
            "contrast": descriptor,
            "k": ctx.k,
            "n": dirs.n,
            "m": grid.m,
            "box_radius": grid.box_radius,
            "tol": tol,
        }
        self._save_manifest()

    def ensure(self, descriptors, ctx, dirs, grid, tol, workers: int = 1):
        """Far field data for every descriptor, synthesizing what is missing.

        Returns the list of FarFieldMatrix in descriptor order.  Missing
        members are synthesized with far_field_matrix, in parallel processes
        when workers > 1, and persisted.
        """
        descriptors = list(descriptors)
        docs = [d.to_dict() for d in descriptors]
        out: dict[int, FarFieldMatrix] = {}
        missing = []
        for i, doc in enumerate(docs):
            cached = self.get(doc, ctx, dirs, grid, tol)
            if cached is None:
                missing.append(i)
            else:
                out[i] = cached
        if missing:
            jobs = [
                ((ctx.k, docs[i], grid.box_radius, grid.m, tol, dirs.n), i) for i in missing
            ]

            def store(i, kernel):
                F = FarFieldMatrix(ctx=ctx, dirs=dirs, kernel=kernel, contrast_tag=docs[i])
                self.put(docs[i], ctx, dirs, grid, tol, F)
                out[i] = F

            if workers > 1 and len(missing) > 1:
                mp = multiprocessing.get_context("fork")
                with ProcessPoolExecutor(max_workers=workers, mp_context=mp) as pool:
                    # consume lazily so finished members are persisted right away
                    for i, kernel in pool.map(_synthesize_task, jobs):
                        store(i, kernel)
            else:
                for job in jobs:
                    store(*_synthesize_task(job))
        return [out[i] for i in range(len(descriptors))]


def _synthesize_task(job):
    from .forward import far_field_matrix

    (k, doc, box_radius, m, tol, n), index = job
    ctx = WaveContext(k)
    q = contrast_from_dict(doc)
    dirs = DirectionSet.uniform(n)
    grid = ComputationalGrid(box_radius=box_radius, m=m)
    return index, far_field_matrix(ctx, q, dirs, grid, tol=tol).kernel


# ---------------------------------------------------------------------------
# CSV / PGM exporters
# ---------------------------------------------------------------------------


def _meta_lines(meta: dict) -> str:
    return "".join(f"# {key}={value}\n" for key, value in meta.items())


def write_indicator_csv(path, indicator, meta: dict | None = None) -> None:
    """Indicator map as CSV with columns x,y,value (full float precision)."""
    lines = []
    if meta:
        lines.append(_meta_lines(meta))
    lines.append("x,y,value\n")
    for (x, y), v in zip(indicator.grid.points(), indicator.values):
        lines.append(f"{float(x)!r},{float(y)!r},{float(v)!r}\n")
    Path(path).write_text("".join(lines), encoding="utf-8", newline="\n")


def write_indicator_pgm(path, indicator) -> None:
    """Indicator map as binary 8-bit PGM; value v maps to round(255 v)."""
    res = indicator.grid.resolution
    img = np.rint(255.0 * indicator.as_image()).astype(np.uint8)
    header = f"P5\n{res} {res}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.tobytes())


def write_bounds_csv(path, result) -> None:
    """Constant-bound search trail with the calibrated convention embedded."""
    lines = [
        _meta_lines(
            {
                "orientation": result.orientation.value,
                "r_min": repr(result.r_min),
                "r_max": repr(result.r_max),
                "c_star": repr(result.c_star),
                "c_upper": repr(result.c_upper),
            }
        ),
        "c,m_plus,m_minus,verdict\n",
    ]
    for entry in result.trail:
        lines.append(
            f"{float(entry.c)!r},{entry.counts.m_plus},{entry.counts.m_minus},"
            f"{entry.verdict.value}\n"
        )
    Path(path).write_text("".join(lines), encoding="utf-8", newline="\n")


def write_trace_csv(path, trace) -> None:
    """Trace bounds per boundary sample with the calibrated convention embedded."""
    lines = [
        _meta_lines(
            {
                "orientation": trace.orientation.value,
                "r_min": repr(trace.r_min),
                "r_max": repr(trace.r_max),
            }
        ),
        "s_arclength,x,y,q_minus,q_plus\n",
    ]
    for s, (x, y), lo, hi in zip(trace.arclength, trace.points, trace.q_minus, trace.q_plus):
        lines.append(f"{float(s)!r},{float(x)!r},{float(y)!r},{float(lo)!r},{float(hi)!r}\n")
    Path(path).write_text("".join(lines), encoding="utf-8", newline="\n")
