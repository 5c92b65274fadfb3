"""Environment and field file formats.

PGM intensity maps
    P2 (ASCII) or P5 (binary) grayscale. Intensity maps linearly to fitness
    ``beta = I / maxval``; cells with ``beta < 1/255`` become obstacles.
    Image column ``c`` and row ``r`` map to cell ``(c, height - 1 - r)`` so
    that axis 1 points up. A JSON sidecar (same stem, ``.json``) carries
    start/target indices, spacing, origin and directional annotations.

JSON environments (2-D or 3-D)::

    {"schema_version": 1, "dims": 3, "shape": [nx, ny, nz],
     "order": "row-major", "spacing": 0.2, "origin": [x0, y0, z0],
     "border_obstacles": true,
     "cell_class": [...],           # optional flat row-major class codes
     "beta": [...],                 # optional flat row-major fitness
     "obstacles": [[i, j, k], ...],
     "obstacle_boxes": [{"lo": [...], "hi": [...]}],       # inclusive
     "obstacle_spheres": [{"center": [x, y, z], "radius": r}],
     "target": [i, j, k] | "target_position": [x, y, z],
     "start": [i, j, k] | "start_position": [x, y, z],
     "omega_prime": [{"lo": [...], "hi": [...], "direction": [...]}]}

Solved fields are written as a JSON header plus a values file
(``.csv``: one value per line, or ``.bin``: raw little-endian float64),
both in row-major order. The header embeds the environment document so a
field file is self-contained.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import FREE, OBSTACLE, START, TARGET, GridEnvironment, GridEnvironmentError
from .potential import VARIANTS, PotentialField

SCHEMA_VERSION = 1


class FormatError(ValueError):
    """Malformed input file; ``position`` is a byte offset when known."""

    def __init__(self, message, position=None, path=None):
        where = []
        if path is not None:
            where.append(str(path))
        if position is not None:
            where.append(f"byte {position}")
        super().__init__(f"{': '.join(where)}: {message}" if where else message)
        self.position = position
        self.path = path


# -- PGM ------------------------------------------------------------------

def _pgm_tokens(data: bytes, count: int, pos: int, path=None):
    """Read ``count`` whitespace-separated header tokens starting at ``pos``."""
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        if pos >= n:
            raise FormatError("unexpected end of header", pos, path)
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        tok = data[start:pos]
        try:
            tokens.append(int(tok))
        except ValueError:
            raise FormatError(f"expected an integer, found {tok!r}", start, path) from None
    return tokens, pos


def read_pgm(path) -> np.ndarray:
    """Return the image as an (height, width) float array scaled to [0, 1]."""
    path = Path(path)
    data = path.read_bytes()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"not a PGM file (magic {magic!r})", 0, path)
    (width, height, maxval), pos = _pgm_tokens(data, 3, 2, path)
    if width <= 0 or height <= 0:
        raise FormatError("image dimensions must be positive", pos, path)
    if not 0 < maxval < 65536:
        raise FormatError(f"invalid maxval {maxval}", pos, path)
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = width * height * dtype.itemsize
        raster = data[pos:pos + need]
        if len(raster) < need:
            raise FormatError(f"raster truncated: need {need} bytes, found {len(raster)}", pos + len(raster), path)
        img = np.frombuffer(raster, dtype=dtype).reshape(height, width).astype(float)
    else:
        vals, _ = _pgm_tokens(data, width * height, pos, path)
        img = np.array(vals, dtype=float).reshape(height, width)
    if np.any(img > maxval):
        raise FormatError("pixel value exceeds maxval", None, path)
    return img / maxval


def write_pgm(path, image, binary: bool = True):
    """Write a (height, width) array in [0, 1] as an 8-bit PGM."""
    img = np.clip(np.rint(np.asarray(image, dtype=float) * 255), 0, 255).astype(np.uint8)
    h, w = img.shape
    path = Path(path)
    if binary:
        path.write_bytes(f"P5\n{w} {h}\n255\n".encode() + img.tobytes())
    else:
        lines = [f"P2\n{w} {h}\n255"] + [" ".join(str(int(v)) for v in row) for row in img]
        path.write_text("\n".join(lines) + "\n")


def image_to_grid(img) -> np.ndarray:
    """(row, col) image with row 0 on top -> (x, y) grid with y up."""
    return np.asarray(img)[::-1, :].T.copy()


def grid_to_image(grid) -> np.ndarray:
    return np.asarray(grid).T[::-1, :].copy()


def load_pgm_environment(path, sidecar=None) -> GridEnvironment:
    """Build a 2-D environment from an intensity map and its JSON sidecar."""
    path = Path(path)
    beta = image_to_grid(read_pgm(path))
    side = {}
    if sidecar is None:
        cand = path.with_suffix(".json")
        sidecar = cand if cand.exists() else None
    if sidecar is not None:
        side = _read_json(sidecar)
    cc = np.where(beta < 1.0 / 255.0, OBSTACLE, FREE).astype(np.int8)
    doc = dict(side)
    doc.setdefault("dims", 2)
    doc["shape"] = list(cc.shape)
    return _environment_from_doc(doc, cc, beta, Path(sidecar) if sidecar else path)


# -- JSON environments ------------------------------------------------------

def _read_json(path):
    path = Path(path)
    text = path.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})",
                          exc.pos, path) from None


def _index(doc, key, env_origin, spacing, shape, path):
    if key in doc:
        idx = tuple(int(i) for i in doc[key])
    elif key + "_position" in doc:
        q = (np.asarray(doc[key + "_position"], float) - np.asarray(env_origin)) / spacing
        idx = tuple(int(i) for i in np.rint(q))
    else:
        return None
    if len(idx) != len(shape) or any(not 0 <= i < n for i, n in zip(idx, shape)):
        raise FormatError(f"{key} index {list(idx)} outside grid of shape {list(shape)}", None, path)
    return idx


def _environment_from_doc(doc, cc=None, beta=None, path=None) -> GridEnvironment:
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise FormatError(f"unsupported schema_version {version}", None, path)
    try:
        shape = tuple(int(n) for n in doc["shape"])
    except KeyError:
        raise FormatError("missing key 'shape'", None, path) from None
    dims = int(doc.get("dims", len(shape)))
    if dims != len(shape) or dims not in (2, 3):
        raise FormatError(f"dims={dims} inconsistent with shape {list(shape)}", None, path)
    if doc.get("order", "row-major") != "row-major":
        raise FormatError("only row-major ordering is supported", None, path)
    spacing = float(doc.get("spacing", 1.0))
    origin = tuple(float(o) for o in doc.get("origin", [0.0] * dims))
    size = int(np.prod(shape))

    if cc is None:
        if "cell_class" in doc:
            flat = np.asarray(doc["cell_class"], dtype=np.int8)
            if flat.size != size:
                raise FormatError(f"cell_class has {flat.size} entries, expected {size}", None, path)
            cc = flat.reshape(shape)
        else:
            cc = np.full(shape, FREE, dtype=np.int8)
    cc = np.array(cc, dtype=np.int8)
    if beta is None and "beta" in doc:
        b = np.asarray(doc["beta"], dtype=float)
        if b.size != size:
            raise FormatError(f"beta has {b.size} entries, expected {size}", None, path)
        beta = b.reshape(shape)

    if doc.get("border_obstacles", False):
        inner = np.zeros(shape, dtype=bool)
        inner[tuple(slice(1, -1) for _ in shape)] = True
        cc[~inner] = OBSTACLE
    for idx in doc.get("obstacles", []):
        cc[tuple(int(i) for i in idx)] = OBSTACLE
    for box in doc.get("obstacle_boxes", []):
        lo, hi = box["lo"], box["hi"]
        cc[tuple(slice(int(a), int(b) + 1) for a, b in zip(lo, hi))] = OBSTACLE
    if doc.get("obstacle_spheres"):
        pos = np.stack(np.meshgrid(*[origin[a] + spacing * np.arange(n) for a, n in enumerate(shape)],
                                   indexing="ij"), axis=-1)
        for sph in doc["obstacle_spheres"]:
            d = np.linalg.norm(pos - np.asarray(sph["center"], float), axis=-1)
            cc[d <= float(sph["radius"])] = OBSTACLE

    target = _index(doc, "target", origin, spacing, shape, path)
    start = _index(doc, "start", origin, spacing, shape, path)
    if target is not None:
        cc[target] = TARGET
    if start is not None:
        cc[start] = START
    if beta is not None:
        beta = np.array(beta, dtype=float)
        beta[cc == OBSTACLE] = 0.0

    omega = lam = None
    regions = doc.get("omega_prime", [])
    if regions:
        omega = np.zeros(shape, dtype=bool)
        lam = np.zeros(shape + (dims,))
        for reg in regions:
            d = np.asarray(reg["direction"], float)
            n = np.linalg.norm(d)
            if d.shape != (dims,) or n == 0:
                raise FormatError("omega_prime direction must be a nonzero vector of length dims", None, path)
            sl = tuple(slice(int(a), int(b) + 1) for a, b in zip(reg["lo"], reg["hi"]))
            omega[sl] = True
            lam[sl] = d / n
    try:
        return GridEnvironment(cc, spacing=spacing, origin=origin, beta=beta,
                               lambda_dir=lam, omega_mask=omega, meta={"source": str(path) if path else None})
    except GridEnvironmentError as exc:
        raise FormatError(str(exc), None, path) from None


def environment_from_dict(doc: dict) -> GridEnvironment:
    return _environment_from_doc(doc)


def load_environment(path, sidecar=None) -> GridEnvironment:
    """Load a ``.pgm`` intensity map or a ``.json`` environment document."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if path.suffix.lower() == ".pgm":
        return load_pgm_environment(path, sidecar)
    return _environment_from_doc(_read_json(path), path=path)


def environment_to_dict(env: GridEnvironment) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "dims": env.ndim,
        "shape": list(env.shape),
        "order": "row-major",
        "spacing": env.spacing,
        "origin": list(env.origin),
        "cell_class": [int(c) for c in env.cell_class.ravel()],
    }
    default_beta = np.where(env.obstacle, 0.0, 1.0)
    if not np.array_equal(env.beta, default_beta):
        doc["beta"] = [float(b) for b in env.beta.ravel()]
    if env.omega_mask is not None:
        doc["omega_prime"] = [
            {"lo": [int(i) for i in idx], "hi": [int(i) for i in idx],
             "direction": [float(x) for x in env.lambda_dir[tuple(idx)]]}
            for idx in np.argwhere(env.omega_mask)
        ]
    return doc


# -- fields -----------------------------------------------------------------

def save_field(field: PotentialField, path, fmt: str | None = None) -> Path:
    """Write ``<stem>.json`` header and ``<stem>.csv``/``.bin`` values.

    ``path`` may name either file; returns the header path.
    """
    path = Path(path)
    fmt = fmt or (path.suffix.lstrip(".") if path.suffix in (".csv", ".bin") else "csv")
    if fmt not in ("csv", "bin"):
        raise ValueError("field format must be 'csv' or 'bin'")
    header_path = path.with_suffix(".json")
    values_path = path.with_suffix("." + fmt)
    flat = np.ascontiguousarray(field.values, dtype="<f8").ravel()
    if fmt == "csv":
        values_path.write_text("".join(f"{v!r}\n" for v in flat.tolist()))
    else:
        values_path.write_bytes(flat.tobytes())
    header = {
        "schema_version": SCHEMA_VERSION,
        "shape": list(field.shape),
        "spacing": field.env.spacing,
        "origin": list(field.env.origin),
        "order": "row-major",
        "dtype": "float64-le",
        "format": fmt,
        "values_file": values_path.name,
        "variant": field.variant,
        "residual": field.residual,
        "iterations": field.iterations,
        "sigma_params": list(field.sigma_params) if field.sigma_params else None,
        "environment": environment_to_dict(field.env),
    }
    header_path.write_text(json.dumps(header, indent=1, sort_keys=True) + "\n")
    return header_path


def load_field(path) -> PotentialField:
    path = Path(path)
    header_path = path.with_suffix(".json")
    head = _read_json(header_path)
    for key in ("shape", "variant", "values_file", "environment"):
        if key not in head:
            raise FormatError(f"field header missing {key!r}", None, header_path)
    if head["variant"] not in VARIANTS:
        raise FormatError(f"unknown variant {head['variant']!r}", None, header_path)
    values_path = header_path.parent / head["values_file"]
    shape = tuple(head["shape"])
    if head.get("format", "csv") == "bin":
        vals = np.frombuffer(values_path.read_bytes(), dtype="<f8")
    else:
        vals = np.array([float(x) for x in values_path.read_text().split()])
    if vals.size != int(np.prod(shape)):
        raise FormatError(f"expected {int(np.prod(shape))} values, found {vals.size}", None, values_path)
    env = _environment_from_doc(head["environment"], path=header_path)
    sig = tuple(head["sigma_params"]) if head.get("sigma_params") else None
    return PotentialField(vals.reshape(shape), env, head["variant"], float(head.get("residual", 0.0)),
                          int(head.get("iterations", 0)), sig)
