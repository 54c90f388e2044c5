"""Command-line interface.

Every subcommand reads a sheaf document, runs one pipeline stage, and prints a
deterministic JSON run report on stdout.  Exit codes: 0 success, 1 domain
error (with an error report), 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import cochain, nsd, spectral
from .errors import FieldMismatch, PosheafError, SchemaError
from .io import (
    canonical_json,
    field_to_string,
    inputs_digest,
    parse_document,
    parse_sheaf,
    scalar_to_string,
)
from .poset import classify
from .sheaf import check_compositionality, global_sections_bruteforce

EXACT_COMMANDS = {"validate", "classify", "sections", "betti", "incidence"}


def _read(path: str) -> tuple[str, bytes]:
    raw = Path(path).read_bytes()
    return raw.decode("utf-8"), raw


def _load_exact_sheaf(path: str, command: str):
    text, raw = _read(path)
    sheaf = parse_sheaf(text)
    if command in EXACT_COMMANDS and not sheaf.field.is_exact:
        raise FieldMismatch(f"{command} requires an exact field, got R")
    return sheaf, raw


def _report_base(command: str, raw: bytes) -> dict:
    return {"command": command, "inputs_digest": inputs_digest(raw)}


def _float_list(values) -> list[float]:
    return [float(v) for v in values]


def cmd_validate(args) -> dict:
    sheaf, raw = _load_exact_sheaf(args.document, "validate")
    violations = check_compositionality(sheaf)
    report = _report_base("validate", raw)
    report["ok"] = not violations
    report["violations"] = [
        {
            "source": v.source,
            "target": v.target,
            "path_a": list(v.path_a),
            "path_b": list(v.path_b),
            "deviation_sq": v.deviation_sq,
        }
        for v in violations
    ]
    report["noncommutativity"] = float(sum(v.deviation_sq for v in violations))
    return report


def cmd_classify(args) -> dict:
    sheaf, raw = _load_exact_sheaf(args.document, "classify")
    result = classify(sheaf.poset, sheaf.field)
    report = _report_base("classify", raw)
    report["classification"] = {
        "graded": result.graded,
        "rank": (
            {e: result.rank[e] for e in sheaf.poset.elements} if result.rank else None
        ),
        "homology_cell": result.homology_cell,
        "morse_cell": result.morse_cell,
        "cell_dims": (
            {e: result.cell_dims[e] for e in sheaf.poset.elements}
            if result.cell_dims
            else None
        ),
    }
    return report


def cmd_sections(args) -> dict:
    sheaf, raw = _load_exact_sheaf(args.document, "sections")
    space = global_sections_bruteforce(sheaf)
    report = _report_base("sections", raw)
    report["sections"] = {
        "dim": space.dim,
        "layout": list(space.layout),
        "basis": [
            [scalar_to_string(v, sheaf.field) for v in vec] for vec in space.basis
        ],
    }
    return report


def cmd_betti(args) -> dict:
    sheaf, raw = _load_exact_sheaf(args.document, "betti")
    vector = cochain.betti(sheaf, args.method)
    report = _report_base("betti", raw)
    report["method"] = args.method
    report["betti"] = vector
    return report


def cmd_incidence(args) -> dict:
    sheaf, raw = _load_exact_sheaf(args.document, "incidence")
    inc = cochain.minimal_incidence(sheaf.poset, sheaf.field)
    report = _report_base("incidence", raw)
    report["incidence"] = {
        "generators": [
            {"id": g.gid, "degree": g.degree, "owner": g.owner}
            for g in inc.generators
        ],
        "labels": list(inc.complex.labels),
        "matrix": [
            [scalar_to_string(v, sheaf.field) for v in row]
            for row in inc.complex.matrix.data
        ],
    }
    return report


def _real_complex_for(sheaf):
    return spectral.real_sheaf_complex(sheaf)


def cmd_spectrum(args) -> dict:
    text, raw = _read(args.document)
    sheaf = parse_sheaf(text)
    rc = _real_complex_for(sheaf)
    lap = spectral.laplacian(rc, args.degree, args.norm)
    bundle = spectral.eigendecompose(lap)
    report = _report_base("spectrum", raw)
    report["spectrum"] = {
        "degree": args.degree,
        "normalization": args.norm,
        "eigenvalues": _float_list(bundle.eigenvalues),
        "lambda_min": bundle.lam_min,
        "lambda_max": bundle.lam_max,
        "harmonic_dim": bundle.harmonic_dim,
    }
    return report


def cmd_diffuse(args) -> dict:
    text, raw = _read(args.document)
    sheaf = parse_sheaf(text)
    rc = _real_complex_for(sheaf)
    lap = spectral.laplacian(rc, args.degree, args.norm)
    if args.x0:
        x0_doc = parse_document(Path(args.x0).read_text())
        x0 = np.asarray(x0_doc.get("x0"), dtype=float)
    else:
        x0 = np.ones(lap.size)
    cfg = spectral.DiffusionConfig(eta=args.eta, steps=args.steps, mode=args.mode)
    trace = spectral.heat_diffusion(lap, x0, cfg)
    report = _report_base("diffuse", raw)
    report["trace"] = {
        "degree": args.degree,
        "normalization": args.norm,
        "eta": trace.eta,
        "steps": args.steps,
        "mode": trace.mode,
        "energies_first": trace.energies[0],
        "energies_last": trace.energies[-1],
        "distance_first": trace.distances[0],
        "distance_last": trace.distances[-1],
        "limit": _float_list(trace.limit),
    }
    return report


def cmd_nsd_forward(args) -> dict:
    text, raw = _read(args.document)
    sheaf = parse_sheaf(text)
    params = parse_document(Path(args.params).read_text())
    for key in ("X", "W1", "W2"):
        if key not in params:
            raise SchemaError(f"missing key {key!r}")
    layer = nsd.NsdLayer(
        sheaf,
        np.asarray(params["W1"], dtype=float),
        np.asarray(params["W2"], dtype=float),
        eta=params.get("eta"),
        norm=params.get("norm", "weak"),
    )
    out = nsd.nsd_forward(layer, np.asarray(params["X"], dtype=float))
    report = _report_base("nsd-forward", raw)
    report["output"] = [[float(v) for v in row] for row in out]
    return report


def cmd_learn(args) -> dict:
    text, raw = _read(args.document)
    sheaf = parse_sheaf(text)
    signals_doc = parse_document(Path(args.signals).read_text())
    if "signals" not in signals_doc:
        raise SchemaError("missing key 'signals'")
    cfg = nsd.LearnConfig(lr=args.lr, iters=args.iters, d=args.d, seed=args.seed)
    result = nsd.learn_sheaf(sheaf.poset, signals_doc["signals"], cfg)
    report = _report_base("learn", raw)
    learned = result.sheaf
    report["learn"] = {
        "d": args.d,
        "loss_history": _float_list(result.loss_history),
        "field": field_to_string(learned.field),
        "maps": {
            f"{a}<{b}": [float(v) for row in learned.edge_map[(a, b)].data for v in row]
            for (a, b) in sorted(learned.edge_map, key=lambda ab: f"{ab[0]}<{ab[1]}")
        },
    }
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="posheaf",
        description="Sheaves on finite posets: cohomology, Laplacians, diffusion.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.add_argument("document", help="sheaf document (JSON)")
        p.set_defaults(fn=fn)
        return p

    add("validate", cmd_validate, help="check compositionality")
    add("classify", cmd_classify, help="gradedness and cell-likeness of the poset")
    add("sections", cmd_sections, help="global sections by brute force")

    p = add("betti", cmd_betti, help="Betti numbers of the sheaf")
    p.add_argument("--method", choices=["roos", "cellular", "minimal"],
                   default="minimal")

    add("incidence", cmd_incidence, help="incidence data of the poset")

    p = add("spectrum", cmd_spectrum, help="Laplacian eigendecomposition")
    p.add_argument("--degree", type=int, default=0)
    p.add_argument("--norm", choices=["none", "weak", "strong"], default="none")

    p = add("diffuse", cmd_diffuse, help="heat diffusion trace")
    p.add_argument("--degree", type=int, default=0)
    p.add_argument("--norm", choices=["none", "weak", "strong"], default="none")
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--mode", choices=["discrete", "continuous"], default="discrete")
    p.add_argument("--x0", default=None, help="JSON file with an initial state")

    p = add("nsd-forward", cmd_nsd_forward, help="neural sheaf diffusion layer")
    p.add_argument("params", help="JSON file with X, W1, W2 and optional eta/norm")

    p = add("learn", cmd_learn, help="learn edge maps from smooth signals")
    p.add_argument("signals", help="JSON file with a 'signals' array")
    p.add_argument("--lr", type=float, default=0.2)
    p.add_argument("--iters", type=int, default=60)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)

    return parser


def cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    command = args.subcommand
    try:
        report = args.fn(args)
    except PosheafError as exc:
        error_report = {
            "command": command,
            "error": {"code": exc.code, "message": str(exc)},
        }
        sys.stdout.write(canonical_json(error_report) + "\n")
        return 1
    except OSError as exc:
        error_report = {
            "command": command,
            "error": {"code": "IOError", "message": str(exc)},
        }
        sys.stdout.write(canonical_json(error_report) + "\n")
        return 1
    sys.stdout.write(canonical_json(report) + "\n")
    return 0


def main():
    raise SystemExit(cli())


if __name__ == "__main__":
    main()
