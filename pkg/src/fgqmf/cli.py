"""Command-line front end: ``qmf <command> ...``.

Exit status: 0 on success, 1 when a check fails, 2 on usage or parse
errors. ``QMF_TOL`` overrides the default predicate tolerance. Reports go
to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Sequence

import numpy as np

from .classical import format_number, valid_configurations
from .graph import GraphError
from .measure import KappaMatrix, converge, separation_violations
from .modelfile import ModelError, load_model
from .models import fr_implications, fr_model
from .qmf import SqmfError, default_tol, marginalize, measurement_pmf, sqmf_from_graph

__all__ = ["main", "run"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(out, args, text: str, payload: dict):
    out.write(json.dumps(payload, indent=2) + "\n" if args.json else text)


def _complex(z) -> dict:
    z = complex(z)
    return {"value": [z.real, z.imag], "text": format_number(z)}


def _cmd_check(g, args, out) -> int:
    tol = default_tol()
    pairs = args.pairs or None
    try:
        q = sqmf_from_graph(g, pairs, tol)
    except SqmfError as e:
        c = e.check
        payload = {"ok": False, "invariant": e.invariant, "message": str(e)}
        lines = [f"FAILED invariant: {e.invariant}", f"  {e}"]
        if c is not None:
            payload["hermitian_error"] = c.hermitian_error
            payload["min_eigenvalue"] = c.min_eigenvalue
        _emit(out, args, "\n".join(lines) + "\n", payload)
        return EXIT_FAIL
    c = q.check
    text = (
        f"pairs: {', '.join(q.kets)}\n"
        f"hermitian: yes (max error {format_number(c.hermitian_error)})\n"
        f"psd: yes (eigenvalues in [{format_number(c.min_eigenvalue)}, {format_number(c.max_eigenvalue)}])\n"
        f"total: {format_number(q.total)}\n"
        "ok: valid SQMF\n"
    )
    payload = {
        "ok": True,
        "pairs": q.kets,
        "hermitian_error": c.hermitian_error,
        "min_eigenvalue": c.min_eigenvalue,
        "max_eigenvalue": c.max_eigenvalue,
        "total": _complex(q.total),
    }
    _emit(out, args, text, payload)
    return EXIT_OK


def _cmd_marginalize(g, args, out) -> int:
    tol = default_tol()
    try:
        q = sqmf_from_graph(g, None, tol)
        m = marginalize(q, args.keep, tol)
    except SqmfError as e:
        print(f"FAILED invariant: {e.invariant}\n  {e}", file=sys.stderr)
        return EXIT_FAIL
    table = valid_configurations(m.canonical(), tol)
    _emit(out, args, table.to_text(), table.to_dict())
    return EXIT_OK


def _cmd_configs(g, args, out) -> int:
    t = g.exterior(args.keep or None)
    table = valid_configurations(t, default_tol())
    text = table.to_text() + f"sum = {format_number(sum(table.values()))}\n"
    payload = table.to_dict()
    payload["sum"] = _complex(sum(table.values()))
    _emit(out, args, text, payload)
    return EXIT_OK


def _cmd_pmf(g, args, out) -> int:
    tol = default_tol()
    try:
        q = sqmf_from_graph(g, args.pairs, tol)
        p = measurement_pmf(q, args.pairs, tol)
    except SqmfError as e:
        print(f"FAILED invariant: {e.invariant}\n  {e}", file=sys.stderr)
        return EXIT_FAIL
    names = list(p.names)
    rows = []
    for idx in np.ndindex(*p.probs.shape):
        rows.append((idx, float(p.probs[idx])))
    width = [max(len(n), 1) for n in names]
    lines = ["  ".join(n.rjust(w) for n, w in zip(names, width)) + "  probability"]
    for idx, v in rows:
        lines.append("  ".join(str(i).rjust(w) for i, w in zip(idx, width)) + "  " + format_number(v))
    payload = {
        "pairs": names,
        "rows": [{"assignment": dict(zip(names, map(int, idx))), "probability": v, "text": format_number(v)}
                 for idx, v in rows],
    }
    _emit(out, args, "\n".join(lines) + "\n", payload)
    return EXIT_OK


def _kappa_of(g) -> KappaMatrix:
    keep = g.outputs
    if len(keep) != 2:
        raise UsageError(f"kappa models need exactly two outputs (Z, Z'); found {keep}")
    t = g.exterior(keep)
    try:
        return KappaMatrix(t.transpose(keep).data)
    except ValueError as e:
        raise _CheckFailed(str(e)) from None


class _CheckFailed(Exception):
    pass


def _matrix_text(m: np.ndarray) -> list[str]:
    cells = [[format_number(z) for z in row] for row in m]
    w = max(len(c) for row in cells for c in row)
    return ["  " + "  ".join(c.rjust(w) for c in row) for row in cells]


def _cmd_kappa(g, args, out) -> int:
    try:
        k = _kappa_of(g)
    except _CheckFailed as e:
        print(f"FAILED: not a kappa function: {e}", file=sys.stderr)
        return EXIT_FAIL
    mo = k.max_off_diagonal()
    proj = k.is_projection()
    lines = ["kappa:"] + _matrix_text(k.values)
    lines.append(f"max off-diagonal: {format_number(mo)}")
    lines.append(f"projection measurement (kappa = f_eq): {'yes' if proj else 'no'}")
    payload = {
        "kappa": [[_complex(z) for z in row] for row in k.values],
        "max_off_diagonal": mo,
        "projection": proj,
    }
    _emit(out, args, "\n".join(lines) + "\n", payload)
    return EXIT_OK


def _cmd_converge(g, args, out) -> int:
    try:
        k = _kappa_of(g)
    except _CheckFailed as e:
        print(f"FAILED: not a kappa function: {e}", file=sys.stderr)
        return EXIT_FAIL
    r = converge(k, threshold=args.threshold, max_n=args.max_n)
    verdict = "converged" if r.converged else "not converged"
    text = (
        f"single-interaction max off-diagonal: {format_number(k.max_off_diagonal())}\n"
        f"threshold: {format_number(r.threshold)}\n"
        f"{verdict} after N = {r.n} interactions (max off-diagonal {format_number(r.max_off_diagonal)})\n"
    )
    _emit(out, args, text, r.to_dict())
    return EXIT_OK if r.converged else EXIT_FAIL


def _cmd_undo(g, args, out) -> int:
    keep = g.outputs
    if len(keep) != 4:
        raise UsageError(f"undo models need four outputs (X, X2, X', X2'); found {keep}")
    t = g.exterior(keep).transpose(keep)
    M = t.shape[0]
    ident = np.einsum("ab,cd->abcd", np.eye(M), np.eye(M))
    err = float(np.max(np.abs(t.data - ident)))
    ok = err <= args.tol
    text = f"max deviation from identity: {format_number(err)}\nundone: {'yes' if ok else 'no'}\n"
    _emit(out, args, text, {"undone": ok, "max_deviation": err})
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_separation(g, args, out) -> int:
    prefix = args.interaction
    if prefix is None:
        cands = [p for p, i in g.instances.items() if "probe_out" in i.roles]
        if len(cands) != 1:
            raise UsageError(f"pass --interaction; candidate instances: {cands}")
        prefix = cands[0]
    bad = separation_violations(g, prefix)
    text = f"interaction: {prefix}\nseparation condition: {'holds' if not bad else 'violated'}\n"
    if bad:
        text += "probe and system meet again at: " + ", ".join(bad) + "\n"
    _emit(out, args, text, {"interaction": prefix, "holds": not bad, "violations": bad})
    return EXIT_OK if not bad else EXIT_FAIL


def _cmd_fr(args, out) -> int:
    m = fr_model(args.seed)
    if args.report:
        r = fr_implications(m)
        out.write(r.to_json() if args.json else r.to_text())
        ok = all(i.holds for i in r.implications) and not r.jointly_classicable
        return EXIT_OK if ok else EXIT_FAIL
    p = m.stop_probability()
    frac = Fraction(p).limit_denominator(1000)
    _emit(out, args, f"Pr = {frac}\nPr(Y1b=0, Y2b=1) = {format_number(p)}\n",
          {"value": p, "text": format_number(p), "fraction": str(frac)})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qmf", description="Factor graphs of quantum mass functions.")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_file(name, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("file", help="model file (JSON)")
        p.add_argument("--json", action="store_true", help="emit JSON instead of text")
        return p

    p = with_file("check", "certify the model's SQMF")
    p.add_argument("--pairs", nargs="+", help="pairs to certify (default: declared measurements or all pairs)")
    p = with_file("marginalize", "marginal onto the given pairs")
    p.add_argument("--keep", nargs="+", required=True)
    p = with_file("configs", "valid configurations of the exterior function")
    p.add_argument("--keep", nargs="+", help="variables to keep (default: declared outputs)")
    p = with_file("pmf", "measurement pmf of jointly classicable pairs")
    p.add_argument("--pairs", nargs="+", required=True)
    with_file("kappa", "kappa function of an interaction model")
    p = with_file("converge", "repeated interactions until kappa is diagonal")
    p.add_argument("--max-n", type=int, default=1_000_000)
    p.add_argument("--threshold", type=float, default=1e-6)
    p = with_file("undo-check", "does the model leave the system untouched")
    p.add_argument("--tol", type=float, default=1e-12)
    p = with_file("separation-check", "probe never re-meets the system after the interaction")
    p.add_argument("--interaction", help="gadget instance prefix of the measuring interaction")
    p = sub.add_parser("fr", help="Frauchiger-Renner model")
    p.add_argument("--report", action="store_true", help="tables, implications and verdict")
    p.add_argument("--json", action="store_true")
    p.add_argument("--seed", type=int, default=0, help="seed of the unitary completion")
    return ap


_COMMANDS = {
    "check": _cmd_check,
    "marginalize": _cmd_marginalize,
    "configs": _cmd_configs,
    "pmf": _cmd_pmf,
    "kappa": _cmd_kappa,
    "converge": _cmd_converge,
    "undo-check": _cmd_undo,
    "separation-check": _cmd_separation,
}


def run(argv: Sequence[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        default_tol()
    except ValueError:
        print("QMF_TOL is not a number", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "fr":
        return _cmd_fr(args, out)
    try:
        g = load_model(args.file)
    except (OSError, ModelError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](g, args, out)
    except (UsageError, GraphError, KeyError, ValueError) as e:
        if isinstance(e, SqmfError):
            print(f"FAILED invariant: {e.invariant}\n  {e}", file=sys.stderr)
            return EXIT_FAIL
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
