"""Command-line entry point: ``mbqc-fidelity <subcommand> ...``.

Every JSON document carries a ``provenance`` block (argv, seed, version, caps)
that reproduces the numeric fields exactly. Wall-clock timings are the only
fields that vary between identical runs.

Exit codes: 0 success, 2 validation failure, 3 cap exceeded, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

from . import __version__
from .errors import DENSE_CAP, ENUMERATION_CAP, SPECTRAL_CAP, CapExceededError, ValidationError
from .estimate import (
    PauliMeasurer,
    check_bounds,
    estimate_mbqc_fidelity,
    estimate_state_fidelity,
    sample_count,
)
from .omega import BasisMap, build_omega, build_omega_fixed, spectral_summary
from .resource import (
    ResourceState,
    cluster_1d,
    cluster_2d,
    state_from_dict,
    state_to_dict,
    verify_flow,
)
from .sampler import sample_many
from .sim import average_mbqc_fidelity, apply_noise, expectation, ideal_vector, parse_angles, parse_noise, state_fidelity

DEFAULT_SEED = 20240917
SEED_ENV = "MBQC_FIDELITY_SEED"

EXIT_OK, EXIT_VALIDATION, EXIT_CAP, EXIT_IO = 0, 2, 3, 4

_SHORTHAND = re.compile(r"^(cluster1d):(\d+)$|^(cluster2d):(\d+)x(\d+)$")


class _IOFailure(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _read_json(path: str):
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise _IOFailure(f"cannot read {path}: {exc}") from None


def resolve_state(text: str) -> ResourceState:
    """A state file path, ``-`` for stdin, or a shorthand ``cluster1d:N`` / ``cluster2d:RxC``."""
    m = _SHORTHAND.match(text)
    if m:
        if m.group(1):
            return cluster_1d(int(m.group(2)))
        return cluster_2d(int(m.group(4)), int(m.group(5)))
    state = state_from_dict(_read_json(text))
    _require_flow(state)
    return state


def _require_flow(state: ResourceState) -> None:
    verdict = verify_flow(state)
    if not verdict.ok:
        f = verdict.first
        raise ValidationError(f"flow violation at qubit {f.qubit} ({f.condition}): {f.message}")


def _provenance(args) -> dict:
    return {
        "argv": list(args.argv),
        "seed": args.seed,
        "version": __version__,
        "caps": {"dense": args.dense_cap, "enumeration": args.enum_cap, "spectral": args.spectral_cap},
    }


def _emit(args, doc: dict) -> None:
    doc = dict(doc)
    doc["provenance"] = _provenance(args)
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    _write(args, text)


def _write(args, text: str) -> None:
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise _IOFailure(f"cannot write {args.out}: {exc}") from None
    else:
        sys.stdout.write(text)


def _emit_csv(args, header: Sequence[str], rows) -> None:
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    _write(args, buf.getvalue())


def _noisy_rho(state: ResourceState, args):
    rho = ideal_vector(state, args.dense_cap).density()
    return apply_noise(rho, parse_noise(args.noise), state=state, cap=args.dense_cap)


# ---------------------------------------------------------------------------
# subcommands


def cmd_build(args) -> None:
    if args.type == "cluster1d":
        if args.n is None:
            raise ValidationError("cluster1d needs --n")
        state = cluster_1d(args.n)
    elif args.type == "cluster2d":
        if args.rows is None or args.cols is None:
            raise ValidationError("cluster2d needs --rows and --cols")
        state = cluster_2d(args.rows, args.cols)
    else:
        if not args.input:
            raise ValidationError("custom states need --in")
        state = state_from_dict(_read_json(args.input))
    _require_flow(state)
    _emit(args, {"state": state_to_dict(state)})


def cmd_omega(args) -> None:
    state = resolve_state(args.state)
    if args.basis:
        mu = {}
        for part in args.basis.split(","):
            q, _, v = part.partition("=")
            if not q.strip().isdigit():
                raise ValidationError(f"bad basis entry {part!r}; expected qubit=X|Y|XY")
            mu[int(q)] = v.strip()
        full = {q: "XY" for q in state.measured}
        full.update(mu)
        omega = build_omega_fixed(state, BasisMap(full), args.enum_cap)
    else:
        omega = build_omega(state, args.enum_cap)
    if args.csv:
        _emit_csv(args, ["word", "coeff"], [(str(w), str(c)) for w, c in omega.items()])
    else:
        _emit(args, {"omega": omega.to_dict()})


def cmd_spectrum(args) -> None:
    rows = []
    for text in args.state:
        summary = spectral_summary(resolve_state(text), args.spectral_cap)
        rows.append({"state": text, **summary.to_dict()})
    if args.csv:
        keys = ["state", "max", "beta", "tau", "nu", "max_multiplicity"]
        _emit_csv(args, keys, [[r[k] for k in keys] for r in rows])
    elif len(rows) == 1:
        _emit(args, rows[0])
    else:
        _emit(args, {"spectra": rows})


def cmd_sample(args) -> None:
    state = resolve_state(args.state)
    batch = sample_many(state, args.count, args.seed, start=args.start)
    lines = [json.dumps({"word": str(batch.word(j)), "log2_prob": int(batch.log2_prob[j])})
             for j in range(len(batch))]
    _write(args, "".join(line + "\n" for line in lines))


def _angle_text(state: ResourceState, text: Optional[str]) -> str:
    if text:
        return text
    return "clifford_exact" if len(state.order) <= 8 else "mc:200"


def cmd_simulate(args) -> None:
    state = resolve_state(args.state)
    rho = _noisy_rho(state, args)
    spec = parse_angles(_angle_text(state, args.angles), args.seed)
    avg = average_mbqc_fidelity(state, rho, spec, args.dense_cap)
    _emit(args, {
        "noise": args.noise,
        "state_fidelity": state_fidelity(rho, state, args.dense_cap),
        "mbqc_fidelity_exact": expectation(rho, build_omega(state, args.enum_cap)),
        "mbqc_fidelity_simulated": {"mean": avg.mean, "stderr": avg.stderr, "count": avg.count, "mode": avg.mode},
    })


def _estimate_runs(state, rho, target, eps, delta, seed, runs, threads, cap):
    fn = estimate_mbqc_fidelity if target == "mbqc" else estimate_state_fidelity
    measurer = PauliMeasurer(rho, cap)
    seeds = [seed + r for r in range(runs)]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        return list(pool.map(lambda s: fn(state, rho, eps, delta, s, cap, measurer), seeds))


def cmd_estimate(args) -> None:
    state = resolve_state(args.state)
    rho = _noisy_rho(state, args)
    reports = _estimate_runs(state, rho, args.target, args.eps, args.delta, args.seed, args.runs,
                             args.threads, args.dense_cap)
    docs = [r.to_dict() for r in reports]
    _emit(args, {"noise": args.noise, "report": docs[0]} if args.runs == 1 else {"noise": args.noise, "reports": docs})


def cmd_bounds(args) -> None:
    if args.state:
        state = resolve_state(args.state)
        rho = _noisy_rho(state, args)
        f_s = state_fidelity(rho, state, args.dense_cap)
        f_m = expectation(rho, build_omega(state, args.enum_cap))
        nu = spectral_summary(state, args.spectral_cap).nu if args.nu is None else args.nu
    else:
        if args.fs is None or args.fmbqc is None or args.nu is None:
            raise ValidationError("bounds needs a state or all of --fs, --fmbqc, --nu")
        f_s, f_m, nu = args.fs, args.fmbqc, args.nu
    for name, v in (("F_S", f_s), ("F_MBQC", f_m)):
        if not -1e-9 <= v <= 1 + 1e-9:
            raise ValidationError(f"{name} must lie in [0, 1], got {v}")
    if not 0 < nu < 1:
        raise ValidationError(f"nu must lie in (0, 1), got {nu}")
    _emit(args, {"state_fidelity": f_s, "mbqc_fidelity": f_m, "nu": nu,
                 "verdict": check_bounds(f_s, f_m, nu).to_dict()})


def cmd_report(args) -> None:
    timings = {}

    def timed(name, fn):
        t0 = time.perf_counter()
        out = fn()
        timings[name] = round(time.perf_counter() - t0, 6)
        return out

    state = resolve_state(args.state)
    rho = timed("noise", lambda: _noisy_rho(state, args))
    omega = timed("omega", lambda: build_omega(state, args.enum_cap))
    summary = timed("spectrum", lambda: spectral_summary(state, args.spectral_cap))
    f_s = timed("state_fidelity_exact", lambda: state_fidelity(rho, state, args.dense_cap))
    f_m = timed("mbqc_fidelity_exact", lambda: expectation(rho, omega))
    spec = parse_angles(_angle_text(state, args.angles), args.seed)
    sim = timed("mbqc_fidelity_simulated", lambda: average_mbqc_fidelity(state, rho, spec, args.dense_cap))
    measurer = PauliMeasurer(rho, args.dense_cap)
    est_s = timed("state_fidelity_estimate", lambda: estimate_state_fidelity(
        state, rho, args.eps, args.delta, args.seed, args.dense_cap, measurer))
    est_m = timed("mbqc_fidelity_estimate", lambda: estimate_mbqc_fidelity(
        state, rho, args.eps, args.delta, args.seed, args.dense_cap, measurer))
    _emit(args, {
        "state": state_to_dict(state),
        "noise": args.noise,
        "spectrum": summary.to_dict(),
        "state_fidelity": {"exact": f_s, "estimate": est_s.to_dict()},
        "mbqc_fidelity": {
            "exact": f_m,
            "estimate": est_m.to_dict(),
            "simulated": {"mean": sim.mean, "stderr": sim.stderr, "count": sim.count, "mode": sim.mode},
        },
        "bounds": {
            "exact": check_bounds(f_s, f_m, summary.nu).to_dict(),
            "estimated": check_bounds(est_s.estimate, est_m.estimate, summary.nu,
                                      tol=2 * args.eps).to_dict(),
        },
        "sample_count": sample_count(args.eps, args.delta),
        "timings": timings,
    })


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help=f"64-bit seed (default {DEFAULT_SEED}, or ${SEED_ENV})")
    common.add_argument("--out", "-o", help="write output here instead of stdout")
    common.add_argument("--dense-cap", type=int, default=DENSE_CAP)
    common.add_argument("--enum-cap", type=int, default=ENUMERATION_CAP)
    common.add_argument("--spectral-cap", type=int, default=SPECTRAL_CAP)
    common.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")
    common.add_argument("--csv", action="store_true", help="tabular output where supported")

    p = argparse.ArgumentParser(prog="mbqc-fidelity", description="Average MBQC fidelity toolkit.")
    p.add_argument("--version", action="version", version=f"mbqc-fidelity {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", parents=[common], help="write a resource-state file")
    b.add_argument("--type", choices=["cluster1d", "cluster2d", "custom"], required=True)
    b.add_argument("--n", type=int)
    b.add_argument("--rows", type=int)
    b.add_argument("--cols", type=int)
    b.add_argument("--in", dest="input")
    b.set_defaults(func=cmd_build)

    o = sub.add_parser("omega", parents=[common], help="Pauli expansion of Omega")
    o.add_argument("state")
    o.add_argument("--basis", help="fixed bases, e.g. '0=X,4=XY' (unlisted measured qubits: XY)")
    o.set_defaults(func=cmd_omega)

    s = sub.add_parser("spectrum", parents=[common], help="max, beta, tau and nu of Omega")
    s.add_argument("state", nargs="+")
    s.set_defaults(func=cmd_spectrum)

    sm = sub.add_parser("sample", parents=[common], help="JSON lines of sampled stabilizers")
    sm.add_argument("state")
    sm.add_argument("--count", type=int, default=10)
    sm.add_argument("--start", type=int, default=0, help="index of the first sample in the stream")
    sm.set_defaults(func=cmd_sample)

    noise_help = "none, depolarizing:p, dephasing:p, coherent_z:eps, global_mix:p or excited_mix:k=w,..."
    angle_help = "mc:N, clifford_mc:N, clifford_exact or explicit:a,b,..."

    si = sub.add_parser("simulate", parents=[common], help="exact and simulated fidelities")
    si.add_argument("state")
    si.add_argument("--noise", default="none", help=noise_help)
    si.add_argument("--angles", help=angle_help)
    si.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", parents=[common], help="direct fidelity estimation")
    e.add_argument("state")
    e.add_argument("--target", choices=["mbqc", "state"], default="mbqc")
    e.add_argument("--eps", type=float, default=0.05)
    e.add_argument("--delta", type=float, default=0.05)
    e.add_argument("--noise", default="none", help=noise_help)
    e.add_argument("--runs", type=int, default=1, help="independent protocol runs (seeds seed, seed+1, ...)")
    e.set_defaults(func=cmd_estimate)

    bd = sub.add_parser("bounds", parents=[common], help="check nu(1-F_S) <= 1-F_MBQC <= 1-F_S")
    bd.add_argument("state", nargs="?")
    bd.add_argument("--noise", default="none", help=noise_help)
    bd.add_argument("--fs", type=float)
    bd.add_argument("--fmbqc", type=float)
    bd.add_argument("--nu", type=float)
    bd.set_defaults(func=cmd_bounds)

    r = sub.add_parser("report", parents=[common], help="consolidated fidelity report")
    r.add_argument("state")
    r.add_argument("--noise", default="none", help=noise_help)
    r.add_argument("--eps", type=float, default=0.05)
    r.add_argument("--delta", type=float, default=0.05)
    r.add_argument("--angles", help=angle_help)
    r.set_defaults(func=cmd_report)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        if args.seed is None:
            args.seed = _default_seed()
        if not 0 <= args.seed < 1 << 64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if getattr(args, "runs", 1) < 1:
            raise ValidationError("--runs must be positive")
        args.func(args)
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except _IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
