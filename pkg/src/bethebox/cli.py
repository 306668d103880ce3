"""Command-line front end.

Every command prints ``key value`` lines (``--json`` prints one JSON object
instead). Exit codes: 0 ok, 1 usage, 2 invalid model/input, 3 resource
guard, 4 internal consistency failure (including ``check`` violations).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bbp, oracle
from .bethe import (
    bethe_free_energy,
    bethe_gradient,
    hessian_bounds,
    bethe_hessian,
    solve_xi,
    xi_bounds,
    xi_residual,
)
from .errors import BetheError
from .mesh import build_energy, build_mesh, rectangle_slack
from .model import flip, load_model, random_model, serialize_model
from .pipeline import optimize


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


class _Report:
    def __init__(self, as_json):
        self.as_json = as_json
        self.data = {}

    def put(self, key, value):
        self.data[key] = value

    def emit(self, out=None):
        out = sys.stdout if out is None else out
        if self.as_json:
            json.dump(self.data, out, indent=2, default=_jsonable)
            out.write("\n")
            return
        for key, value in self.data.items():
            if key == "nodes" and isinstance(value, list):
                for row in value:
                    out.write("node " + " ".join(_fmt(v) for v in row.values()) + "\n")
            elif isinstance(value, (list, tuple, np.ndarray)):
                out.write(f"{key} " + " ".join(_fmt(v) for v in value) + "\n")
            else:
                out.write(f"{key} {_fmt(value)}\n")


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    raise TypeError(type(v))


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def _load(args):
    return load_model(args.model, allow_disconnected=args.allow_disconnected)


def cmd_gen(args):
    m = random_model(
        args.n,
        args.p,
        args.seed,
        theta_range=(args.theta_min, args.theta_max),
        weight_range=(args.weight_min, args.weight_max),
        unbias=not args.no_unbias,
        connected=args.connected,
    )
    text = serialize_model(m)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_bounds(args):
    m = _load(args)
    init = bbp.init_bounds(m)
    box = bbp.bbp_run(m, thresh=args.thresh, max_iter=args.max_iter)
    rep = _Report(args.json)
    rep.put("nodes", [
        {"i": i, "lower": float(box.A[i]), "upper": float(1 - box.B[i]), "width": float(box.width[i])}
        for i in range(m.n)
    ])
    rep.put("sweeps", box.iterations)
    rep.put("converged", box.converged)
    rep.put("mean_initial_width", float(init.width.mean()))
    rep.put("mean_final_width", float(box.width.mean()))
    rep.emit()
    return 0


def cmd_optimize(args):
    m = _load(args)
    r = optimize(m, args.epsilon, thresh=args.thresh, max_iter=args.max_iter, cap=args.cap,
                 method=args.method)
    rep = _Report(args.json)
    rep.put("q", r.q)
    rep.put("F", r.F)
    rep.put("epsilon_requested", float(args.epsilon))
    rep.put("epsilon_certified", r.epsilon)
    rep.put("lambda", r.bounds.lam)
    rep.put("omega", r.bounds.omega)
    rep.put("gamma", r.mesh.gamma)
    rep.put("labels_per_node", r.mesh.sizes)
    rep.put("total_labels", r.total_labels)
    rep.put("flow_nodes", r.flow_nodes)
    rep.put("flow_arcs", r.flow_arcs)
    rep.put("bbp_sweeps", r.box.iterations)
    rep.put("runtime_seconds", r.runtime)
    rep.emit()
    return 0


def cmd_exact(args):
    m = _load(args)
    log_z, p = oracle.exact_inference(m, max_n=args.max_n)
    rep = _Report(args.json)
    rep.put("logZ", log_z)
    rep.put("marginals", p)
    rep.emit()
    return 0


def cmd_gridsearch(args):
    m = _load(args)
    box = bbp.bbp_run(m, thresh=args.thresh, max_iter=args.max_iter) if args.in_box else None
    q, f = oracle.grid_min_bethe(m, args.points, box=box, limit=args.limit)
    rep = _Report(args.json)
    rep.put("q", q)
    rep.put("F", f)
    rep.put("points_per_dim", args.points)
    rep.emit()
    return 0


def run_checks(m, rng, samples=5):
    """Invariant audit of one model. Returns ``{name: (ok, detail)}``."""
    out = {}
    init = bbp.init_bounds(m)
    box = bbp.bbp_run(m)
    qs = [rng.uniform(0.05, 0.95, m.n) for _ in range(samples)]

    errs = [oracle.fd_check(m, q) for q in qs]
    g_err = max(e[0] for e in errs)
    h_err = max(e[1] for e in errs)
    out["fd_gradient"] = (g_err <= 1e-6, g_err)
    out["fd_hessian"] = (h_err <= 1e-4, h_err)

    qi, qj = qs[0][m.edge_i], qs[0][m.edge_j]
    xi = solve_xi(m.alpha, qi, qj)
    res = float(np.max(np.abs(xi_residual(m.alpha, qi, qj, xi)) / (1 + np.abs(m.alpha)), initial=0.0))
    out["xi_residual"] = (res <= 1e-9, res)
    assoc = m.weight > 0
    if assoc.any():
        lo, hi = xi_bounds(m.alpha[assoc], qi[assoc], qj[assoc])
        gap = float(max(np.max(lo - xi[assoc]), np.max(xi[assoc] - hi)))
        out["xi_brackets"] = (gap <= 1e-12, gap)

    mono = 0.0
    for (a0, b0), (a1, b1) in zip(box.history, box.history[1:]):
        mono = max(mono, float(np.max(a0 - a1)), float(np.max(b0 - b1)))
    out["bbp_monotone"] = (mono <= 1e-15, mono)

    if m.n <= 16:
        _, p = oracle.exact_inference(m)
        slack = float(max(np.max(init.A - p), np.max(p - init.upper)))
        out["sandwich_exact"] = (slack <= 1e-6, slack)

    r = [v for v in range(m.n) if rng.random() < 0.5]
    mf = flip(m, r)
    mask = np.zeros(m.n, dtype=bool)
    mask[r] = True
    diffs, gn = [], 0.0
    for q in qs:
        y = np.where(mask, 1 - q, q)
        diffs.append(float(bethe_free_energy(mf, y) - bethe_free_energy(m, q)))
        gn = max(gn, abs(np.linalg.norm(bethe_gradient(mf, y)) - np.linalg.norm(bethe_gradient(m, q))))
    spread = max(diffs) - min(diffs)
    out["flip_invariance"] = (spread <= 1e-9 and gn <= 1e-9, spread)

    if m.is_associative and m.num_edges:
        hb = hessian_bounds(m, box)
        worst = -np.inf
        for _ in range(samples):
            q = rng.uniform(box.A, box.upper)
            h = bethe_hessian(m, q, dense=True)
            off = h - np.diag(np.diag(h))
            worst = max(worst, float(np.max(-off) - hb.a), float(np.max(np.diag(h)) - hb.b),
                        float(np.max(np.abs(np.linalg.eigvalsh(h))) - hb.lam))
        out["hessian_bounds"] = (worst <= 1e-9 * max(1.0, hb.lam), worst)
        try:
            mesh = build_mesh(m, box, 0.05, cap=10**6, bounds=hb)
            e = build_energy(m, mesh)
            slack = max((rectangle_slack(t) for t in e.pairwise), default=-np.inf)
            out["submodular_tables"] = (slack <= 1e-12, slack)
        except BetheError:
            pass
    return out


def cmd_check(args):
    m = _load(args)
    rng = np.random.default_rng(args.seed)
    results = run_checks(m, rng, samples=args.samples)
    rep = _Report(args.json)
    failed = False
    for name, (ok, detail) in results.items():
        rep.put(name, f"{'pass' if ok else 'FAIL'} {float(detail):.3e}")
        failed |= not ok
    rep.put("status", "FAIL" if failed else "pass")
    rep.emit()
    return 4 if failed else 0


def build_parser():
    p = _Parser(prog="bethebox", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def model_cmd(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("model", help="model file")
        sp.add_argument("--allow-disconnected", action="store_true",
                        help="accept disconnected graphs (components are independent)")
        sp.add_argument("--json", action="store_true", help="emit a JSON object")
        sp.set_defaults(func=func)
        return sp

    def bbp_flags(sp):
        sp.add_argument("--thresh", type=float, default=bbp.DEFAULT_THRESH)
        sp.add_argument("--max-iter", type=int, default=bbp.DEFAULT_MAX_ITER)

    g = sub.add_parser("gen", help="write a random Erdos-Renyi model")
    g.add_argument("--n", type=int, default=100)
    g.add_argument("--p", type=float, default=0.04)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--theta-min", type=float, default=0.0)
    g.add_argument("--theta-max", type=float, default=1.0)
    g.add_argument("--weight-min", type=float, default=0.0)
    g.add_argument("--weight-max", type=float, default=1.0)
    g.add_argument("--no-unbias", action="store_true")
    g.add_argument("--connected", action="store_true")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    sp = model_cmd("bounds", cmd_bounds, "Bethe bound propagation brackets")
    bbp_flags(sp)

    sp = model_cmd("optimize", cmd_optimize, "epsilon-approximate global Bethe minimum")
    sp.add_argument("--epsilon", type=float, default=0.01)
    sp.add_argument("--cap", type=int, default=2**28, help="max mesh table entries")
    sp.add_argument("--method", choices=["push_relabel", "dinic"], default="push_relabel")
    bbp_flags(sp)

    sp = model_cmd("exact", cmd_exact, "exact log Z and marginals by enumeration")
    sp.add_argument("--max-n", type=int, default=oracle.MAX_EXACT_N)

    sp = model_cmd("gridsearch", cmd_gridsearch, "brute-force grid minimum of F")
    sp.add_argument("--points", type=int, default=50)
    sp.add_argument("--limit", type=int, default=oracle.MAX_GRID_POINTS)
    sp.add_argument("--in-box", action="store_true", help="restrict the grid to the Bethe box")
    bbp_flags(sp)

    sp = model_cmd("check", cmd_check, "derivative and invariant audit")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--samples", type=int, default=5)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BetheError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
