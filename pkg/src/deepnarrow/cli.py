"""``deepnarrow`` command line: compile, verify, demo.

Exit codes: 0 success, 1 a threshold was missed, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import dataclass

import numpy as np

from . import activations
from .compilers.lowering import layer_expand, lower_square_rho, lower_square_sigma
from .compilers.register import compile_register
from .compilers.relu_lp import CutoffSpec, compile_relu_lp, shift_bound
from .compilers.square import DEFAULT_STAGES, compile_square
from .demos import DEMOS
from .gadgets import DEFAULT_A, DEFAULT_S
from .net_ir import Box, Network, NetworkFormatError, StructuralError, audit, evaluate, load, serialize
from .polynomial import Polynomial, PolynomialParseError, parse
from .shallow import fit_shallow
from .verify import VerificationReport, lp_error, polynomial_oracle, sup_error

MODES = ("register", "square", "square-model", "poly-sigma", "poly-rho", "pathological", "relu-lp")
SWEEPABLE = ("h", "s", "recip_stages", "h_identity", "A", "N", "width")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    targets: list[Polynomial]
    domain: Box
    mode: str
    activation: str | None
    h: float | None
    s: float
    h_identity: float | None
    recip_stages: int
    A: float
    N: float | None
    width: int
    delta: float
    seed: int

    def replace(self, **kw) -> "RunConfig":
        return RunConfig(**{**self.__dict__, **kw})


def parse_domain(text: str) -> Box:
    try:
        pairs = [tuple(float(v) for v in part.split(",")) for part in text.split(";") if part.strip()]
        if not pairs or any(len(p) != 2 for p in pairs):
            raise ValueError
        return Box([p[0] for p in pairs], [p[1] for p in pairs])
    except (ValueError, StructuralError) as exc:
        raise UsageError(f"bad --domain {text!r}: expected 'l1,u1;l2,u2;...' with l < u") from exc


def parse_sweep(text: str) -> tuple[str, list[float]]:
    name, _, values = text.partition("=")
    name = name.strip().replace("-", "_")
    if name not in SWEEPABLE:
        raise UsageError(f"cannot sweep {name!r}; choose from {', '.join(SWEEPABLE)}")
    try:
        vals = [float(v) for v in values.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --sweep values in {text!r}") from exc
    if len(vals) < 3:
        raise UsageError("--sweep needs at least 3 values")
    return name, vals


def _targets(texts: list[str] | None, domain: Box | None) -> list[Polynomial]:
    if not texts:
        raise UsageError("at least one --target polynomial is required")
    raw = [parse(t) for t in texts]
    n = domain.dim if domain is not None else max(p.n_vars for p in raw)
    if any(p.n_vars > n for p in raw):
        raise UsageError(f"a target uses more variables than the {n}-dimensional domain")
    return [parse(t, n) for t in texts]


def make_config(args) -> RunConfig:
    domain = parse_domain(args.domain) if args.domain else None
    targets = _targets(args.target, domain)
    if domain is None:
        domain = Box.cube(-1.0, 1.0, targets[0].n_vars)
    mode = "square" if args.mode == "square-model" else args.mode
    act = args.activation
    if act is not None:
        activations.get(act)
    if mode == "square" and act not in (None, "square"):
        raise UsageError("square mode builds square-activation networks; use --activation square")
    if mode == "relu-lp" and act not in (None, "relu"):
        raise UsageError("relu-lp mode needs --activation relu")
    if mode == "pathological" and act not in (None, "pathological"):
        raise UsageError("pathological mode needs --activation pathological")
    if args.recip_stages < 0:
        raise UsageError("--recip-stages must be non-negative")
    return RunConfig(
        targets, domain, mode, act, args.h, args.s, args.h_identity, args.recip_stages, args.A, args.N,
        args.width, args.delta, args.seed,
    )


def build(cfg: RunConfig) -> Network:
    """Compile the targets of ``cfg`` in its mode."""
    K = cfg.domain
    if cfg.mode in ("register", "pathological"):
        act = cfg.activation or ("pathological" if cfg.mode == "pathological" else "tanh")
        kw = {"bias_shift": cfg.A} if act == "pathological" else {}
        nets = [fit_shallow(p, K, cfg.width, act, seed=cfg.seed + i, **kw) for i, p in enumerate(cfg.targets)]
        return compile_register(nets, h=cfg.h, A=cfg.A if act == "pathological" else None, N=cfg.N)
    if cfg.mode == "square":
        return compile_square(cfg.targets, K, cfg.recip_stages, h=cfg.h, s=cfg.s)
    if cfg.mode == "poly-sigma":
        act = cfg.activation or "cubic_square"
        base = layer_expand(compile_square(cfg.targets, K, cfg.recip_stages, s=cfg.s))
        return base if cfg.h is None else lower_square_sigma(base, act, cfg.h, cfg.h_identity)
    if cfg.mode == "poly-rho":
        act = cfg.activation or "cubic_square"
        h_id = cfg.h_identity if cfg.h_identity is not None else 1e-7
        base = compile_square(cfg.targets, K, cfg.recip_stages, h=h_id, s=cfg.s)
        return base if cfg.h is None else lower_square_rho(base, act, cfg.h)
    if cfg.mode == "relu-lp":
        if len(cfg.targets) != 1:
            raise UsageError("relu-lp mode takes exactly one target")
        J = K
        outer = Box(np.array(J.lower) - cfg.delta, np.array(J.upper) + cfg.delta)
        f_hat = support_restricted(cfg.targets[0], J)
        shallow = fit_shallow(f_hat, outer, cfg.width, "relu", seed=cfg.seed)
        N = cfg.N if cfg.N is not None else shift_bound(shallow, outer)
        g_net = compile_register([shallow], N=N)
        g = evaluate(g_net, outer.grid(201 if outer.dim == 1 else 21))
        cutoff = CutoffSpec.around(J, cfg.delta, (float(g.min()), float(g.max())), N)
        return compile_relu_lp(g_net, cutoff)
    raise UsageError(f"unknown mode {cfg.mode!r}")


def support_restricted(p: Polynomial, J: Box):
    """``p`` on ``J``, zero elsewhere."""
    return lambda X: np.where(J.contains(X), p(X), 0.0)


def _oracle(cfg: RunConfig):
    if cfg.mode == "relu-lp":
        f = support_restricted(cfg.targets[0], cfg.domain)
        return lambda X: f(X)[:, None]
    return polynomial_oracle(cfg.targets)


def _print_audit(net: Network, out) -> None:
    info = audit(net)
    print(f"width {info['width']}  depth {info['depth']}  inputs {info['input_dim']}  outputs {info['output_dim']}", file=out)
    print("census " + json.dumps(info["totals"], sort_keys=True), file=out)


def cmd_compile(args, out=None) -> int:
    out = out or sys.stdout
    if args.activation is None:
        raise UsageError("--activation is required for compile")
    cfg = make_config(args)
    net = build(cfg)
    _print_audit(net, out)
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(serialize(net))
        print(f"wrote {args.out}", file=out)
    return 0


def cmd_verify(args, out=None) -> int:
    out = out or sys.stdout
    cfg = make_config(args)
    oracle = _oracle(cfg)
    K = cfg.domain
    if args.network:
        net = load(args.network)
    else:
        net = build(cfg)
    if net.input_dim != K.dim:
        raise UsageError(f"network takes {net.input_dim} inputs but the domain has dimension {K.dim}")
    if net.output_dim != len(cfg.targets):
        raise UsageError(f"network has {net.output_dim} outputs but {len(cfg.targets)} targets were given")
    grid = args.grid
    lp = None
    if args.p is not None:
        lp_domain = K
        if cfg.mode == "relu-lp":
            lp_domain = Box(np.array(K.lower) - cfg.delta - 1, np.array(K.upper) + cfg.delta + 1)
        lp = (args.p, lp_error(net, oracle, lp_domain, args.p, args.samples, args.seed))
    info = audit(net)
    rep = VerificationReport(sup_error(net, oracle, K, grid), (grid or (101 if K.dim <= 2 else 21)) ** K.dim,
                             info["width"], info["depth"], lp)
    if args.sweep:
        name, values = parse_sweep(args.sweep)
        cast = int if name in ("recip_stages", "width") else float
        table = []
        for v in values:
            table.append((v, sup_error(build(cfg.replace(**{name: cast(v)})), oracle, K, grid)))
        rep.sweep_param = name
        rep.sweep_table = sorted(table)
        if args.csv:
            with open(args.csv, "w") as fh:
                fh.write(rep.to_csv())
    print(rep.to_json(), file=out)
    if args.threshold is not None and not rep.sup_error <= args.threshold:
        print(f"FAIL: sup error {rep.sup_error:.6g} exceeds {args.threshold:g}", file=out)
        return 1
    return 0


def cmd_demo(args, out=None) -> int:
    out = out or sys.stdout
    if args.name not in DEMOS:
        raise UsageError(f"unknown demo {args.name!r}; choose from {', '.join(DEMOS)}")
    res = DEMOS[args.name](seed=args.seed)
    print(res.summary(), file=out)
    return 0 if res.passed else 1


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--target", action="append", help="polynomial such as '2*x1^3 - x1' (repeatable)")
    p.add_argument("--activation", help="activation key, e.g. tanh, relu, square, cubic_square")
    p.add_argument("--mode", choices=MODES, default="register")
    p.add_argument("--domain", help="box as 'l1,u1;l2,u2;...' (default [-1, 1]^n)")
    p.add_argument("--h", type=float, default=None, help="gadget step; omit for ideal identities")
    p.add_argument("--s", type=float, default=DEFAULT_S, help="fused-gadget step inside reciprocals")
    p.add_argument("--h-identity", type=float, default=None, help="identity step when it differs from --h")
    p.add_argument("--recip-stages", type=int, default=DEFAULT_STAGES)
    p.add_argument("--A", type=float, default=DEFAULT_A, help="shift for the pathological identity")
    p.add_argument("--N", type=float, default=None, help="shift for the exact ReLU identity")
    p.add_argument("--width", type=int, default=20, help="hidden width of fitted shallow nets")
    p.add_argument("--delta", type=float, default=0.1, help="relu-lp: margin between support and cut-off box")
    p.add_argument("--seed", type=int, default=0)


def parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="deepnarrow", description="Compile functions into deep narrow networks.")
    sub = ap.add_subparsers(dest="command", required=True)
    c = sub.add_parser("compile", help="compile targets and write a network file")
    _common(c)
    c.add_argument("--out", help="network file to write")
    v = sub.add_parser("verify", help="measure a network against its targets")
    _common(v)
    v.add_argument("--network", help="network file (default: compile from the flags)")
    v.add_argument("--grid", type=int, default=None, help="grid points per dimension")
    v.add_argument("--p", type=float, default=None, help="also report the L^p error")
    v.add_argument("--samples", type=int, default=100_000)
    v.add_argument("--sweep", help="param=v1,v2,v3 to rebuild and measure per value")
    v.add_argument("--csv", help="write the sweep table here")
    v.add_argument("--threshold", type=float, default=None, help="exit 1 if the sup error exceeds this")
    d = sub.add_parser("demo", help="run a named end-to-end scenario")
    d.add_argument("name", help=", ".join(DEMOS))
    d.add_argument("--seed", type=int, default=0)
    return ap


def main(argv=None) -> int:
    ap = parser()
    args = ap.parse_args(argv)
    handlers = {"compile": cmd_compile, "verify": cmd_verify, "demo": cmd_demo}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return handlers[args.command](args)
    except (UsageError, PolynomialParseError, activations.RegistryError, NetworkFormatError,
            StructuralError, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"deepnarrow: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
