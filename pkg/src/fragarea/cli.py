"""Command-line front end: ``fragarea {validate,moments,simulate,verify} --config run.yaml``.

Exit codes: 0 success, 1 usage or config parse error, 2 validation error,
3 numerical failure (including a verification residual over tolerance),
4 budget exceeded.
"""

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from .errors import FragAreaError, InvalidParameter
from .laplace import Exponential, Monomial, dyadic_laplace, dyadic_residual, solve_laplace_fixed_point, verify_theorem1
from .measures import Atomic, Brownian, FragmentationParams, measure_from_spec, phi, total_mass
from .moments import moment_table
from .simulate import (
    SimConfig, discretization_allowance, estimate_moments, riemann_gap_formula, run_excursion, run_homogeneous,
    run_rde, truncated_params,
)

EXIT_OK, EXIT_PARSE = 0, 1
FLOAT_FMT = "%.17g"
DYADIC_TOL = 1e-10
MONOMIAL_TOL = 1e-8
EXPONENTIAL_TOL = 1e-9
GRID_EXPONENTIAL_TOL = 1e-6

TOP_KEYS = {"measure", "alpha", "format", "moments", "simulate", "verify"}
SIM_KEYS = {"mode", "n_samples", "seed", "epsilon", "residual_mode", "max_fragments", "n_trunc", "n_steps",
            "k", "ks", "t_max", "times", "k_max", "dump", "dump_format"}
VERIFY_KEYS = {"monomial_k_max", "dyadic_q", "exponential_q", "exponential_tol", "perturb"}
MODES = ("rde", "truncated", "excursion", "homogeneous")


class ConfigError(FragAreaError):
    exit_code = EXIT_PARSE

    def __init__(self, message, field=None, line=None):
        super().__init__(message, field)
        self.line = line

    def diagnostic(self):
        text = super().diagnostic()
        return text if self.line is None else f"{text} (line {self.line})"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"UsageError: {message}\n")


# ---------------------------------------------------------------- config


def _convert(value, kind):
    """``value`` as ``kind`` or None when it does not fit."""
    if isinstance(value, bool) and kind is not str:
        return None
    if kind in (int, float, list) and isinstance(value, str):
        # YAML 1.1 reads 1e5 as a string
        try:
            value = float(value)
        except ValueError:
            return None
    if kind is int:
        ok = isinstance(value, int) or (isinstance(value, float) and value.is_integer())
        return int(value) if ok else None
    if kind is float:
        return float(value) if isinstance(value, (int, float)) else None
    if kind is list:
        items = value if isinstance(value, list) else [value]
        out = [_convert(v, float) for v in items]
        return None if any(v is None for v in out) else out
    return value if isinstance(value, kind) else None


class RunConfig:
    """Parsed configuration plus the YAML node tree, kept for line lookups."""

    def __init__(self, data, root=None):
        self.data = data
        self.root = root

    @classmethod
    def load(cls, path):
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", field=str(path)) from None
        try:
            root = yaml.compose(text)
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = mark.line + 1 if mark is not None else None
            problem = getattr(exc, "problem", None) or str(exc)
            raise ConfigError(f"malformed YAML: {problem}", line=line) from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping at top level", line=1)
        cfg = cls(data, root)
        cfg._check_keys(data, TOP_KEYS, "")
        for section, keys in (("simulate", SIM_KEYS), ("verify", VERIFY_KEYS)):
            if section in data:
                cfg._check_keys(cfg.section(section), keys, section + ".")
        return cfg

    def line_of(self, dotted):
        """1-based line of a dotted key, or None."""
        node = self.root
        if node is None or not dotted:
            return None
        found = None
        for part in dotted.split("."):
            if not isinstance(node, yaml.MappingNode):
                return found
            for key, value in node.value:
                if key.value == part:
                    found = key.start_mark.line + 1
                    node = value
                    break
            else:
                return found
        return found

    def _check_keys(self, mapping, allowed, prefix):
        for key in mapping:
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r}", field=prefix + str(key), line=self.line_of(prefix + str(key)))

    def section(self, name):
        value = self.data.get(name) or {}
        if not isinstance(value, dict):
            raise ConfigError(f"{name} must be a mapping", field=name, line=self.line_of(name))
        return value

    def get(self, dotted, kind, default=None):
        """Typed lookup; a missing key gives ``default``, a wrong type a ConfigError."""
        head, _, tail = dotted.rpartition(".")
        mapping = self.section(head) if head else self.data
        if tail not in mapping or mapping[tail] is None:
            return default
        value = mapping[tail]
        converted = _convert(value, kind)
        if converted is None:
            raise ConfigError(f"expected {kind.__name__}, got {value!r}", field=dotted, line=self.line_of(dotted))
        return converted

    def params(self):
        if "measure" not in self.data:
            raise ConfigError("missing 'measure'", field="measure")
        if "alpha" not in self.data:
            raise ConfigError("missing 'alpha'", field="alpha")
        spec = self.data["measure"]
        if not isinstance(spec, dict):
            raise ConfigError("measure must be a mapping", field="measure", line=self.line_of("measure"))
        alpha = self.get("alpha", float)
        return FragmentationParams(measure_from_spec(spec), alpha)

    def locate(self, exc):
        """Best-effort config line for an error raised while building objects from this config."""
        if exc.field is None:
            return None
        for path in (exc.field, "measure." + exc.field, "simulate." + exc.field, "verify." + exc.field):
            line = self.line_of(path)
            if line is not None:
                return line
        return None


# ---------------------------------------------------------------- output


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % v
    if v is None:
        return ""
    return str(v)


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _json_text(obj):
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def _emit(text, out, suffix=None):
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    if suffix:
        path = path.with_name(f"{path.stem}_{suffix}{path.suffix}")
    path.write_text(text)


# ---------------------------------------------------------------- commands


def cmd_validate(cfg, args):
    params = cfg.params()
    measure = params.measure
    report = {
        "status": "ok",
        "measure": measure.to_spec() if hasattr(measure, "to_spec") else measure.kind,
        "alpha": params.alpha,
        "total_mass": total_mass(measure),
        "phi_minus_alpha": phi(params, -params.alpha),
    }
    if args.format == "json":
        _emit(_json_text(report), args.out)
    else:
        _emit(_csv_text(["status", "kind", "alpha", "total_mass", "phi_minus_alpha"],
                        [["ok", measure.kind, params.alpha, report["total_mass"], report["phi_minus_alpha"]]]), args.out)
    return EXIT_OK


def cmd_moments(cfg, args):
    params = cfg.params()
    K = cfg.get("moments.K", int, 10)
    if K < 0:
        raise InvalidParameter("K must be >= 0", field="moments.K")
    table = moment_table(params, K)
    rows = table.rows()
    ajk = table.ajk_rows()
    if args.format == "json":
        report = {
            "alpha": params.alpha,
            "K": K,
            "moments": [dict(zip(("k", "a_k", "M_k", "bound_k", "bound_ok"), r)) for r in rows],
            "a_jk": [{"j": j, "k": k, "a_jk": v} for j, k, v in ajk],
            "methods": table.methods,
        }
        _emit(_json_text(report), args.out)
    else:
        main = _csv_text(["k", "a_k", "M_k", "bound_k", "bound_ok"], rows)
        side = _csv_text(["j", "k", "a_jk"], ajk)
        if args.out is None:
            _emit(main + "\n" + side, None)
        else:
            _emit(main, args.out)
            _emit(side, args.out, suffix="ajk")
    return EXIT_OK


def _exact_moments(params, k_max):
    try:
        return list(moment_table(params, k_max).M[1:])
    except FragAreaError:
        return [None] * k_max


def _dump(samples, path, fmt):
    if fmt == "text":
        np.savetxt(path, samples, fmt=FLOAT_FMT)
    elif fmt == "binary":
        np.save(path, samples)
    else:
        raise InvalidParameter("dump_format must be text or binary", field="simulate.dump_format")


def cmd_simulate(cfg, args):
    params = cfg.params()
    mode = cfg.get("simulate.mode", str, "rde")
    if mode not in MODES:
        raise InvalidParameter(f"mode must be one of {MODES}", field="simulate.mode")
    seed = args.seed if args.seed is not None else cfg.get("simulate.seed", int, 0)
    n = cfg.get("simulate.n_samples", int, 10_000)
    k_max = cfg.get("simulate.k_max", int, 2)
    if k_max < 1:
        raise InvalidParameter("k_max must be >= 1", field="simulate.k_max")
    extra = {}

    if mode in ("rde", "truncated"):
        config = SimConfig(
            epsilon=cfg.get("simulate.epsilon", float, 1e-6),
            residual_mode=cfg.get("simulate.residual_mode", str, "expected-tail"),
            n_samples=n, seed=seed,
            max_fragments=cfg.get("simulate.max_fragments", int, 10_000_000),
        )
        target = params
        if mode == "truncated":
            n_trunc = cfg.get("simulate.n_trunc", int)
            if n_trunc is None:
                raise InvalidParameter("truncated mode needs n_trunc", field="simulate.n_trunc")
            target = truncated_params(params, n_trunc)
            extra["n_trunc"] = n_trunc
            extra["reference_untruncated"] = _exact_moments(params, k_max)
        samples = run_rde(target, config, workers=args.workers)
        reference = _exact_moments(target, k_max)
    elif mode == "excursion":
        if not (isinstance(params.measure, Brownian) and params.alpha == -0.5):
            raise InvalidParameter("excursion mode reproduces the Brownian measure with alpha = -1/2", field="measure.kind")
        n_steps = cfg.get("simulate.n_steps", int, 10_000)
        samples = run_excursion(n, n_steps, seed, workers=args.workers)
        reference = _exact_moments(params, k_max)
        extra["n_steps"] = n_steps
        extra["discretization_allowance"] = [discretization_allowance(k, n_steps) for k in range(1, k_max + 1)]
    else:
        ks = cfg.get("simulate.ks", list) or [float(cfg.get("simulate.k", int, 1))]
        ks = [int(k) for k in ks]
        t_max = cfg.get("simulate.t_max", float, 8.0)
        times = cfg.get("simulate.times", list, [])
        out = run_homogeneous(params, ks, t_max, n, seed, times, workers=args.workers)
        samples = out["area"]
        reference = _exact_moments(params, k_max)
        extra["t_max"] = t_max
        extra["riemann"] = []
        for k in ks:
            gap = samples - out["riemann"][k]
            est = estimate_moments(gap, 1)
            formula = riemann_gap_formula(params, k)
            extra["riemann"].append({"k": k, "gap_mean": est.moments[0], "gap_stderr": est.stderr[0],
                                     "formula": formula, "z_score": est.z_scores([formula])[0]})
        rate = phi(params, -params.alpha)
        extra["s_at"] = []
        for t in times:
            est = estimate_moments(out["s_at"][t], 1)
            exact = math.exp(-t * rate)
            extra["s_at"].append({"t": t, "mean": est.moments[0], "stderr": est.stderr[0],
                                  "exact": exact, "z_score": est.z_scores([exact])[0]})

    summary = estimate_moments(samples, k_max, seed=seed)
    z = summary.z_scores(reference)
    dump = cfg.get("simulate.dump", str)
    if dump:
        _dump(samples, dump, cfg.get("simulate.dump_format", str, "text"))

    if args.format == "json":
        report = {"mode": mode, **summary.to_json(), "reference": reference, "z_scores": z, **extra}
        _emit(_json_text(report), args.out)
    else:
        rows = [(k, m, s, ref, zk) for k, (m, s, ref, zk) in
                enumerate(zip(summary.moments, summary.stderr, reference, z), start=1)]
        text = _csv_text(["k", "moment", "stderr", "reference", "z_score"], rows)
        if mode == "homogeneous":
            text += "\n" + _csv_text(["k", "gap_mean", "gap_stderr", "formula", "z_score"],
                                     [list(r.values()) for r in extra["riemann"]])
            if extra["s_at"]:
                text += "\n" + _csv_text(["t", "mean", "stderr", "exact", "z_score"],
                                         [list(r.values()) for r in extra["s_at"]])
        _emit(text, args.out)
    return EXIT_OK


def _dyadic_rate(measure):
    """Weight of the single atom at 1/2, or None for any other measure."""
    if isinstance(measure, Atomic) and len(measure.atoms) == 1 and measure.atoms[0][0] == 0.5:
        return measure.atoms[0][1]
    return None


def verification_rows(cfg):
    """Rows (check, parameter, lhs, rhs, abs_residual, rel_residual, tolerance, passed) for the battery."""
    params = cfg.params()
    rows = []
    k_max = cfg.get("verify.monomial_k_max", int, 10)
    perturb = cfg.get("verify.perturb", dict)
    rate = _dyadic_rate(params.measure)

    if rate is not None:
        for q in cfg.get("verify.dyadic_q", list, [0.1, 1.0, 10.0]):
            res = float(np.max(np.abs(dyadic_residual(params.alpha, q, rate))))
            rows.append(("dyadic", q, math.nan, math.nan, res, res, DYADIC_TOL, res <= DYADIC_TOL))

    if k_max >= 1:
        table = moment_table(params, k_max)
        if perturb:
            k = int(perturb.get("k", 2))
            delta = float(perturb.get("delta", 0.01))
            if not 1 <= k <= k_max:
                raise InvalidParameter(f"perturbed index {k} outside 1..{k_max}", field="verify.perturb")
            table = table.with_moment(k, table.M[k] * (1.0 + delta))
        for k in range(1, k_max + 1):
            rep = verify_theorem1(params, Monomial(k), table, MONOMIAL_TOL)
            rows.append(("monomial", k, rep.lhs, rep.rhs, rep.abs_residual, rep.rel_residual, rep.tolerance, rep.passed))

    qs = cfg.get("verify.exponential_q", list, [0.5, 1.0, 5.0])
    if qs and math.isfinite(total_mass(params.measure)):
        if rate is not None:
            source, tol = (lambda s: dyadic_laplace(params.alpha, s, rate=rate)), EXPONENTIAL_TOL
        else:
            source = solve_laplace_fixed_point(params, q_max=max(qs))
            tol = cfg.get("verify.exponential_tol", float, GRID_EXPONENTIAL_TOL)
        for q in qs:
            rep = verify_theorem1(params, Exponential(q), source, tol)
            rows.append(("exponential", q, rep.lhs, rep.rhs, rep.abs_residual, rep.rel_residual, rep.tolerance, rep.passed))
    return rows


VERIFY_HEADER = ["check", "parameter", "lhs", "rhs", "abs_residual", "rel_residual", "tolerance", "passed"]


def cmd_verify(cfg, args):
    rows = verification_rows(cfg)
    ok = all(r[-1] for r in rows)
    if args.format == "json":
        _emit(_json_text({"passed": ok, "checks": [dict(zip(VERIFY_HEADER, r)) for r in rows]}), args.out)
    else:
        _emit(_csv_text(VERIFY_HEADER, rows), args.out)
    if not ok:
        failed = sum(not r[-1] for r in rows)
        print(f"VerificationFailed: {failed} of {len(rows)} residuals over tolerance", file=sys.stderr)
        return 3
    return EXIT_OK


HELP = {
    "validate": "check the measure and alpha",
    "moments": "moment table with coefficients and upper bounds",
    "simulate": "Monte Carlo estimates against exact references",
    "verify": "residuals of the integro-differential equation",
}
COMMANDS = {"validate": cmd_validate, "moments": cmd_moments, "simulate": cmd_simulate, "verify": cmd_verify}


def build_parser():
    parser = _Parser(prog="fragarea", description="Area under self-similar fragmentations.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in HELP.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--seed", type=int, default=None, help="overrides simulate.seed")
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--out", default=None, help="output file (default: stdout)")
        p.add_argument("--workers", type=int, default=1)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    cfg = None
    try:
        cfg = RunConfig.load(args.config)
        if args.format is None:
            args.format = cfg.get("format", str, "csv")
            if args.format not in ("csv", "json"):
                raise ConfigError("format must be csv or json", field="format", line=cfg.line_of("format"))
        if args.workers < 1:
            raise InvalidParameter("--workers must be >= 1", field="workers")
        return COMMANDS[args.command](cfg, args)
    except FragAreaError as exc:
        text = exc.diagnostic()
        line = getattr(exc, "line", None)
        if line is None and cfg is not None:
            line = cfg.locate(exc)
            if line is not None:
                text += f" (line {line})"
        print(text, file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
