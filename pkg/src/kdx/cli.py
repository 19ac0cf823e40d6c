"""``kdx`` command-line interface.

Exit code 0 means success, 1 a usage error (bad flags, unreadable or
malformed input) and 2 a computation error. Data moves as CSV and fitted
models as JSON. Numbers printed on stdout use 8 significant digits.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

import numpy as np

from . import density, gpr, hsic, io, svm, toydata
from . import kernels as kern
from .errors import KdxError
from .kernels import FAMILIES, KernelSpec
from .sensitivity import feature_sensitivity, point_sensitivity


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def fmt8(v) -> str:
    s = f"{float(v) + 0.0:.8g}"  # + 0.0 turns -0.0 into 0.0
    if s.lstrip("-").isdigit():
        s += ".0"
    return s


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {v}")
    return v


# --- shared argument groups ------------------------------------------------


def _common(p):
    p.add_argument("--seed", type=int, default=0, help="seed for every random choice")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="worker threads (fallback: KDX_THREADS)")


def _kernel_args(p, default_family=None):
    g = p.add_argument_group("kernel")
    g.add_argument("--kernel", help="kernel JSON file (overrides the flags below)")
    g.add_argument("--family", choices=FAMILIES, default=default_family)
    g.add_argument("--gamma", type=float)
    g.add_argument("--coef0", type=float)
    g.add_argument("--degree", type=int)
    g.add_argument("--lengthscales", type=_floats)
    g.add_argument("--signal-var", type=float)
    g.add_argument("--bandwidth", type=float)


def _kernel_from(args, X=None) -> KernelSpec | None:
    if args.kernel:
        return KernelSpec.from_dict(_load_json(args.kernel))
    if args.family is None:
        return None
    fields = {"family": args.family}
    for name in ("gamma", "coef0", "degree", "lengthscales", "signal_var", "bandwidth"):
        v = getattr(args, name)
        if v is not None:
            fields[name] = v
    if args.family == "rbf" and "gamma" not in fields:
        if X is None:
            raise UsageError("--gamma is required for the rbf family here")
        fields["gamma"] = kern.median_heuristic_gamma(X)
    try:
        return KernelSpec.from_dict(fields)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None


def _save_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _read(path) -> io.Table:
    try:
        return io.read_csv(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except io.CsvFormatError as exc:
        raise UsageError(str(exc)) from None


def _need_labels(table, path):
    if table.y is None:
        raise UsageError(f"{path}: a 'y' or 'label' column is required")
    return table.y


def _xcols(d):
    return [f"x{j + 1}" for j in range(d)]


def _point(text, d=None):
    v = np.asarray(_floats(text))
    if d is not None and v.size != d:
        raise UsageError(f"point {text!r} has {v.size} coordinates, model expects {d}")
    return v


def _query_points(args, d):
    if args.x is not None:
        return _point(args.x, d)[None, :]
    if args.data is None:
        raise UsageError("give --data or --x")
    X = _read(args.data).X
    if X.shape[1] != d:
        raise UsageError(f"{args.data}: {X.shape[1]} feature columns, model expects {d}")
    return X


def _emit_rows(args, columns, rows):
    """Write to ``--out`` if given, otherwise print CSV-shaped rows with 8 digits."""
    if args.out:
        io.write_csv(args.out, columns, rows)
        return
    print(",".join(columns))
    for r in np.atleast_2d(rows):
        print(",".join(fmt8(v) for v in r))


# --- commands --------------------------------------------------------------


def cmd_gen(args):
    spec = toydata.ToySpec(args.name, args.n, args.noise, args.seed)
    ds = toydata.generate(spec)
    label = "label" if args.name in toydata.CLASSIFICATION else "y"
    table = io.Table(ds.X, ds.y, _xcols(ds.X.shape[1]), label)
    if args.out:
        io.write_table(args.out, table)
    else:
        _emit_rows(args, table.columns + [label], np.column_stack([ds.X, ds.y]))


def cmd_kernel(args):
    spec = _kernel_from(args)
    if spec is None:
        raise UsageError("--family or --kernel is required")
    if args.action == "gram":
        if not args.data:
            raise UsageError("kernel gram needs --data")
        X = _read(args.data).X
        K = kern.gram(spec, X)
        _emit_rows(args, [f"k{j + 1}" for j in range(K.shape[0])], K)
        return
    if args.x is None or args.y is None:
        raise UsageError(f"kernel {args.action} needs --x and --y")
    x, y = _point(args.x), _point(args.y)
    if args.action == "eval":
        print(fmt8(kern.evaluate(spec, x, y)))
    else:
        print(",".join(fmt8(v) for v in kern.grad_x(spec, x, y)))


def cmd_gpr(args):
    if args.action == "fit":
        t = _read(args.data)
        y = _need_labels(t, args.data)
        if args.cv:
            gamma, nv, mse = gpr.cv_grid_search(t.X, y, args.gammas, args.noise_vars, args.folds, args.seed)
            spec = KernelSpec.rbf(gamma)
            print(f"gamma={fmt8(gamma)} noise_var={fmt8(nv)} cv_mse={fmt8(mse)}")
        else:
            spec = _kernel_from(args, t.X) or KernelSpec.rbf(kern.median_heuristic_gamma(t.X))
            nv = args.noise_var
        model = gpr.fit(t.X, y, spec, nv)
        _save_json(args.out, model.to_dict())
        return
    model = gpr.GprModel.from_dict(_load_json(args.model))
    if args.action == "norms":
        for k, v in model.regularizer_norms().as_dict().items():
            print(f"{k}={fmt8(v)}")
        return
    X = _query_points(args, model.d)
    if args.action == "predict":
        rows = np.column_stack([X, model.predict_mean(X), model.predict_var(X)])
        _emit_rows(args, _xcols(model.d) + ["mean", "var"], rows)
        return
    G = model.mean_gradient(X)
    _sens_output(args, X, model.predict_mean(X), G, "mean")


def _sens_output(args, X, value, G, value_name):
    d = X.shape[1]
    q = point_sensitivity(G)
    rows = np.column_stack([X, value, G, q])
    _emit_rows(args, _xcols(d) + [value_name] + [f"d{j + 1}" for j in range(d)] + ["point_sens"], rows)
    s = feature_sensitivity(G)
    print("feature_sensitivity=" + ",".join(fmt8(v) for v in s), file=sys.stderr if not args.out else sys.stdout)
    if args.svg:
        io.write_svg(args.svg, [io.HeatScatter(X[:, :2], q, label="point_sensitivity"),
                                io.Arrow(X[:, :2], G[:, :2], scale=_arrow_scale(X, G), label="gradient")])


def _arrow_scale(X, G):
    extent = float(np.ptp(X[:, :2])) or 1.0
    peak = float(np.max(np.linalg.norm(G[:, :2], axis=1)))
    return 0.1 * extent / peak if peak > 0 else 1.0


def cmd_svm(args):
    if args.action == "train":
        t = _read(args.data)
        y = _need_labels(t, args.data)
        if args.grid:
            C, gamma, acc = svm.grid_search(t.X, y, args.Cs, args.gammas, args.folds, args.seed)
            spec = KernelSpec.rbf(gamma)
            print(f"C={fmt8(C)} gamma={fmt8(gamma)} cv_accuracy={fmt8(acc)}")
        else:
            spec = _kernel_from(args, t.X) or KernelSpec.rbf(kern.median_heuristic_gamma(t.X))
            C = args.C
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", svm.ConvergenceWarning)
            model = svm.train(t.X, y, spec, C=C, tol=args.tol, seed=args.seed)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        _save_json(args.out, model.to_dict())
        return
    model = svm.SvmModel.from_dict(_load_json(args.model))
    X = _query_points(args, model.d)
    f = model.decision(X)
    if args.action == "predict":
        _emit_rows(args, _xcols(model.d) + ["decision", "label"], np.column_stack([X, f, model.predict(X)]))
        return
    mask = 1.0 - np.tanh(f) ** 2
    G = mask[:, None] * model.kernel_gradient(X)
    _sens_output(args, X, f, G, "decision")


def cmd_density(args):
    if args.action == "fit":
        t = _read(args.data)
        spec = _kernel_from(args, t.X)
        model = density.fit_density(t.X, spec, args.mode, args.rank)
        _save_json(args.out, model.to_dict())
        return
    model = density.DensityModel.from_dict(_load_json(args.model))
    X = _query_points(args, model.d)
    if args.action == "eval":
        p = model.density_at(X)
        cols = _xcols(model.d) + ["density"]
        if args.normalized:
            p = p * density.normalizing_constant(model.kernel, model.d)
        _emit_rows(args, cols, np.column_stack([X, p]))
        return
    res = density.ridge_scores(model, X, args.r_ridge, args.quantile, args.tol, args.convention)
    flag = np.zeros(X.shape[0])
    flag[res.selected] = 1.0
    _emit_rows(args, ["index", "score", "selected"], np.column_stack([np.arange(X.shape[0]), res.scores, flag]))
    if args.svg:
        io.write_svg(args.svg, [io.Scatter(X[:, :2], color="#999999", radius=2, label="samples"),
                                io.Scatter(X[res.selected][:, :2], color="#d62728", label="ridge")])


def _xy(args):
    t = _read(args.data)
    if args.split is not None:
        if not 1 <= args.split < t.X.shape[1] + (t.y is not None):
            raise UsageError("--split must leave at least one column on each side")
        full = t.X if t.y is None else np.column_stack([t.X, t.y])
        return full[:, :args.split], full[:, args.split:]
    if t.y is None:
        if t.X.shape[1] != 2:
            raise UsageError(f"{args.data}: give a 'y' column or --split")
        return t.X[:, :1], t.X[:, 1:]
    return t.X, t.y[:, None]


def cmd_hsic(args):
    X, Y = _xy(args)
    kx = KernelSpec.rbf(args.gamma_x) if args.gamma_x else None
    ky = KernelSpec.rbf(args.gamma_y) if args.gamma_y else None
    cfg = hsic.HsicConfig(kx, ky)
    if args.action == "value":
        print(fmt8(hsic.hsic(X, Y, cfg)))
    elif args.action == "pvalue":
        print(fmt8(hsic.permutation_pvalue(X, Y, cfg, args.n_perm, args.seed, args.threads)))
    elif args.action == "grad":
        fld = hsic.hsic_grad(X, Y, cfg)
        dx, dy = X.shape[1], Y.shape[1]
        cols = ([f"sx{j + 1}" for j in range(dx)] + [f"sy{j + 1}" for j in range(dy)] + ["magnitude"])
        _emit_rows(args, cols, np.column_stack([fld.grad_x, fld.grad_y, fld.magnitude]))
        if args.svg:
            P = np.column_stack([X[:, 0], Y[:, 0]])
            V = np.column_stack([fld.grad_x[:, 0], fld.grad_y[:, 0]])
            io.write_svg(args.svg, [io.HeatScatter(P, fld.magnitude, label="magnitude"),
                                    io.Arrow(P, V, scale=_arrow_scale(P, V), label="gradient")])
    else:
        traj = hsic.unfold(X, Y, cfg, args.direction, args.step, args.iters)
        rows = np.column_stack([np.arange(len(traj.hsic)), traj.hsic, traj.steps])
        _emit_rows(args, ["iter", "hsic", "step"], rows)
        if args.out_data:
            Xf, Yf = traj.X[-1], traj.Y[-1]
            cols = [f"x{j + 1}" for j in range(Xf.shape[1])] + [f"y{j + 1}" if Yf.shape[1] > 1 else "y"
                                                                for j in range(Yf.shape[1])]
            io.write_csv(args.out_data, cols, np.column_stack([Xf, Yf]))
        if args.svg:
            io.write_svg(args.svg, [
                io.Scatter(np.column_stack([X[:, 0], Y[:, 0]]), color="#999999", radius=2, label="initial"),
                io.Scatter(np.column_stack([traj.X[-1][:, 0], traj.Y[-1][:, 0]]), label="final"),
            ])


# --- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    root = _Parser(prog="kdx", description="Kernel methods with analytic input derivatives.")
    sub = root.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("gen", help="generate a toy dataset")
    _common(p)
    p.add_argument("--name", required=True, choices=sorted(toydata.GENERATORS))
    p.add_argument("--n", type=_positive_int, default=100)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("kernel", help="evaluate kernels")
    _common(p)
    p.add_argument("action", choices=("eval", "grad", "gram"))
    _kernel_args(p)
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--data")
    p.add_argument("--out")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("gpr", help="Gaussian process regression")
    _common(p)
    p.add_argument("action", choices=("fit", "predict", "sens", "norms"))
    _kernel_args(p)
    p.add_argument("--data")
    p.add_argument("--model")
    p.add_argument("--x")
    p.add_argument("--out")
    p.add_argument("--svg")
    p.add_argument("--noise-var", type=float, default=0.0)
    p.add_argument("--cv", action="store_true", help="pick rbf gamma and noise_var by k-fold CV")
    p.add_argument("--gammas", type=_floats, default=[0.1, 0.5, 1.0, 5.0, 10.0])
    p.add_argument("--noise-vars", type=_floats, default=[1e-4, 1e-3, 1e-2, 1e-1])
    p.add_argument("--folds", type=_positive_int, default=5)
    p.set_defaults(func=cmd_gpr)

    p = sub.add_parser("svm", help="support vector classification")
    _common(p)
    p.add_argument("action", choices=("train", "predict", "sens"))
    _kernel_args(p)
    p.add_argument("--data")
    p.add_argument("--model")
    p.add_argument("--x")
    p.add_argument("--out")
    p.add_argument("--svg")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--grid", action="store_true", help="pick C and rbf gamma by stratified CV")
    p.add_argument("--Cs", type=_floats, default=[0.1, 1.0, 10.0, 100.0])
    p.add_argument("--gammas", type=_floats, default=[0.1, 0.5, 2.0, 8.0])
    p.add_argument("--folds", type=_positive_int, default=3)
    p.set_defaults(func=cmd_svm)

    p = sub.add_parser("density", help="kernel density estimation and ridges")
    _common(p)
    p.add_argument("action", choices=("fit", "eval", "ridge"))
    _kernel_args(p)
    p.add_argument("--data")
    p.add_argument("--model")
    p.add_argument("--x")
    p.add_argument("--out")
    p.add_argument("--svg")
    p.add_argument("--mode", choices=density.MODES, default="parzen")
    p.add_argument("--rank", type=_positive_int)
    p.add_argument("--normalized", action="store_true", help="scale rbf sums to a proper pdf")
    p.add_argument("--r-ridge", type=_positive_int, default=1)
    p.add_argument("--quantile", type=float, default=0.05)
    p.add_argument("--tol", type=float)
    p.add_argument("--convention", choices=("trailing", "leading"), default="trailing")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("hsic", help="HSIC dependence analysis")
    _common(p)
    p.add_argument("action", choices=("value", "grad", "pvalue", "unfold"))
    p.add_argument("--data", required=True)
    p.add_argument("--split", type=int, help="number of leading columns that form X")
    p.add_argument("--gamma-x", type=float)
    p.add_argument("--gamma-y", type=float)
    p.add_argument("--n-perm", type=int, default=199)
    p.add_argument("--direction", choices=("maximize", "minimize"), default="maximize")
    p.add_argument("--step", type=float)
    p.add_argument("--iters", type=_positive_int, default=100)
    p.add_argument("--out")
    p.add_argument("--out-data", help="CSV for the final unfolded samples")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_hsic)
    return root


def _validate(args):
    if args.threads is None:
        env = os.environ.get("KDX_THREADS")
        if env:
            try:
                args.threads = _positive_int(env)
            except argparse.ArgumentTypeError as exc:
                raise UsageError(f"KDX_THREADS: {exc}") from None
    action = getattr(args, "action", None)
    if args.command in ("gpr", "svm", "density") and action in ("fit", "train"):
        if not args.data or not args.out:
            raise UsageError(f"{args.command} {action} needs --data and --out")
    elif args.command in ("gpr", "svm", "density") and not args.model:
        raise UsageError(f"{args.command} {action} needs --model")
    if args.command == "density" and args.mode != "parzen" and args.rank is None:
        raise UsageError("--rank is required for keca modes")
    if args.command == "gpr" and args.noise_var < 0:
        raise UsageError("--noise-var must be >= 0")
    if args.command == "gen" and args.noise < 0:
        raise UsageError("--noise must be >= 0")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _validate(args)
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (KdxError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
