"""Command-line entry point.

    delayfit simulate|fit|experiment|gradcheck --config PATH [--data PATH]
             [--out DIR] [--seed N] [--jobs N] [--no-plots]

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import config as config_mod
from . import pipeline
from .data import read_csv, write_csv
from .trainer import BLOW_UP
from .types import ConfigError, DelayFitError, NonFiniteState, ParseError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("delayfit")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="delayfit", description="Delay, parameter and history identification for DDEs.")
    p.add_argument("command", choices=["simulate", "fit", "experiment", "gradcheck"])
    p.add_argument("--config", required=True, help="INI file or bundled preset name")
    p.add_argument("--data", help="CSV dataset for fit (default: simulate from the config)")
    p.add_argument("--out", help="output directory (default: [output] dir)")
    p.add_argument("--seed", type=int, help="master seed (default: [noise] seed)")
    p.add_argument("--jobs", type=int, default=1, help="parallel trials for experiment")
    p.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _out_dir(cfg, args) -> Path:
    out = Path(args.out or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(cfg, args) -> int:
    out = _out_dir(cfg, args)
    clean, noisy = pipeline.simulate(cfg, seed=args.seed)
    write_csv(clean, out / f"{cfg.model}_clean.csv")
    write_csv(noisy, out / f"{cfg.model}_noisy.csv")
    print(f"wrote {len(clean)} samples to {out}/{cfg.model}_clean.csv and _noisy.csv "
          f"(noise level {cfg.noise_level:g})")
    return EXIT_OK


def cmd_fit(cfg, args) -> int:
    out = _out_dir(cfg, args)
    clean = None
    if args.data:
        try:
            ds = read_csv(args.data)
        except DelayFitError as exc:  # unreadable file counts as a data error
            raise ParseError(str(exc)) from exc
    else:
        clean, ds = pipeline.simulate(cfg, seed=args.seed)
    res = pipeline.fit_dataset(cfg, ds)
    pipeline.write_rows(out / f"{cfg.model}_fit.csv", pipeline.result_header(cfg),
                        [pipeline.result_row(res)])
    header, rows = pipeline.trajectory_rows(cfg, res, ds)
    if header:
        pipeline.write_rows(out / f"{cfg.model}_trajectory.csv", header, rows)
    if cfg.plots and not args.no_plots:
        from . import plotting

        plotting.plot_fit(res, ds, out / f"{cfg.model}_trajectory.png", clean=clean, title=cfg.model)
        plotting.plot_loss(res, out / f"{cfg.model}_loss.png")
    names = pipeline.result_header(cfg)[:-3]
    learned = list(res.theta) + [res.tau] + list(res.phi)
    print(f"{cfg.model}: {res.stop_reason} after {res.epochs} epochs, loss {res.final_loss:.6g}")
    for n, v in zip(names, learned):
        print(f"  {n:>8s} = {v:.6g}")
    return EXIT_NUMERIC if res.stop_reason == BLOW_UP else EXIT_OK


def cmd_experiment(cfg, args) -> int:
    out = _out_dir(cfg, args)
    summaries = pipeline.run_experiment(cfg, master_seed=args.seed, jobs=max(1, args.jobs))
    for s in summaries:
        path = out / pipeline.experiment_filename(cfg, s.level)
        pipeline.write_experiment(s, path)
        if cfg.plots and not args.no_plots:
            from . import plotting

            plotting.plot_experiment(s, path.with_suffix(".png"))
        print(f"noise {s.level:g}: {s.n_usable}/{len(s.trials)} usable trials -> {path}")
        print(f"  {'parameter':>9s} {'true':>10s} {'mean':>10s} {'std':>10s}")
        for name, true, (mean, std) in zip(s.names, s.truth, s.stats()):
            m = "NA" if mean is None else f"{mean:10.4f}"
            sd = "NA" if std is None else f"{std:10.4f}"
            print(f"  {name:>9s} {true:10.4f} {m:>10s} {sd:>10s}")
    return EXIT_OK


def _block_max(check, lo, hi):
    errs = [c.rel_err for c in check.report.components[lo:hi]]
    return max(errs) if errs else None


def cmd_gradcheck(cfg, args) -> int:
    checks = pipeline.gradcheck_all(cfg)
    rows = []
    print(f"{'model':<12s} {'n_tau':>5s} {'theta':>9s} {'tau':>9s} {'phi':>9s}  result")
    all_ok = True
    for ch in checks:
        p = ch.names.index("tau")
        blocks = [_block_max(ch, 0, p), _block_max(ch, p, p + 1), _block_max(ch, p + 1, None)]
        ok = ch.report.passed
        all_ok &= ok
        cells = ["-" if b is None else f"{b:9.2e}" for b in blocks]
        print(f"{ch.model:<12s} {ch.n_tau:5d} {cells[0]:>9s} {cells[1]:>9s} {cells[2]:>9s}  "
              f"{'PASS' if ok else 'FAIL'}")
        if ch.report.tau_step_shrunk or ch.report.tau_one_sided:
            side = {1: "forward", -1: "backward"}.get(ch.report.tau_one_sided)
            note = f"tau step shrunk to {ch.report.tau_step:.3g}" if ch.report.tau_step_shrunk \
                else f"tau step {ch.report.tau_step:.3g}"
            if side:
                note += f", one-sided ({side}) since tau sits on an n_step transition"
            print(f"  note: {note}")
        for c in ch.report.failures():
            print(f"  {c.name}: adjoint {c.adjoint:.6g} fd {c.fd:.6g} rel err {c.rel_err:.2e} > {c.tol:g}")
        for c in ch.report.components:
            rows.append([ch.model, ch.n_tau, c.name, pipeline.fmt(c.adjoint), pipeline.fmt(c.fd),
                         pipeline.fmt(c.rel_err), pipeline.fmt(c.tol), "pass" if c.passed else "fail"])
    if args.out:
        pipeline.write_rows(Path(args.out) / "gradcheck.csv",
                            ["model", "n_tau", "parameter", "adjoint", "fd", "rel_err", "tol", "result"],
                            rows)
    return EXIT_OK if all_ok else EXIT_NUMERIC


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "experiment": cmd_experiment,
    "gradcheck": cmd_gradcheck,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_mod.load(args.config)
        if args.seed is not None:
            cfg = cfg.with_overrides(seed=args.seed)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NonFiniteState as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DelayFitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
