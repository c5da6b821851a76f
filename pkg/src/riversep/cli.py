"""Command-line surface: the full pipeline and each stage on its own.

``riversep run config.json`` ingests the configured record, applies the
preprocessing stages in order, fits the three decomposition models, writes
the diagnostics tables, and finishes with a manifest recording the config
hash, every stage's row/column counts, and the tool version.  The other
subcommands stop earlier in that chain and write only their own outputs,
which makes any stage inspectable in isolation.

Outputs carry no timestamps and all randomness is seeded, so rerunning a
command on identical inputs reproduces every file byte for byte.

Exit codes: 0 on success, 2 when the config (or command line) is invalid,
3 when a valid run fails while executing.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .diagnostics import acf, mutual_information_discrete
from .errors import ConfigError, MissingCells, RiversepError, RuleInapplicable
from .fa import fa_dof, fit_fa_ml, smallest_adequate_k
from .ica import IcaConfig, fast_ica
from .ingest import (
    drop_incomplete_rows,
    emit_csv,
    fetch_remote,
    filter_table,
    parse_csv,
    parse_rdb,
)
from .pca import explained_variance, fit_pca, kaiser_retain
from .preprocess import (
    AnnualTable,
    annual_mean,
    difference,
    drop_na_columns,
    drop_redundant,
    emit_annual_csv,
)
from .report import format_loading, format_number, write_json
from .synth import evaluate_recovery, generate_scenario

# Off-diagonal residuals at or below this make an FA fit "adequate".
_RESIDUAL_ADEQUACY = 0.05


class _StageFailure(Exception):
    """A pipeline stage raised; remembers which one for the error message."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


class _Pipeline:
    """Loads the input table and applies the configured stages in order."""

    def __init__(self, cfg: RunConfig, seed_override=None, offline=False):
        self.cfg = cfg
        self.seed = cfg.ica_seed if seed_override is None else seed_override
        self.offline = offline
        self.stage_counts = []
        self.raw = None
        self.table = None

    def load(self):
        cfg = self.cfg
        try:
            if cfg.input_path is not None:
                data = cfg.input_path.read_bytes()
                if cfg.input_path.suffix.lower() == ".rdb":
                    self.raw = parse_rdb(data)
                else:
                    self.raw = parse_csv(data)
            else:
                r = cfg.remote
                data = fetch_remote(
                    r.site,
                    r.codes,
                    r.start,
                    r.end,
                    r.cache_dir,
                    r.url_template,
                    medium_code=r.medium_code,
                    offline=self.offline,
                )
                self.raw = parse_rdb(data)
        except (RiversepError, OSError) as exc:
            raise _StageFailure("ingest", exc) from exc
        self.table = self.raw
        self.stage_counts.append(("ingest", self.raw.n_rows, self.raw.n_vars))

    def apply_stages(self):
        cfg = self.cfg
        steps = {
            "filter": lambda t: filter_table(t, cfg.filter_spec),
            "drop_incomplete_rows": drop_incomplete_rows,
            "annual_mean": annual_mean,
            "drop_na_columns": drop_na_columns,
            "drop_redundant": lambda t: drop_redundant(t, cfg.redundancy_rules)[0],
            "difference": lambda t: difference(t, cfg.difference_lag),
        }
        for name in cfg.pipeline:
            try:
                self.table = steps[name](self.table)
            except RiversepError as exc:
                raise _StageFailure(name, exc) from exc
            self.stage_counts.append((name, self.table.n_rows, self.table.n_vars))

    def final_matrix(self):
        """Dense model input: (values, labels, row index column)."""
        values = np.asarray(self.table.values, dtype=float)
        missing = int(np.isnan(values).sum())
        if missing:
            raise _StageFailure("model input", MissingCells(missing))
        labels = tuple(self.table.codes())
        if isinstance(self.table, AnnualTable):
            index_name = "year"
            index = [str(y) for y in self.table.years]
        else:
            index_name = "date"
            index = [d.isoformat() for d in self.table.dates]
        return values, labels, index_name, index


def _write(out_dir: Path, name: str, text: str) -> str:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text)
    return name


def _write_ingested(pipe: _Pipeline) -> list:
    return [_write(pipe.cfg.output_dir, "ingested.csv", emit_csv(pipe.raw))]


def _write_preprocessed(pipe: _Pipeline) -> list:
    if isinstance(pipe.table, AnnualTable):
        text = emit_annual_csv(pipe.table)
    else:
        text = emit_csv(pipe.table)
    return [_write(pipe.cfg.output_dir, "preprocessed.csv", text)]


def _fit_pca_stage(pipe: _Pipeline, matrix, labels):
    try:
        return fit_pca(matrix, pipe.cfg.pca_center, pipe.cfg.pca_scale, labels)
    except RiversepError as exc:
        raise _StageFailure("pca", exc) from exc


def _write_pca(pipe: _Pipeline, matrix, labels) -> list:
    model = _fit_pca_stage(pipe, matrix, labels)
    header = "variable," + ",".join(f"PC{j + 1}" for j in range(model.n_components))
    lines = [header]
    for i, code in enumerate(labels):
        lines.append(code + "," + ",".join(format_loading(v) for v in model.loadings[i]))
    lines.append("stdev," + ",".join(format_loading(s) for s in model.stdevs))
    files = [_write(pipe.cfg.output_dir, "pca_loadings.csv", "\n".join(lines) + "\n")]

    try:
        kaiser = kaiser_retain(model)
        explained = explained_variance(model, kaiser)
    except RuleInapplicable:
        # eigenvalue-above-one reasoning needs the correlation scale
        kaiser = None
        explained = None
    summary = {
        "center": model.centered,
        "scale": model.scaled,
        "n_rows": int(matrix.shape[0]),
        "stdevs": [float(s) for s in model.stdevs],
        "kaiser_components": kaiser,
        "explained_variance_kaiser": explained,
    }
    write_json(pipe.cfg.output_dir / "pca_summary.json", summary)
    files.append("pca_summary.json")
    return files


def _resolve_ica_components(pipe: _Pipeline, matrix, labels) -> int:
    if pipe.cfg.ica_components is not None:
        return pipe.cfg.ica_components
    try:
        return kaiser_retain(fit_pca(matrix, True, True, labels))
    except RiversepError as exc:
        raise _StageFailure("ica", exc) from exc


def _write_ica(pipe: _Pipeline, matrix, labels, index_name, index) -> list:
    cfg = pipe.cfg
    k = _resolve_ica_components(pipe, matrix, labels)
    try:
        icfg = IcaConfig(
            n_components=k,
            max_iter=cfg.ica_max_iter,
            tol=cfg.ica_tol,
            contrast=cfg.ica_contrast,
            logcosh_alpha=cfg.ica_logcosh_alpha,
            seed=pipe.seed,
        )
        model = fast_ica(matrix, icfg)
    except RiversepError as exc:
        raise _StageFailure("ica", exc) from exc

    header = index_name + "," + ",".join(f"IC{j + 1}" for j in range(k))
    lines = [header]
    for i, key in enumerate(index):
        lines.append(key + "," + ",".join(format_number(v) for v in model.sources[i]))
    files = [_write(cfg.output_dir, "ica_sources.csv", "\n".join(lines) + "\n")]

    summary = {
        "n_components": k,
        "converged": model.converged,
        "iterations": model.iterations,
        "final_delta": model.delta_history[-1] if model.delta_history else None,
        "seed": pipe.seed,
        "contrast": cfg.ica_contrast,
        "tol": cfg.ica_tol,
        "max_iter": cfg.ica_max_iter,
    }
    write_json(cfg.output_dir / "ica_summary.json", summary)
    files.append("ica_summary.json")
    return files


def _write_fa(pipe: _Pipeline, matrix, labels) -> list:
    cfg = pipe.cfg
    p = len(labels)
    k_used = 0
    for k in range(1, cfg.fa_k_max + 1):
        if fa_dof(p, k) < 0:
            break
        k_used = k
    if k_used == 0:
        raise _StageFailure(
            "fa", RiversepError(f"no factor count is estimable for {p} variables")
        )

    files = []
    fits = []
    for k in range(1, k_used + 1):
        try:
            m = fit_fa_ml(matrix, k, variable_labels=labels)
        except RiversepError as exc:
            raise _StageFailure("fa", exc) from exc
        fits.append(m)

        header = (
            "variable,"
            + ",".join(f"F{j + 1}" for j in range(k))
            + ",uniqueness"
        )
        lines = [header]
        for i, code in enumerate(labels):
            lines.append(
                code
                + ","
                + ",".join(format_loading(v) for v in m.loadings[i])
                + ","
                + format_loading(m.uniquenesses[i])
            )
        files.append(
            _write(cfg.output_dir, f"fa_k{k}_loadings.csv", "\n".join(lines) + "\n")
        )

        res_lines = ["variable," + ",".join(labels)]
        for i, code in enumerate(labels):
            res_lines.append(
                code + "," + ",".join(format_number(v) for v in m.residual[i])
            )
        files.append(
            _write(cfg.output_dir, f"fa_k{k}_residual.csv", "\n".join(res_lines) + "\n")
        )

    selection = smallest_adequate_k([m.p_value for m in fits], cfg.fa_alpha)
    entries = []
    for m in fits:
        off = m.residual - np.diag(np.diag(m.residual))
        worst = float(np.abs(off).max())
        entries.append(
            {
                "k": m.k,
                "stat": m.log_likelihood_stat,
                "dof": m.dof,
                "p_value": m.p_value,
                "converged": m.converged,
                "heywood": m.heywood,
                "max_offdiag_residual": worst,
                "residual_verdict": (
                    "adequate" if worst <= _RESIDUAL_ADEQUACY else "inadequate"
                ),
            }
        )
    summary = {
        "alpha": cfg.fa_alpha,
        "k_max_requested": cfg.fa_k_max,
        "k_max_used": k_used,
        "fits": entries,
        "selected_k": selection.k,
        "selection_adequate": selection.adequate,
    }
    write_json(cfg.output_dir / "fa_summary.json", summary)
    files.append("fa_summary.json")
    return files


def _write_diagnostics(pipe: _Pipeline, matrix, labels) -> list:
    cfg = pipe.cfg
    n = matrix.shape[0]
    max_lag = min(cfg.acf_max_lag, n - 2)
    lines = ["variable,lag,value,conf_band"]
    try:
        for j, code in enumerate(labels):
            result = acf(matrix[:, j], max_lag)
            for lag, value in zip(result.lags, result.values):
                lines.append(
                    f"{code},{lag},{format_number(value)},{format_number(result.conf_band)}"
                )
    except RiversepError as exc:
        raise _StageFailure("diagnose", exc) from exc
    files = [_write(cfg.output_dir, "acf.csv", "\n".join(lines) + "\n")]

    p = len(labels)
    mi = np.zeros((p, p))
    try:
        for i in range(p):
            for j in range(i, p):
                mi[i, j] = mi[j, i] = mutual_information_discrete(
                    matrix[:, i], matrix[:, j], bins=cfg.mi_bins
                )
    except RiversepError as exc:
        raise _StageFailure("diagnose", exc) from exc
    mi_lines = ["variable," + ",".join(labels)]
    for i, code in enumerate(labels):
        mi_lines.append(code + "," + ",".join(format_number(v) for v in mi[i]))
    files.append(_write(cfg.output_dir, "mi.csv", "\n".join(mi_lines) + "\n"))
    return files


def _write_manifest(pipe: _Pipeline, outputs: list) -> None:
    manifest = {
        "tool_version": __version__,
        "config_sha256": pipe.cfg.config_sha256,
        "seed": pipe.seed,
        "offline": pipe.offline,
        "stages": [
            {"stage": name, "rows": rows, "columns": cols}
            for name, rows, cols in pipe.stage_counts
        ],
        "outputs": sorted(set(outputs) | {"manifest.json"}),
    }
    write_json(pipe.cfg.output_dir / "manifest.json", manifest)


def _cmd_ingest(pipe: _Pipeline) -> int:
    pipe.load()
    _write_ingested(pipe)
    return 0


def _cmd_preprocess(pipe: _Pipeline) -> int:
    pipe.load()
    pipe.apply_stages()
    _write_ingested(pipe)
    _write_preprocessed(pipe)
    return 0


def _cmd_pca(pipe: _Pipeline) -> int:
    pipe.load()
    pipe.apply_stages()
    matrix, labels, _, _ = pipe.final_matrix()
    _write_pca(pipe, matrix, labels)
    return 0


def _cmd_ica(pipe: _Pipeline) -> int:
    pipe.load()
    pipe.apply_stages()
    matrix, labels, index_name, index = pipe.final_matrix()
    _write_ica(pipe, matrix, labels, index_name, index)
    return 0


def _cmd_fa(pipe: _Pipeline) -> int:
    pipe.load()
    pipe.apply_stages()
    matrix, labels, _, _ = pipe.final_matrix()
    _write_fa(pipe, matrix, labels)
    return 0


def _cmd_diagnose(pipe: _Pipeline) -> int:
    pipe.load()
    pipe.apply_stages()
    matrix, labels, _, _ = pipe.final_matrix()
    _write_diagnostics(pipe, matrix, labels)
    return 0


def _cmd_run(pipe: _Pipeline) -> int:
    pipe.load()
    pipe.apply_stages()
    outputs = _write_ingested(pipe) + _write_preprocessed(pipe)
    matrix, labels, index_name, index = pipe.final_matrix()
    outputs += _write_pca(pipe, matrix, labels)
    outputs += _write_ica(pipe, matrix, labels, index_name, index)
    outputs += _write_fa(pipe, matrix, labels)
    outputs += _write_diagnostics(pipe, matrix, labels)
    _write_manifest(pipe, outputs)
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "preprocess": _cmd_preprocess,
    "pca": _cmd_pca,
    "ica": _cmd_ica,
    "fa": _cmd_fa,
    "diagnose": _cmd_diagnose,
    "run": _cmd_run,
}

_BENCH_SCENARIOS = (
    ("two_uniform", ("uniform", "uniform")),
    ("three_uniform", ("uniform", "uniform", "uniform")),
    ("two_laplace", ("laplace", "laplace")),
    ("two_gaussian", ("gaussian", "gaussian")),
)


def _synth_bench(out_dir: Path, rows: int, base_seed: int, replicates: int) -> int:
    """Recovery benchmark over known mixing scenarios, ICA versus PCA."""
    lines = ["scenario,distributions,method,seed,amari,mean_abs_corr"]
    aggregate = {}
    for name, dists in _BENCH_SCENARIOS:
        for r in range(replicates):
            seed = base_seed + r
            scenario = generate_scenario(dists, rows=rows, seed=seed)
            ica_model = fast_ica(
                scenario.observed,
                IcaConfig(n_components=len(dists), seed=seed),
            )
            pca_model = fit_pca(scenario.observed, center=True, scale=False)
            for method, model in (("ica", ica_model), ("pca", pca_model)):
                report = evaluate_recovery(scenario, model)
                corr = float(np.mean(report.matched_correlations))
                lines.append(
                    f"{name},{'+'.join(dists)},{method},{seed},"
                    f"{format_number(report.amari)},{format_number(corr)}"
                )
                aggregate.setdefault((name, method), []).append(report.amari)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "synth_bench.csv").write_text("\n".join(lines) + "\n")
    summary = {
        "rows": rows,
        "seed": base_seed,
        "replicates": replicates,
        "mean_amari": {
            f"{name}/{method}": float(np.mean(vals))
            for (name, method), vals in sorted(aggregate.items())
        },
    }
    write_json(out_dir / "synth_summary.json", summary)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riversep",
        description="Source-apportionment pipeline for river water-quality records.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "ingest": "parse the input record and write ingested.csv",
        "preprocess": "run the configured stages and write preprocessed.csv",
        "pca": "fit principal components on the preprocessed table",
        "ica": "extract independent components on the preprocessed table",
        "fa": "fit maximum-likelihood factor models for k = 1..k_max",
        "diagnose": "write autocorrelation and mutual-information tables",
        "run": "full pipeline: all outputs plus manifest.json",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("config", type=Path, help="path to the JSON run config")
        p.add_argument(
            "--seed", type=int, default=None, help="override the configured seed"
        )
        p.add_argument(
            "--offline",
            action="store_true",
            help="forbid network access; remote inputs must be cached",
        )
    bench = sub.add_parser(
        "synth-bench", help="recovery benchmark on synthetic mixing scenarios"
    )
    bench.add_argument("--out", type=Path, required=True, help="output directory")
    bench.add_argument("--rows", type=int, default=2000)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--replicates", type=int, default=5)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "synth-bench":
            return _synth_bench(args.out, args.rows, args.seed, args.replicates)
        cfg = load_config(args.config)
        pipe = _Pipeline(cfg, seed_override=args.seed, offline=args.offline)
        return _COMMANDS[args.command](pipe)
    except ConfigError as exc:
        print(f"riversep: config error: {exc}", file=sys.stderr)
        return 2
    except _StageFailure as exc:
        print(f"riversep: error in stage '{exc.stage}': {exc.cause}", file=sys.stderr)
        return 3
    except RiversepError as exc:
        print(f"riversep: error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"riversep: i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
