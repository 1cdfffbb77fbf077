"""Command-line front end: ``fracspec generate | converge | mfd-params``."""
import argparse
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import json
import logging
import os
from pathlib import Path
import sys
import tempfile

import numpy as np

from . import manifold, metric, pcf, que
from .errors import BoundViolation, ConfigError, FracspecError
from .graph import spectrum

log = logging.getLogger("fracspec")


@dataclass(frozen=True)
class RunConfig:
    preset: str = None
    config: str = None
    m_lo: int = 0
    m_hi: int = 3
    case: str = "geometric"
    Lambda: str = None
    ell00: str = None
    mesh: float = None
    k: int = 6
    out: str = "fracspec-out"
    seed: int = 0
    check: bool = False
    d: int = 2

    def __post_init__(self):
        if (self.preset is None) == (self.config is None):
            raise ConfigError("give exactly one of --preset or --config")
        if self.m_lo < 0 or self.m_hi < self.m_lo:
            raise ConfigError(f"empty or negative generation range {self.m_lo}..{self.m_hi}")
        if self.k < 1:
            raise ConfigError("--k must be >= 1")
        if self.mesh is not None and not self.mesh > 0:
            raise ConfigError("--mesh must be positive")

    def system(self):
        if self.preset is not None:
            return pcf.preset(self.preset)
        try:
            text = Path(self.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {self.config}: {exc}") from exc
        return pcf.PcfSystem.from_json(json.loads(text), name=Path(self.config).stem)

    def case_args(self):
        case = "custom" if self.Lambda is not None else self.case
        return dict(case=case, Lambda=self.Lambda, ell00=self.ell00)

    @property
    def generations(self):
        return range(self.m_lo, self.m_hi + 1)


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return str(x)


def write_csv(path, header, rows):
    lines = [",".join(header)] + [",".join(fmt(v) for v in row) for row in rows]
    write_atomic(path, "\n".join(lines) + "\n")


def _threads():
    try:
        return max(1, int(os.environ.get("FRACSPEC_THREADS", "1")))
    except ValueError:
        raise ConfigError("FRACSPEC_THREADS must be an integer") from None


def _map(fn, args):
    workers = min(_threads(), len(args))
    if workers <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, args))


# --- generate ----------------------------------------------------------------

def _generate_one(job):
    cfg, m = job
    sys_ = cfg.system()
    level = pcf.level_graph(sys_, m)
    mg, plan = metric.assign_lengths(level, **cfg.case_args())
    if level.graph.n_vertices <= 2000:
        pcf.verify_compatibility(sys_, m, trials=5, rng=cfg.seed)
    graph_doc = level.graph.to_json()
    metric_doc = mg.to_json(level.graph)
    metric_doc["plan"] = plan.to_json()
    metric_doc["cell_count"] = level.cell_count.tolist()
    write_atomic(Path(cfg.out) / f"graph_m{m}.json", dump_json(graph_doc))
    write_atomic(Path(cfg.out) / f"metric_m{m}.json", dump_json(metric_doc))
    return m, level.graph.n_vertices, level.graph.n_edges


def cmd_generate(cfg):
    results = _map(_generate_one, [(cfg, m) for m in cfg.generations])
    for m, nv, ne in results:
        print(f"m={m} vertices={nv} edges={ne}")
    return results


# --- converge ----------------------------------------------------------------

def _converge_one(job):
    cfg, m = job
    sys_ = cfg.system()
    level = pcf.level_graph(sys_, m)
    mg, plan = metric.assign_lengths(level, **cfg.case_args())
    fem = metric.fem_discretize(mg, h_target=cfg.mesh)
    pair = que.build_identification(level, mg, fem, plan)
    report = que.measure_quasi_unitarity(pair, level, fem, estimate_fem_error=True, k=cfg.k)
    k = min(cfg.k, level.graph.n_vertices)
    disc = spectrum(level.graph)[:k]
    met = metric.kirchhoff_spectrum(fem, k, tau=plan.tau)
    extrap = metric.kirchhoff_spectrum(fem, k, tau=plan.tau, richardson=True)
    doc = report.to_json()
    doc.update(m=m, plan=plan.to_json(), n_dof=fem.n_dof, mesh_h=fem.mesh_h,
               discrete_spectrum=disc, metric_spectrum=met, metric_spectrum_extrapolated=extrap,
               transitivity_note="composition error 22*delta + 43*delta_tilde is reported as stated; "
                                 "its derivation is flagged in the literature as relying on a faulty estimate")
    write_atomic(Path(cfg.out) / f"report_m{m}.json", dump_json(doc))
    return dict(m=m, report=report, plan=plan, disc=disc, met=met, extrap=extrap, mesh_h=fem.mesh_h)


def cmd_converge(cfg):
    results = _map(_converge_one, [(cfg, m) for m in cfg.generations])
    k = cfg.k
    header = ["m", "tau", "delta_theoretical", "normJ", "adjointDefect", "jpj", "jjp", "compat2",
              "formCloseness", "opDefect", "fem_error_max"]
    header += [f"lambda_disc_{i}" for i in range(1, k + 1)]
    header += [f"lambda_metric_{i}" for i in range(1, k + 1)]
    header += [f"lambda_diff_{i}" for i in range(1, k + 1)]
    rows, spec_rows, violations = [], [], []
    for res in results:
        rep = res["report"]
        disc = _pad(res["disc"], k)
        met = _pad(res["met"], k)
        diff = _pad([row[3] for row in que.spectral_compare(res["disc"], res["met"], k).table], k)
        rows.append([res["m"], res["plan"].tau, rep.delta_theoretical, rep.normJ, rep.adjointDefect, rep.jpj,
                     rep.jjp, rep.compat2, rep.formCloseness, rep.opDefect, max(rep.fem_error.values()),
                     *disc, *met, *diff])
        for i, (lam, ext) in enumerate(zip(res["met"], res["extrap"]), start=1):
            spec_rows.append([res["m"], i, lam, res["mesh_h"], ext])
        violations += [(res["m"], name) for name, (_, _, ok) in rep.bound_checks().items() if not ok]
    write_csv(Path(cfg.out) / "converge.csv", header, rows)
    write_csv(Path(cfg.out) / "spectra.csv", ["m", "k", "lambda", "mesh_h", "extrapolated"], spec_rows)
    ms = [r[0] for r in rows]
    fitted = {}
    for i in range(2, k + 1):
        col = [r[header.index(f"lambda_diff_{i}")] for r in rows]
        if len(ms) >= 2:
            fitted[f"k{i}"] = que.fit_geometric_ratio(ms, col)
    summary = {"generations": ms, "fitted_diff_ratio": fitted,
               "delta_ratio": que.fit_geometric_ratio(ms, [r[2] for r in rows]) if len(ms) >= 2 else None,
               "bound_violations": [list(v) for v in violations]}
    write_atomic(Path(cfg.out) / "summary.json", dump_json(summary))
    print(Path(cfg.out) / "converge.csv")
    for name, ratio in fitted.items():
        print(f"fitted per-generation ratio of |lambda diff| {name}: {fmt(ratio)}")
    if cfg.check and violations:
        raise BoundViolation(f"measured defects exceed the bound: {violations}")
    return summary


def _pad(x, k):
    out = np.full(k, np.nan)
    out[:len(x)] = x[:k]
    return out


# --- mfd-params --------------------------------------------------------------

def cmd_mfd_params(cfg):
    sys_ = cfg.system()
    rows = manifold.mfd_table(sys_)
    text = manifold.format_table(rows)
    doc = {"system": sys_.to_json(), "cases": manifold.table_to_json(rows)}
    if cfg.Lambda is not None:
        lam = manifold.exact(cfg.Lambda)
        lo, hi = manifold.frac_window(sys_, lam)
        star = manifold.mfd_frac_delta(sys_, lam, (lo + hi) / 2).Eps_star
        doc["custom"] = {"Lambda": str(lam), "window": [str(lo), str(hi)], "Eps_star": str(star)}
    write_atomic(Path(cfg.out) / "mfd_params.json", dump_json(doc))
    write_atomic(Path(cfg.out) / "mfd_params.txt", text + "\n")
    print(text)
    return doc


# --- entry point -------------------------------------------------------------

def parse_m_range(text):
    for sep in ("..", ":", "-"):
        if sep in text:
            lo, hi = text.split(sep, 1)
            try:
                return int(lo), int(hi)
            except ValueError:
                break
    try:
        m = int(text)
    except ValueError:
        raise ConfigError(f"bad --m-range {text!r}; use LO..HI") from None
    return m, m


def build_parser():
    p = argparse.ArgumentParser(prog="fracspec", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("generate", "converge", "mfd-params"):
        s = sub.add_parser(name)
        src = s.add_mutually_exclusive_group()
        src.add_argument("--preset")
        src.add_argument("--config")
        s.add_argument("--m-range", default="0..3")
        s.add_argument("--case", default="geometric", choices=["geometric", "inverse-weight", "unit-tau"])
        s.add_argument("--lambda", dest="Lambda")
        s.add_argument("--ell00")
        s.add_argument("--mesh", type=float)
        s.add_argument("--k", type=int, default=6)
        s.add_argument("--assert", dest="check", action="store_true")
        s.add_argument("--out", default="fracspec-out")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("-v", "--verbose", action="store_true")
    return p


COMMANDS = {"generate": cmd_generate, "converge": cmd_converge, "mfd-params": cmd_mfd_params}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        m_lo, m_hi = parse_m_range(args.m_range)
        cfg = RunConfig(preset=args.preset, config=args.config, m_lo=m_lo, m_hi=m_hi, case=args.case,
                        Lambda=args.Lambda, ell00=args.ell00, mesh=args.mesh, k=args.k, out=args.out,
                        seed=args.seed, check=args.check)
        COMMANDS[args.command](cfg)
    except FracspecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except np.linalg.LinAlgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
