"""Command-line surface: generate, integrate, diagnose, embed.

Every command is a pure function of its RunConfig, so rerunning a
persisted config reproduces its output byte for byte.  CSV outputs
carry `#`-prefixed metadata headers; structured reports are JSON with
sorted keys and no timestamps.

Exit codes: 0 pass, 1 failing suite, 2 usage error, 3 internal or
capacity error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys

import numpy as np

from .diagnostics import SUITES
from .embed import composed_stopping_times, first_passage_times
from .errors import WalkwiseError
from .integrate import (REGISTRY_HELP, IntegrandError, get_integrand,
                        ito_integral, stratonovich_integral)
from .wiener import build_to_level, error_bound

SEED_DIR_ENV = "WALKWISE_SEEDS"


class UsageError(Exception):
    """Bad flag combination or unresolvable input; maps to exit code 2."""


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Fully serialized run description; parse(emit(c)) == c.

    `m` keeps its raw string form ("3" or "4:8") so the round trip is
    trivially exact; commands parse it on use.
    """

    command: str
    seed: int = 0
    level: int = 10
    horizon: float = 1.0
    f: str | None = None
    mode: str = "ito"
    suite: str | None = None
    m: str | None = None
    paths: int | None = None
    threads: int | None = None
    alpha: float | None = None
    out: str = "-"

    def emit(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    @staticmethod
    def parse(text: str) -> "RunConfig":
        return RunConfig(**json.loads(text))


def registry_dir() -> str:
    return os.environ.get(SEED_DIR_ENV, "seeds")


def resolve_seed(spec: str) -> tuple[int, int | None]:
    """Resolve a --seed value to (starting seed, registry path count).

    Plain integers name themselves.  `@name` loads `name` (or
    `name.txt`) from the registry directory given by WALKWISE_SEEDS
    (default `seeds`): one integer per line, `#` comments ignored.
    Suites walk seeds consecutively, so a registry file describes a
    contiguous block; its first entry is the starting seed and its
    entry count is the default number of paths.
    """
    if not spec.startswith("@"):
        try:
            return int(spec), None
        except ValueError:
            raise UsageError(f"--seed must be an integer or @name, got {spec!r}")
    name = spec[1:]
    base = registry_dir()
    for cand in (os.path.join(base, name), os.path.join(base, name + ".txt")):
        if os.path.isfile(cand):
            entries = []
            with open(cand) as fh:
                for line in fh:
                    line = line.split("#", 1)[0].strip()
                    if line:
                        entries.append(int(line))
            if not entries:
                raise UsageError(f"seed registry file {cand} is empty")
            return entries[0], len(entries)
    raise UsageError(f"no seed registry entry {name!r} under {base}/")


def _parse_m(spec: str | None, default: list[int]) -> list[int]:
    if spec is None:
        return default
    try:
        if ":" in spec:
            lo, hi = spec.split(":", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise UsageError(f"--m range {spec!r} is empty")
            return list(range(lo, hi + 1))
        return [int(spec)]
    except ValueError:
        raise UsageError(f"--m must be an integer or lo:hi range, got {spec!r}")


def _single_m(spec: str | None, flag_name: str = "--m") -> int:
    values = _parse_m(spec, [])
    if len(values) != 1:
        raise UsageError(f"{flag_name} needs a single level here, got {spec!r}")
    return values[0]


def _write_text(cfg: RunConfig, text: str) -> None:
    if cfg.out == "-":
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w") as fh:
            fh.write(text)


def _write_json(cfg: RunConfig, payload: dict) -> None:
    payload = dict(payload)
    payload["config"] = json.loads(cfg.emit())
    _write_text(cfg, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def cmd_generate(cfg: RunConfig) -> int:
    """Write the level-n grid of W as CSV: t, value over [0, K]."""
    grid = build_to_level(cfg.seed, cfg.level, cfg.horizon, lean=True)
    n = cfg.level
    tq = 4.0**-n
    vq = 2.0**-n
    values = grid.values

    def rows():
        yield (f"# seed={cfg.seed}\n# level={n}\n# horizon={cfg.horizon!r}\n"
               f"# error_bound={error_bound(n)!r}\nt,value\n")
        chunk = 1 << 18
        for lo in range(0, values.size, chunk):
            part = values[lo : lo + chunk]
            yield "".join(f"{(lo + i) * tq!r},{int(v) * vq!r}\n"
                          for i, v in enumerate(part))

    if cfg.out == "-":
        for piece in rows():
            sys.stdout.write(piece)
    else:
        with open(cfg.out, "w") as fh:
            for piece in rows():
                fh.write(piece)
    return 0


def cmd_integrate(cfg: RunConfig) -> int:
    """Run ito or stratonovich sums over a range of coarse levels."""
    g = get_integrand(cfg.f)
    n = cfg.level
    m_list = _parse_m(cfg.m, default=list(range(max(0, n - 5), n + 1)))
    if m_list[-1] > n:
        raise UsageError(f"coarse level {m_list[-1]} exceeds --level {n}")
    K = cfg.horizon
    # The grid is built slightly past K so that every coarse level owns
    # floor(K 4^m) first-passage times; the endpoint lag has standard
    # deviation sqrt(2K/3) 2^-m, and 4.9 sigma of headroom makes a
    # shortfall (which would still raise cleanly) vanishingly rare.
    margin = 4.9 * math.sqrt(max(K, 1e-12)) * 2.0 ** (-min(m_list))
    grid = build_to_level(cfg.seed, n, K + margin)
    run = stratonovich_integral if cfg.mode == "strat" else ito_integral
    est = run(grid, g, K, m_list)
    _write_json(cfg, est.to_dict())
    if not all(est.identity_exact_per_level.values()):
        bad = [m for m, ok in est.identity_exact_per_level.items() if not ok]
        print(f"walkwise: discrete identity failed at levels {bad}", file=sys.stderr)
        return 3
    return 0


_SUITE_FLAGS = {
    "clt": {"seed": "seed", "paths": "paths", "alpha": "alpha"},
    "tails": {"seed": "seed", "paths": "paths"},
    "variation": {"seed": "seed", "level": "n", "horizon": "K", "m": "m_values"},
    "modulus": {"seed": "seed", "paths": "paths", "level": "n", "horizon": "K",
                "threads": "threads"},
    "nondiff": {"seed": "seed", "paths": "paths", "m": "m_values", "level": "n",
                "horizon": "K", "threads": "threads"},
    "convergence": {"seed": "seed", "paths": "paths", "m": "n_values",
                    "horizon": "K"},
    "lags": {"seed": "seed", "paths": "paths", "m": "m", "level": "n",
             "horizon": "K"},
    "twistlaw": {"seed": "seed", "paths": "paths", "m": "m_values",
                 "alpha": "alpha"},
}


def cmd_diagnose(cfg: RunConfig) -> int:
    """Run one statistical suite; exit 0 on pass, 1 on failure."""
    mapping = _SUITE_FLAGS[cfg.suite]
    kwargs: dict = {"seed": cfg.seed}
    if cfg.paths is not None and "paths" in mapping:
        kwargs["paths"] = cfg.paths
    if cfg.alpha is not None and "alpha" in mapping:
        kwargs["alpha"] = cfg.alpha
    if cfg.level is not None and "level" in mapping:
        kwargs[mapping["level"]] = cfg.level
    if cfg.horizon is not None and "horizon" in mapping:
        kwargs[mapping["horizon"]] = cfg.horizon
    if cfg.m is not None and "m" in mapping:
        target = mapping["m"]
        kwargs[target] = _single_m(cfg.m) if target == "m" else _parse_m(cfg.m, [])
    if "threads" in mapping:
        kwargs["threads"] = cfg.threads if cfg.threads else (os.cpu_count() or 1)
    report = SUITES[cfg.suite](**kwargs)
    _write_json(cfg, report.to_dict())
    return 0 if report.passed else 1


def cmd_embed(cfg: RunConfig) -> int:
    """Emit the level-m first-passage skeleton of a level-n grid."""
    m = _single_m(cfg.m)
    n = cfg.level
    if m > n:
        raise UsageError(f"--m {m} exceeds --level {n}")
    if m < 0:
        raise UsageError("--m must be nonnegative")
    grid = build_to_level(cfg.seed, n, cfg.horizon, lean=False, track_dists=False)
    emb = first_passage_times(grid, m)
    idx = emb.grid_index
    if m == n:
        ok = bool(np.array_equal(idx, np.arange(idx.size, dtype=np.int64)))
    else:
        comp = composed_stopping_times(grid.stack, m, n, emb.count)
        grid.stack.ensure_twisted(m, emb.count)
        coarse = grid.stack.sums(m)[: idx.size]
        ok = (bool(np.array_equal(comp, idx))
              and bool(np.array_equal(emb.nums, coarse)))
    tag = "exact" if ok else "FAILED"
    lines = [f"# seed={cfg.seed}", f"# level={n}", f"# m={m}",
             f"# horizon={cfg.horizon!r}", f"# crosscheck={tag}", "k,s_mk,value"]
    tq = 4.0**-n
    vq = 2.0**-m
    lines.extend(f"{k},{int(idx[k]) * tq!r},{int(emb.nums[k]) * vq!r}"
                 for k in range(idx.size))
    _write_text(cfg, "\n".join(lines) + "\n")
    if not ok:
        print("walkwise: embedding crosscheck failed", file=sys.stderr)
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="walkwise",
        description="Pathwise Wiener process construction, embedding, "
                    "stochastic integrals, and verification suites.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, level_default=10):
        sp.add_argument("--seed", default="0",
                        help="starting seed, or @name from the registry "
                             f"directory (${SEED_DIR_ENV}, default ./seeds)")
        sp.add_argument("--level", type=int, default=level_default,
                        help="construction level n")
        sp.add_argument("--horizon", type=float, default=1.0,
                        help="time horizon K")
        sp.add_argument("--out", default="-", help="output path, - for stdout")

    g = sub.add_parser("generate", help="write a Wiener grid as CSV")
    common(g)

    i = sub.add_parser("integrate", help="pathwise integrals over coarse levels")
    common(i, level_default=12)
    i.add_argument("--f", required=True,
                   help=f"integrand: {REGISTRY_HELP}")
    i.add_argument("--mode", choices=("ito", "strat"), default="ito")
    i.add_argument("--m", default=None,
                   help="coarse level or lo:hi range (default: the six "
                        "levels up to --level)")

    d = sub.add_parser("diagnose", help="run a verification suite")
    d.add_argument("--suite", required=True, choices=sorted(SUITES))
    d.add_argument("--seed", default="0",
                   help="starting seed, or @name from the registry "
                        f"directory (${SEED_DIR_ENV}, default ./seeds)")
    d.add_argument("--level", type=int, default=None, help="construction level n")
    d.add_argument("--horizon", type=float, default=None, help="time horizon K")
    d.add_argument("--m", default=None, help="level or lo:hi range for the suite")
    d.add_argument("--paths", type=int, default=None, help="number of seeds")
    d.add_argument("--threads", type=int, default=None,
                   help="worker threads over seeds (default: cpu count)")
    d.add_argument("--alpha", type=float, default=None,
                   help="significance override where the suite takes one")
    d.add_argument("--out", default="-", help="output path, - for stdout")

    e = sub.add_parser("embed", help="first-passage skeleton CSV")
    common(e)
    e.add_argument("--m", required=True, help="coarse level")

    return p


def config_from_args(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    seed, registry_count = resolve_seed(ns.seed)
    paths = getattr(ns, "paths", None)
    if paths is None:
        paths = registry_count
    return RunConfig(
        command=ns.command,
        seed=seed,
        level=getattr(ns, "level", 10),
        horizon=getattr(ns, "horizon", 1.0),
        f=getattr(ns, "f", None),
        mode=getattr(ns, "mode", "ito"),
        suite=getattr(ns, "suite", None),
        m=getattr(ns, "m", None),
        paths=paths,
        threads=getattr(ns, "threads", None),
        alpha=getattr(ns, "alpha", None),
        out=ns.out,
    )


def dispatch(cfg: RunConfig) -> int:
    commands = {"generate": cmd_generate, "integrate": cmd_integrate,
                "diagnose": cmd_diagnose, "embed": cmd_embed}
    try:
        return commands[cfg.command](cfg)
    except IntegrandError as exc:
        print(f"walkwise: {exc}\nregistered integrands: {REGISTRY_HELP}",
              file=sys.stderr)
        return 2
    except UsageError as exc:
        print(f"walkwise: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"walkwise: cannot write {getattr(exc, 'filename', cfg.out)}: "
              f"{exc.strerror or exc}", file=sys.stderr)
        return 2
    except WalkwiseError as exc:
        print(f"walkwise: {exc}", file=sys.stderr)
        return 3


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
    except UsageError as exc:
        print(f"walkwise: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
