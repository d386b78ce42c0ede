"""Command-line front end.

Configuration is an INI file.  Every section and key is listed in
``DEFAULTS``; unknown ones are rejected.  Command-line flags override the
file, and the fully resolved configuration is written to the run
manifest, from which ``fadingmac replay`` reproduces the same CSV files.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime as _dt
import hashlib
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from . import scenarios as sc
from .analytic import BackoffParams, RetryLimits
from .geometry import CaptureParams
from .macsim import Connection, DcfConfig, FloodSource, Scenario, run
from .propagation import PropagationParams


class ConfigError(ValueError):
    pass


def _floats(text):
    return tuple(float(v) for v in re.split(r"[,\s]+", text.strip()) if v)


def _ints(text):
    return tuple(int(v) for v in re.split(r"[,\s]+", text.strip()) if v)


def _bools(text):
    return tuple(_bool(v) for v in re.split(r"[,\s]+", text.strip()) if v)


def _bool(text):
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text):
    return None if str(text).strip().lower() in ("", "none") else float(text)


def _str(text):
    return str(text).strip()


# section -> key -> (parser, default as config text)
DEFAULTS = {
    "run": {
        "seed": (int, "0"),
        "replications": (int, "10"),
        "out": (_str, "results"),
        "trace": (_bool, "false"),
        "workers": (int, "1"),
    },
    "propagation": {
        "beta": (float, "3"),
        "sigma_db": (float, "4"),
        "d0_m": (float, "1"),
        "ideal_range_m": (float, "250"),
        "p_th_dbm": (float, "-64"),
    },
    "dcf": {
        "srl": (int, "7"),
        "lrl": (int, "4"),
        "cw_min": (int, "31"),
        "cw_max": (int, "1023"),
        "backoff_enabled": (_bool, "true"),
        "rts_cts_enabled": (_bool, "false"),
        "slot_us": (float, "20"),
        "sifs_us": (float, "10"),
        "difs_us": (float, "50"),
        "data_rate_bps": (float, "2000000"),
        "control_rate_bps": (float, "1000000"),
        "phy_header_bits": (int, "192"),
        "data_header_bits": (int, "224"),
        "rts_bits": (int, "160"),
        "cts_bits": (int, "112"),
        "ack_bits": (int, "112"),
        "cs_threshold_dbm": (_opt_float, "none"),
        "cs_range_factor": (float, "2.2"),
        "capture_threshold_db": (_opt_float, "10"),
        "queue_capacity": (int, "50"),
        "reset_cw_on_drop": (_bool, "true"),
    },
    "scenario": {
        "nodes": (_str, "0:0,0; 1:220,0"),
        "connections": (_str, "0>1:500:sat"),
        "floods": (_str, ""),
        "bernoulli_drop": (_opt_float, "none"),
        "duration_s": (float, "60"),
        "warmup_fraction": (float, "0.1"),
        "flood_jitter_s": (float, "0.01"),
    },
    "power-trace": {
        "distance_m": (float, "220"),
        "duration_s": (float, "10"),
        "packet_interval_s": (float, "0.01"),
    },
    "delivery": {
        "distances": (_floats, " ".join(str(d) for d in range(10, 401, 10))),
        "n_samples": (int, "10000"),
    },
    "packet-delivery": {"p_points": (int, "101")},
    "backoff-curve": {"p_points": (int, "101")},
    "delay": {
        "distances": (_floats, "150 200 220 240"),
        "rate_pps": (float, "10"),
        "packet_bytes": (int, "500"),
        "duration_s": (float, "60"),
    },
    "capacity": {
        "distances": (_floats, " ".join(str(d) for d in range(50, 241, 10))),
        "packet_bytes": (int, "500"),
        "duration_s": (float, "60"),
    },
    "unfairness": {
        "fixed_distance_m": (float, "150"),
        "varied_distances": (_floats, "150 180 200 220"),
        "packet_sizes": (_ints, "500 1500"),
        "rts_cts": (_bools, "false true"),
        "backoff_enabled": (_bools, "true false"),
        "source_separation_m": (float, "20"),
        "duration_s": (float, "60"),
    },
    "hop-order": {
        "strong_m": (float, "100"),
        "weak_m": (float, "220"),
        "packet_bytes": (int, "500"),
        "duration_s": (float, "60"),
    },
    "flooding": {
        "node_counts": (_ints, "25 50 100 150 200"),
        "drop_probs": (_floats, "0 0.1 0.2 0.3 0.4 0.5"),
        "area_m": (float, "1000"),
        "packet_bytes": (int, "64"),
        "channel": (_str, "bernoulli"),
        "duration_s": (float, "5"),
    },
    "capture-geometry": {
        "capture_threshold": (float, "10"),
        "n": (float, "4"),
        "tx_range_m": (float, "250"),
        "cs_range_factor": (float, "2.2"),
        "d_sr_grid": (_floats, " ".join(str(d) for d in range(10, 251, 10))),
    },
    "validate": {
        "packets": (int, "10000"),
        "link_ratios": (_floats, "0.5 0.66 0.8 0.95"),
    },
}


@dataclass
class Config:
    """Resolved configuration: typed values plus their config-text form."""

    values: dict
    text: dict
    scenario: Scenario
    dcf: DcfConfig
    propagation: PropagationParams

    def section(self, name):
        return self.values[name]

    @property
    def run(self):
        return self.values["run"]


def _key_lines(text: str) -> dict:
    lines, section = {}, None
    for no, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            continue
        m = re.match(r"\s*([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            lines[(section, m.group(1).strip().lower())] = no
    return lines


def _parse_nodes(text):
    nodes = []
    for item in filter(None, (s.strip() for s in text.split(";"))):
        nid, pos = item.split(":")
        x, y = pos.split(",")
        nodes.append((int(nid), float(x), float(y)))
    return tuple(nodes)


def _parse_connections(text):
    conns = []
    for item in filter(None, (s.strip() for s in text.split(";"))):
        parts = item.split(":")
        path = tuple(int(v) for v in parts[0].split(">"))
        size = int(parts[1]) if len(parts) > 1 else 500
        rate = parts[2].strip() if len(parts) > 2 else "sat"
        rate_pps = None if rate in ("sat", "saturated") else float(rate)
        conns.append(Connection(path[0], path[-1], size, rate_pps,
                                path=path if len(path) > 2 else None))
    return tuple(conns)


def _parse_floods(text):
    floods = []
    for item in filter(None, (s.strip() for s in text.split(";"))):
        parts = item.split(":")
        floods.append(FloodSource(int(parts[0]),
                                  float(parts[1]) if len(parts) > 1 else 0.0,
                                  int(parts[2]) if len(parts) > 2 else 64))
    return tuple(floods)


def resolve(text_values: dict) -> Config:
    """Type-convert and validate a section->key->text mapping."""
    values = {}
    for section, keys in DEFAULTS.items():
        values[section] = {}
        for key, (conv, _) in keys.items():
            raw = text_values[section][key]
            try:
                values[section][key] = conv(raw)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"[{section}] {key} = {raw!r}: {e}") from None

    def build(what, fn):
        try:
            return fn()
        except ValueError as e:
            raise ConfigError(f"invalid {what}: {e}") from None

    p = values["propagation"]
    prop = build("[propagation]", lambda: PropagationParams(**p))
    d = values["dcf"]
    dcf = build("[dcf]", lambda: DcfConfig(
        retry=RetryLimits(d["srl"], d["lrl"], rts_cts=d["rts_cts_enabled"]),
        backoff=BackoffParams(d["cw_min"], d["cw_max"]),
        **{k: v for k, v in d.items() if k not in ("srl", "lrl", "cw_min", "cw_max")},
    ))
    build("[dcf] cs_threshold_dbm", lambda: dcf.resolved_cs_threshold_dbm(prop))
    r = values["run"]
    if r["replications"] < 1:
        raise ConfigError("invalid [run]: replications must be >= 1")
    if r["workers"] < 1:
        raise ConfigError("invalid [run]: workers must be >= 1")
    s = values["scenario"]

    def make_scenario():
        sce = Scenario(
            nodes=_parse_nodes(s["nodes"]),
            connections=_parse_connections(s["connections"]),
            floods=_parse_floods(s["floods"]),
            propagation=prop,
            bernoulli_drop=s["bernoulli_drop"],
            duration_s=s["duration_s"],
            warmup_fraction=s["warmup_fraction"],
            flood_jitter_s=s["flood_jitter_s"],
            replications=r["replications"],
            base_seed=r["seed"],
        )
        sce.validate()
        return sce

    scenario = build("[scenario]", make_scenario)
    if values["flooding"]["channel"] not in ("bernoulli", "fading"):
        raise ConfigError("invalid [flooding]: channel must be 'bernoulli' or 'fading'")
    text = {sec: dict(keys) for sec, keys in text_values.items()}
    return Config(values, text, scenario, dcf, prop)


def _default_text():
    return {sec: {k: dv for k, (_, dv) in keys.items()} for sec, keys in DEFAULTS.items()}


def parse_config(path=None, overrides=()) -> Config:
    """Read an INI file (or none), apply ``section.key=value`` overrides."""
    text_values = _default_text()
    if path is not None:
        try:
            content = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
        cp = configparser.ConfigParser(interpolation=None, strict=True)
        try:
            cp.read_string(content, source=str(path))
        except configparser.Error as e:
            line = getattr(e, "lineno", None)
            if line is None and getattr(e, "errors", None):
                line = e.errors[0][0]
            msg = str(e).splitlines()[0]
            where = f"line {line}: " if line else ""
            raise ConfigError(f"{path}: {where}parse error: {msg}") from None
        lines = _key_lines(content)
        for section in cp.sections():
            if section not in DEFAULTS:
                raise ConfigError(
                    f"{path}: unknown section [{section}]; known: {', '.join(DEFAULTS)}")
            for key, raw in cp.items(section):
                if key not in DEFAULTS[section]:
                    line = lines.get((section, key))
                    where = f"line {line}: " if line else ""
                    raise ConfigError(f"{path}: {where}unknown key {key!r} in [{section}]")
                conv = DEFAULTS[section][key][0]
                try:
                    conv(raw)
                except (TypeError, ValueError) as e:
                    line = lines.get((section, key))
                    raise ConfigError(f"{path}: line {line}: [{section}] {key}: {e}") from None
                text_values[section][key] = raw
    for item in overrides:
        section, key, raw = _split_override(item)
        text_values[section][key] = raw
    return resolve(text_values)


def _split_override(item):
    m = re.fullmatch(r"\s*([\w-]+)\.(\w+)\s*=(.*)", item)
    if not m:
        raise ConfigError(f"override {item!r} is not of the form section.key=value")
    section, key, raw = m.group(1), m.group(2), m.group(3).strip()
    if section not in DEFAULTS or key not in DEFAULTS[section]:
        raise ConfigError(f"override {item!r} names an unknown setting")
    return section, key, raw


def config_to_ini(cfg: Config) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    for sec, keys in cfg.text.items():
        cp[sec] = {k: str(v) for k, v in keys.items()}
    import io

    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


# -- output --------------------------------------------------------------------


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return int(v)
    return v


def emit_csv(table: sc.Table, path) -> None:
    """Write ``table`` as UTF-8 CSV; floats use shortest round-trip repr."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(table.columns)
            for row in table.rows:
                if len(row) != len(table.columns):
                    raise ValueError(
                        f"row has {len(row)} cells, header has {len(table.columns)}")
                w.writerow([_cell(v) for v in row])
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror or e}") from e


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if hasattr(obj, "item"):
        return obj.item()
    return obj


# -- experiments ---------------------------------------------------------------


def _p_grid(n):
    return [k / (n - 1) for k in range(n)] if n > 1 else [1.0]


def _exp_power_trace(cfg):
    e = cfg.section("power-trace")
    return sc.exp_power_trace(e["distance_m"], e["duration_s"], cfg.run["seed"],
                              cfg.propagation, e["packet_interval_s"])


def _exp_delivery(cfg):
    e = cfg.section("delivery")
    return sc.exp_delivery_vs_distance(e["distances"], e["n_samples"], cfg.run["seed"],
                                       cfg.propagation)


def _exp_packet_delivery(cfg):
    return sc.exp_packet_delivery_curves(_p_grid(cfg.section("packet-delivery")["p_points"]))


def _exp_backoff(cfg):
    return sc.exp_backoff_curve(_p_grid(cfg.section("backoff-curve")["p_points"]),
                                cfg.dcf.backoff, cfg.dcf.retry.lrl)


def _common(cfg):
    return dict(config=cfg.dcf, propagation=cfg.propagation,
                replications=cfg.run["replications"], base_seed=cfg.run["seed"],
                workers=cfg.run["workers"])


def _exp_delay(cfg):
    e = cfg.section("delay")
    return sc.exp_delay(e["distances"], duration_s=e["duration_s"], rate_pps=e["rate_pps"],
                        packet_bytes=e["packet_bytes"], **_common(cfg))


def _exp_capacity(cfg):
    e = cfg.section("capacity")
    return sc.exp_capacity(e["distances"], duration_s=e["duration_s"],
                           packet_bytes=e["packet_bytes"], **_common(cfg))


def _exp_unfairness(cfg):
    e = cfg.section("unfairness")
    tables, checks, seeds, meta = {}, [], [], {}
    summary_rows, raw_rows = [], []
    for size in e["packet_sizes"]:
        for rts in e["rts_cts"]:
            for bo in e["backoff_enabled"]:
                res = sc.exp_unfairness(
                    e["fixed_distance_m"], e["varied_distances"], size, rts, bo,
                    duration_s=e["duration_s"], source_sep_m=e["source_separation_m"],
                    **_common(cfg))
                tag = f"{size}B {'rts' if rts else 'basic'} backoff={'on' if bo else 'off'}"
                prefix = (size, int(rts), int(bo))
                summary_rows += [prefix + r for r in res.tables["unfairness"].rows]
                raw_rows += [prefix + r for r in res.tables["unfairness_raw"].rows]
                checks += [sc.Check(f"{tag}: {c.name}", c.passed, c.detail) for c in res.checks]
                seeds += res.seeds
                meta[tag] = res.metadata
    head = ["packet_bytes", "rts_cts", "backoff_enabled"]
    tables["unfairness"] = sc.Table(head + res.tables["unfairness"].columns, summary_rows)
    tables["unfairness_raw"] = sc.Table(head + res.tables["unfairness_raw"].columns, raw_rows)
    return sc.ExperimentResult("unfairness", tables, meta, checks, seeds)


def _exp_hop_order(cfg):
    e = cfg.section("hop-order")
    return sc.exp_hop_order(e["strong_m"], e["weak_m"], packet_bytes=e["packet_bytes"],
                            duration_s=e["duration_s"], **_common(cfg))


def _exp_flooding(cfg):
    e = cfg.section("flooding")
    return sc.exp_flooding(e["node_counts"], e["drop_probs"], e["area_m"],
                           packet_bytes=e["packet_bytes"], fading=e["channel"] == "fading",
                           duration_s=e["duration_s"], **_common(cfg))


def _exp_capture_geometry(cfg):
    e = cfg.section("capture-geometry")
    params = CaptureParams(e["capture_threshold"], e["n"], e["tx_range_m"], e["cs_range_factor"])
    return sc.exp_capture_geometry(params, e["d_sr_grid"])


def _exp_validate(cfg):
    e = cfg.section("validate")
    return sc.exp_validate(cfg.dcf, cfg.propagation, cfg.run["seed"], e["packets"],
                           e["link_ratios"], cfg.run["workers"])


def _exp_simulate(cfg):
    scen = cfg.scenario
    rows, trace_rows, seeds = [], [], []
    for r in range(scen.replications):
        seed = sc.derive_seed(scen.base_seed, "simulate", r)
        seeds.append(seed)
        want_trace = cfg.run["trace"] and r == 0
        out = run(scen, cfg.dcf, seed, trace=want_trace)
        m, tr = out if want_trace else (out, None)
        if tr is not None:
            trace_rows = tr
        for k, c in enumerate(m.connections):
            delay = sum(c.delays_s) / len(c.delays_s) if c.delays_s else None
            rows.append((r, seed, k, c.offered, c.delivered, c.dropped_retry, c.dropped_queue,
                         c.queued, c.mac_acked, c.mac_failed,
                         c.delivered_after(m.warmup_s) * c.payload_bytes * 8
                         / (m.duration_s - m.warmup_s), delay))
    tables = {"simulate": sc.Table(
        ["replication", "seed", "connection", "offered", "delivered", "dropped_retry",
         "dropped_queue", "queued", "mac_acked", "mac_failed", "throughput_bps",
         "mean_delay_s"], rows)}
    if cfg.run["trace"]:
        tables["trace"] = sc.Table(["time_s", "node", "event", "frame_kind", "power_dbm"],
                                   trace_rows)
    return sc.ExperimentResult("simulate", tables, {}, [], seeds)


EXPERIMENTS = {
    "power_trace": ("power-trace", _exp_power_trace),
    "delivery_vs_distance": ("delivery", _exp_delivery),
    "packet_delivery": ("packet-delivery", _exp_packet_delivery),
    "backoff_curve": ("backoff-curve", _exp_backoff),
    "delay": ("delay", _exp_delay),
    "capacity": ("capacity", _exp_capacity),
    "unfairness": ("unfairness", _exp_unfairness),
    "hop_order": ("hop-order", _exp_hop_order),
    "flooding": ("flooding", _exp_flooding),
    "capture_geometry": ("capture-geometry", _exp_capture_geometry),
    "validate": ("validate", _exp_validate),
    "simulate": ("simulate", _exp_simulate),
}
COMMANDS = {cmd: name for name, (cmd, _) in EXPERIMENTS.items()}


class UnknownExperiment(KeyError):
    def __str__(self):
        return (f"unknown experiment {self.args[0]!r}; available: "
                + ", ".join(sorted(EXPERIMENTS)))


@dataclass
class RunManifest:
    tool: str
    version: str
    experiment: str
    config: dict
    seeds: list
    started: str
    finished: str
    outputs: list
    digest: str
    checks: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.__dict__), indent=2, sort_keys=True) + "\n"


def _combined_digest(outputs):
    h = hashlib.sha256()
    for o in sorted(outputs, key=lambda o: o["file"]):
        h.update(f"{o['file']}:{o['sha256']}\n".encode())
    return h.hexdigest()


def run_experiment(name: str, config: Config, out_dir) -> RunManifest:
    """Run a registered experiment and write its CSVs plus ``<name>_manifest.json``."""
    name = COMMANDS.get(name, name)
    if name not in EXPERIMENTS:
        raise UnknownExperiment(name)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    result = EXPERIMENTS[name][1](config)
    outputs = []
    for tname, table in result.tables.items():
        path = out / f"{tname}.csv"
        emit_csv(table, path)
        outputs.append({"file": path.name, "sha256": _sha256(path), "rows": len(table.rows)})
    finished = _dt.datetime.now(_dt.timezone.utc).isoformat()
    manifest = RunManifest(
        tool="fadingmac",
        version=__version__,
        experiment=name,
        config=config.text,
        seeds=list(result.seeds),
        started=started,
        finished=finished,
        outputs=outputs,
        digest=_combined_digest(outputs),
        checks=[{"name": c.name, "passed": c.passed, "detail": c.detail} for c in result.checks],
        metadata=result.metadata,
    )
    (out / f"{name}_manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return manifest


def replay(manifest_path, out_dir) -> tuple[RunManifest, list]:
    """Re-run a manifest; returns the new manifest and mismatching files."""
    data = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    text_values = _default_text()
    for sec, keys in data["config"].items():
        for k, v in keys.items():
            if sec not in text_values or k not in text_values[sec]:
                raise ConfigError(f"manifest names unknown setting [{sec}] {k}")
            text_values[sec][k] = v
    cfg = resolve(text_values)
    new = run_experiment(data["experiment"], cfg, out_dir)
    old = {o["file"]: o["sha256"] for o in data["outputs"]}
    fresh = {o["file"]: o["sha256"] for o in new.outputs}
    mismatched = sorted(f for f in old.keys() | fresh.keys() if old.get(f) != fresh.get(f))
    return new, mismatched


# -- entry point ---------------------------------------------------------------


def _parser():
    p = argparse.ArgumentParser(
        prog="fadingmac",
        description="802.11 MAC behaviour under log-normal fading: models and experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for cmd in sorted(COMMANDS):
        s = sub.add_parser(cmd, help=f"run the {COMMANDS[cmd]} experiment")
        s.add_argument("--config", help="INI configuration file")
        s.add_argument("--seed", type=int, help="base seed ([run] seed)")
        s.add_argument("--out", help="output directory ([run] out)")
        s.add_argument("--replications", type=int, help="replications per point ([run] replications)")
        s.add_argument("--workers", type=int, help="parallel worker processes ([run] workers)")
        s.add_argument("--trace", action="store_true", default=None,
                       help="write a per-event trace CSV for 'simulate' ([run] trace)")
        s.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override any configuration key")
    r = sub.add_parser("replay", help="re-run a manifest and compare output digests")
    r.add_argument("manifest")
    r.add_argument("--out", required=True)
    sub.add_parser("list", help="list registered experiments")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "list":
            for name, (cmd, _) in sorted(EXPERIMENTS.items()):
                print(f"{cmd:18s} {name}")
            return 0
        if args.command == "replay":
            new, bad = replay(args.manifest, args.out)
            if bad:
                print("digest mismatch: " + ", ".join(bad), file=sys.stderr)
                return 1
            print(f"reproduced {len(new.outputs)} file(s), digest {new.digest}")
            return 0
        overrides = list(args.set)
        for flag, key in (("seed", "seed"), ("out", "out"), ("replications", "replications"),
                          ("workers", "workers"), ("trace", "trace")):
            v = getattr(args, flag)
            if v is not None:
                overrides.append(f"run.{key}={v}")
        cfg = parse_config(args.config, overrides)
        manifest = run_experiment(args.command, cfg, cfg.run["out"])
    except (ConfigError, UnknownExperiment, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    for o in manifest.outputs:
        print(f"wrote {os.path.join(cfg.run['out'], o['file'])} ({o['rows']} rows)")
    failed = [c for c in manifest.checks if not c["passed"]]
    for c in manifest.checks:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"[{status}] {c['name']}" + (f" -- {c['detail']}" if c["detail"] else ""))
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
