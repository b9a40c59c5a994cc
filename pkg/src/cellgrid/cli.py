"""Batch experiment harness.

Subcommands: gen-topology, latency-sweep, teid-sweep, lsr-check, decode.
Every run takes a single JSON config document, writes its outputs plus a
manifest into --out, and is fully reproducible from that manifest.  Exit
codes: 0 success, 1 domain error, 2 usage error.  Set CELLGRID_LOG to
debug/info/warning to control verbosity.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import random
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__, model, sim
from .controller import compute_all_paths, switch_graph_from_network
from .errors import CellgridError
from .wire import (
    Opcode,
    PacketClass,
    WireError,
    classify_frame,
    decode_ucp,
    ipv4_to_str,
    mac_to_str,
    parse_stack,
)

log = logging.getLogger(__name__)

FORMAT_MANIFEST = "cellgrid-manifest/1"
FORMAT_LATENCY_SUMMARY = "cellgrid-latency-summary/1"
FORMAT_TEID_SUMMARY = "cellgrid-teid-summary/1"
FORMAT_LSR_REPORT = "cellgrid-lsr-report/1"

LATENCY_CSV_COLUMNS = ["topology_seed", "gnbs", "ratio", "l_p_us", "l_o_us", "gain"]
TEID_CSV_COLUMNS = [
    "switch_count",
    "ratio",
    "topologies",
    "teids",
    "queries",
    "mean_advertisement_us",
    "mean_retrieval_us",
]


def _setup_logging() -> None:
    level = os.environ.get("CELLGRID_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(message)s")


def _load_config(path: str) -> tuple[dict, str]:
    raw = Path(path).read_bytes()
    return json.loads(raw), hashlib.sha256(raw).hexdigest()


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _write_manifest(out: Path, subcommand: str, args, config_hash: str, seeds) -> None:
    _write_json(
        out / "manifest.json",
        {
            "format": FORMAT_MANIFEST,
            "subcommand": subcommand,
            "config_path": str(args.config),
            "config_sha256": config_hash,
            "seeds": seeds,
            "out": str(out),
            "tool_version": __version__,
        },
    )


def _ranges(doc: dict, key: str, default: tuple[int, int]) -> tuple[int, int]:
    value = doc.get(key, default)
    return (int(value[0]), int(value[1]))


def _topo_config(doc: dict, seed_override: int | None) -> model.TopoConfig:
    cfg = model.TopoConfig(
        num_switches=int(doc["num_switches"]),
        gnb_per_switch=int(doc["gnb_per_switch"]),
        max_ue_per_gnb=int(doc["max_ue_per_gnb"]),
        seed=int(doc.get("seed", 0)),
        link_latency_us=_ranges(doc, "link_latency_us", (100, 1000)),
        switch_proc_us=_ranges(doc, "switch_proc_us", (10, 50)),
        gnb_proc_us=_ranges(doc, "gnb_proc_us", (500, 1200)),
        upf_proc_us=_ranges(doc, "upf_proc_us", (300, 800)),
        amf_proc_us=_ranges(doc, "amf_proc_us", (300, 800)),
        enforce_caps=bool(doc.get("enforce_caps", True)),
    )
    if seed_override is not None:
        cfg.seed = seed_override
    return cfg


# --- gen-topology ------------------------------------------------------------------


def cmd_gen_topology(args) -> int:
    doc, config_hash = _load_config(args.config)
    cfg = _topo_config(doc, args.seed)
    net = model.generate_topology(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "topology.json").write_text(model.network_to_json_str(net))
    _write_manifest(out, "gen-topology", args, config_hash, [cfg.seed])
    print(out / "topology.json")
    return 0


# --- latency-sweep -----------------------------------------------------------------


def _sweep_config(doc: dict, seed_override: int | None) -> sim.SweepConfig:
    sweep = sim.SweepConfig(
        gnb_counts=[int(x) for x in doc.get("gnb_counts", [20, 60, 100, 140, 200])],
        ratios=[int(x) for x in doc.get("ratios", [2, 3, 4, 5])],
        pairs_per_topology=int(doc.get("pairs_per_topology", 25)),
        topologies_per_cell=int(doc.get("topologies_per_cell", 5)),
        max_ue_per_gnb=int(doc.get("max_ue_per_gnb", 3)),
        seed=int(doc.get("seed", 1)),
        link_latency_us=_ranges(doc, "link_latency_us", (100, 1000)),
        switch_proc_us=_ranges(doc, "switch_proc_us", (10, 50)),
        gnb_proc_us=_ranges(doc, "gnb_proc_us", (500, 1200)),
        upf_proc_us=_ranges(doc, "upf_proc_us", (300, 800)),
    )
    if seed_override is not None:
        sweep.seed = seed_override
    return sweep


def _latency_cell_worker(packed) -> list[sim.PairSample]:
    sweep, gnbs, ratio = packed
    return sim.run_latency_cell(sweep, gnbs, ratio)


def cmd_latency_sweep(args) -> int:
    doc, config_hash = _load_config(args.config)
    sweep = _sweep_config(doc, args.seed)
    cells = [(sweep, g, r) for g in sweep.gnb_counts for r in sweep.ratios]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            per_cell = list(pool.map(_latency_cell_worker, cells))
    else:
        per_cell = [_latency_cell_worker(c) for c in cells]
    samples = [s for cell in per_cell for s in cell]
    report = sim.summarize_cells(sweep, samples)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "pairs.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LATENCY_CSV_COLUMNS)
        for s in report.samples:
            writer.writerow([s.topology_seed, s.gnbs, s.ratio, s.l_p_us, s.l_o_us, f"{s.gain:.6f}"])
    _write_json(
        out / "summary.json",
        {
            "format": FORMAT_LATENCY_SUMMARY,
            "grand_mean_gain": round(report.grand_mean_gain, 6),
            "cells": [
                {
                    "gnbs": c.gnbs,
                    "ratio": c.ratio,
                    "pairs": c.pairs,
                    "mean_gain": round(c.mean_gain, 6),
                    "p10_gain": round(c.p10_gain, 6),
                    "p50_gain": round(c.p50_gain, 6),
                    "p90_gain": round(c.p90_gain, 6),
                    "mean_l_p_us": round(c.mean_l_p_us, 1),
                    "mean_l_o_us": round(c.mean_l_o_us, 1),
                }
                for c in report.cells
            ],
        },
    )
    _write_manifest(out, "latency-sweep", args, config_hash, [sweep.seed])
    print(f"grand mean gain {report.grand_mean_gain:.4f} over {len(report.cells)} cells")
    return 0


# --- teid-sweep --------------------------------------------------------------------


def _teid_cell_worker(packed) -> dict:
    doc, switch_count, seed = packed
    ratio = int(doc.get("gnb_per_switch", 5))
    topologies = int(doc.get("topologies_per_cell", 3))
    births_per_topology = int(doc.get("births_per_topology", 5))
    queries = int(doc.get("queries_per_teid", 2))
    adverts: list[int] = []
    retrievals: list[int] = []
    for rep in range(topologies):
        topo_seed = sim.derive_seed(seed, "teid-topo", switch_count, rep)
        cfg = model.TopoConfig(
            num_switches=switch_count,
            gnb_per_switch=ratio,
            max_ue_per_gnb=int(doc.get("max_ue_per_gnb", 5)),
            seed=topo_seed,
            enforce_caps=bool(doc.get("enforce_caps", True)),
        )
        net = model.generate_topology(cfg)
        gnbs = [g.id for g in net.by_kind(model.NodeKind.GNB)]
        rng = random.Random(sim.derive_seed(seed, "teid-births", switch_count, rep))
        births = [
            sim.TeidBirth(time_us=0, teid=0x1000 + i, gnb_id=rng.choice(gnbs))
            for i in range(births_per_topology)
        ]
        report = sim.run_teid_announcement(net, births, queries_per_teid=queries, seed=topo_seed)
        adverts.extend(report.advertisement_us.values())
        retrievals.extend(r.duration_us for r in report.retrievals)
    return {
        "switch_count": switch_count,
        "ratio": ratio,
        "topologies": topologies,
        "teids": len(adverts),
        "queries": len(retrievals),
        "mean_advertisement_us": statistics.fmean(adverts) if adverts else 0.0,
        "mean_retrieval_us": statistics.fmean(retrievals) if retrievals else 0.0,
    }


def cmd_teid_sweep(args) -> int:
    doc, config_hash = _load_config(args.config)
    seed = args.seed if args.seed is not None else int(doc.get("seed", 1))
    switch_counts = [int(x) for x in doc.get("switch_counts", [5, 10, 20])]
    cells = [(doc, s, seed) for s in switch_counts]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_teid_cell_worker, cells))
    else:
        rows = [_teid_cell_worker(c) for c in cells]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "teid.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TEID_CSV_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row["switch_count"],
                    row["ratio"],
                    row["topologies"],
                    row["teids"],
                    row["queries"],
                    f"{row['mean_advertisement_us']:.1f}",
                    f"{row['mean_retrieval_us']:.1f}",
                ]
            )
    adverts = [row["mean_advertisement_us"] for row in rows]
    retrievals = [row["mean_retrieval_us"] for row in rows]
    _write_json(
        out / "summary.json",
        {
            "format": FORMAT_TEID_SUMMARY,
            "switch_counts": switch_counts,
            "mean_advertisement_us": [round(a, 1) for a in adverts],
            "mean_retrieval_us": [round(r, 1) for r in retrievals],
            "advertisement_monotone_nondecreasing": all(
                a <= b for a, b in zip(adverts, adverts[1:])
            ),
            "retrieval_monotone_nondecreasing": all(
                a <= b for a, b in zip(retrievals, retrievals[1:])
            ),
        },
    )
    _write_manifest(out, "teid-sweep", args, config_hash, [seed])
    print(f"teid sweep over switch counts {switch_counts} done")
    return 0


# --- lsr-check ---------------------------------------------------------------------


def cmd_lsr_check(args) -> int:
    doc, config_hash = _load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if "topology_file" in doc:
        nets = [model.network_from_json_str(Path(doc["topology_file"]).read_text())]
        seeds = ["file"]
    else:
        base_seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
        seeds = [sim.derive_seed(base_seed, "lsr", i) for i in range(int(doc.get("count", 5)))]
        nets = [model.generate_topology(_topo_config(doc, s)) for s in seeds]
    checks = []
    for seed, net in zip(seeds, nets):
        graph = switch_graph_from_network(net)
        result = sim.run_lsr(graph)
        central = compute_all_paths(graph)
        match = all(
            result.tables[sw].get(dst) == central[(sw, dst)]
            for sw in graph.nodes
            for dst in graph.nodes
        )
        checks.append(
            {
                "seed": seed,
                "switches": len(graph.nodes),
                "convergence_time_us": result.convergence_time_us,
                "messages": result.messages_delivered,
                "tables_match_controller": match,
            }
        )
    ok = all(c["tables_match_controller"] for c in checks)
    _write_json(out / "lsr_report.json", {"format": FORMAT_LSR_REPORT, "checks": checks, "ok": ok})
    _write_manifest(out, "lsr-check", args, config_hash, seeds)
    print("lsr-check:", "ok" if ok else "MISMATCH")
    return 0 if ok else 1


# --- decode ------------------------------------------------------------------------


def _dump_ucp(frame: bytes) -> None:
    msg = decode_ucp(frame)
    op = Opcode(msg.cmi.raw)
    print("class: UCP")
    print(f"cmi: {msg.cmi.raw:#04x} op_type={msg.cmi.op_type:03b} op_id={msg.cmi.op_id:05b} ({op.name})")
    print(f"switch_id: {msg.switch_id}")
    print(f"payload: {msg.payload}")


def _dump_parsed(cls: PacketClass, frame: bytes) -> None:
    headers = parse_stack(frame)
    print(f"class: {cls.name}")
    eth = headers.ethernet
    print(f"ethernet: dst={mac_to_str(eth.dst)} src={mac_to_str(eth.src)} type={eth.ethertype:#06x}")
    if headers.ipv4:
        ip = headers.ipv4
        print(f"ipv4: {ipv4_to_str(ip.src)} -> {ipv4_to_str(ip.dst)} proto={ip.protocol}")
    if headers.udp:
        print(f"udp: {headers.udp.src} -> {headers.udp.dst}")
    if headers.sctp:
        print(f"sctp: {headers.sctp.src} -> {headers.sctp.dst}")
    if headers.gtp:
        g = headers.gtp
        teid = f"{g.teid:#x}" if g.teid is not None else "absent"
        print(
            f"gtp: version={g.version} type={g.message_type} length={g.message_length} "
            f"teid={teid} seq={g.sequence_number}"
        )
    if headers.inner_ipv4:
        ip = headers.inner_ipv4
        print(f"inner ipv4: {ipv4_to_str(ip.src)} -> {ipv4_to_str(ip.dst)} proto={ip.protocol}")
    if headers.inner_tcp:
        print(f"inner tcp: {headers.inner_tcp.src} -> {headers.inner_tcp.dst}")
    if headers.inner_udp:
        print(f"inner udp: {headers.inner_udp.src} -> {headers.inner_udp.dst}")
    if headers.http_heartbeat is not None:
        print(f"heartbeat: sensor={headers.heartbeat_sensor_id}")
    if headers.ngap_ue_id is not None:
        print(f"ngap initial-ue: id={headers.ngap_ue_id:#x}")
    if headers.payload:
        print(f"payload: {len(headers.payload)} octets")


def cmd_decode(args) -> int:
    try:
        frame = bytes.fromhex(args.hex)
    except ValueError:
        print("error: argument is not valid hex", file=sys.stderr)
        return 1
    cls = classify_frame(frame)
    if cls is PacketClass.UCP:
        _dump_ucp(frame)
    else:
        _dump_parsed(cls, frame)
    return 0


# --- entry point -------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cellgrid", description=__doc__)
    parser.add_argument("--version", action="version", version=f"cellgrid {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_run_flags(p, needs_out=True):
        p.add_argument("--config", required=True, help="JSON config document")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    p = sub.add_parser("gen-topology", help="generate one random topology JSON")
    add_run_flags(p)
    p.set_defaults(func=cmd_gen_topology)

    p = sub.add_parser("latency-sweep", help="pairwise latency-gain grid experiment")
    add_run_flags(p)
    p.set_defaults(func=cmd_latency_sweep)

    p = sub.add_parser("teid-sweep", help="tunnel-id announcement/retrieval timing sweep")
    add_run_flags(p)
    p.set_defaults(func=cmd_teid_sweep)

    p = sub.add_parser("lsr-check", help="verify flooded routing equals the controller")
    add_run_flags(p)
    p.set_defaults(func=cmd_lsr_check)

    p = sub.add_parser("decode", help="decode one hex frame to a readable dump")
    p.add_argument("hex", help="frame as a hex string")
    p.set_defaults(func=cmd_decode)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CellgridError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
