#!/usr/bin/env python3
"""Regenerate derived fixtures: the 500-line OpenSSH sample, the benchmark
dataset (expected outputs executed against the shipped corpora), the canned
generator mappings, the stub endpoint behavior, and the golden reports.

Everything is seeded; rerunning must be byte-identical.
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from logqlite.config import RunConfig, load_stores  # noqa: E402
from logqlite.engine import EvalContext, execute, result_to_json  # noqa: E402
from logqlite.cli import prompt_context  # noqa: E402
from logqlite.gateway import build_prompt, canned_generator, echo_generator  # noqa: E402
from logqlite.harness import compare_runs, evaluate_run, load_dataset, render_report  # noqa: E402

FIX = ROOT / "fixtures"

# ---------------------------------------------------------------------------
# 500-line OpenSSH sample (ingest stress fixture)

MESSAGES = [
    ("LabSZ", "Accepted password for fztu from 119.4.203.64 port {p} ssh2"),
    ("LabSZ", "Failed password for invalid user admin from 185.190.58.151 port {p} ssh2"),
    ("LabSZ", "PAM service(sshd) ignoring max retries; 6 > 3"),
    ("LabSZ-tenant-5", "Did not receive identification string from 212.47.254.145"),
    ("LabSZ-tenant-5", "pam_unix(sshd:session): session opened for user webadmin by (uid=0)"),
    ("LabSZ-edge-1", "Connection closed by 212.83.176.1 [preauth]"),
    ("LabSZ-edge-1", "Received disconnect from 103.99.0.122: 11: Bye Bye [preauth]"),
]
MONTH_DAYS = [("Dec", d) for d in range(8, 12)]


def gen_openssh_500() -> None:
    rng = random.Random(20250102)
    out = []
    minute = 0
    for i in range(500):
        minute += rng.randint(1, 3)
        month, day = MONTH_DAYS[minute // 1440 % len(MONTH_DAYS)]
        hh, mm, ss = (minute // 60) % 24, minute % 60, rng.randint(0, 59)
        ts = f"{month} {day:2d} {hh:02d}:{mm:02d}:{ss:02d}"
        if i % 97 == 5:
            # matches the template shape but the month is garbage: rejected
            out.append(f"Xxx {day:2d} {hh:02d}:{mm:02d}:{ss:02d} LabSZ sshd[999]: bad clock line")
            continue
        if i % 31 == 7:
            # no sshd[pid] prefix: falls through every template
            out.append(f"{ts} LabSZ kernel: last message repeated {rng.randint(2, 9)} times")
            continue
        host, message = MESSAGES[rng.randrange(len(MESSAGES))]
        pid = rng.randint(20000, 29999)
        out.append(f"{ts} {host} sshd[{pid}]: {message.format(p=rng.randint(30000, 60000))}")
    (FIX / "openssh_500" / "openssh_500.log").write_text("\n".join(out) + "\n", encoding="utf-8")
    (FIX / "openssh_500" / "openssh.templates").write_text(
        (FIX / "corpora" / "sshmini" / "openssh.templates").read_text(encoding="utf-8"),
        encoding="utf-8",
    )
    manifest = {
        "application": "openssh",
        "files": ["openssh_500.log"],
        "templates": "openssh.templates",
        "default_labels": {"application": "openssh", "region": "eu-west"},
        "anchor": "2025-01-02T03:04:05Z",
    }
    (FIX / "openssh_500" / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# Benchmark dataset

TUPLES = [
    # (id, corpus, use_case, type, nl, query, vars)
    (
        "ssh-m1", "openssh", "Brute Force Attempts", "METRIC",
        "How many times did PAM ignore max retries in the last 24 hours for openssh-eu-west?",
        'sum(count_over_time({application="openssh"} |= "PAM service(sshd) ignoring max retries" [24h]))',
        {},
    ),
    (
        "ssh-m2", "openssh", "User Session Analysis", "METRIC",
        "How many sessions were opened on each host over the past day?",
        'sum by (hostname) (count_over_time({application="openssh"} |= "session opened for" [1d]))',
        {},
    ),
    (
        "ssh-m3", "openssh", "Authentication Failures", "METRIC",
        "Which host saw the most failed password attempts in the last 12 hours?",
        'topk(1, sum by (hostname) (count_over_time({application="openssh"} |= "Failed password" [$window])))',
        {"window": "12h"},
    ),
    (
        "ssh-l1", "openssh", "User Session Analysis", "LOG",
        "Show me the most recent successful logins for user 'fztu', including the source IP.",
        '{application="openssh"} |= "Accepted password for fztu" | regexp "(?P<source_ip>\\\\d+\\\\.\\\\d+\\\\.\\\\d+\\\\.\\\\d+)"',
        {},
    ),
    (
        "ssh-l2", "openssh", "Connection Analysis", "LOG",
        "List all instances where we failed to receive an identification string from host LabSZ-tenant-5.",
        '{application="openssh"} |= "Did not receive identification string from" '
        '| hostname="LabSZ-tenant-5" | line_format "`{{__timestamp__}}` - Failed to '
        'receive identification string from {{.content}}"',
        {},
    ),
    (
        "ssh-l3", "openssh", "Connection Analysis", "LOG",
        "Show pre-auth connection closures on host LabSZ.",
        '{application="openssh", hostname="LabSZ"} |= "Connection closed"',
        {},
    ),
    (
        "stk-m1", "openstack", "Security and Authentication", "METRIC",
        "How many times did we receive a 503 status code while validating tokens in the past 30 days for openstack-asia-pacific?",
        'count_over_time({job="openstack", region="asia-pacific"} |= "503" |= "token validation" [30d])',
        {},
    ),
    (
        "stk-m2", "openstack", "Image and File Management", "METRIC",
        "How many active base file reports did the image cache log in the last hour, per component?",
        'sum by (component) (count_over_time({application="openstack-asia-pacific", '
        'component="nova.virt.libvirt.imagecache"} |~ "Active base files: (?P<file_path>/.*)" [1h]))',
        {},
    ),
    (
        "stk-m3", "openstack", "API Performance", "METRIC",
        "Which two components produced the most log lines over the past month?",
        'topk(2, sum by (component) (count_over_time({job="openstack"} [30d])))',
        {},
    ),
    (
        "stk-l1", "openstack", "Instance Lifecycle", "LOG",
        "Show instance build time reports from the compute manager.",
        '{application="openstack-asia-pacific", component="nova.compute.manager"} |= "Took"',
        {},
    ),
    (
        "stk-l2", "openstack", "Error Analysis", "LOG",
        "List token validation failures that were not successful requests.",
        '{job="openstack"} |= "token validation" != "status: 200"',
        {},
    ),
    (
        "stk-l3", "openstack", "Image and File Management", "LOG",
        "Show the active base file paths reported by the image cache.",
        '{application="openstack-asia-pacific"} |~ "Active base files: /.*" '
        '| regexp "Active base files: (?P<file_path>/\\\\S+)"',
        {},
    ),
    (
        "hdf-m1", "hdfs", "Block Management", "METRIC",
        "How many times did the NameSystem allocate new blocks in the past minute for hdfs-asia-pacific?",
        'sum(count_over_time({application="hdfs-asia-pacific"} |~ "BLOCK\\\\* NameSystem\\\\.allocateBlock:" [1m]))',
        {},
    ),
    (
        "hdf-m2", "hdfs", "Error Analysis", "METRIC",
        "What are the top 3 most frequent exceptions encountered during writeBlock operations in the past 24 hours for hdfs-asia-pacific?",
        'topk(3, sum by (exception_type) (count_over_time({component=~"dfs.DataNode.*", '
        'application="hdfs-asia-pacific"} |~ "writeBlock .* received exception" '
        '| regexp "writeBlock .* received exception (?P<exception_type>[^:]+)" [24h])))',
        {},
    ),
    (
        "hdf-m3", "hdfs", "Performance Monitoring", "METRIC",
        "What is the total PacketResponder termination duration over the last 24 hours, by component?",
        'sum by (component) (sum_over_time({application="hdfs-asia-pacific", '
        'component="dfs.DataNode$PacketResponder"} | regexp "duration=(?P<duration_ms>\\\\d+)" '
        '| unwrap duration_ms [24h]))',
        {},
    ),
    (
        "hdf-l1", "hdfs", "Replication and Data Transfer", "LOG",
        "Show all block transmissions between datanodes.",
        '{application="hdfs-asia-pacific", component="dfs.DataNode$DataTransfer"} |~ "Transmitted block .* to .*"',
        {},
    ),
    (
        "hdf-l2", "hdfs", "Replication and Data Transfer", "LOG",
        "Show block transmissions with the transmitting node's IP extracted.",
        '{application="hdfs-asia-pacific"} |~ "Transmitted block" '
        '| regexp "(?P<source_ip>[\\\\d\\\\.]+):\\\\d+:Transmitted block"',
        {},
    ),
    (
        "hdf-l3", "hdfs", "Error Analysis", "LOG",
        "Summarize writeBlock exceptions as 'component threw exception'.",
        '{application="hdfs-asia-pacific"} |= "received exception" '
        '| regexp "received exception (?P<exception_type>[^:]+)" '
        '| line_format "{{.component}} threw {{.exception_type}}"',
        {},
    ),
]


def gen_dataset(stores) -> None:
    lines = []
    for id_, corpus, use_case, qtype, nl, query, vars in TUPLES:
        store = stores[corpus]
        ctx = EvalContext(now=store.anchor_ns)
        result = execute(store, query, vars, ctx)
        record = {
            "id": id_,
            "application": corpus,
            "use_case": use_case,
            "query_type": qtype,
            "nl_question": nl,
            "reference_query": query,
            "expected_output": result_to_json(result),
            "vars": vars,
        }
        lines.append(json.dumps(record, sort_keys=True))
    (FIX / "dataset.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")


def gen_support_files() -> None:
    endpoints = {
        "endpoints": [
            {
                "name": "stub-a",
                "base_url": "http://127.0.0.1:8089",
                "model": "stub-model-a",
                "timeout_s": 10,
                "logprobs": True,
            },
            {
                "name": "stub-b",
                "base_url": "http://127.0.0.1:8090",
                "model": "stub-model-b",
                "timeout_s": 10,
            },
        ]
    }
    (FIX / "endpoints.json").write_text(json.dumps(endpoints, indent=2) + "\n", encoding="utf-8")

    run_config = {
        "corpora": {
            "openssh": "corpora/sshmini/manifest.json",
            "openstack": "corpora/stackmini/manifest.json",
            "hdfs": "corpora/hdfsmini/manifest.json",
        },
        "dataset": "dataset.jsonl",
        "endpoints": "endpoints.json",
        "now": "2025-01-02T03:04:05Z",
        "lookback": "7d",
        "limit": 5000,
        "seed": 7,
        "output_dir": "../runs",
        "feedback_path": "../runs/feedback.jsonl",
        "ui_dir": "../frontend/dist",
    }
    (FIX / "run_config.json").write_text(json.dumps(run_config, indent=2) + "\n", encoding="utf-8")

    # Canned generator: reference answers with two deliberately broken ones.
    mapping = {id_: query for id_, _, _, _, _, query, _ in TUPLES}
    mapping["ssh-m1"] = 'calculate_over_time({application="openssh"} |= "PAM" [24h])'
    mapping["hdf-l1"] = '{application="hdfs-asia-pacific"} |~ "Transmitted block ["'
    (FIX / "canned_broken.json").write_text(json.dumps(mapping, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    # Stub endpoint behavior: answer by NL-question lookup.
    behavior = {
        "replies": {nl: query for _, _, _, _, nl, query, _ in TUPLES},
        "fallback": '{application="unknown"}',
        "wrap_in_fence": True,
        "logprob": -0.25,
    }
    (FIX / "stub_behavior.json").write_text(json.dumps(behavior, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def gen_goldens(stores) -> None:
    tuples = load_dataset(FIX / "dataset.jsonl")
    echo_run = evaluate_run(stores, tuples, echo_generator)
    (FIX / "golden" / "report_metrics.md").write_text(
        render_report(echo_run.metrics, "markdown"), encoding="utf-8"
    )
    mapping = json.loads((FIX / "canned_broken.json").read_text(encoding="utf-8"))
    broken_run = evaluate_run(stores, tuples, canned_generator(mapping))
    comparison = compare_runs(broken_run.metrics, echo_run.metrics)
    (FIX / "golden" / "report_comparison.md").write_text(
        render_report(comparison, "markdown"), encoding="utf-8"
    )
    ssh = stores["openssh"]
    prompt = build_prompt(
        "How many failed login attempts happened in the last day?", prompt_context(ssh)
    )
    (FIX / "golden" / "prompt.txt").write_text(prompt + "\n", encoding="utf-8")


def main() -> None:
    gen_openssh_500()
    config = RunConfig(
        corpora={
            "openssh": FIX / "corpora/sshmini/manifest.json",
            "openstack": FIX / "corpora/stackmini/manifest.json",
            "hdfs": FIX / "corpora/hdfsmini/manifest.json",
        },
        dataset=None,
        endpoints=None,
        output_dir=FIX / "runs",
        now=None,
    )
    stores = load_stores(config)
    gen_dataset(stores)
    gen_support_files()
    gen_goldens(stores)
    print("fixtures regenerated")


if __name__ == "__main__":
    main()
