#!/usr/bin/env python3
"""Regenerates the fixture corpus used by the test suites.

    python3 fixtures/generate_corpus.py

Writes fixtures/corpus.jsonl (positives across 14 tool families plus 59
mismatched negatives) and fixtures/kubectl_describe.txt (a 250-line
`kubectl describe pod` observation with the OOMKilled block at lines 26-27).
Output is deterministic.
"""

import hashlib
import json
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent
SEED = 20260310
POSITIVES_PER_TOOL = 9
NEGATIVES = 59

REPOS = [
    "pydata/xarray", "django/django", "psf/requests", "pallets/flask",
    "sympy/sympy", "pytest-dev/pytest", "scikit-learn/scikit-learn",
    "matplotlib/matplotlib", "sphinx-doc/sphinx", "astropy/astropy",
]
WORDS = [
    "value", "index", "buffer", "config", "request", "session", "cache",
    "parser", "token", "record", "handler", "result", "payload", "schema",
    "offset", "window", "metric", "stream", "worker", "channel", "layout",
    "vector", "matrix", "filter", "policy", "bucket", "cursor", "engine",
]


def ident(rng, parts=2):
    return "_".join(rng.choice(WORDS) for _ in range(parts))


def sha(rng):
    return "%040x" % rng.getrandbits(160)


# Each generator returns (lines, query, [(start, end)], repo_or_None).

def read_file(rng):
    repo = rng.choice(REPOS)
    pkg = repo.split("/")[1].replace("-", "_")
    lines = [f'"""{pkg} {ident(rng)} utilities."""', "", "import os", "import re",
             "from typing import Any, Optional", ""]
    target = None
    n_funcs = rng.randint(8, 22)
    target_idx = rng.randrange(2, n_funcs)
    for f in range(n_funcs):
        name = ident(rng, 3) if f != target_idx else "compute_" + ident(rng)
        start = len(lines) + 1
        lines.append(f"def {name}(data, {rng.choice(WORDS)}=None, *, strict=False):")
        body = rng.randint(3, 9)
        for b in range(body):
            w = rng.choice(WORDS)
            lines.append(f"    {w}_{b} = data.get({w!r}, {rng.randint(0, 99)}) if {w} else {b}")
        lines.append(f"    return {rng.choice(WORDS)}_{rng.randrange(body)}")
        if f == target_idx:
            target = (name, start, len(lines))
        lines.append("")
        lines.append("")
    name, s, e = target
    return lines, f"Find the definition of {name} and the value it returns.", [(s, e)], repo


def grep(rng):
    repo = rng.choice(REPOS)
    pkg = repo.split("/")[1].replace("-", "_")
    symbol = ident(rng)
    lines, gold = [], []
    n = rng.randint(50, 160)
    hits = sorted(rng.sample(range(n), rng.randint(1, 3)))
    for i in range(n):
        path = f"{pkg}/{rng.choice(WORDS)}/{rng.choice(WORDS)}.py"
        lineno = rng.randint(1, 2400)
        if i in hits:
            path = f"{pkg}/core/{symbol}.py"
            lines.append(f"{path}:{lineno}:    result = {symbol}(frame, axis={rng.randint(0, 3)})")
            gold.append((i + 1, i + 1))
        else:
            w = ident(rng)
            lines.append(f"{path}:{lineno}:    {w} = {rng.choice(WORDS)}.{rng.choice(WORDS)}({w})")
    return lines, f"Find the call sites of {symbol} in {pkg}/core.", gold, repo


def git_log(rng):
    repo = rng.choice(REPOS)
    lines = []
    n = rng.randint(12, 40)
    target = rng.randrange(n)
    feature = ident(rng)
    gold = None
    for c in range(n):
        start = len(lines) + 1
        lines.append(f"commit {sha(rng)}")
        lines.append(f"Author: dev{rng.randint(1, 40)} <dev{rng.randint(1, 40)}@example.org>")
        lines.append(f"Date:   Mon Mar {rng.randint(1, 28)} 1{rng.randint(0, 9)}:0{rng.randint(0, 9)}:00 2025 +0000")
        lines.append("")
        if c == target:
            lines.append(f"    Fix dimension order in {feature} when broadcasting")
            gold = (start, len(lines))
        else:
            lines.append(f"    {rng.choice(['Refactor', 'Update', 'Tidy', 'Document', 'Test'])} {ident(rng)} handling")
        lines.append("")
    return lines, f"Find the commit that fixed the dimension order in {feature}.", [gold], repo


def test_output(rng):
    repo = rng.choice(REPOS)
    pkg = repo.split("/")[1].replace("-", "_")
    lines = ["============================= test session starts ==============================",
             "platform linux -- Python 3.11.8, pytest-8.1.1, pluggy-1.4.0",
             f"rootdir: /testbed/{pkg}", f"collected {rng.randint(80, 400)} items", ""]
    failing = "test_" + ident(rng)
    for _ in range(rng.randint(30, 120)):
        lines.append(f"{pkg}/tests/test_{rng.choice(WORDS)}.py::test_{ident(rng)} PASSED [{rng.randint(1, 99):3d}%]")
    lines += ["", "=================================== FAILURES ===================================",
              f"_________________________________ {failing} _________________________________", ""]
    for _ in range(rng.randint(3, 6)):
        lines.append(f"    {ident(rng)} = make_{rng.choice(WORDS)}({rng.randint(0, 9)})")
    s = len(lines) + 1
    expected, got = rng.randint(2, 9), rng.randint(10, 20)
    lines.append(f">       assert result.shape == ({expected}, 3)")
    lines.append(f"E       assert ({got}, 3) == ({expected}, 3)")
    lines.append(f"E         At index 0 diff: {got} != {expected}")
    e = len(lines)
    lines += ["", f"{pkg}/tests/test_core.py:{rng.randint(10, 900)}: AssertionError",
              "=========================== short test summary info ============================",
              f"FAILED {pkg}/tests/test_core.py::{failing} - assert ({got}, 3) == ({expected}, 3)",
              f"========================= 1 failed, {rng.randint(80, 300)} passed in {rng.randint(2, 60)}.{rng.randint(10, 99)}s ========================="]
    return lines, f"Find the assertion failure reported for {failing}.", [(s, e)], repo


def python(rng):
    repo = rng.choice(REPOS)
    pkg = repo.split("/")[1].replace("-", "_")
    lines = []
    for i in range(rng.randint(45, 120)):
        lines.append(f"step {i:03d} {rng.choice(WORDS)}={rng.random():.6f} {rng.choice(WORDS)}={rng.randint(0, 9999)}")
    lines.append("Traceback (most recent call last):")
    for _ in range(rng.randint(2, 5)):
        lines.append(f'  File "/testbed/{pkg}/{rng.choice(WORDS)}.py", line {rng.randint(10, 900)}, in {ident(rng)}')
        lines.append(f"    {ident(rng)}({rng.choice(WORDS)})")
    key = rng.choice(WORDS)
    lines.append(f"KeyError: '{key}'")
    e = len(lines)
    return lines, f"Find the exception raised for the missing '{key}' key.", [(e, e)], repo


def type_check(rng):
    repo = rng.choice(REPOS)
    pkg = repo.split("/")[1].replace("-", "_")
    target = f"{pkg}/{rng.choice(WORDS)}_{rng.choice(WORDS)}.py"
    lines, gold = [], []
    n = rng.randint(50, 140)
    hits = set(rng.sample(range(n - 1), rng.randint(1, 2)))
    for i in range(n - 1):
        if i in hits:
            lines.append(f'{target}:{rng.randint(1, 700)}: error: Argument 1 to "{ident(rng)}" has incompatible type "str"; expected "int"  [arg-type]')
            gold.append((i + 1, i + 1))
        else:
            f = f"{pkg}/{rng.choice(WORDS)}.py"
            lines.append(f'{f}:{rng.randint(1, 700)}: note: "{ident(rng)}" defined here with {rng.randint(1, 4)} arguments')
    lines.append(f"Found {len(hits) + rng.randint(0, 9)} errors in {rng.randint(1, 9)} files (checked {rng.randint(50, 400)} source files)")
    return lines, f"Find the arg-type errors reported in {target}.", gold, repo


def pip_install(rng):
    lines = []
    for _ in range(rng.randint(40, 120)):
        pkg = f"{rng.choice(WORDS)}-{rng.choice(WORDS)}"
        v = f"{rng.randint(0, 9)}.{rng.randint(0, 30)}.{rng.randint(0, 9)}"
        if rng.random() < 0.4:
            lines.append(f"Requirement already satisfied: {pkg}>={v} in /usr/local/lib/python3.11/site-packages (from -r requirements.txt (line {rng.randint(1, 60)})) ({v})")
            continue
        lines.append(f"Collecting {pkg}=={v}")
        lines.append(f"  Downloading {pkg.replace('-', '_')}-{v}-py3-none-any.whl ({rng.randint(10, 900)} kB)")
    s = len(lines) + 1
    dep = rng.choice(WORDS)
    lines.append(f"ERROR: Cannot install {dep}-client==2.1.0 because these package versions have conflicting dependencies.")
    lines.append(f"    {dep}-client 2.1.0 depends on urllib3<2")
    lines.append(f"    requests 2.32.0 depends on urllib3>=2.0.7")
    e = len(lines)
    lines.append("ERROR: ResolutionImpossible: for help visit https://pip.pypa.io/en/latest/topics/dependency-resolution/")
    return lines, f"Find the dependency conflict that blocks installing {dep}-client.", [(s, e)], None


def kubectl(rng):
    pod = f"{rng.choice(WORDS)}-worker-{rng.randint(1000, 9999)}"
    lines = [f"Name:             {pod}", "Namespace:        default", f"Node:             node-{rng.randint(1, 9)}/10.0.{rng.randint(0, 9)}.{rng.randint(2, 250)}",
             "Status:           Running", "Containers:"]
    gold = None
    for c in range(rng.randint(5, 14)):
        name = f"{rng.choice(WORDS)}-{c}"
        lines.append(f"  {name}:")
        lines.append(f"    Image:          registry.example.org/{name}:{rng.randint(1, 9)}.{rng.randint(0, 9)}")
        if c == 2:
            lines.append("    State:          Waiting")
            lines.append("      Reason:       CrashLoopBackOff")
            lines.append("    Last State:     Terminated")
            s = len(lines) + 1
            lines.append("      Reason:       OOMKilled")
            lines.append("      Exit Code:    137")
            gold = (s, s + 1)
            target = name
        else:
            lines.append("    State:          Running")
            lines.append(f"      Started:      Mon, 10 Mar 2025 0{rng.randint(0, 9)}:1{rng.randint(0, 9)}:45 +0000")
        lines.append(f"    Ready:          {'False' if c == 2 else 'True'}")
        lines.append(f"    Restart Count:  {3 if c == 2 else 0}")
        lines.append("    Limits:")
        lines.append(f"      memory:  {rng.choice([128, 256, 512])}Mi")
        lines.append("    Environment:")
        for _ in range(rng.randint(2, 6)):
            lines.append(f"      {ident(rng).upper()}:  {rng.choice(WORDS)}")
    lines += ["Conditions:", "  Type              Status", "  Initialized       True",
              "  Ready             False", "  ContainersReady   False", "  PodScheduled      True",
              "QoS Class:         Burstable", "Node-Selectors:    <none>",
              "Tolerations:       node.kubernetes.io/not-ready:NoExecute op=Exists for 300s", "Events:"]
    for _ in range(rng.randint(1, 3)):
        lines.append(f"  Warning  BackOff  {rng.randint(1, 59)}m  kubelet  Back-off restarting failed container")
    return lines, f"Find the OOMKilled reason and exit code for the {target} container.", [gold], None


def docker_logs(rng):
    lines = []
    n = rng.randint(50, 200)
    err = rng.randrange(n // 2, n - 3)
    for i in range(n):
        ts = f"2025-03-10T08:{i // 60 % 60:02d}:{i % 60:02d}.{rng.randint(0, 999):03d}Z"
        if i == err:
            lines.append(f"{ts} ERROR {rng.choice(WORDS)}: connection refused to postgres:5432 (attempt 5/5)")
        else:
            lines.append(f"{ts} INFO  {rng.choice(WORDS)}: handled {rng.choice(['GET', 'POST'])} /{rng.choice(WORDS)} in {rng.randint(1, 400)}ms")
    return lines, "Find the log line showing why the database connection failed.", [(err + 1, err + 1)], None


def cargo_build(rng):
    lines = []
    for _ in range(rng.randint(45, 150)):
        name = f"{rng.choice(WORDS)}-{rng.choice(WORDS)}"
        local = f" (/app/crates/{name})" if rng.random() < 0.3 else ""
        lines.append(f"   Compiling {name} v{rng.randint(0, 3)}.{rng.randint(0, 40)}.{rng.randint(0, 9)}{local}")
    s = len(lines) + 1
    fn = ident(rng)
    lines += ["error[E0308]: mismatched types",
              f"  --> src/{rng.choice(WORDS)}.rs:{rng.randint(10, 400)}:{rng.randint(5, 40)}",
              "   |",
              f"{rng.randint(10, 99)} |     let n: u32 = {fn}(input);",
              "   |            ---   ^^^^^^^^^^^^ expected `u32`, found `usize`"]
    e = len(lines)
    lines += ["", "For more information about this error, try `rustc --explain E0308`.",
              f"error: could not compile `{rng.choice(WORDS)}` (lib) due to 1 previous error"]
    return lines, f"Find the type error at the call to {fn}.", [(s, e)], None


def tsc(rng):
    target = f"src/{rng.choice(WORDS)}/{rng.choice(WORDS)}.ts"
    lines, gold = [], []
    n = rng.randint(50, 150)
    hits = set(rng.sample(range(n), 2))
    for i in range(n):
        if i in hits:
            lines.append(f"{target}({rng.randint(1, 500)},{rng.randint(1, 60)}): error TS2322: Type 'string' is not assignable to type 'number'.")
            gold.append((i + 1, i + 1))
        else:
            lines.append(f"src/{rng.choice(WORDS)}/{rng.choice(WORDS)}.ts({rng.randint(1, 500)},{rng.randint(1, 60)}): error TS{rng.choice([2304, 2339, 7006])}: Parameter '{rng.choice(WORDS)}' implicitly has an 'any' type.")
    return lines, f"Find the TS2322 errors in {target}.", gold, None


def curl(rng):
    field = rng.choice(WORDS) + "_limit"
    lines = ["{", '  "data": [']
    gold = None
    items = rng.randint(8, 25)
    target = rng.randrange(items)
    for i in range(items):
        lines.append("    {")
        lines.append(f'      "id": {rng.randint(1000, 9999)},')
        lines.append(f'      "name": "{ident(rng)}",')
        if i == target:
            lines.append(f'      "{field}": {rng.randint(1, 500)},')
            gold = (len(lines), len(lines))
        lines.append(f'      "status": "{rng.choice(["active", "pending", "disabled"])}",')
        lines.append(f'      "updated_at": "2025-03-{rng.randint(1, 28):02d}T10:00:00Z"')
        lines.append("    },")
    lines += ["  ],", f'  "total": {items}', "}"]
    return lines, f"Find the {field} value in the API response.", [gold], None


def ls(rng):
    target = f"{ident(rng)}.lock"
    lines = [f"total {rng.randint(100, 9000)}"]
    n = rng.randint(50, 160)
    pos = rng.randrange(1, n)
    for i in range(1, n):
        name = target if i == pos else f"{ident(rng)}.{rng.choice(['py', 'txt', 'json', 'cfg', 'md'])}"
        lines.append(f"-rw-r--r--  1 dev staff {rng.randint(10, 99999):>6} Mar {rng.randint(1, 28):2d} 1{rng.randint(0, 9)}:{rng.randint(10, 59)} {name}")
    return lines, f"Find the lock file {target} in the listing.", [(pos + 1, pos + 1)], None


def npm_build(rng):
    lines = ["> app@1.0.0 build", "> webpack --mode production", ""]
    for _ in range(rng.randint(45, 140)):
        lines.append(f"asset {ident(rng)}.{rng.choice(['js', 'css', 'map'])} {rng.randint(1, 900)} KiB [emitted] [minimized]")
    mod = ident(rng)
    s = len(lines) + 1
    lines += [f"ERROR in ./src/{mod}.js 14:8-32",
              f"Module not found: Error: Can't resolve './{mod}-helpers' in '/app/src'"]
    e = len(lines)
    lines.append(f"webpack 5.90.3 compiled with 1 error in {rng.randint(1000, 9000)} ms")
    return lines, f"Find the module resolution error for {mod}.js.", [(s, e)], None


GENERATORS = [read_file, grep, git_log, test_output, python, type_check, pip_install,
              kubectl, docker_logs, cargo_build, tsc, curl, ls, npm_build]


def short_hash(*parts):
    return hashlib.sha256("\x1f".join(parts).encode()).hexdigest()[:10]


def build():
    rng = random.Random(SEED)
    positives = []
    for gen in GENERATORS:
        tool = gen.__name__
        made = 0
        while made < POSITIVES_PER_TOOL:
            lines, query, gold, repo = gen(rng)
            if len(lines) < 50:
                continue
            covered = sum(e - s + 1 for s, e in gold)
            assert gold and covered / len(lines) <= 0.6, tool
            text = "\n".join(lines) + "\n"
            row = {"id": f"{tool}-{short_hash(tool, text)}", "source": "swe" if repo else "synthetic_pos",
                   "tool": tool}
            if repo:
                row["repo"] = repo
            row.update({"query": query, "tool_output": text, "gold_spans": [list(g) for g in sorted(gold)]})
            positives.append(row)
            made += 1

    negatives = []
    seen = set()
    while len(negatives) < NEGATIVES:
        q, o = rng.sample(positives, 2)
        if q["tool"] == o["tool"] or (q["id"], o["id"]) in seen:
            continue
        seen.add((q["id"], o["id"]))
        negatives.append({"id": f"neg-{short_hash(q['id'], o['id'])}", "source": "synthetic_neg",
                          "tool": o["tool"], "query": q["query"], "tool_output": o["tool_output"],
                          "gold_spans": []})
    rows = sorted(positives + negatives, key=lambda r: r["id"])
    return rows


def kubectl_describe():
    rng = random.Random(SEED + 1)
    head = [
        "Name:             analytics-worker-7d9f8b6c4-x2kqp",
        "Namespace:        data-pipeline",
        "Priority:         0",
        "Service Account:  analytics",
        "Node:             worker-node-3/10.0.4.17",
        "Start Time:       Mon, 10 Mar 2026 07:58:02 +0000",
        "Labels:           app=analytics-worker",
        "                  pod-template-hash=7d9f8b6c4",
        "Annotations:      prometheus.io/scrape: true",
        "Status:           Running",
        "IP:               10.244.3.41",
        "IPs:",
        "  IP:           10.244.3.41",
        "Controlled By:  ReplicaSet/analytics-worker-7d9f8b6c4",
        "Containers:",
        "  analytics-worker:",
        "    Container ID:   containerd://4f1c2a9e8b7d6c5f4e3d2c1b0a9f8e7d6c5b4a3f2e1d0c9b8a7f6e5d4c3b2a19",
        "    Image:          registry.internal/analytics-worker:2.14.1",
        "    Image ID:       registry.internal/analytics-worker@sha256:9b2f4e6a8c0d1e3f5a7b9c1d3e5f7a9b1c3d5e7f9a1b3c5d7e9f1a3b5c7d9e1f",
        "    Port:           8080/TCP",
        "    Host Port:      0/TCP",
        "    Command:",
        "State: Waiting",
        "Reason: CrashLoopBackOff",
        "Last State: Terminated",
        "Reason: OOMKilled",
        "Exit Code: 137",
        "Started: Mon, 10 Mar 2026 08:12:45 +0000",
        "Finished: Mon, 10 Mar 2026 08:14:02 +0000",
        "Ready: False",
        "Restart Count: 3",
        "    Limits:",
        "      cpu:     2",
        "      memory:  512Mi",
        "    Requests:",
        "      cpu:     500m",
        "      memory:  256Mi",
        "    Liveness:   http-get http://:8080/healthz delay=10s timeout=1s period=10s #success=1 #failure=3",
        "    Environment:",
    ]
    lines = list(head)
    while len(lines) < 220:
        lines.append(f"      {ident(rng).upper()}:  {rng.choice(WORDS)}-{rng.randint(1, 99)}")
    lines.append("Events:")
    while len(lines) < 250:
        lines.append(f"  Normal   Pulled   {rng.randint(1, 59)}m   kubelet  Container image \"registry.internal/analytics-worker:2.14.1\" already present on machine")
    assert lines[25] == "Reason: OOMKilled" and lines[26] == "Exit Code: 137" and len(lines) == 250
    return "\n".join(lines) + "\n"


def main():
    rows = build()
    with open(HERE / "corpus.jsonl", "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
    (HERE / "kubectl_describe.txt").write_text(kubectl_describe(), encoding="utf-8")
    pos = sum(1 for r in rows if r["gold_spans"])
    print(f"wrote {len(rows)} rows ({pos} positives, {len(rows) - pos} negatives)")


if __name__ == "__main__":
    main()
