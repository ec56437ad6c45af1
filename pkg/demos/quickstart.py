"""End-to-end walkthrough on a tiny two-page snapshot site.

Builds everything it needs in a scratch directory (site, config, scripted
transcripts), then drives the installed CLI through the whole loop:

    run -> annotate -> report -> patch -> preview

No network, no real model: the mock provider plays back scripted decisions.
Run it with:  python demos/quickstart.py
"""

from __future__ import annotations

import json
import subprocess
import sys
import tempfile
from pathlib import Path

LANDING = """<!DOCTYPE html>
<html>
<head><title>Tiny Shop - Home</title></head>
<body>
<nav><a href="index.html">Home</a> <a href="deals.html">Deals</a></nav>
<h1>Tiny Shop</h1>
<a id="cta" class="btn btn-muted" href="deals.html">See deals</a>
</body>
</html>
"""

DEALS = """<!DOCTYPE html>
<html>
<head><title>Tiny Shop - Deals</title></head>
<body>
<nav><a href="index.html">Home</a></nav>
<h1>Deals</h1>
<p class="deal">Everything 10% off. Final price shown at checkout only.</p>
</body>
</html>
"""


def decision(intent: str, reasoning: str, action: dict) -> str:
    return "```json\n" + json.dumps(
        {"intent": intent, "reasoning": reasoning, "action": action}
    ) + "\n```"


def sim_transcript() -> list[dict]:
    """Two-step walkthrough: landing -> deals -> done."""
    return [
        {
            "match": "URL: index.html",
            "response": decision(
                "find the deals",
                "The See deals button looks washed out, I almost missed it and "
                "used the nav link instead.",
                {"kind": "click", "target_index": 2},  # nav Deals; the cta is 3
            ),
        },
        {
            "match": "URL: deals.html",
            "response": decision(
                "check final prices",
                "The deal copy hides the final price until checkout, which is vague.",
                {"kind": "done", "success_flag": False},
            ),
        },
    ]


def annotation_transcript() -> list[dict]:
    issues = {
        "version": "1.0",
        "expected_steps": 2,
        "steps": [
            {
                "step": 1,
                "issues": [
                    {
                        "type": "cta_low_contrast",
                        "element": "#cta",
                        "reason": "Primary call to action reads as disabled",
                        "fix": "Raise contrast on the deals button",
                        "upt_codes": ["C2"],
                        "upt_explanation": "Affordance hides an active control",
                        "issue_severity": 3,
                    }
                ],
            },
            {
                "step": 2,
                "issues": [
                    {
                        "type": "price_disclosure_late",
                        "element": ".deal",
                        "reason": "Final price only appears at checkout",
                        "fix": "Show the discounted price inline",
                        "upt_codes": ["B2"],
                        "upt_explanation": "Pricing copy lacks precision",
                        "issue_severity": 2,
                    }
                ],
            },
        ],
    }
    return [
        {"match": '"url": "index.html"', "response_json": issues},
        {
            "match": "washed out",
            "response_json": [["locate promotions"], ["verify pricing"]],
        },
    ]


def preview_transcript() -> list[dict]:
    return [
        {
            "match": '"original_action"',
            "response": "```json\n"
            + json.dumps({"resolved": True, "summary": "The call to action now reads as active."})
            + "\n```",
        },
        {
            "match": "<a.btn.btn-primary>",
            "response": decision(
                "open the deals",
                "The button is obviously clickable now.",
                {"kind": "click", "target_index": 3},
            ),
        },
        {
            "match": "*",
            "response": decision(
                "find the deals",
                "Still hard to spot the call to action, the nav link it is.",
                {"kind": "click", "target_index": 2},
            ),
        },
    ]


def cli(*args: str) -> str:
    command = [sys.executable, "-m", "uxprobe.cli", *args]
    print(f"\n$ {' '.join(str(a) for a in command[2:])}")
    result = subprocess.run(command, capture_output=True, text=True, check=True)
    print(result.stdout.strip()[:1200])
    return result.stdout


def main() -> None:
    scratch = Path(tempfile.mkdtemp(prefix="uxprobe-demo-"))
    site = scratch / "site"
    site.mkdir()
    (site / "index.html").write_text(LANDING)
    (site / "deals.html").write_text(DEALS)

    config = {
        "site": str(site),
        "site_name": "Tiny Shop",
        "dimensions": [{"name": "Patience", "values": ["low", "high"]}],
        "replication": 1,
        "goals": [{"id": "g-deals", "text": "Find the current deals and their prices"}],
    }
    (scratch / "config.yaml").write_text(json.dumps(config))
    (scratch / "sim.json").write_text(json.dumps(sim_transcript()))
    (scratch / "annotate.json").write_text(json.dumps(annotation_transcript()))
    (scratch / "preview.json").write_text(json.dumps(preview_transcript()))

    out = scratch / "experiment"
    cli("run", "--config", str(scratch / "config.yaml"), "--out", str(out),
        "--llm", "mock", "--transcript", str(scratch / "sim.json"))
    cli("annotate", "--run", str(out),
        "--llm", "mock", "--transcript", str(scratch / "annotate.json"))
    report = cli("report", "--run", str(out), "--format", "md")
    assert "cta_low_contrast" in report

    # fix the washed-out button with a patchset, then preview the critical step
    patchset = {
        "status": "ok",
        "patches": [
            {"selector": "#cta", "action": "remove_class", "value": "btn-muted",
             "rationale": "drop the washed-out styling"},
            {"selector": "#cta", "action": "add_class", "value": "btn-primary",
             "rationale": "promote the call to action"},
            {"selector": "#cta", "action": "inject_style",
             "value": ".btn-primary{background:#0a7;color:#fff}",
             "rationale": "make the primary style visible"},
        ],
        "notes": "make the deals button obviously active",
    }
    (scratch / "fix.json").write_text(json.dumps(patchset))
    snapshot = scratch / "landing.html"
    snapshot.write_text(LANDING)
    cli("patch", "--snapshot", str(snapshot), "--patchset", str(scratch / "fix.json"),
        "--out", str(scratch / "landing-fixed.html"))

    issue_id = None
    issues = json.loads((out / "annotations" / "issues.json").read_text())
    for run_id, report_payload in issues["reports"].items():
        for step in report_payload["steps"]:
            for ordinal, issue in enumerate(step["issues"]):
                if issue["type"] == "cta_low_contrast":
                    issue_id = f"{run_id}.s{step['step']}.i{ordinal}"
                    break
    assert issue_id, "seeded issue not found in annotations"

    preview = cli(
        "preview", "--run", str(out), "--issue", issue_id,
        "--snapshot", str(scratch / "landing-fixed.html"),
        "--llm", "mock", "--transcript", str(scratch / "preview.json"),
    )
    payload = json.loads(preview)
    print("\naction_changed:", payload["action_changed"],
          "| issue_resolved:", payload["issue_resolved"])
    print(f"\nartifacts kept under {scratch}")


if __name__ == "__main__":
    main()
