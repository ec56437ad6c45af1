"""Spin up the HTTP API over a freshly built fixture experiment.

Used by the UI test suite: builds the scripted offline pipeline into a temp
directory, wires a scripted gateway for edit/preview calls, prints
"READY <port>" and serves until killed.
"""

from __future__ import annotations

import json
import socket
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(REPO_ROOT / "tests"))

from shopfixture import run_full_pipeline  # noqa: E402

from uxprobe.api import create_app  # noqa: E402
from uxprobe.llm import MockGateway, TranscriptEntry  # noqa: E402
from uxprobe.refine import observe_snapshot  # noqa: E402

EDIT_INSTRUCTION = "Make the add to cart button clearly active"
NEW_LABEL = "Add to Cart - In Stock"


def build_gateway(store) -> MockGateway:
    html = (REPO_ROOT / "tests" / "fixtures" / "shop" / "product-classic.html").read_text()
    state = observe_snapshot(html, "product-classic.html")
    add_to_cart = next(
        i for i in sorted(state.elements) if state.elements[i].selector == "#add-to-cart"
    )
    patchset = {
        "status": "ok",
        "patches": [
            {
                "selector": "#add-to-cart",
                "action": "replace_text",
                "value": NEW_LABEL,
                "rationale": "state the availability so the control reads as active",
            }
        ],
        "notes": "replaced the button label",
    }
    click = {
        "intent": "buy the tee",
        "reasoning": "The button clearly reads as active now, so I click it.",
        "action": {"kind": "click", "target_index": add_to_cart},
    }
    scroll = {
        "intent": "find a usable buy button",
        "reasoning": "The Add to Cart button looks disabled, so I scroll on.",
        "action": {"kind": "scroll", "payload": "+300"},
    }
    return MockGateway(
        transcript=[
            TranscriptEntry(
                match=EDIT_INSTRUCTION,
                response="```json\n" + json.dumps(patchset) + "\n```",
            ),
            TranscriptEntry(
                match='"original_action"',
                response="```json\n"
                + json.dumps({"resolved": True, "summary": "The label now signals an active control."})
                + "\n```",
            ),
            TranscriptEntry(
                match=NEW_LABEL,
                response="```json\n" + json.dumps(click) + "\n```",
            ),
            TranscriptEntry(
                match="*",
                response="```json\n" + json.dumps(scroll) + "\n```",
            ),
        ]
    )


def main() -> None:
    import uvicorn

    data_dir = Path(tempfile.mkdtemp(prefix="uxprobe-ui-"))
    store = run_full_pipeline(data_dir / "shop-e2e")
    gateway = build_gateway(store)
    app = create_app(data_dir, gateway=gateway, ui_dir=REPO_ROOT / "frontend" / "public")

    probe = socket.socket()
    probe.bind(("127.0.0.1", 0))
    port = probe.getsockname()[1]
    probe.close()

    print(f"READY {port}", flush=True)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="error")


if __name__ == "__main__":
    main()
