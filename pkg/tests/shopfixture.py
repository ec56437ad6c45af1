"""Shared fixture wiring: the seeded shop site, its scripted transcripts,
and the full offline pipeline used by the e2e and acceptance tests."""

from __future__ import annotations

import json
from pathlib import Path

from uxprobe.annotate import annotate_experiment
from uxprobe.env.offline import OfflineSession
from uxprobe.llm import MockGateway, TranscriptEntry
from uxprobe.personas import config_from_dict
from uxprobe.simulate import run_experiment
from uxprobe.store import ExperimentStore

SHOP_DIR = Path(__file__).parent / "fixtures" / "shop"

GOAL_BUNDLES = "Save as much as possible using bundles or coupons"
GOAL_FIND_TEE = (
    "Find a specific tee under a price target, compare options, "
    "and select one using filters"
)

FIXED_CLOCK = lambda: "2025-01-01T00:00:00.000000Z"  # noqa: E731


def e2e_config_dict() -> dict:
    """8 personas (3 dimensions x 2 values) x 2 goals = 16 runs."""
    return {
        "site": str(SHOP_DIR),
        "site_name": "Cascada Tees",
        "dimensions": [
            {"name": "Price Sensitivity", "values": ["budget", "flexible"]},
            {"name": "Time Pressure", "values": ["rushed", "normal"]},
            {"name": "Age Cohort", "values": ["18-34", "55+"]},
        ],
        "replication": 1,
        "goals": [
            {"id": "g-bundles", "text": GOAL_BUNDLES},
            {"id": "g-find-tee", "text": GOAL_FIND_TEE},
        ],
        "max_steps": 25,
        "n_tags": 3,
    }


def element_index(page: str, text: str) -> int:
    """Index of the first interactive element whose text contains `text`."""
    session = OfflineSession(SHOP_DIR, start_page=page)
    state = session.observe()
    for index in sorted(state.elements):
        if text in state.elements[index].text:
            return index
    raise AssertionError(f"no element containing {text!r} on {page}")


def state_matcher(goal_text: str, url: str, title: str, scroll: int = 0) -> str:
    """Substring that pins one (goal, page, scroll) simulation step."""
    return (
        f"Current goal: {goal_text}\n\n"
        f"=== PAGE STATE ===\n"
        f"URL: {url}\n"
        f"TITLE: {title}\n"
        f"SCROLL_OFFSET: {scroll}\n"
    )


def decision(intent: str, reasoning: str, action: dict) -> str:
    payload = {"intent": intent, "reasoning": reasoning, "action": action}
    return "```json\n" + json.dumps(payload) + "\n```"


# Reasoning lines double as annotation matchers, so they stay verbatim here.
R_BUNDLES = [
    "As a shopper hunting for bundle savings, the huge banner pushes content "
    "down before I can even see the navigation. I head to the Bundles page.",
    "The progress meter shows 2/3 even though all three tees are listed as "
    "selected, and I cannot see any size info for the bundle items. I scroll "
    "for details.",
    "The note says the discount is applied at checkout, so the bundle rules "
    "stay unclear while I build it. I proceed to checkout to check the total.",
    "Shipping is only calculated at the final step, so I cannot verify the "
    "full cost of the bundle. I stop here without confidence in the savings.",
]

R_FIND_TEE = [
    "I want a specific tee under my price target. The search button looks "
    "redundant since pressing enter would do, so I just open the Shop page.",
    "The sort label says Low to High but prices run 59, 49, 39, 29, and "
    "dragging the price filter did nothing to the results. The Classic Tee "
    "at $29 fits my target, so I open it.",
    "On the product page the prices mix USD and CHF which is confusing. The "
    "Add to Cart button looks disabled and greyed out, so I scroll to look "
    "for another way to buy.",
    "I confirmed the Classic Tee is under my price target and the size "
    "options are listed, so my comparison goal is complete.",
]


def build_sim_transcript() -> list[TranscriptEntry]:
    """Reusable scripted walkthroughs for both goals (4 steps each)."""
    bundles_idx = element_index("index.html", "Bundles")
    shop_idx = element_index("index.html", "Shop")
    checkout_idx = element_index("bundles.html", "Proceed to checkout")
    classic_idx = element_index("shop.html", "Classic Tee")

    entries = [
        # goal: bundles
        (
            state_matcher(GOAL_BUNDLES, "index.html", "Cascada Tees - Home"),
            decision("find bundle deals", R_BUNDLES[0], {"kind": "click", "target_index": bundles_idx}),
        ),
        (
            state_matcher(GOAL_BUNDLES, "bundles.html", "Bundles - Cascada Tees"),
            decision("review bundle contents", R_BUNDLES[1], {"kind": "scroll", "payload": "+400"}),
        ),
        (
            state_matcher(GOAL_BUNDLES, "bundles.html", "Bundles - Cascada Tees", scroll=400),
            decision("check the total", R_BUNDLES[2], {"kind": "click", "target_index": checkout_idx}),
        ),
        (
            state_matcher(GOAL_BUNDLES, "checkout.html", "Checkout - Cascada Tees"),
            decision("verify full cost", R_BUNDLES[3], {"kind": "done", "success_flag": False}),
        ),
        # goal: find a tee under a price target
        (
            state_matcher(GOAL_FIND_TEE, "index.html", "Cascada Tees - Home"),
            decision("open the shop", R_FIND_TEE[0], {"kind": "click", "target_index": shop_idx}),
        ),
        (
            state_matcher(GOAL_FIND_TEE, "shop.html", "Shop - Cascada Tees"),
            decision("compare prices", R_FIND_TEE[1], {"kind": "click", "target_index": classic_idx}),
        ),
        (
            state_matcher(GOAL_FIND_TEE, "product-classic.html", "Classic Tee - Cascada Tees"),
            decision("inspect the product", R_FIND_TEE[2], {"kind": "scroll", "payload": "+300"}),
        ),
        (
            state_matcher(GOAL_FIND_TEE, "product-classic.html", "Classic Tee - Cascada Tees", scroll=300),
            decision("confirm the pick", R_FIND_TEE[3], {"kind": "done", "success_flag": True}),
        ),
    ]
    return [TranscriptEntry(match=m, response=r) for m, r in entries]


def _issue(type_, element, reason, fix, codes, explanation, severity) -> dict:
    return {
        "type": type_,
        "element": element,
        "reason": reason,
        "fix": fix,
        "upt_codes": codes,
        "upt_explanation": explanation,
        "issue_severity": severity,
    }


def bundles_issue_report() -> dict:
    return {
        "version": "1.0",
        "expected_steps": 4,
        "steps": [
            {
                "step": 1,
                "issues": [
                    _issue(
                        "promo_banner_hides_content",
                        ".promo-banner",
                        "Banner reduces access to controls above the fold",
                        "Shrink banner, adjust layout spacing",
                        ["A1"],
                        "Oversized layout block pushes primary controls out of view",
                        4,
                    )
                ],
            },
            {
                "step": 2,
                "issues": [
                    _issue(
                        "progress_meter_off_by_one",
                        "#bundle-progress",
                        "Meter shows 2/3 when all 3 items are picked",
                        "Fix meter logic to reflect correct count",
                        ["A4"],
                        "Feedback does not reflect the actual selection state",
                        4,
                    ),
                    _issue(
                        "missing_size_info",
                        ".bundle-items",
                        "Users can't see selected sizes before checkout",
                        "Require selection and show bundle summary",
                        ["A3"],
                        "Key product information is not presented",
                        3,
                    ),
                ],
            },
            {
                "step": 3,
                "issues": [
                    _issue(
                        "bundle_rules_unclear",
                        ".bundle-note",
                        "Discount only appears late, no guidance during build",
                        "Preview discount and guide bundle progress",
                        ["B3"],
                        "No instructions or guidance while building the bundle",
                        3,
                    )
                ],
            },
            {
                "step": 4,
                "issues": [
                    _issue(
                        "shipping_cost_unclear",
                        "#summary-shipping",
                        "Shipping only appears at final step",
                        "Show shipping line and estimate earlier",
                        ["B2"],
                        "Cost communication lacks clarity and precision",
                        2,
                    )
                ],
            },
        ],
    }


def find_tee_issue_report() -> dict:
    return {
        "version": "1.0",
        "expected_steps": 4,
        "steps": [
            {
                "step": 1,
                "issues": [
                    _issue(
                        "redundant_search_button",
                        "#search-button",
                        "Button duplicates enter key functionality",
                        "Remove or repurpose button",
                        ["E3"],
                        "Redundant control adds interaction overhead",
                        1,
                    )
                ],
            },
            {
                "step": 2,
                "issues": [
                    _issue(
                        "sort_label_mismatch",
                        "#sort",
                        "Low to High selected, but results show high to low",
                        "Fix comparator logic to match selected sort label",
                        ["B1", "D3"],
                        "Label contradicts behavior and blocks the price goal",
                        3,
                    ),
                    _issue(
                        "price_filter_unresponsive",
                        "#price-filter",
                        "Slider moves but does not affect results",
                        "Wire slider to filtering logic and trigger requery",
                        ["C3"],
                        "Control gives no response to manipulation",
                        2,
                    ),
                ],
            },
            {
                "step": 3,
                "issues": [
                    _issue(
                        "add_to_cart_looks_disabled",
                        "#add-to-cart",
                        "Button appears inactive but still works",
                        "Update button style and fix accessibility",
                        ["C2"],
                        "Affordance suggests the control cannot be used",
                        4,
                    ),
                    _issue(
                        "mixed_currency_display",
                        ".price",
                        "Some prices in CHF, others in USD",
                        "Normalize currency or indicate user locale",
                        ["A3", "B2"],
                        "Inconsistent information presentation confuses pricing",
                        2,
                    ),
                ],
            },
            {"step": 4, "issues": []},
        ],
    }


TAGS_BUNDLES = [
    ["seek bundle savings"],
    ["assess bundle clarity"],
    ["check bundle terms"],
    ["verify total cost"],
]

TAGS_FIND_TEE = [
    ["locate shop section"],
    ["compare tee prices"],
    ["inspect product details"],
    ["confirm selection"],
]


def build_annotation_transcript() -> list[TranscriptEntry]:
    """Issue entries first: their payloads carry step-log keys the tagging
    payloads never contain, so ordering keeps the matchers unambiguous."""
    return [
        TranscriptEntry(
            match='"url": "bundles.html"',
            response=json.dumps(bundles_issue_report()),
        ),
        TranscriptEntry(
            match='"url": "product-classic.html"',
            response=json.dumps(find_tee_issue_report()),
        ),
        TranscriptEntry(
            match="the huge banner pushes content",
            response=json.dumps(TAGS_BUNDLES),
        ),
        TranscriptEntry(
            match="The sort label says Low to High",
            response=json.dumps(TAGS_FIND_TEE),
        ),
    ]


def run_full_pipeline(out_dir: Path, experiment_id: str = "shop-e2e", pool: int = 2) -> ExperimentStore:
    """Simulate, annotate: the whole offline pipeline with scripted mocks."""
    config = config_from_dict(e2e_config_dict())
    store = ExperimentStore.create(out_dir, experiment_id, config)
    sim_gateway = MockGateway(transcript=build_sim_transcript())
    run_experiment(store, sim_gateway, pool_size=pool, clock=FIXED_CLOCK)
    annotation_gateway = MockGateway(transcript=build_annotation_transcript())
    annotate_experiment(store, annotation_gateway, rounds=1, threshold=-1.0)
    return store


def write_transcript_file(path: Path, entries: list[TranscriptEntry]) -> Path:
    payload = [
        {"match": e.match, "response": e.response, "once": e.once} for e in entries
    ]
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return path
