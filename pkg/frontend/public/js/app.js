/** Browser wiring: one ViewState, API fetches, panel rendering, delegation.
 *
 * The UI is stateless with respect to analysis: every render re-fetches
 * from the API, so refreshing reproduces identical views.
 */
import { ApiClient, ApiError } from "./api.js";
import { renderEditor } from "./panels/editor.js";
import { renderGoals } from "./panels/goals.js";
import { renderIssueDetail, renderIssueList } from "./panels/issues.js";
import { renderJourney } from "./panels/journey.js";
import { renderImpacted, renderPreview } from "./panels/preview.js";
import { renderTraits } from "./panels/traits.js";
import { enterAllIssuesMode, initialState, issueFilters, selectExperiment, selectGoal, selectIssue, selectTrait, toggleJourneyMode, toggleTraitMode, } from "./state.js";
import { escapeHtml } from "./format.js";
const api = new ApiClient("");
let state = initialState();
let editSession = null;
let editBaseRef = null;
let goalTexts = {};
function panel(id) {
    const element = document.getElementById(id);
    if (!element)
        throw new Error(`missing panel #${id}`);
    return element;
}
function showError(error) {
    const box = panel("errors");
    const text = error instanceof ApiError ? error.message : String(error);
    box.innerHTML = `<div class="error-banner">${escapeHtml(text)}</div>`;
}
function clearError() {
    panel("errors").innerHTML = "";
}
async function refreshExperiments() {
    const experiments = await api.experiments();
    const options = experiments
        .map((e) => `<option value="${escapeHtml(e.id)}"${e.id === state.experimentId ? " selected" : ""}>${escapeHtml(e.id)} (${escapeHtml(e.status)})</option>`)
        .join("");
    panel("experiment-picker").innerHTML =
        `<select id="experiment-select"><option value="">pick an experiment</option>${options}</select>`;
    if (!state.experimentId && experiments.length === 1) {
        state = selectExperiment(state, experiments[0].id);
        await refreshAll();
    }
}
async function refreshGoals() {
    if (!state.experimentId)
        return;
    const experiments = await api.experiments();
    const current = experiments.find((e) => e.id === state.experimentId);
    goalTexts = Object.fromEntries((current?.config.goals ?? []).map((g) => [g.id, g.text]));
    const body = await api.goals(state.experimentId);
    panel("goals").innerHTML = renderGoals(body, goalTexts);
}
async function refreshTraits() {
    if (!state.experimentId || !state.goalId) {
        panel("traits").innerHTML = '<p class="empty">Select a goal to see trait analysis.</p>';
        return;
    }
    const body = await api.traits(state.experimentId, state.goalId, state.traitMode);
    panel("traits").innerHTML = renderTraits(body);
}
async function refreshIssues() {
    if (!state.experimentId || (!state.goalId && !state.allIssuesMode)) {
        panel("issues").innerHTML =
            '<p class="empty">Select a goal or use the all-issues entry.</p>';
        return;
    }
    const issues = await api.issues(state.experimentId, issueFilters(state));
    panel("issues").innerHTML = renderIssueList(issues);
}
async function refreshIssueDetail() {
    if (!state.issueId) {
        panel("issue-detail").innerHTML = "";
        return;
    }
    const detail = await api.issueDetail(state.issueId);
    const snapshot = detail.snapshot_ref ? await api.snapshot(detail.snapshot_ref) : null;
    panel("issue-detail").innerHTML = renderIssueDetail(detail, snapshot);
}
async function refreshJourney() {
    if (!state.experimentId)
        return;
    try {
        const body = await api.journey(state.experimentId, state.journeyMode);
        panel("journey").innerHTML = renderJourney(body);
    }
    catch (error) {
        if (error instanceof ApiError) {
            panel("journey").innerHTML = `<p class="warn">${escapeHtml(error.message)}</p>`;
        }
        else {
            throw error;
        }
    }
}
async function refreshEditor() {
    if (!editBaseRef) {
        panel("editor").innerHTML = '<p class="empty">Open an issue and pick "Fix this issue".</p>';
        return;
    }
    const currentRef = editSession?.snapshot_ref ?? editBaseRef;
    const html = await api.snapshot(currentRef);
    panel("editor").innerHTML = renderEditor(editBaseRef, editSession, html);
}
async function refreshAll() {
    clearError();
    try {
        await refreshGoals();
        await refreshTraits();
        await refreshIssues();
        await refreshIssueDetail();
        await refreshJourney();
        await refreshEditor();
    }
    catch (error) {
        showError(error);
    }
}
async function handleClick(event) {
    const target = event.target;
    const goalRow = target.closest(".goal-row");
    const issueRow = target.closest(".issue-row");
    const traitRow = target.closest(".trait-row[data-trait]");
    const sankeyNode = target.closest(".sankey-node");
    const action = target.closest("[data-action]")?.dataset.action;
    try {
        if (action === "all-issues") {
            state = enterAllIssuesMode(state);
        }
        else if (action === "toggle-trait-mode") {
            state = toggleTraitMode(state);
        }
        else if (action === "toggle-journey-mode") {
            state = toggleJourneyMode(state);
        }
        else if (action === "open-editor") {
            const ref = target.closest("[data-ref]")?.dataset.ref;
            if (ref) {
                editBaseRef = ref;
                editSession = null;
            }
        }
        else if (action === "revert") {
            const cursor = Number(target.closest("[data-cursor]")?.dataset.cursor ?? "0");
            if (editBaseRef && editSession) {
                editSession = await api.revert(editBaseRef, editSession.session_id, cursor);
            }
        }
        else if (action === "preview") {
            const ref = target.closest("[data-ref]")?.dataset.ref;
            if (ref && state.issueId) {
                const report = await api.preview(state.issueId, ref);
                panel("preview").innerHTML = renderPreview(report);
                const detail = await api.issueDetail(state.issueId);
                if (state.experimentId) {
                    const impacted = await api.impacted(state.experimentId, detail.issue.element, detail.issue.goal_id);
                    panel("preview").innerHTML += renderImpacted(impacted);
                }
            }
        }
        else if (goalRow?.dataset.goal) {
            state = selectGoal(state, goalRow.dataset.goal);
        }
        else if (traitRow?.dataset.trait) {
            state = selectTrait(state, traitRow.dataset.trait);
        }
        else if (issueRow?.dataset.issue) {
            state = selectIssue(state, issueRow.dataset.issue);
        }
        else if (sankeyNode?.dataset.node) {
            // journey nodes are a direct entry point back into issue analysis
            state = enterAllIssuesMode(state);
        }
        else {
            return;
        }
        await refreshAll();
    }
    catch (error) {
        showError(error);
    }
}
async function handleSubmit(event) {
    const form = event.target.closest(".edit-form");
    if (!form)
        return;
    event.preventDefault();
    const input = form.querySelector("input[name=instruction]");
    if (!input || !editBaseRef)
        return;
    try {
        const ref = editSession?.snapshot_ref ?? editBaseRef;
        editSession = await api.edit(ref, input.value, editSession?.session_id);
        await refreshEditor();
    }
    catch (error) {
        showError(error);
    }
}
async function handleChange(event) {
    const select = event.target;
    if (select.id === "experiment-select" && select.value) {
        state = selectExperiment(state, select.value);
        editBaseRef = null;
        editSession = null;
        await refreshAll();
    }
}
export function start() {
    document.addEventListener("click", (event) => void handleClick(event));
    document.addEventListener("submit", (event) => void handleSubmit(event));
    document.addEventListener("change", (event) => void handleChange(event));
    void refreshExperiments().catch(showError);
}
start();
