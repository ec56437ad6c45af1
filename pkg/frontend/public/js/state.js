/** Drill-down view state.
 *
 * Selections form a valid path: an issue can only be selected when a goal is
 * selected or the all-issues entry mode is active. Refreshing reproduces the
 * same views because nothing here caches server data.
 */
export function initialState() {
    return {
        experimentId: null,
        goalId: null,
        traitKey: null,
        personaId: null,
        issueId: null,
        allIssuesMode: false,
        traitMode: "trait_centric",
        journeyMode: "page_level",
        editCursor: 0,
    };
}
export function selectExperiment(state, experimentId) {
    return { ...initialState(), experimentId };
}
export function selectGoal(state, goalId) {
    return {
        ...state,
        goalId,
        traitKey: null,
        personaId: null,
        issueId: null,
        allIssuesMode: false,
    };
}
export function enterAllIssuesMode(state) {
    return { ...state, allIssuesMode: true, goalId: null, traitKey: null, personaId: null, issueId: null };
}
export function selectTrait(state, traitKey) {
    if (state.goalId === null && !state.allIssuesMode) {
        throw new Error("select a goal (or enter all-issues mode) before a trait");
    }
    return { ...state, traitKey, personaId: null, issueId: null };
}
export function selectPersona(state, personaId) {
    if (state.goalId === null && !state.allIssuesMode) {
        throw new Error("select a goal (or enter all-issues mode) before a persona");
    }
    return { ...state, personaId, issueId: null };
}
export function selectIssue(state, issueId) {
    if (state.goalId === null && !state.allIssuesMode) {
        throw new Error("an issue needs a selected goal or all-issues mode");
    }
    return { ...state, issueId };
}
export function clearIssue(state) {
    return { ...state, issueId: null };
}
export function toggleTraitMode(state) {
    const traitMode = state.traitMode === "trait_centric" ? "composite_persona" : "trait_centric";
    return { ...state, traitMode };
}
export function toggleJourneyMode(state) {
    const journeyMode = state.journeyMode === "page_level" ? "goal_level" : "page_level";
    return { ...state, journeyMode };
}
export function setEditCursor(state, cursor) {
    if (cursor < 0)
        throw new Error("edit cursor cannot be negative");
    return { ...state, editCursor: cursor };
}
/** Filters for the issue list implied by the current drill-down path. */
export function issueFilters(state) {
    const filters = {};
    if (!state.allIssuesMode && state.goalId)
        filters.goal = state.goalId;
    if (state.traitKey)
        filters.trait = state.traitKey;
    if (state.personaId)
        filters.persona = state.personaId;
    return filters;
}
/** True when the drill-down selections form a valid path. */
export function isValidPath(state) {
    if (state.issueId !== null && state.goalId === null && !state.allIssuesMode) {
        return false;
    }
    if ((state.traitKey !== null || state.personaId !== null) && state.goalId === null && !state.allIssuesMode) {
        return false;
    }
    return true;
}
