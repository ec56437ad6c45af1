/** Drill-down view state.
 *
 * Selections form a valid path: an issue can only be selected when a goal is
 * selected or the all-issues entry mode is active. Refreshing reproduces the
 * same views because nothing here caches server data.
 */

export type TraitMode = "trait_centric" | "composite_persona";
export type JourneyMode = "page_level" | "goal_level";

export interface ViewState {
  experimentId: string | null;
  goalId: string | null;
  traitKey: string | null; // "Dimension=value" filter
  personaId: string | null;
  issueId: string | null;
  allIssuesMode: boolean;
  traitMode: TraitMode;
  journeyMode: JourneyMode;
  editCursor: number;
}

export function initialState(): ViewState {
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

export function selectExperiment(state: ViewState, experimentId: string): ViewState {
  return { ...initialState(), experimentId };
}

export function selectGoal(state: ViewState, goalId: string | null): ViewState {
  return {
    ...state,
    goalId,
    traitKey: null,
    personaId: null,
    issueId: null,
    allIssuesMode: false,
  };
}

export function enterAllIssuesMode(state: ViewState): ViewState {
  return { ...state, allIssuesMode: true, goalId: null, traitKey: null, personaId: null, issueId: null };
}

export function selectTrait(state: ViewState, traitKey: string | null): ViewState {
  if (state.goalId === null && !state.allIssuesMode) {
    throw new Error("select a goal (or enter all-issues mode) before a trait");
  }
  return { ...state, traitKey, personaId: null, issueId: null };
}

export function selectPersona(state: ViewState, personaId: string | null): ViewState {
  if (state.goalId === null && !state.allIssuesMode) {
    throw new Error("select a goal (or enter all-issues mode) before a persona");
  }
  return { ...state, personaId, issueId: null };
}

export function selectIssue(state: ViewState, issueId: string): ViewState {
  if (state.goalId === null && !state.allIssuesMode) {
    throw new Error("an issue needs a selected goal or all-issues mode");
  }
  return { ...state, issueId };
}

export function clearIssue(state: ViewState): ViewState {
  return { ...state, issueId: null };
}

export function toggleTraitMode(state: ViewState): ViewState {
  const traitMode: TraitMode =
    state.traitMode === "trait_centric" ? "composite_persona" : "trait_centric";
  return { ...state, traitMode };
}

export function toggleJourneyMode(state: ViewState): ViewState {
  const journeyMode: JourneyMode =
    state.journeyMode === "page_level" ? "goal_level" : "page_level";
  return { ...state, journeyMode };
}

export function setEditCursor(state: ViewState, cursor: number): ViewState {
  if (cursor < 0) throw new Error("edit cursor cannot be negative");
  return { ...state, editCursor: cursor };
}

/** Filters for the issue list implied by the current drill-down path. */
export function issueFilters(state: ViewState): {
  goal?: string;
  trait?: string;
  persona?: string;
} {
  const filters: { goal?: string; trait?: string; persona?: string } = {};
  if (!state.allIssuesMode && state.goalId) filters.goal = state.goalId;
  if (state.traitKey) filters.trait = state.traitKey;
  if (state.personaId) filters.persona = state.personaId;
  return filters;
}

/** True when the drill-down selections form a valid path. */
export function isValidPath(state: ViewState): boolean {
  if (state.issueId !== null && state.goalId === null && !state.allIssuesMode) {
    return false;
  }
  if ((state.traitKey !== null || state.personaId !== null) && state.goalId === null && !state.allIssuesMode) {
    return false;
  }
  return true;
}
