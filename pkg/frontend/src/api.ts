/** Typed client for the uxprobe HTTP API. All analysis numbers come from the
 * server; the UI never recomputes aggregates. */

export interface ExperimentInfo {
  id: string;
  created_at: string;
  status: string;
  config: { goals: { id: string; text: string }[]; dimensions: { name: string; values: string[] }[] };
  run_ids: string[];
}

export interface GoalSummary {
  goal_id: string;
  agents_attempting: number;
  agents_with_issues: number;
  success_ratio: number;
}

export interface GoalsResponse {
  version: string;
  goals: GoalSummary[];
  excluded_runs: string[];
}

export interface BreakdownEntry {
  key: string;
  issue_count: number;
  run_count: number;
  failure_rate?: number;
  dimension?: string;
  value?: string;
  traits?: Record<string, string>;
}

export interface TraitsResponse {
  mode: string;
  entries: BreakdownEntry[];
}

export interface IssueEntry {
  issue_id: string;
  run_id: string;
  persona_id: string;
  goal_id: string;
  step: number;
  type: string;
  element: string;
  reason: string;
  fix: string;
  upt_codes: string[];
  upt_explanation: string;
  issue_severity: number;
}

export interface TimelineStep {
  step: number;
  url: string;
  intent: string;
  action: Record<string, unknown>;
}

export interface ReasoningStep extends TimelineStep {
  reasoning: string;
  result: string;
  error: string | null;
  is_issue_step: boolean;
}

export interface IssueDetail {
  issue: IssueEntry;
  reasoning_window: ReasoningStep[];
  timeline: TimelineStep[];
  snapshot_ref: string | null;
  screenshot_ref: string | null;
}

export interface JourneyNode {
  id: string;
  label: string;
  kind: string;
  starts: number;
  terminations: number;
  issues: string[];
}

export interface JourneyLink {
  source: string;
  target: string;
  count: number;
}

export interface JourneyResponse {
  mode: string;
  nodes: JourneyNode[];
  links: JourneyLink[];
}

export interface EditHistoryEntry {
  instruction: string;
  patchset: { status: string; patches: unknown[]; notes: string };
  snapshot_ref: string;
  message: string;
}

export interface EditResponse {
  session_id: string;
  status: string;
  message: string;
  snapshot_ref: string;
  cursor: number;
  history: EditHistoryEntry[];
}

export interface DiffReport {
  issue_id: string;
  original_action: Record<string, unknown>;
  new_action: Record<string, unknown>;
  action_changed: boolean;
  issue_resolved: boolean;
  summary: string;
}

export interface ImpactedEntry {
  persona_id: string;
  run_id: string;
  step: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    detail: string,
  ) {
    super(`API ${status}: ${detail}`);
  }
}

async function parseError(response: Response): Promise<never> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // keep the status text
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(this.baseUrl + path);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  async experiments(): Promise<ExperimentInfo[]> {
    const body = await this.get<{ experiments: ExperimentInfo[] }>("/experiments");
    return body.experiments;
  }

  goals(experimentId: string): Promise<GoalsResponse> {
    return this.get(`/experiments/${experimentId}/goals`);
  }

  traits(experimentId: string, goalId: string, mode: string): Promise<TraitsResponse> {
    return this.get(
      `/experiments/${experimentId}/goals/${encodeURIComponent(goalId)}/traits?mode=${mode}`,
    );
  }

  async issues(
    experimentId: string,
    filters: { goal?: string; trait?: string; persona?: string } = {},
  ): Promise<IssueEntry[]> {
    const params = new URLSearchParams();
    if (filters.goal) params.set("goal", filters.goal);
    if (filters.trait) params.set("trait", filters.trait);
    if (filters.persona) params.set("persona", filters.persona);
    const suffix = params.toString() ? `?${params}` : "";
    const body = await this.get<{ issues: IssueEntry[] }>(
      `/experiments/${experimentId}/issues${suffix}`,
    );
    return body.issues;
  }

  issueDetail(issueId: string): Promise<IssueDetail> {
    return this.get(`/issues/${encodeURIComponent(issueId)}`);
  }

  journey(experimentId: string, mode: string): Promise<JourneyResponse> {
    return this.get(`/experiments/${experimentId}/journey?mode=${mode}`);
  }

  async snapshot(ref: string): Promise<string> {
    const body = await this.get<{ html: string }>(`/snapshots/${ref}`);
    return body.html;
  }

  edit(ref: string, instruction: string, sessionId?: string): Promise<EditResponse> {
    const body: Record<string, unknown> = { instruction };
    if (sessionId) body.session_id = sessionId;
    return this.post(`/snapshots/${ref}/edit`, body);
  }

  revert(ref: string, sessionId: string, cursor: number): Promise<EditResponse> {
    return this.post(`/snapshots/${ref}/edit`, { session_id: sessionId, revert: cursor });
  }

  preview(issueId: string, snapshotRef: string): Promise<DiffReport> {
    return this.post(`/issues/${encodeURIComponent(issueId)}/preview`, {
      snapshot_ref: snapshotRef,
    });
  }

  async impacted(
    experimentId: string,
    selector: string,
    goal: string,
  ): Promise<ImpactedEntry[]> {
    const params = new URLSearchParams({ selector, goal });
    const body = await this.get<{ impacted: ImpactedEntry[] }>(
      `/experiments/${experimentId}/impacted?${params}`,
    );
    return body.impacted;
  }
}
