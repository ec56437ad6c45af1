/** Typed client for the uxprobe HTTP API. All analysis numbers come from the
 * server; the UI never recomputes aggregates. */
export class ApiError extends Error {
    constructor(status, detail) {
        super(`API ${status}: ${detail}`);
        this.status = status;
    }
}
async function parseError(response) {
    let detail = response.statusText;
    try {
        const body = await response.json();
        if (body && typeof body.detail === "string")
            detail = body.detail;
    }
    catch {
        // keep the status text
    }
    throw new ApiError(response.status, detail);
}
export class ApiClient {
    constructor(baseUrl = "") {
        this.baseUrl = baseUrl;
    }
    async get(path) {
        const response = await fetch(this.baseUrl + path);
        if (!response.ok)
            await parseError(response);
        return (await response.json());
    }
    async post(path, body) {
        const response = await fetch(this.baseUrl + path, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
        });
        if (!response.ok)
            await parseError(response);
        return (await response.json());
    }
    async experiments() {
        const body = await this.get("/experiments");
        return body.experiments;
    }
    goals(experimentId) {
        return this.get(`/experiments/${experimentId}/goals`);
    }
    traits(experimentId, goalId, mode) {
        return this.get(`/experiments/${experimentId}/goals/${encodeURIComponent(goalId)}/traits?mode=${mode}`);
    }
    async issues(experimentId, filters = {}) {
        const params = new URLSearchParams();
        if (filters.goal)
            params.set("goal", filters.goal);
        if (filters.trait)
            params.set("trait", filters.trait);
        if (filters.persona)
            params.set("persona", filters.persona);
        const suffix = params.toString() ? `?${params}` : "";
        const body = await this.get(`/experiments/${experimentId}/issues${suffix}`);
        return body.issues;
    }
    issueDetail(issueId) {
        return this.get(`/issues/${encodeURIComponent(issueId)}`);
    }
    journey(experimentId, mode) {
        return this.get(`/experiments/${experimentId}/journey?mode=${mode}`);
    }
    async snapshot(ref) {
        const body = await this.get(`/snapshots/${ref}`);
        return body.html;
    }
    edit(ref, instruction, sessionId) {
        const body = { instruction };
        if (sessionId)
            body.session_id = sessionId;
        return this.post(`/snapshots/${ref}/edit`, body);
    }
    revert(ref, sessionId, cursor) {
        return this.post(`/snapshots/${ref}/edit`, { session_id: sessionId, revert: cursor });
    }
    preview(issueId, snapshotRef) {
        return this.post(`/issues/${encodeURIComponent(issueId)}/preview`, {
            snapshot_ref: snapshotRef,
        });
    }
    async impacted(experimentId, selector, goal) {
        const params = new URLSearchParams({ selector, goal });
        const body = await this.get(`/experiments/${experimentId}/impacted?${params}`);
        return body.impacted;
    }
}
