import type { InsightWire, SessionSnapshot } from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function raiseForStatus(resp: Response): Promise<void> {
  if (resp.ok) return;
  let detail = resp.statusText;
  try {
    const body = (await resp.json()) as { detail?: string };
    if (body.detail) detail = body.detail;
  } catch {
    /* non-JSON error body: keep the status text */
  }
  throw new ApiError(resp.status, detail);
}

/** Thin typed client over the session HTTP API. The fetch implementation is
 * injectable so tests can intercept every request. */
export class HiertabClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) =>
      fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    await raiseForStatus(resp);
    return (await resp.json()) as T;
  }

  createSession(document: unknown): Promise<{ id: string; revision: number }> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(document),
    });
  }

  getSession(sid: string): Promise<SessionSnapshot> {
    return this.request(`/sessions/${sid}`);
  }

  recommend(
    sid: string,
    budget: number,
  ): Promise<{ added: InsightWire[]; revision: number }> {
    return this.request(`/sessions/${sid}/recommend?budget=${budget}`, {
      method: "POST",
    });
  }

  removeInsight(
    sid: string,
    iid: string,
  ): Promise<{ revision: number; metrics: { ar: number; ir: number; er: number } }> {
    return this.request(`/sessions/${sid}/insights/${iid}`, {
      method: "DELETE",
    });
  }

  alternatives(
    sid: string,
    iid: string,
  ): Promise<{ alternatives: InsightWire[] }> {
    return this.request(`/sessions/${sid}/insights/${iid}/alternatives`);
  }

  replaceInsight(
    sid: string,
    iid: string,
    kind: string,
  ): Promise<{ insights: InsightWire[]; revision: number }> {
    return this.request(`/sessions/${sid}/insights/${iid}/replace`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ kind }),
    });
  }

  addInsight(
    sid: string,
    rowEntry: string[],
    colEntry: string[],
    kind: string,
  ): Promise<{ insight: InsightWire; revision: number }> {
    return this.request(`/sessions/${sid}/insights`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ rowEntry, colEntry, kind }),
    });
  }

  async exportSession(sid: string): Promise<string> {
    const resp = await this.fetchImpl(`${this.baseUrl}/sessions/${sid}/export`);
    await raiseForStatus(resp);
    return resp.text();
  }
}
