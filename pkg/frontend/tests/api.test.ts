import { describe, expect, it } from "vitest";

import { ApiError, HiertabClient } from "../src/api.js";
import { App } from "../src/app.js";
import { fixtureSnapshot } from "./fixtures.js";

interface Recorded {
  url: string;
  method: string;
  body?: string;
}

function fakeService(): {
  requests: Recorded[];
  fetch: (input: string, init?: RequestInit) => Promise<Response>;
} {
  const requests: Recorded[] = [];
  const snapshot = fixtureSnapshot();
  const fetchImpl = async (
    input: string,
    init?: RequestInit,
  ): Promise<Response> => {
    requests.push({
      url: input,
      method: init?.method ?? "GET",
      body: typeof init?.body === "string" ? init.body : undefined,
    });
    const path = input.replace("http://svc", "");
    const json = (status: number, body: unknown) =>
      new Response(JSON.stringify(body), { status });
    if (path === "/sessions" && init?.method === "POST") {
      return json(201, { id: snapshot.id, revision: 1 });
    }
    if (path === `/sessions/${snapshot.id}`) return json(200, snapshot);
    if (path.startsWith(`/sessions/${snapshot.id}/recommend`)) {
      return json(200, { added: [], revision: snapshot.revision + 1 });
    }
    if (path === `/sessions/${snapshot.id}/insights/i0/alternatives`) {
      return json(200, { alternatives: [snapshot.insights[1]] });
    }
    if (path === `/sessions/${snapshot.id}/insights/i0/replace`) {
      return json(200, { insights: snapshot.insights, revision: 5 });
    }
    if (path === `/sessions/${snapshot.id}/insights/i0`) {
      return json(200, { revision: 5, metrics: { ar: 0, ir: 0, er: 0 } });
    }
    return json(404, { detail: "not found" });
  };
  return { requests, fetch: fetchImpl };
}

describe("api client", () => {
  it("hits the documented endpoints with the right methods", async () => {
    const svc = fakeService();
    const client = new HiertabClient("http://svc", svc.fetch);
    await client.createSession({});
    await client.getSession("fixture00001");
    await client.recommend("fixture00001", 25);
    await client.alternatives("fixture00001", "i0");
    await client.replaceInsight("fixture00001", "i0", "dominance");
    await client.removeInsight("fixture00001", "i0");
    expect(svc.requests.map((r) => `${r.method} ${r.url}`)).toEqual([
      "POST http://svc/sessions",
      "GET http://svc/sessions/fixture00001",
      "POST http://svc/sessions/fixture00001/recommend?budget=25",
      "GET http://svc/sessions/fixture00001/insights/i0/alternatives",
      "POST http://svc/sessions/fixture00001/insights/i0/replace",
      "DELETE http://svc/sessions/fixture00001/insights/i0",
    ]);
  });

  it("raises ApiError with the server detail", async () => {
    const svc = fakeService();
    const client = new HiertabClient("http://svc", svc.fetch);
    await expect(client.getSession("nope")).rejects.toMatchObject({
      name: "ApiError",
      status: 404,
      message: "not found",
    });
    expect(new ApiError(409, "busy").status).toBe(409);
  });
});

describe("thin-client invariant", () => {
  it("renders only numbers that came from service responses", async () => {
    const svc = fakeService();
    const app = new App(
      new HiertabClient("http://svc", svc.fetch),
      "fixture00001",
    );
    await app.refresh();
    const html = app.render();

    // every request went through the intercepted fetch
    expect(svc.requests).toHaveLength(1);
    expect(svc.requests[0].url).toBe("http://svc/sessions/fixture00001");

    // displayed scores and metrics are the wire values verbatim
    const snapshot = fixtureSnapshot();
    for (const insight of snapshot.insights) {
      expect(html).toContain(insight.score.toFixed(3));
    }
    expect(html).toContain(snapshot.metrics.ar.toFixed(3));
    expect(html).toContain(snapshot.metrics.er.toFixed(3));
    // no recomputation: the fraction shown for i1 is the served 0.667,
    // not the 0.75 a local dominance computation over [10,10,5] would give
    expect(html).not.toContain("0.750");
  });

  it("refreshes after every mutation instead of patching locally", async () => {
    const svc = fakeService();
    const app = new App(
      new HiertabClient("http://svc", svc.fetch),
      "fixture00001",
    );
    await app.refresh();
    await app.remove("i0");
    await app.recommend(25);
    const gets = svc.requests.filter(
      (r) => r.method === "GET" && r.url.endsWith("/sessions/fixture00001"),
    );
    expect(gets.length).toBe(3); // initial + one per mutation
  });

  it("disables re-entrant recommendation runs", async () => {
    const svc = fakeService();
    const app = new App(
      new HiertabClient("http://svc", svc.fetch),
      "fixture00001",
    );
    await app.refresh();
    await Promise.all([app.recommend(10), app.recommend(10)]);
    const runs = svc.requests.filter((r) => r.url.includes("/recommend"));
    expect(runs).toHaveLength(1);
  });

  it("surfaces API errors inline and recovers", async () => {
    const svc = fakeService();
    const app = new App(
      new HiertabClient("http://svc", svc.fetch),
      "fixture00001",
    );
    await app.refresh();
    await app.openAlternatives("i999"); // unknown insight -> 404
    expect(app.lastError).toContain("404");
    expect(app.render()).toContain('role="alert"');
    await app.openAlternatives("i0");
    expect(app.lastError).toBeNull();
    expect(app.drawer?.alternatives).toHaveLength(1);
  });
});
