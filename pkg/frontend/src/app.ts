/** View-model orchestration: one session, one snapshot, re-render on every
 * server mutation. All insight math lives on the server; this layer only
 * fetches, stores, and renders. */

import { ApiError, HiertabClient } from "./api.js";
import {
  renderAlternativesDrawer,
  renderInsightList,
  renderMetrics,
  renderRecommendButton,
} from "./panel.js";
import { renderTable } from "./render.js";
import type { InsightWire, SessionSnapshot } from "./types.js";

export class App {
  snapshot: SessionSnapshot | null = null;
  recommendInFlight = false;
  lastError: string | null = null;
  drawer: { insightId: string; alternatives: InsightWire[] } | null = null;

  constructor(
    readonly client: HiertabClient,
    readonly sessionId: string,
  ) {}

  async refresh(): Promise<SessionSnapshot> {
    this.snapshot = await this.client.getSession(this.sessionId);
    return this.snapshot;
  }

  render(): string {
    if (!this.snapshot) return `<p class="loading">loading…</p>`;
    const drawerHtml = this.drawer
      ? renderAlternativesDrawer(
          this.snapshot,
          this.drawer.insightId,
          this.drawer.alternatives,
        )
      : "";
    const errorHtml = this.lastError
      ? `<p class="error" role="alert">${this.lastError}</p>`
      : "";
    return (
      `<main class="hiertab-app" data-revision="${this.snapshot.revision}">` +
      errorHtml +
      renderRecommendButton(this.recommendInFlight) +
      renderMetrics(this.snapshot) +
      renderTable(this.snapshot) +
      renderInsightList(this.snapshot.insights) +
      drawerHtml +
      `</main>`
    );
  }

  private async guarded<T>(action: () => Promise<T>): Promise<T | null> {
    this.lastError = null;
    try {
      return await action();
    } catch (err) {
      this.lastError =
        err instanceof ApiError ? `${err.status}: ${err.message}` : String(err);
      return null;
    }
  }

  async recommend(budget: number): Promise<void> {
    if (this.recommendInFlight) return; // optimistic-disable, never re-enter
    this.recommendInFlight = true;
    try {
      await this.guarded(() => this.client.recommend(this.sessionId, budget));
      await this.refresh();
    } finally {
      this.recommendInFlight = false;
    }
  }

  async remove(insightId: string): Promise<void> {
    await this.guarded(() =>
      this.client.removeInsight(this.sessionId, insightId),
    );
    await this.refresh();
  }

  async openAlternatives(insightId: string): Promise<void> {
    const result = await this.guarded(() =>
      this.client.alternatives(this.sessionId, insightId),
    );
    this.drawer = result
      ? { insightId, alternatives: result.alternatives }
      : null;
  }

  async replace(insightId: string, kind: string): Promise<void> {
    const result = await this.guarded(() =>
      this.client.replaceInsight(this.sessionId, insightId, kind),
    );
    if (result) this.drawer = null;
    await this.refresh();
  }

  async addManual(
    rowEntry: string[],
    colEntry: string[],
    kind: string,
  ): Promise<void> {
    await this.guarded(() =>
      this.client.addInsight(this.sessionId, rowEntry, colEntry, kind),
    );
    await this.refresh();
  }
}
