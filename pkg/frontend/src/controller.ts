/** Page state and the operations the UI exposes.
 *
 * The controller owns one selected email at a time, the feature exclusion
 * set, the finding navigation order, and the conversation state. Every
 * mutation ends in onChange() so the bootstrap can re-render.
 */

import { ApiError, CyriClient } from "./api.js";
import type {
  AnalysisBody,
  EmailDetail,
  EmailSummary,
  InProgress,
  Thread,
} from "./types.js";
import { renderAnalyzedView, renderUnanalyzedView } from "./render.js";
import { Speaker } from "./speech.js";
import { type FindingOrder, visibleFindings } from "./viewmodel.js";

function isInProgress(body: AnalysisBody | InProgress): body is InProgress {
  return (body as InProgress).status === "in_progress";
}

export class TriageController {
  readonly client: CyriClient;
  readonly speaker: Speaker;
  onChange: () => void = () => {};

  emails: EmailSummary[] = [];
  selectedDate: string | null = null;
  email: EmailDetail | null = null;
  analysis: AnalysisBody | null = null;
  thread: Thread | null = null;
  excluded = new Set<string>();
  findingOrder: FindingOrder = "document";
  /** Index into the visible findings, or -1 when none is focused. */
  activeFinding = -1;
  weights = new Map<string, number>();
  queryInflight = false;
  /** Text restored into the ask box after a failed query. */
  pendingInput = "";
  lastError: string | null = null;
  notice: string | null = null;

  constructor(client: CyriClient, speaker?: Speaker) {
    this.client = client;
    this.speaker = speaker ?? new Speaker();
  }

  async loadCatalog(): Promise<void> {
    const catalog = await this.client.getCatalog();
    this.weights = new Map(catalog.features.map((f) => [f.name, f.weight]));
  }

  /** Date navigation reads only; it never mutates server state. */
  async loadDate(date: string | null): Promise<void> {
    this.selectedDate = date;
    this.emails = (await this.client.listEmails(date ?? undefined)).emails;
    this.onChange();
  }

  async select(id: string): Promise<void> {
    this.email = await this.client.getEmail(id);
    this.excluded = new Set(this.email.excluded_features);
    this.analysis = null;
    this.thread = null;
    this.lastError = null;
    this.activeFinding = -1;
    this.pendingInput = "";
    try {
      const body = await this.client.getAnalysis(id);
      if (!isInProgress(body)) {
        this.analysis = body;
        this.thread = (await this.client.getThread(id)).thread;
      }
    } catch (error) {
      if (!(error instanceof ApiError && error.status === 404)) throw error;
      // not analyzed yet: the degraded view offers the analyze button
    }
    this.onChange();
  }

  async analyze(force = false): Promise<void> {
    if (!this.email) return;
    const body = await this.client.analyze(this.email.id, {
      force,
      excluded_features: [...this.excluded],
    });
    if (!isInProgress(body)) {
      this.analysis = body;
      this.thread = (await this.client.getThread(this.email.id)).thread;
    }
    this.onChange();
  }

  /** Chip toggle: hides or restores one feature's highlights and row. */
  toggleFeature(feature: string): void {
    if (this.excluded.has(feature)) this.excluded.delete(feature);
    else this.excluded.add(feature);
    this.activeFinding = -1; // the visible set just changed
    this.onChange();
  }

  toggleOrder(): void {
    this.findingOrder =
      this.findingOrder === "document" ? "severity" : "document";
    this.onChange();
  }

  private visibleCount(): number {
    if (!this.analysis) return 0;
    return visibleFindings(
      this.analysis.analysis.findings,
      this.excluded,
      this.findingOrder,
      this.weights,
    ).length;
  }

  /** Step focus to the next visible finding, wrapping at the end. */
  cycleFinding(): void {
    const count = this.visibleCount();
    this.activeFinding = count === 0 ? -1 : (this.activeFinding + 1) % count;
    this.onChange();
  }

  gotoFinding(index: number): void {
    const count = this.visibleCount();
    this.activeFinding = index >= 0 && index < count ? index : -1;
    this.onChange();
  }

  /** Optimistic ask: the user bubble lands immediately, the assistant
   * bubble on response. On failure the optimistic turn is rolled back
   * and the input text is preserved for retry. */
  async submitQuery(text: string): Promise<void> {
    if (!this.email || this.queryInflight || !text.trim()) return;
    const optimistic: Thread = {
      message_id: this.thread?.message_id ?? this.email.message_id,
      turns: [
        ...(this.thread?.turns ?? []),
        { role: "user", text, at: new Date().toISOString() },
      ],
    };
    const previous = this.thread;
    this.thread = optimistic;
    this.queryInflight = true;
    this.lastError = null;
    this.pendingInput = "";
    this.onChange();
    try {
      const result = await this.client.query(this.email.id, text);
      this.thread = result.thread;
    } catch (error) {
      this.thread = previous;
      this.pendingInput = text;
      this.lastError =
        error instanceof ApiError ? error.message : String(error);
    } finally {
      this.queryInflight = false;
      this.onChange();
    }
  }

  speakExplanation(): void {
    const text = this.analysis?.analysis.explanation ?? "";
    const outcome = this.speaker.toggle(text);
    this.notice = outcome === "unavailable" ? "speech unavailable" : null;
    this.onChange();
  }

  render(): string {
    if (!this.email) return '<p class="muted">Select an email.</p>';
    if (!this.analysis) return renderUnanalyzedView(this.email);
    return renderAnalyzedView({
      email: this.email,
      analysis: this.analysis,
      excluded: this.excluded,
      order: this.findingOrder,
      weights: this.weights,
      thread: this.thread,
      inflight: this.queryInflight,
      pendingInput: this.pendingInput,
      error: this.lastError,
      notice: this.notice,
      activeFinding: this.activeFinding,
    });
  }
}
