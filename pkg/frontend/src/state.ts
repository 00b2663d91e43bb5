/** Session store: committed server state, the what-if overlay, and a
 * queue that keeps at most one mutating request in flight. */

import { ApiClient, ApiError } from "./api.js";
import type { Beliefs, KbNetwork, Recommendation, SessionEvent } from "./types.js";

export interface StoreEvents {
  changed(): void;
  toast(message: string): void;
  offline(message: string): void;
}

export class SessionStore {
  kb: KbNetwork | null = null;
  sessionId = "";
  /** committed session state, mirrored from the server */
  beliefs: Beliefs = {};
  findings: Record<string, string> = {};
  recommendation: Recommendation | null = null;
  history: SessionEvent[] = [];
  /** hypothetical mode: overlay findings and the server's view of them */
  overlay: Record<string, string> | null = null;
  overlayBeliefs: Beliefs | null = null;
  overlayRecommendation: Recommendation | null = null;

  private queue: Promise<void> = Promise.resolve();

  constructor(
    readonly client: ApiClient,
    private readonly events: StoreEvents,
  ) {}

  get whatIfMode(): boolean {
    return this.overlay !== null;
  }

  /** Beliefs currently on screen: hypothetical in what-if mode. */
  get displayedBeliefs(): Beliefs {
    return this.overlayBeliefs ?? this.beliefs;
  }

  get displayedRecommendation(): Recommendation | null {
    return this.overlayRecommendation ?? this.recommendation;
  }

  /** Finding shown on a node card: overlay entries win in what-if mode. */
  displayedFinding(node: string): string | undefined {
    if (this.overlay && node in this.overlay) return this.overlay[node];
    return this.findings[node];
  }

  async open(kbName: string, sessionId?: string): Promise<void> {
    this.kb = await this.client.getKb(kbName);
    this.sessionId = sessionId ?? (await this.client.createSession(kbName));
    await this.refresh();
  }

  async refresh(): Promise<void> {
    const view = await this.client.getSession(this.sessionId);
    this.beliefs = view.beliefs;
    this.findings = view.findings;
    this.history = await this.client.getHistory(this.sessionId);
    this.recommendation =
      this.kb?.kind === "decision"
        ? await this.client.getRecommendation(this.sessionId)
        : null;
    this.events.changed();
  }

  /** Serialize mutations: a click never races an in-flight request. */
  private enqueue(op: () => Promise<void>): Promise<void> {
    this.queue = this.queue.then(op).catch((err) => this.report(err));
    return this.queue;
  }

  private report(err: unknown): void {
    if (err instanceof ApiError) {
      if (err.status === 409) {
        this.events.toast(err.message);
        return;
      }
      this.events.toast(err.message);
      return;
    }
    this.events.offline(String(err));
  }

  /** Click semantics: clicking the asserted value retracts it, clicking
   * another value (re-)asserts. In what-if mode the overlay is edited
   * instead and the session stays untouched. */
  clickValue(node: string, state: string): Promise<void> {
    if (this.overlay !== null) {
      const next = { ...this.overlay };
      if (next[node] === state) delete next[node];
      else next[node] = state;
      return this.enqueue(() => this.runWhatIf(next));
    }
    return this.enqueue(async () => {
      if (this.findings[node] === state) {
        await this.client.deleteFinding(this.sessionId, node);
      } else {
        await this.client.putFinding(this.sessionId, node, state);
      }
      await this.refresh();
    });
  }

  retract(node: string): Promise<void> {
    return this.enqueue(async () => {
      await this.client.deleteFinding(this.sessionId, node);
      await this.refresh();
    });
  }

  enterWhatIf(): void {
    if (this.overlay === null) {
      this.overlay = {};
      this.overlayBeliefs = this.beliefs;
      this.overlayRecommendation = this.recommendation;
      this.events.changed();
    }
  }

  /** Leaving what-if mode restores committed state with no server call. */
  exitWhatIf(): void {
    this.overlay = null;
    this.overlayBeliefs = null;
    this.overlayRecommendation = null;
    this.events.changed();
  }

  private async runWhatIf(overlay: Record<string, string>): Promise<void> {
    if (Object.keys(overlay).length === 0) {
      this.overlay = {};
      this.overlayBeliefs = this.beliefs;
      this.overlayRecommendation = this.recommendation;
      this.events.changed();
      return;
    }
    try {
      const result = await this.client.whatIf(this.sessionId, overlay);
      this.overlay = overlay;
      this.overlayBeliefs = result.beliefs;
      this.overlayRecommendation = result.recommendation ?? null;
      this.events.changed();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.events.toast(err.message); // overlay unchanged, like a rejected click
        return;
      }
      throw err;
    }
  }
}
