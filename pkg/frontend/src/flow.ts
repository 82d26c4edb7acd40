/**
 * Client-side session flow, mirroring the server's state machine.
 *
 * Stages advance strictly: pre-motivation -> card grid (peeks fire preview
 * events) -> one confirmed selection -> overview with expandable sections
 * (each expansion fires an unlock event) -> full profile -> post-motivation
 * -> done. No stage skipping, and a second selection is blocked locally
 * before the server would reject it anyway.
 */
import {
  ApiClient,
  CardSummary,
  FullCard,
  RequestFailed,
} from "./api.js";

export type Stage =
  | "pre_motivation"
  | "card_grid"
  | "overview"
  | "full_profile"
  | "post_motivation"
  | "done";

export const SECTIONS = ["steps", "interests"] as const;
export type Section = (typeof SECTIONS)[number];

export const SELECTION_WARNING = "You can only view one full user profile a day.";

export class FlowError extends Error {}

export interface SessionViewState {
  stage: Stage;
  referenceSteps: number | null;
  /** Cards exactly as served; never reordered client-side. */
  cards: CardSummary[];
  /** Card currently peeked at in the grid (preview sent), awaiting confirm. */
  peekedCardId: string | null;
  selected: FullCard | null;
  expandedSections: Section[];
  /** Surfaced server conflicts / validation problems, newest last. */
  notices: string[];
}

type Listener = (state: SessionViewState) => void;

function checkLikert(value: number): void {
  if (!Number.isInteger(value) || value < 1 || value > 5) {
    throw new FlowError(`motivation rating must be an integer from 1 to 5, got ${value}`);
  }
}

export class SessionFlow {
  readonly state: SessionViewState = {
    stage: "pre_motivation",
    referenceSteps: null,
    cards: [],
    peekedCardId: null,
    selected: null,
    expandedSections: [],
    notices: [],
  };

  private listeners: Listener[] = [];

  constructor(
    private readonly client: ApiClient,
    readonly sessionId: string,
  ) {}

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  private requireStage(expected: Stage, action: string): void {
    if (this.state.stage !== expected) {
      throw new FlowError(`${action} is not available during ${this.state.stage}`);
    }
  }

  private notice(message: string): void {
    this.state.notices.push(message);
    this.emit();
  }

  /** Surface a server rejection without advancing the stage. */
  private surface(error: unknown): never {
    if (error instanceof RequestFailed) {
      this.notice(`${error.code}: ${error.message}`);
    }
    throw error;
  }

  async submitPreMotivation(value: number): Promise<void> {
    this.requireStage("pre_motivation", "pre-rating");
    checkLikert(value);
    try {
      await this.client.preMotivation(this.sessionId, value);
      const served = await this.client.getCards(this.sessionId);
      this.state.referenceSteps = served.reference_steps;
      this.state.cards = served.cards;
      this.state.stage = "card_grid";
      this.emit();
    } catch (error) {
      this.surface(error);
    }
  }

  /** Re-read the served cards (e.g. after a reload); idempotent on the server. */
  async rehydrateCards(): Promise<void> {
    const served = await this.client.getCards(this.sessionId);
    this.state.referenceSteps = served.reference_steps;
    this.state.cards = served.cards;
    this.emit();
  }

  /**
   * Resume after a reload: if the server already issued cards, jump to the
   * grid with the same cards; otherwise stay at the pre-rating stage.
   */
  async resume(): Promise<void> {
    try {
      await this.rehydrateCards();
      if (this.state.stage === "pre_motivation") {
        this.state.stage = "card_grid";
        this.emit();
      }
    } catch (error) {
      if (error instanceof RequestFailed && error.status === 409) {
        return; // pre-rating not given yet; start from the top
      }
      throw error;
    }
  }

  async peekCard(cardId: string): Promise<void> {
    this.requireStage("card_grid", "peeking at a card");
    if (!this.state.cards.some((card) => card.card_id === cardId)) {
      throw new FlowError(`unknown card ${cardId}`);
    }
    try {
      await this.client.preview(this.sessionId, cardId);
      this.state.peekedCardId = cardId;
      this.emit();
    } catch (error) {
      this.surface(error);
    }
  }

  /** Back-navigation from a peek to the grid; allowed before confirmation. */
  backToGrid(): void {
    this.requireStage("card_grid", "returning to the grid");
    this.state.peekedCardId = null;
    this.emit();
  }

  async confirmSelection(): Promise<void> {
    if (this.state.selected !== null) {
      this.notice("A profile was already selected today.");
      throw new FlowError("selection already made");
    }
    this.requireStage("card_grid", "confirming a selection");
    const cardId = this.state.peekedCardId;
    if (cardId === null) {
      throw new FlowError("peek at a card before confirming");
    }
    try {
      const response = await this.client.select(this.sessionId, cardId);
      this.state.selected = response.card;
      this.state.stage = "overview";
      this.emit();
    } catch (error) {
      this.surface(error);
    }
  }

  async expandSection(section: Section): Promise<void> {
    if (this.state.stage !== "overview" && this.state.stage !== "full_profile") {
      throw new FlowError(`sections are not available during ${this.state.stage}`);
    }
    try {
      await this.client.unlock(this.sessionId, section);
    } catch (error) {
      this.surface(error);
    }
    if (!this.state.expandedSections.includes(section)) {
      this.state.expandedSections.push(section);
    }
    this.emit();
  }

  collapseSection(section: Section): void {
    this.state.expandedSections = this.state.expandedSections.filter((s) => s !== section);
    this.emit();
  }

  showFullProfile(): void {
    this.requireStage("overview", "opening the full profile");
    this.state.stage = "full_profile";
    this.emit();
  }

  async submitPostMotivation(value: number): Promise<void> {
    this.requireStage("post_motivation", "post-rating");
    checkLikert(value);
    try {
      await this.client.postMotivation(this.sessionId, value);
      this.state.stage = "done";
      this.emit();
    } catch (error) {
      this.surface(error);
    }
  }

  finishReading(): void {
    this.requireStage("full_profile", "finishing");
    this.state.stage = "post_motivation";
    this.emit();
  }
}
