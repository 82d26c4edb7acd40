/**
 * Typed client for the study platform's HTTP API.
 *
 * Error responses carry {code, message, detail}; conflicts (409) surface as
 * RequestFailed with code "Conflict" or "Sequencing" so the flow layer can
 * react (e.g. a second selection attempt in another tab).
 */

export interface ApiErrorBody {
  code: string;
  message: string;
  detail?: unknown;
}

export class RequestFailed extends Error {
  readonly status: number;
  readonly code: string;
  readonly detail: unknown;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.status = status;
    this.code = body.code;
    this.detail = body.detail;
  }
}

export interface EnrollResponse {
  participant_id: string;
  condition: string;
}

export interface StartSessionResponse {
  session_id: string;
  day_index: number;
}

export interface CardSummary {
  card_id: string;
  display_name: string;
  displayed_steps: number;
}

export interface CardsResponse {
  session_id: string;
  reference_steps: number;
  cards: CardSummary[];
}

export interface ProfileAttributes {
  age: number;
  sex: string;
  profession: string;
  height_cm: number;
  weight_kg: number;
  gym_time_minutes: number;
  preferred_activities: string[];
  hobbies: string[];
  exercise_location: string;
  favorite_spot: string;
  average_distance_km: number;
}

export interface FullCard {
  card_id: string;
  display_name: string;
  displayed_steps: number;
  true_offset: number;
  attributes: ProfileAttributes;
}

export interface SelectResponse {
  session_id: string;
  card: FullCard;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token?: string,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (this.token) {
      headers["authorization"] = `Bearer ${this.token}`;
    }
    const response = await fetch(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let parsed: ApiErrorBody;
      try {
        parsed = (await response.json()) as ApiErrorBody;
      } catch {
        parsed = { code: "Internal", message: `HTTP ${response.status}` };
      }
      if (!parsed.code) {
        parsed = { code: "Validation", message: JSON.stringify(parsed) };
      }
      throw new RequestFailed(response.status, parsed);
    }
    return (await response.json()) as T;
  }

  enroll(externalId: string, gender: string): Promise<EnrollResponse> {
    return this.request("POST", "/v1/participants", {
      external_id: externalId,
      gender,
    });
  }

  startSession(participantId: string, date: string): Promise<StartSessionResponse> {
    return this.request("POST", `/v1/participants/${participantId}/sessions`, { date });
  }

  ingestSteps(participantId: string, date: string, steps: number): Promise<unknown> {
    return this.request("POST", `/v1/participants/${participantId}/steps`, { date, steps });
  }

  preMotivation(sessionId: string, value: number): Promise<unknown> {
    return this.request("POST", `/v1/sessions/${sessionId}/motivation/pre`, { value });
  }

  getCards(sessionId: string): Promise<CardsResponse> {
    return this.request("GET", `/v1/sessions/${sessionId}/cards`);
  }

  preview(sessionId: string, cardId: string): Promise<unknown> {
    return this.request("POST", `/v1/sessions/${sessionId}/preview`, { card_id: cardId });
  }

  select(sessionId: string, cardId: string): Promise<SelectResponse> {
    return this.request("POST", `/v1/sessions/${sessionId}/select`, { card_id: cardId });
  }

  unlock(sessionId: string, section: string): Promise<unknown> {
    return this.request("POST", `/v1/sessions/${sessionId}/unlock`, { section });
  }

  postMotivation(sessionId: string, value: number): Promise<unknown> {
    return this.request("POST", `/v1/sessions/${sessionId}/motivation/post`, { value });
  }
}
