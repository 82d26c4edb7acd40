/**
 * Entry point: a tiny setup form (enroll + start today's session) followed
 * by the daily flow. Query parameters:
 *   ?api=http://host:port   API base URL (default: same origin)
 *   &session=SESSION_ID     resume an existing session directly
 */
import { ApiClient, RequestFailed } from "./api.js";
import { SessionFlow } from "./flow.js";
import { mount } from "./views.js";

function today(): string {
  return new Date().toISOString().slice(0, 10);
}

function startFlow(root: HTMLElement, client: ApiClient, sessionId: string): void {
  const flow = new SessionFlow(client, sessionId);
  mount(root, flow);
}

function setupForm(root: HTMLElement, client: ApiClient): void {
  root.replaceChildren();
  const form = document.createElement("form");
  form.innerHTML = `
    <h2>Join the study</h2>
    <label>Your ID <input name="external_id" required></label>
    <label>Gender
      <select name="gender">
        <option value="female">female</option>
        <option value="male">male</option>
        <option value="nonbinary">nonbinary</option>
        <option value="other">other</option>
      </select>
    </label>
    <button type="submit">Start today's session</button>
    <p class="notice" data-testid="setup-error"></p>
  `;
  form.onsubmit = async (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const errorBox = form.querySelector("[data-testid=setup-error]") as HTMLElement;
    try {
      const enrolled = await client.enroll(
        String(data.get("external_id")),
        String(data.get("gender")),
      );
      const session = await client.startSession(enrolled.participant_id, today());
      startFlow(root, client, session.session_id);
    } catch (error) {
      errorBox.textContent =
        error instanceof RequestFailed ? `${error.code}: ${error.message}` : String(error);
    }
  };
  root.appendChild(form);
}

export function boot(root: HTMLElement): void {
  const params = new URLSearchParams(window.location.search);
  const client = new ApiClient(params.get("api") ?? "");
  const sessionId = params.get("session");
  if (sessionId) {
    const flow = new SessionFlow(client, sessionId);
    mount(root, flow);
    void flow.resume().catch(() => {
      // unreachable server or unknown session: the notices stay empty and
      // the pre-rating stage renders; errors surface on the next action
    });
  } else {
    setupForm(root, client);
  }
}

const rootElement = typeof document !== "undefined" ? document.getElementById("app") : null;
if (rootElement) {
  boot(rootElement);
}
