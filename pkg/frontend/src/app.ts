// Single-page bootstrap. The session id lives in the URL path
// (/ui/s/<id>) so sessions are shareable; the root path shows a small
// create form. Winner refresh is poll-based.

import { DomainSpec, SessionApi } from "./api.js";
import { SessionController } from "./state.js";
import { renderDuel, renderError, renderHistory, renderWinner } from "./view.js";

const POLL_MS = 4000;

export function sessionIdFromPath(pathname: string): string | null {
  const match = pathname.match(/\/ui\/s\/([A-Za-z0-9]+)\/?$/);
  return match ? match[1] : null;
}

export class DuelApp {
  readonly controller: SessionController;
  private pollHandle: ReturnType<typeof setInterval> | null = null;

  constructor(
    private root: HTMLElement,
    api: SessionApi,
    sessionId: string,
  ) {
    this.controller = new SessionController(api, sessionId);
    this.root.innerHTML = `
      <section data-region="error"></section>
      <section data-region="duel"></section>
      <section data-region="winner"></section>
      <section data-region="history"></section>
    `;
    this.controller.subscribe(() => this.render());
    this.root.addEventListener("click", (event) => {
      const target = event.target as HTMLElement;
      if (target.matches("button.answer")) {
        void this.controller.answer(target.dataset.side as "left" | "right");
      } else if (target.matches("button.retry")) {
        void this.controller.init();
      }
    });
  }

  region(name: string): HTMLElement {
    return this.root.querySelector(`[data-region="${name}"]`) as HTMLElement;
  }

  private render(): void {
    const model = this.controller.model;
    renderError(this.region("error"), model);
    renderDuel(this.region("duel"), model);
    renderWinner(this.region("winner"), model);
    renderHistory(this.region("history"), model);
  }

  async start(): Promise<void> {
    await this.controller.init();
    this.pollHandle = setInterval(() => void this.controller.refreshWinner(), POLL_MS);
  }

  stop(): void {
    if (this.pollHandle !== null) clearInterval(this.pollHandle);
  }
}

function renderCreateForm(root: HTMLElement, api: SessionApi): void {
  root.innerHTML = `
    <h2>New session</h2>
    <form data-role="create">
      <label>Dimensions
        <select name="dim"><option value="1">1</option><option value="2">2</option></select>
      </label>
      <label>Bounds (lo,hi per dim; semicolon-separated)
        <input name="bounds" value="0,1" />
      </label>
      <label>Policy
        <select name="policy">
          <option value="dts">dts</option>
          <option value="pe">pe</option>
          <option value="cei">cei</option>
          <option value="random">random</option>
        </select>
      </label>
      <label>Grid per dim <input name="grid" type="number" value="33" /></label>
      <label>Simulated objective (optional)
        <input name="simulated" placeholder="e.g. forrester" />
      </label>
      <button type="submit">Create</button>
    </form>
    <p data-role="create-error" class="error-banner" hidden></p>
  `;
  const form = root.querySelector("form") as HTMLFormElement;
  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const bounds = String(data.get("bounds"))
      .split(";")
      .map((pair) => pair.split(",").map(Number) as [number, number]);
    const domain: DomainSpec = { bounds, grid_per_dim: Number(data.get("grid")) };
    const simulated = String(data.get("simulated") ?? "").trim() || null;
    try {
      const { id } = await api.createSession(domain, String(data.get("policy")), { simulated });
      window.history.pushState({}, "", `/ui/s/${id}`);
      bootstrap(root);
    } catch (err) {
      const banner = root.querySelector('[data-role="create-error"]') as HTMLElement;
      banner.hidden = false;
      banner.textContent = String(err);
    }
  });
}

export function bootstrap(root: HTMLElement, api: SessionApi = new SessionApi()): DuelApp | null {
  const sessionId = sessionIdFromPath(window.location.pathname);
  if (sessionId === null) {
    renderCreateForm(root, api);
    return null;
  }
  const app = new DuelApp(root, api, sessionId);
  void app.start();
  return app;
}

if (typeof document !== "undefined" && document.getElementById("duel-root")) {
  bootstrap(document.getElementById("duel-root") as HTMLElement);
}
