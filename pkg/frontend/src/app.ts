/** Cockpit controller: one session view with a poll loop.
 *
 * The scatter drives the map: clicking a front point (or a strategy ghost
 * marker) selects that candidate and redraws its tours. Submit sends exactly
 * one decision per era regardless of extra clicks; conflicts and missing
 * sessions surface as a banner and trigger a state refresh.
 */

import { ServiceError, SessionApi } from "./api.js";
import { renderScatter } from "./scatter.js";
import { renderTourMap } from "./tourmap.js";
import type { SessionState } from "./types.js";
import { buildFrontView, buildHistoryView, buildMapView } from "./viewmodel.js";

export interface CockpitElements {
  scatter: Element;
  map: Element;
  history: Element;
  banner: Element;
  status: Element;
  submit: HTMLButtonElement;
}

export function buildSkeleton(doc: Document, mount: Element): CockpitElements {
  mount.innerHTML = `
    <div class="cockpit">
      <div id="banner" class="banner" hidden></div>
      <div id="status" class="status-line"></div>
      <div class="panels">
        <div id="scatter" class="panel scatter-panel"></div>
        <div id="map" class="panel map-panel"></div>
      </div>
      <button id="submit" class="submit" disabled>Realize selected plan</button>
      <ol id="history" class="history"></ol>
    </div>`;
  return {
    scatter: mount.querySelector("#scatter")!,
    map: mount.querySelector("#map")!,
    history: mount.querySelector("#history")!,
    banner: mount.querySelector("#banner")!,
    status: mount.querySelector("#status")!,
    submit: mount.querySelector("#submit") as HTMLButtonElement,
  };
}

const ERA_COLORS = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3"];

export class Cockpit {
  state: SessionState | null = null;
  selected: number | null = null;
  private decidedEra = 0; // last era a decision was sent for (idempotence)
  private inflight = false;

  constructor(
    private readonly api: SessionApi,
    private readonly sessionId: string,
    private readonly el: CockpitElements
  ) {
    this.el.submit.addEventListener("click", () => void this.submit());
  }

  /** One poll step: fetch state and redraw. */
  async refresh(): Promise<void> {
    try {
      this.state = await this.api.getState(this.sessionId);
      this.render();
    } catch (e) {
      this.showBanner(e instanceof ServiceError ? e.detail : String(e));
    }
  }

  select(index: number): void {
    if (!this.state?.decision) return;
    this.selected = index;
    this.render();
  }

  async submit(): Promise<void> {
    const decision = this.state?.decision;
    if (!decision || this.selected === null) return;
    if (this.inflight || this.decidedEra >= decision.era) return; // one shot per era
    this.inflight = true;
    this.el.submit.disabled = true;
    try {
      await this.api.decide(this.sessionId, this.selected);
      this.decidedEra = decision.era;
      this.selected = null;
    } catch (e) {
      if (e instanceof ServiceError && (e.status === 409 || e.status === 404)) {
        this.showBanner(e.detail);
      } else {
        this.showBanner(String(e));
      }
    } finally {
      this.inflight = false;
    }
    await this.refresh();
  }

  render(): void {
    const state = this.state;
    if (!state) return;
    const el = this.el;
    if (state.status === "awaiting_decision" && state.decision) {
      const decision = state.decision;
      if (this.selected === null) {
        this.selected = decision.strategy_ghosts["0.5"] ?? 1;
      }
      el.status.textContent =
        `era ${decision.era}/${state.n_eras} — t=${decision.t} — ` +
        `pick one of ${decision.mu} plans`;
      renderScatter(el.scatter, buildFrontView(decision, this.selected), {
        onSelect: (i) => this.select(i),
      });
      renderTourMap(el.map, buildMapView(state, this.selected));
      el.submit.disabled = false;
    } else {
      el.status.textContent =
        state.status === "computing"
          ? `optimizing era ${state.history.length + 1}/${state.n_eras}…`
          : `session ${state.status}` + (state.error ? ` — ${state.error}` : "");
      el.submit.disabled = true;
      if (state.status === "finished") {
        el.scatter.textContent = "";
        el.map.textContent = "";
      }
    }
    this.renderHistory();
  }

  private renderHistory(): void {
    const doc = this.el.history.ownerDocument;
    this.el.history.textContent = "";
    for (const h of buildHistoryView(this.state?.history ?? [])) {
      const li = doc.createElement("li");
      li.setAttribute("data-era", String(h.era));
      li.style.color = ERA_COLORS[(h.era - 1) % ERA_COLORS.length];
      li.textContent =
        `era ${h.era}: chose #${h.chosenIndex} — tour ${h.f1.toFixed(1)}, ` +
        `unserved ${h.f2} (bound ${h.upperBound})`;
      this.el.history.appendChild(li);
    }
  }

  private showBanner(message: string): void {
    this.el.banner.textContent = message;
    (this.el.banner as HTMLElement).hidden = false;
  }
}

/** Browser bootstrap: ?service=<base-url>&session=<id> (or &resume=<id> to
 * replay a snapshotted session); otherwise latest session or create via
 * prompt. */
export async function main(doc: Document): Promise<void> {
  const params = new URLSearchParams(doc.defaultView!.location.search);
  const base = params.get("service") ?? "http://127.0.0.1:8711";
  const api = new SessionApi(base);
  let sessionId = params.get("session");
  const resumeId = params.get("resume");
  if (!sessionId && resumeId) {
    sessionId = (await api.resumeSession(resumeId)).session_id;
  }
  if (!sessionId) {
    const listing = await api.listSessions();
    if (listing.sessions.length) {
      sessionId = listing.sessions[listing.sessions.length - 1].id;
    } else {
      const file = doc.defaultView!.prompt("instance file on the service host:", "instance.json");
      if (!file) return;
      sessionId = (await api.createSession({ instance_file: file })).session_id;
    }
  }
  const el = buildSkeleton(doc, doc.querySelector("#app")!);
  const cockpit = new Cockpit(api, sessionId, el);
  const loop = async () => {
    await cockpit.refresh();
    if (cockpit.state?.status === "finished" || cockpit.state?.status === "aborted") return;
    doc.defaultView!.setTimeout(loop, 700);
  };
  await loop();
}
