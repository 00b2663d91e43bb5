/** DOM bootstrap: wires the store to the page. The service base URL is
 * same-origin by default (the service can serve these assets at /ui). */

import { ApiClient } from "./api.js";
import {
  renderHistory,
  renderKbPicker,
  renderNetworkSvg,
  renderNodeCard,
  renderRecommendation,
  renderToast,
} from "./render.js";
import { SessionStore } from "./state.js";
import type { KbNode } from "./types.js";

const API_BASE = new URLSearchParams(location.search).get("api") ?? "";

const el = {
  picker: document.getElementById("kb-picker") as HTMLSelectElement,
  canvas: document.getElementById("canvas") as HTMLElement,
  cards: document.getElementById("cards") as HTMLElement,
  recommendation: document.getElementById("recommendation") as HTMLElement,
  history: document.getElementById("history") as HTMLElement,
  whatIfToggle: document.getElementById("whatif-toggle") as HTMLButtonElement,
  numericToggle: document.getElementById("numeric-toggle") as HTMLButtonElement,
  banner: document.getElementById("banner") as HTMLElement,
  toasts: document.getElementById("toasts") as HTMLElement,
};

let numericView = false;
const openCards = new Set<string>();
const positions: Record<string, { x: number; y: number }> = {};

const store = new SessionStore(new ApiClient(API_BASE), {
  changed: render,
  toast: showToast,
  offline: showBanner,
});

function showToast(message: string): void {
  el.toasts.insertAdjacentHTML("beforeend", renderToast(message));
  const node = el.toasts.lastElementChild;
  setTimeout(() => node?.remove(), 4000);
}

function showBanner(message: string): void {
  el.banner.innerHTML =
    `service unreachable (${message}) <button id="retry">retry</button>`;
  el.banner.hidden = false;
  document.getElementById("retry")?.addEventListener("click", () => {
    el.banner.hidden = true;
    void store.refresh().catch((err) => showBanner(String(err)));
  });
}

function render(): void {
  const kb = store.kb;
  if (!kb) return;
  const asserted = new Set(Object.keys(store.findings));
  if (store.overlay) for (const node of Object.keys(store.overlay)) asserted.add(node);
  el.canvas.innerHTML = renderNetworkSvg(kb, positions, asserted);
  el.canvas.querySelectorAll<SVGGElement>("g.node").forEach((g) => {
    g.addEventListener("dblclick", () => toggleCard(g.dataset.node as string));
    enableDrag(g);
  });

  el.cards.innerHTML = [...openCards]
    .map((id) => {
      const node = kb.nodes.find((n) => n.id === id) as KbNode;
      return renderNodeCard(node, store.displayedBeliefs, store.displayedFinding(id), {
        numeric: numericView,
        whatIf: store.whatIfMode && store.overlay !== null && id in store.overlay,
      });
    })
    .join("");
  el.cards.querySelectorAll<HTMLElement>(".value-row").forEach((row) => {
    row.querySelector("button.value-label")?.addEventListener("click", () => {
      void store.clickValue(row.dataset.node as string, row.dataset.value as string);
    });
  });

  el.recommendation.innerHTML = renderRecommendation(store.displayedRecommendation);
  el.history.innerHTML = renderHistory(store.history, store.findings);
  el.history.querySelectorAll<HTMLButtonElement>("button.retract").forEach((btn) => {
    btn.addEventListener("click", () => void store.retract(btn.dataset.node as string));
  });

  el.whatIfToggle.textContent = store.whatIfMode ? "exit what-if" : "what-if mode";
  el.whatIfToggle.classList.toggle("active", store.whatIfMode);
  el.numericToggle.textContent = numericView ? "graphical view" : "numeric view";
  document.body.classList.toggle("whatif", store.whatIfMode);
}

function toggleCard(id: string): void {
  if (openCards.has(id)) openCards.delete(id);
  else openCards.add(id);
  render();
}

function enableDrag(g: SVGGElement): void {
  // local drag only; positions are not persisted
  g.addEventListener("pointerdown", (down) => {
    const id = g.dataset.node as string;
    const start = positions[id];
    if (!start) return;
    const origin = { x: down.clientX, y: down.clientY };
    const move = (ev: PointerEvent) => {
      positions[id] = {
        x: start.x + (ev.clientX - origin.x),
        y: start.y + (ev.clientY - origin.y),
      };
      render();
    };
    const up = () => {
      window.removeEventListener("pointermove", move);
      window.removeEventListener("pointerup", up);
    };
    window.addEventListener("pointermove", move);
    window.addEventListener("pointerup", up);
  });
}

async function openKb(name: string): Promise<void> {
  openCards.clear();
  const params = new URLSearchParams(location.hash.slice(1));
  const existing = params.get("kb") === name ? params.get("session") ?? undefined : undefined;
  try {
    await store.open(name, existing);
  } catch {
    if (existing) await store.open(name); // stale session id in the URL
    else throw new Error("open failed");
  }
  const kb = store.kb;
  if (kb) {
    for (const node of kb.nodes) {
      positions[node.id] = { x: node.meta.display.x + 60, y: node.meta.display.y + 40 };
    }
  }
  location.hash = `kb=${encodeURIComponent(name)}&session=${store.sessionId}`;
  render();
}

async function boot(): Promise<void> {
  const client = store.client;
  let kbs;
  try {
    kbs = await client.listKbs();
  } catch (err) {
    showBanner(String(err));
    return;
  }
  el.picker.innerHTML = renderKbPicker(kbs.map((k) => k.name));
  el.picker.addEventListener("change", () => {
    if (el.picker.value) void openKb(el.picker.value).catch((e) => showBanner(String(e)));
  });
  el.whatIfToggle.addEventListener("click", () => {
    if (store.whatIfMode) store.exitWhatIf();
    else store.enterWhatIf();
  });
  el.numericToggle.addEventListener("click", () => {
    numericView = !numericView;
    render();
  });
  const params = new URLSearchParams(location.hash.slice(1));
  const kbFromUrl = params.get("kb");
  if (kbFromUrl && kbs.some((k) => k.name === kbFromUrl)) {
    el.picker.value = kbFromUrl;
    await openKb(kbFromUrl);
  }
}

void boot();
