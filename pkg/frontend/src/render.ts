/** Markup builders. Pure functions from state to HTML/SVG strings so the
 * view layer is testable without a browser; main.ts owns DOM wiring. */

import type {
  Beliefs,
  KbNetwork,
  KbNode,
  Recommendation,
  SessionEvent,
} from "./types.js";
import { nodeValues } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function formatPercent(p: number): string {
  return (p * 100).toFixed(1) + "%";
}

function rgb(color: [number, number, number]): string {
  return `rgb(${color[0]},${color[1]},${color[2]})`;
}

const NODE_W = 96;
const NODE_H = 44;

/** Network canvas: ellipses for chance nodes, rectangles for decisions,
 * diamonds for values, arrows for arcs. Positions/colors come from the
 * KB's display metadata. */
export function renderNetworkSvg(
  kb: KbNetwork,
  positions: Record<string, { x: number; y: number }>,
  asserted: Set<string>,
): string {
  const pos = (id: string) => positions[id] ?? { x: 0, y: 0 };
  const arrows = kb.nodes
    .flatMap((node) =>
      node.parents.map((parent) => {
        const a = pos(parent);
        const b = pos(node.id);
        return `<line class="arc" x1="${a.x}" y1="${a.y}" x2="${b.x}" y2="${b.y}" marker-end="url(#arrow)"/>`;
      }),
    )
    .join("");
  const shapes = kb.nodes
    .map((node) => {
      const { x, y } = pos(node.id);
      const fill = rgb(node.meta.display.color);
      const opacity = 0.25 + 0.75 * node.meta.display.shade;
      const mark = asserted.has(node.id) ? " asserted" : "";
      let shape: string;
      if (node.kind === "chance") {
        shape = `<ellipse cx="${x}" cy="${y}" rx="${NODE_W / 2}" ry="${NODE_H / 2}"/>`;
      } else if (node.kind === "decision") {
        shape = `<rect x="${x - NODE_W / 2}" y="${y - NODE_H / 2}" width="${NODE_W}" height="${NODE_H}"/>`;
      } else {
        const points = [
          `${x},${y - NODE_H / 2 - 6}`,
          `${x + NODE_W / 2},${y}`,
          `${x},${y + NODE_H / 2 + 6}`,
          `${x - NODE_W / 2},${y}`,
        ].join(" ");
        shape = `<polygon points="${points}"/>`;
      }
      const label = escapeHtml(node.meta.name || node.id);
      return (
        `<g class="node ${node.kind}${mark}" data-node="${escapeHtml(node.id)}" ` +
        `fill="${fill}" fill-opacity="${opacity.toFixed(2)}">` +
        `${shape}<text x="${x}" y="${y + 4}" text-anchor="middle">${label}</text></g>`
      );
    })
    .join("");
  const xs = kb.nodes.map((n) => pos(n.id).x);
  const ys = kb.nodes.map((n) => pos(n.id).y);
  const width = Math.max(...xs, 200) + NODE_W;
  const height = Math.max(...ys, 160) + NODE_H + 20;
  return (
    `<svg viewBox="0 0 ${width} ${height}" width="${width}" height="${height}">` +
    `<defs><marker id="arrow" viewBox="0 0 10 10" refX="22" refY="5" ` +
    `markerWidth="7" markerHeight="7" orient="auto-start-reverse">` +
    `<path d="M 0 0 L 10 5 L 0 10 z"/></marker></defs>${arrows}${shapes}</svg>`
  );
}

/** Node card: name header, question text, clickable values with belief
 * bars (numeric and graphical views of the same numbers). */
export function renderNodeCard(
  node: KbNode,
  beliefs: Beliefs,
  assertedState: string | undefined,
  options: { numeric: boolean; whatIf: boolean },
): string {
  const values = nodeValues(node);
  const dist = beliefs[node.id];
  const rows = values
    .map((value) => {
      const p = dist?.[value];
      const isAsserted = assertedState === value;
      const classes = ["value-row"];
      if (isAsserted) classes.push(options.whatIf ? "overlaid" : "asserted");
      let bar = "";
      if (p !== undefined) {
        bar = options.numeric
          ? `<span class="belief-num" title="${p}">${formatPercent(p)}</span>`
          : `<span class="belief-bar" title="${p}"><span class="belief-fill" ` +
            `style="width:${(p * 100).toFixed(1)}%"></span></span>` +
            `<span class="belief-num">${formatPercent(p)}</span>`;
      }
      return (
        `<li class="${classes.join(" ")}" data-node="${escapeHtml(node.id)}" ` +
        `data-value="${escapeHtml(value)}">` +
        `<button class="value-label">${escapeHtml(value)}</button>` +
        `${bar}${isAsserted ? '<span class="marker">●</span>' : ""}</li>`
      );
    })
    .join("");
  return (
    `<div class="node-card" data-node="${escapeHtml(node.id)}">` +
    `<h3>${escapeHtml(node.meta.name || node.id)}</h3>` +
    (node.meta.question
      ? `<p class="question">${escapeHtml(node.meta.question)}</p>`
      : "") +
    (node.meta.description
      ? `<p class="description">${escapeHtml(node.meta.description)}</p>`
      : "") +
    `<ul class="values">${rows}</ul>` +
    (node.kind === "value"
      ? '<p class="note">Value node: summarizes preferences, not instantiable.</p>'
      : "") +
    `</div>`
  );
}

export function renderRecommendation(rec: Recommendation | null): string {
  if (rec === null) return "";
  const rows = rec.ranking
    .map((entry, i) => {
      const config = Object.entries(entry.configuration)
        .map(([node, alt]) => `${escapeHtml(node)} = ${escapeHtml(alt)}`)
        .join(", ");
      const eu = entry.feasible
        ? (entry.expected_utility as number).toFixed(3)
        : "impossible";
      const cls = i === 0 ? "best" : entry.feasible ? "" : "infeasible";
      return `<li class="${cls}"><span class="config">${config || "(no free decisions)"}</span>` +
        `<span class="eu">${eu}</span></li>`;
    })
    .join("");
  return `<ol class="recommendation">${rows}</ol>`;
}

export function renderHistory(
  events: SessionEvent[],
  findings: Record<string, string>,
): string {
  const rows = events
    .map((event) => {
      const what =
        event.node === null
          ? "session created"
          : `${escapeHtml(event.node)}${event.state !== null ? " = " + escapeHtml(event.state) : ""}`;
      const retract =
        event.kind === "asserted" && event.node !== null && event.node in findings
          ? `<button class="retract" data-node="${escapeHtml(event.node)}">retract</button>`
          : "";
      return `<li class="event ${event.kind}"><span class="seq">#${event.seq}</span> ` +
        `<span class="kind">${event.kind}</span> ${what}${retract}</li>`;
    })
    .join("");
  return `<ul class="history">${rows}</ul>`;
}

export function renderKbPicker(names: string[]): string {
  const options = names
    .map((n) => `<option value="${escapeHtml(n)}">${escapeHtml(n)}</option>`)
    .join("");
  return `<option value="">select a knowledge base…</option>${options}`;
}

export function renderToast(message: string): string {
  return `<div class="toast">${escapeHtml(message)}</div>`;
}
