// DOM rendering: duel chips with position markers, the Copeland score
// surface (polyline for 1-D, heat grid for 2-D), and the answer history.

import { DomainSpec, WinnerSpec } from "./api.js";
import { ViewModel, formatPoint } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function axisFraction(value: number, bounds: [number, number]): number {
  return (value - bounds[0]) / (bounds[1] - bounds[0]);
}

function renderMarkerAxis(domain: DomainSpec, left: number[], right: number[]): HTMLElement {
  const wrap = el("div", "axis");
  if (domain.bounds.length === 1) {
    const bar = el("div", "axis-bar");
    for (const [cls, point] of [["marker-left", left], ["marker-right", right]] as const) {
      const marker = el("div", `marker ${cls}`);
      marker.style.left = `${100 * axisFraction(point[0], domain.bounds[0])}%`;
      bar.appendChild(marker);
    }
    wrap.appendChild(bar);
  } else {
    const plane = el("div", "axis-plane");
    for (const [cls, point] of [["marker-left", left], ["marker-right", right]] as const) {
      const marker = el("div", `marker ${cls}`);
      marker.style.left = `${100 * axisFraction(point[0], domain.bounds[0])}%`;
      marker.style.top = `${100 * (1 - axisFraction(point[1], domain.bounds[1]))}%`;
      plane.appendChild(marker);
    }
    wrap.appendChild(plane);
  }
  return wrap;
}

export function renderDuel(container: HTMLElement, model: ViewModel): void {
  container.textContent = "";
  if (!model.duel || !model.domain) return;
  const heading = el("h2", "", `Duel ${model.duel.iteration}`);
  container.appendChild(heading);
  const row = el("div", "duel-row");
  for (const side of ["left", "right"] as const) {
    const point = model.duel[side];
    const card = el("div", `duel-card ${side}`);
    card.appendChild(el("div", "chip", `(${formatPoint(point)})`));
    const button = el("button", "answer", side === "left" ? "Prefer A" : "Prefer B");
    button.dataset.side = side;
    button.disabled = model.busy;
    card.appendChild(button);
    row.appendChild(card);
  }
  container.appendChild(row);
  container.appendChild(renderMarkerAxis(model.domain, model.duel.left, model.duel.right));
}

function winnerPolyline(winner: WinnerSpec, bounds: [number, number]): SVGSVGElement {
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", "0 0 100 40");
  svg.setAttribute("class", "score-line");
  const pts = winner.table.points
    .map((p, i) => ({ x: axisFraction(p[0], bounds), s: winner.table.scores[i] }))
    .sort((a, b) => a.x - b.x);
  // vertical axis fixed to the score range [0, 1]
  const path = pts.map((p) => `${(100 * p.x).toFixed(2)},${(40 - 40 * p.s).toFixed(2)}`).join(" ");
  const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
  line.setAttribute("points", path);
  line.setAttribute("fill", "none");
  line.setAttribute("stroke", "#2b6cb0");
  svg.appendChild(line);
  const wx = 100 * axisFraction(winner.point[0], bounds);
  const wy = 40 - 40 * winner.score;
  const dot = document.createElementNS("http://www.w3.org/2000/svg", "circle");
  dot.setAttribute("cx", wx.toFixed(2));
  dot.setAttribute("cy", wy.toFixed(2));
  dot.setAttribute("r", "1.6");
  dot.setAttribute("fill", "#c53030");
  dot.setAttribute("class", "winner-dot");
  svg.appendChild(dot);
  return svg;
}

function winnerHeatGrid(winner: WinnerSpec, domain: DomainSpec): HTMLElement {
  const n = domain.grid_per_dim;
  const grid = el("div", "heat-grid");
  grid.style.gridTemplateColumns = `repeat(${n}, 1fr)`;
  const lo = Math.min(...winner.table.scores);
  const hi = Math.max(...winner.table.scores);
  const span = hi - lo || 1;
  const winnerKey = winner.point.map((v) => v.toFixed(6)).join("|");
  // row-major points: first coordinate slowest; render rows top-down by
  // descending second coordinate so the plot is orientation-correct
  const cells = winner.table.points.map((p, i) => ({ p, s: winner.table.scores[i] }));
  cells.sort((a, b) => (b.p[1] - a.p[1]) || (a.p[0] - b.p[0]));
  for (const { p, s } of cells) {
    const cell = el("div", "heat-cell");
    const t = (s - lo) / span;
    cell.style.backgroundColor = `rgb(${Math.round(255 * (1 - t))}, ${Math.round(120 + 100 * t)}, 255)`;
    cell.title = `(${formatPoint(p)}) score ${s.toFixed(4)}`;
    if (p.map((v) => v.toFixed(6)).join("|") === winnerKey) cell.classList.add("winner-cell");
    grid.appendChild(cell);
  }
  return grid;
}

export function renderWinner(container: HTMLElement, model: ViewModel): void {
  container.textContent = "";
  if (!model.winner || !model.domain) {
    container.appendChild(
      el("p", "hint", "Answer a duel to see the current best guess."),
    );
    return;
  }
  container.appendChild(el("h2", "", "Current best guess"));
  container.appendChild(
    el(
      "p",
      "winner-label",
      `(${formatPoint(model.winner.point)})  score ${model.winner.score.toFixed(4)}`,
    ),
  );
  if (model.domain.bounds.length === 1) {
    container.appendChild(winnerPolyline(model.winner, model.domain.bounds[0]));
  } else {
    container.appendChild(winnerHeatGrid(model.winner, model.domain));
  }
}

export function renderHistory(container: HTMLElement, model: ViewModel): void {
  container.textContent = "";
  container.appendChild(el("h2", "", `History (${model.history.length})`));
  const list = el("ol", "history");
  for (const entry of model.history) {
    const winnerSide = entry.y === 1 ? "A" : "B";
    list.appendChild(
      el(
        "li",
        "",
        `A (${formatPoint(entry.left)}) vs B (${formatPoint(entry.right)}) -> ${winnerSide}`,
      ),
    );
  }
  container.appendChild(list);
}

export function renderError(container: HTMLElement, model: ViewModel): void {
  container.textContent = "";
  if (model.errorMessage) {
    const banner = el("div", "error-banner");
    banner.appendChild(el("span", "", `Service unreachable or rejected the request: ${model.errorMessage}`));
    const retry = el("button", "retry", "Retry");
    retry.dataset.action = "retry";
    banner.appendChild(retry);
    container.appendChild(banner);
  }
}
