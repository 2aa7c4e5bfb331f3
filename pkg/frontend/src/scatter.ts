/** SVG scatter of the era's objective front.
 *
 * x: tour length (f1), y: unserved dynamic customers (f2), both read straight
 * from the view model. The dashed horizontal line marks the era's upper bound
 * on unserved customers. Axis labels show only payload values (extremes), so
 * no displayed number is synthesized.
 */

import type { FrontView } from "./viewmodel.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const W = 460;
const H = 300;
const MARGIN = { left: 54, right: 16, top: 18, bottom: 34 };

function fmt(x: number): string {
  return Number.isInteger(x) ? String(x) : x.toFixed(1);
}

export interface ScatterCallbacks {
  onSelect: (index: number) => void;
}

export function renderScatter(root: Element, view: FrontView, cb: ScatterCallbacks): void {
  const doc = root.ownerDocument;
  root.textContent = "";
  const svg = doc.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${W} ${H}`);
  svg.setAttribute("class", "front-scatter");

  const f1s = view.points.map((p) => p.f1);
  const f2s = view.points.map((p) => p.f2).concat(view.upperBound);
  const f1lo = Math.min(...f1s);
  const f1hi = Math.max(...f1s);
  const f2hi = Math.max(...f2s, 1);
  const sx = (f1: number) =>
    f1hi === f1lo
      ? (MARGIN.left + W - MARGIN.right) / 2
      : MARGIN.left + ((f1 - f1lo) / (f1hi - f1lo)) * (W - MARGIN.left - MARGIN.right);
  const sy = (f2: number) => H - MARGIN.bottom - (f2 / f2hi) * (H - MARGIN.top - MARGIN.bottom);

  const bound = doc.createElementNS(SVG_NS, "line");
  bound.setAttribute("class", "upper-bound");
  bound.setAttribute("x1", String(MARGIN.left));
  bound.setAttribute("x2", String(W - MARGIN.right));
  bound.setAttribute("y1", String(sy(view.upperBound)));
  bound.setAttribute("y2", String(sy(view.upperBound)));
  bound.setAttribute("stroke-dasharray", "6 4");
  bound.setAttribute("data-upper-bound", String(view.upperBound));
  svg.appendChild(bound);
  const boundLabel = doc.createElementNS(SVG_NS, "text");
  boundLabel.setAttribute("x", String(W - MARGIN.right));
  boundLabel.setAttribute("y", String(sy(view.upperBound) - 4));
  boundLabel.setAttribute("text-anchor", "end");
  boundLabel.setAttribute("class", "upper-bound-label");
  boundLabel.textContent = `max unserved ${fmt(view.upperBound)}`;
  svg.appendChild(boundLabel);

  for (const p of view.points) {
    const g = doc.createElementNS(SVG_NS, "g");
    g.setAttribute("class", `member${p.dominated ? " dominated" : ""}${p.selected ? " selected" : ""}`);
    g.setAttribute("data-index", String(p.index));
    g.setAttribute("data-f1", String(p.f1));
    g.setAttribute("data-f2", String(p.f2));
    const dot = doc.createElementNS(SVG_NS, "circle");
    dot.setAttribute("cx", String(sx(p.f1)));
    dot.setAttribute("cy", String(sy(p.f2)));
    dot.setAttribute("r", p.selected ? "7" : "5");
    const title = doc.createElementNS(SVG_NS, "title");
    title.textContent = `#${p.index}: tour ${fmt(p.f1)}, unserved ${fmt(p.f2)}`;
    dot.appendChild(title);
    g.appendChild(dot);
    for (const label of p.ghosts) {
      const ghost = doc.createElementNS(SVG_NS, "text");
      ghost.setAttribute("class", "ghost-marker");
      ghost.setAttribute("x", String(sx(p.f1)));
      ghost.setAttribute("y", String(sy(p.f2) - 9));
      ghost.setAttribute("text-anchor", "middle");
      ghost.setAttribute("data-strategy", label);
      ghost.textContent = label;
      g.appendChild(ghost);
    }
    g.addEventListener("click", () => cb.onSelect(p.index));
    svg.appendChild(g);
  }

  // axis labels carry only values present in the payload (front extremes,
  // upper bound); nothing is synthesized
  const axis = doc.createElementNS(SVG_NS, "g");
  axis.setAttribute("class", "axes");
  const xLo = doc.createElementNS(SVG_NS, "text");
  xLo.setAttribute("x", String(MARGIN.left));
  xLo.setAttribute("y", String(H - 12));
  xLo.textContent = fmt(f1lo);
  axis.appendChild(xLo);
  if (f1hi !== f1lo) {
    const xHi = doc.createElementNS(SVG_NS, "text");
    xHi.setAttribute("x", String(W - MARGIN.right));
    xHi.setAttribute("y", String(H - 12));
    xHi.setAttribute("text-anchor", "end");
    xHi.textContent = fmt(f1hi);
    axis.appendChild(xHi);
  }
  const f2DataHi = Math.max(...f2s);
  const f2DataLo = Math.min(...view.points.map((p) => p.f2));
  const yHi = doc.createElementNS(SVG_NS, "text");
  yHi.setAttribute("x", "6");
  yHi.setAttribute("y", String(sy(f2DataHi) + 4));
  yHi.textContent = fmt(f2DataHi);
  axis.appendChild(yHi);
  if (f2DataLo !== f2DataHi) {
    const yLo = doc.createElementNS(SVG_NS, "text");
    yLo.setAttribute("x", "6");
    yLo.setAttribute("y", String(sy(f2DataLo)));
    yLo.textContent = fmt(f2DataLo);
    axis.appendChild(yLo);
  }
  svg.appendChild(axis);

  root.appendChild(svg);
}
