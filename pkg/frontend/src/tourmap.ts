/** SVG map of one candidate's tour plan in instance coordinates.
 *
 * Realized (irreversible) leading edges are drawn bold; the planned remainder
 * thin. Customers that have not requested yet are faded. Uniform scaling
 * only; no basemap.
 */

import type { MapView } from "./viewmodel.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const SIZE = 420;
const PAD = 18;

const VEHICLE_COLORS = ["#1b6ca8", "#c0392b", "#1e8449", "#8e44ad", "#b7750b"];

export function renderTourMap(root: Element, view: MapView): void {
  const doc = root.ownerDocument;
  root.textContent = "";
  const svg = doc.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${SIZE} ${SIZE}`);
  svg.setAttribute("class", "tour-map");

  const xs = view.customers.map((c) => c.x).concat(view.startDepot.x, view.endDepot.x);
  const ys = view.customers.map((c) => c.y).concat(view.startDepot.y, view.endDepot.y);
  const lo = Math.min(...xs, ...ys);
  const hi = Math.max(...xs, ...ys);
  const span = hi - lo || 1;
  const s = (v: number) => PAD + ((v - lo) / span) * (SIZE - 2 * PAD);

  for (const vt of view.vehicles) {
    const color = VEHICLE_COLORS[(vt.vehicle - 1) % VEHICLE_COLORS.length];
    for (let i = 0; i + 1 < vt.nodes.length; i++) {
      const a = vt.nodes[i];
      const b = vt.nodes[i + 1];
      const edge = doc.createElementNS(SVG_NS, "line");
      const realized = i < vt.realizedEdges;
      edge.setAttribute("class", `tour-edge vehicle-${vt.vehicle}${realized ? " realized" : ""}`);
      edge.setAttribute("x1", String(s(a.x)));
      edge.setAttribute("y1", String(s(a.y)));
      edge.setAttribute("x2", String(s(b.x)));
      edge.setAttribute("y2", String(s(b.y)));
      edge.setAttribute("stroke", color);
      edge.setAttribute("stroke-width", realized ? "4" : "1.4");
      svg.appendChild(edge);
    }
  }

  for (const c of view.customers) {
    const dot = doc.createElementNS(SVG_NS, "circle");
    dot.setAttribute(
      "class",
      `customer ${c.kind}${c.requested ? "" : " not-requested"}`
    );
    dot.setAttribute("data-id", String(c.id));
    dot.setAttribute("cx", String(s(c.x)));
    dot.setAttribute("cy", String(s(c.y)));
    dot.setAttribute("r", "4");
    dot.setAttribute("opacity", c.requested ? "1.0" : "0.25");
    svg.appendChild(dot);
  }

  for (const [cls, pos, label] of [
    ["start-depot", view.startDepot, "S"],
    ["end-depot", view.endDepot, "E"],
  ] as const) {
    const sq = doc.createElementNS(SVG_NS, "rect");
    sq.setAttribute("class", `depot ${cls}`);
    sq.setAttribute("x", String(s(pos.x) - 5));
    sq.setAttribute("y", String(s(pos.y) - 5));
    sq.setAttribute("width", "10");
    sq.setAttribute("height", "10");
    svg.appendChild(sq);
    const txt = doc.createElementNS(SVG_NS, "text");
    txt.setAttribute("x", String(s(pos.x) + 8));
    txt.setAttribute("y", String(s(pos.y) + 4));
    txt.setAttribute("class", "depot-label");
    txt.textContent = label;
    svg.appendChild(txt);
  }

  root.appendChild(svg);
}
