import init, { explore_gate, explore_recollection } from "./pkg/dualmem_wasm.js";

const SVG = "http://www.w3.org/2000/svg";
const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function el(parent, name, attrs, text) {
  const node = document.createElementNS(SVG, name);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  parent.appendChild(node);
  return node;
}

function syncOutputs() {
  for (const input of document.querySelectorAll("input[type=range]")) {
    input.nextElementSibling.value = input.value;
  }
}

function polyline(svg, pts, color) {
  el(svg, "polyline", { points: pts.map((p) => p.join(",")).join(" "), fill: "none", stroke: color, "stroke-width": 2 });
}

function renderGate() {
  const r = JSON.parse(explore_gate($("scores").value, num("lambda"), num("theta_high"), num("theta_low"), num("tau")));
  const facts = $("gate-facts");
  const dist = $("dist");
  const curve = $("curve");
  dist.replaceChildren();
  curve.replaceChildren();
  if (r.error) {
    facts.innerHTML = `<span class="error">${r.error}</span>`;
    return;
  }
  const rule = {
    high: "mean ≥ θ high",
    low: "mean ≤ θ low",
    "entropy-low": "middle band, H ≤ τ",
    "entropy-high": "middle band, H > τ",
  }[r.reason];
  facts.textContent = [
    `mean       ${r.mean.toFixed(4)}`,
    `entropy H  ${r.entropy.toFixed(4)}  (max ln K = ${r.max_entropy.toFixed(4)})`,
    `p_max      ${r.p_max.toFixed(4)}`,
    `decision   ${r.strategy}  (${rule})`,
    `e^-τ       ${r.certificate.toFixed(4)}  (p_max bound when H ≤ τ)`,
    r.envelope_root === null ? "" : `envelope   ${r.envelope_root.toFixed(4)}  (max-entropy root)`,
  ].join("\n");

  // Softmax bars.
  const w = 700, h = 180, pad = 24;
  const bw = (w - 2 * pad) / r.distribution.length;
  r.distribution.forEach((p, i) => {
    const bh = p * (h - 2 * pad);
    el(dist, "rect", { x: pad + i * bw + 2, y: h - pad - bh, width: bw - 4, height: bh, fill: "#1f6fb2" });
    el(dist, "text", { x: pad + i * bw + bw / 2, y: h - 6, "text-anchor": "middle", "font-size": 11 }, r.scores[i].toFixed(2));
  });
  el(dist, "text", { x: pad, y: 14, "font-size": 12 }, "softmax over the probe scores");

  // Entropy and p_max against λ.
  const H = 220;
  const xs = (l) => pad + (l / 100) * (w - 2 * pad);
  const ysH = (v) => H - pad - (v / Math.max(r.max_entropy, 1e-9)) * (H - 2 * pad);
  const ysP = (v) => H - pad - v * (H - 2 * pad);
  polyline(curve, r.curve.map((c) => [xs(c.lambda), ysH(c.entropy)]), "#d2691e");
  polyline(curve, r.curve.map((c) => [xs(c.lambda), ysP(c.p_max)]), "#1f6fb2");
  el(curve, "line", { x1: pad, x2: w - pad, y1: ysH(num("tau")), y2: ysH(num("tau")), stroke: "#d2691e", "stroke-dasharray": "4 4" });
  el(curve, "line", { x1: xs(num("lambda")), x2: xs(num("lambda")), y1: pad, y2: H - pad, stroke: "#888" });
  el(curve, "text", { x: pad, y: 14, "font-size": 12, fill: "#d2691e" }, "entropy vs λ (dashed: τ)");
  el(curve, "text", { x: pad + 200, y: 14, "font-size": 12, fill: "#1f6fb2" }, "p_max vs λ");
}

let queryAngle = 0.3;

function renderRecollection() {
  const r = JSON.parse(
    explore_recollection(
      num("points"), num("clusters"), num("width"), num("seed"), queryAngle,
      num("beam"), num("fanout"), num("rounds"), num("alpha"), num("k"),
    ),
  );
  const svg = $("circle");
  svg.replaceChildren();
  const facts = $("rec-facts");
  if (r.error) {
    facts.innerHTML = `<span class="error">${r.error}</span>`;
    return;
  }
  const c = 260, rad = 200;
  const at = (a, s = rad) => [c + s * Math.cos(a), c - s * Math.sin(a)];
  el(svg, "circle", { cx: c, cy: c, r: rad, fill: "none", stroke: "#ddd" });

  for (const ray of r.rays) {
    const [x, y] = at(ray.angle, rad - 12);
    el(svg, "line", {
      x1: c, y1: c, x2: x, y2: y, stroke: "#d2691e",
      "stroke-opacity": 0.25 + 0.25 * ray.round, "stroke-dasharray": ray.kept ? "" : "3 4",
    });
  }
  const [qx, qy] = at(queryAngle, rad + 20);
  el(svg, "line", { x1: c, y1: c, x2: qx, y2: qy, stroke: "#222", "stroke-width": 2 });
  el(svg, "text", { x: qx, y: qy, "font-size": 12 }, "query");

  const fam = new Set(r.familiarity);
  const rec = new Set(r.recollection);
  const palette = ["#999", "#7a9", "#a79", "#97a", "#aa7", "#7aa", "#a97", "#79a", "#9a7", "#777", "#a77", "#7a7"];
  for (const p of r.points) {
    const [x, y] = at(p.angle);
    el(svg, "circle", { cx: x, cy: y, r: rec.has(p.id) ? 5 : 3, fill: rec.has(p.id) ? "#d2691e" : palette[p.cluster % palette.length] });
    if (fam.has(p.id)) el(svg, "circle", { cx: x, cy: y, r: 8, fill: "none", stroke: "#1f6fb2", "stroke-width": 2 });
  }

  const overlap = r.recollection.filter((id) => fam.has(id)).length;
  facts.textContent = [
    `rounds run        ${r.bagged_per_round.length}`,
    `bagged per round  ${r.bagged_per_round.map((b) => b.length).join(", ")}`,
    `shared with top-K ${overlap} / ${r.familiarity.length}`,
    `similarity evals  ${r.sim_evals}`,
  ].join("\n");
}

function onCircleClick(ev) {
  const box = ev.currentTarget.getBoundingClientRect();
  const x = ev.clientX - box.left - 260;
  const y = 260 - (ev.clientY - box.top);
  queryAngle = (Math.atan2(y, x) + 2 * Math.PI) % (2 * Math.PI);
  renderRecollection();
}

await init();
syncOutputs();
renderGate();
renderRecollection();
document.querySelectorAll("input, textarea").forEach((input) =>
  input.addEventListener("input", () => {
    syncOutputs();
    renderGate();
    renderRecollection();
  }),
);
$("circle").addEventListener("click", onCircleClick);
