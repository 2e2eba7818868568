import init, { accuracy_curve_small, simulate_large, exact_k1_sandwich } from "./pkg/hamming_overfit_web.js";

const num = (id) => Number(document.getElementById(id).value);

// series: [{ points: [[x, y], ...], color, dashed, dots }]
function plot(canvas, series, xLabel) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 48;
  ctx.clearRect(0, 0, w, h);
  const all = series.flatMap((s) => s.points);
  if (all.length === 0) return;
  let [x0, x1] = [Math.min(...all.map((p) => p[0])), Math.max(...all.map((p) => p[0]))];
  let [y0, y1] = [Math.min(...all.map((p) => p[1])), Math.max(...all.map((p) => p[1]))];
  if (x0 === x1) x1 = x0 + 1;
  if (y0 === y1) y1 = y0 + 1e-3;
  const sx = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - y0) / (y1 - y0)) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad / 2, h - pad);
  ctx.stroke();
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(y1.toFixed(4), 2, sy(y1) + 4);
  ctx.fillText(y0.toFixed(4), 2, sy(y0));
  ctx.fillText(String(x0), sx(x0), h - pad + 14);
  ctx.fillText(String(x1), sx(x1) - 12, h - pad + 14);
  ctx.fillText(xLabel, w / 2, h - 8);

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.fillStyle = s.color;
    ctx.setLineDash(s.dashed ? [5, 4] : []);
    ctx.beginPath();
    s.points.forEach(([x, y], i) => (i ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y))));
    ctx.stroke();
    if (s.dots) s.points.forEach(([x, y]) => ctx.fillRect(sx(x) - 2, sy(y) - 2, 4, 4));
  }
  ctx.setLineDash([]);
}

function legend(canvas, entries) {
  const ctx = canvas.getContext("2d");
  entries.forEach(([text, color], i) => {
    ctx.fillStyle = color;
    ctx.fillText(text, canvas.width - 220, 18 + 14 * i);
  });
}

function guard(errId, f) {
  const el = document.getElementById(errId);
  el.textContent = "";
  try {
    f();
  } catch (e) {
    el.textContent = String(e);
  }
}

function runCurve() {
  guard("c-err", () => {
    const m = num("c-m");
    const pts = JSON.parse(accuracy_curve_small(num("c-n"), m, num("c-k"), num("c-p"), num("c-t"), num("c-s")));
    const canvas = document.getElementById("c-plot");
    plot(
      canvas,
      [
        { points: pts.map((p) => [p.k, p.mean]), color: "#1565c0", dots: true },
        { points: pts.map((p) => [p.k, p.mean + 2 * p.se]), color: "#90caf9", dashed: true },
        { points: pts.map((p) => [p.k, p.mean - 2 * p.se]), color: "#90caf9", dashed: true },
        { points: pts.map((p) => [p.k, p.bound]), color: "#c62828" },
        { points: pts.map((p) => [p.k, 1 / m]), color: "#777", dashed: true },
      ],
      "k",
    );
    legend(canvas, [
      ["mean accuracy (±2 SE)", "#1565c0"],
      ["lower bound", "#c62828"],
      ["1/m baseline", "#777"],
    ]);
  });
}

function runLarge() {
  const out = document.getElementById("l-out");
  try {
    const r = JSON.parse(simulate_large(num("l-n"), num("l-m"), num("l-k"), num("l-t"), num("l-s")));
    out.textContent = [
      `prefix length t      ${r.t}`,
      `mean accuracy        ${r.mean.toFixed(6)} ± ${r.se.toFixed(6)}`,
      `baseline 1/m         ${r.baseline.toFixed(6)}`,
      `lower bound          ${r.bound === null ? "not applicable at this k" : r.bound.toFixed(6)}`,
      `bound at realized t  ${r.bound_realized_t.toFixed(6)}`,
      `verdict              ${r.verdict}`,
    ].join("\n");
  } catch (e) {
    out.textContent = String(e);
  }
}

function runSandwich() {
  guard("s-err", () => {
    const rows = JSON.parse(exact_k1_sandwich(num("s-m"), num("s-n")));
    const canvas = document.getElementById("s-plot");
    plot(
      canvas,
      [
        { points: rows.map((r) => [r.n, r.upper]), color: "#c62828", dashed: true },
        { points: rows.map((r) => [r.n, r.accuracy]), color: "#1565c0", dots: true },
        { points: rows.map((r) => [r.n, r.lower]), color: "#2e7d32", dashed: true },
      ],
      "n",
    );
    const broken = rows.filter((r) => !(r.lower_holds && r.upper_holds)).map((r) => r.n);
    legend(canvas, [
      ["ceiling for any single query", "#c62828"],
      ["exact accuracy", "#1565c0"],
      ["lower bound", "#2e7d32"],
      [broken.length ? `outside at n = ${broken.join(", ")}` : "inside for every n", "#444"],
    ]);
  });
}

await init();
document.getElementById("c-run").onclick = runCurve;
document.getElementById("l-run").onclick = runLarge;
document.getElementById("s-run").onclick = runSandwich;
runCurve();
runLarge();
runSandwich();
