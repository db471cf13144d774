// Demo page driver: reads the controls, calls the wasm exports, draws the
// three plots on plain canvases. Build the module first:
//   wasm-pack build --target web --out-dir www/pkg crates/wasm
import init, { run_demo, tuning_paths, descent_trace } from "./pkg/transco_wasm.js";

const $ = (id) => document.getElementById(id);
const status = (msg, isErr = false) => {
  const el = $("status");
  el.textContent = msg;
  el.className = isErr ? "err" : "";
};

function config() {
  return JSON.stringify({
    n: +$("n").value,
    p: +$("p").value,
    k: +$("k").value,
    n_source: +$("nsrc").value,
    s: +$("s").value,
    rho: +$("rho").value,
    h: +$("h").value,
    seed: +$("seed").value,
  });
}

function frame(canvas, margin = { l: 52, r: 12, t: 10, b: 28 }) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  return {
    ctx,
    x0: margin.l,
    y0: margin.t,
    w: canvas.width - margin.l - margin.r,
    h: canvas.height - margin.t - margin.b,
  };
}

function axes(f, xLabel, yLabel, xTicks, yTicks) {
  const { ctx } = f;
  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#555";
  ctx.font = "11px system-ui";
  ctx.strokeRect(f.x0, f.y0, f.w, f.h);
  for (const [frac, label] of xTicks) {
    const x = f.x0 + frac * f.w;
    ctx.beginPath(); ctx.moveTo(x, f.y0 + f.h); ctx.lineTo(x, f.y0 + f.h + 4); ctx.stroke();
    ctx.textAlign = "center";
    ctx.fillText(label, x, f.y0 + f.h + 16);
  }
  for (const [frac, label] of yTicks) {
    const y = f.y0 + (1 - frac) * f.h;
    ctx.beginPath(); ctx.moveTo(f.x0 - 4, y); ctx.lineTo(f.x0, y); ctx.stroke();
    ctx.textAlign = "right";
    ctx.fillText(label, f.x0 - 6, y + 3);
  }
  ctx.textAlign = "center";
  ctx.fillText(xLabel, f.x0 + f.w / 2, f.y0 + f.h + 26);
  ctx.save();
  ctx.translate(12, f.y0 + f.h / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(yLabel, 0, 0);
  ctx.restore();
}

function niceTicks(lo, hi, count = 5) {
  const ticks = [];
  for (let i = 0; i <= count; i++) {
    const v = lo + ((hi - lo) * i) / count;
    ticks.push([(v - lo) / (hi - lo || 1), v.toPrecision(3)]);
  }
  return ticks;
}

function drawScatter(result) {
  const canvas = $("scatter");
  const f = frame(canvas);
  const res = result.ols_residuals;
  const n = res.length;
  const lo = Math.min(...res, -1), hi = Math.max(...res, 1);
  const pad = 0.08 * (hi - lo);
  const yMap = (v) => f.y0 + (1 - (v - lo + pad) / (hi - lo + 2 * pad)) * f.h;
  const xMap = (i) => f.x0 + ((i + 0.5) / n) * f.w;
  axes(f, "observation index", "residual", niceTicks(0, n - 1), niceTicks(lo, hi));

  const { ctx } = f;
  // zero line
  ctx.strokeStyle = "#ddd";
  ctx.beginPath(); ctx.moveTo(f.x0, yMap(0)); ctx.lineTo(f.x0 + f.w, yMap(0)); ctx.stroke();

  const truth = new Set(result.truth_outliers);
  const ipod = new Set(result.ipod.detected);
  const transco = new Set(result.transco.detected);
  for (let i = 0; i < n; i++) {
    const x = xMap(i), y = yMap(res[i]);
    ctx.fillStyle = truth.has(i) ? "#e76f51" : "#b5c0cc";
    ctx.beginPath(); ctx.arc(x, y, truth.has(i) ? 4.5 : 2.5, 0, 7); ctx.fill();
    if (transco.has(i)) {
      ctx.strokeStyle = "#2a9d8f"; ctx.lineWidth = 2;
      ctx.beginPath(); ctx.arc(x, y, 7, 0, 7); ctx.stroke(); ctx.lineWidth = 1;
    }
    if (ipod.has(i)) {
      ctx.strokeStyle = "#6c757d";
      ctx.beginPath();
      ctx.moveTo(x - 5, y - 5); ctx.lineTo(x + 5, y + 5);
      ctx.moveTo(x - 5, y + 5); ctx.lineTo(x + 5, y - 5);
      ctx.stroke();
    }
  }

  const table = $("scoreTable");
  table.hidden = false;
  const fmt = (v, d = 3) => Number(v).toFixed(d);
  table.querySelector("tbody").innerHTML = ["transco", "ipod"]
    .map((m) => {
      const r = result[m];
      return `<tr><td>${m === "transco" ? "Trans-CO" : "Θ-IPOD"}</td><td>${fmt(r.f1)}</td>` +
        `<td>${fmt(r.precision)}</td><td>${fmt(r.recall)}</td><td>${fmt(r.log_mse, 2)}</td>` +
        `<td>${Number(r.lambda).toPrecision(3)}</td><td>${r.iterations}</td></tr>`;
    })
    .join("");
}

function drawPaths(paths) {
  const canvas = $("path");
  const f = frame(canvas);
  const series = [
    { p: paths.transco, color: "#2a9d8f", label: "Trans-CO" },
    { p: paths.ipod, color: "#6c757d", label: "Θ-IPOD" },
  ];
  // x: grid position (log lambda is uneven only at the appended zero).
  let bics = [];
  for (const s of series) bics = bics.concat(s.p.bic.filter((v) => Number.isFinite(v)));
  const lo = Math.min(...bics), hi = Math.max(...bics);
  const pad = 0.06 * (hi - lo || 1);
  axes(f, "grid position (large penalty → 0)", "BIC*",
    [[0, "top"], [1, "0"]], niceTicks(lo, hi));
  const { ctx } = f;
  series.forEach((s, si) => {
    const m = s.p.bic.length;
    const xMap = (i) => f.x0 + (i / (m - 1)) * f.w;
    const yMap = (v) => f.y0 + (1 - (v - lo + pad) / (hi - lo + 2 * pad)) * f.h;
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    let started = false;
    s.p.bic.forEach((v, i) => {
      if (!Number.isFinite(v)) return;
      const x = xMap(i), y = yMap(v);
      started ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
      started = true;
    });
    ctx.stroke();
    const bi = s.p.best_index;
    if (Number.isFinite(s.p.bic[bi])) {
      ctx.fillStyle = s.color;
      ctx.beginPath(); ctx.arc(xMap(bi), yMap(s.p.bic[bi]), 5, 0, 7); ctx.fill();
    }
    ctx.fillStyle = s.color;
    ctx.textAlign = "left";
    ctx.fillText(`${s.label} (selected DF ${s.p.df[bi]})`, f.x0 + 10, f.y0 + 16 + 14 * si);
  });
}

function drawTrace(trace) {
  const canvas = $("trace");
  const f = frame(canvas);
  const t = trace.objective_trace;
  const lo = Math.min(...t), hi = Math.max(...t);
  const pad = 0.06 * (hi - lo || 1);
  axes(f, `half-step (λ = ${Number(trace.lambda).toPrecision(3)}, ` +
    `${trace.converged ? "converged" : "iteration cap"} after ${trace.iterations} iterations)`,
    "objective", niceTicks(0, t.length - 1), niceTicks(lo, hi));
  const { ctx } = f;
  ctx.strokeStyle = "#1d3557";
  ctx.beginPath();
  t.forEach((v, i) => {
    const x = f.x0 + (i / (t.length - 1 || 1)) * f.w;
    const y = f.y0 + (1 - (v - lo + pad) / (hi - lo + 2 * pad)) * f.h;
    i ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
  });
  ctx.stroke();
}

function parse(json) {
  const v = JSON.parse(json);
  if (v.error) throw new Error(v.error);
  return v;
}

let busy = false;
async function refresh() {
  if (busy) return;
  busy = true;
  $("runBtn").disabled = true;
  status("fitting…");
  // Let the browser paint before the synchronous wasm work.
  await new Promise((r) => setTimeout(r, 20));
  try {
    const cfg = config();
    drawScatter(parse(run_demo(cfg)));
    drawPaths(parse(tuning_paths(cfg)));
    drawTrace(parse(descent_trace(cfg, +$("lfrac").value)));
    status("done");
  } catch (e) {
    status(e.message, true);
  } finally {
    busy = false;
    $("runBtn").disabled = false;
  }
}

async function refreshTraceOnly() {
  if (busy) return;
  busy = true;
  status("fitting…");
  await new Promise((r) => setTimeout(r, 20));
  try {
    drawTrace(parse(descent_trace(config(), +$("lfrac").value)));
    status("done");
  } catch (e) {
    status(e.message, true);
  } finally {
    busy = false;
  }
}

await init();
$("runBtn").addEventListener("click", refresh);
$("rho").addEventListener("input", () => ($("rhoVal").textContent = (+$("rho").value).toFixed(2)));
$("h").addEventListener("input", () => ($("hVal").textContent = (+$("h").value).toFixed(2)));
$("lfrac").addEventListener("input", () => ($("lfracVal").textContent = (+$("lfrac").value).toFixed(2)));
$("lfrac").addEventListener("change", refreshTraceOnly);
refresh();
