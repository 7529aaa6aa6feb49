// Glue between the page controls and the wasm module. Plotting is a small
// hand-rolled canvas helper; no framework, no chart library.

import init, { design_report, run_scenario, frequency_sweep } from "./pkg/boostsw_wasm.js";

const $ = (id) => document.getElementById(id);

function currentConfig() {
  return {
    alpha: Number($("alpha").value),
    lambda: Number($("lambda").value),
    gamma: Number($("gamma").value),
    fs_target: Number($("fs").value) * 1e3,
    noise_enabled: $("noise").value === "true",
    variant: $("variant").value,
    seed: Number($("seed").value),
  };
}

function syncOutputs() {
  for (const id of ["alpha", "lambda", "gamma", "fs"]) {
    const el = $(id);
    el.parentElement.querySelector("output").textContent = el.value;
  }
}

// ---------------------------------------------------------------- plotting

function makeScale(lo, hi, a, b) {
  if (hi - lo < 1e-12) { hi = lo + 1; }
  const k = (b - a) / (hi - lo);
  return (v) => a + (v - lo) * k;
}

function niceTicks(lo, hi, n = 5) {
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = span / n / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = mult * step;
  const ticks = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-12 * span; v += s) ticks.push(v);
  return ticks;
}

function fmt(v) {
  const a = Math.abs(v);
  if (a >= 1e4 || (a > 0 && a < 1e-2)) return v.toExponential(1);
  return +v.toFixed(3) + "";
}

// series: [{x, y, color, width, dash, fillTo}]
function plot(canvas, title, series, opts = {}) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height;
  const L = 52, R = 10, T = 22, B = 26;
  ctx.clearRect(0, 0, W, H);

  let xlo = Infinity, xhi = -Infinity, ylo = Infinity, yhi = -Infinity;
  for (const s of series) {
    for (const v of s.x) { if (v < xlo) xlo = v; if (v > xhi) xhi = v; }
    for (const v of s.y) { if (v < ylo) ylo = v; if (v > yhi) yhi = v; }
    if (s.fillTo) for (const v of s.fillTo) { if (v < ylo) ylo = v; if (v > yhi) yhi = v; }
  }
  if (opts.ylo !== undefined) ylo = Math.min(ylo, opts.ylo);
  if (opts.yhi !== undefined) yhi = Math.max(yhi, opts.yhi);
  const pad = 0.06 * (yhi - ylo || 1);
  ylo -= pad; yhi += pad;

  const sx = makeScale(xlo, xhi, L, W - R);
  const sy = makeScale(ylo, yhi, H - B, T);

  ctx.strokeStyle = "#eee";
  ctx.fillStyle = "#888";
  ctx.font = "10px system-ui";
  ctx.textAlign = "right";
  for (const ty of niceTicks(ylo, yhi)) {
    ctx.beginPath(); ctx.moveTo(L, sy(ty)); ctx.lineTo(W - R, sy(ty)); ctx.stroke();
    ctx.fillText(fmt(ty), L - 4, sy(ty) + 3);
  }
  ctx.textAlign = "center";
  for (const tx of niceTicks(xlo, xhi, 6)) {
    ctx.fillText(fmt(tx), sx(tx), H - B + 14);
  }
  ctx.fillStyle = "#333";
  ctx.textAlign = "left";
  ctx.font = "12px system-ui";
  ctx.fillText(title, L, 13);

  for (const s of series) {
    if (s.fillTo) {
      ctx.fillStyle = s.color + "33";
      ctx.beginPath();
      ctx.moveTo(sx(s.x[0]), sy(s.y[0]));
      for (let i = 1; i < s.x.length; i++) ctx.lineTo(sx(s.x[i]), sy(s.y[i]));
      for (let i = s.x.length - 1; i >= 0; i--) ctx.lineTo(sx(s.x[i]), sy(s.fillTo[i]));
      ctx.closePath(); ctx.fill();
      continue;
    }
    ctx.strokeStyle = s.color;
    ctx.lineWidth = s.width || 1.3;
    ctx.setLineDash(s.dash || []);
    ctx.beginPath();
    ctx.moveTo(sx(s.x[0]), sy(s.y[0]));
    for (let i = 1; i < s.x.length; i++) ctx.lineTo(sx(s.x[i]), sy(s.y[i]));
    ctx.stroke();
    ctx.setLineDash([]);
  }

  if (opts.legend) {
    let x = W - R - 10;
    ctx.font = "10px system-ui";
    ctx.textAlign = "right";
    for (const [label, color] of opts.legend) {
      ctx.fillStyle = color;
      ctx.fillText(label, x, T + 10);
      x -= ctx.measureText(label).width + 16;
    }
  }
}

// ----------------------------------------------------------------- actions

function showDesign() {
  const report = JSON.parse(design_report(JSON.stringify(currentConfig())));
  const el = $("design-report");
  el.classList.toggle("infeasible", !report.feasible);
  if (!report.feasible) {
    el.textContent =
      `INFEASIBLE at alpha = ${report.alpha} 1/s\n` +
      `best achievable constraint slack: ${report.best_slack.toExponential(3)}\n` +
      `decay-rate ceiling alpha_bar = ${report.alpha_bar.toFixed(1)} 1/s`;
    return null;
  }
  const p = report.p, k = report.kappa;
  el.textContent =
    `feasible, alpha = ${report.alpha} 1/s (ceiling alpha_bar = ${report.alpha_bar.toFixed(1)})\n` +
    `P = [[${p[0][0].toFixed(5)}, ${p[0][1].toFixed(5)}], [${p[1][0].toFixed(5)}, ${p[1][1].toFixed(5)}]]  ` +
    `(lambda_min = ${report.pmin_eig.toExponential(3)})\n` +
    `vertex slacks: ${report.slack_min_vertex.toExponential(3)}, ${report.slack_max_vertex.toExponential(3)}\n` +
    `kappa = diag(${k[0][0]}, ${k[1][1]}),  lambda_theta = ${report.lambda_theta}\n` +
    `nominal target: iL* = ${report.il_star_nominal.toFixed(2)} A, duty = ${report.sigma_star_nominal.toFixed(4)}\n` +
    `hysteresis half-width h = ${report.h_nominal.toExponential(4)} for ${report.fs_target / 1e3} kHz`;
  return report;
}

function showMetrics(windows) {
  if (!windows.length) { $("metrics").innerHTML = ""; return; }
  const rows = windows.map((w) =>
    `<tr><td>${w.t0}..${w.t1} s</td><td>${w.mean_vo.toFixed(2)}</td>` +
    `<td>${w.max_abs_vo_err.toFixed(2)}</td><td>${w.mean_abs_p1_err.toExponential(2)}</td>` +
    `<td>${w.mean_abs_p2_err.toExponential(2)}</td><td>${(w.switching_frequency_hz / 1e3).toFixed(1)}</td></tr>`
  ).join("");
  $("metrics").innerHTML =
    `<table class="metrics"><tr><th>window</th><th>mean vo (V)</th><th>max |vo err| (V)</th>` +
    `<th>mean |p1 err| (V)</th><th>mean |p2 err| (A)</th><th>fs (kHz)</th></tr>${rows}</table>`;
}

function runSimulation() {
  const scenario = $("scenario").value;
  const res = JSON.parse(run_scenario(scenario, JSON.stringify(currentConfig())));
  const pl = res.plot;
  $("plot-sweep").style.display = "none";
  plot($("plot-vo"), "output voltage vo (V)", [
    { x: pl.t, y: pl.vo_max, fillTo: pl.vo_min, color: "#0b6e99" },
    { x: pl.t, y: pl.vo, color: "#0b6e99", width: 1.6 },
    { x: pl.t, y: pl.vo_star, color: "#b3261e", dash: [5, 4] },
  ], { legend: [["target", "#b3261e"], ["vo", "#0b6e99"]] });
  plot($("plot-il"), "inductor current iL (A)", [
    { x: pl.t, y: pl.il, color: "#2e7d32", width: 1.4 },
  ]);
  plot($("plot-p1"), "input voltage: true vs estimate (V)", [
    { x: pl.t, y: pl.p1_true, color: "#555", width: 1.2 },
    { x: pl.t, y: pl.p1_hat, color: "#e07b00", dash: [4, 3] },
  ], { legend: [["estimate", "#e07b00"], ["true", "#555"]] });
  plot($("plot-p2"), "load current: true vs estimate (A)", [
    { x: pl.t, y: pl.p2_true, color: "#555", width: 1.2 },
    { x: pl.t, y: pl.p2_hat, color: "#e07b00", dash: [4, 3] },
  ], { legend: [["estimate", "#e07b00"], ["true", "#555"]] });
  showMetrics(res.windows);
  $("status").textContent =
    `${res.scenario}: ${res.description}; ${res.switches} switches, ` +
    `${res.saturations} target saturations over ${res.t_end} s`;
}

function runSweep() {
  const targets = [50e3, 100e3, 150e3, 200e3, 300e3, 400e3];
  const pts = JSON.parse(frequency_sweep(JSON.stringify(currentConfig()), JSON.stringify(targets)));
  const c = $("plot-sweep");
  c.style.display = "block";
  const x = pts.map((p) => p.f_target / 1e3);
  const y = pts.map((p) => p.f_measured / 1e3);
  plot(c, "switching frequency: measured vs target (kHz)", [
    { x, y: x.slice(), color: "#999", dash: [4, 4] },
    { x, y, color: "#0b6e99", width: 1.8 },
  ], { legend: [["measured", "#0b6e99"], ["target", "#999"]] });
  $("status").textContent = pts.map((p) =>
    `${(p.f_target / 1e3).toFixed(0)}k→${(p.f_measured / 1e3).toFixed(1)}k`).join("  ");
}

function busy(fn) {
  return async () => {
    const buttons = document.querySelectorAll("button");
    buttons.forEach((b) => (b.disabled = true));
    $("status").textContent = "running…";
    // give the browser a frame to repaint before the blocking call
    await new Promise((r) => setTimeout(r, 30));
    try {
      fn();
    } catch (e) {
      $("status").textContent = "error: " + e;
    } finally {
      buttons.forEach((b) => (b.disabled = false));
    }
  };
}

async function main() {
  await init();
  syncOutputs();
  for (const id of ["alpha", "lambda", "gamma", "fs"]) {
    $(id).addEventListener("input", syncOutputs);
  }
  $("btn-design").addEventListener("click", busy(() => {
    showDesign();
    $("status").textContent = "";
  }));
  $("btn-sim").addEventListener("click", busy(() => {
    if (showDesign()) {
      runSimulation();
    } else {
      $("status").textContent = "design infeasible, simulation skipped";
    }
  }));
  $("btn-sweep").addEventListener("click", busy(runSweep));
  showDesign();
}

main();
