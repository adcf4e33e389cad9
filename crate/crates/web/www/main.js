import init, { bounds_curve, gain_sweep, joint_scatter } from "./pkg/qreading_web.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

function fields(id) {
  const out = {};
  for (const el of document.querySelectorAll(`#${id} input`)) {
    out[el.name] = el.type === "checkbox" ? el.checked : Number(el.value);
  }
  return out;
}

function status(id, text, isError = false) {
  const el = document.getElementById(id);
  el.textContent = text;
  el.className = isError ? "status error" : "status";
}

// series: [{label, xs, ys, errs?, points?}]
function plot(canvasId, series, { logX = false, xLabel = "", yLabel = "" } = {}) {
  const canvas = document.getElementById(canvasId);
  const ctx = canvas.getContext("2d");
  const pad = { l: 64, r: 16, t: 16, b: 40 };
  const w = canvas.width - pad.l - pad.r;
  const h = canvas.height - pad.t - pad.b;
  ctx.clearRect(0, 0, canvas.width, canvas.height);

  const tx = (x) => (logX ? Math.log10(x) : x);
  const all = series.flatMap((s) => s.xs.map((x, i) => [tx(x), s.ys[i], s.errs ? s.errs[i] : 0]));
  let [x0, x1] = [Math.min(...all.map((p) => p[0])), Math.max(...all.map((p) => p[0]))];
  let [y0, y1] = [Math.min(...all.map((p) => p[1] - p[2])), Math.max(...all.map((p) => p[1] + p[2]))];
  if (x0 === x1) { x0 -= 1; x1 += 1; }
  if (y0 === y1) { y0 -= 1; y1 += 1; }
  const px = (x) => pad.l + ((tx(x) - x0) / (x1 - x0)) * w;
  const py = (y) => pad.t + (1 - (y - y0) / (y1 - y0)) * h;

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad.l, pad.t, w, h);
  ctx.fillStyle = "#333";
  ctx.font = "11px system-ui";
  for (let k = 0; k <= 4; k++) {
    const y = y0 + ((y1 - y0) * k) / 4;
    ctx.fillText(y.toPrecision(3), 4, py(y) + 4);
    const x = x0 + ((x1 - x0) * k) / 4;
    const shown = logX ? (10 ** x).toPrecision(2) : x.toPrecision(4);
    ctx.fillText(shown, pad.l + ((x - x0) / (x1 - x0)) * w - 12, canvas.height - 22);
  }
  ctx.fillText(xLabel, pad.l + w / 2 - 20, canvas.height - 6);
  ctx.save();
  ctx.translate(12, pad.t + h / 2 + 20);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(yLabel, 0, 0);
  ctx.restore();

  series.forEach((s, k) => {
    const color = COLORS[k % COLORS.length];
    ctx.strokeStyle = color;
    ctx.fillStyle = color;
    if (s.points) {
      ctx.globalAlpha = 0.35;
      s.xs.forEach((x, i) => ctx.fillRect(px(x) - 1, py(s.ys[i]) - 1, 2, 2));
      ctx.globalAlpha = 1;
    } else {
      ctx.beginPath();
      s.xs.forEach((x, i) => (i ? ctx.lineTo(px(x), py(s.ys[i])) : ctx.moveTo(px(x), py(s.ys[i]))));
      ctx.stroke();
    }
    if (s.errs) {
      s.xs.forEach((x, i) => {
        ctx.beginPath();
        ctx.moveTo(px(x), py(s.ys[i] - s.errs[i]));
        ctx.lineTo(px(x), py(s.ys[i] + s.errs[i]));
        ctx.stroke();
        ctx.fillRect(px(x) - 2, py(s.ys[i]) - 2, 4, 4);
      });
    }
    ctx.fillRect(pad.l + 10, pad.t + 8 + 16 * k, 10, 10);
    ctx.fillStyle = "#333";
    ctx.fillText(s.label, pad.l + 26, pad.t + 17 + 16 * k);
  });
}

function runBounds() {
  const f = fields("bounds-form");
  try {
    const pts = JSON.parse(bounds_curve(f.tau0, f.tau1, f.eta_s, f.n_min, f.n_max, 200));
    const xs = pts.map((p) => p.n);
    plot("bounds-plot", [
      { label: "classical bound C", xs, ys: pts.map((p) => p.c_bound) },
      { label: "coherent photon counting", xs, ys: pts.map((p) => p.p_err_cla_pc) },
    ], { logX: true, xLabel: "mean photons N", yLabel: "error probability" });
    status("bounds-status", "");
  } catch (e) {
    status("bounds-status", String(e.message ?? e), true);
  }
}

function runSweep() {
  const f = fields("sweep-form");
  status("sweep-status", "simulating...");
  setTimeout(() => {
    try {
      const t = performance.now();
      const res = JSON.parse(gain_sweep(f.eta_s, f.eta_i, f.photons, f.ev, f.t_start, f.t_end, f.steps, f.frames, BigInt(f.seed)));
      const xs = res.reports.map((r) => r.tau0);
      plot("sweep-plot", [
        { label: "G_a simulated", xs, ys: res.reports.map((r) => r.gain_a), errs: res.reports.map((r) => r.sigma_gain_a) },
        { label: "G_emp simulated", xs, ys: res.reports.map((r) => r.gain_emp), errs: res.reports.map((r) => r.sigma_gain_emp) },
        { label: "G_a model", xs, ys: res.theory.map((r) => r.gain_a) },
        { label: "G_emp model", xs, ys: res.theory.map((r) => r.gain_emp) },
      ], { xLabel: "tau0", yLabel: "gain" });
      status("sweep-status", `${res.reports.length} settings in ${((performance.now() - t) / 1000).toFixed(2)} s`);
    } catch (e) {
      status("sweep-status", String(e.message ?? e), true);
    }
  }, 10);
}

function runScatter() {
  const f = fields("scatter-form");
  try {
    const res = JSON.parse(joint_scatter(f.tau, f.eta_s, f.eta_i, f.photons, f.ev, f.frames, BigInt(f.seed), f.classical));
    plot("scatter-plot", [{ label: "frames", xs: res.idler, ys: res.signal, points: true }],
      { xLabel: "idler counts", yLabel: "signal counts" });
    status("scatter-status", `correlation ${res.correlation.toFixed(3)}`);
  } catch (e) {
    status("scatter-status", String(e.message ?? e), true);
  }
}

await init();
document.getElementById("bounds-run").addEventListener("click", runBounds);
document.getElementById("sweep-run").addEventListener("click", runSweep);
document.getElementById("scatter-run").addEventListener("click", runScatter);
runBounds();
runScatter();
