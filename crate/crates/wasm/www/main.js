import init, { wishart_spectrum, volterra_g, langevin_a } from "./pkg/spectral_kinetics_demo.js";

const PAD = 40;

function values(fieldset) {
  const out = {};
  for (const input of fieldset.querySelectorAll("input")) out[input.name] = Number(input.value);
  return out;
}

function frame(canvas, xs, ys) {
  const finite = (v) => v.filter(Number.isFinite);
  const [x0, x1] = [Math.min(...finite(xs)), Math.max(...finite(xs))];
  const [y0, y1] = [Math.min(...finite(ys)), Math.max(...finite(ys))];
  const w = canvas.width - 2 * PAD;
  const h = canvas.height - 2 * PAD;
  return {
    px: (x) => PAD + ((x - x0) / (x1 - x0 || 1)) * w,
    py: (y) => canvas.height - PAD - ((y - y0) / (y1 - y0 || 1)) * h,
    x0, x1, y0, y1,
  };
}

function axes(ctx, canvas, f, xlabel, ylabel) {
  ctx.strokeStyle = "#333";
  ctx.strokeRect(PAD, PAD, canvas.width - 2 * PAD, canvas.height - 2 * PAD);
  ctx.fillStyle = "#333";
  ctx.font = "12px sans-serif";
  ctx.fillText(`${xlabel}: ${f.x0.toPrecision(3)} .. ${f.x1.toPrecision(3)}`, PAD, canvas.height - 12);
  ctx.fillText(`${ylabel}: ${f.y0.toPrecision(3)} .. ${f.y1.toPrecision(3)}`, PAD, 24);
}

function polyline(ctx, f, xs, ys, color) {
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  let started = false;
  xs.forEach((x, i) => {
    if (!Number.isFinite(x) || !Number.isFinite(ys[i])) return;
    if (started) ctx.lineTo(f.px(x), f.py(ys[i]));
    else ctx.moveTo(f.px(x), f.py(ys[i]));
    started = true;
  });
  ctx.stroke();
}

function run(id, compute, draw) {
  const fieldset = document.getElementById(id);
  const status = fieldset.querySelector(".status");
  const canvas = fieldset.querySelector("canvas");
  fieldset.querySelector("button").addEventListener("click", () => {
    const started = performance.now();
    const result = JSON.parse(compute(values(fieldset)));
    const ctx = canvas.getContext("2d");
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    if (result.error) {
      status.textContent = `error: ${result.error}`;
      return;
    }
    status.textContent = draw(ctx, canvas, result) + ` (${(performance.now() - started).toFixed(0)} ms)`;
  });
}

function drawWishart(ctx, canvas, r) {
  const lefts = r.histogram.map((_, i) => r.bin_lo + i * r.bin_width);
  const f = frame(canvas, [...lefts, r.bin_lo + r.histogram.length * r.bin_width, ...r.x], [0, ...r.histogram, ...r.density]);
  ctx.fillStyle = "#c7d7ea";
  r.histogram.forEach((hgt, i) => {
    const x = f.px(lefts[i]);
    ctx.fillRect(x, f.py(hgt), f.px(lefts[i] + r.bin_width) - x, f.py(0) - f.py(hgt));
  });
  polyline(ctx, f, r.x, r.density, "#d62728");
  axes(ctx, canvas, f, "eigenvalue", "density");
  return `KS distance ${r.ks.toFixed(4)}, MP edges [${r.edges.map((e) => e.toFixed(3)).join(", ")}]`;
}

function drawVolterra(ctx, canvas, r) {
  const lt = r.t.map((t) => (t > 0 ? Math.log10(t) : NaN));
  const lg = r.G.map((g) => (g > 0 ? Math.log10(g) : NaN));
  const lh = r.H.map((h) => (h > 0 ? Math.log10(h) : NaN));
  const f = frame(canvas, lt, [...lg, ...lh]);
  polyline(ctx, f, lt, lg, "#1f77b4");
  polyline(ctx, f, lt, lh, "#2ca02c");
  axes(ctx, canvas, f, "log10 t", "log10 G (blue), log10 H (green)");
  const slope = r.late_log_slope == null ? "n/a" : r.late_log_slope.toFixed(3);
  return `Tc = ${r.critical_temperature.toFixed(4)}, late log-slope of G ${slope}`;
}

function drawLangevin(ctx, canvas, r, a0) {
  const f = frame(canvas, r.t, [0, a0, ...r.a]);
  polyline(ctx, f, r.t, r.a, "#1f77b4");
  polyline(ctx, f, [r.t[0], r.t[r.t.length - 1]], [a0, a0], "#777");
  axes(ctx, canvas, f, "t", "a(t) (blue), a0 (grey)");
  return `Tc = ${r.critical_temperature.toFixed(4)}, dt = ${r.dt.toPrecision(3)}, diverged ${r.n_diverged}`;
}

await init();
run("wishart", (v) => wishart_spectrum(v.n, v.p, v.bins, v.seed), drawWishart);
run("volterra", (v) => volterra_g(v.q, v.n, v.a0, v.ratio, v.dt, v.steps), drawVolterra);
let lastA0 = 2;
run(
  "langevin",
  (v) => {
    lastA0 = v.a0;
    return langevin_a(v.q, v.n, v.a0, v.ratio, v.steps, v.ensemble, v.seed);
  },
  (ctx, canvas, r) => drawLangevin(ctx, canvas, r, lastA0),
);
