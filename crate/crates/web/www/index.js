import init, { simulateNetwork, solveMeanField, couplingStudy } from "./pkg/agenet_web.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function frame(canvas, xmax, ymax, label) {
  const ctx = canvas.getContext("2d");
  const pad = 40;
  const w = canvas.width - pad - 10;
  const h = canvas.height - pad;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, 10, w, h - 10);
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  ctx.fillText(label, pad + 6, 24);
  ctx.fillText("0", pad - 12, h + 4);
  ctx.fillText(ymax.toPrecision(3), 2, 18);
  ctx.fillText(xmax.toPrecision(3), pad + w - 20, h + 16);
  const sx = (x) => pad + (x / xmax) * w;
  const sy = (y) => h - (y / ymax) * (h - 10);
  return { ctx, sx, sy };
}

function lines(canvas, xs, series, label) {
  const ymax = Math.max(...series.flatMap((s) => s.y)) * 1.05 || 1;
  const { ctx, sx, sy } = frame(canvas, xs[xs.length - 1], ymax, label);
  series.forEach((s, k) => {
    ctx.strokeStyle = s.color || COLORS[k % COLORS.length];
    ctx.beginPath();
    s.y.forEach((y, i) => (i ? ctx.lineTo(sx(s.x ? s.x[i] : xs[i]), sy(y)) : ctx.moveTo(sx(s.x ? s.x[i] : xs[i]), sy(y))));
    ctx.stroke();
  });
}

function raster(canvas, data, horizon) {
  const { ctx, sx, sy } = frame(canvas, horizon, data.raster_rows, "spikes of the first neurons");
  ctx.fillStyle = "#222";
  for (const [t, i] of data.raster) ctx.fillRect(sx(t), sy(i + 1), 1.5, 1.5);
}

function guarded(info, f) {
  try {
    const start = performance.now();
    const text = f();
    info.textContent = `${text} (${(performance.now() - start).toFixed(0)} ms)`;
  } catch (e) {
    info.textContent = `error: ${e.message ?? e}`;
  }
}

function runNetwork() {
  guarded($("sim-info"), () => {
    const horizon = num("sim-t");
    const data = JSON.parse(simulateNetwork(num("sim-n"), num("sim-eps"), num("sim-tau"), horizon, num("sim-seed")));
    raster($("sim-raster"), data, horizon);
    lines($("sim-activity"), data.t, [{ y: data.activity }, { y: data.meanfield }], "activity: network (blue), mean field (red)");
    return `${data.spikes} spikes, ${data.dropped} arrivals past T`;
  });
}

function runMeanField() {
  guarded($("mf-info"), () => {
    const data = JSON.parse(solveMeanField(num("mf-eps"), num("mf-tau"), num("mf-t")));
    lines($("mf-activity"), data.t, [{ y: data.activity }, { y: data.flux.slice(0, -1), x: data.t }], "M(t) (blue), spike flux N(t) (red)");
    const cut = data.x.findIndex((x) => x > num("mf-t") + 1.5);
    const xs = data.x.slice(0, cut < 0 ? undefined : cut);
    lines($("mf-density"), xs, data.density.map((r) => ({ y: r.f.slice(0, xs.length) })), "age density at " + data.density.map((r) => r.t.toFixed(2)).join(", "));
    return `converged in ${data.iterations} Picard iterations`;
  });
}

function runStudy() {
  guarded($("cs-info"), () => {
    const data = JSON.parse(couplingStudy(num("cs-eps"), num("cs-rep"), num("cs-seed")));
    const rows = data.rows.map((r) => `<tr><td>${r.n}</td><td>${r.mean_d.toExponential(3)}</td><td>${r.se_d.toExponential(2)}</td><td>${r.mean_w1.toExponential(3)}</td></tr>`);
    $("cs-table").innerHTML = "<tr><th>N</th><th>mean distance</th><th>std. error</th><th>W1 to i.i.d. sample</th></tr>" + rows.join("");
    return data.slope === null ? "no fit" : `log-log slope ${data.slope.toFixed(3)} ± ${data.slope_se.toFixed(3)}`;
  });
}

await init();
$("sim-run").onclick = runNetwork;
$("mf-run").onclick = runMeanField;
$("cs-run").onclick = runStudy;
runNetwork();
runMeanField();
