import init, { transform_curve, disturbance_scan, pointer_run } from "./pkg/protmeas_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function plot(canvas, series, { logY = false } = {}) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const tf = (y) => (logY ? Math.log10(Math.max(y, 1e-16)) : y);
  const xs = series.flatMap((s) => s.points.map((p) => p[0]));
  const ys = series.flatMap((s) => s.points.map((p) => tf(p[1])));
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y1 === y0) y1 = y0 + 1;
  const px = (x) => 40 + ((x - x0) / (x1 - x0 || 1)) * (w - 50);
  const py = (y) => h - 20 - ((tf(y) - y0) / (y1 - y0)) * (h - 30);
  ctx.fillStyle = "#555";
  ctx.fillText((logY ? "1e" : "") + y1.toPrecision(3), 2, 12);
  ctx.fillText((logY ? "1e" : "") + y0.toPrecision(3), 2, h - 22);
  ctx.fillText(x0.toPrecision(3), 40, h - 5);
  ctx.fillText(x1.toPrecision(3), w - 40, h - 5);
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    s.points.forEach(([x, y], i) => (i ? ctx.lineTo(px(x), py(y)) : ctx.moveTo(px(x), py(y))));
    ctx.stroke();
  }
}

function pairs(flat, stride, pick) {
  const out = [];
  for (let i = 0; i + stride <= flat.length; i += stride) out.push(pick(flat, i));
  return out;
}

function guard(fn, target) {
  return () => {
    try {
      fn();
    } catch (e) {
      $(target).textContent = String(e.message ?? e);
    }
  };
}

function runTransform() {
  const flat = transform_curve($("kind").value, num("xmax"), 1000);
  plot($("ft"), [{ color: "#1f77b4", points: pairs(flat, 2, (f, i) => [f[i], f[i + 1]]) }], { logY: true });
}

function runDisturbance() {
  const flat = disturbance_scan($("kind").value, num("omega"), num("diag"), num("off"), num("a"), num("tmin"), num("tmax"), 60);
  plot(
    $("dist"),
    [
      { color: "#1f77b4", points: pairs(flat, 3, (f, i) => [f[i], f[i + 1]]) },
      { color: "#ff7f0e", points: pairs(flat, 3, (f, i) => [f[i], f[i + 2]]) },
    ],
    { logY: true },
  );
}

function runPointer() {
  const r = pointer_run($("kind").value, num("T"), num("omega"), num("diag"), num("off"), Math.round(num("grid")));
  const [shift, expected, density, disturbance, purity] = r;
  $("ptr-out").textContent =
    `shift ${shift.toPrecision(9)}  (expected G<O> = ${expected.toPrecision(9)})\n` +
    `density-mean shift ${density.toPrecision(9)}\n` +
    `disturbance ${disturbance.toExponential(3)}  purity ${purity.toPrecision(9)}`;
  plot($("ptr"), [{ color: "#2ca02c", points: pairs(r.slice(5), 2, (f, i) => [f[i], f[i + 1]]) }]);
}

await init();
$("run-ft").onclick = guard(runTransform, "ptr-out");
$("run-dist").onclick = guard(runDisturbance, "ptr-out");
$("run-ptr").onclick = guard(runPointer, "ptr-out");
runTransform();
