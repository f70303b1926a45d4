// Build with: wasm-pack build crates/web --target web --out-dir www/pkg
import init, { wellCurves, actionCurves, gapCurves } from "./pkg/magtunnel_web.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
const num = (id) => parseFloat(document.getElementById(id).value);

function plot(canvas, curves) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 48;
  ctx.clearRect(0, 0, W, H);
  const x = curves.x;
  const cols = curves.labels.map((_, i) => curves.column(i));
  const ys = cols.flat().filter(Number.isFinite);
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y0 === y1) { y0 -= 1; y1 += 1; }
  const [x0, x1] = [x[0], x[x.length - 1]];
  const px = (v) => pad + (v - x0) / (x1 - x0) * (W - 2 * pad);
  const py = (v) => H - pad + (v - y0) / (y1 - y0) * (2 * pad - H);

  ctx.strokeStyle = "#999"; ctx.fillStyle = "#444"; ctx.font = "12px sans-serif";
  ctx.strokeRect(pad, pad / 2, W - 2 * pad, H - 1.5 * pad);
  for (let k = 0; k <= 4; k++) {
    const xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
    ctx.fillText(xv.toPrecision(3), px(xv) - 10, H - pad + 16);
    ctx.fillText(yv.toPrecision(3), 4, py(yv) + 4);
  }
  cols.forEach((c, i) => {
    ctx.strokeStyle = COLORS[i % COLORS.length];
    ctx.beginPath();
    let started = false;
    c.forEach((v, k) => {
      if (!Number.isFinite(v)) { started = false; return; }
      started ? ctx.lineTo(px(x[k]), py(v)) : ctx.moveTo(px(x[k]), py(v));
      started = true;
    });
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillText(curves.labels[i], W - pad - 150, pad / 2 + 16 + 14 * i);
  });
}

function wire(button, canvas, note, compute) {
  const noteEl = document.getElementById(note);
  document.getElementById(button).addEventListener("click", () => {
    noteEl.className = "note";
    noteEl.textContent = "computing…";
    // let the page repaint before the (synchronous) solve
    setTimeout(() => {
      try {
        const t = performance.now();
        const c = compute();
        plot(document.getElementById(canvas), c);
        noteEl.textContent = `${c.note} (${((performance.now() - t) / 1000).toFixed(2)} s)`;
        c.free();
      } catch (e) {
        noteEl.className = "note err";
        noteEl.textContent = String(e.message ?? e);
      }
    }, 10);
  });
}

await init();
wire("run-well", "well", "well-note", () => wellCurves(num("b"), num("a"), num("v0"), num("h")));
wire("run-action", "action", "action-note", () =>
  actionCurves(num("b"), num("a"), num("v0"), num("lmin"), num("lmax"), 40));
wire("run-gap", "gap", "gap-note", () =>
  gapCurves(num("b"), num("l"), num("a"), num("v0"), num("hmin"), num("hmax"), Math.max(2, num("hn") | 0)));
document.getElementById("run-well").click();
document.getElementById("run-action").click();
