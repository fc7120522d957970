// Build the wasm package first: wasm-pack build --target web --out-dir www/pkg
import init, { train_blobs, oracle_check } from "./pkg/usmo_demo.js";

const GRID = 96;
const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function drawField(fit) {
  const canvas = $("field");
  const ctx = canvas.getContext("2d");
  const w = canvas.width;
  const g = fit.grid;
  const field = fit.field();
  const maxAbs = field.reduce((m, v) => Math.max(m, Math.abs(v)), 1e-12);
  const img = ctx.createImageData(g, g);
  for (let k = 0; k < field.length; k++) {
    const t = field[k] / maxAbs;
    const c = 255 - Math.round(110 * Math.abs(t));
    img.data.set(t >= 0 ? [c, c, 255, 255] : [255, c, c, 255], 4 * k);
  }
  const off = new OffscreenCanvas(g, g);
  off.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = true;
  ctx.drawImage(off, 0, 0, w, w);

  // zero contour: mark cells whose sign differs from the right or lower neighbor
  ctx.fillStyle = "#222";
  const cell = w / g;
  for (let r = 0; r + 1 < g; r++) {
    for (let c = 0; c + 1 < g; c++) {
      const s = field[r * g + c] >= 0;
      if (s !== (field[r * g + c + 1] >= 0) || s !== (field[(r + 1) * g + c] >= 0)) {
        ctx.fillRect((c + 0.5) * cell, (r + 0.5) * cell, 1.5, 1.5);
      }
    }
  }

  const e = fit.extent;
  const toPx = (x) => ((x + e) / (2 * e)) * w;
  const xs = fit.xs(), ys = fit.ys(), kinds = fit.kinds();
  for (let k = 0; k < xs.length; k++) {
    ctx.beginPath();
    ctx.arc(toPx(xs[k]), w - toPx(ys[k]), 3, 0, 2 * Math.PI);
    if (kinds[k] === 2) {
      ctx.fillStyle = "#1f3fbf";
      ctx.fill();
    } else {
      ctx.strokeStyle = kinds[k] === 1 ? "#1f3fbf" : "#bf1f1f";
      ctx.stroke();
    }
  }
}

function drawTrace(fit) {
  const canvas = $("trace");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const tr = fit.trace();
  ctx.fillStyle = "#000";
  ctx.fillText("dual objective per iteration", 8, 14);
  if (tr.length < 2) return;
  const lo = Math.min(...tr), hi = Math.max(...tr);
  const span = hi - lo || 1;
  ctx.strokeStyle = "#333";
  ctx.beginPath();
  tr.forEach((v, k) => {
    const x = 10 + ((w - 20) * k) / (tr.length - 1);
    const y = 24 + (h - 34) * (1 - (v - lo) / span);
    k === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
  });
  ctx.stroke();
  ctx.fillText(hi.toPrecision(5), 10, 36);
  ctx.fillText(lo.toPrecision(5), 10, h - 6);
}

function train() {
  try {
    const fit = train_blobs(num("per-class"), num("separation"), num("fraction"), num("lambda"), num("scale"), num("seed"), GRID);
    $("summary").textContent = fit.summary;
    drawField(fit);
    drawTrace(fit);
    fit.free();
  } catch (e) {
    $("summary").textContent = String(e);
  }
}

function oracle() {
  try {
    $("oracle-out").textContent = oracle_check(30, num("lambda"), num("scale"), num("seed"));
  } catch (e) {
    $("oracle-out").textContent = String(e);
  }
}

await init();
$("train").addEventListener("click", train);
$("oracle").addEventListener("click", oracle);
train();
