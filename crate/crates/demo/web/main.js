import init, { mobiusExplore, DemoModel } from "./pkg/event2vec_demo.js";

const $ = (id) => document.getElementById(id);
let model = null;

function fail(el, e) {
  el.textContent = String(e);
  el.className = "err";
}

// Möbius explorer

const disk = $("disk");
const R = disk.width / 2 - 10;
let picks = [];

function toScreen([x, y], c) {
  const s = R * Math.sqrt(c);
  return [disk.width / 2 + x * s, disk.height / 2 - y * s];
}

function dot(ctx, p, color, c) {
  const [sx, sy] = toScreen(p, c);
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(sx, sy, 5, 0, 2 * Math.PI);
  ctx.fill();
}

function drawDisk() {
  const c = Number($("curv").value);
  const ctx = disk.getContext("2d");
  ctx.clearRect(0, 0, disk.width, disk.height);
  ctx.strokeStyle = "#888";
  ctx.beginPath();
  ctx.arc(disk.width / 2, disk.height / 2, R, 0, 2 * Math.PI);
  ctx.stroke();
  picks.forEach((p, i) => dot(ctx, p, i ? "#1a8a3a" : "#1f5fbf", c));
  if (picks.length < 2) {
    $("mobius-out").textContent = "";
    return;
  }
  try {
    const v = JSON.parse(mobiusExplore(new Float64Array(picks[0]), new Float64Array(picks[1]), c));
    dot(ctx, v.sum, "#c0392b", c);
    const [ex, ey] = v.euclidean_sum;
    const [sx, sy] = toScreen([ex, ey], c);
    if (Math.abs(sx - disk.width / 2) < disk.width && Math.abs(sy - disk.height / 2) < disk.height) dot(ctx, v.euclidean_sum, "#999", c);
    $("mobius-out").className = "";
    $("mobius-out").textContent =
      `x ⊕ y = (${v.sum.map((t) => t.toFixed(4)).join(", ")})\n` +
      `x + y = (${v.euclidean_sum.map((t) => t.toFixed(4)).join(", ")})\n` +
      `d(0, x ⊕ y) = ${v.distance_from_origin.toFixed(4)}\n` +
      `d(x, y) = ${v.distance_x_y.toFixed(4)}`;
  } catch (e) {
    fail($("mobius-out"), e);
  }
}

disk.addEventListener("click", (ev) => {
  const c = Number($("curv").value);
  const r = disk.getBoundingClientRect();
  const s = R * Math.sqrt(c);
  const p = [(ev.clientX - r.left - disk.width / 2) / s, -(ev.clientY - r.top - disk.height / 2) / s];
  picks = picks.length >= 2 ? [p] : [...picks, p];
  drawDisk();
});
$("curv").addEventListener("change", () => { picks = []; drawDisk(); });

// Training

function plotScatter(points) {
  const cv = $("scatter");
  const ctx = cv.getContext("2d");
  ctx.clearRect(0, 0, cv.width, cv.height);
  const xs = points.map((p) => p.x), ys = points.map((p) => p.y);
  const [x0, x1, y0, y1] = [Math.min(...xs), Math.max(...xs), Math.min(...ys), Math.max(...ys)];
  const pad = 40;
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (cv.width - 2 * pad);
  const sy = (y) => cv.height - pad - ((y - y0) / (y1 - y0 || 1)) * (cv.height - 2 * pad);
  ctx.font = "11px system-ui";
  for (const p of points) {
    ctx.fillStyle = "#1f5fbf";
    ctx.beginPath();
    ctx.arc(sx(p.x), sy(p.y), 3, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillStyle = "#333";
    ctx.fillText(p.event, sx(p.x) + 4, sy(p.y) - 3);
  }
}

function plotLine(cv, xs, ys, label) {
  const ctx = cv.getContext("2d");
  ctx.clearRect(0, 0, cv.width, cv.height);
  const pad = 30;
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys, 0), Math.max(...ys)];
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (cv.width - 2 * pad);
  const sy = (y) => cv.height - pad - ((y - y0) / (y1 - y0 || 1)) * (cv.height - 2 * pad);
  ctx.strokeStyle = "#c0392b";
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(sx(x), sy(ys[i])) : ctx.moveTo(sx(x), sy(ys[i]))));
  ctx.stroke();
  ctx.fillStyle = "#333";
  ctx.font = "11px system-ui";
  ctx.fillText(label, pad, 14);
  ctx.fillText(y1.toFixed(3), 0, sy(y1) + 4);
  ctx.fillText(y0.toFixed(3), 0, sy(y0));
}

function fillSelect(id, events, pick) {
  const sel = $(id);
  sel.innerHTML = "";
  for (const e of events) sel.add(new Option(e, e, false, e === pick));
}

$("train").addEventListener("click", () => {
  $("status").textContent = "Training...";
  $("status").className = "";
  // Let the status repaint before the blocking call.
  setTimeout(() => {
    try {
      model?.free();
      model = new DemoModel(
        Number($("n").value), Number($("dim").value), Number($("epochs").value),
        Number($("seed").value), $("hyp").checked,
      );
      const s = JSON.parse(model.summary());
      plotScatter(s.points);
      plotLine($("loss"), s.losses.map((_, i) => i + 1), s.losses, "mean loss per epoch");
      fillSelect("a", s.events, "marriage");
      fillSelect("b", s.events, "engagement");
      fillSelect("c", s.events, "parenthood");
      $("analogy").disabled = $("additivity").disabled = false;
      const ev = s.explained_variance_ratio.map((r) => (100 * r).toFixed(1) + "%").join(", ");
      $("status").textContent = `Trained on ${s.events.length} events. PCA explained variance: ${ev}.`;
    } catch (e) {
      fail($("status"), e);
    }
  }, 20);
});

$("analogy").addEventListener("click", () => {
  try {
    const r = JSON.parse(model.analogy($("a").value, $("b").value, $("c").value, 5));
    $("analogy-out").className = "";
    $("analogy-out").textContent =
      `${r.metric}\n` + r.ranked.map((x, i) => `${i + 1}. ${x.event}  ${x.score.toFixed(4)}`).join("\n");
  } catch (e) {
    fail($("analogy-out"), e);
  }
});

$("additivity").addEventListener("click", () => {
  try {
    const r = JSON.parse(model.additivity(Number($("seed").value)));
    plotLine($("curve"), r.lengths, r.mean_cosine, "mean cosine vs sequence length");
    $("additivity-out").className = "";
    $("additivity-out").textContent = r.lengths.map((l, i) => `L=${l}: ${r.mean_cosine[i].toFixed(4)}`).join("\n");
  } catch (e) {
    fail($("additivity-out"), e);
  }
});

await init();
$("status").textContent = "Ready. Click the disk or train a model.";
drawDisk();
