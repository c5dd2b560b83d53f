import init, { Demo, rotate } from "./pkg/rotguard_web.js";

const SIDE = 28;
const $ = (id) => document.getElementById(id);

let demo = null;
let input = new Float64Array(SIDE * SIDE);
let adversarial = null;

function draw(canvas, pixels) {
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(SIDE, SIDE);
  for (let i = 0; i < SIDE * SIDE; i++) {
    const v = Math.round(255 * (1 - pixels[i]));
    img.data.set([v, v, v, 255], 4 * i);
  }
  const tmp = new OffscreenCanvas(SIDE, SIDE);
  tmp.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
}

function argmax(xs) {
  let best = 0;
  xs.forEach((x, i) => { if (x > xs[best]) best = i; });
  return best;
}

function describe(probs) {
  return Array.from(probs, (p, c) => `${c}: ${(100 * p).toFixed(1)}%`).join("  ");
}

function plot(angles, curves, best) {
  const c = $("curve");
  const ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  const pad = 24;
  const x = (a) => pad + (a - angles[0]) / Math.max(1, angles[angles.length - 1] - angles[0]) * (c.width - 2 * pad);
  const y = (p) => c.height - pad - p * (c.height - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, c.width - 2 * pad, c.height - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.fillText(`${angles[0]}°`, pad, c.height - 6);
  ctx.fillText(`${angles[angles.length - 1]}°`, c.width - pad - 16, c.height - 6);
  for (const { values, color } of curves) {
    ctx.strokeStyle = color;
    ctx.beginPath();
    values.forEach((p, i) => (i ? ctx.lineTo(x(angles[i]), y(p)) : ctx.moveTo(x(angles[i]), y(p))));
    ctx.stroke();
  }
  ctx.strokeStyle = "#2a2";
  ctx.setLineDash([4, 4]);
  ctx.beginPath();
  ctx.moveTo(x(best), pad);
  ctx.lineTo(x(best), c.height - pad);
  ctx.stroke();
  ctx.setLineDash([]);
}

function current() {
  return adversarial ?? input;
}

function showRotation() {
  const angle = Number($("angle").value);
  $("angle-value").textContent = angle;
  draw($("rotated"), rotate(current(), angle));
}

function setInput(pixels) {
  input = Float64Array.from(pixels);
  adversarial = null;
  draw($("input"), input);
  draw($("adversarial"), new Float64Array(SIDE * SIDE));
  showRotation();
}

function enable() {
  for (const id of ["classify", "attack", "sweep"]) $(id).disabled = !demo;
}

async function readFile(el) {
  return new Uint8Array(await el.files[0].arrayBuffer());
}

$("ckpt").addEventListener("change", async () => {
  try {
    demo = new Demo(await readFile($("ckpt")));
    $("status").textContent = "checkpoint loaded";
  } catch (e) {
    demo = null;
    $("status").textContent = `checkpoint rejected: ${e.message ?? e}`;
  }
  enable();
});

async function loadIdx() {
  if (!demo || !$("idx-images").files.length || !$("idx-labels").files.length) return;
  try {
    const n = demo.load_images(await readFile($("idx-images")), await readFile($("idx-labels")));
    $("index").max = n - 1;
    $("index").disabled = false;
    $("status").textContent = `${n} images loaded`;
    pickIndex();
  } catch (e) {
    $("status").textContent = `IDX rejected: ${e.message ?? e}`;
  }
}
$("idx-images").addEventListener("change", loadIdx);
$("idx-labels").addEventListener("change", loadIdx);

function pickIndex() {
  const i = Number($("index").value);
  const pixels = demo.image(i);
  if (!pixels) return;
  $("true-class").value = demo.label(i);
  setInput(pixels);
}
$("index").addEventListener("input", pickIndex);

// Freehand drawing with a soft 2-pixel brush.
let drawing = false;
function paint(ev) {
  const r = $("input").getBoundingClientRect();
  const cx = ((ev.clientX - r.left) / r.width) * SIDE;
  const cy = ((ev.clientY - r.top) / r.height) * SIDE;
  for (let row = 0; row < SIDE; row++) {
    for (let col = 0; col < SIDE; col++) {
      const d = Math.hypot(col + 0.5 - cx, row + 0.5 - cy);
      const v = Math.max(0, 1 - Math.max(0, d - 0.8) / 1.2);
      input[row * SIDE + col] = Math.max(input[row * SIDE + col], v);
    }
  }
  adversarial = null;
  draw($("input"), input);
  showRotation();
}
$("input").addEventListener("pointerdown", (ev) => { drawing = true; paint(ev); });
$("input").addEventListener("pointermove", (ev) => drawing && paint(ev));
window.addEventListener("pointerup", () => { drawing = false; });
$("clear").addEventListener("click", () => setInput(new Float64Array(SIDE * SIDE)));
$("angle").addEventListener("input", showRotation);

$("classify").addEventListener("click", () => {
  const probs = demo.classify(current());
  $("output").textContent = `prediction ${argmax(probs)}\n${describe(probs)}`;
});

$("attack").addEventListener("click", () => {
  try {
    const res = demo.attack(
      input,
      Number($("true-class").value),
      Number($("target").value),
      Number($("epsilon").value),
      Number($("iterations").value),
    );
    adversarial = res.adversarial();
    draw($("adversarial"), adversarial);
    showRotation();
    const target = res.target_trace();
    const probs = demo.classify(adversarial);
    $("output").textContent =
      `success ${res.success}  target confidence ${(100 * target[target.length - 1]).toFixed(1)}%\n` +
      `L0 ${res.l0}  L2 ${res.l2.toFixed(3)}  Linf ${res.linf.toFixed(3)}\n${describe(probs)}`;
  } catch (e) {
    $("output").textContent = `error: ${e.message ?? e}`;
  }
});

$("sweep").addEventListener("click", () => {
  const truth = Number($("true-class").value);
  const s = demo.sweep(current(), truth, 0, 90, 1);
  const angles = Array.from(s.angles());
  const target = Number($("target").value);
  plot(angles, [
    { values: s.true_curve(), color: "#1f5fbf" },
    { values: s.class_curve(target), color: "#c33" },
  ], s.best_angle);
  $("angle").value = s.best_angle;
  showRotation();
  $("output").textContent =
    `best angle ${s.best_angle}°  true-class confidence ${(100 * s.best_confidence).toFixed(1)}%\n` +
    `prediction there ${s.best_prediction}  recovered ${s.recovered}\n` +
    `blue: class ${truth}  red: class ${target}`;
});

await init();
setInput(input);
enable();
