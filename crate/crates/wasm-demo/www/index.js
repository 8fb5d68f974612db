import init, { scan_model, sample_field, tfimJoint } from "./pkg/merw_wasm_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function fail(el, e) {
  el.textContent = String(e.message ?? e);
  el.className = "err";
}

function heat(canvas, values, cols) {
  const rows = values.length / cols;
  canvas.width = cols;
  canvas.height = rows;
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(cols, rows);
  const max = Math.max(...values);
  values.forEach((v, i) => {
    const t = max > 0 ? v / max : 0;
    img.data.set([255 * t, 80 * t, 255 * (1 - t), 255], 4 * i);
  });
  ctx.putImageData(img, 0, 0);
}

function derive() {
  const out = $("m-out");
  out.className = "";
  try {
    const m = JSON.parse(scan_model(num("m-width"), num("m-j"), num("m-mu"), num("m-b"), num("m-a")));
    const f = (x) => (x === null ? "n/a" : x.toFixed(10));
    out.textContent =
      `lambda = ${m.lambda.toExponential(8)}\n` +
      `U = ${f(m.u)}   exact ${f(m.u_exact)}\n` +
      `H = ${f(m.h)}   exact ${f(m.h_exact)}\n` +
      `mag = ${f(m.mag)}\n` +
      `${m.table.length} contexts, Pr(+1) shown left to right by context key`;
    const c = $("m-table");
    const ctx = c.getContext("2d");
    ctx.clearRect(0, 0, c.width, c.height);
    const w = c.width / m.table.length;
    m.table.forEach((p, k) => {
      ctx.fillStyle = "#36c";
      ctx.fillRect(k * w, c.height * (1 - p), Math.max(w - 1, 1), c.height * p);
    });
  } catch (e) {
    fail(out, e);
  }
}

function sampleField() {
  const out = $("f-out");
  out.className = "";
  const n = num("f-size");
  try {
    const t0 = performance.now();
    const cells = sample_field(num("f-width"), num("f-j"), 0, n, n, num("f-seed"));
    const c = $("f-canvas");
    c.width = n;
    c.height = n;
    const ctx = c.getContext("2d");
    const img = ctx.createImageData(n, n);
    let up = 0;
    cells.forEach((b, i) => {
      up += b;
      const g = b ? 20 : 235;
      img.data.set([g, g, g, 255], 4 * i);
    });
    ctx.putImageData(img, 0, 0);
    out.textContent = `mag ${((2 * up) / cells.length - 1).toFixed(4)}, ${(performance.now() - t0).toFixed(0)} ms`;
  } catch (e) {
    fail(out, e);
  }
}

function angles() {
  const out = $("t-out");
  out.className = "";
  const lat = num("t-lat");
  try {
    const p = tfimJoint(num("t-j"), num("t-h"), lat);
    heat($("t-canvas"), Array.from(p), lat);
    out.textContent = `max Pr ${Math.max(...p).toExponential(3)} (angles 0..2π along both axes)`;
  } catch (e) {
    fail(out, e);
  }
}

await init();
$("m-go").onclick = derive;
$("f-go").onclick = sampleField;
$("t-go").onclick = angles;
derive();
