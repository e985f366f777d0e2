import init, { score, score_curve, partition_demo, evaluate } from "./pkg/kpa_web.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6", "#9a6324"];

function fail(el, e) {
  el.innerHTML = `<span class="err">${String(e)}</span>`;
}

// ============================================================================
// Sharing score
// ============================================================================

function drawCurve(yes, no) {
  const c = $("curve"), ctx = c.getContext("2d");
  const pts = JSON.parse(score_curve(-8, 8, 160));
  const sx = (m) => ((m + 8) / 16) * c.width;
  const sy = (s) => c.height - 10 - s * (c.height - 20);
  ctx.clearRect(0, 0, c.width, c.height);
  ctx.strokeStyle = "#bbb";
  ctx.beginPath();
  ctx.moveTo(sx(0), 0); ctx.lineTo(sx(0), c.height);
  ctx.moveTo(0, sy(0.5)); ctx.lineTo(c.width, sy(0.5));
  ctx.stroke();
  ctx.strokeStyle = "#4363d8";
  ctx.beginPath();
  pts.forEach((p, i) => (i ? ctx.lineTo : ctx.moveTo).call(ctx, sx(p.margin), sy(p.score)));
  ctx.stroke();
  const m = Math.max(-8, Math.min(8, yes - no));
  ctx.fillStyle = "#e6194b";
  ctx.beginPath();
  ctx.arc(sx(m), sy(score(m, 0)), 4, 0, 2 * Math.PI);
  ctx.fill();
}

function updateScore() {
  const yes = parseFloat($("yes").value), no = parseFloat($("no").value);
  try {
    $("score-out").textContent = score(yes, no).toFixed(4);
    drawCurve(yes, no);
  } catch (e) {
    fail($("score-out"), e);
  }
}

// ============================================================================
// Partitioning
// ============================================================================

function drawPartition(canvas, out, sets) {
  const ctx = canvas.getContext("2d"), pad = 20;
  const xs = out.vertices.map((v) => v.x), ys = out.vertices.map((v) => v.y);
  const [x0, x1, y0, y1] = [Math.min(...xs), Math.max(...xs), Math.min(...ys), Math.max(...ys)];
  const px = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (canvas.width - 2 * pad);
  const py = (y) => pad + ((y - y0) / (y1 - y0 || 1)) * (canvas.height - 2 * pad);
  const member = out.vertices.map(() => []);
  sets.forEach((s, k) => s.forEach((v) => member[v].push(k)));

  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (const [u, v, w] of out.edges) {
    const shared = member[u].some((k) => member[v].includes(k));
    ctx.strokeStyle = shared ? `rgba(0,0,0,${0.1 + 0.3 * w})` : "rgba(200,0,0,0.08)";
    ctx.beginPath();
    ctx.moveTo(px(out.vertices[u].x), py(out.vertices[u].y));
    ctx.lineTo(px(out.vertices[v].x), py(out.vertices[v].y));
    ctx.stroke();
  }
  out.vertices.forEach((v, i) => {
    const ks = member[i];
    ks.forEach((k, j) => {
      ctx.fillStyle = COLORS[k % COLORS.length];
      ctx.beginPath();
      ctx.arc(px(v.x) + 4 * j, py(v.y), 5, 0, 2 * Math.PI);
      ctx.fill();
    });
    // planted cluster as an outline
    ctx.strokeStyle = COLORS[v.cluster % COLORS.length];
    ctx.beginPath();
    ctx.arc(px(v.x), py(v.y), 7, 0, 2 * Math.PI);
    ctx.stroke();
  });
}

function runPartition() {
  const n = (id) => Number($(id).value);
  let out;
  try {
    out = JSON.parse(partition_demo(n("clusters"), n("per"), n("noise"), n("h"), n("steps"), n("seed")));
  } catch (e) {
    return fail($("kps"), e);
  }
  $("w0").textContent = out.initial_weight.toFixed(4);
  $("w1").textContent = out.refined_weight.toFixed(4);
  drawPartition($("initial"), out, out.initial);
  drawPartition($("refined"), out, out.refined);
  $("kps").innerHTML = out.key_points
    .map((kp, k) => `<span style="color:${COLORS[k % COLORS.length]}">&#9679; ${kp ?? "(no edges)"}</span>`)
    .join(" &nbsp; ");
  $("moves").textContent = out.moves.length
    ? out.moves
        .map((m) => `step ${m.step}: v${m.vertex} ${m.from} -> ${m.to}  cost ${m.cost.toFixed(5)}${m.soft ? "  (kept in source)" : ""}`)
        .join("\n")
    : "no moves";
}

// ============================================================================
// Evaluation
// ============================================================================

function runEval() {
  let r;
  try {
    r = JSON.parse(evaluate($("gen").value, $("ref").value, $("sim").value));
  } catch (e) {
    return fail($("eval-out"), e);
  }
  const f = (x) => x.toFixed(3);
  const gens = $("gen").value.split("\n").filter((l) => l.trim());
  const rows = r.matrix
    .map((row, i) => `<tr><th>ref ${i + 1}</th>${row.map((x) => `<td>${f(x)}</td>`).join("")}</tr>`)
    .join("");
  $("eval-out").innerHTML =
    `<p>ROUGE-1 ${f(r.rouge1)} &middot; ROUGE-2 ${f(r.rouge2)} &middot; ` +
    `sP ${f(r.sP)} &middot; sR ${f(r.sR)} &middot; sF1 ${f(r.sF1)}</p>` +
    `<table><tr><th></th>${gens.map((_, j) => `<th>gen ${j + 1}</th>`).join("")}</tr>${rows}</table>`;
}

await init();
$("yes").addEventListener("input", updateScore);
$("no").addEventListener("input", updateScore);
$("run").addEventListener("click", runPartition);
$("score-btn").addEventListener("click", runEval);
updateScore();
runPartition();
runEval();
