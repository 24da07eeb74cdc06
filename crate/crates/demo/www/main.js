import init, { layoutMap, packTraffic, attentionScores } from "./pkg/layout_gemm_demo.js";

const num = (form, name) => Number(form.elements[name].value);

function guard(msgEl, fn) {
  msgEl.textContent = "";
  try {
    fn();
  } catch (e) {
    msgEl.textContent = e.message ?? String(e);
  }
}

function hue(t) {
  return `hsl(${Math.round(240 - 240 * t)}, 70%, 55%)`;
}

function drawLayout() {
  const f = document.getElementById("layout-form");
  const canvas = document.getElementById("layout-canvas");
  const hover = document.getElementById("hover");
  guard(document.getElementById("layout-msg"), () => {
    const map = layoutMap(num(f, "rows"), num(f, "cols"), num(f, "mc"), num(f, "nc"), num(f, "mr"), num(f, "nr"));
    const [pr, pc] = [map.padRows, map.padCols];
    const offsets = map.offsets();
    const blocks = map.blocks();
    const total = pr * pc;
    const cell = Math.max(6, Math.min(36, Math.floor(Math.min(900 / pc, 600 / pr))));
    canvas.width = pc * cell;
    canvas.height = pr * cell;
    const ctx = canvas.getContext("2d");
    ctx.font = `${Math.max(8, cell / 2.6)}px ui-monospace, monospace`;
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    for (let i = 0; i < pr; i++) {
      for (let j = 0; j < pc; j++) {
        const o = offsets[i * pc + j];
        const pad = i >= map.rows || j >= map.cols;
        ctx.fillStyle = pad ? "#ddd" : hue(o / Math.max(1, total - 1));
        ctx.fillRect(j * cell, i * cell, cell, cell);
        if (cell >= 18) {
          ctx.fillStyle = pad ? "#888" : "#fff";
          ctx.fillText(String(o), j * cell + cell / 2, i * cell + cell / 2);
        }
      }
    }
    ctx.strokeStyle = "#000";
    ctx.lineWidth = 2;
    for (let i = 0; i < pr; i++) {
      for (let j = 0; j < pc; j++) {
        const b = blocks[i * pc + j];
        if (j + 1 < pc && blocks[i * pc + j + 1] !== b) line(ctx, (j + 1) * cell, i * cell, (j + 1) * cell, (i + 1) * cell);
        if (i + 1 < pr && blocks[(i + 1) * pc + j] !== b) line(ctx, j * cell, (i + 1) * cell, (j + 1) * cell, (i + 1) * cell);
      }
    }
    canvas.onmousemove = (ev) => {
      const r = canvas.getBoundingClientRect();
      const j = Math.floor(((ev.clientX - r.left) * canvas.width) / r.width / cell);
      const i = Math.floor(((ev.clientY - r.top) * canvas.height) / r.height / cell);
      if (i < 0 || j < 0 || i >= pr || j >= pc) return;
      const pad = i >= map.rows || j >= map.cols ? " (padding)" : "";
      hover.textContent = `(${i}, ${j}) -> offset ${offsets[i * pc + j]}, block ${blocks[i * pc + j]}${pad}`;
    };
    hover.textContent = `${map.rows}x${map.cols} padded to ${pr}x${pc}, ${map.blockCount} blocks, ${total} slots`;
  });
}

function line(ctx, x0, y0, x1, y1) {
  ctx.beginPath();
  ctx.moveTo(x0, y0);
  ctx.lineTo(x1, y1);
  ctx.stroke();
}

function runTraffic() {
  const f = document.getElementById("traffic-form");
  const out = document.getElementById("traffic-out");
  guard(document.getElementById("traffic-msg"), () => {
    const r = packTraffic(
      num(f, "m"), num(f, "n"), num(f, "k"), num(f, "depth"),
      num(f, "mc"), num(f, "nc"), num(f, "kc"), num(f, "mr"), num(f, "nr"),
    );
    const d = r.defaultCounts();
    const p = r.propagatedCounts();
    const names = ["multiplier packed", "multiplicand packed", "unpacked", "stored propagated"];
    const max = Math.max(...d, ...p, 1);
    const bar = (v, cls) => `<span class="bar ${cls}" style="width:${Math.round((160 * v) / max)}px"></span>`;
    let rows = names
      .map((n, i) => `<tr><td>${n}</td><td>${d[i]} ${bar(d[i], "")}</td><td>${p[i]} ${bar(p[i], "lp")}</td></tr>`)
      .join("");
    const sum = (c) => c[0] + c[1] + c[2];
    rows += `<tr><th>pack + unpack</th><th>${sum(d)}</th><th>${sum(p)} (${((100 * sum(p)) / sum(d)).toFixed(1)}%)</th></tr>`;
    out.innerHTML =
      `<table><tr><th>elements</th><th>canonical chain</th><th>propagated chain</th></tr>${rows}</table>` +
      `<p class="note">max |difference| between the two results: ${r.maxAbsDiff}</p>`;
  });
}

function runAttention() {
  const f = document.getElementById("attn-form");
  const canvas = document.getElementById("attn-canvas");
  const info = document.getElementById("attn-info");
  guard(document.getElementById("attn-msg"), () => {
    const r = attentionScores(
      num(f, "tokens"), num(f, "heads"), num(f, "kv"), num(f, "hd"), num(f, "head"),
      f.elements.causal.checked, num(f, "seed"),
    );
    const n = r.nTokens;
    const s = r.scores();
    const cell = Math.max(1, Math.floor(384 / n));
    canvas.width = canvas.height = n * cell;
    const ctx = canvas.getContext("2d");
    let peak = 0;
    for (const v of s) peak = Math.max(peak, v);
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < n; j++) {
        const t = Math.sqrt(s[i * n + j] / (peak || 1));
        const c = Math.round(255 * (1 - t));
        ctx.fillStyle = `rgb(${c}, ${c}, 255)`;
        ctx.fillRect(j * cell, i * cell, cell, cell);
      }
    }
    info.textContent =
      `row i = query token, column j = key token. Scores vs canonical naive path: max |diff| ${r.scoresAbsErr.toExponential(2)}; ` +
      `whole layer vs reference: relative error ${r.layerRelErr.toExponential(2)}.`;
  });
}

await init();
document.getElementById("layout-form").addEventListener("submit", (e) => (e.preventDefault(), drawLayout()));
document.getElementById("traffic-form").addEventListener("submit", (e) => (e.preventDefault(), runTraffic()));
document.getElementById("attn-form").addEventListener("submit", (e) => (e.preventDefault(), runAttention()));
drawLayout();
runTraffic();
runAttention();
