import init, { split, timeSpace, regionMap } from "./pkg/corridor_web.js";

const values = (form) => {
  const out = {};
  for (const el of form.querySelectorAll("input, select")) {
    out[el.name] = el.type === "number" ? Number(el.value) : el.value;
  }
  return out;
};

const fmt = (x) => (x == null ? "n/a" : x.toFixed(3));

function showSplit() {
  const form = document.getElementById("split-form");
  const out = document.getElementById("split-out");
  const p = values(form);
  try {
    const r = split(p.w, p.u, p.v, p.d, p.x_a);
    const rows = [
      ["split point x_L", r.times.x_l, "m"],
      ["EMS wait t_2", r.times.t_2, "s"],
      ["EMS at split t_s", r.times.t_s, "s"],
      ["EMS at stop line t_ev", r.times.t_ev, "s"],
      ["CAV free to move t_a", r.times.t_a, "s"],
      ["oracle CAV travel time", r.oracle.t_cav, "s"],
    ];
    out.innerHTML = rows.map(([k, v, u]) => `<tr><td>${k}</td><td>${fmt(v)} ${u}</td></tr>`).join("");
  } catch (e) {
    out.innerHTML = `<tr><td class="err">${e}</td></tr>`;
  }
}

function plotRun(canvas, run) {
  const g = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 36;
  g.clearRect(0, 0, W, H);
  const xmax = Math.max(...run.stop_lines) + 40;
  const sx = (t) => pad + (t / run.horizon_s) * (W - 2 * pad);
  const sy = (x) => H - pad - (Math.max(0, Math.min(x, xmax)) / xmax) * (H - 2 * pad);
  g.strokeStyle = "#000";
  g.strokeRect(pad, pad, W - 2 * pad, H - 2 * pad);
  g.fillStyle = "#444";
  g.fillText("t (s)", W - pad - 20, H - 10);
  g.fillText("x (m)", 4, pad - 8);
  for (const line of run.stop_lines) {
    g.strokeStyle = "#c80";
    g.setLineDash([4, 4]);
    g.beginPath();
    g.moveTo(pad, sy(line));
    g.lineTo(W - pad, sy(line));
    g.stroke();
  }
  g.setLineDash([]);
  const order = { human: 0, cav: 1, ems: 2 };
  const traces = [...run.traces].sort((a, b) => (order[a.class] ?? 0) - (order[b.class] ?? 0));
  for (const tr of traces) {
    g.strokeStyle = tr.class === "ems" ? "#d22" : tr.class === "cav" ? "#16c" : "#999";
    g.lineWidth = tr.class === "human" ? 0.7 : 2;
    g.beginPath();
    tr.t.forEach((t, i) => (i ? g.lineTo(sx(t), sy(tr.x[i])) : g.moveTo(sx(t), sy(tr.x[i]))));
    g.stroke();
  }
  g.lineWidth = 1;
}

function showRun() {
  const p = values(document.getElementById("run-form"));
  const out = document.getElementById("run-out");
  try {
    const run = timeSpace(Number(p.n), p.x_a, p.d, p.controller, p.w, p.seed);
    plotRun(document.getElementById("run-plot"), run);
    const m = run.metrics;
    out.textContent = `T_ev ${fmt(m.t_ev)} s, T_cav ${fmt(m.t_cav)} s, throughput ${fmt(m.q_inter)} veh/s`;
    out.className = "";
  } catch (e) {
    out.textContent = String(e);
    out.className = "err";
  }
}

function showRegion() {
  const p = values(document.getElementById("region-form"));
  const canvas = document.getElementById("region-plot");
  const g = canvas.getContext("2d");
  const n = 60;
  const map = regionMap(p.z, p.w, p.u, p.v, p.d_max, n);
  const pad = 30, cw = (canvas.width - pad) / n, ch = (canvas.height - pad) / n;
  g.clearRect(0, 0, canvas.width, canvas.height);
  map.proceed.forEach((row, i) =>
    row.forEach((go, j) => {
      g.fillStyle = go ? "#7c7" : "#e97";
      g.fillRect(pad + j * cw, (n - 1 - i) * ch, cw + 0.5, ch + 0.5);
    }),
  );
  g.fillStyle = "#444";
  g.fillText("d →", canvas.width - 40, canvas.height - 8);
  g.save();
  g.translate(12, 80);
  g.rotate(-Math.PI / 2);
  g.fillText("past line 1 →", 0, 0);
  g.restore();
}

await init();
for (const [id, f] of [["split-form", showSplit], ["region-form", showRegion]]) {
  document.getElementById(id).addEventListener("input", f);
  f();
}
document.querySelector("#run-form button").addEventListener("click", showRun);
showRun();
