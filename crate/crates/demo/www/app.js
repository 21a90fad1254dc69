import init, { rate_region, solve_point, channel_info } from "./pkg/ratesplit_demo.js";

const $ = (id) => document.getElementById(id);
const COLORS = { RS: "#c0392b", MULP: "#2471a3", SCSIC: "#229954" };

function setting(extra = {}) {
  return JSON.stringify({
    gamma: +$("gamma").value,
    theta: (+$("theta").value * Math.PI) / 9,
    r0_threshold: +$("r0").value,
    ...extra,
  });
}

function call(fn, arg) {
  const out = JSON.parse(fn(arg));
  if (out && out.error) throw new Error(out.error);
  return out;
}

function refreshInfo() {
  for (const id of ["gamma", "theta", "r0"]) $(id + "-v").textContent = $(id).value;
  try {
    const c = call(channel_info, setting());
    $("info").textContent =
      `|h1|² = ${c.norm_sq[0].toFixed(2)}, |h2|² = ${c.norm_sq[1].toFixed(2)}, ` +
      `alignment ${c.alignment.toFixed(3)}, multicast bound ${c.multicast_bound.toFixed(2)} bit/s/Hz`;
  } catch (e) {
    $("info").innerHTML = `<span class="err">${e.message}</span>`;
  }
}

function drawRegions(regions, marks = []) {
  const cv = $("plot"), g = cv.getContext("2d");
  const pad = 45, w = cv.width - 2 * pad, h = cv.height - 2 * pad;
  const all = regions.flatMap((r) => r.frontier).concat(marks.map((m) => [m.r1, m.r2]));
  const mx = Math.max(1, ...all.map((p) => p[0])) * 1.05;
  const my = Math.max(1, ...all.map((p) => p[1])) * 1.05;
  const X = (x) => pad + (x / mx) * w, Y = (y) => pad + h - (y / my) * h;
  g.clearRect(0, 0, cv.width, cv.height);
  g.strokeStyle = "#000";
  g.strokeRect(pad, pad, w, h);
  g.fillStyle = "#000";
  g.fillText("R1 (bit/s/Hz)", pad + w / 2 - 30, cv.height - 10);
  g.fillText("R2", 10, pad + h / 2);
  for (let i = 0; i <= 4; i++) {
    g.fillText((mx * i / 4).toFixed(1), X(mx * i / 4) - 8, pad + h + 14);
    g.fillText((my * i / 4).toFixed(1), pad - 30, Y(my * i / 4) + 4);
  }
  regions.forEach((r, i) => {
    if (!r.frontier.length) return;
    g.strokeStyle = COLORS[r.strategy];
    g.lineWidth = 2;
    g.beginPath();
    // staircase closed to the axes
    const f = r.frontier;
    g.moveTo(X(0), Y(f[0][1]));
    f.forEach(([a, b], k) => {
      if (k > 0) g.lineTo(X(f[k - 1][0]), Y(b));
      g.lineTo(X(a), Y(b));
    });
    g.lineTo(X(f[f.length - 1][0]), Y(0));
    g.stroke();
    g.fillStyle = COLORS[r.strategy];
    g.fillText(r.strategy, pad + w - 60, pad + 16 + 16 * i);
  });
  for (const m of marks) {
    g.fillStyle = COLORS[m.strategy];
    g.beginPath();
    g.arc(X(m.r1), Y(m.r2), 4, 0, 2 * Math.PI);
    g.fill();
  }
}

let lastRegions = [];

async function busy(msg, work) {
  $("status").textContent = msg;
  await new Promise((r) => setTimeout(r, 20));
  const t = performance.now();
  try {
    work();
    $("status").textContent = `done in ${((performance.now() - t) / 1000).toFixed(1)} s`;
  } catch (e) {
    $("status").innerHTML = `<span class="err">${e.message}</span>`;
  }
}

function showRegion() {
  busy("computing rate regions…", () => {
    lastRegions = call(rate_region, setting({ points: +$("points").value }));
    drawRegions(lastRegions);
    const rows = lastRegions
      .map((r) => `<tr><td>${r.strategy}</td><td>${r.points.length}</td><td>${r.points.filter((p) => p.converged).length}</td><td>${r.frontier.length}</td></tr>`)
      .join("");
    $("table").innerHTML = `<table><tr><th>strategy</th><th>points</th><th>converged</th><th>frontier</th></tr>${rows}</table>`;
  });
}

function showPoint() {
  busy("solving…", () => {
    const res = call(solve_point, setting({ weights: [1, +$("u2").value] }));
    const ok = res.filter((r) => !r.error);
    drawRegions(lastRegions, ok.map((r) => ({ strategy: r.strategy, r1: r.rates[0], r2: r.rates[1] })));
    const f = (x) => x.toFixed(3);
    const rows = res
      .map((r) =>
        r.error
          ? `<tr><td>${r.strategy}</td><td colspan="7" class="err">${r.error}</td></tr>`
          : `<tr><td>${r.strategy}${r.order ? " (" + r.order + ")" : ""}</td><td>${f(r.wsr)}</td><td>${f(r.rates[0])}</td><td>${f(r.rates[1])}</td>` +
            `<td>${f(r.common_rate)}</td><td>${r.common_shares.map(f).join(" / ")}</td><td>${r.column_power.map((p) => p.toFixed(1)).join(" / ")}</td><td>${r.iterations}${r.converged ? "" : "*"}</td></tr>`
      )
      .join("");
    $("table").innerHTML =
      `<table><tr><th>strategy</th><th>WSR</th><th>R1</th><th>R2</th><th>common rate</th><th>common shares</th><th>power p0 / p1 / p2</th><th>iterations</th></tr>${rows}</table>`;
  });
}

await init();
for (const id of ["gamma", "theta", "r0"]) $(id).addEventListener("input", refreshInfo);
$("region").addEventListener("click", showRegion);
$("point").addEventListener("click", showPoint);
refreshInfo();
