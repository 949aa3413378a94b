import init, { fuse, kmeans_pool, mine_and_score } from "./pkg/rerank_kg_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const fmt = (x) => x.toFixed(3);

function table(headers, rows, rowClass = () => "") {
  const head = "<tr>" + headers.map((h) => `<th>${h}</th>`).join("") + "</tr>";
  const body = rows
    .map((r, i) => `<tr class="${rowClass(i)}">` + r.map((c) => `<td>${c}</td>`).join("") + "</tr>")
    .join("");
  return `<table>${head}${body}</table>`;
}

// Every binding returns {"ok": ...} or {"error": {code, message}}.
function show(target, json, render) {
  const reply = JSON.parse(json);
  $(target).innerHTML = reply.error
    ? `<p class="error">${reply.error.code}: ${reply.error.message}</p>`
    : render(reply.ok);
}

function cutoffJson() {
  const kind = $("cutoff").value;
  const p = num("param");
  switch (kind) {
    case "top_k": return { kind, k: Math.max(1, Math.round(p)) };
    case "fixed_threshold": return { kind, theta: p };
    case "k_means": return { kind, k: Math.max(1, Math.round(p)), m: 1 };
    default: return { kind };
  }
}

function runFuse() {
  const answer = $("answer").value.trim();
  const json = fuse($("retriever").value, $("reranker").value, answer,
    JSON.stringify(cutoffJson()), $("combine").value, num("weight"));
  show("fuse-out", json, (r) => {
    let out = `<p>Pool: ${r.pool.join(", ") || "(empty)"}</p>`;
    out += table(["entity", "rank", "tier", "final", "retriever", "re-ranker"],
      r.rows.map((x) => [x.entity, x.rank, x.tier, fmt(x.score), fmt(x.retriever), fmt(x.reranker)]),
      (i) => (r.rows[i].tier ? "tier1 " : "") + (r.rows[i].entity === answer ? "answer" : ""));
    if (r.answer) {
      const a = r.answer;
      out += `<p>Answer rank: retriever ${a.retriever}, re-ranker ${a.reranker}, cascade ${a.cascade}.
        Re-ranked cut ${a.bounds.reranked_cut} ≤ re-ranker cut ${a.bounds.reranker_cut}.</p>`;
    }
    return out;
  });
}

function runKMeans() {
  show("km-out", kmeans_pool($("km-scores").value, num("km-k"), num("km-m")), (r) =>
    table(["centroid", "members", "kept"],
      r.clusters.map((c) => [fmt(c.centroid), c.members.join(", "), c.kept ? "yes" : ""])) +
    `<p>Pool (${r.pool.length}): ${r.pool.join(", ")} after ${r.iterations} iterations.</p>`);
}

function runMine() {
  const json = mine_and_score($("triples").value, $("head").value.trim(), $("relation").value.trim(),
    num("hops"), num("support"));
  show("mine-out", json, (r) =>
    table(["rule body", "confidence", "support"],
      r.rules.map((x) => [x.body.join(" ∘ "), fmt(x.confidence), x.support])) +
    table(["candidate tail", "score"], r.candidates.map(([e, s]) => [e, fmt(s)])));
}

await init();
for (const [section, run] of [["fuse", runFuse], ["kmeans", runKMeans], ["mine", runMine]]) {
  $(section).addEventListener("input", run);
  run();
}
