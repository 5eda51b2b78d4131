/** Browser wiring: batch review, span editing, adjudication, metrics.
 *
 * One annotator session per tab; edits are optimistic and the server is
 * authoritative on submit.  Everything below is DOM glue over the pure
 * modules (editor, lint, render, diff).
 */

import { AnnotationApi, ApiError } from "./api.js";
import { EditorState } from "./editor.js";
import { autoProposal, threeWayDiff } from "./diff.js";
import { segmentText } from "./render.js";
import { IN_SCOPE_TYPES, TYPE_COLORS } from "./schema.js";
import type { BatchSentence, EntityTypeName, Span } from "./types.js";

const api = new AnnotationApi("");

interface AppState {
  annotatorId: string;
  role: "annotator" | "adjudicator";
  editor: EditorState | null;
  batch: BatchSentence[];
  currentIndex: number;
  batchCloseable: boolean;
}

const state: AppState = {
  annotatorId: "",
  role: "annotator",
  editor: null,
  batch: [],
  currentIndex: 0,
  batchCloseable: false,
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    if (k === "class") {
      node.className = v;
    } else if (k.startsWith("on")) {
      // handlers are attached separately; attrs stay declarative
    } else {
      node.setAttribute(k, v);
    }
  }
  node.append(...children);
  return node;
}

function status(message: string, isError = false) {
  const bar = document.getElementById("status")!;
  bar.textContent = message;
  bar.className = isError ? "status error" : "status";
}

function renderLegend(): HTMLElement {
  const legend = el("div", { class: "legend" });
  for (const etype of IN_SCOPE_TYPES) {
    const chip = el("span", { class: "chip" }, etype);
    chip.style.background = TYPE_COLORS[etype];
    legend.append(chip);
  }
  return legend;
}

function renderSentence(sentence: BatchSentence, spans: Span[]): HTMLElement {
  const container = el("div", { class: "sentence-view" });
  for (const segment of segmentText(sentence.text, spans)) {
    const node = el("span", {}, segment.text);
    if (segment.layers.length > 0) {
      const innermost = segment.layers[segment.layers.length - 1]!;
      node.style.background = TYPE_COLORS[innermost.span.type];
      node.style.boxShadow = segment.layers
        .slice(0, -1)
        .map((layer, i) => `0 ${2 * (i + 1)}px 0 0 ${TYPE_COLORS[layer.span.type]}`)
        .join(", ");
      node.title = segment.layers.map((l) => l.span.type).join(" > ");
    }
    node.dataset.start = String(segment.start);
    container.append(node);
  }
  return container;
}

function selectionOffsets(container: HTMLElement): { start: number; end: number } | null {
  const selection = window.getSelection();
  if (!selection || selection.isCollapsed || selection.rangeCount === 0) {
    return null;
  }
  const range = selection.getRangeAt(0);
  if (!container.contains(range.startContainer) || !container.contains(range.endContainer)) {
    return null;
  }
  const offsetOf = (node: Node, offset: number): number => {
    const span = node instanceof Text ? node.parentElement : (node as HTMLElement);
    const base = Number(span?.dataset?.start ?? 0);
    return base + offset;
  };
  const start = offsetOf(range.startContainer, range.startOffset);
  const end = offsetOf(range.endContainer, range.endOffset);
  return start < end ? { start, end } : null;
}

function redrawEditor() {
  const root = document.getElementById("editor")!;
  root.replaceChildren();
  const editor = state.editor;
  const sentence = state.batch[state.currentIndex];
  if (!editor || !sentence) {
    root.append(el("p", {}, "No open batch. Run an iteration or wait for a selection."));
    return;
  }
  const spans = editor.spans(sentence.sentence_id);

  root.append(
    el(
      "div",
      { class: "toolbar" },
      `sentence ${state.currentIndex + 1} / ${state.batch.length}`,
      ` · split: ${sentence.split_hint}`,
      ` · ${editor.isDirty(sentence.sentence_id) ? "edited" : "unchanged"}`,
    ),
  );

  const view = renderSentence(sentence, spans);
  root.append(view, renderLegend());

  const createRow = el("div", { class: "controls" });
  for (const etype of IN_SCOPE_TYPES) {
    const button = el("button", {}, `+ ${etype}`);
    button.onclick = () => {
      const offsets = selectionOffsets(view);
      if (!offsets) {
        status("select a stretch of sentence text first", true);
        return;
      }
      try {
        const { snapped } = editor.edit(sentence.sentence_id, {
          kind: "create",
          start: offsets.start,
          end: offsets.end,
          type: etype,
        });
        status(snapped ? "span created (snapped to token boundaries)" : "span created");
      } catch (err) {
        status(String(err), true);
      }
      redrawEditor();
    };
    createRow.append(button);
  }
  const undoButton = el("button", {}, "undo");
  undoButton.onclick = () => {
    editor.undo(sentence.sentence_id);
    redrawEditor();
  };
  createRow.append(undoButton);
  root.append(createRow);

  const list = el("ul", { class: "span-list" });
  spans.forEach((span, index) => {
    const item = el(
      "li",
      {},
      el("code", {}, `[${span.start},${span.end})`),
      ` "${sentence.text.slice(span.start, span.end)}" `,
    );
    const typeSelect = el("select", {});
    for (const etype of IN_SCOPE_TYPES) {
      const option = el("option", { value: etype }, etype);
      if (etype === span.type) {
        option.setAttribute("selected", "selected");
      }
      typeSelect.append(option);
    }
    typeSelect.onchange = () => {
      editor.edit(sentence.sentence_id, {
        kind: "retype",
        index,
        type: typeSelect.value as EntityTypeName,
      });
      redrawEditor();
    };
    const grow = el("button", {}, "⇥ widen");
    grow.onclick = () => {
      editor.edit(sentence.sentence_id, {
        kind: "resize",
        index,
        start: Math.max(0, span.start - 1),
        end: Math.min(sentence.text.length, span.end + 1),
      });
      redrawEditor();
    };
    const remove = el("button", {}, "✕ delete");
    remove.onclick = () => {
      editor.edit(sentence.sentence_id, { kind: "delete", index });
      redrawEditor();
    };
    item.append(typeSelect, grow, remove);
    list.append(item);
  });
  root.append(list);

  const lints = editor.lint(sentence.sentence_id);
  if (lints.length) {
    const box = el("div", { class: "lints" });
    for (const finding of lints) {
      box.append(
        el("div", { class: `lint ${finding.severity}` }, `${finding.code}: ${finding.message}`),
      );
    }
    root.append(box);
  }

  const nav = el("div", { class: "controls" });
  const prev = el("button", {}, "◀ prev");
  prev.onclick = () => {
    state.currentIndex = Math.max(0, state.currentIndex - 1);
    redrawEditor();
  };
  const next = el("button", {}, "next ▶");
  next.onclick = () => {
    state.currentIndex = Math.min(state.batch.length - 1, state.currentIndex + 1);
    redrawEditor();
  };
  nav.append(prev, next);
  root.append(nav);
}

async function loadBatch() {
  try {
    const payload = await api.nextBatch(state.annotatorId);
    state.batch = payload.sentences;
    state.currentIndex = 0;
    state.editor = new EditorState(payload.sentences, "blind");
    status(`iteration ${payload.iteration}: batch of ${payload.sentences.length} loaded`);
  } catch (err) {
    state.batch = [];
    state.editor = null;
    status(err instanceof ApiError ? err.message : String(err), true);
  }
  redrawEditor();
}

async function submitPhase(phase: "blind" | "gold") {
  const editor = state.editor;
  if (!editor) {
    status("nothing to submit", true);
    return;
  }
  const blocked = editor.blocked();
  if (blocked.length) {
    status(
      `blocked by local lint: ${blocked.map((b) => b.sentenceId).join(", ")}`,
      true,
    );
    return;
  }
  const records = editor.serialize();
  try {
    const response =
      phase === "blind"
        ? await api.submitBlind(state.annotatorId, records)
        : await api.submitGold(state.annotatorId, records);
    state.batchCloseable = Boolean(response.batch_closeable);
    const rejects = response.rejected.length
      ? `; rejected: ${response.rejected.map((r) => `${r.sentence_id} (${r.reason})`).join("; ")}`
      : "";
    status(`${phase}: accepted ${response.accepted}${rejects}`, response.rejected.length > 0);
    document.getElementById("run-iteration")!.toggleAttribute("disabled", !state.batchCloseable);
  } catch (err) {
    status(err instanceof ApiError ? err.message : String(err), true);
  }
}

async function showAdjudication() {
  const root = document.getElementById("adjudication")!;
  root.replaceChildren();
  try {
    const payload = await api.adjudicationNext(state.annotatorId);
    for (const item of payload.sentences) {
      const names = Object.keys(item.blind);
      const a = item.blind[names[0] ?? ""] ?? [];
      const b = item.blind[names[1] ?? ""] ?? [];
      const proposal = item.proposal ?? autoProposal(a, b) ?? [];
      const card = el("div", { class: "adj-card" }, el("strong", {}, item.text));
      const table = el("table", {});
      table.append(
        el(
          "tr",
          {},
          el("th", {}, "span"),
          el("th", {}, names[0] ?? "A"),
          el("th", {}, names[1] ?? "B"),
          el("th", {}, "resolution"),
        ),
      );
      for (const row of threeWayDiff(a, b, proposal)) {
        table.append(
          el(
            "tr",
            { class: row.agreed ? "agreed" : "disputed" },
            el("td", {}, `${row.span.type} [${row.span.start},${row.span.end})`),
            el("td", {}, row.inA ? "✓" : "—"),
            el("td", {}, row.inB ? "✓" : "—"),
            el("td", {}, row.inResolution ? "✓" : "—"),
          ),
        );
      }
      card.append(table);
      root.append(card);
    }
    status(`adjudication: ${payload.sentences.length} sentences with two blind passes`);
  } catch (err) {
    status(err instanceof ApiError ? err.message : String(err), true);
  }
}

async function refreshMetrics() {
  const root = document.getElementById("metrics")!;
  root.replaceChildren();
  try {
    const payload = await api.metrics();
    const counts = el("div", {}, "entity counts: ", JSON.stringify(payload.entity_counts));
    const table = el("table", {});
    const types = ["Mobility", "Action", "Assistance", "Quantification"];
    table.append(
      el("tr", {}, el("th", {}, "iteration"), ...types.map((t) => el("th", {}, t))),
    );
    for (const record of payload.iterations) {
      table.append(
        el(
          "tr",
          {},
          el("td", {}, String(record.iteration)),
          ...types.map((t) =>
            el("td", {}, record.validation_f1[t] === undefined ? "—" : record.validation_f1[t]!.toFixed(3)),
          ),
        ),
      );
    }
    root.append(counts, el("h3", {}, "validation F1 by iteration"), table);
  } catch (err) {
    status(String(err), true);
  }
}

function wireUp() {
  const annotatorInput = document.getElementById("annotator-id") as HTMLInputElement;
  annotatorInput.onchange = () => {
    state.annotatorId = annotatorInput.value.trim();
  };
  (document.getElementById("load-batch") as HTMLButtonElement).onclick = () => {
    state.annotatorId = annotatorInput.value.trim();
    void loadBatch();
  };
  (document.getElementById("submit-blind") as HTMLButtonElement).onclick = () =>
    void submitPhase("blind");
  (document.getElementById("submit-gold") as HTMLButtonElement).onclick = () =>
    void submitPhase("gold");
  (document.getElementById("show-adjudication") as HTMLButtonElement).onclick = () =>
    void showAdjudication();
  (document.getElementById("refresh-metrics") as HTMLButtonElement).onclick = () =>
    void refreshMetrics();
  (document.getElementById("run-iteration") as HTMLButtonElement).onclick = async () => {
    status("training and selecting…");
    try {
      const record = await api.runIteration();
      status(
        `iteration ${record.iteration} done (${record.status}); labeled=${record.labeled_count}`,
      );
      await refreshMetrics();
      await loadBatch();
    } catch (err) {
      status(err instanceof ApiError ? err.message : String(err), true);
    }
  };
}

if (typeof document !== "undefined") {
  wireUp();
  void refreshMetrics();
}
